//! Model container for mixed-integer linear programs.
//!
//! A [`MilpModel`] is a maximization problem over columns with finite or
//! infinite bounds, sparse rows with a sense (`<=`, `=`, `>=`) and a finite
//! right-hand side, and an optional binary marker per column. The container
//! is solver-agnostic: the simplex and branch-and-bound routines in this
//! crate consume it, and the MPS module serializes it.

use thiserror::Error;

/// Sense of a constraint row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    /// Row activity must be less than or equal to the right-hand side.
    Le,
    /// Row activity must equal the right-hand side.
    Eq,
    /// Row activity must be greater than or equal to the right-hand side.
    Ge,
}

#[derive(Debug, Clone)]
pub(crate) struct Column {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub objective: f64,
    pub binary: bool,
}

#[derive(Debug, Clone)]
pub(crate) struct Row {
    pub name: String,
    pub sense: RowSense,
    pub rhs: f64,
    /// Sorted by column id, no duplicates.
    pub coeffs: Vec<(usize, f64)>,
}

/// Structural defect found by [`MilpModel::validate`].
#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("column {col} ({name}): lower bound {lower} exceeds upper bound {upper}")]
    BoundOrder {
        col: usize,
        name: String,
        lower: f64,
        upper: f64,
    },
    #[error("column {col} ({name}): binary bounds [{lower}, {upper}] not within [0, 1]")]
    BinaryBounds {
        col: usize,
        name: String,
        lower: f64,
        upper: f64,
    },
    #[error("column {col} ({name}): bound is NaN")]
    NanBound { col: usize, name: String },
    #[error("column {col} ({name}): objective coefficient is not finite")]
    BadObjective { col: usize, name: String },
    #[error("row {row} ({name}): right-hand side {rhs} is not finite")]
    BadRhs { row: usize, name: String, rhs: f64 },
    #[error("row {row} ({name}): coefficient for column {col} is not finite")]
    BadCoeff { row: usize, name: String, col: usize },
    #[error("row {row} ({name}): duplicate entry for column {col}")]
    DuplicateEntry { row: usize, name: String, col: usize },
    #[error("row {row} ({name}): references unknown column {col}")]
    UnknownColumn { row: usize, name: String, col: usize },
}

/// A sparse mixed-integer linear program with maximization objective.
#[derive(Debug, Clone, Default)]
pub struct MilpModel {
    pub name: String,
    pub(crate) cols: Vec<Column>,
    pub(crate) rows: Vec<Row>,
}

impl MilpModel {
    pub fn new(name: impl Into<String>) -> Self {
        MilpModel {
            name: name.into(),
            cols: Vec::new(),
            rows: Vec::new(),
        }
    }

    /// Adds a continuous column and returns its id.
    pub fn add_col(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        objective: f64,
    ) -> usize {
        self.cols.push(Column {
            name: name.into(),
            lower,
            upper,
            objective,
            binary: false,
        });
        self.cols.len() - 1
    }

    /// Adds a binary column with bounds `[0, 1]` and returns its id.
    pub fn add_binary_col(&mut self, name: impl Into<String>, objective: f64) -> usize {
        self.cols.push(Column {
            name: name.into(),
            lower: 0.0,
            upper: 1.0,
            objective,
            binary: true,
        });
        self.cols.len() - 1
    }

    /// Adds a row. Coefficients are stored sorted by column id; duplicate
    /// column entries are kept and reported by [`validate`](Self::validate).
    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        sense: RowSense,
        rhs: f64,
        coeffs: &[(usize, f64)],
    ) -> usize {
        let mut coeffs = coeffs.to_vec();
        coeffs.sort_by_key(|&(col, _)| col);
        self.rows.push(Row {
            name: name.into(),
            sense,
            rhs,
            coeffs,
        });
        self.rows.len() - 1
    }

    pub fn num_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Number of structural nonzeros across all rows.
    pub fn num_nonzeros(&self) -> usize {
        self.rows.iter().map(|r| r.coeffs.len()).sum()
    }

    pub fn num_binary_cols(&self) -> usize {
        self.cols.iter().filter(|c| c.binary).count()
    }

    pub fn col_name(&self, col: usize) -> &str {
        &self.cols[col].name
    }

    pub fn row_name(&self, row: usize) -> &str {
        &self.rows[row].name
    }

    pub fn bounds(&self, col: usize) -> (f64, f64) {
        (self.cols[col].lower, self.cols[col].upper)
    }

    /// Replaces the bounds of a column, e.g. to fix a binary during search.
    pub fn set_bounds(&mut self, col: usize, lower: f64, upper: f64) {
        self.cols[col].lower = lower;
        self.cols[col].upper = upper;
    }

    /// Replaces the objective coefficient of a column.
    pub fn set_objective(&mut self, col: usize, objective: f64) {
        self.cols[col].objective = objective;
    }

    /// Renames a column.
    pub fn set_col_name(&mut self, col: usize, name: impl Into<String>) {
        self.cols[col].name = name.into();
    }

    /// Renames a row.
    pub fn set_row_name(&mut self, row: usize, name: impl Into<String>) {
        self.rows[row].name = name.into();
    }

    pub fn objective_coeff(&self, col: usize) -> f64 {
        self.cols[col].objective
    }

    pub fn is_binary(&self, col: usize) -> bool {
        self.cols[col].binary
    }

    /// Ids of all binary columns in increasing order.
    pub fn binary_cols(&self) -> Vec<usize> {
        (0..self.cols.len()).filter(|&c| self.cols[c].binary).collect()
    }

    pub fn row_sense(&self, row: usize) -> RowSense {
        self.rows[row].sense
    }

    pub fn row_rhs(&self, row: usize) -> f64 {
        self.rows[row].rhs
    }

    pub fn row_coeffs(&self, row: usize) -> &[(usize, f64)] {
        &self.rows[row].coeffs
    }

    /// Objective value of a given point (no feasibility check).
    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.cols
            .iter()
            .zip(x)
            .map(|(c, &v)| c.objective * v)
            .sum()
    }

    /// Largest violation of row constraints and column bounds at `x`.
    pub fn max_infeasibility(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for c in 0..self.cols.len() {
            worst = worst.max(self.cols[c].lower - x[c]);
            worst = worst.max(x[c] - self.cols[c].upper);
        }
        for row in &self.rows {
            let act: f64 = row.coeffs.iter().map(|&(c, a)| a * x[c]).sum();
            match row.sense {
                RowSense::Le => worst = worst.max(act - row.rhs),
                RowSense::Ge => worst = worst.max(row.rhs - act),
                RowSense::Eq => worst = worst.max((act - row.rhs).abs()),
            }
        }
        worst
    }

    /// Checks the structural invariants: bound ordering, binary bounds within
    /// `[0, 1]`, finite right-hand sides and coefficients, no duplicate
    /// `(row, column)` entries, and no dangling column references.
    pub fn validate(&self) -> Result<(), ModelError> {
        for (i, c) in self.cols.iter().enumerate() {
            if c.lower.is_nan() || c.upper.is_nan() {
                return Err(ModelError::NanBound {
                    col: i,
                    name: c.name.clone(),
                });
            }
            if c.lower > c.upper {
                return Err(ModelError::BoundOrder {
                    col: i,
                    name: c.name.clone(),
                    lower: c.lower,
                    upper: c.upper,
                });
            }
            if c.binary && (c.lower < 0.0 || c.upper > 1.0) {
                return Err(ModelError::BinaryBounds {
                    col: i,
                    name: c.name.clone(),
                    lower: c.lower,
                    upper: c.upper,
                });
            }
            if !c.objective.is_finite() {
                return Err(ModelError::BadObjective {
                    col: i,
                    name: c.name.clone(),
                });
            }
        }
        for (r, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(ModelError::BadRhs {
                    row: r,
                    name: row.name.clone(),
                    rhs: row.rhs,
                });
            }
            for w in row.coeffs.windows(2) {
                if w[0].0 == w[1].0 {
                    return Err(ModelError::DuplicateEntry {
                        row: r,
                        name: row.name.clone(),
                        col: w[0].0,
                    });
                }
            }
            for &(col, a) in &row.coeffs {
                if col >= self.cols.len() {
                    return Err(ModelError::UnknownColumn {
                        row: r,
                        name: row.name.clone(),
                        col,
                    });
                }
                if !a.is_finite() {
                    return Err(ModelError::BadCoeff {
                        row: r,
                        name: row.name.clone(),
                        col,
                    });
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builds_and_validates_a_small_model() {
        let mut m = MilpModel::new("toy");
        let x = m.add_col("x", 0.0, 3.0, 1.0);
        let y = m.add_binary_col("y", 2.0);
        m.add_row("r1", RowSense::Le, 4.0, &[(x, 1.0), (y, 1.0)]);
        assert_eq!(m.num_cols(), 2);
        assert_eq!(m.num_rows(), 1);
        assert_eq!(m.num_binary_cols(), 1);
        assert_eq!(m.binary_cols(), vec![y]);
        assert!(m.validate().is_ok());
    }

    #[test]
    fn rejects_inverted_bounds() {
        let mut m = MilpModel::new("bad");
        m.add_col("x", 2.0, 1.0, 0.0);
        assert!(matches!(m.validate(), Err(ModelError::BoundOrder { .. })));
    }

    #[test]
    fn rejects_binary_bounds_outside_unit_interval() {
        let mut m = MilpModel::new("bad");
        let b = m.add_binary_col("b", 0.0);
        m.set_bounds(b, 0.0, 2.0);
        assert!(matches!(m.validate(), Err(ModelError::BinaryBounds { .. })));
    }

    #[test]
    fn rejects_duplicate_row_entries() {
        let mut m = MilpModel::new("bad");
        let x = m.add_col("x", 0.0, 1.0, 0.0);
        m.add_row("r", RowSense::Eq, 1.0, &[(x, 1.0), (x, 2.0)]);
        assert!(matches!(
            m.validate(),
            Err(ModelError::DuplicateEntry { .. })
        ));
    }

    #[test]
    fn rejects_non_finite_rhs() {
        let mut m = MilpModel::new("bad");
        let x = m.add_col("x", 0.0, 1.0, 0.0);
        m.add_row("r", RowSense::Le, f64::INFINITY, &[(x, 1.0)]);
        assert!(matches!(m.validate(), Err(ModelError::BadRhs { .. })));
    }

    #[test]
    fn infinite_column_bounds_are_allowed() {
        let mut m = MilpModel::new("ok");
        m.add_col("x", f64::NEG_INFINITY, f64::INFINITY, 1.0);
        assert!(m.validate().is_ok());
    }

    #[test]
    fn max_infeasibility_reports_worst_violation() {
        let mut m = MilpModel::new("toy");
        let x = m.add_col("x", 0.0, 3.0, 1.0);
        m.add_row("r", RowSense::Le, 1.0, &[(x, 1.0)]);
        assert_eq!(m.max_infeasibility(&[0.5]), 0.0);
        assert_eq!(m.max_infeasibility(&[2.5]), 1.5);
        assert_eq!(m.max_infeasibility(&[-1.0]), 1.0);
    }
}
