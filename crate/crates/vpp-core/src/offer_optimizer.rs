//! Assembly of the three-stage offering problem as a MILP.
//!
//! Stage 1 picks day-ahead offers `qDA[i][k]`. Stage 2, after the day-ahead
//! price scenario `i` is known, picks per interval between active balancing
//! participation (regulation offers `qUP`/`qDW`, scenario `j`) and passive
//! imbalance settlement (deviations `q+`/`q-`, scenario `w`), driven by the
//! binary `eps[i][k]`. Stage 3 operates the portfolio (thermal output,
//! storage, commitment) on every scenario path `(i, j, w)`.
//!
//! [`build_model`] produces the MILP plus a [`ModelMap`] that ties solver
//! columns back to named decisions; [`extract_solution`] inverts the map and
//! audits the result before anything downstream consumes it.

use crate::market_model::{
    big_m, validate_config, ScenarioTree, StrategyMode, Violation, VppConfig,
};
use std::collections::HashMap;
use thiserror::Error;
use vpp_milp::{
    solve_milp, BnbStats, LpSolution, MilpModel, MilpStatus, RowSense, SolveLimits, Tolerances,
};

/// Prices closer than this are treated as tied.
pub const PRICE_TIE_TOL: f64 = 1e-9;
/// A solution whose stage decomposition misses the objective by more than
/// this is rejected.
pub const DECOMPOSITION_TOL: f64 = 1e-6;
/// Binary values further than this from 0 or 1 are rejected.
pub const INTEGRALITY_TOL: f64 = 1e-6;

/// One decision variable of the offering problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VariableIndex {
    /// Day-ahead offer in scenario `i`, interval `k` (MWh, negative = buy).
    DayAhead { i: usize, k: usize },
    /// 1 when interval `k` of day-ahead scenario `i` participates actively.
    Active { i: usize, k: usize },
    /// Up-regulation offer (MWh).
    RegUp { i: usize, j: usize, k: usize },
    /// Down-regulation offer (MWh).
    RegDown { i: usize, j: usize, k: usize },
    /// Positive (surplus) imbalance (MWh).
    DevPlus { i: usize, w: usize, k: usize },
    /// Negative (shortage) imbalance (MWh).
    DevMinus { i: usize, w: usize, k: usize },
    /// Thermal output (MW).
    Thermal { i: usize, j: usize, w: usize, k: usize },
    /// Storage charging power (MW).
    Charge { i: usize, j: usize, w: usize, k: usize },
    /// Storage discharging power (MW).
    Discharge { i: usize, j: usize, w: usize, k: usize },
    /// Storage level at the end of interval `k` (MWh).
    Level { i: usize, j: usize, w: usize, k: usize },
    /// Thermal commitment state.
    Commit { i: usize, j: usize, w: usize, k: usize },
}

/// Bijection between solver columns and [`VariableIndex`] values.
#[derive(Debug, Clone)]
pub struct ModelMap {
    n_da: usize,
    n_ba: usize,
    n_energy: usize,
    horizon: usize,
    has_commit: bool,
    cols: Vec<VariableIndex>,
    lookup: HashMap<VariableIndex, usize>,
}

impl ModelMap {
    pub fn col(&self, v: VariableIndex) -> Option<usize> {
        self.lookup.get(&v).copied()
    }

    pub fn index(&self, col: usize) -> VariableIndex {
        self.cols[col]
    }

    pub fn num_cols(&self) -> usize {
        self.cols.len()
    }

    /// Whether the model carries explicit commitment binaries.
    pub fn has_commit(&self) -> bool {
        self.has_commit
    }
}

/// A built offering MILP together with its variable map.
#[derive(Debug, Clone)]
pub struct OfferModel {
    pub milp: MilpModel,
    pub map: ModelMap,
}

/// Which way the balancing market deviates from the day-ahead price.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegulationDirection {
    /// Balancing price above day-ahead: only up-regulation is called.
    Up,
    /// Balancing price below day-ahead: only down-regulation is called.
    Down,
    /// Prices tie: no regulation is called.
    None,
}

/// Classifies an interval of a balancing scenario by comparing its price
/// with the day-ahead price, treating differences within `tol` as a tie.
pub fn regulation_direction(da_price: f64, ba_price: f64, tol: f64) -> RegulationDirection {
    if ba_price > da_price + tol {
        RegulationDirection::Up
    } else if ba_price < da_price - tol {
        RegulationDirection::Down
    } else {
        RegulationDirection::None
    }
}

#[derive(Debug, Error)]
pub enum OfferError {
    #[error("invalid input:{}", .0.iter().map(|v| format!("\n  {v}")).collect::<String>())]
    Invalid(Vec<Violation>),
    #[error("solution vector has {got} entries, model has {expected} columns")]
    SolutionShape { got: usize, expected: usize },
    #[error("binary variable {name} is fractional ({value}) in the reported solution")]
    Fractional { name: String, value: f64 },
    #[error(
        "stage decomposition ({recomputed}) disagrees with the objective ({stated}) by more than {DECOMPOSITION_TOL}"
    )]
    Decomposition { stated: f64, recomputed: f64 },
    #[error("solver reported a numerical failure")]
    Numerical,
}

struct Builder<'a> {
    cfg: &'a VppConfig,
    tree: &'a ScenarioTree,
    mode: StrategyMode,
    with_commit: bool,
    model: MilpModel,
    cols: Vec<VariableIndex>,
    lookup: HashMap<VariableIndex, usize>,
}

impl<'a> Builder<'a> {
    fn col(&mut self, v: VariableIndex, name: String, lower: f64, upper: f64, objective: f64) {
        let id = self.model.add_col(name, lower, upper, objective);
        self.cols.push(v);
        self.lookup.insert(v, id);
    }

    fn binary(&mut self, v: VariableIndex, name: String) {
        let id = self.model.add_binary_col(name, 0.0);
        self.cols.push(v);
        self.lookup.insert(v, id);
    }

    fn id(&self, v: VariableIndex) -> usize {
        self.lookup[&v]
    }

    fn row(&mut self, name: String, sense: RowSense, rhs: f64, coeffs: &[(usize, f64)]) {
        self.model.add_row(name, sense, rhs, coeffs);
    }

    fn build(mut self) -> OfferModel {
        let (i_n, j_n, w_n, horizon) = (
            self.tree.n_da(),
            self.tree.n_ba(),
            self.tree.n_energy(),
            self.cfg.horizon,
        );
        let t = self.tree;
        let cap = big_m(self.cfg);
        let thermal = self.cfg.thermal.clone();
        let storage = self.cfg.storage.clone();
        let ops = |i: usize, j: usize, w: usize| (i * j_n + j) * w_n + w;

        // Columns, grouped per variable family in a fixed order.
        for i in 0..i_n {
            for k in 0..horizon {
                let obj = t.da_prob[i] * t.da_prices[i][k];
                self.col(
                    VariableIndex::DayAhead { i, k },
                    format!("QDA{i}K{k}"),
                    -storage.charge_max,
                    self.cfg.renewable.capacity + thermal.capacity + storage.discharge_max,
                    obj,
                );
            }
        }
        for i in 0..i_n {
            for k in 0..horizon {
                let v = VariableIndex::Active { i, k };
                self.binary(v, format!("EPS{i}K{k}"));
                let id = self.id(v);
                match self.mode {
                    StrategyMode::ActivePassive => {}
                    StrategyMode::ActiveOnly => self.model.set_bounds(id, 1.0, 1.0),
                    StrategyMode::PassiveOnly => self.model.set_bounds(id, 0.0, 0.0),
                }
            }
        }
        for i in 0..i_n {
            for j in 0..j_n {
                for k in 0..horizon {
                    let r = i * j_n + j;
                    let weight = t.da_prob[i] * t.ba_prob[i][j];
                    let dir =
                        regulation_direction(t.da_prices[i][k], t.ba_prices[i][j][k], PRICE_TIE_TOL);
                    let up_cap = if dir == RegulationDirection::Up { cap } else { 0.0 };
                    let dw_cap = if dir == RegulationDirection::Down { cap } else { 0.0 };
                    self.col(
                        VariableIndex::RegUp { i, j, k },
                        format!("QU{r}K{k}"),
                        0.0,
                        up_cap,
                        weight * t.ba_prices[i][j][k],
                    );
                    self.col(
                        VariableIndex::RegDown { i, j, k },
                        format!("QW{r}K{k}"),
                        0.0,
                        dw_cap,
                        -weight * t.ba_prices[i][j][k],
                    );
                }
            }
        }
        for i in 0..i_n {
            for w in 0..w_n {
                for k in 0..horizon {
                    let m = i * w_n + w;
                    // Deviations settle at the imbalance price, averaged over
                    // the balancing scenarios that determine it.
                    let mut plus = 0.0;
                    let mut minus = 0.0;
                    for j in 0..j_n {
                        let da = t.da_prices[i][k];
                        let ba = t.ba_prices[i][j][k];
                        plus += t.ba_prob[i][j] * da.min(ba);
                        minus += t.ba_prob[i][j] * da.max(ba);
                    }
                    let weight = t.da_prob[i] * t.energy_prob[w];
                    self.col(
                        VariableIndex::DevPlus { i, w, k },
                        format!("QP{m}K{k}"),
                        0.0,
                        cap,
                        weight * plus,
                    );
                    self.col(
                        VariableIndex::DevMinus { i, w, k },
                        format!("QM{m}K{k}"),
                        0.0,
                        cap,
                        -weight * minus,
                    );
                }
            }
        }
        for i in 0..i_n {
            for j in 0..j_n {
                for w in 0..w_n {
                    let n = ops(i, j, w);
                    let weight = t.da_prob[i] * t.ba_prob[i][j] * t.energy_prob[w];
                    for k in 0..horizon {
                        self.col(
                            VariableIndex::Thermal { i, j, w, k },
                            format!("D{n}K{k}"),
                            0.0,
                            thermal.capacity,
                            -weight * thermal.marginal_cost,
                        );
                    }
                    for k in 0..horizon {
                        self.col(
                            VariableIndex::Charge { i, j, w, k },
                            format!("PC{n}K{k}"),
                            0.0,
                            storage.charge_max,
                            0.0,
                        );
                    }
                    for k in 0..horizon {
                        self.col(
                            VariableIndex::Discharge { i, j, w, k },
                            format!("PD{n}K{k}"),
                            0.0,
                            storage.discharge_max,
                            0.0,
                        );
                    }
                    for k in 0..horizon {
                        let floor = if k + 1 == horizon {
                            storage
                                .terminal_level_min
                                .map_or(storage.level_min, |f| f.max(storage.level_min))
                        } else {
                            storage.level_min
                        };
                        self.col(
                            VariableIndex::Level { i, j, w, k },
                            format!("L{n}K{k}"),
                            floor,
                            storage.level_max,
                            0.0,
                        );
                    }
                    if self.with_commit {
                        for k in 0..horizon {
                            let v = VariableIndex::Commit { i, j, w, k };
                            self.binary(v, format!("U{n}K{k}"));
                            let id = self.id(v);
                            self.model.set_objective(id, -weight * thermal.fixed_cost);
                        }
                    }
                }
            }
        }

        // Energy balance on every scenario path and interval: offered plus
        // deviations equals renewable output plus net dispatch.
        for i in 0..i_n {
            for j in 0..j_n {
                for w in 0..w_n {
                    let n = ops(i, j, w);
                    for k in 0..horizon {
                        let coeffs = [
                            (self.id(VariableIndex::DayAhead { i, k }), 1.0),
                            (self.id(VariableIndex::RegUp { i, j, k }), 1.0),
                            (self.id(VariableIndex::RegDown { i, j, k }), -1.0),
                            (self.id(VariableIndex::DevPlus { i, w, k }), 1.0),
                            (self.id(VariableIndex::DevMinus { i, w, k }), -1.0),
                            (self.id(VariableIndex::Thermal { i, j, w, k }), -1.0),
                            (self.id(VariableIndex::Discharge { i, j, w, k }), -1.0),
                            (self.id(VariableIndex::Charge { i, j, w, k }), 1.0),
                        ];
                        self.row(format!("B{n}K{k}"), RowSense::Eq, t.energy[w][k], &coeffs);
                    }
                }
            }
        }

        // Day-ahead offer curve monotonicity: a scenario with a higher price
        // must offer at least as much; tied prices must offer the same.
        for k in 0..horizon {
            let mut order: Vec<usize> = (0..i_n).collect();
            order.sort_by(|&a, &b| t.da_prices[a][k].total_cmp(&t.da_prices[b][k]).then(a.cmp(&b)));
            for (p, pair) in order.windows(2).enumerate() {
                let (a, b) = (pair[0], pair[1]);
                let tied = (t.da_prices[b][k] - t.da_prices[a][k]).abs() <= PRICE_TIE_TOL;
                let sense = if tied { RowSense::Eq } else { RowSense::Ge };
                let coeffs = [
                    (self.id(VariableIndex::DayAhead { i: b, k }), 1.0),
                    (self.id(VariableIndex::DayAhead { i: a, k }), -1.0),
                ];
                self.row(format!("MDA{k}P{p}"), sense, 0.0, &coeffs);
            }
        }

        // Regulation offer monotonicity within each day-ahead scenario:
        // up-regulation non-decreasing and down-regulation non-increasing
        // in the balancing price.
        for i in 0..i_n {
            for k in 0..horizon {
                let m = i * horizon + k;
                let mut order: Vec<usize> = (0..j_n).collect();
                order.sort_by(|&a, &b| {
                    t.ba_prices[i][a][k]
                        .total_cmp(&t.ba_prices[i][b][k])
                        .then(a.cmp(&b))
                });
                for (p, pair) in order.windows(2).enumerate() {
                    let (a, b) = (pair[0], pair[1]);
                    let tied =
                        (t.ba_prices[i][b][k] - t.ba_prices[i][a][k]).abs() <= PRICE_TIE_TOL;
                    let sense = if tied { RowSense::Eq } else { RowSense::Ge };
                    self.row(
                        format!("MU{m}P{p}"),
                        sense,
                        0.0,
                        &[
                            (self.id(VariableIndex::RegUp { i, j: b, k }), 1.0),
                            (self.id(VariableIndex::RegUp { i, j: a, k }), -1.0),
                        ],
                    );
                    let sense = if tied { RowSense::Eq } else { RowSense::Le };
                    self.row(
                        format!("MW{m}P{p}"),
                        sense,
                        0.0,
                        &[
                            (self.id(VariableIndex::RegDown { i, j: b, k }), 1.0),
                            (self.id(VariableIndex::RegDown { i, j: a, k }), -1.0),
                        ],
                    );
                }
            }
        }

        // Participation coupling: active volume only when eps = 1, passive
        // volume only when eps = 0.
        for i in 0..i_n {
            for k in 0..horizon {
                let eps = self.id(VariableIndex::Active { i, k });
                for j in 0..j_n {
                    let r = i * j_n + j;
                    self.row(
                        format!("GA{r}K{k}"),
                        RowSense::Le,
                        0.0,
                        &[
                            (self.id(VariableIndex::RegUp { i, j, k }), 1.0),
                            (self.id(VariableIndex::RegDown { i, j, k }), 1.0),
                            (eps, -cap),
                        ],
                    );
                }
                for w in 0..w_n {
                    let m = i * w_n + w;
                    self.row(
                        format!("GP{m}K{k}"),
                        RowSense::Le,
                        cap,
                        &[
                            (self.id(VariableIndex::DevPlus { i, w, k }), 1.0),
                            (self.id(VariableIndex::DevMinus { i, w, k }), 1.0),
                            (eps, cap),
                        ],
                    );
                }
            }
        }

        // Storage level recursion, charging losses on the way in.
        for i in 0..i_n {
            for j in 0..j_n {
                for w in 0..w_n {
                    let n = ops(i, j, w);
                    for k in 0..horizon {
                        let mut coeffs = vec![
                            (self.id(VariableIndex::Level { i, j, w, k }), 1.0),
                            (self.id(VariableIndex::Charge { i, j, w, k }), -storage.efficiency),
                            (self.id(VariableIndex::Discharge { i, j, w, k }), 1.0),
                        ];
                        let rhs = if k == 0 {
                            storage.initial_level
                        } else {
                            coeffs.push((self.id(VariableIndex::Level { i, j, w, k: k - 1 }), -1.0));
                            0.0
                        };
                        self.row(format!("S{n}K{k}"), RowSense::Eq, rhs, &coeffs);
                    }
                }
            }
        }

        // Thermal ramping (skipped when a limit is infinite).
        for i in 0..i_n {
            for j in 0..j_n {
                for w in 0..w_n {
                    let n = ops(i, j, w);
                    for k in 0..horizon {
                        let here = self.id(VariableIndex::Thermal { i, j, w, k });
                        if thermal.ramp_up.is_finite() {
                            let (rhs, coeffs) = if k == 0 {
                                (thermal.initial_output + thermal.ramp_up, vec![(here, 1.0)])
                            } else {
                                let prev = self.id(VariableIndex::Thermal { i, j, w, k: k - 1 });
                                (thermal.ramp_up, vec![(here, 1.0), (prev, -1.0)])
                            };
                            self.row(format!("RU{n}K{k}"), RowSense::Le, rhs, &coeffs);
                        }
                        if thermal.ramp_down.is_finite() {
                            let (rhs, coeffs) = if k == 0 {
                                (thermal.initial_output - thermal.ramp_down, vec![(here, 1.0)])
                            } else {
                                let prev = self.id(VariableIndex::Thermal { i, j, w, k: k - 1 });
                                (-thermal.ramp_down, vec![(here, 1.0), (prev, -1.0)])
                            };
                            self.row(format!("RD{n}K{k}"), RowSense::Ge, rhs, &coeffs);
                        }
                    }
                }
            }
        }

        // Commitment window: output vanishes when off and respects the
        // minimum stable level when on.
        if self.with_commit {
            for i in 0..i_n {
                for j in 0..j_n {
                    for w in 0..w_n {
                        let n = ops(i, j, w);
                        for k in 0..horizon {
                            let d = self.id(VariableIndex::Thermal { i, j, w, k });
                            let u = self.id(VariableIndex::Commit { i, j, w, k });
                            self.row(
                                format!("CL{n}K{k}"),
                                RowSense::Ge,
                                0.0,
                                &[(d, 1.0), (u, -thermal.min_output)],
                            );
                            self.row(
                                format!("CU{n}K{k}"),
                                RowSense::Le,
                                0.0,
                                &[(d, 1.0), (u, -thermal.capacity)],
                            );
                        }
                    }
                }
            }
        }

        let mut milp = self.model;
        ensure_exportable_names(&mut milp);
        OfferModel {
            milp,
            map: ModelMap {
                n_da: i_n,
                n_ba: j_n,
                n_energy: w_n,
                horizon,
                has_commit: self.with_commit,
                cols: self.cols,
                lookup: self.lookup,
            },
        }
    }
}

/// Falls back to positional names when any generated name would not survive
/// the 8-character format of an exported model file.
fn ensure_exportable_names(model: &mut MilpModel) {
    let too_long = (0..model.num_cols()).any(|c| model.col_name(c).len() > 8)
        || (0..model.num_rows()).any(|r| model.row_name(r).len() > 8);
    if !too_long {
        return;
    }
    for c in 0..model.num_cols() {
        model.set_col_name(c, &format!("X{c}"));
    }
    for r in 0..model.num_rows() {
        model.set_row_name(r, &format!("R{r}"));
    }
}

fn build(
    cfg: &VppConfig,
    tree: &ScenarioTree,
    mode: StrategyMode,
    with_commit: bool,
) -> Result<OfferModel, OfferError> {
    let violations = validate_config(cfg, tree);
    if !violations.is_empty() {
        return Err(OfferError::Invalid(violations));
    }
    let builder = Builder {
        cfg,
        tree,
        mode,
        with_commit,
        model: MilpModel::new("vpp-offering"),
        cols: Vec::new(),
        lookup: HashMap::new(),
    };
    Ok(builder.build())
}

/// Builds the full offering MILP. Commitment binaries are included whenever
/// a thermal unit with capacity exists.
pub fn build_model(
    cfg: &VppConfig,
    tree: &ScenarioTree,
    mode: StrategyMode,
) -> Result<OfferModel, OfferError> {
    build(cfg, tree, mode, cfg.thermal.capacity > 0.0)
}

/// Drops the commitment binaries when doing so cannot change the optimum:
/// with no minimum stable level and no commitment cost, `u` only relaxes
/// into the interval `[0, 1]` without affecting feasibility or objective.
/// Returns the model unchanged otherwise.
pub fn eliminate_redundant_binaries(
    cfg: &VppConfig,
    tree: &ScenarioTree,
    mode: StrategyMode,
    model: &OfferModel,
) -> Result<OfferModel, OfferError> {
    if model.map.has_commit && cfg.thermal.min_output == 0.0 && cfg.thermal.fixed_cost == 0.0 {
        build(cfg, tree, mode, false)
    } else {
        Ok(model.clone())
    }
}

/// Profit contribution of one delivery interval, split by stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalDecomposition {
    /// Expected day-ahead revenue.
    pub day_ahead: f64,
    /// Expected active (regulation) revenue.
    pub active: f64,
    /// Expected passive (imbalance) revenue.
    pub passive: f64,
    /// Expected operating cost.
    pub cost: f64,
}

/// Per-path operating decisions, ready for settlement.
#[derive(Debug, Clone, PartialEq)]
pub struct PathDecisions {
    pub day_ahead: Vec<f64>,
    pub active: Vec<f64>,
    pub reg_up: Vec<f64>,
    pub reg_down: Vec<f64>,
    pub dev_plus: Vec<f64>,
    pub dev_minus: Vec<f64>,
    pub thermal: Vec<f64>,
    pub commit: Vec<f64>,
    pub charge: Vec<f64>,
    pub discharge: Vec<f64>,
    pub level: Vec<f64>,
    /// Realized renewable energy along the path.
    pub energy: Vec<f64>,
}

/// A solved offering strategy in problem coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategySolution {
    pub objective: f64,
    /// `[i][k]` day-ahead offers.
    pub day_ahead: Vec<Vec<f64>>,
    /// `[i][k]` participation choices, exactly 0 or 1.
    pub active: Vec<Vec<f64>>,
    /// `[i][j][k]` up-regulation offers.
    pub reg_up: Vec<Vec<Vec<f64>>>,
    /// `[i][j][k]` down-regulation offers.
    pub reg_down: Vec<Vec<Vec<f64>>>,
    /// `[i][w][k]` surplus imbalances.
    pub dev_plus: Vec<Vec<Vec<f64>>>,
    /// `[i][w][k]` shortage imbalances.
    pub dev_minus: Vec<Vec<Vec<f64>>>,
    /// `[i][j][w][k]` thermal output.
    pub thermal: Vec<Vec<Vec<Vec<f64>>>>,
    /// `[i][j][w][k]` commitment, exactly 0 or 1.
    pub commit: Vec<Vec<Vec<Vec<f64>>>>,
    /// `[i][j][w][k]` charging power.
    pub charge: Vec<Vec<Vec<Vec<f64>>>>,
    /// `[i][j][w][k]` discharging power.
    pub discharge: Vec<Vec<Vec<Vec<f64>>>>,
    /// `[i][j][w][k]` storage level.
    pub level: Vec<Vec<Vec<Vec<f64>>>>,
    /// Per-interval expected profit split, summing to `objective`.
    pub decomposition: Vec<IntervalDecomposition>,
}

impl StrategySolution {
    /// Decisions along one scenario path `(i, j, w)`.
    pub fn path(&self, tree: &ScenarioTree, i: usize, j: usize, w: usize) -> PathDecisions {
        PathDecisions {
            day_ahead: self.day_ahead[i].clone(),
            active: self.active[i].clone(),
            reg_up: self.reg_up[i][j].clone(),
            reg_down: self.reg_down[i][j].clone(),
            dev_plus: self.dev_plus[i][w].clone(),
            dev_minus: self.dev_minus[i][w].clone(),
            thermal: self.thermal[i][j][w].clone(),
            commit: self.commit[i][j][w].clone(),
            charge: self.charge[i][j][w].clone(),
            discharge: self.discharge[i][j][w].clone(),
            level: self.level[i][j][w].clone(),
            energy: tree.energy[w].clone(),
        }
    }
}

/// Maps a solver solution back to problem coordinates.
///
/// Verifies binary integrality and recomputes the per-interval profit
/// decomposition, rejecting the solution if it fails to reproduce the
/// solver's objective.
pub fn extract_solution(
    cfg: &VppConfig,
    tree: &ScenarioTree,
    model: &OfferModel,
    solution: &LpSolution,
) -> Result<StrategySolution, OfferError> {
    let map = &model.map;
    if solution.x.len() != map.num_cols() {
        return Err(OfferError::SolutionShape {
            got: solution.x.len(),
            expected: map.num_cols(),
        });
    }
    let (i_n, j_n, w_n, horizon) = (map.n_da, map.n_ba, map.n_energy, map.horizon);
    let value = |v: VariableIndex| map.col(v).map_or(0.0, |c| solution.x[c]);
    let rounded_binary = |v: VariableIndex, name: &str| -> Result<f64, OfferError> {
        let raw = value(v);
        let r = raw.round();
        if (raw - r).abs() > INTEGRALITY_TOL || !(r == 0.0 || r == 1.0) {
            return Err(OfferError::Fractional {
                name: name.to_string(),
                value: raw,
            });
        }
        Ok(r)
    };

    let mut out = StrategySolution {
        objective: solution.objective,
        day_ahead: vec![vec![0.0; horizon]; i_n],
        active: vec![vec![0.0; horizon]; i_n],
        reg_up: vec![vec![vec![0.0; horizon]; j_n]; i_n],
        reg_down: vec![vec![vec![0.0; horizon]; j_n]; i_n],
        dev_plus: vec![vec![vec![0.0; horizon]; w_n]; i_n],
        dev_minus: vec![vec![vec![0.0; horizon]; w_n]; i_n],
        thermal: vec![vec![vec![vec![0.0; horizon]; w_n]; j_n]; i_n],
        commit: vec![vec![vec![vec![0.0; horizon]; w_n]; j_n]; i_n],
        charge: vec![vec![vec![vec![0.0; horizon]; w_n]; j_n]; i_n],
        discharge: vec![vec![vec![vec![0.0; horizon]; w_n]; j_n]; i_n],
        level: vec![vec![vec![vec![0.0; horizon]; w_n]; j_n]; i_n],
        decomposition: Vec::with_capacity(horizon),
    };

    for i in 0..i_n {
        for k in 0..horizon {
            out.day_ahead[i][k] = value(VariableIndex::DayAhead { i, k });
            out.active[i][k] = rounded_binary(VariableIndex::Active { i, k }, &format!("eps[{i}][{k}]"))?;
            for j in 0..j_n {
                out.reg_up[i][j][k] = value(VariableIndex::RegUp { i, j, k });
                out.reg_down[i][j][k] = value(VariableIndex::RegDown { i, j, k });
            }
            for w in 0..w_n {
                out.dev_plus[i][w][k] = value(VariableIndex::DevPlus { i, w, k });
                out.dev_minus[i][w][k] = value(VariableIndex::DevMinus { i, w, k });
            }
            for j in 0..j_n {
                for w in 0..w_n {
                    out.thermal[i][j][w][k] = value(VariableIndex::Thermal { i, j, w, k });
                    out.charge[i][j][w][k] = value(VariableIndex::Charge { i, j, w, k });
                    out.discharge[i][j][w][k] = value(VariableIndex::Discharge { i, j, w, k });
                    out.level[i][j][w][k] = value(VariableIndex::Level { i, j, w, k });
                    out.commit[i][j][w][k] = if map.has_commit {
                        rounded_binary(
                            VariableIndex::Commit { i, j, w, k },
                            &format!("u[{i}][{j}][{w}][{k}]"),
                        )?
                    } else if out.thermal[i][j][w][k] > 1e-6 {
                        1.0
                    } else {
                        0.0
                    };
                }
            }
        }
    }

    let mut total = 0.0;
    for k in 0..horizon {
        let mut d = IntervalDecomposition {
            day_ahead: 0.0,
            active: 0.0,
            passive: 0.0,
            cost: 0.0,
        };
        for i in 0..i_n {
            let pi = tree.da_prob[i];
            d.day_ahead += pi * tree.da_prices[i][k] * out.day_ahead[i][k];
            for j in 0..j_n {
                let pij = tree.ba_prob[i][j];
                d.active += pi
                    * pij
                    * tree.ba_prices[i][j][k]
                    * (out.reg_up[i][j][k] - out.reg_down[i][j][k]);
            }
            for w in 0..w_n {
                let mut plus = 0.0;
                let mut minus = 0.0;
                for j in 0..j_n {
                    let da = tree.da_prices[i][k];
                    let ba = tree.ba_prices[i][j][k];
                    plus += tree.ba_prob[i][j] * da.min(ba);
                    minus += tree.ba_prob[i][j] * da.max(ba);
                }
                d.passive += pi
                    * tree.energy_prob[w]
                    * (plus * out.dev_plus[i][w][k] - minus * out.dev_minus[i][w][k]);
            }
            for j in 0..j_n {
                for w in 0..w_n {
                    let weight = pi * tree.ba_prob[i][j] * tree.energy_prob[w];
                    d.cost += weight
                        * (cfg.thermal.marginal_cost * out.thermal[i][j][w][k]
                            + if map.has_commit {
                                cfg.thermal.fixed_cost * out.commit[i][j][w][k]
                            } else {
                                0.0
                            });
                }
            }
        }
        total += d.day_ahead + d.active + d.passive - d.cost;
        out.decomposition.push(d);
    }
    if (total - solution.objective).abs() > DECOMPOSITION_TOL {
        return Err(OfferError::Decomposition {
            stated: solution.objective,
            recomputed: total,
        });
    }
    Ok(out)
}

/// Result of [`solve_offering`].
#[derive(Debug, Clone)]
pub enum SolveOutcome {
    Optimal(StrategySolution, BnbStats),
    Infeasible(BnbStats),
    Unbounded(BnbStats),
    Limit {
        incumbent: Option<StrategySolution>,
        stats: BnbStats,
    },
}

/// Builds, reduces, solves and extracts in one call.
pub fn solve_offering(
    cfg: &VppConfig,
    tree: &ScenarioTree,
    mode: StrategyMode,
    tol: &Tolerances,
    limits: &SolveLimits,
) -> Result<SolveOutcome, OfferError> {
    let full = build_model(cfg, tree, mode)?;
    let model = eliminate_redundant_binaries(cfg, tree, mode, &full)?;
    let outcome = solve_milp(&model.milp, tol, limits);
    match outcome.status {
        MilpStatus::Optimal => {
            let sol = outcome.solution.expect("optimal outcome carries a solution");
            Ok(SolveOutcome::Optimal(
                extract_solution(cfg, tree, &model, &sol)?,
                outcome.stats,
            ))
        }
        MilpStatus::Infeasible => Ok(SolveOutcome::Infeasible(outcome.stats)),
        MilpStatus::Unbounded => Ok(SolveOutcome::Unbounded(outcome.stats)),
        MilpStatus::LimitWithIncumbent => {
            let sol = outcome.solution.expect("incumbent outcome carries a solution");
            Ok(SolveOutcome::Limit {
                incumbent: Some(extract_solution(cfg, tree, &model, &sol)?),
                stats: outcome.stats,
            })
        }
        MilpStatus::LimitNoIncumbent => Ok(SolveOutcome::Limit {
            incumbent: None,
            stats: outcome.stats,
        }),
        MilpStatus::NumericalFailure => Err(OfferError::Numerical),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_model::{RenewableUnit, StorageUnit, ThermalUnit};

    fn small_instance() -> (VppConfig, ScenarioTree) {
        let cfg = VppConfig {
            thermal: ThermalUnit {
                capacity: 25.0,
                min_output: 0.0,
                ramp_up: 1000.0,
                ramp_down: 1000.0,
                marginal_cost: 31.0,
                fixed_cost: 0.0,
                initial_output: 0.0,
            },
            storage: StorageUnit::none(),
            renewable: RenewableUnit { capacity: 40.0 },
            horizon: 2,
        };
        let tree = ScenarioTree {
            da_prices: vec![vec![25.0, 29.0]],
            da_prob: vec![1.0],
            ba_prices: vec![vec![vec![26.0, 19.0], vec![23.0, 37.0]]],
            ba_prob: vec![vec![0.5, 0.5]],
            energy: vec![vec![5.0, 9.0], vec![18.0, 15.0]],
            energy_prob: vec![0.5, 0.5],
        };
        (cfg, tree)
    }

    fn solve(cfg: &VppConfig, tree: &ScenarioTree, mode: StrategyMode) -> SolveOutcome {
        solve_offering(cfg, tree, mode, &Tolerances::default(), &SolveLimits::default()).unwrap()
    }

    fn optimal(cfg: &VppConfig, tree: &ScenarioTree, mode: StrategyMode) -> StrategySolution {
        match solve(cfg, tree, mode) {
            SolveOutcome::Optimal(sol, _) => sol,
            other => panic!("expected optimal, got {other:?}"),
        }
    }

    #[test]
    fn direction_classification() {
        assert_eq!(regulation_direction(25.0, 26.0, 1e-9), RegulationDirection::Up);
        assert_eq!(regulation_direction(25.0, 23.0, 1e-9), RegulationDirection::Down);
        assert_eq!(regulation_direction(25.0, 25.0, 1e-9), RegulationDirection::None);
        assert_eq!(
            regulation_direction(25.0, 25.0 + 5e-10, 1e-9),
            RegulationDirection::None
        );
        assert_eq!(
            regulation_direction(25.0, 25.0 + 2e-9, 1e-9),
            RegulationDirection::Up
        );
    }

    #[test]
    fn small_instance_flexible_strategy() {
        let (cfg, tree) = small_instance();
        let sol = optimal(&cfg, &tree, StrategyMode::ActivePassive);
        assert!((sol.objective - 702.25).abs() < 1e-6, "objective {}", sol.objective);
        assert!((sol.day_ahead[0][0] - 18.0).abs() < 1e-6);
        assert!((sol.day_ahead[0][1] - 34.0).abs() < 1e-6);
        assert_eq!(sol.active[0], vec![0.0, 1.0]);
        assert!((sol.reg_down[0][0][1] - 19.0).abs() < 1e-6);
        assert!(sol.reg_up[0][0][1].abs() < 1e-6);
        assert!((sol.dev_minus[0][0][0] - 13.0).abs() < 1e-6);
        assert!(sol.dev_plus[0][1][0].abs() < 1e-6 || sol.dev_plus[0][1][0] > 0.0);
        let total: f64 = sol
            .decomposition
            .iter()
            .map(|d| d.day_ahead + d.active + d.passive - d.cost)
            .sum();
        assert!((total - sol.objective).abs() < 1e-9);
    }

    #[test]
    fn small_instance_passive_strategy() {
        let (cfg, tree) = small_instance();
        let sol = optimal(&cfg, &tree, StrategyMode::PassiveOnly);
        assert!((sol.objective - 626.25).abs() < 1e-6, "objective {}", sol.objective);
        assert!((sol.day_ahead[0][0] - 18.0).abs() < 1e-6);
        assert!((sol.day_ahead[0][1] - 15.0).abs() < 1e-6);
        assert_eq!(sol.active[0], vec![0.0, 0.0]);
        for j in 0..2 {
            for k in 0..2 {
                assert!(sol.reg_up[0][j][k].abs() < 1e-9);
                assert!(sol.reg_down[0][j][k].abs() < 1e-9);
            }
        }
    }

    #[test]
    fn flexible_strategy_dominates_fixed_ones() {
        let (cfg, tree) = small_instance();
        let flexible = optimal(&cfg, &tree, StrategyMode::ActivePassive).objective;
        let passive = optimal(&cfg, &tree, StrategyMode::PassiveOnly).objective;
        let active = match solve(&cfg, &tree, StrategyMode::ActiveOnly) {
            SolveOutcome::Optimal(sol, _) => sol.objective,
            SolveOutcome::Infeasible(_) => f64::NEG_INFINITY,
            other => panic!("unexpected {other:?}"),
        };
        assert!(flexible >= passive - 1e-6);
        assert!(flexible >= active - 1e-6);
        assert!(flexible > passive + 1.0, "strict improvement expected here");
    }

    #[test]
    fn active_only_infeasible_without_recourse() {
        // No thermal, no storage: active participation cannot track two
        // different renewable outcomes with scenario-independent offers.
        let cfg = VppConfig {
            thermal: ThermalUnit::none(),
            storage: StorageUnit::none(),
            renewable: RenewableUnit { capacity: 40.0 },
            horizon: 1,
        };
        let tree = ScenarioTree {
            da_prices: vec![vec![25.0]],
            da_prob: vec![1.0],
            ba_prices: vec![vec![vec![26.0]]],
            ba_prob: vec![vec![1.0]],
            energy: vec![vec![5.0], vec![18.0]],
            energy_prob: vec![0.5, 0.5],
        };
        assert!(matches!(
            solve(&cfg, &tree, StrategyMode::ActiveOnly),
            SolveOutcome::Infeasible(_)
        ));
        let sol = optimal(&cfg, &tree, StrategyMode::ActivePassive);
        assert_eq!(sol.active[0], vec![0.0]);
    }

    #[test]
    fn commitment_elimination_preserves_the_optimum() {
        let (cfg, tree) = small_instance();
        let full = build_model(&cfg, &tree, StrategyMode::ActivePassive).unwrap();
        let reduced =
            eliminate_redundant_binaries(&cfg, &tree, StrategyMode::ActivePassive, &full).unwrap();
        assert!(full.map.has_commit());
        assert!(!reduced.map.has_commit());
        assert_eq!(full.milp.num_binary_cols(), 2 + 8);
        assert_eq!(reduced.milp.num_binary_cols(), 2);

        let tol = Tolerances::default();
        let limits = SolveLimits::default();
        let a = solve_milp(&full.milp, &tol, &limits);
        let b = solve_milp(&reduced.milp, &tol, &limits);
        let oa = a.solution.unwrap().objective;
        let ob = b.solution.unwrap().objective;
        assert!((oa - ob).abs() < 1e-6, "{oa} vs {ob}");
    }

    #[test]
    fn min_output_keeps_commitment_and_enforces_the_window() {
        let (mut cfg, tree) = small_instance();
        cfg.thermal.min_output = 5.0;
        cfg.thermal.fixed_cost = 10.0;
        let full = build_model(&cfg, &tree, StrategyMode::ActivePassive).unwrap();
        let same = eliminate_redundant_binaries(&cfg, &tree, StrategyMode::ActivePassive, &full)
            .unwrap();
        assert!(same.map.has_commit());
        let sol = optimal(&cfg, &tree, StrategyMode::ActivePassive);
        for i in 0..1 {
            for j in 0..2 {
                for w in 0..2 {
                    for k in 0..2 {
                        let d = sol.thermal[i][j][w][k];
                        let u = sol.commit[i][j][w][k];
                        if u == 0.0 {
                            assert!(d.abs() < 1e-6);
                        } else {
                            assert!(d >= 5.0 - 1e-6 && d <= 25.0 + 1e-6);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn tied_day_ahead_prices_force_equal_offers() {
        let cfg = VppConfig {
            thermal: ThermalUnit::none(),
            storage: StorageUnit::none(),
            renewable: RenewableUnit { capacity: 40.0 },
            horizon: 1,
        };
        let tree = ScenarioTree {
            da_prices: vec![vec![25.0], vec![25.0], vec![30.0]],
            da_prob: vec![0.3, 0.3, 0.4],
            ba_prices: vec![vec![vec![25.0]], vec![vec![25.0]], vec![vec![30.0]]],
            ba_prob: vec![vec![1.0]; 3],
            energy: vec![vec![5.0], vec![18.0]],
            energy_prob: vec![0.5, 0.5],
        };
        let sol = optimal(&cfg, &tree, StrategyMode::PassiveOnly);
        assert!((sol.day_ahead[0][0] - sol.day_ahead[1][0]).abs() < 1e-9);
        assert!(sol.day_ahead[2][0] >= sol.day_ahead[0][0] - 1e-9);
    }

    #[test]
    fn regulation_respects_the_market_direction() {
        let (cfg, tree) = small_instance();
        let sol = optimal(&cfg, &tree, StrategyMode::ActivePassive);
        for j in 0..2 {
            for k in 0..2 {
                let da = tree.da_prices[0][k];
                let ba = tree.ba_prices[0][j][k];
                match regulation_direction(da, ba, PRICE_TIE_TOL) {
                    RegulationDirection::Up => assert!(sol.reg_down[0][j][k].abs() < 1e-9),
                    RegulationDirection::Down => assert!(sol.reg_up[0][j][k].abs() < 1e-9),
                    RegulationDirection::None => {
                        assert!(sol.reg_up[0][j][k].abs() < 1e-9);
                        assert!(sol.reg_down[0][j][k].abs() < 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn storage_shifts_energy_toward_the_expensive_interval() {
        // Lossless storage, big price spread, fixed renewable output: the
        // optimizer should charge cheap and discharge dear.
        let cfg = VppConfig {
            thermal: ThermalUnit::none(),
            storage: StorageUnit {
                level_min: 0.0,
                level_max: 10.0,
                charge_max: 10.0,
                discharge_max: 10.0,
                efficiency: 1.0,
                initial_level: 0.0,
                terminal_level_min: None,
            },
            renewable: RenewableUnit { capacity: 20.0 },
            horizon: 2,
        };
        let tree = ScenarioTree {
            da_prices: vec![vec![10.0, 100.0]],
            da_prob: vec![1.0],
            ba_prices: vec![vec![vec![10.0, 100.0]]],
            ba_prob: vec![vec![1.0]],
            energy: vec![vec![20.0, 20.0]],
            energy_prob: vec![1.0],
        };
        let sol = optimal(&cfg, &tree, StrategyMode::PassiveOnly);
        assert!((sol.charge[0][0][0][0] - 10.0).abs() < 1e-6);
        assert!((sol.discharge[0][0][0][1] - 10.0).abs() < 1e-6);
        assert!((sol.day_ahead[0][0] - 10.0).abs() < 1e-6);
        assert!((sol.day_ahead[0][1] - 30.0).abs() < 1e-6);
        assert!((sol.objective - (10.0 * 10.0 + 30.0 * 100.0)).abs() < 1e-6);
    }

    #[test]
    fn ramp_limits_bind() {
        let cfg = VppConfig {
            thermal: ThermalUnit {
                capacity: 30.0,
                min_output: 0.0,
                ramp_up: 5.0,
                ramp_down: 5.0,
                marginal_cost: 1.0,
                fixed_cost: 0.0,
                initial_output: 0.0,
            },
            storage: StorageUnit::none(),
            renewable: RenewableUnit { capacity: 0.0 },
            horizon: 3,
        };
        let tree = ScenarioTree {
            da_prices: vec![vec![50.0, 50.0, 50.0]],
            da_prob: vec![1.0],
            ba_prices: vec![vec![vec![50.0, 50.0, 50.0]]],
            ba_prob: vec![vec![1.0]],
            energy: vec![vec![0.0, 0.0, 0.0]],
            energy_prob: vec![1.0],
        };
        let sol = optimal(&cfg, &tree, StrategyMode::PassiveOnly);
        assert!((sol.thermal[0][0][0][0] - 5.0).abs() < 1e-6);
        assert!((sol.thermal[0][0][0][1] - 10.0).abs() < 1e-6);
        assert!((sol.thermal[0][0][0][2] - 15.0).abs() < 1e-6);
    }

    #[test]
    fn invalid_input_is_rejected_with_violations() {
        let (mut cfg, tree) = small_instance();
        cfg.storage.efficiency = 0.0;
        match build_model(&cfg, &tree, StrategyMode::ActivePassive) {
            Err(OfferError::Invalid(v)) => {
                assert!(v.iter().any(|v| v.code == "storage_efficiency_range"))
            }
            other => panic!("expected invalid input, got {other:?}"),
        }
    }

    #[test]
    fn extract_rejects_fractional_participation() {
        let (cfg, tree) = small_instance();
        let model = build_model(&cfg, &tree, StrategyMode::ActivePassive).unwrap();
        let model =
            eliminate_redundant_binaries(&cfg, &tree, StrategyMode::ActivePassive, &model).unwrap();
        let outcome = solve_milp(&model.milp, &Tolerances::default(), &SolveLimits::default());
        let mut sol = outcome.solution.unwrap();
        let eps = model.map.col(VariableIndex::Active { i: 0, k: 0 }).unwrap();
        sol.x[eps] = 0.5;
        match extract_solution(&cfg, &tree, &model, &sol) {
            Err(OfferError::Fractional { name, value }) => {
                assert!(name.contains("eps"));
                assert_eq!(value, 0.5);
            }
            other => panic!("expected fractional error, got {other:?}"),
        }
    }

    #[test]
    fn map_round_trips_every_column() {
        let (cfg, tree) = small_instance();
        let model = build_model(&cfg, &tree, StrategyMode::ActivePassive).unwrap();
        assert_eq!(model.map.num_cols(), model.milp.num_cols());
        for c in 0..model.map.num_cols() {
            let v = model.map.index(c);
            assert_eq!(model.map.col(v), Some(c));
        }
        assert_eq!(
            model.map.col(VariableIndex::Commit { i: 0, j: 1, w: 1, k: 1 }).is_some(),
            model.map.has_commit()
        );
    }

    #[test]
    fn oversized_names_fall_back_to_positional() {
        let mut model = MilpModel::new("t");
        model.add_col("averylongcolumnname", 0.0, 1.0, 0.0);
        model.add_col("ok", 0.0, 1.0, 0.0);
        model.add_row("r", RowSense::Le, 1.0, &[(0, 1.0), (1, 1.0)]);
        ensure_exportable_names(&mut model);
        assert_eq!(model.col_name(0), "X0");
        assert_eq!(model.col_name(1), "X1");
        assert_eq!(model.row_name(0), "R0");
    }
}
