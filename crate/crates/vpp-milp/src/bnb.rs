//! Branch and bound over the LP relaxation.
//!
//! Node selection is best-bound with depth-first plunging until the first
//! incumbent is found; branching picks the most fractional binary (ties go
//! to the lowest column id) and dives toward the rounded LP value. The
//! search is deterministic for a fixed model and limits: node ids break
//! every heap tie.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use crate::model::MilpModel;
use crate::simplex::{solve_lp, LpSolution, LpStatus, Tolerances};

/// Stopping criteria for [`solve_milp`].
#[derive(Debug, Clone, Copy)]
pub struct SolveLimits {
    pub max_nodes: Option<u64>,
    pub max_seconds: Option<f64>,
    /// Relative objective gap at which the search stops with `Optimal`.
    pub relative_gap: f64,
}

impl Default for SolveLimits {
    fn default() -> Self {
        SolveLimits {
            max_nodes: None,
            max_seconds: None,
            relative_gap: Tolerances::default().relative_gap,
        }
    }
}

/// Search statistics reported with every outcome.
#[derive(Debug, Clone, Copy)]
pub struct BnbStats {
    /// Number of node LPs solved.
    pub nodes: u64,
    /// Total simplex iterations across all node LPs.
    pub lp_iterations: u64,
    /// Best proven upper bound on the optimum at termination.
    pub best_bound: f64,
    /// Relative gap between `best_bound` and the incumbent at termination.
    pub gap: f64,
    /// Wall-clock time of the search in seconds.
    pub seconds: f64,
}

/// Outcome class of a branch-and-bound run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MilpStatus {
    /// Incumbent proven optimal within the requested relative gap.
    Optimal,
    Infeasible,
    /// The root relaxation is unbounded.
    Unbounded,
    /// A limit was hit before optimality; the best incumbent is returned
    /// with an honest remaining gap.
    LimitWithIncumbent,
    /// A limit was hit and no integral solution was found.
    LimitNoIncumbent,
    NumericalFailure,
}

/// Result of [`solve_milp`]: status, incumbent (when one exists), and stats.
#[derive(Debug, Clone)]
pub struct MilpOutcome {
    pub status: MilpStatus,
    pub solution: Option<LpSolution>,
    pub stats: BnbStats,
}

struct Node {
    id: u64,
    /// `(column, value)` bound fixings along the path from the root.
    fixes: Vec<(usize, f64)>,
    /// Parent LP objective; upper bound on everything below this node.
    bound: f64,
}

struct HeapEntry(Node);

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for HeapEntry {}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Highest bound first; older node first on ties.
        self.0
            .bound
            .total_cmp(&other.0.bound)
            .then_with(|| other.0.id.cmp(&self.0.id))
    }
}

/// Solves `model` to proven optimality (within `limits.relative_gap`) by
/// LP-based branch and bound on its binary columns.
pub fn solve_milp(model: &MilpModel, tol: &Tolerances, limits: &SolveLimits) -> MilpOutcome {
    let start = Instant::now();
    let mut working = model.clone();
    let binaries = model.binary_cols();
    let original: Vec<(usize, (f64, f64))> =
        binaries.iter().map(|&c| (c, model.bounds(c))).collect();

    let mut heap: BinaryHeap<HeapEntry> = BinaryHeap::new();
    let mut current = Some(Node {
        id: 0,
        fixes: Vec::new(),
        bound: f64::INFINITY,
    });
    let mut next_id: u64 = 1;
    let mut incumbent: Option<LpSolution> = None;
    let mut plunging = true;
    let mut nodes: u64 = 0;
    let mut lp_iterations: u64 = 0;

    let gap_of = |bound: f64, inc: f64| (bound - inc) / 1f64.max(inc.abs());

    let finish = |status: MilpStatus,
                  incumbent: Option<LpSolution>,
                  best_bound: f64,
                  nodes: u64,
                  lp_iterations: u64| {
        let gap = match (&incumbent, status) {
            (_, MilpStatus::Infeasible) => 0.0,
            (Some(inc), _) => gap_of(best_bound, inc.objective).max(0.0),
            (None, _) => f64::INFINITY,
        };
        let stats = BnbStats {
            nodes,
            lp_iterations,
            best_bound,
            gap,
            seconds: start.elapsed().as_secs_f64(),
        };
        log::debug!(
            "branch and bound finished: {status:?}, {nodes} nodes, bound {best_bound:.6}, gap {gap:.2e}"
        );
        MilpOutcome {
            status,
            solution: incumbent,
            stats,
        }
    };

    loop {
        // Best bound over everything still open.
        let open_bound = {
            let heap_bound = heap.peek().map(|e| e.0.bound);
            let cur_bound = current.as_ref().map(|n| n.bound);
            match (heap_bound, cur_bound) {
                (Some(a), Some(b)) => Some(a.max(b)),
                (a, b) => a.or(b),
            }
        };

        let Some(open_bound) = open_bound else {
            // Search space exhausted.
            return match incumbent {
                Some(inc) => {
                    let bb = inc.objective;
                    finish(MilpStatus::Optimal, Some(inc), bb, nodes, lp_iterations)
                }
                None => finish(
                    MilpStatus::Infeasible,
                    None,
                    f64::NEG_INFINITY,
                    nodes,
                    lp_iterations,
                ),
            };
        };

        if let Some(inc) = &incumbent {
            if gap_of(open_bound, inc.objective) <= limits.relative_gap {
                let inc = incumbent.take().unwrap();
                return finish(MilpStatus::Optimal, Some(inc), open_bound, nodes, lp_iterations);
            }
        }

        let hit_limit = limits.max_nodes.is_some_and(|mn| nodes >= mn)
            || limits
                .max_seconds
                .is_some_and(|ms| start.elapsed().as_secs_f64() >= ms);
        if hit_limit {
            let status = if incumbent.is_some() {
                MilpStatus::LimitWithIncumbent
            } else {
                MilpStatus::LimitNoIncumbent
            };
            return finish(status, incumbent, open_bound, nodes, lp_iterations);
        }

        let node = match current.take() {
            Some(n) => n,
            None => heap.pop().unwrap().0,
        };
        if let Some(inc) = &incumbent {
            let slack = limits.relative_gap * 1f64.max(inc.objective.abs());
            if node.bound <= inc.objective + slack {
                continue;
            }
        }

        for &(col, v) in &node.fixes {
            working.set_bounds(col, v, v);
        }
        let lp = solve_lp(&working, tol);
        for &(col, (lo, hi)) in &original {
            working.set_bounds(col, lo, hi);
        }
        nodes += 1;
        lp_iterations += lp.iterations as u64;

        match lp.status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                return if node.fixes.is_empty() {
                    finish(
                        MilpStatus::Unbounded,
                        None,
                        f64::INFINITY,
                        nodes,
                        lp_iterations,
                    )
                } else {
                    // A bounded root cannot have an unbounded descendant.
                    finish(
                        MilpStatus::NumericalFailure,
                        None,
                        open_bound,
                        nodes,
                        lp_iterations,
                    )
                };
            }
            LpStatus::NumericalFailure => {
                return finish(
                    MilpStatus::NumericalFailure,
                    incumbent,
                    open_bound,
                    nodes,
                    lp_iterations,
                )
            }
            LpStatus::Optimal => {}
        }

        let bound = lp.objective;
        if let Some(inc) = &incumbent {
            let slack = limits.relative_gap * 1f64.max(inc.objective.abs());
            if bound <= inc.objective + slack {
                continue;
            }
        }

        // Most fractional binary, lowest id on ties.
        let mut branch: Option<(usize, f64)> = None;
        for &c in &binaries {
            let v = lp.x[c];
            let frac = (v - v.round()).abs();
            if frac > tol.integrality {
                let score = 0.5 - (v - v.floor() - 0.5).abs();
                match branch {
                    Some((_, s)) if s >= score => {}
                    _ => branch = Some((c, score)),
                }
            }
        }

        let Some((col, _)) = branch else {
            // Integral: candidate incumbent.
            let better = incumbent
                .as_ref()
                .map_or(true, |inc| lp.objective > inc.objective);
            if better {
                incumbent = Some(lp);
            }
            plunging = false;
            continue;
        };

        let toward = if lp.x[col] >= 0.5 { 1.0 } else { 0.0 };
        let mut near_fixes = node.fixes.clone();
        near_fixes.push((col, toward));
        let mut far_fixes = node.fixes;
        far_fixes.push((col, 1.0 - toward));
        let near = Node {
            id: next_id,
            fixes: near_fixes,
            bound,
        };
        let far = Node {
            id: next_id + 1,
            fixes: far_fixes,
            bound,
        };
        next_id += 2;
        if plunging && incumbent.is_none() {
            current = Some(near);
            heap.push(HeapEntry(far));
        } else {
            heap.push(HeapEntry(near));
            heap.push(HeapEntry(far));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{MilpModel, RowSense};

    fn solve(m: &MilpModel) -> MilpOutcome {
        solve_milp(m, &Tolerances::default(), &SolveLimits::default())
    }

    #[test]
    fn knapsack_needs_branching() {
        // max 5a + 4b + 3c s.t. 2a + 3b + c <= 3, binaries.
        // LP relaxation is fractional; integer optimum is a + c = 8.
        let mut m = MilpModel::new("knap");
        m.add_binary_col("a", 5.0);
        m.add_binary_col("b", 4.0);
        m.add_binary_col("c", 3.0);
        m.add_row("cap", RowSense::Le, 3.0, &[(0, 2.0), (1, 3.0), (2, 1.0)]);
        let out = solve(&m);
        assert_eq!(out.status, MilpStatus::Optimal);
        let sol = out.solution.unwrap();
        assert!((sol.objective - 8.0).abs() < 1e-6);
        assert!((sol.x[0] - 1.0).abs() < 1e-6);
        assert!(sol.x[1].abs() < 1e-6);
        assert!((sol.x[2] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn pure_lp_passes_through() {
        let mut m = MilpModel::new("lp");
        m.add_col("x", 0.0, 2.5, 2.0);
        let out = solve(&m);
        assert_eq!(out.status, MilpStatus::Optimal);
        assert_eq!(out.stats.nodes, 1);
        assert!((out.solution.unwrap().objective - 5.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_integer_model() {
        // b1 + b2 = 3 cannot hold for binaries.
        let mut m = MilpModel::new("inf");
        m.add_binary_col("b1", 1.0);
        m.add_binary_col("b2", 1.0);
        m.add_row("r", RowSense::Eq, 3.0, &[(0, 1.0), (1, 1.0)]);
        let out = solve(&m);
        assert_eq!(out.status, MilpStatus::Infeasible);
        assert!(out.solution.is_none());
        assert_eq!(out.stats.gap, 0.0);
    }

    #[test]
    fn fractional_lp_integral_milp_gap() {
        // x binary, y continuous: max 2x + y, y <= 1 + 0.5 x... force a
        // fractional root: max 3x s.t. 2x <= 1 -> root x = 0.5, milp x = 0.
        let mut m = MilpModel::new("frac");
        m.add_binary_col("x", 3.0);
        m.add_row("r", RowSense::Le, 1.0, &[(0, 2.0)]);
        let out = solve(&m);
        assert_eq!(out.status, MilpStatus::Optimal);
        let sol = out.solution.unwrap();
        assert!(sol.x[0].abs() < 1e-6);
        assert!(sol.objective.abs() < 1e-6);
        assert!(out.stats.nodes >= 2);
    }

    #[test]
    fn respects_node_limit_without_incumbent() {
        let mut m = MilpModel::new("lim");
        for i in 0..6 {
            m.add_binary_col(format!("b{i}"), 1.0);
        }
        // 2 * sum(b) = 7 is infeasible in integers but LP-feasible.
        let coeffs: Vec<(usize, f64)> = (0..6).map(|i| (i, 2.0)).collect();
        m.add_row("r", RowSense::Eq, 7.0, &coeffs);
        let limits = SolveLimits {
            max_nodes: Some(1),
            ..Default::default()
        };
        let out = solve_milp(&m, &Tolerances::default(), &limits);
        assert_eq!(out.status, MilpStatus::LimitNoIncumbent);
        assert!(out.solution.is_none());
        assert!(out.stats.gap.is_infinite());
    }

    #[test]
    fn limit_with_incumbent_reports_honest_gap() {
        // Two-item knapsack where plunging finds an incumbent on node 2.
        let mut m = MilpModel::new("lim2");
        m.add_binary_col("a", 5.0);
        m.add_binary_col("b", 4.0);
        m.add_binary_col("c", 3.0);
        m.add_row("cap", RowSense::Le, 3.0, &[(0, 2.0), (1, 3.0), (2, 1.0)]);
        let limits = SolveLimits {
            max_nodes: Some(2),
            ..Default::default()
        };
        let out = solve_milp(&m, &Tolerances::default(), &limits);
        if out.status == MilpStatus::LimitWithIncumbent {
            let sol = out.solution.unwrap();
            assert!(out.stats.best_bound >= sol.objective - 1e-9);
            assert!(out.stats.gap >= 0.0);
        } else {
            // Plunging may already have proven optimality within the limit.
            assert_eq!(out.status, MilpStatus::Optimal);
        }
    }

    #[test]
    fn unbounded_root_is_reported() {
        let mut m = MilpModel::new("unb");
        m.add_col("x", 0.0, f64::INFINITY, 1.0);
        m.add_binary_col("b", 1.0);
        let out = solve(&m);
        assert_eq!(out.status, MilpStatus::Unbounded);
    }

    #[test]
    fn deterministic_node_counts() {
        let mut m = MilpModel::new("det");
        for i in 0..5 {
            m.add_binary_col(format!("b{i}"), (i as f64) + 1.5);
        }
        let coeffs: Vec<(usize, f64)> = (0..5).map(|i| (i, (i as f64) + 1.0)).collect();
        m.add_row("r", RowSense::Le, 6.5, &coeffs);
        let a = solve(&m);
        let b = solve(&m);
        assert_eq!(a.status, MilpStatus::Optimal);
        assert_eq!(a.stats.nodes, b.stats.nodes);
        assert_eq!(
            a.solution.as_ref().unwrap().objective,
            b.solution.as_ref().unwrap().objective
        );
        let xa = &a.solution.as_ref().unwrap().x;
        let xb = &b.solution.as_ref().unwrap().x;
        assert_eq!(xa, xb);
    }

    #[test]
    fn already_fixed_binaries_are_not_branched() {
        let mut m = MilpModel::new("fixed");
        let b = m.add_binary_col("b", 1.0);
        m.set_bounds(b, 1.0, 1.0);
        m.add_col("x", 0.0, 4.0, 1.0);
        let out = solve(&m);
        assert_eq!(out.status, MilpStatus::Optimal);
        assert_eq!(out.stats.nodes, 1);
        assert!((out.solution.unwrap().objective - 5.0).abs() < 1e-9);
    }
}
