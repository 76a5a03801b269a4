//! Branch and bound checked against exhaustive enumeration.
//!
//! For models with few binaries, the MILP optimum can be computed by fixing
//! every binary assignment in turn and solving the remaining LP. These
//! tests build randomized bounded models (so no fixing can be unbounded)
//! and require `solve_milp` to agree with that oracle on both the optimal
//! objective and the feasibility verdict.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use vpp_milp::{
    solve_lp, solve_milp, LpStatus, MilpModel, MilpStatus, RowSense, SolveLimits, Tolerances,
};

/// Exhaustive MILP oracle: max over all binary assignments of the fixed LP.
fn brute_force(model: &MilpModel, tol: &Tolerances) -> Option<(f64, Vec<f64>)> {
    let binaries = model.binary_cols();
    assert!(binaries.len() <= 12, "oracle only meant for small models");
    let mut work = model.clone();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1 << binaries.len()) {
        let mut skip = false;
        for (b, &col) in binaries.iter().enumerate() {
            let v = f64::from((mask >> b) & 1);
            let (lo, hi) = model.bounds(col);
            // Respect pre-fixed binaries.
            if v < lo || v > hi {
                skip = true;
                break;
            }
            work.set_bounds(col, v, v);
        }
        if !skip {
            let sol = solve_lp(&work, tol);
            match sol.status {
                LpStatus::Optimal => {
                    if best.as_ref().is_none_or(|(obj, _)| sol.objective > *obj) {
                        best = Some((sol.objective, sol.x));
                    }
                }
                LpStatus::Infeasible => {}
                other => panic!("oracle LP ended with {other:?}"),
            }
        }
        for &col in &binaries {
            let (lo, hi) = model.bounds(col);
            work.set_bounds(col, lo, hi);
        }
    }
    best
}

/// Random bounded model: every column has finite bounds, so every fixing is
/// either infeasible or has a finite optimum.
fn random_model(rng: &mut ChaCha8Rng) -> MilpModel {
    let n_cont = rng.random_range(1..=5);
    let n_bin = rng.random_range(1..=6);
    let n_rows = rng.random_range(1..=6);
    let mut m = MilpModel::new("random");
    for c in 0..n_cont {
        let lo = rng.random_range(-10.0..0.0);
        let hi = lo + rng.random_range(0.5..15.0);
        let obj = rng.random_range(-5.0..5.0);
        m.add_col(format!("x{c}"), lo, hi, obj);
    }
    for b in 0..n_bin {
        m.add_binary_col(format!("b{b}"), rng.random_range(-5.0..5.0));
    }
    let n_cols = n_cont + n_bin;
    for r in 0..n_rows {
        let mut coeffs = Vec::new();
        for c in 0..n_cols {
            if rng.random_bool(0.6) {
                coeffs.push((c, rng.random_range(-4.0..4.0)));
            }
        }
        if coeffs.is_empty() {
            coeffs.push((rng.random_range(0..n_cols), 1.0));
        }
        let sense = match rng.random_range(0..6) {
            0 => RowSense::Eq,
            1 | 2 => RowSense::Ge,
            _ => RowSense::Le,
        };
        let rhs = rng.random_range(-8.0..8.0);
        m.add_row(format!("r{r}"), sense, rhs, &coeffs);
    }
    m
}

#[test]
fn matches_brute_force_on_random_bounded_models() {
    let tol = Tolerances::default();
    let limits = SolveLimits::default();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut optimal = 0;
    let mut infeasible = 0;
    for trial in 0..60 {
        let model = random_model(&mut rng);
        let expected = brute_force(&model, &tol);
        let out = solve_milp(&model, &tol, &limits);
        match expected {
            Some((obj, _)) => {
                assert_eq!(
                    out.status,
                    MilpStatus::Optimal,
                    "trial {trial}: oracle found {obj}, solver said {:?}",
                    out.status
                );
                let got = out.solution.unwrap().objective;
                let scale = 1f64.max(obj.abs());
                assert!(
                    (got - obj).abs() / scale < 1e-6,
                    "trial {trial}: oracle {obj}, solver {got}"
                );
                optimal += 1;
            }
            None => {
                assert_eq!(
                    out.status,
                    MilpStatus::Infeasible,
                    "trial {trial}: oracle says infeasible"
                );
                infeasible += 1;
            }
        }
    }
    // The generator should exercise both outcomes.
    assert!(optimal >= 20, "only {optimal} feasible trials");
    assert!(infeasible >= 3, "only {infeasible} infeasible trials");
}

#[test]
fn incumbent_is_feasible_and_integral() {
    let tol = Tolerances::default();
    let limits = SolveLimits::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..30 {
        let model = random_model(&mut rng);
        let out = solve_milp(&model, &tol, &limits);
        if out.status != MilpStatus::Optimal {
            continue;
        }
        let sol = out.solution.unwrap();
        assert!(model.max_infeasibility(&sol.x) < 1e-6);
        for c in model.binary_cols() {
            let v = sol.x[c];
            assert!(
                (v - v.round()).abs() < 1e-6,
                "binary {c} fractional: {v}"
            );
        }
        assert!(out.stats.best_bound >= sol.objective - 1e-6);
    }
}
