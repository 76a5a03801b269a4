//! `solve`: optimize the offering plan and write the solution artifacts.
//!
//! Output files: `solution.csv` (every decision variable at full precision),
//! `report.csv` (per-interval activation probability and profit split),
//! `curves.csv` (day-ahead offer curves), one `curves_i{n}.csv` per
//! day-ahead scenario (regulation offer curves), and `manifest.json`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;
use log::info;
use serde_json::json;
use vpp_core::{
    active_probability, build_model, day_ahead_curves, eliminate_redundant_binaries,
    extract_solution, regulation_curves, OfferCurve, ScenarioTree, SettlementError,
    StrategySolution,
};
use vpp_milp::{solve_milp, MilpStatus, SolveLimits, Tolerances};

use crate::{config, manifest, CliError};

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Configuration JSON with asset parameters and a scenario tree
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Offering strategy: active-passive, active, or passive
    #[arg(long, value_name = "MODE", default_value = "active-passive")]
    pub mode: String,
    /// Wall-clock budget for the search in seconds
    #[arg(long, value_name = "S")]
    pub max_seconds: Option<f64>,
    /// Relative optimality gap at which the search stops
    #[arg(long, value_name = "X")]
    pub gap: Option<f64>,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

pub fn run(args: &SolveArgs) -> Result<i32, CliError> {
    let mode = crate::parse_mode(&args.mode)?;
    if let Some(seconds) = args.max_seconds {
        if !seconds.is_finite() || seconds <= 0.0 {
            return Err(CliError::Validation(format!(
                "--max-seconds must be positive and finite, got {seconds}"
            )));
        }
    }
    if let Some(gap) = args.gap {
        if !gap.is_finite() || gap < 0.0 {
            return Err(CliError::Validation(format!(
                "--gap must be non-negative and finite, got {gap}"
            )));
        }
    }
    let loaded = config::load_validated(&args.config)?;
    crate::create_out_dir(&args.out)?;

    let tol = Tolerances::default();
    let mut limits = SolveLimits {
        max_seconds: args.max_seconds,
        ..SolveLimits::default()
    };
    if let Some(gap) = args.gap {
        limits.relative_gap = gap;
    }

    let full = build_model(&loaded.cfg, &loaded.tree, mode).map_err(crate::map_offer_error)?;
    let model = eliminate_redundant_binaries(&loaded.cfg, &loaded.tree, mode, &full)
        .map_err(crate::map_offer_error)?;
    info!(
        "model built: {} variables, {} constraints, {} binaries",
        model.milp.num_cols(),
        model.milp.num_rows(),
        model.milp.num_binary_cols()
    );

    let outcome = solve_milp(&model.milp, &tol, &limits);
    let stats = &outcome.stats;
    info!(
        "search finished: {} nodes, {} simplex iterations",
        stats.nodes, stats.lp_iterations
    );

    let sol = match outcome.status {
        MilpStatus::Optimal | MilpStatus::LimitWithIncumbent => {
            let lp = outcome
                .solution
                .as_ref()
                .expect("a solution accompanies this status");
            Some(extract_solution(&loaded.cfg, &loaded.tree, &model, lp)
                .map_err(crate::map_offer_error)?)
        }
        MilpStatus::Unbounded => {
            return Err(CliError::Numerical(
                "the relaxation is unbounded; variable bounds are inconsistent".into(),
            ))
        }
        MilpStatus::NumericalFailure => {
            return Err(CliError::Numerical(
                "the solver reported a numerical failure".into(),
            ))
        }
        MilpStatus::Infeasible | MilpStatus::LimitNoIncumbent => None,
    };

    let mut outputs = Vec::new();
    if let Some(sol) = &sol {
        outputs = write_solution_files(&args.out, &loaded.tree, sol)?;
    }

    let status = match outcome.status {
        MilpStatus::Optimal => "optimal",
        MilpStatus::Infeasible => "infeasible",
        _ => "limit",
    };
    let tree = &loaded.tree;
    manifest::write(
        &args.out,
        &json!({
            "command": "solve",
            "config": args.config.display().to_string(),
            "counts": {
                "ba_per_da": tree.n_ba(),
                "da": tree.n_da(),
                "energy": tree.n_energy(),
                "horizon": tree.da_prices.first().map_or(0, Vec::len),
            },
            "limits": {
                "max_seconds": args.max_seconds,
                "relative_gap": limits.relative_gap,
            },
            "mode": mode.to_string(),
            "model": {
                "binaries": model.milp.num_binary_cols(),
                "constraints": model.milp.num_rows(),
                "variables": model.milp.num_cols(),
            },
            "objective": sol.as_ref().map(|s| s.objective),
            "out": args.out.display().to_string(),
            "outputs": outputs,
            "seed": null,
            "solver": {
                "best_bound": stats.best_bound,
                "gap": stats.gap,
                "lp_iterations": stats.lp_iterations,
                "nodes": stats.nodes,
            },
            "status": status,
            "tool": manifest::tool(),
        }),
    )?;

    println!("status: {status}");
    if let Some(sol) = &sol {
        println!("objective: {:.2}", sol.objective);
    }
    match outcome.status {
        MilpStatus::Optimal => Ok(0),
        MilpStatus::Infeasible => {
            eprintln!("no feasible offering plan exists in mode {mode}");
            Ok(2)
        }
        _ => {
            if sol.is_some() {
                eprintln!("search limit reached; reporting the best plan found");
            } else {
                eprintln!("search limit reached before any feasible plan was found");
            }
            Ok(3)
        }
    }
}

fn write_solution_files(
    out: &Path,
    tree: &ScenarioTree,
    sol: &StrategySolution,
) -> Result<Vec<String>, CliError> {
    let mut outputs = Vec::new();
    crate::write_file(&out.join("solution.csv"), &solution_csv(tree, sol))?;
    outputs.push("solution.csv".to_string());
    crate::write_file(&out.join("report.csv"), &report_csv(tree, sol))?;
    outputs.push("report.csv".to_string());
    let da = day_ahead_curves(tree, sol).map_err(post_error)?;
    crate::write_file(&out.join("curves.csv"), &curves_csv(&da))?;
    outputs.push("curves.csv".to_string());
    for i in 0..tree.n_da() {
        let curves = regulation_curves(tree, sol, i).map_err(post_error)?;
        let name = format!("curves_i{}.csv", i + 1);
        crate::write_file(&out.join(&name), &curves_csv(&curves))?;
        outputs.push(name);
    }
    Ok(outputs)
}

fn post_error(err: SettlementError) -> CliError {
    CliError::Numerical(format!("solution postprocessing failed: {err}"))
}

/// Every decision variable with zero-based indices, full precision.
fn solution_csv(tree: &ScenarioTree, sol: &StrategySolution) -> String {
    let n_da = tree.n_da();
    let n_ba = tree.n_ba();
    let n_energy = tree.n_energy();
    let horizon = tree.da_prices.first().map_or(0, Vec::len);
    let ops = n_da * n_ba * n_energy * horizon;
    let mut text = String::with_capacity(48 * (2 * n_da * horizon + 5 * ops + 1));
    text.push_str("variable,value\n");
    let _ = writeln!(text, "objective,{}", sol.objective);
    for i in 0..n_da {
        for k in 0..horizon {
            let _ = writeln!(text, "day_ahead[{i}][{k}],{}", sol.day_ahead[i][k]);
        }
    }
    for i in 0..n_da {
        for k in 0..horizon {
            let _ = writeln!(text, "active[{i}][{k}],{}", sol.active[i][k]);
        }
    }
    for i in 0..n_da {
        for j in 0..n_ba {
            for k in 0..horizon {
                let _ = writeln!(text, "reg_up[{i}][{j}][{k}],{}", sol.reg_up[i][j][k]);
            }
        }
    }
    for i in 0..n_da {
        for j in 0..n_ba {
            for k in 0..horizon {
                let _ = writeln!(text, "reg_down[{i}][{j}][{k}],{}", sol.reg_down[i][j][k]);
            }
        }
    }
    for i in 0..n_da {
        for w in 0..n_energy {
            for k in 0..horizon {
                let _ = writeln!(text, "dev_plus[{i}][{w}][{k}],{}", sol.dev_plus[i][w][k]);
            }
        }
    }
    for i in 0..n_da {
        for w in 0..n_energy {
            for k in 0..horizon {
                let _ = writeln!(text, "dev_minus[{i}][{w}][{k}],{}", sol.dev_minus[i][w][k]);
            }
        }
    }
    for (name, values) in [
        ("thermal", &sol.thermal),
        ("commit", &sol.commit),
        ("charge", &sol.charge),
        ("discharge", &sol.discharge),
        ("level", &sol.level),
    ] {
        for i in 0..n_da {
            for j in 0..n_ba {
                for w in 0..n_energy {
                    for k in 0..horizon {
                        let _ = writeln!(
                            text,
                            "{name}[{i}][{j}][{w}][{k}],{}",
                            values[i][j][w][k]
                        );
                    }
                }
            }
        }
    }
    text
}

/// Per-interval activation probability and profit decomposition.
fn report_csv(tree: &ScenarioTree, sol: &StrategySolution) -> String {
    let probs = active_probability(tree, sol);
    let mut text = String::from("k,prob_active,rho_da,rho_act,rho_pas,cost\n");
    for (k, split) in sol.decomposition.iter().enumerate() {
        let _ = writeln!(
            text,
            "{},{:.6},{:.2},{:.2},{:.2},{:.2}",
            k + 1,
            probs[k],
            split.day_ahead,
            split.active,
            split.passive,
            split.cost
        );
    }
    text
}

/// Offer curves as `market,k,price,quantity` rows, intervals one-based.
fn curves_csv(curves: &[OfferCurve]) -> String {
    let mut text = String::from("market,k,price,quantity\n");
    for curve in curves {
        for step in &curve.steps {
            let _ = writeln!(
                text,
                "{},{},{:.2},{:.3}",
                curve.market,
                curve.interval + 1,
                step.price,
                step.quantity
            );
        }
    }
    text
}
