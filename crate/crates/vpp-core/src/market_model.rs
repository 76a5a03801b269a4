//! Asset and market data types for a virtual power plant.
//!
//! A [`VppConfig`] bundles one thermal unit, one storage unit and one
//! renewable unit with the trading horizon. Uncertainty comes in as a
//! [`ScenarioTree`] over three stages: day-ahead price scenarios `i`,
//! balancing price scenarios `j` conditional on `i`, and renewable energy
//! scenarios `w`. [`validate_config`] checks every physical and stochastic
//! invariant and returns machine-readable violations instead of failing on
//! the first problem.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dispatchable thermal unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalUnit {
    /// Maximum output (MW).
    pub capacity: f64,
    /// Minimum output while committed (MW).
    pub min_output: f64,
    /// Maximum upward output change per interval (MW).
    pub ramp_up: f64,
    /// Maximum downward output change per interval (MW).
    pub ramp_down: f64,
    /// Variable production cost (EUR/MWh).
    pub marginal_cost: f64,
    /// Commitment cost per interval (EUR).
    #[serde(default)]
    pub fixed_cost: f64,
    /// Output in the interval before the horizon starts (MW).
    #[serde(default)]
    pub initial_output: f64,
}

impl ThermalUnit {
    /// A unit with no capacity; keeps models uniform when no thermal asset
    /// exists.
    pub fn none() -> Self {
        ThermalUnit {
            capacity: 0.0,
            min_output: 0.0,
            ramp_up: 0.0,
            ramp_down: 0.0,
            marginal_cost: 0.0,
            fixed_cost: 0.0,
            initial_output: 0.0,
        }
    }
}

/// Energy storage unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StorageUnit {
    /// Minimum stored energy (MWh).
    pub level_min: f64,
    /// Maximum stored energy (MWh).
    pub level_max: f64,
    /// Maximum charging power (MW).
    pub charge_max: f64,
    /// Maximum discharging power (MW).
    pub discharge_max: f64,
    /// Round-trip charging efficiency, in `(0, 1]`.
    pub efficiency: f64,
    /// Stored energy before the horizon starts (MWh). Defaults to
    /// `level_min` when absent from a config file.
    pub initial_level: f64,
    /// Optional floor on the level at the end of the horizon, to prevent
    /// the optimizer from dumping the reservoir in the last interval.
    #[serde(default)]
    pub terminal_level_min: Option<f64>,
}

impl StorageUnit {
    /// A unit with no capacity and neutral efficiency.
    pub fn none() -> Self {
        StorageUnit {
            level_min: 0.0,
            level_max: 0.0,
            charge_max: 0.0,
            discharge_max: 0.0,
            efficiency: 1.0,
            initial_level: 0.0,
            terminal_level_min: None,
        }
    }
}

/// Aggregated renewable (stochastic) generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenewableUnit {
    /// Installed capacity (MW); energy scenarios must stay within it.
    pub capacity: f64,
}

/// The virtual power plant portfolio and trading horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VppConfig {
    pub thermal: ThermalUnit,
    pub storage: StorageUnit,
    pub renewable: RenewableUnit,
    /// Number of delivery intervals `K`.
    pub horizon: usize,
}

/// Three-stage scenario tree.
///
/// Indices throughout: `i` day-ahead scenario, `j` balancing scenario
/// (conditional on `i`), `w` energy scenario, `k` delivery interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioTree {
    /// Day-ahead price paths, `[i][k]` (EUR/MWh).
    pub da_prices: Vec<Vec<f64>>,
    /// Day-ahead scenario probabilities, `[i]`.
    pub da_prob: Vec<f64>,
    /// Balancing price paths, `[i][j][k]` (EUR/MWh).
    pub ba_prices: Vec<Vec<Vec<f64>>>,
    /// Balancing scenario probabilities conditional on `i`, `[i][j]`.
    pub ba_prob: Vec<Vec<f64>>,
    /// Renewable energy paths, `[w][k]` (MWh).
    pub energy: Vec<Vec<f64>>,
    /// Energy scenario probabilities, `[w]`.
    pub energy_prob: Vec<f64>,
}

impl ScenarioTree {
    /// Number of day-ahead scenarios `I`.
    pub fn n_da(&self) -> usize {
        self.da_prices.len()
    }

    /// Number of balancing scenarios `J` per day-ahead scenario.
    pub fn n_ba(&self) -> usize {
        self.ba_prices.first().map_or(0, Vec::len)
    }

    /// Number of energy scenarios `W`.
    pub fn n_energy(&self) -> usize {
        self.energy.len()
    }
}

/// Which second-stage participation the optimizer may choose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyMode {
    /// Choose per day-ahead scenario and interval between active balancing
    /// offers and passive deviations.
    ActivePassive,
    /// Force active participation everywhere.
    ActiveOnly,
    /// Force passive participation everywhere.
    PassiveOnly,
}

impl std::fmt::Display for StrategyMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StrategyMode::ActivePassive => "active-passive",
            StrategyMode::ActiveOnly => "active",
            StrategyMode::PassiveOnly => "passive",
        })
    }
}

#[derive(Debug, Error, PartialEq)]
#[error("unknown strategy mode {0:?}, expected active-passive, active, or passive")]
pub struct ParseModeError(String);

impl std::str::FromStr for StrategyMode {
    type Err = ParseModeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "active-passive" => Ok(StrategyMode::ActivePassive),
            "active" => Ok(StrategyMode::ActiveOnly),
            "passive" => Ok(StrategyMode::PassiveOnly),
            other => Err(ParseModeError(other.to_string())),
        }
    }
}

/// One failed validation check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    /// Stable machine-readable identifier of the check.
    pub code: &'static str,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

const PROB_TOL: f64 = 1e-9;

/// Big-M constant for the participation coupling constraints: the largest
/// imbalance or regulation volume any feasible operation can produce.
pub fn big_m(cfg: &VppConfig) -> f64 {
    cfg.renewable.capacity + cfg.thermal.capacity + cfg.storage.charge_max + cfg.storage.discharge_max
}

/// Checks every invariant of the configuration and scenario tree.
///
/// Returns all violations found, empty when the pair is usable. Codes are
/// stable; messages are for humans.
pub fn validate_config(cfg: &VppConfig, tree: &ScenarioTree) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |code: &'static str, message: String| out.push(Violation { code, message });

    if cfg.horizon == 0 {
        push("horizon_zero", "horizon must be at least 1 interval".into());
    }

    let t = &cfg.thermal;
    for (code, v, what) in [
        ("thermal_capacity_invalid", t.capacity, "capacity"),
        ("thermal_min_output_invalid", t.min_output, "min_output"),
        ("thermal_ramp_up_invalid", t.ramp_up, "ramp_up"),
        ("thermal_ramp_down_invalid", t.ramp_down, "ramp_down"),
        ("thermal_marginal_cost_invalid", t.marginal_cost, "marginal_cost"),
        ("thermal_fixed_cost_invalid", t.fixed_cost, "fixed_cost"),
        ("thermal_initial_output_invalid", t.initial_output, "initial_output"),
    ] {
        if v.is_nan() || (v.is_infinite() && what != "ramp_up" && what != "ramp_down") {
            push(code, format!("thermal {what} must be finite, got {v}"));
        }
    }
    if t.min_output < 0.0 {
        push(
            "thermal_min_output_negative",
            format!("thermal min_output must be non-negative, got {}", t.min_output),
        );
    }
    if t.min_output > t.capacity {
        push(
            "thermal_min_above_capacity",
            format!(
                "thermal min_output {} exceeds capacity {}",
                t.min_output, t.capacity
            ),
        );
    }
    if t.ramp_up < 0.0 {
        push(
            "thermal_ramp_up_negative",
            format!("thermal ramp_up must be non-negative, got {}", t.ramp_up),
        );
    }
    if t.ramp_down < 0.0 {
        push(
            "thermal_ramp_down_negative",
            format!("thermal ramp_down must be non-negative, got {}", t.ramp_down),
        );
    }
    if t.marginal_cost < 0.0 {
        push(
            "thermal_marginal_cost_negative",
            format!("thermal marginal_cost must be non-negative, got {}", t.marginal_cost),
        );
    }
    if t.fixed_cost < 0.0 {
        push(
            "thermal_fixed_cost_negative",
            format!("thermal fixed_cost must be non-negative, got {}", t.fixed_cost),
        );
    }
    if t.initial_output < 0.0 || t.initial_output > t.capacity {
        push(
            "thermal_initial_output_range",
            format!(
                "thermal initial_output {} outside [0, {}]",
                t.initial_output, t.capacity
            ),
        );
    }

    let s = &cfg.storage;
    for (code, v, what) in [
        ("storage_level_min_invalid", s.level_min, "level_min"),
        ("storage_level_max_invalid", s.level_max, "level_max"),
        ("storage_charge_max_invalid", s.charge_max, "charge_max"),
        ("storage_discharge_max_invalid", s.discharge_max, "discharge_max"),
        ("storage_efficiency_invalid", s.efficiency, "efficiency"),
        ("storage_initial_level_invalid", s.initial_level, "initial_level"),
    ] {
        if !v.is_finite() {
            push(code, format!("storage {what} must be finite, got {v}"));
        }
    }
    if s.level_min < 0.0 {
        push(
            "storage_level_min_negative",
            format!("storage level_min must be non-negative, got {}", s.level_min),
        );
    }
    if s.level_min > s.level_max {
        push(
            "storage_level_order",
            format!(
                "storage level_min {} exceeds level_max {}",
                s.level_min, s.level_max
            ),
        );
    }
    if s.charge_max < 0.0 {
        push(
            "storage_charge_negative",
            format!("storage charge_max must be non-negative, got {}", s.charge_max),
        );
    }
    if s.discharge_max < 0.0 {
        push(
            "storage_discharge_negative",
            format!(
                "storage discharge_max must be non-negative, got {}",
                s.discharge_max
            ),
        );
    }
    if !(s.efficiency > 0.0 && s.efficiency <= 1.0) {
        push(
            "storage_efficiency_range",
            format!("storage efficiency out of range (0, 1], got {}", s.efficiency),
        );
    }
    if s.initial_level < s.level_min || s.initial_level > s.level_max {
        push(
            "storage_initial_level_range",
            format!(
                "storage initial_level {} outside [{}, {}]",
                s.initial_level, s.level_min, s.level_max
            ),
        );
    }
    if let Some(floor) = s.terminal_level_min {
        if !floor.is_finite() || floor < s.level_min || floor > s.level_max {
            push(
                "storage_terminal_level_range",
                format!(
                    "storage terminal_level_min {} outside [{}, {}]",
                    floor, s.level_min, s.level_max
                ),
            );
        }
    }

    if !cfg.renewable.capacity.is_finite() || cfg.renewable.capacity < 0.0 {
        push(
            "renewable_capacity_invalid",
            format!(
                "renewable capacity must be finite and non-negative, got {}",
                cfg.renewable.capacity
            ),
        );
    }

    validate_tree(cfg, tree, &mut push);
    out
}

fn validate_tree(
    cfg: &VppConfig,
    tree: &ScenarioTree,
    push: &mut impl FnMut(&'static str, String),
) {
    let k = cfg.horizon;
    let n_da = tree.da_prices.len();
    let n_ba = tree.n_ba();
    let n_en = tree.energy.len();

    if n_da == 0 {
        push("tree_da_empty", "at least one day-ahead scenario required".into());
    }
    if n_ba == 0 {
        push("tree_ba_empty", "at least one balancing scenario required".into());
    }
    if n_en == 0 {
        push("tree_energy_empty", "at least one energy scenario required".into());
    }

    if tree.da_prob.len() != n_da {
        push(
            "tree_da_shape",
            format!(
                "da_prob has {} entries for {} day-ahead scenarios",
                tree.da_prob.len(),
                n_da
            ),
        );
    }
    for (i, path) in tree.da_prices.iter().enumerate() {
        if path.len() != k {
            push(
                "tree_da_shape",
                format!(
                    "da_prices[{i}] has {} intervals, horizon is {k}",
                    path.len()
                ),
            );
        }
        if path.iter().any(|p| !p.is_finite()) {
            push("tree_price_invalid", format!("da_prices[{i}] contains a non-finite price"));
        }
    }

    if tree.ba_prices.len() != n_da {
        push(
            "tree_ba_shape",
            format!(
                "ba_prices has {} day-ahead branches for {} day-ahead scenarios",
                tree.ba_prices.len(),
                n_da
            ),
        );
    }
    if tree.ba_prob.len() != n_da {
        push(
            "tree_ba_shape",
            format!(
                "ba_prob has {} day-ahead branches for {} day-ahead scenarios",
                tree.ba_prob.len(),
                n_da
            ),
        );
    }
    for (i, branch) in tree.ba_prices.iter().enumerate() {
        if branch.len() != n_ba {
            push(
                "tree_ba_shape",
                format!(
                    "ba_prices[{i}] has {} scenarios, expected {n_ba} in every branch",
                    branch.len()
                ),
            );
            continue;
        }
        for (j, path) in branch.iter().enumerate() {
            if path.len() != k {
                push(
                    "tree_ba_shape",
                    format!(
                        "ba_prices[{i}][{j}] has {} intervals, horizon is {k}",
                        path.len()
                    ),
                );
            }
            if path.iter().any(|p| !p.is_finite()) {
                push(
                    "tree_price_invalid",
                    format!("ba_prices[{i}][{j}] contains a non-finite price"),
                );
            }
        }
    }
    for (i, probs) in tree.ba_prob.iter().enumerate() {
        if probs.len() != n_ba {
            push(
                "tree_ba_shape",
                format!(
                    "ba_prob[{i}] has {} entries, expected {n_ba}",
                    probs.len()
                ),
            );
        }
    }

    if tree.energy_prob.len() != n_en {
        push(
            "tree_energy_shape",
            format!(
                "energy_prob has {} entries for {} energy scenarios",
                tree.energy_prob.len(),
                n_en
            ),
        );
    }
    for (w, path) in tree.energy.iter().enumerate() {
        if path.len() != k {
            push(
                "tree_energy_shape",
                format!("energy[{w}] has {} intervals, horizon is {k}", path.len()),
            );
        }
        for (kk, &e) in path.iter().enumerate() {
            if !e.is_finite() || e < 0.0 || e > cfg.renewable.capacity {
                push(
                    "tree_energy_range",
                    format!(
                        "energy[{w}][{kk}] = {e} outside [0, {}]",
                        cfg.renewable.capacity
                    ),
                );
            }
        }
    }

    check_probs(&tree.da_prob, "day-ahead", "tree_da_prob", push);
    for (i, probs) in tree.ba_prob.iter().enumerate() {
        check_probs(probs, &format!("balancing (branch {i})"), "tree_ba_prob", push);
    }
    check_probs(&tree.energy_prob, "energy", "tree_energy_prob", push);
}

fn check_probs(
    probs: &[f64],
    what: &str,
    code_prefix: &'static str,
    push: &mut impl FnMut(&'static str, String),
) {
    if probs.is_empty() {
        return;
    }
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
        let code = match code_prefix {
            "tree_da_prob" => "tree_da_prob_negative",
            "tree_ba_prob" => "tree_ba_prob_negative",
            _ => "tree_energy_prob_negative",
        };
        push(code, format!("{what} probabilities must be non-negative"));
        return;
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > PROB_TOL {
        let code = match code_prefix {
            "tree_da_prob" => "tree_da_prob_sum",
            "tree_ba_prob" => "tree_ba_prob_sum",
            _ => "tree_energy_prob_sum",
        };
        push(
            code,
            format!("{what} probabilities do not sum to 1 (sum = {sum})"),
        );
    }
}

/// Raw JSON shapes with optional fields, resolved into the public types.
mod raw {
    use super::*;

    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    pub(super) struct Storage {
        pub level_min: f64,
        pub level_max: f64,
        pub charge_max: f64,
        pub discharge_max: f64,
        pub efficiency: f64,
        pub initial_level: Option<f64>,
        #[serde(default)]
        pub terminal_level_min: Option<f64>,
    }

    #[derive(Deserialize)]
    pub(super) struct Config {
        pub thermal: Option<ThermalUnit>,
        pub storage: Option<Storage>,
        pub renewable: RenewableUnit,
        pub horizon: usize,
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl VppConfig {
    /// Parses the asset part of a config document. Missing `thermal` or
    /// `storage` sections become zero-capacity units; a missing storage
    /// `initial_level` defaults to `level_min`.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let raw: raw::Config = serde_json::from_str(text)?;
        let storage = match raw.storage {
            Some(s) => StorageUnit {
                level_min: s.level_min,
                level_max: s.level_max,
                charge_max: s.charge_max,
                discharge_max: s.discharge_max,
                efficiency: s.efficiency,
                initial_level: s.initial_level.unwrap_or(s.level_min),
                terminal_level_min: s.terminal_level_min,
            },
            None => StorageUnit::none(),
        };
        Ok(VppConfig {
            thermal: raw.thermal.unwrap_or_else(ThermalUnit::none),
            storage,
            renewable: raw.renewable,
            horizon: raw.horizon,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn small_config() -> (VppConfig, ScenarioTree) {
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

    #[test]
    fn small_example_is_valid() {
        let (cfg, tree) = small_config();
        assert_eq!(validate_config(&cfg, &tree), Vec::new());
    }

    #[test]
    fn big_m_sums_all_capacities() {
        let (cfg, _) = small_config();
        assert_eq!(big_m(&cfg), 65.0);
        let case_study = VppConfig {
            thermal: ThermalUnit {
                capacity: 70.0,
                min_output: 0.0,
                ramp_up: 30.0,
                ramp_down: 30.0,
                marginal_cost: 45.0,
                fixed_cost: 0.0,
                initial_output: 0.0,
            },
            storage: StorageUnit {
                level_min: 0.0,
                level_max: 80.0,
                charge_max: 30.0,
                discharge_max: 30.0,
                efficiency: 0.81,
                initial_level: 0.0,
                terminal_level_min: None,
            },
            renewable: RenewableUnit { capacity: 50.0 },
            horizon: 24,
        };
        assert_eq!(big_m(&case_study), 180.0);
    }

    #[test]
    fn zero_efficiency_is_flagged() {
        let (mut cfg, tree) = small_config();
        cfg.storage.efficiency = 0.0;
        let v = validate_config(&cfg, &tree);
        assert!(v.iter().any(|v| v.code == "storage_efficiency_range"));
        assert!(v.iter().any(|v| v.message.contains("efficiency out of range")));
    }

    #[test]
    fn bad_probability_sum_is_flagged() {
        let (cfg, mut tree) = small_config();
        tree.da_prob = vec![0.6];
        tree.da_prices = vec![vec![25.0, 29.0]];
        let v = validate_config(&cfg, &tree);
        assert!(v.iter().any(|v| v.code == "tree_da_prob_sum"));
        assert!(v
            .iter()
            .any(|v| v.message.contains("do not sum to 1")));
    }

    #[test]
    fn probability_sum_within_tolerance_passes() {
        let (cfg, mut tree) = small_config();
        tree.energy_prob = vec![0.5 + 4e-10, 0.5 - 4e-10];
        assert_eq!(validate_config(&cfg, &tree), Vec::new());
    }

    #[test]
    fn energy_above_capacity_is_flagged() {
        let (cfg, mut tree) = small_config();
        tree.energy[0][1] = 41.0;
        let v = validate_config(&cfg, &tree);
        assert!(v.iter().any(|v| v.code == "tree_energy_range"));
    }

    #[test]
    fn min_output_above_capacity_is_flagged() {
        let (mut cfg, tree) = small_config();
        cfg.thermal.min_output = 30.0;
        let v = validate_config(&cfg, &tree);
        assert!(v.iter().any(|v| v.code == "thermal_min_above_capacity"));
    }

    #[test]
    fn ragged_balancing_branches_are_flagged() {
        let (cfg, mut tree) = small_config();
        tree.ba_prices = vec![vec![vec![26.0, 19.0]]];
        tree.ba_prob = vec![vec![1.0]];
        let mut with_two = tree.clone();
        with_two.ba_prices = vec![vec![vec![26.0, 19.0], vec![23.0, 37.0]]];
        with_two.ba_prob = vec![vec![0.5, 0.5]];
        assert_eq!(validate_config(&cfg, &with_two), Vec::new());
        assert_eq!(validate_config(&cfg, &tree), Vec::new());
        // Mismatched horizon inside a branch.
        tree.ba_prices = vec![vec![vec![26.0]]];
        let v = validate_config(&cfg, &tree);
        assert!(v.iter().any(|v| v.code == "tree_ba_shape"));
    }

    #[test]
    fn zero_horizon_is_flagged() {
        let (mut cfg, mut tree) = small_config();
        cfg.horizon = 0;
        tree.da_prices = vec![vec![]];
        tree.ba_prices = vec![vec![vec![], vec![]]];
        tree.energy = vec![vec![], vec![]];
        let v = validate_config(&cfg, &tree);
        assert!(v.iter().any(|v| v.code == "horizon_zero"));
    }

    #[test]
    fn config_json_applies_defaults() {
        let text = r#"{
            "horizon": 4,
            "renewable": {"capacity": 10.0},
            "storage": {
                "level_min": 2.0, "level_max": 8.0,
                "charge_max": 3.0, "discharge_max": 3.0,
                "efficiency": 0.9
            }
        }"#;
        let cfg = VppConfig::from_json(text).unwrap();
        assert_eq!(cfg.storage.initial_level, 2.0);
        assert_eq!(cfg.thermal, ThermalUnit::none());
        assert_eq!(cfg.storage.terminal_level_min, None);
    }

    #[test]
    fn mode_round_trips_through_strings() {
        for mode in [
            StrategyMode::ActivePassive,
            StrategyMode::ActiveOnly,
            StrategyMode::PassiveOnly,
        ] {
            let s = mode.to_string();
            assert_eq!(s.parse::<StrategyMode>().unwrap(), mode);
        }
        assert!("both".parse::<StrategyMode>().is_err());
    }
}
