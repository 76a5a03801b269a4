//! Offering strategies for a virtual power plant trading across sequential
//! electricity markets.
//!
//! The crate is organized along the data flow:
//!
//! * [`market_model`] defines the portfolio (thermal, storage, renewable),
//!   the scenario tree and input validation.
//! * [`scenario_engine`] turns probabilistic forecasts into weighted
//!   scenario sets and reduces them to tractable sizes.
//! * [`offer_optimizer`] assembles and solves the three-stage stochastic
//!   offering problem, choosing per interval between active balancing
//!   participation and passive imbalance settlement.
//! * [`settlement`] post-processes a solved strategy into offer curves,
//!   participation probabilities and settled cash flows.

pub mod market_model;
pub mod offer_optimizer;
pub mod scenario_engine;
pub mod settlement;

pub use market_model::{
    big_m, validate_config, ConfigError, ParseModeError, RenewableUnit, ScenarioTree, StorageUnit,
    StrategyMode, ThermalUnit, Violation, VppConfig,
};
pub use offer_optimizer::{
    build_model, eliminate_redundant_binaries, extract_solution, regulation_direction,
    solve_offering, IntervalDecomposition, ModelMap, OfferError, OfferModel, PathDecisions,
    RegulationDirection, SolveOutcome, StrategySolution, VariableIndex,
};
pub use scenario_engine::{
    build_covariance, cholesky, read_forecast_csv, read_trajectories_csv, reduce_scenarios,
    sample_trajectories, write_forecast_csv, write_trajectories_csv, ProbabilisticForecast,
    ScenarioError, TrajectorySet,
};
pub use settlement::{
    active_probability, build_offer_curve, day_ahead_curves, dispatch_from_curve, expected_profit,
    imbalance_prices, realized_profits, regulation_curves, ImbalancePrices, Market, OfferCurve,
    OfferStep, SettlementError,
};
