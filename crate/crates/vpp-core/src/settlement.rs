//! Settlement rules and post-processing of a solved strategy.
//!
//! The imbalance mechanism is dual-priced: surplus energy earns the lower of
//! the day-ahead and balancing prices, shortage pays the higher. Offer
//! curves aggregate per-scenario decisions into the stepwise bid curves a
//! market operator would receive, and [`realized_profits`] replays one
//! scenario path through the cash flows, which lets tests reconcile the
//! probability-weighted sum of path profits with the solver objective.

use crate::market_model::{ScenarioTree, VppConfig};
use crate::offer_optimizer::{PathDecisions, StrategySolution, PRICE_TIE_TOL};
use thiserror::Error;

/// Deviations larger than this between offered and produced energy fail
/// settlement.
pub const BALANCE_TOL: f64 = 1e-6;
/// Tied prices must carry quantities equal within this tolerance.
pub const TIE_QUANTITY_TOL: f64 = 1e-6;

/// Prices applied to imbalances in one interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImbalancePrices {
    /// Paid to the producer per MWh of surplus.
    pub plus: f64,
    /// Charged to the producer per MWh of shortage.
    pub minus: f64,
}

/// Dual imbalance pricing: surplus at the worse of the two prices for the
/// producer, shortage at the worse as well.
pub fn imbalance_prices(da_price: f64, ba_price: f64) -> ImbalancePrices {
    ImbalancePrices {
        plus: da_price.min(ba_price),
        minus: da_price.max(ba_price),
    }
}

/// Which market an offer curve belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Market {
    DayAhead,
    RegUp,
    RegDown,
}

impl std::fmt::Display for Market {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Market::DayAhead => "day-ahead",
            Market::RegUp => "reg-up",
            Market::RegDown => "reg-down",
        })
    }
}

/// One step of an offer curve: at clearing price `price` the total accepted
/// quantity is `quantity`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OfferStep {
    pub price: f64,
    pub quantity: f64,
}

/// Stepwise offer curve for one market and delivery interval.
#[derive(Debug, Clone, PartialEq)]
pub struct OfferCurve {
    pub market: Market,
    /// Delivery interval, zero-based.
    pub interval: usize,
    /// Steps sorted by strictly increasing price.
    pub steps: Vec<OfferStep>,
}

#[derive(Debug, Error)]
pub enum SettlementError {
    #[error(
        "{market} curve, interval {interval}: price {price} is offered twice with different quantities ({first} vs {second})"
    )]
    TiedPriceMismatch {
        market: Market,
        interval: usize,
        price: f64,
        first: f64,
        second: f64,
    },
    #[error("{market} curve, interval {interval}: quantities are not monotone in price near {price}")]
    NotMonotone {
        market: Market,
        interval: usize,
        price: f64,
    },
    #[error("interval {interval}: offered and produced energy differ by {residual}")]
    Imbalance { interval: usize, residual: f64 },
}

/// Aggregates per-scenario `(price, quantity)` pairs into an offer curve.
///
/// Prices within [`PRICE_TIE_TOL`] collapse into one step and must agree on
/// quantity. Sell-side curves (day-ahead, up-regulation) must be
/// non-decreasing in price, buy-side curves (down-regulation)
/// non-increasing.
pub fn build_offer_curve(
    market: Market,
    interval: usize,
    pairs: &[(f64, f64)],
) -> Result<OfferCurve, SettlementError> {
    let mut sorted: Vec<(f64, f64)> = pairs.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut steps: Vec<OfferStep> = Vec::new();
    for &(price, quantity) in &sorted {
        match steps.last() {
            Some(last) if (price - last.price).abs() <= PRICE_TIE_TOL => {
                if (quantity - last.quantity).abs() > TIE_QUANTITY_TOL {
                    return Err(SettlementError::TiedPriceMismatch {
                        market,
                        interval,
                        price,
                        first: last.quantity,
                        second: quantity,
                    });
                }
            }
            _ => steps.push(OfferStep { price, quantity }),
        }
    }
    for w in steps.windows(2) {
        let ok = match market {
            Market::DayAhead | Market::RegUp => w[1].quantity >= w[0].quantity - TIE_QUANTITY_TOL,
            Market::RegDown => w[1].quantity <= w[0].quantity + TIE_QUANTITY_TOL,
        };
        if !ok {
            return Err(SettlementError::NotMonotone {
                market,
                interval,
                price: w[1].price,
            });
        }
    }
    Ok(OfferCurve { market, interval, steps })
}

/// Quantity accepted from a curve at a realized clearing price.
///
/// Sell-side curves accept every step priced at or below the clearing
/// price; buy-side curves accept the step at the lowest price still at or
/// above it.
pub fn dispatch_from_curve(curve: &OfferCurve, realized_price: f64) -> f64 {
    match curve.market {
        Market::DayAhead | Market::RegUp => curve
            .steps
            .iter()
            .rev()
            .find(|s| s.price <= realized_price + PRICE_TIE_TOL)
            .map_or(0.0, |s| s.quantity),
        Market::RegDown => curve
            .steps
            .iter()
            .find(|s| s.price >= realized_price - PRICE_TIE_TOL)
            .map_or(0.0, |s| s.quantity),
    }
}

/// Day-ahead offer curves, one per interval, built across price scenarios.
pub fn day_ahead_curves(
    tree: &ScenarioTree,
    sol: &StrategySolution,
) -> Result<Vec<OfferCurve>, SettlementError> {
    (0..tree.da_prices[0].len())
        .map(|k| {
            let pairs: Vec<(f64, f64)> = (0..tree.n_da())
                .map(|i| (tree.da_prices[i][k], sol.day_ahead[i][k]))
                .collect();
            build_offer_curve(Market::DayAhead, k, &pairs)
        })
        .collect()
}

/// Regulation offer curves for one day-ahead scenario: for each interval an
/// up-regulation curve followed by a down-regulation curve.
pub fn regulation_curves(
    tree: &ScenarioTree,
    sol: &StrategySolution,
    i: usize,
) -> Result<Vec<OfferCurve>, SettlementError> {
    let horizon = tree.da_prices[i].len();
    let mut out = Vec::with_capacity(2 * horizon);
    for k in 0..horizon {
        let up: Vec<(f64, f64)> = (0..tree.n_ba())
            .map(|j| (tree.ba_prices[i][j][k], sol.reg_up[i][j][k]))
            .collect();
        out.push(build_offer_curve(Market::RegUp, k, &up)?);
        let down: Vec<(f64, f64)> = (0..tree.n_ba())
            .map(|j| (tree.ba_prices[i][j][k], sol.reg_down[i][j][k]))
            .collect();
        out.push(build_offer_curve(Market::RegDown, k, &down)?);
    }
    Ok(out)
}

/// Probability of active participation per interval: the probability mass
/// of the day-ahead scenarios that choose the active side.
pub fn active_probability(tree: &ScenarioTree, sol: &StrategySolution) -> Vec<f64> {
    let horizon = tree.da_prices.first().map_or(0, Vec::len);
    (0..horizon)
        .map(|k| {
            (0..tree.n_da())
                .map(|i| tree.da_prob[i] * sol.active[i][k])
                .sum()
        })
        .collect()
}

/// Replays one scenario path through the settlement cash flows.
///
/// Checks the energy balance in every interval, then returns the per-interval
/// profit: day-ahead revenue, regulation revenue, dual-priced imbalances,
/// minus operating costs.
pub fn realized_profits(
    cfg: &VppConfig,
    path: &PathDecisions,
    da_prices: &[f64],
    ba_prices: &[f64],
) -> Result<Vec<f64>, SettlementError> {
    let mut out = Vec::with_capacity(da_prices.len());
    for k in 0..da_prices.len() {
        let residual = path.day_ahead[k] + path.reg_up[k] - path.reg_down[k] + path.dev_plus[k]
            - path.dev_minus[k]
            - path.energy[k]
            - path.thermal[k]
            - path.discharge[k]
            + path.charge[k];
        if residual.abs() > BALANCE_TOL {
            return Err(SettlementError::Imbalance { interval: k, residual });
        }
        let prices = imbalance_prices(da_prices[k], ba_prices[k]);
        let profit = da_prices[k] * path.day_ahead[k]
            + ba_prices[k] * (path.reg_up[k] - path.reg_down[k])
            + prices.plus * path.dev_plus[k]
            - prices.minus * path.dev_minus[k]
            - cfg.thermal.marginal_cost * path.thermal[k]
            - cfg.thermal.fixed_cost * path.commit[k];
        out.push(profit);
    }
    Ok(out)
}

/// Probability-weighted sum of realized path profits over the whole tree.
///
/// For a solution extracted from the optimizer this reproduces the solver
/// objective, which makes it a useful independent accounting check.
pub fn expected_profit(
    cfg: &VppConfig,
    tree: &ScenarioTree,
    sol: &StrategySolution,
) -> Result<f64, SettlementError> {
    let mut total = 0.0;
    for i in 0..tree.n_da() {
        for j in 0..tree.n_ba() {
            for w in 0..tree.n_energy() {
                let weight = tree.da_prob[i] * tree.ba_prob[i][j] * tree.energy_prob[w];
                if weight == 0.0 {
                    continue;
                }
                let path = sol.path(tree, i, j, w);
                let profits =
                    realized_profits(cfg, &path, &tree.da_prices[i], &tree.ba_prices[i][j])?;
                total += weight * profits.iter().sum::<f64>();
            }
        }
    }
    Ok(total)
}
