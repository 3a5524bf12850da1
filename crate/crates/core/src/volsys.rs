//! The volatility-stop trend-following state machine.
//!
//! The system trails a stop-and-reverse level behind the most favorable
//! close since entry (the significant close, SIC) at a distance of
//! `multiplier * ATR` (the average range constant, ARC). A close touching or
//! crossing the stop closes the trade at that close and opens the reverse
//! position at the same price. An optional per-bar gate restricts where new
//! positions may be opened; stops on an open position are always honored.

use crate::error::{Error, Result};
use crate::market_data::BarSeries;
use crate::wilder::{self, IndicatorSeries, WilderParams};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Trade direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Long,
    Short,
}

impl Direction {
    pub fn opposite(self) -> Self {
        match self {
            Direction::Long => Direction::Short,
            Direction::Short => Direction::Long,
        }
    }

    /// +1 for long, -1 for short.
    pub fn sign(self) -> f64 {
        match self {
            Direction::Long => 1.0,
            Direction::Short => -1.0,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Direction::Long => write!(f, "long"),
            Direction::Short => write!(f, "short"),
        }
    }
}

/// How the first position is chosen once the ATR is warm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialDirection {
    Long,
    Short,
    /// Sign of the most recent close-to-close change at the entry bar;
    /// ties (and a missing previous close) go long.
    #[default]
    Auto,
}

/// Per-bar position state as recorded in the result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PositionState {
    Long,
    Short,
    Flat,
}

impl fmt::Display for PositionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PositionState::Long => write!(f, "long"),
            PositionState::Short => write!(f, "short"),
            PositionState::Flat => write!(f, "flat"),
        }
    }
}

/// Parameters of one system run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolSysParams {
    /// Stop distance in ATR units (ARC = multiplier * ATR). Wilder's own
    /// suggestion is 3.
    pub multiplier: f64,
    pub atr_params: WilderParams,
    pub initial_direction: InitialDirection,
}

impl Default for VolSysParams {
    fn default() -> Self {
        VolSysParams {
            multiplier: 3.0,
            atr_params: WilderParams::default(),
            initial_direction: InitialDirection::Auto,
        }
    }
}

impl VolSysParams {
    pub fn new(multiplier: f64, atr_params: WilderParams) -> Result<Self> {
        if !(multiplier > 0.0) || !multiplier.is_finite() {
            return Err(Error::InvalidParams(format!(
                "stop multiplier must be positive and finite, got {multiplier}"
            )));
        }
        Ok(VolSysParams {
            multiplier,
            atr_params,
            initial_direction: InitialDirection::Auto,
        })
    }

    pub fn with_initial_direction(mut self, initial: InitialDirection) -> Self {
        self.initial_direction = initial;
        self
    }

    pub fn with_multiplier(mut self, multiplier: f64) -> Self {
        self.multiplier = multiplier;
        self
    }
}

/// Live state of the machine while a position is open.
///
/// While long: sar = sic - arc and sic is the highest close since entry;
/// while short: sar = sic + arc and sic is the lowest close since entry.
/// `arc` can be zero only while volatility itself is zero (a fresh wire
/// series), in which case the stop is considered unarmed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolSysState {
    pub position: Direction,
    pub sic: f64,
    pub sar: f64,
    pub arc: f64,
}

/// A closed round trip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trade {
    pub direction: Direction,
    pub entry_index: usize,
    pub entry_price: f64,
    pub exit_index: usize,
    pub exit_price: f64,
    /// Direction-signed exit - entry, in price points.
    pub pnl_points: f64,
}

/// The position still open when the series ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpenPosition {
    pub direction: Direction,
    pub entry_index: usize,
    pub entry_price: f64,
    /// Direction-signed mark-to-market against the final close.
    pub mark_pnl_points: f64,
}

/// Everything a system run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct BacktestResult {
    pub trades: Vec<Trade>,
    pub open_position: Option<OpenPosition>,
    /// Sum of closed-trade P&L in points.
    pub realized_pnl_points: f64,
    /// Realized plus open-position mark-to-market at the final close.
    pub total_pnl_points: f64,
    /// Entry price of the very first position, the unit for normalized P&L.
    pub first_entry_price: Option<f64>,
    /// Significant close of the active position, undefined while flat.
    pub sic_series: IndicatorSeries,
    /// Stop-and-reverse level of the active position, undefined while flat.
    pub sar_series: IndicatorSeries,
    /// ATR series the run was driven by.
    pub atr_series: IndicatorSeries,
    pub position_series: Vec<PositionState>,
    /// Final machine state if a position is still open.
    pub final_state: Option<VolSysState>,
}

impl BacktestResult {
    /// Total P&L divided by the first entry price; 0 when no trade was ever
    /// opened. Comparable across symbols at different price levels.
    pub fn total_pnl_norm(&self) -> f64 {
        match self.first_entry_price {
            Some(p) => self.total_pnl_points / p,
            None => 0.0,
        }
    }

    /// Trade ledger as CSV: direction,entry_index,entry_price,exit_index,exit_price,pnl_points.
    pub fn trades_csv(&self) -> String {
        let mut out = String::from("direction,entry_index,entry_price,exit_index,exit_price,pnl_points\n");
        for t in &self.trades {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                t.direction, t.entry_index, t.entry_price, t.exit_index, t.exit_price, t.pnl_points
            ));
        }
        out
    }
}

struct OpenState {
    direction: Direction,
    entry_index: usize,
    entry_price: f64,
    sic: f64,
}

impl OpenState {
    fn open(direction: Direction, index: usize, price: f64) -> Self {
        OpenState {
            direction,
            entry_index: index,
            entry_price: price,
            sic: price,
        }
    }

    fn sar(&self, arc: f64) -> f64 {
        match self.direction {
            Direction::Long => self.sic - arc,
            Direction::Short => self.sic + arc,
        }
    }

    fn update_sic(&mut self, close: f64) {
        self.sic = match self.direction {
            Direction::Long => self.sic.max(close),
            Direction::Short => self.sic.min(close),
        };
    }

    fn stopped(&self, close: f64, sar: f64) -> bool {
        match self.direction {
            Direction::Long => close <= sar,
            Direction::Short => close >= sar,
        }
    }
}

fn initial_direction(choice: InitialDirection, closes: &[f64], t: usize) -> Direction {
    match choice {
        InitialDirection::Long => Direction::Long,
        InitialDirection::Short => Direction::Short,
        InitialDirection::Auto => {
            if t == 0 {
                Direction::Long
            } else if closes[t] < closes[t - 1] {
                Direction::Short
            } else {
                Direction::Long
            }
        }
    }
}

/// Runs the volatility system over a series.
///
/// The machine starts at the first bar with a defined ATR. On every later
/// bar it refreshes the SIC with the current close, recomputes the stop from
/// the current ATR, and flips position when the close touches or crosses the
/// stop, executing both legs at that bar's close.
///
/// `gate`, when given, must align 1:1 with the bars. Positions are only
/// opened on gate-true bars; a stop hit on a gate-false bar closes the trade
/// and the machine waits flat, carrying the pending reverse direction until
/// the gate reopens.
pub fn run(
    series: &BarSeries,
    params: &VolSysParams,
    gate: Option<&[bool]>,
) -> Result<BacktestResult> {
    if !(params.multiplier > 0.0) || !params.multiplier.is_finite() {
        return Err(Error::InvalidParams(format!(
            "stop multiplier must be positive and finite, got {}",
            params.multiplier
        )));
    }
    if let Some(g) = gate {
        if g.len() != series.len() {
            return Err(Error::InvalidParams(format!(
                "gate length {} does not match series length {}",
                g.len(),
                series.len()
            )));
        }
    }

    let atr = wilder::atr(series, &params.atr_params)?;
    let len = series.len();
    let closes = series.closes();
    let warm = atr
        .first_defined_index()
        .expect("ATR defined for validated length");

    let mut sic = vec![None; len];
    let mut sar = vec![None; len];
    let mut positions = vec![PositionState::Flat; len];
    let mut trades = Vec::new();
    let mut realized = 0.0;
    let mut first_entry_price = None;
    let mut open: Option<OpenState> = None;
    let mut pending: Option<Direction> = None;

    for t in warm..len {
        let arc = params.multiplier * atr.get(t).unwrap();
        let allowed = gate.map_or(true, |g| g[t]);
        let close = closes[t];

        match open.as_mut() {
            None => {
                if allowed {
                    let dir = pending
                        .take()
                        .unwrap_or_else(|| initial_direction(params.initial_direction, &closes, t));
                    first_entry_price.get_or_insert(close);
                    open = Some(OpenState::open(dir, t, close));
                }
            }
            Some(state) => {
                state.update_sic(close);
                let stop = state.sar(arc);
                // A zero-width band means no volatility scale exists yet;
                // the stop is unarmed rather than instantly triggered.
                if arc > 0.0 && state.stopped(close, stop) {
                    let pnl = state.direction.sign() * (close - state.entry_price);
                    trades.push(Trade {
                        direction: state.direction,
                        entry_index: state.entry_index,
                        entry_price: state.entry_price,
                        exit_index: t,
                        exit_price: close,
                        pnl_points: pnl,
                    });
                    realized += pnl;
                    let reverse = state.direction.opposite();
                    if allowed {
                        open = Some(OpenState::open(reverse, t, close));
                    } else {
                        open = None;
                        pending = Some(reverse);
                    }
                }
            }
        }

        if let Some(state) = &open {
            let arc_now = params.multiplier * atr.get(t).unwrap();
            sic[t] = Some(state.sic);
            sar[t] = Some(state.sar(arc_now));
            positions[t] = match state.direction {
                Direction::Long => PositionState::Long,
                Direction::Short => PositionState::Short,
            };
        }
    }

    let last_close = closes[len - 1];
    let open_position = open.as_ref().map(|state| OpenPosition {
        direction: state.direction,
        entry_index: state.entry_index,
        entry_price: state.entry_price,
        mark_pnl_points: state.direction.sign() * (last_close - state.entry_price),
    });
    let final_state = open.as_ref().map(|state| VolSysState {
        position: state.direction,
        sic: state.sic,
        sar: state.sar(params.multiplier * atr.get(len - 1).unwrap()),
        arc: params.multiplier * atr.get(len - 1).unwrap(),
    });
    let total = realized + open_position.map_or(0.0, |o| o.mark_pnl_points);

    Ok(BacktestResult {
        trades,
        open_position,
        realized_pnl_points: realized,
        total_pnl_points: total,
        first_entry_price,
        sic_series: IndicatorSeries::from_options(sic),
        sar_series: IndicatorSeries::from_options(sar),
        atr_series: atr,
        position_series: positions,
        final_state,
    })
}
