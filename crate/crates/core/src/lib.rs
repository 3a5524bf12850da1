//! Trend-following research toolkit built around Wilder's volatility-stop
//! system and windowed signal/noise power ratios.
//!
//! The pipeline runs in layers:
//!
//! - [`market_data`]: OHLC bars, CSV ingestion and synthetic test signals.
//! - [`wilder`]: True Range, ATR and the DX/ADX/ADXR directional family.
//! - [`volsys`]: the stop-and-reverse state machine producing trades, P&L
//!   and the significant-close series.
//! - [`power`]: windowed power of the moving average (signal) and of the
//!   deviation from it (noise), scaled by the stop-loss threshold into the
//!   two power ratios.
//! - [`backtest`]: multiplier sweeps, power-ratio gating, MA-range sweeps
//!   and multi-symbol universe runs.
//! - [`stats`]: simple least-squares regression for ranking indicators
//!   against P&L.

pub mod backtest;
pub mod error;
pub mod market_data;
pub mod power;
pub mod stats;
pub mod volsys;
pub mod wilder;

pub use error::{Error, Result};
