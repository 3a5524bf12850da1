//! Windowed power of a price signal, split into signal and noise components
//! and scaled by the stop-loss threshold.
//!
//! For a trailing window of N bars starting at price `base`, the power of a
//! value sequence is the mean of squared `value / base`. Applied to the
//! moving average this yields the signal power; applied to the deviation of
//! price from the moving average, the noise power. The threshold power
//! `(ATR / SIC)^2` expresses the stop-loss range in the same units, and the
//! two ratios
//!
//! - `r_signal = sqrt(max(power_signal - 1, 0) / power_threshold)`
//! - `r_noise  = sqrt(power_noise / power_threshold)`
//!
//! read as equivalent multiples of the stop-loss range.

use crate::error::{Error, Result};
use crate::market_data::BarSeries;
use crate::volsys::BacktestResult;
use crate::wilder::IndicatorSeries;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Window configuration for the power pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PowerParams {
    /// Power window N (e.g. 30, 50, 100 bars).
    pub window: usize,
    /// Moving-average range; defaults to the power window.
    pub ma_window: usize,
}

impl PowerParams {
    pub fn new(window: usize) -> Result<Self> {
        if window < 2 {
            return Err(Error::InvalidParams(
                "power window must be at least 2".into(),
            ));
        }
        Ok(PowerParams {
            window,
            ma_window: window,
        })
    }

    pub fn with_ma_window(mut self, ma_window: usize) -> Result<Self> {
        if ma_window < 1 {
            return Err(Error::InvalidParams(
                "moving-average window must be at least 1".into(),
            ));
        }
        self.ma_window = ma_window;
        Ok(self)
    }
}

/// Per-bar annotations on a power report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BarFlags {
    /// The threshold power was zero (zero ATR); ratios are reported as 0.
    pub degenerate_threshold: bool,
    /// The signal power sat below 1; its excess was clamped to 0 before the
    /// square root.
    pub clamped_signal: bool,
}

impl BarFlags {
    pub fn is_empty(&self) -> bool {
        !self.degenerate_threshold && !self.clamped_signal
    }
}

impl fmt::Display for BarFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.degenerate_threshold, self.clamped_signal) {
            (false, false) => Ok(()),
            (true, false) => write!(f, "degenerate"),
            (false, true) => write!(f, "clamped"),
            (true, true) => write!(f, "degenerate|clamped"),
        }
    }
}

/// Aligned per-bar power quantities for one window configuration.
///
/// Every column is undefined until all of its ingredients are defined; with
/// ATR warm-up W, MA window M and power window N, the ratio columns start at
/// index (W-1) + (M-1) + (N-1).
#[derive(Debug, Clone, PartialEq)]
pub struct PowerReport {
    pub params: PowerParams,
    pub ma: IndicatorSeries,
    pub power_signal: IndicatorSeries,
    pub power_noise: IndicatorSeries,
    pub power_threshold: IndicatorSeries,
    pub r_signal: IndicatorSeries,
    pub r_noise: IndicatorSeries,
    pub flags: Vec<BarFlags>,
}

impl PowerReport {
    /// First index where both ratios are defined.
    pub fn first_defined_index(&self) -> Option<usize> {
        self.r_signal.first_defined_index()
    }

    /// Report as CSV: index,date,close,ma,power_signal,power_noise,power_threshold,r_signal,r_noise,flags.
    pub fn to_csv(&self, series: &BarSeries) -> String {
        let mut out = String::from(
            "index,date,close,ma,power_signal,power_noise,power_threshold,r_signal,r_noise,flags\n",
        );
        let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for (i, bar) in series.bars().iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                i,
                bar.timestamp,
                bar.close,
                cell(self.ma.get(i)),
                cell(self.power_signal.get(i)),
                cell(self.power_noise.get(i)),
                cell(self.power_threshold.get(i)),
                cell(self.r_signal.get(i)),
                cell(self.r_noise.get(i)),
                self.flags[i],
            ));
        }
        out
    }
}

/// Simple trailing moving average over `window` closes, defined from index
/// `window - 1`.
pub fn moving_average(closes: &[f64], window: usize) -> Result<IndicatorSeries> {
    if window == 0 {
        return Err(Error::InvalidParams(
            "moving-average window must be at least 1".into(),
        ));
    }
    if closes.len() < window {
        return Err(Error::TooShort {
            what: "moving average",
            needed: window,
            got: closes.len(),
        });
    }
    let mut values = vec![None; closes.len()];
    for t in window - 1..closes.len() {
        let sum: f64 = closes[t + 1 - window..=t].iter().sum();
        values[t] = Some(sum / window as f64);
    }
    Ok(IndicatorSeries::from_options(values))
}

/// Mean of squared `value / base` over one window of values.
///
/// With the full series as the window this is the whole-signal power; the
/// sliding pipeline applies it per trailing window, normalizing by the
/// window's first price.
pub fn window_power(values: &[f64], base: f64) -> Result<f64> {
    if !(base > 0.0) || !base.is_finite() {
        return Err(Error::InvalidParams(format!(
            "power base must be positive and finite, got {base}"
        )));
    }
    if values.is_empty() {
        return Err(Error::InvalidParams("power window is empty".into()));
    }
    let sum: f64 = values.iter().map(|v| (v / base) * (v / base)).sum();
    Ok(sum / values.len() as f64)
}

/// Signal power: trailing window power of the moving average, normalized by
/// the window's first close. Defined from `(ma_window - 1) + (window - 1)`.
pub fn power_of_signal(series: &BarSeries, params: &PowerParams) -> Result<IndicatorSeries> {
    let closes = series.closes();
    let ma = moving_average(&closes, params.ma_window)?;
    windowed_power_of(&closes, &ma, params.window, |ma_value, _close| ma_value)
}

/// Noise power: trailing window power of the deviation of price from its
/// moving average. Defined from `(ma_window - 1) + (window - 1)`.
pub fn power_of_noise(series: &BarSeries, params: &PowerParams) -> Result<IndicatorSeries> {
    let closes = series.closes();
    let ma = moving_average(&closes, params.ma_window)?;
    windowed_power_of(&closes, &ma, params.window, |ma_value, close| {
        close - ma_value
    })
}

/// Shared windowing for the signal/noise powers: at bar `t` the window spans
/// `t-window+1..=t`, every MA entry inside it must be defined, and the base
/// is the close at the window start.
fn windowed_power_of(
    closes: &[f64],
    ma: &IndicatorSeries,
    window: usize,
    term: impl Fn(f64, f64) -> f64,
) -> Result<IndicatorSeries> {
    if window < 2 {
        return Err(Error::InvalidParams(
            "power window must be at least 2".into(),
        ));
    }
    let len = closes.len();
    let ma_start = match ma.first_defined_index() {
        Some(i) => i,
        None => return Ok(IndicatorSeries::undefined(len)),
    };
    let first = ma_start + window - 1;
    if first >= len {
        return Err(Error::TooShort {
            what: "power window",
            needed: first + 1,
            got: len,
        });
    }
    let mut values = vec![None; len];
    for t in first..len {
        let start = t + 1 - window;
        let base = closes[start];
        let mut sum = 0.0;
        for i in start..=t {
            let v = term(ma.get(i).expect("MA defined across window"), closes[i]) / base;
            sum += v * v;
        }
        values[t] = Some(sum / window as f64);
    }
    Ok(IndicatorSeries::from_options(values))
}

/// Threshold power per bar: `(ATR / SIC)^2` where both are defined.
pub fn power_threshold(atr: &IndicatorSeries, sic: &IndicatorSeries) -> Result<IndicatorSeries> {
    if atr.len() != sic.len() {
        return Err(Error::InvalidParams(format!(
            "ATR length {} does not match SIC length {}",
            atr.len(),
            sic.len()
        )));
    }
    let mut values = vec![None; atr.len()];
    for (slot, i) in values.iter_mut().zip(0..) {
        if let (Some(a), Some(s)) = (atr.get(i), sic.get(i)) {
            if s == 0.0 {
                return Err(Error::Degenerate(format!(
                    "SIC is zero at index {i}; threshold power undefined"
                )));
            }
            let ratio = (a / s).abs();
            *slot = Some(ratio * ratio);
        }
    }
    Ok(IndicatorSeries::from_options(values))
}

/// The two power ratios from already-computed powers.
///
/// Signal excess below zero is clamped before the square root. A zero
/// threshold at a bar where all three inputs are defined is an error here;
/// [`power_report`] instead reports flagged zeros for that case.
pub fn ratios(
    power_signal: &IndicatorSeries,
    power_noise: &IndicatorSeries,
    power_threshold: &IndicatorSeries,
) -> Result<(IndicatorSeries, IndicatorSeries)> {
    let len = power_signal.len();
    if power_noise.len() != len || power_threshold.len() != len {
        return Err(Error::InvalidParams(
            "power series lengths do not match".into(),
        ));
    }
    let mut r_signal = vec![None; len];
    let mut r_noise = vec![None; len];
    for i in 0..len {
        if let (Some(ps), Some(pn), Some(pt)) = (
            power_signal.get(i),
            power_noise.get(i),
            power_threshold.get(i),
        ) {
            if pt <= 0.0 {
                return Err(Error::Degenerate(format!(
                    "threshold power {pt} at index {i} is not positive"
                )));
            }
            r_signal[i] = Some(((ps - 1.0).max(0.0) / pt).sqrt());
            r_noise[i] = Some((pn / pt).sqrt());
        }
    }
    Ok((
        IndicatorSeries::from_options(r_signal),
        IndicatorSeries::from_options(r_noise),
    ))
}

/// Composes the full per-bar power report for one window configuration.
///
/// The moving average and both power windows are anchored inside the span
/// where the volatility system is live (SIC defined), so with ATR warm-up W
/// the ratio columns are defined from exactly `(W-1) + (ma_window-1) +
/// (window-1)`. Zero-threshold bars (zero ATR) report both ratios as 0 with
/// a degeneracy flag; negative signal excess is clamped to 0 and flagged.
pub fn power_report(
    series: &BarSeries,
    params: &PowerParams,
    volsys_result: &BacktestResult,
) -> Result<PowerReport> {
    if params.window < 2 {
        return Err(Error::InvalidParams(
            "power window must be at least 2".into(),
        ));
    }
    let len = series.len();
    if volsys_result.sic_series.len() != len {
        return Err(Error::InvalidParams(
            "volatility-system result does not align with the series".into(),
        ));
    }
    let closes = series.closes();
    let sic = &volsys_result.sic_series;
    let atr = &volsys_result.atr_series;
    let origin = sic.first_defined_index().ok_or(Error::TooShort {
        what: "ATR warm-up",
        needed: len + 1,
        got: len,
    })?;

    let ma_first = origin + params.ma_window - 1;
    if ma_first >= len {
        return Err(Error::TooShort {
            what: "moving average",
            needed: ma_first + 1,
            got: len,
        });
    }
    let power_first = ma_first + params.window - 1;
    if power_first >= len {
        return Err(Error::TooShort {
            what: "power window",
            needed: power_first + 1,
            got: len,
        });
    }

    // MA values are ordinary trailing means; the report only exposes them
    // where the whole MA window sits inside the live span.
    let ma_global = moving_average(&closes, params.ma_window)?;
    let ma = IndicatorSeries::from_options(
        (0..len)
            .map(|i| if i >= ma_first { ma_global.get(i) } else { None })
            .collect(),
    );

    let threshold = power_threshold(atr, sic)?;

    let mut power_signal = vec![None; len];
    let mut power_noise = vec![None; len];
    let mut r_signal = vec![None; len];
    let mut r_noise = vec![None; len];
    let mut flags = vec![BarFlags::default(); len];

    let n = params.window;
    for t in power_first..len {
        let start = t + 1 - n;
        if ma.get(start).is_none() {
            // Live span interrupted (gated run sat flat); this window has no
            // anchored moving average.
            continue;
        }
        let base = closes[start];
        let mut signal_sum = 0.0;
        let mut noise_sum = 0.0;
        let mut complete = true;
        for i in start..=t {
            match ma.get(i) {
                Some(m) => {
                    let s = m / base;
                    let d = (closes[i] - m) / base;
                    signal_sum += s * s;
                    noise_sum += d * d;
                }
                None => {
                    complete = false;
                    break;
                }
            }
        }
        if !complete {
            continue;
        }
        let ps = signal_sum / n as f64;
        let pn = noise_sum / n as f64;
        power_signal[t] = Some(ps);
        power_noise[t] = Some(pn);

        let Some(pt) = threshold.get(t) else { continue };
        if pt == 0.0 {
            flags[t].degenerate_threshold = true;
            r_signal[t] = Some(0.0);
            r_noise[t] = Some(0.0);
        } else {
            let excess = ps - 1.0;
            if excess < 0.0 {
                flags[t].clamped_signal = true;
            }
            r_signal[t] = Some((excess.max(0.0) / pt).sqrt());
            r_noise[t] = Some((pn / pt).sqrt());
        }
    }

    Ok(PowerReport {
        params: *params,
        ma,
        power_signal: IndicatorSeries::from_options(power_signal),
        power_noise: IndicatorSeries::from_options(power_noise),
        power_threshold: threshold,
        r_signal: IndicatorSeries::from_options(r_signal),
        r_noise: IndicatorSeries::from_options(r_noise),
        flags,
    })
}
