//! Experiment harness: multiplier sweeps, signal-ratio gating, MA-range
//! sweeps and multi-symbol universe runs.
//!
//! Symbols and grid points are independent work units. Everything here
//! evaluates in parallel where it helps but merges sorted, so output is
//! byte-identical regardless of worker count.

use crate::error::{Error, Result};
use crate::market_data::BarSeries;
use crate::power::{power_report, PowerParams, PowerReport};
use crate::volsys::{self, VolSysParams};
use crate::wilder::{self, IndicatorSeries};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// How the signal-ratio gate translates into trading permission.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GateMode {
    /// No gating; every bar may open a position.
    #[default]
    Off,
    /// Permission switches on permanently at the first bar where the signal
    /// ratio reaches the level.
    ArmOnce,
    /// Permission exactly where the signal ratio is at or above the level.
    WhileAbove,
}

impl fmt::Display for GateMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GateMode::Off => write!(f, "off"),
            GateMode::ArmOnce => write!(f, "arm-once"),
            GateMode::WhileAbove => write!(f, "while-above"),
        }
    }
}

impl FromStr for GateMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "off" => Ok(GateMode::Off),
            "arm-once" => Ok(GateMode::ArmOnce),
            "while-above" => Ok(GateMode::WhileAbove),
            other => Err(Error::InvalidParams(format!(
                "unknown gate mode '{other}' (expected off, arm-once or while-above)"
            ))),
        }
    }
}

/// Sweep and gating configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// Stop-multiplier grid, strictly increasing, all positive.
    pub multipliers: Vec<f64>,
    /// Power windows of interest.
    pub power_windows: Vec<usize>,
    /// Signal-ratio level that arms the gate.
    pub gate_level: f64,
    pub gate_mode: GateMode,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            multipliers: (1..=80).map(|i| i as f64 / 10.0).collect(),
            power_windows: vec![30, 50, 100],
            gate_level: 4.0,
            gate_mode: GateMode::Off,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.multipliers.is_empty() {
            return Err(Error::InvalidParams("multiplier grid is empty".into()));
        }
        for pair in self.multipliers.windows(2) {
            if pair[1] <= pair[0] {
                return Err(Error::InvalidParams(
                    "multiplier grid must be strictly increasing".into(),
                ));
            }
        }
        if self.multipliers.iter().any(|&m| !(m > 0.0) || !m.is_finite()) {
            return Err(Error::InvalidParams(
                "multiplier grid entries must be positive and finite".into(),
            ));
        }
        if !self.gate_level.is_finite() {
            return Err(Error::InvalidParams("gate level must be finite".into()));
        }
        Ok(())
    }
}

/// Derives the per-bar trading permission from a power report.
///
/// Undefined signal-ratio bars never satisfy the level. `ArmOnce` produces a
/// monotone step: false until the first qualifying bar, true afterwards.
pub fn gate_from_power(report: &PowerReport, level: f64, mode: GateMode) -> Vec<bool> {
    let len = report.r_signal.len();
    match mode {
        GateMode::Off => vec![true; len],
        GateMode::WhileAbove => (0..len)
            .map(|i| report.r_signal.get(i).is_some_and(|v| v >= level))
            .collect(),
        GateMode::ArmOnce => {
            let mut armed = false;
            (0..len)
                .map(|i| {
                    if !armed && report.r_signal.get(i).is_some_and(|v| v >= level) {
                        armed = true;
                    }
                    armed
                })
                .collect()
        }
    }
}

/// One grid point of a multiplier sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub multiplier: f64,
    pub total_pnl: Option<f64>,
    pub total_pnl_norm: Option<f64>,
    pub trades: Option<usize>,
    /// Failure at this grid point; the sweep itself continues.
    pub error: Option<String>,
}

/// Runs the volatility system once per multiplier on the grid.
///
/// Gating (per `spec.gate_mode`) derives the gate from an ungated run at the
/// same multiplier, then reruns gated. Grid-point failures are reported in
/// the row instead of aborting the sweep.
pub fn sweep_multiplier(
    series: &BarSeries,
    spec: &SweepSpec,
    power_params: &PowerParams,
    base: &VolSysParams,
) -> Result<Vec<SweepPoint>> {
    spec.validate()?;
    let mut points: Vec<(usize, SweepPoint)> = spec
        .multipliers
        .par_iter()
        .enumerate()
        .map(|(i, &multiplier)| {
            let params = base.clone().with_multiplier(multiplier);
            let point = match run_gated(series, &params, power_params, spec.gate_level, spec.gate_mode)
            {
                Ok(result) => SweepPoint {
                    multiplier,
                    total_pnl: Some(result.total_pnl_points),
                    total_pnl_norm: Some(result.total_pnl_norm()),
                    trades: Some(result.trades.len()),
                    error: None,
                },
                Err(e) => SweepPoint {
                    multiplier,
                    total_pnl: None,
                    total_pnl_norm: None,
                    trades: None,
                    error: Some(e.to_string()),
                },
            };
            (i, point)
        })
        .collect();
    points.sort_by_key(|(i, _)| *i);
    Ok(points.into_iter().map(|(_, p)| p).collect())
}

/// Runs the system under the signal-ratio gate: an ungated run supplies the
/// power report the gate derives from, then the gated rerun produces the
/// result. `GateMode::Off` is the plain ungated run.
pub fn run_gated(
    series: &BarSeries,
    params: &VolSysParams,
    power_params: &PowerParams,
    gate_level: f64,
    gate_mode: GateMode,
) -> Result<volsys::BacktestResult> {
    let ungated = volsys::run(series, params, None)?;
    if gate_mode == GateMode::Off {
        return Ok(ungated);
    }
    let report = power_report(series, power_params, &ungated)?;
    let gate = gate_from_power(&report, gate_level, gate_mode);
    volsys::run(series, params, Some(&gate))
}

/// Final-bar power ratios for one MA range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaRangePoint {
    pub range: usize,
    pub r_signal: Option<f64>,
    pub r_noise: Option<f64>,
    /// Why the point is undefined (warm-up exceeded the series).
    pub note: Option<String>,
}

/// Evaluates the power ratios at the final bar for each MA range on the
/// grid. Ranges whose warm-up exceeds the series come back undefined with a
/// note instead of failing the sweep.
pub fn sweep_ma_range(
    series: &BarSeries,
    ranges: &[usize],
    params: &VolSysParams,
) -> Result<Vec<MaRangePoint>> {
    if ranges.is_empty() {
        return Err(Error::InvalidParams("MA range grid is empty".into()));
    }
    let result = volsys::run(series, params, None)?;
    let mut points: Vec<(usize, MaRangePoint)> = ranges
        .par_iter()
        .enumerate()
        .map(|(i, &range)| {
            let point = match PowerParams::new(range)
                .and_then(|p| power_report(series, &p, &result))
            {
                Ok(report) => MaRangePoint {
                    range,
                    r_signal: report.r_signal.last_defined().map(|(_, v)| v),
                    r_noise: report.r_noise.last_defined().map(|(_, v)| v),
                    note: None,
                },
                Err(e) => MaRangePoint {
                    range,
                    r_signal: None,
                    r_noise: None,
                    note: Some(e.to_string()),
                },
            };
            (i, point)
        })
        .collect();
    points.sort_by_key(|(i, _)| *i);
    Ok(points.into_iter().map(|(_, p)| p).collect())
}

/// Which per-bar statistic of the ratio series feeds the universe columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RatioStat {
    /// Last defined value.
    #[default]
    Final,
    /// Mean over the defined span.
    Mean,
}

impl FromStr for RatioStat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "final" => Ok(RatioStat::Final),
            "mean" => Ok(RatioStat::Mean),
            other => Err(Error::InvalidParams(format!(
                "unknown ratio statistic '{other}' (expected final or mean)"
            ))),
        }
    }
}

/// One symbol's end-of-run snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniverseRow {
    pub symbol: String,
    pub final_pnl: f64,
    pub final_pnl_norm: f64,
    /// Final snapshots of the power ratios.
    pub r_signal: Option<f64>,
    pub r_noise: Option<f64>,
    /// Time means over the defined span, for the integral-style variant.
    pub mean_r_signal: Option<f64>,
    pub mean_r_noise: Option<f64>,
    pub dx: Option<f64>,
    pub adx: Option<f64>,
    pub adxr: Option<f64>,
}

/// A symbol that could not run, with the reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub symbol: String,
    pub reason: String,
}

/// Universe output: rows for symbols that ran, exclusions for those that
/// could not. Both sorted by symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniverseResult {
    pub rows: Vec<UniverseRow>,
    pub exclusions: Vec<Exclusion>,
}

impl UniverseResult {
    /// Full table as CSV: symbol,final_pnl,final_pnl_norm,r_signal,r_noise,dx,adx,adxr,excluded,reason.
    /// Included and excluded symbols interleave in symbol order.
    pub fn to_csv(&self, stat: RatioStat) -> String {
        let mut out =
            String::from("symbol,final_pnl,final_pnl_norm,r_signal,r_noise,dx,adx,adxr,excluded,reason\n");
        let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut rows = self.rows.iter().peekable();
        let mut exclusions = self.exclusions.iter().peekable();
        loop {
            let take_row = match (rows.peek(), exclusions.peek()) {
                (Some(r), Some(e)) => r.symbol <= e.symbol,
                (Some(_), None) => true,
                (None, Some(_)) => false,
                (None, None) => break,
            };
            if take_row {
                let r = rows.next().unwrap();
                let (rs, rn) = match stat {
                    RatioStat::Final => (r.r_signal, r.r_noise),
                    RatioStat::Mean => (r.mean_r_signal, r.mean_r_noise),
                };
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},false,\n",
                    r.symbol,
                    r.final_pnl,
                    r.final_pnl_norm,
                    cell(rs),
                    cell(rn),
                    cell(r.dx),
                    cell(r.adx),
                    cell(r.adxr),
                ));
            } else {
                let e = exclusions.next().unwrap();
                out.push_str(&format!(
                    "{},,,,,,,,true,{}\n",
                    e.symbol,
                    e.reason.replace(',', ";"),
                ));
            }
        }
        out
    }

    /// Exclusions alone as CSV: symbol,reason.
    pub fn exclusions_csv(&self) -> String {
        let mut out = String::from("symbol,reason\n");
        for e in &self.exclusions {
            out.push_str(&format!("{},{}\n", e.symbol, e.reason.replace(',', ";")));
        }
        out
    }
}

fn universe_row(
    series: &BarSeries,
    spec: &SweepSpec,
    power_params: &PowerParams,
    volsys_params: &VolSysParams,
) -> Result<UniverseRow> {
    let ungated = volsys::run(series, volsys_params, None)?;
    let report = power_report(series, power_params, &ungated)?;
    let gated = if spec.gate_mode == GateMode::Off {
        ungated
    } else {
        let gate = gate_from_power(&report, spec.gate_level, spec.gate_mode);
        volsys::run(series, volsys_params, Some(&gate))?
    };
    let directional = wilder::directional(series, &volsys_params.atr_params).ok();
    let last = |s: &IndicatorSeries| s.last_defined().map(|(_, v)| v);

    Ok(UniverseRow {
        symbol: series.symbol().to_string(),
        final_pnl: gated.total_pnl_points,
        final_pnl_norm: gated.total_pnl_norm(),
        r_signal: last(&report.r_signal),
        r_noise: last(&report.r_noise),
        mean_r_signal: report.r_signal.mean_defined(),
        mean_r_noise: report.r_noise.mean_defined(),
        dx: directional.as_ref().and_then(|d| last(&d.dx)),
        adx: directional.as_ref().and_then(|d| last(&d.adx)),
        adxr: directional.as_ref().and_then(|d| last(&d.adxr)),
    })
}

/// Runs the full per-symbol protocol across a universe.
///
/// Per symbol: ungated volatility-system run, power report from it, gate per
/// `spec`, gated rerun for P&L, plus final directional-index snapshots.
/// Failing symbols land in the exclusion list without affecting the rest.
/// Output is sorted by symbol and independent of worker count.
pub fn run_universe(
    series_set: &[BarSeries],
    spec: &SweepSpec,
    power_params: &PowerParams,
    volsys_params: &VolSysParams,
) -> Result<UniverseResult> {
    if series_set.is_empty() {
        return Err(Error::InvalidInput("universe is empty".into()));
    }
    spec.validate()?;
    let outcomes: Vec<(String, Result<UniverseRow>)> = series_set
        .par_iter()
        .map(|series| {
            (
                series.symbol().to_string(),
                universe_row(series, spec, power_params, volsys_params),
            )
        })
        .collect();

    let mut rows = Vec::new();
    let mut exclusions = Vec::new();
    for (symbol, outcome) in outcomes {
        match outcome {
            Ok(row) => rows.push(row),
            Err(e) => exclusions.push(Exclusion {
                symbol,
                reason: e.to_string(),
            }),
        }
    }
    rows.sort_by(|a, b| a.symbol.cmp(&b.symbol));
    exclusions.sort_by(|a, b| a.symbol.cmp(&b.symbol));
    Ok(UniverseResult { rows, exclusions })
}

/// Multiplier sweep as CSV: multiplier,total_pnl,total_pnl_norm,trades,error.
pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("multiplier,total_pnl,total_pnl_norm,trades,error\n");
    let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for p in points {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            p.multiplier,
            cell(p.total_pnl),
            cell(p.total_pnl_norm),
            p.trades.map(|t| t.to_string()).unwrap_or_default(),
            p.error.as_deref().unwrap_or("").replace(',', ";"),
        ));
    }
    out
}

/// MA-range sweep as CSV: range,r_signal,r_noise,note.
pub fn ma_sweep_csv(points: &[MaRangePoint]) -> String {
    let mut out = String::from("range,r_signal,r_noise,note\n");
    let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for p in points {
        out.push_str(&format!(
            "{},{},{},{}\n",
            p.range,
            cell(p.r_signal),
            cell(p.r_noise),
            p.note.as_deref().unwrap_or("").replace(',', ";"),
        ));
    }
    out
}
