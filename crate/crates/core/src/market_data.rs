//! Bars, bar series, CSV ingestion and synthetic test signals.
//!
//! Real data comes in through [`load_csv`]; synthetic signals (constant,
//! linear, sinusoidal, composites and wire-graph zigzags) come from
//! [`SyntheticSpec`] and [`generate`]. Synthetic bars collapse OHLC onto a
//! single price line (open = high = low = close).

use crate::error::{Error, Result};
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

/// Bar timestamp: a calendar date for loaded data, a plain index for
/// synthetic series. Ordering is only meaningful within one series, which is
/// always homogeneous.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Timestamp {
    Index(u64),
    Date(NaiveDate),
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Timestamp::Date(d) => write!(f, "{}", d.format("%Y-%m-%d")),
            Timestamp::Index(i) => write!(f, "{i}"),
        }
    }
}

/// One OHLC observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bar {
    pub timestamp: Timestamp,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
}

impl Bar {
    /// Wire bar: a single price point, open = high = low = close.
    pub fn wire(timestamp: Timestamp, price: f64) -> Self {
        Bar {
            timestamp,
            open: price,
            high: price,
            low: price,
            close: price,
        }
    }

    /// Checks the bar invariants: finite prices, all strictly positive,
    /// low <= open/close <= high. Returns the violated rule on failure.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let fields = [
            ("open", self.open),
            ("high", self.high),
            ("low", self.low),
            ("close", self.close),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(format!("{name} is not finite"));
            }
            if v <= 0.0 {
                return Err(format!("{name} must be positive, got {v}"));
            }
        }
        if self.low > self.high {
            return Err(format!("high {} below low {}", self.high, self.low));
        }
        if self.open < self.low || self.open > self.high {
            return Err(format!("open {} outside [low, high]", self.open));
        }
        if self.close < self.low || self.close > self.high {
            return Err(format!("close {} outside [low, high]", self.close));
        }
        Ok(())
    }
}

/// An ordered, validated series of bars for one symbol.
///
/// Construction guarantees every bar satisfies its invariants and timestamps
/// strictly increase. Immutable afterwards, so safe to share across workers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarSeries {
    symbol: String,
    bars: Vec<Bar>,
}

impl BarSeries {
    /// Validates and wraps a pre-sorted bar sequence.
    pub fn new(symbol: impl Into<String>, bars: Vec<Bar>) -> Result<Self> {
        let symbol = symbol.into();
        if bars.is_empty() {
            return Err(Error::InvalidInput(format!(
                "series {symbol} has no bars"
            )));
        }
        for (i, bar) in bars.iter().enumerate() {
            bar.validate()
                .map_err(|reason| Error::InvalidRow { row: i + 1, reason })?;
        }
        for pair in bars.windows(2) {
            if pair[1].timestamp == pair[0].timestamp {
                return Err(Error::DuplicateTimestamp {
                    symbol: symbol.clone(),
                    timestamp: pair[0].timestamp.to_string(),
                });
            }
            if pair[1].timestamp < pair[0].timestamp {
                return Err(Error::InvalidInput(format!(
                    "series {symbol} is not sorted ascending at {}",
                    pair[1].timestamp
                )));
            }
        }
        Ok(BarSeries { symbol, bars })
    }

    pub fn symbol(&self) -> &str {
        &self.symbol
    }

    pub fn bars(&self) -> &[Bar] {
        &self.bars
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    /// Close prices in bar order.
    pub fn closes(&self) -> Vec<f64> {
        self.bars.iter().map(|b| b.close).collect()
    }

    /// Same bars under a different symbol.
    pub fn with_symbol(mut self, symbol: impl Into<String>) -> Self {
        self.symbol = symbol.into();
        self
    }
}

/// Column mapping for CSV ingestion. Names are matched case-insensitively
/// against the header row.
#[derive(Debug, Clone)]
pub struct CsvFormat {
    pub date: String,
    pub open: String,
    pub high: String,
    pub low: String,
    pub close: String,
    /// Symbol override; defaults to the file stem.
    pub symbol: Option<String>,
}

impl Default for CsvFormat {
    fn default() -> Self {
        CsvFormat {
            date: "date".into(),
            open: "open".into(),
            high: "high".into(),
            low: "low".into(),
            close: "close".into(),
            symbol: None,
        }
    }
}

/// Loads an OHLC series from a CSV file with a header row.
///
/// Rows may arrive in any order; the result is sorted ascending by date.
/// Any row violating a bar invariant aborts the load with its 1-based data
/// row number, and duplicate dates are rejected.
pub fn load_csv(path: impl AsRef<Path>, format: &CsvFormat) -> Result<BarSeries> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;

    let headers = reader.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::InvalidInput(format!("missing column '{name}' in {}", path.display())))
    };
    let date_col = col(&format.date)?;
    let open_col = col(&format.open)?;
    let high_col = col(&format.high)?;
    let low_col = col(&format.low)?;
    let close_col = col(&format.close)?;

    let mut bars = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record?;
        let field = |idx: usize| -> Result<&str> {
            record.get(idx).ok_or_else(|| Error::InvalidRow {
                row,
                reason: "missing field".into(),
            })
        };
        let date = NaiveDate::parse_from_str(field(date_col)?, "%Y-%m-%d").map_err(|e| {
            Error::InvalidRow {
                row,
                reason: format!("unparsable date '{}': {e}", record.get(date_col).unwrap_or("")),
            }
        })?;
        let price = |idx: usize, name: &str| -> Result<f64> {
            f64::from_str(field(idx)?).map_err(|_| Error::InvalidRow {
                row,
                reason: format!("unparsable {name} '{}'", record.get(idx).unwrap_or("")),
            })
        };
        let bar = Bar {
            timestamp: Timestamp::Date(date),
            open: price(open_col, "open")?,
            high: price(high_col, "high")?,
            low: price(low_col, "low")?,
            close: price(close_col, "close")?,
        };
        bar.validate()
            .map_err(|reason| Error::InvalidRow { row, reason })?;
        bars.push(bar);
    }

    bars.sort_by_key(|b| b.timestamp);
    let symbol = format.symbol.clone().unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "series".into())
    });
    BarSeries::new(symbol, bars)
}

/// One sinusoidal component of a composite signal. `phase` is in bars.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SineComponent {
    pub amplitude: f64,
    pub period: f64,
    #[serde(default)]
    pub phase: f64,
}

/// Specification of a synthetic price signal.
///
/// All kinds emit wire bars (open = high = low = close) indexed 0..bars-1.
/// The zigzag is a triangle wave moving by `step` per bar between a floor
/// and floor + `amplitude` (an integer multiple of `step`); `phase` shifts
/// the starting point by whole steps into the cycle, with `start` naming
/// the price at bar 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SyntheticSpec {
    Constant {
        level: f64,
        bars: usize,
    },
    Linear {
        start: f64,
        slope: f64,
        bars: usize,
    },
    Sine {
        level: f64,
        amplitude: f64,
        period: f64,
        #[serde(default)]
        phase: f64,
        bars: usize,
    },
    SineLinear {
        level: f64,
        slope: f64,
        amplitude: f64,
        period: f64,
        #[serde(default)]
        phase: f64,
        bars: usize,
    },
    MultiSineLinear {
        level: f64,
        slope: f64,
        components: Vec<SineComponent>,
        bars: usize,
    },
    Zigzag {
        start: f64,
        step: f64,
        amplitude: f64,
        bars: usize,
        #[serde(default)]
        phase: usize,
    },
}

impl SyntheticSpec {
    /// Kind name, used as the default symbol of generated series.
    pub fn kind(&self) -> &'static str {
        match self {
            SyntheticSpec::Constant { .. } => "constant",
            SyntheticSpec::Linear { .. } => "linear",
            SyntheticSpec::Sine { .. } => "sine",
            SyntheticSpec::SineLinear { .. } => "sine-linear",
            SyntheticSpec::MultiSineLinear { .. } => "multi-sine-linear",
            SyntheticSpec::Zigzag { .. } => "zigzag",
        }
    }

    fn bars(&self) -> usize {
        match self {
            SyntheticSpec::Constant { bars, .. }
            | SyntheticSpec::Linear { bars, .. }
            | SyntheticSpec::Sine { bars, .. }
            | SyntheticSpec::SineLinear { bars, .. }
            | SyntheticSpec::MultiSineLinear { bars, .. }
            | SyntheticSpec::Zigzag { bars, .. } => *bars,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.bars() == 0 {
            return Err(Error::InvalidParams("bar count must be at least 1".into()));
        }
        let finite = |name: &str, v: f64| -> Result<()> {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParams(format!("{name} is not finite")))
            }
        };
        match self {
            SyntheticSpec::Constant { level, .. } => finite("level", *level),
            SyntheticSpec::Linear { start, slope, .. } => {
                finite("start", *start)?;
                finite("slope", *slope)
            }
            SyntheticSpec::Sine {
                level,
                amplitude,
                period,
                phase,
                ..
            } => {
                finite("level", *level)?;
                finite("amplitude", *amplitude)?;
                finite("period", *period)?;
                finite("phase", *phase)?;
                if *period <= 0.0 {
                    return Err(Error::InvalidParams("sine period must be positive".into()));
                }
                Ok(())
            }
            SyntheticSpec::SineLinear {
                level,
                slope,
                amplitude,
                period,
                phase,
                ..
            } => {
                finite("level", *level)?;
                finite("slope", *slope)?;
                finite("amplitude", *amplitude)?;
                finite("period", *period)?;
                finite("phase", *phase)?;
                if *period <= 0.0 {
                    return Err(Error::InvalidParams("sine period must be positive".into()));
                }
                Ok(())
            }
            SyntheticSpec::MultiSineLinear {
                level,
                slope,
                components,
                ..
            } => {
                finite("level", *level)?;
                finite("slope", *slope)?;
                if components.is_empty() {
                    return Err(Error::InvalidParams(
                        "composite signal needs at least one component".into(),
                    ));
                }
                for (i, c) in components.iter().enumerate() {
                    finite("amplitude", c.amplitude)?;
                    finite("period", c.period)?;
                    finite("phase", c.phase)?;
                    if c.period <= 0.0 {
                        return Err(Error::InvalidParams(format!(
                            "component {i} period must be positive"
                        )));
                    }
                }
                Ok(())
            }
            SyntheticSpec::Zigzag {
                start,
                step,
                amplitude,
                ..
            } => {
                finite("start", *start)?;
                finite("step", *step)?;
                finite("amplitude", *amplitude)?;
                if *step <= 0.0 {
                    return Err(Error::InvalidParams("zigzag step must be positive".into()));
                }
                let m = (amplitude / step).round();
                if m < 1.0 || (m * step - amplitude).abs() > 1e-9 * step {
                    return Err(Error::InvalidParams(format!(
                        "zigzag amplitude {amplitude} must be a positive integer multiple of step {step}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Price at bar `t`.
    fn price_at(&self, t: usize) -> f64 {
        let tf = t as f64;
        let tau = std::f64::consts::TAU;
        match self {
            SyntheticSpec::Constant { level, .. } => *level,
            SyntheticSpec::Linear { start, slope, .. } => start + slope * tf,
            SyntheticSpec::Sine {
                level,
                amplitude,
                period,
                phase,
                ..
            } => level + amplitude * (tau * (tf + phase) / period).sin(),
            SyntheticSpec::SineLinear {
                level,
                slope,
                amplitude,
                period,
                phase,
                ..
            } => level + slope * tf + amplitude * (tau * (tf + phase) / period).sin(),
            SyntheticSpec::MultiSineLinear {
                level,
                slope,
                components,
                ..
            } => {
                let waves: f64 = components
                    .iter()
                    .map(|c| c.amplitude * (tau * (tf + c.phase) / c.period).sin())
                    .sum();
                level + slope * tf + waves
            }
            SyntheticSpec::Zigzag {
                start,
                step,
                amplitude,
                phase,
                ..
            } => {
                let m = (amplitude / step).round() as usize;
                let cycle = 2 * m;
                let tri = |k: usize| -> usize {
                    if k <= m {
                        k
                    } else {
                        cycle - k
                    }
                };
                let floor = start - tri(phase % cycle) as f64 * step;
                floor + tri((phase + t) % cycle) as f64 * step
            }
        }
    }
}

/// Generates the wire-bar series described by `spec`.
///
/// Deterministic: identical specs produce identical series. Fails if any
/// generated price is not strictly positive.
pub fn generate(spec: &SyntheticSpec) -> Result<BarSeries> {
    spec.validate()?;
    let mut bars = Vec::with_capacity(spec.bars());
    for t in 0..spec.bars() {
        let price = spec.price_at(t);
        if !(price > 0.0) {
            return Err(Error::NonPositivePrice { index: t, price });
        }
        bars.push(Bar::wire(Timestamp::Index(t as u64), price));
    }
    BarSeries::new(spec.kind(), bars)
}

impl FromStr for SyntheticSpec {
    type Err = Error;

    /// Parses the inline form `kind:param:param...`:
    ///
    /// - `constant:<level>:<bars>`
    /// - `linear:<start>:<slope>:<bars>`
    /// - `sine:<level>:<amplitude>:<period>:<bars>[:<phase>]`
    /// - `sine-linear:<level>:<slope>:<amplitude>:<period>:<bars>[:<phase>]`
    /// - `multi-sine-linear:<level>:<slope>:<bars>:<amp,period[,phase]>[:...]`
    /// - `zigzag:<start>:<step>:<amplitude>:<bars>[:<phase>]`
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = |msg: String| Error::InvalidParams(msg);
        let f = |p: &str, name: &str| -> Result<f64> {
            f64::from_str(p).map_err(|_| bad(format!("bad {name} '{p}' in synthetic spec '{s}'")))
        };
        let n = |p: &str, name: &str| -> Result<usize> {
            usize::from_str(p).map_err(|_| bad(format!("bad {name} '{p}' in synthetic spec '{s}'")))
        };
        let arity = |want: &str| bad(format!("synthetic spec '{s}' needs the form {want}"));

        let spec = match parts[0] {
            "constant" => {
                let [_, level, bars] = parts[..] else {
                    return Err(arity("constant:<level>:<bars>"));
                };
                SyntheticSpec::Constant {
                    level: f(level, "level")?,
                    bars: n(bars, "bars")?,
                }
            }
            "linear" => {
                let [_, start, slope, bars] = parts[..] else {
                    return Err(arity("linear:<start>:<slope>:<bars>"));
                };
                SyntheticSpec::Linear {
                    start: f(start, "start")?,
                    slope: f(slope, "slope")?,
                    bars: n(bars, "bars")?,
                }
            }
            "sine" => match parts[..] {
                [_, level, amplitude, period, bars] => SyntheticSpec::Sine {
                    level: f(level, "level")?,
                    amplitude: f(amplitude, "amplitude")?,
                    period: f(period, "period")?,
                    phase: 0.0,
                    bars: n(bars, "bars")?,
                },
                [_, level, amplitude, period, bars, phase] => SyntheticSpec::Sine {
                    level: f(level, "level")?,
                    amplitude: f(amplitude, "amplitude")?,
                    period: f(period, "period")?,
                    phase: f(phase, "phase")?,
                    bars: n(bars, "bars")?,
                },
                _ => return Err(arity("sine:<level>:<amplitude>:<period>:<bars>[:<phase>]")),
            },
            "sine-linear" => match parts[..] {
                [_, level, slope, amplitude, period, bars] => SyntheticSpec::SineLinear {
                    level: f(level, "level")?,
                    slope: f(slope, "slope")?,
                    amplitude: f(amplitude, "amplitude")?,
                    period: f(period, "period")?,
                    phase: 0.0,
                    bars: n(bars, "bars")?,
                },
                [_, level, slope, amplitude, period, bars, phase] => SyntheticSpec::SineLinear {
                    level: f(level, "level")?,
                    slope: f(slope, "slope")?,
                    amplitude: f(amplitude, "amplitude")?,
                    period: f(period, "period")?,
                    phase: f(phase, "phase")?,
                    bars: n(bars, "bars")?,
                },
                _ => {
                    return Err(arity(
                        "sine-linear:<level>:<slope>:<amplitude>:<period>:<bars>[:<phase>]",
                    ))
                }
            },
            "multi-sine-linear" => {
                if parts.len() < 5 {
                    return Err(arity(
                        "multi-sine-linear:<level>:<slope>:<bars>:<amp,period[,phase]>[:...]",
                    ));
                }
                let mut components = Vec::new();
                for group in &parts[4..] {
                    let fields: Vec<&str> = group.split(',').collect();
                    let component = match fields[..] {
                        [amp, period] => SineComponent {
                            amplitude: f(amp, "component amplitude")?,
                            period: f(period, "component period")?,
                            phase: 0.0,
                        },
                        [amp, period, phase] => SineComponent {
                            amplitude: f(amp, "component amplitude")?,
                            period: f(period, "component period")?,
                            phase: f(phase, "component phase")?,
                        },
                        _ => {
                            return Err(bad(format!(
                                "bad component '{group}' in synthetic spec '{s}'"
                            )))
                        }
                    };
                    components.push(component);
                }
                SyntheticSpec::MultiSineLinear {
                    level: f(parts[1], "level")?,
                    slope: f(parts[2], "slope")?,
                    components,
                    bars: n(parts[3], "bars")?,
                }
            }
            "zigzag" => match parts[..] {
                [_, start, step, amplitude, bars] => SyntheticSpec::Zigzag {
                    start: f(start, "start")?,
                    step: f(step, "step")?,
                    amplitude: f(amplitude, "amplitude")?,
                    bars: n(bars, "bars")?,
                    phase: 0,
                },
                [_, start, step, amplitude, bars, phase] => SyntheticSpec::Zigzag {
                    start: f(start, "start")?,
                    step: f(step, "step")?,
                    amplitude: f(amplitude, "amplitude")?,
                    bars: n(bars, "bars")?,
                    phase: n(phase, "phase")?,
                },
                _ => return Err(arity("zigzag:<start>:<step>:<amplitude>:<bars>[:<phase>]")),
            },
            other => {
                return Err(bad(format!(
                    "unknown synthetic kind '{other}' (expected constant, linear, sine, sine-linear, multi-sine-linear or zigzag)"
                )))
            }
        };
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Write;

    fn write_csv(dir: &tempfile::TempDir, name: &str, body: &str) -> std::path::PathBuf {
        let path = dir.path().join(name);
        let mut file = std::fs::File::create(&path).unwrap();
        file.write_all(body.as_bytes()).unwrap();
        path
    }

    #[test]
    fn loads_well_formed_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_csv(
            &dir,
            "abc.csv",
            "date,open,high,low,close,volume\n\
             2024-01-02,10,11,9,10.5,100\n\
             2024-01-03,10.5,12,10,11,200\n\
             2024-01-04,11,11.5,10.5,11.2,150\n",
        );
        let series = load_csv(&path, &CsvFormat::default()).unwrap();
        assert_eq!(series.symbol(), "abc");
        assert_eq!(series.len(), 3);
        assert_eq!(series.bars()[0].close, 10.5);
        assert_eq!(
            series.bars()[2].timestamp,
            Timestamp::Date(NaiveDate::from_ymd_opt(2024, 1, 4).unwrap())
        );
    }

    #[test]
    fn rejects_high_below_low_naming_row() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_csv(
            &dir,
            "bad.csv",
            "date,open,high,low,close\n\
             2024-01-02,10,11,9,10.5\n\
             2024-01-03,10,9,11,10\n",
        );
        let err = load_csv(&path, &CsvFormat::default()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 2"), "error should name row 2: {msg}");
    }

    #[test]
    fn sorts_reverse_ordered_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_csv(
            &dir,
            "rev.csv",
            "date,open,high,low,close\n\
             2024-01-04,11,11.5,10.5,11.2\n\
             2024-01-03,10.5,12,10,11\n\
             2024-01-02,10,11,9,10.5\n",
        );
        let series = load_csv(&path, &CsvFormat::default()).unwrap();
        let dates: Vec<String> = series
            .bars()
            .iter()
            .map(|b| b.timestamp.to_string())
            .collect();
        let mut sorted = dates.clone();
        sorted.sort();
        assert_eq!(dates, sorted);
        assert_eq!(dates[0], "2024-01-02");
    }

    #[test]
    fn rejects_duplicate_dates() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_csv(
            &dir,
            "dup.csv",
            "date,open,high,low,close\n\
             2024-01-02,10,11,9,10.5\n\
             2024-01-02,10,11,9,10.6\n",
        );
        let err = load_csv(&path, &CsvFormat::default()).unwrap_err();
        assert!(matches!(err, Error::DuplicateTimestamp { .. }), "{err}");
    }

    #[test]
    fn rejects_non_positive_price() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_csv(
            &dir,
            "neg.csv",
            "date,open,high,low,close\n\
             2024-01-02,10,11,-9,10.5\n",
        );
        let err = load_csv(&path, &CsvFormat::default()).unwrap_err();
        assert!(err.to_string().contains("row 1"), "{err}");
    }

    #[test]
    fn rejects_missing_column() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_csv(&dir, "cols.csv", "date,open,high,low\n2024-01-02,10,11,9\n");
        let err = load_csv(&path, &CsvFormat::default()).unwrap_err();
        assert!(err.to_string().contains("close"), "{err}");
    }

    #[test]
    fn header_matching_is_case_insensitive() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_csv(
            &dir,
            "caps.csv",
            "Date,Open,High,Low,Close\n2024-01-02,10,11,9,10.5\n",
        );
        let series = load_csv(&path, &CsvFormat::default()).unwrap();
        assert_eq!(series.len(), 1);
    }

    #[test]
    fn constant_spec_generates_flat_wire_bars() {
        let spec = SyntheticSpec::Constant {
            level: 100.0,
            bars: 50,
        };
        let series = generate(&spec).unwrap();
        assert_eq!(series.len(), 50);
        for bar in series.bars() {
            assert_eq!(bar.open, 100.0);
            assert_eq!(bar.high, 100.0);
            assert_eq!(bar.low, 100.0);
            assert_eq!(bar.close, 100.0);
        }
    }

    #[test]
    fn linear_spec_generates_arithmetic_closes() {
        let spec = SyntheticSpec::Linear {
            start: 100.0,
            slope: 1.0,
            bars: 10,
        };
        let series = generate(&spec).unwrap();
        let expected: Vec<f64> = (0..10).map(|t| 100.0 + t as f64).collect();
        assert_eq!(series.closes(), expected);
    }

    #[test]
    fn zigzag_amplitude_one_step_alternates() {
        let spec = SyntheticSpec::Zigzag {
            start: 100.0,
            step: 2.0,
            amplitude: 2.0,
            bars: 9,
            phase: 0,
        };
        let closes = generate(&spec).unwrap().closes();
        assert_eq!(closes, vec![100.0, 102.0, 100.0, 102.0, 100.0, 102.0, 100.0, 102.0, 100.0]);
        assert_eq!(closes.first(), closes.last());
    }

    #[test]
    fn zigzag_phase_shifts_the_start() {
        // Triangle over [100, 104], entered one step into the rising leg.
        let spec = SyntheticSpec::Zigzag {
            start: 102.0,
            step: 2.0,
            amplitude: 4.0,
            bars: 9,
            phase: 1,
        };
        let closes = generate(&spec).unwrap().closes();
        assert_eq!(closes, vec![102.0, 104.0, 102.0, 100.0, 102.0, 104.0, 102.0, 100.0, 102.0]);
    }

    #[test]
    fn zigzag_rejects_non_multiple_amplitude() {
        let spec = SyntheticSpec::Zigzag {
            start: 100.0,
            step: 2.0,
            amplitude: 3.0,
            bars: 9,
            phase: 0,
        };
        assert!(generate(&spec).is_err());
    }

    #[test]
    fn non_positive_price_is_rejected() {
        let spec = SyntheticSpec::Linear {
            start: 5.0,
            slope: -1.0,
            bars: 10,
        };
        let err = generate(&spec).unwrap_err();
        assert!(matches!(err, Error::NonPositivePrice { index: 5, .. }), "{err}");
    }

    #[test]
    fn inline_spec_round_trips() {
        let cases = [
            ("constant:100:50", "constant"),
            ("linear:100:0.5:200", "linear"),
            ("sine:100:10:50:400", "sine"),
            ("sine:100:10:50:400:12.5", "sine"),
            ("sine-linear:100:0.05:15:100:1000", "sine-linear"),
            ("multi-sine-linear:100:0.05:1000:10,80:5,23,5.75", "multi-sine-linear"),
            ("zigzag:100:2:8:9:1", "zigzag"),
        ];
        for (input, kind) in cases {
            let spec: SyntheticSpec = input.parse().unwrap();
            assert_eq!(spec.kind(), kind, "{input}");
            generate(&spec).unwrap();
        }
    }

    #[test]
    fn inline_spec_reports_errors() {
        assert!("wavelet:1:2".parse::<SyntheticSpec>().is_err());
        assert!("constant:100".parse::<SyntheticSpec>().is_err());
        assert!("linear:a:b:10".parse::<SyntheticSpec>().is_err());
        assert!("multi-sine-linear:100:0:100:10".parse::<SyntheticSpec>().is_err());
    }

    #[test]
    fn spec_serde_json_round_trip() {
        let spec: SyntheticSpec = "multi-sine-linear:100:0.05:500:10,80:5,23,5.75".parse().unwrap();
        let json = serde_json::to_string(&spec).unwrap();
        let back: SyntheticSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(spec, back);
    }

    fn arbitrary_spec() -> impl Strategy<Value = SyntheticSpec> {
        let constant = (10.0..1000.0f64, 2usize..200).prop_map(|(level, bars)| {
            SyntheticSpec::Constant { level, bars }
        });
        let linear = (50.0..1000.0f64, -0.1..0.5f64, 2usize..200)
            .prop_map(|(start, slope, bars)| SyntheticSpec::Linear { start, slope, bars });
        let sine = (100.0..1000.0f64, 0.0..50.0f64, 2.0..200.0f64, 0.0..100.0f64, 2usize..300)
            .prop_map(|(level, amplitude, period, phase, bars)| SyntheticSpec::Sine {
                level,
                amplitude,
                period,
                phase,
                bars,
            });
        let zigzag = (100.0..500.0f64, 0.5..4.0f64, 1usize..6, 2usize..100, 0usize..12)
            .prop_map(|(start, step, m, bars, phase)| SyntheticSpec::Zigzag {
                start,
                step,
                amplitude: m as f64 * step,
                bars,
                phase,
            });
        prop_oneof![constant, linear, sine, zigzag]
    }

    proptest! {
        #[test]
        fn generated_series_honor_bar_invariants(spec in arbitrary_spec()) {
            if let Ok(series) = generate(&spec) {
                for bar in series.bars() {
                    prop_assert!(bar.validate().is_ok());
                }
                // Pure function: identical spec, identical series.
                let again = generate(&spec).unwrap();
                prop_assert_eq!(series, again);
            }
        }

        #[test]
        fn zigzag_moves_by_exactly_one_step(
            start in 100.0..500.0f64,
            m in 1usize..6,
            bars in 2usize..100,
            phase in 0usize..12,
        ) {
            let step = 2.0;
            let spec = SyntheticSpec::Zigzag {
                start, step, amplitude: m as f64 * step, bars, phase,
            };
            let closes = generate(&spec).unwrap().closes();
            for pair in closes.windows(2) {
                prop_assert!(((pair[1] - pair[0]).abs() - step).abs() < 1e-9);
            }
        }
    }
}
