//! Wilder's indicator family: True Range, ATR and the directional movement
//! group (+DI, -DI, DX, ADX, ADXR).
//!
//! All functions are pure and causal: the value at index `t` depends only on
//! bars `0..=t`. Warm-up entries are undefined.

use crate::error::{Error, Result};
use crate::market_data::BarSeries;

/// A per-bar value sequence aligned 1:1 with its source series.
///
/// Entries are `None` during warm-up. For indicator outputs, once a value is
/// defined it stays defined for all later indices; the significant-close
/// series of a gated backtest is the one producer that may leave gaps while
/// the system sits flat.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorSeries {
    values: Vec<Option<f64>>,
}

impl IndicatorSeries {
    pub fn from_options(values: Vec<Option<f64>>) -> Self {
        IndicatorSeries { values }
    }

    /// All entries undefined.
    pub fn undefined(len: usize) -> Self {
        IndicatorSeries {
            values: vec![None; len],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<f64> {
        self.values.get(index).copied().flatten()
    }

    pub fn as_slice(&self) -> &[Option<f64>] {
        &self.values
    }

    /// Index of the first defined entry.
    pub fn first_defined_index(&self) -> Option<usize> {
        self.values.iter().position(Option::is_some)
    }

    /// Last defined entry with its index.
    pub fn last_defined(&self) -> Option<(usize, f64)> {
        self.values
            .iter()
            .enumerate()
            .rev()
            .find_map(|(i, v)| v.map(|x| (i, x)))
    }

    /// Iterates over `(index, value)` for defined entries.
    pub fn iter_defined(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|x| (i, x)))
    }

    /// Mean of the defined entries, if any.
    pub fn mean_defined(&self) -> Option<f64> {
        let mut n = 0usize;
        let mut sum = 0.0;
        for (_, v) in self.iter_defined() {
            n += 1;
            sum += v;
        }
        (n > 0).then(|| sum / n as f64)
    }

    /// True when no undefined entry follows a defined one.
    pub fn is_contiguous(&self) -> bool {
        match self.first_defined_index() {
            None => true,
            Some(first) => self.values[first..].iter().all(Option::is_some),
        }
    }
}

/// Smoothing configuration for the Wilder recursions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct WilderParams {
    /// Smoothing period N: seed with the mean of the first N values, then
    /// s_t = (s_{t-1} * (N-1) + x_t) / N.
    pub period: usize,
}

impl Default for WilderParams {
    fn default() -> Self {
        WilderParams { period: 14 }
    }
}

impl WilderParams {
    pub fn new(period: usize) -> Result<Self> {
        if period == 0 {
            return Err(Error::InvalidParams(
                "smoothing period must be at least 1".into(),
            ));
        }
        Ok(WilderParams { period })
    }
}

/// Wilder smoothing over `value_at(start..len)`: undefined before
/// `start + period - 1`, seeded there with the arithmetic mean of the first
/// `period` values, recursive afterwards.
fn wilder_smooth(
    len: usize,
    start: usize,
    period: usize,
    value_at: impl Fn(usize) -> f64,
) -> IndicatorSeries {
    let mut out = vec![None; len];
    let seed_index = start + period - 1;
    if seed_index >= len {
        return IndicatorSeries::from_options(out);
    }
    let seed: f64 = (start..=seed_index).map(&value_at).sum::<f64>() / period as f64;
    out[seed_index] = Some(seed);
    let mut prev = seed;
    for (i, slot) in out.iter_mut().enumerate().skip(seed_index + 1) {
        let next = (prev * (period as f64 - 1.0) + value_at(i)) / period as f64;
        *slot = Some(next);
        prev = next;
    }
    IndicatorSeries::from_options(out)
}

/// True Range per bar: the largest of high-low, |high - previous close| and
/// |low - previous close|. The first bar has no previous close and falls back
/// to high - low.
pub fn true_range(series: &BarSeries) -> Result<IndicatorSeries> {
    let bars = series.bars();
    if bars.len() < 2 {
        return Err(Error::TooShort {
            what: "true range",
            needed: 2,
            got: bars.len(),
        });
    }
    let mut values = Vec::with_capacity(bars.len());
    values.push(Some(bars[0].high - bars[0].low));
    for pair in bars.windows(2) {
        let prev_close = pair[0].close;
        let bar = pair[1];
        let tr = (bar.high - bar.low)
            .max((bar.high - prev_close).abs())
            .max((bar.low - prev_close).abs());
        values.push(Some(tr));
    }
    Ok(IndicatorSeries::from_options(values))
}

/// Average True Range: Wilder smoothing of the True Range, seeded at index
/// `period - 1` with the mean of the first `period` TR values.
pub fn atr(series: &BarSeries, params: &WilderParams) -> Result<IndicatorSeries> {
    let n = params.period;
    if n == 0 {
        return Err(Error::InvalidParams("smoothing period must be at least 1".into()));
    }
    if series.len() < n + 1 {
        return Err(Error::TooShort {
            what: "ATR warm-up",
            needed: n + 1,
            got: series.len(),
        });
    }
    let tr = true_range(series)?;
    Ok(wilder_smooth(series.len(), 0, n, |i| tr.get(i).unwrap()))
}

/// The directional movement family computed with one smoothing period.
#[derive(Debug, Clone)]
pub struct Directional {
    pub plus_di: IndicatorSeries,
    pub minus_di: IndicatorSeries,
    pub dx: IndicatorSeries,
    pub adx: IndicatorSeries,
    pub adxr: IndicatorSeries,
}

/// Raw directional movement for one bar transition.
fn directional_movement(prev_high: f64, prev_low: f64, high: f64, low: f64) -> (f64, f64) {
    let up = high - prev_high;
    let down = prev_low - low;
    // A tie (up == down > 0) carries no direction; both sides stay 0.
    if up > down && up > 0.0 {
        (up, 0.0)
    } else if down > up && down > 0.0 {
        (0.0, down)
    } else {
        (0.0, 0.0)
    }
}

/// One-bar directionality on [0, 100] from a pair of directional indices;
/// 0 when both are 0.
pub(crate) fn dx_from_di(plus_di: f64, minus_di: f64) -> f64 {
    let sum = plus_di + minus_di;
    if sum == 0.0 {
        0.0
    } else {
        100.0 * (plus_di - minus_di).abs() / sum
    }
}

/// Computes +DI, -DI, DX, ADX and ADXR.
///
/// Directional movement exists from index 1, so the DM and TR smoothings are
/// seeded over indices 1..=N (the same window, which keeps +DI at exactly 100
/// on a monotone rise). DX is defined from index N, ADX from 2N-1 and ADXR,
/// the mean of ADX and its value N-1 bars earlier, from 3N-2.
pub fn directional(series: &BarSeries, params: &WilderParams) -> Result<Directional> {
    let n = params.period;
    if n == 0 {
        return Err(Error::InvalidParams("smoothing period must be at least 1".into()));
    }
    let len = series.len();
    if len < 2 * n {
        return Err(Error::TooShort {
            what: "directional movement warm-up",
            needed: 2 * n,
            got: len,
        });
    }

    let bars = series.bars();
    let tr = true_range(series)?;
    let mut plus_dm = vec![0.0; len];
    let mut minus_dm = vec![0.0; len];
    for t in 1..len {
        let (p, m) = directional_movement(
            bars[t - 1].high,
            bars[t - 1].low,
            bars[t].high,
            bars[t].low,
        );
        plus_dm[t] = p;
        minus_dm[t] = m;
    }

    let smooth_plus = wilder_smooth(len, 1, n, |i| plus_dm[i]);
    let smooth_minus = wilder_smooth(len, 1, n, |i| minus_dm[i]);
    let smooth_tr = wilder_smooth(len, 1, n, |i| tr.get(i).unwrap());

    let di = |dm: &IndicatorSeries, i: usize| -> Option<f64> {
        let dm = dm.get(i)?;
        let tr = smooth_tr.get(i)?;
        Some(if tr == 0.0 { 0.0 } else { 100.0 * dm / tr })
    };
    let plus_di =
        IndicatorSeries::from_options((0..len).map(|i| di(&smooth_plus, i)).collect());
    let minus_di =
        IndicatorSeries::from_options((0..len).map(|i| di(&smooth_minus, i)).collect());

    let dx_values: Vec<Option<f64>> = (0..len)
        .map(|i| Some(dx_from_di(plus_di.get(i)?, minus_di.get(i)?)))
        .collect();
    let dx = IndicatorSeries::from_options(dx_values);

    let dx_start = dx.first_defined_index().unwrap_or(len);
    let adx = if dx_start + n <= len {
        wilder_smooth(len, dx_start, n, |i| dx.get(i).unwrap())
    } else {
        IndicatorSeries::undefined(len)
    };

    let lag = n - 1;
    let adxr_values: Vec<Option<f64>> = (0..len)
        .map(|i| {
            let current = adx.get(i)?;
            let lagged = adx.get(i.checked_sub(lag)?)?;
            Some((current + lagged) / 2.0)
        })
        .collect();
    let adxr = IndicatorSeries::from_options(adxr_values);

    Ok(Directional {
        plus_di,
        minus_di,
        dx,
        adx,
        adxr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::{generate, Bar, BarSeries, SyntheticSpec, Timestamp};
    use proptest::prelude::*;

    fn series_from_ohlc(rows: &[(f64, f64, f64, f64)]) -> BarSeries {
        let bars = rows
            .iter()
            .enumerate()
            .map(|(i, &(open, high, low, close))| Bar {
                timestamp: Timestamp::Index(i as u64),
                open,
                high,
                low,
                close,
            })
            .collect();
        BarSeries::new("test", bars).unwrap()
    }

    fn wire_series(closes: &[f64]) -> BarSeries {
        let bars = closes
            .iter()
            .enumerate()
            .map(|(i, &c)| Bar::wire(Timestamp::Index(i as u64), c))
            .collect();
        BarSeries::new("wire", bars).unwrap()
    }

    /// Random-walk OHLC bars on a dyadic price grid, deterministic per seed.
    fn random_walk(seed: u64, len: usize) -> BarSeries {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let grid = 64.0;
        let snap = |v: f64| (v * grid).round() / grid;
        let mut close = 100.0;
        let mut bars = Vec::with_capacity(len);
        for i in 0..len {
            let open = close;
            close = snap((close + rng.gen_range(-2.0..2.0f64)).max(5.0));
            let spread_high = snap(rng.gen_range(0.0..1.5));
            let spread_low = snap(rng.gen_range(0.0..1.5));
            let high = open.max(close) + spread_high;
            let low = (open.min(close) - spread_low).max(1.0);
            bars.push(Bar {
                timestamp: Timestamp::Index(i as u64),
                open,
                high,
                low,
                close,
            });
        }
        BarSeries::new("walk", bars).unwrap()
    }

    #[test]
    fn true_range_takes_the_widest_of_three() {
        // H=12, L=10 with previous close 11: plain range 2 wins.
        let series = series_from_ohlc(&[(11.0, 11.5, 10.5, 11.0), (11.0, 12.0, 10.0, 11.5)]);
        let tr = true_range(&series).unwrap();
        assert_eq!(tr.get(1), Some(2.0));
    }

    #[test]
    fn true_range_catches_gaps() {
        // Gap up: H=15, L=14 after a close at 10; |H - prev close| = 5 wins.
        let series = series_from_ohlc(&[(10.0, 10.5, 9.5, 10.0), (14.5, 15.0, 14.0, 14.5)]);
        let tr = true_range(&series).unwrap();
        assert_eq!(tr.get(1), Some(5.0));
    }

    #[test]
    fn true_range_on_wire_bars_is_close_change() {
        let series = wire_series(&[100.0, 102.0]);
        let tr = true_range(&series).unwrap();
        assert_eq!(tr.get(0), Some(0.0));
        assert_eq!(tr.get(1), Some(2.0));
    }

    #[test]
    fn atr_hand_recursion() {
        // TR sequence 2, 2, 2, 5: seed mean 2 at index 2, then (2*2 + 5)/3 = 3.
        let series = series_from_ohlc(&[
            (11.0, 12.0, 10.0, 11.0),
            (11.0, 12.0, 10.0, 11.0),
            (11.0, 12.0, 10.0, 11.0),
            (12.0, 16.0, 11.0, 12.0),
        ]);
        let tr = true_range(&series).unwrap();
        assert_eq!(
            tr.as_slice(),
            &[Some(2.0), Some(2.0), Some(2.0), Some(5.0)]
        );
        let atr = atr(&series, &WilderParams::new(3).unwrap()).unwrap();
        assert_eq!(atr.as_slice(), &[None, None, Some(2.0), Some(3.0)]);
    }

    #[test]
    fn atr_is_fixed_point_on_constant_tr() {
        // All bars share the same range and close, so TR is constant.
        let rows: Vec<(f64, f64, f64, f64)> = (0..20).map(|_| (11.0, 12.0, 10.0, 11.0)).collect();
        let series = series_from_ohlc(&rows);
        let atr = atr(&series, &WilderParams::default()).unwrap();
        for (i, v) in atr.iter_defined() {
            assert_eq!(v, 2.0, "index {i}");
        }
        assert_eq!(atr.first_defined_index(), Some(13));
    }

    #[test]
    fn atr_too_short_errors() {
        let series = wire_series(&[100.0, 101.0, 102.0]);
        let err = atr(&series, &WilderParams::new(3).unwrap()).unwrap_err();
        assert!(matches!(err, Error::TooShort { .. }), "{err}");
    }

    /// Replays the seed-then-recurse definition from scratch for one prefix.
    fn atr_oracle(tr: &[f64], period: usize, upto: usize) -> Option<f64> {
        if upto + 1 < period {
            return None;
        }
        let mut value = tr[..period].iter().sum::<f64>() / period as f64;
        for &x in &tr[period..=upto] {
            value = (value * (period as f64 - 1.0) + x) / period as f64;
        }
        Some(value)
    }

    #[test]
    fn atr_matches_prefix_replay_oracle() {
        let series = random_walk(7, 200);
        let tr: Vec<f64> = true_range(&series)
            .unwrap()
            .iter_defined()
            .map(|(_, v)| v)
            .collect();
        for period in [1usize, 2, 5, 14] {
            let atr = atr(&series, &WilderParams::new(period).unwrap()).unwrap();
            for t in 0..series.len() {
                match (atr.get(t), atr_oracle(&tr, period, t)) {
                    (None, None) => {}
                    (Some(a), Some(b)) => {
                        let rel = (a - b).abs() / b.abs().max(1e-300);
                        assert!(rel <= 1e-12, "period {period} index {t}: {a} vs {b}");
                    }
                    (a, b) => panic!("definedness mismatch at {t}: {a:?} vs {b:?}"),
                }
            }
        }
    }

    #[test]
    fn zigzag_atr_with_unit_period_is_the_step() {
        let spec = SyntheticSpec::Zigzag {
            start: 100.0,
            step: 2.0,
            amplitude: 4.0,
            bars: 40,
            phase: 0,
        };
        let series = generate(&spec).unwrap();
        let atr = atr(&series, &WilderParams::new(1).unwrap()).unwrap();
        // The very first wire bar has no close-to-close move, so its range is 0;
        // every later bar moves by exactly one step.
        assert_eq!(atr.get(0), Some(0.0));
        for t in 1..series.len() {
            assert_eq!(atr.get(t), Some(2.0), "index {t}");
        }
    }

    #[test]
    fn directional_movement_hand_cases() {
        // prev H=10, L=8; today H=12, L=9: up move 2 beats down move -1.
        assert_eq!(directional_movement(10.0, 8.0, 12.0, 9.0), (2.0, 0.0));
        // Inside day: both moves negative.
        assert_eq!(directional_movement(10.0, 8.0, 9.5, 8.5), (0.0, 0.0));
        // Tie carries no direction.
        assert_eq!(directional_movement(10.0, 8.0, 11.0, 7.0), (0.0, 0.0));
    }

    #[test]
    fn dx_formula_hand_case() {
        assert_eq!(dx_from_di(30.0, 10.0), 50.0);
        assert_eq!(dx_from_di(0.0, 0.0), 0.0);
    }

    #[test]
    fn monotone_rise_pins_dx_at_100() {
        let closes: Vec<f64> = (0..60).map(|t| 100.0 + t as f64).collect();
        let series = wire_series(&closes);
        let d = directional(&series, &WilderParams::default()).unwrap();
        for (i, v) in d.minus_di.iter_defined() {
            assert_eq!(v, 0.0, "minus DI at {i}");
        }
        for (i, v) in d.dx.iter_defined() {
            assert_eq!(v, 100.0, "DX at {i}");
        }
        for (i, v) in d.adx.iter_defined() {
            assert!((v - 100.0).abs() < 1e-9, "ADX at {i}: {v}");
        }
    }

    #[test]
    fn directional_warm_up_indices() {
        let series = random_walk(3, 100);
        let n = 14;
        let d = directional(&series, &WilderParams::new(n).unwrap()).unwrap();
        assert_eq!(d.plus_di.first_defined_index(), Some(n));
        assert_eq!(d.dx.first_defined_index(), Some(n));
        assert_eq!(d.adx.first_defined_index(), Some(2 * n - 1));
        assert_eq!(d.adxr.first_defined_index(), Some(3 * n - 2));
    }

    #[test]
    fn directional_too_short_errors() {
        let series = random_walk(3, 20);
        let err = directional(&series, &WilderParams::new(14).unwrap()).unwrap_err();
        assert!(matches!(err, Error::TooShort { .. }), "{err}");
    }

    proptest! {
        #[test]
        fn dx_family_stays_in_bounds(seed in 0u64..1000, period in 1usize..10) {
            let series = random_walk(seed, 80);
            if let Ok(d) = directional(&series, &WilderParams::new(period).unwrap()) {
                for s in [&d.dx, &d.adx, &d.adxr, &d.plus_di, &d.minus_di] {
                    for (i, v) in s.iter_defined() {
                        prop_assert!((0.0..=100.0 + 1e-9).contains(&v), "index {} value {}", i, v);
                    }
                    prop_assert!(s.is_contiguous());
                }
            }
        }

        #[test]
        fn translation_leaves_tr_and_dm_unchanged(seed in 0u64..200, shift_units in 1u32..2000) {
            // Dyadic grid prices plus a dyadic shift keep every difference exact.
            let shift = shift_units as f64 / 16.0;
            let series = random_walk(seed, 60);
            let shifted_bars: Vec<Bar> = series
                .bars()
                .iter()
                .map(|b| Bar {
                    timestamp: b.timestamp,
                    open: b.open + shift,
                    high: b.high + shift,
                    low: b.low + shift,
                    close: b.close + shift,
                })
                .collect();
            let shifted = BarSeries::new("shifted", shifted_bars).unwrap();

            let tr_a = true_range(&series).unwrap();
            let tr_b = true_range(&shifted).unwrap();
            prop_assert_eq!(tr_a.as_slice(), tr_b.as_slice());

            let bars_a = series.bars();
            let bars_b = shifted.bars();
            for t in 1..bars_a.len() {
                let dm_a = directional_movement(bars_a[t - 1].high, bars_a[t - 1].low, bars_a[t].high, bars_a[t].low);
                let dm_b = directional_movement(bars_b[t - 1].high, bars_b[t - 1].low, bars_b[t].high, bars_b[t].low);
                prop_assert_eq!(dm_a, dm_b);
            }
        }
    }
}
