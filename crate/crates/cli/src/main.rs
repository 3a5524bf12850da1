//! `powertrend` — command-line surface over the research library.
//!
//! Every subcommand reads one series (CSV or synthetic) or a directory of
//! them, computes one pipeline stage and emits CSV/JSON data files that any
//! plotting tool can consume.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 computation
//! degeneracy.

mod output;

use clap::{Args, Parser, Subcommand};
use output::{parse_grid, parse_int_grid, Format, Writer};
use powertrend::backtest::{
    self, ma_sweep_csv, run_gated, run_universe, sweep_csv, Exclusion, GateMode, RatioStat,
    SweepSpec,
};
use powertrend::market_data::{generate, load_csv, BarSeries, CsvFormat, SyntheticSpec};
use powertrend::power::{power_report, PowerParams};
use powertrend::stats::{ols_pairwise, RegressionResult};
use powertrend::volsys::{self, InitialDirection, VolSysParams};
use powertrend::wilder::{self, WilderParams};
use powertrend::{Error, Result};
use serde::Serialize;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "powertrend",
    version,
    about = "Volatility-stop trend following with signal/noise power ratios",
    after_help = "Exit codes: 0 success, 1 usage error, 2 data error, 3 computation degeneracy."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-bar TR/ATR and the DX/ADX/ADXR directional family
    Indicators(IndicatorsArgs),
    /// Per-bar power report (signal/noise/threshold powers and ratios)
    Power(PowerArgs),
    /// One volatility-system run: trade ledger, per-bar state and summary
    Backtest(BacktestArgs),
    /// P&L across a stop-multiplier grid
    Sweep(SweepArgs),
    /// Final-bar power ratios across a grid of MA ranges
    MaSweep(MaSweepArgs),
    /// Full protocol across a directory of CSV series
    Universe(UniverseArgs),
    /// Least-squares fit of one universe column against another
    Regress(RegressArgs),
}

/// Exactly one input source.
#[derive(Args)]
#[group(required = true, multiple = false)]
struct InputArgs {
    /// CSV file with date,open,high,low,close[,volume] columns
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
    /// Synthetic spec `kind:param:...` (constant, linear, sine, sine-linear,
    /// multi-sine-linear, zigzag) or `@file.json`
    #[arg(long, value_name = "SPEC")]
    synth: Option<String>,
}

impl InputArgs {
    fn load(&self) -> Result<BarSeries> {
        if let Some(path) = &self.csv {
            return load_csv(path, &CsvFormat::default());
        }
        let spec = self.synth.as_deref().expect("clap enforces one input");
        let spec: SyntheticSpec = if let Some(path) = spec.strip_prefix('@') {
            let body = std::fs::read_to_string(path)?;
            serde_json::from_str(&body)
                .map_err(|e| Error::InvalidParams(format!("bad synthetic spec file {path}: {e}")))?
        } else {
            spec.parse()?
        };
        generate(&spec)
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Output directory
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Omit the `# generated <time>` header line from CSV outputs
    #[arg(long)]
    no_timestamp: bool,
}

impl OutputArgs {
    fn writer(&self) -> Result<Writer> {
        Writer::new(&self.out, self.format, self.no_timestamp)
    }
}

#[derive(Args)]
struct SystemArgs {
    /// Wilder smoothing period for ATR and the directional family
    #[arg(long, default_value_t = 14)]
    period: usize,
    /// Initial position when the system starts
    #[arg(long, value_enum, default_value_t = DirectionArg::Auto)]
    direction: DirectionArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum DirectionArg {
    Long,
    Short,
    Auto,
}

impl From<DirectionArg> for InitialDirection {
    fn from(d: DirectionArg) -> Self {
        match d {
            DirectionArg::Long => InitialDirection::Long,
            DirectionArg::Short => InitialDirection::Short,
            DirectionArg::Auto => InitialDirection::Auto,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum GateModeArg {
    Off,
    ArmOnce,
    WhileAbove,
}

impl From<GateModeArg> for GateMode {
    fn from(m: GateModeArg) -> Self {
        match m {
            GateModeArg::Off => GateMode::Off,
            GateModeArg::ArmOnce => GateMode::ArmOnce,
            GateModeArg::WhileAbove => GateMode::WhileAbove,
        }
    }
}

#[derive(Args)]
struct GateArgs {
    /// Signal-ratio level that arms the gate
    #[arg(long, value_name = "LEVEL", default_value_t = 4.0)]
    gate: f64,
    /// How the gate applies
    #[arg(long, value_enum, default_value_t = GateModeArg::Off)]
    gate_mode: GateModeArg,
}

fn volsys_params(period: usize, multiplier: f64, direction: DirectionArg) -> Result<VolSysParams> {
    Ok(VolSysParams::new(multiplier, WilderParams::new(period)?)?
        .with_initial_direction(direction.into()))
}

// ---------------------------------------------------------------------------
// indicators
// ---------------------------------------------------------------------------

#[derive(Args)]
struct IndicatorsArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    system: SystemArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Serialize)]
struct IndicatorRow {
    index: usize,
    date: String,
    open: f64,
    high: f64,
    low: f64,
    close: f64,
    tr: Option<f64>,
    atr: Option<f64>,
    plus_di: Option<f64>,
    minus_di: Option<f64>,
    dx: Option<f64>,
    adx: Option<f64>,
    adxr: Option<f64>,
}

fn cmd_indicators(args: &IndicatorsArgs) -> Result<()> {
    let series = args.input.load()?;
    let params = WilderParams::new(args.system.period)?;
    let tr = wilder::true_range(&series)?;
    let atr = wilder::atr(&series, &params)?;
    // The directional family needs a longer series than TR/ATR; leave its
    // columns empty rather than refusing the whole table.
    let directional = match wilder::directional(&series, &params) {
        Ok(d) => Some(d),
        Err(e) => {
            eprintln!("note: directional columns left empty: {e}");
            None
        }
    };

    let rows: Vec<IndicatorRow> = series
        .bars()
        .iter()
        .enumerate()
        .map(|(i, bar)| IndicatorRow {
            index: i,
            date: bar.timestamp.to_string(),
            open: bar.open,
            high: bar.high,
            low: bar.low,
            close: bar.close,
            tr: tr.get(i),
            atr: atr.get(i),
            plus_di: directional.as_ref().and_then(|d| d.plus_di.get(i)),
            minus_di: directional.as_ref().and_then(|d| d.minus_di.get(i)),
            dx: directional.as_ref().and_then(|d| d.dx.get(i)),
            adx: directional.as_ref().and_then(|d| d.adx.get(i)),
            adxr: directional.as_ref().and_then(|d| d.adxr.get(i)),
        })
        .collect();

    let mut csv =
        String::from("index,date,open,high,low,close,tr,atr,plus_di,minus_di,dx,adx,adxr\n");
    let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.index,
            r.date,
            r.open,
            r.high,
            r.low,
            r.close,
            cell(r.tr),
            cell(r.atr),
            cell(r.plus_di),
            cell(r.minus_di),
            cell(r.dx),
            cell(r.adx),
            cell(r.adxr),
        ));
    }
    args.output.writer()?.write_table("indicators", &csv, &rows)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// power
// ---------------------------------------------------------------------------

#[derive(Args)]
struct PowerArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    system: SystemArgs,
    /// Power windows, e.g. 30,50,100
    #[arg(long, value_name = "N[,N...]", default_value = "30,50,100")]
    window: String,
    /// Moving-average range; defaults to each power window
    #[arg(long, value_name = "N")]
    ma_window: Option<usize>,
    /// Stop multiplier for the threshold's volatility-system run
    #[arg(long, default_value_t = 3.0)]
    mult: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Serialize)]
struct PowerRow {
    index: usize,
    date: String,
    close: f64,
    ma: Option<f64>,
    power_signal: Option<f64>,
    power_noise: Option<f64>,
    power_threshold: Option<f64>,
    r_signal: Option<f64>,
    r_noise: Option<f64>,
    flags: String,
}

fn cmd_power(args: &PowerArgs) -> Result<()> {
    let series = args.input.load()?;
    let params = volsys_params(args.system.period, args.mult, args.system.direction)?;
    let result = volsys::run(&series, &params, None)?;
    let writer = args.output.writer()?;
    for window in parse_int_grid(&args.window)? {
        let mut power_params = PowerParams::new(window)?;
        if let Some(ma) = args.ma_window {
            power_params = power_params.with_ma_window(ma)?;
        }
        let report = power_report(&series, &power_params, &result)?;
        let rows: Vec<PowerRow> = series
            .bars()
            .iter()
            .enumerate()
            .map(|(i, bar)| PowerRow {
                index: i,
                date: bar.timestamp.to_string(),
                close: bar.close,
                ma: report.ma.get(i),
                power_signal: report.power_signal.get(i),
                power_noise: report.power_noise.get(i),
                power_threshold: report.power_threshold.get(i),
                r_signal: report.r_signal.get(i),
                r_noise: report.r_noise.get(i),
                flags: report.flags[i].to_string(),
            })
            .collect();
        writer.write_table(&format!("power_{window}"), &report.to_csv(&series), &rows)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// backtest
// ---------------------------------------------------------------------------

#[derive(Args)]
struct BacktestArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    system: SystemArgs,
    /// Stop multiplier (ARC = multiplier * ATR)
    #[arg(long, default_value_t = 3.0)]
    mult: f64,
    #[command(flatten)]
    gate: GateArgs,
    /// Power window for the gate's report when gating is on
    #[arg(long, value_name = "N", default_value_t = 30)]
    window: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Serialize)]
struct StateRow {
    index: usize,
    date: String,
    close: f64,
    position: String,
    sic: Option<f64>,
    sar: Option<f64>,
}

#[derive(Serialize)]
struct BacktestSummary {
    symbol: String,
    multiplier: f64,
    period: usize,
    gate_mode: String,
    trades: usize,
    realized_pnl_points: f64,
    total_pnl_points: f64,
    total_pnl_norm: f64,
    first_entry_price: Option<f64>,
    open_position: Option<volsys::OpenPosition>,
}

fn cmd_backtest(args: &BacktestArgs) -> Result<()> {
    let series = args.input.load()?;
    let params = volsys_params(args.system.period, args.mult, args.system.direction)?;
    let result = run_gated(
        &series,
        &params,
        &PowerParams::new(args.window)?,
        args.gate.gate,
        args.gate.gate_mode.into(),
    )?;

    let writer = args.output.writer()?;
    writer.write_table("trades", &result.trades_csv(), &result.trades)?;

    let rows: Vec<StateRow> = series
        .bars()
        .iter()
        .enumerate()
        .map(|(i, bar)| StateRow {
            index: i,
            date: bar.timestamp.to_string(),
            close: bar.close,
            position: result.position_series[i].to_string(),
            sic: result.sic_series.get(i),
            sar: result.sar_series.get(i),
        })
        .collect();
    let mut csv = String::from("index,date,close,position,sic,sar\n");
    let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.index, r.date, r.close, r.position, cell(r.sic), cell(r.sar)
        ));
    }
    writer.write_table("series", &csv, &rows)?;

    let summary = BacktestSummary {
        symbol: series.symbol().to_string(),
        multiplier: args.mult,
        period: args.system.period,
        gate_mode: GateMode::from(args.gate.gate_mode).to_string(),
        trades: result.trades.len(),
        realized_pnl_points: result.realized_pnl_points,
        total_pnl_points: result.total_pnl_points,
        total_pnl_norm: result.total_pnl_norm(),
        first_entry_price: result.first_entry_price,
        open_position: result.open_position,
    };
    writer.write_json("summary", &summary)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    system: SystemArgs,
    /// Multiplier grid: `start:end:step`, a comma list, or one value
    #[arg(long, value_name = "GRID", default_value = "0.1:8.0:0.1")]
    mult: String,
    #[command(flatten)]
    gate: GateArgs,
    /// Power window for the gate's report when gating is on
    #[arg(long, value_name = "N", default_value_t = 30)]
    window: usize,
    /// Worker threads (0 = all cores)
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[command(flatten)]
    output: OutputArgs,
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let series = args.input.load()?;
    let base = volsys_params(args.system.period, 1.0, args.system.direction)?;
    let spec = SweepSpec {
        multipliers: parse_grid(&args.mult)?,
        power_windows: vec![args.window],
        gate_level: args.gate.gate,
        gate_mode: args.gate.gate_mode.into(),
    };
    let power_params = PowerParams::new(args.window)?;
    let points = in_pool(args.workers, || {
        backtest::sweep_multiplier(&series, &spec, &power_params, &base)
    })?;
    args.output
        .writer()?
        .write_table("sweep", &sweep_csv(&points), &points)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// ma-sweep
// ---------------------------------------------------------------------------

#[derive(Args)]
struct MaSweepArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    system: SystemArgs,
    /// MA-range grid: `start:end:step`, a comma list, or one value
    #[arg(long, value_name = "GRID", default_value = "10:400:10")]
    ranges: String,
    /// Stop multiplier for the threshold's volatility-system run
    #[arg(long, default_value_t = 3.0)]
    mult: f64,
    #[command(flatten)]
    output: OutputArgs,
}

fn cmd_ma_sweep(args: &MaSweepArgs) -> Result<()> {
    let series = args.input.load()?;
    let params = volsys_params(args.system.period, args.mult, args.system.direction)?;
    let ranges = parse_int_grid(&args.ranges)?;
    let points = backtest::sweep_ma_range(&series, &ranges, &params)?;
    args.output
        .writer()?
        .write_table("ma_sweep", &ma_sweep_csv(&points), &points)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// universe
// ---------------------------------------------------------------------------

#[derive(Args)]
struct UniverseArgs {
    /// Directory of per-symbol CSV files
    #[arg(long, value_name = "DIR")]
    dir: PathBuf,
    /// Power windows; one universe file per window
    #[arg(long, value_name = "N[,N...]", default_value = "30,50,100")]
    windows: String,
    #[command(flatten)]
    system: SystemArgs,
    /// Stop multiplier
    #[arg(long, default_value_t = 3.0)]
    mult: f64,
    #[command(flatten)]
    gate: GateArgs,
    /// Which ratio statistic fills the r_signal/r_noise columns
    #[arg(long, value_name = "final|mean", default_value = "final")]
    ratio_stat: String,
    /// Worker threads (0 = all cores)
    #[arg(long, default_value_t = 0)]
    workers: usize,
    #[command(flatten)]
    output: OutputArgs,
}

fn cmd_universe(args: &UniverseArgs) -> Result<()> {
    let stat: RatioStat = args.ratio_stat.parse()?;
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&args.dir)?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::InvalidInput(format!(
            "no CSV files in {}",
            args.dir.display()
        )));
    }

    // A file that fails to load is an exclusion, not an abort.
    let mut series_set = Vec::new();
    let mut load_exclusions = Vec::new();
    for path in &paths {
        match load_csv(path, &CsvFormat::default()) {
            Ok(series) => series_set.push(series),
            Err(e) => load_exclusions.push(Exclusion {
                symbol: path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| path.display().to_string()),
                reason: e.to_string(),
            }),
        }
    }

    let params = volsys_params(args.system.period, args.mult, args.system.direction)?;
    let writer = args.output.writer()?;
    for window in parse_int_grid(&args.windows)? {
        let spec = SweepSpec {
            power_windows: vec![window],
            gate_level: args.gate.gate,
            gate_mode: args.gate.gate_mode.into(),
            ..Default::default()
        };
        let power_params = PowerParams::new(window)?;
        let mut result = in_pool(args.workers, || {
            run_universe(&series_set, &spec, &power_params, &params)
        })?;
        result.exclusions.extend(load_exclusions.iter().cloned());
        result.exclusions.sort_by(|a, b| a.symbol.cmp(&b.symbol));

        writer.write_table(
            &format!("universe_{window}"),
            &result.to_csv(stat),
            &result,
        )?;
        match writer.format {
            Format::Csv => writer.write_csv(
                &format!("exclusions_{window}"),
                &result.exclusions_csv(),
            )?,
            Format::Json => {
                writer.write_json(&format!("exclusions_{window}"), &result.exclusions)?
            }
        };
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// regress
// ---------------------------------------------------------------------------

#[derive(Args)]
struct RegressArgs {
    /// Universe CSV produced by the `universe` subcommand
    #[arg(long = "in", value_name = "PATH")]
    input: PathBuf,
    /// Predictor column
    #[arg(long, value_name = "COLUMN")]
    x: String,
    /// Response column
    #[arg(long, value_name = "COLUMN", default_value = "final_pnl_norm")]
    y: String,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Serialize)]
struct RegressionSummary {
    x: String,
    y: String,
    #[serde(flatten)]
    fit: RegressionResult,
    /// Rows dropped pairwise: excluded symbols or missing cells.
    dropped: usize,
}

fn cmd_regress(args: &RegressArgs) -> Result<()> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(&args.input)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| {
                Error::InvalidParams(format!(
                    "column '{name}' not found; available: {}",
                    headers.iter().collect::<Vec<_>>().join(",")
                ))
            })
    };
    let x_col = col(&args.x)?;
    let y_col = col(&args.y)?;
    let excluded_col = headers.iter().position(|h| h.eq_ignore_ascii_case("excluded"));

    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for record in reader.records() {
        let record = record?;
        if let Some(c) = excluded_col {
            if record.get(c).is_some_and(|v| v == "true") {
                xs.push(None);
                ys.push(None);
                continue;
            }
        }
        let parse = |idx: usize| record.get(idx).and_then(|v| v.parse::<f64>().ok());
        xs.push(parse(x_col));
        ys.push(parse(y_col));
    }

    let (fit, dropped) = ols_pairwise(&xs, &ys)?;
    let summary = RegressionSummary {
        x: args.x.clone(),
        y: args.y.clone(),
        fit,
        dropped,
    };
    let writer = args.output.writer()?;
    match writer.format {
        Format::Json => writer.write_json("regression", &summary)?,
        Format::Csv => {
            let csv = format!(
                "x,y,slope,intercept,r_squared,n,dropped\n{},{},{},{},{},{},{}\n",
                summary.x,
                summary.y,
                summary.fit.slope,
                summary.fit.intercept,
                summary.fit.r_squared,
                summary.fit.n,
                summary.dropped
            );
            writer.write_csv("regression", &csv)?
        }
    };
    // The headline number, also on stdout.
    println!(
        "r_squared = {:.6} (slope {:.6}, intercept {:.6}, n {}, dropped {})",
        summary.fit.r_squared, summary.fit.slope, summary.fit.intercept, summary.fit.n, summary.dropped
    );
    Ok(())
}

// ---------------------------------------------------------------------------

/// Runs `f` inside a dedicated rayon pool of `workers` threads; 0 uses the
/// default global pool.
fn in_pool<T: Send>(workers: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    if workers == 0 {
        return f();
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidParams(format!("cannot build worker pool: {e}")))?
        .install(f)
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidParams(_) => 1,
        Error::Degenerate(_) => 3,
        _ => 2,
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap's own message already includes the usage text.
            let _ = e.print();
            std::process::exit(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Indicators(args) => cmd_indicators(args),
        Command::Power(args) => cmd_power(args),
        Command::Backtest(args) => cmd_backtest(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::MaSweep(args) => cmd_ma_sweep(args),
        Command::Universe(args) => cmd_universe(args),
        Command::Regress(args) => cmd_regress(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(exit_code(&e));
    }
}
