//! The `zclb` command line.
//!
//! Every subcommand computes its full output in memory before anything is
//! written; files go through [`write_atomic`], so a failed run leaves no
//! partial output. Usage errors exit with status 2 and the usage text,
//! domain errors with status 1 and one JSON line on stderr.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::affine::{zclb_price, zclb_yield, FactorState, ModelParams, Tenor};
use crate::calibration::{calibrate, CalibrationConfig, FreeParam};
use crate::data_io::{
    fmt_date, fmt_f64, load_panel, write_atomic, write_panel_csv, YieldPanel, DAILY_DT, DEFAULT_TREASURY_COLUMN,
    DEFAULT_TREASURY_TENOR,
};
use crate::error::{Error, Result};
use crate::kalman::{run_filter, FilterInit};
use crate::simulation::{filter_experiment, monte_carlo_survival, simulate_panel, InitialState, SimulationConfig};
use crate::state_space::build_system;

const DEFAULT_PRICE_GRID: [f64; 6] = [1.0, 2.0, 5.0, 10.0, 20.0, 30.0];

#[derive(Parser, Debug)]
#[command(
    name = "zclb",
    version,
    about = "Zero-coupon longevity bond model: pricing, filtering, calibration and simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Price and yield curve over a tenor grid.
    Price(PriceArgs),
    /// Synthetic yield panel and the true factor path.
    Simulate(SimulateArgs),
    /// Kalman filter over a yield panel.
    Filter(FilterArgs),
    /// Maximum-likelihood calibration on a yield panel.
    Calibrate(CalibrateArgs),
    /// Monte Carlo survival rates.
    Survival(SurvivalArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum InitArg {
    Zero,
    Stationary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FilterInitArg {
    Stationary,
    Diffuse,
}

#[derive(Args, Debug)]
struct OutputArgs {
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Write the result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Model parameters: a flat JSON file, overridden field by field by flags.
#[derive(Args, Debug)]
struct ParamArgs {
    /// Model parameters as a JSON object; the flags below override its fields.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Long-run level of the short rate.
    #[arg(long, allow_negative_numbers = true)]
    mu_r: Option<f64>,
    /// Long-run level of the mortality intensity.
    #[arg(long, allow_negative_numbers = true)]
    mu_lambda: Option<f64>,
    /// Mean-reversion speed of the rate factor.
    #[arg(long)]
    zeta_r: Option<f64>,
    /// Mean-reversion speed of the mortality factor.
    #[arg(long)]
    zeta_lambda: Option<f64>,
    /// Second reversion speed of the rate convexity term (defaults to --zeta-r).
    #[arg(long)]
    zeta2_r: Option<f64>,
    /// Second reversion speed of the mortality convexity term (defaults to --zeta-lambda).
    #[arg(long)]
    zeta2_lambda: Option<f64>,
    /// Factor volatility.
    #[arg(long)]
    kappa11: Option<f64>,
    /// Cross volatility in the convexity term.
    #[arg(long)]
    kappa12: Option<f64>,
    /// Market price of risk.
    #[arg(long, allow_negative_numbers = true)]
    theta1: Option<f64>,
    /// Measurement noise variance per tenor.
    #[arg(long)]
    h_meas: Option<f64>,
}

#[derive(Args, Debug)]
struct DataArgs {
    /// Treasury quotes (`Date,...,Adj Close,...`) or a panel (`date,<tenor>,...`).
    #[arg(long)]
    data: PathBuf,
    /// Treasury column to read.
    #[arg(long, default_value = DEFAULT_TREASURY_COLUMN)]
    column: String,
    /// Maturity in years of the Treasury series.
    #[arg(long, default_value_t = DEFAULT_TREASURY_TENOR)]
    treasury_tenor: f64,
    #[arg(long)]
    from: Option<NaiveDate>,
    #[arg(long)]
    to: Option<NaiveDate>,
}

#[derive(Args, Debug)]
struct PriceArgs {
    #[command(flatten)]
    params: ParamArgs,
    /// A single tenor in years; may be repeated.
    #[arg(long)]
    tenor: Vec<f64>,
    /// Comma-separated tenors in years.
    #[arg(long, value_delimiter = ',')]
    tenors: Vec<f64>,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    x_r: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    x_lambda: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, default_value_t = DAILY_DT)]
    dt: f64,
    #[arg(long, default_value_t = 500)]
    steps: usize,
    #[arg(long, value_delimiter = ',', default_value = "1,5,10")]
    tenors: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "stationary")]
    initial: InitArg,
    #[arg(long)]
    start_date: Option<NaiveDate>,
    /// Also write the true states (date,x_r,x_lambda) here.
    #[arg(long)]
    states_out: Option<PathBuf>,
    /// Also write real, observed and filtered yields of the first tenor here.
    #[arg(long)]
    triple_out: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct FilterArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, default_value_t = DAILY_DT)]
    dt: f64,
    #[arg(long, value_enum, default_value = "stationary")]
    init: FilterInitArg,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct CalibrateArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Initial guess; fields not given fall back to data-driven defaults.
    #[command(flatten)]
    params: ParamArgs,
    /// Calibration config as JSON; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated free parameters.
    #[arg(long, value_delimiter = ',')]
    free: Vec<String>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SurvivalArgs {
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, value_delimiter = ',', default_value = "1,5,10")]
    horizons: Vec<f64>,
    #[arg(long, default_value_t = 10_000)]
    paths: usize,
    #[arg(long, default_value_t = DAILY_DT)]
    dt: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "zero")]
    initial: InitArg,
    /// Start from this mortality factor instead of `--initial`.
    #[arg(long, allow_negative_numbers = true)]
    x_lambda: Option<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

/// Options shared by every run after flags and files are resolved.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub params: Option<ModelParams>,
    pub calibration: Option<CalibrationConfig>,
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub dt: f64,
    pub tenors: Vec<f64>,
    pub seed: u64,
}

impl RunConfig {
    fn new(format: Format, out: Option<PathBuf>) -> Self {
        RunConfig {
            params: None,
            calibration: None,
            data: None,
            out,
            format,
            dt: DAILY_DT,
            tenors: Vec::new(),
            seed: 0,
        }
    }

    /// Input paths must exist before any work starts.
    pub fn check_inputs(&self) -> Result<()> {
        if let Some(p) = &self.data {
            if !p.is_file() {
                return Err(Error::InvalidInput(format!("data file {} does not exist", p.display())));
            }
        }
        Ok(())
    }
}

/// Bytes produced by a run: the main output plus side files.
struct Output {
    main: Vec<u8>,
    side: Vec<(PathBuf, Vec<u8>)>,
}

impl Output {
    fn main(main: Vec<u8>) -> Self {
        Output { main, side: Vec::new() }
    }
}

fn read_json_object(path: &Path) -> Result<Map<String, Value>> {
    let text = std::fs::read_to_string(path)?;
    match serde_json::from_str(&text)? {
        Value::Object(m) => Ok(m),
        _ => Err(Error::InvalidParams(format!("{} is not a JSON object", path.display()))),
    }
}

impl ParamArgs {
    fn resolve(&self, defaults: Map<String, Value>) -> Result<ModelParams> {
        let mut map = defaults;
        if let Some(path) = &self.params {
            map.extend(read_json_object(path)?);
        }
        let flags = [
            ("mu_r", self.mu_r),
            ("mu_lambda", self.mu_lambda),
            ("zeta1_r", self.zeta_r),
            ("zeta1_lambda", self.zeta_lambda),
            ("zeta2_r", self.zeta2_r),
            ("zeta2_lambda", self.zeta2_lambda),
            ("kappa11", self.kappa11),
            ("kappa12", self.kappa12),
            ("theta1", self.theta1),
            ("h_meas", self.h_meas),
        ];
        for (key, v) in flags {
            if let Some(v) = v {
                map.insert(key.to_string(), json!(v));
            }
        }
        serde_json::from_value(Value::Object(map)).map_err(|e| {
            // Validation failures come back wrapped in their own display text.
            let msg = e.to_string();
            let msg = msg.strip_prefix("invalid parameters: ").unwrap_or(&msg);
            Error::InvalidParams(msg.to_string())
        })
    }

    fn any_given(&self) -> bool {
        self.params.is_some()
            || [
                self.mu_r,
                self.mu_lambda,
                self.zeta_r,
                self.zeta_lambda,
                self.zeta2_r,
                self.zeta2_lambda,
                self.kappa11,
                self.kappa12,
                self.theta1,
                self.h_meas,
            ]
            .iter()
            .any(Option::is_some)
    }
}

impl DataArgs {
    fn load(&self) -> Result<YieldPanel> {
        let panel = load_panel(&self.data, &self.column, self.treasury_tenor)?;
        Ok(panel.window(self.from, self.to))
    }
}

fn csv_bytes(header: &[String], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::InvalidInput(e.to_string());
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(r).map_err(err)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

fn opt_f64(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

#[derive(Serialize)]
struct PricePoint {
    tenor: f64,
    #[serde(rename = "yield")]
    yield_: f64,
    price: f64,
}

fn run_price(a: &PriceArgs) -> Result<Output> {
    let mut cfg = RunConfig::new(a.output.format, a.output.out.clone());
    cfg.params = Some(a.params.resolve(Map::new())?);
    cfg.tenors = a.tenor.iter().chain(&a.tenors).copied().collect();
    if cfg.tenors.is_empty() {
        cfg.tenors = DEFAULT_PRICE_GRID.to_vec();
    }
    let params = cfg.params.unwrap();
    let state = FactorState::new(a.x_r, a.x_lambda);
    let points = cfg
        .tenors
        .iter()
        .map(|&t| {
            let tau = Tenor::new(t)?;
            Ok(PricePoint {
                tenor: t,
                yield_: zclb_yield(&params, &state, tau)?,
                price: zclb_price(&params, &state, tau),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let main = match cfg.format {
        Format::Json => json_bytes(&points)?,
        Format::Csv => csv_bytes(
            &header(&["tenor", "yield", "price"]),
            &points
                .iter()
                .map(|p| vec![fmt_f64(p.tenor), fmt_f64(p.yield_), fmt_f64(p.price)])
                .collect::<Vec<_>>(),
        )?,
    };
    Ok(Output::main(main))
}

fn run_simulate(a: &SimulateArgs) -> Result<Output> {
    let mut cfg = RunConfig::new(a.output.format, a.output.out.clone());
    cfg.params = Some(a.params.resolve(Map::new())?);
    cfg.dt = a.dt;
    cfg.tenors = a.tenors.clone();
    cfg.seed = a.seed;
    let params = cfg.params.unwrap();

    let mut sim = SimulationConfig::new(cfg.dt, a.steps, cfg.tenors.clone(), cfg.seed);
    sim.initial = match a.initial {
        InitArg::Zero => InitialState::Zero,
        InitArg::Stationary => InitialState::Stationary,
    };
    if let Some(d) = a.start_date {
        sim.start_date = d;
    }
    let synth = simulate_panel(&params, &sim)?;
    let panel = &synth.panel;

    let main = match cfg.format {
        Format::Json => json_bytes(&json!({
            "tenors": panel.tenors,
            "dates": panel.dates.iter().map(|d| fmt_date(*d)).collect::<Vec<_>>(),
            "observed": panel.values,
            "noiseless": synth.noiseless,
            "states": synth.states,
        }))?,
        Format::Csv => {
            let mut buf = Vec::new();
            write_panel_csv(panel, &mut buf)?;
            buf
        }
    };
    let mut out = Output::main(main);
    if let Some(path) = &a.states_out {
        let rows: Vec<Vec<String>> = panel
            .dates
            .iter()
            .zip(&synth.states)
            .map(|(d, x)| vec![fmt_date(*d), fmt_f64(x.x_r), fmt_f64(x.x_lambda)])
            .collect();
        out.side
            .push((path.clone(), csv_bytes(&header(&["date", "x_r", "x_lambda"]), &rows)?));
    }
    if let Some(path) = &a.triple_out {
        let rows: Vec<Vec<String>> = filter_experiment(&params, &sim)?
            .iter()
            .map(|r| {
                vec![
                    fmt_date(r.date),
                    fmt_f64(r.real),
                    opt_f64(r.observed),
                    fmt_f64(r.filtered),
                ]
            })
            .collect();
        out.side.push((
            path.clone(),
            csv_bytes(&header(&["date", "real", "observed", "filtered"]), &rows)?,
        ));
    }
    Ok(out)
}

#[derive(Serialize)]
struct FilterRow {
    date: String,
    x_r: f64,
    x_lambda: f64,
    var_r: f64,
    var_lambda: f64,
    /// One entry per tenor; `None` where the tenor was missing.
    innovations: Vec<Option<f64>>,
    step_loglik: f64,
}

fn run_filter_cmd(a: &FilterArgs) -> Result<Output> {
    let mut cfg = RunConfig::new(a.output.format, a.output.out.clone());
    cfg.data = Some(a.data.data.clone());
    cfg.check_inputs()?;
    cfg.params = Some(a.params.resolve(Map::new())?);
    cfg.dt = a.dt;
    let params = cfg.params.unwrap();

    let panel = a.data.load()?;
    let system = build_system(&params, cfg.dt, &panel.tenors)?;
    let init = match a.init {
        FilterInitArg::Stationary => FilterInit::Stationary,
        FilterInitArg::Diffuse => FilterInit::Diffuse,
    };
    let result = run_filter(&system, &panel, init)?;
    let rows: Vec<FilterRow> = result
        .steps
        .iter()
        .zip(&panel.dates)
        .map(|(s, d)| {
            let mut innovations = vec![None; panel.tenors.len()];
            if let Some(v) = &s.innovation {
                for (k, &i) in s.observed.iter().enumerate() {
                    innovations[i] = Some(v[k]);
                }
            }
            FilterRow {
                date: fmt_date(*d),
                x_r: s.filtered_mean[0],
                x_lambda: s.filtered_mean[1],
                var_r: s.filtered_cov[(0, 0)],
                var_lambda: s.filtered_cov[(1, 1)],
                innovations,
                step_loglik: s.step_loglik,
            }
        })
        .collect();
    let missing_steps = result.steps.iter().filter(|s| s.observed.is_empty()).count();

    let main = match cfg.format {
        Format::Json => json_bytes(&json!({
            "tenors": panel.tenors,
            "total_loglik": result.total_loglik,
            "n_steps": rows.len(),
            "missing_steps": missing_steps,
            "steps": rows,
        }))?,
        Format::Csv => {
            let mut head = header(&["date", "x_r", "x_lambda", "var_r", "var_lambda"]);
            head.extend(panel.tenors.iter().map(|t| format!("innov_{}", fmt_f64(*t))));
            head.push("step_loglik".into());
            let body: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    let mut rec = vec![
                        r.date.clone(),
                        fmt_f64(r.x_r),
                        fmt_f64(r.x_lambda),
                        fmt_f64(r.var_r),
                        fmt_f64(r.var_lambda),
                    ];
                    rec.extend(r.innovations.iter().map(|v| opt_f64(*v)));
                    rec.push(fmt_f64(r.step_loglik));
                    rec
                })
                .collect();
            csv_bytes(&head, &body)?
        }
    };
    Ok(Output::main(main))
}

/// Starting guess used for fields the user did not supply: the long-run
/// rate at the sample mean yield, moderate persistence and small variances.
fn default_guess(panel: &YieldPanel) -> Map<String, Value> {
    let observed: Vec<f64> = panel.values.iter().flatten().flatten().copied().collect();
    let mean = if observed.is_empty() {
        0.0
    } else {
        observed.iter().sum::<f64>() / observed.len() as f64
    };
    let mut m = Map::new();
    m.insert("mu_r".into(), json!(mean));
    m.insert("mu_lambda".into(), json!(0.0));
    m.insert("zeta1_r".into(), json!(0.5));
    m.insert("zeta1_lambda".into(), json!(0.5));
    m.insert("kappa11".into(), json!(0.01));
    m.insert("h_meas".into(), json!(1e-6));
    m
}

const DEFAULT_FREE: [FreeParam; 4] = [FreeParam::MuR, FreeParam::Zeta1, FreeParam::Kappa11, FreeParam::HMeas];

fn run_calibrate(a: &CalibrateArgs) -> Result<Output> {
    let mut cfg = RunConfig::new(a.format, a.out.clone());
    cfg.data = Some(a.data.data.clone());
    cfg.check_inputs()?;
    let panel = a.data.load()?;

    let mut cal = match &a.config {
        Some(path) => {
            let mut c: CalibrationConfig = serde_json::from_str(&std::fs::read_to_string(path)?)?;
            if a.params.any_given() {
                let base = serde_json::to_value(c.initial)?;
                let Value::Object(base) = base else { unreachable!() };
                c.initial = a.params.resolve(base)?;
            }
            c
        }
        None => CalibrationConfig::new(DEFAULT_FREE.to_vec(), a.params.resolve(default_guess(&panel))?),
    };
    if !a.free.is_empty() {
        cal.free = a.free.iter().map(|s| FreeParam::parse(s)).collect::<Result<_>>()?;
    }
    if let Some(v) = a.restarts {
        cal.restarts = v;
    }
    if let Some(v) = a.seed {
        cal.seed = v;
    }
    if let Some(v) = a.tol {
        cal.tol = v;
    }
    if let Some(v) = a.max_iter {
        cal.max_iter = v;
    }
    if let Some(v) = a.dt {
        cal.dt = v;
    }
    cfg.dt = cal.dt;
    cfg.seed = cal.seed;
    cfg.tenors = panel.tenors.clone();
    cfg.calibration = Some(cal);

    let result = calibrate(&panel, cfg.calibration.as_ref().unwrap())?;
    let main = match cfg.format {
        Format::Json => json_bytes(&result)?,
        Format::Csv => {
            let mut rows: Vec<Vec<String>> = result
                .estimates
                .iter()
                .map(|e| vec![e.name.clone(), fmt_f64(e.value), opt_f64(e.std_error)])
                .collect();
            rows.push(vec!["loglik".into(), fmt_f64(result.loglik), String::new()]);
            csv_bytes(&header(&["parameter", "value", "std_error"]), &rows)?
        }
    };
    Ok(Output::main(main))
}

fn run_survival(a: &SurvivalArgs) -> Result<Output> {
    let mut cfg = RunConfig::new(a.output.format, a.output.out.clone());
    cfg.params = Some(a.params.resolve(Map::new())?);
    cfg.dt = a.dt;
    cfg.seed = a.seed;
    let params = cfg.params.unwrap();

    let mut sim = SimulationConfig::new(cfg.dt, 1, Vec::new(), cfg.seed);
    sim.n_paths = a.paths;
    sim.initial = match (a.x_lambda, a.initial) {
        (Some(x), _) => InitialState::Given(FactorState::new(0.0, x)),
        (None, InitArg::Zero) => InitialState::Zero,
        (None, InitArg::Stationary) => InitialState::Stationary,
    };
    let table = monte_carlo_survival(&params, &sim, &a.horizons)?;
    let main = match cfg.format {
        Format::Json => json_bytes(&table)?,
        Format::Csv => {
            let rows: Vec<Vec<String>> = table
                .rows
                .iter()
                .map(|r| {
                    vec![
                        fmt_f64(r.horizon),
                        fmt_f64(r.mean),
                        fmt_f64(r.std_error),
                        fmt_f64(r.p05),
                        fmt_f64(r.p95),
                        fmt_f64(table.negative_lambda_fraction),
                    ]
                })
                .collect();
            csv_bytes(
                &header(&["horizon", "mean", "std_error", "p05", "p95", "negative_lambda_fraction"]),
                &rows,
            )?
        }
    };
    Ok(Output::main(main))
}

fn execute(command: &Command) -> Result<(Output, Option<PathBuf>)> {
    let (output, out) = match command {
        Command::Price(a) => (run_price(a)?, a.output.out.clone()),
        Command::Simulate(a) => (run_simulate(a)?, a.output.out.clone()),
        Command::Filter(a) => (run_filter_cmd(a)?, a.output.out.clone()),
        Command::Calibrate(a) => (run_calibrate(a)?, a.out.clone()),
        Command::Survival(a) => (run_survival(a)?, a.output.out.clone()),
    };
    Ok((output, out))
}

fn error_line(e: &Error) -> String {
    json!({ "error": e.kind(), "message": e.to_string() }).to_string()
}

/// Runs the CLI on `argv` (program name first) and returns the exit status.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let mut text = e.render().to_string();
            let code = e.exit_code();
            if e.use_stderr() && !text.contains("Usage:") {
                text.push_str(&format!("\n{}\n", Cli::command().render_usage()));
            }
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = sink.write_all(text.as_bytes());
            return code;
        }
    };
    let result = execute(&cli.command).and_then(|(output, out)| {
        for (path, bytes) in &output.side {
            write_atomic(path, bytes)?;
        }
        match out {
            Some(path) => write_atomic(&path, &output.main),
            None => stdout.write_all(&output.main).map_err(Error::from),
        }
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "{}", error_line(&e));
            1
        }
    }
}

/// [`run`] against the process's standard streams.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let mut out = std::io::stdout().lock();
    let mut err = std::io::stderr().lock();
    let code = run(argv, &mut out, &mut err);
    let _ = out.flush();
    code
}
