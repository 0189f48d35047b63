//! The `basiscorr` command line.
//!
//! Every subcommand resolves a [`RunConfig`] (defaults, then an optional
//! `key=value` config file, then flags), runs one analysis, and renders it as
//! a table, JSON, or CSV. Verdicts are part of the output; the exit code only
//! reports whether the analysis could run:
//!
//! | code | meaning                                        |
//! |------|------------------------------------------------|
//! | 0    | success                                        |
//! | 2    | invalid configuration or usage                 |
//! | 3    | an input pair `(q1, q2)` has zero probability  |

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::lhv::{
    chsh_combinations, conditional_table, enumerate_strategies, local_polytope_check,
    no_signaling_check, ConditionalTable, LhvError, PolytopeVerdict,
};
use crate::protocol::{
    bell_state, build_final_density, outcome_distribution, ChoiceMode, Distribution,
    OutcomeQuadruple, ProtocolError, Scenario, Sign,
};
use crate::reality::{hardy_chain_check, hardy_facts, response_model_refutation, RealityError};
use crate::stats::{chsh_value, correlator, sample, ChshSettings, SampleReport, StatsError};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_EPSILON: f64 = 1e-9;
/// Certainty tolerance used for sampled distributions unless `--epsilon` is given.
pub const EMPIRICAL_EPSILON: f64 = 0.01;
pub const DEFAULT_TOL: f64 = 1e-9;
/// Draw count for `sample` when `--samples` is not given.
pub const DEFAULT_SAMPLE_COUNT: u64 = 1_000_000;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("degenerate support: {0}")]
    MissingSupport(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::MissingSupport(_) => 3,
            CliError::Internal(_) => 1,
        }
    }
}

impl From<LhvError> for CliError {
    fn from(e: LhvError) -> Self {
        match e {
            LhvError::MissingSupport { .. } => CliError::MissingSupport(e.to_string()),
            other => CliError::Internal(other.to_string()),
        }
    }
}

impl From<RealityError> for CliError {
    fn from(e: RealityError) -> Self {
        match e {
            RealityError::MissingSupport { .. } => CliError::MissingSupport(e.to_string()),
            RealityError::InvalidEpsilon(_) => CliError::Config(e.to_string()),
            other => CliError::Internal(other.to_string()),
        }
    }
}

impl From<ProtocolError> for CliError {
    fn from(e: ProtocolError) -> Self {
        match e {
            ProtocolError::InvalidChoiceProb(_) => CliError::Config(e.to_string()),
            other => CliError::Internal(other.to_string()),
        }
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        match e {
            StatsError::NoSamples | StatsError::NonFiniteAngle(_) => {
                CliError::Config(e.to_string())
            }
            other => CliError::Internal(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Table,
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        <Self as ValueEnum>::from_str(s.trim(), true)
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "basiscorr",
    version,
    about = "Basis-choice registers on an entangled pair: density matrix, contradiction chain, no-signaling and CHSH analyses"
)]
struct Cli {
    #[command(flatten)]
    flags: Flags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Default, Clone, Args)]
struct Flags {
    /// key=value file with the same option names; flags override it
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// how both parties make their basis choice: coherent or coin
    #[arg(long, global = true, value_parser = parse_mode)]
    mode: Option<ChoiceMode>,
    /// probability of choosing the Z basis
    #[arg(long = "choice-prob", global = true, value_name = "F")]
    choice_prob: Option<f64>,
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// analyse an empirical distribution of N draws instead of the exact one
    #[arg(long, global = true, value_name = "N")]
    samples: Option<u64>,
    /// certainty tolerance for the contradiction chain
    #[arg(long, global = true, value_name = "F")]
    epsilon: Option<f64>,
    /// tolerance for signaling and CHSH verdicts
    #[arg(long, global = true, value_name = "F")]
    tol: Option<f64>,
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,
}

fn parse_mode(s: &str) -> Result<ChoiceMode, String> {
    s.parse()
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the final four-qubit density matrix
    Rho {
        /// only the 16 diagonal entries, labelled by outcome
        #[arg(long)]
        diagonal: bool,
    },
    /// Evaluate the four-fact contradiction chain
    Hardy,
    /// Check whether the choice registers depend on the remote outcome
    Nosignal,
    /// CHSH value of the shared pair for four measurement angles
    Chsh {
        /// a0,a1,b0,b1 in radians
        #[arg(long, value_name = "A0,A1,B0,B1", allow_hyphen_values = true)]
        angles: Option<String>,
    },
    /// Deterministic strategies and local-polytope membership
    Lhv,
    /// Draw samples from the outcome distribution
    Sample,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Rho { .. } => "rho",
            Command::Hardy => "hardy",
            Command::Nosignal => "nosignal",
            Command::Chsh { .. } => "chsh",
            Command::Lhv => "lhv",
            Command::Sample => "sample",
        }
    }
}

/// Fully resolved settings for one invocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub mode: ChoiceMode,
    pub choice_prob: f64,
    pub seed: u64,
    pub samples: Option<u64>,
    pub epsilon: f64,
    pub tol: f64,
    pub format: OutputFormat,
    pub diagonal: bool,
    pub angles: ChshSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: ChoiceMode::Coherent,
            choice_prob: 0.5,
            seed: DEFAULT_SEED,
            samples: None,
            epsilon: DEFAULT_EPSILON,
            tol: DEFAULT_TOL,
            format: OutputFormat::Table,
            diagonal: false,
            angles: ChshSettings::optimal(),
        }
    }
}

impl RunConfig {
    pub fn scenario(&self) -> Scenario {
        Scenario::new(self.mode, self.choice_prob)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(0.0..=1.0).contains(&self.choice_prob) {
            return Err(CliError::Config(format!(
                "choice-prob {} is outside [0, 1]",
                self.choice_prob
            )));
        }
        if !(0.0..0.5).contains(&self.epsilon) {
            return Err(CliError::Config(format!(
                "epsilon {} is outside [0, 0.5)",
                self.epsilon
            )));
        }
        if !(self.tol.is_finite() && self.tol >= 0.0) {
            return Err(CliError::Config(format!("tol {} must be >= 0", self.tol)));
        }
        if self.samples == Some(0) {
            return Err(CliError::Config("samples must be at least 1".into()));
        }
        let a = self.angles;
        if [a.a0, a.a1, a.b0, a.b1].iter().any(|x| !x.is_finite()) {
            return Err(CliError::Config("angles must be finite".into()));
        }
        Ok(())
    }
}

fn parse_angles(s: &str) -> Result<ChshSettings, CliError> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let values: Vec<f64> = parts
        .iter()
        .map(|p| p.parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Config(format!("cannot parse angles {s:?}")))?;
    match values[..] {
        [a0, a1, b0, b1] => Ok(ChshSettings::new(a0, a1, b0, b1)),
        _ => Err(CliError::Config(format!(
            "expected four comma-separated angles, got {s:?}"
        ))),
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("bad value {value:?} for {key}")))
}

/// Values read from a config file, before flags are applied.
#[derive(Debug, Default)]
struct FileValues {
    flags: Flags,
    diagonal: Option<bool>,
    angles: Option<ChshSettings>,
}

fn read_config_file(path: &Path) -> Result<FileValues, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config_text(&text)
}

fn parse_config_text(text: &str) -> Result<FileValues, CliError> {
    let mut out = FileValues::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected key=value", lineno + 1)))?;
        let key = key.trim().trim_start_matches("--");
        let f = &mut out.flags;
        match key {
            "mode" => {
                f.mode = Some(value.parse().map_err(CliError::Config)?);
            }
            "choice-prob" => f.choice_prob = Some(parse_value(key, value)?),
            "seed" => f.seed = Some(parse_value(key, value)?),
            "samples" => f.samples = Some(parse_value(key, value)?),
            "epsilon" => f.epsilon = Some(parse_value(key, value)?),
            "tol" => f.tol = Some(parse_value(key, value)?),
            "format" => f.format = Some(value.parse().map_err(CliError::Config)?),
            "diagonal" => out.diagonal = Some(parse_value(key, value)?),
            "angles" => out.angles = Some(parse_angles(value)?),
            other => {
                return Err(CliError::Config(format!(
                    "line {}: unknown key {other:?}",
                    lineno + 1
                )))
            }
        }
    }
    Ok(out)
}

fn resolve(flags: &Flags, command: &Command) -> Result<RunConfig, CliError> {
    let file = match &flags.config {
        Some(path) => read_config_file(path)?,
        None => FileValues::default(),
    };
    let mut cfg = RunConfig::default();
    if let Some(m) = flags.mode.or(file.flags.mode) {
        cfg.mode = m;
    }
    if let Some(p) = flags.choice_prob.or(file.flags.choice_prob) {
        cfg.choice_prob = p;
    }
    if let Some(s) = flags.seed.or(file.flags.seed) {
        cfg.seed = s;
    }
    cfg.samples = flags.samples.or(file.flags.samples);
    match flags.epsilon.or(file.flags.epsilon) {
        Some(e) => cfg.epsilon = e,
        None if cfg.samples.is_some() => cfg.epsilon = EMPIRICAL_EPSILON,
        None => {}
    }
    if let Some(t) = flags.tol.or(file.flags.tol) {
        cfg.tol = t;
    }
    if let Some(f) = flags.format.or(file.flags.format) {
        cfg.format = f;
    }
    match command {
        Command::Rho { diagonal } => cfg.diagonal = *diagonal || file.diagonal.unwrap_or(false),
        _ => cfg.diagonal = file.diagonal.unwrap_or(false),
    }
    let flag_angles = match command {
        Command::Chsh { angles: Some(text) } => Some(parse_angles(text)?),
        _ => None,
    };
    if let Some(a) = flag_angles.or(file.angles) {
        cfg.angles = a;
    }
    if matches!(command, Command::Sample) && cfg.samples.is_none() {
        cfg.samples = Some(DEFAULT_SAMPLE_COUNT);
    }
    cfg.validate()?;
    Ok(cfg)
}

/// A rendered command result.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub config: RunConfig,
    pub results: Value,
    #[serde(skip)]
    table: String,
    #[serde(skip)]
    csv: String,
}

impl Report {
    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Json => {
                let mut s = serde_json::to_string_pretty(self).expect("report is serializable");
                s.push('\n');
                s
            }
            OutputFormat::Table => self.table.clone(),
            OutputFormat::Csv => self.csv.clone(),
        }
    }
}

/// Parses `args` (including the program name) and returns the rendered
/// output for stdout.
pub fn run<I, T>(args: I) -> Result<String, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Ok(e.to_string()),
                _ => Err(CliError::Usage(e.to_string())),
            };
        }
    };
    let config = resolve(&cli.flags, &cli.command)?;
    let report = execute(cli.command.name(), &config)?;
    Ok(report.render(config.format))
}

/// Runs one named command against an already resolved configuration.
pub fn execute(command: &str, config: &RunConfig) -> Result<Report, CliError> {
    config.validate()?;
    let (results, table, csv) = match command {
        "rho" => cmd_rho(config)?,
        "hardy" => cmd_hardy(config)?,
        "nosignal" => cmd_nosignal(config)?,
        "chsh" => cmd_chsh(config)?,
        "lhv" => cmd_lhv(config)?,
        "sample" => cmd_sample(config)?,
        other => return Err(CliError::Usage(format!("unknown command {other:?}"))),
    };
    Ok(Report {
        command: command.to_string(),
        config: config.clone(),
        results,
        table,
        csv,
    })
}

type Rendered = (Value, String, String);

fn outcome_json(o: &OutcomeQuadruple) -> Value {
    json!({"q1": o.q1, "q2": o.q2, "q3": o.q3, "q4": o.q4})
}

fn exact_distribution(config: &RunConfig) -> Result<Distribution, CliError> {
    Ok(outcome_distribution(&build_final_density(
        &config.scenario(),
    )?)?)
}

/// The exact distribution, or an empirical one when `--samples` is set.
fn analysed_distribution(
    config: &RunConfig,
) -> Result<(Distribution, Option<SampleReport>), CliError> {
    let exact = exact_distribution(config)?;
    match config.samples {
        Some(n) => {
            let report = sample(&exact, n, config.seed)?;
            Ok((report.empirical(), Some(report)))
        }
        None => Ok((exact, None)),
    }
}

fn source_json(report: &Option<SampleReport>) -> Value {
    match report {
        None => json!({"kind": "exact"}),
        Some(r) => json!({
            "kind": "empirical",
            "n": r.n,
            "seed": r.seed,
            "tv_distance": r.tv_distance,
        }),
    }
}

fn source_line(report: &Option<SampleReport>) -> String {
    match report {
        None => "source: exact\n".to_string(),
        Some(r) => format!(
            "source: empirical (n={}, seed={}, tv_distance={})\n",
            r.n, r.seed, r.tv_distance
        ),
    }
}

fn cmd_rho(config: &RunConfig) -> Result<Rendered, CliError> {
    let rho = build_final_density(&config.scenario())?;
    let diag = crate::qcore::measurement_probs(&rho);
    let dim = rho.dim();

    // largest coherence between different (q3, q4) sectors
    let cross = (0..dim)
        .flat_map(|r| (0..dim).map(move |c| (r, c)))
        .filter(|(r, c)| (r ^ c) & 0b11 != 0)
        .map(|(r, c)| rho.get(r, c).norm())
        .fold(0.0, f64::max);

    let diagonal_json: Vec<Value> = OutcomeQuadruple::all()
        .map(|o| json!({"index": o.index(), "outcome": outcome_json(&o), "p": diag[o.index()]}))
        .collect();

    let mut table = format!(
        "final density matrix: mode={}, choice-prob={}\n",
        config.mode, config.choice_prob
    );
    let mut csv = String::new();
    let results = if config.diagonal {
        table.push_str("index  outcome(q1,q2,q3,q4)  probability\n");
        csv.push_str("index,q1,q2,q3,q4,probability\n");
        for o in OutcomeQuadruple::all() {
            let p = diag[o.index()];
            let _ = writeln!(table, "{:>5}  {:<20}  {}", o.index(), o.to_string(), p);
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{}",
                o.index(),
                o.q1,
                o.q2,
                o.q3,
                o.q4,
                p
            );
        }
        json!({
            "n_qubits": rho.n_qubits(),
            "diagonal": diagonal_json,
            "cross_sector_max_abs": cross,
        })
    } else {
        let re: Vec<Vec<f64>> = (0..dim)
            .map(|r| (0..dim).map(|c| rho.get(r, c).re).collect())
            .collect();
        let im: Vec<Vec<f64>> = (0..dim)
            .map(|r| (0..dim).map(|c| rho.get(r, c).im).collect())
            .collect();
        for (title, part) in [("real part", &re), ("imaginary part", &im)] {
            let _ = writeln!(table, "{title}:");
            for row in part {
                let cells: Vec<String> = row.iter().map(|x| format!("{x:>22}")).collect();
                let _ = writeln!(table, "{}", cells.join(" "));
            }
        }
        csv.push_str("row,col,re,im\n");
        for r in 0..dim {
            for c in 0..dim {
                let _ = writeln!(csv, "{r},{c},{},{}", re[r][c], im[r][c]);
            }
        }
        json!({
            "n_qubits": rho.n_qubits(),
            "diagonal": diagonal_json,
            "cross_sector_max_abs": cross,
            "real": re,
            "imag": im,
        })
    };
    let _ = writeln!(table, "max |cross-sector coherence|: {cross}");
    Ok((results, table, csv))
}

fn cmd_hardy(config: &RunConfig) -> Result<Rendered, CliError> {
    let (d, sampled) = analysed_distribution(config)?;
    let report = hardy_chain_check(&d, config.epsilon)?;
    let facts = hardy_facts();
    let values = report.facts();

    let mut table = source_line(&sampled);
    let _ = writeln!(table, "epsilon: {}", report.epsilon);
    let mut csv = String::from("fact,target,given,value,established\n");
    let mut fact_json = Vec::new();
    for (i, (target, given)) in facts.iter().enumerate() {
        let name = format!("F{i}");
        let status = if report.established[i] {
            ""
        } else {
            "  (not established: zero-probability conditioning)"
        };
        let _ = writeln!(
            table,
            "{name} = P({target} | {given}) = {}{status}",
            values[i]
        );
        let _ = writeln!(
            csv,
            "{name},\"{target}\",\"{given}\",{},{}",
            values[i], report.established[i]
        );
        fact_json.push(json!({
            "name": name,
            "target": target,
            "given": given,
            "value": values[i],
            "established": report.established[i],
        }));
    }
    let _ = writeln!(table, "verdict: {}", report.verdict());
    let results = json!({
        "source": source_json(&sampled),
        "f0": report.f0,
        "f1": report.f1,
        "f2": report.f2,
        "f3": report.f3,
        "established": report.established,
        "epsilon": report.epsilon,
        "contradiction": report.contradiction,
        "verdict": report.verdict(),
        "facts": fact_json,
    });
    Ok((results, table, csv))
}

fn table_rows_json(t: &ConditionalTable) -> Vec<Value> {
    Sign::BOTH
        .into_iter()
        .flat_map(|q1| Sign::BOTH.into_iter().map(move |q2| (q1, q2)))
        .map(|(q1, q2)| {
            json!({
                "q1": q1,
                "q2": q2,
                "p": t.row(q1, q2),
                "q3_plus": t.q3_plus(q1, q2),
                "q4_plus": t.q4_plus(q1, q2),
            })
        })
        .collect()
}

fn table_rows_text(t: &ConditionalTable, out: &mut String) {
    out.push_str("(q1,q2)    P(++)  P(+-)  P(-+)  P(--)  P(q3=+1)  P(q4=+1)\n");
    for q1 in Sign::BOTH {
        for q2 in Sign::BOTH {
            let r = t.row(q1, q2);
            let _ = writeln!(
                out,
                "({q1},{q2})  {}  {}  {}  {}  {}  {}",
                r[0],
                r[1],
                r[2],
                r[3],
                t.q3_plus(q1, q2),
                t.q4_plus(q1, q2)
            );
        }
    }
}

fn cmd_nosignal(config: &RunConfig) -> Result<Rendered, CliError> {
    let (d, sampled) = analysed_distribution(config)?;
    let t = conditional_table(&d)?;
    let r = no_signaling_check(&t, config.tol);

    let mut table = source_line(&sampled);
    table_rows_text(&t, &mut table);
    let _ = writeln!(table, "delta_q3: {}", r.delta_q3);
    let _ = writeln!(table, "delta_q4: {}", r.delta_q4);
    let _ = writeln!(table, "tol: {}", r.tol);
    let _ = writeln!(table, "verdict: {}", r.verdict());

    let mut csv = String::from("q1,q2,p_pp,p_pm,p_mp,p_mm,q3_plus,q4_plus\n");
    for q1 in Sign::BOTH {
        for q2 in Sign::BOTH {
            let row = t.row(q1, q2);
            let _ = writeln!(
                csv,
                "{q1},{q2},{},{},{},{},{},{}",
                row[0],
                row[1],
                row[2],
                row[3],
                t.q3_plus(q1, q2),
                t.q4_plus(q1, q2)
            );
        }
    }
    let results = json!({
        "source": source_json(&sampled),
        "table": table_rows_json(&t),
        "delta_q3": r.delta_q3,
        "delta_q4": r.delta_q4,
        "tol": r.tol,
        "signaling": r.signaling,
        "verdict": r.verdict(),
        "measure": "largest shift of a choice-register marginal when only the remote outcome changes",
    });
    Ok((results, table, csv))
}

fn cmd_chsh(config: &RunConfig) -> Result<Rendered, CliError> {
    let state = bell_state();
    let s = config.angles;
    let value = chsh_value(&state, &s)?;
    let pairs = [
        ("a0", s.a0, "b0", s.b0),
        ("a0", s.a0, "b1", s.b1),
        ("a1", s.a1, "b0", s.b0),
        ("a1", s.a1, "b1", s.b1),
    ];
    let mut table = format!(
        "settings: a0={} a1={} b0={} b1={}\n",
        s.a0, s.a1, s.b0, s.b1
    );
    let mut csv = String::from("alice,bob,angle_a,angle_b,correlator\n");
    let mut correlators = Vec::new();
    for (an, a, bn, b) in pairs {
        let e = correlator(&state, a, b)?;
        let _ = writeln!(table, "E({an},{bn}) = {e}");
        let _ = writeln!(csv, "{an},{bn},{a},{b},{e}");
        correlators.push(json!({"alice": an, "bob": bn, "value": e}));
    }
    let tsirelson = 2.0 * std::f64::consts::SQRT_2;
    let _ = writeln!(table, "S = {value}");
    let _ = writeln!(table, "classical bound: 2");
    let _ = writeln!(table, "quantum bound: {tsirelson}");
    let results = json!({
        "state": "bell-minus",
        "settings": s,
        "correlators": correlators,
        "chsh": value,
        "classical_bound": 2.0,
        "tsirelson_bound": tsirelson,
    });
    Ok((results, table, csv))
}

fn cmd_lhv(config: &RunConfig) -> Result<Rendered, CliError> {
    let strategies = enumerate_strategies();
    let max = strategies.iter().map(|s| s.chsh).max().unwrap_or(0);
    let min = strategies.iter().map(|s| s.chsh).min().unwrap_or(0);

    let (d, sampled) = analysed_distribution(config)?;
    let t = conditional_table(&d)?;
    let verdict = local_polytope_check(&t, config.tol);
    let combos = chsh_combinations(&t);
    let survivors = response_model_refutation(&d)?;

    let mut table = String::from("deterministic strategies (q3=f(q1), q4=g(q2)):\n");
    let mut csv = String::from("f_plus,f_minus,g_plus,g_minus,chsh\n");
    for s in &strategies {
        let _ = writeln!(table, "  {}  CHSH = {}", s.strategy, s.chsh);
        let st = s.strategy;
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            st.f[0], st.f[1], st.g[0], st.g[1], s.chsh
        );
    }
    let _ = writeln!(table, "max strategy CHSH: {max}");
    let _ = writeln!(table, "min strategy CHSH: {min}");
    table.push_str(&source_line(&sampled));
    table_rows_text(&t, &mut table);
    table.push_str("CHSH combinations of the table:\n");
    for (c, v) in &combos {
        let _ = writeln!(table, "  {c} = {v}");
    }
    match &verdict {
        PolytopeVerdict::Local { max_combination } => {
            let _ = writeln!(table, "verdict: LOCAL (max combination {max_combination})");
        }
        PolytopeVerdict::Signaling { witness } => {
            let _ = writeln!(
                table,
                "verdict: SIGNALING (delta_q3={}, delta_q4={}, tol={})",
                witness.delta_q3, witness.delta_q4, witness.tol
            );
        }
        PolytopeVerdict::NonlocalNosignaling { witness, value } => {
            let _ = writeln!(table, "verdict: NONLOCAL-NOSIGNALING ({witness} = {value})");
        }
    }
    let _ = writeln!(
        table,
        "deterministic local responses not ruled out by the support: {}",
        survivors.len()
    );
    for (f, g) in &survivors {
        let _ = writeln!(table, "  {f}; {g}");
    }

    let results = json!({
        "strategies": strategies,
        "max_strategy_chsh": max,
        "min_strategy_chsh": min,
        "source": source_json(&sampled),
        "table": table_rows_json(&t),
        "combinations": combos
            .iter()
            .map(|(c, v)| json!({"minus_input": c.minus_input, "sign": c.sign, "value": v}))
            .collect::<Vec<_>>(),
        "verdict": verdict.label(),
        "witness": verdict,
        "response_survivors": survivors
            .iter()
            .map(|(f, g)| json!({"q3": f, "q4": g}))
            .collect::<Vec<_>>(),
    });
    Ok((results, table, csv))
}

fn cmd_sample(config: &RunConfig) -> Result<Rendered, CliError> {
    let n = config.samples.unwrap_or(DEFAULT_SAMPLE_COUNT);
    let exact = exact_distribution(config)?;
    let r = sample(&exact, n, config.seed)?;

    let mut table = format!("n: {}\nseed: {}\n", r.n, r.seed);
    table.push_str("index  outcome(q1,q2,q3,q4)    count  empirical  exact\n");
    let mut csv = String::from("index,q1,q2,q3,q4,count,empirical,exact\n");
    let mut rows = Vec::new();
    for o in OutcomeQuadruple::all() {
        let count = r.count(o);
        let emp = count as f64 / n as f64;
        let p = exact.get(o);
        let _ = writeln!(
            table,
            "{:>5}  {:<20}  {count:>7}  {emp}  {p}",
            o.index(),
            o.to_string()
        );
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{count},{emp},{p}",
            o.index(),
            o.q1,
            o.q2,
            o.q3,
            o.q4
        );
        rows.push(json!({
            "index": o.index(),
            "outcome": outcome_json(&o),
            "count": count,
            "empirical": emp,
            "exact": p,
        }));
    }
    let _ = writeln!(table, "tv_distance: {}", r.tv_distance);
    let results = json!({
        "n": r.n,
        "seed": r.seed,
        "counts": rows,
        "tv_distance": r.tv_distance,
    });
    Ok((results, table, csv))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_ok(args: &[&str]) -> String {
        let mut full = vec!["basiscorr"];
        full.extend_from_slice(args);
        run(full).unwrap_or_else(|e| panic!("{args:?}: {e}"))
    }

    fn run_err(args: &[&str]) -> CliError {
        let mut full = vec!["basiscorr"];
        full.extend_from_slice(args);
        run(full).expect_err("expected failure")
    }

    #[test]
    fn config_text_parsing() {
        let v = parse_config_text(
            "# experiment\nmode = coin\nchoice-prob=0.3\n\nseed=7 # trailing\nangles=0,1,2,3\n",
        )
        .unwrap();
        assert_eq!(v.flags.mode, Some(ChoiceMode::Coin));
        assert_eq!(v.flags.choice_prob, Some(0.3));
        assert_eq!(v.flags.seed, Some(7));
        assert_eq!(v.angles, Some(ChshSettings::new(0.0, 1.0, 2.0, 3.0)));
        assert!(parse_config_text("bogus=1").is_err());
        assert!(parse_config_text("mode").is_err());
        assert!(parse_config_text("seed=abc").is_err());
    }

    #[test]
    fn invalid_configs_exit_2() {
        assert_eq!(run_err(&["sample", "--samples", "0"]).exit_code(), 2);
        assert_eq!(run_err(&["hardy", "--choice-prob", "1.5"]).exit_code(), 2);
        assert_eq!(run_err(&["hardy", "--epsilon", "0.5"]).exit_code(), 2);
        assert_eq!(run_err(&["hardy", "--mode", "quantum"]).exit_code(), 2);
        assert_eq!(run_err(&["chsh", "--angles", "0,1"]).exit_code(), 2);
        assert_eq!(run_err(&["nosignal", "--tol", "-1"]).exit_code(), 2);
        assert_eq!(run_err(&["frobnicate"]).exit_code(), 2);
    }

    #[test]
    fn missing_support_exits_3() {
        assert_eq!(run_err(&["nosignal", "--choice-prob", "1"]).exit_code(), 3);
        assert_eq!(run_err(&["lhv", "--choice-prob", "1"]).exit_code(), 3);
    }

    #[test]
    fn empirical_mode_defaults_epsilon() {
        let cli = Cli::try_parse_from(["basiscorr", "hardy", "--samples", "10"]).unwrap();
        let cfg = resolve(&cli.flags, &cli.command).unwrap();
        assert_eq!(cfg.epsilon, EMPIRICAL_EPSILON);
        let cli =
            Cli::try_parse_from(["basiscorr", "hardy", "--samples", "10", "--epsilon", "0.2"])
                .unwrap();
        assert_eq!(resolve(&cli.flags, &cli.command).unwrap().epsilon, 0.2);
    }

    #[test]
    fn help_is_not_an_error() {
        assert!(run_ok(&["--help"]).contains("hardy"));
    }

    #[test]
    fn hardy_table_output() {
        let out = run_ok(&["hardy"]);
        assert!(out.contains("verdict: CONTRADICTION"), "{out}");
        let out = run_ok(&["hardy", "--choice-prob", "1.0"]);
        assert!(out.contains("verdict: CONSISTENT"), "{out}");
        assert!(out.contains("not established"));
    }
}
