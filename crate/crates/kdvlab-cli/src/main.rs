//! `kdvlab` command-line front end.
//!
//! Every subcommand reads its inputs from flags, runs one pipeline of the
//! library and writes a JSON document (default) or a CSV table to stdout or
//! `--out`.  Exit codes: 0 success, 2 invalid input, 3 numerical failure.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use kdvlab::bnf::{bnf_predict, comb_identities_check, det_ca, resonance_scan, singular_set, RationalMean};
use kdvlab::flow::{
    kdv2_continuity_experiment, kdv_continuity_experiment, ContinuityReport, Kdv2Experiment, KdvExperiment,
};
use kdvlab::invariants::{actions, analyze, AnalysisConfig, Equation, FrequencyReport, MomentTable};
use kdvlab::io::{format_float, parse_potential, to_json_string_pretty};
use kdvlab::pde::{crosscheck, evolve, PdeConfig, PdeEquation};
use kdvlab::seqspace::sequence_suite;
use kdvlab::{periodic_spectrum, Error, Potential, Result};

#[derive(Parser, Debug)]
#[command(name = "kdvlab", version, about = "Spectral KdV/KdV2 frequency laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// Potential as a JSON file or inline JSON `{"mean": …, "modes": [{"n", "re", "im"}]}`.
    #[arg(long, global = true)]
    potential: Option<String>,
    /// Highest reported index `N`.
    #[arg(long = "N", global = true)]
    n_max: Option<usize>,
    /// Product / spectrum truncation `M` (Fourier modes for `evolve`).
    #[arg(long = "M", global = true)]
    m: Option<usize>,
    /// Moment summation truncation `K`.
    #[arg(long = "K", global = true)]
    k: Option<usize>,
    /// Local ODE tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Quadrature nodes per gap integral.
    #[arg(long, global = true)]
    nodes: Option<usize>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Worker threads (default: logical cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed of the randomized studies.
    #[arg(long, global = true, default_value_t = 20_240_601)]
    seed: u64,
    /// Index selection: `3`, `1..8` (inclusive) or `1,2,5`.
    #[arg(long = "n", global = true)]
    n_sel: Option<String>,
    /// Include the full moment tables in JSON output.
    #[arg(long, global = true)]
    dump_moments: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EqArg {
    Airy,
    Kdv,
    Kdv2,
}

impl EqArg {
    fn pde(self) -> PdeEquation {
        match self {
            EqArg::Airy => PdeEquation::Airy,
            EqArg::Kdv => PdeEquation::Kdv,
            EqArg::Kdv2 => PdeEquation::Kdv2,
        }
    }

    fn hierarchy(self) -> Result<Equation> {
        match self {
            EqArg::Kdv => Ok(Equation::Kdv),
            EqArg::Kdv2 => Ok(Equation::Kdv2),
            EqArg::Airy => Err(Error::validation("this command takes --eq kdv or --eq kdv2")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ExperimentArg {
    Kdv,
    Kdv2Hs,
    Kdv2LevelSet,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Periodic and Dirichlet spectrum, gap lengths and critical points.
    Spectrum,
    /// Actions `I_n` with quadrature error estimates.
    Actions,
    /// KdV and KdV2 frequencies from the moment formulas.
    Freq,
    /// KdV2 frequencies only.
    Freq2,
    /// Direct and moment-route Hamiltonians.
    Hamiltonians,
    /// Quartic normal form: frequency prediction, `det C_A`, identity checks.
    Bnf(BnfArgs),
    /// Exact resonance scan of the KdV2 frequency map.
    Resonance(ResonanceArgs),
    /// Weighted-sequence operator and product studies.
    Seqtest(SeqArgs),
    /// Non-uniform-continuity experiments on Birkhoff coordinates.
    FlowExp(FlowArgs),
    /// Pseudo-spectral evolution; samples as JSON lines.
    Evolve(EvolveArgs),
    /// Moment-route versus PDE-route frequency of one mode.
    Crosscheck(CrosscheckArgs),
}

#[derive(Args, Debug)]
struct BnfArgs {
    #[arg(long, value_enum, default_value_t = EqArg::Kdv2)]
    eq: EqArg,
    /// Mean `c` (default: mean of the potential, else 0).
    #[arg(long, allow_hyphen_values = true)]
    c: Option<f64>,
    /// Explicit actions `I_1,I_2,…` instead of a potential.
    #[arg(long, value_delimiter = ',')]
    actions: Option<Vec<f64>>,
    /// Index set for `det C_A` and its singular set.
    #[arg(long = "A", value_delimiter = ',')]
    index_set: Option<Vec<usize>>,
    /// Range `R` of the exhaustive power-sum identity check.
    #[arg(long)]
    comb: Option<i64>,
}

#[derive(Args, Debug)]
struct ResonanceArgs {
    #[arg(long = "A", value_delimiter = ',', default_value = "1,2")]
    index_set: Vec<usize>,
    /// Rational mean `p/q` (or an integer).
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    c: String,
    #[arg(long, default_value_t = 6)]
    kmax: i64,
    #[arg(long, default_value_t = 40)]
    window: usize,
}

#[derive(Args, Debug)]
struct SeqArgs {
    #[arg(long, default_value_t = 100)]
    samples: usize,
}

#[derive(Args, Debug)]
struct FlowArgs {
    #[arg(long, value_enum, default_value_t = ExperimentArg::Kdv)]
    experiment: ExperimentArg,
    /// Full experiment description as JSON (overrides the defaults).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long = "t", id = "time")]
    t: Option<f64>,
    /// Integer `k` selecting the designated subsequence.
    #[arg(long = "k", id = "subsequence_k")]
    k: Option<u32>,
    #[arg(long)]
    delta: Option<f64>,
    /// Exponents `m`: `1..60` (inclusive) or a list.
    #[arg(long = "m", id = "exponents")]
    m: Option<String>,
}

#[derive(Args, Debug)]
struct EvolveArgs {
    #[arg(long, value_enum, default_value_t = EqArg::Kdv)]
    eq: EqArg,
    /// Final time.
    #[arg(long = "T")]
    t_final: f64,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    stride: Option<usize>,
    /// `key = value` file with `dt`, `M`, `stride`.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CrosscheckArgs {
    #[arg(long, value_enum, default_value_t = EqArg::Kdv)]
    eq: EqArg,
    /// Final time (default 0.05 for KdV, 0.002 for KdV2).
    #[arg(long = "T")]
    t_final: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    /// Fourier modes of the PDE grid.
    #[arg(long, default_value_t = 64)]
    grid: usize,
    #[arg(long)]
    stride: Option<usize>,
    /// `key = value` file with `dt`, `M`, `stride` for the PDE run.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kdvlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let c = &cli.common;
    if let Some(j) = c.jobs {
        if j == 0 {
            return Err(Error::validation("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| Error::validation(format!("thread pool: {e}")))?;
    }
    let doc = match &cli.command {
        Command::Spectrum => cmd_spectrum(c)?,
        Command::Actions => cmd_actions(c)?,
        Command::Freq => cmd_freq(c, false)?,
        Command::Freq2 => cmd_freq(c, true)?,
        Command::Hamiltonians => cmd_hamiltonians(c)?,
        Command::Bnf(a) => cmd_bnf(c, a)?,
        Command::Resonance(a) => cmd_resonance(c, a)?,
        Command::Seqtest(a) => cmd_seqtest(c, a)?,
        Command::FlowExp(a) => cmd_flow(c, a)?,
        Command::Evolve(a) => cmd_evolve(c, a)?,
        Command::Crosscheck(a) => cmd_crosscheck(c, a)?,
    };
    emit(c, &doc)
}

/// Rendered output of one command.
struct Document(String);

fn emit(c: &Common, doc: &Document) -> Result<()> {
    let io_err = |e: std::io::Error| Error::validation(format!("cannot write output: {e}"));
    match &c.out {
        Some(path) => fs::write(path, &doc.0).map_err(io_err),
        None => std::io::stdout().lock().write_all(doc.0.as_bytes()).map_err(io_err),
    }
}

fn json<T: Serialize>(value: &T) -> Result<Document> {
    let mut s = to_json_string_pretty(value)?;
    s.push('\n');
    Ok(Document(s))
}

fn csv_table(header: &[&str], rows: Vec<Vec<String>>) -> Result<Document> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::validation(format!("CSV output failed: {e}"));
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(&r).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::validation(format!("CSV output failed: {e}")))?;
    Ok(Document(String::from_utf8(bytes).expect("CSV output is UTF-8")))
}

fn f(v: f64) -> String {
    format_float(v)
}

fn load_potential(c: &Common) -> Result<Potential> {
    let src = c.potential.as_deref().ok_or_else(|| Error::validation("--potential is required"))?;
    let text = if src.trim_start().starts_with('{') {
        src.to_string()
    } else {
        fs::read_to_string(src).map_err(|e| Error::validation(format!("cannot read potential file {src}: {e}")))?
    };
    parse_potential(&text)
}

/// Inclusive index selection `a..b`, `a..=b`, `a,b,c` or `a`.
fn parse_selection(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::validation(format!("malformed index selection '{s}'"));
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
    let v: Vec<usize> = if let Some((a, b)) = s.split_once("..") {
        let (lo, hi) = (num(a)?, num(b.trim_start_matches('='))?);
        if hi < lo {
            return Err(bad());
        }
        (lo..=hi).collect()
    } else {
        s.split(',').map(num).collect::<Result<_>>()?
    };
    if v.is_empty() || v.contains(&0) {
        return Err(Error::validation("indices must be positive"));
    }
    Ok(v)
}

fn selection(c: &Common) -> Result<Option<Vec<usize>>> {
    c.n_sel.as_deref().map(parse_selection).transpose()
}

fn analysis_config(c: &Common, n_default: usize) -> Result<AnalysisConfig> {
    let sel_max = selection(c)?.map(|v| v.into_iter().max().unwrap_or(1));
    let n = c.n_max.or(sel_max).unwrap_or(n_default);
    let mut cfg = AnalysisConfig::new(n);
    if let Some(m) = c.m {
        cfg.m_trunc = m;
        cfg.k_max = cfg.k_max.min(m);
    }
    if let Some(k) = c.k {
        cfg.k_max = k;
    }
    if let Some(t) = c.tol {
        cfg.tol = t;
    }
    if let Some(nodes) = c.nodes {
        cfg.nodes = nodes;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Selected indices, all within `1..=n_max`.
fn rows_for(c: &Common, n_max: usize) -> Result<Vec<usize>> {
    let rows = selection(c)?.unwrap_or_else(|| (1..=n_max).collect());
    if let Some(&n) = rows.iter().find(|&&n| n > n_max) {
        return Err(Error::validation(format!("index {n} exceeds N = {n_max}")));
    }
    Ok(rows)
}

fn cmd_spectrum(c: &Common) -> Result<Document> {
    let q = load_potential(c)?;
    let cfg = analysis_config(c, 8)?;
    let spec = periodic_spectrum(&q, cfg.n_max, cfg.tol)?;
    match c.format {
        Format::Json => json(&spec),
        Format::Csv => {
            let rows = rows_for(c, cfg.n_max)?
                .into_iter()
                .map(|n| {
                    vec![
                        n.to_string(),
                        f(spec.lambda_minus(n)),
                        f(spec.lambda_plus(n)),
                        f(spec.gamma(n)),
                        f(spec.tau(n)),
                        f(spec.mu(n)),
                        f(spec.lambda_dot(n)),
                    ]
                })
                .collect();
            csv_table(&["n", "lambda_minus", "lambda_plus", "gamma", "tau", "mu", "lambda_dot"], rows)
        }
    }
}

fn cmd_actions(c: &Common) -> Result<Document> {
    let q = load_potential(c)?;
    let cfg = analysis_config(c, 8)?;
    let spec = periodic_spectrum(&q, cfg.n_max, cfg.tol)?;
    let acts = actions(&spec, cfg.n_max, cfg.nodes)?;
    let rows = rows_for(c, cfg.n_max)?;
    match c.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Out {
                n: Vec<usize>,
                #[serde(rename = "I")]
                actions: Vec<f64>,
                errors: Vec<f64>,
                flagged: Vec<usize>,
            }
            json(&Out {
                actions: rows.iter().map(|&n| acts.values[n - 1]).collect(),
                errors: rows.iter().map(|&n| acts.errors[n - 1]).collect(),
                flagged: acts.flagged.iter().copied().filter(|n| rows.contains(n)).collect(),
                n: rows,
            })
        }
        Format::Csv => csv_table(
            &["n", "I", "error"],
            rows.iter().map(|&n| vec![n.to_string(), f(acts.values[n - 1]), f(acts.errors[n - 1])]).collect(),
        ),
    }
}

/// Restriction of a frequency report to the selected rows.
fn select_report(rep: &FrequencyReport, rows: &[usize]) -> FrequencyReport {
    let pick = |v: &[f64]| rows.iter().map(|&n| v[n - 1]).collect();
    FrequencyReport {
        mean: rep.mean,
        k_max: rep.k_max,
        n: rows.to_vec(),
        actions: pick(&rep.actions),
        omega1: pick(&rep.omega1),
        omega1_star: pick(&rep.omega1_star),
        omega2: pick(&rep.omega2),
        omega2_star: pick(&rep.omega2_star),
        tail_estimate: pick(&rep.tail_estimate),
        tail_estimate2: pick(&rep.tail_estimate2),
        tail_constant: pick(&rep.tail_constant),
        warnings: rep.warnings.iter().copied().filter(|n| rows.contains(n)).collect(),
    }
}

fn cmd_freq(c: &Common, kdv2_only: bool) -> Result<Document> {
    let q = load_potential(c)?;
    let cfg = analysis_config(c, 8)?;
    let rows = rows_for(c, cfg.n_max)?;
    let an = analyze(&q, &cfg)?;
    let rep = select_report(&an.frequencies(), &rows);
    for &n in &rep.warnings {
        eprintln!("kdvlab: warning: tail estimate at n = {n} exceeds 10% of the starred frequency");
    }
    match c.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Out<'a> {
                config: &'a AnalysisConfig,
                #[serde(flatten)]
                report: &'a FrequencyReport,
                #[serde(skip_serializing_if = "Option::is_none")]
                moments: Option<&'a MomentTable>,
            }
            json(&Out { config: &cfg, report: &rep, moments: c.dump_moments.then_some(&an.moments) })
        }
        Format::Csv if kdv2_only => csv_table(
            &["n", "I", "omega2", "omega2_star", "tail"],
            (0..rep.n.len())
                .map(|j| {
                    vec![
                        rep.n[j].to_string(),
                        f(rep.actions[j]),
                        f(rep.omega2[j]),
                        f(rep.omega2_star[j]),
                        f(rep.tail_estimate2[j]),
                    ]
                })
                .collect(),
        ),
        Format::Csv => csv_table(
            &["n", "I", "omega1", "omega1_star", "omega2", "omega2_star", "tail"],
            (0..rep.n.len())
                .map(|j| {
                    vec![
                        rep.n[j].to_string(),
                        f(rep.actions[j]),
                        f(rep.omega1[j]),
                        f(rep.omega1_star[j]),
                        f(rep.omega2[j]),
                        f(rep.omega2_star[j]),
                        f(rep.tail_estimate[j]),
                    ]
                })
                .collect(),
        ),
    }
}

fn cmd_hamiltonians(c: &Common) -> Result<Document> {
    let q = load_potential(c)?;
    let cfg = analysis_config(c, 8)?;
    let h = analyze(&q, &cfg)?.hamiltonians();
    match c.format {
        Format::Json => json(&h),
        Format::Csv => {
            let v = serde_json::to_value(h).map_err(|e| Error::validation(e.to_string()))?;
            let rows = v
                .as_object()
                .expect("struct serializes to an object")
                .iter()
                .map(|(k, v)| {
                    let cell = match v {
                        serde_json::Value::Number(x) => f(x.as_f64().unwrap_or(f64::NAN)),
                        other => other.to_string(),
                    };
                    vec![k.clone(), cell]
                })
                .collect();
            csv_table(&["quantity", "value"], rows)
        }
    }
}

#[derive(Serialize)]
struct Prediction {
    equation: &'static str,
    c: f64,
    #[serde(rename = "H")]
    h: f64,
    n: Vec<usize>,
    #[serde(rename = "I")]
    actions: Vec<f64>,
    omega_bnf: Vec<f64>,
    /// Moment-route frequencies (only with a potential).
    #[serde(skip_serializing_if = "Option::is_none")]
    omega_moment: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct Determinant {
    #[serde(rename = "A")]
    a: Vec<usize>,
    c: f64,
    det: f64,
    singular_set: Vec<f64>,
}

#[derive(Serialize)]
struct BnfOut {
    #[serde(skip_serializing_if = "Option::is_none")]
    prediction: Option<Prediction>,
    #[serde(skip_serializing_if = "Option::is_none")]
    determinant: Option<Determinant>,
    #[serde(skip_serializing_if = "Option::is_none")]
    comb: Option<kdvlab::bnf::CombReport>,
}

fn cmd_bnf(c: &Common, a: &BnfArgs) -> Result<Document> {
    let eq = a.eq.hierarchy()?;
    let eq_name = if eq == Equation::Kdv { "kdv" } else { "kdv2" };
    let prediction = if let Some(acts) = &a.actions {
        let mean = a.c.unwrap_or(0.0);
        let (h, w) = bnf_predict(acts, mean, eq)?;
        Some(Prediction {
            equation: eq_name,
            c: mean,
            h,
            n: (1..=acts.len()).collect(),
            actions: acts.clone(),
            omega_bnf: w,
            omega_moment: None,
        })
    } else if c.potential.is_some() {
        let q = load_potential(c)?;
        let mean = a.c.unwrap_or(q.mean());
        let cfg = analysis_config(c, 8)?;
        let rows = rows_for(c, cfg.n_max)?;
        let rep = analyze(&q.with_mean(mean), &cfg)?.frequencies();
        let (h, w) = bnf_predict(&rep.actions, mean, eq)?;
        let moment = if eq == Equation::Kdv { &rep.omega1 } else { &rep.omega2 };
        Some(Prediction {
            equation: eq_name,
            c: mean,
            h,
            n: rows.clone(),
            actions: rows.iter().map(|&n| rep.actions[n - 1]).collect(),
            omega_bnf: rows.iter().map(|&n| w[n - 1]).collect(),
            omega_moment: Some(rows.iter().map(|&n| moment[n - 1]).collect()),
        })
    } else {
        None
    };
    let determinant = match &a.index_set {
        Some(set) => {
            let mean = a.c.unwrap_or(0.0);
            Some(Determinant { a: set.clone(), c: mean, det: det_ca(mean, set)?, singular_set: singular_set(set)? })
        }
        None => None,
    };
    let comb = a.comb.map(comb_identities_check).transpose()?;
    if prediction.is_none() && determinant.is_none() && comb.is_none() {
        return Err(Error::validation("bnf needs --potential, --actions, --A or --comb"));
    }
    match c.format {
        Format::Json => json(&BnfOut { prediction, determinant, comb }),
        Format::Csv => {
            let p = prediction.ok_or_else(|| Error::validation("CSV output needs a frequency prediction"))?;
            let rows = (0..p.n.len())
                .map(|j| {
                    let moment = p.omega_moment.as_ref().map(|m| m[j]);
                    vec![
                        p.n[j].to_string(),
                        f(p.actions[j]),
                        f(p.omega_bnf[j]),
                        moment.map(f).unwrap_or_default(),
                        moment.map(|m| f(m - p.omega_bnf[j])).unwrap_or_default(),
                    ]
                })
                .collect();
            csv_table(&["n", "I", "omega_bnf", "omega_moment", "defect"], rows)
        }
    }
}

fn parse_rational(s: &str) -> Result<RationalMean> {
    let bad = || Error::validation(format!("malformed rational mean '{s}' (expected p/q)"));
    let (p, q) = match s.split_once('/') {
        Some((p, q)) => (p.trim().parse().map_err(|_| bad())?, q.trim().parse().map_err(|_| bad())?),
        None => (s.trim().parse().map_err(|_| bad())?, 1),
    };
    Ok(RationalMean { p, q })
}

fn cmd_resonance(c: &Common, a: &ResonanceArgs) -> Result<Document> {
    let cert = resonance_scan(&a.index_set, parse_rational(&a.c)?, a.kmax, a.window)?;
    match c.format {
        Format::Json => json(&cert),
        Format::Csv => {
            let fmt = |v: &[(usize, i64)]| v.iter().map(|(i, k)| format!("{i}:{k}")).collect::<Vec<_>>().join(" ");
            let rows = cert.offenders.iter().map(|o| vec![fmt(&o.k_a), fmt(&o.k_z)]).collect();
            csv_table(&["k_A", "k_Z"], rows)
        }
    }
}

fn cmd_seqtest(c: &Common, a: &SeqArgs) -> Result<Document> {
    if a.samples == 0 {
        return Err(Error::validation("--samples must be at least 1"));
    }
    let suite = sequence_suite(c.seed, a.samples)?;
    match c.format {
        Format::Json => json(&suite),
        Format::Csv => {
            let mut rows = vec![];
            for &(p, r) in &suite.op_g_ratio {
                rows.push(vec![format!("op_g_ratio(p={p})"), f(r)]);
            }
            for &(s, p, r64, r128) in &suite.op_a_ratio {
                rows.push(vec![format!("op_a_ratio(s={s},p={p},len=64)"), f(r64)]);
                rows.push(vec![format!("op_a_ratio(s={s},p={p},len=128)"), f(r128)]);
            }
            rows.push(vec!["inf_product_violations".into(), suite.inf_product_violations.to_string()]);
            rows.push(vec!["inf_product_min_slack".into(), f(suite.inf_product_min_slack)]);
            rows.push(vec!["sin_product_error".into(), f(suite.sin_product_error)]);
            csv_table(&["quantity", "value"], rows)
        }
    }
}

fn read_json_config<T: serde::de::DeserializeOwned>(path: &PathBuf) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::validation(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::validation(format!("malformed experiment config: {e}")))
}

fn cmd_flow(c: &Common, a: &FlowArgs) -> Result<Document> {
    let m_values = a.m.as_deref().map(parse_selection).transpose()?.map(|v| v.into_iter().map(|m| m as u32).collect());
    let rep: ContinuityReport = match a.experiment {
        ExperimentArg::Kdv => {
            let mut cfg: KdvExperiment = match &a.config {
                Some(p) => read_json_config(p)?,
                None => KdvExperiment::default(),
            };
            cfg.sigma = a.sigma.unwrap_or(cfg.sigma);
            cfg.t = a.t.unwrap_or(cfg.t);
            cfg.k = a.k.unwrap_or(cfg.k);
            cfg.delta = a.delta.or(cfg.delta);
            cfg.m_values = m_values.unwrap_or(cfg.m_values);
            kdv_continuity_experiment(&cfg)?
        }
        ExperimentArg::Kdv2Hs | ExperimentArg::Kdv2LevelSet => {
            let mut cfg: Kdv2Experiment = match (&a.config, a.experiment) {
                (Some(p), _) => read_json_config(p)?,
                (None, ExperimentArg::Kdv2Hs) => Kdv2Experiment::hs_default(),
                (None, _) => Kdv2Experiment::level_set_default(),
            };
            cfg.sigma = a.sigma.unwrap_or(cfg.sigma);
            cfg.t = a.t.unwrap_or(cfg.t);
            cfg.k = a.k.unwrap_or(cfg.k);
            cfg.delta = a.delta.or(cfg.delta);
            cfg.m_values = m_values.unwrap_or(cfg.m_values);
            kdv2_continuity_experiment(&cfg)?
        }
    };
    match c.format {
        Format::Json => json(&rep),
        Format::Csv => csv_table(
            &["m", "input_gap", "output_gap", "verdict"],
            rep.rows
                .iter()
                .map(|r| vec![r.m.to_string(), f(r.input_gap), f(r.output_gap), r.verdict.as_str().to_string()])
                .collect(),
        ),
    }
}

fn pde_config(eq: PdeEquation, file: Option<&PathBuf>, dt: Option<f64>, m: Option<usize>, stride: Option<usize>) -> Result<PdeConfig> {
    let mut cfg = match file {
        Some(p) => PdeConfig::parse(
            &fs::read_to_string(p).map_err(|e| Error::validation(format!("cannot read {}: {e}", p.display())))?,
        )?,
        None => PdeConfig::for_equation(eq),
    };
    cfg.dt = dt.unwrap_or(cfg.dt);
    cfg.m = m.unwrap_or(cfg.m);
    cfg.stride = stride.unwrap_or(cfg.stride);
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_evolve(c: &Common, a: &EvolveArgs) -> Result<Document> {
    let q = load_potential(c)?;
    let cfg = pde_config(a.eq.pde(), a.config.as_ref(), a.dt, c.m, a.stride)?;
    let traj = evolve(&q, a.t_final, a.eq.pde(), &cfg)?;
    let doc = match c.format {
        Format::Json => {
            let mut buf = Vec::new();
            traj.write_json_lines(&mut buf)?;
            Document(String::from_utf8(buf).expect("JSON output is UTF-8"))
        }
        Format::Csv => {
            let mut rows = vec![];
            for s in &traj.samples {
                for n in 0..(s.m() / 2) as i64 {
                    let u = s.mode(n);
                    rows.push(vec![f(s.t), n.to_string(), f(u.re), f(u.im)]);
                }
            }
            csv_table(&["t", "n", "re", "im"], rows)?
        }
    };
    match &traj.error {
        Some(e) => {
            // partial trajectory is still written before reporting the failure
            emit(c, &doc)?;
            Err(Error::numerical(format!("integration stopped early ({e})")))
        }
        None => Ok(doc),
    }
}

fn cmd_crosscheck(c: &Common, a: &CrosscheckArgs) -> Result<Document> {
    let eq = a.eq.pde();
    a.eq.hierarchy()?;
    let q = load_potential(c)?;
    let sel = selection(c)?.unwrap_or_else(|| vec![1]);
    let [n] = sel[..] else {
        return Err(Error::validation("crosscheck takes a single mode --n"));
    };
    let (t_default, stride_default) = if eq == PdeEquation::Kdv2 { (0.002, 20) } else { (0.05, 10) };
    let mut pde = pde_config(eq, a.config.as_ref(), a.dt, Some(a.grid), a.stride.or(Some(stride_default)))?;
    if a.config.is_some() {
        // an explicit file wins over the built-in grid and stride defaults
        pde = pde_config(eq, a.config.as_ref(), a.dt, None, a.stride)?;
    }
    let mut cfg = analysis_config(c, n.max(4))?;
    if cfg.n_max < n {
        cfg.n_max = n;
        cfg.validate()?;
    }
    let rep = crosscheck(&q, eq, n, a.t_final.unwrap_or(t_default), &pde, &cfg)?;
    match c.format {
        Format::Json => json(&rep),
        Format::Csv => csv_table(
            &["n", "moment_omega", "pde_omega", "relative_difference", "fit_residual"],
            vec![vec![
                rep.n.to_string(),
                f(rep.moment_omega),
                f(rep.pde_omega),
                f(rep.relative_difference),
                f(rep.fit_residual),
            ]],
        ),
    }
}
