//! Command-line front end. [`run`] is what the `lyapcert` binary calls; it is
//! public so that tests can drive it in-process.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::cert_continuous::{appendix_max_rate, certify_ode, solve_r_bar, ContinuationSettings};
use crate::cert_discrete::{b_range, certify, optimal_params, solve_r};
use crate::dynamics::{
    limit_study, make_quadratic, make_softplus_composite, run_discrete, run_ode, MomentumSchedule, Objective,
};
use crate::error::{Error, Result};
use crate::model::{validate_problem, MethodParams, OdeParams};
use crate::negative::infeasibility_scan;

pub const SEED_ENV: &str = "LYAPCERT_SEED";
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "lyapcert", version, about = "Lyapunov rate certificates for momentum methods and their ODE")]
pub struct Cli {
    /// Output format (default: json for hb-scan, csv otherwise)
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
    /// Write output here instead of stdout
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// One log line per major stage on stderr
    #[arg(long, short, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimMethod {
    Nesterov,
    Gd,
    Heavyball,
    Ode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimProblem {
    Quadratic,
    Softplus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Schedule {
    Fixed,
    Polyak,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Certify a Nesterov-family method on F_{m,L}
    Certify {
        #[arg(long)]
        m: f64,
        #[arg(long = "L")]
        l: f64,
        #[arg(long, required_unless_present = "optimal", conflicts_with = "optimal")]
        alpha: Option<f64>,
        #[arg(long, allow_hyphen_values = true, required_unless_present = "optimal", conflicts_with = "optimal")]
        beta: Option<f64>,
        /// Gradient extrapolation; defaults to beta
        #[arg(long, allow_hyphen_values = true, conflicts_with = "optimal")]
        gamma: Option<f64>,
        /// alpha = 1/L and the accelerated momentum
        #[arg(long)]
        optimal: bool,
    },
    /// Certify the damped-oscillator ODE with friction b_bar
    CertifyOde {
        #[arg(long)]
        m: f64,
        #[arg(long = "b-bar", allow_hyphen_values = true)]
        b_bar: f64,
    },
    /// Sample the rate curve r(b) at fixed delta (delta = 0 gives the ODE curve)
    Curve {
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long = "b-lo", allow_hyphen_values = true)]
        b_lo: Option<f64>,
        #[arg(long = "b-hi", allow_hyphen_values = true)]
        b_hi: Option<f64>,
    },
    /// Best continuous rate with the smoothness multiplier, per condition number
    Table {
        #[arg(long, value_delimiter = ',', default_values_t = [1e1, 1e2, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8, 1e9])]
        kappas: Vec<f64>,
    },
    /// Run a method on a test function and evaluate the Lyapunov function
    Simulate {
        #[arg(long, value_enum)]
        method: SimMethod,
        #[arg(long, value_enum, default_value = "quadratic")]
        problem: SimProblem,
        #[arg(long, default_value_t = 10)]
        dim: usize,
        #[arg(long, default_value_t = 1.0)]
        m: f64,
        #[arg(long = "L", default_value_t = 100.0)]
        l: f64,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        beta: Option<f64>,
        #[arg(long, default_value_t = 500)]
        steps: usize,
        #[arg(long = "t-end", default_value_t = 10.0)]
        t_end: f64,
        #[arg(long = "h-int")]
        h_int: Option<f64>,
        #[arg(long = "b-bar", default_value_t = 2.0)]
        b_bar: f64,
        /// Rows kept from an ODE run
        #[arg(long = "ode-samples", default_value_t = 200)]
        ode_samples: usize,
    },
    /// Random search for a Heavy Ball certificate at accelerated step sizes
    HbScan {
        #[arg(long)]
        kappa: f64,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        /// Control run: gamma = beta (Nesterov)
        #[arg(long = "gamma-equals-beta")]
        gamma_equals_beta: bool,
    },
    /// Discrete rate variable against its ODE limit as h -> 0
    Limit {
        #[arg(long = "b-bar", default_value_t = 2.0)]
        b_bar: f64,
        #[arg(long, default_value_t = 1.0)]
        m: f64,
        #[arg(long = "h", value_delimiter = ',', default_values_t = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3])]
        h: Vec<f64>,
        #[arg(long, value_enum, default_value = "fixed")]
        schedule: Schedule,
    },
}

/// JSON document written by every subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub command: String,
    pub params: BTreeMap<String, String>,
    pub result: Value,
}

pub fn parse_json_output(s: &str) -> Result<Envelope> {
    serde_json::from_str(s).map_err(|e| Error::Io(format!("bad JSON output: {e}")))
}

/// A finished command. `status` carries a failure detected after the data
/// was produced (divergence, invalid certificate); the data is still written.
struct Report {
    command: &'static str,
    params: Vec<(String, String)>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    summary: Vec<(String, String)>,
    json: Value,
    default_format: Format,
    status: Option<Error>,
}

impl Report {
    fn new(command: &'static str, params: Vec<(String, String)>) -> Self {
        Report {
            command,
            params,
            header: Vec::new(),
            rows: Vec::new(),
            summary: Vec::new(),
            json: Value::Null,
            default_format: Format::Csv,
            status: None,
        }
    }

    fn render(&self, format: Format) -> Result<Vec<u8>> {
        match format {
            Format::Json => {
                let env = Envelope {
                    command: self.command.into(),
                    params: self.params.iter().cloned().collect(),
                    result: self.json.clone(),
                };
                let mut s = serde_json::to_vec_pretty(&env).map_err(|e| Error::Io(e.to_string()))?;
                s.push(b'\n');
                Ok(s)
            }
            Format::Csv => {
                let mut buf = Vec::new();
                writeln!(buf, "# lyapcert {} {}", self.command, kv_line(&self.params)).map_err(io_err)?;
                {
                    let mut w = csv::Writer::from_writer(&mut buf);
                    w.write_record(&self.header).map_err(csv_err)?;
                    for row in &self.rows {
                        w.write_record(row).map_err(csv_err)?;
                    }
                    w.flush().map_err(io_err)?;
                }
                if !self.summary.is_empty() {
                    writeln!(buf, "# summary {}", kv_line(&self.summary)).map_err(io_err)?;
                }
                Ok(buf)
            }
        }
    }
}

fn kv_line(kv: &[(String, String)]) -> String {
    kv.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" ")
}

fn io_err(e: std::io::Error) -> Error {
    Error::Io(e.to_string())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn p(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

fn to_json<T: Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::Io(e.to_string()))
}

/// Seed from `LYAPCERT_SEED`, default 42.
pub fn seed_from_env() -> Result<u64> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s.trim().parse().map_err(|_| Error::InvalidArgument(format!("{SEED_ENV} must be an unsigned integer, got {s:?}"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { stderr.write_all(text.as_bytes()) } else { stdout.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(&cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let mut log = |msg: &str| {
        if cli.verbose {
            let _ = writeln!(stderr, "[lyapcert] {msg}");
        }
    };
    let report = dispatch(&cli.command, &mut log)?;
    let format = cli.format.unwrap_or(report.default_format);
    let bytes = report.render(format)?;
    match &cli.out {
        Some(path) => {
            std::fs::write(path, &bytes).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            log(&format!("wrote {}", path.display()));
        }
        None => stdout.write_all(&bytes).map_err(io_err)?,
    }
    match report.status {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn dispatch(cmd: &Command, log: &mut dyn FnMut(&str)) -> Result<Report> {
    match cmd {
        Command::Certify { m, l, alpha, beta, gamma, optimal } => cmd_certify(*m, *l, *alpha, *beta, *gamma, *optimal, log),
        Command::CertifyOde { m, b_bar } => cmd_certify_ode(*m, *b_bar, log),
        Command::Curve { delta, samples, b_lo, b_hi } => cmd_curve(*delta, *samples, *b_lo, *b_hi, log),
        Command::Table { kappas } => cmd_table(kappas, log),
        Command::Simulate { method, problem, dim, m, l, alpha, beta, steps, t_end, h_int, b_bar, ode_samples } => {
            let sim = SimArgs {
                method: *method,
                problem: *problem,
                dim: *dim,
                m: *m,
                l: *l,
                alpha: *alpha,
                beta: *beta,
                steps: *steps,
                t_end: *t_end,
                h_int: *h_int,
                b_bar: *b_bar,
                ode_samples: *ode_samples,
            };
            cmd_simulate(&sim, log)
        }
        Command::HbScan { kappa, c, samples, gamma_equals_beta } => cmd_hb_scan(*kappa, *c, *samples, *gamma_equals_beta, log),
        Command::Limit { b_bar, m, h, schedule } => cmd_limit(*b_bar, *m, h, *schedule, log),
    }
}

fn cmd_certify(
    m: f64,
    l: f64,
    alpha: Option<f64>,
    beta: Option<f64>,
    gamma: Option<f64>,
    optimal: bool,
    log: &mut dyn FnMut(&str),
) -> Result<Report> {
    let pc = validate_problem(m, l)?;
    let mp = if optimal {
        optimal_params(&pc)
    } else {
        let (a, b) = (alpha.expect("clap enforces alpha"), beta.expect("clap enforces beta"));
        MethodParams::new(a, b, gamma.unwrap_or(b))?
    };
    log(&format!("certifying alpha = {}, beta = {}, gamma = {}", mp.alpha, mp.beta, mp.gamma));
    let c = certify(&pc, &mp)?;
    let mut rep = Report::new(
        "certify",
        vec![
            p("m", m),
            p("L", l),
            p("alpha", mp.alpha),
            p("beta", mp.beta),
            p("gamma", mp.gamma),
            p("optimal", optimal),
        ],
    );
    rep.header = [
        "delta", "b", "r", "rho_sq", "p11", "p12", "p22", "p_eig_min", "p_eig_max", "t_eig_1", "t_eig_2", "t_eig_3",
        "valid",
    ]
    .map(String::from)
    .to_vec();
    let mut row: Vec<String> = [c.nd.delta, c.nd.b, c.r, c.rho_sq, c.p_hat.p11, c.p_hat.p12, c.p_hat.p22]
        .iter()
        .chain(&c.p_hat_eigenvalues)
        .chain(&c.t_hat_eigenvalues)
        .map(|&x| fmt_f64(x))
        .collect();
    row.push(c.valid.to_string());
    rep.rows.push(row);
    rep.json = to_json(&c)?;
    if !c.valid {
        rep.status = Some(Error::OutOfRange {
            inequality: "T_hat <= 0, P_hat >= 0, 0 <= rho_sq < 1".into(),
            detail: format!("t_hat eigenvalues {:?}, rho_sq = {}", c.t_hat_eigenvalues, c.rho_sq),
        });
    }
    Ok(rep)
}

fn cmd_certify_ode(m: f64, b_bar: f64, log: &mut dyn FnMut(&str)) -> Result<Report> {
    log(&format!("certifying the ODE with b_bar = {b_bar}"));
    let c = certify_ode(m, b_bar)?;
    let mut rep = Report::new("certify-ode", vec![p("m", m), p("b_bar", b_bar)]);
    rep.header = ["r_bar", "lambda", "p11", "p12", "p22", "t_eig_1", "t_eig_2", "t_eig_3", "conservative", "valid"]
        .map(String::from)
        .to_vec();
    let mut row: Vec<String> = [c.r_bar, c.lambda, c.p_bar_hat.p11, c.p_bar_hat.p12, c.p_bar_hat.p22]
        .iter()
        .chain(&c.t_bar_eigenvalues)
        .map(|&x| fmt_f64(x))
        .collect();
    row.push(c.conservative.to_string());
    row.push(c.valid.to_string());
    rep.rows.push(row);
    rep.json = to_json(&c)?;
    if !c.valid {
        rep.status = Some(Error::OutOfRange {
            inequality: "T_bar_hat <= 0".into(),
            detail: format!("eigenvalues {:?}", c.t_bar_eigenvalues),
        });
    }
    Ok(rep)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub b: f64,
    pub r: f64,
    pub marker: bool,
}

/// Samples `b ↦ r` on `[b_lo, b_hi]`, symmetric about the window centre, plus
/// the double-root point `b = 2/(1 + δ)` flagged as a marker.
pub fn curve_rows(delta: f64, samples: usize, b_lo: Option<f64>, b_hi: Option<f64>) -> Result<Vec<CurveRow>> {
    if samples < 2 {
        return Err(Error::InvalidArgument(format!("--samples must be at least 2, got {samples}")));
    }
    let solve = |b: f64| if delta == 0.0 { solve_r_bar(b) } else { solve_r(b, delta) };
    let (lo, hi) = if delta == 0.0 {
        (b_lo.unwrap_or(-4.0), b_hi.unwrap_or(4.0))
    } else if delta > 0.0 && delta < 1.0 {
        let w = b_range(delta)?;
        let pad = 0.1 * (w.b_max - w.b_min);
        (b_lo.unwrap_or(w.b_min - pad), b_hi.unwrap_or(w.b_max + pad))
    } else {
        return Err(Error::InvalidArgument(format!("--delta must be 0 or in (0, 1), got {delta}")));
    };
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidArgument(format!("empty b window [{lo}, {hi}]")));
    }
    let (c, h) = (0.5 * (lo + hi), 0.5 * (hi - lo));
    let n1 = (samples - 1) as f64;
    let mut rows = Vec::with_capacity(samples + 1);
    for i in 0..samples {
        // Antisymmetric in i ↔ n−1−i, so a window centred at 0 gives exactly mirrored b.
        let b = c + h * ((2 * i) as f64 - n1) / n1;
        rows.push(CurveRow { b, r: solve(b)?, marker: false });
    }
    let bm = 2.0 / (1.0 + delta);
    rows.push(CurveRow { b: bm, r: solve(bm)?, marker: true });
    rows.sort_by(|a, b| a.b.total_cmp(&b.b));
    Ok(rows)
}

fn cmd_curve(delta: f64, samples: usize, b_lo: Option<f64>, b_hi: Option<f64>, log: &mut dyn FnMut(&str)) -> Result<Report> {
    log(&format!("sampling the rate curve at delta = {delta}"));
    let rows = curve_rows(delta, samples, b_lo, b_hi)?;
    let mut rep = Report::new(
        "curve",
        vec![p("delta", delta), p("samples", samples), p("b_lo", rows[0].b), p("b_hi", rows[rows.len() - 1].b)],
    );
    rep.header = ["b", "r", "marker"].map(String::from).to_vec();
    rep.rows = rows.iter().map(|r| vec![fmt_f64(r.b), fmt_f64(r.r), (r.marker as u8).to_string()]).collect();
    rep.json = to_json(&rows)?;
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub kappa: f64,
    pub point: Option<crate::cert_continuous::AppendixPoint>,
    pub error: Option<String>,
}

fn cmd_table(kappas: &[f64], log: &mut dyn FnMut(&str)) -> Result<Report> {
    let settings = ContinuationSettings::default();
    let mut out = Vec::with_capacity(kappas.len());
    for &k in kappas {
        log(&format!("tracing kappa = {k}"));
        match appendix_max_rate(k, &settings) {
            Ok(pt) => out.push(TableRow { kappa: k, point: Some(pt), error: None }),
            Err(e @ (Error::InvalidArgument(_) | Error::InvalidProblem(_))) => return Err(e),
            Err(e) => out.push(TableRow { kappa: k, point: None, error: Some(e.to_string()) }),
        }
    }
    let list = kappas.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(",");
    let mut rep = Report::new("table", vec![p("kappas", list)]);
    rep.header = [
        "kappa", "b_bar_minus_2", "r_bar_minus_1", "s_bar", "p11_over_m_minus_half", "p12_over_m_minus_half",
        "p22_over_m_minus_half", "valid", "error",
    ]
    .map(String::from)
    .to_vec();
    for row in &out {
        let mut cells = vec![fmt_f64(row.kappa)];
        match &row.point {
            Some(pt) => {
                cells.extend(pt.table_row().iter().map(|&x| fmt_f64(x)));
                cells.push(pt.valid.to_string());
                cells.push(String::new());
            }
            None => {
                cells.extend(std::iter::repeat_n(String::new(), 7));
                cells.push(row.error.clone().unwrap_or_default());
            }
        }
        rep.rows.push(cells);
    }
    rep.json = to_json(&out)?;
    Ok(rep)
}

struct SimArgs {
    method: SimMethod,
    problem: SimProblem,
    dim: usize,
    m: f64,
    l: f64,
    alpha: Option<f64>,
    beta: Option<f64>,
    steps: usize,
    t_end: f64,
    h_int: Option<f64>,
    b_bar: f64,
    ode_samples: usize,
}

fn cmd_simulate(a: &SimArgs, log: &mut dyn FnMut(&str)) -> Result<Report> {
    let seed = seed_from_env()?;
    let pc = validate_problem(a.m, a.l)?;
    if a.dim == 0 {
        return Err(Error::InvalidArgument("--dim must be at least 1".into()));
    }
    let obj: Box<dyn Objective> = match a.problem {
        SimProblem::Quadratic => Box::new(make_quadratic(a.m, a.l, a.dim, seed)?),
        SimProblem::Softplus => Box::new(make_softplus_composite(a.m, a.l, a.dim)?),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let x0: Vec<f64> = obj.minimizer().iter().map(|&x| x + rng.random_range(-1.0..=1.0)).collect();
    let mut params = vec![
        p("method", format!("{:?}", a.method).to_lowercase()),
        p("problem", format!("{:?}", a.problem).to_lowercase()),
        p("dim", a.dim),
        p("m", a.m),
        p("L", a.l),
        p("seed", seed),
    ];

    if a.method == SimMethod::Ode {
        let ode = OdeParams::new(a.b_bar, a.m)?;
        let cert = certify_ode(a.m, a.b_bar)?;
        params.extend([p("b_bar", a.b_bar), p("t_end", a.t_end), p("lambda", cert.lambda)]);
        if let Some(h) = a.h_int {
            params.push(p("h_int", h));
        }
        log("integrating the ODE");
        let tr = run_ode(obj.as_ref(), &ode, &x0, &vec![0.0; a.dim], a.t_end, a.h_int, a.ode_samples, Some(&cert))?;
        let mut rep = Report::new("simulate", params);
        rep.header = ["t", "f_gap", "V", "bound"].map(String::from).to_vec();
        let v0 = tr.rows[0].bracket;
        for r in &tr.rows {
            let v = r.v_rel.zip(v0).map(|(a, b)| a * b);
            rep.rows.push(vec![fmt_f64(r.t), fmt_f64(r.gap), fmt_opt(v), fmt_opt(r.bound)]);
        }
        rep.summary = vec![
            p("h_int", fmt_f64(tr.h_int)),
            p("max_monotonicity_violation", fmt_opt(tr.max_monotonicity_violation)),
            p("max_bracket_drift", fmt_opt(tr.max_bracket_drift)),
            p("max_bound_ratio", fmt_opt(tr.max_bound_ratio)),
            p("diverged_at", tr.diverged_at.map(fmt_f64).unwrap_or_else(|| "none".into())),
        ];
        if let Some(t) = tr.diverged_at {
            rep.status = Some(Error::Divergence { step: (t / tr.h_int).round() as usize, what: format!("non-finite state at t = {t}") });
        }
        rep.json = to_json(&tr)?;
        return Ok(rep);
    }

    let (mp, certified) = match a.method {
        SimMethod::Nesterov => {
            let base = optimal_params(&pc);
            let alpha = a.alpha.unwrap_or(base.alpha);
            let beta = a.beta.unwrap_or(if a.alpha.is_some() { 0.0 } else { base.beta });
            (MethodParams::nesterov(alpha, beta)?, true)
        }
        SimMethod::Gd => (MethodParams::gradient_descent(a.alpha.unwrap_or(1.0 / a.l))?, true),
        SimMethod::Heavyball => {
            let (sm, sl) = (a.m.sqrt(), a.l.sqrt());
            let alpha = a.alpha.unwrap_or(4.0 / ((sl + sm) * (sl + sm)));
            let beta = a.beta.unwrap_or(((sl - sm) / (sl + sm)).powi(2));
            (MethodParams::heavy_ball(alpha, beta)?, false)
        }
        SimMethod::Ode => unreachable!(),
    };
    params.extend([p("alpha", mp.alpha), p("beta", mp.beta), p("gamma", mp.gamma), p("steps", a.steps)]);
    let cert = if certified { Some(certify(&pc, &mp)?) } else { None };
    if let Some(c) = &cert {
        params.push(p("rho_sq", c.rho_sq));
    }
    log("running the iteration");
    let tr = run_discrete(obj.as_ref(), &mp, &x0, &x0, a.steps, cert.as_ref())?;
    let mut rep = Report::new("simulate", params);
    if cert.is_some() {
        rep.header = ["k", "f_gap", "V", "bound"].map(String::from).to_vec();
        for r in &tr.rows {
            rep.rows.push(vec![r.k.to_string(), fmt_f64(r.gap), fmt_opt(r.log_v.map(f64::exp)), fmt_opt(r.bound)]);
        }
    } else {
        rep.header = ["k", "f_gap"].map(String::from).to_vec();
        for r in &tr.rows {
            rep.rows.push(vec![r.k.to_string(), fmt_f64(r.gap)]);
        }
    }
    rep.summary = vec![
        p("max_monotonicity_violation", fmt_opt(tr.max_monotonicity_violation())),
        p("max_bound_ratio", fmt_opt(tr.max_bound_ratio())),
        p("diverged_at", tr.diverged_at.map(|k| k.to_string()).unwrap_or_else(|| "none".into())),
    ];
    if let Some(k) = tr.diverged_at {
        rep.status = Some(Error::Divergence { step: k, what: "non-finite iterate".into() });
    }
    rep.json = to_json(&tr)?;
    Ok(rep)
}

fn cmd_hb_scan(kappa: f64, c: f64, samples: usize, gamma_equals_beta: bool, log: &mut dyn FnMut(&str)) -> Result<Report> {
    let seed = seed_from_env()?;
    log(&format!("scanning {samples} candidates at kappa = {kappa}"));
    let r = infeasibility_scan(kappa, c, samples, seed, gamma_equals_beta)?;
    let mut rep = Report::new(
        "hb-scan",
        vec![p("kappa", kappa), p("c", c), p("samples", samples), p("seed", seed), p("gamma_equals_beta", gamma_equals_beta)],
    );
    rep.default_format = Format::Json;
    rep.header = ["kappa", "c", "delta", "beta", "gamma", "samples", "best_lambda_max", "feasible", "contradiction"]
        .map(String::from)
        .to_vec();
    rep.rows.push(vec![
        fmt_f64(r.kappa),
        fmt_f64(r.c),
        fmt_f64(r.delta),
        fmt_f64(r.beta),
        fmt_f64(r.gamma),
        r.samples.to_string(),
        fmt_f64(r.best_lambda_max),
        r.feasible.to_string(),
        fmt_f64(r.contradiction),
    ]);
    rep.summary = vec![p("evidence", r.evidence.replace(' ', "_"))];
    rep.json = to_json(&r)?;
    Ok(rep)
}

fn cmd_limit(b_bar: f64, m: f64, h: &[f64], schedule: Schedule, log: &mut dyn FnMut(&str)) -> Result<Report> {
    let sched = match schedule {
        Schedule::Fixed => MomentumSchedule::FixedFriction,
        Schedule::Polyak => MomentumSchedule::PolyakMap,
    };
    log("solving the discrete rate curve per step size");
    let rep_data = limit_study(b_bar, m, h, sched)?;
    let list = h.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
    let mut rep = Report::new(
        "limit",
        vec![p("b_bar", b_bar), p("m", m), p("h", list), p("schedule", format!("{schedule:?}").to_lowercase())],
    );
    rep.header = ["h", "delta", "beta", "r_h", "r_err", "p_dev"].map(String::from).to_vec();
    for r in &rep_data.rows {
        rep.rows.push([r.h, r.delta, r.beta, r.r_h, r.r_err, r.p_dev].iter().map(|&x| fmt_f64(x)).collect());
    }
    rep.summary = vec![
        p("r_bar", fmt_f64(rep_data.r_bar)),
        p("fitted_exponent", fmt_opt(rep_data.fitted_exponent)),
        p("fitted_k", fmt_f64(rep_data.fitted_k)),
    ];
    rep.json = to_json(&rep_data)?;
    Ok(rep)
}

/// Convenience for tests: runs with captured output and returns
/// `(exit code, stdout, stderr)`.
pub fn run_captured<I, T>(args: I) -> (i32, String, String)
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(args, &mut out, &mut err);
    (code, String::from_utf8_lossy(&out).into_owned(), String::from_utf8_lossy(&err).into_owned())
}
