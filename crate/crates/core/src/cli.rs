//! The `toomlab` command line.
//!
//! Every command reads a JSON run configuration, writes its artifacts into
//! the output directory, and prints a one-line JSON summary on stdout.
//! Artifacts are written atomically and carry the resolved configuration
//! (rule inlined, seed filled in), so feeding that configuration back in
//! reproduces them byte for byte. Wall-clock timestamps go only to the
//! sidecar `toomlab.log`.
//!
//! Exit codes: 0 on success or an eroder verdict, 2 on a non-eroder
//! verdict, 1 on any error (with `{"error": {...}}` on stdout).

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bounds::{self, BoundParams};
use crate::eroder::{self, ErosionCertificate, Rational, Verdict};
use crate::error::{Error, Result};
use crate::exact::{self, CylinderFunction, TransferOperator};
use crate::lattice::{self, LatticeState, NoiseKind, NoiseModel};
use crate::rule::{self, Offset, RuleFile, RuleSpec};
use crate::stats::{self, CorrelationPoint, NoiseFamily};

pub const SEED_ENV: &str = "TOOMLAB_SEED";
const DEFAULT_OUT: &str = "toomlab-out";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Check,
    Erode,
    Simulate,
    Exact,
    Correlate,
    Scan,
    Divergence,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::Erode => "erode",
            Command::Simulate => "simulate",
            Command::Exact => "exact",
            Command::Correlate => "correlate",
            Command::Scan => "scan",
            Command::Divergence => "divergence",
        }
    }
}

/// Where the rule comes from: a builtin name, a rule file relative to the
/// configuration, or an inline rule description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RuleSource {
    Builtin(String),
    File { file: PathBuf },
    Inline(RuleFile),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    pub rule: Option<RuleSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<u64>,
    /// Write a PPM frame every this many steps; 0 or absent disables.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_family: Option<NoiseFamily>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<Vec<Offset>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distances: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lags: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub island: Option<Vec<Offset>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_prime: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

impl RunConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid run configuration: {e}")))
    }

    /// Reads a configuration, resolving a rule file against the
    /// configuration's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::from_json_str(&text)?;
        if let Some(RuleSource::File { file }) = &mut config.rule {
            if file.is_relative() {
                *file = path.parent().unwrap_or(Path::new(".")).join(&*file);
            }
        }
        Ok(config)
    }

    pub fn resolve_rule(&self) -> Result<RuleSpec> {
        match &self.rule {
            None => Err(Error::Config("missing field `rule`".into())),
            Some(RuleSource::Builtin(name)) => rule::builtin(name),
            Some(RuleSource::File { file }) => RuleSpec::load(file),
            Some(RuleSource::Inline(file)) => file.clone().into_rule(),
        }
    }

    fn noise_model(&self) -> Result<NoiseModel> {
        match &self.noise {
            Some(kind) => NoiseModel::new(kind.clone()),
            None => Err(Error::Config("missing field `noise`".into())),
        }
    }

    fn dims(&self) -> Result<Vec<usize>> {
        self.dims.clone().ok_or_else(|| Error::Config("missing field `dims`".into()))
    }

    fn steps(&self) -> Result<u64> {
        self.steps.ok_or_else(|| Error::Config("missing field `steps`".into()))
    }

    fn origin_window(&self, d: usize) -> Vec<Offset> {
        self.window.clone().unwrap_or_else(|| vec![vec![0; d]])
    }
}

/// Options given on the command line next to the configuration.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
}

/// What a command produced.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub exit_code: i32,
    pub summary: Value,
    pub files: Vec<PathBuf>,
}

struct Context {
    command: Command,
    config: RunConfig,
    rule: RuleSpec,
    seed: u64,
    out: PathBuf,
    files: Vec<PathBuf>,
}

impl Context {
    /// The configuration as run: command set, rule inlined, seed filled.
    fn resolved(&self) -> Value {
        let mut c = self.config.clone();
        c.command = Some(self.command);
        c.rule = Some(RuleSource::Inline(self.rule.to_file()));
        c.seed = Some(self.seed);
        c.out = None;
        serde_json::to_value(c).expect("configurations always serialize")
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.out.join(name);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let mut tmp = tempfile::NamedTempFile::new_in(path.parent().unwrap_or(Path::new(".")))?;
        tmp.write_all(bytes)?;
        tmp.as_file().sync_all()?;
        tmp.persist(&path).map_err(|e| e.error)?;
        self.files.push(path);
        Ok(())
    }

    fn write_json(&mut self, name: &str, body: Value) -> Result<()> {
        let mut doc = serde_json::Map::new();
        doc.insert("command".into(), json!(self.command.name()));
        doc.insert("config".into(), self.resolved());
        if let Value::Object(fields) = body {
            doc.extend(fields);
        }
        let mut text = serde_json::to_string_pretty(&Value::Object(doc))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    fn write_csv(&mut self, name: &str, header: &str, rows: &[String]) -> Result<()> {
        let mut text = String::new();
        writeln!(text, "# toomlab {}", self.command.name()).unwrap();
        writeln!(text, "# config: {}", self.resolved()).unwrap();
        writeln!(text, "{header}").unwrap();
        for row in rows {
            writeln!(text, "{row}").unwrap();
        }
        self.write(name, text.as_bytes())
    }

    fn log(&self, exit_code: i32) {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let files: Vec<String> = self.files.iter().map(|f| f.display().to_string()).collect();
        let line = format!(
            "{secs} {} seed={} exit={exit_code} files={}\n",
            self.command.name(),
            self.seed,
            files.join(",")
        );
        if let Ok(mut f) = std::fs::OpenOptions::new().create(true).append(true).open(self.out.join("toomlab.log")) {
            let _ = f.write_all(line.as_bytes());
        }
    }
}

/// `--seed`, then `TOOMLAB_SEED`, then the configuration, then 0.
pub fn effective_seed(cli: Option<u64>, env: Option<&str>, config: Option<u64>) -> Result<u64> {
    if let Some(s) = cli {
        return Ok(s);
    }
    if let Some(text) = env {
        return text
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{SEED_ENV}={text:?} is not an unsigned integer")));
    }
    Ok(config.unwrap_or(0))
}

/// Runs one command. Errors in the configuration or the computation are
/// returned; the caller maps them to exit code 1.
pub fn execute(command: Command, config: RunConfig, overrides: &Overrides) -> Result<Outcome> {
    if let Some(c) = config.command {
        if c != command {
            return Err(Error::Config(format!(
                "configuration is for `{}`, not `{}`",
                c.name(),
                command.name()
            )));
        }
    }
    let env = std::env::var(SEED_ENV).ok();
    let seed = effective_seed(overrides.seed, env.as_deref(), config.seed)?;
    let out = overrides
        .out
        .clone()
        .or_else(|| config.out.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    std::fs::create_dir_all(&out)?;
    // Loading checks shape only; `check` reports monotonicity failures
    // itself and every other command validates when compiling the rule.
    let rule = config.resolve_rule()?;
    let mut ctx = Context { command, config, rule, seed, out, files: Vec::new() };
    let threads = overrides.threads;
    let result = lattice::with_threads(threads, || match command {
        Command::Check => cmd_check(&mut ctx),
        Command::Erode => cmd_erode(&mut ctx),
        Command::Simulate => cmd_simulate(&mut ctx),
        Command::Exact => cmd_exact(&mut ctx),
        Command::Correlate => cmd_correlate(&mut ctx),
        Command::Scan => cmd_scan(&mut ctx),
        Command::Divergence => cmd_divergence(&mut ctx),
    })?;
    let exit_code = match &result {
        Ok((code, _)) => *code,
        Err(_) => 1,
    };
    ctx.log(exit_code);
    let (exit_code, summary) = result?;
    Ok(Outcome { exit_code, summary, files: ctx.files })
}

/// Report of the explicit constants for a rule under given noise levels.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundsReport {
    pub verdict: Verdict,
    pub neighborhood_size: usize,
    pub v: u64,
    pub q: Option<usize>,
    pub r: Option<Rational>,
    pub alpha_star: f64,
    pub alpha: f64,
    pub eps: Option<f64>,
    pub eps_prime: f64,
    pub k: f64,
    pub epsilon_star: Option<f64>,
    pub sigma: Option<f64>,
    pub admissible: Option<bool>,
    pub c: Option<f64>,
    pub c_inv: Option<f64>,
    pub c_prime: Option<f64>,
    pub eta: Option<f64>,
    pub notes: Vec<String>,
}

/// Evaluates every constant that applies; the rest are left empty with a
/// note saying why.
pub fn bounds_report(
    rule: &RuleSpec,
    cert: &ErosionCertificate,
    alpha: f64,
    eps: Option<f64>,
    eps_prime: f64,
    k: f64,
) -> BoundsReport {
    let size = rule.size();
    let mut report = BoundsReport {
        verdict: cert.verdict(),
        neighborhood_size: size,
        v: rule.max_manhattan(),
        q: None,
        r: None,
        alpha_star: bounds::alpha_star(size),
        alpha,
        eps,
        eps_prime,
        k,
        epsilon_star: None,
        sigma: None,
        admissible: None,
        c: None,
        c_inv: None,
        c_prime: None,
        eta: None,
        notes: vec![],
    };
    let Ok((q, r)) = eroder::certificate_constants(cert) else {
        report.notes.push("not an eroder: no separation constants".into());
        return report;
    };
    let r_f = r.to_f64();
    report.q = Some(q);
    report.r = Some(r);
    match bounds::epsilon_star(size, q, r_f, alpha) {
        Ok(e) => report.epsilon_star = Some(e),
        Err(e) => report.notes.push(e.to_string()),
    }
    let Some(eps) = eps else {
        report.notes.push("no noise level given: σ and C not evaluated".into());
        return report;
    };
    let params = match BoundParams::new(size, q, r_f, alpha, eps, eps_prime, k) {
        Ok(p) => p,
        Err(e) => {
            report.notes.push(e.to_string());
            return report;
        }
    };
    let sigma = bounds::sigma(&params);
    report.sigma = Some(sigma);
    report.admissible = Some(params.admissible);
    match bounds::constants_c(&params) {
        Ok((c, c_inv)) => {
            report.c = Some(c);
            report.c_inv = Some(c_inv);
            match bounds::decay_constants(c, sigma, rule.neighborhood()) {
                Ok(d) => {
                    report.c_prime = Some(d.c_prime);
                    report.eta = Some(d.eta);
                }
                Err(e) => report.notes.push(e.to_string()),
            }
        }
        Err(e) => report.notes.push(e.to_string()),
    }
    report
}

fn cmd_check(ctx: &mut Context) -> Result<(i32, Value)> {
    // The validation message names the offending pair of configurations.
    ctx.rule.validate()?;
    let family = ctx.rule.minimal_plus_sets()?;
    let cert = eroder::check_eroder(&family, ctx.rule.dimension())?;
    if !eroder::verify_certificate(&family, &cert)? {
        return Err(Error::Numerical("certificate failed verification".into()));
    }
    // Noise constants come from explicit fields first, then from the
    // assumption checker run on the configured kernel.
    let verified = match &ctx.config.noise {
        Some(kind) => {
            let mut noise = NoiseModel::new(kind.clone())?;
            Some(noise.verify(&ctx.rule)?)
        }
        None => None,
    };
    let alpha = ctx.config.alpha.or(verified.map(|v| v.alpha)).unwrap_or(0.0);
    let eps = ctx.config.eps.or(verified.map(|v| v.eps));
    let report = bounds_report(
        &ctx.rule,
        &cert,
        alpha,
        eps,
        ctx.config.eps_prime.unwrap_or(0.0),
        ctx.config.k.unwrap_or(1.0),
    );
    let plus_sets: Vec<Vec<usize>> = family.sets.clone();
    ctx.write_json("certificate.json", json!({ "plus_sets": plus_sets, "certificate": cert }))?;
    ctx.write_json("bounds.json", json!({ "bounds": report }))?;
    let code = if cert.is_eroder() { 0 } else { 2 };
    let mut summary = json!({
        "verdict": cert.verdict(),
        "q": report.q,
        "r": report.r,
        "epsilon_star": report.epsilon_star,
    });
    if let ErosionCertificate::NonEroder(w) = &cert {
        summary["witness"] = json!(w.witness);
    }
    Ok((code, summary))
}

fn cmd_erode(ctx: &mut Context) -> Result<(i32, Value)> {
    let d = ctx.rule.dimension();
    let island = ctx.config.island.clone().unwrap_or_else(|| vec![vec![0; d]]);
    let cutoff = ctx.config.cutoff.unwrap_or_else(|| lattice::default_cutoff(lattice::island_diameter(&island)));
    let dims = match &ctx.config.dims {
        Some(dims) => dims.clone(),
        None => lattice::erosion_dims(&ctx.rule, &island, cutoff),
    };
    let every = ctx.config.snapshot_every.unwrap_or(0);
    let mut frames: Vec<(u64, LatticeState)> = Vec::new();
    let trace = lattice::erosion_trace_with(&ctx.rule, &island, &dims, cutoff, |n, s| {
        if every > 0 && n % every == 0 {
            frames.push((n, s.clone()));
        }
    })?;
    for (n, size) in trace.island_sizes.iter().enumerate() {
        eprintln!("step {n}: {size} minus sites");
    }
    write_frames(ctx, "erode", &frames)?;
    ctx.write_json("erosion.json", json!({ "erosion": trace }))?;
    Ok((0, json!({ "outcome": trace.outcome, "dims": dims })))
}

fn write_frames(ctx: &mut Context, stem: &str, frames: &[(u64, LatticeState)]) -> Result<()> {
    let Some((_, first)) = frames.first() else { return Ok(()) };
    match first.dims().len() {
        1 => {
            let states: Vec<LatticeState> = frames.iter().map(|(_, s)| s.clone()).collect();
            ctx.write(&format!("{stem}_strip.ppm"), &lattice::ppm_strip(&states)?)
        }
        2 => {
            for (n, s) in frames {
                ctx.write(&format!("frames/{stem}_{n:06}.ppm"), &lattice::ppm_frame(s)?)?;
            }
            Ok(())
        }
        d => Err(Error::Config(format!("snapshots are only drawn for d = 1 or 2, not {d}"))),
    }
}

fn cmd_simulate(ctx: &mut Context) -> Result<(i32, Value)> {
    let noise = ctx.config.noise_model()?;
    let dims = ctx.config.dims()?;
    let steps = ctx.config.steps()?;
    let burn_in = ctx.config.burn_in.unwrap_or(0);
    let every = ctx.config.snapshot_every.unwrap_or(0);
    let mut frames = Vec::new();
    let run = stats::minus_density_run_with(&ctx.rule, &noise, &dims, steps, burn_in, ctx.seed, |n, s| {
        if every > 0 && n % every == 0 {
            frames.push((n, s.clone()));
        }
    })?;
    write_frames(ctx, "simulate", &frames)?;
    let rows: Vec<String> = run.density_series.iter().enumerate().map(|(t, d)| format!("{t},{d}")).collect();
    ctx.write_csv("density.csv", "step,density", &rows)?;
    ctx.write_json("density.json", json!({ "density": run.density }))?;
    Ok((0, json!({ "density": run.density })))
}

fn cmd_exact(ctx: &mut Context) -> Result<(i32, Value)> {
    let noise = ctx.config.noise_model()?;
    let dims = ctx.config.dims()?;
    let tol = ctx.config.tol.unwrap_or(1e-10);
    let steps = ctx.config.steps.unwrap_or(50) as usize;
    let window = ctx.config.origin_window(dims.len());
    let op = TransferOperator::new(&ctx.rule, &noise, &dims)?;
    let stationary = exact::stationary_with(&op, tol, 1_000_000)?;
    let pi = &stationary.distribution;
    let window_sites = CylinderFunction::spin_product(window.clone())?.sites_on(&dims)?;
    let marginal = pi.window_marginal(&window_sites);
    let minus: Vec<f64> = (0..dims.iter().product()).map(|x| pi.minus_marginal(x)).collect();
    let start = exact::StateDistribution::all_plus(&dims)?;
    let curve = exact::tv_curve(&op, &start, pi, steps)?;
    // Fit only where the curve sits clearly above the stationary
    // tolerance, skipping the initial transient.
    let (xs, ys): (Vec<f64>, Vec<f64>) = curve
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, &v)| v > 100.0 * tol)
        .map(|(n, &v)| (n as f64, v))
        .unzip();
    let fit = stats::fit_log_linear(&xs, &ys);
    let f = CylinderFunction::spin_product(window.clone())?;
    let tf = exact::dual_cylinder(&ctx.rule, &noise, &f)?;
    let duality_residual = match exact::cylinder_expectation(pi, &tf) {
        Ok(rhs) => Some((exact::cylinder_expectation(&op.apply(pi)?, &f)? - rhs).abs()),
        // The widened window wraps on this torus.
        Err(Error::Domain(_)) => None,
        Err(e) => return Err(e),
    };
    let body = json!({
        "window": window,
        "stationary": {
            "iterations": stationary.iterations,
            "residual": stationary.residual,
            "averaged": stationary.averaged,
            "window_marginal": marginal,
            "minus_marginals": minus,
        },
        "tv_curve": curve,
        "fit": fit,
        "duality_residual": duality_residual,
    });
    ctx.write_json("exact.json", body)?;
    Ok((0, json!({ "rate": fit.rate, "valid": fit.valid, "minus_marginal_0": minus[0] })))
}

fn correlation_rows(points: &[CorrelationPoint]) -> Vec<String> {
    points
        .iter()
        .map(|p| format!("{},{},{},{}", p.distance_or_lag, p.estimate, p.stderr, p.n))
        .collect()
}

fn cmd_correlate(ctx: &mut Context) -> Result<(i32, Value)> {
    let noise = ctx.config.noise_model()?;
    let dims = ctx.config.dims()?;
    let samples = ctx.config.samples.unwrap_or(1000);
    let burn_in = ctx.config.burn_in.unwrap_or(100);
    let distances = ctx.config.distances.clone().unwrap_or_else(|| vec![1, 2, 3, 4]);
    let lags = ctx.config.lags.clone().unwrap_or_else(|| vec![0, 1, 2, 3, 4]);
    let (spatial, spatial_fit) =
        stats::spatial_correlation(&ctx.rule, &noise, &dims, &distances, samples, burn_in, ctx.seed)?;
    let (temporal, temporal_fit) =
        stats::temporal_autocorrelation(&ctx.rule, &noise, &dims, &lags, samples, burn_in, ctx.seed)?;
    let header = "distance_or_lag,estimate,stderr,n";
    ctx.write_csv("spatial.csv", header, &correlation_rows(&spatial.covariances))?;
    ctx.write_csv("temporal.csv", header, &correlation_rows(&temporal.autocovariances))?;
    let fits = json!({ "spatial_fit": spatial_fit, "temporal_fit": temporal_fit });
    ctx.write_json("correlate.json", fits.clone())?;
    Ok((0, fits))
}

fn cmd_scan(ctx: &mut Context) -> Result<(i32, Value)> {
    let dims = ctx.config.dims()?;
    let steps = ctx.config.steps()?;
    let burn_in = ctx.config.burn_in.unwrap_or(steps / 2);
    let grid = ctx.config.eps_grid.clone().ok_or_else(|| Error::Config("missing field `eps_grid`".into()))?;
    let family = ctx.config.noise_family.unwrap_or(NoiseFamily::Symmetric);
    let rows = stats::density_vs_epsilon_scan(&ctx.rule, family, &grid, &dims, steps, burn_in, ctx.seed)?;
    let lines: Vec<String> =
        rows.iter().map(|r| format!("{},{},{},{}", r.eps, r.density, r.stderr, r.n)).collect();
    ctx.write_csv("scan.csv", "eps,density,stderr,n", &lines)?;
    Ok((0, json!({ "rows": rows.len() })))
}

fn cmd_divergence(ctx: &mut Context) -> Result<(i32, Value)> {
    let noise = ctx.config.noise_model()?;
    let dims = ctx.config.dims()?;
    let steps = ctx.config.steps()?;
    let burn_in = ctx.config.burn_in.unwrap_or(steps / 2);
    let report = stats::two_phase_divergence(&ctx.rule, &noise, &dims, steps, burn_in, ctx.seed)?;
    let rows: Vec<String> = report
        .series
        .iter()
        .map(|r| format!("{},{},{},{}", r.step, r.mag_plus, r.mag_minus, r.gap))
        .collect();
    ctx.write_csv("divergence.csv", "step,mag_plus,mag_minus,gap", &rows)?;
    let body = json!({
        "inapplicable": report.inapplicable,
        "gap": report.gap,
        "class": report.class,
        "coalesced_at": report.coalesced_at,
    });
    ctx.write_json("divergence.json", body.clone())?;
    Ok((0, body))
}

#[derive(Parser, Debug)]
#[command(name = "toomlab", version, about = "Noisy monotone cellular automata toolkit")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured seed and TOOMLAB_SEED.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn error_json(e: &Error) -> Value {
    json!({ "error": { "kind": e.kind(), "message": e.to_string() } })
}

/// Parses arguments, runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let overrides = Overrides { seed: cli.seed, threads: cli.threads, out: cli.out };
    let result = RunConfig::load(&cli.config).and_then(|config| execute(cli.command, config, &overrides));
    match result {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            outcome.exit_code
        }
        Err(e) => {
            eprintln!("{}", error_json(&e));
            1
        }
    }
}

pub fn main() -> i32 {
    run(std::env::args_os())
}
