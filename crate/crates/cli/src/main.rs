use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use legendre_kam::divisor::{certify_range, write_certificates_csv, CertifyOptions, Convention};
use legendre_kam::dynamics::{extract_frequencies, integrate_partial, torus_residual, FrequencyReport, SimConfig, MIN_SAMPLES};
use legendre_kam::galerkin::{build_tensor, CouplingTensor, EigenSystem, MassParam};
use legendre_kam::normal_form::{admissible_grid, build_normal_form, summarize};
use legendre_kam::quartic::build_p_table;
use legendre_kam::rational::to_fraction_string;
use legendre_kam::verify::run_all;

#[derive(Parser)]
#[command(name = "legkam", version, about = "Quartic Legendre integrals, divisor certificates, normal-form checks and simulations")]
struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the exact table P(m, n) = ∫ P_m² P_n² and write it as CSV or JSON.
    Table(TableArgs),
    /// Certify small divisors over a grid of masses.
    Certify(CertifyArgs),
    /// Normal-form coefficients and nondegeneracy checks as JSON.
    Normalform(NormalFormArgs),
    /// Integrate the truncated system from a key = value config file.
    Simulate(SimulateArgs),
    /// Run every acceptance criterion and print one PASS/FAIL line each.
    VerifyAll(VerifyArgs),
}

#[derive(Args)]
struct TableArgs {
    #[arg(long)]
    max_m: usize,
    #[arg(long)]
    max_n: usize,
    /// Output file; `.json` selects JSON, anything else CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CertifyArgs {
    /// Largest absolute index N.
    #[arg(long = "n-max")]
    n_max: usize,
    /// Comma-separated masses (`p/q` or decimals), or `lo:hi:count`.
    #[arg(long)]
    masses: String,
    #[arg(long, default_value = "original")]
    convention: Convention,
    /// Allow quadruples with every |index| > 2.
    #[arg(long)]
    widen: bool,
    /// Skip quadruples whose coupling vanishes identically.
    #[arg(long)]
    require_coupling: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct NormalFormArgs {
    /// Truncation dimension J.
    #[arg(long)]
    dim: usize,
    /// Mass parameter (`p/q` or decimal).
    #[arg(long)]
    mass: String,
    /// Number of grid masses for the A3 sweeps.
    #[arg(long, default_value_t = 100)]
    grid: usize,
    /// Largest j in the A31 sweep.
    #[arg(long, default_value_t = 500)]
    j_max: usize,
    /// Largest index in the A32 sweep.
    #[arg(long, default_value_t = 200)]
    pair_max: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// Config file with `key = value` lines.
    config: PathBuf,
    /// Trajectory CSV; the frequency report goes next to it as `.json`.
    #[arg(long)]
    out: PathBuf,
    /// Keep every k-th recorded row in the CSV.
    #[arg(long, default_value_t = 1)]
    csv_stride: usize,
}

#[derive(Args)]
struct VerifyArgs {
    /// Optional JSON report.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Bad input (exit 2) versus a check that ran and failed (exit 1).
enum Failure {
    Usage(anyhow::Error),
    Check(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

type Outcome = Result<(), Failure>;

#[derive(Serialize)]
struct RunManifest {
    subcommand: String,
    parameters: Value,
    input_hash: String,
    outputs: Vec<String>,
    wall_time_seconds: f64,
    success: bool,
}

struct Recorder {
    subcommand: &'static str,
    parameters: Value,
    extra_input: Vec<u8>,
    start: Instant,
    outputs: Vec<PathBuf>,
}

impl Recorder {
    fn new(subcommand: &'static str, parameters: Value) -> Self {
        Self { subcommand, parameters, extra_input: Vec::new(), start: Instant::now(), outputs: Vec::new() }
    }

    fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.subcommand.as_bytes());
        h.update(self.parameters.to_string().as_bytes());
        h.update(&self.extra_input);
        hex::encode(h.finalize())
    }

    /// Written next to the first output as `<output>.manifest.json`.
    fn finish(&self, success: bool) -> anyhow::Result<()> {
        let Some(first) = self.outputs.first() else { return Ok(()) };
        let manifest = RunManifest {
            subcommand: self.subcommand.into(),
            parameters: self.parameters.clone(),
            input_hash: self.hash(),
            outputs: self.outputs.iter().map(|p| p.display().to_string()).collect(),
            wall_time_seconds: self.start.elapsed().as_secs_f64(),
            success,
        };
        let path = manifest_path(first);
        fs::write(&path, serde_json::to_string_pretty(&manifest)?).with_context(|| format!("writing {}", path.display()))
    }
}

fn manifest_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn write_file(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn parse_mass(text: &str) -> Result<MassParam, Failure> {
    let mass = MassParam::parse(text).map_err(|e| Failure::Usage(e.into()))?;
    mass.require_admissible().map_err(|e| Failure::Usage(e.into()))?;
    Ok(mass)
}

fn parse_masses(spec: &str) -> Result<Vec<MassParam>, Failure> {
    let parts: Vec<&str> = spec.split(':').collect();
    let masses = if parts.len() == 3 {
        let lo: f64 = parts[0].trim().parse().map_err(|_| Failure::Usage(anyhow::anyhow!("bad grid start {:?}", parts[0])))?;
        let hi: f64 = parts[1].trim().parse().map_err(|_| Failure::Usage(anyhow::anyhow!("bad grid end {:?}", parts[1])))?;
        let count: usize =
            parts[2].trim().parse().map_err(|_| Failure::Usage(anyhow::anyhow!("bad grid count {:?}", parts[2])))?;
        if count == 0 || !(lo <= hi) {
            return Err(Failure::Usage(anyhow::anyhow!("grid {spec:?} is empty")));
        }
        let step = if count > 1 { (hi - lo) / (count - 1) as f64 } else { 0.0 };
        (0..count)
            .map(|k| {
                let m = MassParam::from_f64(lo + k as f64 * step).map_err(|e| Failure::Usage(e.into()))?;
                m.require_admissible().map_err(|e| Failure::Usage(e.into()))?;
                Ok(m)
            })
            .collect::<Result<Vec<_>, Failure>>()?
    } else {
        spec.split(',').map(|t| parse_mass(t.trim())).collect::<Result<Vec<_>, _>>()?
    };
    if masses.is_empty() {
        return Err(Failure::Usage(anyhow::anyhow!("no masses given")));
    }
    Ok(masses)
}

fn cmd_table(args: &TableArgs) -> Outcome {
    if args.max_m < 3 || args.max_n < args.max_m {
        return Err(Failure::Usage(anyhow::anyhow!(
            "need max_n >= max_m >= 3 (got max_m = {}, max_n = {})",
            args.max_m,
            args.max_n
        )));
    }
    let mut rec = Recorder::new("table", json!({ "max_m": args.max_m, "max_n": args.max_n }));
    let table = match build_p_table(args.max_m, args.max_n) {
        Ok(t) => t,
        Err(e @ legendre_kam::Error::SelfCheck(_)) => return Err(Failure::Check(e.to_string())),
        Err(e) => return Err(Failure::Runtime(e.into())),
    };
    table.export(&args.out).map_err(anyhow::Error::from)?;
    rec.outputs.push(args.out.clone());
    rec.finish(true)?;
    println!("wrote {} x {} entries to {}", args.max_m + 1, args.max_n + 1, args.out.display());
    Ok(())
}

fn cmd_certify(args: &CertifyArgs) -> Outcome {
    let masses = parse_masses(&args.masses)?;
    if args.n_max < 2 {
        return Err(Failure::Usage(anyhow::anyhow!("n-max must be >= 2")));
    }
    let opts = CertifyOptions { convention: args.convention, widen: args.widen, require_coupling: args.require_coupling };
    let mut rec = Recorder::new(
        "certify",
        json!({
            "n_max": args.n_max,
            "masses": masses.iter().map(|m| to_fraction_string(m.exact())).collect::<Vec<_>>(),
            "convention": args.convention,
            "widen": args.widen,
            "require_coupling": args.require_coupling,
        }),
    );
    let certs = masses.iter().map(|m| certify_range(args.n_max, m, opts)).collect::<Result<Vec<_>, _>>().map_err(anyhow::Error::from)?;
    let mut buf = Vec::new();
    write_certificates_csv(&certs, &mut buf).map_err(anyhow::Error::from)?;
    write_file(&args.out, &buf)?;
    rec.outputs.push(args.out.clone());
    let bad: Vec<f64> = certs.iter().filter(|c| !c.is_positive()).map(|c| c.mass).collect();
    rec.finish(bad.is_empty())?;
    for c in &certs {
        let ratio = if c.floor_clamped { "n/a (floor clamped)".to_string() } else { format!("{:.6e}", c.min_ratio) };
        println!("m = {}: min |δ| = {:.6e}, min ratio = {ratio}, witness {:?}", c.mass, c.min_abs_divisor, c.witness);
    }
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(format!("vanishing divisor for m in {bad:?}")))
    }
}

fn cmd_normalform(args: &NormalFormArgs) -> Outcome {
    let mass = parse_mass(&args.mass)?;
    if args.dim < 3 {
        return Err(Failure::Usage(anyhow::anyhow!("dim must be >= 3")));
    }
    if args.j_max < 3 || args.pair_max < 4 {
        return Err(Failure::Usage(anyhow::anyhow!("j-max must be >= 3 and pair-max >= 4")));
    }
    let mut rec = Recorder::new(
        "normalform",
        json!({
            "dim": args.dim,
            "mass": to_fraction_string(mass.exact()),
            "grid": args.grid,
            "j_max": args.j_max,
            "pair_max": args.pair_max,
        }),
    );
    let table = build_p_table(3, (2 * args.dim - 1).max(3)).map_err(anyhow::Error::from)?;
    let data = build_normal_form(args.dim, &mass, &table).map_err(anyhow::Error::from)?;
    let summary = summarize(&data, &admissible_grid(args.grid), args.j_max, args.pair_max);
    write_file(&args.out, serde_json::to_string_pretty(&summary).context("serialising summary")?.as_bytes())?;
    rec.outputs.push(args.out.clone());
    rec.finish(summary.passed)?;
    println!(
        "det g = {}, det A = {:.6e}; A1 {}, A2 {}, A31 {}, A32 {}",
        summary.det_g, summary.det_a, summary.a1.holds, summary.a2, summary.a31.holds, summary.a32.holds
    );
    if summary.passed {
        Ok(())
    } else {
        Err(Failure::Check("a nondegeneracy check or exact constant failed".into()))
    }
}

fn cmd_simulate(args: &SimulateArgs) -> Outcome {
    let text = fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))
        .map_err(Failure::Usage)?;
    let cfg = SimConfig::parse_key_values(&text).map_err(|e| Failure::Usage(e.into()))?;
    let mass = MassParam::from_f64(cfg.mass).map_err(|e| Failure::Usage(e.into()))?;
    let mut rec = Recorder::new("simulate", serde_json::to_value(&cfg).context("serialising config")?);
    rec.extra_input = text.into_bytes();
    let sys = EigenSystem::new(cfg.dim, mass);
    let tensor = if cfg.linear { CouplingTensor::zeroed(cfg.dim) } else { build_tensor(&sys).map_err(anyhow::Error::from)? };
    let (traj, outcome) = integrate_partial(&cfg, &sys, &tensor).map_err(|e| Failure::Usage(e.into()))?;
    traj.export_csv(&args.out, args.csv_stride).map_err(anyhow::Error::from)?;
    rec.outputs.push(args.out.clone());
    if let Err(e) = outcome {
        rec.finish(false)?;
        return Err(Failure::Check(format!("{e}; partial trajectory written to {}", args.out.display())));
    }
    let modes: Vec<usize> = (1..=cfg.dim).collect();
    let frequencies = if traj.len() >= MIN_SAMPLES { extract_frequencies(&traj, &modes).map_err(anyhow::Error::from)? } else { Vec::new() };
    let report = FrequencyReport {
        eigenvalues: sys.lambdas.clone(),
        frequencies,
        torus_residual: torus_residual(&traj, &sys),
        max_energy_drift: traj.max_relative_energy_drift(),
        config: cfg,
    };
    let report_path = args.out.with_extension("json");
    let mut buf = Vec::new();
    report.write_json(&mut buf).map_err(anyhow::Error::from)?;
    write_file(&report_path, &buf)?;
    rec.outputs.push(report_path);
    rec.finish(true)?;
    for f in report.frequencies.iter().take(2) {
        println!("mode {}: ω = {:.10} (λ = {:.10}), dominant {}", f.mode, f.frequency, sys.lambda(f.mode), f.dominant);
    }
    println!("tail residual {:.3e}, max |ΔH/H| {:.3e}", report.torus_residual, report.max_energy_drift);
    Ok(())
}

fn cmd_verify_all(args: &VerifyArgs) -> Outcome {
    let mut rec = Recorder::new("verify-all", json!({}));
    let results = run_all();
    for c in &results {
        println!("{}", c.line());
    }
    let failed: Vec<&str> = results.iter().filter(|c| !c.passed).map(|c| c.id).collect();
    println!("{} of {} criteria passed", results.len() - failed.len(), results.len());
    if let Some(out) = &args.out {
        let by_id: BTreeMap<&str, &legendre_kam::verify::Criterion> = results.iter().map(|c| (c.id, c)).collect();
        write_file(out, serde_json::to_string_pretty(&by_id).context("serialising report")?.as_bytes())?;
        rec.outputs.push(out.clone());
    }
    rec.finish(failed.is_empty())?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(format!("failed criteria: {}", failed.join(", "))))
    }
}

fn run(cli: &Cli) -> Outcome {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Usage(anyhow::anyhow!("--threads must be >= 1")));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring thread pool")?;
    }
    match &cli.command {
        Command::Table(a) => cmd_table(a),
        Command::Certify(a) => cmd_certify(a),
        Command::Normalform(a) => cmd_normalform(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::VerifyAll(a) => cmd_verify_all(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("usage error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
