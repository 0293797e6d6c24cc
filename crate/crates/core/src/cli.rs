//! Batch front end behind the `wbl` binary: argument parsing, experiment
//! orchestration and CSV/JSON output.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::classical::{correlation_series, Reflection};
use crate::engine::{dense, Engine, EngineConfig, QuditState};
use crate::observables::{fractal_average, Observable};
use crate::spectral::EigenDraw;
use crate::stats::{self, Target};
use crate::{rng, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Options shared by every subcommand.
#[derive(Clone, Debug, Serialize, Deserialize, Args)]
pub struct RunConfig {
    /// Local dimension D ≥ 2.
    #[arg(long = "D", global = true, default_value_t = 3)]
    pub d: u32,
    /// Number of qudits k ≥ 1.
    #[arg(long, global = true, default_value_t = 6)]
    pub k: u32,
    /// Position digits ℓ (default ⌊k/2⌋).
    #[arg(long, global = true)]
    pub ell: Option<u32>,
    /// Observable JSON (default cos(2πq)).
    #[arg(long, global = true)]
    pub obs: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Draws (or pairs) per eigenspace.
    #[arg(long, global = true, default_value_t = 16)]
    pub samples: u64,
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Reflection in the classical limits.
    #[arg(long, global = true, default_value = "walsh")]
    pub reflection: Reflection,
}

impl RunConfig {
    pub fn ell(&self) -> u32 {
        self.ell.unwrap_or(EngineConfig::default_ell(self.k))
    }

    pub fn engine(&self) -> Result<Engine> {
        Ok(Engine::new(EngineConfig::new(self.d, self.k, self.ell())?))
    }

    pub fn observable(&self) -> Result<Observable> {
        match &self.obs {
            Some(p) => Observable::load(p),
            None => Ok(Observable::cos(1, 0, 1.0)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResultManifest {
    pub command: String,
    pub tool_version: String,
    pub config: RunConfig,
    pub ell: u32,
    pub wall_time_s: f64,
    pub constants: BTreeMap<String, f64>,
    pub checks: Vec<CheckResult>,
    pub outputs: Vec<String>,
}

impl ResultManifest {
    fn new(command: &str, cfg: &RunConfig) -> Self {
        Self {
            command: command.into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            config: cfg.clone(),
            ell: cfg.ell(),
            wall_time_s: 0.0,
            constants: BTreeMap::new(),
            checks: Vec::new(),
            outputs: Vec::new(),
        }
    }

    fn check(&mut self, name: &str, pass: bool, detail: String) {
        self.checks.push(CheckResult {
            name: name.into(),
            pass,
            detail,
        });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    fn finish(mut self, start: Instant, out: &Path) -> Result<Self> {
        self.wall_time_s = start.elapsed().as_secs_f64();
        fs::create_dir_all(out)?;
        fs::write(
            out.join(format!("{}_manifest.json", self.command)),
            serde_json::to_string_pretty(&self)?,
        )?;
        Ok(self)
    }
}

fn writer(out: &Path, name: &str) -> Result<BufWriter<fs::File>> {
    fs::create_dir_all(out)?;
    Ok(BufWriter::new(fs::File::create(out.join(name))?))
}

fn write_json<T: Serialize>(out: &Path, name: &str, v: &T) -> Result<String> {
    fs::create_dir_all(out)?;
    fs::write(out.join(name), serde_json::to_string_pretty(v)?)?;
    Ok(name.to_string())
}

/// Time window `[lo, hi]`, default one period centered at 0.
fn window(e: &Engine, t_range: Option<(i64, i64)>) -> (i64, i64) {
    let q = e.period() as i64;
    t_range.unwrap_or((-q / 2, q / 2 - 1))
}

/// Unitarity, period, dense block form, trace identities, nonzero patterns
/// and the classical pattern correspondence.
pub fn cmd_operator_check(cfg: &RunConfig, t_range: Option<(i64, i64)>) -> Result<ResultManifest> {
    let start = Instant::now();
    let e = cfg.engine()?;
    let mut man = ResultManifest::new("operator_check", cfg);
    let (d, k) = (e.d(), e.k());
    let q = e.period() as i64;
    let mut r = rng::stream(cfg.seed, "operator-check", 0, 0);
    let mut v = QuditState::gaussian(e.config(), &mut r);
    v.normalize();
    let w = e.apply_baker(&v, 1);
    man.check(
        "unitarity",
        (w.norm() - 1.0).abs() < 1e-12,
        format!("‖B̂v‖ − 1 = {:e}", w.norm() - 1.0),
    );
    let back = e.apply_baker(&w, -1);
    man.check(
        "inverse",
        back.distance(&v) < 1e-10,
        format!("‖B̂⁻¹B̂v − v‖ = {:e}", back.distance(&v)),
    );
    let full = e.apply_baker(&v, q);
    man.check(
        "period",
        full.distance(&v) < 1e-9,
        format!("‖B̂^q v − v‖ = {:e}", full.distance(&v)),
    );
    man.constants.insert("q".into(), q as f64);
    if e.n() <= dense::DENSE_GUARD {
        let diff = e.assemble(1)?.max_abs_diff(&dense::block_form(d, k)?);
        man.check("block_form", diff < 1e-12, format!("max |B̂ − W⁻¹ diag(W)| = {diff:e}"));
    }
    let tk = e.trace_power(k as i64).norm();
    let gauss = match d % 4 {
        1 | 3 => 1.0,
        2 => 0.0,
        _ => 2f64.powf(k as f64 / 2.0),
    };
    man.check(
        "trace_k",
        (tk - gauss).abs() < 1e-9,
        format!("|Tr B̂^k| = {tk}, expected {gauss}"),
    );
    let t2k = e.trace_power(2 * k as i64);
    let ok2k = (t2k.re - 1.0).abs() < 1e-9 || (t2k.re - 2f64.powi(k as i32)).abs() < 1e-9;
    man.check("trace_2k", ok2k && t2k.im.abs() < 1e-9, format!("Tr B̂^(2k) = {t2k}"));
    let (lo, hi) = window(&e, t_range);
    if e.n() <= 4096 {
        let mut bad = Vec::new();
        let mut mismatched = Vec::new();
        for t in lo..=hi {
            let pc = e.nonzero_pattern(t, 1e-9, false);
            let eta = crate::classical::eta(t, k) as i32;
            let want_mod = (d as f64).powf(-eta as f64 / 2.0);
            let total_ok = pc.total_count == e.n() * (d as usize).pow(eta as u32);
            let mod_ok = (pc.min_modulus - want_mod).abs() < 1e-11 && (pc.max_modulus - want_mod).abs() < 1e-11;
            if !(total_ok && mod_ok) {
                bad.push(t);
            }
            if !e.pattern_matches_classical(t, cfg.reflection).matches {
                mismatched.push(t);
            }
        }
        man.check(
            "pattern_laws",
            bad.is_empty(),
            format!("t ∈ [{lo}, {hi}], failures at {bad:?}"),
        );
        man.check(
            "classical_pattern",
            mismatched.is_empty(),
            format!(
                "reflection {}, t ∈ [{lo}, {hi}], mismatches at {mismatched:?}",
                cfg.reflection.name()
            ),
        );
    }
    man.finish(start, &cfg.out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct TraceTableRow {
    t: i64,
    re: f64,
    im: f64,
    abs: f64,
    bound: f64,
    gcd: u32,
    eta: u32,
    obs_re: f64,
    obs_im: f64,
    obs_bound: f64,
}

/// Per-t table of `Tr B̂^t` and `Tr(Op(a) B̂^t)` with their bounds.
pub fn cmd_traces(cfg: &RunConfig, t_range: Option<(i64, i64)>) -> Result<ResultManifest> {
    let start = Instant::now();
    let e = cfg.engine()?;
    let obs = cfg.observable()?;
    let qobs = e.quantize(&obs);
    let mut man = ResultManifest::new("traces", cfg);
    let (lo, hi) = window(&e, t_range);
    let (d, k, ell) = (e.d() as f64, e.k(), e.ell());
    let r = ell.min(k - ell).min(1);
    let q = e.period() as i64;
    let (sup, lip) = (obs.sup_bound(), obs.lipschitz_bound());
    let rows: Vec<TraceTableRow> = (lo..=hi)
        .map(|t| {
            let tr = e.trace_row(t);
            let to = e.trace_obs(&qobs, t);
            let obs_bound = if t.rem_euclid(q) == 0 {
                e.n() as f64 * obs.mean().abs() + 1e-9
            } else {
                sup * d.powi(2 * r as i32) * e.g_single(t)
                    + lip * std::f64::consts::SQRT_2 * d.powf(k as f64 / 2.0 - r as f64)
            };
            TraceTableRow {
                t,
                re: tr.re,
                im: tr.im,
                abs: tr.re.hypot(tr.im),
                bound: tr.bound,
                gcd: tr.gcd,
                eta: tr.eta,
                obs_re: to.re,
                obs_im: to.im,
                obs_bound,
            }
        })
        .collect();
    let bad: Vec<i64> = rows
        .iter()
        .filter(|r| r.abs > r.bound + 1e-9 || r.obs_re.hypot(r.obs_im) > r.obs_bound + 1e-9)
        .map(|r| r.t)
        .collect();
    man.check("trace_bounds", bad.is_empty(), format!("violations at {bad:?}"));
    let name = match cfg.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(writer(&cfg.out, "traces.csv")?);
            for r in &rows {
                w.serialize(r)?;
            }
            w.flush()?;
            "traces.csv".to_string()
        }
        Format::Json => write_json(&cfg.out, "traces.json", &rows)?,
    };
    man.outputs.push(name);
    man.finish(start, &cfg.out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassicalReport {
    pub d: u32,
    pub k: u32,
    pub q: u32,
    pub reflection: Reflection,
    pub variance: f64,
    /// `V(a)` with the other reflection, for comparison.
    pub variance_other: f64,
    pub t_star: u32,
    pub t_max: u32,
    /// `Ṽ(a,α,β)` for `α, β ∈ [0,q)`, reflected term signed by `(−1)^{α−β}`.
    pub tilde_variance: Vec<Vec<f64>>,
    /// `Ṽ` with the reflected term unsigned.
    pub tilde_variance_unsigned: Vec<Vec<f64>>,
    pub f_a: Vec<Vec<Option<f64>>>,
    pub fractal_average: Option<f64>,
}

pub fn classical_report(obs: &Observable, d: u32, k: u32, reflection: Reflection) -> Result<ClassicalReport> {
    if d < 2 || k < 1 {
        return Err(Error::Config(format!("need D ≥ 2 and k ≥ 1, got D = {d}, k = {k}")));
    }
    let s = correlation_series(obs, d, reflection);
    let other = match reflection {
        Reflection::Walsh => Reflection::Torus,
        Reflection::Torus => Reflection::Walsh,
    };
    let q = crate::classical::period(d, k);
    let v = s.variance();
    let tv: Vec<Vec<f64>> = (0..q)
        .map(|a| (0..q).map(|b| s.tilde_variance(q, a, b)).collect())
        .collect();
    let tvu: Vec<Vec<f64>> = (0..q)
        .map(|a| (0..q).map(|b| s.tilde_variance_unsigned(q, a, b)).collect())
        .collect();
    let f_a = tv
        .iter()
        .map(|row| {
            row.iter()
                .map(|&x| (v > 0.0 && x >= 0.0).then(|| (x / v).sqrt()))
                .collect()
        })
        .collect();
    let fractal = if d == 4 {
        Some(fractal_average(&obs.centered(), 1e-12)?.value)
    } else {
        None
    };
    Ok(ClassicalReport {
        d,
        k,
        q,
        reflection,
        variance: v,
        variance_other: correlation_series(obs, d, other).variance(),
        t_star: s.t_star,
        t_max: s.t_max,
        tilde_variance: tv,
        tilde_variance_unsigned: tvu,
        f_a,
        fractal_average: fractal,
    })
}

pub fn cmd_classical(cfg: &RunConfig) -> Result<ResultManifest> {
    let start = Instant::now();
    let obs = cfg.observable()?;
    let mut man = ResultManifest::new("classical", cfg);
    let rep = classical_report(&obs, cfg.d, cfg.k, cfg.reflection)?;
    man.constants.insert("V".into(), rep.variance);
    man.constants.insert("V_other_reflection".into(), rep.variance_other);
    if let Some(f) = rep.fractal_average {
        man.constants.insert("fractal_average".into(), f);
    }
    let series = correlation_series(&obs, cfg.d, cfg.reflection);
    series.write_csv(writer(&cfg.out, "correlations.csv")?)?;
    man.outputs.push("correlations.csv".into());
    man.outputs.push(write_json(&cfg.out, "classical.json", &rep)?);
    man.check(
        "variance_nonnegative",
        rep.variance >= -1e-12,
        format!("V = {}", rep.variance),
    );
    man.finish(start, &cfg.out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct FluctSummary {
    n: usize,
    quantum_variance: f64,
    variance_target: f64,
    center: f64,
    summary: stats::MomentSummary,
    parity: Option<stats::ParitySplit>,
}

/// `--samples` Haar vectors per eigenspace: fluctuation CSV, summary and histogram.
pub fn cmd_fluct(cfg: &RunConfig) -> Result<ResultManifest> {
    let start = Instant::now();
    let e = cfg.engine()?;
    let obs = cfg.observable()?;
    let qobs = e.quantize(&obs);
    let mut man = ResultManifest::new("fluct", cfg);
    let v = correlation_series(&obs, e.d(), cfg.reflection).variance();
    let center = stats::d4_center(&obs, e.d())?;
    man.constants.insert("V".into(), v);
    if e.d() == 4 {
        man.constants.insert("fractal_average".into(), center);
    }
    let plan: Vec<(u32, u64)> = (0..e.period()).map(|a| (a, cfg.samples)).collect();
    let recs = stats::sample_fluctuations(&e, &qobs, &plan, cfg.seed, center)?;
    let fs: Vec<f64> = recs.iter().map(|r| r.f).collect();
    let target = if e.d() == 4 {
        Target::Mixture { center, var: v }
    } else {
        Target::Gaussian { mean: 0.0, var: v }
    };
    let qv = stats::quantum_variance(&recs);
    let variance_target = v + center * center;
    man.constants.insert("quantum_variance".into(), qv);
    man.constants.insert("variance_target".into(), variance_target);
    let bound = 2.0 * (e.n() as f64).sqrt() * obs.sup_bound();
    man.check(
        "f_bounded",
        fs.iter().all(|f| f.abs() <= bound),
        format!("|F| ≤ 2√N‖a‖∞ = {bound}"),
    );
    let name = match cfg.format {
        Format::Csv => {
            stats::write_fluctuations_csv(writer(&cfg.out, "fluctuations.csv")?, &e, &recs)?;
            "fluctuations.csv".to_string()
        }
        Format::Json => write_json(&cfg.out, "fluctuations.json", &recs)?,
    };
    man.outputs.push(name);
    if fs.len() >= 100 {
        let summary = stats::empirical_test(&fs, target)?;
        let parity = (e.d() == 4).then(|| stats::parity_split(&recs));
        let s = FluctSummary {
            n: fs.len(),
            quantum_variance: qv,
            variance_target,
            center,
            summary,
            parity,
        };
        man.outputs.push(write_json(&cfg.out, "fluct_summary.json", &s)?);
    }
    man.outputs.push(write_json(
        &cfg.out,
        "fluct_histogram.json",
        &stats::histogram(&fs, 40, Some(target)),
    )?);
    man.finish(start, &cfg.out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct OffDiagGroup {
    alpha: u32,
    beta: u32,
    tilde_variance: f64,
    summary: Option<stats::OffDiagSummary>,
}

/// `--samples` pairs inside each eigenspace and between `α` and `α+1`.
pub fn cmd_offdiag(cfg: &RunConfig) -> Result<ResultManifest> {
    let start = Instant::now();
    let e = cfg.engine()?;
    let obs = cfg.observable()?;
    let a0 = obs.centered();
    let qobs = e.quantize(&a0);
    let mut man = ResultManifest::new("offdiag", cfg);
    let series = correlation_series(&obs, e.d(), cfg.reflection);
    man.constants.insert("V".into(), series.variance());
    let q = e.period();
    let mut all = Vec::new();
    let mut groups = Vec::new();
    for alpha in 0..q {
        for beta in [alpha, (alpha + 1) % q] {
            if beta == alpha && e.eigenspace_dim(alpha)? < 2 {
                continue;
            }
            let tv = series.tilde_variance(q, alpha, beta);
            let recs = stats::offdiag_sample(&e, &qobs, alpha, beta, cfg.samples, cfg.seed, tv)?;
            let zs: Vec<_> = recs.iter().filter_map(|r| r.scaled).collect();
            let summary = (zs.len() > 1).then(|| stats::OffDiagSummary::from_values(&zs));
            groups.push(OffDiagGroup {
                alpha,
                beta,
                tilde_variance: tv,
                summary,
            });
            all.extend(recs);
        }
    }
    let name = match cfg.format {
        Format::Csv => {
            stats::write_offdiag_csv(writer(&cfg.out, "offdiag.csv")?, &all)?;
            "offdiag.csv".to_string()
        }
        Format::Json => write_json(&cfg.out, "offdiag.json", &all)?,
    };
    man.outputs.push(name);
    man.outputs.push(write_json(&cfg.out, "offdiag_summary.json", &groups)?);
    let re: Vec<f64> = all.iter().filter_map(|r| r.scaled.map(|z| z.re)).collect();
    let half = Target::Gaussian { mean: 0.0, var: 0.5 };
    man.outputs.push(write_json(
        &cfg.out,
        "offdiag_histogram.json",
        &stats::histogram(&re, 40, Some(half)),
    )?);
    man.finish(start, &cfg.out)
}

/// `--samples` orthonormal vectors per eigenspace, max matrix-element deviation against `N^{−1/2+δ}`.
pub fn cmd_que(cfg: &RunConfig, delta: f64, cross_pairs: u64) -> Result<ResultManifest> {
    if !(0.0..0.5).contains(&delta) || delta == 0.0 {
        return Err(Error::Config(format!("δ must lie in (0, 1/2), got {delta}")));
    }
    let start = Instant::now();
    let e = cfg.engine()?;
    let obs = cfg.observable()?;
    let qobs = e.quantize(&obs);
    let mut man = ResultManifest::new("que", cfg);
    let mut draws = Vec::new();
    for alpha in 0..e.period() {
        let n = (cfg.samples as usize).min(e.eigenspace_dim(alpha)?);
        if n > 0 {
            draws.push(EigenDraw::sample(&e, alpha, n, cfg.seed, 0)?.vectors);
        }
    }
    let rep = stats::que_max_check(&e, &qobs, &draws, delta, cross_pairs, cfg.seed);
    man.constants.insert("bound".into(), rep.bound);
    man.constants.insert("margin".into(), rep.margin);
    man.check(
        "que_max",
        rep.pass,
        format!(
            "max {} vs N^(-1/2+δ) = {}",
            rep.max_diag.max(rep.max_offdiag),
            rep.bound
        ),
    );
    man.outputs.push(write_json(&cfg.out, "que.json", &rep)?);
    man.finish(start, &cfg.out)
}

#[derive(Debug, Parser)]
#[command(name = "wbl", version, about = "Walsh-quantized baker map experiments")]
pub struct Cli {
    #[command(flatten)]
    pub run: RunConfig,
    #[command(subcommand)]
    pub cmd: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Engine invariants: unitarity, period, traces, patterns.
    OperatorCheck {
        #[arg(long, num_args = 2, allow_negative_numbers = true, value_names = ["LO", "HI"])]
        t_range: Option<Vec<i64>>,
    },
    /// Trace table with bounds.
    Traces {
        #[arg(long, num_args = 2, allow_negative_numbers = true, value_names = ["LO", "HI"])]
        t_range: Option<Vec<i64>>,
    },
    /// Classical constants: V(a), Ṽ, f_a, fractal average.
    Classical,
    /// Diagonal fluctuations of Haar eigenvectors.
    Fluct,
    /// Off-diagonal entries between Haar eigenvectors.
    Offdiag,
    /// Maximal matrix-element deviation.
    Que {
        #[arg(long, default_value_t = 0.25)]
        delta: f64,
        #[arg(long, default_value_t = 20000)]
        cross_pairs: u64,
    },
}

fn range(v: &Option<Vec<i64>>) -> Option<(i64, i64)> {
    v.as_ref().map(|v| (v[0], v[1]))
}

/// Runs a parsed command line; returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let res = match &cli.cmd {
        Command::OperatorCheck { t_range } => cmd_operator_check(&cli.run, range(t_range)),
        Command::Traces { t_range } => cmd_traces(&cli.run, range(t_range)),
        Command::Classical => cmd_classical(&cli.run),
        Command::Fluct => cmd_fluct(&cli.run),
        Command::Offdiag => cmd_offdiag(&cli.run),
        Command::Que { delta, cross_pairs } => cmd_que(&cli.run, *delta, *cross_pairs),
    };
    match res {
        Ok(man) => {
            for c in &man.checks {
                println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            for (k, v) in &man.constants {
                println!("{k} = {v}");
            }
            if man.passed() {
                0
            } else {
                1
            }
        }
        Err(e @ (Error::Config(_) | Error::Observable(_) | Error::SizeGuard(_))) => {
            eprintln!("usage error: {e}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
