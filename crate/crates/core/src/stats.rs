//! Fluctuation statistics over Haar-random eigenvectors: diagonal matrix
//! elements, their moments and limits, off-diagonal entries, and max bounds.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::engine::{Engine, QuantizedObservable, QuditState};
use crate::observables::{fractal_average, Observable};
use crate::{rng, Error, Result, C64};

const REAL_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluctuationRecord {
    pub alpha: u32,
    pub draw: u64,
    /// `√N(⟨φ|Op(a)|φ⟩ − ∫a)`.
    pub f: f64,
    /// `F − (−1)^α⟨a₀⟩` when `D = 4`, else `F`.
    pub f_tilde: f64,
    pub seed: u64,
}

/// `√N(⟨v|Op(a)|v⟩ − mean)`; fails if the matrix element is not real.
pub fn fluctuation(e: &Engine, v: &QuditState, qobs: &QuantizedObservable, mean: f64) -> Result<f64> {
    let z = e.matrix_element(qobs, v, v);
    if z.im.abs() > REAL_TOL * (1.0 + z.re.abs()) {
        return Err(Error::Numerical(format!("diagonal matrix element {z} is not real")));
    }
    Ok((e.n() as f64).sqrt() * (z.re - mean))
}

/// The D = 4 fluctuation center `⟨a₀⟩` from the fractal average, else 0.
pub fn d4_center(obs: &Observable, d: u32) -> Result<f64> {
    if d == 4 {
        Ok(fractal_average(&obs.centered(), 1e-12)?.value)
    } else {
        Ok(0.0)
    }
}

/// Draws `n` Haar vectors in each listed eigenspace (stream `(seed, α, draw)`)
/// and records their fluctuations, in `(α, draw)` order.
pub fn sample_fluctuations(
    e: &Engine,
    qobs: &QuantizedObservable,
    plan: &[(u32, u64)],
    seed: u64,
    center: f64,
) -> Result<Vec<FluctuationRecord>> {
    let mean = qobs.source.mean();
    let tasks: Vec<(u32, u64)> = plan.iter().flat_map(|&(a, n)| (0..n).map(move |j| (a, j))).collect();
    tasks
        .par_iter()
        .map(|&(alpha, draw)| {
            let mut r = rng::stream(seed, "fluct", alpha as u64, draw);
            let v = e.sample_haar_vector(alpha, &mut r)?;
            let f = fluctuation(e, &v, qobs, mean)?;
            let sign = if alpha % 2 == 0 { 1.0 } else { -1.0 };
            let f_tilde = if e.d() == 4 { f - sign * center } else { f };
            Ok(FluctuationRecord {
                alpha,
                draw,
                f,
                f_tilde,
                seed,
            })
        })
        .collect()
}

/// `n` draws spread over all eigenspaces, round-robin by `α = j mod q`.
pub fn spread_plan(q: u32, n: u64) -> Vec<(u32, u64)> {
    (0..q)
        .map(|a| (a, n / q as u64 + u64::from((a as u64) < n % q as u64)))
        .filter(|p| p.1 > 0)
        .collect()
}

/// `(1/n) Σ F²`.
pub fn quantum_variance(records: &[FluctuationRecord]) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    records.iter().map(|r| r.f * r.f).sum::<f64>() / records.len() as f64
}

/// Limit law for an empirical comparison.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Target {
    Gaussian {
        mean: f64,
        var: f64,
    },
    /// `½ N(c, σ²) + ½ N(−c, σ²)`.
    Mixture {
        center: f64,
        var: f64,
    },
}

impl Target {
    /// Raw moments `E X^p`, `p = 0..=6`.
    pub fn moments(&self) -> [f64; 7] {
        fn gauss(mu: f64, var: f64) -> [f64; 7] {
            let mut m = [0.0; 7];
            m[0] = 1.0;
            m[1] = mu;
            for p in 2..7 {
                m[p] = mu * m[p - 1] + (p - 1) as f64 * var * m[p - 2];
            }
            m
        }
        match *self {
            Target::Gaussian { mean, var } => gauss(mean, var),
            Target::Mixture { center, var } => {
                let (a, b) = (gauss(center, var), gauss(-center, var));
                std::array::from_fn(|p| 0.5 * (a[p] + b[p]))
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let n = |mu: f64, var: f64| {
            if var <= 0.0 {
                return if x >= mu { 1.0 } else { 0.0 };
            }
            Normal::new(mu, var.sqrt()).map(|d| d.cdf(x)).unwrap_or(f64::NAN)
        };
        match *self {
            Target::Gaussian { mean, var } => n(mean, var),
            Target::Mixture { center, var } => 0.5 * (n(center, var) + n(-center, var)),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let g = |mu: f64, var: f64| (-(x - mu).powi(2) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt();
        match *self {
            Target::Gaussian { mean, var } => g(mean, var),
            Target::Mixture { center, var } => 0.5 * (g(center, var) + g(-center, var)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub n: usize,
    /// Sample raw moments `p = 0..=6`.
    pub moments: Vec<f64>,
    /// Standard errors `sd(x^p)/√n`.
    pub std_errors: Vec<f64>,
    pub target: Target,
    pub target_moments: Vec<f64>,
    /// `|moment − target| / se` (0 where both agree exactly).
    pub z_scores: Vec<f64>,
    /// Two-sided Kolmogorov-Smirnov statistic against the target CDF.
    pub ks: f64,
    /// `KS·√n`.
    pub ks_scaled: f64,
}

/// Sample moment and its standard error.
pub fn moment_with_se(xs: &[f64], p: i32) -> (f64, f64) {
    let n = xs.len() as f64;
    let vals: Vec<f64> = xs.iter().map(|x| x.powi(p)).collect();
    let m = vals.iter().sum::<f64>() / n;
    let var = if n > 1.0 {
        vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (m, (var / n).sqrt())
}

pub fn ks_statistic(xs: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = cdf(x);
            (c - i as f64 / n).abs().max(((i + 1) as f64 / n - c).abs())
        })
        .fold(0.0, f64::max)
}

/// Moments `p ≤ 6` and KS distance of `xs` against `target`. Needs 100 samples.
pub fn empirical_test(xs: &[f64], target: Target) -> Result<MomentSummary> {
    if xs.len() < 100 {
        return Err(Error::Sampling(format!(
            "empirical test needs at least 100 samples, got {}",
            xs.len()
        )));
    }
    let tm = target.moments();
    let (mut moments, mut std_errors, mut z_scores) = (vec![], vec![], vec![]);
    for p in 0..7 {
        let (m, se) = moment_with_se(xs, p);
        let diff = (m - tm[p as usize]).abs();
        moments.push(m);
        std_errors.push(se);
        z_scores.push(if diff == 0.0 { 0.0 } else { diff / se });
    }
    let ks = ks_statistic(xs, |x| target.cdf(x));
    Ok(MomentSummary {
        n: xs.len(),
        moments,
        std_errors,
        target,
        target_moments: tm.to_vec(),
        z_scores,
        ks,
        ks_scaled: ks * (xs.len() as f64).sqrt(),
    })
}

/// Equal-width histogram plus the target density at bin centers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub centers: Vec<f64>,
    pub target_density: Vec<f64>,
}

pub fn histogram(xs: &[f64], bins: usize, target: Option<Target>) -> Histogram {
    let bins = bins.max(1);
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if xs.is_empty() {
        (0.0, 1.0)
    } else if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, lo + 0.5)
    };
    let w = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|i| lo + i as f64 * w).collect();
    let mut counts = vec![0u64; bins];
    for &x in xs {
        counts[(((x - lo) / w) as usize).min(bins - 1)] += 1;
    }
    let centers: Vec<f64> = (0..bins).map(|i| lo + (i as f64 + 0.5) * w).collect();
    let target_density = target.map_or_else(Vec::new, |t| centers.iter().map(|&c| t.pdf(c)).collect());
    Histogram {
        edges,
        counts,
        centers,
        target_density,
    }
}

/// Means of `F` over even and odd eigenspaces with standard errors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParitySplit {
    pub even_mean: f64,
    pub even_se: f64,
    pub even_n: usize,
    pub odd_mean: f64,
    pub odd_se: f64,
    pub odd_n: usize,
}

impl ParitySplit {
    /// Pooled standard error of `even_mean − odd_mean`.
    pub fn diff_se(&self) -> f64 {
        self.even_se.hypot(self.odd_se)
    }
}

pub fn parity_split(records: &[FluctuationRecord]) -> ParitySplit {
    let pick = |par: u32| -> Vec<f64> { records.iter().filter(|r| r.alpha % 2 == par).map(|r| r.f).collect() };
    let (ev, od) = (pick(0), pick(1));
    let (em, es) = if ev.is_empty() {
        (0.0, 0.0)
    } else {
        moment_with_se(&ev, 1)
    };
    let (om, os) = if od.is_empty() {
        (0.0, 0.0)
    } else {
        moment_with_se(&od, 1)
    };
    ParitySplit {
        even_mean: em,
        even_se: es,
        even_n: ev.len(),
        odd_mean: om,
        odd_se: os,
        odd_n: od.len(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OffDiagRecord {
    pub alpha: u32,
    pub beta: u32,
    pub pair: u64,
    /// `√N⟨φ_i|Op(a₀)|φ_j⟩`.
    pub value: C64,
    /// `value / √Ṽ(a,α,β)` (that is, divided by `√V(a)·f_a(α,β)`); absent when `f_a = 0`.
    pub scaled: Option<C64>,
}

/// `n_pairs` off-diagonal entries between `E_α` and `E_β`. For `α = β` each
/// pair is the two vectors of one orthonormal draw; otherwise the two
/// vectors are independent. `tilde_v` is `Ṽ(a,α,β)` for the scaling.
pub fn offdiag_sample(
    e: &Engine,
    qobs_centered: &QuantizedObservable,
    alpha: u32,
    beta: u32,
    n_pairs: u64,
    seed: u64,
    tilde_v: f64,
) -> Result<Vec<OffDiagRecord>> {
    let sn = (e.n() as f64).sqrt();
    let scale = tilde_v.sqrt();
    let key = (alpha as u64) << 32 | beta as u64;
    (0..n_pairs)
        .into_par_iter()
        .map(|pair| {
            let mut r = rng::stream(seed, "offdiag", key, pair);
            let (u, v) = if alpha == beta {
                let mut set = e.sample_orthonormal_set(alpha, 2, &mut r)?;
                let v = set.pop().unwrap();
                (set.pop().unwrap(), v)
            } else {
                (
                    e.sample_haar_vector(alpha, &mut r)?,
                    e.sample_haar_vector(beta, &mut r)?,
                )
            };
            let value = e.matrix_element(qobs_centered, &u, &v) * sn;
            let scaled = (scale > 1e-12).then(|| value / scale);
            Ok(OffDiagRecord {
                alpha,
                beta,
                pair,
                value,
                scaled,
            })
        })
        .collect()
}

/// Complex-Gaussian signature of scaled off-diagonal entries.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OffDiagSummary {
    pub n: usize,
    pub mean: C64,
    /// `E z²`.
    pub mean_sq: C64,
    /// `E|z|²` and its standard error.
    pub mean_abs_sq: f64,
    pub se_abs_sq: f64,
    pub var_re: f64,
    pub var_im: f64,
}

impl OffDiagSummary {
    pub fn from_values(zs: &[C64]) -> Self {
        let n = zs.len() as f64;
        let mean = zs.iter().sum::<C64>() / n;
        let mean_sq = zs.iter().map(|z| z * z).sum::<C64>() / n;
        let abs: Vec<f64> = zs.iter().map(|z| z.norm_sqr()).collect();
        let (mean_abs_sq, se_abs_sq) = moment_with_se(&abs, 1);
        let re: Vec<f64> = zs.iter().map(|z| z.re).collect();
        let im: Vec<f64> = zs.iter().map(|z| z.im).collect();
        let var = |x: &[f64]| {
            let m = x.iter().sum::<f64>() / n;
            x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)
        };
        Self {
            n: zs.len(),
            mean,
            mean_sq,
            mean_abs_sq,
            se_abs_sq,
            var_re: var(&re),
            var_im: var(&im),
        }
    }

    /// `|E z| < 3/√n`, `|E z²| < 3/√n`, `|E|z|² − 1| < 3 se`.
    pub fn signature_holds(&self) -> bool {
        let b = 3.0 / (self.n as f64).sqrt();
        self.mean.norm() < b && self.mean_sq.norm() < b && (self.mean_abs_sq - 1.0).abs() < 3.0 * self.se_abs_sq
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueReport {
    pub vectors: usize,
    pub pairs_checked: u64,
    pub max_diag: f64,
    pub max_offdiag: f64,
    pub bound: f64,
    /// `bound − max(max_diag, max_offdiag)`.
    pub margin: f64,
    pub pass: bool,
}

/// Max of `|⟨φ_i|Op(a)|φ_j⟩ − δ_ij ∫a|` over all pairs inside each draw plus
/// `cross_pairs` random pairs across draws, against `N^{−1/2+δ}`.
pub fn que_max_check(
    e: &Engine,
    qobs: &QuantizedObservable,
    draws: &[Vec<QuditState>],
    delta: f64,
    cross_pairs: u64,
    seed: u64,
) -> QueReport {
    let mean = qobs.source.mean();
    let flat: Vec<(usize, &QuditState)> = draws
        .iter()
        .enumerate()
        .flat_map(|(g, d)| d.iter().map(move |v| (g, v)))
        .collect();
    let images: Vec<QuditState> = flat.par_iter().map(|(_, v)| e.apply_quantized(qobs, v)).collect();
    let entry = |i: usize, j: usize| flat[i].1.inner(&images[j]);
    let max_diag = (0..flat.len())
        .into_par_iter()
        .map(|i| (entry(i, i) - mean).norm())
        .reduce(|| 0.0, f64::max);
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut start = 0;
    for d in draws {
        for i in start..start + d.len() {
            for j in i + 1..start + d.len() {
                pairs.push((i, j));
            }
        }
        start += d.len();
    }
    let within = pairs.len() as u64;
    let mut r = rng::stream(seed, "que-cross", 0, 0);
    let mut cross = 0;
    while cross < cross_pairs && flat.len() > 1 && draws.len() > 1 {
        let i = r.gen_range(0..flat.len());
        let j = r.gen_range(0..flat.len());
        if flat[i].0 != flat[j].0 {
            pairs.push((i, j));
            cross += 1;
        }
    }
    let max_offdiag = pairs
        .par_iter()
        .map(|&(i, j)| entry(i, j).norm())
        .reduce(|| 0.0, f64::max);
    let bound = (e.n() as f64).powf(-0.5 + delta);
    let worst = max_diag.max(max_offdiag);
    QueReport {
        vectors: flat.len(),
        pairs_checked: within + cross,
        max_diag,
        max_offdiag,
        bound,
        margin: bound - worst,
        pass: worst <= bound,
    }
}

/// Trace-side averaged identities for a centered observable.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AverageIdentities {
    /// `(1/√N) Tr Op(a₀)`; exactly 0 in exact arithmetic.
    pub trace_mean: f64,
    /// `(1/√N) Tr(Op(a₀) B̂^{−2k})`.
    pub reflected_trace: f64,
    /// `⟨a₀⟩` for `D = 4`, else 0.
    pub reflected_target: f64,
    /// `2^k ‖a₀‖_∞ / √N` for `D ∉ {2, 4}`; the literal trace-level bound.
    pub reflected_bound: f64,
    /// `(1/N) Σ_{t=−q/2}^{q/2−1} Tr(Op B̂^t Op B̂^{−t})`.
    pub variance_sum: f64,
    /// `V(a)` under the chosen reflection.
    pub variance_target: f64,
    /// `q·2√2‖a₀‖_∞‖a₀‖_Lip D^{−min(ℓ,k−ℓ)} + 2 Σ_{|t|≥q/2}` correlation tail bound.
    pub variance_bound: f64,
}

pub fn average_identities_check(
    e: &Engine,
    qobs_centered: &QuantizedObservable,
    reflection: crate::classical::Reflection,
) -> Result<AverageIdentities> {
    use crate::classical::correlation_series;
    let (d, k, ell) = (e.d(), e.k(), e.ell());
    let n = e.n() as f64;
    let sn = n.sqrt();
    let a0 = &qobs_centered.source;
    let trace_mean = e.trace_obs(qobs_centered, 0).re / sn;
    let reflected_trace = e.trace_obs(qobs_centered, -2 * k as i64).re / sn;
    let reflected_target = if d == 4 { fractal_average(a0, 1e-12)?.value } else { 0.0 };
    let reflected_bound = if d == 4 || d == 2 {
        0.0
    } else {
        2f64.powi(k as i32) * a0.sup_bound() / sn
    };
    let q = e.period() as i64;
    let variance_sum: f64 = (-q / 2..q / 2)
        .map(|t| e.intsum_row(qobs_centered, t, reflection).lhs)
        .sum::<f64>()
        / n;
    let series = correlation_series(a0, d, reflection);
    let lemma = 2.0
        * std::f64::consts::SQRT_2
        * a0.sup_bound()
        * a0.lipschitz_bound()
        * (d as f64).powi(-(ell.min(k - ell) as i32));
    let tail: f64 = (q / 2..=series.t_max as i64)
        .map(|t| series.c_b(t).abs() + series.c_br(t).abs())
        .sum::<f64>()
        * 2.0;
    Ok(AverageIdentities {
        trace_mean,
        reflected_trace,
        reflected_target,
        reflected_bound,
        variance_sum,
        variance_target: series.variance(),
        variance_bound: q as f64 * lemma + tail,
    })
}

/// Fluctuations CSV: `D,k,ell,alpha,draw,F,F_tilde,seed`.
pub fn write_fluctuations_csv<W: std::io::Write>(w: W, e: &Engine, records: &[FluctuationRecord]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["D", "k", "ell", "alpha", "draw", "F", "F_tilde", "seed"])?;
    for r in records {
        wr.write_record([
            e.d().to_string(),
            e.k().to_string(),
            e.ell().to_string(),
            r.alpha.to_string(),
            r.draw.to_string(),
            format!("{:.17e}", r.f),
            format!("{:.17e}", r.f_tilde),
            r.seed.to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

/// Off-diagonal CSV: `alpha,beta,re,im,re_scaled,im_scaled` (scaled columns empty when refused).
pub fn write_offdiag_csv<W: std::io::Write>(w: W, records: &[OffDiagRecord]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["alpha", "beta", "re", "im", "re_scaled", "im_scaled"])?;
    for r in records {
        let (rs, is) = r.scaled.map_or((String::new(), String::new()), |z| {
            (format!("{:.17e}", z.re), format!("{:.17e}", z.im))
        });
        wr.write_record([
            r.alpha.to_string(),
            r.beta.to_string(),
            format!("{:.17e}", r.value.re),
            format!("{:.17e}", r.value.im),
            rs,
            is,
        ])?;
    }
    wr.flush()?;
    Ok(())
}

/// Shuffled `(α, β)` pairs with `α ≠ β`, deterministic in `seed`.
pub fn distinct_pairs(q: u32, n: usize, seed: u64) -> Vec<(u32, u32)> {
    let mut all: Vec<(u32, u32)> = (0..q)
        .flat_map(|a| (0..q).filter(move |&b| b != a).map(move |b| (a, b)))
        .collect();
    all.shuffle(&mut rng::stream(seed, "distinct-pairs", 0, 0));
    all.truncate(n);
    all
}
