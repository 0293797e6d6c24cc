//! Spectral projectors of `B̂_k` from its exact period, eigenspace dimensions
//! and Haar-random vectors within eigenspaces.
//!
//! With `q = q(k)` the period, `P_α = (1/q) Σ_{t=−q/2}^{q/2−1} e^{−2πiαt/q} B̂^t`
//! satisfies `B̂ P_α = e^{2πiα/q} P_α`. Nothing here diagonalises anything.

use std::f64::consts::PI;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{io, Engine, EngineConfig, QuantizedObservable, QuditState, PAIR_GUARD};
use crate::{rng, Error, Result, C64};

const MAX_REJECTIONS: usize = 8;
const REJECT_RATIO: f64 = 1e-6;
const REORTH_TRIGGER: f64 = 1e-8;

/// `e^{−2πi α t / q}`.
fn phase(alpha: u32, t: i64, q: u32) -> C64 {
    let r = (alpha as i64 * t).rem_euclid(q as i64) as f64;
    C64::from_polar(1.0, -2.0 * PI * r / q as f64)
}

fn check_alpha(e: &Engine, alpha: u32) -> Result<()> {
    if alpha >= e.period() {
        return Err(Error::Config(format!("α = {alpha} outside [0, {})", e.period())));
    }
    Ok(())
}

impl Engine {
    /// `P_α v`, stepping `B̂` once per term.
    pub fn project(&self, alpha: u32, v: &QuditState) -> QuditState {
        let q = self.period();
        let half = q as i64 / 2;
        let mut w = self.apply_baker(v, -half).amps;
        let mut scratch = vec![C64::new(0.0, 0.0); w.len()];
        let mut acc = vec![C64::new(0.0, 0.0); w.len()];
        for t in -half..q as i64 - half {
            let ph = phase(alpha, t, q) / q as f64;
            acc.iter_mut().zip(&w).for_each(|(a, x)| *a += ph * x);
            if t + 1 < q as i64 - half {
                self.step_forward(&w, &mut scratch);
                std::mem::swap(&mut w, &mut scratch);
            }
        }
        QuditState {
            d: v.d,
            k: v.k,
            amps: acc,
        }
    }

    /// `P_α v` for every `α`, sharing the `q` powers of `B̂`.
    pub fn project_all(&self, v: &QuditState) -> Vec<QuditState> {
        let q = self.period();
        let half = q as i64 / 2;
        let mut w = self.apply_baker(v, -half).amps;
        let mut scratch = vec![C64::new(0.0, 0.0); w.len()];
        let mut out = vec![vec![C64::new(0.0, 0.0); w.len()]; q as usize];
        for t in -half..q as i64 - half {
            out.par_iter_mut().enumerate().for_each(|(alpha, acc)| {
                let ph = phase(alpha as u32, t, q) / q as f64;
                acc.iter_mut().zip(&w).for_each(|(a, x)| *a += ph * x);
            });
            self.step_forward(&w, &mut scratch);
            std::mem::swap(&mut w, &mut scratch);
        }
        out.into_iter()
            .map(|amps| QuditState { d: v.d, k: v.k, amps })
            .collect()
    }

    /// `e^{2πiα/q}`.
    pub fn eigenvalue(&self, alpha: u32) -> C64 {
        phase(alpha, -1, self.period())
    }

    /// `d_α = Re (1/q) Σ_t e^{−2πiαt/q} Tr B̂^t`, required to be integral within `1e-6`.
    pub fn eigenspace_dim(&self, alpha: u32) -> Result<usize> {
        check_alpha(self, alpha)?;
        let q = self.period();
        let half = q as i64 / 2;
        let s: C64 = (-half..q as i64 - half)
            .map(|t| phase(alpha, t, q) * self.trace_power(t))
            .sum::<C64>()
            / q as f64;
        let r = s.re.round();
        if (s.re - r).abs() > 1e-6 || s.im.abs() > 1e-6 || r < 0.0 {
            return Err(Error::Numerical(format!(
                "d_{alpha} = {s} is not a nonnegative integer"
            )));
        }
        Ok(r as usize)
    }

    pub fn eigenspace_dims(&self) -> Result<Vec<usize>> {
        (0..self.period()).map(|a| self.eigenspace_dim(a)).collect()
    }

    /// Unit vector `P_α g / ‖P_α g‖` for a complex Gaussian `g`; redraws when
    /// `‖P_α g‖ < 1e-6 ‖g‖`, failing after 8 consecutive rejections.
    pub fn sample_haar_vector<R: Rng + ?Sized>(&self, alpha: u32, rng: &mut R) -> Result<QuditState> {
        check_alpha(self, alpha)?;
        for _ in 0..MAX_REJECTIONS {
            let g = QuditState::gaussian(self.config(), rng);
            let mut v = self.project(alpha, &g);
            if v.norm() >= REJECT_RATIO * g.norm() {
                v.normalize();
                return Ok(v);
            }
        }
        Err(Error::Sampling(format!(
            "eigenspace {alpha}: {MAX_REJECTIONS} consecutive rejections"
        )))
    }

    /// First `n` columns of a Haar unitary on `E_α`: project, then
    /// Gram-Schmidt against the accepted vectors.
    pub fn sample_orthonormal_set<R: Rng + ?Sized>(
        &self,
        alpha: u32,
        n: usize,
        rng: &mut R,
    ) -> Result<Vec<QuditState>> {
        let d = self.eigenspace_dim(alpha)?;
        if n > d {
            return Err(Error::Sampling(format!(
                "requested {n} vectors from E_{alpha} of dimension {d}"
            )));
        }
        let mut out: Vec<QuditState> = Vec::with_capacity(n);
        while out.len() < n {
            let mut rejections = 0;
            loop {
                let g = QuditState::gaussian(self.config(), rng);
                let mut v = self.project(alpha, &g);
                orthogonalize(&mut v, &out);
                if v.norm() >= REJECT_RATIO * g.norm() {
                    v.normalize();
                    out.push(v);
                    break;
                }
                rejections += 1;
                if rejections == MAX_REJECTIONS {
                    return Err(Error::Sampling(format!(
                        "eigenspace {alpha}: {MAX_REJECTIONS} consecutive rejections"
                    )));
                }
            }
        }
        Ok(out)
    }

    /// Explicit orthonormal basis `Λ_α` from projected probes (`N ≤ 2^14`).
    pub fn eigenspace_basis(&self, alpha: u32, seed: u64) -> Result<Vec<QuditState>> {
        if self.n() > PAIR_GUARD {
            return Err(Error::SizeGuard(format!(
                "explicit eigenspace bases need N ≤ {PAIR_GUARD}"
            )));
        }
        let d = self.eigenspace_dim(alpha)?;
        let mut rng = rng::stream(seed, "eigenspace-basis", alpha as u64, 0);
        let mut basis: Vec<QuditState> = Vec::with_capacity(d);
        let mut probes = 0;
        while basis.len() < d {
            if probes > d + 64 {
                return Err(Error::Numerical(format!("could not span E_{alpha} of dimension {d}")));
            }
            probes += 1;
            let g = QuditState::gaussian(self.config(), &mut rng);
            let mut v = self.project(alpha, &g);
            orthogonalize(&mut v, &basis);
            if v.norm() > 1e-8 * g.norm() {
                v.normalize();
                basis.push(v);
            }
        }
        Ok(basis)
    }

    /// `Tr(Op(a) P_α)`.
    pub fn projected_trace(&self, qobs: &QuantizedObservable, alpha: u32) -> f64 {
        let q = self.period();
        let half = q as i64 / 2;
        let s: C64 = (-half..q as i64 - half)
            .map(|t| phase(alpha, t, q) * self.trace_obs(qobs, t))
            .sum();
        s.re / q as f64
    }

    /// `Tr(Op(a) P_α Op(a) P_β)` from the rows of the projectors in the coherent basis.
    pub fn projected_pair_trace(&self, qobs: &QuantizedObservable, alpha: u32, beta: u32) -> Result<f64> {
        if self.n() > PAIR_GUARD {
            return Err(Error::SizeGuard(format!(
                "pair traces need N ≤ {PAIR_GUARD}, got N = {}",
                self.n()
            )));
        }
        let q = self.period();
        let n = self.n();
        let plans: Vec<_> = (0..q as i64).map(|t| self.entry_plan(t)).collect();
        let parts: Vec<C64> = (0..n)
            .into_par_iter()
            .map_init(
                || (vec![C64::new(0.0, 0.0); n], vec![C64::new(0.0, 0.0); n], Vec::new()),
                |(ra, rb, touched), e| {
                    for (t, plan) in plans.iter().enumerate() {
                        let pa = phase(alpha, t as i64, q);
                        let pb = phase(beta, t as i64, q);
                        self.for_each_in_row(plan, e, |c, v| {
                            if ra[c] == C64::new(0.0, 0.0) && rb[c] == C64::new(0.0, 0.0) {
                                touched.push(c);
                            }
                            ra[c] += pa * v;
                            rb[c] += pb * v;
                        });
                    }
                    let mut acc = C64::new(0.0, 0.0);
                    for &c in touched.iter() {
                        acc += ra[c] * rb[c].conj() * qobs.averages[c];
                        ra[c] = C64::new(0.0, 0.0);
                        rb[c] = C64::new(0.0, 0.0);
                    }
                    touched.clear();
                    acc * qobs.averages[e]
                },
            )
            .collect();
        let s: C64 = parts.into_iter().sum();
        Ok(s.re / (q as f64 * q as f64))
    }

    /// `(√N/d_α) Tr(Op(a₀) P_α)`: exact Haar mean of `F` on `E_α`.
    pub fn expected_mean(&self, qobs: &QuantizedObservable, alpha: u32) -> Result<f64> {
        let d = self.eigenspace_dim(alpha)?;
        if d == 0 {
            return Ok(0.0);
        }
        Ok((self.n() as f64).sqrt() / d as f64 * self.projected_trace(qobs, alpha))
    }

    /// `N [(Tr Op P_α)² + Tr(Op P_α Op P_α)] / (d_α(d_α+1))`: exact Haar second moment.
    pub fn expected_second_moment(&self, qobs: &QuantizedObservable, alpha: u32) -> Result<f64> {
        let d = self.eigenspace_dim(alpha)? as f64;
        if d == 0.0 {
            return Ok(0.0);
        }
        let t1 = self.projected_trace(qobs, alpha);
        let t2 = self.projected_pair_trace(qobs, alpha, alpha)?;
        Ok(self.n() as f64 * (t1 * t1 + t2) / (d * (d + 1.0)))
    }

    /// `N Tr(Op P_β Op P_α)/(d_α d_β)`: exact `E|√N⟨u|Op|v⟩|²` for independent `u ∈ E_α`, `v ∈ E_β`.
    pub fn expected_cross_second_moment(&self, qobs: &QuantizedObservable, alpha: u32, beta: u32) -> Result<f64> {
        let da = self.eigenspace_dim(alpha)? as f64;
        let db = self.eigenspace_dim(beta)? as f64;
        if da == 0.0 || db == 0.0 {
            return Ok(0.0);
        }
        Ok(self.n() as f64 * self.projected_pair_trace(qobs, alpha, beta)? / (da * db))
    }

    /// `N (d TrM² − (TrM)²)/(d(d²−1))` for `M = Λ_α†Op Λ_α`: exact `E|√N⟨u₁|Op|u₂⟩|²`
    /// for two orthonormal Haar vectors of `E_α`.
    pub fn expected_same_space_offdiag(&self, qobs: &QuantizedObservable, alpha: u32) -> Result<f64> {
        let d = self.eigenspace_dim(alpha)? as f64;
        if d < 2.0 {
            return Ok(0.0);
        }
        let t1 = self.projected_trace(qobs, alpha);
        let t2 = self.projected_pair_trace(qobs, alpha, alpha)?;
        Ok(self.n() as f64 * (d * t2 - t1 * t1) / (d * (d * d - 1.0)))
    }
}

/// Modified Gram-Schmidt with one extra pass when any overlap exceeds `1e-8`.
fn orthogonalize(v: &mut QuditState, basis: &[QuditState]) {
    let mut big = false;
    for b in basis {
        let c = b.inner(v);
        if c.norm() > REORTH_TRIGGER * v.norm().max(1e-300) {
            big = true;
        }
        v.axpy(-c, b);
    }
    if big {
        for b in basis {
            let c = b.inner(v);
            v.axpy(-c, b);
        }
    }
}

/// Haar moments of `u*Mu` for `u` uniform on the unit sphere of `C^d`,
/// from the power sums `p_j = Tr M^j`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HaarMoments {
    pub d: usize,
    pub power_sums: [f64; 4],
    /// `E[(u*Mu)^p]` for `p = 1..=4`.
    pub moments: [f64; 4],
}

impl HaarMoments {
    /// `E[(u*Mu)^p] = p! h_p(λ) / (d(d+1)⋯(d+p−1))`.
    pub fn from_power_sums(d: usize, p: [f64; 4]) -> Self {
        let [p1, p2, p3, p4] = p;
        let h = [
            p1,
            (p1 * p1 + p2) / 2.0,
            (p1.powi(3) + 3.0 * p1 * p2 + 2.0 * p3) / 6.0,
            (p1.powi(4) + 6.0 * p1 * p1 * p2 + 3.0 * p2 * p2 + 8.0 * p1 * p3 + 6.0 * p4) / 24.0,
        ];
        let df = d as f64;
        let mut moments = [0.0; 4];
        let mut fact = 1.0;
        let mut rising = 1.0;
        for j in 0..4 {
            fact *= (j + 1) as f64;
            rising *= df + j as f64;
            moments[j] = fact * h[j] / rising;
        }
        Self {
            d,
            power_sums: p,
            moments,
        }
    }

    /// Moments from an explicit orthonormal basis of the eigenspace.
    pub fn from_basis(e: &Engine, qobs: &QuantizedObservable, basis: &[QuditState]) -> Self {
        let d = basis.len();
        let images: Vec<QuditState> = basis.par_iter().map(|b| e.apply_quantized(qobs, b)).collect();
        let m: Vec<C64> = (0..d * d)
            .into_par_iter()
            .map(|ij| basis[ij / d].inner(&images[ij % d]))
            .collect();
        let m2 = matmul(&m, &m, d);
        let m3 = matmul(&m2, &m, d);
        let tr = |x: &[C64]| (0..d).map(|i| x[i * d + i].re).sum::<f64>();
        let p4: f64 = m2.iter().zip(transpose(&m2, d).iter()).map(|(a, b)| (a * b).re).sum();
        Self::from_power_sums(d, [tr(&m), tr(&m2), tr(&m3), p4])
    }

    /// `E[F^p] = N^{p/2} E[(u*Mu)^p]` for `F = √N u*Mu`.
    pub fn scaled(&self, n: usize) -> [f64; 4] {
        let s = (n as f64).sqrt();
        let mut out = self.moments;
        for (j, m) in out.iter_mut().enumerate() {
            *m *= s.powi(j as i32 + 1);
        }
        out
    }
}

fn matmul(a: &[C64], b: &[C64], d: usize) -> Vec<C64> {
    (0..d * d)
        .into_par_iter()
        .map(|ij| {
            let (i, j) = (ij / d, ij % d);
            (0..d).map(|l| a[i * d + l] * b[l * d + j]).sum()
        })
        .collect()
}

fn transpose(a: &[C64], d: usize) -> Vec<C64> {
    (0..d * d).map(|ij| a[(ij % d) * d + ij / d]).collect()
}

/// Orthonormal eigenvectors drawn from one eigenspace.
#[derive(Clone, Debug)]
pub struct EigenDraw {
    pub alpha: u32,
    pub seed: u64,
    pub draw_indices: Vec<u64>,
    pub vectors: Vec<QuditState>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DrawManifest {
    pub config: EngineConfig,
    pub alpha: u32,
    pub seed: u64,
    pub n: usize,
    pub draw_indices: Vec<u64>,
    pub files: Vec<String>,
}

impl EigenDraw {
    /// `n` orthonormal vectors of `E_α` from the stream `(seed, α, draw)`.
    pub fn sample(e: &Engine, alpha: u32, n: usize, seed: u64, draw: u64) -> Result<Self> {
        let mut r = rng::stream(seed, "eigendraw", alpha as u64, draw);
        let vectors = e.sample_orthonormal_set(alpha, n, &mut r)?;
        Ok(Self {
            alpha,
            seed,
            draw_indices: vec![draw],
            vectors,
        })
    }

    /// Largest `|⟨u_i,u_j⟩ − δ_ij|`.
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, u) in self.vectors.iter().enumerate() {
            for (j, v) in self.vectors.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((u.inner(v) - target).norm());
            }
        }
        worst
    }

    /// Largest `‖B̂v − e^{2πiα/q}v‖`.
    pub fn eigen_residual(&self, e: &Engine) -> f64 {
        let lam = e.eigenvalue(self.alpha);
        self.vectors
            .iter()
            .map(|v| {
                let mut w = e.apply_baker(v, 1);
                w.axpy(-lam, v);
                w.norm()
            })
            .fold(0.0, f64::max)
    }

    /// Writes `<stem>_<i>.bin` state dumps and `<stem>.json`.
    pub fn save(&self, cfg: &EngineConfig, dir: &Path, stem: &str) -> Result<DrawManifest> {
        std::fs::create_dir_all(dir)?;
        let mut files = Vec::new();
        for (i, v) in self.vectors.iter().enumerate() {
            let name = format!("{stem}_{i}.bin");
            let f = std::io::BufWriter::new(std::fs::File::create(dir.join(&name))?);
            io::write_state(f, cfg, v)?;
            files.push(name);
        }
        let man = DrawManifest {
            config: *cfg,
            alpha: self.alpha,
            seed: self.seed,
            n: self.vectors.len(),
            draw_indices: self.draw_indices.clone(),
            files,
        };
        std::fs::write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(&man)?)?;
        Ok(man)
    }

    pub fn load(dir: &Path, stem: &str) -> Result<(DrawManifest, Self)> {
        let man: DrawManifest = serde_json::from_str(&std::fs::read_to_string(dir.join(format!("{stem}.json")))?)?;
        let mut vectors = Vec::with_capacity(man.n);
        for f in &man.files {
            let (cfg, v) = io::read_state(std::io::BufReader::new(std::fs::File::open(dir.join(f))?))?;
            if cfg != man.config {
                return Err(Error::Format(format!("{f}: configuration differs from manifest")));
            }
            vectors.push(v);
        }
        let draw = Self {
            alpha: man.alpha,
            seed: man.seed,
            draw_indices: man.draw_indices.clone(),
            vectors,
        };
        Ok((man, draw))
    }
}
