//! Matrix-free Walsh-quantized baker operator.
//!
//! States live in `(C^D)^{⊗k}` with computational index `Σ_s x_s D^{k−s}`
//! (slot 1 most significant). One application of `B̂_k` rotates the slots left
//! and applies `F_D†` to the factor that wraps around:
//! `B̂(v₁⊗…⊗v_k) = v₂⊗…⊗v_k⊗F_D†v₁`.

mod coherent;
pub mod dense;
mod entries;
pub mod io;
mod operator;
mod quantize;
mod traces;

pub use coherent::CoherentIndex;
pub use entries::{EntryPlan, PatternCounts, PatternReport};
pub use quantize::QuantizedObservable;
pub use traces::{IntsumRow, PairSelection, Square, TraceBoundReport, TraceBoundRow, TraceRow, PAIR_GUARD};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::classical;
use crate::{Error, Result, C64};

/// Default cap on `N = D^k`.
pub const DEFAULT_MEM_CAP: usize = 1 << 22;

/// Memory cap from `WBL_MEM_CAP`, else [`DEFAULT_MEM_CAP`].
pub fn mem_cap_from_env() -> usize {
    std::env::var("WBL_MEM_CAP")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_MEM_CAP)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub d: u32,
    pub k: u32,
    pub ell: u32,
    pub n: usize,
    pub q: u32,
}

impl EngineConfig {
    /// Validates against the cap from the environment.
    pub fn new(d: u32, k: u32, ell: u32) -> Result<Self> {
        Self::with_cap(d, k, ell, mem_cap_from_env())
    }

    pub fn with_cap(d: u32, k: u32, ell: u32, cap: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::Config(format!("D must be at least 2, got {d}")));
        }
        if k < 1 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if ell > k {
            return Err(Error::Config(format!("ell = {ell} exceeds k = {k}")));
        }
        let n = (d as usize)
            .checked_pow(k)
            .filter(|&n| n <= cap)
            .ok_or_else(|| Error::Config(format!("D^k = {d}^{k} exceeds the memory cap {cap}")))?;
        Ok(Self {
            d,
            k,
            ell,
            n,
            q: classical::period(d, k),
        })
    }

    pub fn default_ell(k: u32) -> u32 {
        k / 2
    }

    /// Whether `min(ℓ, k−ℓ) ≥ 3 log_D k` holds (recorded, never enforced).
    pub fn ell_constraint_holds(&self) -> bool {
        let m = self.ell.min(self.k - self.ell) as f64;
        m >= 3.0 * (self.k as f64).ln() / (self.d as f64).ln()
    }
}

/// Amplitudes in the computational basis, tagged with `(D, k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuditState {
    pub d: u32,
    pub k: u32,
    pub amps: Vec<C64>,
}

impl QuditState {
    pub fn zeros(cfg: &EngineConfig) -> Self {
        Self {
            d: cfg.d,
            k: cfg.k,
            amps: vec![C64::new(0.0, 0.0); cfg.n],
        }
    }

    pub fn basis(cfg: &EngineConfig, i: usize) -> Self {
        let mut s = Self::zeros(cfg);
        s.amps[i] = C64::new(1.0, 0.0);
        s
    }

    /// Standard complex Gaussian vector (not normalized).
    pub fn gaussian<R: Rng + ?Sized>(cfg: &EngineConfig, rng: &mut R) -> Self {
        let amps = (0..cfg.n)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        Self {
            d: cfg.d,
            k: cfg.k,
            amps,
        }
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `⟨self, other⟩`, conjugate-linear in `self`.
    pub fn inner(&self, other: &QuditState) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn scale(&mut self, s: C64) {
        self.amps.iter_mut().for_each(|a| *a *= s);
    }

    pub fn normalize(&mut self) -> f64 {
        let n = self.norm();
        if n > 0.0 {
            self.scale(C64::new(1.0 / n, 0.0));
        }
        n
    }

    /// `self += s · other`.
    pub fn axpy(&mut self, s: C64, other: &QuditState) {
        self.amps.iter_mut().zip(&other.amps).for_each(|(a, b)| *a += s * b);
    }

    pub fn distance(&self, other: &QuditState) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.amps.iter().all(|a| a.re.is_finite() && a.im.is_finite())
    }
}

/// Configuration plus the lookup tables shared by every operation.
#[derive(Clone, Debug)]
pub struct Engine {
    cfg: EngineConfig,
    /// `e^{2πi j/D}`.
    roots: Vec<C64>,
    /// `D^j` for `j = 0..=k`.
    pow: Vec<usize>,
    /// Weight of each slot's digit in the coherent index.
    coh_weight: Vec<usize>,
    /// `(F_D†)^γ`, row-major, `γ = 0..4`.
    fpow: [Vec<C64>; 4],
}

impl Engine {
    pub fn new(cfg: EngineConfig) -> Self {
        let d = cfg.d as usize;
        let k = cfg.k as usize;
        let ell = cfg.ell as usize;
        let roots = (0..d)
            .map(|j| {
                let (s, c) = (2.0 * std::f64::consts::PI * j as f64 / d as f64).sin_cos();
                C64::new(c, s)
            })
            .collect::<Vec<_>>();
        let pow = (0..=k).map(|j| d.pow(j as u32)).collect::<Vec<_>>();
        let coh_weight = (1..=k)
            .map(|s| if s <= ell { pow[ell - s] } else { pow[k + ell - s] })
            .collect();
        let mut eng = Self {
            cfg,
            roots,
            pow,
            coh_weight,
            fpow: [vec![], vec![], vec![], vec![]],
        };
        for g in 0..4u8 {
            let mut m = vec![C64::new(0.0, 0.0); d * d];
            for y in 0..d {
                for x in 0..d {
                    m[y * d + x] = eng.fourier_entry(g, y as u32, x as u32);
                }
            }
            eng.fpow[g as usize] = m;
        }
        eng
    }

    pub fn from_dims(d: u32, k: u32, ell: u32) -> Result<Self> {
        Ok(Self::new(EngineConfig::new(d, k, ell)?))
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    pub fn d(&self) -> u32 {
        self.cfg.d
    }

    pub fn k(&self) -> u32 {
        self.cfg.k
    }

    pub fn ell(&self) -> u32 {
        self.cfg.ell
    }

    pub fn n(&self) -> usize {
        self.cfg.n
    }

    pub fn period(&self) -> u32 {
        self.cfg.q
    }

    /// `⟨y|(F_D†)^γ|x⟩`: `δ`, `e^{2πiyx/D}/√D`, `δ(y ≡ −x)`, `e^{−2πiyx/D}/√D`.
    pub fn fourier_entry(&self, gamma: u8, y: u32, x: u32) -> C64 {
        let d = self.cfg.d;
        let s = 1.0 / (d as f64).sqrt();
        match gamma % 4 {
            0 => C64::new((y == x) as u8 as f64, 0.0),
            1 => self.roots[((y as u64 * x as u64) % d as u64) as usize] * s,
            2 => C64::new((y == (d - x) % d) as u8 as f64, 0.0),
            _ => self.roots[((d as u64 - (y as u64 * x as u64) % d as u64) % d as u64) as usize] * s,
        }
    }

    pub fn zeros(&self) -> QuditState {
        QuditState::zeros(&self.cfg)
    }
}

/// `⟨m|F_D†|n⟩ = e^{2πimn/D}/√D`.
pub fn dft_row(d: u32, m: u32, n: u32) -> C64 {
    let (s, c) = (2.0 * std::f64::consts::PI * ((m as u64 * n as u64) % d as u64) as f64 / d as f64).sin_cos();
    C64::new(c, s) / (d as f64).sqrt()
}
