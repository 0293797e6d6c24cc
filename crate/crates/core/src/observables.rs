//! Real trigonometric polynomials on the torus.
//!
//! An [`Observable`] stores Fourier modes `c_{mn} e^{2πi(mq+np)}` with Hermitian
//! symmetry `c_{-m,-n} = conj(c_{mn})`, so its values are real. Rectangle averages
//! are exact products of one-dimensional exponential integrals.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classical::{SymbolicRectangle, TorusPoint};
use crate::{Error, Result, C64};

const HERMITIAN_TOL: f64 = 1e-12;

/// One Fourier coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierMode {
    pub m: i64,
    pub n: i64,
    pub coeff: C64,
}

/// Real trigonometric polynomial, stored Hermitian-complete.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Observable {
    modes: BTreeMap<(i64, i64), C64>,
}

/// JSON form: `{"modes":[{"m":2,"n":0,"re":0.0,"im":-0.5}]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ObservableSpec {
    pub modes: Vec<ModeSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModeSpec {
    pub m: i64,
    pub n: i64,
    #[serde(default)]
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// `e^{2πi num/den}` with the numerator reduced exactly when possible.
pub(crate) fn unit_phase(num: i128, den: i128) -> C64 {
    let r = num.rem_euclid(den);
    let (s, c) = (2.0 * PI * (r as f64 / den as f64)).sin_cos();
    C64::new(c, s)
}

/// `e^{2πi m·j/D^L}` for integers, exact reduction while `D^L < 2^62`.
pub(crate) fn rational_phase(m: i64, j: u64, d: u32, len: u32) -> C64 {
    match (d as i128).checked_pow(len) {
        Some(den) if den < (1i128 << 62) => {
            let mm = (m as i128).rem_euclid(den);
            unit_phase(mm * (j as i128 % den), den)
        }
        _ => {
            let x = m as f64 * j as f64 / (d as f64).powi(len as i32);
            let (s, c) = (2.0 * PI * x.fract()).sin_cos();
            C64::new(c, s)
        }
    }
}

/// Mean of `e^{2πi m x}` over `x ∈ [0, D^{-L})`: `(e(m D^{-L}) − 1)/(2πi m D^{-L})`.
pub(crate) fn interval_factor(m: i64, d: u32, len: u32) -> C64 {
    if m == 0 {
        return C64::new(1.0, 0.0);
    }
    if let Some(den) = (d as i128).checked_pow(len) {
        if (m as i128) % den == 0 {
            return C64::new(0.0, 0.0);
        }
    }
    let x = m as f64 / (d as f64).powi(len as i32);
    let (s, c) = (PI * x).sin_cos();
    C64::new(c, s) * (s / (PI * x))
}

impl Observable {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        let mut modes = BTreeMap::new();
        if c != 0.0 {
            modes.insert((0, 0), C64::new(c, 0.0));
        }
        Self { modes }
    }

    /// `amp · cos(2π(mq + np))`.
    pub fn cos(m: i64, n: i64, amp: f64) -> Self {
        if m == 0 && n == 0 {
            return Self::constant(amp);
        }
        let half = C64::new(amp / 2.0, 0.0);
        Self::from_modes([FourierMode { m, n, coeff: half }]).expect("hermitian by construction")
    }

    /// `amp · sin(2π(mq + np))`.
    pub fn sin(m: i64, n: i64, amp: f64) -> Self {
        if m == 0 && n == 0 {
            return Self::zero();
        }
        let c = C64::new(0.0, -amp / 2.0);
        Self::from_modes([FourierMode { m, n, coeff: c }]).expect("hermitian by construction")
    }

    /// Builds an observable, adding missing Hermitian partners.
    ///
    /// Duplicate `(m, n)` pairs, a non-real constant term, or a partner that is
    /// not the conjugate are rejected.
    pub fn from_modes<I: IntoIterator<Item = FourierMode>>(modes: I) -> Result<Self> {
        let mut given: BTreeMap<(i64, i64), C64> = BTreeMap::new();
        for md in modes {
            if given.insert((md.m, md.n), md.coeff).is_some() {
                return Err(Error::Observable(format!("duplicate mode ({}, {})", md.m, md.n)));
            }
        }
        let mut out = given.clone();
        for (&(m, n), &c) in &given {
            if (m, n) == (0, 0) {
                if c.im.abs() > HERMITIAN_TOL {
                    return Err(Error::Observable("constant mode must be real".into()));
                }
                out.insert((0, 0), C64::new(c.re, 0.0));
                continue;
            }
            match given.get(&(-m, -n)) {
                Some(&partner) if (partner - c.conj()).norm() > HERMITIAN_TOL => {
                    return Err(Error::Observable(format!(
                        "mode ({m}, {n}) and its partner are not conjugate"
                    )));
                }
                Some(_) => {}
                None => {
                    out.insert((-m, -n), c.conj());
                }
            }
        }
        out.retain(|_, c| c.norm() > 0.0);
        Ok(Self { modes: out })
    }

    pub fn from_spec(spec: &ObservableSpec) -> Result<Self> {
        Self::from_modes(spec.modes.iter().map(|s| FourierMode {
            m: s.m,
            n: s.n,
            coeff: C64::new(s.re, s.im),
        }))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ObservableSpec = serde_json::from_str(text)?;
        Self::from_spec(&spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Spec listing every stored mode (partners included).
    pub fn to_spec(&self) -> ObservableSpec {
        ObservableSpec {
            modes: self
                .modes()
                .map(|md| ModeSpec {
                    m: md.m,
                    n: md.n,
                    re: md.coeff.re,
                    im: md.coeff.im,
                })
                .collect(),
        }
    }

    pub fn modes(&self) -> impl Iterator<Item = FourierMode> + '_ {
        self.modes.iter().map(|(&(m, n), &coeff)| FourierMode { m, n, coeff })
    }

    pub fn coeff(&self, m: i64, n: i64) -> C64 {
        self.modes.get(&(m, n)).copied().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn max_freq(&self) -> u64 {
        self.modes
            .keys()
            .map(|&(m, n)| m.unsigned_abs().max(n.unsigned_abs()))
            .max()
            .unwrap_or(0)
    }

    pub fn add(&self, other: &Observable) -> Observable {
        let mut modes = self.modes.clone();
        for (&key, &c) in &other.modes {
            *modes.entry(key).or_default() += c;
        }
        modes.retain(|_, c| c.norm() > 0.0);
        Observable { modes }
    }

    pub fn scale(&self, s: f64) -> Observable {
        let mut modes = self.modes.clone();
        modes.values_mut().for_each(|c| *c *= s);
        modes.retain(|_, c| c.norm() > 0.0);
        Observable { modes }
    }

    /// Complex value before the imaginary part is discarded.
    pub fn eval_complex(&self, pt: TorusPoint) -> C64 {
        self.modes()
            .map(|md| {
                let (s, c) = (2.0 * PI * (md.m as f64 * pt.q + md.n as f64 * pt.p)).sin_cos();
                md.coeff * C64::new(c, s)
            })
            .sum()
    }

    pub fn eval(&self, pt: TorusPoint) -> f64 {
        self.eval_complex(pt).re
    }

    pub fn mean(&self) -> f64 {
        self.coeff(0, 0).re
    }

    pub fn centered(&self) -> Observable {
        let mut modes = self.modes.clone();
        modes.remove(&(0, 0));
        Observable { modes }
    }

    /// `Σ|c|`, an upper bound for the sup norm (attained for cosine sums at the origin).
    pub fn sup_bound(&self) -> f64 {
        self.modes.values().map(|c| c.norm()).sum()
    }

    /// Lipschitz seminorm bound `Σ|c|·2π‖(m,n)‖₂`.
    pub fn gradient_bound(&self) -> f64 {
        self.modes()
            .map(|md| md.coeff.norm() * 2.0 * PI * ((md.m * md.m + md.n * md.n) as f64).sqrt())
            .sum()
    }

    /// `Σ|c|(1 + 2π‖(m,n)‖₂) ≥ ‖a‖_Lip`.
    pub fn lipschitz_bound(&self) -> f64 {
        self.sup_bound() + self.gradient_bound()
    }

    /// Exact average over a symbolic rectangle.
    pub fn rectangle_average(&self, rect: &SymbolicRectangle) -> f64 {
        let d = rect.d;
        let (lq, lp) = (rect.pos.len() as u32, rect.mom.len() as u32);
        let (jq, jp) = (rect.q_numerator(), rect.p_numerator());
        let mut acc = C64::new(0.0, 0.0);
        for md in self.modes() {
            let fq = interval_factor(md.m, d, lq);
            let fp = interval_factor(md.n, d, lp);
            if fq.norm() == 0.0 || fp.norm() == 0.0 {
                continue;
            }
            acc += md.coeff * rational_phase(md.m, jq, d, lq) * fq * rational_phase(md.n, jp, d, lp) * fp;
        }
        acc.re
    }
}

/// How `s_k` samples each rectangle of the base-4 fractal.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FractalSampling {
    /// Value at the lower-left corner: `a₀(q,p)` for finite digit strings.
    Point,
    /// Rectangle average, the quantity appearing in `Tr(Op(a₀) B̂^{-2k})/√N`.
    RectangleAverage,
}

/// Limit of the `{0,2}`-digit averages for D = 4.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FractalAverage {
    pub value: f64,
    pub k_used: u32,
    pub tol: f64,
}

/// `2^{-L} Σ_{digits ∈ {0,2}} e^{2πi m x}` over base-4 strings of length L.
fn fractal_digit_mean(m: i64, len: u32) -> C64 {
    let mut acc = C64::new(1.0, 0.0);
    for j in 1..=len {
        let w = rational_phase(m, 2, 4, j);
        acc *= (C64::new(1.0, 0.0) + w) * 0.5;
        if acc.norm() == 0.0 {
            break;
        }
    }
    acc
}

/// `s_k` with `ℓ` position digits and `k − ℓ` momentum digits, all in `{0, 2}`.
pub fn fractal_partial_sum(obs: &Observable, k: u32, ell: u32, sampling: FractalSampling) -> f64 {
    assert!(ell <= k);
    let mut acc = C64::new(0.0, 0.0);
    for md in obs.modes() {
        let mut term = md.coeff * fractal_digit_mean(md.m, ell) * fractal_digit_mean(md.n, k - ell);
        if sampling == FractalSampling::RectangleAverage {
            term *= interval_factor(md.m, 4, ell) * interval_factor(md.n, 4, k - ell);
        }
        acc += term;
    }
    acc.re
}

/// Infinite-product form of the fractal mean of `e^{2πi(mq+np)}`, truncated
/// once the remaining factors equal 1 to double precision.
pub fn fractal_mode_limit(m: i64, n: i64) -> C64 {
    let depth = |f: i64| -> u32 {
        let f = f.unsigned_abs().max(1) as f64;
        (f.log(4.0) + 30.0).ceil() as u32
    };
    fractal_digit_mean(m, depth(m)) * fractal_digit_mean(n, depth(n))
}

/// Limit of `s_k` (point sampling) along even `k = 2j`, `ℓ = j`, stopping once
/// two successive differences are within `tol`.
pub fn fractal_average(obs_centered: &Observable, tol: f64) -> Result<FractalAverage> {
    let mut prev = fractal_partial_sum(obs_centered, 0, 0, FractalSampling::Point);
    let mut calm = 0;
    for j in 1..=32u32 {
        let k = 2 * j;
        let s = fractal_partial_sum(obs_centered, k, j, FractalSampling::Point);
        calm = if (s - prev).abs() <= tol { calm + 1 } else { 0 };
        if calm >= 2 {
            return Ok(FractalAverage {
                value: s,
                k_used: k,
                tol,
            });
        }
        prev = s;
    }
    Err(Error::Numerical(format!(
        "fractal average did not converge to {tol:e} within k = 64"
    )))
}
