//! Classical D-baker dynamics and exact correlation sums.
//!
//! Points of the torus are read as bi-infinite base-D digit strings
//! `… p₂ p₁ • q₁ q₂ …`; position `j ≥ 1` holds `q_j` and position `j ≤ 0`
//! holds `p_{1−j}`. The baker map is the left shift, `(Bx)_j = x_{j+1}`.
//!
//! Both reflections in use here are digit permutations applied at every
//! position: [`Reflection::Torus`] is `(q,p) ↦ (1−q, 1−p)`, i.e. `x ↦ D−1−x`
//! almost everywhere, and [`Reflection::Walsh`] is `x ↦ −x mod D`, the classical
//! shadow of `B̂_k^{2k} = R_D^{⊗k}`. They differ for every D; for D = 2 the
//! Walsh reflection is the identity and no reflected term is used.
//!
//! Because a Fourier mode factorises over digit positions, the correlation
//! `∫ e(m₁q+n₁p) · e(m₂q'+n₂p')`, with `(q',p') = B^t σ(q,p)`, is an infinite
//! product of single-digit averages. [`correlation`] evaluates it exactly up
//! to positions whose factors equal 1 in double precision.

use std::collections::BTreeMap;
use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::observables::{rational_phase, Observable};
use crate::{Error, Result, C64};

/// Exact period of `B̂_k`: `4k` for `D ≥ 3`, `2k` for `D = 2`.
pub fn period(d: u32, k: u32) -> u32 {
    if d == 2 {
        2 * k
    } else {
        4 * k
    }
}

/// Tent function `η_k(t)` (period `2k`).
pub fn eta(t: i64, k: u32) -> u32 {
    let k = k as i64;
    let r = t.rem_euclid(2 * k);
    if r <= k {
        r as u32
    } else {
        (2 * k - r) as u32
    }
}

const SNAP: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    pub q: f64,
    pub p: f64,
}

impl TorusPoint {
    /// Wraps both coordinates into `[0, 1)`.
    pub fn new(q: f64, p: f64) -> Self {
        Self { q: wrap(q), p: wrap(p) }
    }

    /// Toroidal distance.
    pub fn dist(&self, other: &TorusPoint) -> f64 {
        let dq = (self.q - other.q).abs();
        let dp = (self.p - other.p).abs();
        dq.min(1.0 - dq).hypot(dp.min(1.0 - dp))
    }
}

fn wrap(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Leading digit of `x ∈ [0,1)` and the remainder, snapping values within
/// `1e-12` of a grid point upward (no trailing `D−1` runs).
fn split_digit(x: f64, d: u32) -> (u32, f64) {
    let y = x * d as f64;
    let mut dig = (y + SNAP).floor();
    if dig > (d - 1) as f64 {
        dig = (d - 1) as f64;
    }
    (dig as u32, (y - dig).max(0.0))
}

/// First `n` base-D digits of `x ∈ [0,1)`.
pub fn digits(x: f64, d: u32, n: usize) -> Vec<u32> {
    let mut out = Vec::with_capacity(n);
    let mut r = x;
    for _ in 0..n {
        let (dig, rest) = split_digit(r, d);
        out.push(dig);
        r = rest;
    }
    out
}

fn from_digits(ds: &[u32], d: u32) -> f64 {
    ds.iter().rev().fold(0.0, |acc, &x| (acc + x as f64) / d as f64)
}

/// `t`-fold baker map (negative `t` applies the inverse).
pub fn baker_step(pt: TorusPoint, d: u32, t: i64) -> TorusPoint {
    let (mut q, mut p) = (pt.q, pt.p);
    let df = d as f64;
    if t >= 0 {
        for _ in 0..t {
            let (dig, rest) = split_digit(q, d);
            q = rest;
            p = (p + dig as f64) / df;
        }
    } else {
        for _ in 0..(-t) {
            let (dig, rest) = split_digit(p, d);
            p = rest;
            q = (q + dig as f64) / df;
        }
    }
    TorusPoint::new(q, p)
}

/// Finite digit strings `q = 0.q₁q₂…`, `p = 0.p₁p₂…`; the baker map acts by an
/// exact shift, so D-adic rationals never accumulate rounding.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolicPoint {
    pub d: u32,
    pub q: Vec<u32>,
    pub p: Vec<u32>,
}

impl SymbolicPoint {
    pub fn baker_step(&self, t: i64) -> SymbolicPoint {
        let mut q = self.q.clone();
        let mut p = self.p.clone();
        for _ in 0..t.unsigned_abs() {
            let (src, dst) = if t > 0 { (&mut q, &mut p) } else { (&mut p, &mut q) };
            let head = if src.is_empty() { 0 } else { src.remove(0) };
            dst.insert(0, head);
        }
        for v in [&mut q, &mut p] {
            while v.last() == Some(&0) {
                v.pop();
            }
        }
        SymbolicPoint { d: self.d, q, p }
    }

    pub fn to_point(&self) -> TorusPoint {
        TorusPoint::new(from_digits(&self.q, self.d), from_digits(&self.p, self.d))
    }
}

/// `(q, p) ↦ (1 − q mod 1, 1 − p mod 1)`.
pub fn reflect(pt: TorusPoint) -> TorusPoint {
    TorusPoint::new(1.0 - pt.q, 1.0 - pt.p)
}

/// Digit-wise negation `x ↦ −x mod D` on both coordinates (60 digits).
pub fn walsh_reflect(pt: TorusPoint, d: u32) -> TorusPoint {
    let neg = |x: f64| {
        let ds: Vec<u32> = digits(x, d, 60).into_iter().map(|v| (d - v) % d).collect();
        from_digits(&ds, d)
    };
    TorusPoint::new(neg(pt.q), neg(pt.p))
}

/// Reflection used in `H(t)`, `V(a)` and `Ṽ(a,α,β)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reflection {
    /// `(q,p) ↦ (1−q, 1−p)`; digits `x ↦ D−1−x`.
    Torus,
    /// Digits `x ↦ −x mod D`; matches `R_D = (F_D†)²` on every tensor factor.
    Walsh,
}

impl Reflection {
    pub fn digit(self, d: u32, x: u32) -> u32 {
        match self {
            Reflection::Torus => d - 1 - x,
            Reflection::Walsh => (d - x) % d,
        }
    }

    pub fn apply(self, pt: TorusPoint, d: u32) -> TorusPoint {
        match self {
            Reflection::Torus => reflect(pt),
            Reflection::Walsh => walsh_reflect(pt, d),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Reflection::Torus => "torus",
            Reflection::Walsh => "walsh",
        }
    }
}

impl std::str::FromStr for Reflection {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "torus" => Ok(Reflection::Torus),
            "walsh" => Ok(Reflection::Walsh),
            _ => Err(Error::Config(format!("unknown reflection {s:?}"))),
        }
    }
}

/// `(k, ℓ)`-rectangle `q ∈ [0.ε_ℓ…ε₁, +D^{-ℓ})`, `p ∈ [0.ε_{ℓ+1}…ε_k, +D^{-(k-ℓ)})`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SymbolicRectangle {
    pub d: u32,
    /// `ε_ℓ … ε₁` (the digits of q in reading order).
    pub pos: Vec<u32>,
    /// `ε_k … ε_{ℓ+1}` (the digits of p in reverse reading order).
    pub mom: Vec<u32>,
}

impl SymbolicRectangle {
    /// From `ε₁ … ε_k`.
    pub fn from_eps(d: u32, ell: u32, eps: &[u32]) -> Self {
        let ell = ell as usize;
        let pos = eps[..ell].iter().rev().copied().collect();
        let mom = eps[ell..].iter().rev().copied().collect();
        Self { d, pos, mom }
    }

    /// The whole torus (`k = ℓ = 0`).
    pub fn full(d: u32) -> Self {
        Self {
            d,
            pos: vec![],
            mom: vec![],
        }
    }

    pub fn ell(&self) -> usize {
        self.pos.len()
    }

    pub fn k(&self) -> usize {
        self.pos.len() + self.mom.len()
    }

    /// `ε_j`, `1 ≤ j ≤ k`.
    pub fn eps(&self, j: usize) -> u32 {
        let ell = self.ell();
        if j <= ell {
            self.pos[ell - j]
        } else {
            self.mom[self.k() - j]
        }
    }

    /// `q₀ · D^ℓ`.
    pub fn q_numerator(&self) -> u64 {
        self.pos.iter().fold(0u64, |a, &x| a * self.d as u64 + x as u64)
    }

    /// `p₀ · D^{k−ℓ}`.
    pub fn p_numerator(&self) -> u64 {
        self.mom.iter().rev().fold(0u64, |a, &x| a * self.d as u64 + x as u64)
    }

    pub fn q_interval(&self) -> (f64, f64) {
        let w = (self.d as f64).powi(-(self.pos.len() as i32));
        let lo = self.q_numerator() as f64 * w;
        (lo, lo + w)
    }

    pub fn p_interval(&self) -> (f64, f64) {
        let w = (self.d as f64).powi(-(self.mom.len() as i32));
        let lo = self.p_numerator() as f64 * w;
        (lo, lo + w)
    }

    pub fn area(&self) -> f64 {
        (self.d as f64).powi(-(self.k() as i32))
    }

    pub fn contains(&self, pt: TorusPoint) -> bool {
        let (q0, q1) = self.q_interval();
        let (p0, p1) = self.p_interval();
        pt.q >= q0 && pt.q < q1 && pt.p >= p0 && pt.p < p1
    }

    /// Digit constraints at bi-infinite positions (`ε_m` sits at `ℓ+1−m`).
    pub fn cylinder(&self) -> Cylinder {
        let ell = self.ell() as i64;
        let cons = (1..=self.k()).map(|m| (ell + 1 - m as i64, self.eps(m))).collect();
        Cylinder { d: self.d, cons }
    }
}

/// Set of digit strings with finitely many fixed positions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cylinder {
    pub d: u32,
    pub cons: BTreeMap<i64, u32>,
}

impl Cylinder {
    /// Image under `B^shift ∘ σ`, σ the optional reflection.
    pub fn image(&self, shift: i64, reflection: Option<Reflection>) -> Cylinder {
        let cons = self
            .cons
            .iter()
            .map(|(&pos, &x)| (pos - shift, reflection.map_or(x, |r| r.digit(self.d, x))))
            .collect();
        Cylinder { d: self.d, cons }
    }

    /// Positive-measure intersection.
    pub fn intersects(&self, other: &Cylinder) -> bool {
        self.cons
            .iter()
            .all(|(pos, x)| other.cons.get(pos).is_none_or(|y| y == x))
    }

    pub fn intersection_area(&self, other: &Cylinder) -> f64 {
        if !self.intersects(other) {
            return 0.0;
        }
        let fixed = self.cons.len() + other.cons.keys().filter(|p| !self.cons.contains_key(p)).count();
        (self.d as f64).powi(-(fixed as i32))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HRegime {
    /// `B^t`
    Forward,
    /// `B^{-(k-[t]_k)} R`
    BackwardReflected,
    /// `B^{[t]_k} R`
    ForwardReflected,
    /// `B^{-(k-[t]_k)}`
    Backward,
}

/// Selected regime of the classical map `H(t)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HMapDescriptor {
    pub t_mod: u32,
    pub period: u32,
    pub regime: HRegime,
    /// Signed power of B; `|shift| = η_k(t)`.
    pub shift: i64,
    pub reflect: bool,
}

pub fn h_map(t: i64, k: u32, d: u32) -> HMapDescriptor {
    let period = period(d, k);
    let tm = t.rem_euclid(period as i64) as u32;
    let r = (tm % k) as i64;
    let ki = k as i64;
    let (regime, shift, reflect) = match (tm / k, d == 2) {
        (0, _) => (HRegime::Forward, tm as i64, false),
        (1, true) => (HRegime::Backward, -(ki - r), false),
        (1, false) => (HRegime::BackwardReflected, -(ki - r), true),
        (2, _) => (HRegime::ForwardReflected, r, true),
        _ => (HRegime::Backward, -(ki - r), false),
    };
    HMapDescriptor {
        t_mod: tm,
        period,
        regime,
        shift,
        reflect,
    }
}

pub fn h_apply(desc: &HMapDescriptor, pt: TorusPoint, d: u32, reflection: Reflection) -> TorusPoint {
    let pt = if desc.reflect { reflection.apply(pt, d) } else { pt };
    baker_step(pt, d, desc.shift)
}

/// `e^{2πi(m q + n p)}` restricted to the digit at `pos`.
fn mode_digit(m: i64, n: i64, d: u32, pos: i64, x: u32) -> C64 {
    if pos >= 1 {
        rational_phase(m, x as u64, d, pos as u32)
    } else {
        rational_phase(n, x as u64, d, (1 - pos) as u32)
    }
}

/// Number of positions on each side beyond which a frequency-`f` mode is 1
/// to double precision.
fn mode_depth(f: u64, d: u32) -> i64 {
    let f = f.max(1) as f64 * d as f64;
    ((f.ln() + 17.0 * 10f64.ln()) / (d as f64).ln()).ceil() as i64 + 1
}

const FACTOR_ZERO: f64 = 1e-13;

/// `∫ a₀(x) a₀(B^t σ x) dx` by the per-digit product; σ = reflection or identity.
///
/// A single-digit factor below `1e-13` in modulus is treated as an exact zero:
/// it is an average of `D` unit phases, and for integer frequencies such an
/// average is either exactly zero or far above that threshold.
pub fn correlation(obs_centered: &Observable, d: u32, t: i64, reflection: Option<Reflection>) -> f64 {
    let modes: Vec<_> = obs_centered.modes().filter(|md| (md.m, md.n) != (0, 0)).collect();
    if modes.is_empty() {
        return 0.0;
    }
    let depth = mode_depth(obs_centered.max_freq(), d);
    let lo = (-depth + 1).min(t - depth + 1);
    let hi = depth.max(t + depth);
    let sigma: Vec<u32> = (0..d).map(|x| reflection.map_or(x, |r| r.digit(d, x))).collect();
    let inv_d = 1.0 / d as f64;
    let mut acc = C64::new(0.0, 0.0);
    for a in &modes {
        for b in &modes {
            let mut prod = a.coeff * b.coeff;
            for pos in lo..=hi {
                let mut f = C64::new(0.0, 0.0);
                for x in 0..d {
                    f += mode_digit(a.m, a.n, d, pos, x) * mode_digit(b.m, b.n, d, pos - t, sigma[x as usize]);
                }
                f *= inv_d;
                if f.norm() < FACTOR_ZERO {
                    prod = C64::new(0.0, 0.0);
                    break;
                }
                prod *= f;
            }
            acc += prod;
        }
    }
    acc.re
}

/// Exact correlation sums of a centered observable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSeries {
    pub d: u32,
    pub reflection: Reflection,
    /// Largest `|t|` with a correlation above `support_tol`.
    pub t_star: u32,
    /// Computed range; the mixing bound makes `Σ_{|t|>t_max}` below `1e-16·‖a‖²`.
    pub t_max: u32,
    pub support_tol: f64,
    /// `C_B(t)` for `t = 0..=t_max` (even in t).
    pub cb: Vec<f64>,
    /// `C_BR(t)` for `t = 0..=t_max` (even in t).
    pub cbr: Vec<f64>,
}

/// Smallest `T` with `Σ_{|t|>T} 2√2‖a‖_∞ L D^{-⌊|t|/2⌋} < 1e-16 ‖a‖_∞²`.
///
/// The bound compares `a` with its conditional expectation on the cylinder of
/// `n = ⌊|t|/2⌋` leading q- and p-digits: the two cylinder functions depend on
/// disjoint positions once `|t| ≥ 2n`, so their correlation vanishes.
pub fn correlation_cutoff(obs_centered: &Observable, d: u32) -> u32 {
    let sup = obs_centered.sup_bound();
    if sup == 0.0 {
        return 0;
    }
    let lip = obs_centered.gradient_bound();
    let df = d as f64;
    let mut t = 0u32;
    loop {
        let tail = 4.0 * SQRT_2 * sup * lip * 2.0 * df.powi(-(t.div_ceil(2) as i32)) / (1.0 - 1.0 / df);
        if tail < 1e-16 * sup * sup || t >= 400 {
            return t;
        }
        t += 1;
    }
}

pub fn correlation_series(obs: &Observable, d: u32, reflection: Reflection) -> CorrelationSeries {
    let a0 = obs.centered();
    let t_max = correlation_cutoff(&a0, d);
    let cb: Vec<f64> = (0..=t_max as i64).map(|t| correlation(&a0, d, t, None)).collect();
    let cbr: Vec<f64> = (0..=t_max as i64)
        .map(|t| correlation(&a0, d, t, Some(reflection)))
        .collect();
    let support_tol = 1e-15 * a0.sup_bound().powi(2);
    let t_star = (0..=t_max as usize)
        .filter(|&t| cb[t].abs() > support_tol || cbr[t].abs() > support_tol)
        .max()
        .unwrap_or(0) as u32;
    CorrelationSeries {
        d,
        reflection,
        t_star,
        t_max,
        support_tol,
        cb,
        cbr,
    }
}

impl CorrelationSeries {
    pub fn c_b(&self, t: i64) -> f64 {
        self.cb.get(t.unsigned_abs() as usize).copied().unwrap_or(0.0)
    }

    pub fn c_br(&self, t: i64) -> f64 {
        self.cbr.get(t.unsigned_abs() as usize).copied().unwrap_or(0.0)
    }

    fn summand(&self, t: usize) -> f64 {
        self.cb[t] + if self.d >= 3 { self.cbr[t] } else { 0.0 }
    }

    /// `V(a) = Σ_t [C_B(t) + 1_{D≥3} C_BR(t)]`.
    pub fn variance(&self) -> f64 {
        self.summand(0) + 2.0 * (1..self.cb.len()).map(|t| self.summand(t)).sum::<f64>()
    }

    /// `Ṽ(a,α,β) = Σ_t e^{2πit(α−β)/q} [C_B(t) + 1_{D≥3} (−1)^{α−β} C_BR(t)]`.
    ///
    /// The sign on the reflected term comes from `H(t) = B^{t∓2k} R` for
    /// `k ≤ |t| < 2k`: the phase is taken at `t`, not at the shift `t ∓ 2k`,
    /// and `e^{2πi(2k)(α−β)/4k} = (−1)^{α−β}`. This is the limit of
    /// `(q²/N) Tr(Op(a₀) P_α Op(a₀) P_β)`.
    pub fn tilde_variance(&self, q: u32, alpha: u32, beta: u32) -> f64 {
        let sign = if (alpha as i64 - beta as i64).rem_euclid(2) == 0 {
            1.0
        } else {
            -1.0
        };
        self.tilde_with(q, alpha, beta, sign)
    }

    /// `Ṽ` with the reflected term unsigned; agrees with
    /// [`CorrelationSeries::tilde_variance`] when `α − β` is even or `D = 2`.
    pub fn tilde_variance_unsigned(&self, q: u32, alpha: u32, beta: u32) -> f64 {
        self.tilde_with(q, alpha, beta, 1.0)
    }

    fn tilde_with(&self, q: u32, alpha: u32, beta: u32, sign: f64) -> f64 {
        let dphi = 2.0 * PI * (alpha as f64 - beta as f64) / q as f64;
        let refl = if self.d >= 3 { sign } else { 0.0 };
        let term = |t: usize| self.cb[t] + refl * self.cbr[t];
        term(0)
            + 2.0
                * (1..self.cb.len())
                    .map(|t| (dphi * t as f64).cos() * term(t))
                    .sum::<f64>()
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["t", "C_B", "C_BR"])?;
        for t in -(self.t_max as i64)..=self.t_max as i64 {
            wr.write_record([
                t.to_string(),
                format!("{:.17e}", self.c_b(t)),
                format!("{:.17e}", self.c_br(t)),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// `V(a)` with the given reflection in the `R`-term.
pub fn classical_variance(obs: &Observable, d: u32, reflection: Reflection) -> f64 {
    correlation_series(obs, d, reflection).variance()
}

/// `Ṽ(a,α,β)`; errors if it is negative beyond `1e-9`.
pub fn tilde_variance(obs: &Observable, d: u32, k: u32, alpha: u32, beta: u32, reflection: Reflection) -> Result<f64> {
    let s = correlation_series(obs, d, reflection);
    checked_tilde(&s, period(d, k), alpha, beta)
}

fn checked_tilde(s: &CorrelationSeries, q: u32, alpha: u32, beta: u32) -> Result<f64> {
    let v = s.tilde_variance(q, alpha, beta);
    if v < -1e-9 {
        return Err(Error::Numerical(format!("Ṽ(α={alpha}, β={beta}) = {v:e} is negative")));
    }
    Ok(v.max(0.0))
}

/// `f_a(α,β) = √(Ṽ(a,α,β)/V(a))`.
pub fn f_a(obs: &Observable, d: u32, k: u32, alpha: u32, beta: u32, reflection: Reflection) -> Result<f64> {
    let s = correlation_series(obs, d, reflection);
    f_a_from_series(&s, period(d, k), alpha, beta)
}

pub fn f_a_from_series(s: &CorrelationSeries, q: u32, alpha: u32, beta: u32) -> Result<f64> {
    let v = s.variance();
    if v.abs() < 1e-300 {
        return Err(Error::Numerical("V(a) = 0, f_a undefined".into()));
    }
    Ok((checked_tilde(s, q, alpha, beta)? / v).sqrt())
}
