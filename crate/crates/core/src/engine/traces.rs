use std::f64::consts::SQRT_2;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Engine, EntryPlan, QuantizedObservable};
use crate::classical::{correlation, eta, h_map, Reflection};
use crate::{rng, Error, Result, C64};

/// Largest `N` for which pair traces are evaluated.
pub const PAIR_GUARD: usize = 1 << 14;

const CHUNK: usize = 1024;

/// Fixed-order chunked sum: bit-identical for any thread count.
fn ordered_sum<F: Fn(usize) -> C64 + Sync>(n: usize, f: F) -> C64 {
    let parts: Vec<C64> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|ci| (ci * CHUNK..((ci + 1) * CHUNK).min(n)).map(&f).sum())
        .collect();
    parts.into_iter().sum()
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `D^{−r} × D^{−r}` grid square: q starts with the `r` digits of `i`, p with those of `j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Square {
    pub r: u32,
    pub i: u32,
    pub j: u32,
}

/// Row of the `Tr B̂^t` diagnostics table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: i64,
    pub re: f64,
    pub im: f64,
    pub bound: f64,
    pub gcd: u32,
    pub eta: u32,
}

/// Which `(t₁, t₂)` pairs a bound check visits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PairSelection {
    None,
    /// For each `t₁` in one period, `t₂ ∈ {−t₁, k−t₁, 2k−t₁, 3k−t₁}` plus `n` seeded random pairs.
    Families {
        random: usize,
        seed: u64,
    },
    Explicit(Vec<(i64, i64)>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceBoundRow {
    pub kind: String,
    pub t1: i64,
    pub t2: Option<i64>,
    pub square: Option<(Square, Option<Square>)>,
    pub value: f64,
    pub bound: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceBoundReport {
    pub r: u32,
    pub rows: Vec<TraceBoundRow>,
    pub violations: usize,
    pub checked: usize,
}

/// One `t` of the averaged-sum identity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntsumRow {
    pub t: i64,
    /// `D^{−η(t)} Σ_{⟨ε|B̂^t|δ⟩≠0} ⨍_ε a ⨍_δ a`.
    pub lhs: f64,
    /// `N ∫ a(x) a(H(t)x) dx`.
    pub rhs: f64,
    /// `2√2 · N · ‖a‖_∞ ‖a‖_Lip · D^{−min(ℓ,k−ℓ)}`.
    pub bound: f64,
}

impl IntsumRow {
    pub fn holds(&self) -> bool {
        (self.lhs - self.rhs).abs() <= self.bound
    }
}

const TOL: f64 = 1e-9;

impl Engine {
    /// `Tr B̂_k^t` by cycles of the slot permutation: with `M_s = (F_D†)^{γ_s}`,
    /// the diagonal sum factorises into `Π_cycles Tr(M_{s₁} M_{s₂} ⋯)`.
    pub fn trace_power(&self, t: i64) -> C64 {
        let plan = self.entry_plan(t);
        let k = self.cfg.k as usize;
        let d = self.cfg.d as usize;
        let mut seen = vec![false; k];
        let mut total = C64::new(1.0, 0.0);
        for start in 0..k {
            if seen[start] {
                continue;
            }
            let mut prod: Vec<C64> = (0..d * d)
                .map(|i| C64::new((i % (d + 1) == 0) as u8 as f64, 0.0))
                .collect();
            let mut s = start;
            while !seen[s] {
                seen[s] = true;
                let m = &self.fpow[plan.gamma[s] as usize];
                let mut next = vec![C64::new(0.0, 0.0); d * d];
                for a in 0..d {
                    for b in 0..d {
                        next[a * d + b] = (0..d).map(|c| prod[a * d + c] * m[c * d + b]).sum();
                    }
                }
                prod = next;
                s = plan.sigma[s];
            }
            total *= (0..d).map(|a| prod[a * d + a]).sum::<C64>();
        }
        total
    }

    /// `Σ_ε ⟨ε|B̂^t|ε⟩` summed entry by entry (`O(N k)`), for cross-checks.
    pub fn trace_power_direct(&self, t: i64) -> C64 {
        let plan = self.entry_plan(t);
        let k = self.cfg.k as usize;
        ordered_sum(self.cfg.n, |c| {
            let mut dg = vec![0; k];
            self.slot_digits(c, &mut dg);
            self.entry_digits(&plan, &dg, &dg)
        })
    }

    /// `Tr(Op(a) B̂^t) = Σ_ε ⨍_ε a · ⟨ε|B̂^t|ε⟩`.
    pub fn trace_obs(&self, qobs: &QuantizedObservable, t: i64) -> C64 {
        let plan = self.entry_plan(t);
        let k = self.cfg.k as usize;
        ordered_sum(self.cfg.n, |c| {
            let mut dg = vec![0; k];
            self.slot_digits(c, &mut dg);
            self.entry_digits(&plan, &dg, &dg) * qobs.averages[c]
        })
    }

    /// `Tr(Op(a) B̂^t)` for `t = 0..q`.
    pub fn trace_obs_all(&self, qobs: &QuantizedObservable) -> Vec<C64> {
        (0..self.cfg.q as i64).map(|t| self.trace_obs(qobs, t)).collect()
    }

    fn pair_guard(&self) -> Result<()> {
        if self.cfg.n > PAIR_GUARD {
            return Err(Error::SizeGuard(format!(
                "pair traces need N ≤ {PAIR_GUARD}, got N = {}",
                self.cfg.n
            )));
        }
        Ok(())
    }

    /// `Tr(Op(a) B̂^{t₁} Op(a) B̂^{t₂}) = Σ_{ε,δ} ⨍_ε a ⨍_δ a ⟨ε|B̂^{t₁}|δ⟩⟨δ|B̂^{t₂}|ε⟩`,
    /// enumerating the sparser factor's support. Refused for `N > 2^14`.
    pub fn trace_obs_pair(&self, qobs: &QuantizedObservable, t1: i64, t2: i64) -> Result<C64> {
        self.pair_guard()?;
        let k = self.cfg.k;
        let (ta, tb) = if eta(t2, k) < eta(t1, k) { (t2, t1) } else { (t1, t2) };
        let pa = self.entry_plan(ta);
        let pb = self.entry_plan(tb);
        let kk = k as usize;
        Ok(ordered_sum(self.cfg.n, |c| {
            let mut cd = vec![0; kk];
            let mut dd = vec![0; kk];
            self.slot_digits(c, &mut cd);
            let mut acc = C64::new(0.0, 0.0);
            self.for_each_in_row(&pa, c, |dl, v| {
                self.slot_digits(dl, &mut dd);
                acc += v * self.entry_digits(&pb, &dd, &cd) * qobs.averages[dl];
            });
            acc * qobs.averages[c]
        }))
    }

    pub fn square_of(&self, c: usize, r: u32) -> Square {
        let d = self.cfg.d as usize;
        let ell = self.cfg.ell as usize;
        let eps = |j: usize| ((c / self.pow[j - 1]) % d) as u32;
        let mut i = 0;
        let mut j = 0;
        for m in 1..=r as usize {
            i = i * self.cfg.d + eps(ell + 1 - m);
            j = j * self.cfg.d + eps(ell + m);
        }
        Square { r, i, j }
    }

    fn check_resolution(&self, r: u32) -> Result<()> {
        if r > self.cfg.ell.min(self.cfg.k - self.cfg.ell) {
            return Err(Error::Config(format!(
                "square resolution r = {r} exceeds min(ℓ, k−ℓ) = {}",
                self.cfg.ell.min(self.cfg.k - self.cfg.ell)
            )));
        }
        Ok(())
    }

    /// `Σ_{[ε] ⊂ S} ⟨ε|B̂^t|ε⟩`.
    pub fn partial_trace_square(&self, t: i64, sq: Square) -> Result<C64> {
        self.check_resolution(sq.r)?;
        let plan = self.entry_plan(t);
        let k = self.cfg.k as usize;
        let mut dg = vec![0; k];
        let mut acc = C64::new(0.0, 0.0);
        for c in 0..self.cfg.n {
            if self.square_of(c, sq.r) == sq {
                self.slot_digits(c, &mut dg);
                acc += self.entry_digits(&plan, &dg, &dg);
            }
        }
        Ok(acc)
    }

    /// Partial traces of `B̂^t` over every square at resolution `r`, indexed `i·D^r + j`.
    pub fn partial_traces_all(&self, t: i64, r: u32) -> Result<Vec<C64>> {
        self.check_resolution(r)?;
        let side = self.cfg.d.pow(r) as usize;
        let plan = self.entry_plan(t);
        let k = self.cfg.k as usize;
        let mut out = vec![C64::new(0.0, 0.0); side * side];
        let mut dg = vec![0; k];
        for c in 0..self.cfg.n {
            let s = self.square_of(c, r);
            self.slot_digits(c, &mut dg);
            out[s.i as usize * side + s.j as usize] += self.entry_digits(&plan, &dg, &dg);
        }
        Ok(out)
    }

    /// `Σ_{[ε]⊂S₁} Σ_{[δ]⊂S₂} ⟨ε|B̂^{t₁}|δ⟩⟨δ|B̂^{t₂}|ε⟩`.
    pub fn partial_pair_square(&self, t1: i64, t2: i64, s1: Square, s2: Square) -> Result<C64> {
        self.check_resolution(s1.r)?;
        self.check_resolution(s2.r)?;
        let p1 = self.entry_plan(t1);
        let p2 = self.entry_plan(t2);
        let k = self.cfg.k as usize;
        let mut ed = vec![0; k];
        let mut dd = vec![0; k];
        let mut acc = C64::new(0.0, 0.0);
        for e in 0..self.cfg.n {
            if self.square_of(e, s1.r) != s1 {
                continue;
            }
            self.slot_digits(e, &mut ed);
            self.for_each_in_row(&p1, e, |dl, v| {
                if self.square_of(dl, s2.r) == s2 {
                    self.slot_digits(dl, &mut dd);
                    acc += v * self.entry_digits(&p2, &dd, &ed);
                }
            });
        }
        Ok(acc)
    }

    /// All square-pair partial sums at resolution `r`, indexed `[s₁][s₂]`
    /// with squares numbered `i·D^r + j`.
    pub fn partial_pairs_all(&self, t1: i64, t2: i64, r: u32) -> Result<Vec<Vec<C64>>> {
        self.check_resolution(r)?;
        let side = self.cfg.d.pow(r) as usize;
        let ns = side * side;
        let k = self.cfg.k;
        let swap = eta(t2, k) < eta(t1, k);
        let (ta, tb) = if swap { (t2, t1) } else { (t1, t2) };
        let pa = self.entry_plan(ta);
        let pb = self.entry_plan(tb);
        let sq_index: Vec<usize> = (0..self.cfg.n)
            .map(|c| {
                let s = self.square_of(c, r);
                s.i as usize * side + s.j as usize
            })
            .collect();
        let kk = k as usize;
        let mut m = vec![vec![C64::new(0.0, 0.0); ns]; ns];
        let mut rd = vec![0; kk];
        let mut cd = vec![0; kk];
        for row in 0..self.cfg.n {
            self.slot_digits(row, &mut rd);
            let sr = sq_index[row];
            self.for_each_in_row(&pa, row, |col, v| {
                self.slot_digits(col, &mut cd);
                m[sr][sq_index[col]] += v * self.entry_digits(&pb, &cd, &rd);
            });
        }
        if swap {
            let mut t = vec![vec![C64::new(0.0, 0.0); ns]; ns];
            for a in 0..ns {
                for b in 0..ns {
                    t[a][b] = m[b][a];
                }
            }
            m = t;
        }
        Ok(m)
    }

    /// `G_{D,k}(t) = D^{gcd([t]_k, k)}`.
    pub fn g_general(&self, t: i64) -> f64 {
        let k = self.cfg.k;
        (self.cfg.d as f64).powi(gcd(t.rem_euclid(k as i64) as u32, k) as i32)
    }

    fn is_pm_k(&self, t: i64) -> bool {
        let q = self.cfg.q as i64;
        let k = self.cfg.k as i64;
        let tm = t.rem_euclid(q);
        tm == k || tm == (q - k).rem_euclid(q)
    }

    /// `G` for the single-trace bound, with `G(±k) = D^{k/4}`.
    pub fn g_single(&self, t: i64) -> f64 {
        if self.is_pm_k(t) {
            (self.cfg.d as f64).powf(self.cfg.k as f64 / 4.0)
        } else {
            self.g_general(t)
        }
    }

    /// `G` for the pair bound, refined when `[t₁+t₂]_k = 0`, `t₁+t₂ ≢ 0 mod q`.
    pub fn g_pair(&self, s: i64) -> f64 {
        let (k, q) = (self.cfg.k as i64, self.cfg.q as i64);
        if s.rem_euclid(k) == 0 && s.rem_euclid(q) != 0 {
            self.special_pair_bound()
        } else {
            self.g_general(s)
        }
    }

    fn special_pair_bound(&self) -> f64 {
        let d = self.cfg.d;
        if d == 2 || d % 2 == 1 {
            1.0
        } else {
            2f64.powi(self.cfg.k as i32)
        }
    }

    fn special_single_partial_bound(&self) -> f64 {
        if self.cfg.d.is_multiple_of(4) {
            (self.cfg.d as f64).powf(self.cfg.k as f64 / 4.0)
        } else {
            1.0
        }
    }

    /// Diagnostics row for `Tr B̂^t`.
    pub fn trace_row(&self, t: i64) -> TraceRow {
        let tr = self.trace_power(t);
        let k = self.cfg.k;
        let g = gcd(t.rem_euclid(k as i64) as u32, k);
        TraceRow {
            t,
            re: tr.re,
            im: tr.im,
            bound: (self.cfg.d as f64).powi(g as i32),
            gcd: g,
            eta: eta(t, k),
        }
    }

    fn pair_list(&self, sel: &PairSelection) -> Vec<(i64, i64)> {
        let q = self.cfg.q as i64;
        let k = self.cfg.k as i64;
        match sel {
            PairSelection::None => vec![],
            PairSelection::Explicit(v) => v.clone(),
            PairSelection::Families { random, seed } => {
                let mut v = Vec::new();
                for t1 in -q / 2..q / 2 {
                    for m in 0..4 {
                        let t2 = (m * k - t1 + q / 2).rem_euclid(q) - q / 2;
                        if !v.contains(&(t1, t2)) {
                            v.push((t1, t2));
                        }
                    }
                }
                let mut g = rng::stream(*seed, "trace-pairs", 0, 0);
                for _ in 0..*random {
                    v.push((g.gen_range(-q / 2..q / 2), g.gen_range(-q / 2..q / 2)));
                }
                v
            }
        }
    }

    /// Checks, for every `t₁` in one period, Lemma 4.1, the square partial-trace
    /// bounds at resolution `r` and the single trace bound, and for the
    /// selected pairs the pair partial-trace bounds and the pair trace bound.
    pub fn verify_trace_bounds(
        &self,
        qobs: &QuantizedObservable,
        r: u32,
        pairs: &PairSelection,
    ) -> Result<TraceBoundReport> {
        self.check_resolution(r)?;
        let (d, k, q) = (self.cfg.d as f64, self.cfg.k, self.cfg.q as i64);
        let n = self.cfg.n as f64;
        let a = &qobs.source;
        let sup = a.sup_bound();
        let lip = a.lipschitz_bound();
        let side = self.cfg.d.pow(r);
        let squares: Vec<Square> = (0..side)
            .flat_map(|i| (0..side).map(move |j| Square { r, i, j }))
            .collect();
        let mut rows = Vec::new();
        let mut push = |kind: &str, t1, t2, square, value: f64, bound: f64| {
            rows.push(TraceBoundRow {
                kind: kind.into(),
                t1,
                t2,
                square,
                value,
                bound,
                ok: value <= bound + TOL,
            })
        };
        for t in -q / 2..q / 2 {
            let tr = self.trace_power(t).norm();
            push("lemma4.1", t, None, None, tr, self.g_general(t));
            let parts = self.partial_traces_all(t, r)?;
            for (sq, v) in squares.iter().zip(&parts) {
                push("partial", t, None, Some((*sq, None)), v.norm(), self.g_general(t));
                if self.is_pm_k(t) {
                    push(
                        "partial-special",
                        t,
                        None,
                        Some((*sq, None)),
                        v.norm(),
                        self.special_single_partial_bound(),
                    );
                }
            }
            let tro = self.trace_obs(qobs, t).norm();
            let bound = if t.rem_euclid(q) == 0 {
                n * a.mean().abs()
            } else {
                sup * d.powi(2 * r as i32) * self.g_single(t) + lip * SQRT_2 * d.powf(k as f64 / 2.0 - r as f64)
            };
            push("trace-bound", t, None, None, tro, bound);
        }
        let list = self.pair_list(pairs);
        if !list.is_empty() {
            self.pair_guard()?;
        }
        for (t1, t2) in list {
            let s = t1 + t2;
            let parts = self.partial_pairs_all(t1, t2, r)?;
            let gp = self.g_general(s);
            let special = s.rem_euclid(k as i64) == 0 && s.rem_euclid(q) != 0;
            for (a1, s1) in squares.iter().enumerate() {
                for (a2, s2) in squares.iter().enumerate() {
                    let v = parts[a1][a2].norm();
                    push("pair-partial", t1, Some(t2), Some((*s1, Some(*s2))), v, gp);
                    if special {
                        push(
                            "pair-partial-special",
                            t1,
                            Some(t2),
                            Some((*s1, Some(*s2))),
                            v,
                            self.special_pair_bound(),
                        );
                    }
                }
            }
            let v = self.trace_obs_pair(qobs, t1, t2)?.norm();
            let bound = sup * sup * d.powi(4 * r as i32) * self.g_pair(s)
                + 2.0 * SQRT_2 * lip * sup * d.powf(k as f64 - r as f64);
            push("pair-bound", t1, Some(t2), None, v, bound);
        }
        let violations = rows.iter().filter(|r| !r.ok).count();
        let checked = rows.len();
        Ok(TraceBoundReport {
            r,
            rows,
            violations,
            checked,
        })
    }

    /// Averaged-sum identity at time `t`: the nonzero-pattern sum of rectangle
    /// averages against `N ∫ a · a∘H(t)`.
    pub fn intsum_row(&self, qobs: &QuantizedObservable, t: i64, reflection: Reflection) -> IntsumRow {
        let (d, k, ell) = (self.cfg.d, self.cfg.k, self.cfg.ell);
        let n = self.cfg.n as f64;
        let plan: EntryPlan = self.entry_plan(t);
        let s = ordered_sum(self.cfg.n, |c| {
            let mut acc = 0.0;
            self.for_each_in_row(&plan, c, |col, _| acc += qobs.averages[col]);
            C64::new(acc * qobs.averages[c], 0.0)
        })
        .re;
        let lhs = s / (d as f64).powi(eta(t, k) as i32);
        let a = &qobs.source;
        let desc = h_map(t, k, d);
        let corr = correlation(&a.centered(), d, desc.shift, desc.reflect.then_some(reflection));
        let rhs = n * (a.mean() * a.mean() + corr);
        let bound =
            2.0 * SQRT_2 * n * a.sup_bound() * a.lipschitz_bound() * (d as f64).powi(-(ell.min(k - ell) as i32));
        IntsumRow { t, lhs, rhs, bound }
    }
}
