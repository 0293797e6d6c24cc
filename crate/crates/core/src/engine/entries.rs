use serde::{Deserialize, Serialize};

use super::{CoherentIndex, Engine};
use crate::classical::{h_map, Reflection};
use crate::C64;

/// Slot pairing and Fourier powers of `⟨row|B̂^t|col⟩` in the coherent basis.
///
/// After `t` steps, output slot `s` holds input slot `σ(s) = ((s−1+t) mod k)+1`,
/// which wrapped `w(σ) = #{m ∈ [1,t] : m ≡ σ mod k}` times. Including the
/// coherent-basis transforms, the factor in slot `s` is
/// `⟨y_s|(F_D†)^{γ_s}|x_{σ(s)}⟩` with `γ_s = w(σ) + [σ > ℓ] − [s > ℓ] mod 4`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EntryPlan {
    pub t_mod: u32,
    /// `σ(s) − 1` for `s = 1..=k` (zero-based).
    pub sigma: Vec<usize>,
    pub gamma: Vec<u8>,
}

/// Nonzero counts of `B̂^t` in the coherent basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternCounts {
    pub t: i64,
    pub diag_count: usize,
    pub total_count: usize,
    pub min_modulus: f64,
    pub max_modulus: f64,
    /// `(row, col)` pairs, when requested.
    pub indices: Option<Vec<(usize, usize)>>,
}

/// Comparison of the quantum nonzero set with the classical intersection set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternReport {
    pub t: i64,
    pub reflection: Reflection,
    pub quantum_count: usize,
    pub classical_count: usize,
    /// Pairs `(row δ, col ε)` nonzero quantum-mechanically but classically disjoint.
    pub quantum_only: Vec<(usize, usize)>,
    /// Pairs classically intersecting but quantum-mechanically zero.
    pub classical_only: Vec<(usize, usize)>,
    pub matches: bool,
}

const DISCREPANCY_LIMIT: usize = 16;

impl Engine {
    pub fn entry_plan(&self, t: i64) -> EntryPlan {
        let k = self.cfg.k as usize;
        let ell = self.cfg.ell as usize;
        let tm = t.rem_euclid(self.cfg.q as i64) as usize;
        let mut sigma = Vec::with_capacity(k);
        let mut gamma = Vec::with_capacity(k);
        for s in 1..=k {
            let sg = (s - 1 + tm) % k + 1;
            let wraps = if tm >= sg { (tm - sg) / k + 1 } else { 0 };
            let g = (wraps as i64 + (sg > ell) as i64 - (s > ell) as i64).rem_euclid(4);
            sigma.push(sg - 1);
            gamma.push(g as u8);
        }
        EntryPlan {
            t_mod: tm as u32,
            sigma,
            gamma,
        }
    }

    /// Entry from precomputed slot digits of row and column.
    pub fn entry_digits(&self, plan: &EntryPlan, row: &[u32], col: &[u32]) -> C64 {
        let mut acc = C64::new(1.0, 0.0);
        for s in 0..row.len() {
            let f = self.fourier_entry(plan.gamma[s], row[s], col[plan.sigma[s]]);
            if f.re == 0.0 && f.im == 0.0 {
                return f;
            }
            acc *= f;
        }
        acc
    }

    /// `⟨row|B̂_k^t|col⟩` for coherent indices, in `O(k)`.
    pub fn entry(&self, t: i64, row: CoherentIndex, col: CoherentIndex) -> C64 {
        let plan = self.entry_plan(t);
        let k = self.cfg.k as usize;
        let mut rd = vec![0; k];
        let mut cd = vec![0; k];
        self.slot_digits(row.0, &mut rd);
        self.slot_digits(col.0, &mut cd);
        self.entry_digits(&plan, &rd, &cd)
    }

    /// Visits every column `c` with `⟨row|B̂^t|c⟩ ≠ 0` as `f(c, value)`.
    pub fn for_each_in_row<F: FnMut(usize, C64)>(&self, plan: &EntryPlan, row: usize, mut f: F) {
        let k = self.cfg.k as usize;
        let d = self.cfg.d;
        let mut y = vec![0u32; k];
        self.slot_digits(row, &mut y);
        let mut base = 0;
        let mut table = Vec::new();
        for ((&j, &gamma), &ys) in plan.sigma.iter().zip(&plan.gamma).zip(&y) {
            let w = self.coh_weight[j];
            match gamma {
                0 => base += w * ys as usize,
                2 => base += w * ((d - ys) % d) as usize,
                g => table.extend((0..d).map(|v| (w * v as usize, self.fourier_entry(g, ys, v)))),
            }
        }
        self.enumerate(&table, 0, base, C64::new(1.0, 0.0), &mut f);
    }

    /// Visits every row `r` with `⟨r|B̂^t|col⟩ ≠ 0` as `f(r, value)`.
    pub fn for_each_in_col<F: FnMut(usize, C64)>(&self, plan: &EntryPlan, col: usize, mut f: F) {
        let k = self.cfg.k as usize;
        let d = self.cfg.d;
        let mut x = vec![0u32; k];
        self.slot_digits(col, &mut x);
        let mut base = 0;
        let mut table = Vec::new();
        for s in 0..k {
            let xs = x[plan.sigma[s]];
            let w = self.coh_weight[s];
            match plan.gamma[s] {
                0 => base += w * xs as usize,
                2 => base += w * ((d - xs) % d) as usize,
                g => table.extend((0..d).map(|v| (w * v as usize, self.fourier_entry(g, v, xs)))),
            }
        }
        self.enumerate(&table, 0, base, C64::new(1.0, 0.0), &mut f);
    }

    /// Depth-first product over free digits; `table` holds `D` (index step, factor) pairs per level.
    fn enumerate<F: FnMut(usize, C64)>(&self, table: &[(usize, C64)], level: usize, idx: usize, val: C64, f: &mut F) {
        let d = self.cfg.d as usize;
        if level * d == table.len() {
            f(idx, val);
            return;
        }
        for &(w, v) in &table[level * d..(level + 1) * d] {
            self.enumerate(table, level + 1, idx + w, val * v, f);
        }
    }

    /// Counts `|entry| > threshold` by full `N²` enumeration for `N ≤ 4096`,
    /// otherwise over the structural support from [`Engine::for_each_in_row`].
    pub fn nonzero_pattern(&self, t: i64, threshold: f64, keep_indices: bool) -> PatternCounts {
        let n = self.cfg.n;
        let k = self.cfg.k as usize;
        let plan = self.entry_plan(t);
        let mut out = PatternCounts {
            t,
            diag_count: 0,
            total_count: 0,
            min_modulus: f64::INFINITY,
            max_modulus: 0.0,
            indices: keep_indices.then(Vec::new),
        };
        let record = |r: usize, c: usize, v: C64, out: &mut PatternCounts| {
            let m = v.norm();
            if m > threshold {
                out.total_count += 1;
                out.diag_count += (r == c) as usize;
                out.min_modulus = out.min_modulus.min(m);
                out.max_modulus = out.max_modulus.max(m);
                if let Some(ix) = out.indices.as_mut() {
                    ix.push((r, c));
                }
            }
        };
        if n <= 4096 {
            let digits: Vec<Vec<u32>> = (0..n)
                .map(|c| {
                    let mut v = vec![0; k];
                    self.slot_digits(c, &mut v);
                    v
                })
                .collect();
            for r in 0..n {
                for c in 0..n {
                    let v = self.entry_digits(&plan, &digits[r], &digits[c]);
                    record(r, c, v, &mut out);
                }
            }
        } else {
            for r in 0..n {
                let mut hits = Vec::new();
                self.for_each_in_row(&plan, r, |c, v| hits.push((c, v)));
                for (c, v) in hits {
                    record(r, c, v, &mut out);
                }
            }
        }
        out
    }

    /// Compares `{(δ, ε) : ⟨δ|B̂^t|ε⟩ ≠ 0}` with `{(δ, ε) : H(t)[ε] ∩ [δ] ≠ ∅}`,
    /// the latter by digit alignment of cylinders. Full `N²` enumeration.
    pub fn pattern_matches_classical(&self, t: i64, reflection: Reflection) -> PatternReport {
        let n = self.cfg.n;
        let desc = h_map(t, self.cfg.k, self.cfg.d);
        let cyl: Vec<_> = (0..n)
            .map(|c| CoherentIndex(c).rectangle(&self.cfg).cylinder())
            .collect();
        let images: Vec<_> = cyl
            .iter()
            .map(|c| c.image(desc.shift, desc.reflect.then_some(reflection)))
            .collect();
        let q = self.nonzero_pattern(t, 1e-10, true);
        let mut qset = vec![false; n * n];
        for &(r, c) in q.indices.as_ref().expect("indices kept") {
            qset[r * n + c] = true;
        }
        let mut rep = PatternReport {
            t,
            reflection,
            quantum_count: q.total_count,
            classical_count: 0,
            quantum_only: vec![],
            classical_only: vec![],
            matches: true,
        };
        for col in 0..n {
            for row in 0..n {
                let cl = images[col].intersects(&cyl[row]);
                rep.classical_count += cl as usize;
                let qu = qset[row * n + col];
                if qu != cl {
                    rep.matches = false;
                    let list = if qu {
                        &mut rep.quantum_only
                    } else {
                        &mut rep.classical_only
                    };
                    if list.len() < DISCREPANCY_LIMIT {
                        list.push((row, col));
                    }
                }
            }
        }
        rep
    }
}
