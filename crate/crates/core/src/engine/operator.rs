use super::{Engine, QuditState};
use crate::C64;

impl Engine {
    /// Applies a `D×D` matrix (row-major) to tensor slot `s ∈ [1, k]` in place.
    pub fn apply_slot_op(&self, amps: &mut [C64], slot: u32, mat: &[C64]) {
        let d = self.cfg.d as usize;
        let stride = self.pow[(self.cfg.k - slot) as usize];
        let block = stride * d;
        let mut buf = vec![C64::new(0.0, 0.0); d];
        for base in (0..amps.len()).step_by(block) {
            for inner in 0..stride {
                let at = base + inner;
                for (x, b) in buf.iter_mut().enumerate() {
                    *b = amps[at + x * stride];
                }
                for y in 0..d {
                    let row = &mat[y * d..(y + 1) * d];
                    amps[at + y * stride] = row.iter().zip(&buf).map(|(m, v)| m * v).sum();
                }
            }
        }
    }

    /// `(F_D†)^γ` on every slot in `range`; `γ = 2` is a permutation.
    fn apply_factorwise(&self, amps: &mut [C64], gamma: u8, slots: std::ops::RangeInclusive<u32>) {
        let g = gamma % 4;
        if g == 0 || (g == 2 && self.cfg.d == 2) {
            return;
        }
        if g == 2 {
            for s in slots {
                self.negate_slot(amps, s);
            }
            return;
        }
        let mat = self.fpow[g as usize].clone();
        for s in slots {
            self.apply_slot_op(amps, s, &mat);
        }
    }

    /// `|x⟩ ↦ |−x mod D⟩` on one slot.
    fn negate_slot(&self, amps: &mut [C64], slot: u32) {
        let d = self.cfg.d as usize;
        let stride = self.pow[(self.cfg.k - slot) as usize];
        let block = stride * d;
        for base in (0..amps.len()).step_by(block) {
            for inner in 0..stride {
                for x in 1..=(d - 1) / 2 {
                    amps.swap(base + inner + x * stride, base + inner + (d - x) * stride);
                }
            }
        }
    }

    /// One step: `new[rest·D + y] = Σ_x F†[y][x] · old[x·D^{k−1} + rest]`.
    pub fn step_forward(&self, src: &[C64], dst: &mut [C64]) {
        let d = self.cfg.d as usize;
        let hi = self.pow[(self.cfg.k - 1) as usize];
        let f = &self.fpow[1];
        for rest in 0..hi {
            for y in 0..d {
                let row = &f[y * d..(y + 1) * d];
                let mut acc = C64::new(0.0, 0.0);
                for (x, m) in row.iter().enumerate() {
                    acc += m * src[x * hi + rest];
                }
                dst[rest * d + y] = acc;
            }
        }
    }

    /// Inverse step: `new[x·D^{k−1} + rest] = Σ_y F[x][y] · old[rest·D + y]`.
    pub fn step_backward(&self, src: &[C64], dst: &mut [C64]) {
        let d = self.cfg.d as usize;
        let hi = self.pow[(self.cfg.k - 1) as usize];
        let f = &self.fpow[3];
        for rest in 0..hi {
            let col = &src[rest * d..(rest + 1) * d];
            for x in 0..d {
                let row = &f[x * d..(x + 1) * d];
                dst[x * hi + rest] = row.iter().zip(col).map(|(m, v)| m * v).sum();
            }
        }
    }

    /// `B̂_k^t` in place; `scratch` must have length `N`.
    ///
    /// `t` is reduced mod `q`, split as `t = m·k + r`, and `B̂^{mk} = ((F_D†)^m)^{⊗k}`
    /// is applied factor-wise; the remaining `r` steps go forward, or `k − r`
    /// steps go backward from `(m+1)·k`, whichever is shorter.
    pub fn apply_baker_in_place(&self, amps: &mut Vec<C64>, scratch: &mut Vec<C64>, t: i64) {
        let k = self.cfg.k as i64;
        let tm = t.rem_euclid(self.cfg.q as i64);
        let (m, r) = (tm / k, tm % k);
        let cost = |g: i64, steps: i64| -> i64 {
            let g = g.rem_euclid(4);
            let pass = if g == 0 || (g == 2 && self.cfg.d == 2) { 0 } else { k };
            pass + steps
        };
        let (gamma, steps) = if cost(m, r) <= cost(m + 1, r - k) {
            (m, r)
        } else {
            (m + 1, r - k)
        };
        self.apply_factorwise(amps, gamma.rem_euclid(4) as u8, 1..=self.cfg.k);
        scratch.resize(amps.len(), C64::new(0.0, 0.0));
        for _ in 0..steps.unsigned_abs() {
            if steps > 0 {
                self.step_forward(amps, scratch);
            } else {
                self.step_backward(amps, scratch);
            }
            std::mem::swap(amps, scratch);
        }
    }

    /// `B̂_k^t |state⟩`.
    pub fn apply_baker(&self, state: &QuditState, t: i64) -> QuditState {
        let mut amps = state.amps.clone();
        let mut scratch = Vec::with_capacity(amps.len());
        self.apply_baker_in_place(&mut amps, &mut scratch, t);
        QuditState { amps, ..*state }
    }
}
