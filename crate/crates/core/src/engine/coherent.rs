use serde::{Deserialize, Serialize};

use super::{Engine, EngineConfig, QuditState};
use crate::classical::SymbolicRectangle;
use crate::C64;

/// Label of a `(k,ℓ)`-coherent state: `c = Σ_j ε_j D^{j−1}`, so the position
/// digits `ε_ℓ…ε₁` form the low-order part and the momentum digits
/// `ε_k…ε_{ℓ+1}` the high-order part.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CoherentIndex(pub usize);

impl CoherentIndex {
    /// From `ε₁ … ε_k`.
    pub fn encode(cfg: &EngineConfig, eps: &[u32]) -> Self {
        debug_assert_eq!(eps.len(), cfg.k as usize);
        Self(eps.iter().rev().fold(0usize, |a, &x| a * cfg.d as usize + x as usize))
    }

    /// `ε₁ … ε_k`.
    pub fn decode(self, cfg: &EngineConfig) -> Vec<u32> {
        let d = cfg.d as usize;
        let mut c = self.0;
        (0..cfg.k)
            .map(|_| {
                let x = (c % d) as u32;
                c /= d;
                x
            })
            .collect()
    }

    pub fn rectangle(self, cfg: &EngineConfig) -> SymbolicRectangle {
        SymbolicRectangle::from_eps(cfg.d, cfg.ell, &self.decode(cfg))
    }
}

impl Engine {
    /// Computational index of the tensor basis vector underlying coherent state `c`:
    /// `(c mod D^ℓ)·D^{k−ℓ} + ⌊c / D^ℓ⌋`.
    pub fn slot_index(&self, c: usize) -> usize {
        let lo = self.pow[self.cfg.ell as usize];
        (c % lo) * self.pow[(self.cfg.k - self.cfg.ell) as usize] + c / lo
    }

    /// Slot digits `x_1 … x_k` of coherent index `c` (slot 1 first).
    pub fn slot_digits(&self, c: usize, out: &mut [u32]) {
        let d = self.cfg.d as usize;
        let mut i = self.slot_index(c);
        for s in (0..self.cfg.k as usize).rev() {
            out[s] = (i % d) as u32;
            i /= d;
        }
    }

    /// Coherent index from slot digits.
    pub fn coherent_from_slots(&self, digits: &[u32]) -> usize {
        digits.iter().zip(&self.coh_weight).map(|(&x, &w)| x as usize * w).sum()
    }

    /// `|ε'·ε⟩ = |ε_ℓ⟩⊗…⊗|ε₁⟩⊗F_D†|ε_k⟩⊗…⊗F_D†|ε_{ℓ+1}⟩`.
    pub fn coherent_state(&self, c: CoherentIndex) -> QuditState {
        let mut s = QuditState::basis(&self.cfg, self.slot_index(c.0));
        self.apply_factorwise_pub(&mut s.amps, 1);
        s
    }

    fn apply_factorwise_pub(&self, amps: &mut [C64], gamma: u8) {
        let mat = self.fpow[gamma as usize].clone();
        for s in self.cfg.ell + 1..=self.cfg.k {
            self.apply_slot_op(amps, s, &mat);
        }
    }

    /// Coefficients `⟨ε'·ε|v⟩`, indexed by coherent index.
    pub fn to_coherent(&self, state: &QuditState) -> QuditState {
        let mut w = state.amps.clone();
        self.apply_factorwise_pub(&mut w, 3);
        let amps = (0..self.cfg.n).map(|c| w[self.slot_index(c)]).collect();
        QuditState { amps, ..*state }
    }

    /// Inverse of [`Engine::to_coherent`].
    pub fn from_coherent(&self, coeffs: &QuditState) -> QuditState {
        let mut v = vec![C64::new(0.0, 0.0); self.cfg.n];
        for (c, &a) in coeffs.amps.iter().enumerate() {
            v[self.slot_index(c)] = a;
        }
        self.apply_factorwise_pub(&mut v, 1);
        QuditState { amps: v, ..*coeffs }
    }
}
