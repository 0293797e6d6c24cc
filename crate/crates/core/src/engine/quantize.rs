use rayon::prelude::*;

use super::{CoherentIndex, Engine, EngineConfig, QuditState};
use crate::observables::Observable;
use crate::C64;

/// `Op_{k,ℓ}(a) = Σ_ε ⨍_{[ε]} a · |ε⟩⟨ε|`, stored by its diagonal in the coherent basis.
#[derive(Clone, Debug)]
pub struct QuantizedObservable {
    pub config: EngineConfig,
    pub source: Observable,
    /// Rectangle averages indexed by [`CoherentIndex`].
    pub averages: Vec<f64>,
}

impl QuantizedObservable {
    pub fn mean_of_averages(&self) -> f64 {
        self.averages.iter().sum::<f64>() / self.averages.len() as f64
    }

    pub fn max_abs_average(&self) -> f64 {
        self.averages.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    /// Same operator for `c·a`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            config: self.config,
            source: self.source.scale(c),
            averages: self.averages.iter().map(|a| a * c).collect(),
        }
    }
}

impl Engine {
    pub fn quantize(&self, obs: &Observable) -> QuantizedObservable {
        let averages = (0..self.cfg.n)
            .into_par_iter()
            .map(|c| obs.rectangle_average(&CoherentIndex(c).rectangle(&self.cfg)))
            .collect();
        QuantizedObservable {
            config: self.cfg,
            source: obs.clone(),
            averages,
        }
    }

    /// `Op(a)|v⟩`: to the coherent basis, multiply, and back.
    pub fn apply_quantized(&self, qobs: &QuantizedObservable, state: &QuditState) -> QuditState {
        let mut w = self.to_coherent(state);
        w.amps.iter_mut().zip(&qobs.averages).for_each(|(a, &m)| *a *= m);
        self.from_coherent(&w)
    }

    /// `⟨v|Op(a)|v⟩ = Σ_ε avg_ε |⟨ε|v⟩|²` (real by construction).
    pub fn expectation(&self, qobs: &QuantizedObservable, state: &QuditState) -> f64 {
        let w = self.to_coherent(state);
        w.amps.iter().zip(&qobs.averages).map(|(a, m)| a.norm_sqr() * m).sum()
    }

    /// `⟨u|Op(a)|v⟩`.
    pub fn matrix_element(&self, qobs: &QuantizedObservable, u: &QuditState, v: &QuditState) -> C64 {
        let wu = self.to_coherent(u);
        let wv = self.to_coherent(v);
        wu.amps
            .iter()
            .zip(&wv.amps)
            .zip(&qobs.averages)
            .map(|((a, b), m)| a.conj() * b * *m)
            .sum()
    }
}
