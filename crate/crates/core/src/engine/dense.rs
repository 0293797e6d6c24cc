//! Dense assembly for small `N`, used only to cross-check the matrix-free path.

use super::{Engine, QuditState};
use crate::{Error, Result, C64};

/// Largest `N` that may be assembled densely.
pub const DENSE_GUARD: usize = 1024;

/// Row-major square complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    pub n: usize,
    pub data: Vec<C64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![C64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.n + j] = v;
    }

    pub fn mul(&self, other: &DenseMatrix) -> DenseMatrix {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for l in 0..n {
                let a = self.data[i * n + l];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[l * n + j];
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> DenseMatrix {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j].conj();
            }
        }
        out
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &DenseMatrix) -> DenseMatrix {
        let (a, b) = (self.n, other.n);
        let mut out = Self::zeros(a * b);
        for i in 0..a {
            for j in 0..a {
                let s = self.get(i, j);
                for k in 0..b {
                    for l in 0..b {
                        out.set(i * b + k, j * b + l, s * other.get(k, l));
                    }
                }
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.data[i * self.n + j] * v[j]).sum())
            .collect()
    }

    pub fn trace(&self) -> C64 {
        (0..self.n).map(|i| self.data[i * self.n + i]).sum()
    }
}

fn guard(n: usize) -> Result<()> {
    if n > DENSE_GUARD {
        return Err(Error::SizeGuard(format!(
            "dense assembly needs N ≤ {DENSE_GUARD}, got {n}"
        )));
    }
    Ok(())
}

/// Unitary DFT `F_D[x][y] = e(−xy/D)/√D`.
pub fn fourier(d: u32) -> DenseMatrix {
    let n = d as usize;
    let mut m = DenseMatrix::zeros(n);
    for x in 0..n {
        for y in 0..n {
            let th = -2.0 * std::f64::consts::PI * ((x * y) % n) as f64 / n as f64;
            m.set(x, y, C64::from_polar(1.0 / (n as f64).sqrt(), th));
        }
    }
    m
}

/// Walsh transform on `D^k` points: `W(v₁⊗…⊗v_k) = F_D v_k ⊗ … ⊗ F_D v₁`.
pub fn walsh_transform(d: u32, k: u32) -> Result<DenseMatrix> {
    let n = (d as usize).pow(k);
    guard(n)?;
    let f = fourier(d);
    let mut fk = DenseMatrix::identity(1);
    for _ in 0..k {
        fk = fk.kron(&f);
    }
    let mut rev = DenseMatrix::zeros(n);
    for idx in 0..n {
        let mut x = idx;
        let mut r = 0;
        for _ in 0..k {
            r = r * d as usize + x % d as usize;
            x /= d as usize;
        }
        rev.set(r, idx, C64::new(1.0, 0.0));
    }
    Ok(fk.mul(&rev))
}

/// Position-basis block form `W_{D^k}^{-1} · diag(W_{D^{k−1}}, …, W_{D^{k−1}})`.
pub fn block_form(d: u32, k: u32) -> Result<DenseMatrix> {
    let wk = walsh_transform(d, k)?;
    let inner = if k == 1 {
        DenseMatrix::identity(1)
    } else {
        walsh_transform(d, k - 1)?
    };
    let blocks = DenseMatrix::identity(d as usize).kron(&inner);
    Ok(wk.adjoint().mul(&blocks))
}

impl Engine {
    /// Dense `B̂^t`, column by column from the matrix-free operator.
    pub fn assemble(&self, t: i64) -> Result<DenseMatrix> {
        let n = self.cfg.n;
        guard(n)?;
        let mut m = DenseMatrix::zeros(n);
        for j in 0..n {
            let col = self.apply_baker(&QuditState::basis(&self.cfg, j), t);
            for i in 0..n {
                m.set(i, j, col.amps[i]);
            }
        }
        Ok(m)
    }
}
