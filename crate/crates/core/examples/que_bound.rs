//! Largest deviation |⟨ψ|Op(a)|φ⟩ − δ_ψφ ∫a| over many orthonormal eigenvectors
//! against N^(−1/2+δ), for a few k.
//!
//! cargo run --release --example que_bound

use wbl::engine::Engine;
use wbl::observables::Observable;
use wbl::spectral::EigenDraw;
use wbl::stats::que_max_check;

fn main() -> wbl::Result<()> {
    let obs = Observable::cos(1, 0, 1.0);
    println!(" k      N   vectors     pairs   max diag  max offdiag   N^(-1/4)  margin");
    for k in [4u32, 5, 6, 7] {
        let e = Engine::from_dims(3, k, k / 2)?;
        let mut draws = Vec::new();
        for alpha in 0..e.period() {
            let n = e.eigenspace_dim(alpha)?.min(20);
            if n > 0 {
                draws.push(EigenDraw::sample(&e, alpha, n, 1, 0)?.vectors);
            }
        }
        let rep = que_max_check(&e, &e.quantize(&obs), &draws, 0.25, 5000, 1);
        println!(
            "{k:2} {:6}  {:8}  {:8}   {:8.4}   {:9.4}   {:8.4}  {:+.4}",
            e.n(),
            rep.vectors,
            rep.pairs_checked,
            rep.max_diag,
            rep.max_offdiag,
            rep.bound,
            rep.margin
        );
    }
    Ok(())
}
