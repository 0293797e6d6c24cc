//! Off-diagonal matrix elements √N ⟨ψ|Op(a₀)|φ⟩ between Haar eigenvectors,
//! rescaled by √Ṽ(α, β), against the standard complex Gaussian.
//!
//! cargo run --release --example offdiag_eth

use wbl::classical::{correlation_series, Reflection};
use wbl::engine::Engine;
use wbl::observables::Observable;
use wbl::stats::{offdiag_sample, OffDiagSummary};

fn main() -> wbl::Result<()> {
    let obs = Observable::cos(1, 0, 1.0).add(&Observable::cos(0, 1, 0.5));
    let series = correlation_series(&obs, 3, Reflection::Walsh);
    let e = Engine::from_dims(3, 7, 3)?;
    let q0 = e.quantize(&obs.centered());
    let q = e.period();
    println!("D = 3, k = 7, V = {:.4}", series.variance());
    println!("  α   β    Ṽ signed  Ṽ literal  finite-N   E|z|²    E z     E z²");
    for (alpha, beta) in [(0, 0), (1, 1), (5, 5), (1, 2), (1, 4), (3, 10)] {
        let tv = series.tilde_variance(q, alpha, beta);
        let exact = if alpha == beta {
            e.expected_same_space_offdiag(&q0, alpha)?
        } else {
            e.expected_cross_second_moment(&q0, alpha, beta)?
        };
        let recs = offdiag_sample(&e, &q0, alpha, beta, 400, 5, tv)?;
        let zs: Vec<_> = recs.iter().filter_map(|r| r.scaled).collect();
        let s = OffDiagSummary::from_values(&zs);
        println!(
            "{alpha:3} {beta:3}   {tv:8.4}  {:9.4}  {exact:8.4}   {:5.3}   {:5.3}   {:5.3}",
            series.tilde_variance_unsigned(q, alpha, beta),
            s.mean_abs_sq,
            s.mean.norm(),
            s.mean_sq.norm()
        );
    }
    Ok(())
}
