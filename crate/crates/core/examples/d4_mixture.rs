//! D = 4: eigenvectors with even and odd α fluctuate around ±⟨a⟩, where ⟨a⟩
//! is the fractal average, so the pooled law is a two-Gaussian mixture.
//!
//! cargo run --release --example d4_mixture

use wbl::classical::{classical_variance, Reflection};
use wbl::engine::Engine;
use wbl::observables::{fractal_average, Observable};
use wbl::stats::{empirical_test, parity_split, quantum_variance, sample_fluctuations, spread_plan, Target};

fn main() -> wbl::Result<()> {
    let obs = Observable::sin(2, 0, 1.0);
    let center = fractal_average(&obs.centered(), 1e-12)?.value;
    let v = classical_variance(&obs, 4, Reflection::Walsh);
    println!("a = sin 4πq: ⟨a⟩ = {center:.5}, V(a) = {v:.5}");

    for k in [5u32, 6, 7] {
        let e = Engine::from_dims(4, k, k / 2)?;
        let recs = sample_fluctuations(&e, &e.quantize(&obs), &spread_plan(e.period(), 800), 3, center)?;
        let ps = parity_split(&recs);
        let fs: Vec<f64> = recs.iter().map(|r| r.f).collect();
        let mix = empirical_test(&fs, Target::Mixture { center, var: v })?;
        let gauss = empirical_test(
            &fs,
            Target::Gaussian {
                mean: 0.0,
                var: v + center * center,
            },
        )?;
        println!(
            "k = {k}: even mean {:+.3} ± {:.3}, odd mean {:+.3} ± {:.3}, QV {:.3} (V + ⟨a⟩² = {:.3}), √n·KS mixture {:.2} / single Gaussian {:.2}",
            ps.even_mean,
            ps.even_se,
            ps.odd_mean,
            ps.odd_se,
            quantum_variance(&recs),
            v + center * center,
            mix.ks_scaled,
            gauss.ks_scaled
        );
    }
    Ok(())
}
