//! Diagonal fluctuations F = √N (⟨ψ|Op(a)|ψ⟩ − ∫a) of Haar-random
//! eigenvectors, compared with the Gaussian of variance V(a).
//!
//! cargo run --release --example fluctuations -- [k] [draws]

use wbl::classical::{classical_variance, Reflection};
use wbl::engine::Engine;
use wbl::observables::Observable;
use wbl::stats::{empirical_test, histogram, quantum_variance, sample_fluctuations, spread_plan, Target};

fn main() -> wbl::Result<()> {
    let args: Vec<u64> = std::env::args().skip(1).filter_map(|s| s.parse().ok()).collect();
    let k = args.first().copied().unwrap_or(7) as u32;
    let draws = args.get(1).copied().unwrap_or(600);
    let obs = Observable::cos(1, 0, 1.0);
    let e = Engine::from_dims(3, k, k / 2)?;
    let v = classical_variance(&obs, 3, Reflection::Walsh);

    let recs = sample_fluctuations(&e, &e.quantize(&obs), &spread_plan(e.period(), draws), 7, 0.0)?;
    let fs: Vec<f64> = recs.iter().map(|r| r.f).collect();
    println!("D = 3, k = {k}, {} draws over {} eigenspaces", fs.len(), e.period());
    println!(
        "quantum variance {:.4}   V(a) Walsh {:.4}   V(a) torus {:.4}",
        quantum_variance(&recs),
        v,
        classical_variance(&obs, 3, Reflection::Torus)
    );

    let target = Target::Gaussian { mean: 0.0, var: v };
    let s = empirical_test(&fs, target)?;
    println!("\n p   empirical   target    z");
    for p in 1..=6 {
        println!(
            "{p:2}   {:9.4}  {:8.4}  {:5.2}",
            s.moments[p], s.target_moments[p], s.z_scores[p]
        );
    }
    println!("KS = {:.4}, √n·KS = {:.3}", s.ks, s.ks_scaled);

    let h = histogram(&fs, 21, Some(target));
    let width = h.edges[1] - h.edges[0];
    let n = fs.len() as f64;
    println!("\n     F  count  expected");
    for ((c, x), dens) in h.counts.iter().zip(&h.centers).zip(&h.target_density) {
        println!(
            "{x:+6.2}  {c:5}  {:8.1}  {}",
            dens * n * width,
            "#".repeat((*c as f64 * 200.0 / n) as usize)
        );
    }
    Ok(())
}
