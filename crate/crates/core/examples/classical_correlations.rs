//! Classical side: correlation series C_B, C_BR, the variance V(a) under both
//! reflections, the phase-twisted Ṽ table and, for D = 4, the fractal average.
//!
//! cargo run --release --example classical_correlations

use wbl::classical::{correlation_series, Reflection};
use wbl::cli::classical_report;
use wbl::observables::Observable;

fn main() -> wbl::Result<()> {
    let obs = Observable::cos(1, 0, 1.0).add(&Observable::cos(0, 1, 0.5));
    for d in [2, 3, 5] {
        for refl in [Reflection::Walsh, Reflection::Torus] {
            let s = correlation_series(&obs, d, refl);
            println!(
                "D = {d}  {:6}  V = {:.6}  t* = {:2}  C_B(0..4) = {:?}",
                refl.name(),
                s.variance(),
                s.t_star,
                (0..4).map(|t| format!("{:+.4}", s.c_b(t))).collect::<Vec<_>>()
            );
        }
    }

    let rep = classical_report(&obs, 3, 2, Reflection::Walsh)?;
    println!("\nṼ(α, β) for D = 3, k = 2 (q = {}), signed form:", rep.q);
    for row in &rep.tilde_variance {
        println!(
            "  {}",
            row.iter().map(|x| format!("{x:6.3}")).collect::<Vec<_>>().join(" ")
        );
    }

    let s4 = Observable::sin(2, 0, 1.0);
    let r4 = classical_report(&s4, 4, 3, Reflection::Walsh)?;
    println!(
        "\nD = 4, a = sin 4πq: V = {:.6}, fractal average ⟨a⟩ = {:.6}",
        r4.variance,
        r4.fractal_average.unwrap()
    );
    Ok(())
}
