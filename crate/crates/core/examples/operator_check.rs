//! Applies the quantized baker map to a random state and checks unitarity,
//! the period q, the Gauss-sum traces and the sparsity pattern of B̂^t.
//!
//! cargo run --release --example operator_check -- [D] [k]

use wbl::classical::{eta, Reflection};
use wbl::engine::{Engine, QuditState};
use wbl::rng;

fn main() -> wbl::Result<()> {
    let args: Vec<u32> = std::env::args().skip(1).filter_map(|s| s.parse().ok()).collect();
    let (d, k) = (args.first().copied().unwrap_or(3), args.get(1).copied().unwrap_or(5));
    let e = Engine::from_dims(d, k, k / 2)?;
    let q = e.period() as i64;
    println!("D = {d}, k = {k}, N = {}, period q = {q}", e.n());

    let mut r = rng::stream(1, "operator-check-example", 0, 0);
    let mut v = QuditState::gaussian(e.config(), &mut r);
    v.normalize();
    println!("‖B̂v‖ − 1        = {:+.2e}", e.apply_baker(&v, 1).norm() - 1.0);
    println!("‖B̂^q v − v‖     = {:.2e}", e.apply_baker(&v, q).distance(&v));
    println!("‖B̂^(q/2) v − v‖ = {:.3}", e.apply_baker(&v, q / 2).distance(&v));

    println!("\n   t   Tr B̂^t                  |Tr|       bound");
    for t in [1, k as i64, 2 * k as i64, 3 * k as i64, q / 2, q] {
        let row = e.trace_row(t);
        println!(
            "{t:4}   {:+.5} {:+.5}i   {:9.4}  {:9.4}",
            row.re,
            row.im,
            row.re.hypot(row.im),
            row.bound
        );
    }

    if e.n() <= 4096 {
        println!("\n   t  η(t)  nonzeros   diagonal  |entry|   pattern matches classical (Walsh)");
        for t in 0..=2 * k as i64 {
            let p = e.nonzero_pattern(t, 1e-9, false);
            let m = e.pattern_matches_classical(t, Reflection::Walsh).matches;
            println!(
                "{t:4}  {:4}  {:8}  {:9}  {:.4}    {m}",
                eta(t, k),
                p.total_count,
                p.diag_count,
                p.max_modulus
            );
        }
    }
    Ok(())
}
