//! Which reflection enters the variance: the half-period power B̂^(2k) acts
//! digit-wise as x → −x mod D, not x → D−1−x. The eigenspace-averaged pair
//! traces (1/N) Σ_t Tr(Op B̂^t Op B̂^−t) converge to the Walsh value.
//!
//! cargo run --release --example reflection_comparison

use wbl::classical::{classical_variance, Reflection};
use wbl::engine::Engine;
use wbl::observables::Observable;

fn main() -> wbl::Result<()> {
    for d in [2u32, 3, 5] {
        let walsh: Vec<u32> = (0..d).map(|x| Reflection::Walsh.digit(d, x)).collect();
        let torus: Vec<u32> = (0..d).map(|x| Reflection::Torus.digit(d, x)).collect();
        println!(
            "D = {d}: digits 0..{} map to {walsh:?} (Walsh) and {torus:?} (torus)",
            d - 1
        );
    }
    let obs = Observable::cos(1, 0, 1.0).centered();
    for d in [2u32, 3] {
        let (vw, vt) = (
            classical_variance(&obs, d, Reflection::Walsh),
            classical_variance(&obs, d, Reflection::Torus),
        );
        println!("\nD = {d}: V Walsh {vw:.4}, V torus {vt:.4}");
        for k in [3u32, 4, 5, 6] {
            let e = Engine::from_dims(d, k, k / 2)?;
            let qobs = e.quantize(&obs);
            let q = e.period() as i64;
            let sum: f64 = (0..q)
                .map(|t| e.trace_obs_pair(&qobs, t, -t).map(|z| z.re))
                .sum::<wbl::Result<f64>>()?;
            println!("  k = {k}: (1/N) Σ_t Tr(Op B̂^t Op B̂^-t) = {:.4}", sum / e.n() as f64);
        }
    }
    Ok(())
}
