//! Trace diagnostics: Tr B̂^t against its bound, Tr(Op(a) B̂^t), and the
//! averaged-sum identity linking matrix entries to classical correlations.
//!
//! cargo run --release --example traces

use wbl::classical::Reflection;
use wbl::engine::Engine;
use wbl::observables::Observable;

fn main() -> wbl::Result<()> {
    let e = Engine::from_dims(3, 6, 3)?;
    let obs = Observable::cos(1, 0, 1.0).add(&Observable::sin(1, 1, 0.5));
    let qobs = e.quantize(&obs);
    let q = e.period() as i64;

    println!("   t  gcd  η    |Tr B̂^t|    bound     |Tr(Op B̂^t)|   intsum lhs    rhs       bound");
    for t in -q / 2..q / 2 {
        let row = e.trace_row(t);
        let to = e.trace_obs(&qobs, t);
        let is = e.intsum_row(&qobs, t, Reflection::Walsh);
        println!(
            "{t:4}  {:3}  {:2}  {:10.4}  {:9.4}  {:12.4}   {:10.4}  {:10.4}  {:8.2}{}",
            row.gcd,
            row.eta,
            row.re.hypot(row.im),
            row.bound,
            to.norm(),
            is.lhs,
            is.rhs,
            is.bound,
            if is.holds() { "" } else { "  !" }
        );
    }
    Ok(())
}
