use proptest::prelude::*;
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use wbl::classical::*;
use wbl::engine::{CoherentIndex, EngineConfig};
use wbl::observables::Observable;
use wbl::rng;

fn close(a: TorusPoint, b: TorusPoint, tol: f64) -> bool {
    a.dist(&b) < tol
}

#[test]
fn baker_examples() {
    let x = TorusPoint::new(0.3, 0.8);
    assert_eq!(baker_step(x, 3, 0), x);
    let y = baker_step(TorusPoint::new(0.25, 0.5), 2, 1);
    assert!(close(y, TorusPoint::new(0.5, 0.25), 1e-15));
    for t in [-7, -1, 1, 5] {
        assert!(close(baker_step(baker_step(x, 3, t), 3, -t), x, 1e-12));
    }
}

#[test]
fn baker_matches_defining_formula() {
    let mut r = rng::stream(1, "baker-formula", 0, 0);
    for d in 2..=5u32 {
        for _ in 0..100 {
            let (q, p): (f64, f64) = (r.gen(), r.gen());
            let y = baker_step(TorusPoint::new(q, p), d, 1);
            let fl = (d as f64 * q).floor();
            let want = TorusPoint::new(d as f64 * q - fl, (p + fl) / d as f64);
            assert!(close(y, want, 1e-12));
        }
    }
}

#[test]
fn reflect_examples() {
    assert_eq!(reflect(TorusPoint::new(0.0, 0.0)), TorusPoint::new(0.0, 0.0));
    assert!(close(
        reflect(TorusPoint::new(0.25, 0.75)),
        TorusPoint::new(0.75, 0.25),
        1e-15
    ));
    let x = TorusPoint::new(0.123, 0.456);
    assert!(close(reflect(reflect(x)), x, 1e-15));
    assert!(close(walsh_reflect(walsh_reflect(x, 3), 3), x, 1e-12));
    assert!(close(walsh_reflect(x, 2), x, 1e-12));
}

#[test]
fn h_map_regimes() {
    for (d, k) in [(3u32, 5u32), (2, 6), (4, 4)] {
        for t in 0..k as i64 {
            let h = h_map(t, k, d);
            assert_eq!((h.regime, h.shift, h.reflect), (HRegime::Forward, t, false));
        }
        let q = period(d, k) as i64;
        let id = h_map(q, k, d);
        assert_eq!((id.regime, id.shift, id.reflect), (HRegime::Forward, 0, false));
        for t in -3 * q..3 * q {
            let h = h_map(t, k, d);
            assert_eq!(h.shift.unsigned_abs() as u32, eta(t, k), "D={d} k={k} t={t}");
            assert_eq!(h, h_map(t + q, k, d));
        }
    }
    let r = h_map(10, 5, 3);
    assert_eq!((r.regime, r.shift, r.reflect), (HRegime::ForwardReflected, 0, true));
}

#[test]
fn h_apply_is_periodic() {
    let x = TorusPoint::new(0.271_828, 0.314_159);
    for (d, k) in [(3u32, 4u32), (2, 5)] {
        let q = period(d, k) as i64;
        for t in -q..q {
            for refl in [Reflection::Torus, Reflection::Walsh] {
                let a = h_apply(&h_map(t, k, d), x, d, refl);
                let b = h_apply(&h_map(t + q, k, d), x, d, refl);
                assert_eq!(a, b);
            }
        }
    }
}

/// Mean and standard error of `a₀(x) a₀(B^t σ x)` over uniform points.
fn mc_correlation(a: &Observable, d: u32, t: i64, refl: Option<Reflection>, n: usize, seed: u64) -> (f64, f64) {
    let mut r = rng::stream(seed, "mc-corr", d as u64, t as u64);
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..n {
        let x = TorusPoint::new(r.gen(), r.gen());
        let y = baker_step(refl.map_or(x, |rf| rf.apply(x, d)), d, t);
        let v = a.eval(x) * a.eval(y);
        s += v;
        s2 += v * v;
    }
    let m = s / n as f64;
    (m, ((s2 / n as f64 - m * m) / n as f64).sqrt())
}

#[test]
fn correlation_examples() {
    let c = Observable::cos(1, 0, 1.0);
    assert!((correlation(&c, 3, 0, None) - 0.5).abs() < 1e-15);
    let (mc, _) = mc_correlation(&c, 3, 0, None, 200_000, 7);
    assert!((mc - 0.5).abs() < 5e-3);
    assert_eq!(correlation(&c, 2, 1, None), 0.0);
    let (mc1, _) = mc_correlation(&c, 2, 1, None, 1_000_000, 8);
    assert!(mc1.abs() < 2e-3);
}

#[test]
fn correlation_matches_monte_carlo() {
    let a = Observable::cos(1, 0, 1.0).add(&Observable::cos(0, 1, 0.5));
    for d in [2u32, 3] {
        for refl in [None, Some(Reflection::Torus), Some(Reflection::Walsh)] {
            for t in -4..=4i64 {
                let exact = correlation(&a, d, t, refl);
                let (mc, se) = mc_correlation(&a, d, t, refl, 40_000, 11);
                assert!(
                    (exact - mc).abs() <= 3.0 * se.max(1e-4),
                    "D={d} t={t} {refl:?}: {exact} vs {mc}±{se}"
                );
            }
        }
    }
}

#[test]
fn correlations_are_even_in_t() {
    let a = Observable::cos(1, 2, 1.0).add(&Observable::sin(3, 1, 0.3));
    for refl in [None, Some(Reflection::Walsh), Some(Reflection::Torus)] {
        for t in 1..8 {
            assert!((correlation(&a, 3, t, refl) - correlation(&a, 3, -t, refl)).abs() < 1e-13);
        }
    }
}

#[test]
fn variance_examples() {
    let c = Observable::cos(1, 0, 1.0);
    assert_eq!(classical_variance(&Observable::zero(), 3, Reflection::Torus), 0.0);
    assert!((classical_variance(&c, 3, Reflection::Torus) - 1.0).abs() < 1e-12);
    assert!((classical_variance(&c, 2, Reflection::Torus) - 0.5).abs() < 1e-12);
    assert!((classical_variance(&c, 2, Reflection::Walsh) - 0.5).abs() < 1e-12);
    let (cb0, _) = mc_correlation(&c, 3, 0, None, 100_000, 3);
    let (cbr0, _) = mc_correlation(&c, 3, 0, Some(Reflection::Torus), 100_000, 4);
    assert!((cb0 + cbr0 - 1.0).abs() < 1e-2);
}

#[test]
fn walsh_variance_sums_monte_carlo_correlations() {
    let c = Observable::cos(1, 0, 1.0);
    let s = correlation_series(&c, 3, Reflection::Walsh);
    let v = s.variance();
    assert!(v > 0.3 && v < 0.35, "{v}");
    for t in 0..4 {
        let (mc, se) = mc_correlation(&c, 3, t, Some(Reflection::Walsh), 40_000, 21);
        assert!((s.c_br(t) - mc).abs() <= 3.0 * se.max(1e-4), "t={t}");
    }
}

#[test]
fn tilde_variance_examples() {
    let a = Observable::cos(1, 0, 1.0).add(&Observable::cos(0, 1, 0.5));
    for refl in [Reflection::Torus, Reflection::Walsh] {
        let v = classical_variance(&a, 3, refl);
        for alpha in [0, 3, 11] {
            assert!((tilde_variance(&a, 3, 6, alpha, alpha, refl).unwrap() - v).abs() < 1e-12);
            assert!((f_a(&a, 3, 6, alpha, alpha, refl).unwrap() - 1.0).abs() < 1e-12);
        }
        let s = correlation_series(&a, 3, refl);
        for (x, y) in [(0, 1), (2, 7), (5, 20)] {
            assert!((s.tilde_variance(24, x, y) - s.tilde_variance(24, y, x)).abs() < 1e-14);
            assert!(
                (s.tilde_variance(24, x, y) - s.tilde_variance_unsigned(24, x, y)).abs() < 1e-14 || (x + y) % 2 == 1
            );
        }
    }
    let c = Observable::cos(1, 0, 1.0);
    let torus = correlation_series(&c, 3, Reflection::Torus);
    for (x, y) in [(0, 1), (3, 9), (2, 4)] {
        assert!((torus.tilde_variance_unsigned(20, x, y) - 1.0).abs() < 1e-12);
    }
    assert!(torus.tilde_variance(20, 0, 1).abs() < 1e-12);
    assert!((torus.tilde_variance(20, 2, 4) - 1.0).abs() < 1e-12);
    assert!(f_a(&Observable::zero(), 3, 4, 0, 1, Reflection::Walsh).is_err());
}

#[test]
fn tilde_average_over_beta() {
    let a = Observable::cos(1, 1, 1.0).add(&Observable::sin(2, 0, 0.4));
    let s = correlation_series(&a, 3, Reflection::Walsh);
    let q = 32u32;
    let avg: f64 = (0..q).map(|b| s.tilde_variance(q, 0, b)).sum::<f64>() / q as f64;
    let tm = s.t_max as i64;
    let qi = q as i64;
    let direct: f64 = s.c_b(0)
        + 2.0
            * (1..)
                .map(|m| m * qi)
                .take_while(|&t| t <= tm)
                .map(|t| s.c_b(t))
                .sum::<f64>()
        + 2.0
            * (0..)
                .map(|m| qi / 2 + m * qi)
                .take_while(|&t| t <= tm)
                .map(|t| s.c_br(t))
                .sum::<f64>();
    assert!((avg - direct).abs() < 1e-12, "{avg} vs {direct}");
}

#[test]
fn footnote_factorization() {
    for (d, k, ell) in [(2u32, 5u32, 2u32), (3, 3, 1)] {
        let cfg = EngineConfig::new(d, k, ell).unwrap();
        let cyl: Vec<Cylinder> = (0..cfg.n)
            .map(|c| CoherentIndex(c).rectangle(&cfg).cylinder())
            .collect();
        let area = (d as f64).powi(-(k as i32));
        for t in [k as i64, k as i64 + 1, -(k as i64), -(k as i64) - 2] {
            for a in &cyl {
                for b in &cyl {
                    assert_eq!(a.intersection_area(&b.image(t, None)), area * area);
                }
            }
        }
    }
}

#[test]
fn cylinder_intersection_matches_sampling() {
    let cfg = EngineConfig::new(3, 3, 1).unwrap();
    let mut r = rng::stream(2, "cyl", 0, 0);
    let n = 100_000;
    let pts: Vec<TorusPoint> = (0..n).map(|_| TorusPoint::new(r.gen(), r.gen())).collect();
    let mut nonzero = 0;
    for (a, b, t) in [(5usize, 17usize, 1i64), (5, 16, 1), (2, 9, -1), (0, 0, 2), (7, 21, 2)] {
        let ra = CoherentIndex(a).rectangle(&cfg);
        let rb = CoherentIndex(b).rectangle(&cfg);
        let exact = ra.cylinder().intersection_area(&rb.cylinder().image(t, None));
        let hits = pts
            .iter()
            .filter(|&&x| ra.contains(x) && rb.contains(baker_step(x, 3, -t)))
            .count();
        let p = hits as f64 / n as f64;
        assert!(
            (p - exact).abs() <= 4.0 * (exact.max(1.0 / n as f64) / n as f64).sqrt(),
            "{a},{b},{t}: {p} vs {exact}"
        );
        nonzero += usize::from(exact > 0.0);
    }
    assert!(nonzero >= 2);
}

#[test]
fn baker_preserves_measure() {
    let cells = 16usize;
    let chi = ChiSquared::new((cells * cells - 1) as f64).unwrap();
    for (d, k) in [(2u32, 4u32), (3, 3)] {
        for t in [-3 * k as i64, -1, 1, 2 * k as i64, 3 * k as i64] {
            let mut r = rng::stream(5, "measure", d as u64, t as u64);
            let n = 100_000;
            let mut counts = vec![0usize; cells * cells];
            for _ in 0..n {
                let y = baker_step(TorusPoint::new(r.gen(), r.gen()), d, t);
                counts[(y.q * cells as f64) as usize * cells + (y.p * cells as f64) as usize] += 1;
            }
            let e = n as f64 / (cells * cells) as f64;
            let stat: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
            assert!(1.0 - chi.cdf(stat) > 1e-3, "D={d} t={t}: χ²={stat}");
        }
    }
}

#[test]
fn series_csv_columns() {
    let s = correlation_series(&Observable::cos(1, 0, 1.0), 3, Reflection::Walsh);
    let mut buf = Vec::new();
    s.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,C_B,C_BR"));
    assert_eq!(lines.count(), 2 * s.t_max as usize + 1);
}

proptest! {
    #[test]
    fn symbolic_and_float_steps_agree(d in 2u32..6, q in prop::collection::vec(0u32..6, 0..8), p in prop::collection::vec(0u32..6, 0..8), t in -6i64..6) {
        let sp = SymbolicPoint { d, q: q.iter().map(|x| x % d).collect(), p: p.iter().map(|x| x % d).collect() };
        prop_assert!(sp.baker_step(t).to_point().dist(&baker_step(sp.to_point(), d, t)) < 1e-12);
    }

    #[test]
    fn reflections_are_involutions(d in 2u32..7, x in 0u32..7) {
        let x = x % d;
        for r in [Reflection::Torus, Reflection::Walsh] {
            prop_assert_eq!(r.digit(d, r.digit(d, x)), x);
        }
    }

    #[test]
    fn eta_is_tent(t in -200i64..200, k in 1u32..20) {
        let e = eta(t, k);
        prop_assert!(e <= k);
        prop_assert_eq!(e, eta(-t, k));
        prop_assert_eq!(e, eta(t + 2 * k as i64, k));
        prop_assert!((eta(t + 1, k) as i64 - e as i64).abs() == 1);
    }
}
