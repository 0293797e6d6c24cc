use proptest::prelude::*;
use rand::Rng;
use wbl::classical::{classical_variance, correlation_series, Reflection};
use wbl::engine::{CoherentIndex, Engine, QuditState};
use wbl::observables::{fractal_partial_sum, FractalSampling, Observable};
use wbl::spectral::EigenDraw;
use wbl::stats::*;
use wbl::{rng, C64};

fn engine(d: u32, k: u32) -> Engine {
    Engine::from_dims(d, k, k / 2).unwrap()
}

#[test]
fn fluctuation_examples() {
    let e = engine(3, 5);
    let mut r = rng::stream(1, "fl", 0, 0);
    let v = e.sample_haar_vector(3, &mut r).unwrap();
    let c = Observable::constant(1.7);
    assert!(fluctuation(&e, &v, &e.quantize(&c), 1.7).unwrap().abs() < 1e-12);
    let a0 = Observable::cos(1, 1, 1.0).add(&Observable::sin(0, 2, 0.5));
    let qa = e.quantize(&a0);
    let sn = (e.n() as f64).sqrt();
    for i in [0usize, 17, 200] {
        let f = fluctuation(&e, &e.coherent_state(CoherentIndex(i)), &qa, 0.0).unwrap();
        assert!((f - sn * qa.averages[i]).abs() < 1e-10);
    }
}

#[test]
fn fluctuations_are_order_one() {
    let e = engine(3, 8);
    let obs = Observable::cos(1, 0, 1.0);
    let v = classical_variance(&obs, 3, Reflection::Walsh);
    let recs = sample_fluctuations(&e, &e.quantize(&obs), &spread_plan(e.period(), 1000), 2, 0.0).unwrap();
    let bound = 2.0 * (e.n() as f64).sqrt() * obs.sup_bound();
    for r in &recs {
        assert!(r.f.abs() <= 10.0 * v.sqrt());
        assert!(r.f.abs() <= bound);
        assert_eq!(r.f, r.f_tilde);
    }
}

#[test]
fn quantum_variance_basics() {
    let zeros: Vec<FluctuationRecord> = (0..5)
        .map(|j| FluctuationRecord {
            alpha: 0,
            draw: j,
            f: 0.0,
            f_tilde: 0.0,
            seed: 0,
        })
        .collect();
    assert_eq!(quantum_variance(&zeros), 0.0);
    assert_eq!(quantum_variance(&[]), 0.0);
    let plan = spread_plan(12, 40);
    assert_eq!(plan.iter().map(|p| p.1).sum::<u64>(), 40);
    assert_eq!(plan.len(), 12);
    assert_eq!(spread_plan(12, 5).len(), 5);
}

#[test]
fn d4_quantum_variance_includes_center() {
    let e = engine(4, 6);
    let obs = Observable::sin(2, 0, 1.0);
    let center = d4_center(&obs, 4).unwrap();
    let v = classical_variance(&obs, 4, Reflection::Walsh);
    let qobs = e.quantize(&obs);
    let recs = sample_fluctuations(&e, &qobs, &spread_plan(e.period(), 960), 3, center).unwrap();
    let qv = quantum_variance(&recs);
    let exact: f64 = (0..e.period())
        .map(|a| e.expected_second_moment(&qobs, a).unwrap())
        .sum::<f64>()
        / e.period() as f64;
    let f2: Vec<f64> = recs.iter().map(|r| r.f).collect();
    let (_, se) = moment_with_se(&f2, 2);
    assert!((qv - exact).abs() < 3.0 * se, "{qv} vs exact {exact}");
    assert!(
        (qv - (v + center * center)).abs() / (v + center * center) < 0.15,
        "{qv} vs {}",
        v + center * center
    );
    for r in &recs {
        let sign = if r.alpha % 2 == 0 { 1.0 } else { -1.0 };
        assert!((r.f_tilde - (r.f - sign * center)).abs() < 1e-15);
    }
}

#[test]
fn parity_split_recovers_d4_centers() {
    let e = engine(4, 6);
    let obs = Observable::sin(2, 0, 1.0);
    let center = d4_center(&obs, 4).unwrap();
    let recs = sample_fluctuations(&e, &e.quantize(&obs), &spread_plan(e.period(), 960), 4, center).unwrap();
    let ps = parity_split(&recs);
    assert_eq!(ps.even_n + ps.odd_n, 960);
    assert!((ps.even_mean - center).abs() < 3.0 * ps.even_se, "{ps:?}");
    assert!((ps.odd_mean + center).abs() < 3.0 * ps.odd_se, "{ps:?}");
    assert!(((ps.even_mean - ps.odd_mean) - 2.0 * center).abs() < 3.0 * ps.diff_se());
}

#[test]
fn target_moments_against_quadrature() {
    for t in [
        Target::Gaussian { mean: 0.3, var: 0.7 },
        Target::Mixture { center: 0.6, var: 0.9 },
    ] {
        let m = t.moments();
        assert_eq!(m[0], 1.0);
        let h = 1e-3;
        for p in 0..7 {
            let integral: f64 = (0..20_000)
                .map(|i| {
                    let x = -10.0 + (i as f64 + 0.5) * h;
                    x.powi(p) * t.pdf(x) * h
                })
                .sum();
            assert!(
                (integral - m[p as usize]).abs() < 1e-8,
                "{t:?} p={p}: {integral} vs {}",
                m[p as usize]
            );
        }
        let cdf_mid: f64 = (0..10_000).map(|i| t.pdf(-10.0 + (i as f64 + 0.5) * h) * h).sum();
        assert!((cdf_mid - t.cdf(0.0)).abs() < 1e-8);
    }
    let g = Target::Gaussian { mean: 0.0, var: 2.0 };
    let m = g.moments();
    assert!((m[4] - 3.0 * 4.0).abs() < 1e-12 && (m[6] - 15.0 * 8.0).abs() < 1e-12);
}

#[test]
fn empirical_test_self_consistency() {
    let mut r = rng::stream(5, "synthetic", 0, 0);
    let xs: Vec<f64> = (0..10_000)
        .map(|_| 0.2 + 0.8 * r.sample::<f64, _>(rand_distr::StandardNormal))
        .collect();
    let s = empirical_test(&xs, Target::Gaussian { mean: 0.2, var: 0.64 }).unwrap();
    assert_eq!(s.moments[0], 1.0);
    assert!(s.ks_scaled < 2.0);
    assert!(s.z_scores[1..5].iter().all(|&z| z < 4.0), "{:?}", s.z_scores);
    let wrong = empirical_test(&xs, Target::Gaussian { mean: 0.0, var: 0.64 }).unwrap();
    assert!(wrong.ks_scaled > 5.0);
    assert!(empirical_test(&xs[..50], Target::Gaussian { mean: 0.0, var: 1.0 }).is_err());
}

#[test]
fn histogram_counts() {
    let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 / 10.0).collect();
    let h = histogram(&xs, 17, Some(Target::Gaussian { mean: 5.0, var: 4.0 }));
    assert_eq!(h.counts.iter().sum::<u64>(), 1000);
    assert_eq!(h.edges.len(), 18);
    assert_eq!(h.target_density.len(), 17);
    assert!(histogram(&[], 4, None).counts.iter().all(|&c| c == 0));
}

#[test]
fn offdiag_examples() {
    let e = engine(3, 6);
    let obs = Observable::cos(1, 0, 1.0).add(&Observable::cos(0, 1, 0.5));
    let q0 = e.quantize(&obs.centered());
    let series = correlation_series(&obs, 3, Reflection::Walsh);
    let q = e.period();
    let n = 1000;
    let same = offdiag_sample(&e, &q0, 2, 2, n, 6, series.tilde_variance(q, 2, 2)).unwrap();
    assert!((series.tilde_variance(q, 2, 2) - series.variance()).abs() < 1e-12);
    let zs: Vec<C64> = same.iter().map(|r| r.scaled.unwrap()).collect();
    let s = OffDiagSummary::from_values(&zs);
    assert!(s.mean.norm() < 3.0 / (n as f64).sqrt());
    assert!(s.mean_sq.norm() < 3.0 / (n as f64).sqrt());

    let raw = offdiag_sample(&e, &q0, 2, 5, 300, 7, 0.0).unwrap();
    assert!(raw.iter().all(|r| r.scaled.is_none() && r.alpha == 2 && r.beta == 5));
    let vals: Vec<C64> = raw.iter().map(|r| r.value).collect();
    let exact = e.expected_cross_second_moment(&q0, 2, 5).unwrap();
    let s = OffDiagSummary::from_values(&vals);
    assert!(
        (s.mean_abs_sq - exact).abs() < 3.0 * s.se_abs_sq,
        "{} vs {exact}",
        s.mean_abs_sq
    );
    assert!((s.var_re - s.var_im).abs() < 0.25 * exact);
}

#[test]
fn que_examples() {
    let e = engine(3, 6);
    let draws: Vec<Vec<QuditState>> = (0..e.period())
        .map(|a| EigenDraw::sample(&e, a, 4, 8, 0).unwrap().vectors)
        .collect();
    let c = e.quantize(&Observable::constant(0.8));
    let rep = que_max_check(&e, &c, &draws, 0.25, 500, 1);
    assert!(rep.max_offdiag < 1e-12 && rep.max_diag < 1e-12 && rep.pass);
    assert_eq!(rep.vectors, 4 * e.period() as usize);
    assert_eq!(rep.pairs_checked, 6 * e.period() as u64 + 500);
    let a = e.quantize(&Observable::cos(1, 0, 1.0));
    let loose = que_max_check(&e, &a, &draws, 0.4999, 500, 1);
    assert!(loose.pass && loose.bound <= 1.0);
    let tight = que_max_check(&e, &a, &draws, 0.25, 500, 1);
    assert!((tight.margin - (tight.bound - tight.max_diag.max(tight.max_offdiag))).abs() < 1e-15);
}

#[test]
fn average_identities() {
    let a0 = Observable::cos(1, 0, 1.0).add(&Observable::sin(1, 1, 0.5));
    let e = engine(3, 6);
    let rep = average_identities_check(&e, &e.quantize(&a0), Reflection::Walsh).unwrap();
    assert!(rep.trace_mean.abs() < 1e-9);
    assert!((rep.variance_sum - rep.variance_target).abs() <= rep.variance_bound);

    let s = Observable::sin(2, 0, 1.0).add(&Observable::cos(1, 2, 0.3));
    let e4 = Engine::from_dims(4, 8, 4).unwrap();
    let rep = average_identities_check(&e4, &e4.quantize(&s), Reflection::Walsh).unwrap();
    let sk = fractal_partial_sum(&s, 8, 4, FractalSampling::RectangleAverage);
    assert!(
        (rep.reflected_trace - sk).abs() < 1e-10,
        "{} vs {sk}",
        rep.reflected_trace
    );
    let q4 = e4.quantize(&s);
    let mut brute = 0.0;
    for c in 0..e4.n() {
        let ds = CoherentIndex(c).decode(e4.config());
        if ds.iter().all(|&x| x == 0 || x == 2) {
            brute += q4.averages[c];
        }
    }
    assert!((brute / 2f64.powi(8) - sk).abs() < 1e-12);

    let e5 = Engine::from_dims(5, 6, 3).unwrap();
    let rep = average_identities_check(&e5, &e5.quantize(&a0), Reflection::Walsh).unwrap();
    assert!(rep.reflected_trace.abs() <= rep.reflected_bound);
    assert!((rep.reflected_bound - 64.0 * a0.sup_bound() / (e5.n() as f64).sqrt()).abs() < 1e-12);
}

#[test]
fn sampling_is_independent_of_thread_count() {
    let e = engine(3, 5);
    let qa = e.quantize(&Observable::cos(1, 1, 1.0));
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| sample_fluctuations(&e, &qa, &spread_plan(e.period(), 60), 9, 0.0).unwrap())
    };
    let (a, b) = (run(1), run(3));
    assert_eq!(a, b);
    let mut ca = Vec::new();
    let mut cb = Vec::new();
    write_fluctuations_csv(&mut ca, &e, &a).unwrap();
    write_fluctuations_csv(&mut cb, &e, &b).unwrap();
    assert_eq!(ca, cb);
    assert!(String::from_utf8(ca)
        .unwrap()
        .starts_with("D,k,ell,alpha,draw,F,F_tilde,seed\n"));
}

#[test]
fn offdiag_csv_columns() {
    let recs = [OffDiagRecord {
        alpha: 1,
        beta: 2,
        pair: 0,
        value: C64::new(0.5, -0.25),
        scaled: None,
    }];
    let mut buf = Vec::new();
    write_offdiag_csv(&mut buf, &recs).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "alpha,beta,re,im,re_scaled,im_scaled");
    assert!(lines[1].ends_with(",,"));
    let pairs = distinct_pairs(8, 10, 3);
    assert_eq!(pairs.len(), 10);
    assert!(pairs.iter().all(|(a, b)| a != b && *a < 8 && *b < 8));
    assert_eq!(pairs, distinct_pairs(8, 10, 3));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn scaling_equivariance(c in -3.0f64..3.0, alpha in 0u32..20, seed in 0u64..500) {
        let e = engine(3, 5);
        let obs = Observable::cos(1, 0, 1.0).add(&Observable::sin(2, 1, 0.4));
        let qa = e.quantize(&obs);
        let qc = e.quantize(&obs.scale(c));
        let a = sample_fluctuations(&e, &qa, &[(alpha, 2)], seed, 0.0).unwrap();
        let b = sample_fluctuations(&e, &qc, &[(alpha, 2)], seed, 0.0).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((y.f - c * x.f).abs() <= 1e-12 * (1.0 + x.f.abs()));
        }
    }

    #[test]
    fn diagonal_elements_are_real(alpha in 0u32..20, seed in 0u64..500) {
        let e = engine(3, 5);
        let qa = e.quantize(&Observable::cos(1, 2, 1.0).add(&Observable::sin(3, 1, 0.7)));
        let mut r = rng::stream(seed, "real-diag", alpha as u64, 0);
        let v = e.sample_haar_vector(alpha, &mut r).unwrap();
        prop_assert!(e.matrix_element(&qa, &v, &v).im.abs() < 1e-10);
    }
}
