use rand::Rng;
use wbl::engine::{Engine, QuditState};
use wbl::observables::Observable;
use wbl::spectral::{EigenDraw, HaarMoments};
use wbl::stats;
use wbl::{rng, Error, C64};

fn engine(d: u32, k: u32) -> Engine {
    Engine::from_dims(d, k, k / 2).unwrap()
}

fn gaussian_unit(e: &Engine, seed: u64, label: &str) -> QuditState {
    let mut r = rng::stream(seed, label, 0, 0);
    let mut v = QuditState::gaussian(e.config(), &mut r);
    v.normalize();
    v
}

#[test]
fn projector_identities() {
    for (d, k) in [(2u32, 8u32), (3, 6)] {
        let e = engine(d, k);
        let v = gaussian_unit(&e, 1, "proj");
        let parts = e.project_all(&v);
        let mut sum = e.zeros();
        for (a, p) in parts.iter().enumerate() {
            let a = a as u32;
            assert!(e.project(a, p).distance(p) < 1e-10);
            assert!(e.project(a, &v).distance(p) < 1e-10);
            let mut lam = p.clone();
            lam.scale(e.eigenvalue(a));
            assert!(e.apply_baker(p, 1).distance(&lam) < 1e-9);
            sum.axpy(C64::new(1.0, 0.0), p);
        }
        assert!(sum.distance(&v) < 1e-10);
    }
}

#[test]
fn dimensions() {
    for (d, k) in [(2u32, 8u32), (3, 6), (4, 5), (5, 4)] {
        let e = engine(d, k);
        let dims = e.eigenspace_dims().unwrap();
        assert_eq!(dims.iter().sum::<usize>(), e.n());
    }
    let e = engine(3, 8);
    let nq = e.n() as f64 / e.period() as f64;
    for (a, &dim) in e.eigenspace_dims().unwrap().iter().enumerate() {
        assert!((dim as f64) >= 0.8 * nq && (dim as f64) <= 1.2 * nq, "α={a}: {dim}");
    }
}

/// Rank of a set of vectors by Gram-Schmidt with a relative threshold.
fn rank(vs: &[QuditState]) -> usize {
    let mut basis: Vec<QuditState> = Vec::new();
    for v in vs {
        let scale = v.norm();
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let c = b.inner(&w);
                w.axpy(-c, b);
            }
        }
        if w.norm() > 1e-8 * scale.max(1e-300) {
            w.normalize();
            basis.push(w);
        }
    }
    basis.len()
}

#[test]
fn dimension_equals_rank_of_projected_probes() {
    for (d, k) in [(3u32, 4u32), (2, 8), (5, 3)] {
        let e = engine(d, k);
        for a in 0..e.period() {
            let probes: Vec<QuditState> = (0..64)
                .map(|i| e.project(a, &gaussian_unit(&e, 1000 + i, "rank")))
                .collect();
            let dim = e.eigenspace_dim(a).unwrap();
            assert_eq!(rank(&probes), dim.min(64), "D={d} k={k} α={a}");
        }
    }
}

#[test]
fn haar_vectors() {
    let e = engine(3, 6);
    let a = 5;
    let mut r = rng::stream(2, "haar-test", 0, 0);
    let v = e.sample_haar_vector(a, &mut r).unwrap();
    assert!((v.norm() - 1.0).abs() < 1e-12);
    let mut lam = v.clone();
    lam.scale(e.eigenvalue(a));
    assert!(e.apply_baker(&v, 1).distance(&lam) < 1e-9);

    let d = e.eigenspace_dim(a).unwrap() as f64;
    let ov: Vec<f64> = (0..200)
        .map(|i| {
            let mut r1 = rng::stream(3, "pair-a", i, 0);
            let mut r2 = rng::stream(3, "pair-b", i, 0);
            let u = e.sample_haar_vector(a, &mut r1).unwrap();
            let w = e.sample_haar_vector(a, &mut r2).unwrap();
            u.inner(&w).norm_sqr()
        })
        .collect();
    let (m, se) = stats::moment_with_se(&ov, 1);
    assert!((m - 1.0 / d).abs() < 5.0 * se, "{m} vs {}", 1.0 / d);
}

#[test]
fn orthonormal_sets() {
    let e = engine(3, 6);
    let a = 2;
    let draw = EigenDraw::sample(&e, a, 12, 4, 0).unwrap();
    assert!(draw.orthonormality_error() < 1e-10);
    assert!(draw.eigen_residual(&e) < 1e-9);
    let single = EigenDraw::sample(&e, a, 1, 4, 1).unwrap();
    assert!((single.vectors[0].norm() - 1.0).abs() < 1e-12);
    let dim = e.eigenspace_dim(a).unwrap();
    let mut r = rng::stream(5, "too-many", 0, 0);
    assert!(e.sample_orthonormal_set(a, dim + 1, &mut r).is_err());
    let full = e.sample_orthonormal_set(a, dim, &mut r).unwrap();
    assert_eq!(full.len(), dim);
}

#[test]
fn rotation_invariance_of_draws() {
    let e = engine(3, 5);
    let a = 3;
    let basis = e.eigenspace_basis(a, 9).unwrap();
    let dim = basis.len();
    let mut r = rng::stream(6, "rotation", 0, 0);
    let phases: Vec<C64> = (0..dim)
        .map(|_| C64::from_polar(1.0, r.gen::<f64>() * std::f64::consts::TAU))
        .collect();
    let rotate = |v: &QuditState| -> QuditState {
        let coords: Vec<C64> = basis.iter().map(|b| b.inner(v)).collect();
        let mut out = e.zeros();
        for j in 0..dim {
            let src = (j + 1) % dim;
            out.axpy(phases[j] * coords[src], &basis[j]);
        }
        out
    };
    let w = &basis[0];
    let mut plain = Vec::new();
    let mut rotated = Vec::new();
    for i in 0..300 {
        let mut rr = rng::stream(7, "rot-draw", i, 0);
        let set = e.sample_orthonormal_set(a, 2, &mut rr).unwrap();
        let rs: Vec<QuditState> = set.iter().map(rotate).collect();
        assert!((rs[0].inner(&rs[1]) - set[0].inner(&set[1])).norm() < 1e-12);
        plain.push(w.inner(&set[0]).norm_sqr());
        rotated.push(w.inner(&rs[0]).norm_sqr());
    }
    let (m1, s1) = stats::moment_with_se(&plain, 1);
    let (m2, s2) = stats::moment_with_se(&rotated, 1);
    assert!((m1 - m2).abs() < 3.0 * (s1 * s1 + s2 * s2).sqrt());
    assert!((m1 - 1.0 / dim as f64).abs() < 3.0 * s1);
}

#[test]
fn haar_moments_from_power_sums_against_monte_carlo() {
    let lam = [0.9, -0.4, 0.3, 0.1, -0.7];
    let d = lam.len();
    let ps = [1, 2, 3, 4].map(|j| lam.iter().map(|l: &f64| l.powi(j)).sum::<f64>());
    let hm = HaarMoments::from_power_sums(d, ps);
    let mut r = rng::stream(8, "haar-mc", 0, 0);
    let n = 200_000;
    let mut acc = [0.0f64; 4];
    let mut acc2 = [0.0f64; 4];
    for _ in 0..n {
        let g: Vec<C64> = (0..d)
            .map(|_| {
                C64::new(
                    r.sample(rand_distr::StandardNormal),
                    r.sample(rand_distr::StandardNormal),
                )
            })
            .collect();
        let norm: f64 = g.iter().map(|z| z.norm_sqr()).sum();
        let x: f64 = g.iter().zip(&lam).map(|(z, l)| z.norm_sqr() * l).sum::<f64>() / norm;
        for p in 0..4 {
            acc[p] += x.powi(p as i32 + 1);
            acc2[p] += x.powi(2 * p as i32 + 2);
        }
    }
    for p in 0..4 {
        let m = acc[p] / n as f64;
        let se = ((acc2[p] / n as f64 - m * m) / n as f64).sqrt();
        assert!(
            (m - hm.moments[p]).abs() < 4.0 * se,
            "p={}: {m} vs {}",
            p + 1,
            hm.moments[p]
        );
    }
}

#[test]
fn trace_and_basis_routes_agree() {
    let e = engine(3, 5);
    let a = Observable::cos(1, 0, 1.0).add(&Observable::sin(1, 1, 0.5));
    let qa = e.quantize(&a);
    for alpha in [0u32, 1, 7] {
        let basis = e.eigenspace_basis(alpha, 3).unwrap();
        let hm = HaarMoments::from_basis(&e, &qa, &basis);
        assert!((hm.power_sums[0] - e.projected_trace(&qa, alpha)).abs() < 1e-10);
        assert!((hm.power_sums[1] - e.projected_pair_trace(&qa, alpha, alpha).unwrap()).abs() < 1e-10);
        let scaled = hm.scaled(e.n());
        assert!((scaled[0] - e.expected_mean(&qa, alpha).unwrap()).abs() < 1e-10);
        assert!((scaled[1] - e.expected_second_moment(&qa, alpha).unwrap()).abs() < 1e-10);
        let q = e.period() as i64;
        let direct: C64 = (0..q)
            .flat_map(|t1| (0..q).map(move |t2| (t1, t2)))
            .map(|(t1, t2)| {
                let ph = C64::from_polar(
                    1.0,
                    -2.0 * std::f64::consts::PI * (alpha as f64) * (t1 + t2) as f64 / q as f64,
                );
                ph * e.trace_obs_pair(&qa, t1, t2).unwrap()
            })
            .sum::<C64>()
            / (q * q) as f64;
        assert!((direct.re - hm.power_sums[1]).abs() < 1e-9);
    }
}

#[test]
fn expected_moments_examples() {
    let e = engine(3, 6);
    let z = e.quantize(&Observable::zero());
    assert_eq!(e.expected_mean(&z, 1).unwrap(), 0.0);
    assert_eq!(e.expected_second_moment(&z, 1).unwrap(), 0.0);

    let c = e.quantize(&Observable::cos(1, 0, 1.0));
    let alpha = 4;
    let exact = e.expected_second_moment(&c, alpha).unwrap();
    let recs = stats::sample_fluctuations(&e, &c, &[(alpha, 500)], 10, 0.0).unwrap();
    let f2: Vec<f64> = recs.iter().map(|r| r.f).collect();
    let (m, se) = stats::moment_with_se(&f2, 2);
    assert!((m - exact).abs() < 3.0 * se, "{m}±{se} vs {exact}");

    let e4 = engine(4, 6);
    let s = e4.quantize(&Observable::sin(2, 0, 1.0));
    for alpha in 0..e4.period() {
        let mean = e4.expected_mean(&s, alpha).unwrap();
        let sign = if alpha % 2 == 0 { 1.0 } else { -1.0 };
        assert!(mean * sign > 0.0, "α={alpha}: {mean}");
    }
}

#[test]
fn projected_traces_flatten_with_k() {
    let a0 = Observable::cos(1, 0, 1.0).add(&Observable::cos(1, 1, 0.5));
    let worst: Vec<f64> = [4u32, 6, 8]
        .iter()
        .map(|&k| {
            let e = engine(3, k);
            let qa = e.quantize(&a0);
            let scale = e.period() as f64 / (e.n() as f64).sqrt();
            (0..e.period())
                .map(|a| (scale * e.projected_trace(&qa, a)).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    assert!(worst[1] < worst[0] && worst[2] < worst[1], "{worst:?}");
}

#[test]
fn draw_persistence() {
    let e = engine(3, 5);
    let dir = tempfile::tempdir().unwrap();
    let draw = EigenDraw::sample(&e, 6, 3, 11, 0).unwrap();
    let manifest = draw.save(e.config(), dir.path(), "draw").unwrap();
    assert_eq!(manifest.files.len(), 3);
    let (m2, back) = EigenDraw::load(dir.path(), "draw").unwrap();
    assert_eq!(m2.alpha, 6);
    assert_eq!(back.vectors, draw.vectors);
    assert!(matches!(EigenDraw::load(dir.path(), "missing"), Err(Error::Io(_))));
}
