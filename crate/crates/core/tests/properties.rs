mod common;

use linconv::algebra::{Algebra, AlgebraElement};
use linconv::checker::{classify_point, ClassifyOptions, PointKind};
use linconv::domain::{self, project_to_boundary, BuiltinDomain, DomainSpec};
use linconv::gamma::{self, default_gamma, hadamard_gamma, vandermonde_gamma, BoldVector, GammaFrame};
use linconv::hyperplane::{contains, embed_real_hyperplane, tangent_frame, AHyperplane};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use common::algebra;

const NAMES: [&str; 4] = ["real", "complex", "hyperbolic", "bicomplex"];

fn with_algebra() -> impl Strategy<Value = (Algebra, Vec<f64>, Vec<f64>, Vec<f64>)> {
    (0..NAMES.len()).prop_flat_map(|i| {
        let alg = algebra(NAMES[i]);
        let m = alg.dim();
        (
            Just(alg),
            prop::collection::vec(-2.0..2.0f64, m),
            prop::collection::vec(-2.0..2.0f64, m),
            prop::collection::vec(-2.0..2.0f64, m),
        )
    })
}

fn frames_for(m: usize, seed: u64) -> Vec<GammaFrame> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![vandermonde_gamma(m).unwrap(), GammaFrame::random(m, &mut rng).unwrap()];
    if m.is_power_of_two() {
        out.push(hadamard_gamma(m.trailing_zeros()).unwrap());
    }
    out
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

/// `x0 + x2^2 - x2^4 + 0.3 x1 x3^2` on C^2, built from the JSON monomial form.
fn quartic(scale: f64) -> BuiltinDomain {
    let f = |slot: usize, component: usize, power: u32| json!({"slot": slot, "component": component, "power": power});
    let spec: DomainSpec = serde_json::from_value(json!({
        "n": 2,
        "polynomial": [
            [f(1, 0, 1), scale],
            [f(2, 0, 2), scale],
            [f(2, 0, 4), -scale],
            [f(1, 1, 1), f(2, 1, 2), 0.3 * scale],
        ]
    }))
    .unwrap();
    spec.build(2).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn multiplication_is_commutative_and_associative((alg, a, b, c) in with_algebra()) {
        let (a, b, c) = (AlgebraElement::new(a), AlgebraElement::new(b), AlgebraElement::new(c));
        let ab = alg.mul(&a, &b).unwrap();
        let ba = alg.mul(&b, &a).unwrap();
        prop_assert!(close(ab.coeffs(), ba.coeffs(), 1e-12));
        let left = alg.mul(&ab, &c).unwrap();
        let right = alg.mul(&a, &alg.mul(&b, &c).unwrap()).unwrap();
        prop_assert!(close(left.coeffs(), right.coeffs(), 1e-11));
        prop_assert_eq!(alg.mul(&alg.one(), &a).unwrap(), a);
    }

    #[test]
    fn regular_representation_acts_by_multiplication((alg, a, b, _c) in with_algebra()) {
        let (a, b) = (AlgebraElement::new(a), AlgebraElement::new(b));
        let rep = alg.regular_representation(&a).unwrap();
        let via = &rep * DVector::from_column_slice(b.coeffs());
        let ab = alg.mul(&a, &b).unwrap();
        prop_assert!(close(via.as_slice(), ab.coeffs(), 1e-12));
    }

    #[test]
    fn inverse_is_two_sided((alg, a, _b, _c) in with_algebra()) {
        let a = AlgebraElement::new(a);
        let rep = alg.regular_representation(&a).unwrap();
        let sv = rep.singular_values();
        prop_assume!(sv.min() > 1e-3 * sv.max());
        let inv = alg.invert(&a).unwrap();
        let prod = alg.mul(&a, &inv).unwrap();
        prop_assert!(close(prod.coeffs(), alg.one().coeffs(), 1e-9));
    }

    #[test]
    fn bold_components_round_trip(i in 0..NAMES.len(), seed in any::<u64>(), x in prop::collection::vec(-3.0..3.0f64, 4)) {
        let alg = algebra(NAMES[i]);
        let m = alg.dim();
        let z = AlgebraElement::new(x[..m].to_vec());
        for frame in frames_for(m, seed) {
            let bold = gamma::bold_components(&alg, &frame, &z).unwrap();
            let back = gamma::reconstruct_real(&alg, &frame, &bold).unwrap();
            prop_assert!(close(&back, z.coeffs(), 1e-10), "{:?} vs {:?}", back, z.coeffs());
        }
    }

    #[test]
    fn formal_forms_reproduce_real_forms(
        i in 1..NAMES.len(),
        seed in any::<u64>(),
        n in 1usize..3,
        raw in prop::collection::vec(-1.0..1.0f64, 64 + 8 + 8),
    ) {
        let alg = algebra(NAMES[i]);
        let d = n * alg.dim();
        let g = &raw[64..64 + d];
        let s = &raw[72..72 + d];
        let h = DMatrix::from_fn(d, d, |r, c| raw[r.min(c) * 8 + r.max(c)]);
        for frame in frames_for(alg.dim(), seed) {
            let bold = BoldVector::from_real(&alg, &frame, s).unwrap();
            let lin = gamma::linear_form_value(&alg, &gamma::formal_gradient(&alg, &frame, g).unwrap(), &bold).unwrap();
            let real_lin: f64 = g.iter().zip(s).map(|(a, b)| a * b).sum();
            prop_assert!(lin.max_abs_imaginary() <= 1e-9);
            prop_assert!((lin.coeffs()[0] - real_lin).abs() <= 1e-9);
            let quad = gamma::quadratic_form_value(&alg, &gamma::formal_hessian(&alg, &frame, &h).unwrap(), &bold).unwrap();
            let sv = DVector::from_column_slice(s);
            prop_assert!(quad.max_abs_imaginary() <= 1e-9);
            prop_assert!((quad.coeffs()[0] - sv.dot(&(&h * &sv))).abs() <= 1e-9);
        }
    }

    #[test]
    fn tangent_kernel_dimension_bounds(i in 0..NAMES.len(), n in 1usize..4, a in prop::collection::vec(-1.0..1.0f64, 12)) {
        let alg = algebra(NAMES[i]);
        let m = alg.dim();
        let a = &a[..n * m];
        prop_assume!(a.iter().any(|x| x.abs() > 1e-3));
        let plane = BuiltinDomain::Halfspace { m, normal: a.to_vec(), offset: 0.0 };
        let frame = tangent_frame(&alg, &plane, &vec![0.0; n * m], None).unwrap();
        prop_assert!(frame.kernel_dim >= m * (n - 1));
        prop_assert!(frame.kernel_dim < m * n);
        prop_assert_eq!(frame.kernel_dim + frame.rank, m * n);
        let hp = frame.hyperplane();
        for c in 0..frame.kernel_dim {
            let s: Vec<f64> = frame.kernel_basis.column(c).iter().copied().collect();
            prop_assert!(contains(&alg, &hp, &s).unwrap());
            let dot: f64 = a.iter().zip(&s).map(|(x, y)| x * y).sum();
            prop_assert!(dot.abs() <= 1e-8);
        }
    }

    #[test]
    fn containment_ignores_scaling(
        i in 1..NAMES.len(),
        a in prop::collection::vec(-1.0..1.0f64, 8),
        s in prop::collection::vec(-1.0..1.0f64, 8),
        lambda in 1e-3..1e3f64,
    ) {
        let alg = algebra(NAMES[i]);
        let m = alg.dim();
        prop_assume!(a[..2 * m].iter().any(|x| x.abs() > 1e-3));
        let coeffs = embed_real_hyperplane(&alg, &a[..2 * m], None).unwrap();
        let hp = AHyperplane::new(vec![0.0; 2 * m], coeffs.clone()).unwrap();
        let scaled = AHyperplane::new(vec![0.0; 2 * m], coeffs.iter().map(|c| c.scaled(lambda)).collect()).unwrap();
        let s = &s[..2 * m];
        let s_scaled: Vec<f64> = s.iter().map(|x| x * lambda).collect();
        let base = contains(&alg, &hp, s).unwrap();
        prop_assert_eq!(base, contains(&alg, &scaled, s).unwrap());
        prop_assert_eq!(base, contains(&alg, &hp, &s_scaled).unwrap());
    }

    #[test]
    fn polynomial_derivatives_match_finite_differences(w in prop::collection::vec(-1.0..1.0f64, 4)) {
        let p = quartic(1.0);
        let an = domain::gradient(&p, &w).unwrap();
        let fd = domain::fd_gradient(&p, &w);
        prop_assert!(close(&an, &fd, 1e-6));
        let ah = domain::hessian(&p, &w).unwrap();
        let fh = domain::fd_hessian(&p, &w);
        prop_assert!((ah - fh).amax() <= 1e-4);
    }

    #[test]
    fn classification_is_frame_and_scale_invariant(start in prop::collection::vec(-1.5..1.5f64, 4), lambda in 0.1..10.0f64) {
        let alg = algebra("complex");
        let base = quartic(1.0);
        let Ok(bp) = project_to_boundary(&base, &start) else { return Ok(()) };
        let tol = 1e-6;
        let mut kinds = Vec::new();
        for frame in frames_for(2, 1) {
            let pc = classify_point(&alg, &frame, &base, &bp, ClassifyOptions { tol: Some(tol), ptilde: None }).unwrap();
            kinds.push((pc.kind, pc.min_eigenvalue.unwrap()));
        }
        let scaled = quartic(lambda);
        let pc = classify_point(&alg, &default_gamma(2).unwrap(), &scaled, &bp, ClassifyOptions { tol: Some(tol * lambda), ptilde: None }).unwrap();
        let (k0, e0) = kinds[0];
        for &(k, e) in &kinds {
            prop_assert_eq!(k, k0);
            prop_assert!((e - e0).abs() <= 1e-9 * (1.0 + e0.abs()));
        }
        prop_assert_eq!(pc.kind, k0);
        prop_assert!((pc.min_eigenvalue.unwrap() - lambda * e0).abs() <= 1e-9 * (1.0 + lambda * e0.abs()));
    }
}

#[test]
fn convexity_is_a_property_of_the_domain_not_rho() {
    // rho and rho * exp(x0) share a boundary; their tangent-restricted
    // Hessians differ by the positive factor exp(x0) on the boundary.
    let alg = algebra("complex");
    let ball = BuiltinDomain::Ball { n: 2, m: 2, r: 1.0 };
    let warped = linconv::FnDomain::new(2, 2, |z: &[f64]| (z.iter().map(|x| x * x).sum::<f64>() - 1.0) * z[0].exp());
    let g = default_gamma(2).unwrap();
    for w in [[1.0, 0.0, 0.0, 0.0], [0.6, 0.0, 0.0, 0.8], [0.0, -0.6, 0.8, 0.0]] {
        let bp = linconv::BoundaryPoint { w: w.to_vec(), residual: 0.0 };
        let a = classify_point(&alg, &g, &ball, &bp, ClassifyOptions::default()).unwrap();
        let b = classify_point(&alg, &g, &warped, &bp, ClassifyOptions { tol: Some(1e-4), ptilde: None }).unwrap();
        assert_eq!(a.kind, PointKind::StrictlyPositive);
        assert_eq!(b.kind, PointKind::StrictlyPositive);
        assert!((b.min_eigenvalue.unwrap() - 2.0 * w[0].exp()).abs() < 1e-4);
    }
}
