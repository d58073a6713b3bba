use nonlocal_spectra::coefficient::Table;
use nonlocal_spectra::operator::Stationary;
use nonlocal_spectra::spectral::{collatz_wielandt_bounds, dense_oracle, evolve, principal_spectrum_point};
use nonlocal_spectra::{build_domain, Boundary, Coefficient, EvolutionConfig, Kernel, KernelFamily, OperatorSpec};
use proptest::prelude::*;

fn spec_1d(n: usize, coeff: Coefficient, d: f64, sigma: f64, k: f64, boundary: Boundary) -> OperatorSpec {
    let domain = build_domain(1, &[(0.0, 1.0)], &[n]).unwrap();
    let kernel = Kernel::new(KernelFamily::Epanechnikov1d, 1.0).unwrap();
    OperatorSpec::new(domain, kernel, coeff, d, sigma, k, boundary).unwrap()
}

fn coeff_strategy() -> impl Strategy<Value = Coefficient> {
    (-2.0..2.0f64, 0.0..1.5f64, 0.0..1.0f64, prop::bool::ANY).prop_map(|(b, amp, c, periodic)| {
        let space = format!("{b} * cos(pi*x) + {c} * x");
        if periodic {
            Coefficient::separable(&space, &format!("{amp} * sin(2*pi*t)"), 1.0).unwrap()
        } else {
            Coefficient::space_only(&space).unwrap()
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn sandwich_bounds(coeff in coeff_strategy(), d in 0.05..5.0f64, sigma in 0.3..1.5f64) {
        let s = spec_1d(16, coeff, d, sigma, 1.0, Boundary::Neumann);
        let r = principal_spectrum_point(&s, &EvolutionConfig::default()).unwrap();
        let st = s.stats();
        prop_assert!(-st.sup - 1e-8 <= r.lambda1 && r.lambda1 <= -st.inf + 1e-8);
        prop_assert!(r.lambda1 <= -st.spacetime_avg + 1e-6);
        prop_assert!(r.min_value() > 0.0);
    }

    #[test]
    fn lipschitz_in_coefficient(coeff in coeff_strategy(), raw in prop::collection::vec(-1.0..1.0f64, 16)) {
        let scale = 0.1 / raw.iter().fold(1e-12f64, |m, v| m.max(v.abs()));
        let delta: Vec<f64> = raw.iter().map(|v| v * scale).collect();
        let pert = Coefficient::tabulated(Table::stationary(delta).unwrap(), 1.0).unwrap();
        let cfg = EvolutionConfig::default();
        let base = spec_1d(16, coeff.clone(), 1.0, 1.0, 0.0, Boundary::Neumann);
        let moved = base.with_coeff(coeff.plus(&pert).unwrap()).unwrap();
        let a = principal_spectrum_point(&base, &cfg).unwrap().lambda1;
        let b = principal_spectrum_point(&moved, &cfg).unwrap().lambda1;
        prop_assert!((a - b).abs() <= 0.1 + 1e-8, "{a} {b}");
    }

    #[test]
    fn collatz_wielandt_brackets(coeff in coeff_strategy(), raw in prop::collection::vec(0.1..2.0f64, 16)) {
        let s = spec_1d(16, coeff, 1.0, 1.0, 0.0, Boundary::Neumann);
        let r = principal_spectrum_point(&s, &EvolutionConfig::default()).unwrap();
        let (lo, hi) = collatz_wielandt_bounds(&s, &Stationary(raw), 16).unwrap();
        prop_assert!(lo <= r.lambda1 + 1e-8 && r.lambda1 <= hi + 1e-8);
    }

    #[test]
    fn power_matches_dense(coeff in coeff_strategy(), d in 0.1..3.0f64, boundary in prop::bool::ANY) {
        let boundary = if boundary { Boundary::Dirichlet } else { Boundary::Neumann };
        let s = spec_1d(12, coeff, d, 1.0, 0.0, boundary);
        let cfg = EvolutionConfig::default();
        let power = principal_spectrum_point(&s, &cfg).unwrap().lambda1;
        let dense = dense_oracle(&s, &cfg).unwrap();
        prop_assert!((power - dense).abs() <= 1e-6, "{power} {dense}");
    }

    #[test]
    fn comparison_principle(coeff in coeff_strategy(), low in prop::collection::vec(0.0..1.0f64, 16), gap in prop::collection::vec(0.0..1.0f64, 16)) {
        let s = spec_1d(16, coeff, 1.0, 1.0, 0.0, Boundary::Neumann);
        let cfg = EvolutionConfig::default();
        let high: Vec<f64> = low.iter().zip(&gap).map(|(a, b)| a + b).collect();
        let ul = evolve(&s, &cfg, &low, 0.0, 1.0).unwrap();
        let uh = evolve(&s, &cfg, &high, 0.0, 1.0).unwrap();
        let scale = uh.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in ul.iter().zip(&uh) {
            prop_assert!(*a >= -1e-12 * scale);
            prop_assert!(*a <= *b + 1e-12 * scale);
        }
    }
}

#[test]
fn neumann_below_dirichlet() {
    let cfg = EvolutionConfig::default();
    for expr in ["cos(pi*x)", "0.5 - x", "x*x"] {
        let n = spec_1d(20, Coefficient::space_only(expr).unwrap(), 1.0, 0.3, 0.0, Boundary::Neumann);
        let d = n.with_boundary(Boundary::Dirichlet);
        // the discrete degree may exceed 1 by a quadrature error near the centre
        let overshoot = n.rate() * n.matrix().degree().iter().fold(0.0f64, |m, v| m.max(v - 1.0));
        let ln = dense_oracle(&n, &cfg).unwrap();
        let ld = dense_oracle(&d, &cfg).unwrap();
        assert!(ln <= ld + overshoot + 1e-10, "{expr}: {ln} {ld}");
    }
}

#[test]
fn grid_refinement_converges() {
    let cfg = EvolutionConfig::default();
    let coeff = Coefficient::space_only("cos(pi*x)").unwrap();
    let l: Vec<f64> = [20, 40, 80]
        .iter()
        .map(|&n| {
            principal_spectrum_point(&spec_1d(n, coeff.clone(), 1.0, 0.5, 0.0, Boundary::Neumann), &cfg)
                .unwrap()
                .lambda1
        })
        .collect();
    let e1 = (l[1] - l[0]).abs();
    let e2 = (l[2] - l[1]).abs();
    assert!(e2 < 0.5 * e1, "{l:?}");
}

#[test]
fn single_precision_constant_case() {
    let domain = build_domain::<f32>(1, &[(0.0, 1.0)], &[16]).unwrap();
    let kernel = nonlocal_spectra::kernel::Kernel::<f32>::new(KernelFamily::Epanechnikov1d, 1.0).unwrap();
    let s = nonlocal_spectra::operator::OperatorSpec::<f32>::new(
        domain,
        kernel,
        Coefficient::constant(2.0),
        1.0,
        1.0,
        0.0,
        Boundary::Neumann,
    )
    .unwrap();
    let cfg = EvolutionConfig { power_tol: 1e-5, ..EvolutionConfig::default() };
    let r = principal_spectrum_point(&s, &cfg).unwrap();
    assert!((r.lambda1 + 2.0).abs() < 1e-4, "{}", r.lambda1);
}
