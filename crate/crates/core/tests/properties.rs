use num_complex::Complex64;
use proptest::prelude::*;

use crystal_pr::bounds::predicted_guarantee;
use crystal_pr::harness::{cells_from_csv, cells_to_csv, render_report, run_scan, ReportFormat, ScanCell, ScanConfig};
use crystal_pr::model::{embed, sample_generic_basis, sample_sparse_vector, SparseVector, Support};
use crystal_pr::recover::{canonicalize, equivalent_up_to_phase, solve_fixed_support, RecoveryConfig, RecoveryProblem, Target};
use crystal_pr::rng::{derive_seed, gaussian_vec, rng_from_seed};
use crystal_pr::signal::{dihedral_act, measure_reduced, power_spectrum, DihedralElement, Signal};
use crystal_pr::Field;

fn complex_vec(max_len: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0).prop_map(|(a, b)| Complex64::new(a, b)), 1..max_len)
}

fn real_vec(max_len: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-10.0f64..10.0).prop_map(|a| Complex64::new(a, 0.0)), 1..max_len)
}

proptest! {
    #[test]
    fn canonicalize_is_idempotent(x in complex_vec(12)) {
        let once = canonicalize(&x, Field::Complex);
        let twice = canonicalize(&once, Field::Complex);
        for (a, b) in once.iter().zip(&twice) {
            prop_assert!((a - b).norm() <= 1e-12 * (1.0 + a.norm()));
        }
    }

    #[test]
    fn global_phase_is_invisible(x in complex_vec(12), theta in 0.0f64..std::f64::consts::TAU) {
        let t = Complex64::from_polar(1.0, theta);
        let y: Vec<Complex64> = x.iter().map(|v| v * t).collect();
        prop_assert!(equivalent_up_to_phase(&x, &y, Field::Complex, 1e-9));
        let (px, py) = (
            power_spectrum(&Signal::complex(x).unwrap()).values,
            power_spectrum(&Signal::complex(y).unwrap()).values,
        );
        for (a, b) in px.iter().zip(&py) {
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn real_sign_flip_is_equivalent(x in real_vec(12)) {
        let y: Vec<Complex64> = x.iter().map(|v| -v).collect();
        prop_assert!(equivalent_up_to_phase(&x, &y, Field::Real, 1e-12));
        prop_assert_eq!(canonicalize(&x, Field::Real), canonicalize(&y, Field::Real));
    }

    #[test]
    fn rotations_preserve_the_power_spectrum(x in complex_vec(16), k in 0usize..16) {
        let s = Signal::complex(x).unwrap();
        let g = DihedralElement::rotation(k % s.len());
        let (a, b) = (power_spectrum(&s).values, power_spectrum(&dihedral_act(g, &s)).values);
        for (p, q) in a.iter().zip(&b) {
            prop_assert!((p - q).abs() <= 1e-9 * (1.0 + p.abs()));
        }
    }

    #[test]
    fn guarantee_level_never_drops_with_n(m in 1usize..9, n in 1usize..64, complex in any::<bool>()) {
        let field = if complex { Field::Complex } else { Field::Real };
        prop_assume!(m <= n);
        let here = predicted_guarantee(n, m, field).unwrap().level;
        let next = predicted_guarantee(n + 1, m, field).unwrap().level;
        prop_assert!(next >= here);
    }
}

#[test]
fn independent_gaussians_are_never_equivalent() {
    let mut rng = rng_from_seed(11);
    for field in [Field::Real, Field::Complex] {
        for _ in 0..10_000 {
            let x = gaussian_vec(&mut rng, 8, field.is_complex());
            let y = gaussian_vec(&mut rng, 8, field.is_complex());
            assert!(!equivalent_up_to_phase(&x, &y, field, 1e-4));
        }
    }
}

fn problem_for(field: Field, n: usize, m: usize, seed: u64, target_of: impl Fn(&Signal) -> Target) -> (RecoveryProblem, Support, SparseVector) {
    let basis = sample_generic_basis(n, field, derive_seed(seed, &[0])).unwrap();
    let s = Support::random(n, m, &mut rng_from_seed(derive_seed(seed, &[1]))).unwrap();
    let v = sample_sparse_vector(&s, field, derive_seed(seed, &[2])).unwrap();
    let x = embed(&v, &basis).unwrap();
    (RecoveryProblem::new(basis, m, target_of(&x)).unwrap(), s, v)
}

#[test]
fn recovery_is_gauge_invariant() {
    for seed in 0..10 {
        let (p, s, v) = problem_for(Field::Complex, 10, 3, seed, |x| Target::PowerSpectrum(power_spectrum(x)));
        let t = Complex64::from_polar(1.0, 0.7 + seed as f64);
        let rotated = SparseVector::new(s.clone(), Field::Complex, v.coeffs.iter().map(|c| c * t).collect()).unwrap();
        let x2 = embed(&rotated, p.basis()).unwrap();
        let p2 = RecoveryProblem::new(p.basis().clone(), 3, Target::PowerSpectrum(power_spectrum(&x2))).unwrap();
        let cfg = RecoveryConfig { seed, ..RecoveryConfig::default() };
        let (a, b) = (solve_fixed_support(&p, &s, &cfg).unwrap(), solve_fixed_support(&p2, &s, &cfg).unwrap());
        assert!(a.converged && b.converged);
        for (u, w) in a.coeffs.iter().zip(&b.coeffs) {
            assert!((u - w).norm() < 1e-6 * (1.0 + u.norm()), "seed {seed}");
        }
    }
}

#[test]
fn power_spectrum_and_reduced_targets_agree() {
    for seed in 0..10 {
        let (pr, s, _) = problem_for(Field::Real, 12, 4, seed, |x| Target::Reduced(measure_reduced(x).unwrap()));
        let (pp, _, _) = problem_for(Field::Real, 12, 4, seed, |x| Target::PowerSpectrum(power_spectrum(x)));
        let cfg = RecoveryConfig { seed, starts: 200, ..RecoveryConfig::default() };
        let (a, b) = (solve_fixed_support(&pr, &s, &cfg).unwrap(), solve_fixed_support(&pp, &s, &cfg).unwrap());
        assert!(a.converged && b.converged, "seed {seed}");
        assert!(equivalent_up_to_phase(&a.signal(pr.basis()), &b.signal(pp.basis()), Field::Real, 1e-6));
    }
}

fn small_scan() -> ScanConfig {
    ScanConfig { n_values: vec![8, 10], m_min: 1, m_max: 7, trials: 12, seed: 21, ..ScanConfig::default() }
}

#[test]
fn scan_ignores_worker_count() {
    let cfg = small_scan();
    let run = |threads| rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| run_scan(&cfg).unwrap());
    assert_eq!(run(1), run(4));
}

#[test]
fn success_rate_does_not_grow_with_m() {
    let cfg = ScanConfig { n_values: vec![12], m_min: 1, m_max: 9, trials: 100, seed: 4, ..ScanConfig::default() };
    let cells = run_scan(&cfg).unwrap();
    for w in cells.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let se = |c: &ScanCell| (c.rate * (1.0 - c.rate) / c.trials as f64).sqrt();
        let slack = 3.0 * (se(a).powi(2) + se(b).powi(2)).sqrt();
        assert!(b.rate <= a.rate + slack, "M={} rate {} -> M={} rate {}", a.m, a.rate, b.m, b.rate);
    }
}

#[test]
fn reports_round_trip() {
    let cells = run_scan(&small_scan()).unwrap();
    let json = render_report(&cells, ReportFormat::Json).unwrap();
    let back: Vec<ScanCell> = serde_json::from_str(&json).unwrap();
    assert_eq!(cells_to_csv(&back), cells_to_csv(&cells));
    assert_eq!(cells_from_csv(&cells_to_csv(&cells)).unwrap(), cells);
    assert_eq!(cells_to_csv(&[]), "n,m,field,mode,successes,trials,rate,mean_residual,ms\n");
}

#[test]
fn scan_reruns_are_identical() {
    let cfg = small_scan();
    assert_eq!(cells_to_csv(&run_scan(&cfg).unwrap()), cells_to_csv(&run_scan(&cfg).unwrap()));
}
