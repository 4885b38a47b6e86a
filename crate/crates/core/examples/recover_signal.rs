//! Recovery from measurements, with and without knowing the support.

use crystal_pr::model::{embed, sample_generic_basis, sample_sparse_vector, Basis, SparseVector, Support};
use crystal_pr::recover::{equivalent_up_to_phase, solve_fixed_support, solve_support_search, RecoveryConfig, RecoveryProblem, Target};
use crystal_pr::signal::{measure_reduced, power_spectrum};
use crystal_pr::Field;
use num_complex::Complex64;

fn main() -> crystal_pr::Result<()> {
    let n = 12;
    let basis = sample_generic_basis(n, Field::Real, 11)?;
    let s = Support::new(vec![2, 5, 9], n)?;
    let x = embed(&sample_sparse_vector(&s, Field::Real, 4)?, &basis)?;
    let problem = RecoveryProblem::new(basis.clone(), 3, Target::Reduced(measure_reduced(&x)?))?;
    let cfg = RecoveryConfig::default();

    let known = solve_fixed_support(&problem, &s, &cfg)?;
    println!("known support: residual {:.2e}, matches truth {}", known.residual, equivalent_up_to_phase(&known.signal(&basis), x.entries(), Field::Real, 1e-6));

    let searched = solve_support_search(&problem, &cfg)?;
    println!("support search: found {}, ambiguity {}", searched.support, searched.ambiguity.is_some());

    // Complex signals need the full power spectrum.
    let cb = sample_generic_basis(10, Field::Complex, 2)?;
    let cs = Support::new(vec![1, 6], 10)?;
    let cx = embed(&sample_sparse_vector(&cs, Field::Complex, 8)?, &cb)?;
    let cp = RecoveryProblem::new(cb.clone(), 2, Target::PowerSpectrum(power_spectrum(&cx)))?;
    let cr = solve_fixed_support(&cp, &cs, &cfg)?;
    println!("complex: residual {:.2e}, equal up to phase {}", cr.residual, equivalent_up_to_phase(&cr.signal(&cb), cx.entries(), Field::Complex, 1e-6));

    // In the standard basis every cyclic shift of the support fits equally well.
    let standard = Basis::identity(8, Field::Real)?;
    let t = Support::new(vec![0, 1, 2], 8)?;
    let v = SparseVector::new(t, Field::Real, [1.0, -2.0, 0.5].map(|c| Complex64::new(c, 0.0)).to_vec())?;
    let sx = embed(&v, &standard)?;
    let sp = RecoveryProblem::new(standard, 3, Target::Reduced(measure_reduced(&sx)?))?;
    let res = solve_support_search(&sp, &cfg)?;
    match res.ambiguity {
        Some(a) => println!("standard basis: best {} but {} fits too (residual {:.1e})", res.support, a.support, a.residual),
        None => println!("standard basis: no ambiguity found"),
    }
    Ok(())
}
