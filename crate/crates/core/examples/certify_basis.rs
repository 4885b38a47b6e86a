//! Uniqueness certification: a generic basis passes, while the standard basis
//! fails on shifted supports.

use crystal_pr::certify::{certify_basis, certify_pair, CertifyConfig, CertifyMode, SearchConfig};
use crystal_pr::model::{sample_generic_basis, Basis, Support};
use crystal_pr::Field;

fn main() -> crystal_pr::Result<()> {
    let cfg = CertifyConfig { search: SearchConfig { starts: 60, ..SearchConfig::default() }, ..CertifyConfig::default() };

    let basis = sample_generic_basis(10, Field::Real, 3)?;
    let report = certify_basis(&basis, 2, CertifyMode::Every, &cfg)?;
    println!(
        "generic N=10, M=2: {} ({} supports, {} pairs, smallest best residual {:.2e})",
        report.verdict,
        report.supports.len(),
        report.pairs.len(),
        report.min_best_residual()
    );

    let generic = certify_basis(&basis, 4, CertifyMode::Generic, &CertifyConfig { trials: 5, ..cfg })?;
    println!("generic N=10, M=4, generic mode: {} over {} trials", generic.verdict, generic.trials.len());

    let standard = Basis::identity(8, Field::Real)?;
    let s1 = Support::new(vec![0, 1, 2], 8)?;
    let s2 = Support::new(vec![1, 2, 3], 8)?;
    let pair = certify_pair(&standard, &s1, &s2, &cfg)?;
    println!("standard basis {s1} vs {s2}: {}", pair.result.verdict);
    if let Some(w) = &pair.result.witness {
        let re = |v: &[num_complex::Complex64]| v.iter().map(|z| z.re).collect::<Vec<_>>();
        println!("  witness x = {:.4?}", re(&w.x));
        println!("          y = {:.4?}", re(&w.y));
        println!("  measured mismatch {:.2e}", pair.verified_residual.unwrap_or(f64::NAN));
    }
    Ok(())
}
