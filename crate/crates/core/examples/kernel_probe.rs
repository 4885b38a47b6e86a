//! Null space of the single-frame operator and a search for rank-two
//! elements in it.

use crystal_pr::certify::{build_real_single_operator, kernel_low_rank_probe, ProbeConfig};
use crystal_pr::model::{fourier_frame, frame_from_basis, sample_generic_basis, Support};
use crystal_pr::Field;

fn main() -> crystal_pr::Result<()> {
    let n = 12;
    let basis = sample_generic_basis(n, Field::Real, 5)?;
    for m in [2, 4, 6] {
        let s = Support::new((0..m).collect(), n)?;
        let op = build_real_single_operator(&fourier_frame(&frame_from_basis(&basis, &s)?)?)?;
        let report = kernel_low_rank_probe(&op, &ProbeConfig::default())?;
        println!(
            "M = {m}: operator {}x{}, null dimension {}, smallest sigma_3 {}, rank-2 candidate {}",
            op.dimension(),
            op.domain_dim(),
            report.null_dim,
            report.min_sigma3.map_or("-".into(), |v| format!("{v:.2e}")),
            report.candidate.is_some()
        );
    }
    Ok(())
}
