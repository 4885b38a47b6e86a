//! Generic bases, supports and sparse vectors, and the frames they define.

use crystal_pr::model::{binomial, embed, fourier_frame, frame_from_basis, overlapping_pair_from_basis, sample_generic_basis, sample_sparse_vector, Support};
use crystal_pr::rng::rng_from_seed;
use crystal_pr::Field;

fn main() -> crystal_pr::Result<()> {
    let n = 10;
    let basis = sample_generic_basis(n, Field::Real, 7)?;
    println!("basis: N = {n}, condition number {:.2}", basis.condition());

    let mut rng = rng_from_seed(1);
    let s = Support::random(n, 3, &mut rng)?;
    let v = sample_sparse_vector(&s, Field::Real, 2)?;
    let x = embed(&v, &basis)?;
    println!("support {s}, coefficients {:.3?}", v.coeffs.iter().map(|c| c.re).collect::<Vec<_>>());
    println!("signal  {:.3?}", x.as_real().unwrap());
    println!("{} supports of size 3", binomial(n, 3));

    let frame = frame_from_basis(&basis, &s)?;
    let fourier = fourier_frame(&frame)?;
    println!("frame {}x{}, Fourier frame {}x{}", frame.m(), frame.n(), fourier.m(), fourier.n());

    let outside = (0..n).find(|&i| !s.contains(i)).expect("support is a proper subset");
    let t = Support::from_unsorted(vec![s.indices()[0], s.indices()[1], outside], n)?;
    let pair = overlapping_pair_from_basis(&basis, &s, &t)?;
    println!("pair {s} / {t}: overlap s = {}, rows {:?} and {:?}", pair.s, pair.rows_first, pair.rows_second);
    println!("basis JSON starts with {}", &basis.to_json().to_string()[..60]);
    Ok(())
}
