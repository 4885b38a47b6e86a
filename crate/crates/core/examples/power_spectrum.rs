//! Measurements of a signal: power spectrum, autocorrelation and the reduced
//! vector `b`, and their invariance under the dihedral group.
//!
//! ```text
//! cargo run --example power_spectrum
//! ```

use crystal_pr::signal::{dft, dihedral_act, measure_reduced, periodic_autocorrelation, power_spectrum, second_moment, DihedralElement};
use crystal_pr::{Field, Signal};

fn main() -> crystal_pr::Result<()> {
    let x = Signal::real(vec![1.0, 2.0, 3.0, 4.0, 0.0, -1.0])?;
    let p = power_spectrum(&x);
    let a = periodic_autocorrelation(&x);
    println!("x    = {:?}", x.as_real().unwrap());
    println!("P    = {:.4?}", p.values);
    println!("a    = {:.4?}", a.values.iter().map(|z| z.re).collect::<Vec<_>>());

    // F a = P.
    let fa = dft(&Signal::new(Field::Complex, a.values.clone())?);
    let gap = fa.entries().iter().zip(&p.values).map(|(f, q)| (f.re - q).abs().max(f.im.abs())).fold(0.0, f64::max);
    println!("max |F a - P| = {gap:.2e}");

    let b = measure_reduced(&x)?;
    println!("b    = {:.4?}", b.values);
    for g in [DihedralElement::rotation(2), DihedralElement::reflection()] {
        let bg = measure_reduced(&dihedral_act(g, &x))?;
        let d = b.values.iter().zip(&bg.values).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
        println!("{g:?}: b changes by {d:.2e}");
    }

    // The dihedral second moment is circulant, built from a / N.
    let m = second_moment(&x).matrix;
    println!("second moment row 0 = {:.4?}", m.row(0).iter().map(|z| z.re).collect::<Vec<_>>());
    Ok(())
}
