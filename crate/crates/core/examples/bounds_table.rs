//! Predicted guarantees and dimension gaps over a small grid.

use crystal_pr::bounds::{bounds_table, dimension_gap, incidence_dimension, predicted_guarantee, IncidenceCase};
use crystal_pr::Field;

fn main() -> crystal_pr::Result<()> {
    println!("{:>3} {:>2}  {:<13} {:<13}", "N", "M", "real", "complex");
    for n in [8, 9, 12, 16, 20] {
        for m in 1..=n / 2 + 1 {
            let r = predicted_guarantee(n, m, Field::Real)?.level;
            let c = predicted_guarantee(n, m, Field::Complex)?.level;
            println!("{n:>3} {m:>2}  {:<13} {:<13}", r.to_string(), c.to_string());
        }
    }

    println!("complex pair, M=2, N=6: dim {} gap {}", incidence_dimension(2, 6, 0, IncidenceCase::ComplexPair)?, dimension_gap(2, 6, 0, IncidenceCase::ComplexPair)?);
    println!("real pair, M=3, N=8: gap {}", dimension_gap(3, 8, 0, IncidenceCase::RealPair)?);
    println!("rank<=2 symmetric 5x5: dim {}", incidence_dimension(5, 5, 0, IncidenceCase::SymRankLocus(2))?);
    println!("{} rows in the M<=8, N<=64 table", bounds_table(8, 64)?.len());
    Ok(())
}
