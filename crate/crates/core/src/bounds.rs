//! Closed-form sparsity thresholds and incidence-variety dimension counts.
//!
//! All arithmetic is in exact integers. The real-field counts are written
//! in terms of the number of reduced measurements `G = floor(N/2) + 1`, which
//! covers odd `N` without a separate case.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::Field;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GuaranteeLevel {
    NoGuarantee,
    GenericOnly,
    EveryVector,
}

impl std::fmt::Display for GuaranteeLevel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GuaranteeLevel::NoGuarantee => "no-guarantee",
            GuaranteeLevel::GenericOnly => "generic-only",
            GuaranteeLevel::EveryVector => "every-vector",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuaranteeVerdict {
    pub level: GuaranteeLevel,
    pub sr1: bool,
    pub sr2: bool,
    pub sr1g: bool,
    pub sr2g: bool,
    /// `M <= floor(N/2)`.
    pub dimension_count_feasible: bool,
}

fn check_nm(n: usize, m: usize) -> Result<()> {
    if m == 0 || m > n {
        return Err(Error::InvalidInput(format!("need 1 <= m <= n, got m = {m}, n = {n}")));
    }
    Ok(())
}

/// Which sparsity levels are guaranteed recoverable, by field and parity.
pub fn predicted_guarantee(n: usize, m: usize, field: Field) -> Result<GuaranteeVerdict> {
    check_nm(n, m)?;
    let (n, m) = (n as i64, m as i64);
    let (sr1, sr2, generic) = match field {
        Field::Real if n % 2 == 0 => (n > 4 * m - 6, n > 4 * m - 4, n > 2 * m - 2),
        Field::Real => (n > 4 * m - 5, n > 4 * m - 3, n > 2 * m - 1),
        Field::Complex => (n > 4 * m - 3, n > 4 * m - 3, n > 2 * m - 1),
    };
    let level = if sr1 && sr2 {
        GuaranteeLevel::EveryVector
    } else if generic {
        GuaranteeLevel::GenericOnly
    } else {
        GuaranteeLevel::NoGuarantee
    };
    Ok(GuaranteeVerdict { level, sr1, sr2, sr1g: generic, sr2g: generic, dimension_count_feasible: m <= n / 2 })
}

/// Incidence varieties whose dimension is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IncidenceCase {
    ComplexPair,
    RealPair,
    RealSingle,
    /// Symmetric `M x M` matrices of rank at most `k`.
    SymRankLocus(usize),
}

fn choose2(k: i64) -> i64 {
    k * (k - 1) / 2
}

fn check_case(m: usize, n: usize, s: usize, case: IncidenceCase) -> Result<()> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidInput("m and n must be positive".into()));
    }
    match case {
        IncidenceCase::SymRankLocus(k) if k + 2 > m => {
            Err(Error::InvalidInput(format!("rank locus needs k <= m - 2, got k = {k}, m = {m}")))
        }
        IncidenceCase::ComplexPair | IncidenceCase::RealPair if s > m => {
            Err(Error::InvalidInput(format!("overlap {s} exceeds m = {m}")))
        }
        _ => Ok(()),
    }
}

/// Dimension of the incidence variety.
pub fn incidence_dimension(m: usize, n: usize, s: usize, case: IncidenceCase) -> Result<i64> {
    check_case(m, n, s, case)?;
    let (m, n, s) = (m as i64, n as i64, s as i64);
    let g = n / 2 + 1;
    Ok(match case {
        IncidenceCase::ComplexPair => 4 * m + 4 * m * n - n - 2 * s * n - 4,
        IncidenceCase::RealPair => 2 * m * n + 2 * m - s * n - g - 2,
        IncidenceCase::RealSingle => m * n + 2 * m - g - 3,
        IncidenceCase::SymRankLocus(k) => {
            let k = k as i64;
            k + choose2(m) - choose2(m - k)
        }
    })
}

/// Dimension of the parameter space the incidence variety projects to.
pub fn ambient_dimension(m: usize, n: usize, s: usize, case: IncidenceCase) -> Result<i64> {
    check_case(m, n, s, case)?;
    let (m, n, s) = (m as i64, n as i64, s as i64);
    Ok(match case {
        IncidenceCase::ComplexPair => 4 * m * n - 2 * s * n - 1,
        IncidenceCase::RealPair => 2 * m * n - s * n - 1,
        IncidenceCase::RealSingle => m * n - 1,
        IncidenceCase::SymRankLocus(_) => m * (m + 1) / 2,
    })
}

/// Ambient minus incidence dimension; positive exactly in the regime where a
/// generic frame (pair) satisfies the uniqueness condition.
pub fn dimension_gap(m: usize, n: usize, s: usize, case: IncidenceCase) -> Result<i64> {
    Ok(ambient_dimension(m, n, s, case)? - incidence_dimension(m, n, s, case)?)
}

/// Measurements minus the dimension of the signal set modulo the global
/// sign/phase: `G - M` for real, `N - (2M - 1)` for complex.
pub fn generic_fiber_gap(n: usize, m: usize, field: Field) -> i64 {
    let (n, m) = (n as i64, m as i64);
    match field {
        Field::Real => n / 2 + 1 - m,
        Field::Complex => n - (2 * m - 1),
    }
}

/// One line of the bounds table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsRow {
    pub n: usize,
    pub m: usize,
    pub field: Field,
    pub level: GuaranteeLevel,
    pub sr1: bool,
    pub sr2: bool,
    pub sr1g: bool,
    pub sr2g: bool,
    pub dimension_count_feasible: bool,
    /// Single-frame gap (real only).
    pub gap_single: Option<i64>,
    /// Pair gap; independent of the overlap `s`.
    pub gap_pair: i64,
    pub generic_gap: i64,
}

/// Rows for `1 <= M <= m_max`, `M <= N <= n_max`, real then complex.
pub fn bounds_table(m_max: usize, n_max: usize) -> Result<Vec<BoundsRow>> {
    let mut rows = Vec::new();
    for n in 1..=n_max {
        for m in 1..=m_max.min(n) {
            for field in [Field::Real, Field::Complex] {
                let v = predicted_guarantee(n, m, field)?;
                let (gap_single, gap_pair) = match field {
                    Field::Real => (Some(dimension_gap(m, n, 0, IncidenceCase::RealSingle)?), dimension_gap(m, n, 0, IncidenceCase::RealPair)?),
                    Field::Complex => (None, dimension_gap(m, n, 0, IncidenceCase::ComplexPair)?),
                };
                rows.push(BoundsRow {
                    n,
                    m,
                    field,
                    level: v.level,
                    sr1: v.sr1,
                    sr2: v.sr2,
                    sr1g: v.sr1g,
                    sr2g: v.sr2g,
                    dimension_count_feasible: v.dimension_count_feasible,
                    gap_single,
                    gap_pair,
                    generic_gap: generic_fiber_gap(n, m, field),
                });
            }
        }
    }
    Ok(rows)
}

pub fn bounds_csv(rows: &[BoundsRow]) -> String {
    let mut out = String::from("n,m,field,level,sr1,sr2,sr1g,sr2g,dimension_count_feasible,gap_single,gap_pair,generic_gap\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.n,
            r.m,
            r.field,
            r.level,
            r.sr1,
            r.sr2,
            r.sr1g,
            r.sr2g,
            r.dimension_count_feasible,
            r.gap_single.map_or(String::new(), |g| g.to_string()),
            r.gap_pair,
            r.generic_gap
        ));
    }
    out
}
