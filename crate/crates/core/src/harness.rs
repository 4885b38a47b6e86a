//! Monte Carlo scans of recovery success and certification verdicts over a
//! grid of `(N, M)` cells.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{predicted_guarantee, GuaranteeLevel};
use crate::certify::{certify_basis, CertifyConfig, CertifyMode, SearchConfig, Verdict};
use crate::error::{Error, Result};
use crate::model::{binomial, embed, sample_generic_basis, sample_sparse_vector, Support};
use crate::recover::{equivalent_up_to_phase, solve_fixed_support, solve_support_search, RecoveryConfig, RecoveryProblem, Target};
use crate::rng::{derive_seed, rng_from_seed};
use crate::signal::{measure_reduced, power_spectrum, Field};

/// Largest signal length a scan accepts.
pub const MAX_SCAN_N: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanMode {
    Recover,
    CertifyGeneric,
    CertifyEvery,
}

impl std::fmt::Display for ScanMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ScanMode::Recover => "recover",
            ScanMode::CertifyGeneric => "certify-generic",
            ScanMode::CertifyEvery => "certify-every",
        })
    }
}

impl std::str::FromStr for ScanMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "recover" => Ok(ScanMode::Recover),
            "certify-generic" => Ok(ScanMode::CertifyGeneric),
            "certify-every" => Ok(ScanMode::CertifyEvery),
            other => Err(Error::Parse(format!("unknown scan mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub n_values: Vec<usize>,
    pub m_min: usize,
    pub m_max: usize,
    /// Also cap `M` at `floor(N/2) + k`.
    pub m_above_half: Option<usize>,
    pub field: Field,
    pub trials: usize,
    pub seed: u64,
    pub mode: ScanMode,
    /// Recover mode: search all supports instead of solving on the true one.
    pub support_search: bool,
    pub recovery: RecoveryConfig,
    pub certify: CertifyConfig,
    /// Fill the `ms` column with measured wall time (otherwise 0).
    pub timing: bool,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            n_values: vec![8],
            m_min: 1,
            m_max: 4,
            m_above_half: None,
            field: Field::Real,
            trials: 10,
            seed: 0,
            mode: ScanMode::Recover,
            support_search: false,
            recovery: RecoveryConfig::default(),
            certify: CertifyConfig::default(),
            timing: false,
        }
    }
}

impl ScanConfig {
    /// The `(N, M)` cells in scan order.
    pub fn cells(&self) -> Vec<(usize, usize)> {
        let mut ns = self.n_values.clone();
        ns.sort_unstable();
        ns.dedup();
        ns.into_iter()
            .flat_map(|n| {
                let cap = self.m_above_half.map_or(n, |k| (n / 2 + k).min(n)).min(self.m_max);
                (self.m_min..=cap).map(move |m| (n, m))
            })
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidInput("trials must be at least 1".into()));
        }
        if self.n_values.is_empty() || self.m_min == 0 || self.m_min > self.m_max {
            return Err(Error::InvalidInput("scan ranges must be non-empty with m >= 1".into()));
        }
        if let Some(&n) = self.n_values.iter().find(|&&n| n == 0 || n > MAX_SCAN_N) {
            return Err(Error::Guard(format!("N = {n} outside 1..={MAX_SCAN_N}")));
        }
        if self.cells().is_empty() {
            return Err(Error::InvalidInput("no (N, M) cell satisfies the ranges".into()));
        }
        if self.mode == ScanMode::Recover && self.support_search {
            for (n, m) in self.cells() {
                let count = binomial(n, m);
                if count > self.recovery.enumeration_cap as u128 {
                    return Err(Error::Guard(format!("C({n},{m}) = {count} exceeds the enumeration cap {}", self.recovery.enumeration_cap)));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanCell {
    pub n: usize,
    pub m: usize,
    pub field: Field,
    pub mode: ScanMode,
    pub successes: usize,
    pub trials: usize,
    pub rate: f64,
    pub mean_residual: f64,
    /// Summed trial wall time in milliseconds.
    pub ms: u64,
}

struct TrialOutcome {
    success: bool,
    residual: f64,
    ms: u64,
}

fn recover_trial(cfg: &ScanConfig, n: usize, m: usize, seed: u64) -> Result<(bool, f64)> {
    let basis = sample_generic_basis(n, cfg.field, derive_seed(seed, &[0]))?;
    let mut rng = rng_from_seed(derive_seed(seed, &[1]));
    let s = Support::random(n, m, &mut rng)?;
    let v = sample_sparse_vector(&s, cfg.field, derive_seed(seed, &[2]))?;
    let x = embed(&v, &basis)?;
    let target = match cfg.field {
        Field::Real => Target::Reduced(measure_reduced(&x)?),
        Field::Complex => Target::PowerSpectrum(power_spectrum(&x)),
    };
    let problem = RecoveryProblem::new(basis.clone(), m, target)?;
    let rec = RecoveryConfig { seed: derive_seed(seed, &[3]), ..cfg.recovery };
    let res = if cfg.support_search { solve_support_search(&problem, &rec)? } else { solve_fixed_support(&problem, &s, &rec)? };
    let success = res.converged
        && res.ambiguity.is_none()
        && equivalent_up_to_phase(&res.signal(&basis), x.entries(), cfg.field, cfg.recovery.ambiguity_tol);
    Ok((success, res.residual))
}

fn certify_trial(cfg: &ScanConfig, n: usize, m: usize, seed: u64, mode: CertifyMode) -> Result<(bool, f64)> {
    let basis = sample_generic_basis(n, cfg.field, derive_seed(seed, &[0]))?;
    let certify = CertifyConfig {
        search: SearchConfig { seed: derive_seed(seed, &[1]), ..cfg.certify.search },
        recovery: RecoveryConfig { seed: derive_seed(seed, &[2]), ..cfg.certify.recovery },
        ..cfg.certify
    };
    let report = certify_basis(&basis, m, mode, &certify)?;
    let v = predicted_guarantee(n, m, cfg.field)?;
    let expect_pass = match mode {
        CertifyMode::Every => v.level == GuaranteeLevel::EveryVector,
        CertifyMode::Generic => v.level != GuaranteeLevel::NoGuarantee,
    };
    let residual = report.min_best_residual();
    Ok(((report.verdict == Verdict::PresumedPass) == expect_pass, if residual.is_finite() { residual } else { 0.0 }))
}

/// Runs every trial of every cell. Trials are independent and seeded from
/// `(seed, N, M, trial)`, so the output does not depend on the thread count.
pub fn run_scan(cfg: &ScanConfig) -> Result<Vec<ScanCell>> {
    cfg.validate()?;
    let cells = cfg.cells();
    let jobs: Vec<(usize, usize)> = (0..cells.len()).flat_map(|c| (0..cfg.trials).map(move |t| (c, t))).collect();
    let outcomes = jobs
        .par_iter()
        .map(|&(c, t)| {
            let (n, m) = cells[c];
            let seed = derive_seed(cfg.seed, &[n as u64, m as u64, t as u64]);
            let start = Instant::now();
            let (success, residual) = match cfg.mode {
                ScanMode::Recover => recover_trial(cfg, n, m, seed)?,
                ScanMode::CertifyGeneric => certify_trial(cfg, n, m, seed, CertifyMode::Generic)?,
                ScanMode::CertifyEvery => certify_trial(cfg, n, m, seed, CertifyMode::Every)?,
            };
            let ms = if cfg.timing { start.elapsed().as_millis() as u64 } else { 0 };
            Ok(TrialOutcome { success, residual, ms })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(cells
        .iter()
        .enumerate()
        .map(|(c, &(n, m))| {
            let slice = &outcomes[c * cfg.trials..(c + 1) * cfg.trials];
            let successes = slice.iter().filter(|o| o.success).count();
            ScanCell {
                n,
                m,
                field: cfg.field,
                mode: cfg.mode,
                successes,
                trials: cfg.trials,
                rate: successes as f64 / cfg.trials as f64,
                mean_residual: slice.iter().map(|o| o.residual).sum::<f64>() / cfg.trials as f64,
                ms: slice.iter().map(|o| o.ms).sum(),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::Parse(format!("unknown format `{other}`"))),
        }
    }
}

const CSV_HEADER: &str = "n,m,field,mode,successes,trials,rate,mean_residual,ms";

pub fn cells_to_csv(cells: &[ScanCell]) -> String {
    let mut out = format!("{CSV_HEADER}\n");
    for c in cells {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{:e},{}\n",
            c.n, c.m, c.field, c.mode, c.successes, c.trials, c.rate, c.mean_residual, c.ms
        ));
    }
    out
}

pub fn cells_from_csv(text: &str) -> Result<Vec<ScanCell>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(CSV_HEADER) {
        return Err(Error::Parse("unexpected scan CSV header".into()));
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 9 {
                return Err(Error::Parse(format!("expected 9 columns in `{line}`")));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("`{s}`: {e}")));
            let int = |s: &str| s.parse::<usize>().map_err(|e| Error::Parse(format!("`{s}`: {e}")));
            Ok(ScanCell {
                n: int(f[0])?,
                m: int(f[1])?,
                field: f[2].parse()?,
                mode: f[3].parse()?,
                successes: int(f[4])?,
                trials: int(f[5])?,
                rate: num(f[6])?,
                mean_residual: num(f[7])?,
                ms: f[8].parse().map_err(|e| Error::Parse(format!("`{}`: {e}", f[8])))?,
            })
        })
        .collect()
}

pub fn render_report(cells: &[ScanCell], format: ReportFormat) -> Result<String> {
    Ok(match format {
        ReportFormat::Csv => cells_to_csv(cells),
        ReportFormat::Json => serde_json::to_string_pretty(cells)? + "\n",
    })
}

pub fn emit_report(cells: &[ScanCell], format: ReportFormat, path: &Path) -> Result<()> {
    std::fs::write(path, render_report(cells, format)?)?;
    Ok(())
}
