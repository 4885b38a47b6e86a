//! Certification of a whole basis at a given sparsity, over supports and
//! support pairs.

use num_complex::Complex64;
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::operator::{build_complex_pair_operator, build_real_pair_operator, build_real_single_operator, MeasurementOperator};
use super::search::{lifted_separation, search_with_seeds, CertResult, SearchConfig, Verdict, ViolationWitness};
use crate::error::{Error, Result};
use crate::linalg::lstsq;
use crate::model::{binomial, embed, fourier_frame, frame_from_basis, overlapping_pair_from_basis, sample_sparse_vector, Basis, OverlappingFramePair, SparseVector, Support};
use crate::recover::{accepted_solutions, embed_coeffs, equivalent_up_to_phase, solve_fixed_support, RecoveryConfig, RecoveryProblem, Target};
use crate::rng::{derive_seed, gaussian_vec, rng_from_seed};
use crate::signal::{dihedral_act, measure_reduced, power_spectrum, vector_to_json, DihedralElement, Field, Signal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CertifyMode {
    Every,
    Generic,
}

impl std::str::FromStr for CertifyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "every" => Ok(CertifyMode::Every),
            "generic" => Ok(CertifyMode::Generic),
            other => Err(Error::Parse(format!("unknown certification mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifyConfig {
    pub search: SearchConfig,
    pub support_cap: usize,
    pub pair_cap: usize,
    /// Sample supports and pairs instead of failing when a cap is exceeded.
    pub allow_sampling: bool,
    /// Trials for `generic` mode.
    pub trials: usize,
    pub recovery: RecoveryConfig,
    /// Random signals per support used to seed the search with dihedral images.
    pub dihedral_seeds: usize,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self {
            search: SearchConfig::default(),
            support_cap: 2000,
            pair_cap: 5000,
            allow_sampling: false,
            trials: 20,
            recovery: RecoveryConfig::default(),
            dihedral_seeds: 2,
        }
    }
}

/// Outcome for one support (uniqueness within a single frame).
#[derive(Debug, Clone, PartialEq)]
pub struct SupportReport {
    pub support: Support,
    pub result: CertResult,
    /// Measurement mismatch of the witness recomputed from the embedded signals.
    pub verified_residual: Option<f64>,
}

/// Outcome for one support pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairReport {
    pub first: Support,
    pub second: Support,
    pub overlap: usize,
    /// Basis index of each witness coordinate.
    pub rows_first: Vec<usize>,
    pub rows_second: Vec<usize>,
    pub result: CertResult,
    pub verified_residual: Option<f64>,
}

/// One random experiment of `generic` mode.
#[derive(Debug, Clone, PartialEq)]
pub struct GenericTrial {
    pub first: Support,
    pub second: Option<Support>,
    pub verdict: Verdict,
    /// Relative residual of the violating solution, if any.
    pub residual: Option<f64>,
    pub witness: Option<(Support, Vec<Complex64>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasisCertReport {
    pub field: Field,
    pub n: usize,
    pub m: usize,
    pub mode: CertifyMode,
    pub verdict: Verdict,
    pub sampled: bool,
    pub supports: Vec<SupportReport>,
    pub pairs: Vec<PairReport>,
    pub trials: Vec<GenericTrial>,
}

impl BasisCertReport {
    /// Smallest best residual over all searches (infinite if none ran).
    pub fn min_best_residual(&self) -> f64 {
        self.supports
            .iter()
            .map(|s| s.result.best_residual)
            .chain(self.pairs.iter().map(|p| p.result.best_residual))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn to_json(&self) -> Value {
        let f = self.field;
        json!({
            "field": f,
            "n": self.n,
            "m": self.m,
            "mode": self.mode,
            "verdict": self.verdict,
            "sampled": self.sampled,
            "supports": self.supports.iter().map(|s| json!({
                "support": s.support,
                "result": s.result.to_json(f),
                "verified_residual": s.verified_residual,
            })).collect::<Vec<_>>(),
            "pairs": self.pairs.iter().map(|p| json!({
                "first": p.first,
                "second": p.second,
                "overlap": p.overlap,
                "rows_first": p.rows_first,
                "rows_second": p.rows_second,
                "result": p.result.to_json(f),
                "verified_residual": p.verified_residual,
            })).collect::<Vec<_>>(),
            "trials": self.trials.iter().map(|t| json!({
                "first": t.first,
                "second": t.second,
                "verdict": t.verdict,
                "residual": t.residual,
                "witness": t.witness.as_ref().map(|(s, c)| json!({"support": s, "coeffs": vector_to_json(f, c)})),
            })).collect::<Vec<_>>(),
        })
    }
}

fn pair_operator(pair: &OverlappingFramePair) -> Result<MeasurementOperator> {
    let lifted = pair.map_frames(fourier_frame)?;
    match pair.first.field() {
        Field::Real => build_real_pair_operator(&lifted),
        Field::Complex => build_complex_pair_operator(&lifted),
    }
}

fn support_coords(s1: &Support, s2: &Support) -> Vec<u64> {
    s1.indices().iter().map(|&i| i as u64).chain([u64::MAX]).chain(s2.indices().iter().map(|&i| i as u64)).collect()
}

/// Starting points `(x, y)` with `y` the least-squares coordinates of a
/// dihedral image of `x` in the second frame, kept when the image lies in
/// its span. The complex case uses rotations only.
fn dihedral_seeds(basis: &Basis, pair: &OverlappingFramePair, op: &MeasurementOperator, count: usize, seed: u64) -> Vec<(Vec<Complex64>, Vec<Complex64>)> {
    let n = basis.n();
    let field = basis.field();
    let group: Vec<DihedralElement> = match field {
        Field::Real => DihedralElement::all(n),
        Field::Complex => (0..n).map(DihedralElement::rotation).collect(),
    };
    let synth_t = pair.second.matrix().transpose();
    let mut seeds = Vec::new();
    for k in 0..count {
        let mut rng = rng_from_seed(derive_seed(seed, &[k as u64]));
        let x = gaussian_vec(&mut rng, pair.first.m(), field.is_complex());
        let Ok(signal) = Signal::new(field, pair.first.synthesize(&x).expect("matching length")) else { continue };
        for &g in &group {
            let image = dihedral_act(g, &signal);
            let y = lstsq(&synth_t, image.entries());
            let back: Vec<Complex64> = (0..n).map(|j| (0..y.len()).map(|i| y[i] * synth_t[(j, i)]).sum()).collect();
            let miss = back.iter().zip(image.entries()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
            if miss <= 1e-8 * image.norm() && lifted_separation(op, &x, &y) > 1e-3 {
                seeds.push((x.clone(), y));
            }
        }
    }
    seeds
}

/// Direct measurement mismatch of a witness, bypassing the lifted operator.
fn verify_witness(basis: &Basis, rows_first: &[usize], rows_second: &[usize], w: &ViolationWitness) -> Result<f64> {
    let field = basis.field();
    let to_signal = |rows: &[usize], c: &[Complex64]| -> Result<Signal> {
        let s = Support::from_unsorted(rows.to_vec(), basis.n())?;
        let ordered: Vec<Complex64> = s.indices().iter().map(|i| c[rows.iter().position(|r| r == i).expect("row present")]).collect();
        Signal::new(field, embed_coeffs(basis, &s, &ordered))
    };
    let (x, y) = (to_signal(rows_first, &w.x)?, to_signal(rows_second, &w.y)?);
    let (a, b) = match field {
        Field::Real => (measure_reduced(&x)?.values, measure_reduced(&y)?.values),
        Field::Complex => (power_spectrum(&x).values, power_spectrum(&y).values),
    };
    Ok(a.iter().zip(&b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt())
}

/// Certifies the pair of supports `(s1, s2)` with the pair operator.
pub fn certify_pair(basis: &Basis, s1: &Support, s2: &Support, cfg: &CertifyConfig) -> Result<PairReport> {
    let pair = overlapping_pair_from_basis(basis, s1, s2)?;
    let op = pair_operator(&pair)?;
    let coords = support_coords(s1, s2);
    let seeds = dihedral_seeds(basis, &pair, &op, cfg.dihedral_seeds, derive_seed(cfg.search.seed ^ 0xD1ED, &coords));
    let search = SearchConfig { seed: derive_seed(cfg.search.seed, &coords), ..cfg.search };
    let result = search_with_seeds(&op, &search, &seeds);
    let verified_residual = result.witness.as_ref().map(|w| verify_witness(basis, &pair.rows_first, &pair.rows_second, w)).transpose()?;
    Ok(PairReport {
        first: s1.clone(),
        second: s2.clone(),
        overlap: pair.s,
        rows_first: pair.rows_first,
        rows_second: pair.rows_second,
        result,
        verified_residual,
    })
}

/// Certifies uniqueness on a single support: the single-frame operator for
/// real bases, the pair operator of the frame with itself for complex ones.
pub fn certify_support(basis: &Basis, s: &Support, cfg: &CertifyConfig) -> Result<SupportReport> {
    let frame = frame_from_basis(basis, s)?;
    let pair = OverlappingFramePair::new(frame.clone(), frame.clone(), s.m())?;
    let op = match basis.field() {
        Field::Real => build_real_single_operator(&fourier_frame(&frame)?)?,
        Field::Complex => pair_operator(&pair)?,
    };
    let coords = support_coords(s, s);
    let seeds = dihedral_seeds(basis, &pair, &op, cfg.dihedral_seeds, derive_seed(cfg.search.seed ^ 0xD1ED, &coords));
    let search = SearchConfig { seed: derive_seed(cfg.search.seed, &coords), ..cfg.search };
    let result = search_with_seeds(&op, &search, &seeds);
    let rows = s.indices().to_vec();
    let verified_residual = result.witness.as_ref().map(|w| verify_witness(basis, &rows, &rows, w)).transpose()?;
    Ok(SupportReport { support: s.clone(), result, verified_residual })
}

fn select_supports(n: usize, m: usize, cfg: &CertifyConfig) -> Result<(Vec<Support>, bool)> {
    let count = binomial(n, m);
    if count <= cfg.support_cap as u128 {
        return Ok((Support::all(n, m).collect(), false));
    }
    if !cfg.allow_sampling {
        return Err(Error::EnumerationCap { count, cap: cfg.support_cap });
    }
    let mut rng = rng_from_seed(derive_seed(cfg.search.seed, &[0x5u64, n as u64, m as u64]));
    let mut set = std::collections::BTreeSet::new();
    while set.len() < cfg.support_cap {
        set.insert(Support::random(n, m, &mut rng)?);
    }
    Ok((set.into_iter().collect(), true))
}

fn select_pairs(k: usize, cfg: &CertifyConfig) -> Result<(Vec<(usize, usize)>, bool)> {
    let count = k * k.saturating_sub(1) / 2;
    let all = || (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j)));
    if count <= cfg.pair_cap {
        return Ok((all().collect(), false));
    }
    if !cfg.allow_sampling {
        return Err(Error::EnumerationCap { count: count as u128, cap: cfg.pair_cap });
    }
    let mut rng = rng_from_seed(derive_seed(cfg.search.seed, &[0x9u64, k as u64]));
    let mut picked = sample(&mut rng, count, cfg.pair_cap).into_vec();
    picked.sort_unstable();
    let mut out = Vec::with_capacity(picked.len());
    let mut it = all().enumerate();
    for p in picked {
        for (idx, pair) in it.by_ref() {
            if idx == p {
                out.push(pair);
                break;
            }
        }
    }
    Ok((out, true))
}

fn measurement_target(x: &Signal) -> Result<Target> {
    Ok(match x.field() {
        Field::Real => Target::Reduced(measure_reduced(x)?),
        Field::Complex => Target::PowerSpectrum(power_spectrum(x)),
    })
}

fn generic_trial(basis: &Basis, m: usize, cfg: &CertifyConfig, t: usize) -> Result<GenericTrial> {
    let n = basis.n();
    let field = basis.field();
    let seed = derive_seed(cfg.search.seed, &[0x6e6u64, t as u64]);
    let mut rng = rng_from_seed(seed);
    let s1 = Support::random(n, m, &mut rng)?;
    let v: SparseVector = sample_sparse_vector(&s1, field, derive_seed(seed, &[1]))?;
    let x = embed(&v, basis)?;
    let problem = RecoveryProblem::new(basis.clone(), m, measurement_target(&x)?)?;
    let rec = RecoveryConfig { seed: derive_seed(seed, &[2]), ..cfg.recovery };
    let tol = cfg.recovery.ambiguity_tol;

    for (coeffs, residual) in accepted_solutions(&problem, &s1, &rec)? {
        let y = embed_coeffs(basis, &s1, &coeffs);
        if !equivalent_up_to_phase(x.entries(), &y, field, tol) {
            return Ok(GenericTrial { first: s1.clone(), second: None, verdict: Verdict::Fail, residual: Some(residual), witness: Some((s1, coeffs)) });
        }
    }
    let second = if binomial(n, m) > 1 {
        loop {
            let s2 = Support::random(n, m, &mut rng)?;
            if s2 != s1 {
                break Some(s2);
            }
        }
    } else {
        None
    };
    if let Some(s2) = &second {
        let res = solve_fixed_support(&problem, s2, &rec)?;
        if res.converged && !equivalent_up_to_phase(x.entries(), &res.signal(basis), field, tol) {
            return Ok(GenericTrial {
                first: s1,
                second: second.clone(),
                verdict: Verdict::Fail,
                residual: Some(res.residual),
                witness: Some((s2.clone(), res.coeffs)),
            });
        }
    }
    Ok(GenericTrial { first: s1, second, verdict: Verdict::PresumedPass, residual: None, witness: None })
}

/// Certifies a basis at sparsity `m`.
///
/// `every` searches every support with the single-frame operator and every
/// pair of distinct supports with the pair operator. `generic` draws random
/// signals and looks for a second, inequivalent solution on the same support
/// and on a random other support.
pub fn certify_basis(basis: &Basis, m: usize, mode: CertifyMode, cfg: &CertifyConfig) -> Result<BasisCertReport> {
    let n = basis.n();
    if m == 0 || m > n {
        return Err(Error::InvalidInput(format!("sparsity {m} must lie in 1..={n}")));
    }
    let mut report = BasisCertReport {
        field: basis.field(),
        n,
        m,
        mode,
        verdict: Verdict::PresumedPass,
        sampled: false,
        supports: Vec::new(),
        pairs: Vec::new(),
        trials: Vec::new(),
    };
    match mode {
        CertifyMode::Every => {
            let (supports, sampled_s) = select_supports(n, m, cfg)?;
            let (pairs, sampled_p) = select_pairs(supports.len(), cfg)?;
            report.sampled = sampled_s || sampled_p;
            report.supports = supports.iter().map(|s| certify_support(basis, s, cfg)).collect::<Result<_>>()?;
            report.pairs = pairs.iter().map(|&(i, j)| certify_pair(basis, &supports[i], &supports[j], cfg)).collect::<Result<_>>()?;
        }
        CertifyMode::Generic => {
            report.trials = (0..cfg.trials).map(|t| generic_trial(basis, m, cfg, t)).collect::<Result<_>>()?;
        }
    }
    let failed = report.supports.iter().any(|s| s.result.verdict == Verdict::Fail)
        || report.pairs.iter().any(|p| p.result.verdict == Verdict::Fail)
        || report.trials.iter().any(|t| t.verdict == Verdict::Fail);
    if failed {
        report.verdict = Verdict::Fail;
    }
    Ok(report)
}
