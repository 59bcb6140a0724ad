//! Peak finding, coupling-ratio sweeps, flat-ratio solving and periodicity
//! checks for the ABC structures.
//!
//! Times are in 1/Δ units throughout. Scans sample the A-C entanglement on
//! a dense grid (2000 samples per estimated oscillation period) and refine
//! the best sample by ternary search; the sweep entry points evaluate grid
//! ratios in parallel with deterministic, input-ordered results.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::dynamics::diagonalize;
use crate::entanglement::eof_from_concurrence;
use crate::network::{
    assemble_hamiltonian, build_double_square_abc, build_quotient_chain_abc,
    build_quotient_graph_abc, AbcParams, SiteLabel, SpinNetwork,
};
use crate::C64;

/// Samples per estimated period t_P in the peak scans.
const SAMPLES_PER_PERIOD: usize = 2000;
/// Relative time tolerance of the ternary refinement.
const REFINE_REL_TOL: f64 = 1e-8;
/// EOF variation across the peak bracket below which the maximum is
/// reported as a plateau.
const PLATEAU_EOF_TOL: f64 = 1e-9;
/// Search bounds for matching a ratio against the flat-ratio family.
const FLAT_MATCH_N1_MAX: u32 = 64;
const FLAT_MATCH_N2_MAX: u32 = 4;
const FLAT_MATCH_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("network carries no (delta, Delta) information")]
    MissingAbcParams,
    #[error("label {0} missing from network")]
    MissingLabel(SiteLabel),
    #[error("no coupling ratio in (0, 1) satisfies E'*{n1} = E*{n2}")]
    NoSolutionInDomain { n1: u32, n2: u32 },
    #[error("invalid flat-ratio query: n1 and n2 must be positive, got ({n1}, {n2})")]
    InvalidQuery { n1: u32, n2: u32 },
}

/// Which built-in ABC structure a sweep runs on. The chain is the default
/// choice: identical A/B/C dynamics at roughly a quarter of the matrix size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbcStructure {
    Chain9,
    Quotient11,
    Full17,
}

impl AbcStructure {
    pub fn build(&self, ratio: f64) -> Result<SpinNetwork, crate::network::NetworkError> {
        let params = AbcParams::from_ratio(ratio)?;
        Ok(match self {
            AbcStructure::Chain9 => build_quotient_chain_abc(&params),
            AbcStructure::Quotient11 => {
                build_quotient_graph_abc(&params).expect("verified builder")
            }
            AbcStructure::Full17 => build_double_square_abc(&params),
        })
    }
}

/// Trimer estimate of the EOF oscillation period,
/// t_P·Δ = π/√(3 + r² - √(9 + r⁴)); the entangled state first forms near
/// t_P/2. Monotone decreasing in r, divergent as r → 0.
pub fn trimer_period_estimate(ratio: f64) -> f64 {
    let r2 = ratio * ratio;
    std::f64::consts::PI / (3.0 + r2 - (9.0 + r2 * r2).sqrt()).sqrt()
}

/// Located entanglement maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakResult {
    /// Refined peak time (bracket midpoint when `plateau` is set).
    pub t_peak: f64,
    pub eof_peak: f64,
    /// Search window the scan covered.
    pub window: (f64, f64),
    pub kind: PeakKind,
    /// The maximum sits on a flat stretch (EOF variation below 1e-9 across
    /// the peak bracket), so `t_peak` is a representative point rather than
    /// a sharp argmax.
    pub plateau: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PeakKind {
    First,
    WindowMax,
}

impl std::fmt::Display for PeakKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PeakKind::First => write!(f, "first"),
            PeakKind::WindowMax => write!(f, "window_max"),
        }
    }
}

/// Precomputed spectral data for fast A-C entanglement evaluation of one
/// network: only the A and C rows of the eigenbasis and the overlaps with
/// the injection state enter the time dependence.
pub(crate) struct EofEvaluator {
    terms: Vec<(f64, f64, f64)>, // (energy, phi_n[A]*phi_n[B], phi_n[C]*phi_n[B])
}

impl EofEvaluator {
    pub(crate) fn new(net: &SpinNetwork, injection: SiteLabel) -> Result<Self, AnalysisError> {
        let locate = |l: SiteLabel| net.labelled_site(l).ok_or(AnalysisError::MissingLabel(l));
        let a = locate(SiteLabel::A)?;
        let c = locate(SiteLabel::C)?;
        let inj = locate(injection)?;
        let eig = diagonalize(&assemble_hamiltonian(net)).expect("symmetric matrix");
        let terms = (0..eig.dim())
            .map(|n| {
                let coef = eig.vectors()[(inj, n)];
                (
                    eig.energies()[n],
                    eig.vectors()[(a, n)] * coef,
                    eig.vectors()[(c, n)] * coef,
                )
            })
            .filter(|&(_, pa, pc)| pa != 0.0 || pc != 0.0)
            .collect();
        Ok(Self { terms })
    }

    /// A-C entanglement of formation at time t.
    pub(crate) fn eval(&self, t: f64) -> f64 {
        let mut amp_a = C64::new(0.0, 0.0);
        let mut amp_c = C64::new(0.0, 0.0);
        for &(e, pa, pc) in &self.terms {
            let (sin, cos) = (-e * t).sin_cos();
            let phase = C64::new(cos, sin);
            amp_a += phase * pa;
            amp_c += phase * pc;
        }
        eof_from_concurrence((2.0 * amp_a.norm() * amp_c.norm()).min(1.0))
    }
}

/// Dense scan over [0, t_hi] followed by ternary refinement of the best
/// sample. Ties in the scan go to the earliest time.
fn scan_and_refine(eval: &EofEvaluator, t_hi: f64, n_samples: usize) -> (f64, f64, bool) {
    let step = t_hi / n_samples as f64;
    let (best_idx, _) = (0..=n_samples)
        .into_par_iter()
        .map(|k| (k, eval.eval(k as f64 * step)))
        .reduce(
            || (0, f64::NEG_INFINITY),
            |a, b| {
                if a.1 > b.1 || (a.1 == b.1 && a.0 < b.0) {
                    a
                } else {
                    b
                }
            },
        );
    let mut lo = step * best_idx.saturating_sub(1) as f64;
    let mut hi = (step * (best_idx + 1) as f64).min(t_hi);

    // flat top: the bracket carries no usable gradient, report its middle
    let bracket_vals = [eval.eval(lo), eval.eval(0.5 * (lo + hi)), eval.eval(hi)];
    let variation = bracket_vals
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max)
        - bracket_vals.iter().cloned().fold(f64::INFINITY, f64::min);
    if variation < PLATEAU_EOF_TOL {
        let mid = 0.5 * (lo + hi);
        return (mid, eval.eval(mid), true);
    }

    while hi - lo > REFINE_REL_TOL * hi.max(1.0) {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if eval.eval(m1) < eval.eval(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    let t = 0.5 * (lo + hi);
    (t, eval.eval(t), false)
}

fn peak_in_window(
    net: &SpinNetwork,
    periods: usize,
    kind: PeakKind,
) -> Result<PeakResult, AnalysisError> {
    let ratio = net
        .abc_params()
        .ok_or(AnalysisError::MissingAbcParams)?
        .ratio();
    let t_hi = periods as f64 * trimer_period_estimate(ratio);
    let eval = EofEvaluator::new(net, SiteLabel::B)?;
    let (t_peak, eof_peak, plateau) = scan_and_refine(&eval, t_hi, SAMPLES_PER_PERIOD * periods);
    Ok(PeakResult {
        t_peak,
        eof_peak,
        window: (0.0, t_hi),
        kind,
        plateau,
    })
}

/// Highest entanglement within one estimated period [0, t_P]: the first
/// EOF peak.
pub fn find_first_peak(net: &SpinNetwork) -> Result<PeakResult, AnalysisError> {
    peak_in_window(net, 1, PeakKind::First)
}

/// Highest entanglement within [0, periods·t_P].
pub fn find_window_max(net: &SpinNetwork, periods: usize) -> Result<PeakResult, AnalysisError> {
    peak_in_window(net, periods.max(1), PeakKind::WindowMax)
}

/// Which window the sweep optimizes per ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    First,
    Window100,
}

/// Peak results over a grid of coupling ratios, evaluated in parallel,
/// output ordered like the input grid.
pub fn ratio_sweep(
    grid: &[f64],
    mode: SweepMode,
    structure: AbcStructure,
) -> Result<Vec<(f64, PeakResult)>, AnalysisError> {
    grid.par_iter()
        .map(|&r| {
            let net = structure
                .build(r)
                .map_err(|_| AnalysisError::MissingAbcParams)?;
            let peak = match mode {
                SweepMode::First => find_first_peak(&net)?,
                SweepMode::Window100 => find_window_max(&net, 100)?,
            };
            Ok((r, peak))
        })
        .collect()
}

/// Integer pair (n1, n2) of the resonance condition E'·n1 = E·n2, reduced
/// by their gcd. Since E > E' everywhere, only n1 > n2 can have a
/// solution; other pairs are accepted and report NoSolutionInDomain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlatRatioQuery {
    n1: u32,
    n2: u32,
}

impl FlatRatioQuery {
    pub fn new(n1: u32, n2: u32) -> Result<Self, AnalysisError> {
        if n1 == 0 || n2 == 0 {
            return Err(AnalysisError::InvalidQuery { n1, n2 });
        }
        let g = gcd(n1, n2);
        Ok(Self {
            n1: n1 / g,
            n2: n2 / g,
        })
    }

    pub fn n1(&self) -> u32 {
        self.n1
    }

    pub fn n2(&self) -> u32 {
        self.n2
    }
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// E(r) = √(3r² + 3 + √(r⁴+9)) in units of Δ: the larger symmetric chain
/// eigenenergy.
pub fn energy_large(r: f64) -> f64 {
    (3.0 * r * r + 3.0 + (r.powi(4) + 9.0).sqrt()).sqrt()
}

/// E'(r) = √(3r² + 3 - √(r⁴+9)): the smaller one.
pub fn energy_small(r: f64) -> f64 {
    (3.0 * r * r + 3.0 - (r.powi(4) + 9.0).sqrt()).sqrt()
}

/// Coupling ratio at which E'·n1 = E·n2, making the dynamics fully
/// periodic. Solves the closed form (with q = (n1/n2)² and
/// k = (q-1)/(q+1), r² is the root of (1-9k²)r⁴ - 18k²r² + 9(1-k²) = 0
/// in (0, 1)) and cross-validates it against a bisection of
/// E'(r)·n1 - E(r)·n2 to 1e-12.
pub fn flat_ratio(query: &FlatRatioQuery) -> Result<f64, AnalysisError> {
    let no_solution = || AnalysisError::NoSolutionInDomain {
        n1: query.n1,
        n2: query.n2,
    };
    let q = (query.n1 as f64 / query.n2 as f64).powi(2);
    let k = (q - 1.0) / (q + 1.0);
    let k2 = k * k;
    let disc = 10.0 * k2 - 1.0;
    if disc < 0.0 {
        return Err(no_solution());
    }
    let lead = 1.0 - 9.0 * k2;
    let mut root = None;
    if lead.abs() < 1e-14 {
        let u = 9.0 * (1.0 - k2) / (18.0 * k2);
        if u > 0.0 && u < 1.0 {
            root = Some(u);
        }
    } else {
        for sign in [-1.0, 1.0] {
            let u = (9.0 * k2 + sign * 3.0 * disc.sqrt()) / lead;
            if u > 0.0 && u < 1.0 {
                root = Some(u);
            }
        }
    }
    let closed = root.ok_or_else(no_solution)?.sqrt();

    // independent bisection on the defining equation
    let f = |r: f64| energy_small(r) * query.n1 as f64 - energy_large(r) * query.n2 as f64;
    let (mut lo, mut hi) = (1e-9, 1.0);
    if f(lo) >= 0.0 || f(hi) <= 0.0 {
        return Err(no_solution());
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let bisect = 0.5 * (lo + hi);
    assert!(
        (closed - bisect).abs() < 1e-10,
        "closed form {closed} and bisection {bisect} disagree for ({}, {})",
        query.n1,
        query.n2
    );
    Ok(closed)
}

/// Outcome of a revival search at one coupling ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicityResult {
    pub is_periodic: bool,
    pub revival_time: f64,
    pub revival_fidelity: f64,
}

/// Fidelity against the B-injection state as a function of time.
struct FidelityEvaluator {
    terms: Vec<(f64, f64)>, // (energy, phi_n[B]^2)
}

impl FidelityEvaluator {
    fn new(net: &SpinNetwork) -> Result<Self, AnalysisError> {
        let b = net
            .labelled_site(SiteLabel::B)
            .ok_or(AnalysisError::MissingLabel(SiteLabel::B))?;
        let eig = diagonalize(&assemble_hamiltonian(net)).expect("symmetric matrix");
        let terms = (0..eig.dim())
            .map(|n| (eig.energies()[n], eig.vectors()[(b, n)].powi(2)))
            .filter(|&(_, w)| w != 0.0)
            .collect();
        Ok(Self { terms })
    }

    fn eval(&self, t: f64) -> f64 {
        let mut overlap = C64::new(0.0, 0.0);
        for &(e, w) in &self.terms {
            let (sin, cos) = (-e * t).sin_cos();
            overlap += C64::new(cos, sin) * w;
        }
        overlap.norm_sqr()
    }
}

/// Test a coupling ratio for fully periodic dynamics. `ratio` must be the
/// ratio `net` was built with.
///
/// If `ratio` sits within 1e-6 of a flat ratio (searched over n2 ≤ 4,
/// n1 ≤ 64), the revival is evaluated at the candidate time t* = 2πn1/E and
/// judged against fidelity 1 - 1e-6. Otherwise the best revival found by
/// scanning t ∈ [t_P/10, 10·t_P] is reported with `is_periodic` false.
pub fn periodicity_check(
    net: &SpinNetwork,
    ratio: f64,
) -> Result<PeriodicityResult, AnalysisError> {
    let fid = FidelityEvaluator::new(net)?;

    let mut nearest: Option<(u32, f64)> = None; // (n1, distance)
    for n2 in 1..=FLAT_MATCH_N2_MAX {
        for n1 in (n2 + 1)..=FLAT_MATCH_N1_MAX {
            if gcd(n1, n2) != 1 {
                continue;
            }
            let query = FlatRatioQuery::new(n1, n2).expect("n1 > n2 >= 1");
            if let Ok(r_flat) = flat_ratio(&query) {
                let dist = (r_flat - ratio).abs();
                if dist < FLAT_MATCH_TOL && nearest.is_none_or(|(_, d)| dist < d) {
                    nearest = Some((n1, dist));
                }
            }
        }
    }

    if let Some((n1, _)) = nearest {
        let t_star = 2.0 * std::f64::consts::PI * n1 as f64 / energy_large(ratio);
        let f = fid.eval(t_star);
        return Ok(PeriodicityResult {
            is_periodic: f > 1.0 - 1e-6,
            revival_time: t_star,
            revival_fidelity: f,
        });
    }

    // no flat ratio nearby: report the best revival in [t_P/10, 10 t_P]
    let t_p = trimer_period_estimate(ratio);
    let (t_lo, t_hi) = (t_p / 10.0, 10.0 * t_p);
    let n = 10 * SAMPLES_PER_PERIOD;
    let step = (t_hi - t_lo) / n as f64;
    let (best_idx, _) = (0..=n)
        .into_par_iter()
        .map(|k| (k, fid.eval(t_lo + k as f64 * step)))
        .reduce(
            || (0, f64::NEG_INFINITY),
            |a, b| {
                if a.1 > b.1 || (a.1 == b.1 && a.0 < b.0) {
                    a
                } else {
                    b
                }
            },
        );
    let mut lo = t_lo + step * best_idx.saturating_sub(1) as f64;
    let mut hi = (t_lo + step * (best_idx + 1) as f64).min(t_hi);
    while hi - lo > REFINE_REL_TOL * hi.max(1.0) {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if fid.eval(m1) < fid.eval(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    let t_best = 0.5 * (lo + hi);
    Ok(PeriodicityResult {
        is_periodic: false,
        revival_time: t_best,
        revival_fidelity: fid.eval(t_best),
    })
}

/// For `samples` coupling ratios drawn uniformly from `interval` with a
/// seeded generator, the time of the highest entanglement within
/// [0, t_window]. Output order follows the draw order.
pub fn near_flat_time_study(
    interval: (f64, f64),
    samples: usize,
    t_window: f64,
    seed: u64,
    structure: AbcStructure,
) -> Result<Vec<(f64, f64)>, AnalysisError> {
    assert!(t_window > 0.0, "time window must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ratios: Vec<f64> = (0..samples)
        .map(|_| rng.gen_range(interval.0..interval.1))
        .collect();
    ratios
        .par_iter()
        .map(|&r| {
            let net = structure
                .build(r)
                .map_err(|_| AnalysisError::MissingAbcParams)?;
            let eval = EofEvaluator::new(&net, SiteLabel::B)?;
            let n = ((t_window / trimer_period_estimate(r)) * SAMPLES_PER_PERIOD as f64)
                .ceil()
                .max(SAMPLES_PER_PERIOD as f64) as usize;
            let (t, _, _) = scan_and_refine(&eval, t_window, n);
            Ok((r, t))
        })
        .collect()
}
