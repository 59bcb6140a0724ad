//! Static-disorder Monte Carlo ensembles.
//!
//! Fabrication errors are modelled as one-sided uniform perturbations
//! ε̄_i = ε_i + D·r_i·Δ of the on-site energies (diagonal disorder) or
//! J̄_ij = J_ij + D·r_i·Δ of the existing couplings (off-diagonal
//! disorder), with r_i drawn independently per perturbed quantity from
//! [0, 1). Every realization derives its generator stream solely from
//! (base seed, disorder kind, D index, realization index), so ensembles
//! are reproducible and schedule-independent.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::analysis::{find_first_peak, AbcStructure, AnalysisError, EofEvaluator};
use crate::network::{AbcParams, SiteLabel, SpinNetwork};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DisorderKind {
    Diagonal,
    OffDiagonal,
}

impl std::fmt::Display for DisorderKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DisorderKind::Diagonal => write!(f, "diagonal"),
            DisorderKind::OffDiagonal => write!(f, "offdiagonal"),
        }
    }
}

/// Disorder configuration: kind, scale D (fraction of the strong coupling,
/// expected in [0, 0.5]), ensemble size and seeding.
#[derive(Debug, Clone, Copy)]
pub struct DisorderSpec {
    pub kind: DisorderKind,
    pub scale: f64,
    pub realizations: usize,
    pub base_seed: u64,
    /// Position of `scale` within a D sweep; part of the stream derivation.
    pub d_index: usize,
    /// Extension (off by default): draw r_i from [-1, 1) instead of the
    /// one-sided [0, 1).
    pub symmetric: bool,
}

impl DisorderSpec {
    pub fn new(kind: DisorderKind, scale: f64, realizations: usize, base_seed: u64) -> Self {
        assert!(scale >= 0.0, "disorder scale must be non-negative");
        assert!(realizations >= 1, "at least one realization");
        Self {
            kind,
            scale,
            realizations,
            base_seed,
            d_index: 0,
            symmetric: false,
        }
    }

    fn at(&self, scale: f64, d_index: usize) -> Self {
        Self {
            scale,
            d_index,
            ..*self
        }
    }
}

#[derive(Debug, Error)]
pub enum DisorderError {
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

/// Ensemble statistics of the A-C entanglement at the clean first-peak
/// time `t_eval`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleResult {
    pub d: f64,
    pub mean_eof: f64,
    pub std_eof: f64,
    pub t_eval: f64,
}

fn stream_rng(
    base_seed: u64,
    kind: DisorderKind,
    d_index: usize,
    realization: usize,
) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    seed[..8].copy_from_slice(&base_seed.to_le_bytes());
    seed[8..16].copy_from_slice(&(kind as u64).to_le_bytes());
    seed[16..24].copy_from_slice(&(d_index as u64).to_le_bytes());
    seed[24..32].copy_from_slice(&(realization as u64).to_le_bytes());
    ChaCha8Rng::from_seed(seed)
}

/// Reference strong coupling of a network: Δ of its ABC parameters when
/// known, the largest coupling magnitude otherwise.
fn strong_coupling(net: &SpinNetwork) -> f64 {
    if let Some(p) = net.abc_params() {
        return p.big_delta();
    }
    net.edges()
        .iter()
        .map(|e| e.coupling.abs())
        .fold(f64::NEG_INFINITY, f64::max)
        .max(1.0)
}

/// One disorder realization. Diagonal disorder perturbs every on-site
/// energy, off-diagonal disorder every existing coupling; the edge set is
/// never changed.
pub fn perturb(net: &SpinNetwork, spec: &DisorderSpec, realization: usize) -> SpinNetwork {
    let mut rng = stream_rng(spec.base_seed, spec.kind, spec.d_index, realization);
    let amplitude = spec.scale * strong_coupling(net);
    let mut draw = move || -> f64 {
        let r: f64 = if spec.symmetric {
            rng.gen_range(-1.0..1.0)
        } else {
            rng.gen()
        };
        amplitude * r
    };
    let mut out = net.clone();
    match spec.kind {
        DisorderKind::Diagonal => {
            for s in out.sites_mut() {
                s.epsilon += draw();
            }
        }
        DisorderKind::OffDiagonal => {
            for e in out.edges_mut() {
                e.coupling += draw();
            }
        }
    }
    out
}

/// Ensemble-averaged A-C entanglement at the unperturbed first-peak time,
/// one entry per value in `d_values`. The peak time is located once on the
/// clean network and reused for every realization.
pub fn ensemble_eof(
    net: &SpinNetwork,
    spec: &DisorderSpec,
    d_values: &[f64],
) -> Result<Vec<EnsembleResult>, DisorderError> {
    let clean_peak = find_first_peak(net)?;
    let t_eval = clean_peak.t_peak;

    let mut out = Vec::with_capacity(d_values.len());
    for (d_index, &d) in d_values.iter().enumerate() {
        let spec_d = spec.at(d, d_index);
        let samples: Vec<f64> = (0..spec.realizations)
            .into_par_iter()
            .map(|realization| {
                let noisy = perturb(net, &spec_d, realization);
                let eval = EofEvaluator::new(&noisy, SiteLabel::B).expect("labels preserved");
                eval.eval(t_eval)
            })
            .collect();
        // identical samples (D = 0) must yield the sample value exactly,
        // which sum/n does not guarantee
        let (mean, std) = if samples.windows(2).all(|w| w[0] == w[1]) {
            (samples[0], 0.0)
        } else {
            let n = samples.len() as f64;
            let mean = samples.iter().sum::<f64>() / n;
            let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            (mean, var.sqrt())
        };
        out.push(EnsembleResult {
            d,
            mean_eof: mean,
            std_eof: std,
            t_eval,
        });
    }
    Ok(out)
}

/// Ensemble rows of one structure in a robustness comparison.
#[derive(Debug, Clone)]
pub struct StructureEnsemble {
    pub structure: AbcStructure,
    pub results: Vec<EnsembleResult>,
}

/// Disorder response of the full graph, quotient graph and chain at equal
/// coupling ratio. Disorder breaks the quotient equivalence, so each
/// structure is perturbed independently in its own site basis, with a
/// distinct seed stream per structure.
pub fn structure_robustness_comparison(
    params: &AbcParams,
    spec: &DisorderSpec,
    d_values: &[f64],
) -> Result<Vec<StructureEnsemble>, DisorderError> {
    let structures = [
        AbcStructure::Full17,
        AbcStructure::Quotient11,
        AbcStructure::Chain9,
    ];
    structures
        .iter()
        .enumerate()
        .map(|(k, &structure)| {
            let net = structure.build(params.ratio()).expect("valid ratio");
            let seed = spec
                .base_seed
                .wrapping_add((k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let spec_k = DisorderSpec {
                base_seed: seed,
                ..*spec
            };
            Ok(StructureEnsemble {
                structure,
                results: ensemble_eof(&net, &spec_k, d_values)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::build_quotient_chain_abc;

    fn chain(r: f64) -> SpinNetwork {
        build_quotient_chain_abc(&AbcParams::from_ratio(r).unwrap())
    }

    #[test]
    fn zero_disorder_is_identity() {
        let net = chain(0.5);
        let spec = DisorderSpec::new(DisorderKind::OffDiagonal, 0.0, 1, 99);
        let noisy = perturb(&net, &spec, 0);
        for (a, b) in net.edges().iter().zip(noisy.edges()) {
            assert_eq!(a.coupling, b.coupling);
        }
    }

    #[test]
    fn perturbation_is_one_sided_and_bounded() {
        let net = chain(0.5);
        let spec = DisorderSpec::new(DisorderKind::Diagonal, 0.5, 1, 7);
        let noisy = perturb(&net, &spec, 3);
        for (a, b) in net.sites().iter().zip(noisy.sites()) {
            let shift = b.epsilon - a.epsilon;
            assert!(
                (0.0..0.5).contains(&shift),
                "shift {shift} outside [0, 0.5)"
            );
        }
        let spec = DisorderSpec::new(DisorderKind::OffDiagonal, 0.5, 1, 7);
        let noisy = perturb(&net, &spec, 3);
        for (a, b) in net.edges().iter().zip(noisy.edges()) {
            let shift = b.coupling - a.coupling;
            assert!((0.0..0.5).contains(&shift));
        }
    }

    #[test]
    fn same_stream_reproduces_network() {
        let net = chain(0.3);
        let spec = DisorderSpec::new(DisorderKind::OffDiagonal, 0.25, 1, 1234).at(0.25, 2);
        let a = perturb(&net, &spec, 17);
        let b = perturb(&net, &spec, 17);
        for (ea, eb) in a.edges().iter().zip(b.edges()) {
            assert_eq!(ea.coupling, eb.coupling);
        }
        let c = perturb(&net, &spec, 18);
        assert!(a
            .edges()
            .iter()
            .zip(c.edges())
            .any(|(x, y)| x.coupling != y.coupling));
    }

    #[test]
    fn sparsity_preserved() {
        let net = chain(0.5);
        let spec = DisorderSpec::new(DisorderKind::OffDiagonal, 0.5, 1, 5);
        let noisy = perturb(&net, &spec, 0);
        assert_eq!(net.edges().len(), noisy.edges().len());
        for (a, b) in net.edges().iter().zip(noisy.edges()) {
            assert_eq!((a.i, a.j), (b.i, b.j));
        }
    }

    #[test]
    fn clean_entry_matches_first_peak_exactly() {
        let net = chain(0.828);
        let spec = DisorderSpec::new(DisorderKind::Diagonal, 0.5, 4, 11);
        let rows = ensemble_eof(&net, &spec, &[0.0, 0.2]).unwrap();
        let peak = find_first_peak(&net).unwrap();
        assert_eq!(rows[0].mean_eof, peak.eof_peak);
        assert_eq!(rows[0].std_eof, 0.0);
        assert_eq!(rows[0].t_eval, peak.t_peak);
        assert!(rows[1].std_eof > 0.0);
    }

    #[test]
    fn ensembles_are_reproducible() {
        let net = chain(0.6);
        let spec = DisorderSpec::new(DisorderKind::OffDiagonal, 0.3, 8, 2024);
        let a = ensemble_eof(&net, &spec, &[0.1, 0.3]).unwrap();
        let b = ensemble_eof(&net, &spec, &[0.1, 0.3]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn comparison_covers_three_structures() {
        let params = AbcParams::from_ratio(0.828).unwrap();
        let spec = DisorderSpec::new(DisorderKind::Diagonal, 0.5, 2, 3);
        let table = structure_robustness_comparison(&params, &spec, &[0.0]).unwrap();
        assert_eq!(table.len(), 3);
        // clean equivalence across structures
        let clean: Vec<f64> = table.iter().map(|s| s.results[0].mean_eof).collect();
        assert!((clean[0] - clean[1]).abs() < 1e-8);
        assert!((clean[1] - clean[2]).abs() < 1e-8);
    }

    #[test]
    fn mean_fluctuation_shrinks_with_realizations() {
        let net = chain(0.6);
        let seeds: Vec<u64> = (0..20).collect();
        let spread = |realizations: usize| -> f64 {
            let means: Vec<f64> = seeds
                .iter()
                .map(|&s| {
                    let spec = DisorderSpec::new(DisorderKind::Diagonal, 0.4, realizations, s);
                    ensemble_eof(&net, &spec, &[0.4]).unwrap()[0].mean_eof
                })
                .collect();
            let m = means.iter().sum::<f64>() / means.len() as f64;
            (means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / means.len() as f64).sqrt()
        };
        let ratio = spread(50) / spread(200);
        assert!(
            (2.0 / 1.5..2.0 * 1.5).contains(&ratio),
            "expected ~2x shrink, got {ratio}"
        );
    }
}
