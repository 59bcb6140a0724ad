//! Exact diagonalization and unitary time evolution.
//!
//! Evolution is spectral: ψ(t) = Σ_n e^{-iE_n t} ⟨φ_n|ψ0⟩ φ_n, exact up to
//! diagonalization error. Energies are in units of Δ and times in 1/Δ
//! (ħ = 1), matching the built-in network normalization.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::network::{AbcParams, Hamiltonian};
use crate::C64;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("eigensolver failed to converge")]
    ConvergenceFailure,
    #[error("dimension mismatch: state has {state} amplitudes, system has {system}")]
    DimensionMismatch { state: usize, system: usize },
    #[error("state norm {0} is not 1")]
    NotNormalized(f64),
}

/// Eigendecomposition of a real symmetric Hamiltonian: ascending energies
/// and the matching orthonormal eigenvectors as matrix columns, each with
/// its first significant component made positive.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    energies: Vec<f64>,
    vectors: DMatrix<f64>,
}

impl EigenSystem {
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Eigenvectors as columns, ordered like `energies`.
    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// Overlaps ⟨φ_n|ψ⟩ for all eigenvectors.
    pub fn overlaps(&self, state: &QuantumState) -> Result<DVector<C64>, DynamicsError> {
        if state.dim() != self.dim() {
            return Err(DynamicsError::DimensionMismatch {
                state: state.dim(),
                system: self.dim(),
            });
        }
        let re = state.amplitudes.map(|a| a.re);
        let im = state.amplitudes.map(|a| a.im);
        let cre = self.vectors.tr_mul(&re);
        let cim = self.vectors.tr_mul(&im);
        Ok(DVector::from_fn(self.dim(), |n, _| {
            C64::new(cre[n], cim[n])
        }))
    }
}

/// Complex amplitude vector over the sites, unit norm.
#[derive(Debug, Clone)]
pub struct QuantumState {
    amplitudes: DVector<C64>,
}

impl QuantumState {
    /// Excitation localized at matrix index `site`.
    pub fn basis(n: usize, site: usize) -> QuantumState {
        assert!(site < n, "site index out of range");
        let mut amplitudes = DVector::zeros(n);
        amplitudes[site] = C64::new(1.0, 0.0);
        QuantumState { amplitudes }
    }

    /// Accepts a vector already normalized to 1 within 1e-12.
    pub fn from_amplitudes(amplitudes: DVector<C64>) -> Result<QuantumState, DynamicsError> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(DynamicsError::NotNormalized(norm));
        }
        Ok(QuantumState { amplitudes })
    }

    /// Rescales an arbitrary nonzero vector to unit norm.
    pub fn normalized(amplitudes: DVector<C64>) -> Result<QuantumState, DynamicsError> {
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(DynamicsError::NotNormalized(norm));
        }
        Ok(QuantumState {
            amplitudes: amplitudes / C64::new(norm, 0.0),
        })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitude(&self, site: usize) -> C64 {
        self.amplitudes[site]
    }

    pub fn probability(&self, site: usize) -> f64 {
        self.amplitudes[site].norm_sqr()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Overlap ⟨self|other⟩.
    pub fn inner(&self, other: &QuantumState) -> C64 {
        self.amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

/// Eigendecomposition with deterministic ordering: ascending energy, each
/// eigenvector's first component above 1e-9 in magnitude made positive.
pub fn diagonalize(h: &Hamiltonian) -> Result<EigenSystem, DynamicsError> {
    let se = h
        .matrix()
        .clone()
        .try_symmetric_eigen(f64::EPSILON, 0)
        .ok_or(DynamicsError::ConvergenceFailure)?;
    let n = h.dim();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));

    let energies: Vec<f64> = order.iter().map(|&k| se.eigenvalues[k]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        let mut v = se.eigenvectors.column(k).clone_owned();
        if let Some(lead) = v.iter().find(|x| x.abs() > 1e-9) {
            if *lead < 0.0 {
                v.neg_mut();
            }
        }
        vectors.set_column(col, &v);
    }
    Ok(EigenSystem { energies, vectors })
}

/// ψ(t) = Σ_n e^{-iE_n t} ⟨φ_n|ψ0⟩ φ_n. At t = 0 the input is returned
/// unchanged.
pub fn evolve(
    eig: &EigenSystem,
    psi0: &QuantumState,
    t: f64,
) -> Result<QuantumState, DynamicsError> {
    if psi0.dim() != eig.dim() {
        return Err(DynamicsError::DimensionMismatch {
            state: psi0.dim(),
            system: eig.dim(),
        });
    }
    if t == 0.0 {
        return Ok(psi0.clone());
    }
    let c = eig.overlaps(psi0)?;
    let phased = DVector::from_fn(eig.dim(), |n, _| {
        let phase = C64::new(0.0, -eig.energies[n] * t).exp();
        phase * c[n]
    });
    let re = phased.map(|z| z.re);
    let im = phased.map(|z| z.im);
    let out_re = &eig.vectors * re;
    let out_im = &eig.vectors * im;
    let amplitudes = DVector::from_fn(eig.dim(), |k, _| C64::new(out_re[k], out_im[k]));
    Ok(QuantumState { amplitudes })
}

/// F(t) = |⟨ψf| e^{-itH} |ψ0⟩|².
pub fn fidelity(
    eig: &EigenSystem,
    psi0: &QuantumState,
    psif: &QuantumState,
    t: f64,
) -> Result<f64, DynamicsError> {
    if psif.dim() != eig.dim() {
        return Err(DynamicsError::DimensionMismatch {
            state: psif.dim(),
            system: eig.dim(),
        });
    }
    let psit = evolve(eig, psi0, t)?;
    Ok(psif.inner(&psit).norm_sqr())
}

/// One term of the fidelity expansion F(t) = Σ α_ij cos((E_j - E_i) t).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosineTerm {
    pub amplitude: f64,
    pub frequency: f64,
}

/// Expansion coefficients α_ij = ⟨φ_j|ψf⟩⟨ψf|φ_i⟩⟨φ_i|ψ0⟩⟨ψ0|φ_j⟩ with
/// frequencies E_j - E_i; terms with |α| ≤ 1e-14 are dropped. The cosine
/// form assumes states with real amplitudes (the α are then real).
pub fn fidelity_cosine_expansion(
    eig: &EigenSystem,
    psi0: &QuantumState,
    psif: &QuantumState,
) -> Result<Vec<CosineTerm>, DynamicsError> {
    let c0 = eig.overlaps(psi0)?;
    let cf = eig.overlaps(psif)?;
    let n = eig.dim();
    let mut terms = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let alpha = cf[j] * cf[i].conj() * c0[i] * c0[j].conj();
            if alpha.norm() > 1e-14 {
                terms.push(CosineTerm {
                    amplitude: alpha.re,
                    frequency: eig.energies[j] - eig.energies[i],
                });
            }
        }
    }
    Ok(terms)
}

/// The seventeen single-excitation eigenenergies of the double-square ABC
/// structure, grouped by the reduction stage at which they decouple. Values
/// are in units of Δ.
#[derive(Debug, Clone, PartialEq)]
pub struct AbcSpectrum {
    /// Decoupled going from 17 sites to the 11-site quotient graph.
    pub six_decoupled: [f64; 6],
    /// Decoupled going from 11 sites to the 9-site chain.
    pub two_decoupled: [f64; 2],
    /// The nine chain eigenenergies ±√(3δ²+3Δ²±√(δ⁴+9Δ⁴)),
    /// ±√(δ²+3Δ²±√(δ⁴+9Δ⁴)) and 0, ascending.
    pub chain: [f64; 9],
}

impl AbcSpectrum {
    /// All seventeen values as one ascending list.
    pub fn all_seventeen(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(17);
        out.extend_from_slice(&self.six_decoupled);
        out.extend_from_slice(&self.two_decoupled);
        out.extend_from_slice(&self.chain);
        out.sort_by(f64::total_cmp);
        out
    }
}

/// Closed-form ABC spectrum at coupling ratio r = δ/Δ, in units of Δ.
pub fn analytic_abc_spectrum(params: &AbcParams) -> AbcSpectrum {
    let r = params.ratio();
    let root = (r.powi(4) + 9.0).sqrt();
    let e_big = (3.0 * r * r + 3.0 + root).sqrt();
    let e_small = (3.0 * r * r + 3.0 - root).sqrt();
    let f_big = (r * r + 3.0 + root).sqrt();
    let f_small = (r * r + 3.0 - root).sqrt();
    let s2 = std::f64::consts::SQRT_2;
    AbcSpectrum {
        six_decoupled: [-s2, -s2, 0.0, 0.0, s2, s2],
        two_decoupled: [0.0, 0.0],
        chain: [
            -e_big, -f_big, -e_small, -f_small, 0.0, f_small, e_small, f_big, e_big,
        ],
    }
}
