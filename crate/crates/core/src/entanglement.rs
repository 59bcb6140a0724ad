//! Two-qubit reduced density matrices and entanglement of formation.
//!
//! The concurrence follows Wootters: λ_i are the square roots of the
//! eigenvalues of ρρ̃ with ρ̃ = (σy⊗σy) ρ* (σy⊗σy), sorted descending, and
//! τ = (max{0, λ1-λ2-λ3-λ4})². EOF is the binary entropy of
//! x = (1+√(1-τ))/2. For the single-excitation pure states produced by the
//! dynamics the concurrence collapses to the closed form 2|ψ_A||ψ_C|, which
//! the fast evaluation paths use; the two routes agree to machine precision
//! (see the tests).

use nalgebra::{Matrix4, Vector4};
use thiserror::Error;

use crate::dynamics::{diagonalize, evolve, QuantumState};
use crate::network::{assemble_hamiltonian, SiteLabel, SpinNetwork};
use crate::C64;

#[derive(Debug, Error)]
pub enum EntanglementError {
    #[error("invalid site pair ({0}, {1})")]
    InvalidSite(usize, usize),
    #[error("density matrix violates {0}")]
    InvalidDensityMatrix(&'static str),
    #[error("rho*rho_tilde has eigenvalue {0}, below the physical floor")]
    NonPhysicalState(f64),
    #[error("label {0} missing from network")]
    MissingLabel(SiteLabel),
}

/// 4x4 density matrix of the A/C qubit pair in the ordered basis
/// (|00>, |01>, |10>, |11>), first slot A, second slot C (so |10> means A
/// excited). Hermitian, trace 1, positive semidefinite within tolerance.
#[derive(Debug, Clone)]
pub struct TwoQubitState {
    rho: Matrix4<C64>,
}

impl TwoQubitState {
    /// Validates hermiticity (1e-12), unit trace (1e-12) and positivity
    /// (eigenvalues above -1e-10).
    pub fn new(rho: Matrix4<C64>) -> Result<Self, EntanglementError> {
        if (rho - rho.adjoint()).map(|z| z.norm()).max() > 1e-12 {
            return Err(EntanglementError::InvalidDensityMatrix("hermiticity"));
        }
        let trace = rho.trace();
        if (trace.re - 1.0).abs() > 1e-12 || trace.im.abs() > 1e-12 {
            return Err(EntanglementError::InvalidDensityMatrix("unit trace"));
        }
        let eigs = hermitian_eigenvalues(&rho);
        if eigs.iter().any(|&e| e < -1e-10) {
            return Err(EntanglementError::InvalidDensityMatrix("positivity"));
        }
        Ok(Self { rho })
    }

    pub fn matrix(&self) -> &Matrix4<C64> {
        &self.rho
    }

    /// Spin-flipped partner (σy⊗σy) ρ* (σy⊗σy).
    pub fn spin_flipped(&self) -> Matrix4<C64> {
        let s = [-1.0, 1.0, 1.0, -1.0];
        Matrix4::from_fn(|a, b| self.rho[(3 - a, 3 - b)].conj() * (s[a] * s[b]))
    }
}

fn hermitian_eigenvalues(m: &Matrix4<C64>) -> Vector4<f64> {
    m.symmetric_eigen().eigenvalues
}

/// Trace out everything except sites `site_a` and `site_c` (matrix indices)
/// of a single-excitation pure state. The result has no |11> population and
/// no coherence between |00> and the one-excitation block.
pub fn reduced_density_matrix(
    state: &QuantumState,
    site_a: usize,
    site_c: usize,
) -> Result<TwoQubitState, EntanglementError> {
    let n = state.dim();
    if site_a == site_c || site_a >= n || site_c >= n {
        return Err(EntanglementError::InvalidSite(site_a, site_c));
    }
    let pa = state.amplitude(site_a);
    let pc = state.amplitude(site_c);
    let rest: f64 = (0..n)
        .filter(|&k| k != site_a && k != site_c)
        .map(|k| state.probability(k))
        .sum();
    let mut rho = Matrix4::zeros();
    rho[(0, 0)] = C64::new(rest, 0.0);
    rho[(1, 1)] = C64::new(pc.norm_sqr(), 0.0);
    rho[(2, 2)] = C64::new(pa.norm_sqr(), 0.0);
    rho[(2, 1)] = pa * pc.conj();
    rho[(1, 2)] = pc * pa.conj();
    Ok(TwoQubitState { rho })
}

/// Wootters concurrence of an arbitrary two-qubit state.
///
/// The λ_i (square roots of the ρρ̃ eigenvalues) are evaluated as the
/// singular values of A = √ρ S (√ρ)* with S = σy⊗σy, since
/// ρρ̃ = A·A^H up to similarity. Taking square roots of near-zero ρρ̃
/// eigenvalues directly would turn O(ε) roundoff into O(√ε) errors in the
/// λ_i; singular values keep the error at O(ε).
pub fn concurrence(rho: &TwoQubitState) -> Result<f64, EntanglementError> {
    let se = rho.rho.symmetric_eigen();
    if let Some(&worst) = se.eigenvalues.iter().find(|&&x| x < -1e-8) {
        return Err(EntanglementError::NonPhysicalState(worst));
    }
    // √ρ with eigenvalues below the noise floor treated as exact zeros, so
    // rank-deficient states keep exactly-zero singular values downstream
    let mut sqrt_rho = Matrix4::zeros();
    for k in 0..4 {
        if se.eigenvalues[k] > 1e-14 {
            let v = se.eigenvectors.column(k);
            sqrt_rho += (v * v.adjoint()).scale(se.eigenvalues[k].sqrt());
        }
    }
    let s = Matrix4::from_fn(|a, b| {
        if a + b == 3 {
            C64::new([-1.0, 1.0, 1.0, -1.0][a], 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let a = sqrt_rho * s * sqrt_rho.conjugate();
    // singular values via the Hermitian dilation [[0, A], [A^H, 0]],
    // whose spectrum is ±σ_i
    let mut dilation = nalgebra::SMatrix::<C64, 8, 8>::zeros();
    dilation.view_mut((0, 4), (4, 4)).copy_from(&a);
    dilation.view_mut((4, 0), (4, 4)).copy_from(&a.adjoint());
    let mut lambda: Vec<f64> = dilation
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    lambda.sort_by(|x, y| y.total_cmp(x));
    Ok((lambda[0] - lambda[1] - lambda[2] - lambda[3]).max(0.0))
}

/// Binary entropy of x = (1+√(1-C²))/2, with 0·log0 = 0.
pub fn eof_from_concurrence(c: f64) -> f64 {
    let tau = (c * c).min(1.0);
    let x = 0.5 * (1.0 + (1.0 - tau).sqrt());
    binary_entropy(x)
}

fn binary_entropy(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
}

/// Entanglement of formation of an arbitrary two-qubit state.
pub fn eof(rho: &TwoQubitState) -> Result<f64, EntanglementError> {
    Ok(eof_from_concurrence(concurrence(rho)?))
}

/// Concurrence of the A/C pair for a single-excitation pure state:
/// 2|ψ_A||ψ_C|.
pub fn single_excitation_concurrence(state: &QuantumState, site_a: usize, site_c: usize) -> f64 {
    (2.0 * state.amplitude(site_a).norm() * state.amplitude(site_c).norm()).min(1.0)
}

/// EOF of the A/C pair for a single-excitation pure state.
pub fn single_excitation_eof(state: &QuantumState, site_a: usize, site_c: usize) -> f64 {
    eof_from_concurrence(single_excitation_concurrence(state, site_a, site_c))
}

/// A-C entanglement of formation sampled on a uniform time grid after
/// injecting the excitation at `injection`.
pub fn eof_timeseries(
    net: &SpinNetwork,
    injection: SiteLabel,
    t_max: f64,
    dt: f64,
) -> Result<Vec<(f64, f64)>, EntanglementError> {
    let locate = |l: SiteLabel| {
        net.labelled_site(l)
            .ok_or(EntanglementError::MissingLabel(l))
    };
    let a = locate(SiteLabel::A)?;
    let c = locate(SiteLabel::C)?;
    let inj = locate(injection)?;
    let eig = diagonalize(&assemble_hamiltonian(net)).expect("symmetric matrix");
    let psi0 = QuantumState::basis(net.n_sites(), inj);
    let steps = (t_max / dt).round() as usize;
    let mut out = Vec::with_capacity(steps + 1);
    for step in 0..=steps {
        let t = step as f64 * dt;
        let state = evolve(&eig, &psi0, t).expect("dimension match");
        out.push((t, single_excitation_eof(&state, a, c)));
    }
    Ok(out)
}
