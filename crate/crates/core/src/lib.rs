//! Single-excitation dynamics of engineered spin networks.
//!
//! The library builds weighted spin graphs with a two-coupling (weak δ /
//! strong Δ) scheme around three designated sites A, B and C, reduces them
//! through equitable partitions and quotient graphs, evolves the
//! single-excitation dynamics by exact diagonalization, and measures the
//! entanglement of formation generated between A and C. A disorder module
//! adds static fabrication noise and ensemble statistics on top.
//!
//! Quick tour:
//! - [`network`]: graph types, the built-in structures, Hamiltonian assembly.
//! - [`partition`]: equitable partitions, quotient graphs, dynamics checks.
//! - [`dynamics`]: eigendecomposition, time evolution, fidelity.
//! - [`entanglement`]: reduced density matrices, concurrence, EOF.
//! - [`analysis`]: peak finding, coupling-ratio sweeps, flat-ratio solving.
//! - [`disorder`]: seeded static-disorder ensembles.
//!
//! ```
//! use spinweave::analysis::find_first_peak;
//! use spinweave::network::{build_quotient_chain_abc, AbcParams};
//!
//! let params = AbcParams::from_ratio(1.0)?;
//! let chain = build_quotient_chain_abc(&params);
//! let peak = find_first_peak(&chain)?;
//! assert!((peak.t_peak - 1.97).abs() < 0.02);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod analysis;
pub mod disorder;
pub mod dynamics;
pub mod entanglement;
pub mod network;
pub mod partition;

pub use network::{AbcParams, Hamiltonian, NetworkKind, SiteLabel, SpinNetwork};

/// Complex scalar used throughout the crate.
pub type C64 = nalgebra::Complex<f64>;
