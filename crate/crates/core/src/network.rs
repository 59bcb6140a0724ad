//! Spin-network graphs, the built-in two-coupling structures, and
//! single-excitation Hamiltonian assembly.
//!
//! A [`SpinNetwork`] is a labelled weighted graph: sites carry an optional
//! A/B/C tag and an on-site energy, edges carry an exchange coupling. All
//! built-in structures are expressed in units of the strong coupling
//! (Δ = 1), so times reported elsewhere are t·Δ.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Designated-site tag. B is the injection site; A and C are the pair
/// between which entanglement is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SiteLabel {
    A,
    B,
    C,
}

impl std::fmt::Display for SiteLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SiteLabel::A => write!(f, "A"),
            SiteLabel::B => write!(f, "B"),
            SiteLabel::C => write!(f, "C"),
        }
    }
}

/// One qubit site of the graph.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Site {
    pub id: usize,
    pub label: Option<SiteLabel>,
    pub epsilon: f64,
}

/// Undirected coupling between two sites, identified by site ids.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    #[serde(rename = "J")]
    pub coupling: f64,
}

/// Structure tag for the built-in graphs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NetworkKind {
    Full17,
    Quotient11,
    Chain9,
    Square9,
    Custom,
}

impl std::fmt::Display for NetworkKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            NetworkKind::Full17 => "full17",
            NetworkKind::Quotient11 => "quotient11",
            NetworkKind::Chain9 => "chain9",
            NetworkKind::Square9 => "square9",
            NetworkKind::Custom => "custom",
        };
        write!(f, "{s}")
    }
}

/// Weak/strong coupling pair (δ, Δ). Builders normalize to Δ = 1, so only
/// the ratio δ/Δ matters for the dynamics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbcParams {
    delta: f64,
    big_delta: f64,
}

impl AbcParams {
    /// Validates 0 < δ ≤ Δ.
    pub fn new(delta: f64, big_delta: f64) -> Result<Self, NetworkError> {
        if !(big_delta > 0.0 && big_delta.is_finite()) {
            return Err(NetworkError::InvalidCouplingPair { delta, big_delta });
        }
        if !(delta > 0.0 && delta <= big_delta && delta.is_finite()) {
            return Err(NetworkError::InvalidCouplingPair { delta, big_delta });
        }
        Ok(Self { delta, big_delta })
    }

    /// Couplings from a bare ratio r = δ/Δ ∈ (0, 1].
    pub fn from_ratio(ratio: f64) -> Result<Self, NetworkError> {
        if !(ratio > 0.0 && ratio <= 1.0 && ratio.is_finite()) {
            return Err(NetworkError::InvalidRatio(ratio));
        }
        Ok(Self {
            delta: ratio,
            big_delta: 1.0,
        })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn big_delta(&self) -> f64 {
        self.big_delta
    }

    pub fn ratio(&self) -> f64 {
        self.delta / self.big_delta
    }

    /// Same ratio expressed in units of the strong coupling (Δ = 1), the
    /// convention the builders store networks in.
    pub fn normalized(&self) -> AbcParams {
        AbcParams {
            delta: self.ratio(),
            big_delta: 1.0,
        }
    }
}

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("coupling ratio {0} outside (0, 1]")]
    InvalidRatio(f64),
    #[error("invalid coupling pair: delta={delta}, Delta={big_delta} (need 0 < delta <= Delta)")]
    InvalidCouplingPair { delta: f64, big_delta: f64 },
    #[error("duplicate site id {0}")]
    DuplicateSiteId(usize),
    #[error("self-loop on site {0}")]
    SelfLoop(usize),
    #[error("duplicate edge between sites {0} and {1}")]
    DuplicateEdge(usize, usize),
    #[error("edge references unknown site id {0}")]
    UnknownSite(usize),
    #[error("site label {0} appears more than once")]
    DuplicateLabel(SiteLabel),
    #[error("non-finite value on {0}")]
    NonFinite(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Labelled weighted graph with on-site energies.
///
/// Sites are kept sorted by id; the position of a site in that order is its
/// row/column in the assembled Hamiltonian. Built-in structures use ids
/// 0..N-1, so id and matrix index coincide for them.
#[derive(Debug, Clone)]
pub struct SpinNetwork {
    sites: Vec<Site>,
    edges: Vec<Edge>,
    kind: NetworkKind,
    abc: Option<AbcParams>,
}

impl SpinNetwork {
    /// Validating constructor for arbitrary graphs.
    pub fn new(
        sites: Vec<Site>,
        edges: Vec<Edge>,
        kind: NetworkKind,
    ) -> Result<Self, NetworkError> {
        let mut sites = sites;
        sites.sort_by_key(|s| s.id);
        for w in sites.windows(2) {
            if w[0].id == w[1].id {
                return Err(NetworkError::DuplicateSiteId(w[0].id));
            }
        }
        for label in [SiteLabel::A, SiteLabel::B, SiteLabel::C] {
            if sites.iter().filter(|s| s.label == Some(label)).count() > 1 {
                return Err(NetworkError::DuplicateLabel(label));
            }
        }
        for s in &sites {
            if !s.epsilon.is_finite() {
                return Err(NetworkError::NonFinite(format!("site {} epsilon", s.id)));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for e in &edges {
            if e.i == e.j {
                return Err(NetworkError::SelfLoop(e.i));
            }
            if !e.coupling.is_finite() {
                return Err(NetworkError::NonFinite(format!("edge ({}, {})", e.i, e.j)));
            }
            let key = (e.i.min(e.j), e.i.max(e.j));
            if !seen.insert(key) {
                return Err(NetworkError::DuplicateEdge(key.0, key.1));
            }
        }
        let net = Self {
            sites,
            edges,
            kind,
            abc: None,
        };
        for e in &net.edges {
            for id in [e.i, e.j] {
                if net.index_of_id(id).is_none() {
                    return Err(NetworkError::UnknownSite(id));
                }
            }
        }
        Ok(net)
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn kind(&self) -> NetworkKind {
        self.kind
    }

    /// Matrix index of a site id.
    pub fn index_of_id(&self, id: usize) -> Option<usize> {
        self.sites.binary_search_by_key(&id, |s| s.id).ok()
    }

    /// Matrix index of the site carrying `label`.
    pub fn labelled_site(&self, label: SiteLabel) -> Option<usize> {
        self.sites.iter().position(|s| s.label == Some(label))
    }

    /// Neighbour matrix indices of the site at matrix index `idx`.
    pub fn neighbors(&self, idx: usize) -> Vec<usize> {
        let id = self.sites[idx].id;
        let mut out = Vec::new();
        for e in &self.edges {
            if e.i == id {
                out.push(self.index_of_id(e.j).expect("validated edge"));
            } else if e.j == id {
                out.push(self.index_of_id(e.i).expect("validated edge"));
            }
        }
        out.sort_unstable();
        out
    }

    pub fn degree(&self, idx: usize) -> usize {
        self.neighbors(idx).len()
    }

    /// Breadth-first connectivity over the whole site set.
    pub fn is_connected(&self) -> bool {
        if self.sites.is_empty() {
            return true;
        }
        let n = self.n_sites();
        let mut seen = vec![false; n];
        let mut queue = std::collections::VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for v in self.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == n
    }

    /// The (δ, Δ) pair the structure was built with, or an inferred pair for
    /// structures loaded from JSON with a built-in kind tag.
    pub fn abc_params(&self) -> Option<AbcParams> {
        if let Some(p) = self.abc {
            return Some(p);
        }
        self.infer_abc_params()
    }

    /// Recover (δ, Δ) from the coupling pattern of a built-in ABC kind.
    /// The A-incident edges fix δ, the weakest edge not touching A, B or C
    /// fixes Δ, each up to the per-structure √2/√3 factors.
    fn infer_abc_params(&self) -> Option<AbcParams> {
        let (weak_factor, strong_factor) = match self.kind {
            NetworkKind::Full17 => (1.0, 1.0),
            NetworkKind::Quotient11 => (SQRT2, 1.0),
            NetworkKind::Chain9 => (SQRT2, 3f64.sqrt()),
            _ => return None,
        };
        let a_id = self.sites[self.labelled_site(SiteLabel::A)?].id;
        let labelled: Vec<usize> = self
            .sites
            .iter()
            .filter(|s| s.label.is_some())
            .map(|s| s.id)
            .collect();
        let weak_edge = self.edges.iter().find(|e| e.i == a_id || e.j == a_id)?;
        let strong = self
            .edges
            .iter()
            .filter(|e| !labelled.contains(&e.i) && !labelled.contains(&e.j))
            .map(|e| e.coupling)
            .fold(f64::INFINITY, f64::min);
        if !strong.is_finite() {
            return None;
        }
        AbcParams::new(weak_edge.coupling / weak_factor, strong / strong_factor).ok()
    }

    /// The site involution (as matrix indices) that fixes B and swaps A with
    /// C for built-in structures; `None` for custom graphs.
    pub fn mirror_permutation(&self) -> Option<Vec<usize>> {
        let n = self.n_sites();
        match self.kind {
            NetworkKind::Square9 | NetworkKind::Chain9 | NetworkKind::Full17 => {
                Some((0..n).map(|i| n - 1 - i).collect())
            }
            NetworkKind::Quotient11 => Some(vec![10, 9, 7, 8, 6, 5, 4, 2, 3, 1, 0]),
            NetworkKind::Custom => None,
        }
    }

    /// Value mutation for disorder; the site set itself is fixed.
    pub(crate) fn sites_mut(&mut self) -> &mut [Site] {
        &mut self.sites
    }

    /// Value mutation for disorder; the edge set itself is fixed.
    pub(crate) fn edges_mut(&mut self) -> &mut [Edge] {
        &mut self.edges
    }

    /// Copy with every coupling and on-site energy multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> SpinNetwork {
        let mut out = self.clone();
        for s in &mut out.sites {
            s.epsilon *= factor;
        }
        for e in &mut out.edges {
            e.coupling *= factor;
        }
        out.abc = None;
        out
    }

    pub fn to_json(&self) -> String {
        let doc = JsonNetwork {
            sites: self.sites.clone(),
            edges: self.edges.clone(),
            kind: self.kind,
        };
        serde_json::to_string_pretty(&doc).expect("network serialization")
    }

    pub fn from_json(text: &str) -> Result<Self, NetworkError> {
        let doc: JsonNetwork = serde_json::from_str(text)?;
        Self::new(doc.sites, doc.edges, doc.kind)
    }
}

#[derive(Serialize, Deserialize)]
struct JsonNetwork {
    sites: Vec<Site>,
    edges: Vec<Edge>,
    kind: NetworkKind,
}

/// Real symmetric single-excitation Hamiltonian in the site basis:
/// off-diagonal entries are the couplings, diagonal entries the on-site
/// energies.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    matrix: DMatrix<f64>,
}

impl Hamiltonian {
    pub fn from_matrix(matrix: DMatrix<f64>) -> Self {
        assert_eq!(matrix.nrows(), matrix.ncols(), "square matrix required");
        Self { matrix }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Assemble the single-excitation Hamiltonian matrix of a network.
pub fn assemble_hamiltonian(net: &SpinNetwork) -> Hamiltonian {
    let n = net.n_sites();
    let mut m = DMatrix::zeros(n, n);
    for (idx, s) in net.sites().iter().enumerate() {
        m[(idx, idx)] = s.epsilon;
    }
    for e in net.edges() {
        let i = net.index_of_id(e.i).expect("validated edge");
        let j = net.index_of_id(e.j).expect("validated edge");
        m[(i, j)] = e.coupling;
        m[(j, i)] = e.coupling;
    }
    Hamiltonian::from_matrix(m)
}

/// Edges of a 3x3 grid graph in row-major site order (id = 3*row + col).
fn grid3_edges() -> Vec<(usize, usize)> {
    let mut edges = Vec::with_capacity(12);
    for r in 0..3 {
        for c in 0..3 {
            let i = 3 * r + c;
            if c < 2 {
                edges.push((i, i + 1));
            }
            if r < 2 {
                edges.push((i, i + 3));
            }
        }
    }
    edges
}

/// Uniform 3x3 square grid. Opposite corners (ids 0 and 8) are a perfect
/// state transfer pair.
pub fn build_square3x3(coupling: f64) -> SpinNetwork {
    assert!(
        coupling > 0.0 && coupling.is_finite(),
        "coupling must be positive"
    );
    let sites = (0..9)
        .map(|id| Site {
            id,
            label: None,
            epsilon: 0.0,
        })
        .collect();
    let edges = grid3_edges()
        .into_iter()
        .map(|(i, j)| Edge { i, j, coupling })
        .collect();
    let mut net = SpinNetwork::new(sites, edges, NetworkKind::Square9).expect("valid builder");
    net.abc = None;
    net
}

/// Two 3x3 square grids sharing one corner, with the two-coupling scheme:
/// every edge incident to A (far corner of the first grid), B (the shared
/// corner) or C (far corner of the second grid) is weak (δ), all other
/// edges strong (Δ). 17 sites, 24 edges, normalized to Δ = 1.
pub fn build_double_square_abc(params: &AbcParams) -> SpinNetwork {
    let r = params.ratio();
    // Grid 1 occupies ids 0..=8 (A = 0, shared corner B = 8); grid 2 reuses
    // B as its local corner 0 and occupies ids 9..=16 (C = 16).
    let g2 = |local: usize| if local == 0 { 8 } else { 8 + local };
    let mut pairs: Vec<(usize, usize)> = grid3_edges();
    pairs.extend(grid3_edges().into_iter().map(|(i, j)| (g2(i), g2(j))));

    let special = [0usize, 8, 16];
    let sites = (0..17)
        .map(|id| Site {
            id,
            label: match id {
                0 => Some(SiteLabel::A),
                8 => Some(SiteLabel::B),
                16 => Some(SiteLabel::C),
                _ => None,
            },
            epsilon: 0.0,
        })
        .collect();
    let edges = pairs
        .into_iter()
        .map(|(i, j)| {
            let weak = special.contains(&i) || special.contains(&j);
            Edge {
                i,
                j,
                coupling: if weak { r } else { 1.0 },
            }
        })
        .collect();
    let mut net = SpinNetwork::new(sites, edges, NetworkKind::Full17).expect("valid builder");
    net.abc = Some(params.normalized());
    net
}

/// Nine-site open chain equivalent to the double square on the A/B/C sites:
/// couplings (√2δ, √3Δ, √3Δ, √2δ, √2δ, √3Δ, √3Δ, √2δ) with A, B, C at the
/// ends and centre. Normalized to Δ = 1.
pub fn build_quotient_chain_abc(params: &AbcParams) -> SpinNetwork {
    let r = params.ratio();
    let s3 = 3f64.sqrt();
    let couplings = [SQRT2 * r, s3, s3, SQRT2 * r, SQRT2 * r, s3, s3, SQRT2 * r];
    let sites = (0..9)
        .map(|id| Site {
            id,
            label: match id {
                0 => Some(SiteLabel::A),
                4 => Some(SiteLabel::B),
                8 => Some(SiteLabel::C),
                _ => None,
            },
            epsilon: 0.0,
        })
        .collect();
    let edges = couplings
        .iter()
        .enumerate()
        .map(|(i, &coupling)| Edge {
            i,
            j: i + 1,
            coupling,
        })
        .collect();
    let mut net = SpinNetwork::new(sites, edges, NetworkKind::Chain9).expect("valid builder");
    net.abc = Some(params.normalized());
    net
}

/// Eleven-site quotient of the double square: the coarsest equitable
/// partition seeded at A, with couplings rescaled by √(d_ij d_ji).
pub fn build_quotient_graph_abc(
    params: &AbcParams,
) -> Result<SpinNetwork, crate::partition::PartitionError> {
    let full = build_double_square_abc(params);
    let a_id = full.sites()[full.labelled_site(SiteLabel::A).expect("A labelled")].id;
    let part = crate::partition::coarsest_equitable_partition(&full, a_id)?;
    let mut net = crate::partition::quotient_graph(&full, &part)?;
    net.kind = NetworkKind::Quotient11;
    net.abc = Some(params.normalized());
    Ok(net)
}
