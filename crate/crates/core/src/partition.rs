//! Equitable partitions and quotient graphs.
//!
//! A partition groups full-graph sites into cells such that cell 0 is a
//! singleton (the seed), all sites of a cell sit at the same distance from
//! the seed, every site of cell i has the same number d_ij of neighbours in
//! cell j, and no edges join sites inside one cell. The quotient graph has
//! one site per cell, with couplings rescaled by √(d_ij·d_ji); it
//! reproduces the full graph's dynamics on the singleton cells.
//!
//! Partitions are computed on the unweighted skeleton of a graph; edge
//! weights re-enter at quotient time, where each cell pair must be
//! coupling-homogeneous.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{diagonalize, evolve, QuantumState};
use crate::entanglement::single_excitation_eof;
use crate::network::{assemble_hamiltonian, Edge, NetworkKind, Site, SiteLabel, SpinNetwork};

/// Grouping of sites into cells, with the per-cell neighbour-count matrix.
/// Cells store site ids; `degrees[i][j]` is the number of neighbours each
/// site of cell i has in cell j.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Partition {
    pub cells: Vec<Vec<usize>>,
    pub degrees: Vec<Vec<usize>>,
}

impl Partition {
    /// Singleton partition in site order; quotient with it is the identity.
    pub fn identity(net: &SpinNetwork) -> Partition {
        let cells: Vec<Vec<usize>> = net.sites().iter().map(|s| vec![s.id]).collect();
        let n = cells.len();
        let mut degrees = vec![vec![0usize; n]; n];
        for e in net.edges() {
            let i = net.index_of_id(e.i).expect("validated edge");
            let j = net.index_of_id(e.j).expect("validated edge");
            degrees[i][j] = 1;
            degrees[j][i] = 1;
        }
        Partition { cells, degrees }
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.cells.iter().map(|c| c.len()).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("partition serialization")
    }
}

#[derive(Debug, Error)]
pub enum PartitionError {
    #[error("graph is not connected: site id {0} unreachable from seed")]
    NotConnected(usize),
    #[error("seed site id {0} not in network")]
    UnknownSeed(usize),
    #[error("partition invalid:\n{0}")]
    InvalidPartition(ValidityReport),
    #[error("cells {0} and {1} are joined by edges of mixed coupling strength")]
    HeterogeneousEdgeClass(usize, usize),
    #[error("cell {0} mixes different on-site energies")]
    HeterogeneousOnSiteEnergy(usize),
    #[error("reduced spectrum not contained in full spectrum: value {0} unmatched")]
    SpectrumMismatch(f64),
    #[error("label {0} missing from network")]
    MissingLabel(SiteLabel),
}

/// One broken partition rule, with the offending cells or sites.
#[derive(Debug, Clone, PartialEq)]
pub enum RuleViolation {
    /// A site id is covered by `count` cells instead of exactly one.
    NotAPartition {
        site: usize,
        count: usize,
    },
    FirstCellNotSingleton {
        size: usize,
    },
    /// Two sites of one cell sit at different distances from the seed.
    UnequalDistance {
        cell: usize,
        site_a: usize,
        site_b: usize,
    },
    /// Members of cell i disagree on their neighbour count into cell j.
    UnequalDegree {
        cell_i: usize,
        cell_j: usize,
        site: usize,
        count: usize,
        expected: usize,
    },
    /// An edge joins two sites collapsed into the same cell.
    InternalEdge {
        cell: usize,
        site_a: usize,
        site_b: usize,
    },
    /// M_i·d_ij != M_j·d_ji for a coupled cell pair.
    BalanceViolated {
        cell_i: usize,
        cell_j: usize,
        lhs: usize,
        rhs: usize,
    },
    /// Stored degree matrix disagrees with the graph.
    DegreeMismatch {
        cell_i: usize,
        cell_j: usize,
        stored: usize,
        actual: usize,
    },
}

impl std::fmt::Display for RuleViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RuleViolation::NotAPartition { site, count } => {
                write!(f, "site {} covered by {} cells", site + 1, count)
            }
            RuleViolation::FirstCellNotSingleton { size } => {
                write!(f, "first cell has {size} sites, expected a singleton")
            }
            RuleViolation::UnequalDistance {
                cell,
                site_a,
                site_b,
            } => write!(
                f,
                "cell {}: sites {} and {} are at different distances from the seed",
                cell + 1,
                site_a + 1,
                site_b + 1
            ),
            RuleViolation::UnequalDegree {
                cell_i,
                cell_j,
                site,
                count,
                expected,
            } => write!(
                f,
                "cell {} -> cell {}: site {} has {} neighbours there, others have {}",
                cell_i + 1,
                cell_j + 1,
                site + 1,
                count,
                expected
            ),
            RuleViolation::InternalEdge {
                cell,
                site_a,
                site_b,
            } => write!(
                f,
                "cell {}: edge joins collapsed sites {} and {}",
                cell + 1,
                site_a + 1,
                site_b + 1
            ),
            RuleViolation::BalanceViolated {
                cell_i,
                cell_j,
                lhs,
                rhs,
            } => write!(
                f,
                "cells {} and {}: M_i*d_ij = {} but M_j*d_ji = {}",
                cell_i + 1,
                cell_j + 1,
                lhs,
                rhs
            ),
            RuleViolation::DegreeMismatch {
                cell_i,
                cell_j,
                stored,
                actual,
            } => write!(
                f,
                "cells {} and {}: stored degree {} but graph gives {}",
                cell_i + 1,
                cell_j + 1,
                stored,
                actual
            ),
        }
    }
}

/// Outcome of checking a partition against every rule; empty means valid.
#[derive(Debug, Clone, Default)]
pub struct ValidityReport {
    pub violations: Vec<RuleViolation>,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl std::fmt::Display for ValidityReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.violations.is_empty() {
            write!(f, "valid")
        } else {
            for v in &self.violations {
                writeln!(f, "- {v}")?;
            }
            Ok(())
        }
    }
}

fn bfs_distances(net: &SpinNetwork, start: usize) -> Vec<Option<usize>> {
    let n = net.n_sites();
    let mut dist = vec![None; n];
    dist[start] = Some(0);
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        for v in net.neighbors(u) {
            if dist[v].is_none() {
                dist[v] = Some(dist[u].unwrap() + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Coarsest partition with `seed_site` (a site id) as its singleton first
/// cell satisfying all four rules. Starts from breadth-first distance
/// classes and repeatedly splits cells whose members disagree on their
/// neighbour count into some other cell, until stable. Edge weights are
/// ignored; the partition is a property of the unweighted skeleton.
pub fn coarsest_equitable_partition(
    net: &SpinNetwork,
    seed_site: usize,
) -> Result<Partition, PartitionError> {
    let seed = net
        .index_of_id(seed_site)
        .ok_or(PartitionError::UnknownSeed(seed_site))?;
    let dist = bfs_distances(net, seed);
    if let Some(idx) = dist.iter().position(|d| d.is_none()) {
        return Err(PartitionError::NotConnected(net.sites()[idx].id));
    }
    let dist: Vec<usize> = dist.into_iter().map(|d| d.unwrap()).collect();

    // cells as sorted index sets, initially one per distance class
    let max_d = *dist.iter().max().unwrap();
    let mut cells: Vec<Vec<usize>> = (0..=max_d)
        .map(|d| (0..net.n_sites()).filter(|&i| dist[i] == d).collect())
        .collect();

    let adjacency: Vec<Vec<usize>> = (0..net.n_sites()).map(|i| net.neighbors(i)).collect();

    loop {
        // equitable refinement to fixpoint
        loop {
            let mut cell_of = vec![0usize; net.n_sites()];
            for (ci, cell) in cells.iter().enumerate() {
                for &s in cell {
                    cell_of[s] = ci;
                }
            }
            let mut next: Vec<Vec<usize>> = Vec::new();
            let mut changed = false;
            for cell in &cells {
                let mut groups: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
                for &s in cell {
                    let mut sig = vec![0usize; cells.len()];
                    for &nb in &adjacency[s] {
                        sig[cell_of[nb]] += 1;
                    }
                    groups.entry(sig).or_default().push(s);
                }
                if groups.len() > 1 {
                    changed = true;
                }
                next.extend(groups.into_values());
            }
            cells = next;
            if !changed {
                break;
            }
        }
        // cells with internal edges cannot be coarsened further in any way
        // compatible with the rules: break them into singletons and refine
        // again (bipartite skeletons never reach this branch)
        let mut cell_of = vec![0usize; net.n_sites()];
        for (ci, cell) in cells.iter().enumerate() {
            for &s in cell {
                cell_of[s] = ci;
            }
        }
        let mut offenders: Vec<usize> = Vec::new();
        for (ci, cell) in cells.iter().enumerate() {
            let internal = cell
                .iter()
                .any(|&s| adjacency[s].iter().any(|&nb| cell_of[nb] == ci));
            if internal {
                offenders.push(ci);
            }
        }
        if offenders.is_empty() {
            break;
        }
        let mut next = Vec::new();
        for (ci, cell) in cells.iter().enumerate() {
            if offenders.contains(&ci) {
                next.extend(cell.iter().map(|&s| vec![s]));
            } else {
                next.push(cell.clone());
            }
        }
        cells = next;
    }

    cells.sort_by_key(|c| (dist[c[0]], net.sites()[c[0]].id));
    let degrees = degree_matrix(&adjacency, &cells);
    let cells_ids = cells
        .iter()
        .map(|c| c.iter().map(|&i| net.sites()[i].id).collect())
        .collect();
    Ok(Partition {
        cells: cells_ids,
        degrees,
    })
}

/// d[i][j] for cells given as index sets; assumes uniformity (holds for
/// refinement output).
fn degree_matrix(adjacency: &[Vec<usize>], cells: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let k = cells.len();
    let mut cell_of = vec![0usize; adjacency.len()];
    for (ci, cell) in cells.iter().enumerate() {
        for &s in cell {
            cell_of[s] = ci;
        }
    }
    let mut d = vec![vec![0usize; k]; k];
    for (ci, cell) in cells.iter().enumerate() {
        let rep = cell[0];
        for &nb in &adjacency[rep] {
            d[ci][cell_of[nb]] += 1;
        }
    }
    d
}

/// Check a partition against every rule; violations are returned as data,
/// an empty report means the partition is valid.
pub fn validate_partition(net: &SpinNetwork, partition: &Partition) -> ValidityReport {
    let mut report = ValidityReport::default();
    let n = net.n_sites();

    // exact cover
    let mut count = vec![0usize; n];
    let mut cells_idx: Vec<Vec<usize>> = Vec::new();
    for cell in &partition.cells {
        let mut idxs = Vec::new();
        for &id in cell {
            match net.index_of_id(id) {
                Some(i) => {
                    count[i] += 1;
                    idxs.push(i);
                }
                None => report
                    .violations
                    .push(RuleViolation::NotAPartition { site: id, count: 0 }),
            }
        }
        cells_idx.push(idxs);
    }
    for (i, &c) in count.iter().enumerate() {
        if c != 1 {
            report.violations.push(RuleViolation::NotAPartition {
                site: net.sites()[i].id,
                count: c,
            });
        }
    }
    if !report.is_valid() {
        return report;
    }

    if cells_idx.is_empty() || cells_idx[0].len() != 1 {
        report
            .violations
            .push(RuleViolation::FirstCellNotSingleton {
                size: cells_idx.first().map_or(0, |c| c.len()),
            });
        return report;
    }

    let seed = cells_idx[0][0];
    let dist = bfs_distances(net, seed);
    for (ci, cell) in cells_idx.iter().enumerate() {
        for w in cell.windows(2) {
            if dist[w[0]] != dist[w[1]] {
                report.violations.push(RuleViolation::UnequalDistance {
                    cell: ci,
                    site_a: net.sites()[w[0]].id,
                    site_b: net.sites()[w[1]].id,
                });
            }
        }
    }

    let mut cell_of = vec![0usize; n];
    for (ci, cell) in cells_idx.iter().enumerate() {
        for &s in cell {
            cell_of[s] = ci;
        }
    }
    let k = cells_idx.len();

    // internal edges
    for e in net.edges() {
        let i = net.index_of_id(e.i).expect("validated edge");
        let j = net.index_of_id(e.j).expect("validated edge");
        if cell_of[i] == cell_of[j] {
            report.violations.push(RuleViolation::InternalEdge {
                cell: cell_of[i],
                site_a: e.i,
                site_b: e.j,
            });
        }
    }

    // per-site neighbour counts into every other cell must agree
    let mut actual = vec![vec![0usize; k]; k];
    for (ci, cell) in cells_idx.iter().enumerate() {
        let mut per_site: Vec<Vec<usize>> = Vec::new();
        for &s in cell {
            let mut counts = vec![0usize; k];
            for nb in net.neighbors(s) {
                counts[cell_of[nb]] += 1;
            }
            per_site.push(counts);
        }
        for cj in 0..k {
            let expected = per_site[0][cj];
            for (&s, counts) in cell.iter().zip(&per_site) {
                if counts[cj] != expected {
                    report.violations.push(RuleViolation::UnequalDegree {
                        cell_i: ci,
                        cell_j: cj,
                        site: net.sites()[s].id,
                        count: counts[cj],
                        expected,
                    });
                }
            }
            actual[ci][cj] = expected;
        }
    }

    // balance M_i d_ij = M_j d_ji and stored-degree agreement
    for i in 0..k {
        for j in (i + 1)..k {
            let lhs = cells_idx[i].len() * actual[i][j];
            let rhs = cells_idx[j].len() * actual[j][i];
            if lhs != rhs {
                report.violations.push(RuleViolation::BalanceViolated {
                    cell_i: i,
                    cell_j: j,
                    lhs,
                    rhs,
                });
            }
        }
    }
    if partition.degrees.len() == k && partition.degrees.iter().all(|row| row.len() == k) {
        for (i, (stored_row, actual_row)) in partition.degrees.iter().zip(&actual).enumerate() {
            for (j, (&stored, &real)) in stored_row.iter().zip(actual_row).enumerate() {
                if stored != real {
                    report.violations.push(RuleViolation::DegreeMismatch {
                        cell_i: i,
                        cell_j: j,
                        stored,
                        actual: real,
                    });
                }
            }
        }
    }

    report
}

/// Collapse a network along a valid partition: one site per cell, coupling
/// between cells i and j equal to the (homogeneous) edge coupling times
/// √(d_ij·d_ji). Labels survive only on singleton cells.
pub fn quotient_graph(
    net: &SpinNetwork,
    partition: &Partition,
) -> Result<SpinNetwork, PartitionError> {
    let report = validate_partition(net, partition);
    if !report.is_valid() {
        return Err(PartitionError::InvalidPartition(report));
    }
    let k = partition.cells.len();
    let cells_idx: Vec<Vec<usize>> = partition
        .cells
        .iter()
        .map(|c| c.iter().map(|&id| net.index_of_id(id).unwrap()).collect())
        .collect();
    let mut cell_of = vec![0usize; net.n_sites()];
    for (ci, cell) in cells_idx.iter().enumerate() {
        for &s in cell {
            cell_of[s] = ci;
        }
    }

    let mut sites = Vec::with_capacity(k);
    for (ci, cell) in cells_idx.iter().enumerate() {
        let eps = net.sites()[cell[0]].epsilon;
        for &s in cell {
            if (net.sites()[s].epsilon - eps).abs() > 1e-12 {
                return Err(PartitionError::HeterogeneousOnSiteEnergy(ci));
            }
        }
        let label = if cell.len() == 1 {
            net.sites()[cell[0]].label
        } else {
            None
        };
        sites.push(Site {
            id: ci,
            label,
            epsilon: eps,
        });
    }

    // one coupling class per cell pair
    let mut class: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for e in net.edges() {
        let i = cell_of[net.index_of_id(e.i).unwrap()];
        let j = cell_of[net.index_of_id(e.j).unwrap()];
        let key = (i.min(j), i.max(j));
        match class.get(&key) {
            None => {
                class.insert(key, e.coupling);
            }
            Some(&w) => {
                if (w - e.coupling).abs() > 1e-12 * w.abs().max(1.0) {
                    return Err(PartitionError::HeterogeneousEdgeClass(key.0, key.1));
                }
            }
        }
    }

    let edges = class
        .into_iter()
        .map(|((i, j), w)| {
            let scale = ((partition.degrees[i][j] * partition.degrees[j][i]) as f64).sqrt();
            Edge {
                i,
                j,
                coupling: w * scale,
            }
        })
        .collect();

    Ok(SpinNetwork::new(sites, edges, NetworkKind::Custom).expect("quotient construction"))
}

/// Largest pointwise deviation, over a uniform time grid, between the two
/// networks' site populations at the watched labels and between their A-C
/// entanglement curves, for an excitation injected at `injection`.
pub fn dynamics_deviation(
    net_a: &SpinNetwork,
    net_b: &SpinNetwork,
    watch: &[SiteLabel],
    injection: SiteLabel,
    t_max: f64,
    dt: f64,
) -> Result<f64, PartitionError> {
    let locate = |net: &SpinNetwork, label: SiteLabel| {
        net.labelled_site(label)
            .ok_or(PartitionError::MissingLabel(label))
    };
    let prep = |net: &SpinNetwork| -> Result<_, PartitionError> {
        let inj = locate(net, injection)?;
        let a = locate(net, SiteLabel::A)?;
        let c = locate(net, SiteLabel::C)?;
        let watched: Vec<usize> = watch
            .iter()
            .map(|&l| locate(net, l))
            .collect::<Result<_, _>>()?;
        let eig = diagonalize(&assemble_hamiltonian(net)).expect("symmetric matrix");
        let psi0 = QuantumState::basis(net.n_sites(), inj);
        Ok((eig, psi0, watched, a, c))
    };
    let (eig_a, psi_a, watch_a, aa, ac) = prep(net_a)?;
    let (eig_b, psi_b, watch_b, ba, bc) = prep(net_b)?;

    let steps = (t_max / dt).round() as usize;
    let mut worst: f64 = 0.0;
    for step in 0..=steps {
        let t = step as f64 * dt;
        let sa = evolve(&eig_a, &psi_a, t).expect("dimension match");
        let sb = evolve(&eig_b, &psi_b, t).expect("dimension match");
        for (&wa, &wb) in watch_a.iter().zip(&watch_b) {
            worst = worst.max((sa.probability(wa) - sb.probability(wb)).abs());
        }
        let ea = single_excitation_eof(&sa, aa, ac);
        let eb = single_excitation_eof(&sb, ba, bc);
        worst = worst.max((ea - eb).abs());
    }
    Ok(worst)
}

/// Multiset difference full \ reduced of the two spectra, i.e. the
/// eigenenergies that decouple in the reduction. Greedy nearest-value
/// matching on the sorted spectra within 1e-9.
pub fn decoupled_eigenvalues(
    full: &SpinNetwork,
    reduced: &SpinNetwork,
) -> Result<Vec<f64>, PartitionError> {
    const TOL: f64 = 1e-9;
    let spec = |net: &SpinNetwork| {
        diagonalize(&assemble_hamiltonian(net))
            .expect("symmetric matrix")
            .energies()
            .to_vec()
    };
    let full_spec = spec(full);
    let reduced_spec = spec(reduced);

    let mut leftovers = Vec::new();
    let mut p = 0;
    for &rv in &reduced_spec {
        while p < full_spec.len() && full_spec[p] < rv - TOL {
            leftovers.push(full_spec[p]);
            p += 1;
        }
        if p < full_spec.len() && (full_spec[p] - rv).abs() <= TOL {
            p += 1;
        } else {
            return Err(PartitionError::SpectrumMismatch(rv));
        }
    }
    leftovers.extend_from_slice(&full_spec[p..]);
    Ok(leftovers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{build_double_square_abc, build_square3x3, AbcParams};

    fn grid_partition_cells() -> Vec<Vec<usize>> {
        vec![
            vec![0],
            vec![1, 3],
            vec![2, 6],
            vec![4],
            vec![5, 7],
            vec![8],
        ]
    }

    #[test]
    fn grid_partition_from_corner() {
        let net = build_square3x3(1.0);
        let p = coarsest_equitable_partition(&net, 0).unwrap();
        assert_eq!(p.cells, grid_partition_cells());
        assert!(validate_partition(&net, &p).is_valid());
    }

    #[test]
    fn grid_partition_from_other_seeds() {
        let net = build_square3x3(1.0);
        // centre seed: distance classes are already equitable
        let p = coarsest_equitable_partition(&net, 4).unwrap();
        assert_eq!(p.cells, vec![vec![4], vec![1, 3, 5, 7], vec![0, 2, 6, 8]]);
        assert!(validate_partition(&net, &p).is_valid());
        // edge-midpoint seed: the distance-1 class {0, 2, 4} must split off
        // the centre, which disagrees on its degree into distance 2
        let p = coarsest_equitable_partition(&net, 1).unwrap();
        assert_eq!(
            p.cells,
            vec![vec![1], vec![0, 2], vec![4], vec![3, 5], vec![7], vec![6, 8]]
        );
        assert!(validate_partition(&net, &p).is_valid());
    }

    #[test]
    fn double_square_partition_has_11_cells() {
        let params = AbcParams::from_ratio(0.5).unwrap();
        let net = build_double_square_abc(&params);
        let p = coarsest_equitable_partition(&net, 0).unwrap();
        assert_eq!(p.n_cells(), 11);
        assert!(validate_partition(&net, &p).is_valid());
        // M_i*d_ij and M_j*d_ji both count the edges joining the two cells
        let cell_of = |id: usize| p.cells.iter().position(|c| c.contains(&id)).unwrap();
        for i in 0..p.n_cells() {
            for j in 0..p.n_cells() {
                let between = net
                    .edges()
                    .iter()
                    .filter(|e| {
                        let (a, b) = (cell_of(e.i), cell_of(e.j));
                        (a, b) == (i, j) || (a, b) == (j, i)
                    })
                    .count();
                assert_eq!(p.cells[i].len() * p.degrees[i][j], between);
                assert_eq!(p.cells[j].len() * p.degrees[j][i], between);
            }
        }
    }

    #[test]
    fn two_site_path_splits_fully() {
        let sites = vec![
            Site {
                id: 0,
                label: None,
                epsilon: 0.0,
            },
            Site {
                id: 1,
                label: None,
                epsilon: 0.0,
            },
        ];
        let edges = vec![Edge {
            i: 0,
            j: 1,
            coupling: 1.0,
        }];
        let net = SpinNetwork::new(sites, edges, NetworkKind::Custom).unwrap();
        let p = coarsest_equitable_partition(&net, 0).unwrap();
        assert_eq!(p.cells, vec![vec![0], vec![1]]);
    }

    #[test]
    fn unequal_distance_is_reported() {
        let net = build_square3x3(1.0);
        let p = Partition {
            cells: vec![vec![0], vec![1, 3, 4], vec![2, 6], vec![5, 7], vec![8]],
            degrees: vec![],
        };
        let report = validate_partition(&net, &p);
        assert!(!report.is_valid());
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, RuleViolation::UnequalDistance { .. })));
    }

    #[test]
    fn disconnected_graph_is_rejected() {
        let sites = (0..4)
            .map(|id| Site {
                id,
                label: None,
                epsilon: 0.0,
            })
            .collect();
        let edges = vec![
            Edge {
                i: 0,
                j: 1,
                coupling: 1.0,
            },
            Edge {
                i: 2,
                j: 3,
                coupling: 1.0,
            },
        ];
        let net = SpinNetwork::new(sites, edges, NetworkKind::Custom).unwrap();
        assert!(matches!(
            coarsest_equitable_partition(&net, 0),
            Err(PartitionError::NotConnected(_))
        ));
    }

    #[test]
    fn quotient_of_grid_matches_known_couplings() {
        let net = build_square3x3(1.0);
        let p = coarsest_equitable_partition(&net, 0).unwrap();
        let q = quotient_graph(&net, &p).unwrap();
        assert_eq!(q.n_sites(), 6);
        let mut couplings: Vec<f64> = q.edges().iter().map(|e| e.coupling).collect();
        couplings.sort_by(f64::total_cmp);
        let mut expected = [2f64.sqrt(), 1.0, 2f64.sqrt(), 1.0, 2f64.sqrt(), 2f64.sqrt()];
        expected.sort_by(f64::total_cmp);
        for (got, want) in couplings.iter().zip(expected.iter()) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_partition_gives_back_network() {
        let params = AbcParams::from_ratio(0.6).unwrap();
        let net = build_double_square_abc(&params);
        let q = quotient_graph(&net, &Partition::identity(&net)).unwrap();
        assert_eq!(q.n_sites(), net.n_sites());
        assert_eq!(q.edges().len(), net.edges().len());
        let h = assemble_hamiltonian(&net);
        let hq = assemble_hamiltonian(&q);
        assert!((h.matrix() - hq.matrix()).abs().max() < 1e-14);
        assert_eq!(
            q.labelled_site(SiteLabel::B),
            net.labelled_site(SiteLabel::B)
        );
    }

    #[test]
    fn triangle_with_internal_edges_splits() {
        let sites = (0..3)
            .map(|id| Site {
                id,
                label: None,
                epsilon: 0.0,
            })
            .collect();
        let edges = vec![
            Edge {
                i: 0,
                j: 1,
                coupling: 1.0,
            },
            Edge {
                i: 1,
                j: 2,
                coupling: 1.0,
            },
            Edge {
                i: 0,
                j: 2,
                coupling: 1.0,
            },
        ];
        let net = SpinNetwork::new(sites, edges, NetworkKind::Custom).unwrap();
        let p = coarsest_equitable_partition(&net, 0).unwrap();
        assert_eq!(p.n_cells(), 3);
        assert!(validate_partition(&net, &p).is_valid());
    }

    #[test]
    fn heterogeneous_edge_class_detected() {
        // 4-site star-ish graph where one distance class mixes couplings
        let sites = (0..4)
            .map(|id| Site {
                id,
                label: None,
                epsilon: 0.0,
            })
            .collect();
        let edges = vec![
            Edge {
                i: 0,
                j: 1,
                coupling: 1.0,
            },
            Edge {
                i: 0,
                j: 2,
                coupling: 2.0,
            },
            Edge {
                i: 1,
                j: 3,
                coupling: 1.0,
            },
            Edge {
                i: 2,
                j: 3,
                coupling: 1.0,
            },
        ];
        let net = SpinNetwork::new(sites, edges, NetworkKind::Custom).unwrap();
        let p = coarsest_equitable_partition(&net, 0).unwrap();
        assert_eq!(p.n_cells(), 3, "skeleton is the 4-cycle");
        assert!(matches!(
            quotient_graph(&net, &p),
            Err(PartitionError::HeterogeneousEdgeClass(_, _))
        ));
    }

    #[test]
    fn decoupled_of_identical_networks_is_empty() {
        let net = build_square3x3(1.0);
        let left = decoupled_eigenvalues(&net, &net).unwrap();
        assert!(left.is_empty());
    }

    #[test]
    fn spectrum_mismatch_detected() {
        let big = build_square3x3(1.0);
        let small = build_square3x3(1.5);
        assert!(matches!(
            decoupled_eigenvalues(&big, &small),
            Err(PartitionError::SpectrumMismatch(_))
        ));
    }

    #[test]
    fn equal_networks_have_zero_deviation() {
        let params = AbcParams::from_ratio(0.5).unwrap();
        let net = crate::network::build_quotient_chain_abc(&params);
        let dev = dynamics_deviation(
            &net,
            &net,
            &[SiteLabel::A, SiteLabel::B, SiteLabel::C],
            SiteLabel::B,
            10.0,
            0.1,
        )
        .unwrap();
        assert_eq!(dev, 0.0);
    }
}
