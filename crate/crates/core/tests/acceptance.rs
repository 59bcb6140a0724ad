//! Acceptance suite: one test per release criterion, each printing a
//! PASS line (visible with `cargo test -- --nocapture`). Tolerances are
//! pinned here and nowhere else.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spinweave::analysis::{
    find_first_peak, find_window_max, flat_ratio, ratio_sweep, AbcStructure, FlatRatioQuery,
    SweepMode,
};
use spinweave::disorder::{
    ensemble_eof, structure_robustness_comparison, DisorderKind, DisorderSpec,
};
use spinweave::dynamics::{analytic_abc_spectrum, diagonalize, evolve, fidelity, QuantumState};
use spinweave::entanglement::{
    eof, eof_from_concurrence, eof_timeseries, reduced_density_matrix, single_excitation_eof,
};
use spinweave::network::{
    assemble_hamiltonian, build_quotient_chain_abc, build_square3x3, AbcParams, SiteLabel,
};
use spinweave::partition::{coarsest_equitable_partition, quotient_graph, validate_partition};
use spinweave::C64;

fn chain9(r: f64) -> spinweave::SpinNetwork {
    build_quotient_chain_abc(&AbcParams::from_ratio(r).unwrap())
}

fn spectrum_of(net: &spinweave::SpinNetwork) -> Vec<f64> {
    diagonalize(&assemble_hamiltonian(net))
        .unwrap()
        .energies()
        .to_vec()
}

/// Criterion 1: chain9 matches the closed-form eigenenergies and full17
/// equals chain9 plus the decoupled {±√2 ×2, 0 ×4}, both to 1e-10, over 50
/// random ratios.
#[test]
fn criterion_01_spectrum_fidelity() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..50 {
        let r: f64 = rng.gen_range(1e-3..=1.0);
        let params = AbcParams::from_ratio(r).unwrap();
        let analytic = analytic_abc_spectrum(&params);

        let got = spectrum_of(&chain9(r));
        for (g, w) in got.iter().zip(analytic.chain.iter()) {
            assert!((g - w).abs() < 1e-10, "chain9 r={r}: {g} vs {w}");
        }

        let got = spectrum_of(&AbcStructure::Full17.build(r).unwrap());
        let want = analytic.all_seventeen();
        for (g, w) in got.iter().zip(want.iter()) {
            assert!((g - w).abs() < 1e-10, "full17 r={r}: {g} vs {w}");
        }
    }
    println!("criterion 1 (spectrum fidelity, 50 random ratios at 1e-10): PASS");
}

/// Criterion 2: the three structures share the A-C entanglement dynamics
/// pointwise to 1e-8 on t·Δ ∈ [0, 100] at dt·Δ = 0.05.
#[test]
fn criterion_02_structure_equivalence() {
    for r in [0.1, 0.5, 0.828, 1.0] {
        let series: Vec<Vec<(f64, f64)>> = [
            AbcStructure::Full17,
            AbcStructure::Quotient11,
            AbcStructure::Chain9,
        ]
        .iter()
        .map(|s| eof_timeseries(&s.build(r).unwrap(), SiteLabel::B, 100.0, 0.05).unwrap())
        .collect();
        assert_eq!(series[0].len(), 2001);
        for ((&(t, e_full), &(_, e_quot)), &(_, e_chain)) in
            series[0].iter().zip(&series[1]).zip(&series[2])
        {
            assert!(
                (e_full - e_quot).abs() < 1e-8 && (e_full - e_chain).abs() < 1e-8,
                "r={r}, t={t}: {e_full} / {e_quot} / {e_chain}"
            );
        }
    }
    println!("criterion 2 (structure equivalence at 1e-8 over [0,100]): PASS");
}

/// Criterion 3: first-peak times t₁·Δ = 1.97 ± 0.02 (r=1) and
/// 18.02 ± 0.05 (r=0.1), each found in under 5 s.
#[test]
fn criterion_03_first_peak_times() {
    for (r, want, tol) in [(1.0, 1.97, 0.02), (0.1, 18.02, 0.05)] {
        let start = Instant::now();
        let peak = find_first_peak(&chain9(r)).unwrap();
        let elapsed = start.elapsed();
        assert!(
            (peak.t_peak - want).abs() <= tol,
            "r={r}: t1 = {} vs {want} ± {tol}",
            peak.t_peak
        );
        assert!(elapsed.as_secs_f64() < 5.0, "r={r}: took {elapsed:?}");
    }
    println!("criterion 3 (first-peak times 1.97/18.02): PASS");
}

/// Grid argmax of a sweep by peak EOF.
fn sweep_argmax(grid: &[f64], mode: SweepMode) -> (f64, f64) {
    let rows = ratio_sweep(grid, mode, AbcStructure::Chain9).unwrap();
    rows.into_iter()
        .map(|(r, p)| (r, p.eof_peak))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap()
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// 500-point grid on (0, 1] plus staged local grid refinement around the
/// running argmax.
fn locate_sweep_max(mode: SweepMode) -> (f64, f64) {
    let coarse: Vec<f64> = (1..=500).map(|i| i as f64 * 0.002).collect();
    let (mut center, mut best) = sweep_argmax(&coarse, mode);
    for (half, n) in [(16e-3, 321), (2e-3, 401), (2e-5, 41)] {
        let lo = (center - half).max(1e-4);
        let hi = (center + half).min(1.0);
        let (c, b) = sweep_argmax(&linspace(lo, hi, n), mode);
        center = c;
        best = b;
    }
    (center, best)
}

/// Criterion 4: sweep landmarks: first-peak maximum 0.8745 ± 0.001 at
/// r = 0.82846 ± 0.001 and 100·t_P maximum 0.8787 ± 0.001 at
/// r = 0.72018 ± 0.001, within 10 minutes on the chain.
#[test]
fn criterion_04_peak_eof_landmarks() {
    let start = Instant::now();

    let (r_first, eof_first) = locate_sweep_max(SweepMode::First);
    assert!(
        (eof_first - 0.8745).abs() <= 1e-3,
        "first-peak max EOF {eof_first}"
    );
    assert!(
        (r_first - 0.82846).abs() <= 1e-3,
        "first-peak argmax {r_first}"
    );

    let (r_win, eof_win) = locate_sweep_max(SweepMode::Window100);
    assert!(
        (eof_win - 0.8787).abs() <= 1e-3,
        "window100 max EOF {eof_win}"
    );
    assert!((r_win - 0.72018).abs() <= 1e-3, "window100 argmax {r_win}");

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 600.0, "took {elapsed:?}");
    println!(
        "criterion 4 (sweep landmarks: first {eof_first:.4}@{r_first:.5}, \
         window100 {eof_win:.4}@{r_win:.5}, {elapsed:?}): PASS"
    );
}

/// Criterion 5: flat_ratio(3,1) = 0.504469524022 ± 1e-9; there the state
/// revives at t·Δ = 6π/E with fidelity above 1 - 1e-6 and the window
/// maximum equals the first peak within 1e-4.
#[test]
fn criterion_05_flat_ratio() {
    let r = flat_ratio(&FlatRatioQuery::new(3, 1).unwrap()).unwrap();
    assert!((r - 0.504469524022).abs() < 1e-9, "flat ratio {r}");

    let net = chain9(r);
    let eig = diagonalize(&assemble_hamiltonian(&net)).unwrap();
    let b = net.labelled_site(SiteLabel::B).unwrap();
    let psi0 = QuantumState::basis(9, b);
    let e_big = (3.0 * r * r + 3.0 + (r.powi(4) + 9.0).sqrt()).sqrt();
    let t_star = 6.0 * std::f64::consts::PI / e_big;
    let f = fidelity(&eig, &psi0, &psi0, t_star).unwrap();
    assert!(f > 1.0 - 1e-6, "revival fidelity {f} at t = {t_star}");

    let first = find_first_peak(&net).unwrap();
    let window = find_window_max(&net, 100).unwrap();
    assert!(
        (window.eof_peak - first.eof_peak).abs() < 1e-4,
        "window max {} vs first peak {}",
        window.eof_peak,
        first.eof_peak
    );
    println!("criterion 5 (flat ratio 3:1, revival, downward peak): PASS");
}

/// Criterion 6: perfect state transfer on the uniform 3x3 grid between
/// opposite corners at t·J = π/√2, fidelity 1 within 1e-9. The transfer
/// time is derived from the 3-site path spectrum {-√2, 0, √2}: its level
/// spacing is √2, so phases realign (up to the mirror sign) at π/√2.
#[test]
fn criterion_06_perfect_state_transfer() {
    let net = build_square3x3(1.0);
    let eig = diagonalize(&assemble_hamiltonian(&net)).unwrap();
    let p3_gap = 2f64.sqrt();
    let t = std::f64::consts::PI / p3_gap;
    let out = evolve(&eig, &QuantumState::basis(9, 0), t).unwrap();
    let transfer = out.probability(8);
    assert!(
        (transfer - 1.0).abs() < 1e-9,
        "transfer fidelity {transfer}"
    );
    println!("criterion 6 (grid PST at pi/sqrt2): PASS");
}

/// Criterion 7: on 10⁴ random single-excitation states the full Wootters
/// EOF equals the 2|ψ_A ψ_C| shortcut within 1e-12, and
/// EOF(concurrence = 0.5) = 0.35458 ± 1e-4.
#[test]
fn criterion_07_wootters_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let n = 9;
    for _ in 0..10_000 {
        let amps = nalgebra::DVector::from_fn(n, |_, _| {
            C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        let state = QuantumState::normalized(amps).unwrap();
        let full = eof(&reduced_density_matrix(&state, 0, 8).unwrap()).unwrap();
        let fast = single_excitation_eof(&state, 0, 8);
        assert!(
            (full - fast).abs() < 1e-12,
            "wootters {full} vs shortcut {fast}"
        );
    }
    let e = eof_from_concurrence(0.5);
    assert!((e - 0.35458).abs() < 1e-4, "EOF(0.5) = {e}");
    println!("criterion 7 (wootters vs shortcut on 1e4 states at 1e-12): PASS");
}

/// Criterion 8: disorder ensembles with 200 realizations and a fixed seed.
/// (a) the D=0 mean equals the clean first-peak EOF exactly; (b) at D=0.5
/// off-diagonal disorder is more damaging than diagonal for r=0.109 and
/// r=0.828; (c) diagonal disorder hurts r=0.828 less than r=0.109; (d) the
/// chain ≥ quotient ≥ full robustness ordering holds within one standard
/// error (non-gating warning otherwise).
#[test]
fn criterion_08_disorder() {
    let start = Instant::now();
    let realizations = 200;

    // (a) exact clean entry, on the chain and on the full graph
    for structure in [AbcStructure::Chain9, AbcStructure::Full17] {
        let net = structure.build(0.828).unwrap();
        let spec = DisorderSpec::new(DisorderKind::Diagonal, 0.5, realizations, 4242);
        let rows = ensemble_eof(&net, &spec, &[0.0]).unwrap();
        let clean = find_first_peak(&net).unwrap();
        assert_eq!(
            rows[0].mean_eof, clean.eof_peak,
            "D=0 mean must be the clean EOF"
        );
        assert_eq!(rows[0].std_eof, 0.0);
    }

    // (b) and (c) on the full 17-site graph
    let mean_at = |r: f64, kind: DisorderKind| -> f64 {
        let net = AbcStructure::Full17.build(r).unwrap();
        let spec = DisorderSpec::new(kind, 0.5, realizations, 4242);
        ensemble_eof(&net, &spec, &[0.5]).unwrap()[0].mean_eof
    };
    let diag_828 = mean_at(0.828, DisorderKind::Diagonal);
    let offd_828 = mean_at(0.828, DisorderKind::OffDiagonal);
    let diag_109 = mean_at(0.109, DisorderKind::Diagonal);
    let offd_109 = mean_at(0.109, DisorderKind::OffDiagonal);
    assert!(
        offd_828 < diag_828,
        "off-diagonal {offd_828} vs diagonal {diag_828} at r=0.828"
    );
    assert!(
        offd_109 < diag_109,
        "off-diagonal {offd_109} vs diagonal {diag_109} at r=0.109"
    );
    assert!(
        diag_828 > diag_109,
        "diagonal r=0.828 {diag_828} vs r=0.109 {diag_109}"
    );

    // (d) qualitative structure ordering, warning only
    let params = AbcParams::from_ratio(0.828).unwrap();
    for kind in [DisorderKind::Diagonal, DisorderKind::OffDiagonal] {
        let spec = DisorderSpec::new(kind, 0.5, realizations, 4242);
        let table = structure_robustness_comparison(&params, &spec, &[0.5]).unwrap();
        let se =
            |row: &spinweave::disorder::EnsembleResult| row.std_eof / (realizations as f64).sqrt();
        let full = &table[0].results[0];
        let quot = &table[1].results[0];
        let chain = &table[2].results[0];
        for (hi, lo, label) in [
            (chain, quot, "chain vs quotient"),
            (quot, full, "quotient vs full"),
        ] {
            let slack = (se(hi).powi(2) + se(lo).powi(2)).sqrt();
            if hi.mean_eof + slack < lo.mean_eof {
                println!(
                    "criterion 8 warning ({kind}, {label}): ordering violated beyond one \
                     standard error: {} vs {}",
                    hi.mean_eof, lo.mean_eof
                );
            }
        }
    }

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 900.0, "took {elapsed:?}");
    println!("criterion 8 (disorder ensembles, {realizations} realizations, {elapsed:?}): PASS");
}

/// Criterion 9: the corner-seeded partition of the 3x3 grid has exactly the
/// known six cells with quotient couplings {√2, 1, √2, 1, √2, √2}, and the
/// balance rule M_i·d_ij = M_j·d_ji holds on every cell pair of every
/// built-in structure.
#[test]
fn criterion_09_partition_correctness() {
    let grid = build_square3x3(1.0);
    let p = coarsest_equitable_partition(&grid, 0).unwrap();
    assert_eq!(
        p.cells,
        vec![
            vec![0],
            vec![1, 3],
            vec![2, 6],
            vec![4],
            vec![5, 7],
            vec![8]
        ]
    );
    let q = quotient_graph(&grid, &p).unwrap();
    let mut got: Vec<f64> = q.edges().iter().map(|e| e.coupling).collect();
    got.sort_by(f64::total_cmp);
    let mut want = [2f64.sqrt(), 1.0, 2f64.sqrt(), 1.0, 2f64.sqrt(), 2f64.sqrt()];
    want.sort_by(f64::total_cmp);
    for (g, w) in got.iter().zip(want.iter()) {
        assert!((g - w).abs() < 1e-12, "quotient coupling {g} vs {w}");
    }

    let params = AbcParams::from_ratio(0.7).unwrap();
    let nets = [
        build_square3x3(1.0),
        spinweave::network::build_double_square_abc(&params),
        spinweave::network::build_quotient_graph_abc(&params).unwrap(),
        build_quotient_chain_abc(&params),
    ];
    for net in &nets {
        let seed = net
            .labelled_site(SiteLabel::A)
            .map(|i| net.sites()[i].id)
            .unwrap_or(0);
        let p = coarsest_equitable_partition(net, seed).unwrap();
        assert!(validate_partition(net, &p).is_valid());
        for i in 0..p.n_cells() {
            for j in 0..p.n_cells() {
                assert_eq!(
                    p.cells[i].len() * p.degrees[i][j],
                    p.cells[j].len() * p.degrees[j][i],
                    "balance violated on {} cells ({i}, {j})",
                    net.kind()
                );
            }
        }
    }
    println!("criterion 9 (partition cells, quotient couplings, balance): PASS");
}
