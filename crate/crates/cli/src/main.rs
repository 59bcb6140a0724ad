//! Batch front end: builds the spin-network structures, runs spectra,
//! time evolutions, ratio sweeps, flat-ratio checks, disorder ensembles and
//! partition audits, and writes CSV (JSON for partitions) for external
//! plotting. All times are printed as t·Δ and couplings in units of Δ.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use spinweave::analysis::{
    self, flat_ratio, near_flat_time_study, periodicity_check, ratio_sweep, AbcStructure,
    AnalysisError, FlatRatioQuery, SweepMode,
};
use spinweave::disorder::{structure_robustness_comparison, DisorderKind, DisorderSpec};
use spinweave::dynamics::{analytic_abc_spectrum, diagonalize, evolve, QuantumState};
use spinweave::entanglement::single_excitation_eof;
use spinweave::network::{
    assemble_hamiltonian, build_double_square_abc, build_quotient_chain_abc,
    build_quotient_graph_abc, build_square3x3, AbcParams, SiteLabel, SpinNetwork,
};
use spinweave::partition::{
    coarsest_equitable_partition, quotient_graph, validate_partition, PartitionError,
};

const EXIT_USAGE: u8 = 2;
const EXIT_DOMAIN: u8 = 3;
const EXIT_IO: u8 = 4;

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn domain(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_DOMAIN,
            message: message.into(),
        }
    }

    fn io(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_IO,
            message: message.into(),
        }
    }
}

type CmdResult = Result<(), Failure>;

#[derive(Parser)]
#[command(
    name = "spinweave",
    version,
    about = "Spin-network entanglement simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Structure {
    Full17,
    Quotient11,
    Chain9,
    Square9,
    Custom,
}

impl Structure {
    fn as_str(&self) -> &'static str {
        match self {
            Structure::Full17 => "full17",
            Structure::Quotient11 => "quotient11",
            Structure::Chain9 => "chain9",
            Structure::Square9 => "square9",
            Structure::Custom => "custom",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    First,
    Window100,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Diagonal,
    Offdiagonal,
}

#[derive(Subcommand)]
enum Command {
    /// Sorted eigenvalues next to the closed-form values, with deviations
    Spectrum {
        #[arg(long, value_enum)]
        structure: Structure,
        /// Coupling ratio delta/Delta in (0, 1] (ABC structures)
        #[arg(long)]
        ratio: Option<f64>,
        /// Network JSON file (with --structure custom)
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time evolution after injection at B: EOF, fidelity and populations
    Evolve {
        #[arg(long, value_enum)]
        structure: Structure,
        #[arg(long)]
        ratio: Option<f64>,
        /// End of the time grid, in units of 1/Delta
        #[arg(long)]
        tmax: f64,
        /// Grid step, in units of 1/Delta
        #[arg(long)]
        dt: f64,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Peak entanglement against the coupling ratio
    Sweep {
        #[arg(long)]
        rmin: f64,
        #[arg(long)]
        rmax: f64,
        /// Number of grid ratios
        #[arg(long)]
        steps: usize,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long, value_enum, default_value = "chain9")]
        structure: Structure,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Coupling ratio with E'*n1 = E*n2 and its periodicity verification
    Flat {
        #[arg(long)]
        n1: u32,
        #[arg(long)]
        n2: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Disorder ensembles for all three structures at one coupling ratio
    Disorder {
        #[arg(long)]
        ratio: f64,
        #[arg(long, value_enum)]
        kind: Kind,
        /// Largest disorder scale D (fraction of Delta, at most 0.5)
        #[arg(long)]
        dmax: f64,
        /// Number of D values on [0, dmax]
        #[arg(long)]
        dsteps: usize,
        #[arg(long, default_value_t = 1000)]
        realizations: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Coarsest equitable partition and its quotient, as JSON plus a report
    Partition {
        #[arg(long, value_enum, default_value = "custom")]
        structure: Structure,
        #[arg(long)]
        input: Option<PathBuf>,
        /// Site id of the singleton seed cell
        #[arg(long)]
        seed_site: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time of the highest EOF in a fixed window, over random ratios
    Timestudy {
        #[arg(long)]
        rmin: f64,
        #[arg(long)]
        rmax: f64,
        /// Number of random ratios to draw
        #[arg(long)]
        steps: usize,
        /// Time window, in units of 1/Delta
        #[arg(long)]
        tmax: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value = "chain9")]
        structure: Structure,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    if let Err(f) = init_threads().and_then(|_| run(cli)) {
        eprintln!("error: {}", f.message);
        return ExitCode::from(f.code);
    }
    ExitCode::SUCCESS
}

/// SPINWEAVE_THREADS caps the worker pool; 0 or unset picks automatically.
fn init_threads() -> CmdResult {
    match std::env::var("SPINWEAVE_THREADS") {
        Err(_) => Ok(()),
        Ok(raw) => {
            let n: usize = raw.parse().map_err(|_| {
                Failure::usage(format!(
                    "SPINWEAVE_THREADS must be a non-negative integer, got {raw:?}"
                ))
            })?;
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| Failure::usage(format!("thread pool: {e}")))
        }
    }
}

fn run(cli: Cli) -> CmdResult {
    match cli.command {
        Command::Spectrum {
            structure,
            ratio,
            input,
            out,
        } => cmd_spectrum(structure, ratio, input.as_deref(), out.as_deref()),
        Command::Evolve {
            structure,
            ratio,
            tmax,
            dt,
            input,
            out,
        } => cmd_evolve(structure, ratio, tmax, dt, input.as_deref(), out.as_deref()),
        Command::Sweep {
            rmin,
            rmax,
            steps,
            mode,
            structure,
            out,
        } => cmd_sweep(rmin, rmax, steps, mode, structure, out.as_deref()),
        Command::Flat { n1, n2, out } => cmd_flat(n1, n2, out.as_deref()),
        Command::Disorder {
            ratio,
            kind,
            dmax,
            dsteps,
            realizations,
            seed,
            out,
        } => cmd_disorder(
            ratio,
            kind,
            dmax,
            dsteps,
            realizations,
            seed,
            out.as_deref(),
        ),
        Command::Partition {
            structure,
            input,
            seed_site,
            out,
        } => cmd_partition(structure, input.as_deref(), seed_site, out.as_deref()),
        Command::Timestudy {
            rmin,
            rmax,
            steps,
            tmax,
            seed,
            structure,
            out,
        } => cmd_timestudy(rmin, rmax, steps, tmax, seed, structure, out.as_deref()),
    }
}

fn parse_ratio(ratio: Option<f64>) -> Result<AbcParams, Failure> {
    let r = ratio.ok_or_else(|| Failure::usage("--ratio is required for ABC structures"))?;
    AbcParams::from_ratio(r).map_err(|e| Failure::usage(e.to_string()))
}

fn build_network(
    structure: Structure,
    ratio: Option<f64>,
    input: Option<&Path>,
) -> Result<SpinNetwork, Failure> {
    match structure {
        Structure::Full17 => Ok(build_double_square_abc(&parse_ratio(ratio)?)),
        Structure::Quotient11 => build_quotient_graph_abc(&parse_ratio(ratio)?)
            .map_err(|e| Failure::domain(e.to_string())),
        Structure::Chain9 => Ok(build_quotient_chain_abc(&parse_ratio(ratio)?)),
        Structure::Square9 => Ok(build_square3x3(1.0)),
        Structure::Custom => {
            let path = input
                .ok_or_else(|| Failure::usage("--input is required with --structure custom"))?;
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
            SpinNetwork::from_json(&text)
                .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
        }
    }
}

fn abc_structure(structure: Structure) -> Result<AbcStructure, Failure> {
    match structure {
        Structure::Full17 => Ok(AbcStructure::Full17),
        Structure::Quotient11 => Ok(AbcStructure::Quotient11),
        Structure::Chain9 => Ok(AbcStructure::Chain9),
        other => Err(Failure::usage(format!(
            "--structure {} is not an ABC structure; use full17, quotient11 or chain9",
            other.as_str()
        ))),
    }
}

fn writer(out: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    match out {
        None => Ok(Box::new(std::io::stdout().lock())),
        Some(path) => {
            let file = fs::File::create(path)
                .map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
            Ok(Box::new(std::io::BufWriter::new(file)))
        }
    }
}

fn flush_to(out: Option<&Path>, body: String) -> CmdResult {
    let mut w = writer(out)?;
    w.write_all(body.as_bytes())
        .map_err(|e| Failure::io(e.to_string()))?;
    w.flush().map_err(|e| Failure::io(e.to_string()))
}

fn ratio_grid(rmin: f64, rmax: f64, steps: usize) -> Result<Vec<f64>, Failure> {
    if !(rmin > 0.0 && rmin <= rmax && rmax <= 1.0) {
        return Err(Failure::usage(format!(
            "ratio grid must satisfy 0 < rmin <= rmax <= 1, got [{rmin}, {rmax}]"
        )));
    }
    if steps == 0 {
        return Err(Failure::usage("--steps must be at least 1"));
    }
    Ok(linspace(rmin, rmax, steps))
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Closed-form comparison column for the built-in structures.
fn analytic_spectrum(net: &SpinNetwork) -> Option<Vec<f64>> {
    use spinweave::network::NetworkKind;
    let params = net.abc_params();
    match net.kind() {
        NetworkKind::Chain9 => Some(analytic_abc_spectrum(&params?).chain.to_vec()),
        NetworkKind::Quotient11 => {
            let s = analytic_abc_spectrum(&params?);
            let mut v = s.chain.to_vec();
            v.extend_from_slice(&s.two_decoupled);
            v.sort_by(f64::total_cmp);
            Some(v)
        }
        NetworkKind::Full17 => Some(analytic_abc_spectrum(&params?).all_seventeen()),
        NetworkKind::Square9 => {
            // Kronecker sum of two 3-site path spectra {-sqrt2, 0, sqrt2}
            let j = net.edges().first().map_or(1.0, |e| e.coupling);
            let p3 = [-std::f64::consts::SQRT_2, 0.0, std::f64::consts::SQRT_2];
            let mut v: Vec<f64> = p3
                .iter()
                .flat_map(|a| p3.iter().map(move |b| (a + b) * j))
                .collect();
            v.sort_by(f64::total_cmp);
            Some(v)
        }
        NetworkKind::Custom => None,
    }
}

fn cmd_spectrum(
    structure: Structure,
    ratio: Option<f64>,
    input: Option<&Path>,
    out: Option<&Path>,
) -> CmdResult {
    let net = build_network(structure, ratio, input)?;
    let eig =
        diagonalize(&assemble_hamiltonian(&net)).map_err(|e| Failure::domain(e.to_string()))?;
    let analytic = analytic_spectrum(&net);
    let mut body = String::from("index,computed,analytic,deviation\n");
    for (i, &e) in eig.energies().iter().enumerate() {
        match &analytic {
            Some(table) => {
                let a = table[i];
                body.push_str(&format!("{i},{e},{a},{}\n", (e - a).abs()));
            }
            None => body.push_str(&format!("{i},{e},,\n")),
        }
    }
    flush_to(out, body)
}

fn cmd_evolve(
    structure: Structure,
    ratio: Option<f64>,
    tmax: f64,
    dt: f64,
    input: Option<&Path>,
    out: Option<&Path>,
) -> CmdResult {
    if !(tmax > 0.0 && dt > 0.0 && dt <= tmax) {
        return Err(Failure::usage(format!(
            "time grid must satisfy 0 < dt <= tmax, got tmax={tmax}, dt={dt}"
        )));
    }
    let net = build_network(structure, ratio, input)?;
    let locate = |l: SiteLabel| {
        net.labelled_site(l)
            .ok_or_else(|| Failure::usage(format!("network has no site labelled {l}")))
    };
    let (a, b, c) = (
        locate(SiteLabel::A)?,
        locate(SiteLabel::B)?,
        locate(SiteLabel::C)?,
    );
    let eig =
        diagonalize(&assemble_hamiltonian(&net)).map_err(|e| Failure::domain(e.to_string()))?;
    let psi0 = QuantumState::basis(net.n_sites(), b);
    let steps = (tmax / dt).round() as usize;
    let mut body = String::from("t,eof,fidelity,p_a,p_b,p_c\n");
    for k in 0..=steps {
        let t = k as f64 * dt;
        let state = evolve(&eig, &psi0, t).expect("dimension match");
        let eof = single_excitation_eof(&state, a, c);
        let fid = psi0.inner(&state).norm_sqr();
        body.push_str(&format!(
            "{t},{eof},{fid},{},{},{}\n",
            state.probability(a),
            state.probability(b),
            state.probability(c)
        ));
    }
    flush_to(out, body)
}

fn cmd_sweep(
    rmin: f64,
    rmax: f64,
    steps: usize,
    mode: Mode,
    structure: Structure,
    out: Option<&Path>,
) -> CmdResult {
    let grid = ratio_grid(rmin, rmax, steps)?;
    let mode = match mode {
        Mode::First => SweepMode::First,
        Mode::Window100 => SweepMode::Window100,
    };
    let results = ratio_sweep(&grid, mode, abc_structure(structure)?)
        .map_err(|e| Failure::domain(e.to_string()))?;
    let mut body = String::from("ratio,t_peak,eof_peak,kind,plateau_flag\n");
    for (r, peak) in results {
        body.push_str(&format!(
            "{r},{},{},{},{}\n",
            peak.t_peak,
            peak.eof_peak,
            peak.kind,
            u8::from(peak.plateau)
        ));
    }
    flush_to(out, body)
}

fn cmd_flat(n1: u32, n2: u32, out: Option<&Path>) -> CmdResult {
    let query = FlatRatioQuery::new(n1, n2).map_err(|e| Failure::usage(e.to_string()))?;
    let ratio = flat_ratio(&query).map_err(|e| match e {
        AnalysisError::NoSolutionInDomain { .. } => Failure::domain(e.to_string()),
        other => Failure::usage(other.to_string()),
    })?;
    let net = AbcStructure::Chain9
        .build(ratio)
        .expect("flat ratio in (0, 1)");
    let check = periodicity_check(&net, ratio).map_err(|e| Failure::domain(e.to_string()))?;
    let e = analysis::energy_large(ratio);
    let e_prime = analysis::energy_small(ratio);
    let body = format!(
        "n1 = {n1}, n2 = {n2}\n\
         ratio = {ratio:.12}\n\
         E = {e}\n\
         E' = {e_prime}\n\
         E/E' = {}\n\
         revival_time = {}\n\
         revival_fidelity = {}\n\
         periodic = {}\n",
        e / e_prime,
        check.revival_time,
        check.revival_fidelity,
        check.is_periodic
    );
    flush_to(out, body)
}

fn cmd_disorder(
    ratio: f64,
    kind: Kind,
    dmax: f64,
    dsteps: usize,
    realizations: usize,
    seed: u64,
    out: Option<&Path>,
) -> CmdResult {
    let params = AbcParams::from_ratio(ratio).map_err(|e| Failure::usage(e.to_string()))?;
    if !(0.0..=0.5).contains(&dmax) {
        return Err(Failure::usage(format!(
            "--dmax must lie in [0, 0.5], got {dmax}"
        )));
    }
    if dsteps == 0 || realizations == 0 {
        return Err(Failure::usage(
            "--dsteps and --realizations must be at least 1",
        ));
    }
    let kind = match kind {
        Kind::Diagonal => DisorderKind::Diagonal,
        Kind::Offdiagonal => DisorderKind::OffDiagonal,
    };
    let d_values = linspace(0.0, dmax, dsteps);
    let spec = DisorderSpec::new(kind, dmax, realizations, seed);
    let table = structure_robustness_comparison(&params, &spec, &d_values)
        .map_err(|e| Failure::domain(e.to_string()))?;
    let mut body = String::from("structure,kind,D,mean_eof,std_eof,realizations,seed\n");
    for entry in table {
        let name = match entry.structure {
            AbcStructure::Full17 => "full17",
            AbcStructure::Quotient11 => "quotient11",
            AbcStructure::Chain9 => "chain9",
        };
        for row in entry.results {
            body.push_str(&format!(
                "{name},{kind},{},{},{},{realizations},{seed}\n",
                row.d, row.mean_eof, row.std_eof
            ));
        }
    }
    flush_to(out, body)
}

fn cmd_partition(
    structure: Structure,
    input: Option<&Path>,
    seed_site: usize,
    out: Option<&Path>,
) -> CmdResult {
    // ABC structures carry couplings that depend on the ratio, but the
    // partition itself is a property of the unweighted skeleton; build them
    // at ratio 1 when none is needed.
    let net = match structure {
        Structure::Full17 | Structure::Quotient11 | Structure::Chain9 => {
            build_network(structure, Some(1.0), None)?
        }
        _ => build_network(structure, None, input)?,
    };
    let partition = coarsest_equitable_partition(&net, seed_site).map_err(|e| match e {
        PartitionError::NotConnected(_) | PartitionError::UnknownSeed(_) => {
            Failure::usage(e.to_string())
        }
        other => Failure::domain(other.to_string()),
    })?;
    let report = validate_partition(&net, &partition);
    eprintln!("cells: {}", partition.n_cells());
    eprintln!("sizes: {:?}", partition.sizes());
    eprintln!("validity: {report}");
    match quotient_graph(&net, &partition) {
        Ok(q) => {
            let couplings: Vec<String> = q
                .edges()
                .iter()
                .map(|e| format!("({},{}): {}", e.i + 1, e.j + 1, e.coupling))
                .collect();
            eprintln!("quotient sites: {}", q.n_sites());
            eprintln!("quotient couplings: {}", couplings.join(", "));
        }
        Err(e) => eprintln!("quotient not constructible: {e}"),
    }
    flush_to(out, partition.to_json() + "\n")
}

fn cmd_timestudy(
    rmin: f64,
    rmax: f64,
    steps: usize,
    tmax: f64,
    seed: u64,
    structure: Structure,
    out: Option<&Path>,
) -> CmdResult {
    if !(rmin > 0.0 && rmin < rmax && rmax <= 1.0) {
        return Err(Failure::usage(format!(
            "ratio interval must satisfy 0 < rmin < rmax <= 1, got [{rmin}, {rmax}]"
        )));
    }
    if steps == 0 || tmax <= 0.0 {
        return Err(Failure::usage(
            "--steps must be at least 1 and --tmax positive",
        ));
    }
    let rows = near_flat_time_study((rmin, rmax), steps, tmax, seed, abc_structure(structure)?)
        .map_err(|e| Failure::domain(e.to_string()))?;
    let mut body = String::from("ratio,t_E\n");
    for (r, t) in rows {
        body.push_str(&format!("{r},{t}\n"));
    }
    flush_to(out, body)
}
