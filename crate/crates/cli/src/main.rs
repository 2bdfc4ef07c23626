//! `expinstab` command-line driver.
//!
//! Every subcommand reads an optional `key=value` config, applies the global
//! overrides, writes the effective config to `<out>/config.txt` and then its
//! CSV artifacts. Exit codes: 0 success, 1 I/O failure, 2 config or input
//! error, 3 solver failure.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use expinstab::conductivity::{
    dtn_numeric, ntd_from_dtn, resistance_matrix, weight_dtn_difference, ElectrodeConfig, InclusionProblem,
    SolverSettings,
};
use expinstab::engine::{eps_seed, fit_instability_exponent, run_instability};
use expinstab::io::{complex_matrix_csv, fmt_f64, parse_config, plot_csv, real_matrix_csv, report_csv, summary_csv, Csv};
use expinstab::linalg::op_norm;
use expinstab::opnet::{net_size_log_bound, ClassConstants, DegreeCounter, NetParams};
use expinstab::packing::{build_packing, packing_lower_bound};
use expinstab::scattering::{farfield_l2_norm, farfield_numeric, ObstacleProblem};
use expinstab::shapes::Shape;
use expinstab::spectral::{enumerate_basis, weighted_degrees, BasisSpec, DomainKind, Weighting};
use expinstab::ExperimentConfig;

#[derive(Parser)]
#[command(name = "expinstab", version, about = "Exponential-instability experiments for 2D inverse problems")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// key=value config file; defaults apply to absent keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (0: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Build packings for each ε and write sampled shapes.
    Pack {
        /// Shapes sampled per ε.
        #[arg(long, default_value_t = 1)]
        patterns: usize,
    },
    /// Enumerate an eigenbasis with its weighted degrees.
    Basis {
        #[arg(long, default_value = "full_circle")]
        domain: String,
        #[arg(long, default_value = "dirichlet_trace")]
        weighting: String,
        #[arg(long)]
        nmax: Option<u32>,
    },
    /// Net parameters and log-size bounds for a list of δ.
    Net {
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.01,0.001")]
        delta: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        c2: f64,
        #[arg(long, default_value_t = 0.5)]
        alpha2: f64,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
    },
    /// DtN, NtD and electrode resistance matrices of one inclusion.
    Forward {
        #[arg(long)]
        shape_file: PathBuf,
        #[arg(long)]
        a: Option<f64>,
        #[arg(long)]
        nmax: Option<u32>,
        /// Number of equally spaced electrodes.
        #[arg(long)]
        electrodes: Option<usize>,
    },
    /// Far-field matrices of one sound-soft obstacle.
    Scatter {
        #[arg(long)]
        shape_file: PathBuf,
        #[arg(long, value_delimiter = ',')]
        a_list: Option<Vec<f64>>,
        #[arg(long)]
        nmax: Option<u32>,
        /// Boundary quadrature nodes.
        #[arg(long)]
        quad: Option<usize>,
    },
    /// Witness-pair search over the ε grid and exponent fit.
    Instability,
}

enum Failure {
    Io(String),
    Config(String),
    Solver(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Config(_) => 2,
            Failure::Solver(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Io(m) => write!(f, "i/o error: {m}"),
            Failure::Config(m) => write!(f, "config error: {m}"),
            Failure::Solver(m) => write!(f, "solver failure: {m}"),
        }
    }
}

fn solver<E: fmt::Display>(e: E) -> Failure {
    Failure::Solver(e.to_string())
}

fn write_csv(csv: &Csv, dir: &Path, name: &str) -> Result<(), Failure> {
    csv.write(&dir.join(name)).map_err(|e| Failure::Io(format!("{}: {e}", dir.join(name).display())))
}

fn load_config(global: &Global) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &global.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            parse_config(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(s) = global.seed {
        cfg.seed = s;
    }
    if let Some(o) = &global.out {
        cfg.out = o.clone();
    }
    if let Some(t) = global.threads {
        cfg.threads = t;
    }
    Ok(cfg)
}

fn read_shape(path: &Path) -> Result<Shape, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    Shape::from_text(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn pack(cfg: &ExperimentConfig, patterns: usize) -> Result<(), Failure> {
    let class = cfg.class();
    let mut csv = Csv::new(&["eps", "eps0", "half_width", "cell_count", "log_cardinality", "log_lower_bound"]);
    for (idx, &eps) in cfg.eps_list.iter().enumerate() {
        let fam = build_packing(&class, eps).map_err(solver)?;
        let lower = packing_lower_bound(eps, class.m, 2, class.eps0_prime()).map_err(solver)?;
        csv.row(&[
            fmt_f64(eps),
            fmt_f64(fam.eps0()),
            fmt_f64(fam.half_width()),
            fam.cell_count().to_string(),
            fmt_f64(fam.certified_log_cardinality()),
            fmt_f64(lower),
        ]);
        for (j, p) in fam.sample_patterns(patterns, eps_seed(cfg.seed, idx)).iter().enumerate() {
            let shape = fam.shape(p).map_err(solver)?;
            let path = cfg.out.join(format!("shape_{idx}_{j}.txt"));
            fs::write(&path, shape.to_text()).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        }
    }
    write_csv(&csv, &cfg.out, "packing.csv")
}

fn basis(cfg: &ExperimentConfig, domain: &str, weighting: &str) -> Result<(), Failure> {
    let domain: DomainKind = domain.parse().map_err(|e| Failure::Config(format!("{e}")))?;
    let weighting: Weighting = weighting.parse().map_err(|e| Failure::Config(format!("{e}")))?;
    let spec = BasisSpec::new(domain, weighting, cfg.n_max);
    let elements = enumerate_basis(&spec);
    let gammas = weighted_degrees(&spec).map_err(solver)?;
    let mut csv = Csv::new(&["index", "degree", "tag", "gamma"]);
    for (e, g) in elements.iter().zip(&gammas) {
        csv.row(&[e.index.to_string(), fmt_f64(e.degree()), e.tag.to_string(), fmt_f64(*g)]);
    }
    write_csv(&csv, &cfg.out, "basis.csv")
}

fn net(cfg: &ExperimentConfig, deltas: &[f64], c2: f64, alpha2: f64, p: f64) -> Result<(), Failure> {
    let constants = ClassConstants::new(c2, alpha2, p).map_err(|e| Failure::Config(e.to_string()))?;
    let mut csv = Csv::new(&["delta", "neg_log_delta", "n_tilde", "log_delta_prime", "log_grid_size", "pair_count", "log_net_bound"]);
    for &delta in deltas {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Failure::Config(format!("delta {delta} must lie in (0, 1)")));
        }
        let params = NetParams::new(delta, constants).map_err(solver)?;
        let counter = DegreeCounter::Saturating;
        csv.row(&[
            fmt_f64(delta),
            fmt_f64(params.neg_log_delta),
            params.n_tilde.to_string(),
            fmt_f64(params.log_delta_prime),
            fmt_f64(params.log_grid_size()),
            fmt_f64(params.pair_count(counter)),
            fmt_f64(net_size_log_bound(&params, counter)),
        ]);
    }
    write_csv(&csv, &cfg.out, "net.csv")
}

fn forward(cfg: &ExperimentConfig, shape: Shape, a: f64, n_max: u32, electrodes: usize) -> Result<(), Failure> {
    let settings = SolverSettings { nodes: cfg.nodes, ..SolverSettings::default() };
    let prob = InclusionProblem::new(shape, a, n_max).map_err(|e| Failure::Config(e.to_string()))?.with_settings(settings);
    let sol = dtn_numeric(&prob).map_err(solver)?;
    let ntd = ntd_from_dtn(&sol.matrix).map_err(solver)?;
    let ecfg = ElectrodeConfig::equally_spaced(electrodes, cfg.electrode_coverage, cfg.impedance)
        .map_err(|e| Failure::Config(e.to_string()))?;
    let r = resistance_matrix(&ntd, &ecfg).map_err(solver)?;
    let weighted = weight_dtn_difference(&sol.difference);
    write_csv(&real_matrix_csv(&sol.matrix), &cfg.out, "dtn.csv")?;
    write_csv(&real_matrix_csv(&weighted), &cfg.out, "dtn_difference_weighted.csv")?;
    write_csv(&real_matrix_csv(&ntd), &cfg.out, "ntd.csv")?;
    write_csv(&real_matrix_csv(&r), &cfg.out, "resistance.csv")?;
    let mut csv = Csv::new(&["quantity", "value"]);
    csv.row(&["symmetry_defect".into(), fmt_f64(sol.symmetry_defect())]);
    csv.row(&["weighted_difference_op_norm".into(), fmt_f64(op_norm(&weighted))]);
    csv.row(&["ntd_op_norm".into(), fmt_f64(op_norm(&ntd))]);
    csv.row(&["resistance_op_norm".into(), fmt_f64(op_norm(&r))]);
    write_csv(&csv, &cfg.out, "forward_summary.csv")
}

fn scatter(cfg: &ExperimentConfig, shape: Shape, a_list: Vec<f64>, n_max: u32, nodes: usize) -> Result<(), Failure> {
    if nodes < 16 || nodes % 2 != 0 {
        return Err(Failure::Config(format!("quadrature nodes {nodes} must be even and at least 16")));
    }
    let mut prob = ObstacleProblem::new(shape, a_list, n_max).map_err(|e| Failure::Config(e.to_string()))?;
    prob.nodes = nodes;
    let mats = farfield_numeric(&prob).map_err(solver)?;
    let mut csv = Csv::new(&["index", "a", "wave_number", "l2_norm", "reciprocity_residual"]);
    for (i, m) in mats.iter().enumerate() {
        write_csv(&complex_matrix_csv(m.entries()), &cfg.out, &format!("farfield_{i}.csv"))?;
        csv.row(&[
            i.to_string(),
            fmt_f64(m.a()),
            fmt_f64(m.wave_number()),
            fmt_f64(farfield_l2_norm(m)),
            fmt_f64(m.reciprocity_residual()),
        ]);
    }
    write_csv(&csv, &cfg.out, "scatter_summary.csv")
}

fn instability(cfg: &ExperimentConfig) -> Result<(), Failure> {
    let problem = cfg.instability_problem().map_err(|e| Failure::Config(e.to_string()))?;
    let report = run_instability(&problem, &cfg.eps_list, cfg.budget, cfg.seed).map_err(solver)?;
    let fit = fit_instability_exponent(&report).ok();
    write_csv(&report_csv(&report), &cfg.out, "report.csv")?;
    write_csv(&plot_csv(&report), &cfg.out, "plot.csv")?;
    write_csv(&summary_csv(&report, fit.as_ref()), &cfg.out, "summary.csv")
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut cfg = load_config(&cli.global)?;
    // Subcommand flags that shadow config keys go into the echoed config.
    match &cli.command {
        Command::Forward { a, nmax, electrodes, .. } => {
            cfg.a = a.unwrap_or(cfg.a);
            cfg.n_max = nmax.unwrap_or(cfg.n_max);
            cfg.electrodes = electrodes.unwrap_or(cfg.electrodes);
        }
        Command::Scatter { a_list, nmax, quad, .. } => {
            if let Some(list) = a_list {
                cfg.a_list = list.clone();
            }
            cfg.n_max = nmax.unwrap_or(cfg.n_max);
            cfg.nodes = quad.unwrap_or(cfg.nodes);
        }
        Command::Basis { nmax, .. } => cfg.n_max = nmax.unwrap_or(cfg.n_max),
        _ => {}
    }
    // Re-parse so overrides get the same range checks as the file.
    let cfg = parse_config(&cfg.to_text()).map_err(|e| Failure::Config(format!("effective config: {e}")))?;
    if cfg.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build_global()
            .map_err(|e| Failure::Config(format!("threads: {e}")))?;
    }
    fs::create_dir_all(&cfg.out).map_err(|e| Failure::Io(format!("{}: {e}", cfg.out.display())))?;
    let echo = cfg.out.join("config.txt");
    fs::write(&echo, cfg.to_text()).map_err(|e| Failure::Io(format!("{}: {e}", echo.display())))?;
    match cli.command {
        Command::Pack { patterns } => pack(&cfg, patterns),
        Command::Basis { domain, weighting, .. } => basis(&cfg, &domain, &weighting),
        Command::Net { delta, c2, alpha2, p } => net(&cfg, &delta, c2, alpha2, p),
        Command::Forward { shape_file, .. } => {
            let shape = read_shape(&shape_file)?;
            forward(&cfg, shape, cfg.a, cfg.n_max, cfg.electrodes)
        }
        Command::Scatter { shape_file, .. } => {
            let shape = read_shape(&shape_file)?;
            scatter(&cfg, shape, cfg.a_list.clone(), cfg.n_max, cfg.nodes)
        }
        Command::Instability => instability(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("expinstab: {f}");
            ExitCode::from(f.code())
        }
    }
}
