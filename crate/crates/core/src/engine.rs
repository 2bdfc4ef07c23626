//! Instability experiments: sample packing families, evaluate a forward map
//! on every sampled shape, find the pair of far-apart shapes with the
//! closest forward data, and fit how fast that gap closes as ε shrinks.
//!
//! Pairs are the empirical minimum over a random sample of the family, not
//! the pigeonhole optimum over all of it.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::conductivity::{
    dirichlet_degrees, dtn_numeric, fit_decay, ntd_from_dtn, resistance_matrix, shell_maxima, weight_dtn_difference,
    ConductivityError, ElectrodeConfig, InclusionProblem, SolverSettings, DECAY_NOISE_FLOOR,
};
use crate::linalg::{linear_fit, op_norm};
use crate::opnet::{
    counting_check, epsilon_one, fit_net_constants, neg_log_delta_of_epsilon, net_size_log_bound, ClassConstants,
    CountingCheck, DegreeCounter, NetError, NetParams,
};
use crate::packing::{build_packing, PackingError, PackingFamily, Pattern, PerturbationClass};
use crate::scattering::{farfield_numeric, ObstacleProblem, ScatteringError};
use crate::shapes::{hausdorff_distance, Shape, ShapeError, ShapeKind};
use crate::spectral::{fourier_frequency, DomainKind, Weighting};

/// Operator-difference norms are clipped here before taking logarithms.
pub const NORM_FLOOR: f64 = 1e-300;
/// `α3` in `-log δ(ε) = ε^{-α1/(2p+1+α3)}`.
pub const ALPHA3: f64 = 1.0;
/// Label carried by every report.
pub const SEARCH_LABEL: &str = "empirical minimum over budget";

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Packing(#[from] PackingError),
    #[error(transparent)]
    Conductivity(#[from] ConductivityError),
    #[error(transparent)]
    Scattering(#[from] ScatteringError),
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("internal error: no admissible pair among {0} sampled shapes at eps = {1}")]
    NoAdmissiblePair(usize, f64),
    #[error("exponent fit: {0}")]
    Fit(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemKind {
    Dtn,
    Ntd,
    Electrodes,
    Farfield,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 4] = [ProblemKind::Dtn, ProblemKind::Ntd, ProblemKind::Electrodes, ProblemKind::Farfield];

    pub fn as_str(&self) -> &'static str {
        match self {
            ProblemKind::Dtn => "dtn",
            ProblemKind::Ntd => "ntd",
            ProblemKind::Electrodes => "electrodes",
            ProblemKind::Farfield => "farfield",
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProblemKind {
    type Err = EngineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| EngineError::Invalid(format!("unknown problem kind '{s}'")))
    }
}

/// A forward map together with the shape class it is probed on.
#[derive(Debug, Clone, PartialEq)]
pub struct InstabilityProblem {
    pub kind: ProblemKind,
    pub class: PerturbationClass,
    pub n_max: u32,
    /// Inclusion conductivity for `dtn`, `ntd` and `electrodes`.
    pub contrast: f64,
    /// Wave parameters `a = k²` for `farfield`.
    pub wave_params: Vec<f64>,
    pub electrodes: ElectrodeConfig,
    /// Boundary quadrature nodes of every forward solve.
    pub nodes: usize,
}

impl InstabilityProblem {
    /// Defaults: conductivity problems use inclusions `S(0, 1/2)` perturbed
    /// by at most `1/4` with contrast 2; the far field uses obstacles
    /// `S(0, 1)` perturbed by at most `1/2` with `a ∈ {1, 4}`.
    pub fn default_for(kind: ProblemKind, m: u32) -> Self {
        let class = match kind {
            ProblemKind::Farfield => PerturbationClass::new(ShapeKind::RadialSubgraph, 1.0, m, 1.0).with_amplitude_cap(0.5),
            _ => PerturbationClass::new(ShapeKind::RadialSubgraph, 0.5, m, 1.0).with_amplitude_cap(0.25),
        };
        Self {
            kind,
            class,
            n_max: 32,
            contrast: 2.0,
            wave_params: vec![1.0, 4.0],
            electrodes: ElectrodeConfig::default(),
            nodes: 256,
        }
    }

    /// `α1 = (N - 1)/m` with `N = 2`.
    pub fn alpha1(&self) -> f64 {
        1.0 / self.class.m as f64
    }

    /// `(N - 1)/(2 m N)` with `N = 2`.
    pub fn theoretical_exponent(&self) -> f64 {
        1.0 / (4.0 * self.class.m as f64)
    }
}

/// Forward data of one shape, stored so that the problem's norm is the
/// plain norm of a difference.
#[derive(Debug, Clone)]
enum Forward {
    /// Norm: largest singular value of the difference.
    Real(DMatrix<f64>),
    /// Norm: max over wave parameters of the Frobenius norm of the difference.
    Complex(Vec<DMatrix<Complex64>>),
}

impl Forward {
    fn frobenius_distance(&self, other: &Forward) -> f64 {
        match (self, other) {
            (Forward::Real(a), Forward::Real(b)) => (a - b).norm(),
            (Forward::Complex(a), Forward::Complex(b)) => {
                a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
            }
            _ => unreachable!("mixed forward kinds"),
        }
    }

    fn distance(&self, other: &Forward) -> f64 {
        match (self, other) {
            (Forward::Real(a), Forward::Real(b)) => op_norm(&(a - b)),
            _ => self.frobenius_distance(other),
        }
    }

    /// `√rank` bound between the Frobenius and operator norms.
    fn norm_gap(&self) -> f64 {
        match self {
            Forward::Real(a) => (a.nrows().min(a.ncols()) as f64).sqrt(),
            Forward::Complex(_) => 1.0,
        }
    }
}

/// Forward data plus the matrices whose entry decay defines the operator
/// class, with their degrees.
struct Evaluated {
    forward: Forward,
    class_matrices: Vec<DMatrix<f64>>,
    degrees: Vec<f64>,
}

/// `diag(1+j)^{1/2} N diag(j)^{1/2}` on the mean-zero modes.
fn ntd_weighted(ntd: &DMatrix<f64>) -> DMatrix<f64> {
    let n = ntd.nrows();
    let f = |k: usize| fourier_frequency(k + 1) as f64;
    DMatrix::from_fn(n, n, |i, j| (1.0 + f(i)).sqrt() * ntd[(i, j)] * f(j).sqrt())
}

fn homogeneous_ntd_weighted(modes: usize) -> DMatrix<f64> {
    let f = |k: usize| fourier_frequency(k + 1) as f64;
    DMatrix::from_fn(modes, modes, |i, j| if i == j { ((1.0 + f(i)) / f(i)).sqrt() } else { 0.0 })
}

fn evaluate(problem: &InstabilityProblem, shape: Shape) -> Result<Evaluated, EngineError> {
    match problem.kind {
        ProblemKind::Dtn | ProblemKind::Ntd | ProblemKind::Electrodes => {
            let settings = SolverSettings { nodes: problem.nodes, ..SolverSettings::default() };
            let prob = InclusionProblem::new(shape, problem.contrast, problem.n_max)?.with_settings(settings);
            let sol = dtn_numeric(&prob)?;
            let dim = prob.dim();
            if problem.kind == ProblemKind::Dtn {
                let b = weight_dtn_difference(&sol.difference);
                return Ok(Evaluated { forward: Forward::Real(b.clone()), class_matrices: vec![b], degrees: dirichlet_degrees(dim) });
            }
            let ntd = ntd_from_dtn(&sol.matrix)?;
            let weighted = ntd_weighted(&ntd);
            let diff = &weighted - homogeneous_ntd_weighted(dim - 1);
            let degrees = (1..dim).map(|k| 1.0 + fourier_frequency(k) as f64).collect();
            let forward = if problem.kind == ProblemKind::Ntd {
                Forward::Real(weighted)
            } else {
                Forward::Real(resistance_matrix(&ntd, &problem.electrodes)?)
            };
            Ok(Evaluated { forward, class_matrices: vec![diff], degrees })
        }
        ProblemKind::Farfield => {
            let mut prob = ObstacleProblem::new(shape, problem.wave_params.clone(), problem.n_max)?;
            prob.nodes = problem.nodes;
            let mats = farfield_numeric(&prob)?;
            let degrees = crate::scattering::farfield_degrees(mats[0].dim());
            let class_matrices = mats.iter().map(|m| m.entries().map(|z| z.norm())).collect();
            let forward = Forward::Complex(mats.into_iter().map(|m| m.entries().clone()).collect());
            Ok(Evaluated { forward, class_matrices, degrees })
        }
    }
}

/// Pooled `(C2, α2)` with `p = 1` for a set of matrices: `α2` is the
/// smallest positive fitted rate and `C2` the smallest constant putting
/// every entry under `C2 exp(-α2 γ)`.
fn pooled_constants(matrices: &[&DMatrix<f64>], degrees: &[f64]) -> Option<ClassConstants> {
    let alpha = matrices
        .iter()
        .filter_map(|m| fit_decay(&shell_maxima(m, degrees), DECAY_NOISE_FLOOR))
        .map(|f| f.alpha)
        .filter(|a| *a > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !alpha.is_finite() {
        return None;
    }
    let mut c2: f64 = 0.0;
    for m in matrices {
        for k in 0..degrees.len() {
            for l in 0..degrees.len() {
                c2 = c2.max(m[(k, l)].abs() * (alpha * degrees[k].max(degrees[l])).exp());
            }
        }
    }
    ClassConstants::new(c2, alpha, 1.0).ok()
}

/// Net log-bound for the forward data of `kind`: complex far fields need
/// two grids per entry and one net per wave parameter.
fn net_log_bound(kind: ProblemKind, wave_count: usize, params: &NetParams) -> f64 {
    let base = net_size_log_bound(params, DegreeCounter::Basis(DomainKind::FullCircle, Weighting::DirichletTrace));
    match kind {
        ProblemKind::Farfield => 2.0 * wave_count as f64 * base,
        _ => base,
    }
}

/// One ε of an instability run.
#[derive(Debug, Clone, PartialEq)]
pub struct PairRecord {
    pub eps: f64,
    pub first: Pattern,
    pub second: Pattern,
    pub hausdorff: f64,
    pub resolution_error: f64,
    /// Forward-data distance of the pair, clipped at [`NORM_FLOOR`].
    pub norm: f64,
    pub floored: bool,
    /// `-log δ(ε)`.
    pub neg_log_delta: f64,
    pub cell_count: usize,
    pub patterns: usize,
    /// `Mc ln 2`.
    pub packing_log_count: f64,
    /// `None` when no decay could be fitted to the sampled matrices.
    pub constants: Option<ClassConstants>,
    pub net_log_bound: Option<f64>,
    pub counting: Option<CountingCheck>,
}

impl PairRecord {
    pub fn delta(&self) -> f64 {
        (-self.neg_log_delta).exp()
    }

    pub fn is_admissible(&self) -> bool {
        self.hausdorff >= self.eps - self.resolution_error
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstabilityReport {
    pub kind: ProblemKind,
    pub m: u32,
    pub seed: u64,
    pub budget: usize,
    pub records: Vec<PairRecord>,
    pub theoretical_exponent: f64,
    /// `ε1` from the pooled constants, below which the counting margin is
    /// positive in the model.
    pub eps_one: Option<f64>,
    pub label: &'static str,
}

/// Per-ε sampling seed.
pub fn eps_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Closest pair (by forward distance) among `data`, skipping pairs closer
/// than `eps - resolution` in Hausdorff distance.
fn best_pair(
    data: &[Forward],
    shapes: &[Shape],
    eps: f64,
    resolution: f64,
) -> Result<Option<(usize, usize, f64, f64)>, EngineError> {
    let n = data.len();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            pairs.push((data[i].frobenius_distance(&data[j]), i, j));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut best: Option<(usize, usize, f64, f64)> = None;
    for (fro, i, j) in pairs {
        if let Some((_, _, b, _)) = best {
            if fro / data[i].norm_gap() >= b {
                break;
            }
        }
        let d = data[i].distance(&data[j]);
        if best.is_none_or(|(_, _, b, _)| d < b) {
            let h = hausdorff_distance(&shapes[i], &shapes[j])?;
            if h >= eps - resolution {
                best = Some((i, j, d, h));
            }
        }
    }
    Ok(best)
}

/// Runs the experiment over `eps_list` with `budget` sampled shapes per ε.
pub fn run_instability(
    problem: &InstabilityProblem,
    eps_list: &[f64],
    budget: usize,
    seed: u64,
) -> Result<InstabilityReport, EngineError> {
    if budget < 2 {
        return Err(EngineError::Invalid(format!("budget {budget} must be at least 2")));
    }
    if eps_list.is_empty() {
        return Err(EngineError::Invalid("empty eps list".into()));
    }
    let mut records = Vec::with_capacity(eps_list.len());
    let mut pooled: Vec<DMatrix<f64>> = Vec::new();
    let mut degrees = Vec::new();
    let mut first_family: Option<PackingFamily> = None;
    for (idx, &eps) in eps_list.iter().enumerate() {
        let family = build_packing(&problem.class, eps)?;
        let patterns = family.sample_patterns(budget, eps_seed(seed, idx));
        let shapes = patterns.iter().map(|p| family.shape(p)).collect::<Result<Vec<_>, _>>()?;
        let evaluated = shapes
            .par_iter()
            .map(|s| evaluate(problem, s.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        degrees = evaluated[0].degrees.clone();
        let resolution = shapes[0].resolution_error();
        let data: Vec<Forward> = evaluated.iter().map(|e| e.forward.clone()).collect();
        let (i, j, norm, hausdorff) =
            best_pair(&data, &shapes, eps, resolution)?.ok_or(EngineError::NoAdmissiblePair(shapes.len(), eps))?;
        let class_mats: Vec<&DMatrix<f64>> = evaluated.iter().flat_map(|e| e.class_matrices.iter()).collect();
        let constants = pooled_constants(&class_mats, &degrees);
        let neg_log_delta = neg_log_delta_of_epsilon(eps, problem.alpha1(), 1.0, ALPHA3);
        let packing_log_count = family.certified_log_cardinality();
        let net = match constants {
            Some(c) => Some(net_log_bound(problem.kind, problem.wave_params.len(), &NetParams::from_neg_log_delta(neg_log_delta, c)?)),
            None => None,
        };
        pooled.extend(class_mats.into_iter().cloned());
        records.push(PairRecord {
            eps,
            first: patterns[i].clone(),
            second: patterns[j].clone(),
            hausdorff,
            resolution_error: resolution,
            norm: norm.max(NORM_FLOOR),
            floored: norm < NORM_FLOOR,
            neg_log_delta,
            cell_count: family.cell_count(),
            patterns: patterns.len(),
            packing_log_count,
            constants,
            net_log_bound: net,
            counting: net.map(|b| counting_check(packing_log_count, b)),
        });
        first_family.get_or_insert(family);
    }
    let refs: Vec<&DMatrix<f64>> = pooled.iter().collect();
    let eps_one = match (pooled_constants(&refs, &degrees), first_family) {
        (Some(c), Some(fam)) => {
            let grid: Vec<f64> = (0..=40).map(|i| 10f64.powf(1.0 + 0.1 * i as f64)).collect();
            let net = fit_net_constants(&c, DegreeCounter::Basis(DomainKind::FullCircle, Weighting::DirichletTrace), &grid)?;
            let scale = match problem.kind {
                ProblemKind::Farfield => 2.0 * problem.wave_params.len() as f64,
                _ => 1.0,
            };
            let c1 = std::f64::consts::LN_2 * fam.class().cell_count_lower_constant();
            Some(epsilon_one(fam.eps0(), c1, problem.alpha1(), scale * net.c3, 1.0, ALPHA3))
        }
        _ => None,
    };
    Ok(InstabilityReport {
        kind: problem.kind,
        m: problem.class.m,
        seed,
        budget,
        records,
        theoretical_exponent: problem.theoretical_exponent(),
        eps_one,
        label: SEARCH_LABEL,
    })
}

/// Regression of `log(-log ‖ΔF‖)` on `log(1/ε)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentFit {
    pub q: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// `r²` of the competing regression on `log log(1/ε)`, which is exact
    /// for polynomial decay `‖ΔF‖ = C ε^s`.
    pub polynomial_r_squared: f64,
    /// The polynomial model fits at least as well.
    pub non_exponential: bool,
    /// Some norm was clipped at [`NORM_FLOOR`].
    pub floored: bool,
}

/// Fits the instability exponent from `(ε, ‖ΔF‖)` points.
pub fn fit_exponent(points: &[(f64, f64)]) -> Result<ExponentFit, EngineError> {
    if points.len() < 4 {
        return Err(EngineError::Fit(format!("need at least 4 points, got {}", points.len())));
    }
    let mut floored = false;
    let mut x = Vec::new();
    let mut xl = Vec::new();
    let mut y = Vec::new();
    for &(eps, norm) in points {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(EngineError::Fit(format!("eps = {eps} must lie in (0, 1)")));
        }
        if !(norm < 1.0) {
            return Err(EngineError::Fit(format!("norm {norm} at eps = {eps} is not below 1")));
        }
        let clipped = if norm < NORM_FLOOR {
            floored = true;
            NORM_FLOOR
        } else {
            norm
        };
        let lx = (1.0 / eps).ln();
        x.push(lx);
        xl.push(lx.ln());
        y.push((-clipped.ln()).ln());
    }
    let fit = linear_fit(&x, &y).ok_or_else(|| EngineError::Fit("degenerate eps grid".into()))?;
    let poly = linear_fit(&xl, &y).ok_or_else(|| EngineError::Fit("degenerate eps grid".into()))?;
    Ok(ExponentFit {
        q: fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        polynomial_r_squared: poly.r_squared,
        non_exponential: poly.r_squared >= fit.r_squared,
        floored,
    })
}

pub fn fit_instability_exponent(report: &InstabilityReport) -> Result<ExponentFit, EngineError> {
    let pts: Vec<(f64, f64)> = report.records.iter().map(|r| (r.eps, r.norm)).collect();
    fit_exponent(&pts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_of_exact_stretched_exponential() {
        let pts: Vec<(f64, f64)> = [0.1, 0.05, 0.02, 0.01, 0.005].iter().map(|&e: &f64| (e, (-e.powf(-0.25)).exp())).collect();
        let f = fit_exponent(&pts).unwrap();
        assert!((f.q - 0.25).abs() < 1e-6 && f.r_squared > 0.999_999);
        assert!(!f.floored);
    }

    #[test]
    fn polynomial_decay_is_flagged() {
        let pts: Vec<(f64, f64)> = (1..=8).map(|i| 10f64.powi(-4 * i)).map(|e| (e, e * e)).collect();
        let f = fit_exponent(&pts).unwrap();
        assert!(f.non_exponential);
        assert!(f.q < 0.2, "{}", f.q);
        assert!((f.polynomial_r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn floor_and_bad_inputs() {
        let pts = vec![(0.1, 1e-10), (0.05, 1e-100), (0.02, 0.0), (0.01, 1e-320)];
        let f = fit_exponent(&pts).unwrap();
        assert!(f.floored);
        assert!(fit_exponent(&pts[..3]).is_err());
        assert!(fit_exponent(&[(0.1, 2.0), (0.05, 0.1), (0.02, 0.01), (0.01, 0.001)]).is_err());
    }

    #[test]
    fn budget_two_returns_the_sampled_pair() {
        let problem = InstabilityProblem { n_max: 8, ..InstabilityProblem::default_for(ProblemKind::Dtn, 1) };
        let report = run_instability(&problem, &[0.1], 2, 5).unwrap();
        let fam = build_packing(&problem.class, 0.1).unwrap();
        let sampled = fam.sample_patterns(2, eps_seed(5, 0));
        let r = &report.records[0];
        assert_eq!((&r.first, &r.second), (&sampled[0], &sampled[1]));
        assert!(r.is_admissible());
        assert!(run_instability(&problem, &[0.1], 1, 5).is_err());
    }

    #[test]
    fn identical_seeds_give_identical_reports() {
        for kind in ProblemKind::ALL {
            let problem = InstabilityProblem { n_max: 6, ..InstabilityProblem::default_for(kind, 1) };
            let a = run_instability(&problem, &[0.12, 0.08], 6, 11).unwrap();
            let b = run_instability(&problem, &[0.12, 0.08], 6, 11).unwrap();
            assert_eq!(a, b, "{kind}");
            assert!(a.records.iter().all(|r| r.is_admissible() && r.norm > 0.0));
        }
    }

    #[test]
    fn pair_search_matches_exhaustive_minimum() {
        let problem = InstabilityProblem { n_max: 8, ..InstabilityProblem::default_for(ProblemKind::Dtn, 1) };
        let fam = build_packing(&problem.class, 0.08).unwrap();
        let pats = fam.sample_patterns(12, 3);
        let shapes: Vec<Shape> = pats.iter().map(|p| fam.shape(p).unwrap()).collect();
        let data: Vec<Forward> = shapes.iter().map(|s| evaluate(&problem, s.clone()).unwrap().forward).collect();
        let (_, _, best, _) = best_pair(&data, &shapes, 0.08, shapes[0].resolution_error()).unwrap().unwrap();
        let mut brute = f64::INFINITY;
        for i in 0..data.len() {
            for j in i + 1..data.len() {
                brute = brute.min(data[i].distance(&data[j]));
            }
        }
        assert_eq!(best, brute);
    }

    #[test]
    fn problem_kind_round_trip() {
        for k in ProblemKind::ALL {
            assert_eq!(k.as_str().parse::<ProblemKind>().unwrap(), k);
        }
        assert!("heat".parse::<ProblemKind>().is_err());
    }
}
