//! Conductivity inclusion problems in the unit disk: Dirichlet-to-Neumann
//! and Neumann-to-Dirichlet maps in the Fourier basis of the unit circle,
//! and resistance matrices of the complete electrode model.
//!
//! The inclusion `D` (conductivity `a`, background 1) is a radial subgraph
//! centered near the origin. The transmission problem is solved with a
//! single layer on `∂D` built from the Dirichlet Green's function of the
//! unit disk, so the outer boundary condition holds exactly and only `∂D`
//! is discretized. The boundary profile is first reduced to a trigonometric
//! polynomial, which gives exact normals and curvature and lets trapezoid
//! Nyström converge spectrally.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::linalg::{condition_number, linear_fit, op_norm};
use crate::opnet::{ClassConstants, OperatorMatrix};
use crate::shapes::{Profile, RadiusSeries, Shape, ShapeKind};
use crate::spectral::fourier_frequency;

/// Inclusions must stay inside this radius.
pub const MAX_INCLUSION_RADIUS: f64 = 0.8;
/// Smallest admissible `|a - 1|` other than the homogeneous case `a = 1`.
pub const CONTRAST_GUARD: f64 = 1e-6;
/// Entries of weighted difference matrices at or below this size are
/// treated as solver noise in decay fits.
pub const DECAY_NOISE_FLOOR: f64 = 1e-13;
/// `(Id + K)` solves with a larger condition estimate are refused.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConductivityError {
    #[error("inclusion must be a radial subgraph, got {0}")]
    WrongKind(ShapeKind),
    #[error("inclusion reaches radius {0}, beyond {MAX_INCLUSION_RADIUS}")]
    TooLarge(f64),
    #[error("contrast a = {0} must be positive with |a - 1| >= {CONTRAST_GUARD} (or exactly 1)")]
    Contrast(f64),
    #[error("rho = {0} must lie in (0, {MAX_INCLUSION_RADIUS}]")]
    RadiusOutOfRange(f64),
    #[error("transmission solve did not converge: estimated error {estimate:e} above {tolerance:e}")]
    NotConverged { estimate: f64, tolerance: f64 },
    #[error("singular system: {0}")]
    Singular(String),
    #[error("ill-conditioned electrode system (condition estimate {0:e})")]
    IllConditioned(f64),
    #[error("invalid electrode configuration: {0}")]
    Electrodes(String),
}

/// Discretization of the transmission solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    /// Trapezoid nodes on `∂D`.
    pub nodes: usize,
    /// Fourier modes kept in the boundary profile.
    pub geometry_modes: usize,
    /// Profile samples used to compute the geometry modes.
    pub geometry_samples: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { nodes: 256, geometry_modes: 64, geometry_samples: 2048 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InclusionProblem {
    shape: Shape,
    a: f64,
    n_max: u32,
    settings: SolverSettings,
}

impl InclusionProblem {
    pub fn new(shape: Shape, a: f64, n_max: u32) -> Result<Self, ConductivityError> {
        if shape.kind() != ShapeKind::RadialSubgraph {
            return Err(ConductivityError::WrongKind(shape.kind()));
        }
        if !(a > 0.0) || !a.is_finite() || (a != 1.0 && (a - 1.0).abs() < CONTRAST_GUARD) {
            return Err(ConductivityError::Contrast(a));
        }
        let c = shape.profile().center();
        let reach = c[0].hypot(c[1]) + shape.max_radius();
        if reach > MAX_INCLUSION_RADIUS + 1e-12 {
            return Err(ConductivityError::TooLarge(reach));
        }
        Ok(Self { shape, a, n_max, settings: SolverSettings::default() })
    }

    pub fn with_settings(mut self, settings: SolverSettings) -> Self {
        self.settings = settings;
        self
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn settings(&self) -> SolverSettings {
        self.settings
    }

    /// Size of the truncated Fourier space: `2 n_max + 1`.
    pub fn dim(&self) -> usize {
        2 * self.n_max as usize + 1
    }
}

/// `λ_n = n (1 - μ ρ^{2n}) / (1 + μ ρ^{2n})` with `μ = (1 - a)/(1 + a)`,
/// the DtN eigenvalues with a concentric disk of radius `ρ`.
pub fn dtn_concentric(rho: f64, a: f64, n_max: u32) -> Result<Vec<f64>, ConductivityError> {
    if !(rho > 0.0 && rho <= MAX_INCLUSION_RADIUS) {
        return Err(ConductivityError::RadiusOutOfRange(rho));
    }
    if !(a > 0.0) {
        return Err(ConductivityError::Contrast(a));
    }
    let mu = (1.0 - a) / (1.0 + a);
    Ok((0..=n_max)
        .map(|n| {
            let t = mu * rho.powi(2 * n as i32);
            n as f64 * (1.0 - t) / (1.0 + t)
        })
        .collect())
}

/// Boundary of the inclusion sampled at trapezoid nodes.
struct Curve {
    points: Vec<[f64; 2]>,
    normals: Vec<[f64; 2]>,
    /// Quadrature weights `(2π/N) |y'|`.
    weights: Vec<f64>,
    curvature: Vec<f64>,
}

fn build_curve(shape: &Shape, settings: &SolverSettings) -> Curve {
    let Profile::Radial(p) = shape.profile() else {
        unreachable!("inclusions are radial subgraphs");
    };
    let series = RadiusSeries::from_profile(p, settings.geometry_modes, settings.geometry_samples);
    let c = p.center();
    let n = settings.nodes;
    let mut curve = Curve {
        points: Vec::with_capacity(n),
        normals: Vec::with_capacity(n),
        weights: Vec::with_capacity(n),
        curvature: Vec::with_capacity(n),
    };
    for i in 0..n {
        let t = 2.0 * PI * i as f64 / n as f64;
        let (r, d1, d2) = series.eval(t);
        let (s, co) = t.sin_cos();
        let dy = [d1 * co - r * s, d1 * s + r * co];
        let speed = dy[0].hypot(dy[1]);
        curve.points.push([c[0] + r * co, c[1] + r * s]);
        curve.normals.push([dy[1] / speed, -dy[0] / speed]);
        curve.weights.push(2.0 * PI / n as f64 * speed);
        curve.curvature.push((r * r + 2.0 * d1 * d1 - r * d2) / speed.powi(3));
    }
    curve
}

/// Harmonic extension of the `k`-th real Fourier basis function and its
/// gradient at `x`.
fn harmonic_mode(k: usize, x: [f64; 2]) -> (f64, [f64; 2]) {
    if k == 0 {
        return (1.0 / (2.0 * PI).sqrt(), [0.0, 0.0]);
    }
    let j = fourier_frequency(k) as i32;
    let z = num_complex::Complex64::new(x[0], x[1]);
    let zj = z.powi(j);
    let dz = j as f64 * z.powi(j - 1);
    let c = 1.0 / PI.sqrt();
    if k % 2 == 1 {
        (c * zj.re, [c * dz.re, -c * dz.im])
    } else {
        (c * zj.im, [c * dz.im, c * dz.re])
    }
}

/// `⟨(Λ(D) - Λ0) ψ_k, ψ_l⟩` over the truncated real Fourier basis.
fn dtn_difference(prob: &InclusionProblem, settings: &SolverSettings) -> Result<DMatrix<f64>, ConductivityError> {
    let dim = prob.dim();
    let lambda = (prob.a - 1.0) / (prob.a + 1.0);
    let mut out = DMatrix::zeros(dim, dim);
    if lambda == 0.0 || dim == 1 {
        return Ok(out);
    }
    let curve = build_curve(&prob.shape, settings);
    let n = settings.nodes;
    let inv2pi = 1.0 / (2.0 * PI);
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        let x = curve.points[i];
        let nu = curve.normals[i];
        for j in 0..n {
            let y = curve.points[j];
            let direct = if i == j {
                -curve.curvature[i] * inv2pi / 2.0
            } else {
                let d = [x[0] - y[0], x[1] - y[1]];
                -inv2pi * (d[0] * nu[0] + d[1] * nu[1]) / (d[0] * d[0] + d[1] * d[1])
            };
            // Image term, written without forming y/|y|^2.
            let ry = y[0].hypot(y[1]);
            let image = if ry == 0.0 {
                0.0
            } else {
                let e = [ry * x[0] - y[0] / ry, ry * x[1] - y[1] / ry];
                inv2pi * ry * (e[0] * nu[0] + e[1] * nu[1]) / (e[0] * e[0] + e[1] * e[1])
            };
            a[(i, j)] = lambda * (direct + image) * curve.weights[j];
        }
        a[(i, i)] += 0.5;
    }
    let lu = a.lu();
    let modes = dim - 1;
    let mut rhs = DMatrix::zeros(n, modes);
    let mut traces = DMatrix::zeros(n, modes);
    for i in 0..n {
        for k in 1..dim {
            let (u, g) = harmonic_mode(k, curve.points[i]);
            let nu = curve.normals[i];
            rhs[(i, k - 1)] = -lambda * (g[0] * nu[0] + g[1] * nu[1]);
            traces[(i, k - 1)] = u * curve.weights[i];
        }
    }
    let density = lu
        .solve(&rhs)
        .ok_or_else(|| ConductivityError::Singular("transmission boundary operator".into()))?;
    let block = -(traces.transpose() * density);
    out.view_mut((1, 1), (modes, modes)).copy_from(&block);
    Ok(out)
}

/// Result of a transmission solve.
#[derive(Debug, Clone, PartialEq)]
pub struct DtnSolution {
    /// `⟨Λ(D) ψ_j, ψ_k⟩` in the real Fourier basis `1, cos θ, sin θ, ...`.
    pub matrix: DMatrix<f64>,
    /// `Λ(D) - Λ0`.
    pub difference: DMatrix<f64>,
    /// Max entry change when the node count is doubled, if requested.
    pub convergence_estimate: Option<f64>,
}

impl DtnSolution {
    /// `max |M - Mᵀ|`.
    pub fn symmetry_defect(&self) -> f64 {
        let m = &self.matrix;
        (m - m.transpose()).amax()
    }
}

fn homogeneous_dtn(dim: usize) -> DMatrix<f64> {
    DMatrix::from_fn(dim, dim, |i, j| if i == j { fourier_frequency(i) as f64 } else { 0.0 })
}

/// Solves the transmission problem for every Fourier datum up to `n_max`.
pub fn dtn_numeric(prob: &InclusionProblem) -> Result<DtnSolution, ConductivityError> {
    let difference = dtn_difference(prob, &prob.settings)?;
    let matrix = homogeneous_dtn(prob.dim()) + &difference;
    Ok(DtnSolution { matrix, difference, convergence_estimate: None })
}

/// [`dtn_numeric`] plus a second solve with twice the nodes; fails when the
/// two differ by more than `tolerance`.
pub fn dtn_numeric_checked(prob: &InclusionProblem, tolerance: f64) -> Result<DtnSolution, ConductivityError> {
    let mut sol = dtn_numeric(prob)?;
    let mut fine = prob.settings;
    fine.nodes *= 2;
    let refined = dtn_difference(prob, &fine)?;
    let estimate = (&refined - &sol.difference).amax();
    if estimate > tolerance {
        return Err(ConductivityError::NotConverged { estimate, tolerance });
    }
    sol.convergence_estimate = Some(estimate);
    Ok(sol)
}

/// Exponential fit `|b| <= C exp(-α max γ)` of a weighted matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub alpha: f64,
    pub c: f64,
    pub r_squared: f64,
    /// Degree shells above the noise floor that entered the regression.
    pub shells: usize,
}

impl DecayFit {
    pub fn envelope(&self, gamma: f64) -> f64 {
        self.c * (-self.alpha * gamma).exp()
    }
}

/// Largest `|b_{kl}|` in each shell `max(γ_k, γ_l) = n`, for integer-valued
/// degrees, as `(n, max)` pairs in increasing `n`.
pub fn shell_maxima(entries: &DMatrix<f64>, degrees: &[f64]) -> Vec<(f64, f64)> {
    let top = degrees.iter().cloned().fold(0.0, f64::max).round() as usize;
    let mut shells = vec![0.0f64; top + 1];
    for k in 0..degrees.len() {
        for l in 0..degrees.len() {
            let n = degrees[k].max(degrees[l]).round() as usize;
            shells[n] = shells[n].max(entries[(k, l)].abs());
        }
    }
    shells.into_iter().enumerate().map(|(n, m)| (n as f64, m)).collect()
}

/// Regression of `ln(shell max)` on the shell degree over shells above
/// `floor`; `C` is the regression intercept raised by the largest positive
/// residual, so every fitted shell lies under the envelope.
pub fn fit_decay(shells: &[(f64, f64)], floor: f64) -> Option<DecayFit> {
    let used: Vec<(f64, f64)> = shells.iter().filter(|(_, m)| *m > floor).map(|&(n, m)| (n, m.ln())).collect();
    let x: Vec<f64> = used.iter().map(|p| p.0).collect();
    let y: Vec<f64> = used.iter().map(|p| p.1).collect();
    let fit = linear_fit(&x, &y)?;
    let lift = used.iter().map(|(n, l)| l - (fit.intercept + fit.slope * n)).fold(0.0, f64::max);
    Some(DecayFit { alpha: -fit.slope, c: (fit.intercept + lift).exp(), r_squared: fit.r_squared, shells: used.len() })
}

/// Entries above `floor` that exceed the fitted envelope.
pub fn envelope_violations(entries: &DMatrix<f64>, degrees: &[f64], fit: &DecayFit, floor: f64) -> usize {
    let n = degrees.len();
    let mut count = 0;
    for k in 0..n {
        for l in 0..n {
            let b = entries[(k, l)].abs();
            if b > floor && b > fit.envelope(degrees[k].max(degrees[l])) * (1.0 + 1e-9) {
                count += 1;
            }
        }
    }
    count
}

/// `γ_k = 1 + deg` of the Dirichlet-weighted Fourier basis.
pub fn dirichlet_degrees(dim: usize) -> Vec<f64> {
    (0..dim).map(|k| 1.0 + fourier_frequency(k) as f64).collect()
}

/// `b_{jk} = ⟨(Λ(D) - Λ0) ψ_j, ψ_k⟩ / sqrt((1 + deg_j)(1 + deg_k))`.
pub fn weight_dtn_difference(difference: &DMatrix<f64>) -> DMatrix<f64> {
    let dim = difference.nrows();
    let g = dirichlet_degrees(dim);
    DMatrix::from_fn(dim, dim, |j, k| difference[(j, k)] / (g[j] * g[k]).sqrt())
}

/// Weighted DtN difference as an operator matrix, with `(C2, α2)` fitted on
/// the fly (`p = 1`). Matrices with no entry above the noise floor carry
/// placeholder constants.
pub fn delta_dtn_weighted(prob: &InclusionProblem) -> Result<(OperatorMatrix<f64>, Option<DecayFit>), ConductivityError> {
    let sol = dtn_numeric(prob)?;
    let b = weight_dtn_difference(&sol.difference);
    let degrees = dirichlet_degrees(prob.dim());
    let fit = fit_decay(&shell_maxima(&b, &degrees), DECAY_NOISE_FLOOR);
    let constants = match fit {
        Some(f) if f.alpha > 0.0 && f.c.is_finite() => {
            ClassConstants::new(f.c.max(b.amax()), f.alpha, 1.0).expect("positive fitted constants")
        }
        _ => ClassConstants { c2: f64::MIN_POSITIVE, alpha2: 1.0, p: 1.0 },
    };
    let matrix = OperatorMatrix::new(b, degrees, constants).expect("square matrix with matching degrees");
    Ok((matrix, fit))
}

/// Inverse of the mean-zero block (modes `1..`) of a DtN matrix: the NtD map
/// in the `L²`-normalized Fourier basis without the constant.
pub fn ntd_from_dtn(dtn: &DMatrix<f64>) -> Result<DMatrix<f64>, ConductivityError> {
    let n = dtn.nrows();
    if n < 2 {
        return Err(ConductivityError::Singular("no mean-zero modes".into()));
    }
    let block = dtn.view((1, 1), (n - 1, n - 1)).into_owned();
    block.try_inverse().ok_or_else(|| ConductivityError::Singular("mean-zero DtN block".into()))
}

/// `‖N‖` from `H^{-1/2}` to `H^{1/2}` for a mean-zero block:
/// `‖diag(1+j)^{1/2} N diag(j)^{1/2}‖₂`.
pub fn ntd_natural_norm(ntd: &DMatrix<f64>) -> f64 {
    let n = ntd.nrows();
    let f = |k: usize| fourier_frequency(k + 1) as f64;
    op_norm(&DMatrix::from_fn(n, n, |i, j| (1.0 + f(i)).sqrt() * ntd[(i, j)] * f(j).sqrt()))
}

/// `‖Λ̃‖` from `H^{1/2}` to `H^{-1/2}` for a mean-zero block:
/// `‖diag(j)^{-1/2} Λ̃ diag(1+j)^{-1/2}‖₂`.
pub fn dtn_natural_norm(dtn_block: &DMatrix<f64>) -> f64 {
    let n = dtn_block.nrows();
    let f = |k: usize| fourier_frequency(k + 1) as f64;
    op_norm(&DMatrix::from_fn(n, n, |i, j| dtn_block[(i, j)] / (f(i) * (1.0 + f(j))).sqrt()))
}

/// Energy comparison `Λ(D) >= min(1, a) Λ0` bounds the NtD map:
/// `‖N(D)‖ <= sqrt(2) / min(1, a)`; this returns the rounder `2 / min(1, a)`.
pub fn ntd_uniform_bound(a: f64) -> f64 {
    2.0 / a.min(1.0)
}

/// Electrode arcs on the unit circle and contact impedances.
#[derive(Debug, Clone, PartialEq)]
pub struct ElectrodeConfig {
    /// `(start, end)` angles with `start < end`, counterclockwise.
    arcs: Vec<(f64, f64)>,
    impedances: Vec<f64>,
}

impl ElectrodeConfig {
    pub fn new(arcs: Vec<(f64, f64)>, impedances: Vec<f64>) -> Result<Self, ConductivityError> {
        let l = arcs.len();
        if l < 2 {
            return Err(ConductivityError::Electrodes("need at least two electrodes".into()));
        }
        if impedances.len() != l {
            return Err(ConductivityError::Electrodes(format!("{l} arcs but {} impedances", impedances.len())));
        }
        if impedances.iter().any(|z| !(*z > 0.0)) {
            return Err(ConductivityError::Electrodes("impedances must be positive".into()));
        }
        if arcs.iter().any(|(s, e)| !(e > s) || e - s >= 2.0 * PI) {
            return Err(ConductivityError::Electrodes("each arc needs 0 < length < 2 pi".into()));
        }
        // Disjointness with positive gaps, on the circle.
        let mut sorted: Vec<(f64, f64)> = arcs.iter().map(|&(s, e)| (s.rem_euclid(2.0 * PI), e - s)).collect();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        for i in 0..l {
            let (s, len) = sorted[i];
            let next = if i + 1 < l { sorted[i + 1].0 } else { sorted[0].0 + 2.0 * PI };
            if s + len >= next {
                return Err(ConductivityError::Electrodes("arcs overlap or touch".into()));
            }
        }
        Ok(Self { arcs, impedances })
    }

    /// `count` equal arcs covering `coverage` of the circle, centered at
    /// `2π l / count`, all with impedance `z`.
    pub fn equally_spaced(count: usize, coverage: f64, z: f64) -> Result<Self, ConductivityError> {
        if !(coverage > 0.0 && coverage < 1.0) {
            return Err(ConductivityError::Electrodes(format!("coverage {coverage} must lie in (0, 1)")));
        }
        let half = PI * coverage / count.max(1) as f64;
        let arcs = (0..count)
            .map(|l| {
                let c = 2.0 * PI * l as f64 / count as f64;
                (c - half, c + half)
            })
            .collect();
        Self::new(arcs, vec![z; count])
    }

    pub fn len(&self) -> usize {
        self.arcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    pub fn arcs(&self) -> &[(f64, f64)] {
        &self.arcs
    }

    pub fn impedances(&self) -> &[f64] {
        &self.impedances
    }

    fn length(&self, l: usize) -> f64 {
        self.arcs[l].1 - self.arcs[l].0
    }
}

impl Default for ElectrodeConfig {
    fn default() -> Self {
        Self::equally_spaced(8, 0.5, 0.1).expect("valid default electrodes")
    }
}

/// `∫_α^β cos(mθ) dθ` and `∫_α^β sin(mθ) dθ` for integer `m >= 0`.
fn trig_integrals(m: u32, alpha: f64, beta: f64) -> (f64, f64) {
    if m == 0 {
        return (beta - alpha, 0.0);
    }
    let mf = m as f64;
    (((mf * beta).sin() - (mf * alpha).sin()) / mf, ((mf * alpha).cos() - (mf * beta).cos()) / mf)
}

/// `(normalization, frequency, is_sine)` of basis function `k`.
fn basis_parts(k: usize) -> (f64, u32, bool) {
    if k == 0 {
        (1.0 / (2.0 * PI).sqrt(), 0, false)
    } else {
        (1.0 / PI.sqrt(), fourier_frequency(k), k % 2 == 0)
    }
}

/// `∫_{arc} ψ_k`.
fn arc_moments(dim: usize, alpha: f64, beta: f64) -> DVector<f64> {
    DVector::from_fn(dim, |k, _| {
        let (c, m, sine) = basis_parts(k);
        let (ic, is) = trig_integrals(m, alpha, beta);
        c * if sine { is } else { ic }
    })
}

/// `∫_{arc} ψ_j ψ_k`, by product-to-sum.
fn arc_products(dim: usize, alpha: f64, beta: f64) -> DMatrix<f64> {
    DMatrix::from_fn(dim, dim, |j, k| {
        let (cj, mj, sj) = basis_parts(j);
        let (ck, mk, sk) = basis_parts(k);
        let (dm, sm) = (mj.abs_diff(mk), mj + mk);
        let (c_diff, s_diff) = trig_integrals(dm, alpha, beta);
        let (c_sum, s_sum) = trig_integrals(sm, alpha, beta);
        // sin((mj - mk)θ) with the sign of mj - mk.
        let s_diff = if mj >= mk { s_diff } else { -s_diff };
        let v = match (sj, sk) {
            (false, false) => 0.5 * (c_diff + c_sum),
            (true, true) => 0.5 * (c_diff - c_sum),
            (true, false) => 0.5 * (s_sum + s_diff),
            (false, true) => 0.5 * (s_sum - s_diff),
        };
        cj * ck * v
    })
}

/// Fourier-side operators of an electrode layout on `dim` modes.
///
/// With `N` the NtD matrix extended by zeros on the constant mode, the
/// resistance matrix is `R = A N (I + Q N)^{-1} B` where
/// - `B = S diag(1/|e_l|) P` turns a current pattern into the averaged
///   boundary current `Σ (I_l/|e_l|) s_l`, after projecting to `Σ I = 0`;
/// - `Q = Σ_l (P_l - s_l s_lᵀ/|e_l|)/z_l` is the impedance coupling;
/// - `A = Π Sᵀ` integrates the potential over each electrode and shifts
///   the result to `Σ V = 0`.
///
/// Here `s_l = ∫_{e_l} ψ` and `P_l = ∫_{e_l} ψ ψᵀ`.
#[derive(Debug, Clone)]
pub struct ElectrodeOperators {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub q: DMatrix<f64>,
}

impl ElectrodeOperators {
    pub fn new(dim: usize, cfg: &ElectrodeConfig) -> Self {
        let l_count = cfg.len();
        let mut s = DMatrix::zeros(dim, l_count);
        let mut q = DMatrix::zeros(dim, dim);
        for (l, &(a, b)) in cfg.arcs.iter().enumerate() {
            let m = arc_moments(dim, a, b);
            q += (arc_products(dim, a, b) - &m * m.transpose() / cfg.length(l)) / cfg.impedances[l];
            s.set_column(l, &m);
        }
        let lengths = DVector::from_fn(l_count, |l, _| cfg.length(l));
        let total = lengths.sum();
        let pi = DMatrix::identity(l_count, l_count) - &lengths * DVector::from_element(l_count, 1.0).transpose() / total;
        let proj = DMatrix::identity(l_count, l_count) - DMatrix::from_element(l_count, l_count, 1.0 / l_count as f64);
        let inv_len = DMatrix::from_diagonal(&lengths.map(|x| 1.0 / x));
        Self { a: pi * s.transpose(), b: s * inv_len * proj, q }
    }

    fn extend(ntd: &DMatrix<f64>) -> DMatrix<f64> {
        let dim = ntd.nrows() + 1;
        let mut nfull = DMatrix::zeros(dim, dim);
        nfull.view_mut((1, 1), (dim - 1, dim - 1)).copy_from(ntd);
        nfull
    }

    /// `(‖(I + N Q)^{-1}‖₂, ‖(I + Q N)^{-1}‖₂)` for one NtD matrix.
    pub fn resolvent_norms(&self, ntd: &DMatrix<f64>) -> Result<(f64, f64), ConductivityError> {
        let nfull = Self::extend(ntd);
        let dim = nfull.nrows();
        let id = DMatrix::<f64>::identity(dim, dim);
        let left = (&id + &nfull * &self.q).try_inverse();
        let right = (&id + &self.q * &nfull).try_inverse();
        match (left, right) {
            (Some(l), Some(r)) => Ok((op_norm(&l), op_norm(&r))),
            _ => Err(ConductivityError::Singular("electrode system".into())),
        }
    }

    /// `‖A‖₂ ‖B‖₂`.
    pub fn outer_norm(&self) -> f64 {
        op_norm(&self.a) * op_norm(&self.b)
    }
}

/// Resistance matrix of the complete electrode model with normalization
/// `Σ V_l = 0` and `R [1] = 0`, assembled from the NtD matrix of the
/// mean-zero modes.
pub fn resistance_matrix(ntd: &DMatrix<f64>, cfg: &ElectrodeConfig) -> Result<DMatrix<f64>, ConductivityError> {
    let ops = ElectrodeOperators::new(ntd.nrows() + 1, cfg);
    let nfull = ElectrodeOperators::extend(ntd);
    let dim = nfull.nrows();
    let system = DMatrix::identity(dim, dim) + &ops.q * &nfull;
    let cond = condition_number(&system);
    if !(cond <= MAX_CONDITION) {
        return Err(ConductivityError::IllConditioned(cond));
    }
    let currents = system.lu().solve(&ops.b).ok_or_else(|| ConductivityError::Singular("electrode system".into()))?;
    let mut r = &ops.a * (&nfull * currents);
    let l_count = cfg.len();
    // Make R [1] = 0 hold exactly when rows are summed left to right.
    for i in 0..l_count {
        let head: f64 = (0..l_count - 1).map(|j| r[(i, j)]).sum();
        r[(i, l_count - 1)] = -head;
    }
    Ok(r)
}

/// Constant `C` with `‖R(D1) - R(D2)‖₂ <= C ‖N(D1) - N(D2)‖₂` for every pair
/// drawn from `ntds`, from the exact identity
/// `R1 - R2 = A (I + N1 Q)^{-1} (N1 - N2) (I + Q N2)^{-1} B`.
pub fn resistance_lipschitz_constant(ntds: &[&DMatrix<f64>], cfg: &ElectrodeConfig) -> Result<f64, ConductivityError> {
    let Some(first) = ntds.first() else { return Ok(0.0) };
    let ops = ElectrodeOperators::new(first.nrows() + 1, cfg);
    let (mut left, mut right) = (0.0f64, 0.0f64);
    for n in ntds {
        let (l, r) = ops.resolvent_norms(n)?;
        left = left.max(l);
        right = right.max(r);
    }
    Ok(ops.outer_norm() * left * right)
}

/// Convenience: DtN, NtD and resistance matrix of one problem.
pub fn resistance_for(prob: &InclusionProblem, cfg: &ElectrodeConfig) -> Result<DMatrix<f64>, ConductivityError> {
    let sol = dtn_numeric(prob)?;
    resistance_matrix(&ntd_from_dtn(&sol.matrix)?, cfg)
}
