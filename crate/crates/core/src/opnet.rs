//! Operator matrices in a weighted basis and the quantization δ-net.
//!
//! An operator is represented by its matrix `b_{kl} = <G v_k, v_l>` in an
//! orthonormal basis whose elements carry degrees `γ_k`. Class members obey
//! `|b_{kl}| <= C2 exp(-α2 max(γ_k, γ_l))` and the degree table obeys
//! `#{k : γ_k <= n} <= C2 (1 + n)^p`. Very small δ are handled through
//! `L = -log δ` so that the net bookkeeping never underflows.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::linalg::op_norm;
use crate::spectral::{DomainKind, Weighting};

/// Slack allowed when checking that entries lie in `[-C2, C2]`.
pub const ENTRY_SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetError {
    #[error("delta must satisfy 0 < delta < 1/e, got -log(delta) = {0}")]
    DeltaOutOfRange(f64),
    #[error("entry ({row}, {col}) = {value} lies outside [-C2, C2] = [-{c2}, {c2}]")]
    EntryOutOfRange { row: usize, col: usize, value: f64, c2: f64 },
    #[error("quantization step underflows at -log(delta) = {0}")]
    StepUnderflow(f64),
    #[error("matrix is {rows}x{cols} but {degrees} degrees are attached")]
    Shape { rows: usize, cols: usize, degrees: usize },
    #[error("invalid class constants: {0}")]
    Constants(String),
}

/// `C2` (entry bound and growth constant), `α2` (decay rate), `p` (growth
/// exponent).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassConstants {
    pub c2: f64,
    pub alpha2: f64,
    pub p: f64,
}

impl ClassConstants {
    pub fn new(c2: f64, alpha2: f64, p: f64) -> Result<Self, NetError> {
        if !(c2 > 0.0 && alpha2 > 0.0 && p > 0.0) || !(c2.is_finite() && alpha2.is_finite() && p.is_finite()) {
            return Err(NetError::Constants(format!("need positive finite C2, alpha2, p; got {c2}, {alpha2}, {p}")));
        }
        Ok(Self { c2, alpha2, p })
    }

    /// `C2 exp(-α2 t)`: the entry envelope at max degree `t`.
    pub fn entry_envelope(&self, t: f64) -> f64 {
        self.c2 * (-self.alpha2 * t).exp()
    }

    /// `ln(C2 exp(-α2 (t - 1)) (2 + t)^{p+1})`.
    fn log_weighted_envelope(&self, t: f64) -> f64 {
        self.c2.ln() - self.alpha2 * (t - 1.0) + (self.p + 1.0) * (2.0 + t).ln()
    }

    /// `sup_{n >= 1} C2 exp(-α2 (n - 1)) (2 + n)^{p+1}`, bounding the Y-norm
    /// of every class member.
    pub fn y_norm_bound(&self) -> f64 {
        let peak = ((self.p + 1.0) / self.alpha2 - 2.0).max(1.0);
        let lo = peak.floor().max(1.0);
        let candidates = [1.0, lo, lo + 1.0];
        candidates.iter().map(|&n| self.log_weighted_envelope(n).exp()).fold(0.0, f64::max)
    }
}

/// Scalar entries: real, or complex quantized component-wise.
pub trait Entry: nalgebra::ComplexField<RealField = f64> + Copy {
    /// Size used in the Y-norm.
    fn size(&self) -> f64;
    /// Largest absolute component, checked against `C2`.
    fn max_component(&self) -> f64;
    fn map_components(&self, f: impl Fn(f64) -> f64) -> Self;
}

impl Entry for f64 {
    fn size(&self) -> f64 {
        self.abs()
    }

    fn max_component(&self) -> f64 {
        self.abs()
    }

    fn map_components(&self, f: impl Fn(f64) -> f64) -> Self {
        f(*self)
    }
}

impl Entry for Complex64 {
    fn size(&self) -> f64 {
        self.norm()
    }

    fn max_component(&self) -> f64 {
        self.re.abs().max(self.im.abs())
    }

    fn map_components(&self, f: impl Fn(f64) -> f64) -> Self {
        Complex64::new(f(self.re), f(self.im))
    }
}

/// Finite truncation of an operator in a weighted basis.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix<T: Entry = f64> {
    entries: DMatrix<T>,
    degrees: Vec<f64>,
    constants: ClassConstants,
}

impl<T: Entry> OperatorMatrix<T> {
    pub fn new(entries: DMatrix<T>, degrees: Vec<f64>, constants: ClassConstants) -> Result<Self, NetError> {
        if entries.nrows() != degrees.len() || entries.ncols() != degrees.len() {
            return Err(NetError::Shape { rows: entries.nrows(), cols: entries.ncols(), degrees: degrees.len() });
        }
        Ok(Self { entries, degrees, constants })
    }

    pub fn zeros(degrees: Vec<f64>, constants: ClassConstants) -> Self {
        let n = degrees.len();
        Self { entries: DMatrix::zeros(n, n), degrees, constants }
    }

    pub fn entries(&self) -> &DMatrix<T> {
        &self.entries
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    pub fn constants(&self) -> ClassConstants {
        self.constants
    }

    pub fn dim(&self) -> usize {
        self.degrees.len()
    }

    fn max_degree(&self, k: usize, l: usize) -> f64 {
        self.degrees[k].max(self.degrees[l])
    }

    /// Entry-wise difference; degrees and constants are taken from `self`.
    pub fn difference(&self, other: &Self) -> Self {
        Self { entries: &self.entries - &other.entries, degrees: self.degrees.clone(), constants: self.constants }
    }

    /// Whether every entry obeys the decay envelope of the class.
    pub fn is_class_member(&self) -> bool {
        let n = self.dim();
        (0..n).all(|k| {
            (0..n).all(|l| {
                self.entries[(k, l)].size() <= self.constants.entry_envelope(self.max_degree(k, l)) * (1.0 + 1e-12)
            })
        })
    }

    pub fn op_norm(&self) -> f64 {
        op_norm(&self.entries)
    }
}

/// `sup_{k,l} |b_{kl}| (2 + max(γ_k, γ_l))^{p+1}`.
pub fn y_norm<T: Entry>(g: &OperatorMatrix<T>) -> f64 {
    let n = g.dim();
    let q = g.constants.p + 1.0;
    let mut best: f64 = 0.0;
    for l in 0..n {
        for k in 0..n {
            let b = g.entries[(k, l)].size();
            if b != 0.0 {
                best = best.max(b * (2.0 + g.max_degree(k, l)).powf(q));
            }
        }
    }
    best
}

/// `C2 (Σ_{n>=1} (1 + n)^{-2})^{1/2}`. The partial sum runs to `10^6`;
/// the tail is replaced by its integral upper bound `1/M`, so the returned
/// value is an upper bound accurate to about `1e-13` relative.
pub fn c4_constant(c2: f64) -> f64 {
    const M: u32 = 1_000_000;
    // Summed from small terms up to limit rounding error.
    let partial: f64 = (2..=M).rev().map(|m| 1.0 / (m as f64 * m as f64)).sum();
    c2 * (partial + 1.0 / M as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormComparison {
    pub op_norm: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Compares the largest singular value with `C4 ‖G‖_Y`.
pub fn op_norm_bound_check<T: Entry>(g: &OperatorMatrix<T>) -> NormComparison {
    let op = g.op_norm();
    let bound = c4_constant(g.constants.c2) * y_norm(g);
    NormComparison { op_norm: op, bound, holds: op <= bound * (1.0 + 1e-12) }
}

/// Degree tables used to count `#{k : γ_k <= n}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DegreeCounter {
    /// The largest count allowed by the growth condition: `floor(C2 (1+n)^p)`.
    Saturating,
    /// The degrees of a reference basis under a weighting.
    Basis(DomainKind, Weighting),
}

impl DegreeCounter {
    pub fn count(&self, n: f64, constants: &ClassConstants) -> f64 {
        match *self {
            DegreeCounter::Saturating => (constants.c2 * (1.0 + n).powf(constants.p)).floor(),
            DegreeCounter::Basis(domain, weighting) => {
                // Largest raw degree d whose γ is <= n.
                let d = match weighting {
                    Weighting::DirichletTrace => n - 1.0,
                    Weighting::NeumannTrace | Weighting::Plain => n,
                };
                if d < 0.0 {
                    return 0.0;
                }
                let neumann = weighting == Weighting::NeumannTrace;
                let c = match domain {
                    DomainKind::FullCircle => 2.0 * d.floor() + 1.0,
                    DomainKind::HalfDiskNeumann => d.floor() + 1.0,
                    DomainKind::HalfDiskDirichlet => d.floor(),
                    DomainKind::SlitDiskNeumann => (2.0 * d).floor() + 1.0,
                    DomainKind::SlitDiskDirichlet => (2.0 * d).floor(),
                };
                // The constant has no Neumann weight.
                let has_constant = matches!(
                    domain,
                    DomainKind::FullCircle | DomainKind::HalfDiskNeumann | DomainKind::SlitDiskNeumann
                );
                if neumann && has_constant {
                    c - 1.0
                } else {
                    c
                }
            }
        }
    }
}

/// Net parameters for one δ, given as `L = -log δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetParams {
    pub neg_log_delta: f64,
    pub n_tilde: u64,
    /// `ln δ'`.
    pub log_delta_prime: f64,
    pub c4: f64,
    pub constants: ClassConstants,
}

impl NetParams {
    pub fn new(delta: f64, constants: ClassConstants) -> Result<Self, NetError> {
        Self::from_neg_log_delta(-delta.ln(), constants)
    }

    pub fn from_neg_log_delta(neg_log_delta: f64, constants: ClassConstants) -> Result<Self, NetError> {
        let n_tilde = n_tilde_log(neg_log_delta, &constants)?;
        let c4 = c4_constant(constants.c2);
        let log_delta_prime =
            -(constants.p + 1.0) * (2.0 + n_tilde as f64).ln() - neg_log_delta - (2.0 * c4).ln();
        Ok(Self { neg_log_delta, n_tilde, log_delta_prime, c4, constants })
    }

    pub fn delta(&self) -> f64 {
        (-self.neg_log_delta).exp()
    }

    pub fn delta_prime(&self) -> f64 {
        self.log_delta_prime.exp()
    }

    /// `ln #Ψ_δ` with `#Ψ_δ = 2 floor(C2/δ') + 1`.
    pub fn log_grid_size(&self) -> f64 {
        let log_ratio = self.constants.c2.ln() - self.log_delta_prime;
        if log_ratio < 36.0 {
            (2.0 * log_ratio.exp().floor() + 1.0).ln()
        } else {
            // floor and +1 are below f64 resolution here.
            std::f64::consts::LN_2 + log_ratio
        }
    }

    /// `s = #{(k,l) : max(γ_k, γ_l) <= ñ}`.
    pub fn pair_count(&self, counter: DegreeCounter) -> f64 {
        let c = counter.count(self.n_tilde as f64, &self.constants);
        c * c
    }

    /// Matrix truncation used when building members for this δ.
    pub fn truncation_degree(&self) -> u64 {
        (2 * self.n_tilde).max(64)
    }
}

/// Smallest positive integer `ñ` with
/// `C2 exp(-α2 (t - 1)) (2 + t)^{p+1} <= δ / (2 C4)` for every real `t >= ñ`.
pub fn n_tilde(delta: f64, constants: &ClassConstants) -> Result<u64, NetError> {
    n_tilde_log(-delta.ln(), constants)
}

/// [`n_tilde`] in terms of `L = -log δ`.
pub fn n_tilde_log(neg_log_delta: f64, constants: &ClassConstants) -> Result<u64, NetError> {
    if !(neg_log_delta > 1.0) || !neg_log_delta.is_finite() {
        return Err(NetError::DeltaOutOfRange(neg_log_delta));
    }
    let threshold = -neg_log_delta - (2.0 * c4_constant(constants.c2)).ln();
    // The envelope increases up to t* and decreases afterwards, so its sup
    // over [n, inf) is its value at max(n, t*); this is monotone in n.
    let t_star = (constants.p + 1.0) / constants.alpha2 - 2.0;
    let ok = |n: u64| constants.log_weighted_envelope((n as f64).max(t_star)) <= threshold;
    let mut hi = 1u64;
    while !ok(hi) {
        hi *= 2;
    }
    let mut lo = hi / 2;
    if lo == 0 {
        return Ok(1);
    }
    // ok(lo) is false, ok(hi) is true.
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Rounds to the nearest multiple of `step`, ties toward zero, clamped to
/// `[-c2, c2]` on the grid.
fn round_to_grid(x: f64, step: f64, c2: f64) -> f64 {
    let q = x.abs() / step;
    let mut n = q.floor();
    if q - n > 0.5 {
        n += 1.0;
    }
    let top = (c2 / step).floor();
    x.signum() * n.min(top) * step
}

/// Projects a class member onto the net: entries with max degree `<= ñ`
/// go to the nearest point of `δ'Z ∩ [-C2, C2]`, the rest to zero.
pub fn quantize<T: Entry>(g: &OperatorMatrix<T>, params: &NetParams) -> Result<OperatorMatrix<T>, NetError> {
    let step = params.delta_prime();
    if step == 0.0 || !step.is_normal() {
        return Err(NetError::StepUnderflow(params.neg_log_delta));
    }
    let c2 = g.constants.c2;
    let n = g.dim();
    let cutoff = params.n_tilde as f64;
    let mut out = DMatrix::zeros(n, n);
    for l in 0..n {
        for k in 0..n {
            let b = g.entries[(k, l)];
            if b.max_component() > c2 + ENTRY_SLACK {
                let value = b.max_component();
                return Err(NetError::EntryOutOfRange { row: k, col: l, value, c2 });
            }
            if g.max_degree(k, l) <= cutoff {
                out[(k, l)] = b.map_components(|x| round_to_grid(x, step, c2));
            }
        }
    }
    Ok(OperatorMatrix { entries: out, degrees: g.degrees.clone(), constants: g.constants })
}

/// `s ln #Ψ_δ`: log of the number of net elements.
pub fn net_size_log_bound(params: &NetParams, counter: DegreeCounter) -> f64 {
    params.pair_count(counter) * params.log_grid_size()
}

/// Same as [`net_size_log_bound`] for complex entries: each entry needs a
/// pair of grid values, which doubles the log-count.
pub fn net_size_log_bound_complex(params: &NetParams, counter: DegreeCounter) -> f64 {
    2.0 * net_size_log_bound(params, counter)
}

/// `C5 = max ñ / L` and `C3 = max (s ln #Ψ) / L^{2p+1}` over a grid of
/// `L = -log δ` values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetConstants {
    pub c3: f64,
    pub c5: f64,
}

pub fn fit_net_constants(
    constants: &ClassConstants,
    counter: DegreeCounter,
    neg_log_deltas: &[f64],
) -> Result<NetConstants, NetError> {
    let mut out = NetConstants { c3: 0.0, c5: 0.0 };
    for &l in neg_log_deltas {
        let params = NetParams::from_neg_log_delta(l, *constants)?;
        out.c5 = out.c5.max(params.n_tilde as f64 / l);
        out.c3 = out.c3.max(net_size_log_bound(&params, counter) / l.powf(2.0 * constants.p + 1.0));
    }
    Ok(out)
}

/// `-log δ(ε) = ε^{-α1/(2p+1+α3)}`; `α3 = 1` is the default choice.
pub fn neg_log_delta_of_epsilon(eps: f64, alpha1: f64, p: f64, alpha3: f64) -> f64 {
    eps.powf(-alpha1 / (2.0 * p + 1.0 + alpha3))
}

/// `δ(ε) = exp(-ε^{-α1/(2(p+1))})`.
pub fn delta_of_epsilon(eps: f64, alpha1: f64, p: f64) -> f64 {
    (-neg_log_delta_of_epsilon(eps, alpha1, p, 1.0)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountingCheck {
    pub holds: bool,
    /// Packing log-count minus net log-bound.
    pub margin: f64,
}

/// Pigeonhole condition: more packing elements than net elements means two
/// ε-separated points share a net cell of radius δ.
pub fn counting_check(packing_log_count: f64, net_log_bound: f64) -> CountingCheck {
    let margin = packing_log_count - net_log_bound;
    CountingCheck { holds: margin > 0.0, margin }
}

/// Margin of the counting condition when the packing has
/// `exp(C1 ε^{-α1})` elements and the net `exp(C3 (-log δ(ε))^{2p+1})`.
pub fn counting_margin_model(eps: f64, c1: f64, alpha1: f64, c3: f64, p: f64, alpha3: f64) -> f64 {
    let l = neg_log_delta_of_epsilon(eps, alpha1, p, alpha3);
    c1 * eps.powf(-alpha1) - c3 * l.powf(2.0 * p + 1.0)
}

/// `ε1`: below it the model margin is positive and `δ(ε) < 1/e`.
pub fn epsilon_one(eps0: f64, c1: f64, alpha1: f64, c3: f64, p: f64, alpha3: f64) -> f64 {
    let from_count = (c1 / c3).powf((2.0 * p + 1.0 + alpha3) / (alpha1 * alpha3));
    eps0.min(1.0).min(from_count)
}

/// Random class member over `degrees`: `b_{kl} = C2 exp(-α2 max γ) u_{kl}`
/// with `u` uniform in `[-1, 1]`.
pub fn random_class_member<R: Rng>(degrees: &[f64], constants: ClassConstants, rng: &mut R) -> OperatorMatrix<f64> {
    let n = degrees.len();
    let entries = DMatrix::from_fn(n, n, |k, l| {
        constants.entry_envelope(degrees[k].max(degrees[l])) * rng.random_range(-1.0..=1.0)
    });
    OperatorMatrix { entries, degrees: degrees.to_vec(), constants }
}

/// Degrees `0, 1, 2, ...` of the half-disk Neumann basis: one element per
/// integer degree, which meets the growth condition with `C2 = 1, p = 1`.
pub fn integer_degrees(count: usize) -> Vec<f64> {
    (0..count).map(|k| k as f64).collect()
}
