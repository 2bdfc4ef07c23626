//! Sound-soft acoustic scattering in the plane: Bessel and Hankel functions,
//! far-field patterns of disks and star-shaped obstacles, and the
//! coefficient matrices of far fields in the Fourier basis of the circle.
//!
//! Far fields follow `u^s(x) = e^{ik|x|}/sqrt(|x|) (A(x̂, ω) + O(1/|x|))`
//! for the incident wave `e^{ik x·ω}`, with `k = sqrt(a)`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::conductivity::{fit_decay, shell_maxima, DecayFit};
use crate::opnet::{ClassConstants, OperatorMatrix};
use crate::shapes::{Profile, RadiusSeries, Shape, ShapeKind};
use crate::spectral::fourier_frequency;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
/// Argument range of the public Bessel functions.
pub const BESSEL_RANGE: (f64, f64) = (0.3, 60.0);
/// Largest profile value of an admissible obstacle.
pub const PROFILE_CAP: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScatteringError {
    #[error("Bessel argument x = {0} outside [0.3, 60]")]
    ArgumentOutOfRange(f64),
    #[error("obstacle must be a radial subgraph, got {0}")]
    WrongKind(ShapeKind),
    #[error("invalid obstacle: {0}")]
    InvalidObstacle(String),
    #[error("wave parameter a = {0} must be positive")]
    WaveParameter(f64),
    #[error("disk radius {0} must lie in (0, 1.5]")]
    Radius(f64),
    #[error("far field did not converge: estimated error {estimate:e} above {tolerance:e}")]
    NotConverged { estimate: f64, tolerance: f64 },
    #[error("singular boundary integral system")]
    Singular,
}

/// `J_0(x), ..., J_n(x)` for `x > 0` by Miller's backward recurrence,
/// normalized with `J_0 + 2 Σ J_{2k} = 1`.
pub(crate) fn bessel_j_upto(n: usize, x: f64) -> Vec<f64> {
    let top = n.max(x.ceil() as usize);
    let mut start = top + 30 + (160.0 * top as f64).sqrt().ceil() as usize;
    start += start % 2;
    // Values are kept as (mantissa, rescale count) so tiny high orders
    // survive the rescaling that prevents overflow.
    const BIG: f64 = 1e250;
    let mut vals = vec![(0.0f64, 0i32); n + 1];
    let (mut next, mut cur) = (0.0f64, 1e-300f64);
    let mut rescales = 0i32;
    let mut even_sum = 0.0;
    let mut j0 = 0.0;
    for k in (0..=start).rev() {
        // cur holds J_k (unnormalized), next holds J_{k+1}.
        if k <= n {
            vals[k] = (cur, rescales);
        }
        if k == 0 {
            j0 = cur;
        } else if k % 2 == 0 {
            even_sum += cur;
        }
        if k > 0 {
            let prev = 2.0 * k as f64 / x * cur - next;
            next = cur;
            cur = prev;
            if cur.abs() > BIG {
                cur /= BIG;
                next /= BIG;
                even_sum /= BIG;
                rescales += 1;
            }
        }
    }
    let norm = j0 + 2.0 * even_sum;
    let ln_big = BIG.ln();
    vals.iter()
        .map(|&(v, r)| {
            if v == 0.0 {
                0.0
            } else {
                let shift = (r - rescales) as f64 * ln_big;
                v.signum() * (v.abs().ln() + shift - norm.abs().ln()).exp() * norm.signum()
            }
        })
        .collect()
}

/// `Y_0(x), ..., Y_n(x)` from the Neumann series of `Y_0`, its derivative
/// for `Y_1`, and forward recurrence; `js` must hold `J_k(x)` for enough
/// orders that the series terms vanish.
fn bessel_y_from_j(n: usize, x: f64, js: &[f64]) -> Vec<f64> {
    let lg = (x / 2.0).ln() + EULER_GAMMA;
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    let mut k = 1;
    while 2 * k + 1 < js.len() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        s0 += sign * js[2 * k] / k as f64;
        s1 += sign * (js[2 * k - 1] - js[2 * k + 1]) / (2 * k) as f64;
        k += 1;
    }
    let y0 = 2.0 / PI * lg * js[0] - 4.0 / PI * s0;
    let y1 = -(2.0 / PI * (js[0] / x - lg * js[1]) - 4.0 / PI * s1);
    let mut ys = vec![y0, y1];
    for k in 1..n.max(1) {
        let y = 2.0 * k as f64 / x * ys[k] - ys[k - 1];
        ys.push(y);
    }
    ys.truncate(n + 1);
    ys
}

/// `[J_0, J_1, Y_0, Y_1]` at `x > 0` in one backward sweep, for kernel
/// evaluation.
pub(crate) fn bessel_01(x: f64) -> [f64; 4] {
    let top = x.ceil().max(1.0) as usize;
    let mut start = top + 30 + (160.0 * top as f64).sqrt().ceil() as usize;
    start += start % 2;
    let (mut next, mut cur) = (0.0f64, 1e-280f64);
    // even: Σ J_{2k}; s0: Σ (-1)^k J_{2k}/k; s1: the Y_1 series regrouped by
    // odd index i = 2k + 1 with weight (-1)^{k+1} (1/(2k+2) + 1/(2k)).
    let (mut even, mut s0, mut s1) = (0.0, 0.0, 0.0);
    let mut j1 = 0.0;
    for k in (1..=start).rev() {
        if k % 2 == 0 {
            let h = k / 2;
            let sign = if h % 2 == 0 { 1.0 } else { -1.0 };
            even += cur;
            s0 += sign * cur / h as f64;
        } else {
            let h = (k - 1) / 2;
            let sign = if h % 2 == 0 { -1.0 } else { 1.0 };
            let w = 1.0 / (2 * h + 2) as f64 + if h >= 1 { 1.0 / (2 * h) as f64 } else { 0.0 };
            s1 += sign * w * cur;
        }
        if k == 1 {
            j1 = cur;
        }
        let prev = 2.0 * k as f64 / x * cur - next;
        next = cur;
        cur = prev;
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            even *= 1e-250;
            s0 *= 1e-250;
            s1 *= 1e-250;
            j1 *= 1e-250;
        }
    }
    let norm = cur + 2.0 * even;
    let (j0, j1, s0, s1) = (cur / norm, j1 / norm, s0 / norm, s1 / norm);
    let lg = (x / 2.0).ln() + EULER_GAMMA;
    let y0 = 2.0 / PI * lg * j0 - 4.0 / PI * s0;
    let y1 = -(2.0 / PI * (j0 / x - lg * j1) - 4.0 / PI * s1);
    [j0, j1, y0, y1]
}

/// `(J_n, Y_n)` for orders `0..=n`.
pub(crate) fn bessel_jy_upto(n: usize, x: f64) -> (Vec<f64>, Vec<f64>) {
    let series_len = (x.ceil() as usize + 40).max(n + 2);
    let js = bessel_j_upto(series_len, x);
    let ys = bessel_y_from_j(n, x, &js);
    (js[..=n].to_vec(), ys)
}

fn check_argument(x: f64) -> Result<(), ScatteringError> {
    if !(BESSEL_RANGE.0..=BESSEL_RANGE.1).contains(&x) {
        return Err(ScatteringError::ArgumentOutOfRange(x));
    }
    Ok(())
}

pub fn bessel_j(n: u32, x: f64) -> Result<f64, ScatteringError> {
    check_argument(x)?;
    Ok(bessel_j_upto(n as usize, x)[n as usize])
}

pub fn bessel_y(n: u32, x: f64) -> Result<f64, ScatteringError> {
    check_argument(x)?;
    Ok(bessel_jy_upto(n as usize, x).1[n as usize])
}

/// `(J_0..J_n, Y_0..Y_n)` at `x`.
pub fn bessel_jy(n: u32, x: f64) -> Result<(Vec<f64>, Vec<f64>), ScatteringError> {
    check_argument(x)?;
    Ok(bessel_jy_upto(n as usize, x))
}

/// `H_n^{(1)} = J_n + i Y_n`.
pub fn hankel1(n: u32, x: f64) -> Result<Complex64, ScatteringError> {
    check_argument(x)?;
    let (j, y) = bessel_jy_upto(n as usize, x);
    Ok(Complex64::new(j[n as usize], y[n as usize]))
}

/// Constant in `1/|H_n^{(1)}(r)| <= C7 (e r / 2)^n (n-1)^{-(n-1)}` for
/// `n >= 2`, and `1/|H_n^{(1)}(r)| <= C7` for `n = 0, 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HankelBound {
    /// Smallest constant valid on the whole grid.
    pub c7: f64,
    /// Largest ratio over the upper half of the order range; not above
    /// `c7`, and below the lower-half maximum when the bound is uniform.
    pub upper_half_max: f64,
    pub lower_half_max: f64,
}

impl HankelBound {
    /// The ratio does not grow with the order, so one constant covers
    /// larger orders too.
    pub fn is_uniform(&self) -> bool {
        self.upper_half_max <= self.lower_half_max
    }
}

/// Evaluates the ratio `|H_n|^{-1} / bound` on `orders × radii` and returns
/// the fitted constant.
pub fn hankel_bound_check(orders: std::ops::RangeInclusive<u32>, radii: &[f64]) -> Result<HankelBound, ScatteringError> {
    let (lo, hi) = (*orders.start(), *orders.end());
    let mid = lo + (hi - lo) / 2;
    let mut out = HankelBound { c7: 0.0, upper_half_max: 0.0, lower_half_max: 0.0 };
    for &r in radii {
        check_argument(r)?;
        let (j, y) = bessel_jy_upto(hi as usize, r);
        for n in lo..=hi {
            let h = j[n as usize].hypot(y[n as usize]);
            let log_bound = if n < 2 {
                0.0
            } else {
                n as f64 * (std::f64::consts::E * r / 2.0).ln() - (n - 1) as f64 * ((n - 1) as f64).ln()
            };
            let ratio = (-h.ln() - log_bound).exp();
            out.c7 = out.c7.max(ratio);
            if n > mid {
                out.upper_half_max = out.upper_half_max.max(ratio);
            } else {
                out.lower_half_max = out.lower_half_max.max(ratio);
            }
        }
    }
    Ok(out)
}

/// Far-field coefficients `b_{kl}(a)` in the real Fourier basis of the
/// circle, with the far field sampled on a direction grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FarFieldMatrix {
    entries: DMatrix<Complex64>,
    a: f64,
    /// `A(x̂_p, ω_q)` on `P` equispaced directions, if computed.
    samples: Option<DMatrix<Complex64>>,
}

impl FarFieldMatrix {
    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn wave_number(&self) -> f64 {
        self.a.sqrt()
    }

    pub fn samples(&self) -> Option<&DMatrix<Complex64>> {
        self.samples.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// `max |A(x̂, ω) - A(-ω, -x̂)|` over the sample grid; zero without samples.
    pub fn reciprocity_residual(&self) -> f64 {
        let Some(s) = &self.samples else { return 0.0 };
        let p = s.nrows();
        let h = p / 2;
        let mut worst: f64 = 0.0;
        for i in 0..p {
            for q in 0..p {
                worst = worst.max((s[(i, q)] - s[((q + h) % p, (i + h) % p)]).norm());
            }
        }
        worst
    }

    /// `max |b_{kl}|` in the shell `max(1 + deg_k, 1 + deg_l) = n`.
    pub fn shell_maxima(&self) -> Vec<(f64, f64)> {
        let mags = self.entries.map(|z| z.norm());
        shell_maxima(&mags, &farfield_degrees(self.dim()))
    }

    /// Exponential fit of the coefficient magnitudes against `1 + degree`.
    pub fn decay_fit(&self, floor: f64) -> Option<DecayFit> {
        fit_decay(&self.shell_maxima(), floor)
    }

    pub fn to_operator(&self, constants: ClassConstants) -> OperatorMatrix<Complex64> {
        OperatorMatrix::new(self.entries.clone(), farfield_degrees(self.dim()), constants)
            .expect("square matrix with matching degrees")
    }
}

/// `γ_k = 1 + deg` for the real Fourier basis.
pub fn farfield_degrees(dim: usize) -> Vec<f64> {
    (0..dim).map(|k| 1.0 + fourier_frequency(k) as f64).collect()
}

/// `sqrt(Σ |b_{kl}|²)`, the `L²` norm of the far field on the torus.
pub fn farfield_l2_norm(m: &FarFieldMatrix) -> f64 {
    m.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Real Fourier basis `v_k(θ_p)` at `P` equispaced angles.
fn basis_on_grid(p: usize, dim: usize) -> DMatrix<f64> {
    DMatrix::from_fn(p, dim, |i, k| {
        let t = 2.0 * PI * i as f64 / p as f64;
        if k == 0 {
            1.0 / (2.0 * PI).sqrt()
        } else {
            let f = fourier_frequency(k) as f64;
            (if k % 2 == 1 { (f * t).cos() } else { (f * t).sin() }) / PI.sqrt()
        }
    })
}

/// `b = Vᵀ A V (2π/P)²`.
fn project(samples: &DMatrix<Complex64>, dim: usize) -> DMatrix<Complex64> {
    let p = samples.nrows();
    let v = basis_on_grid(p, dim).map(|x| Complex64::new(x, 0.0));
    let w = (2.0 * PI / p as f64).powi(2);
    (v.transpose() * samples * v).map(|z| z * w)
}

/// Default number of far-field directions.
pub fn direction_count(n_max: u32) -> usize {
    let p = (2 * n_max as usize + 32).max(64);
    p + p % 2
}

/// Disk of radius `R`: `A(x̂, ω) = Σ_n c_n e^{in(θ - θ_ω)}` with
/// `c_n = -sqrt(2/(πk)) e^{-iπ/4} J_n(kR)/H_n(kR)`, so `b` is diagonal with
/// `b = 2π c_n` on both the cosine and sine of frequency `n`.
pub fn farfield_disk(radius: f64, a: f64, n_max: u32) -> Result<FarFieldMatrix, ScatteringError> {
    if !(radius > 0.0 && radius <= 1.5) {
        return Err(ScatteringError::Radius(radius));
    }
    if !(a > 0.0) {
        return Err(ScatteringError::WaveParameter(a));
    }
    let k = a.sqrt();
    let coeffs = disk_coefficients(radius, k, n_max as usize);
    let dim = 2 * n_max as usize + 1;
    let mut entries = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        entries[(i, i)] = coeffs[fourier_frequency(i) as usize] * (2.0 * PI);
    }
    let p = direction_count(n_max);
    let samples = DMatrix::from_fn(p, p, |i, q| {
        let d = 2.0 * PI * (i as f64 - q as f64) / p as f64;
        coeffs.iter().enumerate().fold(Complex64::new(0.0, 0.0), |acc, (n, c)| {
            let term = c * (2.0 * (n as f64 * d).cos());
            if n == 0 { acc + c } else { acc + term }
        })
    });
    Ok(FarFieldMatrix { entries, a, samples: Some(samples) })
}

/// `c_n` of [`farfield_disk`] for `n = 0..=n_max`.
pub fn disk_coefficients(radius: f64, k: f64, n_max: usize) -> Vec<Complex64> {
    let (j, y) = bessel_jy_upto(n_max, k * radius);
    let pre = -(2.0 / (PI * k)).sqrt() * Complex64::from_polar(1.0, -PI / 4.0);
    (0..=n_max).map(|n| pre * j[n] / Complex64::new(j[n], y[n])).collect()
}

/// Sound-soft obstacle with a list of wave parameters `a = k²`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleProblem {
    shape: Shape,
    wave_params: Vec<f64>,
    n_max: u32,
    /// Boundary quadrature nodes (even).
    pub nodes: usize,
    /// Fourier modes kept in the boundary profile.
    pub geometry_modes: usize,
}

impl ObstacleProblem {
    pub fn new(shape: Shape, wave_params: Vec<f64>, n_max: u32) -> Result<Self, ScatteringError> {
        if shape.kind() != ShapeKind::RadialSubgraph {
            return Err(ScatteringError::WrongKind(shape.kind()));
        }
        let Profile::Radial(p) = shape.profile() else { unreachable!() };
        if p.values().iter().any(|v| *v > PROFILE_CAP + 1e-12) {
            return Err(ScatteringError::InvalidObstacle(format!("profile exceeds {PROFILE_CAP}")));
        }
        let c = p.center();
        if c[0].hypot(c[1]) + shape.max_radius() > 1.8 + 1e-12 {
            return Err(ScatteringError::InvalidObstacle("obstacle leaves B(0, 9/5)".into()));
        }
        if wave_params.is_empty() {
            return Err(ScatteringError::InvalidObstacle("no wave parameters".into()));
        }
        if let Some(a) = wave_params.iter().find(|a| !(**a > 0.0) || !a.is_finite()) {
            return Err(ScatteringError::WaveParameter(*a));
        }
        Ok(Self { shape, wave_params, n_max, nodes: 256, geometry_modes: 64 })
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn wave_params(&self) -> &[f64] {
        &self.wave_params
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }
}

/// Boundary at the Nyström nodes `t_j = π j / n`.
struct Boundary {
    x: Vec<[f64; 2]>,
    dx: Vec<[f64; 2]>,
    ddx: Vec<[f64; 2]>,
}

impl Boundary {
    fn from_series(center: [f64; 2], series: &RadiusSeries, nodes: usize) -> Self {
        let mut b = Boundary { x: vec![], dx: vec![], ddx: vec![] };
        for i in 0..nodes {
            let t = 2.0 * PI * i as f64 / nodes as f64;
            let (r, d1, d2) = series.eval(t);
            let (s, c) = t.sin_cos();
            b.x.push([center[0] + r * c, center[1] + r * s]);
            b.dx.push([d1 * c - r * s, d1 * s + r * c]);
            b.ddx.push([d2 * c - 2.0 * d1 * s - r * c, d2 * s + 2.0 * d1 * c - r * s]);
        }
        b
    }

    fn speed(&self, j: usize) -> f64 {
        self.dx[j][0].hypot(self.dx[j][1])
    }

    /// Outward normal scaled by the speed, `(x2', -x1')`.
    fn scaled_normal(&self, j: usize) -> [f64; 2] {
        [self.dx[j][1], -self.dx[j][0]]
    }
}

/// Weights `R_j` of the logarithmic quadrature on `2n` nodes, by offset.
fn log_weights(two_n: usize) -> Vec<f64> {
    let n = two_n / 2;
    (0..two_n)
        .map(|d| {
            let s: f64 = (1..n).map(|m| (m as f64 * d as f64 * PI / n as f64).cos() / m as f64).sum();
            let last = if d % 2 == 0 { 1.0 } else { -1.0 };
            -2.0 * PI / n as f64 * s - PI / (n * n) as f64 * last
        })
        .collect()
}

/// Nyström matrix of `½ + K - iηS` with `η = k` on `b`.
fn assemble(b: &Boundary, k: f64) -> DMatrix<Complex64> {
    let nn = b.x.len();
    let n = nn / 2;
    let h = PI / n as f64;
    let weights = log_weights(nn);
    let i = Complex64::i();
    // Bessel values depend only on |x_p - x_q|.
    let mut table = vec![[0.0f64; 5]; nn * nn];
    for p in 0..nn {
        for q in p + 1..nn {
            let r = (b.x[p][0] - b.x[q][0]).hypot(b.x[p][1] - b.x[q][1]);
            let [j0, j1, y0, y1] = bessel_01(k * r);
            table[p * nn + q] = [j0, j1, y0, y1, r];
            table[q * nn + p] = table[p * nn + q];
        }
    }
    let mut a = DMatrix::<Complex64>::zeros(nn, nn);
    for p in 0..nn {
        for q in 0..nn {
            let speed = b.speed(q);
            let (l1, l2, m1, m2);
            if p == q {
                let (d1, d2) = (b.dx[p], b.ddx[p]);
                l1 = 0.0;
                l2 = Complex64::new((d1[1] * d2[0] - d1[0] * d2[1]) / (4.0 * PI * speed * speed), 0.0);
                m1 = -speed / (4.0 * PI);
                m2 = Complex64::new(-EULER_GAMMA / (2.0 * PI) - (k * speed / 2.0).ln() / (2.0 * PI), 0.25) * speed;
            } else {
                let [j0, j1, y0, y1, r] = table[p * nn + q];
                let d = [b.x[p][0] - b.x[q][0], b.x[p][1] - b.x[q][1]];
                let nv = b.scaled_normal(q);
                let nd = nv[0] * d[0] + nv[1] * d[1];
                let t = PI * (p as f64 - q as f64) / n as f64;
                let lg = (4.0 * (t / 2.0).sin().powi(2)).ln();
                l1 = -k / (4.0 * PI) * j1 * nd / r;
                m1 = -j0 * speed / (4.0 * PI);
                l2 = i * (k / 4.0) * Complex64::new(j1, y1) * nd / r - l1 * lg;
                m2 = i * 0.25 * Complex64::new(j0, y0) * speed - m1 * lg;
            }
            a[(p, q)] = (l1 - i * k * m1) * weights[(p + nn - q) % nn] + (l2 - i * k * m2) * h;
        }
        a[(p, p)] += 0.5;
    }
    a
}

/// Unit vectors at `count` equispaced angles.
fn directions(count: usize) -> Vec<[f64; 2]> {
    (0..count)
        .map(|q| {
            let t = 2.0 * PI * q as f64 / count as f64;
            [t.cos(), t.sin()]
        })
        .collect()
}

/// Layer densities for the incident waves `e^{ik x·ω}`, one column per `ω`.
fn densities(b: &Boundary, k: f64, incident: &[[f64; 2]]) -> Result<DMatrix<Complex64>, ScatteringError> {
    let rhs = DMatrix::from_fn(b.x.len(), incident.len(), |p, q| {
        let w = incident[q];
        -Complex64::from_polar(1.0, k * (b.x[p][0] * w[0] + b.x[p][1] * w[1]))
    });
    assemble(b, k).lu().solve(&rhs).ok_or(ScatteringError::Singular)
}

/// Far field `A(x̂_p, ω_q)` on `dirs` equispaced directions.
fn solve_farfield(b: &Boundary, k: f64, dirs: usize) -> Result<DMatrix<Complex64>, ScatteringError> {
    let nn = b.x.len();
    let h = 2.0 * PI / nn as f64;
    let grid = directions(dirs);
    let density = densities(b, k, &grid)?;
    let pre = Complex64::from_polar(1.0 / (8.0 * PI * k).sqrt(), -PI / 4.0);
    let eval = DMatrix::from_fn(dirs, nn, |p, q| {
        let xh = grid[p];
        let nv = b.scaled_normal(q);
        let phase = -k * (xh[0] * b.x[q][0] + xh[1] * b.x[q][1]);
        pre * h * (k * (nv[0] * xh[0] + nv[1] * xh[1]) + k * b.speed(q)) * Complex64::from_polar(1.0, phase)
    });
    Ok(eval * density)
}

fn obstacle_boundary(prob: &ObstacleProblem, nodes: usize) -> Boundary {
    let Profile::Radial(p) = prob.shape.profile() else { unreachable!() };
    let series = RadiusSeries::from_profile(p, prob.geometry_modes, p.values().len().max(2048));
    Boundary::from_series(p.center(), &series, nodes)
}

/// Far-field coefficient matrices, one per wave parameter.
pub fn farfield_numeric(prob: &ObstacleProblem) -> Result<Vec<FarFieldMatrix>, ScatteringError> {
    // Kernel arguments k|x - y| reach k times the diameter.
    let diameter = 2.0 * prob.shape.max_radius();
    if let Some(a) = prob.wave_params.iter().find(|a| a.sqrt() * diameter > BESSEL_RANGE.1) {
        return Err(ScatteringError::ArgumentOutOfRange(a.sqrt() * diameter));
    }
    let b = obstacle_boundary(prob, prob.nodes);
    let dirs = direction_count(prob.n_max);
    let dim = 2 * prob.n_max as usize + 1;
    prob.wave_params
        .iter()
        .map(|&a| {
            let samples = solve_farfield(&b, a.sqrt(), dirs)?;
            Ok(FarFieldMatrix { entries: project(&samples, dim), a, samples: Some(samples) })
        })
        .collect()
}

/// [`farfield_numeric`] compared against a solve with twice the nodes.
pub fn farfield_numeric_checked(prob: &ObstacleProblem, tolerance: f64) -> Result<Vec<FarFieldMatrix>, ScatteringError> {
    let coarse = farfield_numeric(prob)?;
    let mut fine = prob.clone();
    fine.nodes *= 2;
    for (c, f) in coarse.iter().zip(farfield_numeric(&fine)?) {
        let estimate = (c.entries() - f.entries()).map(|z| z.norm()).max();
        if estimate > tolerance {
            return Err(ScatteringError::NotConverged { estimate, tolerance });
        }
    }
    Ok(coarse)
}

/// Scattered field `u^s` at `points` for the incident direction at angle
/// `theta`.
pub fn scattered_field(
    prob: &ObstacleProblem,
    a: f64,
    theta: f64,
    points: &[[f64; 2]],
) -> Result<Vec<Complex64>, ScatteringError> {
    let k = a.sqrt();
    let b = obstacle_boundary(prob, prob.nodes);
    let nn = b.x.len();
    let h = 2.0 * PI / nn as f64;
    let density = densities(&b, k, &[[theta.cos(), theta.sin()]])?;
    let i = Complex64::i();
    Ok(points
        .iter()
        .map(|x| {
            (0..nn).fold(Complex64::new(0.0, 0.0), |acc, q| {
                let d = [x[0] - b.x[q][0], x[1] - b.x[q][1]];
                let r = d[0].hypot(d[1]);
                let [j0, j1, y0, y1] = bessel_01(k * r);
                let nv = b.scaled_normal(q);
                let nd = nv[0] * d[0] + nv[1] * d[1];
                let dl = i * (k / 4.0) * Complex64::new(j1, y1) * nd / r;
                let sl = i * 0.25 * Complex64::new(j0, y0) * b.speed(q);
                acc + (dl - i * k * sl) * density[(q, 0)] * h
            })
        })
        .collect())
}
