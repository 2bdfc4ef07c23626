//! Stekloff eigenbases of the unit disk, the upper half disk and the disk
//! slit along the positive x-axis, in two dimensions.
//!
//! Every eigenfunction is `r^γ Y(θ)` with an angular factor `Y` normalized
//! in `L²` of the accessible arc: the whole circle for the disk, the upper
//! half circle for the half disk and the circle minus the slit point for
//! the slit disk.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::linalg::gauss_legendre;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("the neumann weighting is undefined for a degree-0 element")]
    NeumannDegreeZero,
    #[error("r0 = {0} must lie in (0, 1)")]
    RadiusOutOfRange(f64),
    #[error("unknown {what} `{value}`")]
    Unknown { what: &'static str, value: String },
    #[error("need N >= 2, got {0}")]
    Dimension(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DomainKind {
    FullCircle,
    /// Upper half disk, Neumann condition on the diameter.
    HalfDiskNeumann,
    /// Upper half disk, Dirichlet condition on the diameter.
    HalfDiskDirichlet,
    /// Slit disk, Neumann condition on both lips of the slit.
    SlitDiskNeumann,
    /// Slit disk, Dirichlet condition on both lips of the slit.
    SlitDiskDirichlet,
}

impl DomainKind {
    pub const ALL: [DomainKind; 5] = [
        DomainKind::FullCircle,
        DomainKind::HalfDiskNeumann,
        DomainKind::HalfDiskDirichlet,
        DomainKind::SlitDiskNeumann,
        DomainKind::SlitDiskDirichlet,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DomainKind::FullCircle => "full_circle",
            DomainKind::HalfDiskNeumann => "half_disk_neumann",
            DomainKind::HalfDiskDirichlet => "half_disk_dirichlet",
            DomainKind::SlitDiskNeumann => "slit_disk_neumann",
            DomainKind::SlitDiskDirichlet => "slit_disk_dirichlet",
        }
    }

    /// Angular extent of the accessible arc, starting at `θ = 0`.
    pub fn arc_length(self) -> f64 {
        match self {
            DomainKind::HalfDiskNeumann | DomainKind::HalfDiskDirichlet => PI,
            _ => 2.0 * PI,
        }
    }

    fn is_slit(self) -> bool {
        matches!(self, DomainKind::SlitDiskNeumann | DomainKind::SlitDiskDirichlet)
    }
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DomainKind {
    type Err = SpectralError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DomainKind::ALL
            .into_iter()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| SpectralError::Unknown { what: "domain", value: s.into() })
    }
}

/// How the eigenfunctions are scaled and which `γ` they carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Weighting {
    /// `f / sqrt(1 + deg)`, orthonormal in `H^{1/2}`; `γ = 1 + deg`.
    DirichletTrace,
    /// `sqrt(deg) f`, orthonormal in `H^{-1/2}`; `γ = deg`.
    NeumannTrace,
    /// `L²`-normalized; `γ = deg`.
    Plain,
}

impl Weighting {
    pub fn as_str(self) -> &'static str {
        match self {
            Weighting::DirichletTrace => "dirichlet_trace",
            Weighting::NeumannTrace => "neumann_trace",
            Weighting::Plain => "plain",
        }
    }
}

impl fmt::Display for Weighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Weighting {
    type Err = SpectralError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [Weighting::DirichletTrace, Weighting::NeumannTrace, Weighting::Plain]
            .into_iter()
            .find(|w| w.as_str() == s)
            .ok_or_else(|| SpectralError::Unknown { what: "weighting", value: s.into() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GammaConvention {
    Dirichlet,
    Neumann,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisSpec {
    pub domain: DomainKind,
    pub weighting: Weighting,
    pub n_max: u32,
}

impl BasisSpec {
    pub fn new(domain: DomainKind, weighting: Weighting, n_max: u32) -> Self {
        Self { domain, weighting, n_max }
    }
}

/// One eigenfunction. Degrees are stored doubled so that the half-integer
/// degrees of the slit disk are exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisElement {
    pub index: usize,
    pub domain: DomainKind,
    twice_degree: u32,
    /// 1 for cosine-type (and constant) factors, 2 for sine-type.
    pub tag: u8,
}

impl BasisElement {
    pub fn degree(&self) -> f64 {
        self.twice_degree as f64 / 2.0
    }

    pub fn twice_degree(&self) -> u32 {
        self.twice_degree
    }

    /// Angular frequency of `Y`: the degree itself.
    fn frequency(&self) -> f64 {
        self.degree()
    }

    fn normalization(&self) -> f64 {
        let arc = self.domain.arc_length();
        if self.twice_degree == 0 {
            1.0 / arc.sqrt()
        } else {
            (2.0 / arc).sqrt()
        }
    }

    /// `Y(θ)`, normalized in `L²` of the accessible arc.
    pub fn angular(&self, theta: f64) -> f64 {
        let c = self.normalization();
        let w = self.frequency();
        if self.tag == 2 {
            c * (w * theta).sin()
        } else {
            c * (w * theta).cos()
        }
    }

    /// `Y'(θ)`.
    pub fn angular_derivative(&self, theta: f64) -> f64 {
        let c = self.normalization();
        let w = self.frequency();
        if self.tag == 2 {
            c * w * (w * theta).cos()
        } else {
            -c * w * (w * theta).sin()
        }
    }

    /// The harmonic extension `r^γ Y(θ)`.
    pub fn interior(&self, r: f64, theta: f64) -> f64 {
        r.powf(self.degree()) * self.angular(theta)
    }

    /// Polar angle of `(x, y)` in the parametrization of this domain.
    pub fn polar_angle(&self, x: f64, y: f64) -> f64 {
        let t = y.atan2(x);
        if self.domain.is_slit() || self.domain == DomainKind::FullCircle {
            t.rem_euclid(2.0 * PI)
        } else {
            t
        }
    }
}

/// All elements with degree `<= n_max`, in nondecreasing degree order.
pub fn enumerate_basis(spec: &BasisSpec) -> Vec<BasisElement> {
    let mut out = Vec::new();
    let mut push = |twice_degree: u32, tag: u8| {
        let index = out.len();
        out.push(BasisElement { index, domain: spec.domain, twice_degree, tag });
    };
    let n = spec.n_max;
    match spec.domain {
        DomainKind::FullCircle => {
            push(0, 1);
            for j in 1..=n {
                push(2 * j, 1);
                push(2 * j, 2);
            }
        }
        DomainKind::HalfDiskNeumann => (0..=n).for_each(|j| push(2 * j, 1)),
        DomainKind::HalfDiskDirichlet => (1..=n).for_each(|j| push(2 * j, 2)),
        DomainKind::SlitDiskNeumann => (0..=2 * n).for_each(|k| push(k, 1)),
        DomainKind::SlitDiskDirichlet => (1..=2 * n).for_each(|k| push(k, 2)),
    }
    out
}

/// `γ` of an element under a weighting convention: `1 + deg` (Dirichlet)
/// or `deg` (Neumann, undefined at degree 0).
pub fn gamma_value(elt: &BasisElement, convention: GammaConvention) -> Result<f64, SpectralError> {
    match convention {
        GammaConvention::Dirichlet => Ok(1.0 + elt.degree()),
        GammaConvention::Neumann if elt.twice_degree == 0 => Err(SpectralError::NeumannDegreeZero),
        GammaConvention::Neumann => Ok(elt.degree()),
    }
}

/// The `γ_k` attached to each element of `spec`; plain weighting uses the
/// degree itself.
pub fn weighted_degrees(spec: &BasisSpec) -> Result<Vec<f64>, SpectralError> {
    enumerate_basis(spec)
        .iter()
        .map(|e| match spec.weighting {
            Weighting::DirichletTrace => gamma_value(e, GammaConvention::Dirichlet),
            Weighting::NeumannTrace => gamma_value(e, GammaConvention::Neumann),
            Weighting::Plain => Ok(e.degree()),
        })
        .collect()
}

/// `#{k : γ_k <= n}` over the raw degrees of the domain.
pub fn growth_count(domain: DomainKind, n: u32) -> usize {
    enumerate_basis(&BasisSpec::new(domain, Weighting::Plain, n)).len()
}

fn binomial(n: u64, k: u64) -> u128 {
    let k = k.min(n - k.min(n));
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Number of linearly independent spherical harmonics of degree `j` in
/// dimension `N`: `(2j + N - 2) (j + N - 3)! / (j! (N - 2)!)`, and 1 at
/// `j = 0`.
pub fn multiplicity_general_n(j: u32, n: u32) -> Result<u128, SpectralError> {
    if n < 2 {
        return Err(SpectralError::Dimension(n));
    }
    if j == 0 {
        return Ok(1);
    }
    let (j, n) = (j as u64, n as u64);
    let p = (2 * j + n - 2) as u128 * binomial(j + n - 3, n - 2) / j as u128;
    debug_assert!(p as f64 <= 2.0 * ((j + 1) as f64).powi(n as i32 - 2) * (1.0 + 1e-12));
    Ok(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SobolevIndex {
    Zero,
    Half,
    MinusHalf,
}

impl SobolevIndex {
    /// Fourier multiplier at integer frequency `j`.
    pub fn weight(self, j: u32) -> f64 {
        match self {
            SobolevIndex::Zero => 1.0,
            SobolevIndex::Half => 1.0 + j as f64,
            SobolevIndex::MinusHalf if j == 0 => 1.0,
            SobolevIndex::MinusHalf => 1.0 / j as f64,
        }
    }
}

/// Frequency of position `k` in the real Fourier basis
/// `1, cos θ, sin θ, cos 2θ, ...`.
pub fn fourier_frequency(k: usize) -> u32 {
    k.div_ceil(2) as u32
}

/// `sqrt(Σ_j w_s(j) |c_j|²)` for coefficients in the `L²`-normalized real
/// Fourier basis of the circle.
pub fn sobolev_norm(coeffs: &[f64], s: SobolevIndex) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| s.weight(fourier_frequency(k)) * c * c)
        .sum::<f64>()
        .sqrt()
}

/// `‖r^γ Y‖_{H¹}` on the part of `B(0, r0)` inside the domain, in closed
/// form: `γ r0^{2γ} + r0^{2γ+2} / (2γ + 2)` squared.
pub fn interior_decay_closed_form(elt: &BasisElement, r0: f64) -> Result<f64, SpectralError> {
    if !(r0 > 0.0 && r0 < 1.0) {
        return Err(SpectralError::RadiusOutOfRange(r0));
    }
    let g = elt.degree();
    Ok((g * r0.powf(2.0 * g) + r0.powf(2.0 * g + 2.0) / (2.0 * g + 2.0)).sqrt())
}

/// `H¹` norm of the eigenfunction on `B(0, r0)` intersected with the domain.
/// Closed form on the disk; on the half and slit disks the gradient is
/// integrated numerically (trapezoid in angle, Gauss–Legendre in radius).
pub fn interior_decay(elt: &BasisElement, r0: f64) -> Result<f64, SpectralError> {
    if elt.domain == DomainKind::FullCircle {
        return interior_decay_closed_form(elt, r0);
    }
    if !(r0 > 0.0 && r0 < 1.0) {
        return Err(SpectralError::RadiusOutOfRange(r0));
    }
    let g = elt.degree();
    let arc = elt.domain.arc_length();
    let n_theta = 512;
    // The angular integrands are trigonometric polynomials of degree at most
    // 2γ; over a full period trapezoid is exact, over the half period the
    // endpoints are included with half weight.
    let (value2, grad_r2, grad_t2) = {
        let mut acc = (0.0, 0.0, 0.0);
        let closed = arc < 2.0 * PI - 1e-12;
        let nodes = if closed { n_theta + 1 } else { n_theta };
        for i in 0..nodes {
            let t = arc * i as f64 / n_theta as f64;
            let w = if closed && (i == 0 || i == n_theta) { 0.5 } else { 1.0 } * arc / n_theta as f64;
            let y = elt.angular(t);
            let dy = elt.angular_derivative(t);
            acc.0 += w * y * y;
            acc.1 += w * y * y;
            acc.2 += w * dy * dy;
        }
        acc
    };
    // Radial parts: ∫ r^{2γ} r dr and ∫ r^{2γ-2} r dr. Both integrands are
    // integer powers of r because 2γ is an integer, so Gauss–Legendre with
    // enough nodes is exact.
    let (nodes, weights) = gauss_legendre((g as usize + 2).max(16));
    let mut mass = 0.0;
    let mut energy = 0.0;
    for (x, w) in nodes.iter().zip(&weights) {
        let r = 0.5 * r0 * (x + 1.0);
        let wr = 0.5 * r0 * w;
        mass += wr * r.powf(2.0 * g + 1.0) * value2;
        if g > 0.0 {
            energy += wr * r.powf(2.0 * g - 1.0) * (g * g * grad_r2 + grad_t2);
        }
    }
    Ok((mass + energy).sqrt())
}

/// `max_k interior_decay(e_k, r0) / r0^{γ_k}` over the enumerated elements:
/// the constant in `‖u_k‖ <= C exp(-log(1/r0) γ_k)`.
pub fn fit_decay_constant(spec: &BasisSpec, r0: f64) -> Result<f64, SpectralError> {
    enumerate_basis(spec).iter().try_fold(0.0f64, |acc, e| {
        Ok(acc.max(interior_decay(e, r0)? / r0.powf(e.degree())))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_circle_counts() {
        let one = enumerate_basis(&BasisSpec::new(DomainKind::FullCircle, Weighting::Plain, 0));
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].degree(), 0.0);
        let seven = enumerate_basis(&BasisSpec::new(DomainKind::FullCircle, Weighting::Plain, 3));
        assert_eq!(seven.len(), 7);
        let d: Vec<f64> = seven.iter().map(|e| e.degree()).collect();
        assert_eq!(d, vec![0.0, 1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
    }

    #[test]
    fn slit_disk_degrees_are_half_integers() {
        let b = enumerate_basis(&BasisSpec::new(DomainKind::SlitDiskNeumann, Weighting::Plain, 2));
        let d: Vec<f64> = b.iter().map(|e| e.degree()).collect();
        assert_eq!(d, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
    }

    #[test]
    fn degrees_nondecreasing_and_growth_bounded() {
        for domain in DomainKind::ALL {
            let b = enumerate_basis(&BasisSpec::new(domain, Weighting::Plain, 30));
            assert!(b.windows(2).all(|w| w[0].degree() <= w[1].degree()));
            for n in 0..30 {
                assert!(growth_count(domain, n) <= 2 * (1 + n as usize), "{domain} n={n}");
            }
        }
    }

    #[test]
    fn multiplicities() {
        for n in 2..7 {
            assert_eq!(multiplicity_general_n(0, n).unwrap(), 1);
        }
        assert_eq!(multiplicity_general_n(2, 3).unwrap(), 5);
        assert_eq!(multiplicity_general_n(5, 2).unwrap(), 2);
        // Dimension of harmonic polynomials of degree j in N variables:
        // C(j+N-1, N-1) - C(j+N-3, N-1).
        for n in 3..7u64 {
            for j in 1..12u64 {
                let expected = binomial(j + n - 1, n - 1) - if j >= 2 { binomial(j + n - 3, n - 1) } else { 0 };
                assert_eq!(multiplicity_general_n(j as u32, n as u32).unwrap(), expected, "N={n} j={j}");
            }
        }
    }

    #[test]
    fn gamma_conventions() {
        let b = enumerate_basis(&BasisSpec::new(DomainKind::FullCircle, Weighting::Plain, 7));
        assert_eq!(gamma_value(&b[0], GammaConvention::Dirichlet).unwrap(), 1.0);
        assert_eq!(gamma_value(&b[13], GammaConvention::Dirichlet).unwrap(), 8.0);
        assert_eq!(gamma_value(&b[5], GammaConvention::Neumann).unwrap(), 3.0);
        assert_eq!(gamma_value(&b[0], GammaConvention::Neumann), Err(SpectralError::NeumannDegreeZero));
    }

    #[test]
    fn sobolev_norms() {
        // cos(jθ)/sqrt(pi) has unit L² mass; its harmonic extension
        // r^j cos(jθ)/sqrt(pi) has Dirichlet energy j, plus the unit mass.
        let mut c = vec![0.0; 11];
        c[9] = 1.0;
        assert!((sobolev_norm(&c, SobolevIndex::Half).powi(2) - 6.0).abs() < 1e-14);
        let constant = [0.7];
        assert_eq!(sobolev_norm(&constant, SobolevIndex::MinusHalf), sobolev_norm(&constant, SobolevIndex::Zero));
        for j in 1..50 {
            assert!(SobolevIndex::MinusHalf.weight(j) <= 1.0 && 1.0 <= SobolevIndex::Half.weight(j));
        }
    }

    /// Nine-point compact Laplacian; its error on harmonic functions is
    /// sixth order in h.
    fn nine_point_laplacian(f: impl Fn(f64, f64) -> f64, x: f64, y: f64, h: f64) -> f64 {
        let c = f(x, y);
        let edges = f(x + h, y) + f(x - h, y) + f(x, y + h) + f(x, y - h);
        let corners = f(x + h, y + h) + f(x - h, y + h) + f(x + h, y - h) + f(x - h, y - h);
        (4.0 * edges + corners - 20.0 * c) / (6.0 * h * h)
    }

    #[test]
    fn eigenfunctions_are_harmonic_and_satisfy_side_conditions() {
        let h = 2e-3;
        for domain in DomainKind::ALL {
            for e in enumerate_basis(&BasisSpec::new(domain, Weighting::Plain, 10)) {
                let u = |x: f64, y: f64| e.interior(x.hypot(y), e.polar_angle(x, y));
                let mut worst: f64 = 0.0;
                for i in 0..15 {
                    for j in 0..15 {
                        let x = -0.85 + 1.7 * i as f64 / 14.0;
                        let y = -0.85 + 1.7 * j as f64 / 14.0;
                        let r = x.hypot(y);
                        if !(0.15..0.9).contains(&r) {
                            continue;
                        }
                        if !matches!(domain, DomainKind::FullCircle) && y.abs() < 4.0 * h && (domain.is_slit() && x > 0.0 || !domain.is_slit()) {
                            continue;
                        }
                        if matches!(domain, DomainKind::HalfDiskNeumann | DomainKind::HalfDiskDirichlet) && y <= 0.0 {
                            continue;
                        }
                        worst = worst.max(nine_point_laplacian(u, x, y, h).abs());
                    }
                }
                assert!(worst <= 1e-6, "{domain} degree {}: {worst}", e.degree());
                // Side conditions on the diameter or the slit.
                let dirichlet = matches!(domain, DomainKind::HalfDiskDirichlet | DomainKind::SlitDiskDirichlet);
                let neumann = matches!(domain, DomainKind::HalfDiskNeumann | DomainKind::SlitDiskNeumann);
                let ends: &[f64] = if domain.is_slit() { &[0.0, 2.0 * PI] } else { &[0.0, PI] };
                for &t in ends {
                    if dirichlet {
                        assert!(e.angular(t).abs() < 1e-12);
                    }
                    if neumann {
                        assert!(e.angular_derivative(t).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn traces_are_orthonormal() {
        let n = 4096;
        for domain in DomainKind::ALL {
            let b = enumerate_basis(&BasisSpec::new(domain, Weighting::Plain, 10));
            let arc = domain.arc_length();
            // Products of half-arc or half-frequency traces are not periodic:
            // composite Simpson; the full circle uses the trapezoid rule.
            let closed = domain != DomainKind::FullCircle;
            let (nodes, weights): (Vec<f64>, Vec<f64>) = if closed {
                (0..=n)
                    .map(|i| {
                        let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                        (arc * i as f64 / n as f64, w * arc / (3.0 * n as f64))
                    })
                    .unzip()
            } else {
                (0..n).map(|i| (arc * i as f64 / n as f64, arc / n as f64)).unzip()
            };
            let mut worst: f64 = 0.0;
            for a in &b {
                for c in &b {
                    let g: f64 = nodes.iter().zip(&weights).map(|(t, w)| w * a.angular(*t) * c.angular(*t)).sum();
                    let target = if a.index == c.index { 1.0 } else { 0.0 };
                    worst = worst.max((g - target).abs());
                }
            }
            assert!(worst <= 1e-8, "{domain}: {worst}");
        }
    }

    #[test]
    fn decay_of_constants_and_ratios() {
        let b = enumerate_basis(&BasisSpec::new(DomainKind::FullCircle, Weighting::Plain, 41));
        // A constant 1/sqrt(2 pi) on B(0, r0) has L² norm r0/sqrt(2).
        let r0 = 0.6;
        assert!((interior_decay(&b[0], r0).unwrap() - r0 / 2f64.sqrt()).abs() < 1e-15);
        let n40 = interior_decay(&b[79], 0.8).unwrap();
        let n41 = interior_decay(&b[81], 0.8).unwrap();
        assert!(((n41 / n40) / 0.8 - 1.0).abs() < 0.02);
        assert!(interior_decay(&b[0], 1.0).is_err());
    }

    #[test]
    fn numeric_decay_matches_closed_form_on_half_and_slit_disks() {
        for domain in [
            DomainKind::HalfDiskNeumann,
            DomainKind::HalfDiskDirichlet,
            DomainKind::SlitDiskNeumann,
            DomainKind::SlitDiskDirichlet,
        ] {
            for e in enumerate_basis(&BasisSpec::new(domain, Weighting::Plain, 12)) {
                let num = interior_decay(&e, 0.7).unwrap();
                let exact = interior_decay_closed_form(&e, 0.7).unwrap();
                assert!((num - exact).abs() <= 1e-10 * exact, "{domain} {}: {num} vs {exact}", e.degree());
            }
        }
    }

    #[test]
    fn slit_half_degree_decays_slower_than_disk_degree_one() {
        let slit = enumerate_basis(&BasisSpec::new(DomainKind::SlitDiskDirichlet, Weighting::Plain, 1));
        let disk = enumerate_basis(&BasisSpec::new(DomainKind::FullCircle, Weighting::Plain, 1));
        for r0 in [0.2, 0.5, 0.8] {
            let a = interior_decay(&slit[0], r0).unwrap() / interior_decay(&slit[0], 0.9).unwrap();
            let b = interior_decay(&disk[1], r0).unwrap() / interior_decay(&disk[1], 0.9).unwrap();
            assert!(a > b, "r0 = {r0}");
        }
    }

    #[test]
    fn single_decay_constant_per_domain() {
        for domain in DomainKind::ALL {
            let spec = BasisSpec::new(domain, Weighting::Plain, 20);
            let r0 = 0.5;
            let c = fit_decay_constant(&spec, r0).unwrap();
            for e in enumerate_basis(&spec) {
                let bound = c * (-(1.0 / r0).ln() * e.degree()).exp();
                assert!(interior_decay(&e, r0).unwrap() <= bound * (1.0 + 1e-12));
            }
        }
    }
}
