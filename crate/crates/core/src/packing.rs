//! ε-discrete families of perturbed defects.
//!
//! The base segment or circle is cut into `Mc` cells. A bit pattern of
//! length `Mc` selects the cells that carry a bump of height `ε`; the bump
//! is `h (1 - (t/w)^2)^{m+1}`. Cells are at least `2ε` wide on either side
//! of the peak, so a peak on one shape always faces a flat stretch on any
//! shape with a different pattern, which puts them `ε` apart.

use std::collections::HashSet;
use std::f64::consts::{LN_2, PI};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::shapes::{
    ClassBounds, FlatProfile, Profile, RadialProfile, Shape, ShapeError, ShapeKind, DEFAULT_GRID_SIZE,
    MEMBERSHIP_MARGIN,
};

/// Fewest samples a bump half-width must span.
const MIN_SAMPLES_PER_HALF_WIDTH: f64 = 4.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PackingError {
    #[error("eps = {eps} is not below the construction threshold eps0 = {eps0}")]
    EpsTooLarge { eps: f64, eps0: f64 },
    #[error("invalid packing parameter: {0}")]
    InvalidParameter(String),
    #[error("bump half-width {half_width} spans fewer than {MIN_SAMPLES_PER_HALF_WIDTH} samples; raise grid_size above {grid_size}")]
    GridTooCoarse { half_width: f64, grid_size: usize },
    #[error("pattern has {got} bits, family has {expected} cells")]
    PatternLength { got: usize, expected: usize },
    #[error(transparent)]
    Shape(#[from] ShapeError),
}

/// Coefficients (ascending powers of t) of `(1 - t^2)^{m+1}`.
fn template_polynomial(m: u32) -> Vec<f64> {
    let n = (m + 1) as usize;
    let mut coeffs = vec![0.0; 2 * n + 1];
    let mut binom = 1.0;
    for j in 0..=n {
        coeffs[2 * j] = if j % 2 == 0 { binom } else { -binom };
        binom = binom * (n - j) as f64 / (j + 1) as f64;
    }
    coeffs
}

fn derivative(p: &[f64]) -> Vec<f64> {
    p.iter().enumerate().skip(1).map(|(i, c)| c * i as f64).collect()
}

fn eval(p: &[f64], t: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

/// `sup_{[-1,1]} |d^k/dt^k (1 - t^2)^{m+1}|`, from the endpoints and the
/// critical points of the k-th derivative.
pub fn bump_derivative_constant(m: u32, k: u32) -> f64 {
    let mut p = template_polynomial(m);
    for _ in 0..k {
        p = derivative(&p);
    }
    let dp = derivative(&p);
    let mut best = eval(&p, -1.0).abs().max(eval(&p, 1.0).abs());
    let n = 4096;
    let grid = |i: usize| -1.0 + 2.0 * i as f64 / n as f64;
    for i in 0..n {
        let (mut a, mut b) = (grid(i), grid(i + 1));
        let (fa, fb) = (eval(&dp, a), eval(&dp, b));
        if fa == 0.0 {
            best = best.max(eval(&p, a).abs());
        }
        if fa * fb >= 0.0 {
            continue;
        }
        let mut sa = fa.signum();
        for _ in 0..200 {
            let c = 0.5 * (a + b);
            let fc = eval(&dp, c);
            if fc.signum() == sa {
                a = c;
                sa = fc.signum();
            } else {
                b = c;
            }
            if b - a < 1e-15 {
                break;
            }
        }
        best = best.max(eval(&p, 0.5 * (a + b)).abs());
    }
    best
}

/// `K(m)`: sup of the m-th derivative of the unit template.
pub fn bump_constant(m: u32) -> f64 {
    bump_derivative_constant(m, m)
}

/// Samples of `h (1 - (t/w)^2)^{m+1}` at `samples` uniform points of `[-w, w]`.
pub fn build_bump(m: u32, height: f64, half_width: f64, samples: usize) -> Vec<f64> {
    if samples == 1 {
        return vec![height];
    }
    (0..samples)
        .map(|i| {
            let t = -1.0 + 2.0 * i as f64 / (samples - 1) as f64;
            bump_value(m, height, half_width, t * half_width)
        })
        .collect()
}

fn bump_value(m: u32, height: f64, half_width: f64, t: f64) -> f64 {
    let s = t / half_width;
    if s.abs() >= 1.0 {
        0.0
    } else {
        height * (1.0 - s * s).powi(m as i32 + 1)
    }
}

/// Parameters of a perturbation class `X_{m beta eps}` or `Y_{m beta eps}`
/// over a segment or circle.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationClass {
    pub kind: ShapeKind,
    /// Half width of the segment or radius of the circle.
    pub r: f64,
    pub center: [f64; 2],
    pub m: u32,
    pub beta: f64,
    /// Upper bound on the offsets; `None` uses `ε` itself.
    pub amplitude_cap: Option<f64>,
    pub grid_size: usize,
}

impl PerturbationClass {
    pub fn new(kind: ShapeKind, r: f64, m: u32, beta: f64) -> Self {
        Self { kind, r, center: [0.0, 0.0], m, beta, amplitude_cap: None, grid_size: DEFAULT_GRID_SIZE }
    }

    pub fn with_amplitude_cap(mut self, cap: f64) -> Self {
        self.amplitude_cap = Some(cap);
        self
    }

    pub fn with_grid_size(mut self, grid_size: usize) -> Self {
        self.grid_size = grid_size;
        self
    }

    pub fn with_center(mut self, center: [f64; 2]) -> Self {
        self.center = center;
        self
    }

    fn validate(&self) -> Result<(), PackingError> {
        if self.m == 0 {
            return Err(PackingError::InvalidParameter("m must be >= 1".into()));
        }
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(PackingError::InvalidParameter(format!("r = {} must be positive", self.r)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(PackingError::InvalidParameter(format!("beta = {} must be positive", self.beta)));
        }
        if let Some(cap) = self.amplitude_cap {
            if !(cap > 0.0) {
                return Err(PackingError::InvalidParameter(format!("amplitude cap {cap} must be positive")));
            }
        }
        Ok(())
    }

    /// Length of the base available to cells: `2r` or `2 pi r`.
    fn base_length(&self) -> f64 {
        if self.kind.is_radial() {
            2.0 * PI * self.r
        } else {
            2.0 * self.r
        }
    }

    /// Bump half-width used at `eps`: wide enough for the `2ε` flat margin
    /// and for every derivative of order `1..=m` to stay under `beta` with
    /// the membership margin.
    pub fn half_width(&self, eps: f64) -> f64 {
        (1..=self.m)
            .map(|k| (MEMBERSHIP_MARGIN * bump_derivative_constant(self.m, k) * eps / self.beta).powf(1.0 / k as f64))
            .fold(2.0 * eps, f64::max)
    }

    /// Inverse of [`half_width`](Self::half_width): the largest `eps` whose
    /// half-width does not exceed `w`.
    fn eps_for_half_width(&self, w: f64) -> f64 {
        (1..=self.m)
            .map(|k| self.beta * w.powi(k as i32) / (MEMBERSHIP_MARGIN * bump_derivative_constant(self.m, k)))
            .fold(0.5 * w, f64::min)
    }

    /// Number of cells for a bump of half-width `w`.
    pub fn cell_count_for_half_width(&self, w: f64) -> usize {
        if self.kind.is_radial() {
            (PI * self.r / w).floor() as usize
        } else {
            ((self.r / w).ceil() as usize).saturating_sub(1)
        }
    }

    pub fn cell_count(&self, eps: f64) -> usize {
        self.cell_count_for_half_width(self.half_width(eps))
    }

    /// Largest half-width that still fits two cells.
    fn two_cell_half_width(&self) -> f64 {
        if self.kind.is_radial() {
            0.5 * PI * self.r
        } else {
            0.5 * self.r
        }
    }

    /// Half-width at which the cell count drops from `k + 1` to `k`.
    fn breakpoint_half_width(&self, k: usize) -> f64 {
        let base = if self.kind.is_radial() { PI * self.r } else { self.r };
        base / (k + 1) as f64
    }

    /// Feasibility threshold: the construction needs `ε < eps0`. For flat
    /// bases the two-cell condition is strict, for radial ones it is not,
    /// but refusing `ε = eps0` in both cases keeps the rule uniform.
    pub fn eps0(&self) -> f64 {
        let e = self
            .eps_for_half_width(self.two_cell_half_width())
            .min(self.beta / MEMBERSHIP_MARGIN);
        match self.amplitude_cap {
            Some(cap) => e.min(cap),
            None => e,
        }
    }

    /// `c1` with `Mc >= c1 ε^{-1/m}` for all `ε < eps0`. The infimum over
    /// cell counts `k` of `k ε_k^{1/m}`, where `ε_k` opens the `k`-cell
    /// range, is increasing in `k`, so `k = 2` attains it.
    pub fn cell_count_lower_constant(&self) -> f64 {
        let eps2 = self.eps_for_half_width(self.breakpoint_half_width(2));
        2.0 * eps2.powf(1.0 / self.m as f64)
    }

    /// `c2` with `Mc <= c2 ε^{-1/m}` for all `ε < eps0`: the limit of
    /// `k ε^{1/m}` at the top of the `k`-cell range.
    pub fn cell_count_upper_constant(&self) -> f64 {
        let base = if self.kind.is_radial() { PI * self.r } else { self.r };
        let m = self.m;
        let top = (self.beta / (MEMBERSHIP_MARGIN * bump_constant(m))).powf(1.0 / m as f64);
        if m == 1 {
            base * top.min(0.5)
        } else {
            base * top
        }
    }

    /// `eps0'`: below it the certified log-cardinality `Mc ln 2` dominates
    /// `2^{-2} eps0'^{1/m} ε^{-1/m}`.
    pub fn eps0_prime(&self) -> f64 {
        let from_count = (4.0 * LN_2 * self.cell_count_lower_constant()).powi(self.m as i32);
        self.eps0().min(from_count)
    }
}

/// Bit pattern selecting the cells that carry a bump.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Pattern(Vec<bool>);

impl Pattern {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![false; len])
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Little-endian index of a pattern with at most 64 cells.
    pub fn from_index(index: u64, len: usize) -> Self {
        Self((0..len).map(|i| i < 64 && (index >> i) & 1 == 1).collect())
    }

    /// Hex identifier, four cells per digit, first cell in the lowest bit.
    pub fn id(&self) -> String {
        if self.0.is_empty() {
            return "0".into();
        }
        self.0
            .chunks(4)
            .rev()
            .map(|c| {
                let d = c.iter().enumerate().fold(0u32, |acc, (i, &b)| acc | (u32::from(b) << i));
                char::from_digit(d, 16).unwrap()
            })
            .collect()
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

/// Lazily indexed ε-discrete family.
#[derive(Debug, Clone)]
pub struct PackingFamily {
    class: PerturbationClass,
    eps: f64,
    eps0: f64,
    half_width: f64,
    cell_count: usize,
    /// Cell centers in base coordinates: abscissa (flat) or arc length (radial).
    centers: Vec<f64>,
}

/// Builds the family for `class` at scale `eps`.
pub fn build_packing(class: &PerturbationClass, eps: f64) -> Result<PackingFamily, PackingError> {
    class.validate()?;
    if !(eps > 0.0) {
        return Err(PackingError::InvalidParameter(format!("eps = {eps} must be positive")));
    }
    let eps0 = class.eps0();
    if eps >= eps0 {
        return Err(PackingError::EpsTooLarge { eps, eps0 });
    }
    let w = class.half_width(eps);
    let mc = class.cell_count_for_half_width(w);
    let spacing = class.base_length() / class.grid_size.max(2) as f64;
    if w < MIN_SAMPLES_PER_HALF_WIDTH * spacing {
        return Err(PackingError::GridTooCoarse { half_width: w, grid_size: class.grid_size });
    }
    let centers = if class.kind.is_radial() {
        let slot = 2.0 * PI * class.r / mc as f64;
        (0..mc).map(|j| slot * (j as f64 + 0.5)).collect()
    } else {
        let margin = class.r - w * mc as f64;
        (0..mc).map(|j| -class.r + margin + w * (2 * j + 1) as f64).collect()
    };
    Ok(PackingFamily { class: class.clone(), eps, eps0, half_width: w, cell_count: mc, centers })
}

impl PackingFamily {
    pub fn class(&self) -> &PerturbationClass {
        &self.class
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn eps0(&self) -> f64 {
        self.eps0
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn cell_count(&self) -> usize {
        self.cell_count
    }

    /// `Mc ln 2`.
    pub fn certified_log_cardinality(&self) -> f64 {
        self.cell_count as f64 * LN_2
    }

    fn bounds(&self) -> ClassBounds {
        ClassBounds {
            smoothness: self.class.m,
            norm_bound: self.class.beta,
            amplitude_cap: self.class.amplitude_cap.unwrap_or(self.eps),
        }
    }

    /// Profile values for `pattern`.
    pub fn profile_values(&self, pattern: &Pattern) -> Result<Vec<f64>, PackingError> {
        if pattern.len() != self.cell_count {
            return Err(PackingError::PatternLength { got: pattern.len(), expected: self.cell_count });
        }
        let n = self.class.grid_size;
        let (m, h, w) = (self.class.m, self.eps, self.half_width);
        let mut values = vec![0.0; n];
        if self.class.kind.is_radial() {
            let r = self.class.r;
            let circumference = 2.0 * PI * r;
            let slot = circumference / self.cell_count as f64;
            for (i, v) in values.iter_mut().enumerate() {
                let s = circumference * i as f64 / n as f64;
                let j = ((s / slot).floor() as usize).min(self.cell_count - 1);
                if pattern.bits()[j] {
                    *v = bump_value(m, h, w, s - self.centers[j]);
                }
            }
        } else {
            let r = self.class.r;
            for (i, v) in values.iter_mut().enumerate() {
                let x = -r + 2.0 * r * i as f64 / (n - 1) as f64;
                let j = ((x + r - (r - w * self.cell_count as f64)) / (2.0 * w)).floor();
                if j >= 0.0 && (j as usize) < self.cell_count && pattern.bits()[j as usize] {
                    *v = bump_value(m, h, w, x - self.centers[j as usize]);
                }
            }
        }
        Ok(values)
    }

    /// The shape indexed by `pattern`.
    pub fn shape(&self, pattern: &Pattern) -> Result<Shape, PackingError> {
        let values = self.profile_values(pattern)?;
        let c = &self.class;
        let profile = if c.kind.is_radial() {
            Profile::Radial(RadialProfile::new(c.center, c.r, values, self.bounds())?)
        } else {
            Profile::Flat(FlatProfile::new(c.center, c.r, values, self.bounds())?)
        };
        Ok(Shape::new(c.kind, profile)?)
    }

    pub fn base_shape(&self) -> Result<Shape, PackingError> {
        self.shape(&Pattern::zeros(self.cell_count))
    }

    /// `count` distinct patterns drawn from a ChaCha stream seeded with
    /// `seed`. Fewer are returned when the family is smaller than `count`.
    pub fn sample_patterns(&self, count: usize, seed: u64) -> Vec<Pattern> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let total = if self.cell_count >= 63 { u64::MAX } else { 1u64 << self.cell_count };
        let want = (count as u64).min(total) as usize;
        let mut seen = HashSet::with_capacity(want);
        let mut out = Vec::with_capacity(want);
        if self.cell_count < 63 && want as u64 * 2 > total {
            // Small family: take a seeded subset of all indices.
            let mut all: Vec<u64> = (0..total).collect();
            for i in 0..want {
                let j = rng.random_range(i..all.len());
                all.swap(i, j);
            }
            return all[..want].iter().map(|&k| Pattern::from_index(k, self.cell_count)).collect();
        }
        while out.len() < want {
            let p = Pattern((0..self.cell_count).map(|_| rng.random::<bool>()).collect());
            if seen.insert(p.clone()) {
                out.push(p);
            }
        }
        out
    }
}

/// `2^{-N} eps0^{(N-1)/m} ε^{-(N-1)/m}`: natural log of the packing
/// cardinality lower bound in dimension `N`.
pub fn packing_lower_bound(eps: f64, m: u32, n: u32, eps0: f64) -> Result<f64, PackingError> {
    if !(eps > 0.0) || eps >= eps0 {
        return Err(PackingError::EpsTooLarge { eps, eps0 });
    }
    if m == 0 || n < 2 {
        return Err(PackingError::InvalidParameter(format!("need m >= 1 and N >= 2, got m = {m}, N = {n}")));
    }
    let e = (n - 1) as f64 / m as f64;
    Ok(2f64.powi(-(n as i32)) * (eps0 / eps).powf(e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes::{cm_norm_of_order, hausdorff_distance, validate_membership};

    // Maxima of d^k/dt^k (1 - t^2)^{m+1} on [-1, 1], from exact symbolic
    // differentiation and root solving.
    const SYMBOLIC_K: [(u32, u32, f64); 6] = [
        (1, 1, 1.539_600_717_839_002_0),
        (2, 1, 1.717_300_206_719_838_5),
        (2, 2, 6.0),
        (3, 1, 1.904_147_549_154_357_6),
        (3, 2, 8.0),
        (3, 3, 31.620_710_374_878_687),
    ];

    #[test]
    fn bump_constants_match_symbolic_maxima() {
        for (m, k, expected) in SYMBOLIC_K {
            let got = bump_derivative_constant(m, k);
            assert!((got - expected).abs() < 1e-12 * expected, "m={m} k={k}: {got}");
        }
        assert_eq!(bump_derivative_constant(2, 0), 1.0);
    }

    #[test]
    fn bump_endpoints_and_zero_height() {
        let b = build_bump(2, 0.3, 0.1, 101);
        assert_eq!(b[0], 0.0);
        assert_eq!(b[100], 0.0);
        assert_eq!(b[50], 0.3);
        assert!(build_bump(3, 0.0, 0.1, 33).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn packing_lower_bound_values() {
        assert!((packing_lower_bound(0.25, 1, 2, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((packing_lower_bound(0.5, 1, 2, 1.0).unwrap() - 0.5).abs() < 1e-15);
        // (N - 1)/m = 1 here, so the bound is 10^4 / 8.
        assert!((packing_lower_bound(1e-4, 2, 3, 1.0).unwrap() - 1e4 / 8.0).abs() < 1e-9);
        assert!(matches!(packing_lower_bound(1.0, 1, 2, 1.0), Err(PackingError::EpsTooLarge { .. })));
    }

    #[test]
    fn refuses_eps_at_or_above_eps0() {
        let class = PerturbationClass::new(ShapeKind::FlatGraph, 0.5, 1, 1.0);
        let eps0 = class.eps0();
        match build_packing(&class, eps0) {
            Err(PackingError::EpsTooLarge { eps0: e, .. }) => assert_eq!(e, eps0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn just_below_eps0_gives_two_cells_and_separated_family() {
        for kind in ShapeKind::ALL {
            let class = PerturbationClass::new(kind, 0.5, 1, 1.0);
            let eps = class.eps0() * (1.0 - 1e-9);
            let fam = build_packing(&class, eps).unwrap();
            assert_eq!(fam.cell_count(), 2, "{kind}");
            let shapes: Vec<Shape> = (0..4).map(|i| fam.shape(&Pattern::from_index(i, 2)).unwrap()).collect();
            for s in &shapes {
                validate_membership(s, 1, 1.0, eps).unwrap();
            }
            for i in 0..4 {
                for j in i + 1..4 {
                    let d = hausdorff_distance(&shapes[i], &shapes[j]).unwrap();
                    assert!(d >= eps - shapes[i].resolution_error(), "{kind} {i} {j}: {d} < {eps}");
                }
            }
        }
    }

    #[test]
    fn cell_count_scales_like_inverse_eps() {
        let class = PerturbationClass::new(ShapeKind::FlatGraph, 0.5, 1, 1.0);
        let (c1, c2) = (class.cell_count_lower_constant(), class.cell_count_upper_constant());
        let fam = build_packing(&class, 0.01).unwrap();
        let mc = fam.cell_count() as f64;
        assert!(c1 / 0.01 <= mc && mc <= c2 / 0.01, "{c1} {mc} {c2}");
        for eps in [0.1, 0.05, 0.02, 0.003, 0.001] {
            let mc = class.cell_count(eps) as f64;
            assert!(c1 / eps <= mc && mc <= c2 / eps, "eps {eps}: {c1} {mc} {c2}");
        }
    }

    #[test]
    fn zero_pattern_is_the_base() {
        let class = PerturbationClass::new(ShapeKind::RadialSubgraph, 1.0, 2, 1.0);
        let fam = build_packing(&class, 0.02).unwrap();
        assert!(fam.base_shape().unwrap().profile().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn bumps_respect_the_norm_bound() {
        for m in 1..=3 {
            let class = PerturbationClass::new(ShapeKind::RadialGraph, 1.0, m, 1.0).with_grid_size(8192);
            let eps = class.eps0() * 0.3;
            let fam = build_packing(&class, eps).unwrap();
            let all = Pattern::new(vec![true; fam.cell_count()]);
            let s = fam.shape(&all).unwrap();
            let norm = cm_norm_of_order(s.profile(), m).unwrap();
            assert!(MEMBERSHIP_MARGIN * norm <= 1.0, "m={m}: {norm}");
            let peak = s.profile().values().iter().cloned().fold(0.0, f64::max);
            assert!(peak <= eps && peak > 0.99 * eps);
        }
    }

    #[test]
    fn sampled_patterns_are_distinct_and_reproducible() {
        let class = PerturbationClass::new(ShapeKind::FlatSubgraph, 0.5, 1, 1.0);
        let fam = build_packing(&class, 0.01).unwrap();
        let a = fam.sample_patterns(50, 9);
        let b = fam.sample_patterns(50, 9);
        assert_eq!(a, b);
        let set: HashSet<_> = a.iter().collect();
        assert_eq!(set.len(), 50);
        let small = build_packing(&class, class.eps0() * 0.999).unwrap();
        assert_eq!(small.sample_patterns(10, 1).len(), 4);
    }

    #[test]
    fn pattern_ids() {
        assert_eq!(Pattern::from_index(0b1011, 4).id(), "b");
        assert_eq!(Pattern::from_index(0x1f, 5).id(), "1f");
        assert_eq!(Pattern::zeros(0).id(), "0");
    }

    #[test]
    fn eps0_prime_certifies_the_counting_bound() {
        for (kind, r, m) in [
            (ShapeKind::FlatGraph, 0.5, 1),
            (ShapeKind::RadialSubgraph, 1.0, 1),
            (ShapeKind::RadialGraph, 1.0, 2),
            (ShapeKind::FlatSubgraph, 0.5, 3),
        ] {
            let class = PerturbationClass::new(kind, r, m, 1.0);
            let e0 = class.eps0_prime();
            assert!(e0 <= class.eps0());
            for i in 1..400 {
                let eps = e0 * (1.0 - i as f64 / 400.0).powi(3).max(1e-6);
                let lhs = class.cell_count(eps) as f64 * LN_2;
                let rhs = packing_lower_bound(eps, m, 2, e0).unwrap();
                assert!(lhs >= rhs, "{kind} m={m} eps={eps}: {lhs} < {rhs}");
            }
        }
    }

    #[test]
    fn decreasing_eps_never_decreases_cell_count() {
        let class = PerturbationClass::new(ShapeKind::RadialGraph, 1.0, 2, 0.7);
        let mut prev = 0;
        let mut eps = class.eps0() * 0.999;
        while eps > 1e-5 {
            let mc = class.cell_count(eps);
            assert!(mc >= prev);
            prev = mc;
            eps *= 0.97;
        }
    }
}
