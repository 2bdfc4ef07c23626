//! Defects as graphs and subgraphs of sampled perturbation profiles.
//!
//! A profile is a nonnegative offset sampled on a uniform grid, either over
//! a segment `[-r, r]` (flat base, values are heights above the segment) or
//! over a circle of radius `r` (radial base, values are radial offsets so
//! the boundary radius is `r + g`). Distances between shapes are Hausdorff
//! distances between the sampled polylines, exact up to the sampling
//! resolution reported by [`Shape::resolution_error`].

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Default number of samples per profile.
pub const DEFAULT_GRID_SIZE: usize = 2048;

/// Membership checks require `MEMBERSHIP_MARGIN * cm_norm <= beta`; the
/// discrete norm never exceeds the continuous one, so this leaves room for
/// what the finite differences miss.
pub const MEMBERSHIP_MARGIN: f64 = 1.05;

const BASE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShapeError {
    #[error("shape kinds differ: {0} vs {1}")]
    MismatchedKinds(ShapeKind, ShapeKind),
    #[error("shapes do not share a base segment or circle")]
    IncompatibleBase,
    #[error("profile has no samples")]
    EmptyProfile,
    #[error("grid of {grid_size} samples is too coarse for order {order}")]
    GridTooCoarse { order: u32, grid_size: usize },
    #[error("invalid shape parameter: {0}")]
    InvalidParameter(String),
    #[error("malformed shape record at line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ShapeKind {
    FlatGraph,
    FlatSubgraph,
    RadialGraph,
    RadialSubgraph,
}

impl ShapeKind {
    pub const ALL: [ShapeKind; 4] = [
        ShapeKind::FlatGraph,
        ShapeKind::FlatSubgraph,
        ShapeKind::RadialGraph,
        ShapeKind::RadialSubgraph,
    ];

    pub fn is_radial(self) -> bool {
        matches!(self, ShapeKind::RadialGraph | ShapeKind::RadialSubgraph)
    }

    pub fn is_subgraph(self) -> bool {
        matches!(self, ShapeKind::FlatSubgraph | ShapeKind::RadialSubgraph)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ShapeKind::FlatGraph => "flat_graph",
            ShapeKind::FlatSubgraph => "flat_subgraph",
            ShapeKind::RadialGraph => "radial_graph",
            ShapeKind::RadialSubgraph => "radial_subgraph",
        }
    }
}

impl fmt::Display for ShapeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ShapeKind {
    type Err = ShapeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ShapeKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| ShapeError::InvalidParameter(format!("unknown shape kind `{s}`")))
    }
}

/// Class parameters shared by both profile flavours.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassBounds {
    /// Smoothness order `m >= 1`.
    pub smoothness: u32,
    /// Bound `beta` on the C^m norm.
    pub norm_bound: f64,
    /// Largest admissible offset.
    pub amplitude_cap: f64,
}

impl ClassBounds {
    pub fn new(smoothness: u32, norm_bound: f64, amplitude_cap: f64) -> Result<Self, ShapeError> {
        if smoothness == 0 {
            return Err(ShapeError::InvalidParameter("smoothness order must be >= 1".into()));
        }
        if !(norm_bound > 0.0) || !norm_bound.is_finite() {
            return Err(ShapeError::InvalidParameter(format!("norm bound {norm_bound} must be positive")));
        }
        if !(amplitude_cap > 0.0) || !amplitude_cap.is_finite() {
            return Err(ShapeError::InvalidParameter(format!(
                "amplitude cap {amplitude_cap} must be positive"
            )));
        }
        Ok(Self { smoothness, norm_bound, amplitude_cap })
    }
}

/// Heights over the segment `center + [-r, r] x {0}`, sampled at
/// `x_i = -r + 2 r i / (M - 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatProfile {
    center: [f64; 2],
    half_width: f64,
    values: Vec<f64>,
    bounds: ClassBounds,
}

impl FlatProfile {
    pub fn new(center: [f64; 2], half_width: f64, values: Vec<f64>, bounds: ClassBounds) -> Result<Self, ShapeError> {
        if values.is_empty() {
            return Err(ShapeError::EmptyProfile);
        }
        if values.len() < 2 {
            return Err(ShapeError::InvalidParameter("flat profiles need at least two samples".into()));
        }
        if !(half_width > 0.0) {
            return Err(ShapeError::InvalidParameter(format!("half width {half_width} must be positive")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ShapeError::InvalidParameter("profile values must be finite".into()));
        }
        Ok(Self { center, half_width, values, bounds })
    }

    pub fn zero(center: [f64; 2], half_width: f64, grid_size: usize, bounds: ClassBounds) -> Result<Self, ShapeError> {
        Self::new(center, half_width, vec![0.0; grid_size], bounds)
    }

    pub fn center(&self) -> [f64; 2] {
        self.center
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn bounds(&self) -> ClassBounds {
        self.bounds
    }

    pub fn grid_size(&self) -> usize {
        self.values.len()
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.values.len() - 1) as f64
    }

    /// Abscissa of sample `i`, relative to the center.
    pub fn coordinate(&self, i: usize) -> f64 {
        -self.half_width + self.spacing() * i as f64
    }
}

/// Radial offsets over the circle of radius `r` about `center`, sampled at
/// `theta_i = 2 pi i / M`. The boundary point at angle `theta` sits at
/// radius `r + g(theta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    center: [f64; 2],
    base_radius: f64,
    values: Vec<f64>,
    bounds: ClassBounds,
}

impl RadialProfile {
    pub fn new(center: [f64; 2], base_radius: f64, values: Vec<f64>, bounds: ClassBounds) -> Result<Self, ShapeError> {
        if values.is_empty() {
            return Err(ShapeError::EmptyProfile);
        }
        if values.len() < 3 {
            return Err(ShapeError::InvalidParameter("radial profiles need at least three samples".into()));
        }
        if !(base_radius > 0.0) {
            return Err(ShapeError::InvalidParameter(format!("base radius {base_radius} must be positive")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ShapeError::InvalidParameter("profile values must be finite".into()));
        }
        if values.iter().any(|&v| base_radius + v <= 0.0) {
            return Err(ShapeError::InvalidParameter("radial graph must stay away from the center".into()));
        }
        Ok(Self { center, base_radius, values, bounds })
    }

    pub fn zero(center: [f64; 2], base_radius: f64, grid_size: usize, bounds: ClassBounds) -> Result<Self, ShapeError> {
        Self::new(center, base_radius, vec![0.0; grid_size], bounds)
    }

    pub fn center(&self) -> [f64; 2] {
        self.center
    }

    pub fn base_radius(&self) -> f64 {
        self.base_radius
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn bounds(&self) -> ClassBounds {
        self.bounds
    }

    pub fn grid_size(&self) -> usize {
        self.values.len()
    }

    pub fn angular_step(&self) -> f64 {
        2.0 * PI / self.values.len() as f64
    }

    /// Arc-length spacing on the base circle.
    pub fn spacing(&self) -> f64 {
        self.base_radius * self.angular_step()
    }

    pub fn angle(&self, i: usize) -> f64 {
        self.angular_step() * i as f64
    }

    /// Boundary radius `r + g_i` at every sample.
    pub fn radii(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().map(move |g| self.base_radius + g)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Flat(FlatProfile),
    Radial(RadialProfile),
}

impl Profile {
    pub fn values(&self) -> &[f64] {
        match self {
            Profile::Flat(p) => p.values(),
            Profile::Radial(p) => p.values(),
        }
    }

    pub fn bounds(&self) -> ClassBounds {
        match self {
            Profile::Flat(p) => p.bounds(),
            Profile::Radial(p) => p.bounds(),
        }
    }

    pub fn spacing(&self) -> f64 {
        match self {
            Profile::Flat(p) => p.spacing(),
            Profile::Radial(p) => p.spacing(),
        }
    }

    pub fn grid_size(&self) -> usize {
        self.values().len()
    }

    pub fn center(&self) -> [f64; 2] {
        match self {
            Profile::Flat(p) => p.center(),
            Profile::Radial(p) => p.center(),
        }
    }

    /// Half width of the segment or radius of the circle.
    pub fn base_size(&self) -> f64 {
        match self {
            Profile::Flat(p) => p.half_width(),
            Profile::Radial(p) => p.base_radius(),
        }
    }

    fn is_periodic(&self) -> bool {
        matches!(self, Profile::Radial(_))
    }
}

/// A defect: the graph or subgraph of a profile.
#[derive(Debug, Clone, PartialEq)]
pub struct Shape {
    kind: ShapeKind,
    profile: Profile,
}

impl Shape {
    pub fn new(kind: ShapeKind, profile: Profile) -> Result<Self, ShapeError> {
        let radial = matches!(profile, Profile::Radial(_));
        if radial != kind.is_radial() {
            return Err(ShapeError::InvalidParameter(format!(
                "{kind} needs a {} profile",
                if kind.is_radial() { "radial" } else { "flat" }
            )));
        }
        if kind.is_subgraph() && profile.values().iter().any(|&v| v < 0.0) {
            // The subgraph of a negative offset is not defined over the base.
            return Err(ShapeError::InvalidParameter("subgraph profiles must be nonnegative".into()));
        }
        Ok(Self { kind, profile })
    }

    pub fn kind(&self) -> ShapeKind {
        self.kind
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    pub fn radial(&self) -> Option<&RadialProfile> {
        match &self.profile {
            Profile::Radial(p) => Some(p),
            Profile::Flat(_) => None,
        }
    }

    pub fn flat(&self) -> Option<&FlatProfile> {
        match &self.profile {
            Profile::Flat(p) => Some(p),
            Profile::Radial(_) => None,
        }
    }

    /// Sampling error carried by [`hausdorff_distance`]: `2 pi r / M` for
    /// radial profiles, `2 r / M` for flat ones.
    pub fn resolution_error(&self) -> f64 {
        let m = self.profile.grid_size() as f64;
        match &self.profile {
            Profile::Flat(p) => 2.0 * p.half_width() / m,
            Profile::Radial(p) => 2.0 * PI * p.base_radius() / m,
        }
    }

    /// Largest distance from the base center reached by the boundary.
    pub fn max_radius(&self) -> f64 {
        match &self.profile {
            Profile::Radial(p) => p.radii().fold(0.0, f64::max),
            Profile::Flat(p) => (0..p.grid_size())
                .map(|i| p.coordinate(i).hypot(p.values()[i]))
                .fold(0.0, f64::max),
        }
    }

    fn vertex(&self, i: usize) -> [f64; 2] {
        match &self.profile {
            Profile::Flat(p) => {
                let c = p.center();
                [c[0] + p.coordinate(i), c[1] + p.values()[i]]
            }
            Profile::Radial(p) => {
                let c = p.center();
                let rho = p.base_radius() + p.values()[i];
                let t = p.angle(i);
                [c[0] + rho * t.cos(), c[1] + rho * t.sin()]
            }
        }
    }

    /// Boundary points of the graph, one per sample.
    pub fn boundary_points(&self) -> Vec<[f64; 2]> {
        (0..self.profile.grid_size()).map(|i| self.vertex(i)).collect()
    }

    fn same_base(&self, other: &Shape) -> bool {
        let (a, b) = (&self.profile, &other.profile);
        let (ca, cb) = (a.center(), b.center());
        (ca[0] - cb[0]).abs() <= BASE_TOL
            && (ca[1] - cb[1]).abs() <= BASE_TOL
            && (a.base_size() - b.base_size()).abs() <= BASE_TOL * a.base_size().max(1.0)
    }

    /// Plain-text record: a `key=value` header followed by one value per line.
    pub fn to_text(&self) -> String {
        let bounds = self.profile.bounds();
        let c = self.profile.center();
        let mut out = String::new();
        out.push_str(&format!("kind={}\n", self.kind));
        out.push_str(&format!("r={:.16e}\n", self.profile.base_size()));
        out.push_str(&format!("center={:.16e},{:.16e}\n", c[0], c[1]));
        out.push_str(&format!("m={}\n", bounds.smoothness));
        out.push_str(&format!("beta={:.16e}\n", bounds.norm_bound));
        out.push_str(&format!("eps_cap={:.16e}\n", bounds.amplitude_cap));
        out.push_str(&format!("M={}\n", self.profile.grid_size()));
        for v in self.profile.values() {
            out.push_str(&format!("{v:.16e}\n"));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, ShapeError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let mut header = |key: &str| -> Result<(usize, String), ShapeError> {
            let (idx, line) = lines.next().ok_or(ShapeError::Parse {
                line: 0,
                message: format!("missing `{key}` header"),
            })?;
            let (k, v) = line.split_once('=').ok_or(ShapeError::Parse {
                line: idx + 1,
                message: format!("expected `{key}=...`"),
            })?;
            if k.trim() != key {
                return Err(ShapeError::Parse { line: idx + 1, message: format!("expected `{key}`, found `{}`", k.trim()) });
            }
            Ok((idx + 1, v.trim().to_string()))
        };
        let parse_f = |(line, v): (usize, String)| -> Result<f64, ShapeError> {
            v.parse::<f64>().map_err(|e| ShapeError::Parse { line, message: e.to_string() })
        };
        let (kl, kind) = header("kind")?;
        let kind: ShapeKind = kind.parse().map_err(|_| ShapeError::Parse { line: kl, message: format!("unknown kind `{kind}`") })?;
        let r = parse_f(header("r")?)?;
        let (cl, center) = header("center")?;
        let parts: Vec<&str> = center.split(',').collect();
        if parts.len() != 2 {
            return Err(ShapeError::Parse { line: cl, message: "center needs two components".into() });
        }
        let cx = parse_f((cl, parts[0].trim().to_string()))?;
        let cy = parse_f((cl, parts[1].trim().to_string()))?;
        let (ml, m) = header("m")?;
        let m: u32 = m.parse().map_err(|_| ShapeError::Parse { line: ml, message: format!("bad order `{m}`") })?;
        let beta = parse_f(header("beta")?)?;
        let cap = parse_f(header("eps_cap")?)?;
        let (nl, n) = header("M")?;
        let n: usize = n.parse().map_err(|_| ShapeError::Parse { line: nl, message: format!("bad grid size `{n}`") })?;
        let mut values = Vec::with_capacity(n);
        for (idx, line) in lines {
            let v = line
                .trim()
                .parse::<f64>()
                .map_err(|e| ShapeError::Parse { line: idx + 1, message: e.to_string() })?;
            values.push(v);
        }
        if values.len() != n {
            return Err(ShapeError::Parse {
                line: 0,
                message: format!("header announces {n} values, found {}", values.len()),
            });
        }
        let bounds = ClassBounds::new(m, beta, cap)?;
        let profile = if kind.is_radial() {
            Profile::Radial(RadialProfile::new([cx, cy], r, values, bounds)?)
        } else {
            Profile::Flat(FlatProfile::new([cx, cy], r, values, bounds)?)
        };
        Shape::new(kind, profile)
    }
}

/// Centered difference stencil for the `order`-th derivative, as
/// `(offset, weight)` pairs before division by `h^order`. Odd orders use
/// the average of the two neighbouring half-step stencils.
pub(crate) fn difference_stencil(order: u32) -> Vec<(isize, f64)> {
    let k = order as usize;
    let binom = |n: usize, j: usize| -> f64 {
        (0..j).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    };
    if k == 0 {
        return vec![(0, 1.0)];
    }
    if k % 2 == 0 {
        let half = (k / 2) as isize;
        (0..=k)
            .map(|j| (half - j as isize, if j % 2 == 0 { 1.0 } else { -1.0 } * binom(k, j)))
            .collect()
    } else {
        // mu delta^k: average of delta^k at i + 1/2 and i - 1/2.
        let half = ((k + 1) / 2) as isize;
        let mut w = vec![0.0; k + 2];
        for j in 0..=k {
            let c = if j % 2 == 0 { 1.0 } else { -1.0 } * binom(k, j) * 0.5;
            // offsets (k+1)/2 - j and (k+1)/2 - j - 1
            w[j] += c;
            w[j + 1] += c;
        }
        w.into_iter().enumerate().map(|(j, c)| (half - j as isize, c)).collect()
    }
}

fn sup_difference(values: &[f64], spacing: f64, order: u32, periodic: bool) -> f64 {
    let stencil = difference_stencil(order);
    let n = values.len() as isize;
    let scale = spacing.powi(order as i32);
    let sample = |i: isize| -> f64 {
        if periodic {
            values[i.rem_euclid(n) as usize]
        } else if (0..n).contains(&i) {
            values[i as usize]
        } else {
            0.0
        }
    };
    (0..n)
        .map(|i| stencil.iter().map(|&(o, c)| c * sample(i + o)).sum::<f64>().abs() / scale)
        .fold(0.0, f64::max)
}

/// Discrete C^m norm: the maximum over orders `0..=m` of the sup of the
/// centered finite differences. Flat profiles are extended by zero,
/// radial ones periodically with arc-length spacing.
pub fn cm_norm(profile: &Profile) -> Result<f64, ShapeError> {
    cm_norm_of_order(profile, profile.bounds().smoothness)
}

pub fn cm_norm_of_order(profile: &Profile, order: u32) -> Result<f64, ShapeError> {
    let values = profile.values();
    if values.is_empty() {
        return Err(ShapeError::EmptyProfile);
    }
    if values.len() <= 2 * (order as usize + 1) {
        return Err(ShapeError::GridTooCoarse { order, grid_size: values.len() });
    }
    let h = profile.spacing();
    Ok((0..=order)
        .map(|k| sup_difference(values, h, k, profile.is_periodic()))
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Negative { index: usize, value: f64 },
    Amplitude { index: usize, value: f64, cap: f64 },
    EndpointNonzero { value: f64 },
    NormExceeded { norm: f64, bound: f64 },
    GridTooCoarse,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Negative { index, value } => write!(f, "negative offset {value} at sample {index}"),
            Violation::Amplitude { index, value, cap } => write!(f, "offset {value} at sample {index} exceeds {cap}"),
            Violation::EndpointNonzero { value } => write!(f, "flat profile does not vanish at the endpoints ({value})"),
            Violation::NormExceeded { norm, bound } => write!(f, "C^m norm {norm} (with margin) exceeds {bound}"),
            Violation::GridTooCoarse => f.write_str("grid too coarse for the requested order"),
        }
    }
}

/// Checks the defining constraints of the perturbation class with the
/// given `(m, beta, eps)`.
pub fn validate_membership(shape: &Shape, m: u32, beta: f64, eps: f64) -> Result<(), Violation> {
    let values = shape.profile().values();
    for (index, &value) in values.iter().enumerate() {
        if value < 0.0 {
            return Err(Violation::Negative { index, value });
        }
        if value > eps {
            return Err(Violation::Amplitude { index, value, cap: eps });
        }
    }
    if let Profile::Flat(_) = shape.profile() {
        let end = values[0].abs().max(values[values.len() - 1].abs());
        if end > 0.0 {
            return Err(Violation::EndpointNonzero { value: end });
        }
    }
    let norm = cm_norm_of_order(shape.profile(), m).map_err(|_| Violation::GridTooCoarse)?;
    if MEMBERSHIP_MARGIN * norm > beta {
        return Err(Violation::NormExceeded { norm: MEMBERSHIP_MARGIN * norm, bound: beta });
    }
    Ok(())
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p[0] - a[0] - t * dx).hypot(p[1] - a[1] - t * dy)
}

fn dist(p: [f64; 2], q: [f64; 2]) -> f64 {
    (p[0] - q[0]).hypot(p[1] - q[1])
}

/// Distance from `p` (whose base coordinate is `coord`) to the boundary
/// polyline of `shape`. Candidate segments are restricted to those that can
/// beat the best vertex distance found near `coord`.
fn distance_to_boundary(p: [f64; 2], coord: f64, shape: &Shape, verts: &[[f64; 2]]) -> f64 {
    let n = verts.len();
    match shape.profile() {
        Profile::Flat(prof) => {
            let h = prof.spacing();
            let j0 = ((coord + prof.half_width()) / h).round() as isize;
            let clamp = |j: isize| j.clamp(0, n as isize - 1) as usize;
            let mut best = (j0 - 1..=j0 + 1).map(|j| dist(p, verts[clamp(j)])).fold(f64::INFINITY, f64::min);
            let lo = clamp(((coord - best + prof.half_width()) / h).floor() as isize - 1);
            let hi = clamp(((coord + best + prof.half_width()) / h).ceil() as isize + 1);
            for j in lo..hi {
                best = best.min(point_segment_distance(p, verts[j], verts[j + 1]));
            }
            best
        }
        Profile::Radial(prof) => {
            let dt = prof.angular_step();
            let j0 = (coord / dt).round() as isize;
            let wrap = |j: isize| j.rem_euclid(n as isize) as usize;
            let mut best = (j0 - 1..=j0 + 1).map(|j| dist(p, verts[wrap(j)])).fold(f64::INFINITY, f64::min);
            let min_rho = prof.radii().fold(f64::INFINITY, f64::min) * (0.5 * dt).cos();
            let (lo, hi) = if best >= 2.0 * min_rho {
                (0, n as isize)
            } else {
                let window = 2.0 * (best / (2.0 * min_rho)).asin();
                let lo = ((coord - window) / dt).floor() as isize - 1;
                let hi = ((coord + window) / dt).ceil() as isize + 1;
                if hi - lo >= n as isize {
                    (0, n as isize)
                } else {
                    (lo, hi)
                }
            };
            for j in lo..hi {
                best = best.min(point_segment_distance(p, verts[wrap(j)], verts[wrap(j + 1)]));
            }
            best
        }
    }
}

/// Offset of the boundary of `shape` along the vertical line (flat) or the
/// ray (radial) at base coordinate `coord`.
fn boundary_offset_at(shape: &Shape, coord: f64) -> f64 {
    match shape.profile() {
        Profile::Flat(p) => {
            let h = p.spacing();
            let s = ((coord + p.half_width()) / h).clamp(0.0, (p.grid_size() - 1) as f64);
            let j = (s.floor() as usize).min(p.grid_size() - 2);
            let t = s - j as f64;
            p.values()[j] * (1.0 - t) + p.values()[j + 1] * t
        }
        Profile::Radial(p) => {
            let n = p.grid_size();
            let dt = p.angular_step();
            let theta = coord.rem_euclid(2.0 * PI);
            let j = ((theta / dt).floor() as usize).min(n - 1);
            let t1 = dt * j as f64;
            let phi = theta - t1;
            if phi.abs() < 1e-15 {
                return p.values()[j];
            }
            let r1 = p.base_radius() + p.values()[j];
            let r2 = p.base_radius() + p.values()[(j + 1) % n];
            // Ray at angle phi (relative to vertex j) meets the chord.
            let rho = r1 * r2 * dt.sin() / (r1 * phi.sin() + r2 * (dt - phi).sin());
            rho - p.base_radius()
        }
    }
}

fn base_coordinate(shape: &Shape, i: usize) -> f64 {
    match shape.profile() {
        Profile::Flat(p) => p.coordinate(i),
        Profile::Radial(p) => p.angle(i),
    }
}

/// `sup_{p in A} dist(p, B)` over the sampled boundary of `a`. For
/// subgraphs the supremum is attained on the upper boundary and points of
/// `a` inside `b` contribute zero.
fn directed_hausdorff(a: &Shape, b: &Shape) -> f64 {
    let verts_a = a.boundary_points();
    let verts_b = b.boundary_points();
    let values = a.profile().values();
    let mut worst: f64 = 0.0;
    for (i, p) in verts_a.iter().enumerate() {
        let coord = base_coordinate(a, i);
        if a.kind().is_subgraph() && values[i] <= boundary_offset_at(b, coord) {
            continue;
        }
        worst = worst.max(distance_to_boundary(*p, coord, b, &verts_b));
    }
    worst
}

/// Hausdorff distance between two shapes of the same kind over the same
/// base, up to [`Shape::resolution_error`].
pub fn hausdorff_distance(a: &Shape, b: &Shape) -> Result<f64, ShapeError> {
    if a.kind() != b.kind() {
        return Err(ShapeError::MismatchedKinds(a.kind(), b.kind()));
    }
    if a.profile().values().is_empty() || b.profile().values().is_empty() {
        return Err(ShapeError::EmptyProfile);
    }
    if !a.same_base(b) {
        return Err(ShapeError::IncompatibleBase);
    }
    Ok(directed_hausdorff(a, b).max(directed_hausdorff(b, a)))
}

/// Trigonometric polynomial `ρ(t) = a0 + Σ a_k cos kt + b_k sin kt`.
#[derive(Debug, Clone)]
pub(crate) struct RadiusSeries {
    a0: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl RadiusSeries {
    /// Band-limited radius `r + g` of a radial profile: the profile is
    /// resampled to `samples` points and truncated to `modes` harmonics.
    pub(crate) fn from_profile(p: &RadialProfile, modes: usize, samples: usize) -> Self {
        let values = resample_periodic(p.values(), samples);
        Self::from_samples(p.base_radius(), &values, modes)
    }

    /// Least-squares trigonometric fit of `r + g` at the profile samples,
    /// keeping `modes` harmonics.
    fn from_samples(base: f64, values: &[f64], modes: usize) -> Self {
        let m = values.len();
        let modes = modes.min((m - 1) / 2);
        let a0 = base + values.iter().sum::<f64>() / m as f64;
        let mut cos = vec![0.0; modes];
        let mut sin = vec![0.0; modes];
        for k in 1..=modes {
            let (mut c, mut s) = (0.0, 0.0);
            for (i, v) in values.iter().enumerate() {
                // Reduce k i mod m before scaling to keep the angle small.
                let t = 2.0 * PI * ((k * i) % m) as f64 / m as f64;
                c += v * t.cos();
                s += v * t.sin();
            }
            cos[k - 1] = 2.0 * c / m as f64;
            sin[k - 1] = 2.0 * s / m as f64;
        }
        Self { a0, cos, sin }
    }

    /// `(ρ, ρ', ρ'')` at `t`.
    pub(crate) fn eval(&self, t: f64) -> (f64, f64, f64) {
        let (mut r, mut d1, mut d2) = (self.a0, 0.0, 0.0);
        for (k, (a, b)) in self.cos.iter().zip(&self.sin).enumerate() {
            let kf = (k + 1) as f64;
            let (s, c) = (kf * t).sin_cos();
            r += a * c + b * s;
            d1 += kf * (b * c - a * s);
            d2 -= kf * kf * (a * c + b * s);
        }
        (r, d1, d2)
    }
}

/// Periodic linear resampling to `m` points (identity when sizes match).
fn resample_periodic(values: &[f64], m: usize) -> Vec<f64> {
    let n = values.len();
    if n == m {
        return values.to_vec();
    }
    (0..m)
        .map(|i| {
            let s = i as f64 * n as f64 / m as f64;
            let j = s.floor() as usize % n;
            let f = s - s.floor();
            values[j] * (1.0 - f) + values[(j + 1) % n] * f
        })
        .collect()
}
