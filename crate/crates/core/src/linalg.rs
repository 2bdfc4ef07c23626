//! Small numerical helpers shared by the solvers.

use std::f64::consts::PI;

use nalgebra::{ComplexField, DMatrix, RealField};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            dp = n as f64 * (x * p - p0) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Largest singular value.
pub fn op_norm<T>(a: &DMatrix<T>) -> f64
where
    T: ComplexField,
    T::RealField: Into<f64>,
{
    if a.is_empty() {
        return 0.0;
    }
    let sv = a.clone().singular_values();
    sv.iter().cloned().map(Into::into).fold(0.0, f64::max)
}

/// Smallest singular value.
pub fn min_singular_value<T>(a: &DMatrix<T>) -> f64
where
    T: ComplexField,
    T::RealField: Into<f64> + RealField,
{
    let sv = a.clone().singular_values();
    sv.iter().cloned().map(Into::into).fold(f64::INFINITY, f64::min)
}

/// Ratio of extreme singular values.
pub fn condition_number<T>(a: &DMatrix<T>) -> f64
where
    T: ComplexField,
    T::RealField: Into<f64> + RealField,
{
    let max = op_norm(a);
    let min = min_singular_value(a);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Ordinary least squares fit `y = intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LinearFit { slope, intercept, r_squared })
}
