//! Positive-weight quadrature on the unit-measure reference simplex.
//!
//! Points live in standard simplex coordinates (vertices at the origin and
//! the unit axis points); the weights are scaled so that they sum to one,
//! the measure of the reference element.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    pub dim: usize,
    /// Polynomial degree integrated exactly.
    pub degree: usize,
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl Quadrature {
    /// Rule exact for polynomials of total degree `degree` on the reference simplex.
    ///
    /// In 1D this is Gauss–Legendre on [0, 1]. On the triangle it is the
    /// collapsed (Duffy) product of two Gauss–Legendre rules, whose weights
    /// are all strictly positive.
    pub fn simplex(dim: usize, degree: usize) -> Result<Self> {
        match dim {
            1 => {
                let n = degree / 2 + 1;
                let (x, w) = gauss_legendre_unit(n);
                Ok(Self {
                    dim,
                    degree,
                    points: x.into_iter().map(|p| vec![p]).collect(),
                    weights: w,
                })
            }
            2 => {
                // f(u, (1-u) v) (1-u) has degree ≤ degree + 1 in u
                let n = degree.div_ceil(2) + 1;
                let (x, w) = gauss_legendre_unit(n);
                let mut points = Vec::with_capacity(n * n);
                let mut weights = Vec::with_capacity(n * n);
                for (u, wu) in x.iter().zip(&w) {
                    for (v, wv) in x.iter().zip(&w) {
                        points.push(vec![*u, (1.0 - u) * v]);
                        // factor 2 rescales the standard triangle to unit measure
                        weights.push(2.0 * wu * wv * (1.0 - u));
                    }
                }
                Ok(Self {
                    dim,
                    degree,
                    points,
                    weights,
                })
            }
            _ => Err(Error::Unsupported { dim, order: degree }),
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.points.iter().map(Vec::as_slice).zip(self.weights.iter().copied())
    }
}

/// Gauss–Legendre nodes and weights mapped to [0, 1] (weights sum to 1).
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                let (_, d) = legendre_with_derivative(n, x);
                dp = d;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map [-1, 1] -> [0, 1]
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    #[test]
    fn gauss_legendre_two_points() {
        let (x, w) = gauss_legendre_unit(2);
        let r = 0.5 / 3f64.sqrt();
        assert!((x[0] - (0.5 - r)).abs() < 1e-15);
        assert!((x[1] - (0.5 + r)).abs() < 1e-15);
        assert!((w[0] - 0.5).abs() < 1e-15 && (w[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn weights_positive_and_sum_to_one() {
        for dim in 1..=2 {
            for degree in 0..=12 {
                let q = Quadrature::simplex(dim, degree).unwrap();
                assert!(q.weights.iter().all(|&w| w > 0.0));
                let s: f64 = q.weights.iter().sum();
                assert!((s - 1.0).abs() < 1e-14, "dim {dim} degree {degree}: {s}");
            }
        }
    }

    #[test]
    fn exact_for_monomials_on_interval() {
        for degree in 0..=10 {
            let q = Quadrature::simplex(1, degree).unwrap();
            for a in 0..=degree {
                let got: f64 = q.iter().map(|(p, w)| w * p[0].powi(a as i32)).sum();
                let exact = 1.0 / (a as f64 + 1.0);
                assert!((got - exact).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn exact_for_monomials_on_triangle() {
        // unit-measure triangle: 2 · a! b! / (a + b + 2)!
        for degree in 0..=10 {
            let q = Quadrature::simplex(2, degree).unwrap();
            for a in 0..=degree {
                for b in 0..=degree - a {
                    let got: f64 = q
                        .iter()
                        .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
                        .sum();
                    let exact = 2.0 * factorial(a) * factorial(b) / factorial(a + b + 2);
                    assert!((got - exact).abs() < 1e-13, "x^{a} y^{b} at degree {degree}");
                }
            }
        }
    }

    #[test]
    fn three_dimensions_unsupported() {
        assert!(matches!(Quadrature::simplex(3, 2), Err(Error::Unsupported { .. })));
    }
}
