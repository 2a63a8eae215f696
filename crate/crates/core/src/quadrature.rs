//! Quadrature on segments and triangles.
//!
//! Triangle integrals use a collapsed (Duffy) tensor Gauss-Legendre rule,
//! exact for polynomials of degree `2 * order - 2`. Segment means use the
//! two-point Gauss rule.

use crate::mesh::Point;
use std::sync::OnceLock;

/// Gauss-Legendre nodes and weights on [0, 1].
pub fn gauss_legendre_unit(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1);
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Newton on P_n starting from the Chebyshev-like guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let pk = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = pk;
            }
            let pn = if n == 1 { x } else { p1 };
            let pn_1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn_1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

/// Barycentric-free triangle rule on the reference triangle (0,0),(1,0),(0,1);
/// weights sum to 1, so integrals are `area * sum w_i f(p_i)`.
#[derive(Debug, Clone)]
pub struct TriangleRule {
    points: Vec<(f64, f64)>,
    weights: Vec<f64>,
}

impl TriangleRule {
    pub fn collapsed_gauss(order: usize) -> Self {
        let (x, w) = gauss_legendre_unit(order);
        let mut points = Vec::with_capacity(order * order);
        let mut weights = Vec::with_capacity(order * order);
        for i in 0..order {
            for j in 0..order {
                let s = x[i];
                let t = (1.0 - s) * x[j];
                points.push((s, t));
                // reference area is 1/2
                weights.push(2.0 * w[i] * w[j] * (1.0 - s));
            }
        }
        TriangleRule { points, weights }
    }

    /// The rule used throughout the crate: 36 points, exact to degree 10.
    pub fn standard() -> &'static TriangleRule {
        static RULE: OnceLock<TriangleRule> = OnceLock::new();
        RULE.get_or_init(|| TriangleRule::collapsed_gauss(6))
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Integral of `f` over the triangle `a, b, c`.
    pub fn integrate<T, F>(&self, a: Point, b: Point, c: Point, mut f: F) -> T
    where
        T: std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T> + Default,
        F: FnMut(Point) -> T,
    {
        let area = triangle_area(a, b, c).abs();
        let e1 = b - a;
        let e2 = c - a;
        let mut acc = T::default();
        for (&(s, t), &w) in self.points.iter().zip(&self.weights) {
            acc = acc + f(a + e1 * s + e2 * t) * w;
        }
        acc * area
    }
}

pub fn triangle_area(a: Point, b: Point, c: Point) -> f64 {
    let e1 = b - a;
    let e2 = c - a;
    0.5 * (e1.x * e2.y - e1.y * e2.x)
}

/// Mean of `f` over the segment `[a, b]` with the two-point Gauss rule.
pub fn segment_mean<F: FnMut(Point) -> f64>(a: Point, b: Point, mut f: F) -> f64 {
    let offset = 0.5 / 3f64.sqrt();
    let mid = (a + b) * 0.5;
    let d = b - a;
    0.5 * (f(mid - d * offset) + f(mid + d * offset))
}
