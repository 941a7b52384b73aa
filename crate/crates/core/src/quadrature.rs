//! Quadrature rules on triangles (barycentric points, weights summing to one)
//! and Gauss-Legendre rules on intervals.

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on [0, 1].
pub fn gauss_legendre01(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = 0.5 * (1.0 - z);
        w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

#[derive(Clone, Debug)]
pub struct TriRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    /// Total degree integrated exactly, `usize::MAX` if not exact for polynomials.
    pub degree: usize,
}

impl TriRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Seven-point rule exact for degree five.
    pub fn radon7() -> TriRule {
        let s = 15f64.sqrt();
        let a1 = (6.0 - s) / 21.0;
        let a2 = (6.0 + s) / 21.0;
        let w1 = (155.0 - s) / 1200.0;
        let w2 = (155.0 + s) / 1200.0;
        let mut points = vec![[1.0 / 3.0; 3]];
        let mut weights = vec![0.225];
        for (a, w) in [(a1, w1), (a2, w2)] {
            let b = 1.0 - 2.0 * a;
            points.push([b, a, a]);
            points.push([a, b, a]);
            points.push([a, a, b]);
            weights.extend_from_slice(&[w, w, w]);
        }
        TriRule { points, weights, degree: 5 }
    }

    /// Collapsed tensor Gauss rule with `n` points per direction, exact for degree 2n - 2.
    pub fn duffy(n: usize) -> TriRule {
        Self::graded(n, 1)
    }

    /// Collapsed rule concentrated at vertex 0 with radial substitution s = t^q.
    pub fn graded(n: usize, q: i32) -> TriRule {
        let (x, w) = gauss_legendre01(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for i in 0..n {
            let s = x[i].powi(q);
            let js = 2.0 * s * q as f64 * x[i].powi(q - 1);
            for j in 0..n {
                let t = x[j];
                points.push([1.0 - s, s * (1.0 - t), s * t]);
                weights.push(w[i] * w[j] * js);
            }
        }
        let degree = if q == 1 { 2 * n - 2 } else { usize::MAX };
        TriRule { points, weights, degree }
    }

    /// Smallest collapsed rule exact for the given degree.
    pub fn for_degree(d: usize) -> TriRule {
        if d <= 5 {
            Self::radon7()
        } else {
            Self::duffy(d / 2 + 1)
        }
    }

    /// The same rule with the collapse vertex moved to local vertex `v`.
    pub fn rotated(&self, v: usize) -> TriRule {
        let points = self
            .points
            .iter()
            .map(|p| {
                let mut q = [0.0; 3];
                for k in 0..3 {
                    q[(v + k) % 3] = p[k];
                }
                q
            })
            .collect();
        TriRule { points, weights: self.weights.clone(), degree: self.degree }
    }
}

pub fn bary_to_xy(p: &[[f64; 2]; 3], l: &[f64; 3]) -> [f64; 2] {
    [
        l[0] * p[0][0] + l[1] * p[1][0] + l[2] * p[2][0],
        l[0] * p[0][1] + l[1] * p[1][1] + l[2] * p[2][1],
    ]
}
