//! Piecewise polynomials in homogeneous barycentric monomials.
//!
//! A degree-`d` piece stores coefficients of λ₀^a λ₁^b λ₂^c with a+b+c = d.
//! Lower-degree content is carried by factors of λ₀+λ₁+λ₂ = 1, which makes
//! products, exact integration and restriction to subtriangles closed-form.

use crate::error::{Error, Result};
use crate::mesh::Point;

/// Largest degree accepted by [`integrate`].
pub const MAX_DEGREE: usize = 13;
/// Largest degree produced internally (fourth powers for L⁴ norms).
pub const MAX_INTERNAL_DEGREE: usize = 52;

fn index(d: usize, a: usize, c: usize) -> usize {
    let i = d - a;
    i * (i + 1) / 2 + c
}

fn multi_indices(d: usize) -> impl Iterator<Item = [usize; 3]> {
    (0..=d).rev().flat_map(move |a| (0..=(d - a)).map(move |c| [a, d - a - c, c]))
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn bary_gradients(v: &[Point; 3]) -> [[f64; 2]; 3] {
    let two_a = (v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]);
    let mut g = [[0.0; 2]; 3];
    for i in 0..3 {
        let p = v[(i + 1) % 3];
        let q = v[(i + 2) % 3];
        g[i] = [(p[1] - q[1]) / two_a, (q[0] - p[0]) / two_a];
    }
    g
}

/// Barycentric coordinates of `x` with respect to triangle `v`.
pub fn barycentric(v: &[Point; 3], x: Point) -> [f64; 3] {
    let g = bary_gradients(v);
    let mut l = [0.0; 3];
    for i in 0..3 {
        let p = v[(i + 1) % 3];
        l[i] = g[i][0] * (x[0] - p[0]) + g[i][1] * (x[1] - p[1]);
    }
    l
}

#[derive(Clone, Debug)]
pub struct TriPoly {
    pub verts: [Point; 3],
    pub deg: usize,
    pub coef: Vec<f64>,
}

impl TriPoly {
    pub fn zero(verts: [Point; 3], deg: usize) -> TriPoly {
        TriPoly { verts, deg, coef: vec![0.0; (deg + 1) * (deg + 2) / 2] }
    }

    pub fn constant(verts: [Point; 3], c: f64) -> TriPoly {
        TriPoly { verts, deg: 0, coef: vec![c] }
    }

    /// Affine polynomial determined by its vertex values.
    pub fn linear(verts: [Point; 3], vals: [f64; 3]) -> TriPoly {
        let mut p = TriPoly::zero(verts, 1);
        p.coef[index(1, 1, 0)] = vals[0];
        p.coef[index(1, 0, 0)] = vals[1];
        p.coef[index(1, 0, 1)] = vals[2];
        p
    }

    /// The affine function a0 + ax·x + ay·y.
    pub fn affine(verts: [Point; 3], a0: f64, ax: f64, ay: f64) -> TriPoly {
        let f = |p: Point| a0 + ax * p[0] + ay * p[1];
        TriPoly::linear(verts, [f(verts[0]), f(verts[1]), f(verts[2])])
    }

    /// Cubic from Bernstein-Bézier coefficients indexed like the monomials.
    pub fn from_bernstein(verts: [Point; 3], deg: usize, bb: &[f64]) -> TriPoly {
        let mut p = TriPoly::zero(verts, deg);
        let df = factorial(deg);
        for m in multi_indices(deg) {
            let k = index(deg, m[0], m[2]);
            p.coef[k] = bb[k] * df / (factorial(m[0]) * factorial(m[1]) * factorial(m[2]));
        }
        p
    }

    pub fn coefficient(&self, a: usize, b: usize, c: usize) -> f64 {
        debug_assert_eq!(a + b + c, self.deg);
        self.coef[index(self.deg, a, c)]
    }

    pub fn area(&self) -> f64 {
        let v = &self.verts;
        0.5 * ((v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]))
    }

    pub fn eval_bary(&self, l: [f64; 3]) -> f64 {
        multi_indices(self.deg)
            .zip(&self.coef)
            .map(|(m, c)| c * l[0].powi(m[0] as i32) * l[1].powi(m[1] as i32) * l[2].powi(m[2] as i32))
            .sum()
    }

    pub fn eval(&self, x: Point) -> f64 {
        self.eval_bary(barycentric(&self.verts, x))
    }

    /// Multiplies by (λ₀+λ₁+λ₂)^k.
    pub fn elevate(&self, k: usize) -> TriPoly {
        let mut p = self.clone();
        for _ in 0..k {
            let d = p.deg + 1;
            let mut q = TriPoly::zero(p.verts, d);
            for (m, c) in multi_indices(p.deg).zip(&p.coef) {
                q.coef[index(d, m[0] + 1, m[2])] += c;
                q.coef[index(d, m[0], m[2])] += c;
                q.coef[index(d, m[0], m[2] + 1)] += c;
            }
            p = q;
        }
        p
    }

    pub fn scale(&self, s: f64) -> TriPoly {
        TriPoly { verts: self.verts, deg: self.deg, coef: self.coef.iter().map(|c| c * s).collect() }
    }

    pub fn add(&self, other: &TriPoly) -> TriPoly {
        let d = self.deg.max(other.deg);
        let a = self.elevate(d - self.deg);
        let b = other.elevate(d - other.deg);
        TriPoly { verts: self.verts, deg: d, coef: a.coef.iter().zip(&b.coef).map(|(x, y)| x + y).collect() }
    }

    pub fn sub(&self, other: &TriPoly) -> TriPoly {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &TriPoly) -> TriPoly {
        let d = self.deg + other.deg;
        let mut q = TriPoly::zero(self.verts, d);
        for (m1, c1) in multi_indices(self.deg).zip(&self.coef) {
            if *c1 == 0.0 {
                continue;
            }
            for (m2, c2) in multi_indices(other.deg).zip(&other.coef) {
                q.coef[index(d, m1[0] + m2[0], m1[2] + m2[2])] += c1 * c2;
            }
        }
        q
    }

    /// Partial derivative in the Cartesian direction `dir` (0 = x, 1 = y).
    pub fn diff(&self, dir: usize) -> TriPoly {
        if self.deg == 0 {
            return TriPoly::constant(self.verts, 0.0);
        }
        let g = bary_gradients(&self.verts);
        let d = self.deg - 1;
        let mut q = TriPoly::zero(self.verts, d);
        for (m, c) in multi_indices(self.deg).zip(&self.coef) {
            for i in 0..3 {
                if m[i] == 0 {
                    continue;
                }
                let mut r = m;
                r[i] -= 1;
                q.coef[index(d, r[0], r[2])] += c * m[i] as f64 * g[i][dir];
            }
        }
        q
    }

    /// Exact integral over the triangle.
    pub fn integral(&self) -> f64 {
        let d = self.deg;
        let s: f64 = multi_indices(d)
            .zip(&self.coef)
            .map(|(m, c)| c * factorial(m[0]) * factorial(m[1]) * factorial(m[2]))
            .sum();
        2.0 * self.area() * s / factorial(d + 2)
    }

    /// The same polynomial expressed on a subtriangle.
    pub fn restrict(&self, sub: [Point; 3]) -> TriPoly {
        let b: Vec<[f64; 3]> = sub.iter().map(|&q| barycentric(&self.verts, q)).collect();
        // λ_i of the parent as linear forms on the subtriangle
        let forms: Vec<TriPoly> =
            (0..3).map(|i| TriPoly::linear(sub, [b[0][i], b[1][i], b[2][i]])).collect();
        let mut powers: Vec<Vec<TriPoly>> = Vec::with_capacity(3);
        for f in &forms {
            let mut pw = vec![TriPoly::constant(sub, 1.0)];
            for k in 1..=self.deg {
                pw.push(pw[k - 1].mul(f));
            }
            powers.push(pw);
        }
        let mut out = TriPoly::zero(sub, self.deg);
        for (m, c) in multi_indices(self.deg).zip(&self.coef) {
            if *c == 0.0 {
                continue;
            }
            let t = powers[0][m[0]].mul(&powers[1][m[1]]).mul(&powers[2][m[2]]);
            let t = t.elevate(self.deg - t.deg);
            for (o, x) in out.coef.iter_mut().zip(&t.coef) {
                *o += c * x;
            }
        }
        out
    }
}

/// One polynomial piece living on a macro triangle or on one of its subtriangles.
#[derive(Clone, Debug)]
pub struct Piece {
    pub tri: usize,
    pub sub: Option<u8>,
    /// Diameter of the macro triangle.
    pub h: f64,
    pub poly: TriPoly,
}

#[derive(Clone, Debug, Default)]
pub struct PwPoly {
    pub pieces: Vec<Piece>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormKind {
    L2,
    L4,
    Linf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiffOp {
    Grad,
    Curl,
    Laplace,
    Hess,
}

impl PwPoly {
    pub fn map(&self, f: impl Fn(&TriPoly) -> TriPoly) -> PwPoly {
        PwPoly {
            pieces: self
                .pieces
                .iter()
                .map(|p| Piece { tri: p.tri, sub: p.sub, h: p.h, poly: f(&p.poly) })
                .collect(),
        }
    }

    pub fn zip(&self, other: &PwPoly, f: impl Fn(&TriPoly, &TriPoly) -> TriPoly) -> PwPoly {
        assert_eq!(self.pieces.len(), other.pieces.len(), "piece layouts differ");
        PwPoly {
            pieces: self
                .pieces
                .iter()
                .zip(&other.pieces)
                .map(|(p, q)| Piece { tri: p.tri, sub: p.sub, h: p.h, poly: f(&p.poly, &q.poly) })
                .collect(),
        }
    }

    pub fn degree(&self) -> usize {
        self.pieces.iter().map(|p| p.poly.deg).max().unwrap_or(0)
    }

    pub fn add(&self, other: &PwPoly) -> PwPoly {
        self.zip(other, |a, b| a.add(b))
    }

    pub fn sub(&self, other: &PwPoly) -> PwPoly {
        self.zip(other, |a, b| a.sub(b))
    }

    pub fn mul(&self, other: &PwPoly) -> PwPoly {
        self.zip(other, |a, b| a.mul(b))
    }

    pub fn scale(&self, s: f64) -> PwPoly {
        self.map(|p| p.scale(s))
    }

    /// Multiplies each piece by h_T^k of its macro triangle.
    pub fn weight_h(&self, k: i32) -> PwPoly {
        PwPoly {
            pieces: self
                .pieces
                .iter()
                .map(|p| Piece { tri: p.tri, sub: p.sub, h: p.h, poly: p.poly.scale(p.h.powi(k)) })
                .collect(),
        }
    }

    /// Splits whole-triangle pieces onto the three centroid subtriangles.
    pub fn split_centroid(&self) -> PwPoly {
        let mut pieces = Vec::with_capacity(3 * self.pieces.len());
        for p in &self.pieces {
            if p.sub.is_some() {
                pieces.push(p.clone());
                continue;
            }
            let v = p.poly.verts;
            let c = [(v[0][0] + v[1][0] + v[2][0]) / 3.0, (v[0][1] + v[1][1] + v[2][1]) / 3.0];
            for k in 0..3 {
                let sub = [v[(k + 1) % 3], v[(k + 2) % 3], c];
                pieces.push(Piece { tri: p.tri, sub: Some(k as u8), h: p.h, poly: p.poly.restrict(sub) });
            }
        }
        PwPoly { pieces }
    }

    pub fn eval_piece(&self, k: usize, x: Point) -> f64 {
        self.pieces[k].poly.eval(x)
    }
}

/// Exact integral; rejects degrees above [`MAX_DEGREE`].
pub fn integrate(p: &PwPoly) -> Result<f64> {
    let d = p.degree();
    if d > MAX_DEGREE {
        return Err(Error::DegreeOverflow(d, MAX_DEGREE));
    }
    Ok(integrate_unchecked(p))
}

pub(crate) fn integrate_unchecked(p: &PwPoly) -> f64 {
    p.pieces.iter().map(|q| q.poly.integral()).sum()
}

/// Norm of a scalar (one component) or vector field (Euclidean pointwise norm),
/// optionally weighted by h_T^k.
pub fn norm(p: &[PwPoly], kind: NormKind, weight: Option<i32>) -> f64 {
    let comps: Vec<PwPoly> = match weight {
        Some(k) => p.iter().map(|c| c.weight_h(k)).collect(),
        None => p.to_vec(),
    };
    let npieces = comps[0].pieces.len();
    match kind {
        NormKind::L2 | NormKind::L4 => {
            let mut total = 0.0;
            for i in 0..npieces {
                let mut sq = comps[0].pieces[i].poly.mul(&comps[0].pieces[i].poly);
                for c in &comps[1..] {
                    sq = sq.add(&c.pieces[i].poly.mul(&c.pieces[i].poly));
                }
                total += if kind == NormKind::L2 { sq.integral() } else { sq.mul(&sq).integral() };
            }
            let total = total.max(0.0);
            if kind == NormKind::L2 {
                total.sqrt()
            } else {
                total.sqrt().sqrt()
            }
        }
        NormKind::Linf => {
            let n = 12;
            let mut best: f64 = 0.0;
            for i in 0..npieces {
                for a in 0..=n {
                    for b in 0..=(n - a) {
                        let l = [a as f64 / n as f64, b as f64 / n as f64, (n - a - b) as f64 / n as f64];
                        let s: f64 = comps.iter().map(|c| c.pieces[i].poly.eval_bary(l).powi(2)).sum();
                        best = best.max(s.sqrt());
                    }
                }
            }
            best
        }
    }
}

/// Piecewise integral mean over macro triangles.
pub fn pi0(p: &PwPoly) -> PwPoly {
    let ntri = p.pieces.iter().map(|q| q.tri + 1).max().unwrap_or(0);
    let mut integral = vec![0.0; ntri];
    let mut area = vec![0.0; ntri];
    for q in &p.pieces {
        integral[q.tri] += q.poly.integral();
        area[q.tri] += q.poly.area();
    }
    PwPoly {
        pieces: p
            .pieces
            .iter()
            .map(|q| Piece {
                tri: q.tri,
                sub: q.sub,
                h: q.h,
                poly: TriPoly::constant(q.poly.verts, integral[q.tri] / area[q.tri]),
            })
            .collect(),
    }
}

/// Piecewise differential operators; curl v = (∂v/∂y, −∂v/∂x) and the Hessian
/// is returned as (xx, xy, yx, yy).
pub fn diffop(p: &PwPoly, op: DiffOp) -> Vec<PwPoly> {
    let dx = p.map(|q| q.diff(0));
    let dy = p.map(|q| q.diff(1));
    match op {
        DiffOp::Grad => vec![dx, dy],
        DiffOp::Curl => vec![dy, dx.scale(-1.0)],
        DiffOp::Laplace => vec![dx.map(|q| q.diff(0)).add(&dy.map(|q| q.diff(1)))],
        DiffOp::Hess => {
            let xy = dx.map(|q| q.diff(1));
            vec![dx.map(|q| q.diff(0)), xy.clone(), xy, dy.map(|q| q.diff(1))]
        }
    }
}

/// Pieces of a mesh carrying a common polynomial built per triangle.
pub fn from_mesh(mesh: &crate::mesh::Mesh, f: impl Fn(usize, [Point; 3]) -> TriPoly) -> PwPoly {
    PwPoly {
        pieces: (0..mesh.num_triangles())
            .map(|t| Piece { tri: t, sub: None, h: mesh.diam[t], poly: f(t, mesh.tri_points(t)) })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{Domain, Mesh};

    const REF: [Point; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

    fn xy_monomial(v: [Point; 3], a: usize, b: usize) -> TriPoly {
        let x = TriPoly::affine(v, 0.0, 1.0, 0.0);
        let y = TriPoly::affine(v, 0.0, 0.0, 1.0);
        let mut p = TriPoly::constant(v, 1.0);
        for _ in 0..a {
            p = p.mul(&x);
        }
        for _ in 0..b {
            p = p.mul(&y);
        }
        p
    }

    #[test]
    fn constant_and_barycentric_integrals() {
        let m = Mesh::build_initial(Domain::UnitSquare);
        let one = from_mesh(&m, |_, v| TriPoly::constant(v, 1.0));
        assert!((integrate(&one).unwrap() - 1.0).abs() < 1e-15);
        let l1 = PwPoly { pieces: vec![Piece { tri: 0, sub: None, h: 1.0, poly: TriPoly::linear(REF, [1.0, 0.0, 0.0]) }] };
        assert!((integrate(&l1).unwrap() - 0.5 / 3.0).abs() < 1e-15);
        assert!((norm(&[l1.clone()], NormKind::Linf, None) - 1.0).abs() < 1e-15);
        let m0 = pi0(&l1);
        assert!((m0.pieces[0].poly.coef[0] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn x2y2_on_square() {
        let m = Mesh::build_initial(Domain::UnitSquare).refine_red();
        let p = from_mesh(&m, |_, v| xy_monomial(v, 2, 2));
        assert!((integrate(&p).unwrap() - 1.0 / 9.0).abs() < 1e-15);
        let q = from_mesh(&m, |_, v| TriPoly::affine(v, 0.0, 1.0, 0.0).mul(&TriPoly::affine(v, 1.0, -1.0, 0.0)));
        assert!((norm(&[q], NormKind::Linf, None) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn constant_norms() {
        let m = Mesh::build_initial(Domain::LShape);
        let c = from_mesh(&m, |_, v| TriPoly::constant(v, -2.0));
        assert!((norm(&[c.clone()], NormKind::L2, None) - 2.0 * 3f64.sqrt()).abs() < 1e-13);
        assert!((norm(&[c.clone()], NormKind::L4, None) - 2.0 * 3f64.powf(0.25)).abs() < 1e-13);
        assert!((norm(&[c], NormKind::Linf, None) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn curl_sign() {
        let m = Mesh::build_initial(Domain::UnitSquare);
        let x = from_mesh(&m, |_, v| TriPoly::affine(v, 0.0, 1.0, 0.0));
        let g = diffop(&x, DiffOp::Grad);
        let c = diffop(&x, DiffOp::Curl);
        let at = [0.3, 0.6];
        let k = 0;
        assert!((g[0].eval_piece(k, at) - 1.0).abs() < 1e-14 && g[1].eval_piece(k, at).abs() < 1e-14);
        assert!(c[0].eval_piece(k, at).abs() < 1e-14 && (c[1].eval_piece(k, at) + 1.0).abs() < 1e-14);
    }

    #[test]
    fn restrict_preserves_values() {
        let v = [[0.1, 0.2], [1.3, -0.1], [0.4, 0.9]];
        let p = xy_monomial(v, 3, 2).add(&xy_monomial(v, 0, 4).scale(0.7));
        let c = [(0.1 + 1.3 + 0.4) / 3.0, (0.2 - 0.1 + 0.9) / 3.0];
        let sub = [v[1], v[2], c];
        let r = p.restrict(sub);
        let x = [0.6, 0.35];
        assert!((r.eval(x) - p.eval(x)).abs() < 1e-13);
    }

    #[test]
    fn monomial_integrals_on_random_triangle() {
        let v = [[0.2, -0.3], [1.7, 0.4], [-0.5, 1.1]];
        // compare against a high-order collapsed rule evaluated in Cartesian form
        let rule = crate::quadrature::TriRule::duffy(9);
        let area = TriPoly::constant(v, 1.0).area();
        for a in 0..=13usize {
            for b in 0..=(13 - a) {
                let p = xy_monomial(v, a, b);
                let q: f64 = rule
                    .points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(l, w)| {
                        let x = crate::quadrature::bary_to_xy(&v, l);
                        w * x[0].powi(a as i32) * x[1].powi(b as i32)
                    })
                    .sum::<f64>()
                    * area;
                assert!((p.integral() - q).abs() <= 1e-12 * q.abs().max(1e-3), "{a} {b}");
            }
        }
    }
}
