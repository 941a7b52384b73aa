//! The Morley space: vertex values and edge-mean normal derivatives.

use faer::linalg::solvers::DenseSolveCore;
use faer::Mat;

use crate::mesh::{Mesh, Point, NONE};
use crate::pwpoly::{self, PwPoly, TriPoly};
use crate::quadrature::gauss_legendre01;

/// Local P₂ basis on one triangle in scaled monomials
/// 1, ξ, η, ξ², ξη, η² with ξ = (x − c_x)/h, η = (y − c_y)/h.
#[derive(Clone, Debug)]
pub struct LocalMorley {
    pub center: Point,
    pub h: f64,
    /// `coef[j][k]`: coefficient of monomial k in local basis function j.
    pub coef: [[f64; 6]; 6],
    /// Global dofs in local order v0, v1, v2, e0, e1, e2 (`NONE` on the boundary).
    pub dofs: [usize; 6],
}

fn monomials(c: Point, h: f64, x: Point) -> [f64; 6] {
    let s = (x[0] - c[0]) / h;
    let t = (x[1] - c[1]) / h;
    [1.0, s, t, s * s, s * t, t * t]
}

fn monomial_grads(c: Point, h: f64, x: Point) -> [[f64; 2]; 6] {
    let s = (x[0] - c[0]) / h;
    let t = (x[1] - c[1]) / h;
    [
        [0.0, 0.0],
        [1.0 / h, 0.0],
        [0.0, 1.0 / h],
        [2.0 * s / h, 0.0],
        [t / h, s / h],
        [0.0, 2.0 * t / h],
    ]
}

impl LocalMorley {
    pub fn value(&self, c6: &[f64; 6], x: Point) -> f64 {
        let m = monomials(self.center, self.h, x);
        (0..6).map(|j| c6[j] * (0..6).map(|k| self.coef[j][k] * m[k]).sum::<f64>()).sum()
    }

    pub fn basis_value(&self, j: usize, x: Point) -> f64 {
        let m = monomials(self.center, self.h, x);
        (0..6).map(|k| self.coef[j][k] * m[k]).sum()
    }

    pub fn basis_grad(&self, j: usize, x: Point) -> [f64; 2] {
        let g = monomial_grads(self.center, self.h, x);
        let mut r = [0.0; 2];
        for k in 0..6 {
            r[0] += self.coef[j][k] * g[k][0];
            r[1] += self.coef[j][k] * g[k][1];
        }
        r
    }

    /// Constant Hessian (xx, xy, yy) of basis function j.
    pub fn basis_hess(&self, j: usize) -> [f64; 3] {
        let h2 = self.h * self.h;
        [2.0 * self.coef[j][3] / h2, self.coef[j][4] / h2, 2.0 * self.coef[j][5] / h2]
    }

    pub fn grad(&self, c6: &[f64; 6], x: Point) -> [f64; 2] {
        let mut r = [0.0; 2];
        for j in 0..6 {
            let g = self.basis_grad(j, x);
            r[0] += c6[j] * g[0];
            r[1] += c6[j] * g[1];
        }
        r
    }

    pub fn hess(&self, c6: &[f64; 6]) -> [f64; 3] {
        let mut r = [0.0; 3];
        for j in 0..6 {
            let h = self.basis_hess(j);
            for k in 0..3 {
                r[k] += c6[j] * h[k];
            }
        }
        r
    }

    /// Basis function j as a barycentric polynomial on the triangle.
    pub fn basis_poly(&self, j: usize, verts: [Point; 3]) -> TriPoly {
        let s = TriPoly::affine(verts, -self.center[0] / self.h, 1.0 / self.h, 0.0);
        let t = TriPoly::affine(verts, -self.center[1] / self.h, 0.0, 1.0 / self.h);
        let m = [
            TriPoly::constant(verts, 1.0),
            s.clone(),
            t.clone(),
            s.mul(&s),
            s.mul(&t),
            t.mul(&t),
        ];
        let mut p = TriPoly::zero(verts, 2);
        for k in 0..6 {
            p = p.add(&m[k].scale(self.coef[j][k]));
        }
        p
    }
}

/// Frobenius product of two symmetric Hessians stored as (xx, xy, yy).
pub fn hess_dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + 2.0 * a[1] * b[1] + a[2] * b[2]
}

#[derive(Clone, Debug)]
pub struct MorleySpace {
    pub n: usize,
    pub vdof: Vec<usize>,
    pub edof: Vec<usize>,
    pub local: Vec<LocalMorley>,
}

impl MorleySpace {
    pub fn new(mesh: &Mesh) -> MorleySpace {
        let mut n = 0;
        let vdof: Vec<usize> = mesh
            .vertex_boundary
            .iter()
            .map(|&b| {
                if b {
                    NONE
                } else {
                    n += 1;
                    n - 1
                }
            })
            .collect();
        let edof: Vec<usize> = mesh
            .edges
            .iter()
            .map(|e| {
                if e.boundary {
                    NONE
                } else {
                    n += 1;
                    n - 1
                }
            })
            .collect();
        let local = (0..mesh.num_triangles())
            .map(|t| {
                let p = mesh.tri_points(t);
                let c = mesh.centroid[t];
                let h = mesh.diam[t];
                let mut d = Mat::<f64>::zeros(6, 6);
                for i in 0..3 {
                    let m = monomials(c, h, p[i]);
                    for k in 0..6 {
                        d[(i, k)] = m[k];
                    }
                }
                for e in 0..3 {
                    let edge = &mesh.edges[mesh.tri_edges[t][e]];
                    let a = p[(e + 1) % 3];
                    let b = p[(e + 2) % 3];
                    let g = monomial_grads(c, h, [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]);
                    for k in 0..6 {
                        d[(3 + e, k)] = g[k][0] * edge.normal[0] + g[k][1] * edge.normal[1];
                    }
                }
                let inv = d.partial_piv_lu().inverse();
                let mut coef = [[0.0; 6]; 6];
                for j in 0..6 {
                    for k in 0..6 {
                        coef[j][k] = inv[(k, j)];
                    }
                }
                let tv = mesh.triangles[t];
                let te = mesh.tri_edges[t];
                let dofs = [vdof[tv[0]], vdof[tv[1]], vdof[tv[2]], edof[te[0]], edof[te[1]], edof[te[2]]];
                LocalMorley { center: c, h, coef, dofs }
            })
            .collect();
        MorleySpace { n, vdof, edof, local }
    }

    pub fn local_coeffs(&self, t: usize, x: &[f64]) -> [f64; 6] {
        let mut c = [0.0; 6];
        for (k, &g) in self.local[t].dofs.iter().enumerate() {
            if g != NONE {
                c[k] = x[g];
            }
        }
        c
    }

    /// Six local basis polynomials and their global dofs.
    pub fn basis_on(&self, mesh: &Mesh, t: usize) -> ([TriPoly; 6], [usize; 6]) {
        let v = mesh.tri_points(t);
        let l = &self.local[t];
        (std::array::from_fn(|j| l.basis_poly(j, v)), l.dofs)
    }

    pub fn to_pwpoly(&self, mesh: &Mesh, x: &[f64]) -> PwPoly {
        pwpoly::from_mesh(mesh, |t, v| {
            let c = self.local_coeffs(t, x);
            let l = &self.local[t];
            let mut p = TriPoly::zero(v, 2);
            for j in 0..6 {
                if c[j] != 0.0 {
                    p = p.add(&l.basis_poly(j, v).scale(c[j]));
                }
            }
            p
        })
    }

    /// Morley interpolation of a function given by point values and gradients.
    /// Edge means of the normal derivative use `n_gauss` Gauss points.
    pub fn interpolate(
        &self,
        mesh: &Mesh,
        value: impl Fn(Point) -> f64,
        grad: impl Fn(Point) -> [f64; 2],
        n_gauss: usize,
    ) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for (v, &g) in self.vdof.iter().enumerate() {
            if g != NONE {
                x[g] = value(mesh.vertices[v]);
            }
        }
        let (gx, gw) = gauss_legendre01(n_gauss);
        for (e, &g) in self.edof.iter().enumerate() {
            if g == NONE {
                continue;
            }
            let edge = &mesh.edges[e];
            let a = mesh.vertices[edge.v[0]];
            let b = mesh.vertices[edge.v[1]];
            let mut s = 0.0;
            for (t, w) in gx.iter().zip(&gw) {
                let p = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
                let d = grad(p);
                s += w * (d[0] * edge.normal[0] + d[1] * edge.normal[1]);
            }
            x[g] = s;
        }
        x
    }

    /// Dof functionals of a piecewise function evaluated triangle by triangle;
    /// `value(t, x)` and `grad(t, x)` may be discontinuous across edges, the
    /// edge mean is taken from the `plus` side.
    pub fn interpolate_pw(
        &self,
        mesh: &Mesh,
        value: impl Fn(usize, Point) -> f64,
        grad: impl Fn(usize, Point) -> [f64; 2],
        n_gauss: usize,
    ) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for (v, &g) in self.vdof.iter().enumerate() {
            if g != NONE {
                x[g] = value(mesh.vertex_tris[v][0], mesh.vertices[v]);
            }
        }
        let (gx, gw) = gauss_legendre01(n_gauss);
        for (e, &g) in self.edof.iter().enumerate() {
            if g == NONE {
                continue;
            }
            let edge = &mesh.edges[e];
            let a = mesh.vertices[edge.v[0]];
            let b = mesh.vertices[edge.v[1]];
            let mut s = 0.0;
            for (t, w) in gx.iter().zip(&gw) {
                let p = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
                let d = grad(edge.plus, p);
                s += w * (d[0] * edge.normal[0] + d[1] * edge.normal[1]);
            }
            x[g] = s;
        }
        x
    }

    /// a_pw(x, y) = Σ_T |T| D²x : D²y for two Morley functions.
    pub fn a_pw(&self, mesh: &Mesh, x: &[f64], y: &[f64]) -> f64 {
        (0..mesh.num_triangles())
            .map(|t| {
                let l = &self.local[t];
                let hx = l.hess(&self.local_coeffs(t, x));
                let hy = l.hess(&self.local_coeffs(t, y));
                mesh.area[t] * hess_dot(&hx, &hy)
            })
            .sum()
    }

    pub fn energy_norm(&self, mesh: &Mesh, x: &[f64]) -> f64 {
        self.a_pw(mesh, x, x).max(0.0).sqrt()
    }
}
