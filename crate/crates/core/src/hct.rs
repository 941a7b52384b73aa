//! Full cubic Hsieh-Clough-Tocher macro element and the averaging smoother J.
//!
//! Each triangle (a₀, a₁, a₂) is split at its centroid c into subtriangles
//! T_k = (a_{k+1}, a_{k+2}, c), so T_k carries outer edge k. The twelve local
//! dofs are value and gradient at the vertices followed by the normal
//! derivative (global edge normal) at the three edge midpoints. The piecewise
//! cubic is assembled in Bernstein-Bézier form from explicit C¹ rules.

use faer::sparse::{SparseColMat, Triplet};

use crate::mesh::{Mesh, Point, NONE};
use crate::morley::MorleySpace;
use crate::pwpoly::{self, barycentric, Piece, PwPoly, TriPoly};
use crate::quadrature::TriRule;

/// Position of the cubic Bernstein coefficient with exponents (a, 3−a−c, c).
pub const fn bb_index(a: usize, c: usize) -> usize {
    let i = 3 - a;
    i * (i + 1) / 2 + c
}

const C300: usize = bb_index(3, 0);
const C210: usize = bb_index(2, 0);
const C201: usize = bb_index(2, 1);
const C120: usize = bb_index(1, 0);
const C111: usize = bb_index(1, 1);
const C102: usize = bb_index(1, 2);
const C030: usize = bb_index(0, 0);
const C021: usize = bb_index(0, 1);
const C012: usize = bb_index(0, 2);
const C003: usize = bb_index(0, 3);

const EXPONENTS: [[usize; 3]; 10] = [
    [3, 0, 0],
    [2, 1, 0],
    [2, 0, 1],
    [1, 2, 0],
    [1, 1, 1],
    [1, 0, 2],
    [0, 3, 0],
    [0, 2, 1],
    [0, 1, 2],
    [0, 0, 3],
];

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn bary_grads(v: &[Point; 3]) -> [[f64; 2]; 3] {
    let two_a = (v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1]);
    std::array::from_fn(|i| {
        let p = v[(i + 1) % 3];
        let q = v[(i + 2) % 3];
        [(p[1] - q[1]) / two_a, (q[0] - p[0]) / two_a]
    })
}

/// Geometry of one macro element.
#[derive(Clone, Debug)]
pub struct MacroGeometry {
    pub verts: [Point; 3],
    pub center: Point,
    /// Global normal of each outer edge.
    pub normals: [Point; 3],
    pub subs: [[Point; 3]; 3],
    pub sub_grads: [[[f64; 2]; 3]; 3],
    pub sub_area: [f64; 3],
}

impl MacroGeometry {
    pub fn new(mesh: &Mesh, t: usize) -> MacroGeometry {
        let verts = mesh.tri_points(t);
        let center = mesh.centroid[t];
        let normals = std::array::from_fn(|e| mesh.edges[mesh.tri_edges[t][e]].normal);
        let subs: [[Point; 3]; 3] = std::array::from_fn(|k| [verts[(k + 1) % 3], verts[(k + 2) % 3], center]);
        let sub_grads = std::array::from_fn(|k| bary_grads(&subs[k]));
        let sub_area = [mesh.area[t] / 3.0; 3];
        MacroGeometry { verts, center, normals, subs, sub_grads, sub_area }
    }

    /// Bernstein coefficients on the three subtriangles for local dofs `d`.
    pub fn bernstein(&self, d: &[f64; 12]) -> [[f64; 10]; 3] {
        let a = &self.verts;
        let c = self.center;
        let val = |i: usize| d[3 * i];
        let grad = |i: usize| [d[3 * i + 1], d[3 * i + 2]];
        let toward = |i: usize, p: Point| val(i) + dot(grad(i), [(p[0] - a[i][0]) / 3.0, (p[1] - a[i][1]) / 3.0]);
        let mut bb = [[0.0; 10]; 3];
        for k in 0..3 {
            let ia = (k + 1) % 3;
            let ib = (k + 2) % 3;
            let b = &mut bb[k];
            b[C300] = val(ia);
            b[C030] = val(ib);
            b[C210] = toward(ia, a[ib]);
            b[C120] = toward(ib, a[ia]);
            b[C201] = toward(ia, c);
            b[C021] = toward(ib, c);
            let g = &self.sub_grads[k];
            let nu = self.normals[k];
            let (da, db, dc) = (dot(g[0], nu), dot(g[1], nu), dot(g[2], nu));
            let known = 0.25 * (b[C300] * da + b[C210] * db + b[C201] * dc)
                + 0.5 * (b[C210] * da + b[C120] * db)
                + 0.25 * (b[C120] * da + b[C030] * db + b[C021] * dc);
            b[C111] = (d[9 + k] / 3.0 - known) / (0.5 * dc);
        }
        // points (a_i + 2c)/3 on the interior edges, then the centre
        let mut e = [0.0; 3];
        for i in 0..3 {
            let q = toward(i, c);
            e[i] = (bb[(i + 1) % 3][C111] + bb[(i + 2) % 3][C111] + q) / 3.0;
        }
        let center = (e[0] + e[1] + e[2]) / 3.0;
        for k in 0..3 {
            bb[k][C102] = e[(k + 1) % 3];
            bb[k][C012] = e[(k + 2) % 3];
            bb[k][C003] = center;
        }
        bb
    }

    /// Bernstein coefficients of all twelve local basis functions.
    pub fn basis(&self) -> [[[f64; 10]; 3]; 12] {
        std::array::from_fn(|j| {
            let mut d = [0.0; 12];
            d[j] = 1.0;
            self.bernstein(&d)
        })
    }

    /// Subtriangle containing x and its barycentric coordinates there.
    pub fn locate(&self, x: Point) -> (usize, [f64; 3]) {
        let mut best = (0, [0.0; 3], f64::NEG_INFINITY);
        for k in 0..3 {
            let l = barycentric(&self.subs[k], x);
            let m = l[0].min(l[1]).min(l[2]);
            if m > best.2 {
                best = (k, l, m);
            }
        }
        (best.0, best.1)
    }

    /// Value and gradient of the cubic with coefficients `bb` at x.
    pub fn eval(&self, bb: &[[f64; 10]; 3], x: Point) -> (f64, [f64; 2]) {
        let (k, l) = self.locate(x);
        let (v, dl, _) = bernstein_derivatives(&l);
        let mut val = 0.0;
        let mut g = [0.0; 2];
        for a in 0..10 {
            val += bb[k][a] * v[a];
            for m in 0..3 {
                g[0] += bb[k][a] * dl[a][m] * self.sub_grads[k][m][0];
                g[1] += bb[k][a] * dl[a][m] * self.sub_grads[k][m][1];
            }
        }
        (val, g)
    }
}

/// Values, first and second barycentric derivatives of the ten cubic Bernstein polynomials.
pub fn bernstein_derivatives(l: &[f64; 3]) -> ([f64; 10], [[f64; 3]; 10], [[[f64; 3]; 3]; 10]) {
    let fact = [1.0, 1.0, 2.0, 6.0];
    let pw = |x: f64, k: i32| if k < 0 { 0.0 } else { x.powi(k) };
    let mut v = [0.0; 10];
    let mut d1 = [[0.0; 3]; 10];
    let mut d2 = [[[0.0; 3]; 3]; 10];
    for (a, e) in EXPONENTS.iter().enumerate() {
        let w = 6.0 / (fact[e[0]] * fact[e[1]] * fact[e[2]]);
        let ei = [e[0] as i32, e[1] as i32, e[2] as i32];
        v[a] = w * pw(l[0], ei[0]) * pw(l[1], ei[1]) * pw(l[2], ei[2]);
        for m in 0..3 {
            let mut r = ei;
            let cm = r[m] as f64;
            r[m] -= 1;
            if cm > 0.0 {
                d1[a][m] = w * cm * pw(l[0], r[0]) * pw(l[1], r[1]) * pw(l[2], r[2]);
            }
            for n in 0..3 {
                let mut s = r;
                let cn = s[n] as f64;
                s[n] -= 1;
                if cm > 0.0 && cn > 0.0 {
                    d2[a][m][n] = w * cm * cn * pw(l[0], s[0]) * pw(l[1], s[1]) * pw(l[2], s[2]);
                }
            }
        }
    }
    (v, d1, d2)
}

/// Bernstein tables at the points of a triangle rule.
#[derive(Clone, Debug)]
pub struct BernsteinTable {
    pub rule: TriRule,
    pub v: Vec<[f64; 10]>,
    pub d1: Vec<[[f64; 3]; 10]>,
    pub d2: Vec<[[[f64; 3]; 3]; 10]>,
}

impl BernsteinTable {
    pub fn new(rule: TriRule) -> BernsteinTable {
        let mut v = Vec::new();
        let mut d1 = Vec::new();
        let mut d2 = Vec::new();
        for p in &rule.points {
            let (a, b, c) = bernstein_derivatives(p);
            v.push(a);
            d1.push(b);
            d2.push(c);
        }
        BernsteinTable { rule, v, d1, d2 }
    }
}

/// Cartesian value, gradient and Hessian (xx, xy, yy) of the ten Bernstein
/// polynomials of one subtriangle at every rule point.
#[derive(Clone, Debug)]
pub struct SubValues {
    pub v: Vec<[f64; 10]>,
    pub g: Vec<[[f64; 2]; 10]>,
    pub h: Vec<[[f64; 3]; 10]>,
}

impl SubValues {
    pub fn new(table: &BernsteinTable, grads: &[[f64; 2]; 3]) -> SubValues {
        let n = table.rule.len();
        let mut g = vec![[[0.0; 2]; 10]; n];
        let mut h = vec![[[0.0; 3]; 10]; n];
        for q in 0..n {
            for a in 0..10 {
                for m in 0..3 {
                    let d = table.d1[q][a][m];
                    g[q][a][0] += d * grads[m][0];
                    g[q][a][1] += d * grads[m][1];
                    for k in 0..3 {
                        let dd = table.d2[q][a][m][k];
                        if dd == 0.0 {
                            continue;
                        }
                        h[q][a][0] += dd * grads[m][0] * grads[k][0];
                        h[q][a][1] += dd * grads[m][0] * grads[k][1];
                        h[q][a][2] += dd * grads[m][1] * grads[k][1];
                    }
                }
            }
        }
        SubValues { v: table.v.clone(), g, h }
    }
}

/// Global numbering of the interior HCT dofs (boundary dofs vanish in H²₀).
#[derive(Clone, Debug)]
pub struct HctSpace {
    pub n: usize,
    /// First of three consecutive dofs (value, ∂x, ∂y) per vertex.
    pub vdof: Vec<usize>,
    pub edof: Vec<usize>,
}

impl HctSpace {
    pub fn new(mesh: &Mesh) -> HctSpace {
        let mut n = 0;
        let vdof = mesh
            .vertex_boundary
            .iter()
            .map(|&b| {
                if b {
                    NONE
                } else {
                    n += 3;
                    n - 3
                }
            })
            .collect();
        let edof = mesh
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
        HctSpace { n, vdof, edof }
    }

    /// Global index of each local dof, `NONE` where the dof is constrained to zero.
    pub fn local_dofs(&self, mesh: &Mesh, t: usize) -> [usize; 12] {
        let mut d = [NONE; 12];
        for (i, &v) in mesh.triangles[t].iter().enumerate() {
            let g = self.vdof[v];
            if g != NONE {
                d[3 * i] = g;
                d[3 * i + 1] = g + 1;
                d[3 * i + 2] = g + 2;
            }
        }
        for e in 0..3 {
            d[9 + e] = self.edof[mesh.tri_edges[t][e]];
        }
        d
    }

    pub fn local_values(&self, mesh: &Mesh, t: usize, w: &[f64]) -> [f64; 12] {
        let idx = self.local_dofs(mesh, t);
        std::array::from_fn(|k| if idx[k] == NONE { 0.0 } else { w[idx[k]] })
    }

    pub fn to_pwpoly(&self, mesh: &Mesh, w: &[f64]) -> PwPoly {
        let mut pieces = Vec::with_capacity(3 * mesh.num_triangles());
        for t in 0..mesh.num_triangles() {
            let geo = MacroGeometry::new(mesh, t);
            let bb = geo.bernstein(&self.local_values(mesh, t, w));
            for k in 0..3 {
                pieces.push(Piece {
                    tri: t,
                    sub: Some(k as u8),
                    h: mesh.diam[t],
                    poly: TriPoly::from_bernstein(geo.subs[k], 3, &bb[k]),
                });
            }
        }
        PwPoly { pieces }
    }

    /// Value and gradient of an HCT function at a point of triangle t.
    pub fn eval(&self, mesh: &Mesh, t: usize, w: &[f64], x: Point) -> (f64, [f64; 2]) {
        let geo = MacroGeometry::new(mesh, t);
        geo.eval(&geo.bernstein(&self.local_values(mesh, t, w)), x)
    }
}

/// Gradient of v|_T at each vertex, averaged arithmetically over adjacent triangles.
fn averaged_gradients(mesh: &Mesh, ms: &MorleySpace, x: &[f64]) -> Vec<[f64; 2]> {
    let mut g = vec![[0.0; 2]; mesh.num_vertices()];
    for (v, tris) in mesh.vertex_tris.iter().enumerate() {
        if mesh.vertex_boundary[v] {
            continue;
        }
        let p = mesh.vertices[v];
        for &t in tris {
            let d = ms.local[t].grad(&ms.local_coeffs(t, x), p);
            g[v][0] += d[0];
            g[v][1] += d[1];
        }
        let k = tris.len() as f64;
        g[v] = [g[v][0] / k, g[v][1] / k];
    }
    g
}

/// The smoother J: averaged HCT dofs with the edge-midpoint normal derivative
/// fixed by Simpson's rule so that edge means of ∂_ν Jv equal the Morley dofs.
pub fn smooth(mesh: &Mesh, ms: &MorleySpace, hs: &HctSpace, x: &[f64]) -> Vec<f64> {
    let g = averaged_gradients(mesh, ms, x);
    let mut w = vec![0.0; hs.n];
    for (v, &k) in hs.vdof.iter().enumerate() {
        if k != NONE {
            w[k] = x[ms.vdof[v]];
            w[k + 1] = g[v][0];
            w[k + 2] = g[v][1];
        }
    }
    for (e, &k) in hs.edof.iter().enumerate() {
        if k == NONE {
            continue;
        }
        let edge = &mesh.edges[e];
        let na = dot(g[edge.v[0]], edge.normal);
        let nb = dot(g[edge.v[1]], edge.normal);
        w[k] = (6.0 * x[ms.edof[e]] - na - nb) / 4.0;
    }
    w
}

/// J as a sparse matrix P with Jv = P v.
pub fn smoother_matrix(mesh: &Mesh, ms: &MorleySpace, hs: &HctSpace) -> SparseColMat<usize, f64> {
    // gradient rows per vertex as sparse lists over Morley dofs
    let mut grow: Vec<Vec<(usize, [f64; 2])>> = vec![Vec::new(); mesh.num_vertices()];
    for (v, tris) in mesh.vertex_tris.iter().enumerate() {
        if mesh.vertex_boundary[v] {
            continue;
        }
        let p = mesh.vertices[v];
        let k = tris.len() as f64;
        let mut acc: Vec<(usize, [f64; 2])> = Vec::new();
        for &t in tris {
            let l = &ms.local[t];
            for j in 0..6 {
                let gdof = l.dofs[j];
                if gdof == NONE {
                    continue;
                }
                let d = l.basis_grad(j, p);
                match acc.iter_mut().find(|e| e.0 == gdof) {
                    Some(e) => {
                        e.1[0] += d[0] / k;
                        e.1[1] += d[1] / k;
                    }
                    None => acc.push((gdof, [d[0] / k, d[1] / k])),
                }
            }
        }
        grow[v] = acc;
    }
    let mut trip = Vec::new();
    for (v, &k) in hs.vdof.iter().enumerate() {
        if k == NONE {
            continue;
        }
        trip.push(Triplet::new(k, ms.vdof[v], 1.0));
        for &(j, d) in &grow[v] {
            trip.push(Triplet::new(k + 1, j, d[0]));
            trip.push(Triplet::new(k + 2, j, d[1]));
        }
    }
    for (e, &k) in hs.edof.iter().enumerate() {
        if k == NONE {
            continue;
        }
        let edge = &mesh.edges[e];
        trip.push(Triplet::new(k, ms.edof[e], 1.5));
        for &a in &edge.v {
            for &(j, d) in &grow[a] {
                trip.push(Triplet::new(k, j, -0.25 * dot(d, edge.normal)));
            }
        }
    }
    SparseColMat::try_new_from_triplets(hs.n, ms.n, &trip).expect("valid smoother pattern")
}

/// HCT function as piecewise cubic on the subtriangle mesh, convenient for norms.
pub fn gradient_and_laplacian(hs: &HctSpace, mesh: &Mesh, w: &[f64]) -> (Vec<PwPoly>, PwPoly) {
    let p = hs.to_pwpoly(mesh, w);
    let g = pwpoly::diffop(&p, pwpoly::DiffOp::Grad);
    let l = pwpoly::diffop(&p, pwpoly::DiffOp::Laplace).remove(0);
    (g, l)
}

/// ‖J‖ = sqrt(λ_max) of A_J x = λ A_nc x, returned raw and inflated by (1 + tol).
pub fn operator_norm_j(
    disc: &crate::assembly::Discretization,
    a_nc: &crate::spectral::SpdSolver,
    tol: f64,
) -> crate::Result<(f64, f64, crate::spectral::EigResult)> {
    use crate::spectral::{extreme_eig, Pencil, Which};
    let p = Pencil::new(
        disc.ndof(),
        Box::new(|x| Ok(a_nc.solve(&disc.a_j_apply(x)))),
        Box::new(|x| Ok(disc.a_nc.apply(x))),
        Which::Largest,
        tol,
    );
    let r = extreme_eig(&p)?;
    let raw = r.value.max(0.0).sqrt();
    Ok((raw, raw * (1.0 + tol), r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Domain;

    fn cubic(p: Point) -> (f64, [f64; 2]) {
        let (x, y) = (p[0], p[1]);
        (
            1.0 + x - 2.0 * y + x * y + 0.5 * x * x * x - y * y * x + 0.7 * y * y * y,
            [1.0 + y + 1.5 * x * x - y * y, -2.0 + x - 2.0 * x * y + 2.1 * y * y],
        )
    }

    #[test]
    fn reproduces_cubics() {
        let m = Mesh::build_initial(Domain::LShape).refine_red();
        for t in 0..m.num_triangles() {
            let geo = MacroGeometry::new(&m, t);
            let mut d = [0.0; 12];
            for i in 0..3 {
                let (v, g) = cubic(geo.verts[i]);
                d[3 * i] = v;
                d[3 * i + 1] = g[0];
                d[3 * i + 2] = g[1];
            }
            for e in 0..3 {
                let a = geo.verts[(e + 1) % 3];
                let b = geo.verts[(e + 2) % 3];
                let (_, g) = cubic([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]);
                d[9 + e] = dot(g, geo.normals[e]);
            }
            let bb = geo.bernstein(&d);
            for l in [[0.2, 0.3, 0.5], [0.6, 0.1, 0.3], [0.1, 0.1, 0.8]] {
                let x = crate::quadrature::bary_to_xy(&geo.verts, &l);
                let (v, g) = geo.eval(&bb, x);
                let (ve, ge) = cubic(x);
                assert!((v - ve).abs() < 1e-12 && (g[0] - ge[0]).abs() < 1e-11 && (g[1] - ge[1]).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn interfaces_are_c1() {
        let m = Mesh::build_initial(Domain::UnitSquare);
        let geo = MacroGeometry::new(&m, 0);
        let d = [0.3, -1.0, 0.4, 2.0, 0.1, 0.7, -0.5, 0.9, 1.3, 0.2, -0.8, 0.6];
        let bb = geo.bernstein(&d);
        for k in 0..3 {
            // interior edge from a_{k+1} to the centre is shared by T_k and T_{k+2}
            let other = (k + 2) % 3;
            let a = geo.subs[k][0];
            for s in [0.1, 0.35, 0.5, 0.77, 0.95] {
                let x = [a[0] + s * (geo.center[0] - a[0]), a[1] + s * (geo.center[1] - a[1])];
                let eval_on = |kk: usize| {
                    let l = barycentric(&geo.subs[kk], x);
                    let (v, dl, _) = bernstein_derivatives(&l);
                    let mut val = 0.0;
                    let mut g = [0.0; 2];
                    for j in 0..10 {
                        val += bb[kk][j] * v[j];
                        for mm in 0..3 {
                            g[0] += bb[kk][j] * dl[j][mm] * geo.sub_grads[kk][mm][0];
                            g[1] += bb[kk][j] * dl[j][mm] * geo.sub_grads[kk][mm][1];
                        }
                    }
                    (val, g)
                };
                let (v1, g1) = eval_on(k);
                let (v2, g2) = eval_on(other);
                assert!((v1 - v2).abs() < 1e-12);
                assert!((g1[0] - g2[0]).abs() < 1e-11 && (g1[1] - g2[1]).abs() < 1e-11);
            }
        }
    }
}
