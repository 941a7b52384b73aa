//! Discrete operators on one mesh: Gram matrices, the trilinear form, the
//! nonlinear residual and its linearisation, the γ-Gram matrix, the error
//! estimator and the explicit constants.

use std::sync::{Arc, OnceLock};

use crate::error::Result;
use crate::hct::{smoother_matrix, BernsteinTable, HctSpace, MacroGeometry, SubValues};
use crate::mesh::{Mesh, MeshConstants, Point, NONE};
use crate::morley::{hess_dot, MorleySpace};
use crate::pwpoly::{self, DiffOp, NormKind, PwPoly};
use crate::quadrature::{bary_to_xy, gauss_legendre01, TriRule};
use crate::sparse::{Csc, StencilAssembler};

type Hess = [f64; 3];

fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// How integrands involving a benchmark function are integrated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum QuadSpec {
    /// Polynomial of the given total degree, integrated exactly.
    Polynomial(usize),
    /// Smooth away from `corner`; cells touching the corner use a graded
    /// collapsed rule of the given order concentrated there.
    Singular { corner: Point, order: usize },
}

/// Points per direction of the collapsed rule near (within three
/// diameters of) the singular corner, and away from it.
pub const NEAR_CORNER_ORDER: usize = 10;
pub const FAR_ORDER: usize = 5;

impl QuadSpec {
    /// Rule on the triangle `verts` for |g|^power times a polynomial of degree `rest`.
    pub fn rule(&self, verts: &[Point; 3], power: usize, rest: usize) -> TriRule {
        match *self {
            QuadSpec::Polynomial(d) => TriRule::for_degree(d * power + rest),
            QuadSpec::Singular { corner, order } => {
                let diam = dist(verts[0], verts[1]).max(dist(verts[1], verts[2])).max(dist(verts[2], verts[0]));
                if let Some(i) = verts.iter().position(|&v| dist(v, corner) <= 1e-12 * diam) {
                    TriRule::graded(order, 3).rotated(i)
                } else if verts.iter().any(|&v| dist(v, corner) <= 3.0 * diam) {
                    TriRule::duffy(NEAR_CORNER_ORDER)
                } else {
                    TriRule::duffy(FAR_ORDER)
                }
            }
        }
    }

    /// Human-readable description for output metadata.
    pub fn describe(&self) -> String {
        match self {
            QuadSpec::Polynomial(d) => format!("exact (polynomial degree {d})"),
            QuadSpec::Singular { order, .. } => format!(
                "graded collapsed Gauss {order}x{order} (s=t^3) at the corner, collapsed Gauss {NEAR_CORNER_ORDER}x{NEAR_CORNER_ORDER} within three diameters, {FAR_ORDER}x{FAR_ORDER} elsewhere"
            ),
        }
    }
}

/// Right-hand side f with its quadrature specification.
#[derive(Clone)]
pub struct Source {
    f: Arc<dyn Fn(Point) -> f64 + Send + Sync>,
    pub quad: QuadSpec,
}

impl std::fmt::Debug for Source {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fm.debug_struct("Source").field("quad", &self.quad).finish()
    }
}

impl Source {
    pub fn new(quad: QuadSpec, f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Source {
        Source { f: Arc::new(f), quad }
    }

    pub fn zero() -> Source {
        Source::new(QuadSpec::Polynomial(0), |_| 0.0)
    }

    pub fn constant(c: f64) -> Source {
        Source::new(QuadSpec::Polynomial(0), move |_| c)
    }

    pub fn eval(&self, x: Point) -> f64 {
        (self.f)(x)
    }
}

/// A function handed to the trilinear form: a Morley or an HCT coefficient vector.
#[derive(Clone, Copy, Debug)]
pub enum Field<'a> {
    Morley(&'a [f64]),
    Hct(&'a [f64]),
}

/// Quadrature data on the three subtriangles of one macro element.
struct MacroEval {
    geo: MacroGeometry,
    basis: [[[f64; 10]; 3]; 12],
    sv: [SubValues; 3],
    pts: [Vec<Point>; 3],
    wts: [Vec<f64>; 3],
}

struct HctAt {
    v: [f64; 12],
    g: [[f64; 2]; 12],
    h: [Hess; 12],
}

impl MacroEval {
    fn new(mesh: &Mesh, t: usize, tables: [&BernsteinTable; 3]) -> MacroEval {
        let geo = MacroGeometry::new(mesh, t);
        let basis = geo.basis();
        let sv = std::array::from_fn(|k| SubValues::new(tables[k], &geo.sub_grads[k]));
        let pts = std::array::from_fn(|k| tables[k].rule.points.iter().map(|l| bary_to_xy(&geo.subs[k], l)).collect());
        let wts = std::array::from_fn(|k| tables[k].rule.weights.iter().map(|w| w * geo.sub_area[k]).collect());
        MacroEval { geo, basis, sv, pts, wts }
    }

    fn hct_basis(&self, k: usize, q: usize) -> HctAt {
        let sv = &self.sv[k];
        let mut r = HctAt { v: [0.0; 12], g: [[0.0; 2]; 12], h: [[0.0; 3]; 12] };
        for j in 0..12 {
            let bb = &self.basis[j][k];
            for a in 0..10 {
                let c = bb[a];
                if c == 0.0 {
                    continue;
                }
                r.v[j] += c * sv.v[q][a];
                r.g[j][0] += c * sv.g[q][a][0];
                r.g[j][1] += c * sv.g[q][a][1];
                for m in 0..3 {
                    r.h[j][m] += c * sv.h[q][a][m];
                }
            }
        }
        r
    }

    fn hct_field(&self, bb: &[[f64; 10]; 3], k: usize, q: usize) -> (f64, [f64; 2], Hess) {
        let sv = &self.sv[k];
        let mut v = 0.0;
        let mut g = [0.0; 2];
        let mut h = [0.0; 3];
        for a in 0..10 {
            let c = bb[k][a];
            v += c * sv.v[q][a];
            g[0] += c * sv.g[q][a][0];
            g[1] += c * sv.g[q][a][1];
            for m in 0..3 {
                h[m] += c * sv.h[q][a][m];
            }
        }
        (v, g, h)
    }
}

fn lap(h: &Hess) -> f64 {
    h[0] + h[2]
}

fn curl(g: [f64; 2]) -> [f64; 2] {
    [g[1], -g[0]]
}

fn dot2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Explicit constants built from norms of v and Jv.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ExplicitConstants {
    pub g_inf: f64,
    pub c_g: f64,
    pub l_g: f64,
    pub c_b2: f64,
    pub c_b3: f64,
    pub l: f64,
}

/// D̂ = A_nc + C P with C_{j,l} = Γ(û, ψ_j, φ_l) + Γ(ψ_j, û, φ_l).
pub struct Linearisation<'a> {
    disc: &'a Discretization,
    pub c: Csc,
}

impl Linearisation<'_> {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.disc.a_nc.apply(x);
        let z = self.c.apply(&self.disc.p.apply(x));
        y.iter_mut().zip(z).for_each(|(a, b)| *a += b);
        y
    }

    pub fn apply_transpose(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.disc.a_nc.apply(x);
        let z = self.disc.pt.apply(&self.c.apply_transpose(x));
        y.iter_mut().zip(z).for_each(|(a, b)| *a += b);
        y
    }

    pub fn to_matrix(&self) -> Csc {
        self.disc.a_nc.add_scaled(1.0, &self.c.matmul(&self.disc.p))
    }
}

/// Spaces, the smoother matrix and the energy Gram matrix on one mesh.
pub struct Discretization {
    pub mesh: Mesh,
    pub consts: MeshConstants,
    pub morley: MorleySpace,
    pub hct: HctSpace,
    /// Jv = P v (HCT coefficients from Morley coefficients).
    pub p: Csc,
    pub pt: Csc,
    pub a_nc: Csc,
    table: BernsteinTable,
    hct_grams: OnceLock<(Csc, Csc)>,
}

impl Discretization {
    pub fn new(mesh: Mesh) -> Discretization {
        let consts = MeshConstants::new(&mesh);
        let morley = MorleySpace::new(&mesh);
        let hct = HctSpace::new(&mesh);
        let p = Csc::from_faer(&smoother_matrix(&mesh, &morley, &hct));
        let pt = p.transpose();
        let mut disc = Discretization {
            mesh,
            consts,
            morley,
            hct,
            p,
            pt,
            a_nc: Csc::zeros(0, 0),
            table: BernsteinTable::new(TriRule::radon7()),
            hct_grams: OnceLock::new(),
        };
        disc.a_nc = disc.assemble_a_nc();
        disc
    }

    pub fn ndof(&self) -> usize {
        self.morley.n
    }

    fn macro_eval(&self, t: usize) -> MacroEval {
        MacroEval::new(&self.mesh, t, [&self.table; 3])
    }

    fn morley_rows(&self) -> Vec<[usize; 6]> {
        self.morley.local.iter().map(|l| l.dofs).collect()
    }

    fn hct_rows(&self) -> Vec<[usize; 12]> {
        (0..self.mesh.num_triangles()).map(|t| self.hct.local_dofs(&self.mesh, t)).collect()
    }

    fn assemble_a_nc(&self) -> Csc {
        let rows = self.morley_rows();
        let mut asm = StencilAssembler::new(self.morley.n, self.morley.n, &rows, &rows);
        for t in 0..self.mesh.num_triangles() {
            let l = &self.morley.local[t];
            let h: [Hess; 6] = std::array::from_fn(|j| l.basis_hess(j));
            let local: [[f64; 6]; 6] = std::array::from_fn(|a| std::array::from_fn(|b| self.mesh.area[t] * hess_dot(&h[a], &h[b])));
            asm.add(&rows[t], &rows[t], &local);
        }
        asm.finish()
    }

    /// Energy and H¹ Gram matrices of the HCT basis.
    pub fn hct_grams(&self) -> &(Csc, Csc) {
        self.hct_grams.get_or_init(|| {
            let rows = self.hct_rows();
            let n = self.hct.n;
            let mut aa = StencilAssembler::new(n, n, &rows, &rows);
            let mut ba = StencilAssembler::new(n, n, &rows, &rows);
            for t in 0..self.mesh.num_triangles() {
                let me = self.macro_eval(t);
                let mut la = [[0.0; 12]; 12];
                let mut lb = [[0.0; 12]; 12];
                for k in 0..3 {
                    for q in 0..me.wts[k].len() {
                        let w = me.wts[k][q];
                        let b = me.hct_basis(k, q);
                        for i in 0..12 {
                            for j in i..12 {
                                la[i][j] += w * hess_dot(&b.h[i], &b.h[j]);
                                lb[i][j] += w * dot2(b.g[i], b.g[j]);
                            }
                        }
                    }
                }
                for i in 0..12 {
                    for j in 0..i {
                        la[i][j] = la[j][i];
                        lb[i][j] = lb[j][i];
                    }
                }
                aa.add(&rows[t], &rows[t], &la);
                ba.add(&rows[t], &rows[t], &lb);
            }
            (aa.finish(), ba.finish())
        })
    }

    pub fn smooth(&self, x: &[f64]) -> Vec<f64> {
        self.p.apply(x)
    }

    /// x ↦ A_J x = Pᵀ A_hct P x
    pub fn a_j_apply(&self, x: &[f64]) -> Vec<f64> {
        self.pt.apply(&self.hct_grams().0.apply(&self.p.apply(x)))
    }

    /// x ↦ B_J x = Pᵀ B_hct P x
    pub fn b_j_apply(&self, x: &[f64]) -> Vec<f64> {
        self.pt.apply(&self.hct_grams().1.apply(&self.p.apply(x)))
    }

    /// A_J = Pᵀ A_hct P.
    pub fn a_j_matrix(&self) -> Csc {
        self.pt.matmul(&self.hct_grams().0.matmul(&self.p))
    }

    /// Explicit (A_nc, A_J, B_J).
    pub fn gram_matrices(&self) -> (Csc, Csc, Csc) {
        let (ah, bh) = self.hct_grams();
        let aj = self.pt.matmul(&ah.matmul(&self.p));
        let bj = self.pt.matmul(&bh.matmul(&self.p));
        (self.a_nc.clone(), aj, bj)
    }

    /// Δ and gradient of a field at every quadrature point of macro t.
    fn field_at(&self, f: Field, t: usize, me: &MacroEval) -> [Vec<(f64, [f64; 2])>; 3] {
        match f {
            Field::Morley(x) => {
                let l = &self.morley.local[t];
                let c = self.morley.local_coeffs(t, x);
                let d = lap(&l.hess(&c));
                std::array::from_fn(|k| me.pts[k].iter().map(|&p| (d, l.grad(&c, p))).collect())
            }
            Field::Hct(w) => {
                let bb = me.geo.bernstein(&self.hct.local_values(&self.mesh, t, w));
                std::array::from_fn(|k| {
                    (0..me.wts[k].len())
                        .map(|q| {
                            let (_, g, h) = me.hct_field(&bb, k, q);
                            (lap(&h), g)
                        })
                        .collect()
                })
            }
        }
    }

    /// Γ_pw(v, w, φ) = ∫ Δ_pw v curl_pw w · ∇φ for an HCT test function φ.
    pub fn trilinear(&self, v: Field, w: Field, phi: &[f64]) -> f64 {
        let mut s = 0.0;
        for t in 0..self.mesh.num_triangles() {
            let me = self.macro_eval(t);
            let fv = self.field_at(v, t, &me);
            let fw = self.field_at(w, t, &me);
            let fp = self.field_at(Field::Hct(phi), t, &me);
            for k in 0..3 {
                for q in 0..me.wts[k].len() {
                    s += me.wts[k][q] * fv[k][q].0 * dot2(curl(fw[k][q].1), fp[k][q].1);
                }
            }
        }
        s
    }

    /// g_l = Γ_pw(v, v, φ_l) for all HCT basis functions.
    fn convection_vector(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.hct.n];
        for t in 0..self.mesh.num_triangles() {
            let me = self.macro_eval(t);
            let fv = self.field_at(Field::Morley(x), t, &me);
            let dofs = self.hct.local_dofs(&self.mesh, t);
            let mut loc = [0.0; 12];
            for k in 0..3 {
                for q in 0..me.wts[k].len() {
                    let (d, gr) = fv[k][q];
                    let c = curl(gr);
                    let b = me.hct_basis(k, q);
                    for j in 0..12 {
                        loc[j] += me.wts[k][q] * d * dot2(c, b.g[j]);
                    }
                }
            }
            for j in 0..12 {
                if dofs[j] != NONE {
                    g[dofs[j]] += loc[j];
                }
            }
        }
        g
    }

    /// F_l = ∫ f φ_l for all HCT basis functions.
    pub fn load_vector(&self, src: &Source) -> Vec<f64> {
        let mut fv = vec![0.0; self.hct.n];
        let mut cache: Vec<BernsteinTable> = Vec::new();
        for t in 0..self.mesh.num_triangles() {
            let geo = MacroGeometry::new(&self.mesh, t);
            let idx: [usize; 3] = std::array::from_fn(|k| {
                let rule = src.quad.rule(&geo.subs[k], 1, 3);
                match cache.iter().position(|c| c.rule.points == rule.points && c.rule.weights == rule.weights) {
                    Some(i) => i,
                    None => {
                        cache.push(BernsteinTable::new(rule));
                        cache.len() - 1
                    }
                }
            });
            let me = MacroEval::new(&self.mesh, t, std::array::from_fn(|k| &cache[idx[k]]));
            let dofs = self.hct.local_dofs(&self.mesh, t);
            let mut loc = [0.0; 12];
            for k in 0..3 {
                for q in 0..me.wts[k].len() {
                    let fq = src.eval(me.pts[k][q]) * me.wts[k][q];
                    if fq == 0.0 {
                        continue;
                    }
                    let b = me.hct_basis(k, q);
                    for j in 0..12 {
                        loc[j] += fq * b.v[j];
                    }
                }
            }
            for j in 0..12 {
                if dofs[j] != NONE {
                    fv[dofs[j]] += loc[j];
                }
            }
        }
        fv
    }

    /// b_j = a_pw(v, ψ_j) + Γ_pw(v, v, Jψ_j) − F(Jψ_j) with a precomputed load vector.
    pub fn residual_with_load(&self, x: &[f64], load: &[f64]) -> Vec<f64> {
        let mut g = self.convection_vector(x);
        g.iter_mut().zip(load).for_each(|(a, b)| *a -= b);
        let (hi, lo) = self.a_nc.apply_compensated(x);
        hi.iter().zip(&lo).zip(self.pt.apply(&g)).map(|((h, l), c)| h + (l + c)).collect()
    }

    pub fn nonlinear_residual(&self, x: &[f64], src: &Source) -> Vec<f64> {
        self.residual_with_load(x, &self.load_vector(src))
    }

    /// D̂ at the state û (Morley iterate for Newton, Jv for the inf-sup bound).
    pub fn linearised_matrix(&self, state: Field) -> Linearisation<'_> {
        let mrows = self.morley_rows();
        let hrows = self.hct_rows();
        let mut asm = StencilAssembler::new(self.morley.n, self.hct.n, &mrows, &hrows);
        for t in 0..self.mesh.num_triangles() {
            let me = self.macro_eval(t);
            let fu = self.field_at(state, t, &me);
            let l = &self.morley.local[t];
            let mlap: [f64; 6] = std::array::from_fn(|j| lap(&l.basis_hess(j)));
            let mut loc = [[0.0; 12]; 6];
            for k in 0..3 {
                for q in 0..me.wts[k].len() {
                    let w = me.wts[k][q];
                    let (du, gu) = fu[k][q];
                    let cu = curl(gu);
                    let b = me.hct_basis(k, q);
                    let x = me.pts[k][q];
                    for j in 0..6 {
                        let cpsi = curl(l.basis_grad(j, x));
                        for m in 0..12 {
                            let gp = b.g[m];
                            loc[j][m] += w * (du * dot2(cpsi, gp) + mlap[j] * dot2(cu, gp));
                        }
                    }
                }
            }
            asm.add(&mrows[t], &hrows[t], &loc);
        }
        Linearisation { disc: self, c: asm.finish() }
    }

    /// B_γ with x ᵀB_γ y = (γ(v, w_x), γ(v, w_y))_{L²}, γ(v, ψ) = ΔJv ∇ψ + Δψ ∇Jv.
    pub fn gamma_gram(&self, x: &[f64]) -> Csc {
        let jv = self.smooth(x);
        let rows = self.morley_rows();
        let mut asm = StencilAssembler::new(self.morley.n, self.morley.n, &rows, &rows);
        for t in 0..self.mesh.num_triangles() {
            let me = self.macro_eval(t);
            let fj = self.field_at(Field::Hct(&jv), t, &me);
            let l = &self.morley.local[t];
            let mlap: [f64; 6] = std::array::from_fn(|j| lap(&l.basis_hess(j)));
            let mut loc = [[0.0; 6]; 6];
            for k in 0..3 {
                for q in 0..me.wts[k].len() {
                    let (dj, gj) = fj[k][q];
                    let x = me.pts[k][q];
                    let gam: [[f64; 2]; 6] = std::array::from_fn(|j| {
                        let g = l.basis_grad(j, x);
                        [dj * g[0] + mlap[j] * gj[0], dj * g[1] + mlap[j] * gj[1]]
                    });
                    for a in 0..6 {
                        for b in 0..6 {
                            loc[a][b] += me.wts[k][q] * dot2(gam[a], gam[b]);
                        }
                    }
                }
            }
            asm.add(&rows[t], &rows[t], &loc);
        }
        asm.finish()
    }

    /// |||x_nc − w_hct|||_pw for a Morley and an HCT function.
    pub fn mixed_energy(&self, x: &[f64], w: &[f64]) -> f64 {
        let mut s = 0.0;
        for t in 0..self.mesh.num_triangles() {
            let me = self.macro_eval(t);
            let bb = me.geo.bernstein(&self.hct.local_values(&self.mesh, t, w));
            let hv = self.morley.local[t].hess(&self.morley.local_coeffs(t, x));
            for k in 0..3 {
                for q in 0..me.wts[k].len() {
                    let (_, _, h) = me.hct_field(&bb, k, q);
                    let d = [hv[0] - h[0], hv[1] - h[1], hv[2] - h[2]];
                    s += me.wts[k][q] * hess_dot(&d, &d);
                }
            }
        }
        s.max(0.0).sqrt()
    }

    /// |||(1 − J)v|||_pw
    pub fn one_minus_j(&self, x: &[f64]) -> f64 {
        self.mixed_energy(x, &self.smooth(x))
    }

    /// |||u − v|||_pw for a function given by its Hessian (xx, xy, yy).
    pub fn error_energy(&self, x: &[f64], hess: &dyn Fn(Point) -> Hess, quad: QuadSpec) -> f64 {
        let mut s = 0.0;
        for t in 0..self.mesh.num_triangles() {
            let verts = self.mesh.tri_points(t);
            let rule = quad.rule(&verts, 2, 0);
            let hv = self.morley.local[t].hess(&self.morley.local_coeffs(t, x));
            for (l, w) in rule.points.iter().zip(&rule.weights) {
                let h = hess(bary_to_xy(&verts, l));
                let d = [h[0] - hv[0], h[1] - hv[1], h[2] - hv[2]];
                s += w * self.mesh.area[t] * hess_dot(&d, &d);
            }
        }
        s.max(0.0).sqrt()
    }

    /// ‖f‖²_{L²(T)} per triangle.
    pub fn source_norms(&self, src: &Source) -> Vec<f64> {
        (0..self.mesh.num_triangles())
            .map(|t| {
                let verts = self.mesh.tri_points(t);
                let rule = src.quad.rule(&verts, 2, 0);
                let s: f64 = rule.points.iter().zip(&rule.weights).map(|(l, w)| w * src.eval(bary_to_xy(&verts, l)).powi(2)).sum();
                s * self.mesh.area[t]
            })
            .collect()
    }

    /// ‖[Δv ∇v]·τ_E‖²_{L²(E)} on interior edges (0 on the boundary).
    pub fn convective_jumps(&self, x: &[f64]) -> Vec<f64> {
        let (gx, gw) = gauss_legendre01(2);
        let side = |t: usize, p: Point, tau: [f64; 2]| {
            let l = &self.morley.local[t];
            let c = self.morley.local_coeffs(t, x);
            lap(&l.hess(&c)) * dot2(l.grad(&c, p), tau)
        };
        self.mesh
            .edges
            .iter()
            .map(|e| {
                if e.boundary {
                    return 0.0;
                }
                let a = self.mesh.vertices[e.v[0]];
                let b = self.mesh.vertices[e.v[1]];
                gx.iter()
                    .zip(&gw)
                    .map(|(s, w)| {
                        let p = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
                        let j = side(e.plus, p, e.tangent) - side(e.minus, p, e.tangent);
                        w * e.length * j * j
                    })
                    .sum()
            })
            .collect()
    }

    /// ‖[D²v]_E τ_E‖²_{L²(E)}; on boundary edges the jump is the one-sided trace.
    pub fn hessian_jumps(&self, x: &[f64]) -> Vec<f64> {
        let ht = |t: usize, tau: [f64; 2]| {
            let h = self.morley.local[t].hess(&self.morley.local_coeffs(t, x));
            [h[0] * tau[0] + h[1] * tau[1], h[1] * tau[0] + h[2] * tau[1]]
        };
        self.mesh
            .edges
            .iter()
            .map(|e| {
                let p = ht(e.plus, e.tangent);
                let m = if e.boundary { [0.0; 2] } else { ht(e.minus, e.tangent) };
                let d = [p[0] - m[0], p[1] - m[1]];
                e.length * dot2(d, d)
            })
            .collect()
    }

    /// η²(T) per triangle.
    pub fn estimator_eta(&self, x: &[f64], src: &Source) -> Vec<f64> {
        let fn2 = self.source_norms(src);
        let cj = self.convective_jumps(x);
        let hj = self.hessian_jumps(x);
        (0..self.mesh.num_triangles())
            .map(|t| {
                let a = self.mesh.area[t];
                let edges: f64 = self.mesh.tri_edges[t].iter().map(|&e| a * cj[e] + hj[e]).sum();
                a * a * fn2[t] + a.sqrt() * edges
            })
            .collect()
    }

    /// μ_res = κ₂‖h_T² f‖ + sqrt(κ₂² + C_tr1 κ₁κ₂) sqrt(Σ_E 𝔥(E)‖[Δv∇v]·τ_E‖²_E).
    pub fn mu_res(&self, x: &[f64], src: &Source) -> Result<f64> {
        let c = &self.consts;
        let fn2 = self.source_norms(src);
        let hf: f64 = (0..self.mesh.num_triangles()).map(|t| self.mesh.diam[t].powi(4) * fn2[t]).sum();
        let cj = self.convective_jumps(x);
        let mut jump = 0.0;
        for (e, edge) in self.mesh.edges.iter().enumerate() {
            if !edge.boundary {
                jump += self.mesh.frak_h(e)? * cj[e];
            }
        }
        Ok(c.kappa2 * hf.sqrt() + (c.kappa2 * c.kappa2 + c.c_tr1 * c.kappa1 * c.kappa2).sqrt() * jump.sqrt())
    }

    /// g_∞, C_G, L_G, C_b2, C_b3 and L for the state v.
    pub fn explicit_constants(&self, x: &[f64]) -> ExplicitConstants {
        let c = &self.consts;
        let jv = self.smooth(x);
        let pj = self.hct.to_pwpoly(&self.mesh, &jv);
        let grad = pwpoly::diffop(&pj, DiffOp::Grad);
        let lapj = pwpoly::diffop(&pj, DiffOp::Laplace).remove(0);
        let g_inf = 2f64.sqrt() * pwpoly::norm(&grad, NormKind::Linf, None) + c.kappa1 * pwpoly::norm(&[lapj.clone()], NormKind::Linf, Some(1));
        let mean: Vec<PwPoly> = grad.iter().map(pwpoly::pi0).collect();
        let osc: Vec<PwPoly> = grad.iter().zip(&mean).map(|(g, m)| g.sub(m)).collect();
        let a14 = c.area.powf(0.25) / std::f64::consts::PI;
        let c_g = 2f64.sqrt() * (a14 * pwpoly::norm(&osc, NormKind::L4, None) + c.c_p * pwpoly::norm(&mean, NormKind::Linf, Some(1)));
        let pv = self.morley.to_pwpoly(&self.mesh, x);
        let lapv = pwpoly::diffop(&pv, DiffOp::Laplace).remove(0);
        let l_g = c_g + c.kappa1 * a14 * pwpoly::norm(&[lapv], NormKind::L4, Some(1));
        let c_b3 = c_g + c.kappa1 * a14 * pwpoly::norm(&[lapj], NormKind::L4, Some(1));
        ExplicitConstants { g_inf, c_g, l_g, c_b2: g_inf, c_b3, l: lipschitz_l(c.area) }
    }
}

/// L = 2|Ω|^{1/2}/π²
pub fn lipschitz_l(area: f64) -> f64 {
    2.0 * area.sqrt() / (std::f64::consts::PI * std::f64::consts::PI)
}
