//! Sparse direct solves, a Krylov-Schur Lanczos eigensolver for
//! self-adjoint pencils, and a dense oracle for small instances.

use faer::linalg::solvers::SolveCore;
use faer::sparse::linalg::LuError;
use faer::sparse::linalg::solvers::{Llt, Lu};
use faer::{Conj, Mat, MatMut, Par, Side};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::error::{Error, Result};
use crate::sparse::{axpy, dot, norm2, sub, Csc};

pub type Apply<'a> = Box<dyn Fn(&[f64]) -> Result<Vec<f64>> + 'a>;

fn solve_in_place(solver: &impl SolveCore<f64>, x: &mut [f64], transpose: bool) {
    let n = x.len();
    let m = MatMut::from_column_major_slice_mut(x, n, 1);
    if transpose {
        solver.solve_transpose_in_place_with_conj(Conj::No, m);
    } else {
        solver.solve_in_place_with_conj(Conj::No, m);
    }
}

/// Sparse Cholesky factorisation with one step of iterative refinement.
/// Only the lower triangle is kept.
pub struct SpdSolver {
    lower: Csc,
    llt: Option<Llt<usize, f64>>,
}

impl SpdSolver {
    pub fn new(a: &Csc) -> Result<SpdSolver> {
        assert_eq!(a.nrows, a.ncols);
        let lower = a.lower_triangle();
        if a.nrows == 0 {
            return Ok(SpdSolver { lower, llt: None });
        }
        let llt = lower.to_faer().sp_cholesky(Side::Lower).map_err(|e| Error::Factorization(format!("{e:?}")))?;
        Ok(SpdSolver { lower, llt: Some(llt) })
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.lower.apply_symmetric_lower(x)
    }

    /// Forward and backward substitution only.
    pub fn solve_unrefined(&self, b: &[f64]) -> Vec<f64> {
        let Some(llt) = &self.llt else { return Vec::new() };
        let mut x = b.to_vec();
        solve_in_place(llt, &mut x, false);
        x
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = self.solve_unrefined(b);
        if x.is_empty() {
            return x;
        }
        let r = self.solve_unrefined(&sub(b, &self.apply(&x)));
        axpy(&mut x, 1.0, &r);
        x
    }
}

/// Solves with a square matrix or its transpose.
pub trait LinearSolve {
    fn solve(&self, b: &[f64], transpose: bool) -> Result<Vec<f64>>;
}

/// Sparse LU factorisation with partial pivoting for the nonsymmetric linearisation.
pub struct GeneralSolver {
    a: Csc,
    lu: Option<Lu<usize, f64>>,
}

impl GeneralSolver {
    pub fn new(a: &Csc) -> Result<GeneralSolver> {
        assert_eq!(a.nrows, a.ncols);
        if a.nrows == 0 {
            return Ok(GeneralSolver { a: a.clone(), lu: None });
        }
        let lu = a.to_faer().sp_lu().map_err(|e| match e {
            LuError::SymbolicSingular { index } => Error::SingularPivot(index),
            LuError::Generic(g) => Error::Factorization(format!("{g:?}")),
        })?;
        Ok(GeneralSolver { a: a.clone(), lu: Some(lu) })
    }

    pub fn matrix(&self) -> &Csc {
        &self.a
    }

}

impl LinearSolve for GeneralSolver {
    /// Solves A x = b, or Aᵀ x = b when `transpose` is set.
    fn solve(&self, b: &[f64], transpose: bool) -> Result<Vec<f64>> {
        let Some(lu) = &self.lu else { return Ok(Vec::new()) };
        let apply = |x: &[f64]| if transpose { self.a.apply_transpose(x) } else { self.a.apply(x) };
        let mut x = b.to_vec();
        solve_in_place(lu, &mut x, transpose);
        let mut r = sub(b, &apply(&x));
        solve_in_place(lu, &mut r, transpose);
        axpy(&mut x, 1.0, &r);
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::SingularPivot(i));
        }
        let res = norm2(&sub(b, &apply(&x)));
        let scale = norm2(b).max(f64::MIN_POSITIVE);
        if res > 1e-6 * scale {
            return Err(Error::LinearSolverStalled(res / scale, 1));
        }
        Ok(x)
    }
}

type Op<'a> = Box<dyn Fn(&[f64]) -> Vec<f64> + 'a>;

/// GMRES for D x = b with D close to the SPD matrix M: left preconditioned by
/// M⁻¹ and orthogonal in the M inner product, so the stopping test bounds
/// the dual norm ‖b − D x‖_{M⁻¹} relative to ‖b‖_{M⁻¹}.
pub struct Gmres<'a> {
    op: Op<'a>,
    op_t: Op<'a>,
    m: &'a SpdSolver,
    pub rtol: f64,
    /// Accepted relative residual once restarts stop reducing it.
    pub floor: f64,
    pub restart: usize,
    pub max_iter: usize,
}

impl<'a> Gmres<'a> {
    pub fn new(op: Op<'a>, op_t: Op<'a>, m: &'a SpdSolver, rtol: f64) -> Gmres<'a> {
        Gmres { op, op_t, m, rtol, floor: 1e-10, restart: 60, max_iter: 600 }
    }

    fn run(&self, op: &dyn Fn(&[f64]) -> Vec<f64>, b: &[f64]) -> Result<Vec<f64>> {
        let m = self.m;
        let mb = m.solve_unrefined(b);
        let bnorm = dot(&mb, b).max(0.0).sqrt();
        if bnorm == 0.0 {
            return Ok(vec![0.0; b.len()]);
        }
        let mut x = mb;
        let mut total = 0;
        let mut last = f64::INFINITY;
        loop {
            let res = sub(b, &op(&x));
            let r = m.solve_unrefined(&res);
            let beta = dot(&r, &res).max(0.0).sqrt();
            if beta <= self.rtol * bnorm {
                return Ok(x);
            }
            // rounding floor reached
            if beta > 0.5 * last && beta <= self.floor * bnorm {
                return Ok(x);
            }
            last = beta;
            if total >= self.max_iter {
                return Err(Error::LinearSolverStalled(beta / bnorm, total));
            }
            let mut v = vec![r.iter().map(|a| a / beta).collect::<Vec<f64>>()];
            let mut mv = vec![res.iter().map(|a| a / beta).collect::<Vec<f64>>()];
            let mut h: Vec<Vec<f64>> = Vec::new();
            let mut cs: Vec<(f64, f64)> = Vec::new();
            let mut g = vec![beta];
            for j in 0..self.restart {
                total += 1;
                let mut w = m.solve_unrefined(&op(&v[j]));
                let mut mw = m.apply(&w);
                let mut col = vec![0.0; j + 2];
                for _ in 0..2 {
                    for i in 0..=j {
                        let c = dot(&w, &mv[i]);
                        col[i] += c;
                        axpy(&mut w, -c, &v[i]);
                        axpy(&mut mw, -c, &mv[i]);
                    }
                }
                let hn = dot(&w, &mw).max(0.0).sqrt();
                col[j + 1] = hn;
                for (i, &(c, s)) in cs.iter().enumerate() {
                    let (a, b) = (col[i], col[i + 1]);
                    col[i] = c * a + s * b;
                    col[i + 1] = -s * a + c * b;
                }
                let den = col[j].hypot(col[j + 1]);
                let (c, s) = if den == 0.0 { (1.0, 0.0) } else { (col[j] / den, col[j + 1] / den) };
                col[j] = den;
                col[j + 1] = 0.0;
                cs.push((c, s));
                let gj = g[j];
                g[j] = c * gj;
                g.push(-s * gj);
                h.push(col);
                let done = g[j + 1].abs() <= 0.1 * self.rtol * bnorm || hn == 0.0 || total >= self.max_iter;
                if done || j + 1 == self.restart {
                    break;
                }
                v.push(w.iter().map(|a| a / hn).collect());
                mv.push(mw.iter().map(|a| a / hn).collect());
            }
            let k = h.len();
            let mut y = vec![0.0; k];
            for i in (0..k).rev() {
                let s: f64 = (i + 1..k).map(|l| h[l][i] * y[l]).sum();
                if h[i][i] == 0.0 {
                    return Err(Error::SingularPivot(i));
                }
                y[i] = (g[i] - s) / h[i][i];
            }
            for (i, yi) in y.iter().enumerate() {
                axpy(&mut x, *yi, &v[i]);
            }
            if x.iter().any(|a| !a.is_finite()) {
                return Err(Error::LinearSolverStalled(f64::NAN, total));
            }
        }
    }
}

impl LinearSolve for Gmres<'_> {
    fn solve(&self, b: &[f64], transpose: bool) -> Result<Vec<f64>> {
        if transpose {
            self.run(&*self.op_t, b)
        } else {
            self.run(&*self.op, b)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Which {
    Largest,
    Smallest,
}

/// Eigenproblem T x = λ x for an operator T self-adjoint in the inner
/// product (x, y) ↦ xᵀ M y. Generalised pencils A x = λ M x are passed as
/// T = M⁻¹ A.
pub struct Pencil<'a> {
    pub dim: usize,
    pub op: Apply<'a>,
    pub inner: Apply<'a>,
    pub which: Which,
    pub tol: f64,
    pub max_apply: usize,
    pub seed: u64,
}

impl<'a> Pencil<'a> {
    pub fn new(dim: usize, op: Apply<'a>, inner: Apply<'a>, which: Which, tol: f64) -> Pencil<'a> {
        Pencil { dim, op, inner, which, tol, max_apply: 5000, seed: 0x5eed }
    }
}

#[derive(Clone, Debug)]
pub struct EigResult {
    pub value: f64,
    pub vector: Vec<f64>,
    /// Number of operator applications.
    pub iterations: usize,
    /// M-norm of the eigen-residual of the returned pair.
    pub residual: f64,
    /// Ritz value at every restart.
    pub history: Vec<f64>,
}

fn dense_sym_eigen(h: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let e = h.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Factorization(format!("{e:?}")))?;
    let vals = (0..h.nrows()).map(|i| e.S()[i]).collect();
    Ok((vals, e.U().to_owned()))
}

/// Thick-restart Lanczos (Krylov-Schur for symmetric operators) with full
/// reorthogonalisation.
pub fn extreme_eig(p: &Pencil) -> Result<EigResult> {
    let n = p.dim;
    if n == 0 {
        return Err(Error::Invariant("empty eigenproblem".into()));
    }
    let m_max = n.min(40);
    let k_keep = (m_max / 2).max(1);
    let mut rng = StdRng::seed_from_u64(p.seed);
    let start: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();

    let mut v: Vec<Vec<f64>> = Vec::with_capacity(m_max + 1);
    let mut mv: Vec<Vec<f64>> = Vec::with_capacity(m_max + 1);
    // projected matrix, rows/cols up to m_max
    let mut h = Mat::<f64>::zeros(m_max, m_max);
    let mut applies = 0usize;
    let mut history = Vec::new();
    let mut kept = 0usize;

    let ms = (p.inner)(&start)?;
    let s0 = dot(&start, &ms).sqrt();
    if !(s0 > 0.0) {
        return Err(Error::NotSpd);
    }
    v.push(start.iter().map(|x| x / s0).collect());
    mv.push(ms.iter().map(|x| x / s0).collect());

    loop {
        let mut beta;
        let mut next: Option<(Vec<f64>, Vec<f64>)> = None;
        let mut j = v.len() - 1;
        loop {
            let mut w = (p.op)(&v[j])?;
            applies += 1;
            // two passes of classical Gram-Schmidt in the M inner product
            for pass in 0..2 {
                for i in 0..v.len() {
                    let c = dot(&mv[i], &w);
                    axpy(&mut w, -c, &v[i]);
                    if pass == 0 && i >= kept {
                        h[(i, j)] = c;
                        h[(j, i)] = c;
                    } else if i >= kept {
                        h[(i, j)] += c;
                        h[(j, i)] = h[(i, j)];
                    }
                }
            }
            let mw = (p.inner)(&w)?;
            let b2 = dot(&w, &mw);
            beta = b2.max(0.0).sqrt();
            let scale = h[(j, j)].abs().max(1e-300);
            if j + 1 == m_max || beta <= 1e-14 * scale {
                if beta > 1e-14 * scale {
                    next = Some((w.iter().map(|x| x / beta).collect(), mw.iter().map(|x| x / beta).collect()));
                } else {
                    beta = 0.0;
                }
                break;
            }
            v.push(w.iter().map(|x| x / beta).collect());
            mv.push(mw.iter().map(|x| x / beta).collect());
            h[(j + 1, j)] = beta;
            h[(j, j + 1)] = beta;
            j += 1;
        }
        let m = v.len();
        let hm = h.submatrix(0, 0, m, m).to_owned();
        let (vals, vecs) = dense_sym_eigen(&hm)?;
        let order: Vec<usize> = match p.which {
            Which::Largest => (0..m).rev().collect(),
            Which::Smallest => (0..m).collect(),
        };
        let t = order[0];
        let theta = vals[t];
        let res = (beta * vecs[(m - 1, t)]).abs();
        let prev = history.last().copied();
        history.push(theta);
        let scale = theta.abs().max(f64::MIN_POSITIVE);
        let change_ok = prev.map(|q: f64| (theta - q).abs() <= p.tol * scale).unwrap_or(false);
        let exhausted = next.is_none();
        if (res <= p.tol * scale && (change_ok || res <= 1e-3 * p.tol * scale)) || exhausted {
            let mut x = vec![0.0; n];
            for i in 0..m {
                axpy(&mut x, vecs[(i, t)], &v[i]);
            }
            return Ok(EigResult { value: theta, vector: x, iterations: applies, residual: res, history });
        }
        if applies >= p.max_apply {
            return Err(Error::EigenNotConverged { iterations: applies, history });
        }
        // thick restart on the wanted Ritz vectors
        let keep: Vec<usize> = order[..k_keep.min(m - 1)].to_vec();
        let mut nv = Vec::with_capacity(m_max + 1);
        let mut nmv = Vec::with_capacity(m_max + 1);
        for &c in &keep {
            let mut x = vec![0.0; n];
            let mut y = vec![0.0; n];
            for i in 0..m {
                axpy(&mut x, vecs[(i, c)], &v[i]);
                axpy(&mut y, vecs[(i, c)], &mv[i]);
            }
            nv.push(x);
            nmv.push(y);
        }
        h.fill(0.0);
        let k = keep.len();
        for (a, &c) in keep.iter().enumerate() {
            h[(a, a)] = vals[c];
            let b = beta * vecs[(m - 1, c)];
            h[(k, a)] = b;
            h[(a, k)] = b;
        }
        let (x, y) = next.expect("restart vector");
        nv.push(x);
        nmv.push(y);
        v = nv;
        mv = nmv;
        kept = k;
    }
}

/// All eigenvalues of A x = λ B x (ascending) by reduction through the
/// Cholesky factor of B.
pub fn dense_oracle(a: &Mat<f64>, b: &Mat<f64>) -> Result<Vec<f64>> {
    let n = a.nrows();
    assert!(a.ncols() == n && b.nrows() == n && b.ncols() == n);
    if n > 2000 {
        return Err(Error::Invariant(format!("dense oracle limited to 2000 unknowns, got {n}")));
    }
    let llt = b.llt(Side::Lower).map_err(|_| Error::NotSpd)?;
    let l = llt.L();
    let mut x = a.to_owned();
    faer::linalg::triangular_solve::solve_lower_triangular_in_place(l, x.as_mut(), Par::Seq);
    let mut c = x.transpose().to_owned();
    faer::linalg::triangular_solve::solve_lower_triangular_in_place(l, c.as_mut(), Par::Seq);
    let c = Mat::from_fn(n, n, |i, j| 0.5 * (c[(i, j)] + c[(j, i)]));
    c.self_adjoint_eigenvalues(Side::Lower).map_err(|e| Error::Factorization(format!("{e:?}")))
}
