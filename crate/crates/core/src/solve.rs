//! Newton iteration for the discrete root and the adaptive refinement loop.

use crate::assembly::{Discretization, Field, Source};
use crate::certify::{certify, res_h, Certificate, EigTolerances, LINEAR_RTOL};
use crate::cli::benchmark::Benchmark;
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::spectral::{Gmres, LinearSolve, SpdSolver};
use crate::sparse::dot;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub min_damping: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { tol: 1e-11, max_iter: 50, min_damping: 1.0 / 1024.0 }
    }
}

#[derive(Clone, Debug)]
pub struct NewtonState {
    pub x: Vec<f64>,
    pub residual: Vec<f64>,
    pub res_h: f64,
    /// Number of accepted updates.
    pub iterations: usize,
    pub damping: f64,
    /// Res_h before every update and at the end.
    pub history: Vec<f64>,
}

fn energy(disc: &Discretization, x: &[f64]) -> f64 {
    dot(x, &disc.a_nc.apply(x)).max(0.0).sqrt()
}

/// Newton's method on b(x) = 0 with the exact Jacobian D̂(x)ᵀ and halving
/// line search on Res_h. Once Res_h and the increment are both below
/// tol·(1 + |||x|||), full steps are taken while they halve Res_h.
pub fn newton_solve(disc: &Discretization, src: &Source, initial: Vec<f64>, opts: NewtonOptions) -> Result<NewtonState> {
    let a_nc = SpdSolver::new(&disc.a_nc)?;
    let load = disc.load_vector(src);
    let mut x = initial;
    let mut b = disc.residual_with_load(&x, &load);
    let mut r = res_h(&b, &a_nc);
    let mut history = vec![r];
    let mut damping = 1.0;
    let mut iterations = 0;
    loop {
        let scale = 1.0 + energy(disc, &x);
        if r == 0.0 {
            break;
        }
        if iterations >= opts.max_iter {
            return Err(Error::NewtonFailed(history));
        }
        let lin = disc.linearised_matrix(Field::Morley(&x));
        let gm = Gmres::new(Box::new(|v| lin.apply(v)), Box::new(|v| lin.apply_transpose(v)), &a_nc, LINEAR_RTOL);
        let delta = gm.solve(&b, true)?;
        let step = energy(disc, &delta);
        if r <= opts.tol * scale && step <= opts.tol * scale {
            // full steps continue down to the rounding floor
            let trial: Vec<f64> = x.iter().zip(&delta).map(|(a, d)| a - d).collect();
            let bt = disc.residual_with_load(&trial, &load);
            let rt = res_h(&bt, &a_nc);
            if rt > 0.5 * r {
                break;
            }
            x = trial;
            b = bt;
            r = rt;
            damping = 1.0;
            iterations += 1;
            history.push(r);
            continue;
        }
        let mut alpha = 1.0;
        loop {
            let trial: Vec<f64> = x.iter().zip(&delta).map(|(a, d)| a - alpha * d).collect();
            let bt = disc.residual_with_load(&trial, &load);
            let rt = res_h(&bt, &a_nc);
            // below the tolerance the merit is rounding noise, only the increment matters
            if rt < r || (r <= opts.tol * scale && rt <= opts.tol * scale) {
                x = trial;
                b = bt;
                r = rt;
                damping = alpha;
                break;
            }
            alpha *= 0.5;
            if alpha < opts.min_damping {
                history.push(rt);
                return Err(Error::NewtonFailed(history));
            }
        }
        iterations += 1;
        history.push(r);
    }
    Ok(NewtonState { x, residual: b, res_h: r, iterations, damping, history })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Strategy {
    Uniform,
    Adaptive,
    AdaptiveHmax,
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Uniform => "uniform",
            Strategy::Adaptive => "adaptive",
            Strategy::AdaptiveHmax => "adaptive-hmax",
        }
    }
}

/// Minimal set of triangles (largest indicators first) carrying θ of the total.
pub fn dorfler(eta2: &[f64], theta: f64) -> Vec<usize> {
    let total: f64 = eta2.iter().sum();
    let mut order: Vec<usize> = (0..eta2.len()).collect();
    order.sort_by(|&a, &b| eta2[b].total_cmp(&eta2[a]).then(a.cmp(&b)));
    let mut s = 0.0;
    let mut out = Vec::new();
    for t in order {
        if s >= theta * total && !out.is_empty() {
            break;
        }
        s += eta2[t];
        out.push(t);
    }
    out
}

/// Edges to bisect for an adaptive step.
pub fn mark(mesh: &Mesh, eta2: &[f64], strategy: Strategy, theta: f64) -> Vec<usize> {
    assert!(strategy != Strategy::Uniform, "uniform refinement has no marking step");
    let mut edges: Vec<usize> = dorfler(eta2, theta).into_iter().flat_map(|t| mesh.tri_edges[t]).collect();
    if strategy == Strategy::AdaptiveHmax {
        let h = mesh.h_max();
        for t in 0..mesh.num_triangles() {
            if mesh.diam[t] >= h * (1.0 - 1e-12) {
                edges.push(mesh.refinement_edge(t));
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();
    edges
}

#[derive(Clone, Debug)]
pub struct DriveOptions {
    pub strategy: Strategy,
    pub theta: f64,
    pub max_ndof: usize,
    pub tols: EigTolerances,
    pub newton: NewtonOptions,
}

impl Default for DriveOptions {
    fn default() -> Self {
        DriveOptions {
            strategy: Strategy::Uniform,
            theta: 0.5,
            max_ndof: 20_000,
            tols: EigTolerances::default(),
            newton: NewtonOptions::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Level {
    pub level: usize,
    pub ndof: usize,
    pub num_triangles: usize,
    pub h_max: f64,
    pub error: f64,
    pub eta: f64,
    pub newton_iterations: usize,
    pub newton_history: Vec<f64>,
    pub cert: Certificate,
}

impl Level {
    /// ρ_ex / error, NaN when unverified.
    pub fn efficiency(&self) -> f64 {
        if self.cert.verified {
            self.cert.rho_ex / self.error
        } else {
            f64::NAN
        }
    }
}

/// Morley interpolation of J x_old on a refinement of the old mesh.
pub fn prolongate(old: &Discretization, x_old: &[f64], new: &Discretization) -> Vec<f64> {
    let jv = old.smooth(x_old);
    let parent = &new.mesh.parent;
    let eval = |t: usize, p| old.hct.eval(&old.mesh, parent[t], &jv, p);
    new.morley.interpolate_pw(&new.mesh, |t, p| eval(t, p).0, |t, p| eval(t, p).1, 4)
}

/// solve, estimate, certify, mark, refine until the next mesh exceeds
/// `max_ndof`; `emit` sees every level as soon as it is finished.
pub fn drive(bench: &Benchmark, opts: &DriveOptions, emit: &mut dyn FnMut(&Level) -> Result<()>) -> Result<Vec<Level>> {
    let mut disc = Discretization::new(Mesh::build_initial(bench.domain));
    let mut x = vec![0.0; disc.ndof()];
    let mut out = Vec::new();
    for level in 0.. {
        let st = newton_solve(&disc, &bench.source, x, opts.newton)?;
        x = st.x;
        let eta2 = disc.estimator_eta(&x, &bench.source);
        let error = disc.error_energy(&x, &*bench.hessian, bench.error_quad);
        let mut cert = certify(&disc, &x, &bench.source, opts.tols)?;
        cert.metadata.push(("benchmark".into(), bench.name.clone()));
        cert.metadata.push(("strategy".into(), opts.strategy.name().into()));
        cert.metadata.push(("newton_tol".into(), format!("{:e}", opts.newton.tol)));
        cert.metadata.push(("newton_iterations".into(), st.iterations.to_string()));
        let lv = Level {
            level,
            ndof: disc.ndof(),
            num_triangles: disc.mesh.num_triangles(),
            h_max: disc.consts.h_max,
            error,
            eta: eta2.iter().sum::<f64>().sqrt(),
            newton_iterations: st.iterations,
            newton_history: st.history,
            cert,
        };
        emit(&lv)?;
        out.push(lv);

        let mesh = match opts.strategy {
            Strategy::Uniform => disc.mesh.refine_red(),
            s => disc.mesh.refine_nvb(&mark(&disc.mesh, &eta2, s, opts.theta))?,
        };
        let next = Discretization::new(mesh);
        if next.ndof() > opts.max_ndof {
            break;
        }
        x = prolongate(&disc, &x, &next);
        disc = next;
    }
    Ok(out)
}
