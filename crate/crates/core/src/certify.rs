//! Constants of the Newton-Kantorovich verification and the resulting certificate.

use std::fmt::Write as _;
use std::hash::{DefaultHasher, Hash, Hasher};

use crate::assembly::{Discretization, Field, Source};
use crate::error::{Error, Result};
use crate::hct::operator_norm_j;
use crate::mesh::MeshConstants;
use crate::spectral::{extreme_eig, Gmres, LinearSolve, Pencil, SpdSolver, Which};
use crate::sparse::{dot, Csc};

/// Tolerances of the eigenvalue iterations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigTolerances {
    pub tol: f64,
    pub tol_j: f64,
}

impl Default for EigTolerances {
    fn default() -> Self {
        EigTolerances { tol: 1e-10, tol_j: 1e-2 }
    }
}

/// An eigenvalue-derived bound: raw iterate, safety-adjusted value, and
/// the number of operator applications.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Bound {
    pub raw: f64,
    pub safe: f64,
    pub iterations: usize,
}

/// Res_h = sqrt(bᵀ A_nc⁻¹ b)
pub fn res_h(b: &[f64], a_nc: &SpdSolver) -> f64 {
    if b.is_empty() {
        return 0.0;
    }
    let r = dot(b, &a_nc.solve(b));
    if r < 0.0 && r >= -1e-14 * dot(b, b).max(1.0) {
        return 0.0;
    }
    r.max(0.0).sqrt()
}

/// κ_nc(T,1) = sqrt(λ_max) of (A_nc⁻¹ − A_J⁻¹) B_J in the B_J inner product.
pub fn kappa_nc(disc: &Discretization, a_nc: &SpdSolver, a_j: &SpdSolver, tol: f64) -> Result<Bound> {
    let p = Pencil::new(
        disc.ndof(),
        Box::new(|x| {
            let bx = disc.b_j_apply(x);
            let u = a_nc.solve(&bx);
            let w = a_j.solve(&bx);
            Ok(u.iter().zip(&w).map(|(a, b)| a - b).collect())
        }),
        Box::new(|x| Ok(disc.b_j_apply(x))),
        Which::Largest,
        tol,
    );
    let r = extreme_eig(&p)?;
    let bx = disc.b_j_apply(&r.vector);
    let scale = dot(&bx, &a_nc.solve(&bx)) / dot(&r.vector, &bx);
    let lambda = if r.value < 0.0 {
        if r.value < -1e-12 * scale {
            return Err(Error::Indefinite(r.value));
        }
        0.0
    } else {
        r.value
    };
    Ok(Bound { raw: lambda.sqrt(), safe: (lambda * (1.0 + tol)).sqrt(), iterations: r.iterations })
}

/// κ(T,1) = sqrt(h_max² κ₁² ‖J‖² + κ_nc²)
pub fn kappa(c: &MeshConstants, norm_j: f64, kappa_nc: f64) -> f64 {
    (c.h_max * c.h_max * c.kappa1 * c.kappa1 * norm_j * norm_j + kappa_nc * kappa_nc).sqrt()
}

/// C_b1 = sqrt(μ_max) of B_γ x = μ A_nc x; `None` when B_γ vanishes.
pub fn c_b1(disc: &Discretization, a_nc: &SpdSolver, b_gamma: &Csc, tol: f64) -> Result<Option<Bound>> {
    if b_gamma.max_abs() == 0.0 {
        return Ok(None);
    }
    let p = Pencil::new(
        disc.ndof(),
        Box::new(|x| Ok(a_nc.solve(&b_gamma.apply(x)))),
        Box::new(|x| Ok(disc.a_nc.apply(x))),
        Which::Largest,
        tol,
    );
    let r = extreme_eig(&p)?;
    let mu = r.value.max(0.0);
    Ok(Some(Bound { raw: mu.sqrt(), safe: (mu * (1.0 + tol)).sqrt(), iterations: r.iterations }))
}

/// β̂_h = sqrt(λ_min) of D̂ A_nc⁻¹ D̂ᵀ x = λ A_nc x, computed as 1/sqrt(μ_max)
/// of D̂⁻ᵀ A_nc D̂⁻¹ A_nc in the A_nc inner product.
pub fn beta_h(disc: &Discretization, d_hat: &dyn LinearSolve, tol: f64) -> Result<Bound> {
    let p = Pencil::new(
        disc.ndof(),
        Box::new(|x| {
            let y = d_hat.solve(&disc.a_nc.apply(x), false)?;
            d_hat.solve(&disc.a_nc.apply(&y), true)
        }),
        Box::new(|x| Ok(disc.a_nc.apply(x))),
        Which::Largest,
        tol,
    );
    let r = extreme_eig(&p)?;
    if !(r.value > 0.0) {
        return Err(Error::Indefinite(r.value));
    }
    Ok(Bound { raw: 1.0 / r.value.sqrt(), safe: ((1.0 - tol) / r.value).sqrt(), iterations: r.iterations })
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TwoByTwo(pub [[f64; 2]; 2]);

impl TwoByTwo {
    /// Largest singular value in closed form.
    pub fn norm2(&self) -> f64 {
        let [[a, b], [c, d]] = self.0;
        let s = a * a + b * b + c * c + d * d;
        let det = a * d - b * c;
        ((s + (s * s - 4.0 * det * det).max(0.0).sqrt()) / 2.0).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InfSupTransfer {
    pub c_t: f64,
    pub m: TwoByTwo,
    pub n: TwoByTwo,
    pub norm_m: f64,
    pub norm_n: f64,
    /// β̂₀, `None` when κ‖M‖₂ ≥ β̂_h.
    pub beta0_hat: Option<f64>,
}

pub fn beta0_hat(beta_h: f64, kappa: f64, c_b1: f64, c_b2: f64, c_b3: f64, norm_j: f64) -> InfSupTransfer {
    let c_t = kappa * c_b2 + c_b3 * norm_j;
    let m = TwoByTwo([[(1.0 + c_t) * c_b1, c_t * c_b2], [beta_h * c_b1, beta_h * c_b2]]);
    let n = TwoByTwo([[1.0, c_t], [0.0, beta_h]]);
    let norm_m = m.norm2();
    let norm_n = n.norm2();
    let beta0_hat = (kappa * norm_m < beta_h).then(|| (beta_h - kappa * norm_m) / norm_n);
    InfSupTransfer { c_t, m, n, norm_m, norm_n, beta0_hat }
}

/// μ̂ = Res_h + (1 + L_G)|||(1−J)v||| + ‖J‖ μ_res
pub fn mu_hat(res_h: f64, l_g: f64, one_minus_j: f64, norm_j: f64, mu_res: f64) -> f64 {
    res_h + (1.0 + l_g) * one_minus_j + norm_j * mu_res
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Kantorovich {
    pub verified: bool,
    pub beta0: f64,
    pub rho_ex: f64,
    pub rho_uq: f64,
}

pub fn newton_kantorovich(beta0_hat: f64, l: f64, mu_hat: f64, one_minus_j: f64) -> Kantorovich {
    let disc = beta0_hat * beta0_hat - 2.0 * l * mu_hat;
    if !(disc > 0.0) || beta0_hat <= 0.0 {
        return Kantorovich { verified: false, beta0: f64::NAN, rho_ex: f64::NAN, rho_uq: f64::NAN };
    }
    let beta0 = disc.sqrt();
    // smaller root in cancellation-free form
    let r_minus = 2.0 * mu_hat / (beta0_hat + beta0);
    let r_plus = (beta0_hat + beta0) / l;
    Kantorovich { verified: true, beta0, rho_ex: r_minus + one_minus_j, rho_uq: r_plus - one_minus_j }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Certificate {
    pub mesh_id: String,
    pub ndof: usize,
    pub h_max: f64,
    pub v_hash: String,
    pub res_h: f64,
    pub beta_h: Bound,
    pub kappa_nc: Bound,
    pub kappa: f64,
    pub norm_j: Bound,
    pub c_b1: Bound,
    /// B_γ = 0, C_b1 set to 0 by convention.
    pub c_b1_degenerate: bool,
    pub c_b2: f64,
    pub c_b3: f64,
    pub c_t: f64,
    pub norm_m: f64,
    pub norm_n: f64,
    pub beta0_hat: f64,
    pub l: f64,
    pub l_g: f64,
    pub mu_res: f64,
    pub mu_hat: f64,
    pub one_minus_j: f64,
    pub verified: bool,
    pub rho_ex: f64,
    pub rho_uq: f64,
    pub beta0: f64,
    pub failure: Option<String>,
    pub notes: Vec<String>,
    pub metadata: Vec<(String, String)>,
}

fn hash_vector(x: &[f64]) -> String {
    let mut h = DefaultHasher::new();
    for v in x {
        v.to_bits().hash(&mut h);
    }
    format!("{:016x}", h.finish())
}

fn fmt_f(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:.16e}")
    }
}

impl Certificate {
    /// Key-value document with a fixed key order.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("mesh_id", self.mesh_id.clone());
        kv("ndof", self.ndof.to_string());
        kv("h_max", fmt_f(self.h_max));
        kv("v_hash", self.v_hash.clone());
        kv("Res_h", fmt_f(self.res_h));
        for (name, b) in [("beta_h", &self.beta_h), ("kappa_nc", &self.kappa_nc), ("normJ", &self.norm_j), ("Cb1", &self.c_b1)] {
            kv(&format!("{name}.raw"), fmt_f(b.raw));
            kv(&format!("{name}"), fmt_f(b.safe));
            kv(&format!("{name}.iterations"), b.iterations.to_string());
        }
        kv("Cb1.degenerate", self.c_b1_degenerate.to_string());
        kv("kappa", fmt_f(self.kappa));
        kv("Cb2", fmt_f(self.c_b2));
        kv("Cb3", fmt_f(self.c_b3));
        kv("C_T", fmt_f(self.c_t));
        kv("norm_M", fmt_f(self.norm_m));
        kv("norm_N", fmt_f(self.norm_n));
        kv("beta0_hat", fmt_f(self.beta0_hat));
        kv("L", fmt_f(self.l));
        kv("L_G", fmt_f(self.l_g));
        kv("mu_res", fmt_f(self.mu_res));
        kv("mu_hat", fmt_f(self.mu_hat));
        kv("one_minus_J", fmt_f(self.one_minus_j));
        kv("verified", self.verified.to_string());
        kv("rho_ex", fmt_f(self.rho_ex));
        kv("rho_uq", fmt_f(self.rho_uq));
        kv("beta0", fmt_f(self.beta0));
        kv("failure", self.failure.clone().unwrap_or_else(|| "none".into()));
        kv("notes", if self.notes.is_empty() { "none".into() } else { self.notes.join("; ") });
        for (k, v) in &self.metadata {
            kv(&format!("meta.{k}"), v.clone());
        }
        s
    }

    /// Relative defects of β₀² + 2Lμ̂ = β̂₀² and of the two quadratic roots.
    pub fn algebra_defects(&self) -> (f64, f64) {
        let b2 = self.beta0_hat * self.beta0_hat;
        let d1 = (self.beta0 * self.beta0 + 2.0 * self.l * self.mu_hat - b2).abs() / b2;
        let q = |r: f64| (0.5 * self.l * r * r - self.beta0_hat * r + self.mu_hat).abs();
        let r_minus = self.rho_ex - self.one_minus_j;
        let r_plus = self.rho_uq + self.one_minus_j;
        // scale by the size of the individual terms
        let scale = |r: f64| (0.5 * self.l * r * r).max(self.beta0_hat * r).max(self.mu_hat).max(b2);
        let d2 = (q(r_minus) / scale(r_minus)).max(q(r_plus) / scale(r_plus));
        (d1, d2)
    }

    pub fn check_invariants(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Invariant(m));
        if self.verified {
            if !(self.kappa * self.norm_m < self.beta_h.safe) {
                return fail("verified but κ‖M‖ ≥ β̂_h".into());
            }
            if !(2.0 * self.l * self.mu_hat < self.beta0_hat * self.beta0_hat) {
                return fail("verified but 2Lμ̂ ≥ β̂₀²".into());
            }
            let slack = 1e-12 * self.beta_h.safe;
            if !(self.beta0 <= self.beta0_hat + slack && self.beta0_hat <= self.beta_h.safe / self.norm_n + slack) {
                return fail("β₀ ≤ β̂₀ ≤ β̂_h/‖N‖ violated".into());
            }
            if self.rho_uq > 0.0 && self.rho_ex > self.rho_uq {
                return fail("ρ_ex > ρ_uq".into());
            }
            let (d1, d2) = self.algebra_defects();
            if d1 > 1e-12 || d2 > 1e-12 {
                return fail(format!("certificate algebra defects {d1:e} {d2:e}"));
            }
        }
        let nonneg = [self.res_h, self.kappa, self.c_b2, self.c_b3, self.l_g, self.mu_res, self.mu_hat, self.one_minus_j];
        if nonneg.iter().any(|v| !(*v >= 0.0)) {
            return fail("negative or non-finite constant".into());
        }
        Ok(())
    }
}

/// Relative dual-norm residual of the inner linear solves.
pub const LINEAR_RTOL: f64 = 1e-13;

/// Every constant for the state x and the verdict.
pub fn certify(disc: &Discretization, x: &[f64], src: &Source, tols: EigTolerances) -> Result<Certificate> {
    let mesh = &disc.mesh;
    let a_nc = SpdSolver::new(&disc.a_nc)?;
    let mut cert = Certificate {
        mesh_id: format!("gen{}-t{}", mesh.generation, mesh.num_triangles()),
        ndof: disc.ndof(),
        h_max: disc.consts.h_max,
        v_hash: hash_vector(x),
        l: crate::assembly::lipschitz_l(disc.consts.area),
        ..Default::default()
    };
    cert.metadata.push(("tol_eig".into(), format!("{:e}", tols.tol)));
    cert.metadata.push(("tol_eig_J".into(), format!("{:e}", tols.tol_j)));
    cert.metadata.push(("quadrature".into(), src.quad.describe()));
    cert.metadata.push(("right_isosceles_constants".into(), disc.consts.right_isosceles.to_string()));

    cert.res_h = res_h(&disc.nonlinear_residual(x, src), &a_nc);
    let (nj_raw, nj_safe, nj) = operator_norm_j(disc, &a_nc, tols.tol_j)?;
    cert.norm_j = Bound { raw: nj_raw, safe: nj_safe, iterations: nj.iterations };
    let a_j = SpdSolver::new(&disc.a_j_matrix())?;
    cert.kappa_nc = kappa_nc(disc, &a_nc, &a_j, tols.tol)?;
    drop(a_j);
    cert.kappa = kappa(&disc.consts, cert.norm_j.safe, cert.kappa_nc.safe);

    let bg = disc.gamma_gram(x);
    match c_b1(disc, &a_nc, &bg, tols.tol)? {
        Some(b) => cert.c_b1 = b,
        None => {
            cert.c_b1_degenerate = true;
            cert.notes.push("B_gamma = 0, C_b1 = 0 by convention".into());
        }
    }
    let ec = disc.explicit_constants(x);
    cert.c_b2 = ec.c_b2;
    cert.c_b3 = ec.c_b3;
    cert.l_g = ec.l_g;
    cert.mu_res = disc.mu_res(x, src)?;
    cert.one_minus_j = disc.one_minus_j(x);
    cert.mu_hat = mu_hat(cert.res_h, cert.l_g, cert.one_minus_j, cert.norm_j.safe, cert.mu_res);

    let jv = disc.smooth(x);
    let lin = disc.linearised_matrix(Field::Hct(&jv));
    let gm = Gmres::new(Box::new(|v| lin.apply(v)), Box::new(|v| lin.apply_transpose(v)), &a_nc, LINEAR_RTOL);
    let beta = beta_h(disc, &gm, tols.tol);
    match beta {
        Ok(b) => cert.beta_h = b,
        Err(Error::SingularPivot(_)) | Err(Error::LinearSolverStalled(..)) | Err(Error::Indefinite(_)) => {
            cert.failure = Some("discrete linearisation singular".into());
            cert.beta0_hat = f64::NAN;
            cert.beta0 = f64::NAN;
            cert.rho_ex = f64::NAN;
            cert.rho_uq = f64::NAN;
            cert.check_invariants()?;
            return Ok(cert);
        }
        Err(e) => return Err(e),
    }

    let tr = beta0_hat(cert.beta_h.safe, cert.kappa, cert.c_b1.safe, cert.c_b2, cert.c_b3, cert.norm_j.safe);
    cert.c_t = tr.c_t;
    cert.norm_m = tr.norm_m;
    cert.norm_n = tr.norm_n;
    match tr.beta0_hat {
        None => {
            cert.beta0_hat = f64::NAN;
            cert.beta0 = f64::NAN;
            cert.rho_ex = f64::NAN;
            cert.rho_uq = f64::NAN;
            cert.failure = Some("inf-sup transfer failed".into());
        }
        Some(b0) => {
            cert.beta0_hat = b0;
            let nk = newton_kantorovich(b0, cert.l, cert.mu_hat, cert.one_minus_j);
            cert.verified = nk.verified;
            cert.beta0 = nk.beta0;
            cert.rho_ex = nk.rho_ex;
            cert.rho_uq = nk.rho_uq;
            if !nk.verified {
                cert.failure = Some("2 L mu_hat >= beta0_hat^2".into());
            } else if nk.rho_uq <= 0.0 {
                cert.notes.push("uniqueness statement empty (rho_uq <= 0)".into());
            }
        }
    }
    cert.check_invariants()?;
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{Domain, Mesh};
    use crate::spectral::{dense_oracle, GeneralSolver};
    use faer::linalg::solvers::DenseSolveCore;
    use faer::Mat;
    use proptest::prelude::*;

    fn state(n: usize, scale: f64) -> Vec<f64> {
        (0..n).map(|i| scale * ((i as f64 * 0.7311).sin() + 0.3)).collect()
    }

    fn small_discretizations() -> Vec<Discretization> {
        vec![
            Discretization::new(Mesh::build_initial(Domain::UnitSquare).refine_red().refine_red()),
            Discretization::new(Mesh::build_initial(Domain::LShape).refine_red().refine_red()),
        ]
    }

    #[test]
    fn eigen_constants_match_dense_oracle() {
        for d in small_discretizations() {
            let n = d.ndof();
            assert!(n <= 300);
            let a_nc = SpdSolver::new(&d.a_nc).unwrap();
            let (a, aj, bj) = d.gram_matrices();
            let (a, aj, bj) = (a.to_dense(), aj.to_dense(), bj.to_dense());

            let ev = dense_oracle(&aj, &a).unwrap();
            let (nj, _, _) = operator_norm_j(&d, &a_nc, 1e-10).unwrap();
            assert!((nj * nj - ev[n - 1]).abs() < 1e-8 * ev[n - 1], "{} {}", nj * nj, ev[n - 1]);
            assert!(ev[0] > 1.0 - 1e-10);

            let m = a.partial_piv_lu().inverse() - aj.partial_piv_lu().inverse();
            let ev = dense_oracle(&(&bj * &m * &bj), &bj).unwrap();
            let k = kappa_nc(&d, &a_nc, &SpdSolver::new(&d.gram_matrices().1).unwrap(), 1e-10).unwrap();
            assert!((k.raw * k.raw - ev[n - 1]).abs() < 1e-7 * ev[n - 1], "{} {}", k.raw * k.raw, ev[n - 1]);
            assert!(k.safe >= k.raw);

            let x = state(n, 5.0);
            let bg = d.gamma_gram(&x);
            let ev = dense_oracle(&bg.to_dense(), &a).unwrap();
            let c = c_b1(&d, &a_nc, &bg, 1e-10).unwrap().unwrap();
            assert!((c.raw * c.raw - ev[n - 1]).abs() < 1e-8 * ev[n - 1]);

            let jv = d.smooth(&x);
            let dh = d.linearised_matrix(Field::Hct(&jv)).to_matrix();
            let dd = dh.to_dense();
            let s = &dd * a.partial_piv_lu().inverse() * dd.transpose();
            let ev = dense_oracle(&s, &a).unwrap();
            let b = beta_h(&d, &GeneralSolver::new(&dh).unwrap(), 1e-10).unwrap();
            assert!((b.raw * b.raw - ev[0]).abs() < 1e-7 * ev[0], "{} {}", b.raw * b.raw, ev[0]);
            assert!(b.safe <= b.raw);
        }
    }

    #[test]
    fn res_h_is_dual_norm() {
        let d = small_discretizations().remove(0);
        let a_nc = SpdSolver::new(&d.a_nc).unwrap();
        let b = state(d.ndof(), 1.0);
        let ainv = d.a_nc.to_dense().partial_piv_lu().inverse();
        let bv = Mat::from_fn(d.ndof(), 1, |i, _| b[i]);
        let r = (bv.transpose() * &ainv * &bv)[(0, 0)].sqrt();
        assert!((res_h(&b, &a_nc) - r).abs() < 1e-12 * r);
        assert_eq!(res_h(&vec![0.0; d.ndof()], &a_nc), 0.0);
    }

    #[test]
    fn certify_zero_state_zero_source() {
        let d = small_discretizations().remove(1);
        let cert = certify(&d, &vec![0.0; d.ndof()], &Source::zero(), EigTolerances::default()).unwrap();
        assert!(cert.verified);
        assert!(cert.c_b1_degenerate);
        assert_eq!(cert.res_h, 0.0);
        assert_eq!(cert.mu_hat, 0.0);
        assert_eq!(cert.rho_ex, 0.0);
        // D̂ = A_nc for v = 0
        assert!((cert.beta_h.raw - 1.0).abs() < 1e-8);
        let text = cert.to_text();
        assert!(text.starts_with("mesh_id = "));
        assert!(text.contains("verified = true"));
    }

    #[test]
    fn certify_invariants_for_small_state() {
        let d = small_discretizations().remove(0);
        let x = state(d.ndof(), 1e-3);
        let cert = certify(&d, &x, &Source::constant(1.0), EigTolerances::default()).unwrap();
        cert.check_invariants().unwrap();
        if cert.verified {
            let (d1, d2) = cert.algebra_defects();
            assert!(d1 < 1e-12 && d2 < 1e-12);
            assert!(cert.rho_ex <= cert.rho_uq);
        }
    }

    #[test]
    fn two_by_two_norms() {
        assert!((TwoByTwo([[1.0, 0.0], [0.0, 0.5]]).norm2() - 1.0).abs() < 1e-15);
        // [[1, 1], [0, 1]]: golden ratio
        let g = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((TwoByTwo([[1.0, 1.0], [0.0, 1.0]]).norm2() - g).abs() < 1e-15);
        assert_eq!(TwoByTwo::default().norm2(), 0.0);
    }

    #[test]
    fn decoupled_transfer() {
        let t = beta0_hat(0.8, 0.1, 0.0, 0.0, 0.0, 1.3);
        assert_eq!(t.norm_m, 0.0);
        assert!((t.beta0_hat.unwrap() - 0.8).abs() < 1e-15);
        let t = beta0_hat(1.0, 0.1, 0.2, 0.0, 0.0, 1.0);
        assert!((t.norm_n - 1.0).abs() < 1e-15);
        assert!((t.beta0_hat.unwrap() - (1.0 - 0.1 * t.norm_m)).abs() < 1e-15);
        assert!(beta0_hat(0.1, 1.0, 1.0, 1.0, 1.0, 1.0).beta0_hat.is_none());
    }

    #[test]
    fn kantorovich_zero_residual() {
        let k = newton_kantorovich(0.9, 0.2, 0.0, 0.01);
        assert!(k.verified);
        assert_eq!(k.beta0, 0.9);
        assert!((k.rho_ex - 0.01).abs() < 1e-15);
        assert!((k.rho_uq - (2.0 * 0.9 / 0.2 - 0.01)).abs() < 1e-13);
        assert!(!newton_kantorovich(0.1, 1.0, 1.0, 0.0).verified);
        assert_eq!(mu_hat(0.0, 0.0, 0.3, 2.0, 0.0), 0.3);
        assert_eq!(mu_hat(0.0, 0.0, 0.0, 0.0, 0.0), 0.0);
    }

    proptest! {
        #[test]
        fn kantorovich_monotone(b in 0.1f64..2.0, l in 0.05f64..1.0, mu in 0.0f64..0.01, d in 0.0f64..0.01, omj in 0.0f64..0.01) {
            let a = newton_kantorovich(b, l, mu, omj);
            let c = newton_kantorovich(b, l, mu + d, omj);
            prop_assume!(a.verified && c.verified);
            prop_assert!(c.rho_ex >= a.rho_ex - 1e-15);
            prop_assert!(c.rho_uq <= a.rho_uq + 1e-15);
            prop_assert!(c.beta0 <= a.beta0 + 1e-15);
            let rel = (a.beta0 * a.beta0 + 2.0 * l * mu - b * b).abs() / (b * b);
            prop_assert!(rel < 1e-12);
        }

        #[test]
        fn kappa_monotone(nj in 1.0f64..3.0, knc in 0.0f64..1.0, d in 0.0f64..0.5) {
            let c = MeshConstants { h_max: 0.1, c_p: 0.2, c_tr1: 0.5, kappa1: 0.1653, kappa2: 0.0451, area: 1.0, right_isosceles: true };
            let k = kappa(&c, nj, knc);
            prop_assert!(kappa(&c, nj + d, knc) >= k);
            prop_assert!(kappa(&c, nj, knc + d) >= k);
        }

        #[test]
        fn mu_hat_monotone(r in 0.0f64..1.0, lg in 0.0f64..5.0, o in 0.0f64..1.0, j in 1.0f64..3.0, m in 0.0f64..1.0, d in 0.0f64..1.0) {
            let base = mu_hat(r, lg, o, j, m);
            for v in [mu_hat(r + d, lg, o, j, m), mu_hat(r, lg + d, o, j, m), mu_hat(r, lg, o + d, j, m), mu_hat(r, lg, o, j + d, m), mu_hat(r, lg, o, j, m + d)] {
                prop_assert!(v >= base);
            }
        }
    }
}
