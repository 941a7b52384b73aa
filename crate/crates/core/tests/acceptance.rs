//! Acceptance suite: every criterion prints one PASS/FAIL line, the process
//! exits non-zero when any criterion fails.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};
use std::time::Instant;

use morleycert::assembly::{Discretization, Field};
use morleycert::certify::{beta_h, c_b1, certify, kappa_nc, EigTolerances};
use morleycert::cli::benchmark::Benchmark;
use morleycert::hct::operator_norm_j;
use morleycert::mesh::{Domain, Mesh, NONE};
use morleycert::morley::hess_dot;
use morleycert::pwpoly::{self, DiffOp};
use morleycert::report::{rate_of, RATE_WINDOW};
use morleycert::solve::{drive, DriveOptions, Level, Strategy};
use morleycert::sparse::{dot, norm2};
use morleycert::spectral::{dense_oracle, GeneralSolver, SpdSolver};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use faer::linalg::solvers::DenseSolveCore;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Problem {
    Square,
    LShape,
}

/// Largest mesh per run. Uniform runs reach about 2·10⁵ unknowns.
fn max_ndof(p: Problem, s: Strategy) -> usize {
    match (p, s) {
        (Problem::Square, Strategy::Uniform) => 300_000,
        (Problem::LShape, Strategy::Uniform) => 200_000,
        (Problem::Square, _) => 60_000,
        (Problem::LShape, _) => 60_000,
    }
}

fn history(p: Problem, s: Strategy) -> &'static [Level] {
    static RUNS: OnceLock<Mutex<HashMap<(Problem, Strategy), &'static [Level]>>> = OnceLock::new();
    let runs = RUNS.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(h) = runs.lock().unwrap().get(&(p, s)) {
        return h;
    }
    let bench = match p {
        Problem::Square => Benchmark::square_poly(1.0),
        Problem::LShape => Benchmark::lshape_grisvard(),
    };
    let opts = DriveOptions { strategy: s, max_ndof: max_ndof(p, s), ..DriveOptions::default() };
    let t = Instant::now();
    let levels = drive(&bench, &opts, &mut |l| {
        eprintln!(
            "    [{:?} {}] level {:>2} ndof {:>7} error {:.3e} beta0_hat {:.6} rho_ex {:.3e} ({:.0?})",
            p,
            s.name(),
            l.level,
            l.ndof,
            l.error,
            l.cert.beta0_hat,
            l.cert.rho_ex,
            t.elapsed()
        );
        Ok(())
    })
    .unwrap_or_else(|e| panic!("{p:?} {}: {e}", s.name()));
    let leaked: &'static [Level] = Box::leak(levels.into_boxed_slice());
    runs.lock().unwrap().insert((p, s), leaked);
    leaked
}

fn rate(levels: &[Level], f: impl Fn(&Level) -> f64) -> f64 {
    let nd: Vec<f64> = levels.iter().map(|l| l.ndof as f64).collect();
    let v: Vec<f64> = levels.iter().map(f).collect();
    rate_of(&nd, &v, RATE_WINDOW).unwrap_or(f64::NAN)
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

type Outcome = (bool, String);

fn random_vec(n: usize, seed: u64) -> Vec<f64> {
    let mut r = StdRng::seed_from_u64(seed);
    (0..n).map(|_| r.gen_range(-1.0..1.0)).collect()
}

fn criterion_1() -> Outcome {
    let mut worst = [0.0f64; 4];
    for (domain, k) in [(Domain::UnitSquare, 5), (Domain::LShape, 4)] {
        let mut m = Mesh::build_initial(domain);
        for _ in 0..k {
            m = m.refine_red();
        }
        let d = Discretization::new(m);
        assert!(d.ndof() <= 10_000);
        let mesh = &d.mesh;
        let w = random_vec(d.ndof(), 11);
        let jw = d.smooth(&w);

        // I J w = w
        let eval = |t: usize, p| d.hct.eval(mesh, t, &jw, p);
        let ijw = d.morley.interpolate_pw(mesh, |t, p| eval(t, p).0, |t, p| eval(t, p).1, 4);
        let e: f64 = ijw.iter().zip(&w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst[0] = worst[0].max(e / w.iter().fold(0.0f64, |a, b| a.max(b.abs())));

        // a_pw(Jw − w, ψ_k) = 0
        let hess = pwpoly::diffop(&d.hct.to_pwpoly(mesh, &jw), DiffOp::Hess);
        let mut ih = vec![[0.0; 3]; mesh.num_triangles()];
        for (c, comp) in [(0, 0), (1, 1), (2, 3)] {
            for piece in &hess[comp].pieces {
                ih[piece.tri][c] += piece.poly.integral();
            }
        }
        let mut g = vec![0.0; d.ndof()];
        for t in 0..mesh.num_triangles() {
            let l = &d.morley.local[t];
            let hw = l.hess(&d.morley.local_coeffs(t, &w));
            let diff = [ih[t][0] - mesh.area[t] * hw[0], ih[t][1] - mesh.area[t] * hw[1], ih[t][2] - mesh.area[t] * hw[2]];
            let (_, dofs) = d.morley.basis_on(mesh, t);
            for (j, &k) in dofs.iter().enumerate() {
                if k != NONE {
                    g[k] += hess_dot(&l.basis_hess(j), &diff);
                }
            }
        }
        let aw = d.a_nc.apply(&w);
        worst[1] = worst[1].max(norm2(&g) / norm2(&aw));

        // |||Jw|||² = |||w|||² + |||Jw − w|||²
        let jj = dot(&w, &d.a_j_apply(&w));
        let ww = dot(&w, &aw);
        let om = d.one_minus_j(&w);
        worst[2] = worst[2].max((jj - ww - om * om).abs() / jj);

        // C¹ continuity of Jw and clamped boundary values
        let mut jump = 0.0f64;
        let mut scale = 0.0f64;
        for e in &mesh.edges {
            let a = mesh.vertices[e.v[0]];
            let b = mesh.vertices[e.v[1]];
            for s in [0.1, 0.37, 0.5, 0.81] {
                let p = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
                let (v1, g1) = d.hct.eval(mesh, e.plus, &jw, p);
                let (v2, g2) = if e.boundary { (0.0, [0.0; 2]) } else { d.hct.eval(mesh, e.minus, &jw, p) };
                jump = jump.max((v1 - v2).abs()).max((g1[0] - g2[0]).abs()).max((g1[1] - g2[1]).abs());
                scale = scale.max(v1.abs()).max(g1[0].abs()).max(g1[1].abs());
            }
        }
        worst[3] = worst[3].max(jump / scale);
    }
    let ok = worst[0] <= 1e-12 && worst[1] <= 1e-10 && worst[2] <= 1e-10 && worst[3] <= 1e-10;
    (ok, format!("I∘J {:.1e}, orthogonality {:.1e}, Pythagoras {:.1e}, C¹ jumps {:.1e}", worst[0], worst[1], worst[2], worst[3]))
}

fn criterion_2() -> Outcome {
    let mut worst = 0.0f64;
    for (domain, k) in [(Domain::UnitSquare, 3), (Domain::LShape, 3)] {
        let mut m = Mesh::build_initial(domain);
        for _ in 0..k {
            m = m.refine_red();
        }
        let d = Discretization::new(m);
        for seed in 0..5 {
            let v = random_vec(d.ndof(), 100 + seed);
            let w = d.smooth(&random_vec(d.ndof(), 200 + seed));
            let phi = d.smooth(&random_vec(d.ndof(), 300 + seed));
            let ww = d.trilinear(Field::Morley(&v), Field::Hct(&w), &w);
            let a = d.trilinear(Field::Morley(&v), Field::Hct(&w), &phi);
            let b = d.trilinear(Field::Morley(&v), Field::Hct(&phi), &w);
            let scale = a.abs().max(b.abs());
            worst = worst.max(ww.abs() / scale).max((a + b).abs() / scale);
        }
    }
    (worst <= 1e-11, format!("max relative |Γ(v,w,w)|, |Γ(v,w,φ)+Γ(v,φ,w)| = {worst:.1e}"))
}

fn criterion_3() -> Outcome {
    let mut worst = [0.0f64; 4];
    let mut sizes = Vec::new();
    for (domain, k) in [(Domain::UnitSquare, 3), (Domain::LShape, 2)] {
        let mut m = Mesh::build_initial(domain);
        for _ in 0..k {
            m = m.refine_red();
        }
        let d = Discretization::new(m);
        let n = d.ndof();
        sizes.push(n);
        assert!(n <= 300);
        let a_nc = SpdSolver::new(&d.a_nc).unwrap();
        let (a, aj, bj) = d.gram_matrices();
        let a_j = SpdSolver::new(&aj).unwrap();
        let (a, aj, bj) = (a.to_dense(), aj.to_dense(), bj.to_dense());
        let rel = |x: f64, y: f64| (x - y).abs() / y.abs();

        let ev = dense_oracle(&aj, &a).unwrap();
        let (nj, _, _) = operator_norm_j(&d, &a_nc, 1e-10).unwrap();
        worst[0] = worst[0].max(rel(nj * nj, ev[n - 1]));

        let m = a.partial_piv_lu().inverse() - aj.partial_piv_lu().inverse();
        let ev = dense_oracle(&(&bj * &m * &bj), &bj).unwrap();
        let k = kappa_nc(&d, &a_nc, &a_j, 1e-10).unwrap();
        worst[1] = worst[1].max(rel(k.raw * k.raw, ev[n - 1]));

        let x: Vec<f64> = random_vec(n, 7).iter().map(|v| 2.0 * v).collect();
        let bg = d.gamma_gram(&x);
        let ev = dense_oracle(&bg.to_dense(), &a).unwrap();
        let c = c_b1(&d, &a_nc, &bg, 1e-10).unwrap().unwrap();
        worst[2] = worst[2].max(rel(c.raw * c.raw, ev[n - 1]));

        let jv = d.smooth(&x);
        let dh = d.linearised_matrix(Field::Hct(&jv)).to_matrix();
        let dd = dh.to_dense();
        let s = &dd * a.partial_piv_lu().inverse() * dd.transpose();
        let ev = dense_oracle(&s, &a).unwrap();
        let b = beta_h(&d, &GeneralSolver::new(&dh).unwrap(), 1e-10).unwrap();
        worst[3] = worst[3].max(rel(b.raw * b.raw, ev[0]));
    }
    let ok = worst.iter().all(|w| *w <= 1e-8);
    (
        ok,
        format!(
            "N = {sizes:?}: relative errors β̂_h {:.1e}, κ_nc {:.1e}, C_b1 {:.1e}, ‖J‖ {:.1e}",
            worst[3], worst[1], worst[2], worst[0]
        ),
    )
}

fn criterion_4() -> Outcome {
    let d = Discretization::new(Mesh::build_initial(Domain::UnitSquare));
    let src = Benchmark::square_poly(1.0).source;
    let cert = certify(&d, &vec![0.0; d.ndof()], &src, EigTolerances::default()).unwrap();
    let b = cert.beta_h.raw;
    (within(b, 1.0, 1e-8), format!("β̂_h = {b:.12} on the initial mesh with the zero state"))
}

fn criterion_5() -> Outcome {
    let h = history(Problem::Square, Strategy::Uniform);
    let first = h.iter().position(|l| l.cert.kappa * l.cert.norm_m < l.cert.beta_h.safe);
    let Some(first) = first else { return (false, "inf-sup transfer never succeeds".into()) };
    let all_verified = h[first..].iter().all(|l| l.cert.verified);
    let last = h.last().unwrap();
    // trend excludes the zero state on the initial mesh
    let tail = &h[1.max(first)..];
    let mono = tail.windows(2).all(|w| {
        w[1].cert.beta0_hat >= w[0].cert.beta0_hat && w[1].cert.beta0 >= w[0].cert.beta0 && w[1].cert.rho_ex <= w[0].cert.rho_ex
    });
    let ok = all_verified && last.cert.beta0_hat >= 0.995 && last.cert.rho_ex <= 0.01 && mono && last.ndof >= 150_000;
    (
        ok,
        format!(
            "verified from level {first} on: {all_verified}; finest ndof {} β̂₀ {:.7} β₀ {:.7} ρ_ex {:.7}; monotone trend: {mono}",
            last.ndof, last.cert.beta0_hat, last.cert.beta0, last.cert.rho_ex
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for s in [Strategy::Uniform, Strategy::Adaptive, Strategy::AdaptiveHmax] {
        let h = history(Problem::Square, s);
        let re = rate(h, |l| l.error);
        let rt = rate(h, |l| l.eta);
        let ef: Vec<f64> = h[h.len() - 2..].iter().map(Level::efficiency).collect();
        let good = h.len() >= 5 && within(re, 0.5, 0.1) && within(rt, 0.5, 0.1) && ef.iter().all(|e| (5.0..=15.0).contains(e));
        ok &= good;
        parts.push(format!("{} ({} levels): error {re:.3} eta {rt:.3} EF {:.2}/{:.2}", s.name(), h.len(), ef[0], ef[1]));
    }
    (ok, parts.join("; "))
}

fn criterion_7() -> Outcome {
    let ru = rate(history(Problem::Square, Strategy::Uniform), |l| l.cert.kappa);
    let rh = rate(history(Problem::Square, Strategy::AdaptiveHmax), |l| l.cert.kappa);
    let ra = rate(history(Problem::Square, Strategy::Adaptive), |l| l.cert.kappa);
    let ok = within(ru, 0.5, 0.1) && within(rh, 0.5, 0.1) && within(ra, 0.3, 0.1);
    (ok, format!("κ rates: uniform {ru:.3}, adaptive-hmax {rh:.3}, adaptive {ra:.3}"))
}

fn criterion_8() -> Outcome {
    let sigma = morleycert::cli::benchmark::GRISVARD_Z;
    let hu = history(Problem::LShape, Strategy::Uniform);
    let ha = history(Problem::LShape, Strategy::Adaptive);
    let hh = history(Problem::LShape, Strategy::AdaptiveHmax);
    let eu = rate(hu, |l| l.error);
    let ea = rate(ha, |l| l.error);
    let ku = rate(hu, |l| l.cert.kappa);
    let b0 = hh.last().unwrap().cert.beta0_hat;
    let ok = within(eu, 0.27, 0.07) && within(ea, 0.5, 0.1) && within(ku, sigma / 2.0, 0.07) && b0 >= 0.90 && hu.last().unwrap().ndof >= 150_000;
    (
        ok,
        format!(
            "uniform error {eu:.3} (ndof {}), adaptive error {ea:.3}, uniform κ {ku:.3} vs σ/2 = {:.3}, adaptive-hmax β̂₀ {b0:.6} (ndof {})",
            hu.last().unwrap().ndof,
            sigma / 2.0,
            hh.last().unwrap().ndof
        ),
    )
}

fn labelled_levels() -> Vec<(Problem, Strategy, &'static Level)> {
    let mut v = Vec::new();
    for p in [Problem::Square, Problem::LShape] {
        for s in [Strategy::Uniform, Strategy::Adaptive, Strategy::AdaptiveHmax] {
            v.extend(history(p, s).iter().map(|l| (p, s, l)));
        }
    }
    v
}

fn all_levels() -> Vec<&'static Level> {
    labelled_levels().into_iter().map(|(_, _, l)| l).collect()
}

fn criterion_9() -> Outcome {
    let levels = labelled_levels();
    let (p, s, l) = *levels.iter().max_by(|a, b| a.2.cert.res_h.total_cmp(&b.2.cert.res_h)).unwrap();
    let worst = l.cert.res_h;
    let iters = levels.iter().map(|x| x.2.newton_iterations).max().unwrap_or(0);
    (
        worst <= 1e-10,
        format!("max Res_h {worst:.2e} ({p:?} {} ndof {}) over {} levels, at most {iters} Newton steps", s.name(), l.ndof, levels.len()),
    )
}

fn criterion_10() -> Outcome {
    let levels = all_levels();
    let mut worst = 0.0f64;
    let mut n = 0;
    let mut invariants = true;
    for l in &levels {
        invariants &= l.cert.check_invariants().is_ok();
        if l.cert.verified {
            let (a, b) = l.cert.algebra_defects();
            worst = worst.max(a).max(b);
            n += 1;
        }
    }
    (worst <= 1e-12 && invariants && n > 0, format!("{n} verified certificates, max relative defect {worst:.1e}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("operator identities", criterion_1),
        ("trilinear antisymmetry", criterion_2),
        ("dense oracle equivalence", criterion_3),
        ("degenerate certificate", criterion_4),
        ("square verification", criterion_5),
        ("square rates", criterion_6),
        ("kappa rates", criterion_7),
        ("L-shape benchmark", criterion_8),
        ("Newton residual", criterion_9),
        ("certificate algebra", criterion_10),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if only.is_some_and(|k| k != i + 1) {
            continue;
        }
        let t = Instant::now();
        let (ok, detail) = f();
        println!("criterion {:>2} {:<26} {} ({:.0?}) {detail}", i + 1, name, if ok { "PASS" } else { "FAIL" }, t.elapsed());
        failed += usize::from(!ok);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
