//! Benchmark definitions and the command-line driver.

pub mod benchmark;

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};

use crate::certify::EigTolerances;
use crate::error::Result;
use crate::report::{self, History, COLUMNS, RATE_WINDOW};
use crate::solve::{drive, DriveOptions, Level, NewtonOptions, Strategy};
use benchmark::Benchmark;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BenchmarkKind {
    SquarePoly,
    LshapeGrisvard,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Refine {
    Uniform,
    Adaptive,
    AdaptiveHmax,
}

impl From<Refine> for Strategy {
    fn from(r: Refine) -> Strategy {
        match r {
            Refine::Uniform => Strategy::Uniform,
            Refine::Adaptive => Strategy::Adaptive,
            Refine::AdaptiveHmax => Strategy::AdaptiveHmax,
        }
    }
}

/// Solve a benchmark on a sequence of meshes and certify every discrete solution.
#[derive(Clone, Debug, Parser)]
#[command(name = "morleycert", version)]
pub struct Config {
    #[arg(long, value_enum, default_value = "square-poly")]
    pub benchmark: BenchmarkKind,
    /// Scaling of the square solution (ignored for the L-shape).
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, value_enum, default_value = "uniform")]
    pub refine: Refine,
    /// Dörfler bulk parameter.
    #[arg(long, default_value_t = 0.5)]
    pub theta: f64,
    /// Stop before the first mesh with more unknowns.
    #[arg(long, default_value_t = 20_000)]
    pub max_ndof: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol_eig: f64,
    /// Tolerance of the ‖J‖ eigenvalue iteration.
    #[arg(long = "tol-eig-J", default_value_t = 1e-2)]
    pub tol_eig_j: f64,
    /// Output directory for levels.csv, certificates and rates.txt.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Suppress per-level progress lines.
    #[arg(long)]
    pub quiet: bool,
}

impl Config {
    pub fn benchmark(&self) -> Benchmark {
        match self.benchmark {
            BenchmarkKind::SquarePoly => Benchmark::square_poly(self.lambda),
            BenchmarkKind::LshapeGrisvard => Benchmark::lshape_grisvard(),
        }
    }

    pub fn drive_options(&self) -> DriveOptions {
        DriveOptions {
            strategy: self.refine.into(),
            theta: self.theta,
            max_ndof: self.max_ndof,
            tols: EigTolerances { tol: self.tol_eig, tol_j: self.tol_eig_j },
            newton: NewtonOptions::default(),
        }
    }
}

fn progress(l: &Level) -> String {
    let c = &l.cert;
    format!(
        "level {:>2} ndof {:>7} error {:.3e} eta {:.3e} beta_h {:.6} kappa {:.3e} beta0_hat {:.6} rho_ex {:.3e} verified {}",
        l.level, l.ndof, l.error, l.eta, c.beta_h.safe, c.kappa, c.beta0_hat, c.rho_ex, c.verified
    )
}

/// Runs the refinement loop, streaming CSV rows and certificates into
/// `config.out` when given; returns the levels and the rate report.
pub fn run(config: &Config) -> Result<(Vec<Level>, String)> {
    let bench = config.benchmark();
    let opts = config.drive_options();
    let mut csv = None;
    if let Some(dir) = &config.out {
        fs::create_dir_all(dir.join("certificates"))?;
        let mut f = fs::File::create(dir.join("levels.csv"))?;
        writeln!(f, "{}", COLUMNS.join(","))?;
        csv = Some(f);
    }
    let quiet = config.quiet;
    let out = config.out.clone();
    let levels = drive(&bench, &opts, &mut |l| {
        if let (Some(f), Some(dir)) = (csv.as_mut(), out.as_ref()) {
            let r: Vec<String> = COLUMNS.iter().zip(report::row(l)).map(|(c, v)| report::format_value(c, v)).collect();
            writeln!(f, "{}", r.join(","))?;
            f.flush()?;
            fs::write(dir.join("certificates").join(format!("level_{:02}.txt", l.level)), l.cert.to_text())?;
        }
        if !quiet {
            eprintln!("{}", progress(l));
        }
        Ok(())
    })?;
    let rates = report::rate_report(&History::from_levels(&levels), RATE_WINDOW)?;
    if let Some(dir) = &config.out {
        fs::write(dir.join("rates.txt"), &rates)?;
    }
    Ok((levels, rates))
}
