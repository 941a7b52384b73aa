//! Post-processing of refinement histories: empirical rates, Aitken
//! extrapolation, and summary tables.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::solve::Level;

/// CSV columns, one row per refinement level.
pub const COLUMNS: [&str; 23] = [
    "level", "ndof", "h_max", "error", "eta", "Res_h", "beta_h", "kappa_nc", "kappa", "normJ", "Cb1", "Cb2", "Cb3", "L_G",
    "mu_res", "mu_hat", "one_minus_J", "beta0_hat", "beta0", "rho_ex", "rho_uq", "verified", "EF",
];

pub const RATE_WINDOW: usize = 4;

pub fn row(l: &Level) -> Vec<f64> {
    let c = &l.cert;
    vec![
        l.level as f64,
        l.ndof as f64,
        l.h_max,
        l.error,
        l.eta,
        c.res_h,
        c.beta_h.safe,
        c.kappa_nc.safe,
        c.kappa,
        c.norm_j.safe,
        c.c_b1.safe,
        c.c_b2,
        c.c_b3,
        c.l_g,
        c.mu_res,
        c.mu_hat,
        c.one_minus_j,
        c.beta0_hat,
        c.beta0,
        c.rho_ex,
        c.rho_uq,
        if c.verified { 1.0 } else { 0.0 },
        l.efficiency(),
    ]
}

/// 17 significant digits; integers without exponent.
pub fn format_value(col: &str, v: f64) -> String {
    match col {
        "level" | "ndof" | "verified" => format!("{}", v as i64),
        _ if v.is_nan() => "nan".into(),
        _ => format!("{v:.16e}"),
    }
}

/// Per-level records keyed by column name.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct History {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl History {
    pub fn from_levels(levels: &[Level]) -> History {
        History { columns: COLUMNS.iter().map(|s| s.to_string()).collect(), rows: levels.iter().map(row).collect() }
    }

    pub fn read_csv(path: &Path) -> Result<History> {
        let mut rd = csv::Reader::from_path(path).map_err(|e| Error::Parse { line: 0, msg: e.to_string() })?;
        let columns: Vec<String> = rd
            .headers()
            .map_err(|e| Error::Parse { line: 0, msg: e.to_string() })?
            .iter()
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for (i, rec) in rd.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse { line: i + 2, msg: e.to_string() })?;
            let r = rec
                .iter()
                .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Parse { line: i + 2, msg: format!("{s}: {e}") }))
                .collect::<Result<Vec<f64>>>()?;
            rows.push(r);
        }
        let h = History { columns, rows };
        let nd = h.column("ndof")?;
        if nd.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Parse { line: 0, msg: "ndof not strictly increasing".into() });
        }
        Ok(h)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(e.into()))?;
        w.write_record(&self.columns).map_err(|e| Error::Io(e.into()))?;
        for r in &self.rows {
            let rec: Vec<String> = self.columns.iter().zip(r).map(|(c, v)| format_value(c, *v)).collect();
            w.write_record(&rec).map_err(|e| Error::Io(e.into()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let i = self
            .columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::Parse { line: 0, msg: format!("no column {name}") })?;
        Ok(self.rows.iter().map(|r| r[i]).collect())
    }
}

/// Least-squares slope of log(values) against log(ndof) over the last
/// `window` entries, with decay reported as a positive rate; `None` when a
/// value in the window is not positive.
pub fn rate_of(ndof: &[f64], values: &[f64], window: usize) -> Option<f64> {
    assert!(ndof.len() == values.len() && ndof.len() >= 2, "rate needs at least two levels");
    let k = ndof.len().saturating_sub(window);
    let pts: Vec<(f64, f64)> = ndof[k..].iter().zip(&values[k..]).map(|(n, v)| (n.ln(), v.ln())).collect();
    if values[k..].iter().any(|v| !(*v > 0.0)) {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(-sxy / sxx)
}

pub fn rate(history: &History, column: &str, window: usize) -> Result<Option<f64>> {
    Ok(rate_of(&history.column("ndof")?, &history.column(column)?, window))
}

/// Aitken's Δ² on the last three entries; the last entry itself when the
/// second difference vanishes (flag `true`).
pub fn aitken(x: &[f64]) -> (f64, bool) {
    assert!(x.len() >= 3, "aitken needs three levels");
    let n = x.len();
    let (a, b, c) = (x[n - 3], x[n - 2], x[n - 1]);
    let d1 = c - b;
    let d2 = c - 2.0 * b + a;
    if d2.abs() <= 1e-14 * (a.abs() + b.abs() + c.abs()) || d2 == 0.0 {
        return (c, true);
    }
    (c - d1 * d1 / d2, false)
}

pub const RATE_COLUMNS: [&str; 8] = ["error", "eta", "kappa", "kappa_nc", "one_minus_J", "mu_hat", "rho_ex", "Res_h"];

/// Plain-text rate report of a history.
pub fn rate_report(history: &History, window: usize) -> Result<String> {
    let mut s = String::new();
    let _ = writeln!(s, "# empirical rates vs ndof, least squares over the last {window} levels");
    if history.rows.len() < 2 {
        let _ = writeln!(s, "# fewer than two levels, no rates");
        return Ok(s);
    }
    for col in RATE_COLUMNS {
        match rate(history, col, window)? {
            Some(r) => {
                let _ = writeln!(s, "{col:<12} {r:.4}");
            }
            None => {
                let _ = writeln!(s, "{col:<12} skipped (non-positive values)");
            }
        }
    }
    let beta = history.column("beta_h")?;
    if beta.len() >= 3 {
        let (b, degenerate) = aitken(&beta);
        let note = if degenerate { " (degenerate, last value)" } else { "" };
        let _ = writeln!(s, "aitken(beta_h) {b:.7}{note}");
    }
    Ok(s)
}

/// Table with one column per λ and rows β, β̂₀, β₀, ρ_uq, ρ_ex.
pub fn summary_table(entries: &[(f64, f64, &Level)]) -> String {
    let mut s = String::new();
    let _ = write!(s, "{:<10}", "lambda");
    for (lambda, _, _) in entries {
        let _ = write!(s, " {:>12}", lambda);
    }
    s.push('\n');
    let mut line = |name: &str, f: &dyn Fn(f64, &Level) -> f64| {
        let _ = write!(s, "{name:<10}");
        for (_, beta, l) in entries {
            let _ = write!(s, " {:>12.7}", f(*beta, l));
        }
        s.push('\n');
    };
    line("beta", &|b, _| b);
    line("beta0_hat", &|_, l| l.cert.beta0_hat);
    line("beta0", &|_, l| l.cert.beta0);
    line("rho_uq", &|_, l| l.cert.rho_uq);
    line("rho_ex", &|_, l| l.cert.rho_ex);
    s
}
