//! Tabulation of the limiting bulk energy `g(b)` from reduced-cell sweeps.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{GlError, Result};
use crate::minimize::{minimize_reduced, MinimizeOptions, Resolution};

/// Tolerance of the property checks on a table.
pub const G_TOL: f64 = 2e-2;
/// Largest acceptable fit residual relative to `|g|`.
pub const FIT_RESIDUAL_LIMIT: f64 = 0.1;

pub fn default_b_grid() -> Vec<f64> {
    let mut b: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
    b.push(1.2);
    b
}

pub fn default_r_list() -> Vec<f64> {
    vec![8.0, 12.0, 16.0]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quality {
    Ok,
    /// Some reduced minimization hit its iteration budget.
    NonConverged,
    /// The `g + c/R` fit leaves more than 10% of `|g|` unexplained.
    PoorFit,
}

impl Quality {
    pub fn as_str(&self) -> &'static str {
        match self {
            Quality::Ok => "ok",
            Quality::NonConverged => "nonconverged",
            Quality::PoorFit => "poorfit",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "ok" => Some(Quality::Ok),
            "nonconverged" => Some(Quality::NonConverged),
            "poorfit" => Some(Quality::PoorFit),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GRecord {
    pub b: f64,
    /// `m₀(b, R)/R²`, one entry per table radius.
    pub m0_over_r2: Vec<f64>,
    pub g_extrap: f64,
    pub c_fit: f64,
    /// `max_R |m₀/R² − g − c/R|`.
    pub fit_residual: f64,
    pub quality: Quality,
}

impl GRecord {
    pub fn relative_residual(&self) -> f64 {
        if self.g_extrap == 0.0 {
            0.0
        } else {
            self.fit_residual / self.g_extrap.abs()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GTable {
    pub r_list: Vec<f64>,
    pub records: Vec<GRecord>,
}

/// Least-squares fit `y = g + c/R`; returns `(g, c, max residual)`.
pub fn fit_inverse_r(r: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = r.len() as f64;
    let xs: Vec<f64> = r.iter().map(|r| 1.0 / r).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(y).map(|(x, y)| (x - mx) * (y - my)).sum();
    let c = sxy / sxx;
    let g = my - c * mx;
    let res = xs
        .iter()
        .zip(y)
        .map(|(x, y)| (y - g - c * x).abs())
        .fold(0.0, f64::max);
    (g, c, res)
}

fn check_lists(b_grid: &[f64], r_list: &[f64]) -> Result<()> {
    if r_list.len() < 3 {
        return Err(GlError::Config(format!(
            "R_list needs at least 3 radii for the 1/R fit, got {}",
            r_list.len()
        )));
    }
    if r_list.windows(2).any(|w| w[1] <= w[0]) || r_list[0] <= 0.0 {
        return Err(GlError::Config(
            "R_list must be positive and strictly increasing".into(),
        ));
    }
    if b_grid.is_empty() {
        return Err(GlError::Config("b_grid is empty".into()));
    }
    if b_grid.windows(2).any(|w| w[1] <= w[0]) || b_grid[0] < 0.0 {
        return Err(GlError::Config(
            "b_grid must be non-negative and strictly increasing".into(),
        ));
    }
    if b_grid.iter().chain(r_list).any(|v| !v.is_finite()) {
        return Err(GlError::Config(
            "non-finite entry in b_grid or R_list".into(),
        ));
    }
    Ok(())
}

/// Runs the reduced minimizations for every `b < 1` and radius in parallel,
/// then fits `m₀/R² = g + c/R` per `b`. Rows with `b ≥ 1` are exactly 0.
pub fn build_g_table(
    b_grid: &[f64],
    r_list: &[f64],
    resolution: Resolution,
    opts: &MinimizeOptions,
) -> Result<GTable> {
    check_lists(b_grid, r_list)?;
    opts.validate()?;
    let jobs: Vec<(usize, usize)> = b_grid
        .iter()
        .enumerate()
        .filter(|(_, b)| **b < 1.0)
        .flat_map(|(bi, _)| (0..r_list.len()).map(move |ri| (bi, ri)))
        .collect();
    let results: Vec<Result<(f64, bool)>> = jobs
        .par_iter()
        .map(|&(bi, ri)| {
            let r = r_list[ri];
            let res = minimize_reduced(b_grid[bi], 1, r, resolution, opts)?;
            Ok((res.m0 / (r * r), res.converged))
        })
        .collect();
    let mut values = vec![vec![(0.0, true); r_list.len()]; b_grid.len()];
    for (&(bi, ri), res) in jobs.iter().zip(results) {
        values[bi][ri] = res?;
    }
    let records = b_grid
        .iter()
        .zip(values)
        .map(|(&b, vals)| {
            if b >= 1.0 {
                return GRecord {
                    b,
                    m0_over_r2: vec![0.0; r_list.len()],
                    g_extrap: 0.0,
                    c_fit: 0.0,
                    fit_residual: 0.0,
                    quality: Quality::Ok,
                };
            }
            let y: Vec<f64> = vals.iter().map(|v| v.0).collect();
            let (g, c, res) = fit_inverse_r(r_list, &y);
            let mut rec = GRecord {
                b,
                m0_over_r2: y,
                g_extrap: g,
                c_fit: c,
                fit_residual: res,
                quality: Quality::Ok,
            };
            if vals.iter().any(|v| !v.1) {
                rec.quality = Quality::NonConverged;
            } else if rec.relative_residual() > FIT_RESIDUAL_LIMIT {
                rec.quality = Quality::PoorFit;
            }
            rec
        })
        .collect();
    Ok(GTable {
        r_list: r_list.to_vec(),
        records,
    })
}

impl GTable {
    pub fn b_grid(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.b).collect()
    }

    pub fn record(&self, b: f64) -> Option<&GRecord> {
        self.records.iter().find(|r| (r.b - b).abs() < 1e-12)
    }

    /// Builds a table directly from `(b, g)` pairs; used for synthetic input.
    pub fn from_values(pairs: &[(f64, f64)]) -> Result<Self> {
        let b: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        if b.windows(2).any(|w| w[1] <= w[0]) {
            return Err(GlError::Table(
                "b values must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            r_list: Vec::new(),
            records: pairs
                .iter()
                .map(|&(b, g)| GRecord {
                    b,
                    m0_over_r2: Vec::new(),
                    g_extrap: g,
                    c_fit: 0.0,
                    fit_residual: 0.0,
                    quality: Quality::Ok,
                })
                .collect(),
        })
    }

    pub fn header(&self) -> String {
        let mut h = String::from("b,g_extrap,c_fit");
        for r in &self.r_list {
            write!(h, ",m0_R{}", fmt_radius(*r)).unwrap();
        }
        h.push_str(",quality");
        h
    }

    /// Comma-separated text: optional `#` comment lines, a header row, then
    /// one row per `b`.
    pub fn to_text(&self, comments: &[String]) -> String {
        let mut out = String::new();
        for c in comments {
            for line in c.lines() {
                writeln!(out, "# {line}").unwrap();
            }
        }
        writeln!(out, "{}", self.header()).unwrap();
        for rec in &self.records {
            write!(
                out,
                "{},{:.12e},{:.12e}",
                fmt_num(rec.b),
                rec.g_extrap,
                rec.c_fit
            )
            .unwrap();
            for v in &rec.m0_over_r2 {
                write!(out, ",{v:.12e}").unwrap();
            }
            writeln!(out, ",{}", rec.quality.as_str()).unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim_start().starts_with('#') && !l.trim().is_empty());
        let (hn, header) = lines
            .next()
            .ok_or_else(|| GlError::Table("missing header row".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.len() < 4
            || cols[..3] != ["b", "g_extrap", "c_fit"]
            || cols.last() != Some(&"quality")
        {
            return Err(GlError::Table(format!(
                "line {}: unexpected header {header:?}",
                hn + 1
            )));
        }
        let mut r_list = Vec::new();
        for c in &cols[3..cols.len() - 1] {
            let r = c
                .strip_prefix("m0_R")
                .and_then(|r| r.parse::<f64>().ok())
                .ok_or_else(|| {
                    GlError::Table(format!("line {}: bad radius column {c:?}", hn + 1))
                })?;
            r_list.push(r);
        }
        let mut records = Vec::new();
        for (ln, line) in lines {
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != cols.len() {
                return Err(GlError::Table(format!(
                    "line {}: expected {} fields, found {}",
                    ln + 1,
                    cols.len(),
                    f.len()
                )));
            }
            let num = |s: &str| -> Result<f64> {
                let v: f64 = s
                    .parse()
                    .map_err(|_| GlError::Table(format!("line {}: not a number: {s:?}", ln + 1)))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(GlError::Table(format!("line {}: non-finite value", ln + 1)))
                }
            };
            let quality = Quality::parse(f[f.len() - 1])
                .ok_or_else(|| GlError::Table(format!("line {}: unknown quality flag", ln + 1)))?;
            records.push(GRecord {
                b: num(f[0])?,
                g_extrap: num(f[1])?,
                c_fit: num(f[2])?,
                m0_over_r2: f[3..f.len() - 1]
                    .iter()
                    .map(|s| num(s))
                    .collect::<Result<_>>()?,
                fit_residual: 0.0,
                quality,
            });
        }
        if records.is_empty() {
            return Err(GlError::Table("table has no rows".into()));
        }
        if records.windows(2).any(|w| w[1].b <= w[0].b) || records[0].b < 0.0 {
            return Err(GlError::Table(
                "b column must be non-negative and strictly increasing".into(),
            ));
        }
        for rec in &mut records {
            if !rec.m0_over_r2.is_empty() && rec.b < 1.0 {
                let (_, _, res) = fit_inverse_r(&r_list, &rec.m0_over_r2);
                rec.fit_residual = res;
            }
        }
        Ok(Self { r_list, records })
    }
}

fn fmt_radius(r: f64) -> String {
    fmt_num(r)
}

fn fmt_num(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

/// Piecewise-linear `g`, identically 0 on `[1, ∞)` and clamped to `[−½, 0]`.
///
/// Below the first tabulated point the curve is joined to `g(0) = −½`;
/// above the last point below 1 it is joined to `g(1) = 0`.
pub fn g_eval(table: &GTable, b: f64) -> Result<f64> {
    if !(b >= 0.0) {
        return Err(GlError::Domain(format!("g is defined for b >= 0, got {b}")));
    }
    if b >= 1.0 {
        return Ok(0.0);
    }
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(table.records.len() + 2);
    if table.records.first().is_none_or(|r| r.b > 0.0) {
        pts.push((0.0, -0.5));
    }
    for r in table.records.iter().filter(|r| r.b < 1.0) {
        pts.push((r.b, r.g_extrap));
    }
    pts.push((1.0, 0.0));
    let k = pts.partition_point(|p| p.0 <= b);
    let v = if k == 0 {
        pts[0].1
    } else if k == pts.len() {
        pts[k - 1].1
    } else {
        let (b0, g0) = pts[k - 1];
        let (b1, g1) = pts[k];
        if b == b0 {
            g0
        } else {
            g0 + (g1 - g0) * (b - b0) / (b1 - b0)
        }
    };
    Ok(v.clamp(-0.5, 0.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub b: f64,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GReport {
    pub checks: Vec<Check>,
}

impl GReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }

    pub fn passes(&self, name: &str) -> bool {
        self.checks
            .iter()
            .filter(|c| c.name == name)
            .all(|c| c.pass)
    }
}

/// Property checks on tabulated `g_extrap` values with tolerance 2e−2.
pub fn validate_g(table: &GTable) -> GReport {
    let pts: Vec<(f64, f64)> = table.records.iter().map(|r| (r.b, r.g_extrap)).collect();
    let mut checks = Vec::new();
    for &(b, g) in &pts {
        checks.push(Check {
            name: "range",
            b,
            value: g,
            bound: -0.5 - G_TOL,
            pass: (-0.5 - G_TOL..=G_TOL).contains(&g),
        });
        let ub = if b < 1.0 {
            0.5 * (b - 1.0) * (b - 1.0)
        } else {
            0.0
        };
        checks.push(Check {
            name: "upper_bound",
            b,
            value: g.abs(),
            bound: ub + G_TOL,
            pass: g.abs() <= ub + G_TOL,
        });
        if b <= 0.9 + 1e-12 {
            checks.push(Check {
                name: "negativity",
                b,
                value: g,
                bound: -1e-3,
                pass: g <= -1e-3,
            });
        }
    }
    for w in pts.windows(2) {
        checks.push(Check {
            name: "monotone",
            b: w[1].0,
            value: w[1].1 - w[0].1,
            bound: -G_TOL,
            pass: w[1].1 >= w[0].1 - G_TOL,
        });
    }
    for i in 0..pts.len() {
        for k in i + 2..pts.len() {
            let mid = 0.5 * (pts[i].0 + pts[k].0);
            if let Some(m) = pts.iter().find(|p| (p.0 - mid).abs() < 1e-9) {
                let chord = 0.5 * (pts[i].1 + pts[k].1);
                checks.push(Check {
                    name: "concavity",
                    b: m.0,
                    value: m.1 - chord,
                    bound: -G_TOL,
                    pass: m.1 >= chord - G_TOL,
                });
            }
        }
    }
    GReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic() -> GTable {
        // g(b) = −(1 − b)²/2 satisfies every check with equality on the bound.
        let pts: Vec<(f64, f64)> = default_b_grid()
            .into_iter()
            .map(|b| {
                (
                    b,
                    if b < 1.0 {
                        -0.5 * (1.0 - b) * (1.0 - b)
                    } else {
                        0.0
                    },
                )
            })
            .collect();
        GTable::from_values(&pts).unwrap()
    }

    #[test]
    fn exact_fit_recovers_parameters() {
        let r = [8.0, 12.0, 16.0];
        let y: Vec<f64> = r.iter().map(|r| -0.4 + 0.7 / r).collect();
        let (g, c, res) = fit_inverse_r(&r, &y);
        assert!((g + 0.4).abs() < 1e-14 && (c - 0.7).abs() < 1e-13 && res < 1e-14);
    }

    #[test]
    fn eval_rules() {
        let t = synthetic();
        assert_eq!(g_eval(&t, 2.7).unwrap(), 0.0);
        assert_eq!(g_eval(&t, 0.0).unwrap(), -0.5);
        let mid = g_eval(&t, 0.25).unwrap();
        let avg = 0.5 * (g_eval(&t, 0.2).unwrap() + g_eval(&t, 0.3).unwrap());
        assert!((mid - avg).abs() < 1e-15);
        assert!(g_eval(&t, -0.1).is_err());
    }

    #[test]
    fn eval_without_zero_row() {
        let t = GTable::from_values(&[(0.5, -0.1), (0.8, -0.02)]).unwrap();
        assert!((g_eval(&t, 0.25).unwrap() + 0.3).abs() < 1e-15);
        assert!((g_eval(&t, 0.9).unwrap() + 0.01).abs() < 1e-15);
    }

    #[test]
    fn validator_accepts_parabola() {
        assert!(validate_g(&synthetic()).all_pass());
    }

    #[test]
    fn validator_rejects_injected_value() {
        let mut t = synthetic();
        for r in &mut t.records {
            if (r.b - 0.5).abs() < 1e-12 {
                r.g_extrap = -0.4;
            }
        }
        let rep = validate_g(&t);
        assert!(!rep.passes("upper_bound"));
        assert!(rep
            .failures()
            .iter()
            .any(|c| c.name == "upper_bound" && (c.b - 0.5).abs() < 1e-12));
    }

    #[test]
    fn zero_rows_pass() {
        let t = GTable::from_values(&[(1.0, 0.0), (1.2, 0.0)]).unwrap();
        assert!(validate_g(&t).all_pass());
    }

    #[test]
    fn text_round_trip() {
        let mut t = synthetic();
        t.r_list = vec![8.0, 12.0, 16.0];
        for r in &mut t.records {
            r.m0_over_r2 = vec![
                r.g_extrap + 0.1 / 8.0,
                r.g_extrap + 0.1 / 12.0,
                r.g_extrap + 0.1 / 16.0,
            ];
        }
        let text = t.to_text(&["glbulk test".to_string()]);
        assert!(text.starts_with("# glbulk test\nb,g_extrap,c_fit,m0_R8,m0_R12,m0_R16,quality\n"));
        let back = GTable::from_text(&text).unwrap();
        assert_eq!(back.r_list, t.r_list);
        assert_eq!(back.records.len(), 12);
        for (a, b) in back.records.iter().zip(&t.records) {
            assert_eq!(a.b, b.b);
            assert!((a.g_extrap - b.g_extrap).abs() < 1e-12);
        }
        assert_eq!(back.to_text(&["glbulk test".to_string()]), text);
    }

    #[test]
    fn corrupt_text_is_rejected() {
        assert!(GTable::from_text("").is_err());
        assert!(GTable::from_text("b,g_extrap,c_fit,m0_R8,quality\n0,abc,0,0,ok\n").is_err());
        assert!(GTable::from_text("b,g_extrap,c_fit,m0_R8,quality\n0,0,0,ok\n").is_err());
        assert!(GTable::from_text("x,y\n").is_err());
    }

    #[test]
    fn short_radius_list_rejected() {
        let e = build_g_table(
            &[0.0],
            &[8.0, 12.0],
            Resolution::Spacing(0.25),
            &MinimizeOptions::reduced(),
        );
        assert!(matches!(e, Err(GlError::Config(_))));
    }

    #[test]
    fn small_table_end_to_end() {
        let t = build_g_table(
            &[0.0, 1.0, 1.2],
            &[3.0, 4.0, 5.0],
            Resolution::Spacing(0.25),
            &MinimizeOptions::reduced(),
        )
        .unwrap();
        assert_eq!(t.records[1].g_extrap, 0.0);
        assert_eq!(t.records[2].m0_over_r2, vec![0.0; 3]);
        assert!((t.records[0].g_extrap + 0.5).abs() < 0.02);
    }
}
