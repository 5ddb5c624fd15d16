//! Bulk-energy predictions, lattice Riemann sums, tiled trial states and
//! order-parameter identities for computed ground states.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::energy::{gl_energy, ibp_terms, local_energy, GLParams};
use crate::error::{GlError, Result};
use crate::grid::{
    curl_of_links, integrate, integrate_rect, Bc, ComplexField, GaugeField, Grid2D,
    MagneticProfile, NodeRect, Point,
};
use crate::limit_g::{g_eval, GTable};
use crate::minimize::{minimize_full, minimize_reduced, FullResult, MinimizeOptions, Resolution};
use crate::potential::{build_f, local_gauge_phase};

/// Samples per cell side when bounding `|B₀|` on a cell.
pub const CELL_SAMPLES: usize = 9;
/// Samples per cell side for cell-restricted quadratures.
pub const CELL_QUADRATURE: usize = 33;

/// `ℓ = κ^{−3/4}`, `ε = κ^{−1/8}`.
pub fn schedule(kappa: f64) -> (f64, f64) {
    (kappa.powf(-0.75), kappa.powf(-0.125))
}

/// Nearest positive multiple of the grid spacing.
pub fn snap_ell(ell: f64, grid: &Grid2D) -> f64 {
    let k = (ell / grid.h()).round().max(1.0);
    k * grid.h()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    /// Lower-left corner.
    pub corner: Point,
    pub center: Point,
    /// Padded lower bound of `|B₀|` on the cell.
    pub b_inf: f64,
    /// Padded upper bound of `|B₀|` on the cell.
    pub b_sup: f64,
    /// Smallest sampled `|B₀|` and where it occurs.
    pub b_min_sample: f64,
    pub argmin: Point,
    pub b_max_sample: f64,
    pub argmax: Point,
    pub sigma: i8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    pub ell: f64,
    pub eps: f64,
    pub origin: Point,
    pub domain_area: f64,
    pub cells: Vec<Cell>,
    pub excluded_measure: f64,
}

impl Lattice {
    pub fn covered_area(&self) -> f64 {
        self.cells.len() as f64 * self.ell * self.ell
    }
}

/// Cells `origin + ℓ([k, k+1] × [l, l+1])` inside the grid rectangle on
/// which `|B₀| > ε` with constant sign.
pub fn build_lattice(b0: &MagneticProfile, grid: &Grid2D, ell: f64, eps: f64) -> Result<Lattice> {
    let (sx, sy) = (grid.side_x(), grid.side_y());
    if !(ell > 0.0) || ell >= sx.min(sy) {
        return Err(GlError::Config(format!(
            "cell side {ell} must be positive and below the domain side {}",
            sx.min(sy)
        )));
    }
    if !(eps >= 0.0) {
        return Err(GlError::Config(format!(
            "cutoff must be non-negative, got {eps}"
        )));
    }
    let o = grid.origin();
    let kx = (sx / ell + 1e-9).floor() as usize;
    let ky = (sy / ell + 1e-9).floor() as usize;
    let spacing = ell / (CELL_SAMPLES - 1) as f64;
    let mut cells = Vec::new();
    for l in 0..ky {
        for k in 0..kx {
            let corner = [o[0] + k as f64 * ell, o[1] + l as f64 * ell];
            let center = [corner[0] + ell / 2.0, corner[1] + ell / 2.0];
            let mut min = (f64::INFINITY, corner);
            let mut max = (f64::NEG_INFINITY, corner);
            let mut grad_max: f64 = 0.0;
            let mut pos = false;
            let mut neg = false;
            for c in 0..CELL_SAMPLES {
                for a in 0..CELL_SAMPLES {
                    let x = [
                        corner[0] + a as f64 * spacing,
                        corner[1] + c as f64 * spacing,
                    ];
                    let b = b0.b0(x);
                    pos |= b > 0.0;
                    neg |= b <= 0.0;
                    // Ties go to the sample nearest the cell center.
                    let tie = |v: f64, p: Point| {
                        (b.abs() - v).abs() <= 1e-14 * v.abs().max(1.0)
                            && dist2(x, center) < dist2(p, center)
                    };
                    if b.abs() < min.0 || tie(min.0, min.1) {
                        min = (b.abs().min(min.0), x);
                    }
                    if b.abs() > max.0 || tie(max.0, max.1) {
                        max = (b.abs().max(max.0), x);
                    }
                    let g = b0.grad(x);
                    grad_max = grad_max.max((g[0] * g[0] + g[1] * g[1]).sqrt());
                }
            }
            let pad = std::f64::consts::FRAC_1_SQRT_2 * spacing * grad_max;
            let b_inf = min.0 - pad;
            if pos && neg || b_inf <= eps {
                continue;
            }
            cells.push(Cell {
                corner,
                center,
                b_inf,
                b_sup: max.0 + pad,
                b_min_sample: min.0,
                argmin: min.1,
                b_max_sample: max.0,
                argmax: max.1,
                sigma: if pos { 1 } else { -1 },
            });
        }
    }
    let domain_area = sx * sy;
    let covered = cells.len() as f64 * ell * ell;
    Ok(Lattice {
        ell,
        eps,
        origin: o,
        domain_area,
        excluded_measure: domain_area - covered,
        cells,
    })
}

fn dist2(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

fn g_of_b(params: &GLParams, table: &GTable, b: f64) -> Result<f64> {
    g_eval(table, params.ratio() * b.abs())
}

/// `κ² ∫_Ω g((H/κ)|B₀|)` by the trapezoidal rule on `grid`.
pub fn bulk_prediction(
    params: &GLParams,
    b0: &MagneticProfile,
    table: &GTable,
    grid: &Grid2D,
) -> Result<f64> {
    let vals = grid
        .nodes()
        .map(|(i, j)| g_of_b(params, table, b0.b0(grid.node(i, j))))
        .collect::<Result<Vec<_>>>()?;
    Ok(params.kappa * params.kappa * integrate(&vals, grid))
}

/// Same integral restricted to the lattice cells, by a trapezoidal rule on
/// each cell.
pub fn bulk_prediction_on(
    params: &GLParams,
    b0: &MagneticProfile,
    table: &GTable,
    lat: &Lattice,
) -> Result<f64> {
    let n = CELL_QUADRATURE;
    let mut total = 0.0;
    for cell in &lat.cells {
        let grid = Grid2D::new(cell.corner, lat.ell, lat.ell, n, n)?;
        total += bulk_prediction(params, b0, table, &grid)?;
    }
    Ok(total)
}

/// Lower and upper Riemann sums `κ² Σ g((H/κ)B_inf) ℓ²`, `κ² Σ g((H/κ)B_sup) ℓ²`
/// over the lattice cells; `g` is non-decreasing, so they bracket the integral.
pub fn riemann_bounds(params: &GLParams, table: &GTable, lat: &Lattice) -> Result<(f64, f64)> {
    if lat.cells.is_empty() {
        return Err(GlError::Domain("lattice has no cells".into()));
    }
    let w = params.kappa * params.kappa * lat.ell * lat.ell;
    let mut lower = 0.0;
    let mut upper = 0.0;
    for c in &lat.cells {
        lower += w * g_of_b(params, table, c.b_inf)?;
        upper += w * g_of_b(params, table, c.b_sup)?;
    }
    Ok((lower, upper))
}

#[derive(Debug, Clone, Copy)]
pub struct TrialOptions {
    pub minimize: MinimizeOptions,
    /// Cell `b` values are rounded to this step before solving.
    pub b_step: f64,
}

impl Default for TrialOptions {
    fn default() -> Self {
        Self {
            minimize: MinimizeOptions::reduced(),
            b_step: 1e-3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrialState {
    pub v: ComplexField,
    pub energy: f64,
    /// Cells on which the cell minimizer is nonzero.
    pub active_cells: usize,
    pub distinct_b: usize,
    pub converged: bool,
}

/// Competitor built from gauged copies of reduced-cell minimizers, one per
/// lattice cell, with `A = F`. On a cell with center `x₀`, lowest sampled
/// field `B̲` at `x̃₀` and sign `σ`,
/// `v = exp(iκHφ₀)·u_R(R(x − x₀)/ℓ)` (conjugated when `σ = −1`), where
/// `b = (H/κ)B̲`, `R = ℓ√(κH B̲)` and `φ₀` is the local gauge phase.
pub fn tiled_trial_state(
    params: &GLParams,
    b0: &MagneticProfile,
    lat: &Lattice,
    grid: &Grid2D,
    opts: &TrialOptions,
) -> Result<TrialState> {
    let h = grid.h();
    let m = (lat.ell / h).round() as usize;
    if ((m as f64) * h - lat.ell).abs() > 1e-9 * lat.ell || m < 2 {
        return Err(GlError::Config(format!(
            "cell side {} is not a multiple (>= 2) of the grid spacing {h}",
            lat.ell
        )));
    }
    if (lat.origin[0] - grid.origin()[0]).abs() > 1e-12
        || (lat.origin[1] - grid.origin()[1]).abs() > 1e-12
    {
        return Err(GlError::GridMismatch(
            "lattice and grid have different origins",
        ));
    }
    let f = build_f(b0, grid)?.with_link_scale(params.link_scale());
    let key = |c: &Cell| (params.ratio() * c.b_min_sample / opts.b_step).round() as i64;
    let mut keys: Vec<i64> = lat.cells.iter().map(key).collect();
    keys.sort_unstable();
    keys.dedup();
    let solved: Vec<(i64, Option<crate::minimize::ReducedResult>)> = keys
        .par_iter()
        .map(|&k| {
            let b = k as f64 * opts.b_step;
            if b >= 1.0 || b <= 0.0 {
                return Ok((k, None));
            }
            let r = lat.ell * params.kappa * b.sqrt();
            let res = minimize_reduced(b, 1, r, Resolution::Intervals(m), &opts.minimize)?;
            Ok((k, Some(res)))
        })
        .collect::<Result<_>>()?;
    let cache: BTreeMap<i64, Option<crate::minimize::ReducedResult>> = solved.into_iter().collect();
    let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut active = 0;
    let mut converged = true;
    for cell in &lat.cells {
        let Some(res) = cache[&key(cell)].as_ref() else {
            continue;
        };
        converged &= res.converged;
        if res.m0 == 0.0 {
            continue;
        }
        active += 1;
        let lp = local_gauge_phase(&f, cell.center, cell.argmin, lat.ell)?;
        if lp.rect.i1 - lp.rect.i0 != m || lp.rect.j1 - lp.rect.j0 != m {
            return Err(GlError::GridMismatch("cell does not align with grid nodes"));
        }
        let ug = res.u.grid();
        for j in lp.rect.j0..=lp.rect.j1 {
            for i in lp.rect.i0..=lp.rect.i1 {
                let mut u = res.u.values()[ug.idx(i - lp.rect.i0, j - lp.rect.j0)];
                if cell.sigma < 0 {
                    u = u.conj();
                }
                let rot = Complex64::from_polar(1.0, params.link_scale() * lp.get(i, j));
                values[grid.idx(i, j)] = rot * u;
            }
        }
    }
    let v = ComplexField::new(*grid, values, Bc::Free)?;
    let energy = gl_energy(&v, &f, params, b0)?;
    Ok(TrialState {
        v,
        energy,
        active_cells: active,
        distinct_b: cache.len(),
        converged,
    })
}

/// Order-parameter identity on a node rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Psi4Record {
    /// `∫_D |ψ|⁴`
    pub lhs: f64,
    /// `−2 ∫_D g((H/κ)|B₀|)`
    pub rhs: f64,
    /// `E₀(ψ, A; D)`
    pub e0: f64,
    /// Discrete flux through `∂D`; zero for the whole grid.
    pub boundary_term: f64,
    /// `|E₀(D) + ½κ²∫_D|ψ|⁴ − boundary_term|`
    pub identity_residual: f64,
}

pub fn psi4_check(
    psi: &ComplexField,
    a: &GaugeField,
    params: &GLParams,
    b0: &MagneticProfile,
    table: &GTable,
    d: &NodeRect,
) -> Result<Psi4Record> {
    let t = ibp_terms(psi, a, params, d)?;
    let k2 = params.kappa * params.kappa;
    let rhs = -2.0 * g_integral(params, b0, table, psi.grid(), d)?;
    Ok(Psi4Record {
        lhs: t.psi4,
        rhs,
        e0: t.e0,
        boundary_term: t.boundary,
        identity_residual: (t.e0 + 0.5 * k2 * t.psi4 - t.boundary).abs(),
    })
}

fn g_integral(
    params: &GLParams,
    b0: &MagneticProfile,
    table: &GTable,
    grid: &Grid2D,
    d: &NodeRect,
) -> Result<f64> {
    let vals = grid
        .nodes()
        .map(|(i, j)| {
            if d.contains(i, j) {
                g_of_b(params, table, b0.b0(grid.node(i, j)))
            } else {
                Ok(0.0)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(integrate_rect(&vals, grid, d))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalComparison {
    /// `E₀(ψ, A; D) + (κH)² ∫_D |curl A − B₀|²`
    pub measured: f64,
    /// `κ² ∫_D g((H/κ)|B₀|)`
    pub predicted: f64,
    /// `|measured − predicted| / κ²`
    pub gap: f64,
}

pub fn local_energy_compare(
    psi: &ComplexField,
    a: &GaugeField,
    params: &GLParams,
    b0: &MagneticProfile,
    table: &GTable,
    d: &NodeRect,
) -> Result<LocalComparison> {
    let g = *psi.grid();
    let e0 = local_energy(psi, a, params, d)?;
    let curl = curl_of_links(&g, a.link_x(), a.link_y());
    let s2 = params.link_scale().powi(2);
    let h2 = g.h() * g.h();
    let mut mag = 0.0;
    for j in d.j0..d.j1 {
        for i in d.i0..d.i1 {
            let diff = curl[g.plaquette_idx(i, j)] - b0.b0(g.plaquette_center(i, j));
            mag += s2 * h2 * diff * diff;
        }
    }
    let k2 = params.kappa * params.kappa;
    let measured = e0 + mag;
    let predicted = k2 * g_integral(params, b0, table, &g, d)?;
    Ok(LocalComparison {
        measured,
        predicted,
        gap: (measured - predicted).abs() / k2,
    })
}

/// `Σ W_p f_p` over the nodes selected by `keep`.
pub fn masked_integral<P: Fn(Point) -> bool>(f: &[f64], grid: &Grid2D, keep: P) -> f64 {
    grid.nodes()
        .filter(|&(i, j)| keep(grid.node(i, j)))
        .map(|(i, j)| grid.node_weight(i, j) * f[grid.idx(i, j)])
        .sum()
}

/// One full-model run compared against the bulk predictions.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub params: GLParams,
    pub profile: MagneticProfile,
    pub grid: Grid2D,
    pub ell: f64,
    pub eps: f64,
}

impl Experiment {
    /// Uses the `κ`-schedule for `ℓ` and `ε`, with `ℓ` snapped to the grid.
    pub fn scheduled(params: GLParams, profile: MagneticProfile, grid: Grid2D) -> Self {
        let (ell, eps) = schedule(params.kappa);
        Self {
            params,
            profile,
            grid,
            ell: snap_ell(ell, &grid),
            eps,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub kappa: f64,
    pub h_field: f64,
    pub profile: String,
    pub e_min: f64,
    pub prediction: f64,
    pub prediction_covered: f64,
    pub lower: f64,
    pub upper: f64,
    pub trial_energy: f64,
    pub psi4_lhs: f64,
    pub psi4_rhs: f64,
    pub identity_residual: f64,
    pub magnetic_energy: f64,
    pub sup_psi: f64,
    pub kinetic_over_l2: f64,
    pub converged: bool,
}

impl ExperimentRow {
    pub const HEADER: &'static str = "kappa,H,profile,E_min,prediction,prediction_covered,lower,upper,trial_energy,psi4_lhs,psi4_rhs,identity_residual,magnetic_energy,sup_psi,kinetic_over_l2,converged";

    /// `|E_min − prediction| / κ²`
    pub fn normalized_gap(&self) -> f64 {
        (self.e_min - self.prediction).abs() / (self.kappa * self.kappa)
    }

    pub fn to_line(&self) -> String {
        let mut s = String::new();
        write!(s, "{},{},\"{}\"", self.kappa, self.h_field, self.profile).unwrap();
        for v in [
            self.e_min,
            self.prediction,
            self.prediction_covered,
            self.lower,
            self.upper,
            self.trial_energy,
            self.psi4_lhs,
            self.psi4_rhs,
            self.identity_residual,
            self.magnetic_energy,
            self.sup_psi,
            self.kinetic_over_l2,
        ] {
            write!(s, ",{v:.12e}").unwrap();
        }
        write!(s, ",{}", self.converged).unwrap();
        s
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub row: ExperimentRow,
    pub full: FullResult,
    pub lattice: Lattice,
    pub trial: Option<TrialState>,
    pub psi4: Psi4Record,
}

/// Minimizes, then evaluates every comparison quantity. An empty lattice
/// yields `lower = upper = 0` and no trial state.
pub fn run_experiment(
    exp: &Experiment,
    table: &GTable,
    opts: &MinimizeOptions,
    trial_opts: &TrialOptions,
) -> Result<ExperimentOutcome> {
    let full = minimize_full(&exp.params, &exp.profile, &exp.grid, opts)?;
    let lattice = build_lattice(&exp.profile, &exp.grid, exp.ell, exp.eps)?;
    let prediction = bulk_prediction(&exp.params, &exp.profile, table, &exp.grid)?;
    let covered = bulk_prediction_on(&exp.params, &exp.profile, table, &lattice)?;
    let (lower, upper, trial) = if lattice.cells.is_empty() {
        (0.0, 0.0, None)
    } else {
        let (lo, up) = riemann_bounds(&exp.params, table, &lattice)?;
        let t = tiled_trial_state(&exp.params, &exp.profile, &lattice, &exp.grid, trial_opts)?;
        (lo, up, Some(t))
    };
    let psi4 = psi4_check(
        &full.psi,
        &full.a,
        &exp.params,
        &exp.profile,
        table,
        &exp.grid.full_rect(),
    )?;
    let row = ExperimentRow {
        kappa: exp.params.kappa,
        h_field: exp.params.h_field,
        profile: exp.profile.id().to_string(),
        e_min: full.energy,
        prediction,
        prediction_covered: covered,
        lower,
        upper,
        trial_energy: trial.as_ref().map_or(f64::NAN, |t| t.energy),
        psi4_lhs: psi4.lhs,
        psi4_rhs: psi4.rhs,
        identity_residual: psi4.identity_residual,
        magnetic_energy: full.report.magnetic_energy,
        sup_psi: full.report.sup_psi,
        kinetic_over_l2: full.report.kinetic_over_l2,
        converged: full.converged,
    };
    Ok(ExperimentOutcome {
        row,
        full,
        lattice,
        trial,
        psi4,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parabola() -> GTable {
        let pts: Vec<(f64, f64)> = (0..=12)
            .map(|k| k as f64 / 10.0)
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

    fn unit(n: usize) -> Grid2D {
        Grid2D::new([0.0, 0.0], 1.0, 1.0, n, n).unwrap()
    }

    #[test]
    fn constant_field_lattice() {
        let lat = build_lattice(&MagneticProfile::constant(1.0), &unit(17), 0.25, 0.5).unwrap();
        assert_eq!(lat.cells.len(), 16);
        assert!(lat
            .cells
            .iter()
            .all(|c| c.sigma == 1 && c.b_inf == 1.0 && c.b_sup == 1.0));
        assert!(lat.excluded_measure.abs() < 1e-12);
        assert!(build_lattice(&MagneticProfile::constant(1.0), &unit(17), 1.0, 0.5).is_err());
    }

    #[test]
    fn sign_changing_band_is_excluded() {
        let b0 = MagneticProfile::linear(1.0, -0.5);
        let lat = build_lattice(&b0, &unit(11), 0.1, 0.05).unwrap();
        // Direct count: a column [k/10, (k+1)/10] survives iff both ends are
        // beyond 0.05 (plus padding) on the same side of x₁ = 1/2.
        let cols: Vec<usize> = (0..10)
            .filter(|&k| {
                let (a, b) = (k as f64 / 10.0 - 0.5, (k + 1) as f64 / 10.0 - 0.5);
                a * b > 0.0
                    && a.abs().min(b.abs()) - 0.1 / 8.0 * std::f64::consts::FRAC_1_SQRT_2 > 0.05
            })
            .collect();
        assert_eq!(lat.cells.len(), cols.len() * 10);
        assert!(lat.cells.iter().all(|c| (c.center[0] - 0.5).abs() > 0.1));
        let half = build_lattice(&b0, &unit(21), 0.05, 0.03).unwrap();
        assert!(half.excluded_measure < lat.excluded_measure);
    }

    #[test]
    fn predictions_for_constant_field() {
        let t = parabola();
        let g = unit(17);
        let b0 = MagneticProfile::constant(1.0);
        let p = GLParams::new(4.0, 2.0).unwrap();
        let pred = bulk_prediction(&p, &b0, &t, &g).unwrap();
        assert!((pred - 16.0 * g_eval(&t, 0.5).unwrap()).abs() < 1e-12);
        let strong = GLParams::new(4.0, 4.4).unwrap();
        assert_eq!(bulk_prediction(&strong, &b0, &t, &g).unwrap(), 0.0);
        let lat = build_lattice(&b0, &g, 0.25, 0.1).unwrap();
        let (lo, up) = riemann_bounds(&p, &t, &lat).unwrap();
        let cov = bulk_prediction_on(&p, &b0, &t, &lat).unwrap();
        assert!((lo - up).abs() < 1e-12 && (lo - cov).abs() < 1e-10);
    }

    #[test]
    fn linear_field_prediction_matches_1d_quadrature() {
        let t = parabola();
        let g = unit(129);
        let b0 = MagneticProfile::linear(2.0, 0.0);
        let p = GLParams::new(3.0, 3.0).unwrap();
        let pred = bulk_prediction(&p, &b0, &t, &g).unwrap();
        // ∫₀¹ g(2x) dx = ½∫₀² g = ½∫₀¹ g; composite Simpson on the piecewise-linear g.
        let n = 2000;
        let simpson: f64 = (0..=n)
            .map(|k| {
                let x = k as f64 / n as f64;
                let w = if k == 0 || k == n {
                    1.0
                } else if k % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                w * g_eval(&t, x).unwrap()
            })
            .sum::<f64>()
            / (3.0 * n as f64);
        assert!(
            (pred - 9.0 * 0.5 * simpson).abs() < 1e-3,
            "{pred} vs {}",
            4.5 * simpson
        );
    }

    #[test]
    fn sandwich_and_gap_shrinkage() {
        let t = parabola();
        let b0 = MagneticProfile::linear(1.0, -0.5);
        let p = GLParams::new(8.0, 8.0).unwrap();
        let mut gaps = Vec::new();
        for (ell, n) in [(0.1, 11), (0.05, 21)] {
            let lat = build_lattice(&b0, &unit(n), ell, 0.05).unwrap();
            let (lo, up) = riemann_bounds(&p, &t, &lat).unwrap();
            let cov = bulk_prediction_on(&p, &b0, &t, &lat).unwrap();
            assert!(lo <= cov + 1e-8 && cov <= up + 1e-8, "{lo} {cov} {up}");
            gaps.push((up - lo) / lat.covered_area());
        }
        assert!(gaps[0] / gaps[1] >= 1.7, "gap ratio {}", gaps[0] / gaps[1]);
    }

    #[test]
    fn normal_state_identities() {
        let t = parabola();
        let g = unit(17);
        let b0 = MagneticProfile::constant(1.0);
        let p = GLParams::new(4.0, 2.0).unwrap();
        let f = build_f(&b0, &g).unwrap().with_link_scale(p.link_scale());
        let z = ComplexField::zeros(g, Bc::Free);
        let d = NodeRect {
            i0: 2,
            i1: 9,
            j0: 3,
            j1: 12,
        };
        let rec = psi4_check(&z, &f, &p, &b0, &t, &d).unwrap();
        assert_eq!(rec.lhs, 0.0);
        assert_eq!(rec.identity_residual, 0.0);
    }

    #[test]
    fn trial_state_vanishes_in_strong_field() {
        let g = unit(33);
        let b0 = MagneticProfile::constant(1.0);
        let p = GLParams::new(8.0, 8.8).unwrap();
        let lat = build_lattice(&b0, &g, 0.25, 0.5).unwrap();
        let t = tiled_trial_state(&p, &b0, &lat, &g, &TrialOptions::default()).unwrap();
        assert_eq!(t.active_cells, 0);
        assert!(t.v.sup_norm() == 0.0 && t.energy.abs() < 1e-10);
    }
}
