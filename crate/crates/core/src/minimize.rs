//! Minimizers for the reduced cell problem and the full functional, plus
//! a priori diagnostics of computed states.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dst::DirichletSolver;
use crate::energy::{
    check_sigma, gl_energy_parts, gl_gradient, magnetic_term, reduced_coeffs, reduced_kernel,
    Coeffs, GLParams, Kernel,
};
use crate::error::{GlError, Result};
use crate::grid::{Bc, ComplexField, GaugeField, Grid2D, MagneticProfile};
use crate::ncg::{self, NcgOptions, Objective};
use crate::potential::build_f;

/// Reduced cells use this spacing unless told otherwise.
pub const REDUCED_SPACING: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizeOptions {
    pub max_iters: usize,
    /// Relative gradient-norm stop: `‖∇E‖ ≤ grad_tol·(1 + |E|)`.
    pub grad_tol: f64,
    pub seed: u64,
    pub restarts: usize,
    pub shrink: f64,
    pub sufficient_decrease: f64,
    /// NCG iterations per block in the alternating full minimization.
    pub block_iters: usize,
}

impl MinimizeOptions {
    pub fn reduced() -> Self {
        Self {
            max_iters: 40_000,
            grad_tol: 1e-8,
            seed: 0,
            restarts: 3,
            shrink: 0.5,
            sufficient_decrease: 1e-4,
            block_iters: 0,
        }
    }

    pub fn full() -> Self {
        Self {
            max_iters: 200_000,
            grad_tol: 1e-6,
            seed: 0,
            restarts: 1,
            shrink: 0.5,
            sufficient_decrease: 1e-4,
            block_iters: 200,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.grad_tol > 0.0) {
            return Err(GlError::Config(format!(
                "grad_tol must be > 0, got {}",
                self.grad_tol
            )));
        }
        if self.restarts < 1 {
            return Err(GlError::Config("restarts must be >= 1".into()));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(GlError::Config(format!(
                "shrink must lie in (0,1), got {}",
                self.shrink
            )));
        }
        if !(self.sufficient_decrease > 0.0 && self.sufficient_decrease < 1.0) {
            return Err(GlError::Config(format!(
                "sufficient_decrease must lie in (0,1), got {}",
                self.sufficient_decrease
            )));
        }
        Ok(())
    }

    fn ncg(&self, max_iters: usize, grad_tol: f64) -> NcgOptions {
        NcgOptions {
            max_iters,
            grad_tol,
            shrink: self.shrink,
            sufficient_decrease: self.sufficient_decrease,
            ..NcgOptions::default()
        }
    }
}

/// How finely to resolve `Q_R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Resolution {
    /// Target spacing; the interval count is `round(R/h)`.
    Spacing(f64),
    /// Exact number of intervals per side.
    Intervals(usize),
}

impl Resolution {
    pub fn intervals(&self, r: f64) -> Result<usize> {
        let m = match *self {
            Resolution::Spacing(h) => {
                if !(h > 0.0) {
                    return Err(GlError::Config(format!(
                        "spacing must be positive, got {h}"
                    )));
                }
                (r / h).round() as usize
            }
            Resolution::Intervals(m) => m,
        };
        if m < 2 {
            return Err(GlError::Config(format!(
                "cell of side {r} needs at least 2 intervals"
            )));
        }
        Ok(m)
    }
}

/// Outcome of a reduced minimization.
#[derive(Debug, Clone)]
pub struct ReducedResult {
    pub u: ComplexField,
    pub m0: f64,
    pub grad_norm: f64,
    pub iters: usize,
    pub converged: bool,
    /// Final energy of each restart, before clamping.
    pub restart_values: Vec<f64>,
}

struct ReducedObjective {
    kernel: Kernel,
    co: Coeffs,
    interior: Vec<usize>,
    psi: Vec<Complex64>,
    grad: Vec<Complex64>,
}

impl ReducedObjective {
    fn load(&mut self, x: &[f64]) {
        for (k, &p) in self.interior.iter().enumerate() {
            self.psi[p] = Complex64::new(x[2 * k], x[2 * k + 1]);
        }
    }
}

impl Objective for ReducedObjective {
    fn dim(&self) -> usize {
        2 * self.interior.len()
    }

    fn value_grad(&mut self, x: &[f64], g: &mut [f64]) -> f64 {
        self.load(x);
        self.grad
            .iter_mut()
            .for_each(|z| *z = Complex64::new(0.0, 0.0));
        let s = self.kernel.eval(&self.psi, self.co, Some(&mut self.grad));
        for (k, &p) in self.interior.iter().enumerate() {
            g[2 * k] = self.grad[p].re;
            g[2 * k + 1] = self.grad[p].im;
        }
        self.co.c_kin * s.kinetic + self.co.c2 * s.psi2 + 0.5 * self.co.c4 * s.psi4
    }
}

/// Deterministic per-run stream derived from the user seed and run keys.
pub(crate) fn derive_seed(seed: u64, keys: &[u64]) -> u64 {
    let mut z = seed ^ 0x9E37_79B9_7F4A_7C15;
    for k in keys {
        z = (z ^ k).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z ^= z >> 31;
        z = z.wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 29;
    }
    z
}

/// Infimum `m₀(b, R)` of the reduced functional over fields vanishing on `∂Q_R`.
///
/// Runs `restarts` NCG descents from seeded noise of amplitude 0.5 and keeps
/// the lowest; `u = 0` is feasible, so a positive result is replaced by 0.
pub fn minimize_reduced(
    b: f64,
    sigma: i8,
    r: f64,
    resolution: Resolution,
    opts: &MinimizeOptions,
) -> Result<ReducedResult> {
    opts.validate()?;
    check_sigma(sigma)?;
    if !(b >= 0.0 && b.is_finite()) {
        return Err(GlError::Config(format!("b must be non-negative, got {b}")));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(GlError::Config(format!("R must be positive, got {r}")));
    }
    let m = resolution.intervals(r)?;
    let grid = Grid2D::square([0.0, 0.0], r, m + 1)?;
    let interior: Vec<usize> = grid
        .nodes()
        .filter(|&(i, j)| !grid.is_boundary(i, j))
        .map(|(i, j)| grid.idx(i, j))
        .collect();
    let mut obj = ReducedObjective {
        kernel: reduced_kernel(grid, sigma),
        co: reduced_coeffs(b),
        interior,
        psi: vec![Complex64::new(0.0, 0.0); grid.len()],
        grad: vec![Complex64::new(0.0, 0.0); grid.len()],
    };
    let ncg_opts = opts.ncg(opts.max_iters, opts.grad_tol);
    let mut best: Option<ncg::NcgResult> = None;
    let mut restart_values = Vec::with_capacity(opts.restarts);
    let mut iters = 0;
    for k in 0..opts.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
            opts.seed,
            &[b.to_bits(), r.to_bits(), m as u64, k as u64],
        ));
        let mut x0 = Vec::with_capacity(obj.dim());
        for _ in 0..obj.interior.len() {
            let re: f64 = rng.random_range(-0.5..0.5);
            let im: f64 = rng.random_range(-0.5..0.5);
            x0.push(re);
            x0.push(if sigma < 0 { -im } else { im });
        }
        let res = ncg::minimize(&mut obj, x0, &ncg_opts);
        iters += res.iters;
        restart_values.push(res.value);
        let better = match &best {
            None => true,
            // Converged runs take precedence; ties keep the earlier restart.
            Some(cur) => {
                (res.converged && !cur.converged)
                    || (res.converged == cur.converged && res.value < cur.value)
            }
        };
        if better {
            best = Some(res);
        }
    }
    let best = best.expect("restarts >= 1");
    let (values, m0, grad_norm) = if best.value > 0.0 {
        (vec![Complex64::new(0.0, 0.0); grid.len()], 0.0, 0.0)
    } else {
        obj.load(&best.x);
        (obj.psi.clone(), best.value, best.grad_norm)
    };
    let converged = best.converged || best.value > 0.0;
    Ok(ReducedResult {
        u: ComplexField::new(grid, values, Bc::DirichletZero)?,
        m0,
        grad_norm,
        iters,
        converged,
        restart_values,
    })
}

/// Diagnostics of a computed state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalityReport {
    /// Norm of the ψ and node-potential gradient of the discrete functional.
    pub grad_norm: f64,
    pub sup_psi: f64,
    /// `‖(∇ − iκHA)ψ‖₂ / ‖ψ‖₂`, or 0 for ψ = 0.
    pub kinetic_over_l2: f64,
    /// `(κH)² ∫|curl A − B₀|²`.
    pub magnetic_energy: f64,
    pub energy: f64,
    pub psi4_integral: f64,
    pub e0: f64,
    pub kappa: f64,
    /// `E(0, F)` on the same grid.
    pub normal_energy: f64,
}

/// Relative slack used for the a priori checks.
pub const SUP_TOL: f64 = 1e-6;
pub const KINETIC_SLACK: f64 = 0.02;

impl CriticalityReport {
    pub fn sup_ok(&self) -> bool {
        self.sup_psi <= 1.0 + SUP_TOL
    }

    pub fn kinetic_ok(&self) -> bool {
        self.kinetic_over_l2 <= self.kappa * (1.0 + KINETIC_SLACK)
    }

    /// `0 ≤ magnetic ≤ E(0,F) − E₀ (+1e−9)`, which holds whenever the state
    /// beats the normal state.
    pub fn magnetic_ok(&self) -> bool {
        self.magnetic_energy >= 0.0 && self.magnetic_energy <= self.normal_energy - self.e0 + 1e-9
    }

    pub fn all_ok(&self) -> bool {
        self.sup_ok() && self.kinetic_ok() && self.magnetic_ok()
    }
}

pub fn criticality_report(
    psi: &ComplexField,
    a: &GaugeField,
    params: &GLParams,
    b0: &MagneticProfile,
) -> Result<CriticalityReport> {
    let parts = gl_energy_parts(psi, a, params, b0)?;
    let grad = gl_gradient(psi, a, params, b0)?;
    let f =
        crate::potential::build_f_unchecked(b0, psi.grid())?.with_link_scale(params.link_scale());
    let normal = gl_energy_parts(&ComplexField::zeros(*psi.grid(), Bc::Free), &f, params, b0)?;
    let kinetic_over_l2 = if parts.psi2 > 0.0 {
        (parts.kinetic / parts.psi2).sqrt()
    } else {
        0.0
    };
    Ok(CriticalityReport {
        grad_norm: grad.norm(),
        sup_psi: psi.sup_norm(),
        kinetic_over_l2,
        magnetic_energy: parts.magnetic,
        energy: parts.total(),
        psi4_integral: parts.psi4,
        e0: parts.e0(),
        kappa: params.kappa,
        normal_energy: normal.total(),
    })
}

/// Outcome of a full minimization.
#[derive(Debug, Clone)]
pub struct FullResult {
    pub psi: ComplexField,
    pub a: GaugeField,
    pub f: GaugeField,
    pub energy: f64,
    /// `‖(∂E/∂ψ, ∂E/∂c)‖` with `c = curl(A − F)` the block variable.
    pub solver_grad_norm: f64,
    pub iters: usize,
    pub converged: bool,
    pub report: CriticalityReport,
}

/// `A − F = ∇^⊥w` with `w` on plaquettes and zero outside; `curl = −Δ_h w`.
pub(crate) struct StreamMap {
    grid: Grid2D,
    solver: DirichletSolver,
}

impl StreamMap {
    pub fn new(grid: Grid2D) -> Self {
        Self {
            grid,
            solver: DirichletSolver::new(grid.nx() - 1, grid.ny() - 1, grid.h()),
        }
    }

    fn w_at(&self, w: &[f64], i: isize, j: isize) -> f64 {
        let (m, n) = ((self.grid.nx() - 1) as isize, (self.grid.ny() - 1) as isize);
        if i < 0 || j < 0 || i >= m || j >= n {
            0.0
        } else {
            w[(j * m + i) as usize]
        }
    }

    /// Link increments of `∇^⊥w`.
    pub fn links(&self, w: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let g = &self.grid;
        let mut lx = Vec::with_capacity(g.x_edge_count());
        for j in 0..g.ny() as isize {
            for i in 0..g.nx() as isize - 1 {
                lx.push(self.w_at(w, i, j) - self.w_at(w, i, j - 1));
            }
        }
        let mut ly = Vec::with_capacity(g.y_edge_count());
        for j in 0..g.ny() as isize - 1 {
            for i in 0..g.nx() as isize {
                ly.push(-(self.w_at(w, i, j) - self.w_at(w, i - 1, j)));
            }
        }
        (lx, ly)
    }

    /// Adjoint of [`StreamMap::links`].
    pub fn links_adjoint(&self, gx: &[f64], gy: &[f64]) -> Vec<f64> {
        let g = &self.grid;
        let (m, n) = (g.nx() - 1, g.ny() - 1);
        let mut out = vec![0.0; m * n];
        for j in 0..n {
            for i in 0..m {
                let mut v = gx[g.x_edge_idx(i, j)] - gx[g.x_edge_idx(i, j + 1)];
                v += gy[g.y_edge_idx(i + 1, j)] - gy[g.y_edge_idx(i, j)];
                out[j * m + i] = v;
            }
        }
        out
    }

    pub fn w_from_curl(&self, c: &[f64]) -> Vec<f64> {
        self.solver.solve(c)
    }
}

struct PsiBlock<'a> {
    kernel: &'a Kernel,
    co: Coeffs,
    magnetic: f64,
    grad: Vec<Complex64>,
    psi: Vec<Complex64>,
}

impl Objective for PsiBlock<'_> {
    fn dim(&self) -> usize {
        2 * self.psi.len()
    }

    fn value_grad(&mut self, x: &[f64], g: &mut [f64]) -> f64 {
        for (k, z) in self.psi.iter_mut().enumerate() {
            *z = Complex64::new(x[2 * k], x[2 * k + 1]);
        }
        self.grad
            .iter_mut()
            .for_each(|z| *z = Complex64::new(0.0, 0.0));
        let s = self.kernel.eval(&self.psi, self.co, Some(&mut self.grad));
        for (k, z) in self.grad.iter().enumerate() {
            g[2 * k] = z.re;
            g[2 * k + 1] = z.im;
        }
        s.kinetic + self.co.c2 * s.psi2 + 0.5 * self.co.c4 * s.psi4 + self.magnetic
    }
}

struct CurlBlock<'a> {
    grid: Grid2D,
    stream: &'a StreamMap,
    f_lx: &'a [f64],
    f_ly: &'a [f64],
    b_plaq: &'a [f64],
    psi: &'a [Complex64],
    scale: f64,
    potential: f64,
    kernel: Kernel,
}

impl CurlBlock<'_> {
    fn links(&self, c: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let w = self.stream.w_from_curl(c);
        let (mut lx, mut ly) = self.stream.links(&w);
        lx.iter_mut().zip(self.f_lx).for_each(|(a, b)| *a += b);
        ly.iter_mut().zip(self.f_ly).for_each(|(a, b)| *a += b);
        (lx, ly)
    }
}

impl Objective for CurlBlock<'_> {
    fn dim(&self) -> usize {
        self.grid.plaquette_count()
    }

    fn value_grad(&mut self, x: &[f64], g: &mut [f64]) -> f64 {
        let (lx, ly) = self.links(x);
        self.kernel.set_links(self.scale, &lx, &ly);
        let co = Coeffs {
            c_kin: 1.0,
            c2: 0.0,
            c4: 0.0,
        };
        let s = self.kernel.eval(self.psi, co, None);
        let mut gx = vec![0.0; lx.len()];
        let mut gy = vec![0.0; ly.len()];
        self.kernel
            .link_grad(self.psi, 1.0, self.scale, &mut gx, &mut gy);
        let mag = magnetic_term(
            &self.grid,
            &lx,
            &ly,
            self.b_plaq,
            self.scale * self.scale,
            Some((&mut gx, &mut gy)),
        );
        let dw = self.stream.links_adjoint(&gx, &gy);
        let dc = self.stream.w_from_curl(&dw);
        g.copy_from_slice(&dc);
        s.kinetic + self.potential + mag
    }
}

/// Ground state of the full functional on `grid`.
///
/// `A = F + ∇^⊥w` with `w = 0` outside the plaquette array; blocks of NCG
/// alternate between ψ (free boundary values) and `c = −Δ_h w = curl(A − F)`.
pub fn minimize_full(
    params: &GLParams,
    b0: &MagneticProfile,
    grid: &Grid2D,
    opts: &MinimizeOptions,
) -> Result<FullResult> {
    opts.validate()?;
    let f = build_f(b0, grid)?.with_link_scale(params.link_scale());
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
        opts.seed,
        &[
            params.kappa.to_bits(),
            params.h_field.to_bits(),
            grid.nx() as u64,
            grid.ny() as u64,
        ],
    ));
    let psi0: Vec<f64> = (0..2 * grid.len())
        .map(|_| rng.random_range(-0.5..0.5))
        .collect();
    let c0 = vec![0.0; grid.plaquette_count()];
    minimize_full_from(params, b0, grid, f, psi0, c0, opts)
}

pub(crate) fn minimize_full_from(
    params: &GLParams,
    b0: &MagneticProfile,
    grid: &Grid2D,
    f: GaugeField,
    mut psi_x: Vec<f64>,
    mut c: Vec<f64>,
    opts: &MinimizeOptions,
) -> Result<FullResult> {
    let s = params.link_scale();
    let k2 = params.kappa * params.kappa;
    let co = Coeffs {
        c_kin: 1.0,
        c2: -k2,
        c4: k2,
    };
    let stream = StreamMap::new(*grid);
    let b_plaq = grid.sample_plaquettes(|x| b0.b0(x));
    let block = opts.block_iters.max(1);
    let mut iters = 0;
    let mut energy;
    let mut gnorm;
    let mut kernel = Kernel::from_field(&f);
    let mut links;
    loop {
        // Current links and the ψ-block.
        let mut cb = CurlBlock {
            grid: *grid,
            stream: &stream,
            f_lx: f.link_x(),
            f_ly: f.link_y(),
            b_plaq: &b_plaq,
            psi: &[],
            scale: s,
            potential: 0.0,
            kernel: kernel.clone(),
        };
        links = cb.links(&c);
        kernel.set_links(s, &links.0, &links.1);
        let magnetic = magnetic_term(grid, &links.0, &links.1, &b_plaq, s * s, None);
        let mut pb = PsiBlock {
            kernel: &kernel,
            co,
            magnetic,
            grad: vec![Complex64::new(0.0, 0.0); grid.len()],
            psi: vec![Complex64::new(0.0, 0.0); grid.len()],
        };
        let mut gpsi = vec![0.0; psi_x.len()];
        energy = pb.value_grad(&psi_x, &mut gpsi);
        let mut gc = vec![0.0; c.len()];
        let psi_vals: Vec<Complex64> = psi_x
            .chunks(2)
            .map(|p| Complex64::new(p[0], p[1]))
            .collect();
        let sums = kernel.eval(&psi_vals, co, None);
        cb.psi = &psi_vals;
        cb.potential = co.c2 * sums.psi2 + 0.5 * co.c4 * sums.psi4;
        cb.value_grad(&c, &mut gc);
        let g2: f64 = gpsi.iter().chain(&gc).map(|v| v * v).sum();
        gnorm = g2.sqrt();
        let target = opts.grad_tol * (1.0 + energy.abs());
        if gnorm <= target || iters >= opts.max_iters {
            break;
        }
        // ψ-block.
        let tol = 0.5 * target / (1.0 + energy.abs());
        let r = ncg::minimize(&mut pb, psi_x, &opts.ncg(block, tol));
        iters += r.iters;
        psi_x = r.x;
        // c-block with ψ frozen.
        let psi_vals: Vec<Complex64> = psi_x
            .chunks(2)
            .map(|p| Complex64::new(p[0], p[1]))
            .collect();
        let sums = kernel.eval(&psi_vals, co, None);
        cb.psi = &psi_vals;
        cb.potential = co.c2 * sums.psi2 + 0.5 * co.c4 * sums.psi4;
        let r = ncg::minimize(&mut cb, c, &opts.ncg(block, tol));
        iters += r.iters;
        c = r.x;
    }
    let converged = gnorm <= opts.grad_tol * (1.0 + energy.abs());
    let psi_vals: Vec<Complex64> = psi_x
        .chunks(2)
        .map(|p| Complex64::new(p[0], p[1]))
        .collect();
    let psi = ComplexField::new(*grid, psi_vals, Bc::Free)?;
    let a = GaugeField::from_links(*grid, links.0, links.1, s)?;
    let report = criticality_report(&psi, &a, params, b0)?;
    Ok(FullResult {
        psi,
        a,
        f,
        energy,
        solver_grad_norm: gnorm,
        iters,
        converged,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::reduced_energy;

    #[test]
    fn stream_links_have_curl_of_minus_laplacian() {
        let g = Grid2D::new([0.0, 0.0], 1.0, 1.0, 7, 7).unwrap();
        let sm = StreamMap::new(g);
        let w: Vec<f64> = (0..36).map(|k| ((k * 13 % 7) as f64) * 0.1).collect();
        let (lx, ly) = sm.links(&w);
        let curl = crate::grid::discrete_curl(&GaugeField::from_links(g, lx, ly, 1.0).unwrap());
        let expect = sm.solver.apply(&w, g.h());
        for (a, b) in curl.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn stream_adjoint() {
        let g = Grid2D::new([0.0, 0.0], 1.0, 1.0, 6, 6).unwrap();
        let sm = StreamMap::new(g);
        let w: Vec<f64> = (0..25).map(|k| (k as f64 * 0.37).sin()).collect();
        let gx: Vec<f64> = (0..g.x_edge_count())
            .map(|k| (k as f64 * 0.11).cos())
            .collect();
        let gy: Vec<f64> = (0..g.y_edge_count())
            .map(|k| (k as f64 * 0.23).sin())
            .collect();
        let (lx, ly) = sm.links(&w);
        let lhs: f64 = lx.iter().zip(&gx).map(|(a, b)| a * b).sum::<f64>()
            + ly.iter().zip(&gy).map(|(a, b)| a * b).sum::<f64>();
        let adj = sm.links_adjoint(&gx, &gy);
        let rhs: f64 = w.iter().zip(&adj).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn strong_field_cell_is_normal() {
        let r = minimize_reduced(
            1.5,
            1,
            6.0,
            Resolution::Spacing(0.25),
            &MinimizeOptions::reduced(),
        )
        .unwrap();
        assert!(r.converged);
        assert!(r.m0 <= 0.0 && r.m0 >= -1e-8, "m0 = {}", r.m0);
        assert!(r.u.sup_norm() < 1e-3);
    }

    #[test]
    fn conjugate_cells_agree() {
        let opts = MinimizeOptions::reduced();
        let p = minimize_reduced(0.5, 1, 4.0, Resolution::Spacing(0.25), &opts).unwrap();
        let m = minimize_reduced(0.5, -1, 4.0, Resolution::Spacing(0.25), &opts).unwrap();
        assert!((p.m0 - m.m0).abs() <= 1e-10);
        assert!(p.m0 < 0.0);
        let again = reduced_energy(&p.u, 0.5, 1, 4.0).unwrap();
        assert!((again - p.m0).abs() < 1e-10);
    }

    #[test]
    fn field_free_cell_is_pointwise() {
        // b = 0 decouples nodes: |u| = 1 at every interior node.
        let r = 8.0;
        let res = minimize_reduced(
            0.0,
            1,
            r,
            Resolution::Spacing(0.25),
            &MinimizeOptions::reduced(),
        )
        .unwrap();
        let exact = -0.5 * (r - 0.25) * (r - 0.25);
        assert!((res.m0 - exact).abs() < 1e-9, "{} vs {exact}", res.m0);
    }
}
