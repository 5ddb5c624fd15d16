//! Discrete Ginzburg-Landau functionals, local energies and gradients.
//!
//! Kinetic terms are edge sums `Σ_e (w_e/h²)|U_e ψ_q − ψ_p|²`, potential
//! terms node sums with trapezoidal weights, and the magnetic term a
//! plaquette sum with `B₀` sampled at plaquette centers. Gradients use the
//! real convention `∂/∂Re + i ∂/∂Im`.

use num_complex::Complex64;

use crate::error::{GlError, Result};
use crate::grid::{
    covariant_diff, curl_of_links, edge_density_to_nodes, link_phases_of, Bc, ComplexField,
    GaugeField, Grid2D, MagneticProfile, NodeRect,
};
use crate::potential::canonical_a0;

/// `κ` and the applied field intensity `H`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GLParams {
    pub kappa: f64,
    pub h_field: f64,
}

impl GLParams {
    pub fn new(kappa: f64, h_field: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite() && h_field > 0.0 && h_field.is_finite()) {
            return Err(GlError::Config(format!(
                "kappa and H must be positive and finite, got {kappa}, {h_field}"
            )));
        }
        Ok(Self { kappa, h_field })
    }

    /// Link scale `κH` used in the covariant derivative.
    pub fn link_scale(&self) -> f64 {
        self.kappa * self.h_field
    }

    pub fn ratio(&self) -> f64 {
        self.h_field / self.kappa
    }
}

/// Pieces of the full functional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParts {
    /// `‖(∇ − iκHA)ψ‖²`
    pub kinetic: f64,
    /// `∫|ψ|²`
    pub psi2: f64,
    /// `∫|ψ|⁴`
    pub psi4: f64,
    /// `(κH)² ∫|curl A − B₀|²`
    pub magnetic: f64,
    pub kappa: f64,
}

impl EnergyParts {
    /// Energy without the magnetic term.
    pub fn e0(&self) -> f64 {
        let k2 = self.kappa * self.kappa;
        self.kinetic - k2 * self.psi2 + 0.5 * k2 * self.psi4
    }

    pub fn total(&self) -> f64 {
        self.e0() + self.magnetic
    }
}

/// Coefficients of `c_kin|(∇ − isA)ψ|² + c2|ψ|² + (c4/2)|ψ|⁴`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Coeffs {
    pub c_kin: f64,
    pub c2: f64,
    pub c4: f64,
}

/// Precomputed link phases plus quadrature data for repeated evaluation.
#[derive(Debug, Clone)]
pub(crate) struct Kernel {
    pub grid: Grid2D,
    pub ux: Vec<Complex64>,
    pub uy: Vec<Complex64>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Sums {
    pub kinetic: f64,
    pub psi2: f64,
    pub psi4: f64,
}

impl Kernel {
    pub fn new(grid: Grid2D, scale: f64, lx: &[f64], ly: &[f64]) -> Self {
        let (ux, uy) = link_phases_of(scale, lx, ly);
        Self {
            grid,
            ux,
            uy,
            weights: grid.node_weights(),
        }
    }

    pub fn from_field(a: &GaugeField) -> Self {
        Self::new(*a.grid(), a.link_scale(), a.link_x(), a.link_y())
    }

    pub fn set_links(&mut self, scale: f64, lx: &[f64], ly: &[f64]) {
        let (ux, uy) = link_phases_of(scale, lx, ly);
        self.ux = ux;
        self.uy = uy;
    }

    /// Unscaled sums; adds `∂E/∂ψ` into `grad` when given.
    pub fn eval(&self, psi: &[Complex64], co: Coeffs, mut grad: Option<&mut [Complex64]>) -> Sums {
        let g = &self.grid;
        let (nx, ny) = (g.nx(), g.ny());
        let inv_h2 = 1.0 / (g.h() * g.h());
        let mut kin = 0.0;
        for j in 0..ny {
            let cw = g.x_edge_weight(j) * inv_h2;
            let base = j * nx;
            let ebase = j * (nx - 1);
            for i in 0..nx - 1 {
                let p = base + i;
                let u = self.ux[ebase + i];
                let t = u * psi[p + 1] - psi[p];
                kin += cw * t.norm_sqr();
                if let Some(gr) = grad.as_deref_mut() {
                    let c = 2.0 * co.c_kin * cw;
                    gr[p] -= t * c;
                    gr[p + 1] += u.conj() * t * c;
                }
            }
        }
        for j in 0..ny - 1 {
            let base = j * nx;
            for i in 0..nx {
                let cw = g.y_edge_weight(i) * inv_h2;
                let p = base + i;
                let q = p + nx;
                let u = self.uy[p];
                let t = u * psi[q] - psi[p];
                kin += cw * t.norm_sqr();
                if let Some(gr) = grad.as_deref_mut() {
                    let c = 2.0 * co.c_kin * cw;
                    gr[p] -= t * c;
                    gr[q] += u.conj() * t * c;
                }
            }
        }
        let mut psi2 = 0.0;
        let mut psi4 = 0.0;
        for (p, z) in psi.iter().enumerate() {
            let w = self.weights[p];
            let r2 = z.norm_sqr();
            psi2 += w * r2;
            psi4 += w * r2 * r2;
            if let Some(gr) = grad.as_deref_mut() {
                gr[p] += z * (2.0 * w * (co.c2 + co.c4 * r2));
            }
        }
        Sums {
            kinetic: kin,
            psi2,
            psi4,
        }
    }

    /// Adds `∂E_kin/∂L` for kinetic coefficient `c_kin` and link scale `s`.
    pub fn link_grad(
        &self,
        psi: &[Complex64],
        c_kin: f64,
        s: f64,
        glx: &mut [f64],
        gly: &mut [f64],
    ) {
        let g = &self.grid;
        let (nx, ny) = (g.nx(), g.ny());
        let inv_h2 = 1.0 / (g.h() * g.h());
        for j in 0..ny {
            let c = 2.0 * c_kin * s * g.x_edge_weight(j) * inv_h2;
            for i in 0..nx - 1 {
                let p = j * nx + i;
                let e = j * (nx - 1) + i;
                let uq = self.ux[e] * psi[p + 1];
                let t = uq - psi[p];
                glx[e] += c * (t.conj() * uq).im;
            }
        }
        for j in 0..ny - 1 {
            for i in 0..nx {
                let c = 2.0 * c_kin * s * g.y_edge_weight(i) * inv_h2;
                let p = j * nx + i;
                let uq = self.uy[p] * psi[p + nx];
                let t = uq - psi[p];
                gly[p] += c * (t.conj() * uq).im;
            }
        }
    }
}

/// Magnetic term `coef·Σ_P h²(curl_P − B_P)²`; adds `∂/∂L` when asked.
pub(crate) fn magnetic_term(
    g: &Grid2D,
    lx: &[f64],
    ly: &[f64],
    b_plaq: &[f64],
    coef: f64,
    grad: Option<(&mut [f64], &mut [f64])>,
) -> f64 {
    let curl = curl_of_links(g, lx, ly);
    let h2 = g.h() * g.h();
    let mut e = 0.0;
    for (c, b) in curl.iter().zip(b_plaq) {
        e += h2 * (c - b) * (c - b);
    }
    if let Some((gx, gy)) = grad {
        for j in 0..g.ny() - 1 {
            for i in 0..g.nx() - 1 {
                let p = g.plaquette_idx(i, j);
                let d = 2.0 * coef * (curl[p] - b_plaq[p]);
                gx[g.x_edge_idx(i, j)] += d;
                gy[g.y_edge_idx(i + 1, j)] += d;
                gx[g.x_edge_idx(i, j + 1)] -= d;
                gy[g.y_edge_idx(i, j)] -= d;
            }
        }
    }
    coef * e
}

fn check_pair(psi: &ComplexField, a: &GaugeField, params: &GLParams) -> Result<()> {
    if psi.grid() != a.grid() {
        return Err(GlError::GridMismatch("psi and A on different grids"));
    }
    let s = params.link_scale();
    if (a.link_scale() - s).abs() > 1e-12 * s {
        return Err(GlError::Config(format!(
            "potential carries link scale {} but kappa*H = {s}",
            a.link_scale()
        )));
    }
    Ok(())
}

fn gl_coeffs(params: &GLParams) -> Coeffs {
    let k2 = params.kappa * params.kappa;
    Coeffs {
        c_kin: 1.0,
        c2: -k2,
        c4: k2,
    }
}

/// All terms of the full functional.
pub fn gl_energy_parts(
    psi: &ComplexField,
    a: &GaugeField,
    params: &GLParams,
    b0: &MagneticProfile,
) -> Result<EnergyParts> {
    check_pair(psi, a, params)?;
    let g = psi.grid();
    let sums = Kernel::from_field(a).eval(psi.values(), gl_coeffs(params), None);
    let b_plaq = g.sample_plaquettes(|x| b0.b0(x));
    let s = params.link_scale();
    let magnetic = magnetic_term(g, a.link_x(), a.link_y(), &b_plaq, s * s, None);
    Ok(EnergyParts {
        kinetic: sums.kinetic,
        psi2: sums.psi2,
        psi4: sums.psi4,
        magnetic,
        kappa: params.kappa,
    })
}

/// The full functional `E_{κ,H}(ψ, A)`.
pub fn gl_energy(
    psi: &ComplexField,
    a: &GaugeField,
    params: &GLParams,
    b0: &MagneticProfile,
) -> Result<f64> {
    Ok(gl_energy_parts(psi, a, params, b0)?.total())
}

/// Node energy density `e(ψ, A)`; edge kinetic terms are split evenly
/// between their endpoints.
pub fn energy_density(psi: &ComplexField, a: &GaugeField, params: &GLParams) -> Result<Vec<f64>> {
    check_pair(psi, a, params)?;
    let d = covariant_diff(psi, a)?;
    let mut dens = edge_density_to_nodes(psi.grid(), &d);
    let k2 = params.kappa * params.kappa;
    for (e, z) in dens.iter_mut().zip(psi.values()) {
        let r2 = z.norm_sqr();
        *e += -k2 * r2 + 0.5 * k2 * r2 * r2;
    }
    Ok(dens)
}

/// `E₀(ψ, A; D)` on a node rectangle with trapezoidal weights relative to `D`.
pub fn local_energy(
    psi: &ComplexField,
    a: &GaugeField,
    params: &GLParams,
    d: &NodeRect,
) -> Result<f64> {
    check_rect(psi.grid(), d)?;
    let dens = energy_density(psi, a, params)?;
    Ok(crate::grid::integrate_rect(&dens, psi.grid(), d))
}

pub(crate) fn check_rect(g: &Grid2D, d: &NodeRect) -> Result<()> {
    if d.is_degenerate() {
        return Err(GlError::Domain(format!("empty subdomain {d:?}")));
    }
    if !d.fits(g) {
        return Err(GlError::Domain(format!("subdomain {d:?} exceeds the grid")));
    }
    Ok(())
}

/// The reduced cell functional `∫ b|(∇ − iσA₀)u|² − |u|² + ½|u|⁴` on `Q_R`.
pub fn reduced_energy(u: &ComplexField, b: f64, sigma: i8, r: f64) -> Result<f64> {
    if u.bc() != Bc::DirichletZero {
        return Err(GlError::Domain(
            "reduced energy needs a dirichlet field".into(),
        ));
    }
    check_sigma(sigma)?;
    if !(b >= 0.0 && b.is_finite()) {
        return Err(GlError::Config(format!("b must be non-negative, got {b}")));
    }
    let g = u.grid();
    let o = g.origin();
    let tol = 1e-9 * r.max(1.0);
    if (g.side_x() - r).abs() > tol
        || (g.side_y() - r).abs() > tol
        || (o[0] + r / 2.0).abs() > tol
        || (o[1] + r / 2.0).abs() > tol
    {
        return Err(GlError::GridMismatch(
            "reduced grid must be Q_R centered at the origin",
        ));
    }
    let k = reduced_kernel(*g, sigma);
    let s = k.eval(u.values(), reduced_coeffs(b), None);
    Ok(b * s.kinetic - s.psi2 + 0.5 * s.psi4)
}

pub(crate) fn check_sigma(sigma: i8) -> Result<()> {
    if sigma == 1 || sigma == -1 {
        Ok(())
    } else {
        Err(GlError::Config(format!(
            "sigma must be +1 or -1, got {sigma}"
        )))
    }
}

pub(crate) fn reduced_coeffs(b: f64) -> Coeffs {
    Coeffs {
        c_kin: b,
        c2: -1.0,
        c4: 1.0,
    }
}

pub(crate) fn reduced_kernel(g: Grid2D, sigma: i8) -> Kernel {
    let a0 = GaugeField::from_fn(g, f64::from(sigma), canonical_a0);
    Kernel::from_field(&a0)
}

/// Gradient of the discrete functional.
#[derive(Debug, Clone)]
pub struct GlGradient {
    /// `∂E/∂Re ψ + i ∂E/∂Im ψ` per node.
    pub dpsi: Vec<Complex64>,
    /// `∂E/∂a` per node, through the midpoint link rule.
    pub da: Vec<[f64; 2]>,
    /// `∂E/∂L` per x-edge and y-edge.
    pub dlink_x: Vec<f64>,
    pub dlink_y: Vec<f64>,
}

impl GlGradient {
    pub fn norm(&self) -> f64 {
        let a: f64 = self.dpsi.iter().map(|z| z.norm_sqr()).sum();
        let b: f64 = self.da.iter().map(|v| v[0] * v[0] + v[1] * v[1]).sum();
        (a + b).sqrt()
    }
}

/// Exact gradient of [`gl_energy`].
pub fn gl_gradient(
    psi: &ComplexField,
    a: &GaugeField,
    params: &GLParams,
    b0: &MagneticProfile,
) -> Result<GlGradient> {
    check_pair(psi, a, params)?;
    let g = *psi.grid();
    let k = Kernel::from_field(a);
    let mut dpsi = vec![Complex64::new(0.0, 0.0); g.len()];
    k.eval(psi.values(), gl_coeffs(params), Some(&mut dpsi));
    let mut dlx = vec![0.0; g.x_edge_count()];
    let mut dly = vec![0.0; g.y_edge_count()];
    let s = params.link_scale();
    k.link_grad(psi.values(), 1.0, s, &mut dlx, &mut dly);
    let b_plaq = g.sample_plaquettes(|x| b0.b0(x));
    magnetic_term(
        &g,
        a.link_x(),
        a.link_y(),
        &b_plaq,
        s * s,
        Some((&mut dlx, &mut dly)),
    );
    let da = link_grad_to_nodes(&g, &dlx, &dly);
    Ok(GlGradient {
        dpsi,
        da,
        dlink_x: dlx,
        dlink_y: dly,
    })
}

/// Chain rule through `L = h(a_p + a_q)/2`.
pub(crate) fn link_grad_to_nodes(g: &Grid2D, dlx: &[f64], dly: &[f64]) -> Vec<[f64; 2]> {
    let hh = 0.5 * g.h();
    let mut da = vec![[0.0; 2]; g.len()];
    for j in 0..g.ny() {
        for i in 0..g.nx() - 1 {
            let d = hh * dlx[g.x_edge_idx(i, j)];
            da[g.idx(i, j)][0] += d;
            da[g.idx(i + 1, j)][0] += d;
        }
    }
    for j in 0..g.ny() - 1 {
        for i in 0..g.nx() {
            let d = hh * dly[g.y_edge_idx(i, j)];
            da[g.idx(i, j)][1] += d;
            da[g.idx(i, j + 1)][1] += d;
        }
    }
    da
}

/// Terms of the discrete integration-by-parts identity on `D`:
/// `E₀(D) + ½κ²∫_D|ψ|⁴ = ½Σ_p r_p Re(ψ̄_p G_p) + boundary(D)` with
/// `r_p = W^D_p/W_p` and `G` the ψ-gradient.
#[derive(Debug, Clone, Copy)]
pub struct IbpTerms {
    pub e0: f64,
    pub psi4: f64,
    pub boundary: f64,
    pub gradient_pairing: f64,
}

pub fn ibp_terms(
    psi: &ComplexField,
    a: &GaugeField,
    params: &GLParams,
    d: &NodeRect,
) -> Result<IbpTerms> {
    check_pair(psi, a, params)?;
    let g = *psi.grid();
    check_rect(&g, d)?;
    let k = Kernel::from_field(a);
    let v = psi.values();
    let mut dpsi = vec![Complex64::new(0.0, 0.0); g.len()];
    k.eval(v, gl_coeffs(params), Some(&mut dpsi));
    let r = |i: usize, j: usize| d.weight(&g, i, j) / g.node_weight(i, j);
    let inv_h2 = 1.0 / (g.h() * g.h());
    let mut boundary = 0.0;
    let mut edge = |p: usize, q: usize, rp: f64, rq: f64, u: Complex64, c: f64| {
        if rp == 0.0 && rq == 0.0 {
            return;
        }
        let jp = c * (v[p].conj() * (v[p] - u * v[q])).re;
        let jq = c * (v[q].conj() * (v[q] - u.conj() * v[p])).re;
        boundary += 0.5 * (rp * (jq - jp) + rq * (jp - jq));
    };
    for j in 0..g.ny() {
        for i in 0..g.nx() - 1 {
            let c = g.x_edge_weight(j) * inv_h2;
            edge(
                g.idx(i, j),
                g.idx(i + 1, j),
                r(i, j),
                r(i + 1, j),
                k.ux[g.x_edge_idx(i, j)],
                c,
            );
        }
    }
    for j in 0..g.ny() - 1 {
        for i in 0..g.nx() {
            let c = g.y_edge_weight(i) * inv_h2;
            edge(
                g.idx(i, j),
                g.idx(i, j + 1),
                r(i, j),
                r(i, j + 1),
                k.uy[g.y_edge_idx(i, j)],
                c,
            );
        }
    }
    let mut pairing = 0.0;
    let mut psi4 = 0.0;
    for (i, j) in g.nodes() {
        let p = g.idx(i, j);
        let rp = r(i, j);
        if rp > 0.0 {
            pairing += 0.5 * rp * (v[p].conj() * dpsi[p]).re;
            psi4 += d.weight(&g, i, j) * v[p].norm_sqr().powi(2);
        }
    }
    let e0 = local_energy(psi, a, params, d)?;
    Ok(IbpTerms {
        e0,
        psi4,
        boundary,
        gradient_pairing: pairing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{integrate, Point};
    use crate::potential::{build_f, gauge_transform};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit(n: usize) -> Grid2D {
        Grid2D::new([0.0, 0.0], 1.0, 1.0, n, n).unwrap()
    }

    fn random_pair(g: Grid2D, s: f64, seed: u64) -> (ComplexField, GaugeField) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = (0..g.len())
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let a = (0..g.len())
            .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
            .collect();
        (
            ComplexField::new(g, v, Bc::Free).unwrap(),
            GaugeField::from_nodes(g, a, s).unwrap(),
        )
    }

    /// Straight-line evaluation from node samples, written independently.
    fn oracle_energy(
        psi: &ComplexField,
        a: &GaugeField,
        p: &GLParams,
        b0: &MagneticProfile,
    ) -> f64 {
        let g = psi.grid();
        let h = g.h();
        let s = p.kappa * p.h_field;
        let an = a.nodes();
        let mut total = 0.0;
        let wt = |k: usize, n: usize| if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
        for j in 0..g.ny() {
            for i in 0..g.nx() {
                let z = psi.get(i, j);
                let w = wt(i, g.nx()) * wt(j, g.ny()) * h * h;
                let k2 = p.kappa * p.kappa;
                total += w * (-k2 * z.norm_sqr() + 0.5 * k2 * z.norm_sqr().powi(2));
                if i + 1 < g.nx() {
                    let l = 0.5 * h * (an[g.idx(i, j)][0] + an[g.idx(i + 1, j)][0]);
                    let t = Complex64::from_polar(1.0, -s * l) * psi.get(i + 1, j) - z;
                    total += wt(j, g.ny()) * t.norm_sqr();
                }
                if j + 1 < g.ny() {
                    let l = 0.5 * h * (an[g.idx(i, j)][1] + an[g.idx(i, j + 1)][1]);
                    let t = Complex64::from_polar(1.0, -s * l) * psi.get(i, j + 1) - z;
                    total += wt(i, g.nx()) * t.norm_sqr();
                }
                if i + 1 < g.nx() && j + 1 < g.ny() {
                    let ax = |ii: usize, jj: usize| an[g.idx(ii, jj)][0];
                    let ay = |ii: usize, jj: usize| an[g.idx(ii, jj)][1];
                    let circ = 0.5 * h * (ax(i, j) + ax(i + 1, j))
                        + 0.5 * h * (ay(i + 1, j) + ay(i + 1, j + 1))
                        - 0.5 * h * (ax(i, j + 1) + ax(i + 1, j + 1))
                        - 0.5 * h * (ay(i, j) + ay(i, j + 1));
                    let c: Point = [
                        g.origin()[0] + (i as f64 + 0.5) * h,
                        g.origin()[1] + (j as f64 + 0.5) * h,
                    ];
                    let d = circ / (h * h) - b0.b0(c);
                    total += s * s * h * h * d * d;
                }
            }
        }
        total
    }

    #[test]
    fn energy_matches_oracle() {
        let g = unit(8);
        let p = GLParams::new(3.0, 2.0).unwrap();
        let b0 = MagneticProfile::linear(1.0, 0.5);
        for seed in 0..3 {
            let (psi, a) = random_pair(g, p.link_scale(), seed);
            let e = gl_energy(&psi, &a, &p, &b0).unwrap();
            assert_relative_eq!(e, oracle_energy(&psi, &a, &p, &b0), max_relative = 1e-12);
        }
    }

    #[test]
    fn normal_state_energy_is_small() {
        let g = unit(33);
        let p = GLParams::new(4.0, 3.0).unwrap();
        let b0 = MagneticProfile::constant(1.0);
        let f = build_f(&b0, &g).unwrap().with_link_scale(p.link_scale());
        let e = gl_energy(&ComplexField::zeros(g, Bc::Free), &f, &p, &b0).unwrap();
        let s = p.link_scale();
        assert!(e.abs() <= 1e-6 * s * s * g.h() * g.h() * 1e3, "E = {e}");
    }

    #[test]
    fn superconducting_state_without_field() {
        let g = Grid2D::new([0.0, 0.0], 2.0, 1.0, 9, 5).unwrap();
        let p = GLParams::new(5.0, 1.0).unwrap();
        let b0 = MagneticProfile::constant(0.0);
        let psi = ComplexField::from_fn(g, Bc::Free, |_| Complex64::new(1.0, 0.0));
        let a = GaugeField::zeros(g, p.link_scale());
        let e = gl_energy(&psi, &a, &p, &b0).unwrap();
        assert_relative_eq!(e, -25.0 * 2.0 / 2.0, max_relative = 1e-14);
        let dens = energy_density(&psi, &a, &p).unwrap();
        assert!(dens.iter().all(|d| (d + 12.5).abs() < 1e-12));
        let gr = gl_gradient(&psi, &a, &p, &b0).unwrap();
        for (i, j) in g.nodes() {
            if !g.is_boundary(i, j) {
                assert!(gr.dpsi[g.idx(i, j)].norm() < 1e-12);
            }
        }
    }

    #[test]
    fn density_integrates_to_local_energy() {
        let g = unit(9);
        let p = GLParams::new(2.0, 1.5).unwrap();
        let b0 = MagneticProfile::constant(1.0);
        let (psi, a) = random_pair(g, p.link_scale(), 7);
        let dens = energy_density(&psi, &a, &p).unwrap();
        let whole = local_energy(&psi, &a, &p, &g.full_rect()).unwrap();
        assert_relative_eq!(integrate(&dens, &g), whole, max_relative = 1e-12);
        let parts = gl_energy_parts(&psi, &a, &p, &b0).unwrap();
        assert_relative_eq!(whole, parts.e0(), max_relative = 1e-12);
        let quads = [(0, 4, 0, 4), (4, 8, 0, 4), (0, 4, 4, 8), (4, 8, 4, 8)];
        let sum: f64 = quads
            .iter()
            .map(|&(i0, i1, j0, j1)| {
                local_energy(&psi, &a, &p, &NodeRect { i0, i1, j0, j1 }).unwrap()
            })
            .sum();
        assert!((sum - whole).abs() <= 1e-12 * whole.abs().max(1.0));
        let empty = NodeRect {
            i0: 3,
            i1: 3,
            j0: 0,
            j1: 4,
        };
        assert!(local_energy(&psi, &a, &p, &empty).is_err());
    }

    #[test]
    fn reduced_energy_symmetries() {
        let r = 4.0;
        let g = Grid2D::square([0.0, 0.0], r, 17).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let vals: Vec<Complex64> = g
            .nodes()
            .map(|(i, j)| {
                let z = Complex64::new(rng_val(&mut rng), rng_val(&mut rng));
                if g.is_boundary(i, j) {
                    Complex64::new(0.0, 0.0)
                } else {
                    z
                }
            })
            .collect();
        let u = ComplexField::new(g, vals, Bc::DirichletZero).unwrap();
        assert_eq!(
            reduced_energy(&ComplexField::zeros(g, Bc::DirichletZero), 0.7, 1, r).unwrap(),
            0.0
        );
        let e1 = reduced_energy(&u, 0.7, 1, r).unwrap();
        let e2 = reduced_energy(&u.conj(), 0.7, -1, r).unwrap();
        assert!((e1 - e2).abs() <= 1e-12 * e1.abs());
        assert!(reduced_energy(&ComplexField::zeros(g, Bc::Free), 0.7, 1, r).is_err());
    }

    fn rng_val(rng: &mut ChaCha8Rng) -> f64 {
        rng.random_range(-1.0..1.0)
    }

    #[test]
    fn reduced_tent_against_summation() {
        // b = 0: only node terms survive.
        let r = 8.0;
        let g = Grid2D::square([0.0, 0.0], r, 33).unwrap();
        let tent = |x: Point| (1.0 - x[0].abs() / 4.0).max(0.0) * (1.0 - x[1].abs() / 4.0).max(0.0);
        let u = ComplexField::from_fn(g, Bc::DirichletZero, |x| Complex64::new(tent(x), 0.0));
        let mut oracle = 0.0;
        for (i, j) in g.nodes() {
            let t = tent(g.node(i, j));
            oracle += g.node_weight(i, j) * (-t * t + 0.5 * t.powi(4));
        }
        assert_relative_eq!(
            reduced_energy(&u, 0.0, 1, r).unwrap(),
            oracle,
            max_relative = 1e-13
        );
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let g = unit(8);
        let p = GLParams::new(2.0, 1.5).unwrap();
        let b0 = MagneticProfile::radial(1.0, 1.0, [0.5, 0.5]);
        let (psi, a) = random_pair(g, p.link_scale(), 11);
        let gr = gl_gradient(&psi, &a, &p, &b0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let an = a.nodes();
        for _ in 0..5 {
            let dv: Vec<Complex64> = (0..g.len())
                .map(|_| Complex64::new(rng_val(&mut rng), rng_val(&mut rng)))
                .collect();
            let dn: Vec<[f64; 2]> = (0..g.len())
                .map(|_| [rng_val(&mut rng), rng_val(&mut rng)])
                .collect();
            let eps = 1e-5;
            let at = |t: f64| {
                let v = psi
                    .values()
                    .iter()
                    .zip(&dv)
                    .map(|(z, d)| z + d * t)
                    .collect();
                let n = an
                    .iter()
                    .zip(&dn)
                    .map(|(x, d)| [x[0] + t * d[0], x[1] + t * d[1]])
                    .collect();
                gl_energy(
                    &ComplexField::new(g, v, Bc::Free).unwrap(),
                    &GaugeField::from_nodes(g, n, p.link_scale()).unwrap(),
                    &p,
                    &b0,
                )
                .unwrap()
            };
            let fd = (at(eps) - at(-eps)) / (2.0 * eps);
            let an_dir: f64 = gr
                .dpsi
                .iter()
                .zip(&dv)
                .map(|(g, d)| g.re * d.re + g.im * d.im)
                .sum::<f64>()
                + gr.da
                    .iter()
                    .zip(&dn)
                    .map(|(g, d)| g[0] * d[0] + g[1] * d[1])
                    .sum::<f64>();
            assert!(
                (fd - an_dir).abs() <= 1e-6 * (1.0 + an_dir.abs()),
                "fd {fd} vs {an_dir}"
            );
        }
    }

    #[test]
    fn normal_state_is_critical() {
        let g = unit(17);
        let p = GLParams::new(3.0, 2.0).unwrap();
        let b0 = MagneticProfile::linear(1.0, -0.5);
        let f = build_f(&b0, &g).unwrap().with_link_scale(p.link_scale());
        let gr = gl_gradient(&ComplexField::zeros(g, Bc::Free), &f, &p, &b0).unwrap();
        assert!(gr.dpsi.iter().all(|z| z.norm() == 0.0));
        // Residual magnetic force is the O(h²) curl mismatch only.
        let s2 = p.link_scale().powi(2);
        assert!(gr
            .da
            .iter()
            .all(|v| v[0].abs() + v[1].abs() < 1e-2 * s2 * g.h()));
    }

    #[test]
    fn gauge_invariance_linear_and_smooth() {
        let g = unit(33);
        let p = GLParams::new(4.0, 2.5).unwrap();
        let b0 = MagneticProfile::constant(1.0);
        let (psi, a) = random_pair(g, p.link_scale(), 2);
        let e = gl_energy(&psi, &a, &p, &b0).unwrap();
        for phi in [
            g.sample(|x| 0.4 * x[0] - 1.3 * x[1]),
            g.sample(|x| x[0] * x[1]),
        ] {
            let (p2, a2) = gauge_transform(&psi, &a, &phi, p.link_scale()).unwrap();
            let e2 = gl_energy(&p2, &a2, &p, &b0).unwrap();
            assert!((e - e2).abs() <= 1e-10 * e.abs(), "{e} vs {e2}");
        }
    }

    #[test]
    fn ibp_identity_terms_balance() {
        let g = unit(9);
        let p = GLParams::new(2.0, 1.0).unwrap();
        let (psi, a) = random_pair(g, p.link_scale(), 9);
        for d in [
            g.full_rect(),
            NodeRect {
                i0: 2,
                i1: 6,
                j0: 1,
                j1: 5,
            },
        ] {
            let t = ibp_terms(&psi, &a, &p, &d).unwrap();
            let lhs = t.e0 + 0.5 * p.kappa * p.kappa * t.psi4;
            assert!((lhs - t.gradient_pairing - t.boundary).abs() < 1e-11 * (1.0 + lhs.abs()));
        }
        let t = ibp_terms(&psi, &a, &p, &g.full_rect()).unwrap();
        assert!(t.boundary.abs() < 1e-12);
    }
}
