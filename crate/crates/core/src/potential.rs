//! The reference potential `F` with `curl F = B₀`, the canonical potential
//! `A₀`, local quadratic gauge phases and gauge changes.

use num_complex::Complex64;

use crate::error::{GlError, Result};
use crate::grid::{ComplexField, GaugeField, Grid2D, MagneticProfile, NodeRect, Point};

pub const POISSON_TOL: f64 = 1e-10;

/// `A₀(x) = (−x₂/2, x₁/2)`.
#[inline]
pub fn canonical_a0(x: Point) -> [f64; 2] {
    [-0.5 * x[1], 0.5 * x[0]]
}

/// `B·A₀(x − x₀)` sampled on `grid`.
pub fn shifted_a0(grid: Grid2D, center: Point, strength: f64, link_scale: f64) -> GaugeField {
    GaugeField::from_fn(grid, link_scale, |x| {
        let a = canonical_a0([x[0] - center[0], x[1] - center[1]]);
        [strength * a[0], strength * a[1]]
    })
}

/// Result of a Dirichlet Poisson solve.
#[derive(Debug, Clone)]
pub struct PoissonSolution {
    pub f: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Solves `−Δ_h f = rhs` with `f = 0` on the boundary by conjugate gradients
/// on the interior unknowns. `rhs` is sampled at nodes; boundary entries are
/// ignored.
pub fn solve_poisson(grid: &Grid2D, rhs: &[f64]) -> Result<PoissonSolution> {
    if rhs.len() != grid.len() {
        return Err(GlError::GridMismatch(
            "poisson rhs length differs from node count",
        ));
    }
    let (nx, ny) = (grid.nx(), grid.ny());
    let (mx, my) = (nx - 2, ny - 2);
    let n = mx * my;
    let inv = 1.0 / (grid.h() * grid.h());
    let apply = |x: &[f64], out: &mut [f64]| {
        for j in 0..my {
            for i in 0..mx {
                let k = j * mx + i;
                let mut s = 4.0 * x[k];
                if i > 0 {
                    s -= x[k - 1];
                }
                if i + 1 < mx {
                    s -= x[k + 1];
                }
                if j > 0 {
                    s -= x[k - mx];
                }
                if j + 1 < my {
                    s -= x[k + mx];
                }
                out[k] = s * inv;
            }
        }
    };
    let mut b = vec![0.0; n];
    for j in 0..my {
        for i in 0..mx {
            b[j * mx + i] = rhs[grid.idx(i + 1, j + 1)];
        }
    }
    let bnorm = norm(&b);
    let mut x = vec![0.0; n];
    let mut f = vec![0.0; grid.len()];
    if bnorm == 0.0 {
        return Ok(PoissonSolution {
            f,
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let mut r = b.clone();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = dot(&r, &r);
    let max_iters = 10 * grid.len();
    let mut iterations = 0;
    let mut rel = rr.sqrt() / bnorm;
    while rel > POISSON_TOL {
        if iterations >= max_iters {
            return Err(GlError::NonConvergence {
                what: "poisson conjugate gradient",
                iters: iterations,
                residual: rel,
            });
        }
        apply(&p, &mut ap);
        let alpha = rr / dot(&p, &ap);
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for k in 0..n {
            p[k] = r[k] + beta * p[k];
        }
        iterations += 1;
        rel = rr.sqrt() / bnorm;
    }
    // Report the true residual rather than the recursively updated one.
    apply(&x, &mut ap);
    let true_res: f64 = ap
        .iter()
        .zip(&b)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
        / bnorm;
    for j in 0..my {
        for i in 0..mx {
            f[grid.idx(i + 1, j + 1)] = x[j * mx + i];
        }
    }
    Ok(PoissonSolution {
        f,
        iterations,
        relative_residual: true_res,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Second-order node gradient of a scalar field: centered in the interior,
/// one-sided three-point stencils on the boundary.
pub fn node_gradient(grid: &Grid2D, f: &[f64]) -> Vec<[f64; 2]> {
    let (nx, ny) = (grid.nx(), grid.ny());
    let h = grid.h();
    let d = |k0: usize, n: usize, get: &dyn Fn(usize) -> f64| -> f64 {
        if k0 == 0 {
            (-3.0 * get(0) + 4.0 * get(1) - get(2)) / (2.0 * h)
        } else if k0 + 1 == n {
            (3.0 * get(n - 1) - 4.0 * get(n - 2) + get(n - 3)) / (2.0 * h)
        } else {
            (get(k0 + 1) - get(k0 - 1)) / (2.0 * h)
        }
    };
    grid.nodes()
        .map(|(i, j)| {
            let dx = d(i, nx, &|k| f[grid.idx(k, j)]);
            let dy = d(j, ny, &|k| f[grid.idx(i, k)]);
            [dx, dy]
        })
        .collect()
}

/// The reference potential: `F = (∂₂f, −∂₁f)` with `−Δf = B₀`, `f = 0` on
/// the boundary. The returned field has link scale 1.
pub fn build_f(b0: &MagneticProfile, grid: &Grid2D) -> Result<GaugeField> {
    b0.validate_on(grid)?;
    build_f_unchecked(b0, grid)
}

/// Same as [`build_f`] without the non-degeneracy check (allows `B₀ ≡ 0`).
pub fn build_f_unchecked(b0: &MagneticProfile, grid: &Grid2D) -> Result<GaugeField> {
    let rhs = grid.sample(|x| b0.b0(x));
    let sol = solve_poisson(grid, &rhs)?;
    let a = potential_from_stream(grid, &sol.f, &rhs);
    GaugeField::from_nodes(*grid, a, 1.0)
}

/// `(∂₂f, −∂₁f)` by centered differences on `f` extended with ghost values
/// chosen so that `−Δ_h f = B` also holds at boundary nodes. Every plaquette
/// circulation then equals the mean of `B` over its four corners.
fn potential_from_stream(grid: &Grid2D, f: &[f64], b: &[f64]) -> Vec<[f64; 2]> {
    let (nx, ny) = (grid.nx() as isize, grid.ny() as isize);
    let h = grid.h();
    let h2 = h * h;
    let inside = |i: isize, j: isize| (0..nx).contains(&i) && (0..ny).contains(&j);
    let at = |i: isize, j: isize| f[grid.idx(i as usize, j as usize)];
    let ext = |i: isize, j: isize| -> f64 {
        if inside(i, j) {
            return at(i, j);
        }
        // Ghost next to boundary node (bi, bj), mirrored through it.
        let bi = i.clamp(0, nx - 1);
        let bj = j.clamp(0, ny - 1);
        let bval = b[grid.idx(bi as usize, bj as usize)];
        let corner = (bi == 0 || bi == nx - 1) && (bj == 0 || bj == ny - 1);
        if corner {
            -0.5 * h2 * bval
        } else {
            let (mi, mj) = (2 * bi - i, 2 * bj - j);
            -h2 * bval - at(mi, mj)
        }
    };
    let mut out = Vec::with_capacity(grid.len());
    for j in 0..ny {
        for i in 0..nx {
            let dx = (ext(i + 1, j) - ext(i - 1, j)) / (2.0 * h);
            let dy = (ext(i, j + 1) - ext(i, j - 1)) / (2.0 * h);
            out.push([dy, -dx]);
        }
    }
    out
}

/// `B₀ = 2π² sin(πx₁) sin(πx₂)`, for which `f = sin(πx₁) sin(πx₂)` on the
/// unit square.
pub fn manufactured_profile() -> MagneticProfile {
    use std::f64::consts::PI;
    MagneticProfile::new(
        "manufactured",
        |x| 2.0 * PI * PI * (PI * x[0]).sin() * (PI * x[1]).sin(),
        |x| {
            let c = 2.0 * PI * PI * PI;
            [
                c * (PI * x[0]).cos() * (PI * x[1]).sin(),
                c * (PI * x[0]).sin() * (PI * x[1]).cos(),
            ]
        },
    )
}

/// Exact `F` for [`manufactured_profile`].
pub fn manufactured_potential(x: Point) -> [f64; 2] {
    use std::f64::consts::PI;
    [
        PI * (PI * x[0]).sin() * (PI * x[1]).cos(),
        -PI * (PI * x[0]).cos() * (PI * x[1]).sin(),
    ]
}

/// Max node error of [`build_f`] against [`manufactured_potential`]; the grid
/// must be the unit square.
pub fn manufactured_error(grid: &Grid2D) -> Result<f64> {
    let o = grid.origin();
    if o != [0.0, 0.0] || (grid.side_x() - 1.0).abs() > 1e-12 || (grid.side_y() - 1.0).abs() > 1e-12
    {
        return Err(GlError::Config(
            "manufactured solution lives on the unit square".into(),
        ));
    }
    let f = build_f_unchecked(&manufactured_profile(), grid)?;
    Ok(f.nodes()
        .iter()
        .zip(grid.nodes())
        .map(|(a, (i, j))| {
            let e = manufactured_potential(grid.node(i, j));
            ((a[0] - e[0]).powi(2) + (a[1] - e[1]).powi(2)).sqrt()
        })
        .fold(0.0, f64::max))
}

/// Node rectangle covering `Q_ℓ(x₀)` (snapped to nodes), or an error if the
/// square leaves the grid.
pub fn cell_rect(grid: &Grid2D, x0: Point, ell: f64) -> Result<NodeRect> {
    let h = grid.h();
    let o = grid.origin();
    let tol = 1e-9 * h;
    let lo_x = x0[0] - ell / 2.0;
    let hi_x = x0[0] + ell / 2.0;
    let lo_y = x0[1] - ell / 2.0;
    let hi_y = x0[1] + ell / 2.0;
    if lo_x < o[0] - tol
        || lo_y < o[1] - tol
        || hi_x > o[0] + grid.side_x() + tol
        || hi_y > o[1] + grid.side_y() + tol
    {
        return Err(GlError::Domain(format!(
            "cell of side {ell} at ({:.4}, {:.4}) exits the domain",
            x0[0], x0[1]
        )));
    }
    let (i0, j0) = grid.nearest_node([lo_x, lo_y]);
    let (i1, j1) = grid.nearest_node([hi_x, hi_y]);
    let rect = NodeRect { i0, i1, j0, j1 };
    if rect.is_degenerate() {
        return Err(GlError::Domain(format!(
            "cell of side {ell} is below grid resolution {h}"
        )));
    }
    Ok(rect)
}

/// Local gauge phase on a cell.
#[derive(Debug, Clone)]
pub struct LocalPhase {
    pub rect: NodeRect,
    /// `φ₀` at cell nodes, row-major over `rect`.
    pub phi: Vec<f64>,
    /// Field strength `∂₁F₂ − ∂₂F₁` at `x̃₀` from the numerical Jacobian.
    pub b_tilde: f64,
    /// `x̃₀` snapped to the grid.
    pub x_tilde: Point,
    /// `max |F − ∇φ₀ − b_tilde·A₀(x − x₀)|` over cell nodes.
    pub err: f64,
}

impl LocalPhase {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let w = self.rect.i1 - self.rect.i0 + 1;
        self.phi[(j - self.rect.j0) * w + (i - self.rect.i0)]
    }
}

/// Quadratic-plus-linear phase `φ₀` with
/// `F ≈ ∇φ₀ + B₀(x̃₀)A₀(x − x₀)` up to `O(ℓ²)` on `Q_ℓ(x₀)`.
///
/// With `M = DF(x̃₀)` split into symmetric and antisymmetric parts,
/// `φ₀(x) = ½⟨Mˢ(x − x₀), x − x₀⟩ + (F(x̃₀) + M(x₀ − x̃₀))·x`.
pub fn local_gauge_phase(f: &GaugeField, x0: Point, xt: Point, ell: f64) -> Result<LocalPhase> {
    let grid = f.grid();
    let rect = cell_rect(grid, x0, ell)?;
    let h = grid.h();
    let tol = 1e-9 * h + 0.5 * h;
    if xt[0] < x0[0] - ell / 2.0 - tol
        || xt[0] > x0[0] + ell / 2.0 + tol
        || xt[1] < x0[1] - ell / 2.0 - tol
        || xt[1] > x0[1] + ell / 2.0 + tol
    {
        return Err(GlError::Domain("x_tilde lies outside the cell".into()));
    }
    let a = f.nodes();
    let (ti, tj) = grid.nearest_node(xt);
    let x_tilde = grid.node(ti, tj);
    let m = jacobian(grid, &a, ti, tj);
    let ft = a[grid.idx(ti, tj)];
    let b_tilde = m[1][0] - m[0][1];
    let ms = [
        [m[0][0], 0.5 * (m[0][1] + m[1][0])],
        [0.5 * (m[0][1] + m[1][0]), m[1][1]],
    ];
    let d0 = [x0[0] - x_tilde[0], x0[1] - x_tilde[1]];
    let lin = [
        ft[0] + m[0][0] * d0[0] + m[0][1] * d0[1],
        ft[1] + m[1][0] * d0[0] + m[1][1] * d0[1],
    ];
    let mut phi = Vec::new();
    let mut err: f64 = 0.0;
    for j in rect.j0..=rect.j1 {
        for i in rect.i0..=rect.i1 {
            let x = grid.node(i, j);
            let y = [x[0] - x0[0], x[1] - x0[1]];
            let msy = [
                ms[0][0] * y[0] + ms[0][1] * y[1],
                ms[1][0] * y[0] + ms[1][1] * y[1],
            ];
            phi.push(0.5 * (msy[0] * y[0] + msy[1] * y[1]) + lin[0] * x[0] + lin[1] * x[1]);
            let grad = [msy[0] + lin[0], msy[1] + lin[1]];
            let a0 = canonical_a0(y);
            let fx = a[grid.idx(i, j)];
            let r0 = fx[0] - grad[0] - b_tilde * a0[0];
            let r1 = fx[1] - grad[1] - b_tilde * a0[1];
            err = err.max((r0 * r0 + r1 * r1).sqrt());
        }
    }
    Ok(LocalPhase {
        rect,
        phi,
        b_tilde,
        x_tilde,
        err,
    })
}

/// `M[r][c] = ∂_c F_r` at node `(i, j)`, centered where possible.
fn jacobian(grid: &Grid2D, a: &[[f64; 2]], i: usize, j: usize) -> [[f64; 2]; 2] {
    let h = grid.h();
    let (ia, ib, sx) = if i == 0 {
        (0, 1, h)
    } else if i + 1 == grid.nx() {
        (i - 1, i, h)
    } else {
        (i - 1, i + 1, 2.0 * h)
    };
    let (ja, jb, sy) = if j == 0 {
        (0, 1, h)
    } else if j + 1 == grid.ny() {
        (j - 1, j, h)
    } else {
        (j - 1, j + 1, 2.0 * h)
    };
    let ax = |c: usize| (a[grid.idx(ib, j)][c] - a[grid.idx(ia, j)][c]) / sx;
    let ay = |c: usize| (a[grid.idx(i, jb)][c] - a[grid.idx(i, ja)][c]) / sy;
    [[ax(0), ay(0)], [ax(1), ay(1)]]
}

/// `ψ' = ψ·exp(−i·scale·φ)`, `A' = A − ∇_h φ` where `∇_h φ` is the exact edge
/// difference `φ_q − φ_p` on links (node samples shift by the node gradient).
pub fn gauge_transform(
    psi: &ComplexField,
    a: &GaugeField,
    phi: &[f64],
    scale: f64,
) -> Result<(ComplexField, GaugeField)> {
    if psi.grid() != a.grid() {
        return Err(GlError::GridMismatch(
            "gauge_transform: psi and A on different grids",
        ));
    }
    let grid = *psi.grid();
    if phi.len() != grid.len() {
        return Err(GlError::GridMismatch("gauge_transform: phase length"));
    }
    let values = psi
        .values()
        .iter()
        .zip(phi)
        .map(|(z, p)| z * rotation(scale, *p))
        .collect();
    let psi2 = ComplexField::new(grid, values, psi.bc())?;
    let mut a2 = a.clone();
    {
        let (lx, ly) = a2.links_mut();
        for j in 0..grid.ny() {
            for i in 0..grid.nx() - 1 {
                lx[grid.x_edge_idx(i, j)] -= phi[grid.idx(i + 1, j)] - phi[grid.idx(i, j)];
            }
        }
        for j in 0..grid.ny() - 1 {
            for i in 0..grid.nx() {
                ly[grid.y_edge_idx(i, j)] -= phi[grid.idx(i, j + 1)] - phi[grid.idx(i, j)];
            }
        }
    }
    let nodes = a.stored_nodes().map(|nodes| {
        let g = node_gradient(&grid, phi);
        nodes
            .iter()
            .zip(&g)
            .map(|(v, d)| [v[0] - d[0], v[1] - d[1]])
            .collect()
    });
    a2.set_nodes(nodes);
    Ok((psi2, a2))
}

/// `exp(−i·scale·φ)`, conjugation-symmetric in the sign of `scale`.
fn rotation(scale: f64, phi: f64) -> Complex64 {
    let u = Complex64::from_polar(1.0, -scale.abs() * phi);
    if scale < 0.0 {
        u.conj()
    } else {
        u
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{discrete_curl, Bc};

    fn unit(n: usize) -> Grid2D {
        Grid2D::new([0.0, 0.0], 1.0, 1.0, n, n).unwrap()
    }

    #[test]
    fn a0_formula() {
        assert_eq!(canonical_a0([0.0, 0.0]), [0.0, 0.0]);
        assert_eq!(canonical_a0([2.0, 0.0]), [0.0, 1.0]);
        let x = [0.3, -1.7];
        let a = canonical_a0(x);
        assert!((x[0] * a[0] + x[1] * a[1]).abs() < 1e-16);
    }

    #[test]
    fn zero_field_gives_zero_potential() {
        let g = unit(17);
        let f = build_f_unchecked(&MagneticProfile::constant(0.0), &g).unwrap();
        assert!(f.link_x().iter().chain(f.link_y()).all(|l| *l == 0.0));
        assert!(build_f(&MagneticProfile::constant(0.0), &g).is_err());
    }

    #[test]
    fn poisson_residual_meets_tolerance() {
        let g = unit(33);
        let rhs = g.sample(|x| (x[0] * 3.0).sin() + x[1]);
        let sol = solve_poisson(&g, &rhs).unwrap();
        assert!(sol.relative_residual <= 1e-9);
    }

    #[test]
    fn manufactured_second_order() {
        let e: Vec<f64> = [17, 33, 65]
            .iter()
            .map(|&n| manufactured_error(&unit(n)).unwrap())
            .collect();
        let (e1, e2, e3) = (e[0], e[1], e[2]);
        let p1 = (e1 / e2).log2();
        let p2 = (e2 / e3).log2();
        assert!((1.8..=2.2).contains(&p1), "order {p1}");
        assert!((1.8..=2.2).contains(&p2), "order {p2}");
    }

    #[test]
    fn constant_field_curl() {
        let g = unit(65);
        let f = build_f(&MagneticProfile::constant(1.0), &g).unwrap();
        let worst = discrete_curl(&f)
            .iter()
            .map(|c| (c - 1.0).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 5e-3, "worst curl error {worst}");
    }

    #[test]
    fn potential_is_odd_in_field() {
        let g = unit(17);
        let p = build_f(&MagneticProfile::linear(1.0, 0.2), &g).unwrap();
        let m = build_f(&MagneticProfile::linear(-1.0, -0.2), &g).unwrap();
        for (a, b) in p.link_x().iter().zip(m.link_x()) {
            assert!((a + b).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_potential_has_exact_phase() {
        // F = A₀ + ∇(0.3x₁ − 0.2x₂ + 0.4x₁x₂) is linear with curl 1.
        let g = unit(33);
        let f = GaugeField::from_fn(g, 1.0, |x| {
            [
                -0.5 * x[1] + 0.3 + 0.4 * x[1],
                0.5 * x[0] - 0.2 + 0.4 * x[0],
            ]
        });
        let lp = local_gauge_phase(&f, [0.5, 0.5], [0.5, 0.5], 0.25).unwrap();
        assert!(lp.err <= 1e-8, "err {}", lp.err);
        assert!((lp.b_tilde - 1.0).abs() < 1e-10);
        let lp = local_gauge_phase(&f, [0.5, 0.5], [0.625, 0.375], 0.25).unwrap();
        assert!(lp.err <= 1e-8, "err {}", lp.err);
    }

    #[test]
    fn cell_outside_domain_rejected() {
        let g = unit(33);
        let f = GaugeField::zeros(g, 1.0);
        assert!(local_gauge_phase(&f, [0.05, 0.5], [0.05, 0.5], 0.25).is_err());
    }

    #[test]
    fn gauge_transform_constant_phase() {
        let g = unit(9);
        let psi = ComplexField::from_fn(g, Bc::Free, |x| Complex64::new(x[0], x[1]));
        let a = GaugeField::from_fn(g, 2.0, |x| [x[1], 0.0]);
        let (p2, a2) = gauge_transform(&psi, &a, &vec![0.7; g.len()], 2.0).unwrap();
        assert_eq!(a2.link_x(), a.link_x());
        let rot = Complex64::from_polar(1.0, -1.4);
        for (z, w) in psi.values().iter().zip(p2.values()) {
            assert!((z * rot - w).norm() < 1e-15);
        }
    }

    #[test]
    fn gauge_transform_round_trip() {
        let g = unit(9);
        let psi = ComplexField::from_fn(g, Bc::Free, |x| Complex64::new(x[0].cos(), x[1]));
        let a = GaugeField::from_fn(g, 3.0, |x| [x[1] * x[0], -x[0]]);
        let phi = g.sample(|x| (2.0 * x[0]).sin() * x[1]);
        let neg: Vec<f64> = phi.iter().map(|p| -p).collect();
        let (p1, a1) = gauge_transform(&psi, &a, &phi, 3.0).unwrap();
        let (p2, a2) = gauge_transform(&p1, &a1, &neg, 3.0).unwrap();
        for (z, w) in psi.values().iter().zip(p2.values()) {
            assert!((z - w).norm() < 1e-12);
        }
        for (x, y) in a.link_x().iter().zip(a2.link_x()) {
            assert!((x - y).abs() < 1e-12);
        }
        for (x, y) in a.nodes().iter().zip(a2.nodes()) {
            assert!((x[0] - y[0]).abs() < 1e-12 && (x[1] - y[1]).abs() < 1e-12);
        }
    }
}
