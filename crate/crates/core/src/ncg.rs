//! Polak-Ribière nonlinear conjugate gradients with Armijo backtracking.

/// Smooth objective on `R^n`.
pub trait Objective {
    fn dim(&self) -> usize;
    /// Value at `x`; writes the gradient into `grad`.
    fn value_grad(&mut self, x: &[f64], grad: &mut [f64]) -> f64;
    /// Value only; defaults to discarding the gradient.
    fn value(&mut self, x: &[f64]) -> f64 {
        let mut g = vec![0.0; self.dim()];
        self.value_grad(x, &mut g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NcgOptions {
    pub max_iters: usize,
    /// Stop once `‖∇f‖ ≤ grad_tol·(1 + |f|)`.
    pub grad_tol: f64,
    pub shrink: f64,
    pub sufficient_decrease: f64,
    /// Line-search trials before declaring the direction unusable.
    pub max_backtracks: usize,
    /// Secant steps spent pushing `|∇f·d|` below `curvature·|∇f₀·d|`.
    pub refinements: usize,
    pub curvature: f64,
    /// Relative size of rounding noise in objective values.
    pub value_noise: f64,
}

impl Default for NcgOptions {
    fn default() -> Self {
        Self {
            max_iters: 20_000,
            grad_tol: 1e-8,
            shrink: 0.5,
            sufficient_decrease: 1e-4,
            max_backtracks: 60,
            refinements: 4,
            curvature: 0.1,
            value_noise: 1e-12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NcgResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iters: usize,
    pub evals: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `obj` from `x0`.
///
/// Directions follow PR+ with a Powell restart when successive gradients
/// lose orthogonality; the first trial step is the Barzilai-Borwein length
/// projected on the current direction.
pub fn minimize<O: Objective + ?Sized>(obj: &mut O, x0: Vec<f64>, opts: &NcgOptions) -> NcgResult {
    let n = obj.dim();
    assert_eq!(x0.len(), n);
    let mut x = x0;
    let mut g = vec![0.0; n];
    let mut f = obj.value_grad(&x, &mut g);
    let mut evals = 1;
    let mut gg = dot(&g, &g);
    let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
    let mut g_prev = g.clone();
    let mut x_prev = x.clone();
    let mut step = 0.0_f64;
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut x_try = vec![0.0; n];
    let mut g_try = vec![0.0; n];
    let mut iters = 0;
    let mut stalls = 0;
    loop {
        let gnorm = gg.sqrt();
        if gnorm <= opts.grad_tol * (1.0 + f.abs()) {
            return NcgResult {
                x,
                value: f,
                grad_norm: gnorm,
                iters,
                evals,
                converged: true,
            };
        }
        if iters >= opts.max_iters || !f.is_finite() {
            return NcgResult {
                x,
                value: f,
                grad_norm: gnorm,
                iters,
                evals,
                converged: false,
            };
        }
        let mut gd = dot(&g, &d);
        if gd >= 0.0 {
            d.iter_mut().zip(&g).for_each(|(di, gi)| *di = -gi);
            gd = -gg;
        }
        let dd = dot(&d, &d);
        let mut alpha = if iters == 0 || step == 0.0 {
            1.0 / gnorm.max(1e-300)
        } else {
            let s: Vec<f64> = x.iter().zip(&x_prev).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = g.iter().zip(&g_prev).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            if sy > 0.0 {
                (dot(&s, &s) / sy) * (-gd) / dd
            } else {
                2.0 * step
            }
        };
        if !alpha.is_finite() || alpha <= 0.0 {
            alpha = 1.0 / gnorm.max(1e-300);
        }
        let noise = opts.value_noise * (1.0 + f.abs());
        let mut accepted = false;
        let mut f_new = f;
        for _ in 0..opts.max_backtracks {
            for k in 0..n {
                x_new[k] = x[k] + alpha * d[k];
            }
            f_new = obj.value_grad(&x_new, &mut g_new);
            evals += 1;
            if f_new.is_finite() && f_new <= f + opts.sufficient_decrease * alpha * gd {
                accepted = true;
                break;
            }
            // Approximate Wolfe: below the rounding floor of f, trust the slope.
            if f_new.is_finite() && f_new <= f + noise {
                let dphi = dot(&g_new, &d);
                if dphi <= (1.0 - 2.0 * opts.curvature) * (-gd) && dphi >= 0.9 * gd {
                    accepted = true;
                    break;
                }
            }
            alpha *= opts.shrink;
        }
        if accepted {
            // Secant refinement on φ'(α) = ∇f(x + αd)·d toward a curvature
            // condition; only points that keep sufficient decrease and lower
            // the value replace the accepted one.
            for _ in 0..opts.refinements {
                let dphi = dot(&g_new, &d);
                if dphi.abs() <= opts.curvature * (-gd) {
                    break;
                }
                let secant = alpha * gd / (gd - dphi);
                let trial = if dphi < 0.0 {
                    if secant.is_finite() && secant > alpha {
                        secant.clamp(1.1 * alpha, 4.0 * alpha)
                    } else {
                        4.0 * alpha
                    }
                } else {
                    secant.clamp(0.1 * alpha, 0.9 * alpha)
                };
                for k in 0..n {
                    x_try[k] = x[k] + trial * d[k];
                }
                let f_try = obj.value_grad(&x_try, &mut g_try);
                evals += 1;
                let improves = f_try < f_new && f_try <= f + opts.sufficient_decrease * trial * gd;
                let flatter = f_try <= f + noise && dot(&g_try, &d).abs() < dphi.abs();
                if f_try.is_finite() && (improves || flatter) {
                    std::mem::swap(&mut x_try, &mut x_new);
                    std::mem::swap(&mut g_try, &mut g_new);
                    f_new = f_try;
                    alpha = trial;
                } else {
                    break;
                }
            }
        }
        iters += 1;
        if !accepted {
            // Fall back to steepest descent once; give up if that stalls too.
            stalls += 1;
            if stalls > 2 {
                return NcgResult {
                    x,
                    value: f,
                    grad_norm: gnorm,
                    iters,
                    evals,
                    converged: false,
                };
            }
            d.iter_mut().zip(&g).for_each(|(di, gi)| *di = -gi);
            step = 0.0;
            continue;
        }
        stalls = 0;
        step = alpha;
        std::mem::swap(&mut x_prev, &mut x);
        std::mem::swap(&mut x, &mut x_new);
        std::mem::swap(&mut g_prev, &mut g);
        std::mem::swap(&mut g, &mut g_new);
        f = f_new;
        let gg_new = dot(&g, &g);
        let cross = dot(&g, &g_prev);
        let beta = if cross.abs() >= 0.2 * gg_new || iters % n.max(1) == 0 {
            0.0
        } else {
            ((gg_new - cross) / gg).max(0.0)
        };
        gg = gg_new;
        for k in 0..n {
            d[k] = -g[k] + beta * d[k];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Rosen;
    impl Objective for Rosen {
        fn dim(&self) -> usize {
            2
        }
        fn value_grad(&mut self, x: &[f64], g: &mut [f64]) -> f64 {
            let (a, b) = (x[0], x[1]);
            g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
            g[1] = 200.0 * (b - a * a);
            (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
        }
    }

    struct Quadratic(Vec<f64>);
    impl Objective for Quadratic {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn value_grad(&mut self, x: &[f64], g: &mut [f64]) -> f64 {
            let mut f = 0.0;
            for (k, (xi, ci)) in x.iter().zip(&self.0).enumerate() {
                g[k] = ci * (xi - 1.0);
                f += 0.5 * ci * (xi - 1.0).powi(2);
            }
            f
        }
    }

    #[test]
    fn solves_rosenbrock() {
        let r = minimize(&mut Rosen, vec![-1.2, 1.0], &NcgOptions::default());
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn solves_ill_conditioned_quadratic() {
        let c: Vec<f64> = (0..50).map(|k| 1.0 + k as f64 * 20.0).collect();
        let r = minimize(&mut Quadratic(c), vec![0.0; 50], &NcgOptions::default());
        assert!(r.converged);
        assert!(r.x.iter().all(|x| (x - 1.0).abs() < 1e-8));
    }

    #[test]
    fn flags_iteration_budget() {
        let opts = NcgOptions {
            max_iters: 3,
            ..NcgOptions::default()
        };
        let r = minimize(&mut Rosen, vec![-1.2, 1.0], &opts);
        assert!(!r.converged);
        assert_eq!(r.iters, 3);
    }
}
