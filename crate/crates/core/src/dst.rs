//! Fast Dirichlet Poisson solves on a rectangular array via DST-I.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Solves `(4w − Σ neighbours)/h² = c` on an `m × n` array (row-major, `m`
/// fastest) with zero ghost values outside.
pub struct DirichletSolver {
    m: usize,
    n: usize,
    fft_m: Arc<dyn Fft<f64>>,
    fft_n: Arc<dyn Fft<f64>>,
    inv_eig: Vec<f64>,
}

impl std::fmt::Debug for DirichletSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DirichletSolver")
            .field("m", &self.m)
            .field("n", &self.n)
            .finish()
    }
}

impl DirichletSolver {
    pub fn new(m: usize, n: usize, h: f64) -> Self {
        let mut planner = FftPlanner::new();
        let fft_m = planner.plan_fft_forward(2 * (m + 1));
        let fft_n = planner.plan_fft_forward(2 * (n + 1));
        let sx: Vec<f64> = (1..=m)
            .map(|k| {
                let s = (std::f64::consts::PI * k as f64 / (2.0 * (m + 1) as f64)).sin();
                4.0 * s * s
            })
            .collect();
        let sy: Vec<f64> = (1..=n)
            .map(|k| {
                let s = (std::f64::consts::PI * k as f64 / (2.0 * (n + 1) as f64)).sin();
                4.0 * s * s
            })
            .collect();
        let mut inv_eig = Vec::with_capacity(m * n);
        for ly in &sy {
            for lx in &sx {
                inv_eig.push(h * h / (lx + ly));
            }
        }
        Self {
            m,
            n,
            fft_m,
            fft_n,
            inv_eig,
        }
    }

    pub fn len(&self) -> usize {
        self.m * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Applies the operator itself.
    pub fn apply(&self, w: &[f64], h: f64) -> Vec<f64> {
        let (m, n) = (self.m, self.n);
        let mut out = vec![0.0; m * n];
        let at = |i: isize, j: isize| -> f64 {
            if i < 0 || j < 0 || i >= m as isize || j >= n as isize {
                0.0
            } else {
                w[j as usize * m + i as usize]
            }
        };
        let inv = 1.0 / (h * h);
        for j in 0..n as isize {
            for i in 0..m as isize {
                out[j as usize * m + i as usize] =
                    (4.0 * at(i, j) - at(i - 1, j) - at(i + 1, j) - at(i, j - 1) - at(i, j + 1))
                        * inv;
            }
        }
        out
    }

    /// Returns `w` with operator(`w`) = `c`.
    pub fn solve(&self, c: &[f64]) -> Vec<f64> {
        assert_eq!(c.len(), self.len());
        let mut a = c.to_vec();
        self.dst2(&mut a);
        for (v, s) in a.iter_mut().zip(&self.inv_eig) {
            *v *= s;
        }
        self.dst2(&mut a);
        let norm = 4.0 / ((self.m + 1) * (self.n + 1)) as f64;
        for v in &mut a {
            *v *= norm;
        }
        a
    }

    fn dst2(&self, a: &mut [f64]) {
        let (m, n) = (self.m, self.n);
        let mut buf = vec![Complex64::new(0.0, 0.0); 2 * (m + 1)];
        for j in 0..n {
            dst1(&*self.fft_m, &mut a[j * m..(j + 1) * m], &mut buf);
        }
        let mut col = vec![0.0; n];
        let mut buf = vec![Complex64::new(0.0, 0.0); 2 * (n + 1)];
        for i in 0..m {
            for j in 0..n {
                col[j] = a[j * m + i];
            }
            dst1(&*self.fft_n, &mut col, &mut buf);
            for j in 0..n {
                a[j * m + i] = col[j];
            }
        }
    }
}

/// Unnormalized DST-I: `X_k = Σ_n x_n sin(π n k/(N+1))`, 1-based indices.
fn dst1(fft: &dyn Fft<f64>, x: &mut [f64], buf: &mut [Complex64]) {
    let n = x.len();
    let zero = Complex64::new(0.0, 0.0);
    buf[0] = zero;
    buf[n + 1] = zero;
    for k in 0..n {
        buf[k + 1] = Complex64::new(x[k], 0.0);
        buf[2 * (n + 1) - 1 - k] = Complex64::new(-x[k], 0.0);
    }
    fft.process(buf);
    for k in 0..n {
        x[k] = -0.5 * buf[k + 1].im;
    }
}
