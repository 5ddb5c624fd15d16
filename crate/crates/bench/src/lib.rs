//! Fixtures shared by the benchmarks.

use glbulk::{Bc, ComplexField, GLParams, GaugeField, Grid2D, MagneticProfile};
use num_complex::Complex64;

/// Smooth nonzero state with `A = F` on the unit square.
pub fn fixture(n: usize, params: &GLParams) -> (ComplexField, GaugeField, MagneticProfile) {
    let g = Grid2D::new([0.0, 0.0], 1.0, 1.0, n, n).unwrap();
    let b0 = MagneticProfile::constant(1.0);
    let f = glbulk::build_f(&b0, &g)
        .unwrap()
        .with_link_scale(params.link_scale());
    let psi = ComplexField::from_fn(g, Bc::Free, |x| {
        Complex64::from_polar(0.5 + 0.4 * (3.0 * x[0]).sin(), 5.0 * x[0] * x[1])
    });
    (psi, f, b0)
}
