//! Discrete geometry on axis-aligned rectangles.
//!
//! Scalars and the order parameter live on nodes. The vector potential is
//! carried by its line integrals along grid edges (link angles), so that the
//! covariant difference `(U_pq ψ_q − ψ_p)/h` with `U_pq = exp(−i s ∫_p^q a·dl)`
//! transforms exactly under any node gauge change. Curls live on plaquettes.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{GlError, Result};

pub type Point = [f64; 2];

/// Uniform isotropic node grid on `[x0, x0 + side_x] × [y0, y0 + side_y]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    origin: Point,
    nx: usize,
    ny: usize,
    h: f64,
}

impl Grid2D {
    pub fn new(origin: Point, side_x: f64, side_y: f64, nx: usize, ny: usize) -> Result<Self> {
        if nx < 3 || ny < 3 {
            return Err(GlError::Config(format!(
                "grid needs at least 3 nodes per side, got {nx}x{ny}"
            )));
        }
        if !(side_x > 0.0 && side_y > 0.0) || !side_x.is_finite() || !side_y.is_finite() {
            return Err(GlError::Config(format!(
                "grid sides must be positive, got {side_x} x {side_y}"
            )));
        }
        let hx = side_x / (nx - 1) as f64;
        let hy = side_y / (ny - 1) as f64;
        if (hx - hy).abs() > 1e-12 * hx.max(1.0) {
            return Err(GlError::Config(format!(
                "anisotropic spacing: hx = {hx}, hy = {hy}"
            )));
        }
        Ok(Self {
            origin,
            nx,
            ny,
            h: hx,
        })
    }

    /// Square `Q_R(center)` with `n` nodes per side.
    pub fn square(center: Point, side: f64, n: usize) -> Result<Self> {
        Self::new(
            [center[0] - side / 2.0, center[1] - side / 2.0],
            side,
            side,
            n,
            n,
        )
    }

    pub fn origin(&self) -> Point {
        self.origin
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn side_x(&self) -> f64 {
        self.h * (self.nx - 1) as f64
    }
    pub fn side_y(&self) -> f64 {
        self.h * (self.ny - 1) as f64
    }
    pub fn area(&self) -> f64 {
        self.side_x() * self.side_y()
    }
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> Point {
        [
            self.origin[0] + i as f64 * self.h,
            self.origin[1] + j as f64 * self.h,
        ]
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i + 1 == self.nx || j + 1 == self.ny
    }

    pub fn plaquette_count(&self) -> usize {
        (self.nx - 1) * (self.ny - 1)
    }

    #[inline]
    pub fn plaquette_idx(&self, i: usize, j: usize) -> usize {
        j * (self.nx - 1) + i
    }

    pub fn plaquette_center(&self, i: usize, j: usize) -> Point {
        [
            self.origin[0] + (i as f64 + 0.5) * self.h,
            self.origin[1] + (j as f64 + 0.5) * self.h,
        ]
    }

    /// Edges `(i,j) → (i+1,j)`, indexed `j*(nx−1) + i`.
    pub fn x_edge_count(&self) -> usize {
        (self.nx - 1) * self.ny
    }

    /// Edges `(i,j) → (i,j+1)`, indexed `j*nx + i`.
    pub fn y_edge_count(&self) -> usize {
        self.nx * (self.ny - 1)
    }

    #[inline]
    pub fn x_edge_idx(&self, i: usize, j: usize) -> usize {
        j * (self.nx - 1) + i
    }

    #[inline]
    pub fn y_edge_idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// 1D trapezoidal weight of node `k` out of `n`.
    #[inline]
    pub fn trapezoid_weight(&self, k: usize, n: usize) -> f64 {
        if k == 0 || k + 1 == n {
            0.5 * self.h
        } else {
            self.h
        }
    }

    #[inline]
    pub fn node_weight(&self, i: usize, j: usize) -> f64 {
        self.trapezoid_weight(i, self.nx) * self.trapezoid_weight(j, self.ny)
    }

    /// Quadrature weight of x-edge `(i,j)`: midpoint in x, trapezoid in y.
    #[inline]
    pub fn x_edge_weight(&self, j: usize) -> f64 {
        self.h * self.trapezoid_weight(j, self.ny)
    }

    #[inline]
    pub fn y_edge_weight(&self, i: usize) -> f64 {
        self.trapezoid_weight(i, self.nx) * self.h
    }

    pub fn node_weights(&self) -> Vec<f64> {
        let mut w = Vec::with_capacity(self.len());
        for j in 0..self.ny {
            for i in 0..self.nx {
                w.push(self.node_weight(i, j));
            }
        }
        w
    }

    pub fn nodes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.ny).flat_map(move |j| (0..self.nx).map(move |i| (i, j)))
    }

    pub fn sample<F: Fn(Point) -> f64>(&self, f: F) -> Vec<f64> {
        self.nodes().map(|(i, j)| f(self.node(i, j))).collect()
    }

    pub fn sample_plaquettes<F: Fn(Point) -> f64>(&self, f: F) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.plaquette_count());
        for j in 0..self.ny - 1 {
            for i in 0..self.nx - 1 {
                out.push(f(self.plaquette_center(i, j)));
            }
        }
        out
    }

    /// Nearest node to `x`, clamped into the grid.
    pub fn nearest_node(&self, x: Point) -> (usize, usize) {
        let fi = ((x[0] - self.origin[0]) / self.h).round();
        let fj = ((x[1] - self.origin[1]) / self.h).round();
        let i = fi.clamp(0.0, (self.nx - 1) as f64) as usize;
        let j = fj.clamp(0.0, (self.ny - 1) as f64) as usize;
        (i, j)
    }

    pub fn full_rect(&self) -> NodeRect {
        NodeRect {
            i0: 0,
            i1: self.nx - 1,
            j0: 0,
            j1: self.ny - 1,
        }
    }

    pub fn same_as(&self, other: &Grid2D) -> bool {
        self == other
    }
}

/// Closed rectangle of node indices `[i0, i1] × [j0, j1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeRect {
    pub i0: usize,
    pub i1: usize,
    pub j0: usize,
    pub j1: usize,
}

impl NodeRect {
    pub fn contains(&self, i: usize, j: usize) -> bool {
        (self.i0..=self.i1).contains(&i) && (self.j0..=self.j1).contains(&j)
    }

    pub fn is_degenerate(&self) -> bool {
        self.i1 <= self.i0 || self.j1 <= self.j0
    }

    pub fn fits(&self, grid: &Grid2D) -> bool {
        self.i1 < grid.nx() && self.j1 < grid.ny() && self.i0 <= self.i1 && self.j0 <= self.j1
    }

    /// Trapezoidal weight of node `(i,j)` relative to this rectangle (0 outside).
    pub fn weight(&self, grid: &Grid2D, i: usize, j: usize) -> f64 {
        if !self.contains(i, j) {
            return 0.0;
        }
        let h = grid.h();
        let wx = if i == self.i0 || i == self.i1 {
            0.5 * h
        } else {
            h
        };
        let wy = if j == self.j0 || j == self.j1 {
            0.5 * h
        } else {
            h
        };
        wx * wy
    }

    pub fn area(&self, grid: &Grid2D) -> f64 {
        (self.i1 - self.i0) as f64 * (self.j1 - self.j0) as f64 * grid.h() * grid.h()
    }
}

/// Boundary-condition tag carried by a [`ComplexField`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bc {
    Free,
    DirichletZero,
}

/// Complex node field (order parameters and trial states).
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: Grid2D,
    values: Vec<Complex64>,
    bc: Bc,
}

impl ComplexField {
    pub fn new(grid: Grid2D, values: Vec<Complex64>, bc: Bc) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(GlError::GridMismatch(
                "field length differs from node count",
            ));
        }
        if values
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(GlError::Domain("non-finite order parameter".into()));
        }
        if bc == Bc::DirichletZero {
            for (i, j) in grid.nodes() {
                if grid.is_boundary(i, j) && values[grid.idx(i, j)] != Complex64::new(0.0, 0.0) {
                    return Err(GlError::Domain(format!(
                        "dirichlet field is nonzero at boundary node ({i},{j})"
                    )));
                }
            }
        }
        Ok(Self { grid, values, bc })
    }

    pub fn zeros(grid: Grid2D, bc: Bc) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
            bc,
        }
    }

    /// Samples `f`; with [`Bc::DirichletZero`] boundary nodes are forced to zero.
    pub fn from_fn<F: Fn(Point) -> Complex64>(grid: Grid2D, bc: Bc, f: F) -> Self {
        let values = grid
            .nodes()
            .map(|(i, j)| {
                if bc == Bc::DirichletZero && grid.is_boundary(i, j) {
                    Complex64::new(0.0, 0.0)
                } else {
                    f(grid.node(i, j))
                }
            })
            .collect();
        Self { grid, values, bc }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }
    pub fn bc(&self) -> Bc {
        self.bc
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.values[self.grid.idx(i, j)]
    }

    pub fn conj(&self) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|z| z.conj()).collect(),
            bc: self.bc,
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn abs_pow(&self, p: i32) -> Vec<f64> {
        self.values
            .iter()
            .map(|z| z.norm_sqr().powf(p as f64 / 2.0))
            .collect()
    }
}

/// Vector potential stored as line integrals `∫ a·dl` along every edge,
/// together with the factor `link_scale` multiplying it in the covariant
/// derivative (κH for the full functional, σ for the reduced one).
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeField {
    grid: Grid2D,
    link_x: Vec<f64>,
    link_y: Vec<f64>,
    nodes: Option<Vec<[f64; 2]>>,
    link_scale: f64,
}

impl GaugeField {
    /// Builds the edge integrals from node samples by the midpoint rule
    /// applied to the linear interpolant along each edge.
    pub fn from_nodes(grid: Grid2D, a: Vec<[f64; 2]>, link_scale: f64) -> Result<Self> {
        if a.len() != grid.len() {
            return Err(GlError::GridMismatch(
                "potential length differs from node count",
            ));
        }
        if a.iter().any(|v| !v[0].is_finite() || !v[1].is_finite()) {
            return Err(GlError::Domain("non-finite vector potential".into()));
        }
        let h = grid.h();
        let mut link_x = Vec::with_capacity(grid.x_edge_count());
        for j in 0..grid.ny() {
            for i in 0..grid.nx() - 1 {
                let p = a[grid.idx(i, j)][0];
                let q = a[grid.idx(i + 1, j)][0];
                link_x.push(0.5 * h * (p + q));
            }
        }
        let mut link_y = Vec::with_capacity(grid.y_edge_count());
        for j in 0..grid.ny() - 1 {
            for i in 0..grid.nx() {
                let p = a[grid.idx(i, j)][1];
                let q = a[grid.idx(i, j + 1)][1];
                link_y.push(0.5 * h * (p + q));
            }
        }
        Ok(Self {
            grid,
            link_x,
            link_y,
            nodes: Some(a),
            link_scale,
        })
    }

    pub fn from_fn<F: Fn(Point) -> [f64; 2]>(grid: Grid2D, link_scale: f64, f: F) -> Self {
        let a = grid.nodes().map(|(i, j)| f(grid.node(i, j))).collect();
        Self::from_nodes(grid, a, link_scale).expect("sampled potential has grid length")
    }

    pub fn zeros(grid: Grid2D, link_scale: f64) -> Self {
        Self::from_nodes(grid, vec![[0.0, 0.0]; grid.len()], link_scale)
            .expect("zero potential has grid length")
    }

    /// Builds directly from edge integrals; node samples are then derived.
    pub fn from_links(
        grid: Grid2D,
        link_x: Vec<f64>,
        link_y: Vec<f64>,
        link_scale: f64,
    ) -> Result<Self> {
        if link_x.len() != grid.x_edge_count() || link_y.len() != grid.y_edge_count() {
            return Err(GlError::GridMismatch("link arrays differ from edge counts"));
        }
        if link_x.iter().chain(&link_y).any(|v| !v.is_finite()) {
            return Err(GlError::Domain("non-finite link integral".into()));
        }
        Ok(Self {
            grid,
            link_x,
            link_y,
            nodes: None,
            link_scale,
        })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }
    pub fn link_x(&self) -> &[f64] {
        &self.link_x
    }
    pub fn link_y(&self) -> &[f64] {
        &self.link_y
    }
    pub fn link_scale(&self) -> f64 {
        self.link_scale
    }

    pub fn with_link_scale(mut self, link_scale: f64) -> Self {
        self.link_scale = link_scale;
        self
    }

    /// Node samples: the stored ones if built from nodes, otherwise the mean
    /// of the tangential edge values touching each node.
    pub fn nodes(&self) -> Vec<[f64; 2]> {
        if let Some(a) = &self.nodes {
            return a.clone();
        }
        let g = &self.grid;
        let h = g.h();
        g.nodes()
            .map(|(i, j)| {
                let mut ax = 0.0;
                let mut cx = 0.0;
                if i > 0 {
                    ax += self.link_x[g.x_edge_idx(i - 1, j)];
                    cx += 1.0;
                }
                if i + 1 < g.nx() {
                    ax += self.link_x[g.x_edge_idx(i, j)];
                    cx += 1.0;
                }
                let mut ay = 0.0;
                let mut cy = 0.0;
                if j > 0 {
                    ay += self.link_y[g.y_edge_idx(i, j - 1)];
                    cy += 1.0;
                }
                if j + 1 < g.ny() {
                    ay += self.link_y[g.y_edge_idx(i, j)];
                    cy += 1.0;
                }
                [ax / (cx * h), ay / (cy * h)]
            })
            .collect()
    }

    pub(crate) fn stored_nodes(&self) -> Option<&[[f64; 2]]> {
        self.nodes.as_deref()
    }

    /// Link phases `exp(−i s L)` on x- and y-edges. A negative scale is
    /// handled by conjugating the phases computed with `|s|`.
    pub fn link_phases(&self) -> (Vec<Complex64>, Vec<Complex64>) {
        link_phases_of(self.link_scale, &self.link_x, &self.link_y)
    }

    /// Pointwise sum of two potentials on the same grid (scale of `self`).
    pub fn add(&self, other: &GaugeField) -> Result<GaugeField> {
        if self.grid != other.grid {
            return Err(GlError::GridMismatch(
                "adding potentials on different grids",
            ));
        }
        let nodes = match (&self.nodes, &other.nodes) {
            (Some(a), Some(b)) => Some(
                a.iter()
                    .zip(b)
                    .map(|(p, q)| [p[0] + q[0], p[1] + q[1]])
                    .collect(),
            ),
            _ => None,
        };
        Ok(GaugeField {
            grid: self.grid,
            link_x: self
                .link_x
                .iter()
                .zip(&other.link_x)
                .map(|(a, b)| a + b)
                .collect(),
            link_y: self
                .link_y
                .iter()
                .zip(&other.link_y)
                .map(|(a, b)| a + b)
                .collect(),
            nodes,
            link_scale: self.link_scale,
        })
    }

    pub fn scaled(&self, factor: f64) -> GaugeField {
        GaugeField {
            grid: self.grid,
            link_x: self.link_x.iter().map(|l| l * factor).collect(),
            link_y: self.link_y.iter().map(|l| l * factor).collect(),
            nodes: self
                .nodes
                .as_ref()
                .map(|a| a.iter().map(|v| [v[0] * factor, v[1] * factor]).collect()),
            link_scale: self.link_scale,
        }
    }

    pub(crate) fn set_nodes(&mut self, nodes: Option<Vec<[f64; 2]>>) {
        self.nodes = nodes;
    }

    pub(crate) fn links_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.link_x, &mut self.link_y)
    }
}

type ScalarFn = dyn Fn(Point) -> f64 + Send + Sync;
type VectorFn = dyn Fn(Point) -> [f64; 2] + Send + Sync;

/// Applied field profile `B₀` with its gradient.
#[derive(Clone)]
pub struct MagneticProfile {
    id: String,
    b0: Arc<ScalarFn>,
    grad: Arc<VectorFn>,
}

impl fmt::Debug for MagneticProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MagneticProfile")
            .field("id", &self.id)
            .finish()
    }
}

impl MagneticProfile {
    pub fn new<B, G>(id: impl Into<String>, b0: B, grad: G) -> Self
    where
        B: Fn(Point) -> f64 + Send + Sync + 'static,
        G: Fn(Point) -> [f64; 2] + Send + Sync + 'static,
    {
        Self {
            id: id.into(),
            b0: Arc::new(b0),
            grad: Arc::new(grad),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("constant({c})"), move |_| c, |_| [0.0, 0.0])
    }

    /// `B₀(x) = a·x₁ + b`.
    pub fn linear(a: f64, b: f64) -> Self {
        Self::new(
            format!("linear({a},{b})"),
            move |x| a * x[0] + b,
            move |_| [a, 0.0],
        )
    }

    /// `B₀(x) = a + c·|x − x_c|²`.
    pub fn radial(a: f64, c: f64, center: Point) -> Self {
        Self::new(
            format!("radial({a},{c})"),
            move |x| {
                let dx = x[0] - center[0];
                let dy = x[1] - center[1];
                a + c * (dx * dx + dy * dy)
            },
            move |x| [2.0 * c * (x[0] - center[0]), 2.0 * c * (x[1] - center[1])],
        )
    }

    /// Parses an entry of the built-in catalog: `constant(c)`, `linear(a,b)`,
    /// `radial`, `radial(a,c)`. Radial profiles are centered at `center`.
    pub fn parse(spec: &str, center: Point) -> Result<Self> {
        let s: String = spec.chars().filter(|c| !c.is_whitespace()).collect();
        let (name, args) = match s.find('(') {
            Some(k) if s.ends_with(')') => (&s[..k], &s[k + 1..s.len() - 1]),
            Some(_) => {
                return Err(GlError::Config(format!(
                    "unbalanced parentheses in profile {spec:?}"
                )))
            }
            None => (s.as_str(), ""),
        };
        let nums: Vec<f64> = if args.is_empty() {
            Vec::new()
        } else {
            args.split(',')
                .map(|a| {
                    a.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| {
                            GlError::Config(format!("bad profile argument {a:?} in {spec:?}"))
                        })
                })
                .collect::<Result<_>>()?
        };
        match (name, nums.as_slice()) {
            ("constant", [c]) => Ok(Self::constant(*c)),
            ("linear", [a, b]) => Ok(Self::linear(*a, *b)),
            ("radial", []) => Ok(Self::radial(1.0, 1.0, center)),
            ("radial", [a, c]) => Ok(Self::radial(*a, *c, center)),
            _ => Err(GlError::Config(format!(
                "unknown profile {spec:?}; expected constant(c), linear(a,b), radial or radial(a,c)"
            ))),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    #[inline]
    pub fn b0(&self, x: Point) -> f64 {
        (self.b0)(x)
    }

    #[inline]
    pub fn grad(&self, x: Point) -> [f64; 2] {
        (self.grad)(x)
    }

    /// Checks `|B₀| + |∇B₀| > 0` at every node of `grid`.
    pub fn validate_on(&self, grid: &Grid2D) -> Result<()> {
        for (i, j) in grid.nodes() {
            let x = grid.node(i, j);
            let b = self.b0(x);
            let g = self.grad(x);
            let s = b.abs() + (g[0] * g[0] + g[1] * g[1]).sqrt();
            if !s.is_finite() || s <= 0.0 {
                return Err(GlError::Config(format!(
                    "profile {} violates |B0| + |grad B0| > 0 at node ({i},{j}) = ({:.4}, {:.4})",
                    self.id, x[0], x[1]
                )));
            }
        }
        Ok(())
    }
}

/// Trapezoidal rule in both directions; exact for bilinear fields.
pub fn integrate(f: &[f64], grid: &Grid2D) -> f64 {
    assert_eq!(
        f.len(),
        grid.len(),
        "integrand length differs from node count"
    );
    let mut total = 0.0;
    for j in 0..grid.ny() {
        let wy = grid.trapezoid_weight(j, grid.ny());
        let mut row = 0.0;
        for i in 0..grid.nx() {
            row += grid.trapezoid_weight(i, grid.nx()) * f[grid.idx(i, j)];
        }
        total += wy * row;
    }
    total
}

/// Trapezoidal integral restricted to a node rectangle.
pub fn integrate_rect(f: &[f64], grid: &Grid2D, rect: &NodeRect) -> f64 {
    let mut total = 0.0;
    for j in rect.j0..=rect.j1 {
        for i in rect.i0..=rect.i1 {
            total += rect.weight(grid, i, j) * f[grid.idx(i, j)];
        }
    }
    total
}

pub(crate) fn link_phases_of(
    scale: f64,
    lx: &[f64],
    ly: &[f64],
) -> (Vec<Complex64>, Vec<Complex64>) {
    let s = scale.abs();
    let flip = scale < 0.0;
    let ph = |l: &f64| {
        let u = Complex64::from_polar(1.0, -s * l);
        if flip {
            u.conj()
        } else {
            u
        }
    };
    (lx.iter().map(ph).collect(), ly.iter().map(ph).collect())
}

/// Plaquette circulation of the potential divided by `h²`.
pub fn discrete_curl(a: &GaugeField) -> Vec<f64> {
    curl_of_links(a.grid(), a.link_x(), a.link_y())
}

pub(crate) fn curl_of_links(g: &Grid2D, lx: &[f64], ly: &[f64]) -> Vec<f64> {
    let inv = 1.0 / (g.h() * g.h());
    let mut out = Vec::with_capacity(g.plaquette_count());
    for j in 0..g.ny() - 1 {
        for i in 0..g.nx() - 1 {
            let c = lx[g.x_edge_idx(i, j)] + ly[g.y_edge_idx(i + 1, j)]
                - lx[g.x_edge_idx(i, j + 1)]
                - ly[g.y_edge_idx(i, j)];
            out.push(c * inv);
        }
    }
    out
}

/// Covariant differences on every edge.
#[derive(Debug, Clone)]
pub struct EdgeDiffs {
    pub x: Vec<Complex64>,
    pub y: Vec<Complex64>,
}

/// `(U_pq ψ_q − ψ_p)/h` on every edge.
pub fn covariant_diff(psi: &ComplexField, a: &GaugeField) -> Result<EdgeDiffs> {
    if psi.grid() != a.grid() {
        return Err(GlError::GridMismatch(
            "covariant_diff: psi and A on different grids",
        ));
    }
    let g = psi.grid();
    let inv_h = 1.0 / g.h();
    let (ux, uy) = a.link_phases();
    let v = psi.values();
    let mut x = Vec::with_capacity(g.x_edge_count());
    for j in 0..g.ny() {
        for i in 0..g.nx() - 1 {
            let e = g.x_edge_idx(i, j);
            x.push((ux[e] * v[g.idx(i + 1, j)] - v[g.idx(i, j)]) * inv_h);
        }
    }
    let mut y = Vec::with_capacity(g.y_edge_count());
    for j in 0..g.ny() - 1 {
        for i in 0..g.nx() {
            let e = g.y_edge_idx(i, j);
            y.push((uy[e] * v[g.idx(i, j + 1)] - v[g.idx(i, j)]) * inv_h);
        }
    }
    Ok(EdgeDiffs { x, y })
}

/// Averages squared edge differences back to nodes so that
/// `integrate(result) == Σ_edges weight·|d|²`.
pub fn edge_density_to_nodes(g: &Grid2D, d: &EdgeDiffs) -> Vec<f64> {
    let mut out = vec![0.0; g.len()];
    for j in 0..g.ny() {
        for i in 0..g.nx() - 1 {
            let half = 0.5 * g.x_edge_weight(j) * d.x[g.x_edge_idx(i, j)].norm_sqr();
            out[g.idx(i, j)] += half;
            out[g.idx(i + 1, j)] += half;
        }
    }
    for j in 0..g.ny() - 1 {
        for i in 0..g.nx() {
            let half = 0.5 * g.y_edge_weight(i) * d.y[g.y_edge_idx(i, j)].norm_sqr();
            out[g.idx(i, j)] += half;
            out[g.idx(i, j + 1)] += half;
        }
    }
    for (i, j) in g.nodes() {
        out[g.idx(i, j)] /= g.node_weight(i, j);
    }
    out
}
