//! Discretized Riemann surfaces.
//!
//! Every node carries a chart coordinate. Finite-difference stencils store
//! neighbour offsets expressed in the node's own chart, so derivatives and
//! line integrals never need to know how charts are glued.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SurfaceKind {
    FlatTorus,
    PlanarDomain,
    Hyperelliptic,
}

/// Coordinate chart of a node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Chart {
    /// The coordinate is z itself.
    Plane,
    /// ζ = log z.
    Log,
    /// z near z = 0.
    PoleZero,
    /// ξ = 1/z near z = ∞.
    PoleInfinity,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    /// Position in the node's chart.
    pub coord: Complex64,
    pub chart: Chart,
    pub sheet: u8,
}

impl Node {
    /// The underlying point of the base sphere (∞ for the pole at infinity).
    pub fn base_point(&self) -> Complex64 {
        match self.chart {
            Chart::Plane | Chart::PoleZero => self.coord,
            Chart::Log => self.coord.exp(),
            Chart::PoleInfinity => {
                if self.coord.norm() == 0.0 {
                    Complex64::new(f64::INFINITY, 0.0)
                } else {
                    self.coord.inv()
                }
            }
        }
    }
}

/// Closed node path used for line integrals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Loop {
    pub name: String,
    pub nodes: Vec<usize>,
}

/// Least-squares gradient weights: ∂f ≈ Σ w_k (f_k − f_0).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DerivativeStencil {
    pub dz: Vec<(usize, Complex64)>,
    pub dzbar: Vec<(usize, Complex64)>,
}

#[derive(Clone, Debug)]
pub struct MeshedSurface {
    pub kind: SurfaceKind,
    pub nodes: Vec<Node>,
    pub weights: Vec<f64>,
    /// Ascending coefficients of P in w² = P(z); empty unless hyperelliptic.
    pub branch_poly: Vec<f64>,
    pub loops: Vec<Loop>,
    /// Neighbours with offsets in the chart of the owning node.
    pub stencil: Vec<Vec<(usize, Complex64)>>,
    /// True where the stencil is a full symmetric cross.
    pub interior: Vec<bool>,
    pub derivative: Vec<DerivativeStencil>,
    /// Row-major (nx, ny) shape for planar and torus grids.
    pub grid_shape: Option<(usize, usize)>,
    /// Grid spacing in chart units (largest of the two directions).
    pub spacing: f64,
    /// Nodes on the cells that contain branch points.
    pub critical_nodes: Vec<usize>,
    face_count: usize,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn derivative_stencil(offsets: &[(usize, Complex64)]) -> Result<DerivativeStencil> {
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (_, d) in offsets {
        sxx += d.re * d.re;
        sxy += d.re * d.im;
        syy += d.im * d.im;
    }
    let det = sxx * syy - sxy * sxy;
    if det.abs() <= 1e-14 * (sxx * syy).max(f64::MIN_POSITIVE) {
        return Err(Error::Geometry("degenerate stencil".into()));
    }
    let mut out = DerivativeStencil::default();
    for &(j, d) in offsets {
        let alpha = (syy * d.re - sxy * d.im) / det;
        let beta = (sxx * d.im - sxy * d.re) / det;
        out.dz.push((j, c(0.5 * alpha, -0.5 * beta)));
        out.dzbar.push((j, c(0.5 * alpha, 0.5 * beta)));
    }
    Ok(out)
}

impl MeshedSurface {
    fn finish(mut self) -> Result<Self> {
        self.derivative = self
            .stencil
            .iter()
            .map(|s| derivative_stencil(s))
            .collect::<Result<Vec<_>>>()?;
        if self.weights.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::Geometry("non-positive quadrature weight".into()));
        }
        for lp in &self.loops {
            self.check_loop(lp)?;
        }
        Ok(self)
    }

    /// Periodic N×N grid on the unit square with opposite sides identified.
    pub fn flat_torus(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::Domain(format!("torus grid needs n >= 3, got {n}")));
        }
        let h = 1.0 / n as f64;
        let idx = |i: usize, j: usize| (j % n) * n + (i % n);
        let mut nodes = Vec::with_capacity(n * n);
        let mut stencil = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                nodes.push(Node { coord: c(i as f64 * h, j as f64 * h), chart: Chart::Plane, sheet: 0 });
                stencil.push(vec![
                    (idx(i + 1, j), c(h, 0.0)),
                    (idx(i + n - 1, j), c(-h, 0.0)),
                    (idx(i, j + 1), c(0.0, h)),
                    (idx(i, j + n - 1), c(0.0, -h)),
                ]);
            }
        }
        let mut a = (0..n).map(|i| idx(i, 0)).collect::<Vec<_>>();
        a.push(idx(0, 0));
        let mut b = (0..n).map(|j| idx(0, j)).collect::<Vec<_>>();
        b.push(idx(0, 0));
        Self {
            kind: SurfaceKind::FlatTorus,
            weights: vec![h * h; n * n],
            nodes,
            branch_poly: Vec::new(),
            loops: vec![Loop { name: "a".into(), nodes: a }, Loop { name: "b".into(), nodes: b }],
            interior: vec![true; n * n],
            stencil,
            derivative: Vec::new(),
            grid_shape: Some((n, n)),
            spacing: h,
            critical_nodes: Vec::new(),
            face_count: n * n,
        }
        .finish()
    }

    /// Grid of nx×ny nodes on [x0, x1]×[y0, y1], boundary included, with
    /// trapezoid weights and the boundary rectangle as its only loop.
    pub fn planar_grid(x0: f64, x1: f64, y0: f64, y1: f64, nx: usize, ny: usize) -> Result<Self> {
        if nx < 3 || ny < 3 || !(x1 > x0) || !(y1 > y0) {
            return Err(Error::Domain("planar grid needs at least 3x3 nodes and a nonempty box".into()));
        }
        let hx = (x1 - x0) / (nx - 1) as f64;
        let hy = (y1 - y0) / (ny - 1) as f64;
        let idx = |i: usize, j: usize| j * nx + i;
        let mut nodes = Vec::with_capacity(nx * ny);
        let mut weights = Vec::with_capacity(nx * ny);
        let mut stencil = Vec::with_capacity(nx * ny);
        let mut interior = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                nodes.push(Node { coord: c(x0 + i as f64 * hx, y0 + j as f64 * hy), chart: Chart::Plane, sheet: 0 });
                let wx = if i == 0 || i == nx - 1 { 0.5 } else { 1.0 };
                let wy = if j == 0 || j == ny - 1 { 0.5 } else { 1.0 };
                weights.push(wx * wy * hx * hy);
                let mut s = Vec::with_capacity(4);
                if i + 1 < nx {
                    s.push((idx(i + 1, j), c(hx, 0.0)));
                }
                if i > 0 {
                    s.push((idx(i - 1, j), c(-hx, 0.0)));
                }
                if j + 1 < ny {
                    s.push((idx(i, j + 1), c(0.0, hy)));
                }
                if j > 0 {
                    s.push((idx(i, j - 1), c(0.0, -hy)));
                }
                interior.push(s.len() == 4);
                stencil.push(s);
            }
        }
        let mut boundary = Vec::new();
        boundary.extend((0..nx).map(|i| idx(i, 0)));
        boundary.extend((1..ny).map(|j| idx(nx - 1, j)));
        boundary.extend((0..nx - 1).rev().map(|i| idx(i, ny - 1)));
        boundary.extend((0..ny - 1).rev().map(|j| idx(0, j)));
        Self {
            kind: SurfaceKind::PlanarDomain,
            nodes,
            weights,
            branch_poly: Vec::new(),
            loops: vec![Loop { name: "boundary".into(), nodes: boundary }],
            stencil,
            interior,
            derivative: Vec::new(),
            grid_shape: Some((nx, ny)),
            spacing: hx.max(hy),
            critical_nodes: Vec::new(),
            face_count: (nx - 1) * (ny - 1),
        }
        .finish()
    }

    /// Index of the planar/torus grid node (i, j).
    pub fn grid_index(&self, i: usize, j: usize) -> usize {
        let (nx, _) = self.grid_shape.expect("grid surface");
        j * nx + i
    }

    /// Closed rectangular node path on a planar grid through the corner
    /// indices (i0, j0) and (i1, j1), counterclockwise.
    pub fn grid_rectangle(&self, i0: usize, j0: usize, i1: usize, j1: usize) -> Result<Loop> {
        let (nx, ny) = self.grid_shape.ok_or_else(|| Error::Geometry("not a grid surface".into()))?;
        if i0 >= i1 || j0 >= j1 || i1 >= nx || j1 >= ny {
            return Err(Error::Geometry("rectangle outside grid".into()));
        }
        let mut nodes = Vec::new();
        nodes.extend((i0..i1).map(|i| self.grid_index(i, j0)));
        nodes.extend((j0..j1).map(|j| self.grid_index(i1, j)));
        nodes.extend((i0 + 1..=i1).rev().map(|i| self.grid_index(i, j1)));
        nodes.extend((j0 + 1..=j1).rev().map(|j| self.grid_index(i0, j)));
        nodes.push(nodes[0]);
        Ok(Loop { name: format!("rect[{i0},{j0};{i1},{j1}]"), nodes })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_area(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Offset from `a` to its stencil neighbour `b`, in the chart of `a`.
    pub fn offset(&self, a: usize, b: usize) -> Option<Complex64> {
        self.stencil[a].iter().find(|(j, _)| *j == b).map(|(_, d)| *d)
    }

    pub fn check_loop(&self, lp: &Loop) -> Result<()> {
        let n = &lp.nodes;
        if n.len() < 3 || n.first() != n.last() {
            return Err(Error::Geometry(format!("loop {} is not closed", lp.name)));
        }
        for w in n.windows(2) {
            if self.offset(w[0], w[1]).is_none() {
                return Err(Error::Geometry(format!(
                    "loop {} steps between non-adjacent nodes {} and {}",
                    lp.name, w[0], w[1]
                )));
            }
        }
        Ok(())
    }

    /// Number of undirected edges in the stencil graph.
    pub fn edge_count(&self) -> usize {
        let mut set = BTreeSet::new();
        for (a, s) in self.stencil.iter().enumerate() {
            for &(b, _) in s {
                set.insert((a.min(b), a.max(b)));
            }
        }
        set.len()
    }

    /// Marks nodes within `hops` stencil steps of a critical node.
    pub fn critical_neighbourhood(&self, hops: usize) -> Vec<bool> {
        let mut mark = vec![false; self.len()];
        let mut frontier = self.critical_nodes.clone();
        for &i in &frontier {
            mark[i] = true;
        }
        for _ in 0..hops {
            let mut next = Vec::new();
            for &i in &frontier {
                for &(j, _) in &self.stencil[i] {
                    if !mark[j] {
                        mark[j] = true;
                        next.push(j);
                    }
                }
            }
            frontier = next;
        }
        mark
    }

    pub fn face_count(&self) -> usize {
        self.face_count
    }

    /// V − E + F of the mesh cell complex.
    pub fn euler_characteristic(&self) -> i64 {
        self.nodes.len() as i64 - self.edge_count() as i64 + self.face_count as i64
    }

    /// ∂f/∂(chart coordinate) at a node.
    pub fn dz_at(&self, f: &[Complex64], node: usize) -> Complex64 {
        let f0 = f[node];
        self.derivative[node].dz.iter().map(|&(j, w)| w * (f[j] - f0)).sum()
    }

    pub fn dzbar_at(&self, f: &[Complex64], node: usize) -> Complex64 {
        let f0 = f[node];
        self.derivative[node].dzbar.iter().map(|&(j, w)| w * (f[j] - f0)).sum()
    }

    /// ∂f for a real function.
    pub fn dz_real_at(&self, f: &[f64], node: usize) -> Complex64 {
        let f0 = f[node];
        self.derivative[node].dz.iter().map(|&(j, w)| w * (f[j] - f0)).sum()
    }

    /// Trapezoid integral of the 1-form with chart coefficients `form` along a loop.
    pub fn line_integral(&self, form: &[Complex64], lp: &Loop) -> Result<Complex64> {
        self.check_loop(lp)?;
        let mut acc = c(0.0, 0.0);
        for w in lp.nodes.windows(2) {
            let (a, b) = (w[0], w[1]);
            let d = self.offset(a, b).expect("checked");
            let fb = self.transport(form, a, b);
            acc += 0.5 * (form[a] + fb) * d;
        }
        Ok(acc)
    }

    /// Coefficient of the form at `b` re-expressed in the chart of `a`.
    fn transport(&self, form: &[Complex64], a: usize, b: usize) -> Complex64 {
        let (ca, cb) = (self.nodes[a].chart, self.nodes[b].chart);
        if ca == cb {
            return form[b];
        }
        // Chart derivatives relative to z.
        let dz_dchart = |n: &Node| -> Complex64 {
            match n.chart {
                Chart::Plane | Chart::PoleZero => c(1.0, 0.0),
                Chart::Log => n.coord.exp(),
                Chart::PoleInfinity => -(n.coord * n.coord).inv(),
            }
        };
        let nb = &self.nodes[b];
        // The form coefficient in the chart of a, evaluated at the point of b.
        let zb = nb.base_point();
        let in_z = form[b] / dz_dchart(nb);
        let dza = match ca {
            Chart::Plane | Chart::PoleZero => c(1.0, 0.0),
            Chart::Log => zb,
            Chart::PoleInfinity => -(zb * zb),
        };
        in_z * dza
    }
}

/// Parameters of the two-sheeted log-polar mesh of w² = z⁸ + 14z⁴ + 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperellipticParams {
    /// Rows per half slit.
    pub k: usize,
    /// Angular parameter; the angular count is 4(2p + 1).
    pub p: usize,
    /// Truncation of |log|z||; the caps cover the rest.
    pub s_max: f64,
}

impl HyperellipticParams {
    /// Roughly square log-polar cells with `resolution` rows per half slit.
    pub fn from_resolution(resolution: usize) -> Self {
        let ds = p_inner_log_radius().abs() / resolution as f64;
        let m = 2.0 * PI / ds;
        let p = ((m / 4.0 - 1.0) / 2.0).round().max(1.0) as usize;
        Self { k: resolution, p, s_max: 4.0 }
    }

    pub fn angular_count(&self) -> usize {
        4 * (2 * self.p + 1)
    }
}

/// log of the inner branch radius √(2 − √3).
pub fn p_inner_log_radius() -> f64 {
    0.5 * (2.0 - 3f64.sqrt()).ln()
}

/// The eight roots of z⁸ + 14z⁴ + 1 as (inner, outer) pairs along the rays
/// arg z = π/4 + jπ/2.
pub fn p_branch_points() -> [(Complex64, Complex64); 4] {
    let r1 = (2.0 - 3f64.sqrt()).sqrt();
    let r2 = (2.0 + 3f64.sqrt()).sqrt();
    let mut out = [(c(0.0, 0.0), c(0.0, 0.0)); 4];
    for (j, o) in out.iter_mut().enumerate() {
        let a = PI / 4.0 + j as f64 * PI / 2.0;
        *o = (Complex64::from_polar(r1, a), Complex64::from_polar(r2, a));
    }
    out
}

/// Sheet-0 branch of w = √(z⁸ + 14z⁴ + 1), cut along the radial slits
/// joining the branch points of each ray.
pub fn p_w_sheet0(z: Complex64) -> Complex64 {
    let mut w = c(1.0, 0.0);
    for (a, b) in p_branch_points() {
        w *= (z - a) * ((z - b) / (z - a)).sqrt();
    }
    w
}

/// Sheet-0 branch of W(ξ) = ξ⁴ w(1/ξ), normalised so that W(0) = 1.
pub fn p_w_infinity_sheet0(xi: Complex64) -> Complex64 {
    // ξ⁴ ∏ (1/ξ − a) √((1/ξ − b)/(1/ξ − a)) = ∏ (1 − aξ) √((1 − bξ)/(1 − aξ)).
    let mut w = c(1.0, 0.0);
    for (a, b) in p_branch_points() {
        w *= (1.0 - a * xi) * ((1.0 - b * xi) / (1.0 - a * xi)).sqrt();
    }
    w
}

/// Index bookkeeping for the two-sheeted log-polar mesh.
#[derive(Clone, Copy, Debug)]
pub struct LogGrid {
    pub params: HyperellipticParams,
    /// Rows run over i ∈ [−rows_half, rows_half).
    pub rows_half: usize,
    pub m: usize,
    pub ds: f64,
    pub dt: f64,
}

impl LogGrid {
    fn new(params: HyperellipticParams) -> Self {
        let ds = p_inner_log_radius().abs() / params.k as f64;
        let rows_half = (params.s_max / ds).ceil() as usize;
        let m = params.angular_count();
        Self { params, rows_half, m, ds, dt: 2.0 * PI / m as f64 }
    }

    pub fn row_count(&self) -> usize {
        2 * self.rows_half
    }

    pub fn log_nodes(&self) -> usize {
        2 * self.row_count() * self.m
    }

    /// Node index for signed row i, column k, sheet.
    pub fn index(&self, i: i64, k: usize, sheet: u8) -> usize {
        let row = (i + self.rows_half as i64) as usize;
        (sheet as usize * self.row_count() + row) * self.m + (k % self.m)
    }

    pub fn s(&self, i: i64) -> f64 {
        (i as f64 + 0.5) * self.ds
    }

    /// Whether the t-edge from column k to k+1 crosses a slit on row i.
    pub fn crosses_slit(&self, i: i64, k: usize) -> bool {
        let k = k % self.m;
        let k_in = self.params.k as i64;
        let on_slit_row = i >= -k_in && i < k_in;
        // Rays sit at column p + ½ + j(2p + 1).
        let period = 2 * self.params.p + 1;
        on_slit_row && k % period == self.params.p
    }

    /// Neighbour of (i, k, sheet) one column forward (dir = +1) or back (−1),
    /// following the sheet swap across slits.
    pub fn t_step(&self, i: i64, k: usize, sheet: u8, dir: i64) -> (usize, u8) {
        let m = self.m;
        if dir > 0 {
            let swap = self.crosses_slit(i, k);
            ((k + 1) % m, if swap { 1 - sheet } else { sheet })
        } else {
            let kp = (k + m - 1) % m;
            let swap = self.crosses_slit(i, kp);
            (kp, if swap { 1 - sheet } else { sheet })
        }
    }

    /// Column index of the ray j, rounded down (ray lies at +½).
    pub fn ray_column(&self, j: usize) -> usize {
        self.params.p + j * (2 * self.params.p + 1)
    }
}

impl MeshedSurface {
    /// Two-sheeted log-polar mesh of the genus-3 curve w² = z⁸ + 14z⁴ + 1
    /// with polar caps and a six-cycle homology basis.
    pub fn hyperelliptic_p(params: HyperellipticParams) -> Result<(Self, LogGrid)> {
        if params.k < 2 || params.p < 1 || params.s_max <= p_inner_log_radius().abs() {
            return Err(Error::Domain("hyperelliptic mesh parameters out of range".into()));
        }
        let g = LogGrid::new(params);
        let (m, rh) = (g.m, g.rows_half as i64);
        let n_log = g.log_nodes();
        let mut nodes = vec![Node { coord: c(0.0, 0.0), chart: Chart::Log, sheet: 0 }; n_log];
        let mut weights = vec![g.ds * g.dt; n_log];
        let mut stencil = vec![Vec::new(); n_log];
        let mut interior = vec![true; n_log];
        for sheet in 0..2u8 {
            for i in -rh..rh {
                for k in 0..m {
                    let a = g.index(i, k, sheet);
                    nodes[a] = Node { coord: c(g.s(i), k as f64 * g.dt), chart: Chart::Log, sheet };
                    let mut s = Vec::with_capacity(4);
                    let (kf, sf) = g.t_step(i, k, sheet, 1);
                    s.push((g.index(i, kf, sf), c(0.0, g.dt)));
                    let (kb, sb) = g.t_step(i, k, sheet, -1);
                    s.push((g.index(i, kb, sb), c(0.0, -g.dt)));
                    if i + 1 < rh {
                        s.push((g.index(i + 1, k, sheet), c(g.ds, 0.0)));
                    }
                    if i > -rh {
                        s.push((g.index(i - 1, k, sheet), c(-g.ds, 0.0)));
                    }
                    interior[a] = s.len() == 4;
                    stencil[a] = s;
                }
            }
        }
        let s_edge = rh as f64 * g.ds;
        let cap_weight = PI * (-2.0 * s_edge).exp();
        for sheet in 0..2u8 {
            // z = 0 cap, coordinates in z.
            let mut s0 = Vec::with_capacity(m);
            let mut si = Vec::with_capacity(m);
            for k in 0..m {
                let inner = g.index(-rh, k, sheet);
                s0.push((inner, nodes[inner].coord.exp()));
                let outer = g.index(rh - 1, k, sheet);
                si.push((outer, (-nodes[outer].coord).exp()));
            }
            nodes.push(Node { coord: c(0.0, 0.0), chart: Chart::PoleZero, sheet });
            nodes.push(Node { coord: c(0.0, 0.0), chart: Chart::PoleInfinity, sheet });
            stencil.push(s0);
            stencil.push(si);
            weights.push(cap_weight);
            weights.push(cap_weight);
            interior.push(true);
            interior.push(true);
        }

        let mut surf = Self {
            kind: SurfaceKind::Hyperelliptic,
            nodes,
            weights,
            branch_poly: vec![1.0, 0.0, 0.0, 0.0, 14.0, 0.0, 0.0, 0.0, 1.0],
            loops: Vec::new(),
            stencil,
            interior,
            derivative: Vec::new(),
            grid_shape: None,
            spacing: g.ds.max(g.dt),
            critical_nodes: Vec::new(),
            face_count: 0,
        };
        let (faces, critical) = log_faces(&g);
        surf.face_count = faces + 4 * m;
        surf.critical_nodes = critical;
        surf.loops = p_homology_loops(&g);
        Ok((surf.finish()?, g))
    }
}

/// Face count of the log-polar part and the nodes of its octagonal faces.
fn log_faces(g: &LogGrid) -> (usize, Vec<usize>) {
    let rh = g.rows_half as i64;
    let mut faces = BTreeSet::new();
    for sheet in 0..2u8 {
        for i in -rh..rh - 1 {
            for k in 0..g.m {
                let start = (i, k, sheet);
                let mut cur = start;
                let mut cycle = Vec::new();
                // A plain cell closes after one lap; a cell holding a branch
                // point closes after two (an octagon over both sheets).
                for _ in 0..2 {
                    let (kr, sr) = g.t_step(cur.0, cur.1, cur.2, 1);
                    let up = (cur.0 + 1, kr, sr);
                    let (kl, sl) = g.t_step(up.0, up.1, up.2, -1);
                    let left = (up.0, kl, sl);
                    cycle.extend([
                        g.index(cur.0, cur.1, cur.2),
                        g.index(cur.0, kr, sr),
                        g.index(up.0, up.1, up.2),
                        g.index(left.0, left.1, left.2),
                    ]);
                    cur = (left.0 - 1, left.1, left.2);
                    if cur == start {
                        break;
                    }
                }
                let mut key = cycle;
                key.sort_unstable();
                key.dedup();
                faces.insert(key);
            }
        }
    }
    let mut critical: Vec<usize> = faces.iter().filter(|f| f.len() > 4).flatten().copied().collect();
    critical.sort_unstable();
    critical.dedup();
    (faces.len(), critical)
}

/// a_j encircles slit j on sheet 0; b_j encircles the outer branch points of
/// rays j and j + 1, crossing both slits on its inner edge.
fn p_homology_loops(g: &LogGrid) -> Vec<Loop> {
    let kin = g.params.k as i64;
    let period = 2 * g.params.p + 1;
    let walk = |start: (i64, usize, u8), moves: &[(char, usize)]| -> Vec<usize> {
        let mut cur = start;
        let mut out = vec![g.index(cur.0, cur.1, cur.2)];
        for &(dir, count) in moves {
            for _ in 0..count {
                cur = match dir {
                    'u' => (cur.0 + 1, cur.1, cur.2),
                    'd' => (cur.0 - 1, cur.1, cur.2),
                    'r' => {
                        let (k, s) = g.t_step(cur.0, cur.1, cur.2, 1);
                        (cur.0, k, s)
                    }
                    _ => {
                        let (k, s) = g.t_step(cur.0, cur.1, cur.2, -1);
                        (cur.0, k, s)
                    }
                };
                out.push(g.index(cur.0, cur.1, cur.2));
            }
        }
        out
    };
    let mut loops = Vec::new();
    for j in 0..3 {
        let k0 = g.ray_column(j) - 1;
        let rows = (2 * kin + 1) as usize;
        let nodes = walk((-kin - 1, k0, 0), &[('r', 3), ('u', rows), ('l', 3), ('d', rows)]);
        loops.push(Loop { name: format!("a{j}"), nodes });
    }
    for j in 0..3 {
        let k0 = j * period;
        let rows = (kin + 2) as usize;
        let nodes = walk((0, k0, 0), &[('u', rows), ('r', 2 * period), ('d', rows), ('l', 2 * period)]);
        loops.push(Loop { name: format!("b{j}"), nodes });
    }
    loops
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_basics() {
        let t = MeshedSurface::flat_torus(8).unwrap();
        assert_eq!(t.euler_characteristic(), 0);
        assert!((t.total_area() - 1.0).abs() < 1e-14);
        let one = vec![c(1.0, 0.0); t.len()];
        let a = t.line_integral(&one, &t.loops[0]).unwrap();
        assert!((a - c(1.0, 0.0)).norm() < 1e-14);
        let b = t.line_integral(&one, &t.loops[1]).unwrap();
        assert!((b - c(0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn planar_basics() {
        let p = MeshedSurface::planar_grid(-1.0, 1.0, -1.0, 1.0, 11, 11).unwrap();
        assert_eq!(p.euler_characteristic(), 1);
        assert!((p.total_area() - 4.0).abs() < 1e-13);
        // ∮ z̄ dz = 2i·area
        let zbar: Vec<_> = p.nodes.iter().map(|n| n.coord.conj()).collect();
        let v = p.line_integral(&zbar, &p.loops[0]).unwrap();
        assert!((v - c(0.0, 8.0)).norm() < 1e-12);
    }

    #[test]
    fn derivative_of_linear_is_exact() {
        let p = MeshedSurface::planar_grid(0.0, 1.0, 0.0, 2.0, 5, 7).unwrap();
        let f: Vec<_> = p.nodes.iter().map(|n| 3.0 * n.coord + c(0.5, 1.0) * n.coord.conj()).collect();
        for i in 0..p.len() {
            assert!((p.dz_at(&f, i) - 3.0).norm() < 1e-12);
            assert!((p.dzbar_at(&f, i) - c(0.5, 1.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn open_loop_rejected() {
        let p = MeshedSurface::planar_grid(0.0, 1.0, 0.0, 1.0, 4, 4).unwrap();
        let lp = Loop { name: "x".into(), nodes: vec![0, 1, 2] };
        assert!(matches!(p.check_loop(&lp), Err(Error::Geometry(_))));
        let jump = Loop { name: "y".into(), nodes: vec![0, 5, 0] };
        assert!(p.check_loop(&jump).is_err());
    }

    #[test]
    fn hyperelliptic_genus_three() {
        let (s, g) = MeshedSurface::hyperelliptic_p(HyperellipticParams::from_resolution(4)).unwrap();
        assert_eq!(s.euler_characteristic(), -4);
        assert_eq!(g.m % 4, 0);
        assert_eq!(s.loops.len(), 6);
        // Eight branch points, each on an octagon of eight nodes.
        assert_eq!(s.critical_nodes.len(), 64);
    }

    #[test]
    fn sheet_branch_squares_to_polynomial() {
        for &z in &[c(0.3, 0.1), c(-1.2, 0.7), c(2.0, -3.0)] {
            let w = p_w_sheet0(z);
            let p = z.powu(8) + 14.0 * z.powu(4) + 1.0;
            assert!((w * w - p).norm() < 1e-10 * p.norm());
            let xi = z.inv();
            let big = p_w_infinity_sheet0(xi);
            assert!((big - xi.powu(4) * w).norm() < 1e-10 * big.norm());
        }
    }
}
