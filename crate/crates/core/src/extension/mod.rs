//! Extension operators from the closed domain to the whole space.
//!
//! Outside the domain, at signed distance `d` from boundary point `p`:
//!
//! | operator          | value                         |
//! |-------------------|-------------------------------|
//! | Robin (`E_β`)     | `ρ₁(β(p), d)·u(x̃)`            |
//! | Dirichlet (`E_D`) | `−χ(d)·u(x̃)`                  |
//! | zero (`E_∞`)      | `0`                           |
//! | constant normal   | `χ(d)·u(p)`                   |
//!
//! where `x̃` is the reflection of `x`. Inside the closed domain every
//! operator returns `u` unchanged.
//!
//! Two evaluation paths exist: the callable path evaluates `u` exactly at
//! reflected points, the field path interpolates sampled data with a
//! range-limited cubic (1D) or bicubic (2D) stencil precomputed per grid.

mod functions;
mod kink;

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use functions::{SmoothTestFunction, SpatialFunction};
pub use kink::{smoothstep, KinkProfile};

use crate::error::{Error, Result};
use crate::field::{Discretization, Grid, ScalarField};
use crate::geometry::{BoundaryParam, BoundaryPoint, DomainGeometry, Point};

const BETA_VALIDATION_SAMPLES: usize = 10_000;

/// JSON form of a Robin coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RobinSpec {
    Ends(EndValues),
    Fourier(FourierSeries),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndValues {
    pub left: f64,
    pub right: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierSeries {
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

impl FourierSeries {
    fn eval(&self, theta: f64) -> f64 {
        let mut v = 0.0;
        for (k, a) in self.cos.iter().enumerate() {
            v += a * (k as f64 * theta).cos();
        }
        for (k, b) in self.sin.iter().enumerate().skip(1) {
            v += b * (k as f64 * theta).sin();
        }
        v
    }
}

/// Nonnegative boundary function `β`.
#[derive(Debug, Clone, PartialEq)]
pub struct RobinCoefficient {
    spec: RobinSpec,
    allow_negative: bool,
}

impl RobinCoefficient {
    pub fn new(spec: RobinSpec, dom: &DomainGeometry) -> Result<Self> {
        Self::build(spec, dom, false)
    }

    /// Accepts negative values. Contraction no longer holds for the resulting extension.
    pub fn new_unchecked_sign(spec: RobinSpec, dom: &DomainGeometry) -> Result<Self> {
        Self::build(spec, dom, true)
    }

    fn build(spec: RobinSpec, dom: &DomainGeometry, allow_negative: bool) -> Result<Self> {
        let min = match (&spec, dom.dim()) {
            (RobinSpec::Ends(e), 1) => {
                if !e.left.is_finite() || !e.right.is_finite() {
                    return Err(Error::InvalidArgument("Robin coefficient must be finite".into()));
                }
                e.left.min(e.right)
            }
            (RobinSpec::Fourier(f), 2) => {
                if f.cos.iter().chain(&f.sin).any(|v| !v.is_finite()) {
                    return Err(Error::InvalidArgument("Robin coefficient must be finite".into()));
                }
                (0..BETA_VALIDATION_SAMPLES)
                    .map(|i| f.eval(TAU * i as f64 / BETA_VALIDATION_SAMPLES as f64))
                    .fold(f64::INFINITY, f64::min)
            }
            (RobinSpec::Ends(_), _) => {
                return Err(Error::InvalidArgument("endpoint Robin coefficients need an interval domain".into()))
            }
            (RobinSpec::Fourier(_), _) => {
                return Err(Error::InvalidArgument("Fourier Robin coefficients need a planar domain".into()))
            }
        };
        if min < 0.0 && !allow_negative {
            return Err(Error::NegativeRobinCoefficient { min });
        }
        Ok(Self { spec, allow_negative })
    }

    /// Constant coefficient on any domain.
    pub fn constant(value: f64, dom: &DomainGeometry) -> Result<Self> {
        let spec = if dom.dim() == 1 {
            RobinSpec::Ends(EndValues { left: value, right: value })
        } else {
            RobinSpec::Fourier(FourierSeries { cos: vec![value], sin: vec![] })
        };
        Self::new(spec, dom)
    }

    pub fn spec(&self) -> &RobinSpec {
        &self.spec
    }

    /// Whether the sign check was bypassed.
    pub fn allows_negative(&self) -> bool {
        self.allow_negative
    }

    pub fn value_at(&self, p: &BoundaryPoint) -> f64 {
        match (&self.spec, p.param) {
            (RobinSpec::Ends(e), BoundaryParam::End(0)) => e.left,
            (RobinSpec::Ends(e), _) => e.right,
            (RobinSpec::Fourier(f), BoundaryParam::Angle(th)) => f.eval(th),
            (RobinSpec::Fourier(f), BoundaryParam::End(_)) => f.eval(0.0),
        }
    }

    /// Constant value, if the coefficient is constant along the boundary.
    pub fn as_constant(&self) -> Option<f64> {
        match &self.spec {
            RobinSpec::Ends(e) if e.left == e.right => Some(e.left),
            RobinSpec::Fourier(f) if f.cos.len() <= 1 && f.sin.iter().skip(1).all(|b| *b == 0.0) => {
                Some(f.cos.first().copied().unwrap_or(0.0))
            }
            _ => None,
        }
    }
}

/// Which extension operator to apply.
#[derive(Debug, Clone, PartialEq)]
pub enum Extension {
    /// `E_β`; `β ≡ 0` gives the Neumann reflection.
    Robin(RobinCoefficient),
    /// `E_D`, odd reflection with cutoff.
    Dirichlet,
    /// `E_∞`, extension by zero.
    Zero,
    /// Constant along normals, times the cutoff.
    ConstantNormal,
}

/// Where the extension reads `u`, and with which weight.
enum Source {
    Vanish,
    At(Point, f64),
}

impl Extension {
    fn source(&self, dom: &DomainGeometry, profile: &KinkProfile, x: Point, d: f64) -> Source {
        if d >= profile.support_width() || matches!(self, Extension::Zero) {
            return Source::Vanish;
        }
        let (bp, d) = dom.project(x);
        let nu = dom.outward_normal(&bp);
        let p = bp.position;
        let reflected = [p[0] - d * nu[0], if dom.dim() == 1 { 0.0 } else { p[1] - d * nu[1] }];
        match self {
            Extension::Robin(beta) => Source::At(reflected, profile.rho(beta.value_at(&bp), d)),
            Extension::Dirichlet => Source::At(reflected, -profile.cutoff(d)),
            Extension::ConstantNormal => Source::At(p, profile.cutoff(d)),
            Extension::Zero => Source::Vanish,
        }
    }

    /// Callable path: `(E u)(x)` with `u` evaluated exactly.
    pub fn eval<F: SpatialFunction + ?Sized>(
        &self,
        dom: &DomainGeometry,
        profile: &KinkProfile,
        u: &F,
        x: Point,
    ) -> f64 {
        let d = dom.signed_distance(x);
        if d <= dom.eps_geo() {
            return u.value(x);
        }
        match self.source(dom, profile, x, d) {
            Source::Vanish => 0.0,
            Source::At(q, w) => {
                if w == 0.0 {
                    0.0
                } else {
                    w * u.value(q)
                }
            }
        }
    }

    /// Callable path sampled on every grid node.
    pub fn sample<F: SpatialFunction + ?Sized>(
        &self,
        dom: &DomainGeometry,
        profile: &KinkProfile,
        u: &F,
        disc: &Discretization,
    ) -> ScalarField {
        let grid = disc.grid().clone();
        let dist = disc.distance();
        let closure = disc.closure();
        let values = (0..grid.len())
            .into_par_iter()
            .map(|k| {
                let x = grid.node(k);
                if closure[k] {
                    return u.value(x);
                }
                match self.source(dom, profile, x, dist[k]) {
                    Source::Vanish => 0.0,
                    Source::At(_, 0.0) => 0.0,
                    Source::At(q, w) => w * u.value(q),
                }
            })
            .collect();
        ScalarField::from_values(grid, values).expect("grid length")
    }
}

/// Callable `E_β u`.
pub fn extend_robin<'a, F: SpatialFunction + ?Sized>(
    dom: &'a DomainGeometry,
    beta: &'a RobinCoefficient,
    profile: &'a KinkProfile,
    u: &'a F,
) -> impl Fn(Point) -> f64 + Sync + 'a {
    let ext = Extension::Robin(beta.clone());
    move |x| ext.eval(dom, profile, u, x)
}

/// Callable `E_D u`.
pub fn extend_dirichlet<'a, F: SpatialFunction + ?Sized>(
    dom: &'a DomainGeometry,
    profile: &'a KinkProfile,
    u: &'a F,
) -> impl Fn(Point) -> f64 + Sync + 'a {
    move |x| Extension::Dirichlet.eval(dom, profile, u, x)
}

/// Callable `E_∞ u`.
pub fn extend_zero<'a, F: SpatialFunction + ?Sized>(
    dom: &'a DomainGeometry,
    u: &'a F,
) -> impl Fn(Point) -> f64 + Sync + 'a {
    move |x| if dom.signed_distance(x) <= dom.eps_geo() { u.value(x) } else { 0.0 }
}

/// Callable constant-normal extension.
pub fn extend_constant_normal<'a, F: SpatialFunction + ?Sized>(
    dom: &'a DomainGeometry,
    profile: &'a KinkProfile,
    u: &'a F,
) -> impl Fn(Point) -> f64 + Sync + 'a {
    move |x| Extension::ConstantNormal.eval(dom, profile, u, x)
}

/// Target node, weight and interpolation stencil `(node, weight)`.
type CollarEntry = (usize, f64, Vec<(usize, f64)>);

/// Interpolation stencil over closure nodes.
#[derive(Debug, Clone)]
struct Stencil {
    start: usize,
    len: usize,
}

/// Field path: an extension operator precomputed for one grid.
#[derive(Debug, Clone)]
pub struct FieldExtension {
    grid: Grid,
    closure: Vec<bool>,
    targets: Vec<usize>,
    factors: Vec<f64>,
    stencils: Vec<Stencil>,
    nodes: Vec<usize>,
    weights: Vec<f64>,
}

impl FieldExtension {
    pub fn new(
        ext: &Extension,
        dom: &DomainGeometry,
        profile: &KinkProfile,
        disc: &Discretization,
    ) -> Result<Self> {
        let grid = disc.grid().clone();
        let h = grid.h();
        let layers = profile.support_width() / h;
        if layers < 4.0 {
            return Err(Error::GridTooCoarse { layers });
        }
        let dist = disc.distance();
        let closure = disc.closure();
        let collar: Vec<usize> = (0..grid.len())
            .filter(|&k| !closure[k] && dist[k] < profile.support_width())
            .collect();

        let built: Vec<Option<CollarEntry>> = collar
            .par_iter()
            .map(|&k| match ext.source(dom, profile, grid.node(k), dist[k]) {
                Source::Vanish => None,
                Source::At(_, 0.0) => None,
                Source::At(q, w) => Some((k, w, build_stencil(&grid, closure, q))),
            })
            .collect();

        let mut out = Self {
            grid,
            closure: closure.to_vec(),
            targets: Vec::new(),
            factors: Vec::new(),
            stencils: Vec::new(),
            nodes: Vec::new(),
            weights: Vec::new(),
        };
        for (k, w, st) in built.into_iter().flatten() {
            out.targets.push(k);
            out.factors.push(w);
            out.stencils.push(Stencil { start: out.nodes.len(), len: st.len() });
            for (n, wt) in st {
                out.nodes.push(n);
                out.weights.push(wt);
            }
        }
        Ok(out)
    }

    /// Number of outside nodes that receive a nonzero extension.
    pub fn collar_nodes(&self) -> usize {
        self.targets.len()
    }

    /// Overwrites every node outside the closed domain with the extension
    /// of the closure values.
    pub fn apply(&self, field: &mut ScalarField) -> Result<()> {
        if field.grid() != &self.grid {
            return Err(Error::MismatchedGrid);
        }
        let u = field.values();
        // Clamping to the range of the closure data keeps the extension a sup-norm
        // contraction and positivity preserving without clipping near-boundary extrapolation.
        let (lo, hi) = self
            .closure
            .iter()
            .zip(u)
            .filter(|(c, _)| **c)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, v)| (lo.min(*v), hi.max(*v)));
        let ext: Vec<f64> = (0..self.targets.len())
            .into_par_iter()
            .map(|e| {
                let st = &self.stencils[e];
                let mut acc = 0.0;
                for s in st.start..st.start + st.len {
                    acc += self.weights[s] * u[self.nodes[s]];
                }
                self.factors[e] * acc.clamp(lo, hi)
            })
            .collect();
        let values = field.values_mut();
        for (v, inside) in values.iter_mut().zip(&self.closure) {
            if !inside {
                *v = 0.0;
            }
        }
        for (k, v) in self.targets.iter().zip(ext) {
            values[*k] = v;
        }
        Ok(())
    }

    /// Applies the extension to a copy of `field`.
    pub fn extend(&self, field: &ScalarField) -> Result<ScalarField> {
        let mut out = field.clone();
        self.apply(&mut out)?;
        Ok(out)
    }
}

/// Cubic Lagrange weights for nodes at 0, 1, 2, 3 evaluated at `s`.
fn cubic_weights(s: f64) -> [f64; 4] {
    [
        -(s - 1.0) * (s - 2.0) * (s - 3.0) / 6.0,
        s * (s - 2.0) * (s - 3.0) / 2.0,
        -s * (s - 1.0) * (s - 3.0) / 2.0,
        s * (s - 1.0) * (s - 2.0) / 6.0,
    ]
}

/// Per-axis stencil: a single node when `xi` sits on a grid line, four nodes otherwise.
#[derive(Clone, Copy)]
enum AxisStencil {
    Node(isize),
    Cubic { base: isize, xi: f64 },
}

impl AxisStencil {
    fn new(xi: f64) -> Self {
        let r = xi.round();
        if (xi - r).abs() < 1e-9 {
            AxisStencil::Node(r as isize)
        } else {
            AxisStencil::Cubic { base: xi.floor() as isize - 1, xi }
        }
    }

    fn entries(&self) -> Vec<(isize, f64)> {
        match *self {
            AxisStencil::Node(i) => vec![(i, 1.0)],
            AxisStencil::Cubic { base, xi } => {
                let w = cubic_weights(xi - base as f64);
                (0..4).map(|k| (base + k as isize, w[k])).collect()
            }
        }
    }

    fn shift(&mut self, by: isize) -> bool {
        match self {
            AxisStencil::Node(_) => false,
            AxisStencil::Cubic { base, .. } => {
                *base += by;
                true
            }
        }
    }
}

/// Tensor stencil around `q` made only of closure nodes. Shifts the cubic
/// stencil inward as needed; falls back to the nearest closure node.
fn build_stencil(grid: &Grid, closure: &[bool], q: Point) -> Vec<(usize, f64)> {
    let (nx, ny) = grid.shape();
    let inside = |i: isize, j: isize| -> Option<usize> {
        if i < 0 || j < 0 || i as usize >= nx || j as usize >= ny {
            return None;
        }
        let k = grid.index(i as usize, j as usize);
        closure[k].then_some(k)
    };
    let mut ax = AxisStencil::new(grid.fractional_index(0, q[0]));
    let mut ay = if grid.dim() == 1 { AxisStencil::Node(0) } else { AxisStencil::new(grid.fractional_index(1, q[1])) };

    for _ in 0..6 {
        let ex = ax.entries();
        let ey = ay.entries();
        let mut all = true;
        let (mut bad_x_lo, mut bad_x_hi, mut bad_y_lo, mut bad_y_hi) = (false, false, false, false);
        for (a, (i, _)) in ex.iter().enumerate() {
            for (b, (j, _)) in ey.iter().enumerate() {
                if inside(*i, *j).is_none() {
                    all = false;
                    if ex.len() > 1 && a == 0 {
                        bad_x_lo = true;
                    }
                    if ex.len() > 1 && a == ex.len() - 1 {
                        bad_x_hi = true;
                    }
                    if ey.len() > 1 && b == 0 {
                        bad_y_lo = true;
                    }
                    if ey.len() > 1 && b == ey.len() - 1 {
                        bad_y_hi = true;
                    }
                }
            }
        }
        if all {
            let mut st = Vec::with_capacity(ex.len() * ey.len());
            for (i, wx) in &ex {
                for (j, wy) in &ey {
                    st.push((inside(*i, *j).expect("checked"), wx * wy));
                }
            }
            return st;
        }
        let mut moved = false;
        if bad_x_lo != bad_x_hi {
            moved |= ax.shift(if bad_x_lo { 1 } else { -1 });
        }
        if bad_y_lo != bad_y_hi {
            moved |= ay.shift(if bad_y_lo { 1 } else { -1 });
        }
        if !moved {
            break;
        }
    }

    // Nearest closure node in a small neighbourhood.
    let ci = grid.fractional_index(0, q[0]).round() as isize;
    let cj = if grid.dim() == 1 { 0 } else { grid.fractional_index(1, q[1]).round() as isize };
    let reach: isize = if grid.dim() == 1 { 0 } else { 3 };
    let mut best: Option<(f64, usize)> = None;
    for di in -3..=3isize {
        for dj in -reach..=reach {
            if let Some(k) = inside(ci + di, cj + dj) {
                let p = grid.node(k);
                let dist = (p[0] - q[0]).hypot(p[1] - q[1]);
                if best.is_none_or(|(b, _)| dist < b) {
                    best = Some((dist, k));
                }
            }
        }
    }
    best.map(|(_, k)| vec![(k, 1.0)]).unwrap_or_default()
}

/// `E_β` on sampled data.
pub fn extend_robin_field(
    dom: &DomainGeometry,
    beta: &RobinCoefficient,
    profile: &KinkProfile,
    disc: &Discretization,
    field: &ScalarField,
) -> Result<ScalarField> {
    FieldExtension::new(&Extension::Robin(beta.clone()), dom, profile, disc)?.extend(field)
}

/// `E_D` on sampled data.
pub fn extend_dirichlet_field(
    dom: &DomainGeometry,
    profile: &KinkProfile,
    disc: &Discretization,
    field: &ScalarField,
) -> Result<ScalarField> {
    FieldExtension::new(&Extension::Dirichlet, dom, profile, disc)?.extend(field)
}

/// `E_∞` on sampled data: multiplication by the closure indicator.
pub fn extend_zero_field(disc: &Discretization, field: &ScalarField) -> ScalarField {
    let mut out = field.clone();
    disc.restrict(&mut out);
    out
}

/// Interior cutoff `χ_w`: 1 where `d <= −w`, 0 on the boundary and outside,
/// smooth and monotone in `d` in between.
pub fn interior_cutoff(dom: &DomainGeometry, disc: &Discretization, width: f64) -> Result<ScalarField> {
    if !(width > 0.0) {
        return Err(Error::InvalidArgument(format!("collar width must be positive, got {width}")));
    }
    if width >= dom.tubular_radius() {
        return Err(Error::CollarTooWide { width, radius: dom.tubular_radius() });
    }
    let values = disc.distance().iter().map(|&d| interior_cutoff_value(d, width)).collect();
    ScalarField::from_values(disc.grid().clone(), values)
}

/// `χ_w` as a function of the signed distance.
pub fn interior_cutoff_value(d: f64, width: f64) -> f64 {
    smoothstep(-d / width)
}

/// Largest Robin residual `|∇u·ν + βu|` over boundary samples.
pub fn robin_residual(dom: &DomainGeometry, beta: &RobinCoefficient, u: &SmoothTestFunction) -> f64 {
    dom.boundary_samples(2048)
        .iter()
        .map(|bp| {
            let g = u.gradient(bp.position);
            let nu = dom.outward_normal(bp);
            (g[0] * nu[0] + g[1] * nu[1] + beta.value_at(bp) * u.value(bp.position)).abs()
        })
        .fold(0.0, f64::max)
}

/// Whether `u` satisfies the Robin condition within `tol`, with the max residual.
pub fn check_robin_bc(
    dom: &DomainGeometry,
    beta: &RobinCoefficient,
    u: &SmoothTestFunction,
    tol: f64,
) -> (bool, f64) {
    let r = robin_residual(dom, beta, u);
    (r <= tol, r)
}

/// One-sided finite-difference Laplacians of `E u` at a boundary point.
///
/// Uses second-order one-sided stencils of spacing `eps` along the normal
/// from the inside and from the outside, plus curvature and tangential
/// terms of the Laplacian in normal coordinates (shared by both sides).
/// Returns `(inside, outside)`.
pub fn one_sided_laplacians<F: SpatialFunction + ?Sized>(
    dom: &DomainGeometry,
    ext: &Extension,
    profile: &KinkProfile,
    u: &F,
    bp: &BoundaryPoint,
    eps: f64,
) -> (f64, f64) {
    let nu = dom.outward_normal(bp);
    let p = bp.position;
    let along = |s: f64| ext.eval(dom, profile, u, [p[0] + s * nu[0], p[1] + s * nu[1]]);
    let kappa = dom.curvature(bp);
    let side = |sign: f64| {
        let g: Vec<f64> = (0..4).map(|k| along(sign * k as f64 * eps)).collect();
        let second = (2.0 * g[0] - 5.0 * g[1] + 4.0 * g[2] - g[3]) / (eps * eps);
        let first = sign * (-3.0 * g[0] + 4.0 * g[1] - g[2]) / (2.0 * eps);
        second + kappa * first
    };
    let tangential = match bp.param {
        BoundaryParam::Angle(th) => {
            let eta = 1e-3;
            let trace = |t: f64| u.value(dom.boundary_point(BoundaryParam::Angle(t)).position);
            let pos = |t: f64| dom.boundary_point(BoundaryParam::Angle(t)).position;
            let (pm, pp) = (pos(th - eta), pos(th + eta));
            let d1 = [(pp[0] - pm[0]) / (2.0 * eta), (pp[1] - pm[1]) / (2.0 * eta)];
            let d2 = [(pp[0] - 2.0 * p[0] + pm[0]) / (eta * eta), (pp[1] - 2.0 * p[1] + pm[1]) / (eta * eta)];
            let speed2 = d1[0] * d1[0] + d1[1] * d1[1];
            let g1 = (trace(th + eta) - trace(th - eta)) / (2.0 * eta);
            let g2 = (trace(th + eta) - 2.0 * trace(th) + trace(th - eta)) / (eta * eta);
            (g2 - (d1[0] * d2[0] + d1[1] * d2[1]) / speed2 * g1) / speed2
        }
        BoundaryParam::End(_) => 0.0,
    };
    (side(-1.0) + tangential, side(1.0) + tangential)
}
