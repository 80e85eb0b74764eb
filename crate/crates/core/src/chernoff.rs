//! Chernoff iterations for the Robin, Neumann and Dirichlet heat semigroups.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extension::{
    interior_cutoff, Extension, FieldExtension, KinkProfile, RobinCoefficient, SmoothTestFunction, SpatialFunction,
};
use crate::field::{Discretization, Grid, NodeBox, ScalarField};
use crate::geometry::{DomainGeometry, DomainSpec};
use crate::heat_kernel::{convolve_region, make_plan, KernelPlan};
use crate::numeric::fit_slope;
use crate::reference::{
    compare_fields, disk_robin_frequency, radial_crank_nicolson, series_solve, EigenExpansion, IntervalBc,
};

/// Which step operator to iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// `R G₀(τ) E_β`.
    Robin,
    /// `R G₀(τ) E₀`.
    Neumann,
    /// `χ_w G₀(τ) E_D` with a shrinking interior cutoff.
    Dirichlet,
    /// `1_Ω G₀(τ) E_∞`.
    DirichletL2,
    /// `R G₀(τ)` applied to the unkinked constant-normal extension.
    ConstantExt,
}

impl Variant {
    pub const ALL: [Variant; 5] =
        [Variant::Robin, Variant::Neumann, Variant::Dirichlet, Variant::DirichletL2, Variant::ConstantExt];

    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Robin => "robin",
            Variant::Neumann => "neumann",
            Variant::Dirichlet => "dirichlet",
            Variant::DirichletL2 => "dirichlet_l2",
            Variant::ConstantExt => "constant_ext",
        }
    }

    pub fn is_dirichlet(&self) -> bool {
        matches!(self, Variant::Dirichlet | Variant::DirichletL2)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown variant `{s}`")))
    }
}

/// Collar width law `w(τ) = c_w · diam(Ω) · τ^α` for the Dirichlet cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollarLaw {
    pub cw: f64,
    pub alpha: f64,
}

impl Default for CollarLaw {
    fn default() -> Self {
        Self { cw: 1.0, alpha: 1.0 }
    }
}

impl CollarLaw {
    pub fn width(&self, dom: &DomainGeometry, tau: f64) -> f64 {
        self.cw * dom.diameter() * tau.powf(self.alpha)
    }
}

pub const DEFAULT_KERNEL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig {
    pub variant: Variant,
    pub t: f64,
    pub n: Vec<usize>,
    pub h: f64,
    pub kernel_tol: f64,
    pub collar: CollarLaw,
    /// Required for `robin`, ignored otherwise.
    pub beta: Option<RobinCoefficient>,
}

impl SchemeConfig {
    pub fn new(variant: Variant, t: f64, n: Vec<usize>, h: f64) -> Self {
        Self { variant, t, n, h, kernel_tol: DEFAULT_KERNEL_TOL, collar: CollarLaw::default(), beta: None }
    }

    pub fn with_beta(mut self, beta: RobinCoefficient) -> Self {
        self.beta = Some(beta);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(Error::InvalidArgument(format!("final time must be positive, got {}", self.t)));
        }
        if self.n.is_empty() || self.n.contains(&0) {
            return Err(Error::InvalidArgument("step counts must be a nonempty list of positive integers".into()));
        }
        if !(self.h > 0.0) {
            return Err(Error::InvalidArgument(format!("grid spacing must be positive, got {}", self.h)));
        }
        if !(self.collar.cw > 0.0 && self.collar.alpha > 0.0) {
            return Err(Error::InvalidArgument("collar law needs cw > 0 and alpha > 0".into()));
        }
        match (self.variant, &self.beta) {
            (Variant::Robin, None) => Err(Error::InvalidArgument("robin variant needs a beta block".into())),
            (Variant::Robin, Some(_)) | (_, None) => Ok(()),
            (v, Some(_)) => Err(Error::InvalidArgument(format!("beta is only accepted by the robin variant, not {v}"))),
        }
    }
}

/// Step operators for one domain and configuration, with per-grid data cached.
pub struct Scheme {
    dom: DomainGeometry,
    cfg: SchemeConfig,
    profile: KinkProfile,
    disc: Discretization,
    extension: Option<FieldExtension>,
}

impl Scheme {
    pub fn new(dom: DomainGeometry, cfg: SchemeConfig) -> Result<Self> {
        let profile = KinkProfile::new(dom.tubular_radius())?;
        Self::with_profile(dom, cfg, profile)
    }

    /// Uses a caller-supplied kink profile (the self-test's fault hook).
    pub fn with_profile(dom: DomainGeometry, cfg: SchemeConfig, profile: KinkProfile) -> Result<Self> {
        cfg.validate()?;
        // Only closure nodes are ever read after a convolution, so the grid
        // needs to hold the extension's support and nothing more.
        let pad = profile.support_width() + 2.0 * cfg.h;
        let grid = Grid::covering(&dom, cfg.h, pad)?;
        let disc = Discretization::new(&dom, grid);
        let ext = match cfg.variant {
            Variant::Robin => Some(Extension::Robin(cfg.beta.clone().expect("validated"))),
            Variant::Neumann => Some(Extension::Robin(RobinCoefficient::constant(0.0, &dom)?)),
            Variant::Dirichlet => Some(Extension::Dirichlet),
            Variant::ConstantExt => Some(Extension::ConstantNormal),
            Variant::DirichletL2 => None,
        };
        let extension = ext.map(|e| FieldExtension::new(&e, &dom, &profile, &disc)).transpose()?;
        Ok(Self { dom, cfg, profile, disc, extension })
    }

    pub fn domain(&self) -> &DomainGeometry {
        &self.dom
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.cfg
    }

    pub fn profile(&self) -> &KinkProfile {
        &self.profile
    }

    pub fn discretization(&self) -> &Discretization {
        &self.disc
    }

    pub fn grid(&self) -> &Grid {
        self.disc.grid()
    }

    /// Samples `f` on the grid and restricts it to the closed domain.
    pub fn sample<F: SpatialFunction + ?Sized>(&self, f: &F) -> ScalarField {
        let mut u = ScalarField::from_fn(self.grid().clone(), |x| f.value(x));
        self.disc.restrict(&mut u);
        u
    }

    fn plan(&self, tau: f64) -> Result<KernelPlan> {
        make_plan(tau, self.cfg.h, self.dom.dim(), self.cfg.kernel_tol)
    }

    /// `G₀(τ)` of `src` evaluated on the closure nodes, zero elsewhere.
    fn convolve_to_closure(&self, src: &ScalarField, plan: &KernelPlan) -> Result<ScalarField> {
        let mut out = ScalarField::zeros(self.grid().clone());
        let support = src.support();
        if !support.is_empty() {
            convolve_region(src, plan, support, self.disc.closure_box(), out.values_mut())?;
        }
        self.disc.restrict(&mut out);
        Ok(out)
    }

    fn step_with(&self, u: &ScalarField, tau: f64, plan: &KernelPlan, cutoff: Option<&ScalarField>) -> Result<ScalarField> {
        if u.grid() != self.grid() {
            return Err(Error::MismatchedGrid);
        }
        let mut work = u.clone();
        match &self.extension {
            Some(fe) => fe.apply(&mut work)?,
            None => self.disc.restrict(&mut work),
        }
        let mut out = self.convolve_to_closure(&work, plan)?;
        if self.cfg.variant == Variant::Dirichlet {
            let owned;
            let chi = match cutoff {
                Some(c) => c,
                None => {
                    owned = interior_cutoff(&self.dom, &self.disc, self.cfg.collar.width(&self.dom, tau))?;
                    &owned
                }
            };
            for (v, c) in out.values_mut().iter_mut().zip(chi.values()) {
                *v *= c;
            }
        }
        Ok(out)
    }

    /// One step of length `τ`.
    pub fn step(&self, u: &ScalarField, tau: f64) -> Result<ScalarField> {
        let plan = self.plan(tau)?;
        self.step_with(u, tau, &plan, None)
    }

    /// `n` steps of length `t/n` starting from `u0` (restricted to the closed domain first).
    pub fn evolve(&self, u0: &ScalarField, n: usize) -> Result<ScalarField> {
        if n == 0 {
            return Err(Error::InvalidArgument("step count must be positive".into()));
        }
        let tau = self.cfg.t / n as f64;
        let plan = self.plan(tau)?;
        let cutoff = match self.cfg.variant {
            Variant::Dirichlet => Some(interior_cutoff(&self.dom, &self.disc, self.cfg.collar.width(&self.dom, tau))?),
            _ => None,
        };
        let mut u = u0.clone();
        self.disc.restrict(&mut u);
        for _ in 0..n {
            u = self.step_with(&u, tau, &plan, cutoff.as_ref())?;
        }
        Ok(u)
    }

    /// Value at the closure node nearest to `x`.
    pub fn value_near(&self, field: &ScalarField, x: [f64; 2]) -> f64 {
        let g = self.grid();
        let i = g.fractional_index(0, x[0]).round() as usize;
        let j = if g.dim() == 2 { g.fractional_index(1, x[1]).round() as usize } else { 0 };
        field.values()[g.index(i, j)]
    }
}

/// Checks that `u0` vanishes on the boundary, as the Dirichlet variants require.
pub fn check_dirichlet_data<F: SpatialFunction + ?Sized>(dom: &DomainGeometry, u0: &F, tol: f64) -> Result<()> {
    let worst = dom.boundary_samples(2048).iter().map(|bp| u0.value(bp.position).abs()).fold(0.0, f64::max);
    if worst > tol {
        return Err(Error::InvalidArgument(format!(
            "Dirichlet variants need initial data vanishing on the boundary (max |u0| = {worst:e})"
        )));
    }
    Ok(())
}

/// Source of the comparison solution in a convergence study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    /// Eigenfunction expansion on an interval.
    Eigen,
    /// Radial Crank–Nicolson on a disk with radial data.
    RadialCn,
    /// Self-convergence against the largest `n`.
    None,
}

impl ReferenceKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ReferenceKind::Eigen => "eigen",
            ReferenceKind::RadialCn => "radial_cn",
            ReferenceKind::None => "none",
        }
    }
}

/// Accuracy targets for reference solutions.
const REFERENCE_TOL: f64 = 1e-9;
const RADIAL_DR: f64 = 5e-4;
const RADIAL_DT: f64 = 2.5e-4;
const RADIAL_TOL: f64 = 1e-6;

fn unavailable(kind: ReferenceKind, why: &str) -> Error {
    Error::ReferenceUnavailable(format!("{} reference {why}", kind.as_str()))
}

/// Reference solution at the scheme's final time, sampled on its grid.
///
/// Returns `None` for [`ReferenceKind::None`].
pub fn reference_field(scheme: &Scheme, u0: &SmoothTestFunction, kind: ReferenceKind) -> Result<Option<ScalarField>> {
    let cfg = scheme.config();
    let dom = scheme.domain();
    let disc = scheme.discretization();
    if kind == ReferenceKind::None {
        return Ok(None);
    }
    if cfg.variant == Variant::ConstantExt {
        return Err(unavailable(kind, "is not defined for the constant_ext variant"));
    }
    let constant_beta = || -> Result<f64> {
        match cfg.variant {
            Variant::Robin => cfg
                .beta
                .as_ref()
                .and_then(|b| b.as_constant())
                .ok_or_else(|| unavailable(kind, "needs a constant beta")),
            _ => Ok(0.0),
        }
    };
    let mut field = ScalarField::zeros(scheme.grid().clone());
    match (kind, dom.spec()) {
        (ReferenceKind::Eigen, DomainSpec::Interval { a, b }) => {
            let bc = match (cfg.variant, &cfg.beta) {
                (Variant::Robin, Some(beta)) => match beta.spec() {
                    crate::extension::RobinSpec::Ends(e) => IntervalBc::Robin { left: e.left, right: e.right },
                    _ => return Err(unavailable(kind, "needs endpoint beta values")),
                },
                (Variant::Neumann, _) => IntervalBc::Robin { left: 0.0, right: 0.0 },
                (Variant::Dirichlet | Variant::DirichletL2, _) => IntervalBc::Dirichlet,
                _ => return Err(unavailable(kind, "has no boundary condition for this variant")),
            };
            // Enough modes that e^{−λ_K t} is negligible, with a floor for small t.
            let kmax = ((b - a) / std::f64::consts::PI * (40.0 / cfg.t).sqrt()).ceil() as usize + 8;
            let modes = kmax.clamp(16, 4000);
            let exp = EigenExpansion::new(*a, *b, bc, modes, |x| u0.value([x, 0.0]), 64 * modes)?;
            let nodes: Vec<usize> = disc.closure_nodes().collect();
            let xs: Vec<f64> = nodes.iter().map(|k| scheme.grid().node(*k)[0]).collect();
            let vals = series_solve(&exp, cfg.t, &xs, REFERENCE_TOL)?;
            for (k, v) in nodes.into_iter().zip(vals) {
                field.values_mut()[k] = v;
            }
        }
        (ReferenceKind::RadialCn, DomainSpec::Disk { center, radius }) => {
            if cfg.variant.is_dirichlet() {
                return Err(unavailable(kind, "supports Robin and Neumann data only"));
            }
            let beta = constant_beta()?;
            let profile: Box<dyn Fn(f64) -> f64> = match u0 {
                SmoothTestFunction::RadialPoly { center: c, .. } | SmoothTestFunction::BesselJ0 { center: c, .. }
                    if c == center =>
                {
                    let f = u0.clone();
                    let c = *c;
                    Box::new(move |r| f.value([c[0] + r, c[1]]))
                }
                _ => return Err(unavailable(kind, "needs initial data radial about the disk centre")),
            };
            let sol = radial_crank_nicolson(*radius, beta, profile, cfg.t, RADIAL_DR, RADIAL_DT, RADIAL_TOL)?;
            for k in disc.closure_nodes().collect::<Vec<_>>() {
                let x = scheme.grid().node(k);
                field.values_mut()[k] = sol.value_at((x[0] - center[0]).hypot(x[1] - center[1]));
            }
        }
        (ReferenceKind::Eigen, _) => return Err(unavailable(kind, "needs an interval domain")),
        (ReferenceKind::RadialCn, _) => return Err(unavailable(kind, "needs a disk domain")),
        (ReferenceKind::None, _) => unreachable!(),
    }
    Ok(Some(field))
}

/// Eigenmode of the disk Robin problem with `β`, `J0(ωr)` centred at the disk centre.
pub fn disk_robin_eigenmode(dom: &DomainGeometry, beta: f64) -> Result<SmoothTestFunction> {
    match dom.spec() {
        DomainSpec::Disk { center, radius } => {
            let omega = disk_robin_frequency(*radius, beta)?;
            Ok(SmoothTestFunction::BesselJ0 { center: *center, omega, amplitude: 1.0 })
        }
        _ => Err(Error::InvalidDomain("eigenmode needs a disk".into())),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub sup_error: f64,
    pub l2_error: f64,
    /// `ln(e_prev/e)/ln(n/n_prev)`; absent for the first row or a zero error.
    pub observed_order: Option<f64>,
    pub seconds: f64,
}

/// Change of the largest-`n` solution when the grid spacing is halved.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCheck {
    pub n: usize,
    pub h: f64,
    pub sup_change: f64,
    pub l2_change: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub variant: Variant,
    pub reference: ReferenceKind,
    pub rows: Vec<ConvergenceRow>,
    pub grid_check: Option<GridCheck>,
}

impl ConvergenceReport {
    pub const CSV_HEADER: &'static str = "n,sup_error,l2_error,observed_order,seconds";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let order = r.observed_order.map(|o| format!("{o:.16e}")).unwrap_or_default();
            s.push_str(&format!("{},{:.16e},{:.16e},{},{:.6}\n", r.n, r.sup_error, r.l2_error, order, r.seconds));
        }
        s
    }

    pub fn sup_errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.sup_error).collect()
    }
}

fn observed_order(prev: (usize, f64), cur: (usize, f64)) -> Option<f64> {
    if prev.1 > 0.0 && cur.1 > 0.0 && cur.0 != prev.0 {
        Some((prev.1 / cur.1).ln() / (cur.0 as f64 / prev.0 as f64).ln())
    } else {
        None
    }
}

/// Runs [`Scheme::evolve`] for every configured `n` and measures the error
/// against `reference` in sup and discrete `L²` norms over closure nodes.
///
/// With [`ReferenceKind::None`] the largest-`n` run serves as the reference.
/// With `grid_check` the largest `n` is rerun at `h/2` and the change reported.
pub fn convergence_study(
    scheme: &Scheme,
    u0: &SmoothTestFunction,
    reference: ReferenceKind,
    grid_check: bool,
) -> Result<ConvergenceReport> {
    let cfg = scheme.config();
    let disc = scheme.discretization();
    let mut ns = cfg.n.clone();
    ns.sort_unstable();
    ns.dedup();
    let start = scheme.sample(u0);
    let exact = reference_field(scheme, u0, reference)?;

    let mut runs = Vec::with_capacity(ns.len());
    for &n in &ns {
        let clock = Instant::now();
        let u = scheme.evolve(&start, n)?;
        runs.push((n, u, clock.elapsed().as_secs_f64()));
    }
    let target = match &exact {
        Some(f) => f.clone(),
        None => runs.last().expect("nonempty").1.clone(),
    };
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(runs.len());
    for (n, u, seconds) in &runs {
        let (sup_error, l2_error) = compare_fields(u, &target, disc)?;
        let observed_order = rows.last().and_then(|p| observed_order((p.n, p.sup_error), (*n, sup_error)));
        rows.push(ConvergenceRow { n: *n, sup_error, l2_error, observed_order, seconds: *seconds });
    }

    let grid_check = if grid_check {
        let (n, coarse, _) = runs.last().expect("nonempty");
        let mut fine_cfg = cfg.clone();
        fine_cfg.h = cfg.h / 2.0;
        let fine = Scheme::with_profile(scheme.domain().clone(), fine_cfg, *scheme.profile())?;
        let uf = fine.evolve(&fine.sample(u0), *n)?;
        let (sup_change, l2_change) = compare_on_coarse(scheme, coarse, &fine, &uf);
        Some(GridCheck { n: *n, h: cfg.h, sup_change, l2_change })
    } else {
        None
    };
    Ok(ConvergenceReport { variant: cfg.variant, reference, rows, grid_check })
}

/// Differences between a coarse field and a fine-grid field at the coarse closure nodes.
fn compare_on_coarse(coarse: &Scheme, uc: &ScalarField, fine: &Scheme, uf: &ScalarField) -> (f64, f64) {
    let gc = coarse.grid();
    let mut sup: f64 = 0.0;
    let mut sq = 0.0;
    for k in coarse.discretization().closure_nodes() {
        let e = uc.values()[k] - fine.value_near(uf, gc.node(k));
        sup = sup.max(e.abs());
        sq += e * e;
    }
    (sup, (sq * gc.cell_volume()).sqrt())
}

/// Sup-norm of `(V(τ)u − u)/τ − Δu` over closure nodes with signed distance
/// at least `−band`, where `V(τ) = R G₀(τ) E` and `E u` is evaluated exactly
/// (callable path) on a grid of spacing `h`.
pub fn consistency_residual(
    dom: &DomainGeometry,
    ext: &Extension,
    profile: &KinkProfile,
    u: &SmoothTestFunction,
    h: f64,
    tau: f64,
    kernel_tol: f64,
    band: f64,
) -> Result<f64> {
    let grid = Grid::covering(dom, h, profile.support_width() + 2.0 * h)?;
    let disc = Discretization::new(dom, grid.clone());
    let plan = make_plan(tau, h, dom.dim(), kernel_tol)?;
    let extended = ext.sample(dom, profile, u, &disc);
    let mut out = ScalarField::zeros(grid.clone());
    let near: Vec<usize> = disc.closure_nodes().filter(|k| disc.distance()[*k] >= -band).collect();
    let dst = bounding_box(&grid, &near);
    convolve_region(&extended, &plan, extended.support(), dst, out.values_mut())?;
    Ok(near
        .iter()
        .map(|&k| {
            let x = grid.node(k);
            ((out.values()[k] - u.value(x)) / tau - u.laplacian(x)).abs()
        })
        .fold(0.0, f64::max))
}

fn bounding_box(grid: &Grid, nodes: &[usize]) -> NodeBox {
    let mut b = NodeBox { i0: usize::MAX, i1: 0, j0: usize::MAX, j1: 0 };
    for &k in nodes {
        let (i, j) = grid.coords(k);
        b.i0 = b.i0.min(i);
        b.i1 = b.i1.max(i + 1);
        b.j0 = b.j0.min(j);
        b.j1 = b.j1.max(j + 1);
    }
    if nodes.is_empty() {
        NodeBox { i0: 0, i1: 0, j0: 0, j1: 0 }
    } else {
        b
    }
}

/// One row of the boundary mass-loss probe.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRow {
    pub t: f64,
    pub h: f64,
    pub loss: f64,
}

/// Grid resolution of the probe relative to the diffusion length `√t`.
pub const PROBE_POINTS_PER_SQRT_T: f64 = 50.0;

/// Mass deficit `∫_Ω (1 − R G₀(t) E 1)` for each `t`, on a grid with
/// `h = √t / 50`.
pub fn boundary_diffusion_probe(dom: &DomainGeometry, ext: &Extension, ts: &[f64], kernel_tol: f64) -> Result<Vec<ProbeRow>> {
    let profile = KinkProfile::new(dom.tubular_radius())?;
    let one = SmoothTestFunction::constant(1.0);
    ts.iter()
        .map(|&t| {
            let h = t.sqrt() / PROBE_POINTS_PER_SQRT_T;
            let grid = Grid::covering(dom, h, profile.support_width() + 2.0 * h)?;
            let disc = Discretization::new(dom, grid.clone());
            let plan = make_plan(t, h, dom.dim(), kernel_tol)?;
            let extended = ext.sample(dom, &profile, &one, &disc);
            let mut out = ScalarField::zeros(grid.clone());
            convolve_region(&extended, &plan, extended.support(), disc.closure_box(), out.values_mut())?;
            let deficit = crate::numeric::neumaier_sum(disc.closure_nodes().map(|k| 1.0 - out.values()[k]));
            Ok(ProbeRow { t, h, loss: deficit * grid.cell_volume() })
        })
        .collect()
}

/// Least-squares slope of `ln loss` against `ln t`.
pub fn probe_slope(rows: &[ProbeRow]) -> f64 {
    let xs: Vec<f64> = rows.iter().map(|r| r.t.ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.loss.ln()).collect();
    fit_slope(&xs, &ys)
}

#[cfg(test)]
mod tests;
