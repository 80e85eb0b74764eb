//! Free-space Gaussian semigroup applied by truncated separable convolution.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{Grid, NodeBox, ScalarField};
use crate::numeric::neumaier_sum;

/// Gauss–Weierstrass kernel `(4πt)^{-N/2} exp(−|x|²/(4t))`.
pub fn heat_kernel_value(t: f64, x: &[f64]) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("heat kernel needs t > 0, got {t}")));
    }
    let r2: f64 = x.iter().map(|v| v * v).sum();
    let n = x.len() as i32;
    Ok((4.0 * PI * t).powf(-0.5 * n as f64) * (-r2 / (4.0 * t)).exp())
}

/// Normalised 1D weights for one time step; used along every axis.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelPlan {
    t: f64,
    h: f64,
    dim: usize,
    radius: f64,
    half_width: usize,
    weights: Vec<f64>,
}

/// Kernel radius `2√(t·ln(1/tol))`; the Gaussian tail beyond it carries at most `tol` mass.
pub fn truncation_radius(t: f64, tol: f64) -> f64 {
    2.0 * (t * (1.0 / tol).ln()).sqrt()
}

pub fn make_plan(t: f64, h: f64, dim: usize, tol: f64) -> Result<KernelPlan> {
    if !(t > 0.0) || !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("kernel plan needs t > 0 and h > 0, got t={t}, h={h}")));
    }
    if !(tol > 0.0 && tol <= 1e-3) {
        return Err(Error::InvalidArgument(format!("kernel tolerance must lie in (0, 1e-3], got {tol}")));
    }
    if dim != 1 && dim != 2 {
        return Err(Error::InvalidArgument(format!("dimension must be 1 or 2, got {dim}")));
    }
    let radius = truncation_radius(t, tol);
    if radius < 2.0 * h {
        return Err(Error::StepTooSmall { step: t, radius, max_h: 0.5 * radius });
    }
    let half_width = (radius / h).floor() as usize;
    let raw: Vec<f64> = (0..=2 * half_width)
        .map(|k| {
            let x = (k as f64 - half_width as f64) * h;
            (-x * x / (4.0 * t)).exp()
        })
        .collect();
    let total = neumaier_sum(raw.iter().copied());
    let weights = raw.into_iter().map(|w| w / total).collect();
    Ok(KernelPlan { t, h, dim, radius, half_width, weights })
}

impl KernelPlan {
    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Number of nodes on either side of the centre weight.
    pub fn half_width(&self) -> usize {
        self.half_width
    }

    /// Weights `w_{-J}, …, w_J`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn check_grid(&self, grid: &Grid) -> Result<()> {
        if grid.h() != self.h || grid.dim() != self.dim {
            return Err(Error::MismatchedGrid);
        }
        Ok(())
    }
}

/// Applies the Gaussian semigroup to the whole grid.
///
/// The field's support must stay at least one kernel radius away from the
/// grid edge so that no mass is clipped.
pub fn apply_gaussian(field: &ScalarField, plan: &KernelPlan) -> Result<ScalarField> {
    let grid = field.grid();
    plan.check_grid(grid)?;
    let support = field.support();
    if support.is_empty() {
        return Ok(ScalarField::zeros(grid.clone()));
    }
    let (nx, ny) = grid.shape();
    let j = plan.half_width;
    let clipped_x = support.i0 < j || support.i1 + j > nx;
    let clipped_y = grid.dim() == 2 && (support.j0 < j || support.j1 + j > ny);
    if clipped_x || clipped_y {
        return Err(Error::EdgeClipping);
    }
    let mut out = ScalarField::zeros(grid.clone());
    convolve_region(field, plan, support, grid.full_box(), out.values_mut())?;
    Ok(out)
}

/// Convolves the nodes of `src` with the kernel and writes the result on
/// the nodes of `dst` into `out` (a full-grid buffer; nodes outside `dst`
/// are left untouched). Input values outside `src` are treated as zero.
pub fn convolve_region(
    field: &ScalarField,
    plan: &KernelPlan,
    src: NodeBox,
    dst: NodeBox,
    out: &mut [f64],
) -> Result<()> {
    let grid = field.grid();
    plan.check_grid(grid)?;
    if out.len() != grid.len() {
        return Err(Error::MismatchedGrid);
    }
    if dst.is_empty() {
        return Ok(());
    }
    let (nx, _) = grid.shape();
    let u = field.values();
    let w = &plan.weights;
    let hw = plan.half_width;

    if grid.dim() == 1 {
        let row = &mut out[dst.i0..dst.i1];
        row.par_iter_mut().enumerate().for_each(|(k, o)| {
            *o = window_dot(u, w, hw, src.i0, src.i1, dst.i0 + k);
        });
        return Ok(());
    }

    // Pass 1: along x, rows of the source box, columns of the destination box.
    let width = dst.i1 - dst.i0;
    let mut tmp = vec![0.0; (src.j1 - src.j0) * width];
    tmp.par_chunks_mut(width).enumerate().for_each(|(r, trow)| {
        let jrow = src.j0 + r;
        let urow = &u[jrow * nx..(jrow + 1) * nx];
        for (k, t) in trow.iter_mut().enumerate() {
            *t = window_dot(urow, w, hw, src.i0, src.i1, dst.i0 + k);
        }
    });

    // Pass 2: along y, as weighted sums of pass-1 rows.
    let rows: Vec<(usize, &mut [f64])> = out
        .chunks_mut(nx)
        .enumerate()
        .skip(dst.j0)
        .take(dst.j1 - dst.j0)
        .collect();
    rows.into_par_iter().for_each(|(jout, orow)| {
        let target = &mut orow[dst.i0..dst.i1];
        target.iter_mut().for_each(|v| *v = 0.0);
        let lo = src.j0.max(jout.saturating_sub(hw));
        let hi = src.j1.min(jout + hw + 1);
        for l in lo..hi {
            let wt = w[l + hw - jout];
            let trow = &tmp[(l - src.j0) * width..(l - src.j0 + 1) * width];
            for (o, t) in target.iter_mut().zip(trow) {
                *o += wt * t;
            }
        }
    });
    Ok(())
}

/// `Σ_m w[m − i + J]·u[m]` over `m ∈ [lo, hi) ∩ [i − J, i + J]`.
#[inline]
fn window_dot(u: &[f64], w: &[f64], hw: usize, lo: usize, hi: usize, i: usize) -> f64 {
    let start = lo.max(i.saturating_sub(hw));
    let end = hi.min(i + hw + 1);
    if start >= end {
        return 0.0;
    }
    let a = &u[start..end];
    let b = &w[start + hw - i..end + hw - i];
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}
