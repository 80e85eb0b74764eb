//! Radially symmetric heat flow on a disk with a constant Robin coefficient.

use crate::error::{Error, Result};
use crate::numeric::{bisect, solve_tridiagonal};
use crate::special::{bessel_j0, bessel_j1};

/// Frequency `ω` of the first radial Robin eigenmode `J0(ωr)` on a disk of
/// radius `radius`, the smallest positive root of `ω J1(ωR) = β J0(ωR)`.
/// Zero for `β = 0` (the constant mode).
pub fn disk_robin_frequency(radius: f64, beta: f64) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(Error::InvalidDomain(format!("disk radius must be positive, got {radius}")));
    }
    if !(beta >= 0.0) {
        return Err(Error::NegativeRobinCoefficient { min: beta });
    }
    if beta == 0.0 {
        return Ok(0.0);
    }
    // First zero of J0.
    let hi = 2.404_825_557_695_773 / radius;
    let lo = 1e-150;
    bisect(|w| w * bessel_j1(w * radius) - beta * bessel_j0(w * radius), lo, hi, 1e-15)
        .ok_or(Error::RootBracketFailure { lo, hi })
}

/// Radial profile on uniform nodes `r_i = i·Δr`, `i = 0..=M`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    dr: f64,
    values: Vec<f64>,
    /// Estimated sup-norm error after extrapolation.
    pub estimate: f64,
}

impl RadialProfile {
    pub fn dr(&self) -> f64 {
        self.dr
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn radius(&self) -> f64 {
        self.dr * (self.values.len() - 1) as f64
    }

    /// Cubic Lagrange interpolation at radius `r`, clamped to `[0, R]`.
    pub fn value_at(&self, r: f64) -> f64 {
        let m = self.values.len() - 1;
        let s = (r / self.dr).clamp(0.0, m as f64);
        let base = (s.floor() as usize).saturating_sub(1).min(m.saturating_sub(3));
        let mut v = 0.0;
        for i in 0..4.min(m + 1) {
            let xi = (base + i) as f64;
            let mut w = 1.0;
            for j in 0..4.min(m + 1) {
                if j != i {
                    let xj = (base + j) as f64;
                    w *= (s - xj) / (xi - xj);
                }
            }
            v += w * self.values[base + i];
        }
        v
    }
}

/// Crank–Nicolson for `u_t = u_rr + u_r/r` on `[0, R]` with `u_r(R) + βu(R) = 0`.
///
/// Returns nodal values after `steps` steps of size `t/steps`.
pub fn crank_nicolson_raw<F: Fn(f64) -> f64>(radius: f64, beta: f64, u0: F, t: f64, panels: usize, steps: usize) -> Vec<f64> {
    let m = panels;
    let dr = radius / m as f64;
    let dt = t / steps as f64;
    let n = m + 1;
    let inv = 1.0 / (dr * dr);
    // Rows of the discrete operator L (u_t = L u).
    let mut lsub = vec![0.0; n];
    let mut ldiag = vec![0.0; n];
    let mut lsup = vec![0.0; n];
    ldiag[0] = -4.0 * inv;
    lsup[0] = 4.0 * inv;
    for i in 1..m {
        let r = i as f64 * dr;
        lsub[i] = inv - 1.0 / (2.0 * r * dr);
        ldiag[i] = -2.0 * inv;
        lsup[i] = inv + 1.0 / (2.0 * r * dr);
    }
    // Ghost node u_{M+1} = u_{M−1} − 2Δr·β·u_M, and u_r/r = −βu_M/R.
    lsub[m] = 2.0 * inv;
    ldiag[m] = -2.0 * inv - 2.0 * beta / dr - beta / radius;

    let half = 0.5 * dt;
    let asub: Vec<f64> = lsub.iter().map(|v| -half * v).collect();
    let adiag: Vec<f64> = ldiag.iter().map(|v| 1.0 - half * v).collect();
    let asup: Vec<f64> = lsup.iter().map(|v| -half * v).collect();

    let mut u: Vec<f64> = (0..n).map(|i| u0(i as f64 * dr)).collect();
    let mut rhs = vec![0.0; n];
    for _ in 0..steps {
        for i in 0..n {
            let mut lu = ldiag[i] * u[i];
            if i > 0 {
                lu += lsub[i] * u[i - 1];
            }
            if i + 1 < n {
                lu += lsup[i] * u[i + 1];
            }
            rhs[i] = u[i] + half * lu;
        }
        solve_tridiagonal(&asub, &adiag, &asup, &mut rhs);
        u.copy_from_slice(&rhs);
    }
    u
}

/// Richardson-extrapolated Crank–Nicolson solution at time `t`.
///
/// Runs with `(Δr, Δt)` and `(Δr/2, Δt/2)`, combines them on the coarse
/// nodes, and fails with `StepRejected` if the fine run differs from the
/// extrapolant by more than `tol`.
pub fn radial_crank_nicolson<F: Fn(f64) -> f64>(
    radius: f64,
    beta: f64,
    u0: F,
    t: f64,
    dr: f64,
    dt: f64,
    tol: f64,
) -> Result<RadialProfile> {
    if !(radius > 0.0) {
        return Err(Error::InvalidDomain(format!("disk radius must be positive, got {radius}")));
    }
    if !(beta >= 0.0) {
        return Err(Error::NegativeRobinCoefficient { min: beta });
    }
    if !(t > 0.0 && dr > 0.0 && dt > 0.0) {
        return Err(Error::InvalidArgument(format!("need t, Δr, Δt > 0, got {t}, {dr}, {dt}")));
    }
    let panels = (radius / dr).round().max(4.0) as usize;
    let steps = (t / dt).ceil().max(1.0) as usize;
    let coarse = crank_nicolson_raw(radius, beta, &u0, t, panels, steps);
    let fine = crank_nicolson_raw(radius, beta, &u0, t, 2 * panels, 2 * steps);
    let mut estimate: f64 = 0.0;
    let values: Vec<f64> = coarse
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let f = fine[2 * i];
            let e = (4.0 * f - c) / 3.0;
            estimate = estimate.max((f - e).abs());
            e
        })
        .collect();
    if estimate > tol {
        return Err(Error::StepRejected { estimate, tol });
    }
    Ok(RadialProfile { dr: radius / panels as f64, values, estimate })
}
