//! Sturm–Liouville eigenexpansions of the heat equation on an interval.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numeric::{bisect, simpson};

/// Boundary condition on both ends of an interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntervalBc {
    /// `∂_ν u + β u = 0` with `β ≥ 0` at each end; zero gives Neumann.
    Robin { left: f64, right: f64 },
    /// `u = 0` at both ends.
    Dirichlet,
}

/// Roots `ω` of `(ω² − β₀β₁) sin ω = (β₀ + β₁) ω cos ω`, one per bracket
/// `((k−1)π, kπ)`, for `k = 1..=count`.
///
/// Coefficients refer to the unit interval. For `β₀ = β₁ = 0` the roots are
/// `kπ` with `k = 0..count`, the first one being the constant mode.
pub fn robin_frequencies(beta0: f64, beta1: f64, count: usize) -> Result<Vec<f64>> {
    if !(beta0 >= 0.0 && beta1 >= 0.0) {
        return Err(Error::NegativeRobinCoefficient { min: beta0.min(beta1) });
    }
    if beta0 == 0.0 && beta1 == 0.0 {
        return Ok((0..count).map(|k| k as f64 * PI).collect());
    }
    let f = |w: f64| (w * w - beta0 * beta1) * w.sin() - (beta0 + beta1) * w * w.cos();
    (1..=count)
        .map(|k| {
            // Just above zero the condition is negative for any β > 0.
            let lo = if k == 1 { 1e-150 } else { (k - 1) as f64 * PI };
            let hi = k as f64 * PI;
            bisect(f, lo, hi, 1e-14 * hi.max(1.0)).ok_or(Error::RootBracketFailure { lo, hi })
        })
        .collect()
}

/// First `count` Robin eigenvalues `λ_k = ω_k²` on the unit interval.
pub fn robin_eigenvalues_interval(beta0: f64, beta1: f64, count: usize) -> Result<Vec<f64>> {
    Ok(robin_frequencies(beta0, beta1, count)?.into_iter().map(|w| w * w).collect())
}

/// One term of an expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenMode {
    /// Eigenvalue on the physical interval.
    pub lambda: f64,
    /// Frequency on the unit interval.
    pub omega: f64,
    /// `∫ φ²` over the physical interval.
    pub norm_sq: f64,
    /// Projection coefficient of the initial datum.
    pub coeff: f64,
}

/// Truncated eigenfunction expansion of `T(t) u0` on `(a, b)`.
///
/// Eigenfunctions in the scaled variable `s = (x − a)/(b − a)` are
/// `cos ωs + (β̂₀/ω) sin ωs` for Robin data (with `β̂ = (b − a)·β`) and
/// `sin ωs` for Dirichlet data.
#[derive(Debug, Clone)]
pub struct EigenExpansion {
    a: f64,
    b: f64,
    bc: IntervalBc,
    modes: Vec<EigenMode>,
}

impl EigenExpansion {
    /// Builds `count` modes and projects `u0` with composite Simpson on `quad_intervals` panels.
    pub fn new<F: Fn(f64) -> f64>(
        a: f64,
        b: f64,
        bc: IntervalBc,
        count: usize,
        u0: F,
        quad_intervals: usize,
    ) -> Result<Self> {
        if !(b > a) {
            return Err(Error::InvalidDomain(format!("interval needs a < b, got ({a}, {b})")));
        }
        if count == 0 {
            return Err(Error::InvalidArgument("expansion needs at least one mode".into()));
        }
        let len = b - a;
        let omegas = match bc {
            IntervalBc::Robin { left, right } => robin_frequencies(len * left, len * right, count)?,
            IntervalBc::Dirichlet => (1..=count).map(|k| k as f64 * PI).collect(),
        };
        let mut exp = Self { a, b, bc, modes: Vec::with_capacity(count) };
        for (k, &omega) in omegas.iter().enumerate() {
            let norm_sq = len * exp.unit_norm_sq(omega);
            let panels = quad_intervals.max(64 * (k + 1));
            let proj = simpson(|x| u0(x) * exp.basis(omega, x), a, b, panels);
            exp.modes.push(EigenMode { lambda: (omega / len).powi(2), omega, norm_sq, coeff: proj / norm_sq });
        }
        Ok(exp)
    }

    pub fn modes(&self) -> &[EigenMode] {
        &self.modes
    }

    pub fn bc(&self) -> IntervalBc {
        self.bc
    }

    fn scaled_beta0(&self) -> f64 {
        match self.bc {
            IntervalBc::Robin { left, .. } => (self.b - self.a) * left,
            IntervalBc::Dirichlet => 0.0,
        }
    }

    /// `∫₀¹ φ(s)² ds` in closed form.
    fn unit_norm_sq(&self, omega: f64) -> f64 {
        match self.bc {
            IntervalBc::Dirichlet => 0.5,
            IntervalBc::Robin { .. } if omega == 0.0 => 1.0,
            IntervalBc::Robin { .. } => {
                let q = self.scaled_beta0() / omega;
                let s2 = (2.0 * omega).sin() / (4.0 * omega);
                (0.5 + s2) + q * q * (0.5 - s2) + q * omega.sin().powi(2) / omega
            }
        }
    }

    /// Unnormalized eigenfunction and its `x`-derivative.
    fn basis_with_derivative(&self, omega: f64, x: f64) -> (f64, f64) {
        let len = self.b - self.a;
        let s = (x - self.a) / len;
        let (sn, cs) = (omega * s).sin_cos();
        match self.bc {
            IntervalBc::Dirichlet => (sn, omega * cs / len),
            IntervalBc::Robin { .. } if omega == 0.0 => (1.0, 0.0),
            IntervalBc::Robin { .. } => {
                let q = self.scaled_beta0() / omega;
                (cs + q * sn, (-omega * sn + q * omega * cs) / len)
            }
        }
    }

    fn basis(&self, omega: f64, x: f64) -> f64 {
        self.basis_with_derivative(omega, x).0
    }

    /// Unnormalized eigenfunction `k` at `x`.
    pub fn eigenfunction(&self, k: usize, x: f64) -> f64 {
        self.basis(self.modes[k].omega, x)
    }

    /// Largest boundary-condition residual of mode `k` over both ends, relative to `√∫φ²`.
    pub fn bc_residual(&self, k: usize) -> f64 {
        let m = &self.modes[k];
        let (f0, d0) = self.basis_with_derivative(m.omega, self.a);
        let (f1, d1) = self.basis_with_derivative(m.omega, self.b);
        let (r0, r1) = match self.bc {
            IntervalBc::Dirichlet => (f0, f1),
            IntervalBc::Robin { left, right } => (-d0 + left * f0, d1 + right * f1),
        };
        r0.abs().max(r1.abs()) / m.norm_sq.sqrt()
    }

    /// Series value at `(x, t)`.
    pub fn evaluate(&self, t: f64, x: f64) -> f64 {
        let mut v = 0.0;
        for m in &self.modes {
            let decay = (-m.lambda * t).exp();
            if decay == 0.0 {
                break;
            }
            v += m.coeff * decay * self.basis(m.omega, x);
        }
        v
    }

    /// Heuristic truncation bound: the sup-norm contribution of the last four
    /// retained modes. Coefficients of smooth data decay algebraically, so the
    /// omitted tail is of the same size or smaller.
    pub fn tail_bound(&self, t: f64) -> f64 {
        let n = self.modes.len();
        self.modes[n.saturating_sub(4)..]
            .iter()
            .map(|m| {
                let sup = match self.bc {
                    IntervalBc::Dirichlet => 1.0,
                    IntervalBc::Robin { .. } if m.omega == 0.0 => 1.0,
                    IntervalBc::Robin { .. } => (1.0 + (self.scaled_beta0() / m.omega).powi(2)).sqrt(),
                };
                m.coeff.abs() * sup * (-m.lambda * t).exp()
            })
            .sum()
    }
}

/// Evaluates the expansion at `t` on every point of `xs`.
///
/// Fails with `TruncationInsufficient` when the tail bound exceeds `tol`.
pub fn series_solve(exp: &EigenExpansion, t: f64, xs: &[f64], tol: f64) -> Result<Vec<f64>> {
    if !(t >= 0.0) {
        return Err(Error::NegativeArgument(format!("time must be nonnegative, got {t}")));
    }
    let tail = exp.tail_bound(t);
    if tail > tol {
        return Err(Error::TruncationInsufficient { tail, tol });
    }
    Ok(xs.iter().map(|&x| exp.evaluate(t, x)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::solve_tridiagonal;

    fn robin(left: f64, right: f64) -> IntervalBc {
        IntervalBc::Robin { left, right }
    }

    /// Smallest eigenvalue of the second-order finite-difference Robin operator
    /// on `m` panels of (0, 1), by inverse iteration.
    fn fd_first_eigenvalue(beta: f64, m: usize) -> f64 {
        let h = 1.0 / m as f64;
        let n = m + 1;
        // Ghost nodes turn the end rows into 2(u0 − u1)/h² + 2βu0/h.
        let mut sub = vec![-1.0 / (h * h); n];
        let mut diag = vec![2.0 / (h * h); n];
        let mut sup = vec![-1.0 / (h * h); n];
        sup[0] = -2.0 / (h * h);
        diag[0] += 2.0 * beta / h;
        sub[n - 1] = -2.0 / (h * h);
        diag[n - 1] += 2.0 * beta / h;
        let mut v = vec![1.0; n];
        let mut lambda = 0.0;
        for _ in 0..60 {
            let mut w = v.clone();
            solve_tridiagonal(&sub, &diag, &sup, &mut w);
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            let dot: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
            let vv: f64 = v.iter().map(|x| x * x).sum();
            lambda = vv / dot;
            v = w.iter().map(|x| x / norm).collect();
        }
        lambda
    }

    #[test]
    fn neumann_and_dirichlet_spectra() {
        let n = robin_eigenvalues_interval(0.0, 0.0, 5).unwrap();
        for (k, l) in n.iter().enumerate() {
            assert!((l - (k as f64 * PI).powi(2)).abs() < 1e-12);
        }
        let d = EigenExpansion::new(0.0, 1.0, IntervalBc::Dirichlet, 4, |_| 0.0, 200).unwrap();
        for (k, m) in d.modes().iter().enumerate() {
            assert!((m.lambda - ((k + 1) as f64 * PI).powi(2)).abs() < 1e-12);
            assert!((d.eigenfunction(k, 0.3) - ((k + 1) as f64 * PI * 0.3).sin()).abs() < 1e-15);
        }
    }

    #[test]
    fn first_robin_root_matches_finite_differences() {
        let w = robin_frequencies(1.0, 1.0, 1).unwrap()[0];
        assert!(w > 0.0 && w < PI);
        let residual = 2.0 * w * w.cos() - (w * w - 1.0) * w.sin();
        assert!(residual.abs() < 1e-13);
        let fd = fd_first_eigenvalue(1.0, 10_000);
        assert!(((w * w - fd) / fd).abs() < 5e-5, "{} vs {fd}", w * w);
    }

    #[test]
    fn roots_increase_and_stay_in_brackets() {
        for (b0, b1) in [(1.0, 1.0), (0.0, 2.0), (5.0, 0.1), (1e-6, 0.0), (100.0, 100.0)] {
            let w = robin_frequencies(b0, b1, 30).unwrap();
            for (k, x) in w.iter().enumerate() {
                assert!(*x > k as f64 * PI && *x < (k + 1) as f64 * PI, "({b0},{b1}) k={k}: {x}");
            }
        }
        assert!(robin_frequencies(-1.0, 0.0, 3).is_err());
    }

    #[test]
    fn boundary_residuals_and_orthogonality() {
        for bc in [robin(1.0, 1.0), robin(0.0, 0.0), robin(0.3, 4.0), IntervalBc::Dirichlet] {
            let exp = EigenExpansion::new(-0.5, 1.5, bc, 12, |_| 0.0, 400).unwrap();
            for k in 0..12 {
                assert!(exp.bc_residual(k) <= 1e-10, "{bc:?} k={k}: {}", exp.bc_residual(k));
            }
            for i in 0..12 {
                for j in 0..=i {
                    let ip = simpson(|x| exp.eigenfunction(i, x) * exp.eigenfunction(j, x), -0.5, 1.5, 20_000);
                    let ni = exp.modes()[i].norm_sq;
                    let nj = exp.modes()[j].norm_sq;
                    let g = ip / (ni * nj).sqrt();
                    let target = if i == j { 1.0 } else { 0.0 };
                    assert!((g - target).abs() <= 1e-10, "{bc:?} ({i},{j}): {g}");
                }
            }
        }
    }

    #[test]
    fn reproduces_initial_datum() {
        let u0 = |x: f64| 1.0 + x - x * x;
        let exp = EigenExpansion::new(0.0, 1.0, robin(1.0, 1.0), 400, u0, 20_000).unwrap();
        for i in 0..=20 {
            let x = i as f64 / 20.0;
            assert!((exp.evaluate(0.0, x) - u0(x)).abs() < 1e-6, "x={x}");
        }
    }

    #[test]
    fn dirichlet_sine_is_a_single_mode() {
        let exp = EigenExpansion::new(0.0, 1.0, IntervalBc::Dirichlet, 6, |x| (PI * x).sin(), 2000).unwrap();
        assert!((exp.modes()[0].coeff - 1.0).abs() < 1e-12);
        for m in &exp.modes()[1..] {
            assert!(m.coeff.abs() < 1e-12);
        }
        let v = series_solve(&exp, 0.05, &[0.5], 1e-10).unwrap()[0];
        assert!((v - (-PI * PI * 0.05).exp()).abs() < 1e-12);
    }

    #[test]
    fn neumann_constant_is_stationary() {
        let exp = EigenExpansion::new(0.0, 1.0, robin(0.0, 0.0), 8, |_| 1.0, 400).unwrap();
        for t in [0.0, 0.1, 10.0] {
            for x in [0.0, 0.37, 1.0] {
                assert!((exp.evaluate(t, x) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn truncations_agree_within_tail_bound() {
        let u0 = |x: f64| 1.0 + x - x * x;
        let t = 1e-3;
        let k = 40;
        let small = EigenExpansion::new(0.0, 1.0, robin(1.0, 1.0), k, u0, 4000).unwrap();
        let large = EigenExpansion::new(0.0, 1.0, robin(1.0, 1.0), 2 * k, u0, 8000).unwrap();
        let tail = small.tail_bound(t);
        for i in 0..=40 {
            let x = i as f64 / 40.0;
            assert!((small.evaluate(t, x) - large.evaluate(t, x)).abs() <= tail + 1e-12);
        }
    }

    #[test]
    fn insufficient_truncation_is_reported() {
        let exp = EigenExpansion::new(0.0, 1.0, robin(1.0, 1.0), 3, |x| x, 400).unwrap();
        assert!(matches!(series_solve(&exp, 0.0, &[0.5], 1e-8), Err(Error::TruncationInsufficient { .. })));
        assert!(series_solve(&exp, -1.0, &[0.5], 1.0).is_err());
    }
}
