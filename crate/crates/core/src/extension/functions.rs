//! Closed-form smooth functions with exact gradients and Laplacians.

use serde::{Deserialize, Serialize};

use crate::geometry::Point;
use crate::special::{bessel_j0, bessel_j1};

/// Anything that can be evaluated pointwise.
pub trait SpatialFunction: Sync {
    fn value(&self, x: Point) -> f64;
}

impl<F: Fn(Point) -> f64 + Sync> SpatialFunction for F {
    fn value(&self, x: Point) -> f64 {
        self(x)
    }
}

/// Smooth test data used as initial conditions and in consistency checks.
///
/// One-dimensional kinds read only `x[0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SmoothTestFunction {
    /// `Σ c_k x^k`.
    Poly {
        coeffs: Vec<f64>,
    },
    /// `offset + a·cos(kx) + b·sin(kx)`.
    Trig {
        #[serde(default)]
        offset: f64,
        #[serde(default)]
        cos: f64,
        #[serde(default)]
        sin: f64,
        k: f64,
    },
    /// `Σ c_ij x^i y^j`, `coeffs[i][j]`.
    Poly2d {
        coeffs: Vec<Vec<f64>>,
    },
    /// `Σ c_k r^{2k}` with `r = |x − center|`.
    RadialPoly {
        center: [f64; 2],
        coeffs: Vec<f64>,
    },
    /// `amplitude·J0(ω·|x − center|)`.
    BesselJ0 {
        center: [f64; 2],
        omega: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `f(x)·g(y)` with one-dimensional factors.
    Separable {
        x: Box<SmoothTestFunction>,
        y: Box<SmoothTestFunction>,
    },
}

fn one() -> f64 {
    1.0
}

/// `(p, p', p'')` of a polynomial in one variable.
fn poly_derivs(coeffs: &[f64], x: f64) -> (f64, f64, f64) {
    let (mut p, mut d1, mut d2) = (0.0, 0.0, 0.0);
    for &c in coeffs.iter().rev() {
        d2 = d2 * x + 2.0 * d1;
        d1 = d1 * x + p;
        p = p * x + c;
    }
    (p, d1, d2)
}

impl SmoothTestFunction {
    pub fn constant(value: f64) -> Self {
        SmoothTestFunction::Poly { coeffs: vec![value] }
    }

    /// Value and first two derivatives of a one-dimensional kind.
    fn derivs_1d(&self, x: f64) -> (f64, f64, f64) {
        match self {
            SmoothTestFunction::Poly { coeffs } => poly_derivs(coeffs, x),
            SmoothTestFunction::Trig { offset, cos, sin, k } => {
                let (s, c) = (k * x).sin_cos();
                (
                    offset + cos * c + sin * s,
                    k * (sin * c - cos * s),
                    -k * k * (cos * c + sin * s),
                )
            }
            _ => (f64::NAN, f64::NAN, f64::NAN),
        }
    }

    pub fn is_one_dimensional(&self) -> bool {
        matches!(self, SmoothTestFunction::Poly { .. } | SmoothTestFunction::Trig { .. })
    }

    pub fn gradient(&self, x: Point) -> Point {
        match self {
            SmoothTestFunction::Poly { .. } | SmoothTestFunction::Trig { .. } => [self.derivs_1d(x[0]).1, 0.0],
            SmoothTestFunction::Poly2d { coeffs } => {
                let mut g = [0.0, 0.0];
                for (i, row) in coeffs.iter().enumerate() {
                    for (j, &c) in row.iter().enumerate() {
                        if i > 0 {
                            g[0] += c * i as f64 * x[0].powi(i as i32 - 1) * x[1].powi(j as i32);
                        }
                        if j > 0 {
                            g[1] += c * j as f64 * x[0].powi(i as i32) * x[1].powi(j as i32 - 1);
                        }
                    }
                }
                g
            }
            SmoothTestFunction::RadialPoly { center, coeffs } => {
                let (dx, dy) = (x[0] - center[0], x[1] - center[1]);
                let (_, p1, _) = poly_derivs(coeffs, dx * dx + dy * dy);
                [2.0 * p1 * dx, 2.0 * p1 * dy]
            }
            SmoothTestFunction::BesselJ0 { center, omega, amplitude } => {
                let (dx, dy) = (x[0] - center[0], x[1] - center[1]);
                let r = dx.hypot(dy);
                if r == 0.0 {
                    return [0.0, 0.0];
                }
                let s = -amplitude * omega * bessel_j1(omega * r) / r;
                [s * dx, s * dy]
            }
            SmoothTestFunction::Separable { x: fx, y: fy } => {
                let (a, a1, _) = fx.derivs_1d(x[0]);
                let (b, b1, _) = fy.derivs_1d(x[1]);
                [a1 * b, a * b1]
            }
        }
    }

    pub fn laplacian(&self, x: Point) -> f64 {
        match self {
            SmoothTestFunction::Poly { .. } | SmoothTestFunction::Trig { .. } => self.derivs_1d(x[0]).2,
            SmoothTestFunction::Poly2d { coeffs } => {
                let mut l = 0.0;
                for (i, row) in coeffs.iter().enumerate() {
                    for (j, &c) in row.iter().enumerate() {
                        if i > 1 {
                            l += c * (i * (i - 1)) as f64 * x[0].powi(i as i32 - 2) * x[1].powi(j as i32);
                        }
                        if j > 1 {
                            l += c * (j * (j - 1)) as f64 * x[0].powi(i as i32) * x[1].powi(j as i32 - 2);
                        }
                    }
                }
                l
            }
            SmoothTestFunction::RadialPoly { center, coeffs } => {
                let s = (x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2);
                let (_, p1, p2) = poly_derivs(coeffs, s);
                4.0 * s * p2 + 4.0 * p1
            }
            SmoothTestFunction::BesselJ0 { omega, .. } => -omega * omega * self.value(x),
            SmoothTestFunction::Separable { x: fx, y: fy } => {
                let (a, _, a2) = fx.derivs_1d(x[0]);
                let (b, _, b2) = fy.derivs_1d(x[1]);
                a2 * b + a * b2
            }
        }
    }
}

impl SpatialFunction for SmoothTestFunction {
    fn value(&self, x: Point) -> f64 {
        match self {
            SmoothTestFunction::Poly { .. } | SmoothTestFunction::Trig { .. } => self.derivs_1d(x[0]).0,
            SmoothTestFunction::Poly2d { coeffs } => {
                let mut v = 0.0;
                for (i, row) in coeffs.iter().enumerate() {
                    for (j, &c) in row.iter().enumerate() {
                        v += c * x[0].powi(i as i32) * x[1].powi(j as i32);
                    }
                }
                v
            }
            SmoothTestFunction::RadialPoly { center, coeffs } => {
                let s = (x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2);
                poly_derivs(coeffs, s).0
            }
            SmoothTestFunction::BesselJ0 { center, omega, amplitude } => {
                let r = (x[0] - center[0]).hypot(x[1] - center[1]);
                amplitude * bessel_j0(omega * r)
            }
            SmoothTestFunction::Separable { x: fx, y: fy } => fx.derivs_1d(x[0]).0 * fy.derivs_1d(x[1]).0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_laplacian(f: &SmoothTestFunction, x: Point, h: f64, dim: usize) -> f64 {
        let c = f.value(x);
        let mut l = (f.value([x[0] + h, x[1]]) - 2.0 * c + f.value([x[0] - h, x[1]])) / (h * h);
        if dim == 2 {
            l += (f.value([x[0], x[1] + h]) - 2.0 * c + f.value([x[0], x[1] - h])) / (h * h);
        }
        l
    }

    fn cases() -> Vec<(SmoothTestFunction, usize)> {
        vec![
            (SmoothTestFunction::Poly { coeffs: vec![1.0, 1.0, -1.0] }, 1),
            (SmoothTestFunction::Trig { offset: 0.5, cos: 1.0, sin: -0.3, k: 2.0 }, 1),
            (SmoothTestFunction::Poly2d { coeffs: vec![vec![0.1, 0.2, 0.3], vec![-0.4, 0.5], vec![0.7]] }, 2),
            (SmoothTestFunction::RadialPoly { center: [0.1, 0.0], coeffs: vec![1.0, -1.0 / 3.0, 0.2] }, 2),
            (SmoothTestFunction::BesselJ0 { center: [0.0, 0.0], omega: 1.2558, amplitude: 1.0 }, 2),
            (
                SmoothTestFunction::Separable {
                    x: Box::new(SmoothTestFunction::Trig { offset: 0.0, cos: 0.0, sin: 1.0, k: 3.0 }),
                    y: Box::new(SmoothTestFunction::Poly { coeffs: vec![1.0, 0.0, -0.5] }),
                },
                2,
            ),
        ]
    }

    #[test]
    fn laplacian_agrees_with_finite_differences() {
        let x = [0.37, -0.21];
        for (f, dim) in cases() {
            let exact = f.laplacian(x);
            let e1 = (fd_laplacian(&f, x, 1e-2, dim) - exact).abs();
            let e2 = (fd_laplacian(&f, x, 5e-3, dim) - exact).abs();
            // Second order: the error drops by about four per halving.
            assert!(e2 < 1e-6 || e1 / e2 > 3.5, "{f:?}: {e1} {e2}");
        }
    }

    #[test]
    fn gradient_agrees_with_finite_differences() {
        let x = [0.41, 0.17];
        let h = 1e-6;
        for (f, dim) in cases() {
            let g = f.gradient(x);
            let gx = (f.value([x[0] + h, x[1]]) - f.value([x[0] - h, x[1]])) / (2.0 * h);
            assert!((g[0] - gx).abs() < 1e-8);
            if dim == 2 {
                let gy = (f.value([x[0], x[1] + h]) - f.value([x[0], x[1] - h])) / (2.0 * h);
                assert!((g[1] - gy).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn json_forms() {
        let f: SmoothTestFunction = serde_json::from_str(r#"{"type":"poly","coeffs":[1,1,-1]}"#).unwrap();
        assert_eq!(f.value([0.5, 0.0]), 1.25);
        let f: SmoothTestFunction = serde_json::from_str(r#"{"type":"trig","sin":1,"k":3.141592653589793}"#).unwrap();
        assert!((f.value([0.5, 0.0]) - 1.0).abs() < 1e-15);
        let f: SmoothTestFunction =
            serde_json::from_str(r#"{"type":"radial_poly","center":[0,0],"coeffs":[1,-0.3333333333333333]}"#).unwrap();
        assert!((f.value([1.0, 0.0]) - 2.0 / 3.0).abs() < 1e-15);
    }
}
