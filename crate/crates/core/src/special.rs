//! Bessel functions of the first kind, orders 0 and 1, by power series.
//!
//! Accurate to about 1e-13 absolute for |x| <= 10, which covers the radial
//! eigenmodes used here.

/// `J0(x)`.
pub fn bessel_j0(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for m in 1..80 {
        let mf = m as f64;
        term *= -q / (mf * mf);
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

/// `J1(x)`.
pub fn bessel_j1(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 0.5 * x;
    let mut sum = term;
    for m in 1..80 {
        let mf = m as f64;
        term *= -q / (mf * (mf + 1.0));
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}
