//! Independent high-accuracy solutions used to validate the Chernoff schemes.
//!
//! Intervals use eigenfunction expansions; disks with radial data use a
//! Richardson-extrapolated Crank–Nicolson solver in the radial variable.

mod eigen;
mod radial;

pub use eigen::{robin_eigenvalues_interval, robin_frequencies, series_solve, EigenExpansion, EigenMode, IntervalBc};
pub use radial::{crank_nicolson_raw, disk_robin_frequency, radial_crank_nicolson, RadialProfile};

use crate::error::{Error, Result};
use crate::field::{Discretization, ScalarField};

/// Sup-norm and `h^N`-weighted discrete `L²` difference over closure nodes.
pub fn compare_fields(a: &ScalarField, b: &ScalarField, disc: &Discretization) -> Result<(f64, f64)> {
    if a.grid() != disc.grid() || b.grid() != disc.grid() {
        return Err(Error::MismatchedGrid);
    }
    let mut sup: f64 = 0.0;
    let mut sq = 0.0;
    for k in disc.closure_nodes() {
        let e = a.values()[k] - b.values()[k];
        sup = sup.max(e.abs());
        sq += e * e;
    }
    Ok((sup, (sq * disc.grid().cell_volume()).sqrt()))
}
