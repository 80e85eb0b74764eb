//! Uniform grids and sampled scalar fields.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{DomainGeometry, Point};

/// Uniform node lattice. Node `(i, j)` sits at `anchor + ((i, j) − offset)·h`,
/// so the anchor (the lower corner of the domain's bounding box) is always an
/// exact node.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    anchor: Point,
    offset: [usize; 2],
    h: f64,
    nx: usize,
    ny: usize,
    dim: usize,
}

/// Half-open index box `[i0, i1) × [j0, j1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeBox {
    pub i0: usize,
    pub i1: usize,
    pub j0: usize,
    pub j1: usize,
}

impl NodeBox {
    pub fn is_empty(&self) -> bool {
        self.i0 >= self.i1 || self.j0 >= self.j1
    }

    fn include(&mut self, i: usize, j: usize) {
        if self.is_empty() {
            *self = NodeBox { i0: i, i1: i + 1, j0: j, j1: j + 1 };
        } else {
            self.i0 = self.i0.min(i);
            self.i1 = self.i1.max(i + 1);
            self.j0 = self.j0.min(j);
            self.j1 = self.j1.max(j + 1);
        }
    }

    const EMPTY: NodeBox = NodeBox { i0: 0, i1: 0, j0: 0, j1: 0 };
}

impl Grid {
    /// Grid with spacing `h` over the domain's bounding box widened by `pad` on every side.
    pub fn covering(dom: &DomainGeometry, h: f64, pad: f64) -> Result<Self> {
        if !(h > 0.0) || !(pad >= 0.0) {
            return Err(Error::InvalidArgument(format!("grid needs h > 0 and pad >= 0, got h={h}, pad={pad}")));
        }
        let (lo, hi) = dom.bounding_box();
        let k = (pad / h).ceil() as usize;
        let dim = dom.dim();
        let extent = |axis: usize| ((hi[axis] - lo[axis]) / h).ceil() as usize + 1 + 2 * k;
        let nx = extent(0);
        let (ny, offset) = if dim == 1 { (1, [k, 0]) } else { (extent(1), [k, k]) };
        let nodes = nx as f64 * ny as f64;
        if nodes > 5e8 {
            return Err(Error::InvalidArgument(format!("grid of {nodes:e} nodes is too large")));
        }
        Ok(Self { anchor: lo, offset, h, nx, ny, dim })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn full_box(&self) -> NodeBox {
        NodeBox { i0: 0, i1: self.nx, j0: 0, j1: self.ny }
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    #[inline]
    pub fn axis_coord(&self, axis: usize, i: usize) -> f64 {
        self.anchor[axis] + (i as f64 - self.offset[axis] as f64) * self.h
    }

    #[inline]
    pub fn node(&self, idx: usize) -> Point {
        let (i, j) = self.coords(idx);
        if self.dim == 1 {
            [self.axis_coord(0, i), 0.0]
        } else {
            [self.axis_coord(0, i), self.axis_coord(1, j)]
        }
    }

    /// Continuous index coordinate of `x` along `axis`.
    #[inline]
    pub fn fractional_index(&self, axis: usize, x: f64) -> f64 {
        (x - self.anchor[axis]) / self.h + self.offset[axis] as f64
    }

    /// Volume element `h^N`.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }
}

/// Real values on every node of a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        let n = grid.len();
        Self { grid, values: vec![0.0; n] }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::MismatchedGrid);
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at every node.
    pub fn from_fn<F: Fn(Point) -> f64 + Sync>(grid: Grid, f: F) -> Self {
        let values = (0..grid.len()).into_par_iter().map(|k| f(grid.node(k))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Bounding box of the nonzero nodes.
    pub fn support(&self) -> NodeBox {
        let mut b = NodeBox::EMPTY;
        for (k, v) in self.values.iter().enumerate() {
            if *v != 0.0 {
                let (i, j) = self.grid.coords(k);
                b.include(i, j);
            }
        }
        b
    }
}

/// Per-grid geometry: signed distances and the closure mask.
#[derive(Debug, Clone)]
pub struct Discretization {
    grid: Grid,
    distance: Vec<f64>,
    closure: Vec<bool>,
    closure_box: NodeBox,
}

impl Discretization {
    pub fn new(dom: &DomainGeometry, grid: Grid) -> Self {
        let eps = dom.eps_geo();
        let distance: Vec<f64> = (0..grid.len())
            .into_par_iter()
            .map(|k| dom.signed_distance(grid.node(k)))
            .collect();
        let closure: Vec<bool> = distance.iter().map(|d| *d <= eps).collect();
        let mut closure_box = NodeBox::EMPTY;
        for (k, inside) in closure.iter().enumerate() {
            if *inside {
                let (i, j) = grid.coords(k);
                closure_box.include(i, j);
            }
        }
        Self { grid, distance, closure, closure_box }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn distance(&self) -> &[f64] {
        &self.distance
    }

    /// Whether each node belongs to the closed domain.
    pub fn closure(&self) -> &[bool] {
        &self.closure
    }

    pub fn closure_box(&self) -> NodeBox {
        self.closure_box
    }

    pub fn closure_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.closure.iter().enumerate().filter(|(_, c)| **c).map(|(k, _)| k)
    }

    /// Restriction to the closed domain: zero every node outside it.
    pub fn restrict(&self, field: &mut ScalarField) {
        for (v, inside) in field.values_mut().iter_mut().zip(&self.closure) {
            if !inside {
                *v = 0.0;
            }
        }
    }

    /// Sup norm over closure nodes.
    pub fn sup_norm(&self, field: &ScalarField) -> f64 {
        self.closure_nodes().map(|k| field.values()[k].abs()).fold(0.0, f64::max)
    }

    /// Discrete `L²` norm over closure nodes with weight `h^N`.
    pub fn l2_norm(&self, field: &ScalarField) -> f64 {
        let s: f64 = self.closure_nodes().map(|k| field.values()[k].powi(2)).sum();
        (s * self.grid.cell_volume()).sqrt()
    }

    /// Writes closure-node values as CSV rows `x[,y],value` with 17 significant digits.
    pub fn write_csv<W: Write>(&self, field: &ScalarField, mut out: W) -> std::io::Result<()> {
        let dim = self.grid.dim();
        if dim == 1 {
            writeln!(out, "x,value")?;
        } else {
            writeln!(out, "x,y,value")?;
        }
        for k in self.closure_nodes() {
            let p = self.grid.node(k);
            let v = field.values()[k];
            if dim == 1 {
                writeln!(out, "{:.16e},{:.16e}", p[0], v)?;
            } else {
                writeln!(out, "{:.16e},{:.16e},{:.16e}", p[0], p[1], v)?;
            }
        }
        Ok(())
    }
}
