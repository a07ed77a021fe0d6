//! Uniform cubical grids and staggered cochains.
//!
//! Every form component is stored as a full `N1*N2*N3` array indexed by the
//! base vertex of its cell (x fastest). In box mode the entries whose cell
//! would leave the domain are padding and are kept at zero; the adjoint
//! operators rely on that zero extension.

use crate::error::{Error, Result};
use crate::geom::Vec3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Box,
    Periodic,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Vertex counts per axis.
    pub dims: [usize; 3],
    pub spacing: f64,
    pub origin: [f64; 3],
    pub boundary: Boundary,
}

/// The two axes spanning a face with normal `a`, in cyclic order.
#[inline]
pub fn cyclic(a: usize) -> (usize, usize) {
    ((a + 1) % 3, (a + 2) % 3)
}

impl GridSpec {
    pub fn new(dims: [usize; 3], spacing: f64, origin: [f64; 3], boundary: Boundary) -> Result<Self> {
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidInput(format!("spacing must be positive, got {spacing}")));
        }
        let min = match boundary {
            Boundary::Box => 2,
            Boundary::Periodic => 1,
        };
        if dims.iter().any(|&n| n < min) {
            return Err(Error::InvalidInput(format!(
                "dims {dims:?} too small for {boundary:?} grid (need >= {min})"
            )));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidInput("non-finite origin".into()));
        }
        Ok(Self { dims, spacing, origin, boundary })
    }

    pub fn cube(n: usize, length: f64, boundary: Boundary) -> Result<Self> {
        let cells = match boundary {
            Boundary::Box => n.saturating_sub(1).max(1),
            Boundary::Periodic => n,
        };
        Self::new([n; 3], length / cells as f64, [0.0; 3], boundary)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn periodic(&self) -> bool {
        self.boundary == Boundary::Periodic
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn index_of(&self, c: [usize; 3]) -> usize {
        self.index(c[0], c[1], c[2])
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.dims[0];
        let r = idx / self.dims[0];
        [i, r % self.dims[1], r / self.dims[1]]
    }

    /// Index of the vertex at signed integer coordinates, wrapping in periodic mode.
    pub fn index_wrapped(&self, c: [i64; 3]) -> Option<usize> {
        let mut u = [0usize; 3];
        for a in 0..3 {
            let n = self.dims[a] as i64;
            if self.periodic() {
                u[a] = c[a].rem_euclid(n) as usize;
            } else if c[a] < 0 || c[a] >= n {
                return None;
            } else {
                u[a] = c[a] as usize;
            }
        }
        Some(self.index_of(u))
    }

    /// Neighbour of `idx` one step along `axis` in direction `dir` (+1 or -1).
    #[inline]
    pub fn step(&self, idx: usize, axis: usize, dir: i64) -> Option<usize> {
        let mut c = self.coords(idx);
        let n = self.dims[axis];
        if dir > 0 {
            if c[axis] + 1 < n {
                c[axis] += 1;
            } else if self.periodic() {
                c[axis] = 0;
            } else {
                return None;
            }
        } else if c[axis] > 0 {
            c[axis] -= 1;
        } else if self.periodic() {
            c[axis] = n - 1;
        } else {
            return None;
        }
        Some(self.index_of(c))
    }

    /// Number of edges/cells along `axis` (one fewer than vertices in box mode).
    #[inline]
    pub fn cells_along(&self, axis: usize) -> usize {
        match self.boundary {
            Boundary::Box => self.dims[axis] - 1,
            Boundary::Periodic => self.dims[axis],
        }
    }

    /// Physical side lengths of the domain.
    pub fn extent(&self) -> [f64; 3] {
        [0, 1, 2].map(|a| self.cells_along(a) as f64 * self.spacing)
    }

    pub fn volume(&self) -> f64 {
        let e = self.extent();
        e[0] * e[1] * e[2]
    }

    #[inline]
    fn below_last(&self, c: &[usize; 3], a: usize) -> bool {
        self.periodic() || c[a] + 1 < self.dims[a]
    }

    #[inline]
    pub fn edge_valid(&self, axis: usize, idx: usize) -> bool {
        self.below_last(&self.coords(idx), axis)
    }

    #[inline]
    pub fn face_valid(&self, normal: usize, idx: usize) -> bool {
        let (b, c) = cyclic(normal);
        let x = self.coords(idx);
        self.below_last(&x, b) && self.below_last(&x, c)
    }

    #[inline]
    pub fn cell_valid(&self, idx: usize) -> bool {
        let x = self.coords(idx);
        (0..3).all(|a| self.below_last(&x, a))
    }

    pub fn vertex_position(&self, idx: usize) -> Vec3 {
        let c = self.coords(idx);
        Vec3::new(
            self.origin[0] + c[0] as f64 * self.spacing,
            self.origin[1] + c[1] as f64 * self.spacing,
            self.origin[2] + c[2] as f64 * self.spacing,
        )
    }

    pub fn cell_center(&self, idx: usize) -> Vec3 {
        self.vertex_position(idx) + Vec3::repeat(0.5 * self.spacing)
    }

    pub fn edge_midpoint(&self, axis: usize, idx: usize) -> Vec3 {
        let mut p = self.vertex_position(idx);
        p[axis] += 0.5 * self.spacing;
        p
    }

    pub fn face_center(&self, normal: usize, idx: usize) -> Vec3 {
        let (b, c) = cyclic(normal);
        let mut p = self.vertex_position(idx);
        p[b] += 0.5 * self.spacing;
        p[c] += 0.5 * self.spacing;
        p
    }

    pub fn same_shape(&self, other: &GridSpec) -> bool {
        self.dims == other.dims && self.boundary == other.boundary && self.spacing == other.spacing
    }

    pub fn cells(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&i| self.cell_valid(i))
    }
}

pub fn check_same(a: &GridSpec, b: &GridSpec) -> Result<()> {
    if a.same_shape(b) {
        Ok(())
    } else {
        Err(Error::InvalidInput("grid mismatch between operands".into()))
    }
}

/// Complex order parameter sampled at vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField {
    pub grid: GridSpec,
    pub data: Vec<Complex64>,
}

impl ComplexField {
    pub fn from_fn(grid: GridSpec, f: impl Fn(Vec3) -> Complex64 + Sync) -> Self {
        use rayon::prelude::*;
        let data = (0..grid.len()).into_par_iter().map(|i| f(grid.vertex_position(i))).collect();
        Self { grid, data }
    }
}

macro_rules! scalar_form {
    ($name:ident, $valid:ident) => {
        #[derive(Clone, Debug, PartialEq)]
        pub struct $name {
            pub grid: GridSpec,
            pub data: Vec<f64>,
        }

        impl $name {
            pub fn zeros(grid: GridSpec) -> Self {
                Self { grid, data: vec![0.0; grid.len()] }
            }

            pub fn from_fn(grid: GridSpec, mut f: impl FnMut(usize) -> f64) -> Self {
                let data = (0..grid.len()).map(|i| if $valid(&grid, i) { f(i) } else { 0.0 }).collect();
                Self { grid, data }
            }

            pub fn scale(&mut self, s: f64) {
                self.data.iter_mut().for_each(|x| *x *= s);
            }

            pub fn axpy(&mut self, s: f64, other: &Self) {
                for (x, y) in self.data.iter_mut().zip(&other.data) {
                    *x += s * y;
                }
            }

            pub fn max_abs(&self) -> f64 {
                self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
            }

            /// Sum of squares weighted by the cell volume.
            pub fn dot(&self, other: &Self) -> f64 {
                let v = self.grid.spacing.powi(3);
                self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum::<f64>() * v
            }
        }
    };
}

macro_rules! vector_form {
    ($name:ident, $valid:ident) => {
        #[derive(Clone, Debug, PartialEq)]
        pub struct $name {
            pub grid: GridSpec,
            pub comps: [Vec<f64>; 3],
        }

        impl $name {
            pub fn zeros(grid: GridSpec) -> Self {
                let n = grid.len();
                Self { grid, comps: [vec![0.0; n], vec![0.0; n], vec![0.0; n]] }
            }

            /// Fill valid entries from `f(axis, base_vertex)`.
            pub fn from_fn(grid: GridSpec, mut f: impl FnMut(usize, usize) -> f64) -> Self {
                let mut out = Self::zeros(grid);
                for a in 0..3 {
                    for i in 0..grid.len() {
                        if grid.$valid(a, i) {
                            out.comps[a][i] = f(a, i);
                        }
                    }
                }
                out
            }

            pub fn scale(&mut self, s: f64) {
                self.comps.iter_mut().flatten().for_each(|x| *x *= s);
            }

            pub fn axpy(&mut self, s: f64, other: &Self) {
                for a in 0..3 {
                    for (x, y) in self.comps[a].iter_mut().zip(&other.comps[a]) {
                        *x += s * y;
                    }
                }
            }

            pub fn max_abs(&self) -> f64 {
                self.comps.iter().flatten().fold(0.0, |m, x| m.max(x.abs()))
            }

            pub fn dot(&self, other: &Self) -> f64 {
                let v = self.grid.spacing.powi(3);
                let mut s = 0.0;
                for a in 0..3 {
                    for (x, y) in self.comps[a].iter().zip(&other.comps[a]) {
                        s += x * y;
                    }
                }
                s * v
            }

            pub fn is_valid(&self, axis: usize, idx: usize) -> bool {
                self.grid.$valid(axis, idx)
            }
        }
    };
}

#[inline]
fn vertex_ok(_g: &GridSpec, _i: usize) -> bool {
    true
}

#[inline]
fn cell_ok(g: &GridSpec, i: usize) -> bool {
    g.cell_valid(i)
}

scalar_form!(Form0, vertex_ok);
scalar_form!(Form3, cell_ok);
vector_form!(Form1, edge_valid);
vector_form!(Form2, face_valid);

impl Form1 {
    /// Trilinear sample of the component fields at an arbitrary point.
    pub fn sample(&self, x: Vec3) -> Vec3 {
        let mut out = Vec3::zeros();
        for a in 0..3 {
            let mut shift = [0.0; 3];
            shift[a] = 0.5;
            out[a] = trilinear(&self.grid, &self.comps[a], x, shift);
        }
        out
    }
}

impl Form2 {
    /// Trilinear sample, components indexed by face normal.
    pub fn sample(&self, x: Vec3) -> Vec3 {
        let mut out = Vec3::zeros();
        for a in 0..3 {
            let (b, c) = cyclic(a);
            let mut shift = [0.0; 3];
            shift[b] = 0.5;
            shift[c] = 0.5;
            out[a] = trilinear(&self.grid, &self.comps[a], x, shift);
        }
        out
    }

    /// Total variation: face values weighted by the dual-cell volume.
    pub fn mass(&self) -> f64 {
        let v = self.grid.spacing.powi(3);
        let mut s = 0.0;
        for a in 0..3 {
            for i in 0..self.grid.len() {
                if self.grid.face_valid(a, i) {
                    s += self.comps[a][i].abs();
                }
            }
        }
        s * v
    }
}

/// Trilinear interpolation of samples located at `origin + (idx + shift) * h`.
fn trilinear(g: &GridSpec, data: &[f64], x: Vec3, shift: [f64; 3]) -> f64 {
    let mut base = [0i64; 3];
    let mut t = [0.0; 3];
    for a in 0..3 {
        let s = (x[a] - g.origin[a]) / g.spacing - shift[a];
        let f = s.floor();
        base[a] = f as i64;
        t[a] = s - f;
    }
    let mut acc = 0.0;
    for corner in 0..8 {
        let mut w = 1.0;
        let mut c = base;
        for a in 0..3 {
            if corner >> a & 1 == 1 {
                c[a] += 1;
                w *= t[a];
            } else {
                w *= 1.0 - t[a];
            }
        }
        if w == 0.0 {
            continue;
        }
        if let Some(i) = g.index_wrapped(c) {
            acc += w * data[i];
        }
    }
    acc
}
