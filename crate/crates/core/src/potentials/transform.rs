//! Per-axis trigonometric bases that diagonalize the lattice Hodge Laplacian.
//!
//! On the torus every axis is a plain DFT. On the box the cubical complex is
//! a tensor product of path complexes, so each component splits into axes
//! where it sits on vertices (Neumann path Laplacian, DCT-II basis) and axes
//! where it sits on edges (Dirichlet edge Laplacian, DST-I basis).

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AxisKind {
    Periodic,
    /// Component lives on vertices along this axis.
    Vertex,
    /// Component lives on edges along this axis (one fewer sample).
    Edge,
}

/// Eigenvalue symbol of the inverse.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Symbol {
    /// Exact inverse of the lattice Laplacian `d d* + d* d`.
    #[default]
    Discrete,
    /// Continuum symbol `|2 pi k / L|^2` (periodic only).
    Spectral,
}

/// Eigenvalues of the 1-D Laplacian factor along an axis.
fn eigenvalues(kind: AxisKind, n: usize, h: f64, symbol: Symbol) -> Vec<f64> {
    let s = |x: f64| x.sin() * x.sin();
    match (kind, symbol) {
        (AxisKind::Periodic, Symbol::Discrete) => (0..n).map(|k| 4.0 / (h * h) * s(PI * k as f64 / n as f64)).collect(),
        (AxisKind::Periodic, Symbol::Spectral) => (0..n)
            .map(|k| {
                let m = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
                let w = 2.0 * PI * m / (n as f64 * h);
                w * w
            })
            .collect(),
        (AxisKind::Vertex, _) => (0..n).map(|k| 4.0 / (h * h) * s(PI * k as f64 / (2.0 * n as f64))).collect(),
        (AxisKind::Edge, _) => (1..n).map(|k| 4.0 / (h * h) * s(PI * k as f64 / (2.0 * n as f64))).collect(),
    }
}

/// Orthonormal real basis matrix, row `k` holds mode `k` sampled on the axis.
fn basis(kind: AxisKind, n: usize) -> Vec<f64> {
    match kind {
        AxisKind::Vertex => {
            let mut m = vec![0.0; n * n];
            for k in 0..n {
                let c = if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
                for j in 0..n {
                    m[k * n + j] = c * (PI * k as f64 * (j as f64 + 0.5) / n as f64).cos();
                }
            }
            m
        }
        AxisKind::Edge => {
            let len = n - 1;
            let c = (2.0 / n as f64).sqrt();
            let mut m = vec![0.0; len * len];
            for k in 0..len {
                for j in 0..len {
                    m[k * len + j] = c * (PI * (k + 1) as f64 * (j + 1) as f64 / n as f64).sin();
                }
            }
            m
        }
        AxisKind::Periodic => unreachable!("periodic axes use the FFT"),
    }
}

/// Lines along `axis` as (start index, stride) pairs.
fn lines(dims: [usize; 3], axis: usize) -> (Vec<usize>, usize) {
    let stride = match axis {
        0 => 1,
        1 => dims[0],
        _ => dims[0] * dims[1],
    };
    let mut starts = Vec::new();
    for k in 0..dims[2] {
        for j in 0..dims[1] {
            for i in 0..dims[0] {
                let c = [i, j, k];
                if c[axis] == 0 {
                    starts.push(i + dims[0] * (j + dims[1] * k));
                }
            }
        }
    }
    (starts, stride)
}

/// Raw pointer wrapper so disjoint strided lines can be written in parallel.
#[derive(Clone, Copy)]
struct Shared<T>(*mut T);
unsafe impl<T> Send for Shared<T> {}
unsafe impl<T> Sync for Shared<T> {}

fn for_each_line<T: Copy + Send + Sync + Default>(
    data: &mut [T],
    dims: [usize; 3],
    axis: usize,
    len: usize,
    f: impl Fn(&mut [T]) + Sync,
) {
    let (starts, stride) = lines(dims, axis);
    let ptr = Shared(data.as_mut_ptr());
    starts.par_iter().for_each_init(
        || vec![T::default(); len],
        |buf, &s| {
            let p = ptr;
            // SAFETY: each line touches indices s + j*stride that no other line shares.
            unsafe {
                for (j, b) in buf.iter_mut().enumerate() {
                    *b = *p.0.add(s + j * stride);
                }
                f(buf);
                for (j, b) in buf.iter().enumerate() {
                    *p.0.add(s + j * stride) = *b;
                }
            }
        },
    );
}

fn matvec(m: &[f64], len: usize, transpose: bool, buf: &mut [f64]) {
    let x = buf.to_vec();
    for k in 0..len {
        let mut acc = 0.0;
        for j in 0..len {
            acc += if transpose { m[j * len + k] } else { m[k * len + j] } * x[j];
        }
        buf[k] = acc;
    }
}

/// Solve `L psi = f` for one component stored on the full vertex array.
/// Returns the content of the removed null space (mean for constant modes).
pub fn solve_component(data: &mut [f64], grid: &GridSpec, kinds: [AxisKind; 3], symbol: Symbol) -> Result<f64> {
    let dims = grid.dims;
    let h = grid.spacing;
    if symbol == Symbol::Spectral && kinds.iter().any(|k| *k != AxisKind::Periodic) {
        return Err(Error::InvalidParameter("spectral symbol requires periodic axes".into()));
    }
    let lens: [usize; 3] = [0, 1, 2].map(|a| if kinds[a] == AxisKind::Edge { dims[a] - 1 } else { dims[a] });
    if lens.contains(&0) {
        data.iter_mut().for_each(|x| *x = 0.0);
        return Ok(0.0);
    }
    let eig: Vec<Vec<f64>> = (0..3).map(|a| eigenvalues(kinds[a], dims[a], h, symbol)).collect();
    let periodic = kinds.iter().all(|k| *k == AxisKind::Periodic);
    if !periodic && kinds.contains(&AxisKind::Periodic) {
        return Err(Error::InvalidParameter("mixed periodic and box axes are not supported".into()));
    }
    let null_tol = 1e-12 / (h * h);
    let active = |c: [usize; 3]| (0..3).all(|a| c[a] < lens[a]);
    let count = lens.iter().product::<usize>() as f64;
    let has_null = kinds.iter().all(|k| *k != AxisKind::Edge);
    let removed = if has_null {
        (0..data.len()).filter(|&i| active(grid.coords(i))).map(|i| data[i]).sum::<f64>() / count
    } else {
        0.0
    };
    let divide = |v: f64, c: [usize; 3]| {
        let lam = eig[0][c[0]] + eig[1][c[1]] + eig[2][c[2]];
        if lam > null_tol { v / lam } else { 0.0 }
    };
    if periodic {
        let mut z: Vec<Complex64> = data.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let mut planner = FftPlanner::new();
        for a in 0..3 {
            let fft = planner.plan_fft_forward(dims[a]);
            for_each_line(&mut z, dims, a, dims[a], |buf| fft.process(buf));
        }
        z.par_iter_mut().enumerate().for_each(|(idx, v)| {
            let c = grid.coords(idx);
            let lam = eig[0][c[0]] + eig[1][c[1]] + eig[2][c[2]];
            *v = if lam > null_tol { *v / lam } else { Complex64::new(0.0, 0.0) };
        });
        for a in 0..3 {
            let ifft = planner.plan_fft_inverse(dims[a]);
            for_each_line(&mut z, dims, a, dims[a], |buf| ifft.process(buf));
        }
        let n = data.len() as f64;
        for (d, v) in data.iter_mut().zip(&z) {
            *d = v.re / n;
        }
        return Ok(removed);
    }
    let mats: Vec<Vec<f64>> = (0..3).map(|a| basis(kinds[a], dims[a])).collect();
    for a in 0..3 {
        let len = lens[a];
        for_each_line(data, dims, a, len, |buf| matvec(&mats[a], len, false, buf));
    }
    data.par_iter_mut().enumerate().for_each(|(idx, v)| {
        let c = grid.coords(idx);
        *v = if active(c) { divide(*v, c) } else { 0.0 };
    });
    for a in 0..3 {
        let len = lens[a];
        for_each_line(data, dims, a, len, |buf| matvec(&mats[a], len, true, buf));
    }
    Ok(removed)
}
