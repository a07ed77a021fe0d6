//! Exterior derivative, its adjoint and the index-identification star.
//!
//! All degrees share the inner product `sum(a*b) * h^3`, so the
//! codifferential is the plain transpose of `d`.

use crate::grid::{cyclic, Form0, Form1, Form2, Form3, GridSpec};
use rayon::prelude::*;

pub trait ExteriorDerivative {
    type Output;
    fn d(&self) -> Self::Output;
}

pub trait Codifferential {
    type Output;
    fn codiff(&self) -> Self::Output;
}

#[inline]
fn at(g: &GridSpec, data: &[f64], idx: usize, axis: usize, dir: i64) -> f64 {
    g.step(idx, axis, dir).map_or(0.0, |j| data[j])
}

impl ExteriorDerivative for Form0 {
    type Output = Form1;
    fn d(&self) -> Form1 {
        let g = self.grid;
        let inv = 1.0 / g.spacing;
        let mut out = Form1::zeros(g);
        for a in 0..3 {
            out.comps[a].par_iter_mut().enumerate().for_each(|(i, o)| {
                if g.edge_valid(a, i) {
                    *o = (at(&g, &self.data, i, a, 1) - self.data[i]) * inv;
                }
            });
        }
        out
    }
}

impl ExteriorDerivative for Form1 {
    type Output = Form2;
    fn d(&self) -> Form2 {
        let g = self.grid;
        let inv = 1.0 / g.spacing;
        let w = &self.comps;
        let mut out = Form2::zeros(g);
        for n in 0..3 {
            let (b, c) = cyclic(n);
            out.comps[n].par_iter_mut().enumerate().for_each(|(i, o)| {
                if g.face_valid(n, i) {
                    *o = (w[b][i] + at(&g, &w[c], i, b, 1) - at(&g, &w[b], i, c, 1) - w[c][i]) * inv;
                }
            });
        }
        out
    }
}

impl ExteriorDerivative for Form2 {
    type Output = Form3;
    fn d(&self) -> Form3 {
        let g = self.grid;
        let inv = 1.0 / g.spacing;
        let q = &self.comps;
        let mut out = Form3::zeros(g);
        out.data.par_iter_mut().enumerate().for_each(|(i, o)| {
            if g.cell_valid(i) {
                let mut s = 0.0;
                for a in 0..3 {
                    s += at(&g, &q[a], i, a, 1) - q[a][i];
                }
                *o = s * inv;
            }
        });
        out
    }
}

impl Codifferential for Form1 {
    type Output = Form0;
    fn codiff(&self) -> Form0 {
        let g = self.grid;
        let inv = 1.0 / g.spacing;
        let w = &self.comps;
        let mut out = Form0::zeros(g);
        out.data.par_iter_mut().enumerate().for_each(|(i, o)| {
            let mut s = 0.0;
            for a in 0..3 {
                s += at(&g, &w[a], i, a, -1) - w[a][i];
            }
            *o = s * inv;
        });
        out
    }
}

impl Codifferential for Form2 {
    type Output = Form1;
    fn codiff(&self) -> Form1 {
        let g = self.grid;
        let inv = 1.0 / g.spacing;
        let q = &self.comps;
        let mut out = Form1::zeros(g);
        for e in 0..3 {
            let n1 = (e + 2) % 3;
            let c1 = (e + 1) % 3;
            let n2 = (e + 1) % 3;
            let b2 = (e + 2) % 3;
            out.comps[e].par_iter_mut().enumerate().for_each(|(i, o)| {
                if g.edge_valid(e, i) {
                    *o = (q[n1][i] - at(&g, &q[n1], i, c1, -1) + at(&g, &q[n2], i, b2, -1) - q[n2][i]) * inv;
                }
            });
        }
        out
    }
}

impl Codifferential for Form3 {
    type Output = Form2;
    fn codiff(&self) -> Form2 {
        let g = self.grid;
        let inv = 1.0 / g.spacing;
        let mut out = Form2::zeros(g);
        for a in 0..3 {
            out.comps[a].par_iter_mut().enumerate().for_each(|(i, o)| {
                if g.face_valid(a, i) {
                    *o = (at(&g, &self.data, i, a, -1) - self.data[i]) * inv;
                }
            });
        }
        out
    }
}

/// Identify edge components with the dual faces crossing them.
pub fn star1(w: &Form1) -> Form2 {
    let mut out = Form2::zeros(w.grid);
    for a in 0..3 {
        for i in 0..w.grid.len() {
            if w.grid.face_valid(a, i) {
                out.comps[a][i] = w.comps[a][i];
            }
        }
    }
    out
}

/// Inverse identification of [`star1`].
pub fn star2(q: &Form2) -> Form1 {
    let mut out = Form1::zeros(q.grid);
    for a in 0..3 {
        for i in 0..q.grid.len() {
            if q.grid.edge_valid(a, i) {
                out.comps[a][i] = q.comps[a][i];
            }
        }
    }
    out
}

/// Forward-difference curl evaluated on the dual complex: the image of `d`
/// after the star identification, used to check `d* star = star d` on
/// the staggered layout.
pub fn dual_curl(w: &Form1) -> Form1 {
    star2(&w.d())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Boundary;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grids() -> Vec<GridSpec> {
        vec![
            GridSpec::new([4, 5, 3], 0.3, [0.0; 3], Boundary::Periodic).unwrap(),
            GridSpec::new([4, 5, 3], 0.3, [0.0; 3], Boundary::Box).unwrap(),
        ]
    }

    fn rand0(g: GridSpec, r: &mut ChaCha8Rng) -> Form0 {
        Form0::from_fn(g, |_| r.random_range(-1.0..1.0))
    }
    fn rand1(g: GridSpec, r: &mut ChaCha8Rng) -> Form1 {
        Form1::from_fn(g, |_, _| r.random_range(-1.0..1.0))
    }
    fn rand2(g: GridSpec, r: &mut ChaCha8Rng) -> Form2 {
        Form2::from_fn(g, |_, _| r.random_range(-1.0..1.0))
    }
    fn rand3(g: GridSpec, r: &mut ChaCha8Rng) -> Form3 {
        Form3::from_fn(g, |_| r.random_range(-1.0..1.0))
    }

    #[test]
    fn dd_vanishes() {
        let mut r = ChaCha8Rng::seed_from_u64(1);
        for g in grids() {
            let f = rand0(g, &mut r);
            assert!(f.d().d().max_abs() < 1e-12);
            let w = rand1(g, &mut r);
            assert!(w.d().d().max_abs() < 1e-12);
            let q = rand2(g, &mut r);
            assert!(q.codiff().codiff().max_abs() < 1e-12);
            let c = rand3(g, &mut r);
            assert!(c.codiff().codiff().max_abs() < 1e-12);
        }
    }

    #[test]
    fn codifferential_is_adjoint() {
        let mut r = ChaCha8Rng::seed_from_u64(2);
        for g in grids() {
            let (f, w) = (rand0(g, &mut r), rand1(g, &mut r));
            assert!((f.d().dot(&w) - f.dot(&w.codiff())).abs() < 1e-12);
            let q = rand2(g, &mut r);
            assert!((w.d().dot(&q) - w.dot(&q.codiff())).abs() < 1e-12);
            let c = rand3(g, &mut r);
            assert!((q.d().dot(&c) - q.dot(&c.codiff())).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_of_linear_function() {
        let g = GridSpec::new([5, 5, 5], 0.25, [0.0; 3], Boundary::Box).unwrap();
        let f = Form0::from_fn(g, |i| g.vertex_position(i)[0]);
        let df = f.d();
        for i in 0..g.len() {
            if g.edge_valid(0, i) {
                assert!((df.comps[0][i] - 1.0).abs() < 1e-14);
            }
            assert_eq!(df.comps[1][i], 0.0);
        }
    }

    #[test]
    fn single_edge_curl_hits_four_faces() {
        let g = GridSpec::new([4, 4, 4], 0.5, [0.0; 3], Boundary::Periodic).unwrap();
        let mut w = Form1::zeros(g);
        let e = g.index(1, 1, 1);
        w.comps[0][e] = 2.0;
        let q = w.d();
        let nz: Vec<f64> = q.comps.iter().flatten().copied().filter(|x| *x != 0.0).collect();
        assert_eq!(nz.len(), 4);
        assert!(nz.iter().all(|x| (x.abs() - 2.0 / 0.5).abs() < 1e-14));
    }

    #[test]
    fn star_codifferential_matches_stencil() {
        // d* applied to the starred 1-form is the backward-difference curl.
        let mut r = ChaCha8Rng::seed_from_u64(3);
        let g = GridSpec::new([4, 4, 4], 1.0, [0.0; 3], Boundary::Periodic).unwrap();
        let w = rand1(g, &mut r);
        let lhs = star1(&w).codiff();
        let wv = |a: usize, c: [i64; 3]| w.comps[a][g.index_wrapped(c).unwrap()];
        for i in 0..g.len() {
            let x = g.coords(i).map(|v| v as i64);
            for e in 0..3 {
                let (b, c) = cyclic(e);
                let mut xb = x;
                xb[b] -= 1;
                let mut xc = x;
                xc[c] -= 1;
                let expect = (wv(c, x) - wv(c, xb)) - (wv(b, x) - wv(b, xc));
                assert!((lhs.comps[e][i] - expect).abs() < 1e-12);
            }
        }
        // and agrees with the forward curl to first order on smooth data
        let gap = |n: usize| {
            let g = GridSpec::new([n; 3], 1.0 / n as f64, [0.0; 3], Boundary::Periodic).unwrap();
            let tau = std::f64::consts::TAU;
            let w = Form1::from_fn(g, |a, i| {
                let p = g.edge_midpoint(a, i);
                (tau * p[(a + 1) % 3]).sin() * (a as f64 + 1.0)
            });
            let mut d = star1(&w).codiff();
            d.axpy(-1.0, &dual_curl(&w));
            d.max_abs()
        };
        let ratio = gap(16) / gap(32);
        assert!((ratio - 2.0).abs() < 0.1, "ratio {ratio}");
    }
}
