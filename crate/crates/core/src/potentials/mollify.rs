//! Convolution of 1-forms with a triple self-convolved bump.

use crate::error::{Error, Result};
use crate::grid::{Form1, GridSpec};
use rayon::prelude::*;

/// Discrete kernel on lattice offsets, summing to one.
#[derive(Clone, Debug)]
pub struct BumpKernel {
    pub radius: i64,
    /// Dense `(2 radius + 1)^3` weights, x fastest.
    pub weights: Vec<f64>,
}

impl BumpKernel {
    fn side(&self) -> usize {
        (2 * self.radius + 1) as usize
    }

    fn at(&self, o: [i64; 3]) -> f64 {
        let s = self.side() as i64;
        let r = self.radius;
        self.weights[((o[0] + r) + s * ((o[1] + r) + s * (o[2] + r))) as usize]
    }

    /// `exp(-1/(1-|x|^2/rho^2))` sampled at lattice offsets, normalized.
    fn bump(rho_cells: f64) -> Self {
        let radius = rho_cells.floor().max(0.0) as i64;
        let s = (2 * radius + 1) as usize;
        let mut weights = vec![0.0; s * s * s];
        for k in -radius..=radius {
            for j in -radius..=radius {
                for i in -radius..=radius {
                    let q = ((i * i + j * j + k * k) as f64) / (rho_cells * rho_cells).max(f64::MIN_POSITIVE);
                    let w = if i == 0 && j == 0 && k == 0 { (-1.0f64).exp() } else if q < 1.0 { (-1.0 / (1.0 - q)).exp() } else { 0.0 };
                    weights[((i + radius) + s as i64 * ((j + radius) + s as i64 * (k + radius))) as usize] = w;
                }
            }
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Self { radius, weights }
    }

    fn convolve(&self, other: &BumpKernel) -> Self {
        let radius = self.radius + other.radius;
        let s = (2 * radius + 1) as i64;
        let mut weights = vec![0.0; (s * s * s) as usize];
        let r1 = self.radius;
        let r2 = other.radius;
        for a in iter3(r1) {
            let wa = self.at(a);
            if wa == 0.0 {
                continue;
            }
            for b in iter3(r2) {
                let o = [a[0] + b[0] + radius, a[1] + b[1] + radius, a[2] + b[2] + radius];
                weights[(o[0] + s * (o[1] + s * o[2])) as usize] += wa * other.at(b);
            }
        }
        Self { radius, weights }
    }

    /// `psi^3 = psi^1 * psi^1 * psi^1` with `psi^1` supported in a third of
    /// `r`, so the result is supported in the ball of radius `r`.
    pub fn new(r: f64, spacing: f64) -> Self {
        let one = Self::bump(r / (3.0 * spacing));
        one.convolve(&one).convolve(&one)
    }
}

fn iter3(r: i64) -> impl Iterator<Item = [i64; 3]> {
    (-r..=r).flat_map(move |k| (-r..=r).flat_map(move |j| (-r..=r).map(move |i| [i, j, k])))
}

/// `f * phi_r` componentwise. Off-grid values count as zero on the box.
pub fn mollify(f: &Form1, r: f64) -> Result<Form1> {
    let g: GridSpec = f.grid;
    if !(r >= g.spacing) {
        return Err(Error::InvalidParameter(format!("mollifier radius {r} is below the grid spacing {}", g.spacing)));
    }
    let ker = BumpKernel::new(r, g.spacing);
    let taps: Vec<([i64; 3], f64)> =
        iter3(ker.radius).map(|o| (o, ker.at(o))).filter(|(_, w)| *w != 0.0).collect();
    let mut out = Form1::zeros(g);
    for a in 0..3 {
        let src = &f.comps[a];
        out.comps[a].par_iter_mut().enumerate().for_each(|(i, o)| {
            if !g.edge_valid(a, i) {
                return;
            }
            let c = g.coords(i).map(|x| x as i64);
            let mut acc = 0.0;
            for (off, w) in &taps {
                let p = [c[0] - off[0], c[1] - off[1], c[2] - off[2]];
                if let Some(j) = g.index_wrapped(p) {
                    if g.edge_valid(a, j) {
                        acc += w * src[j];
                    }
                }
            }
            *o = acc;
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Boundary;

    #[test]
    fn kernel_has_unit_mass_and_is_supported_in_r() {
        let k = BumpKernel::new(0.9, 0.1);
        assert!((k.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        for o in iter3(k.radius) {
            let d = ((o[0] * o[0] + o[1] * o[1] + o[2] * o[2]) as f64).sqrt() * 0.1;
            if k.at(o) != 0.0 {
                assert!(d <= 0.9 + 1e-12);
            }
        }
    }

    #[test]
    fn constants_are_fixed() {
        let g = GridSpec::new([10, 10, 10], 0.1, [0.0; 3], Boundary::Periodic).unwrap();
        let f = Form1::from_fn(g, |a, _| a as f64 + 0.5);
        let m = mollify(&f, 0.35).unwrap();
        let mut d = m.clone();
        d.axpy(-1.0, &f);
        assert!(d.max_abs() <= 1e-12);
    }

    #[test]
    fn impulse_mass_is_preserved() {
        let g = GridSpec::new([12, 12, 12], 0.1, [0.0; 3], Boundary::Periodic).unwrap();
        let mut f = Form1::zeros(g);
        f.comps[1][g.index(0, 5, 11)] = 3.0;
        let m = mollify(&f, 0.4).unwrap();
        let total: f64 = m.comps[1].iter().sum();
        assert!((total - 3.0).abs() <= 1e-12);
        assert!(m.comps[1].iter().filter(|x| **x != 0.0).count() > 1);
    }

    #[test]
    fn radius_below_spacing_is_rejected() {
        let g = GridSpec::new([4, 4, 4], 0.25, [0.0; 3], Boundary::Periodic).unwrap();
        assert!(mollify(&Form1::zeros(g), 0.2).is_err());
    }
}
