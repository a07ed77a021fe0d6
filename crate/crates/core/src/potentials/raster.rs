//! Segments to face-crossing 2-forms.
//!
//! Every crossing of a lattice plane adds the segment weight to the face
//! pierced, so consecutive crossings always join face-adjacent cells and
//! the divergence of the raster is concentrated at the two endpoint cells.
//! Crossing order comes from floating point plane parameters; cell
//! bookkeeping is integer, which keeps that conservation exact regardless
//! of how near-simultaneous crossings get ordered.

use crate::error::{Error, Result};
use crate::geom::Segment;
use crate::grid::{Form2, GridSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum RasterPolicy {
    /// Reject segments leaving the closed box.
    #[default]
    Strict,
    /// Drop crossings of faces outside the complex.
    Clip,
}

fn to_grid(g: &GridSpec, p: [f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|a| (p[a] - g.origin[a]) / g.spacing)
}

/// Density 2-form (flux `weight` per crossing, divided by `h^2`).
pub fn rasterize(grid: GridSpec, segments: &[Segment], weight: f64, policy: RasterPolicy) -> Result<Form2> {
    let weighted: Vec<(Segment, f64)> = segments.iter().map(|s| (*s, weight)).collect();
    rasterize_weighted(grid, &weighted, policy)
}

/// As [`rasterize`] with a weight per segment.
pub fn rasterize_weighted(grid: GridSpec, segments: &[(Segment, f64)], policy: RasterPolicy) -> Result<Form2> {
    let mut out = Form2::zeros(grid);
    let cells = [0, 1, 2].map(|a| grid.cells_along(a) as f64);
    for (seg, weight) in segments {
        let dens = weight / (grid.spacing * grid.spacing);
        let sa = to_grid(&grid, seg.a);
        let sb = to_grid(&grid, seg.b);
        if sa.iter().chain(&sb).any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite segment".into()));
        }
        if !grid.periodic() && policy == RasterPolicy::Strict {
            let outside = |s: [f64; 3]| (0..3).any(|a| s[a] < 0.0 || s[a] > cells[a]);
            if outside(sa) || outside(sb) {
                return Err(Error::InvalidInput(format!("segment {:?} -> {:?} leaves the grid", seg.a, seg.b)));
            }
        }
        let ca = sa.map(|x| x.floor() as i64);
        let cb = sb.map(|x| x.floor() as i64);
        // (t, axis, plane, direction)
        let mut events: Vec<(f64, usize, i64, i64)> = Vec::new();
        for a in 0..3 {
            let span = sb[a] - sa[a];
            if cb[a] > ca[a] {
                for p in ca[a] + 1..=cb[a] {
                    events.push(((p as f64 - sa[a]) / span, a, p, 1));
                }
            } else if cb[a] < ca[a] {
                for p in (cb[a] + 1..=ca[a]).rev() {
                    events.push(((p as f64 - sa[a]) / span, a, p, -1));
                }
            }
        }
        events.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        let mut cell = ca;
        for (_, a, p, dir) in events {
            let mut base = cell;
            base[a] = p;
            if let Some(idx) = face_index(&grid, a, base) {
                out.comps[a][idx] += dir as f64 * dens;
            }
            cell[a] += dir;
        }
    }
    Ok(out)
}

fn face_index(g: &GridSpec, normal: usize, base: [i64; 3]) -> Option<usize> {
    if g.periodic() {
        return g.index_wrapped(base);
    }
    for a in 0..3 {
        let hi = if a == normal { g.dims[a] as i64 - 1 } else { g.dims[a] as i64 - 2 };
        if base[a] < 0 || base[a] > hi {
            return None;
        }
    }
    Some(g.index_of(base.map(|x| x as usize)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dec::ExteriorDerivative;
    use crate::geom::Vec3;
    use crate::grid::Boundary;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn divergence_sits_at_endpoints() {
        let g = GridSpec::new([8, 8, 8], 0.125, [0.0; 3], Boundary::Periodic).unwrap();
        let mut r = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let a = Vec3::new(r.random(), r.random(), r.random());
            let b = a + Vec3::new(r.random_range(-2.0..2.0), r.random_range(-2.0..2.0), r.random_range(-2.0..2.0));
            let q = rasterize(g, &[Segment::new(a, b)], 1.0, RasterPolicy::Strict).unwrap();
            let dq = q.d();
            let h3 = g.spacing.powi(3);
            let cell = |p: Vec3| g.index_wrapped([0, 1, 2].map(|k| (p[k] / g.spacing).floor() as i64)).unwrap();
            let mut expect = vec![0.0; g.len()];
            expect[cell(a)] += 1.0 / h3;
            expect[cell(b)] -= 1.0 / h3;
            for i in 0..g.len() {
                assert!((dq.data[i] - expect[i]).abs() < 1e-9 / h3, "cell {i}");
            }
        }
    }

    #[test]
    fn closed_polygon_raster_is_closed() {
        let g = GridSpec::new([10, 10, 10], 0.1, [0.0; 3], Boundary::Box).unwrap();
        let pts = [Vec3::new(0.21, 0.33, 0.5), Vec3::new(0.8, 0.3, 0.45), Vec3::new(0.5, 0.85, 0.61)];
        let segs: Vec<Segment> = (0..3).map(|k| Segment::new(pts[k], pts[(k + 1) % 3])).collect();
        let q = rasterize(g, &segs, 0.5, RasterPolicy::Strict).unwrap();
        assert!(q.d().max_abs() < 1e-9);
        assert!(q.max_abs() > 0.0);
    }

    #[test]
    fn vertical_line_crosses_one_face_per_layer() {
        let g = GridSpec::new([4, 4, 4], 0.25, [0.0; 3], Boundary::Periodic).unwrap();
        let s = Segment::new(Vec3::new(0.3, 0.6, 0.1), Vec3::new(0.3, 0.6, 1.1));
        let q = rasterize(g, &[s], 2.0, RasterPolicy::Strict).unwrap();
        let nz: Vec<usize> = (0..g.len()).filter(|&i| q.comps[2][i] != 0.0).collect();
        assert_eq!(nz.len(), 4);
        assert!(nz.iter().all(|&i| g.coords(i)[0] == 1 && g.coords(i)[1] == 2));
        assert!(nz.iter().all(|&i| (q.comps[2][i] - 2.0 / 0.0625).abs() < 1e-12));
    }

    #[test]
    fn strict_policy_rejects_exits() {
        let g = GridSpec::new([4, 4, 4], 0.25, [0.0; 3], Boundary::Box).unwrap();
        let s = Segment::new(Vec3::new(0.3, 0.3, 0.3), Vec3::new(0.3, 0.3, 1.3));
        assert!(rasterize(g, &[s], 1.0, RasterPolicy::Strict).is_err());
        assert!(rasterize(g, &[s], 1.0, RasterPolicy::Clip).is_ok());
    }
}
