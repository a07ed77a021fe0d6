//! Flat norm of weighted point measures through a small transport problem.
//!
//! `sup { sum phi(x_i) w_i : Lip(phi) <= 1, |phi| <= R }` equals the cheapest
//! way to move positive mass onto negative mass when any unit may also be
//! dumped at cost `R`. The transport runs as successive shortest paths on a
//! dense residual graph.

use crate::error::{Error, Result};
use crate::geom::Vec3;

struct Graph {
    n: usize,
    cap: Vec<f64>,
    cost: Vec<f64>,
}

impl Graph {
    fn new(n: usize) -> Self {
        Self { n, cap: vec![0.0; n * n], cost: vec![0.0; n * n] }
    }

    fn add(&mut self, a: usize, b: usize, cap: f64, cost: f64) {
        self.cap[a * self.n + b] = cap;
        self.cost[a * self.n + b] = cost;
        self.cost[b * self.n + a] = -cost;
    }

    /// Bellman-Ford shortest path on the residual graph; edges are dense so
    /// the quadratic scan per round dominates anyway.
    fn shortest(&self, s: usize, tol: f64) -> (Vec<f64>, Vec<usize>) {
        let n = self.n;
        let mut dist = vec![f64::INFINITY; n];
        let mut prev = vec![usize::MAX; n];
        dist[s] = 0.0;
        for _ in 0..n {
            let mut changed = false;
            for a in 0..n {
                if !dist[a].is_finite() {
                    continue;
                }
                for b in 0..n {
                    if self.cap[a * n + b] > tol {
                        let nd = dist[a] + self.cost[a * n + b];
                        if nd < dist[b] - 1e-15 * (1.0 + nd.abs()) {
                            dist[b] = nd;
                            prev[b] = a;
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        (dist, prev)
    }
}

/// Exact flat norm of `sum w_i delta_{x_i}` with sup-bound `radius`.
pub fn flat_norm_points(points: &[(Vec3, f64)], radius: f64) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!("radius must be positive, got {radius}")));
    }
    let pos: Vec<(Vec3, f64)> = points.iter().filter(|p| p.1 > 0.0).copied().collect();
    let neg: Vec<(Vec3, f64)> = points.iter().filter(|p| p.1 < 0.0).map(|p| (p.0, -p.1)).collect();
    let (np, nn) = (pos.len(), neg.len());
    // nodes: source, positives, negatives, ground, sink
    let s = 0;
    let g = 1 + np + nn;
    let t = g + 1;
    let mut gr = Graph::new(t + 1);
    let total_pos: f64 = pos.iter().map(|p| p.1).sum();
    let total_neg: f64 = neg.iter().map(|p| p.1).sum();
    let big = total_pos + total_neg + 1.0;
    for (i, p) in pos.iter().enumerate() {
        gr.add(s, 1 + i, p.1, 0.0);
        gr.add(1 + i, g, big, radius);
        for (j, q) in neg.iter().enumerate() {
            gr.add(1 + i, 1 + np + j, big, (p.0 - q.0).norm());
        }
    }
    for (j, q) in neg.iter().enumerate() {
        gr.add(1 + np + j, t, q.1, 0.0);
        gr.add(g, 1 + np + j, big, radius);
    }
    let excess = total_neg - total_pos;
    if excess > 0.0 {
        gr.add(s, g, excess, 0.0);
    } else if excess < 0.0 {
        gr.add(g, t, -excess, 0.0);
    }
    let need = total_pos.max(total_neg);
    let tol = 1e-15 * (1.0 + need);
    let mut sent = 0.0;
    let mut total = 0.0;
    let n = gr.n;
    for _ in 0..(4 * n * n + 16) {
        if need - sent <= tol {
            break;
        }
        let (dist, prev) = gr.shortest(s, tol);
        if !dist[t].is_finite() {
            return Err(Error::NumericalContract("transport could not route all mass".into()));
        }
        let mut push = need - sent;
        let mut v = t;
        while v != s {
            let u = prev[v];
            push = push.min(gr.cap[u * n + v]);
            v = u;
        }
        let mut v = t;
        while v != s {
            let u = prev[v];
            gr.cap[u * n + v] -= push;
            gr.cap[v * n + u] += push;
            v = u;
        }
        sent += push;
        total += push * dist[t];
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn dipole_is_truncated_distance() {
        let a = Vec3::new(0.0, 0.0, 0.0);
        let b = Vec3::new(0.3, 0.4, 0.0);
        let mu = [(a, 1.0), (b, -1.0)];
        assert!((flat_norm_points(&mu, 1.0).unwrap() - 0.5).abs() < 1e-14);
        assert!((flat_norm_points(&mu, 0.1).unwrap() - 0.2).abs() < 1e-14);
    }

    #[test]
    fn lone_charge_costs_radius() {
        let mu = [(Vec3::zeros(), 2.5)];
        assert!((flat_norm_points(&mu, 0.4).unwrap() - 1.0).abs() < 1e-14);
    }

    fn measure(c: &[f64]) -> Vec<(Vec3, f64)> {
        c.chunks(4).map(|x| (Vec3::new(x[0], x[1], x[2]), x[3])).collect()
    }

    proptest! {
        #[test]
        fn norm_axioms(a in proptest::collection::vec(-1.0f64..1.0, 16),
                       b in proptest::collection::vec(-1.0f64..1.0, 16),
                       s in -3.0f64..3.0) {
            let (ma, mb) = (measure(&a), measure(&b));
            let r = 0.7;
            let fa = flat_norm_points(&ma, r).unwrap();
            let fb = flat_norm_points(&mb, r).unwrap();
            let sum: Vec<_> = ma.iter().chain(&mb).copied().collect();
            let fs = flat_norm_points(&sum, r).unwrap();
            prop_assert!(fs <= fa + fb + 1e-9);
            let scaled: Vec<_> = ma.iter().map(|(x, w)| (*x, w * s)).collect();
            prop_assert!((flat_norm_points(&scaled, r).unwrap() - s.abs() * fa).abs() < 1e-9 * (1.0 + fa));
        }
    }
}
