use super::*;
use crate::extract::{extract_vorticity, CoarseLattice};
use crate::grid::Boundary;

fn unit_box(n: usize) -> GridSpec {
    GridSpec::new([n; 3], 1.0 / (n - 1) as f64, [0.0; 3], Boundary::Box).unwrap()
}

fn column(grid: &GridSpec, x: f64, y: f64, h: f64) -> VortexSystem {
    let _ = grid;
    VortexSystem::line(Vec3::new(x, y, 0.0), Vec3::new(x, y, 1.0), h)
}

#[test]
fn regimes_scale_as_documented() {
    let e: f64 = 0.01;
    let l = e.ln().abs();
    assert_eq!(Regime::S2.g(e), l * l);
    assert_eq!(Regime::S3.g(e), l / e);
    assert!((Regime::S1 { kappa: 1.5 }.g(e) - l.powf(1.5)).abs() < 1e-12);
    let p = RecoveryParams::new(e, Regime::S2);
    assert!((p.h() - 1.0 / l).abs() < 1e-15);
    assert!(p.validate().is_ok());
    assert!(matches!(RecoveryParams::new(0.01, Regime::S1 { kappa: 1.5 }).validate(), Err(Error::ParameterRejection(_))));
    assert!(RecoveryParams::new(1e-6, Regime::S1 { kappa: 1.2 }).validate().is_ok());
    assert!(RecoveryParams::new(1.5, Regime::S2).validate().is_err());
}

#[test]
fn empty_system_gives_unit_modulus() {
    let g = unit_box(9);
    let rho = modulus_profile(g, &VortexSystem::new(0.5), 0.1).unwrap();
    assert!(rho.data.iter().all(|&r| r == 1.0));
}

#[test]
fn column_probe_at_half_eps() {
    let g = unit_box(17);
    let eps = 0.1;
    // vertex (8, 8, k) sits at x = 0.5, the column is eps/2 away
    let sys = column(&g, 0.5 + eps / 2.0, 0.5, 0.3);
    let rho = modulus_profile(g, &sys, eps).unwrap();
    assert!((rho.data[g.index(8, 8, 4)] - 0.5).abs() < 1e-12);
    let on = column(&g, 0.5, 0.5, 0.3);
    let rho = modulus_profile(g, &on, eps).unwrap();
    assert_eq!(rho.data[g.index(8, 8, 4)], 0.0);
}

#[test]
fn circle_tube_volume() {
    let n = 65;
    let g = unit_box(n);
    let (r, eps) = (0.25, 6.0 * g.spacing);
    let sys = VortexSystem::circle(Vec3::new(0.5, 0.5, 0.5), r, Vec3::z(), 400, 0.3);
    let rho = modulus_profile(g, &sys, eps).unwrap();
    let count = rho.data.iter().filter(|&&x| x < 1.0).count() as f64;
    let expect = TAU * r * PI * eps * eps / g.spacing.powi(3);
    assert!((count / expect - 1.0).abs() < 0.3, "{count} vs {expect}");
}

#[test]
fn phase_of_zero_and_of_gradients() {
    let g = unit_box(9);
    let u = phase_assemble(&Form1::zeros(g), None, TreeOrder::Bfs).unwrap();
    assert!(u.data.iter().all(|z| (z - Complex64::new(1.0, 0.0)).norm() < 1e-15));
    let theta = Form0::from_fn(g, |i| {
        let x = g.vertex_position(i);
        3.0 * x.x * x.y + (2.0 * x.z).sin()
    });
    let u = phase_assemble(&theta.d(), None, TreeOrder::Dfs).unwrap();
    for i in 0..g.len() {
        let expect = Complex64::from_polar(1.0, theta.data[i] - theta.data[0]);
        assert!((u.data[i] - expect).norm() < 1e-12);
    }
}

#[test]
fn unpierced_circulation_is_rejected() {
    let g = unit_box(6);
    let mut a = Form1::zeros(g);
    a.comps[0][g.index(2, 2, 2)] = 2.0 / g.spacing;
    let err = phase_assemble(&a, None, TreeOrder::Bfs).unwrap_err();
    assert!(matches!(err, Error::CirculationDefect { .. }));
}

fn column_recovery(n: usize, eps: f64) -> (GridSpec, VortexSystem, Recovery) {
    let g = unit_box(n);
    let c = 0.5 + 0.5 * g.spacing;
    let p = RecoveryParams::new(eps, Regime::S2);
    let sys = column(&g, c, c, p.h());
    let rec = recovery_field(g, &sys, None, &p).unwrap();
    (g, sys, rec)
}

#[test]
fn column_round_trip_extraction() {
    let (g, _, rec) = column_recovery(33, 0.05);
    let lattice = CoarseLattice::new(g, 4, [0, 0, 0]).unwrap();
    let nu = extract_vorticity(&rec.u, &lattice, 0.0).unwrap();
    let base = [4usize, 4];
    let expect = lattice.faces().iter().filter(|f| f.normal == 2 && f.base[0] == base[0] && f.base[1] == base[1]).count();
    assert!(expect > 0);
    assert_eq!(nu.dual_edges.len(), expect);
    for e in &nu.dual_edges {
        assert_eq!((e.axis, e.i, e.j, e.weight), (2, base[0], base[1], 1));
    }
    // fine plaquette windings: one per z layer at the column
    let w = plaquette_windings(&rec.u);
    let total: f64 = w.comps[2].iter().map(|x| x.abs()).sum();
    assert_eq!(total, 33.0);
}

#[test]
fn spanning_trees_agree() {
    let (g, sys, rec) = column_recovery(17, 0.1);
    let pierced = &rec.potential.as_ref().unwrap().raster;
    let a = phase_assemble(&rec.phase, Some(pierced), TreeOrder::Bfs).unwrap();
    let b = phase_assemble(&rec.phase, Some(pierced), TreeOrder::Dfs).unwrap();
    let shift = a.data[0] / b.data[0];
    for i in 0..g.len() {
        assert!((a.data[i] - b.data[i] * shift).norm() <= 1e-6);
    }
    let _ = sys;
}

#[test]
fn modulus_is_bounded_and_vanishes_on_the_lines() {
    let (_, _, rec) = column_recovery(17, 0.1);
    for (z, r) in rec.u.data.iter().zip(&rec.rho.data) {
        assert!(z.norm() <= 1.0 + 1e-15);
        assert_eq!(z.norm() == 0.0, *r == 0.0);
    }
}

#[test]
fn empty_recovery_is_constant() {
    let g = unit_box(9);
    let p = RecoveryParams::new(0.05, Regime::S2);
    let rec = recovery_field(g, &VortexSystem::new(p.h()), None, &p).unwrap();
    assert!(rec.u.data.iter().all(|z| *z == Complex64::new(1.0, 0.0)));
    let s = energy_split(&rec.u, &VortexSystem::new(p.h()), 0.05, 0.1).unwrap();
    assert_eq!(s.total, 0.0);
}

#[test]
fn energy_split_adds_up() {
    let (_, sys, rec) = column_recovery(17, 0.1);
    let s = energy_split(&rec.u, &sys, 0.1, 0.2).unwrap();
    let sum = s.core + s.interaction + s.momentum;
    assert!((sum - s.total).abs() <= 1e-10 * s.total);
    assert!(s.core > 0.0 && s.interaction > 0.0 && s.momentum > 0.0);
}

#[test]
fn constant_momentum_adds_its_square() {
    let eps = 0.02;
    let n = 33;
    let g = unit_box(n);
    let p = RecoveryParams::new(eps, Regime::S2);
    let c = 0.5 + 0.5 * g.spacing;
    let sys = column(&g, c, c, p.h());
    let e0 = crate::field::energy(&recovery_field(g, &sys, None, &p).unwrap().u, eps, &StandardWell, None).unwrap().total;
    let v0 = [1.0, 0.0, 0.0];
    let alpha = constant_momentum_potential(g, v0);
    let e1 = crate::field::energy(&recovery_field(g, &sys, Some(&alpha), &p).unwrap().u, eps, &StandardWell, None)
        .unwrap()
        .total;
    let gained = (e1 - e0) / p.g();
    assert!((gained / 0.5 - 1.0).abs() < 0.05, "{gained}");
}

#[test]
fn limit_energy_examples() {
    assert_eq!(limit_energy(LimitVorticity::None, None), 0.0);
    let line = VortexSystem::line(Vec3::zeros(), Vec3::new(0.0, 0.0, 0.7), 0.2);
    let g = unit_box(5);
    let v = Form1::from_fn(g, |a, i| if g.edge_valid(a, i) { 0.3 } else { 0.0 });
    let e = limit_energy(LimitVorticity::Lines(&line), Some(&v));
    assert!((e - (PI * 0.7 + 0.5 * v.dot(&v))).abs() < 1e-14);
    let r = 0.3;
    let circle = VortexSystem::circle(Vec3::zeros(), r, Vec3::z(), 10_000, 1.0);
    assert!((limit_energy(LimitVorticity::Lines(&circle), None) / (PI * TAU * r) - 1.0).abs() < 1e-7);
}

#[test]
fn limit_f_examples() {
    let g = unit_box(9);
    let zero = Form1::zeros(g);
    assert_eq!(limit_f(&zero, &zero, &zero, 1e9).unwrap(), 0.0);
    let v = Form1::from_fn(g, |a, i| {
        let x = g.edge_midpoint(a, i);
        if g.edge_valid(a, i) && a == 1 {
            x.x * x.x
        } else {
            0.0
        }
    });
    let half_dv = 0.5 * v.d().mass();
    assert!(half_dv > 0.0);
    assert!((limit_f(&v, &v, &v, 1e9).unwrap() - half_dv).abs() < 1e-14);
    assert_eq!(limit_f(&v, &v, &v, 0.5 * half_dv).unwrap(), f64::INFINITY);
    // A = c x dy on a grid whose dual cells tile the unit cube
    let n = 64;
    let pg = GridSpec::new([n; 3], 1.0 / n as f64, [0.5 / n as f64; 3], Boundary::Periodic).unwrap();
    let c = 1.7;
    let a = Form1::from_fn(pg, |ax, i| if ax == 1 { c * pg.vertex_position(i).x } else { 0.0 });
    let z = Form1::zeros(pg);
    let got = limit_f(&z, &a, &a, 1e9).unwrap();
    let expect = c * c / 6.0;
    assert!((got / expect - 1.0).abs() < 0.01, "{got} vs {expect}");
}

#[test]
fn curvature_examples() {
    let line: Vec<Vec3> = (0..10).map(|k| Vec3::new(0.1 * k as f64, 0.2, 0.0)).collect();
    assert_eq!(curvature_residual(&line, false, |_| Vec3::zeros()).unwrap().max_residual, 0.0);
    let r = 0.4;
    let n = 10_000;
    let circle: Vec<Vec3> = (0..n).map(|k| {
        let t = TAU * k as f64 / n as f64;
        Vec3::new(r * t.cos(), r * t.sin(), 0.0)
    }).collect();
    let res = |sigma: f64| curvature_residual(&circle, true, |_| Vec3::new(0.0, 0.0, sigma / (2.0 * r))).unwrap().max_residual;
    let (plus, minus) = (res(1.0), res(-1.0));
    let best = plus.min(minus);
    assert!(best <= 1e-8 / r, "{plus} {minus}");
    assert!((plus.max(minus) - 2.0 / r).abs() < 1e-6 / r);
    let free = curvature_residual(&circle, true, |_| Vec3::zeros()).unwrap().max_residual;
    assert!((free - 1.0 / r).abs() < 1e-8 / r);
    let dup = vec![Vec3::zeros(), Vec3::zeros(), Vec3::x()];
    assert!(curvature_residual(&dup, false, |_| Vec3::zeros()).is_err());
}

#[test]
fn loop_separation_of_coaxial_rings() {
    let mut s = VortexSystem::circle(Vec3::zeros(), 0.3, Vec3::z(), 64, 1.0);
    s.merge(&VortexSystem::circle(Vec3::new(0.0, 0.0, 0.05), 0.3, Vec3::z(), 64, 1.0));
    assert!((loop_separation(&s) - 0.05).abs() < 1e-12);
}

#[test]
fn sweep_of_nothing_is_zero() {
    let cfg = SweepConfig {
        bundle: None,
        momentum: [0.0; 3],
        regime: Regime::S2,
        schedule: Schedule::default(),
        levels: vec![Level { eps: 0.05, n: 9 }, Level { eps: 0.1, n: 9 }],
        mu: 0.5,
        reference_rings: 10,
    };
    let rep = gamma_sweep(&cfg).unwrap();
    assert_eq!(rep.limit, 0.0);
    assert_eq!(rep.rows[0].eps, 0.1);
    for r in &rep.rows {
        assert_eq!((r.energy, r.gap), (0.0, 0.0));
    }
}

#[test]
fn bundle_momentum_matches_thin_ring_inductance() {
    // free-space energy of a uniform-current ring: R (ln(8R/a) - 7/4) F^2
    let b = RingBundle { center: [0.5; 3], radius: 0.15, axis: [0.0, 0.0, 1.0], cross_section: 0.04, flux: 1.0 };
    let m = super::sweep::bundle_momentum_for_tests(&b, 65, 120).unwrap() / (2.0 * PI * PI);
    let expect = b.radius * ((8.0 * b.radius / b.cross_section).ln() - 1.75);
    assert!((m / expect - 1.0).abs() < 0.15, "{m} vs {expect}");
}
