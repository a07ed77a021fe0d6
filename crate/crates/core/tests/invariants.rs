use gl3d::binio::{read_field, write_field, Field};
use gl3d::dec::{Codifferential, ExteriorDerivative};
use gl3d::extract::{extract_vorticity, CoarseLattice};
use gl3d::mincon::{minimal_connection, ConnectionMode};
use gl3d::potentials::{hodge_decompose, linking_number, PoissonConfig};
use gl3d::recovery::{recovery_field, RecoveryParams, Regime};
use gl3d::{Boundary, ComplexField, Form0, Form1, Form2, GridSpec, Vec3, VortexSystem};
use num_complex::Complex64;
use proptest::prelude::*;

fn unit_box(n: usize) -> GridSpec {
    GridSpec::new([n; 3], 1.0 / (n - 1) as f64, [0.0; 3], Boundary::Box).unwrap()
}

fn point() -> impl Strategy<Value = Vec3> {
    (0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// A column through the interior of a coarse face shows up once per
    /// horizontal layer, with its sign.
    #[test]
    fn synthesized_column_is_extracted_per_layer(i in 0usize..16, j in 0usize..16, up in any::<bool>()) {
        let g = unit_box(17);
        let (x, y) = ((i as f64 + 0.5) / 16.0, (j as f64 + 0.5) / 16.0);
        let (a, b) = (Vec3::new(x, y, 0.0), Vec3::new(x, y, 1.0));
        let gamma = if up { VortexSystem::line(a, b, 1.0) } else { VortexSystem::line(b, a, 1.0) };
        let u = recovery_field(g, &gamma, None, &RecoveryParams::new(0.05, Regime::S2)).unwrap().u;
        let lat = CoarseLattice::new(g, 4, [0; 3]).unwrap();
        let nu = extract_vorticity(&u, &lat, 1e-6).unwrap();
        prop_assert_eq!(nu.dual_edges.len(), lat.counts[2]);
        for e in &nu.dual_edges {
            prop_assert_eq!((e.i, e.j, e.axis), (i / 4, j / 4, 2));
            prop_assert_eq!(e.weight, if up { 1 } else { -1 });
        }
        prop_assert!(nu.as_form2().unwrap().d().max_abs() < 1e-9);
    }

    /// Any assignment costs at least the minimal connection.
    #[test]
    fn minimal_connection_beats_the_identity_pairing(
        pts in prop::collection::vec((point(), point()), 1..12),
    ) {
        let (pos, neg): (Vec<Vec3>, Vec<Vec3>) = pts.into_iter().unzip();
        let c = minimal_connection(&pos, &neg, &ConnectionMode::Balanced).unwrap();
        let identity: f64 = pos.iter().zip(&neg).map(|(p, n)| (p - n).norm()).sum();
        prop_assert!(c.cost <= identity + 1e-12);
        prop_assert_eq!(c.links.len(), pos.len());
        let total: f64 = c.links.iter().map(|l| l.segment.length()).sum();
        prop_assert!((total - c.cost).abs() <= 1e-12 * c.cost.max(1.0));
    }

    /// A ring links a square probe around its rim once, and a probe
    /// outside it not at all.
    #[test]
    fn ring_links_rim_probe(r in 0.1..0.3f64, zc in 0.3..0.7f64) {
        let ring = VortexSystem::circle(Vec3::new(0.5, 0.5, zc), r, Vec3::z(), 96, 1.0);
        let d = 0.05;
        let probe = |x0: f64| vec![
            Vec3::new(x0 - d, 0.5, zc - d),
            Vec3::new(x0 + d, 0.5, zc - d),
            Vec3::new(x0 + d, 0.5, zc + d),
            Vec3::new(x0 - d, 0.5, zc + d),
        ];
        prop_assert_eq!(linking_number(&probe(0.5 + r), &ring).unwrap().value.abs(), 1);
        prop_assert_eq!(linking_number(&probe(0.5 + r + 3.0 * d), &ring).unwrap().value, 0);
    }

    /// Hodge parts of `d f + d* b` on a small torus reassemble the input.
    #[test]
    fn hodge_parts_reassemble(seed in any::<u64>()) {
        let g = GridSpec::new([8; 3], 0.125, [0.0; 3], Boundary::Periodic).unwrap();
        let wave = |i: usize, s: u64| ((i as u64 ^ s) as f64 * 0.618).sin();
        let f = Form0::from_fn(g, |i| wave(i, seed));
        let b = Form2::from_fn(g, |a, i| wave(3 * i + a, seed.rotate_left(7)));
        let mut p = f.d();
        p.axpy(1.0, &b.codiff());
        let parts = hodge_decompose(&p, &PoissonConfig::default()).unwrap();
        let rep = parts.report(&p);
        prop_assert!(rep.residual < 1e-10);
        prop_assert!(rep.orthogonality.iter().all(|o| *o < 1e-10));
    }

    /// Binary fields read back bit for bit; the origin is not part of the
    /// format and reads back as zero.
    #[test]
    fn binary_fields_round_trip(vals in prop::collection::vec(-1e6..1e6f64, 3 * 60)) {
        let g = GridSpec::new([5, 4, 3], 0.25, [0.0; 3], Boundary::Box).unwrap();
        let u = ComplexField { grid: g, data: (0..60).map(|k| Complex64::new(vals[k], vals[60 + k])).collect() };
        let w = Form1::from_fn(g, |a, i| vals[(a * 60 + i) % vals.len()]);
        for field in [Field::Complex(u), Field::Form1(w)] {
            let mut buf = Vec::new();
            write_field(&mut buf, &field).unwrap();
            prop_assert_eq!(read_field(buf.as_slice()).unwrap(), field);
        }
    }
}
