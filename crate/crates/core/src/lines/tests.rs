use super::*;
use crate::pl::{triangulate_cubes, unit_block};
use crate::rational::{q3, qr};

/// `p = (v x x) / 2`, whose curl is the constant `v`.
fn swirl(mesh: crate::pl::RationalSimplicialMesh, v: [Q; 3]) -> PLOneForm {
    let h = qr(1, 2);
    let a = [
        [q(0), -&v[2] * &h, &v[1] * &h],
        [&v[2] * &h, q(0), -&v[0] * &h],
        [-&v[1] * &h, &v[0] * &h, q(0)],
    ];
    PLOneForm::from_linear(mesh, a, rq::zero3())
}

fn unit_cube() -> crate::pl::RationalSimplicialMesh {
    triangulate_cubes(&[[0, 0, 0]], q(1)).unwrap()
}

fn tri(a: [i64; 3], b: [i64; 3], c: [i64; 3]) -> [Q3; 3] {
    [q3(a), q3(b), q3(c)]
}

fn centroid(t: &[Q3]) -> Q3 {
    let s = t.iter().fold(rq::zero3(), |acc, x| rq::add(&acc, x));
    rq::scale(&qr(1, t.len() as i64), &s)
}

#[test]
fn single_point_is_the_centroid() {
    let t = tri([0, 0, 0], [3, 0, 0], [0, 2, 1]);
    assert_eq!(place_face_points(&t, 1).unwrap(), vec![centroid(&t)]);
}

#[test]
fn four_points_fill_the_two_by_two_partition() {
    let t = tri([0, 0, 0], [4, 0, 0], [1, 3, 2]);
    let m = |a: &Q3, b: &Q3| rq::lerp(a, b, &qr(1, 2));
    let (ab, bc, ca) = (m(&t[0], &t[1]), m(&t[1], &t[2]), m(&t[2], &t[0]));
    let mut expect = vec![
        centroid(&[t[0].clone(), ab.clone(), ca.clone()]),
        centroid(&[ab.clone(), t[1].clone(), bc.clone()]),
        centroid(&[ca.clone(), bc.clone(), t[2].clone()]),
        centroid(&[ab, bc, ca]),
    ];
    let mut got = place_face_points(&t, 4).unwrap();
    expect.sort();
    got.sort();
    assert_eq!(got, expect);
}

fn min_altitude(t: &[Q3; 3]) -> f64 {
    let p = t.clone().map(|x| rq::to_vec3(&x));
    let area2 = (p[1] - p[0]).cross(&(p[2] - p[0])).norm();
    let longest = (0..3).map(|i| (p[(i + 1) % 3] - p[i]).norm()).fold(0.0, f64::max);
    area2 / longest
}

#[test]
fn five_points_are_spread_and_deterministic() {
    let t = tri([0, 0, 0], [1, 0, 0], [0, 1, 0]);
    let a = place_face_points(&t, 5).unwrap();
    assert_eq!(a, place_face_points(&t, 5).unwrap());
    assert_eq!(a.len(), 5);
    let f: Vec<Vec3> = a.iter().map(rq::to_vec3).collect();
    let bound = min_altitude(&t) / 9.0;
    for i in 0..5 {
        assert!(f[i].x > 0.0 && f[i].y > 0.0 && f[i].x + f[i].y < 1.0);
        for j in 0..i {
            assert!((f[i] - f[j]).norm() >= bound - 1e-15);
        }
    }
}

#[test]
fn spread_bound_holds_for_many_counts() {
    let t = tri([0, 0, 0], [5, 1, 0], [2, 4, 3]);
    for m in 1..40u64 {
        let a = place_face_points(&t, m).unwrap();
        let l = (m as f64).sqrt().ceil();
        let bound = min_altitude(&t) / (3.0 * l);
        for i in 0..a.len() {
            for j in 0..i {
                let d = (rq::to_vec3(&a[i]) - rq::to_vec3(&a[j])).norm();
                assert!(d >= bound - 1e-12, "m={m}");
            }
        }
    }
}

/// Fibre tracing oracle: sample the shadow of simplex `i` along `v` and
/// record which faces each fibre enters and leaves through.
fn traced_fluxes(p: &PLOneForm, i: usize, samples: usize) -> BTreeMap<(usize, usize), f64> {
    let v = p.curl(i);
    let vn = v.normalize();
    let pts: Vec<Vec3> = p.mesh.points(i).iter().map(|x| rq::to_vec3(x)).collect();
    let helper = if vn.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let e1 = vn.cross(&helper).normalize();
    let e2 = vn.cross(&e1);
    let (mut lo, mut hi) = ([f64::MAX; 2], [f64::MIN; 2]);
    for x in &pts {
        let c = [x.dot(&e1), x.dot(&e2)];
        for a in 0..2 {
            lo[a] = lo[a].min(c[a]);
            hi[a] = hi[a].max(c[a]);
        }
    }
    let step = [(hi[0] - lo[0]) / samples as f64, (hi[1] - lo[1]) / samples as f64];
    let cell = step[0] * step[1];
    let mut out = BTreeMap::new();
    for s in 0..samples {
        for t in 0..samples {
            let base = e1 * (lo[0] + (s as f64 + 0.5) * step[0]) + e2 * (lo[1] + (t as f64 + 0.5) * step[1]);
            let (mut enter, mut exit) = ((f64::MIN, 9), (f64::MAX, 9));
            let mut inside = true;
            for j in 0..4 {
                let face: Vec<Vec3> = (0..4).filter(|&k| k != j).map(|k| pts[k]).collect();
                let mut n = (face[1] - face[0]).cross(&(face[2] - face[0]));
                if n.dot(&(pts[j] - face[0])) > 0.0 {
                    n = -n;
                }
                let denom = n.dot(&vn);
                let num = n.dot(&(face[0] - base));
                if denom.abs() < 1e-14 {
                    if num < 0.0 {
                        inside = false;
                    }
                    continue;
                }
                let tt = num / denom;
                if denom > 0.0 {
                    if tt < exit.0 {
                        exit = (tt, j);
                    }
                } else if tt > enter.0 {
                    enter = (tt, j);
                }
            }
            if inside && enter.0 < exit.0 {
                *out.entry((exit.1, enter.1)).or_insert(0.0) += cell * v.norm();
            }
        }
    }
    out
}

#[test]
fn sub_face_fluxes_match_fibre_tracing() {
    let v = [qr(1, 3), qr(-1, 5), qr(1, 2)];
    let p = swirl(unit_cube(), v);
    let (phi, subs) = flux_data(&p).unwrap();
    for i in 0..p.mesh.simplices.len() {
        let traced = traced_fluxes(&p, i, 600);
        let total: f64 = traced.values().sum();
        for s in subs.iter().filter(|s| s.simplex == i && s.phi.is_positive()) {
            let t = traced.get(&(s.j, s.k)).copied().unwrap_or(0.0);
            assert!((rq::to_f64(&s.phi) - t).abs() < 5e-3 * total.max(1e-3), "{} {} {}", i, s.j, s.k);
        }
        // outward fluxes of a constant field cancel
        let sum: Q = phi[i].iter().sum();
        assert!(sum.is_zero());
    }
}

#[test]
fn sub_face_fluxes_are_antisymmetric_and_divisible() {
    let p = swirl(unit_cube(), [q(0), q(0), qr(1, 2)]);
    let eta = qr(1, 2);
    let unit = flux_unit(&flux_data(&p).unwrap().1).unwrap();
    let n = (&unit / qr(1, 8)).to_integer().to_u64().unwrap();
    let data = quantize(&p, &eta, n).unwrap();
    assert_eq!(data.h, qr(1, 8));
    let by_key: HashMap<(usize, usize, usize), &SubFace> =
        data.sub_faces.iter().map(|s| ((s.simplex, s.j, s.k), s)).collect();
    for s in &data.sub_faces {
        let other = by_key[&(s.simplex, s.k, s.j)];
        assert_eq!(other.phi, -s.phi.clone());
        assert_eq!(q(s.m) * &data.h, s.phi);
    }
    for i in 0..data.phi.len() {
        for j in 0..4 {
            let m: i64 = data.sub_faces.iter().filter(|s| s.simplex == i && s.j == j).map(|s| s.m).sum();
            assert_eq!(q(m) * &data.h, data.phi[i][j]);
        }
    }
    for f in &data.faces {
        assert_eq!(f.points.len() as i64, f.m);
        assert!((f.ell - 1) * (f.ell - 1) < f.m && f.m <= f.ell * f.ell);
    }
}

#[test]
fn quantize_rejects_coarse_h() {
    let p = swirl(unit_cube(), [q(0), q(0), qr(1, 2)]);
    let err = quantize(&p, &qr(1, 10), 1).unwrap_err();
    assert!(matches!(err, Error::ParameterRejection(_)));
}

#[test]
fn zero_form_gives_empty_data_and_system() {
    let p = swirl(unit_cube(), [q(0), q(0), q(0)]);
    let data = quantize(&p, &qr(1, 5), 1).unwrap();
    assert!(data.faces.is_empty() && data.sub_faces.is_empty());
    assert!(build_interior_segments(&p, &data).unwrap().is_empty());
    let d = discretize(&p, &DiscretizeParams { eta: 0.2, h: 0.1, tol: 1e-3 }).unwrap();
    assert!(d.system.is_empty());
    let r = verify_properties(&d.system, &p, 0.2, &VerifyOptions::default()).unwrap();
    assert!(r.mass_ok && r.sep_ok && r.angle_ok);
    assert_eq!(r.w11_gap, 0.0);
}

#[test]
fn choose_n_respects_both_caps() {
    let unit = qr(1, 4);
    let eta = qr(1, 5);
    let n = choose_n(&unit, &eta, 1.0 / 16.0, 1e-3);
    assert_eq!(n, 7); // 0.25/7 < 0.04 * 0.999 < 0.25/6
    assert_eq!(choose_n(&unit, &qr(9, 10), 1.0 / 16.0, 1e-3), 4);
}

#[test]
fn frustum_single_pair() {
    let out = connect_frustum(&[q3([0, 0, 1])], &[q3([0, 0, 0])], true, 3).unwrap();
    assert_eq!(out, vec![LineSegment { a: q3([0, 0, 0]), b: q3([0, 0, 1]), tag: 3 }]);
    let back = connect_frustum(&[q3([0, 0, 1])], &[q3([0, 0, 0])], false, 3).unwrap();
    assert_eq!(back[0].a, q3([0, 0, 1]));
    assert!(connect_frustum(&[], &[], true, 0).unwrap().is_empty());
    assert!(matches!(connect_frustum(&[q3([0, 0, 1])], &[], true, 0), Err(Error::InvalidInput(_))));
}

#[test]
fn frustum_matching_is_minimal() {
    let outer = [q3([0, 0, 0]), q3([3, 0, 0])];
    let inner = [q3([3, 1, 0]), q3([0, 1, 0])];
    let out = connect_frustum(&outer, &inner, true, 0).unwrap();
    let len = |s: &[LineSegment]| s.iter().map(|l| (rq::to_vec3(&l.b) - rq::to_vec3(&l.a)).norm()).sum::<f64>();
    let brute = [[0, 1], [1, 0]]
        .iter()
        .map(|perm| (0..2).map(|i| (rq::to_vec3(&outer[i]) - rq::to_vec3(&inner[perm[i]])).norm()).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    assert!((len(&out) - brute).abs() < 1e-12);
}

#[test]
fn assemble_handles_empty_and_rejects_dangling_ends() {
    let g = assemble(&[], 0.5, &HashSet::new()).unwrap();
    assert!(g.is_empty());
    let seg = LineSegment { a: q3([0, 0, 0]), b: q3([1, 0, 0]), tag: 0 };
    let err = assemble(&[seg.clone()], 0.5, &HashSet::new()).unwrap_err();
    assert!(matches!(err, Error::Assembly(_)));
    let ends: HashSet<Q3> = [seg.a.clone(), seg.b.clone()].into_iter().collect();
    assert_eq!(assemble(&[seg], 0.5, &ends).unwrap().loops, vec![vec![0]]);
}

fn params(eta: f64, h: f64) -> DiscretizeParams {
    DiscretizeParams { eta, h, tol: 1e-3 }
}

fn check_structure(p: &PLOneForm, d: &Discretization) {
    let sys = &d.system;
    // interior segments parallel to the local vorticity
    for (s, seg) in d.exact_segments.iter().enumerate() {
        if seg.tag % 5 == 0 {
            let v = p.curl(seg.tag as usize / 5);
            let t = sys.segments[s].tangent();
            assert!(t.cross(&v).norm() <= 1e-12 * v.norm());
            assert!(t.dot(&v) > 0.0);
        }
    }
    // signed degree zero away from boundary face points
    let mut deg: HashMap<&Q3, i64> = HashMap::new();
    for seg in &d.exact_segments {
        *deg.entry(&seg.a).or_default() -= 1;
        *deg.entry(&seg.b).or_default() += 1;
    }
    let mut boundary = HashSet::new();
    for f in &d.data.faces {
        if p.mesh.faces[f.face].is_boundary() {
            boundary.extend(f.points.iter());
        }
    }
    for (x, k) in deg {
        assert!(k == 0 || boundary.contains(x));
    }
    let used: usize = sys.loops.iter().map(Vec::len).sum();
    assert_eq!(used, sys.segments.len());
}

#[test]
fn constant_vertical_vorticity_crosses_the_cube() {
    let p = swirl(unit_cube(), [q(0), q(0), qr(1, 2)]);
    let d = discretize(&p, &params(0.3, 1.0 / 16.0)).unwrap();
    check_structure(&p, &d);
    let sys = &d.system;
    // flux 1/2 through the bottom face
    assert_eq!(sys.loops.len() as f64, (0.5 / sys.h).round());
    for l in &sys.loops {
        let first = sys.segments[l[0]].start();
        let last = sys.segments[*l.last().unwrap()].end();
        assert!(first.z.abs() < 1e-15 && (last.z - 1.0).abs() < 1e-15);
    }
}

#[test]
fn oblique_vorticity_on_a_block() {
    let p = swirl(unit_block(2).unwrap(), [qr(1, 4), qr(-1, 4), qr(1, 2)]);
    let d = discretize(&p, &params(0.25, 0.02)).unwrap();
    assert_eq!(d.data.h, qr(1, 96));
    check_structure(&p, &d);
    let r = verify_properties(&d.system, &p, 0.25, &VerifyOptions { grid: 9, ..Default::default() }).unwrap();
    assert!(r.sep_ok && r.angle_ok, "{r:?}");
    assert!(r.mass >= r.tv * (1.0 - 1e-9));
}

#[test]
fn reversing_the_form_negates_the_data() {
    let v = [qr(1, 5), q(0), qr(1, 2)];
    let eta = qr(3, 10);
    let a = quantize(&swirl(unit_cube(), v.clone()), &eta, 40).unwrap();
    let b = quantize(&swirl(unit_cube(), v.map(|x| -x)), &eta, 40).unwrap();
    assert_eq!(a.h, b.h);
    for (fa, fb) in a.faces.iter().zip(&b.faces) {
        assert_eq!((fa.face, &fa.points), (fb.face, &fb.points));
        assert_eq!(fa.phi, -fb.phi.clone());
    }
    let mut sa: Vec<_> = a.sub_faces.iter().map(|s| (s.simplex, s.j, s.k, s.phi.clone())).collect();
    let mut sb: Vec<_> = b.sub_faces.iter().map(|s| (s.simplex, s.j, s.k, -s.phi.clone())).collect();
    sa.sort();
    sb.sort();
    assert_eq!(sa, sb);
}

#[test]
fn bucketed_separation_matches_brute_force() {
    use rand::{Rng, SeedableRng};
    let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let mut g = VortexSystem::new(0.1);
    for _ in 0..300 {
        let a = Vec3::new(r.random(), r.random(), r.random());
        let b = a + Vec3::new(r.random_range(-0.1..0.1), r.random_range(-0.1..0.1), r.random_range(-0.1..0.1));
        g.push_polyline(&[a, b], false);
    }
    let mut brute = f64::INFINITY;
    for i in 0..g.segments.len() {
        for j in 0..i {
            let (s, t) = (&g.segments[i], &g.segments[j]);
            brute = brute.min(segment_distance(s.start(), s.end(), t.start(), t.end()));
        }
    }
    assert_eq!(min_separation(&g), brute);
}
