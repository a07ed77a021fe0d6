//! Quantized line systems carrying the vorticity of a rational PL 1-form.
//!
//! Each simplex is shrunk about its barycenter by `1 - eta`. Inside the
//! shrunken simplex lines run exactly parallel to the constant vorticity
//! vector; the frusta between a face and its shrunken copy hold minimal
//! connections between the quantized points on the two bases. All points
//! are exact rationals so shared face points coincide bit for bit.

use crate::error::{Error, Result};
use crate::geom::{segment_distance, Segment, Vec3};
use crate::grid::{Boundary, Form2, GridSpec};
use crate::mincon::flat::{flat_norm_form2, FlatNormOptions};
use crate::mincon::{minimal_connection, ConnectionMode, Endpoint};
use crate::pl::PLOneForm;
use crate::potentials::{rasterize, RasterPolicy};
use crate::rational::{self as rq, q, Q, Q3};
use crate::vortex::VortexSystem;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap, HashSet};

type P2 = [Q; 2];

/// Portion `T_ijk` of face `j` of simplex `i` joined to face `k` by flux lines.
#[derive(Clone, Debug, PartialEq)]
pub struct SubFace {
    pub simplex: usize,
    pub j: usize,
    pub k: usize,
    /// Triangle in face `j`, oriented like the outward face.
    pub triangle: [Q3; 3],
    pub phi: Q,
    pub m: i64,
}

/// Quantized data of one mesh face, in its canonical orientation.
#[derive(Clone, Debug, PartialEq)]
pub struct FacePoints {
    pub face: usize,
    pub phi: Q,
    pub m: i64,
    pub ell: i64,
    pub points: Vec<Q3>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuantizedFaceData {
    pub eta: Q,
    /// Reciprocal of the least common denominator of the sub-face fluxes.
    pub phi_unit: Q,
    pub n: u64,
    pub h: Q,
    /// Outward flux `phi_ij` per simplex and local face.
    pub phi: Vec<[Q; 4]>,
    pub faces: Vec<FacePoints>,
    pub sub_faces: Vec<SubFace>,
}

/// Oblique projection along `v` onto the coordinate plane of its largest
/// component; fibres coincide with those of the orthogonal projection.
struct Projector {
    v: Q3,
    drop: usize,
    keep: [usize; 2],
}

impl Projector {
    fn new(v: &Q3) -> Self {
        let drop = (0..3).max_by(|&a, &b| v[a].abs().cmp(&v[b].abs()).then(b.cmp(&a))).unwrap();
        let keep = match drop {
            0 => [1, 2],
            1 => [0, 2],
            _ => [0, 1],
        };
        Self { v: v.clone(), drop, keep }
    }

    fn project(&self, x: &Q3) -> P2 {
        let t = &x[self.drop] / &self.v[self.drop];
        self.keep.map(|a| &x[a] - &t * &self.v[a])
    }

    /// Point on the fibre through `y` lying in the plane `{x : n.(x - a) = 0}`.
    fn lift(&self, y: &P2, a: &Q3, n: &Q3) -> Q3 {
        let mut base = rq::zero3();
        base[self.keep[0]] = y[0].clone();
        base[self.keep[1]] = y[1].clone();
        let t = rq::dot(n, &rq::sub(a, &base)) / rq::dot(n, &self.v);
        rq::add(&base, &rq::scale(&t, &self.v))
    }

    /// Intersection of the fibre through `x` with the plane.
    fn slide(&self, x: &Q3, a: &Q3, n: &Q3) -> Q3 {
        let t = rq::dot(n, &rq::sub(a, x)) / rq::dot(n, &self.v);
        rq::add(x, &rq::scale(&t, &self.v))
    }
}

fn cross2(o: &P2, a: &P2, b: &P2) -> Q {
    (&a[0] - &o[0]) * (&b[1] - &o[1]) - (&a[1] - &o[1]) * (&b[0] - &o[0])
}

fn signed_area2(poly: &[P2]) -> Q {
    let mut s = Q::zero();
    for i in 1..poly.len().saturating_sub(1) {
        s += cross2(&poly[0], &poly[i], &poly[i + 1]);
    }
    s / q(2)
}

/// Convex polygon `subject` clipped to the triangle `clip`.
fn clip_convex(subject: &[P2], clip: &[P2; 3]) -> Vec<P2> {
    let mut tri = clip.clone();
    if signed_area2(&tri).is_negative() {
        tri.swap(1, 2);
    }
    let mut out: Vec<P2> = subject.to_vec();
    for e in 0..3 {
        let (c1, c2) = (&tri[e], &tri[(e + 1) % 3]);
        let input = std::mem::take(&mut out);
        let n = input.len();
        for i in 0..n {
            let p = &input[i];
            let qv = &input[(i + 1) % n];
            let sp = cross2(c1, c2, p);
            let sq = cross2(c1, c2, qv);
            let pin = !sp.is_negative();
            let qin = !sq.is_negative();
            if pin {
                out.push(p.clone());
            }
            if pin != qin {
                let t = &sp / (&sp - &sq);
                out.push([&p[0] + &t * (&qv[0] - &p[0]), &p[1] + &t * (&qv[1] - &p[1])]);
            }
        }
        if out.is_empty() {
            break;
        }
    }
    simplify(out)
}

/// Drop repeated and collinear vertices.
fn simplify(mut poly: Vec<P2>) -> Vec<P2> {
    loop {
        let n = poly.len();
        if n < 3 {
            return poly;
        }
        let mut removed = false;
        for i in 0..n {
            let prev = &poly[(i + n - 1) % n];
            let next = &poly[(i + 1) % n];
            if poly[i] == *next || cross2(prev, &poly[i], next).is_zero() {
                poly.remove(i);
                removed = true;
                break;
            }
        }
        if !removed {
            return poly;
        }
    }
}

fn orient_like(tri: [Q3; 3], normal: &Q3) -> [Q3; 3] {
    let n = rq::cross(&rq::sub(&tri[1], &tri[0]), &rq::sub(&tri[2], &tri[0]));
    if rq::dot(&n, normal).is_negative() {
        let [a, b, c] = tri;
        [a, c, b]
    } else {
        tri
    }
}

fn face_triangle(p: &PLOneForm, i: usize, j: usize) -> [Q3; 3] {
    p.mesh.oriented_face(i, j).map(|v| p.mesh.vertices[v].clone())
}

fn triangle_normal(t: &[Q3; 3]) -> Q3 {
    rq::cross(&rq::sub(&t[1], &t[0]), &rq::sub(&t[2], &t[0]))
}

/// Flux data before quantization: outward face fluxes and sub-faces.
pub fn flux_data(p: &PLOneForm) -> Result<(Vec<[Q; 4]>, Vec<SubFace>)> {
    let mesh = &p.mesh;
    let per_simplex: Vec<Result<([Q; 4], Vec<SubFace>)>> = (0..mesh.simplices.len())
        .into_par_iter()
        .map(|i| {
            let v = p.curl_exact(i)?;
            let phi: [Q; 4] = [0, 1, 2, 3].map(|j| rq::dot(&v, &mesh.area_vector(i, j)));
            let mut subs = Vec::new();
            if v.iter().all(Zero::is_zero) {
                return Ok((phi, subs));
            }
            let proj = Projector::new(&v);
            for j in 0..4 {
                if phi[j].is_zero() {
                    continue;
                }
                let tj = face_triangle(p, i, j);
                let nj = triangle_normal(&tj);
                let pj: [P2; 3] = [0, 1, 2].map(|a| proj.project(&tj[a]));
                let area_j = signed_area2(&pj).abs();
                let mut total = Q::zero();
                for k in 0..4 {
                    if k == j || phi[k].is_zero() || phi[k].is_positive() == phi[j].is_positive() {
                        continue;
                    }
                    let tk = face_triangle(p, i, k);
                    let pk: [P2; 3] = [0, 1, 2].map(|a| proj.project(&tk[a]));
                    let poly = clip_convex(&pj, &pk);
                    let area = signed_area2(&poly).abs();
                    if area.is_zero() {
                        continue;
                    }
                    if poly.len() != 3 {
                        return Err(Error::Construction(format!(
                            "flux-line overlap of faces {j},{k} in simplex {i} has {} corners",
                            poly.len()
                        )));
                    }
                    let tri = [0, 1, 2].map(|a| proj.lift(&poly[a], &tj[0], &nj));
                    let phi_jk = &phi[j] * &area / &area_j;
                    total += &phi_jk;
                    subs.push(SubFace { simplex: i, j, k, triangle: orient_like(tri, &nj), phi: phi_jk, m: 0 });
                }
                if total != phi[j] {
                    return Err(Error::Construction(format!("sub-face fluxes of face {j} in simplex {i} do not add up")));
                }
            }
            Ok((phi, subs))
        })
        .collect();
    let mut phis = Vec::with_capacity(per_simplex.len());
    let mut subs = Vec::new();
    for r in per_simplex {
        let (a, b) = r?;
        phis.push(a);
        subs.extend(b);
    }
    Ok((phis, subs))
}

/// `1 / lcm(denominators)` of the nonzero sub-face fluxes, `None` when `dp = 0`.
pub fn flux_unit(subs: &[SubFace]) -> Option<Q> {
    let mut l = BigInt::one();
    let mut any = false;
    for s in subs {
        if !s.phi.is_zero() {
            l = l.lcm(s.phi.denom());
            any = true;
        }
    }
    any.then(|| Q::new(BigInt::one(), l))
}

/// Smallest `n` with `phi / n <= min(h_request, eta^2 (1 - tol))`.
pub fn choose_n(phi_unit: &Q, eta: &Q, h_request: f64, tol: f64) -> u64 {
    let cap = h_request.min(rq::to_f64(&(eta * eta)) * (1.0 - tol));
    let phi = rq::to_f64(phi_unit);
    let mut n = (phi / cap).ceil().max(1.0) as u64;
    while n > 1 && phi / ((n - 1) as f64) <= cap {
        n -= 1;
    }
    while phi / n as f64 > cap {
        n += 1;
    }
    n
}

/// Centroid-outward selection of `m` barycenters from the `l^2` similar
/// sub-triangles of `tri`, with `(l - 1)^2 < m <= l^2`.
pub fn place_face_points(tri: &[Q3; 3], m: u64) -> Result<Vec<Q3>> {
    if m == 0 {
        return Err(Error::InvalidParameter("at least one point required".into()));
    }
    let ell = (m as f64).sqrt().ceil() as i64;
    let ell = (ell - 1..=ell + 1).find(|&l| l >= 1 && ((l - 1) * (l - 1)) < m as i64 && m as i64 <= l * l).unwrap();
    let e1 = rq::sub(&tri[1], &tri[0]);
    let e2 = rq::sub(&tri[2], &tri[0]);
    let third = rq::qr(1, 3);
    let centroid = rq::add(&tri[0], &rq::scale(&third, &rq::add(&e1, &e2)));
    let den = 3 * ell;
    let mut cands: Vec<(Q, (i64, i64, i64), Q3)> = Vec::new();
    for i in 0..ell {
        for j in 0..ell - i {
            // upward (3i+1, 3j+1)/3l, downward (3i+2, 3j+2)/3l
            for (up, (a, b)) in [(0, (3 * i + 1, 3 * j + 1)), (1, (3 * i + 2, 3 * j + 2))] {
                if up == 1 && i + j > ell - 2 {
                    continue;
                }
                let x = rq::add(
                    &tri[0],
                    &rq::add(&rq::scale(&rq::qr(a, den), &e1), &rq::scale(&rq::qr(b, den), &e2)),
                );
                let d = rq::sub(&x, &centroid);
                cands.push((rq::dot(&d, &d), (up, i, j), x));
            }
        }
    }
    cands.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(cands.into_iter().take(m as usize).map(|c| c.2).collect())
}

fn shrink(x: &Q3, b: &Q3, eta: &Q) -> Q3 {
    // (1 - eta) x + eta b
    rq::lerp(x, b, eta)
}

/// Flux data quantized with `h = phi_unit / n`.
pub fn quantize(p: &PLOneForm, eta: &Q, n: u64) -> Result<QuantizedFaceData> {
    if !(eta.is_positive() && *eta < Q::one()) {
        return Err(Error::InvalidParameter("eta must lie in (0, 1)".into()));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    let (phi, mut subs) = flux_data(p)?;
    let Some(phi_unit) = flux_unit(&subs) else {
        return Ok(QuantizedFaceData {
            eta: eta.clone(),
            phi_unit: Q::one(),
            n,
            h: Q::one() / q(n as i64),
            phi,
            faces: Vec::new(),
            sub_faces: Vec::new(),
        });
    };
    let h = &phi_unit / q(n as i64);
    if h >= eta * eta {
        return Err(Error::ParameterRejection(format!(
            "h = {} is not below eta^2 = {}; raise n",
            rq::to_f64(&h),
            rq::to_f64(&(eta * eta))
        )));
    }
    let int_of = |x: &Q| -> Result<i64> {
        let r = x / &h;
        if !r.is_integer() {
            return Err(Error::Construction("flux is not a multiple of h".into()));
        }
        r.to_integer().to_i64().ok_or_else(|| Error::SizeLimit("too many quantized lines".into()))
    };
    for s in &mut subs {
        s.m = int_of(&s.phi)?;
    }
    let mesh = &p.mesh;
    let mut faces = Vec::new();
    for (fid, f) in mesh.faces.iter().enumerate() {
        let (i, j) = f.simplices[0];
        let canon = &phi[i][j] * q(mesh.simplex_faces[i][j].1 as i64);
        if canon.is_zero() {
            continue;
        }
        let m = int_of(&canon)?.abs();
        let tri = f.vertices.map(|v| mesh.vertices[v].clone());
        let points = place_face_points(&tri, m as u64)?;
        let ell = (1..).find(|&l| l * l >= m).unwrap();
        faces.push(FacePoints { face: fid, phi: canon, m, ell, points });
    }
    Ok(QuantizedFaceData { eta: eta.clone(), phi_unit, n, h, phi, faces, sub_faces: subs })
}

/// Oriented segment with exact endpoints and a region tag.
#[derive(Clone, Debug, PartialEq)]
pub struct LineSegment {
    pub a: Q3,
    pub b: Q3,
    pub tag: u32,
}

/// Region tags: `5 i` for the shrunken simplex, `5 i + 1 + j` for frustum `j`.
pub fn region_tag(simplex: usize, frustum: Option<usize>) -> u32 {
    (5 * simplex + frustum.map_or(0, |j| j + 1)) as u32
}

/// Points of every sub-face on the shrunken faces: selected on exit parts,
/// slid along the fibres onto the matching entry parts.
fn sub_face_points(p: &PLOneForm, data: &QuantizedFaceData) -> Result<HashMap<(usize, usize, usize), Vec<Q3>>> {
    let mut out = HashMap::new();
    let index: HashMap<(usize, usize, usize), &SubFace> =
        data.sub_faces.iter().map(|s| ((s.simplex, s.j, s.k), s)).collect();
    for s in data.sub_faces.iter().filter(|s| s.phi.is_positive()) {
        let b = p.mesh.barycenter(s.simplex);
        let shrunk = s.triangle.clone().map(|x| shrink(&x, &b, &data.eta));
        let pts = place_face_points(&shrunk, s.m as u64)?;
        let partner = index.get(&(s.simplex, s.k, s.j)).ok_or_else(|| {
            Error::Construction(format!("sub-face {},{},{} has no entry partner", s.simplex, s.k, s.j))
        })?;
        if partner.m != -s.m {
            return Err(Error::Construction(format!("sub-face pair in simplex {} is unbalanced", s.simplex)));
        }
        let proj = Projector::new(&p.curl_exact(s.simplex)?);
        let pt = partner.triangle.clone().map(|x| shrink(&x, &b, &data.eta));
        let n = triangle_normal(&pt);
        let slid = pts.iter().map(|x| proj.slide(x, &pt[0], &n)).collect();
        out.insert((s.simplex, s.j, s.k), pts);
        out.insert((s.simplex, s.k, s.j), slid);
    }
    Ok(out)
}

/// Fibre segments inside the shrunken simplices, from entry to exit point.
pub fn build_interior_segments(p: &PLOneForm, data: &QuantizedFaceData) -> Result<Vec<LineSegment>> {
    let pts = sub_face_points(p, data)?;
    let mut out = Vec::new();
    for s in data.sub_faces.iter().filter(|s| s.phi.is_positive()) {
        let exit = &pts[&(s.simplex, s.j, s.k)];
        let entry = &pts[&(s.simplex, s.k, s.j)];
        for (a, b) in entry.iter().zip(exit) {
            out.push(LineSegment { a: a.clone(), b: b.clone(), tag: region_tag(s.simplex, None) });
        }
    }
    Ok(out)
}

/// Minimal connection in a frustum between the outer base points and the
/// inner base points; `outward` orients segments from inner to outer.
pub fn connect_frustum(outer: &[Q3], inner: &[Q3], outward: bool, tag: u32) -> Result<Vec<LineSegment>> {
    if outer.len() != inner.len() {
        return Err(Error::InvalidInput(format!(
            "frustum bases carry {} and {} points",
            outer.len(),
            inner.len()
        )));
    }
    if outer.is_empty() {
        return Ok(Vec::new());
    }
    let (pos, neg) = if outward { (outer, inner) } else { (inner, outer) };
    let pf: Vec<Vec3> = pos.iter().map(rq::to_vec3).collect();
    let nf: Vec<Vec3> = neg.iter().map(rq::to_vec3).collect();
    let conn = minimal_connection(&pf, &nf, &ConnectionMode::Balanced)?;
    let mut out = Vec::with_capacity(conn.links.len());
    for l in &conn.links {
        let (Endpoint::Negative { index: a }, Endpoint::Positive { index: b }) = (&l.from, &l.to) else {
            return Err(Error::Construction("balanced connection produced a boundary link".into()));
        };
        out.push(LineSegment { a: neg[*a].clone(), b: pos[*b].clone(), tag });
    }
    Ok(out)
}

/// Frustum connections for every face with nonzero flux.
pub fn build_frustum_segments(p: &PLOneForm, data: &QuantizedFaceData) -> Result<Vec<LineSegment>> {
    let sub_pts = sub_face_points(p, data)?;
    let face_pts: HashMap<usize, &FacePoints> = data.faces.iter().map(|f| (f.face, f)).collect();
    let mut jobs = Vec::new();
    for i in 0..p.mesh.simplices.len() {
        for j in 0..4 {
            if data.phi[i][j].is_zero() {
                continue;
            }
            let (fid, _) = p.mesh.simplex_faces[i][j];
            let outer = face_pts
                .get(&fid)
                .ok_or_else(|| Error::Construction(format!("face {fid} carries flux but no points")))?
                .points
                .clone();
            let mut inner = Vec::new();
            for k in 0..4 {
                if let Some(v) = sub_pts.get(&(i, j, k)) {
                    inner.extend(v.iter().cloned());
                }
            }
            jobs.push((i, j, outer, inner));
        }
    }
    let parts: Vec<Result<Vec<LineSegment>>> = jobs
        .into_par_iter()
        .map(|(i, j, outer, inner)| {
            connect_frustum(&outer, &inner, data.phi[i][j].is_positive(), region_tag(i, Some(j)))
                .map_err(|e| Error::Construction(format!("frustum {i},{j}: {e}")))
        })
        .collect();
    let mut out = Vec::new();
    for part in parts {
        out.extend(part?);
    }
    Ok(out)
}

/// Walk segments into polylines. Endpoints of nonzero signed degree are
/// allowed only in `boundary`.
pub fn assemble(segments: &[LineSegment], h: f64, boundary: &HashSet<Q3>) -> Result<VortexSystem> {
    let mut outs: BTreeMap<&Q3, Vec<usize>> = BTreeMap::new();
    let mut ins: BTreeMap<&Q3, Vec<usize>> = BTreeMap::new();
    for (s, seg) in segments.iter().enumerate() {
        outs.entry(&seg.a).or_default().push(s);
        ins.entry(&seg.b).or_default().push(s);
    }
    let mut bad = Vec::new();
    let keys: HashSet<&Q3> = outs.keys().chain(ins.keys()).copied().collect();
    for k in &keys {
        let deg = ins.get(k).map_or(0, Vec::len) as i64 - outs.get(k).map_or(0, Vec::len) as i64;
        if deg != 0 && !boundary.contains(*k) {
            bad.push(rq::to_vec3(k));
        }
    }
    if !bad.is_empty() {
        bad.sort_by(|a, b| a.iter().partial_cmp(b.iter()).unwrap());
        return Err(Error::Assembly(format!("unmatched interior endpoints: {bad:?}")));
    }
    let fseg: Vec<Segment> = segments.iter().map(|s| Segment::new(rq::to_vec3(&s.a), rq::to_vec3(&s.b))).collect();
    // pair incoming with outgoing segments at each vertex by smallest turn
    let mut next = vec![usize::MAX; segments.len()];
    let mut has_prev = vec![false; segments.len()];
    for (k, incoming) in &ins {
        let Some(outgoing) = outs.get(k) else { continue };
        let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
        for &a in incoming {
            for &b in outgoing {
                pairs.push((-fseg[a].tangent().dot(&fseg[b].tangent()), a, b));
            }
        }
        pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2).cmp(&(y.1, y.2))));
        for (_, a, b) in pairs {
            if next[a] == usize::MAX && !has_prev[b] {
                next[a] = b;
                has_prev[b] = true;
            }
        }
    }
    let mut visited = vec![false; segments.len()];
    let mut loops = Vec::new();
    let starts: Vec<usize> = (0..segments.len()).filter(|&s| !has_prev[s]).collect();
    let others: Vec<usize> = (0..segments.len()).filter(|&s| has_prev[s]).collect();
    for s0 in starts.into_iter().chain(others) {
        if visited[s0] {
            continue;
        }
        let mut l = Vec::new();
        let mut s = s0;
        while s != usize::MAX && !visited[s] {
            visited[s] = true;
            l.push(s);
            s = next[s];
        }
        loops.push(l);
    }
    Ok(VortexSystem { h, segments: fseg, loops, tags: segments.iter().map(|s| s.tag).collect() })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscretizeParams {
    pub eta: f64,
    pub h: f64,
    /// Relative margin keeping `h` strictly below `eta^2`.
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_tol() -> f64 {
    1e-3
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiscretizeSummary {
    pub h: f64,
    pub n: u64,
    pub phi_unit: f64,
    pub eta: f64,
    pub segments: usize,
    pub loops: usize,
    pub mass: f64,
}

#[derive(Clone, Debug)]
pub struct Discretization {
    pub system: VortexSystem,
    pub data: QuantizedFaceData,
    pub exact_segments: Vec<LineSegment>,
    pub summary: DiscretizeSummary,
}

/// Exact rational value of `x` with denominator `10^6`.
pub fn decimal(x: f64) -> Q {
    rq::round_f64_to(x, 1_000_000)
}

/// Full construction for `p` with the effective `h` of [`choose_n`].
pub fn discretize(p: &PLOneForm, params: &DiscretizeParams) -> Result<Discretization> {
    if !(params.h > 0.0) {
        return Err(Error::InvalidParameter("h must be positive".into()));
    }
    let eta = decimal(params.eta);
    let (_, subs) = flux_data(p)?;
    let n = match flux_unit(&subs) {
        Some(unit) => choose_n(&unit, &eta, params.h, params.tol),
        None => 1,
    };
    let data = quantize(p, &eta, n)?;
    let mut segs = build_interior_segments(p, &data)?;
    segs.extend(build_frustum_segments(p, &data)?);
    let mut boundary = HashSet::new();
    for f in &data.faces {
        if p.mesh.faces[f.face].is_boundary() {
            boundary.extend(f.points.iter().cloned());
        }
    }
    let h = rq::to_f64(&data.h);
    let system = if data.faces.is_empty() { VortexSystem::new(h) } else { assemble(&segs, h, &boundary)? };
    let summary = DiscretizeSummary {
        h,
        n,
        phi_unit: rq::to_f64(&data.phi_unit),
        eta: rq::to_f64(&eta),
        segments: system.segments.len(),
        loops: system.loops.len(),
        mass: system.mass(),
    };
    Ok(Discretization { system, data, exact_segments: segs, summary })
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct VerifyOptions {
    /// Accept `mass - |dp|_1 <= mass_constant * eta`.
    pub mass_constant: f64,
    /// Vertices per side of the box grid used for the flat-norm gap.
    pub grid: usize,
    pub flat: FlatNormOptions,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { mass_constant: 5.0, grid: 17, flat: FlatNormOptions::default() }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PropertyReport {
    pub mass_ok: bool,
    pub sep_ok: bool,
    pub angle_ok: bool,
    pub w11_gap: f64,
    pub mass: f64,
    pub tv: f64,
    /// `(mass - tv) / eta`.
    pub mass_constant: f64,
    pub min_separation: f64,
    /// `min_separation / (eta sqrt(h))`.
    pub separation_constant: f64,
    pub min_tangent_dot: f64,
    /// `(1 + min_tangent_dot) / eta^2`.
    pub angle_constant: f64,
}

/// Smallest distance between segments sharing no endpoint.
pub fn min_separation(gamma: &VortexSystem) -> f64 {
    let segs = &gamma.segments;
    min_distance_where(segs, |i, j| {
        let (s, t) = (&segs[i], &segs[j]);
        s.a == t.a || s.a == t.b || s.b == t.a || s.b == t.b
    })
}

/// Smallest distance over segment pairs not excluded by `skip`.
pub fn min_distance_where(segs: &[Segment], skip: impl Fn(usize, usize) -> bool + Sync) -> f64 {
    if segs.len() < 2 {
        return f64::INFINITY;
    }
    let mean = segs.iter().map(Segment::length).sum::<f64>() / segs.len() as f64;
    let mut cell = mean.max(1e-9);
    loop {
        let best = separation_below(segs, cell, &skip);
        if best < cell || cell > 1e6 {
            return best;
        }
        cell *= 4.0;
    }
}

/// Exact minimum when it lies below `cell`: every segment is registered in
/// all buckets its bounding box, grown by `cell / 2`, touches.
fn separation_below(segs: &[Segment], cell: f64, skip: &(impl Fn(usize, usize) -> bool + Sync)) -> f64 {
    let key = |x: f64| (x / cell).floor() as i64;
    let mut buckets: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    for (s, seg) in segs.iter().enumerate() {
        let lo = seg.start().inf(&seg.end()).add_scalar(-cell / 2.0);
        let hi = seg.start().sup(&seg.end()).add_scalar(cell / 2.0);
        for i in key(lo.x)..=key(hi.x) {
            for j in key(lo.y)..=key(hi.y) {
                for k in key(lo.z)..=key(hi.z) {
                    buckets.entry([i, j, k]).or_default().push(s);
                }
            }
        }
    }
    let lists: Vec<&Vec<usize>> = buckets.values().collect();
    lists
        .par_iter()
        .map(|l| {
            let mut m = f64::INFINITY;
            for (x, &a) in l.iter().enumerate() {
                for &b in &l[..x] {
                    let (s, t) = (&segs[a], &segs[b]);
                    if !skip(a, b) {
                        m = m.min(segment_distance(s.start(), s.end(), t.start(), t.end()));
                    }
                }
            }
            m
        })
        .reduce(|| f64::INFINITY, f64::min)
}

/// Smallest `tau_1 . tau_2` over consecutive segments of the loops.
pub fn min_tangent_dot(gamma: &VortexSystem) -> f64 {
    let mut m: f64 = 1.0;
    for l in &gamma.loops {
        let closed = l.len() > 1 && gamma.segments[l[l.len() - 1]].b == gamma.segments[l[0]].a;
        let pairs = l.windows(2).map(|w| (w[0], w[1])).chain(closed.then(|| (l[l.len() - 1], l[0])));
        for (a, b) in pairs {
            m = m.min(gamma.segments[a].tangent().dot(&gamma.segments[b].tangent()));
        }
    }
    m
}

/// Mass, separation, angle and flat-norm checks of a constructed system.
pub fn verify_properties(gamma: &VortexSystem, p: &PLOneForm, eta: f64, opts: &VerifyOptions) -> Result<PropertyReport> {
    let tv = p.total_variation();
    let mass = gamma.mass();
    let h = gamma.h;
    let min_sep = min_separation(gamma);
    let min_dot = min_tangent_dot(gamma);
    let w11_gap = if gamma.is_empty() && tv == 0.0 { 0.0 } else { flat_gap(gamma, p, opts)? };
    let mass_constant = (mass - tv) / eta;
    let separation_constant = if min_sep.is_finite() { min_sep / (eta * h.sqrt()) } else { f64::INFINITY };
    let angle_constant = (1.0 + min_dot) / (eta * eta);
    Ok(PropertyReport {
        mass_ok: mass_constant <= opts.mass_constant,
        sep_ok: min_sep > 0.0,
        angle_ok: angle_constant > 0.0,
        w11_gap,
        mass,
        tv,
        mass_constant,
        min_separation: min_sep,
        separation_constant,
        min_tangent_dot: min_dot,
        angle_constant,
    })
}

/// Flat norm of `Gamma - dp` on a box grid over the mesh bounding box, both
/// restricted to interior faces.
fn flat_gap(gamma: &VortexSystem, p: &PLOneForm, opts: &VerifyOptions) -> Result<f64> {
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for v in 0..p.mesh.vertices.len() {
        let x = p.mesh.vertex_f64(v);
        lo = lo.inf(&x);
        hi = hi.sup(&x);
    }
    let side = (hi - lo).max();
    let n = opts.grid.max(3);
    let g = GridSpec::new([n; 3], side / (n - 1) as f64, lo.into(), Boundary::Box)?;
    let mut diff = rasterize(g, &gamma.segments, gamma.h, RasterPolicy::Clip)?;
    let dp = Form2::from_fn(g, |a, i| {
        if !g.face_valid(a, i) {
            return 0.0;
        }
        p.mesh.locate(g.face_center(a, i)).map_or(0.0, |(s, _)| p.curl(s)[a])
    });
    diff.axpy(-1.0, &dp);
    for a in 0..3 {
        for i in 0..g.len() {
            let c = g.coords(i)[a];
            if c == 0 || c == n - 1 {
                diff.comps[a][i] = 0.0;
            }
        }
    }
    Ok(flat_norm_form2(&diff, &opts.flat)?.upper)
}

#[cfg(test)]
mod tests;
