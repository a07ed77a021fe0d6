//! Rational simplicial meshes of cube unions and piecewise-linear 1-forms
//! on them.
//!
//! Every cube is split into four corner simplices and one central one.
//! Cubes with odd coordinate sum use the point reflection of the template,
//! which makes the diagonals on shared square faces agree.

use crate::dec::Codifferential;
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::grid::Form2;
use crate::potentials::{Poisson, PoissonConfig};
use crate::rational::{self as rq, q3, Q, Q3, RationalJson};
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Template {
    Corner,
    Edge12,
    Edge13,
    Edge23,
    Center,
}

const TEMPLATES: [(Template, [[i64; 3]; 4]); 5] = [
    (Template::Corner, [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]]),
    (Template::Edge12, [[1, 1, 0], [1, 0, 0], [0, 1, 0], [1, 1, 1]]),
    (Template::Edge13, [[1, 0, 1], [1, 0, 0], [0, 0, 1], [1, 1, 1]]),
    (Template::Edge23, [[0, 1, 1], [0, 1, 0], [0, 0, 1], [1, 1, 1]]),
    (Template::Center, [[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1]]),
];

#[derive(Clone, Debug, PartialEq)]
pub struct MeshFace {
    /// Sorted vertex ids; the canonical orientation is the order listed.
    pub vertices: [usize; 3],
    /// `(simplex, local face)` incidences, one or two.
    pub simplices: Vec<(usize, usize)>,
}

impl MeshFace {
    pub fn is_boundary(&self) -> bool {
        self.simplices.len() == 1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RationalSimplicialMesh {
    pub scale: Q,
    pub cubes: Vec<[i64; 3]>,
    /// Vertex positions in units of `scale`.
    pub lattice: Vec<[i64; 3]>,
    pub vertices: Vec<Q3>,
    /// Positively oriented vertex quadruples.
    pub simplices: Vec<[usize; 4]>,
    pub provenance: Vec<(usize, Template)>,
    pub faces: Vec<MeshFace>,
    /// For local face `j` (opposite vertex `j`): face id and the sign of
    /// the outward orientation relative to the canonical one.
    pub simplex_faces: Vec<[(usize, i8); 4]>,
    cube_index: HashMap<[i64; 3], usize>,
    positions: Vec<Vec3>,
}

fn det3(a: [i64; 3], b: [i64; 3], c: [i64; 3]) -> i64 {
    a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) + a[2] * (b[0] * c[1] - b[1] * c[0])
}

fn isub(a: [i64; 3], b: [i64; 3]) -> [i64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Five rational simplices per cube of side `scale` at `cube * scale`.
pub fn triangulate_cubes(cubes: &[[i64; 3]], scale: Q) -> Result<RationalSimplicialMesh> {
    if !scale.is_positive() {
        return Err(Error::InvalidParameter("mesh scale must be positive".into()));
    }
    let mut seen = HashSet::new();
    for c in cubes {
        if !seen.insert(*c) {
            return Err(Error::InvalidInput(format!("cube {c:?} listed twice")));
        }
    }
    let mut vid: HashMap<[i64; 3], usize> = HashMap::new();
    let mut lattice = Vec::new();
    let mut simplices = Vec::new();
    let mut provenance = Vec::new();
    for (ci, c) in cubes.iter().enumerate() {
        let odd = (c[0] + c[1] + c[2]).rem_euclid(2) == 1;
        for (t, local) in TEMPLATES {
            let mut ids = [0usize; 4];
            let mut pts = [[0i64; 3]; 4];
            for (k, l) in local.iter().enumerate() {
                let l = if odd { l.map(|x| 1 - x) } else { *l };
                let p = [c[0] + l[0], c[1] + l[1], c[2] + l[2]];
                pts[k] = p;
                ids[k] = *vid.entry(p).or_insert_with(|| {
                    lattice.push(p);
                    lattice.len() - 1
                });
            }
            if det3(isub(pts[1], pts[0]), isub(pts[2], pts[0]), isub(pts[3], pts[0])) < 0 {
                ids.swap(2, 3);
            }
            simplices.push(ids);
            provenance.push((ci, t));
        }
    }
    let mut face_id: HashMap<[usize; 3], usize> = HashMap::new();
    let mut faces: Vec<MeshFace> = Vec::new();
    let mut simplex_faces = Vec::with_capacity(simplices.len());
    for (si, s) in simplices.iter().enumerate() {
        let mut row = [(0usize, 0i8); 4];
        for j in 0..4 {
            let mut tri: Vec<usize> = (0..4).filter(|&k| k != j).map(|k| s[k]).collect();
            tri.sort_unstable();
            let key = [tri[0], tri[1], tri[2]];
            let [a, b, c] = key.map(|v| lattice[v]);
            let n = cross_i(isub(b, a), isub(c, a));
            let out = isub(a, lattice[s[j]]);
            let sign = if n[0] * out[0] + n[1] * out[1] + n[2] * out[2] > 0 { 1 } else { -1 };
            let id = *face_id.entry(key).or_insert_with(|| {
                faces.push(MeshFace { vertices: key, simplices: Vec::new() });
                faces.len() - 1
            });
            faces[id].simplices.push((si, j));
            if faces[id].simplices.len() > 2 {
                return Err(Error::Construction(format!("face {key:?} shared by more than two simplices")));
            }
            row[j] = (id, sign);
        }
        simplex_faces.push(row);
    }
    for f in &faces {
        if let [(s1, j1), (s2, j2)] = f.simplices[..] {
            if simplex_faces[s1][j1].1 == simplex_faces[s2][j2].1 {
                return Err(Error::Construction(format!("face {:?} has inconsistent orientation", f.vertices)));
            }
        }
    }
    let vertices: Vec<Q3> = lattice.iter().map(|p| rq::scale(&scale, &q3(*p))).collect();
    let positions = vertices.iter().map(rq::to_vec3).collect();
    let cube_index = cubes.iter().enumerate().map(|(i, c)| (*c, i)).collect();
    Ok(RationalSimplicialMesh {
        scale,
        cubes: cubes.to_vec(),
        lattice,
        vertices,
        simplices,
        provenance,
        faces,
        simplex_faces,
        cube_index,
        positions,
    })
}

fn cross_i(a: [i64; 3], b: [i64; 3]) -> [i64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

/// All `n^3` cubes of the block `[0, n)^3` at side `1/n`.
pub fn unit_block(n: i64) -> Result<RationalSimplicialMesh> {
    let mut cubes = Vec::new();
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                cubes.push([i, j, k]);
            }
        }
    }
    triangulate_cubes(&cubes, rq::qr(1, n))
}

impl RationalSimplicialMesh {
    pub fn points(&self, i: usize) -> [&Q3; 4] {
        self.simplices[i].map(|v| &self.vertices[v])
    }

    /// Vertex ids of local face `j` ordered so the normal points outward.
    pub fn oriented_face(&self, i: usize, j: usize) -> [usize; 3] {
        let (f, sign) = self.simplex_faces[i][j];
        let [a, b, c] = self.faces[f].vertices;
        if sign > 0 {
            [a, b, c]
        } else {
            [a, c, b]
        }
    }

    /// Outward area vector of local face `j`.
    pub fn area_vector(&self, i: usize, j: usize) -> Q3 {
        let [a, b, c] = self.oriented_face(i, j).map(|v| &self.vertices[v]);
        let n = rq::cross(&rq::sub(b, a), &rq::sub(c, a));
        rq::scale(&rq::qr(1, 2), &n)
    }

    pub fn volume(&self, i: usize) -> Q {
        let [p0, p1, p2, p3] = self.points(i);
        let e = [rq::sub(p1, p0), rq::sub(p2, p0), rq::sub(p3, p0)];
        rq::dot(&e[0], &rq::cross(&e[1], &e[2])) / rq::q(6)
    }

    pub fn total_volume(&self) -> Q {
        (0..self.simplices.len()).map(|i| self.volume(i)).fold(Q::zero(), |a, b| a + b)
    }

    pub fn barycenter(&self, i: usize) -> Q3 {
        let p = self.points(i);
        let s = rq::add(&rq::add(p[0], p[1]), &rq::add(p[2], p[3]));
        rq::scale(&rq::qr(1, 4), &s)
    }

    pub fn vertex_f64(&self, v: usize) -> Vec3 {
        self.positions[v]
    }

    /// Simplex containing `x` and its barycentric coordinates.
    pub fn locate(&self, x: Vec3) -> Option<(usize, [f64; 4])> {
        let s = rq::to_f64(&self.scale);
        let cube = [0, 1, 2].map(|a| (x[a] / s).floor() as i64);
        let scan = |c: [i64; 3], best: &mut Option<(usize, [f64; 4], f64)>| {
            let Some(&ci) = self.cube_index.get(&c) else { return };
            for i in 5 * ci..5 * ci + 5 {
                let l = self.barycentric(i, x);
                let m = l.iter().copied().fold(f64::INFINITY, f64::min);
                if best.is_none_or(|b| m > b.2) {
                    *best = Some((i, l, m));
                }
            }
        };
        let mut best = None;
        scan(cube, &mut best);
        if best.is_none_or(|b| b.2 < -1e-9) {
            // points on cube faces may belong to a neighbour only
            for dz in -1..=1 {
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        if dx != 0 || dy != 0 || dz != 0 {
                            scan([cube[0] + dx, cube[1] + dy, cube[2] + dz], &mut best);
                        }
                    }
                }
            }
        }
        best.filter(|b| b.2 >= -1e-9).map(|b| (b.0, b.1))
    }

    pub fn barycentric(&self, i: usize, x: Vec3) -> [f64; 4] {
        let p = self.simplices[i].map(|v| self.vertex_f64(v));
        let m = nalgebra::Matrix3::from_columns(&[p[1] - p[0], p[2] - p[0], p[3] - p[0]]);
        let l = m.try_inverse().map(|inv| inv * (x - p[0])).unwrap_or(Vec3::repeat(f64::NAN));
        [1.0 - l.sum(), l[0], l[1], l[2]]
    }

    pub fn min_edge(&self) -> f64 {
        let mut m = f64::INFINITY;
        for s in &self.simplices {
            for a in 0..4 {
                for b in a + 1..4 {
                    m = m.min((self.vertex_f64(s[a]) - self.vertex_f64(s[b])).norm());
                }
            }
        }
        m
    }

    pub fn max_face_area(&self) -> f64 {
        self.faces
            .iter()
            .map(|f| {
                let [a, b, c] = f.vertices.map(|v| self.vertex_f64(v));
                (b - a).cross(&(c - a)).norm() / 2.0
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum VertexValues {
    Real(Vec<[f64; 3]>),
    Rational(Vec<Q3>),
}

/// Continuous, componentwise linear 1-form given by its vertex values.
#[derive(Clone, Debug, PartialEq)]
pub struct PLOneForm {
    pub mesh: RationalSimplicialMesh,
    pub values: VertexValues,
}

/// Gradient of the linear function with values `f` at the simplex points.
fn gradient_exact(p: [&Q3; 4], f: [&Q; 4]) -> Q3 {
    let e = [rq::sub(p[1], p[0]), rq::sub(p[2], p[0]), rq::sub(p[3], p[0])];
    let c = [rq::cross(&e[1], &e[2]), rq::cross(&e[2], &e[0]), rq::cross(&e[0], &e[1])];
    let det = rq::dot(&e[0], &c[0]);
    let mut g = rq::zero3();
    for k in 0..3 {
        let df = f[k + 1] - f[0];
        g = rq::add(&g, &rq::scale(&df, &c[k]));
    }
    rq::scale(&(Q::from_integer(1.into()) / det), &g)
}

fn gradient_f64(p: [Vec3; 4], f: [f64; 4]) -> Vec3 {
    let e = [p[1] - p[0], p[2] - p[0], p[3] - p[0]];
    let c = [e[1].cross(&e[2]), e[2].cross(&e[0]), e[0].cross(&e[1])];
    let det = e[0].dot(&c[0]);
    (c[0] * (f[1] - f[0]) + c[1] * (f[2] - f[0]) + c[2] * (f[3] - f[0])) / det
}

fn curl_of(g: [Q3; 3]) -> Q3 {
    [&g[2][1] - &g[1][2], &g[0][2] - &g[2][0], &g[1][0] - &g[0][1]]
}

impl PLOneForm {
    pub fn is_rational(&self) -> bool {
        matches!(self.values, VertexValues::Rational(_))
    }

    pub fn value_f64(&self, v: usize) -> Vec3 {
        match &self.values {
            VertexValues::Real(x) => Vec3::from(x[v]),
            VertexValues::Rational(x) => rq::to_vec3(&x[v]),
        }
    }

    /// Component gradients on simplex `i` (row `c` is grad of `p_c`).
    pub fn gradients(&self, i: usize) -> [Vec3; 3] {
        let s = self.mesh.simplices[i];
        let p = s.map(|v| self.mesh.vertex_f64(v));
        let vals = s.map(|v| self.value_f64(v));
        [0, 1, 2].map(|c| gradient_f64(p, vals.map(|x| x[c])))
    }

    pub fn gradients_exact(&self, i: usize) -> Result<[Q3; 3]> {
        let VertexValues::Rational(vals) = &self.values else {
            return Err(Error::InvalidState("exact gradients need rational vertex values".into()));
        };
        let s = self.mesh.simplices[i];
        let p = self.mesh.points(i);
        Ok([0, 1, 2].map(|c| gradient_exact(p, s.map(|v| &vals[v][c]))))
    }

    /// `p|_S = sum_c (sum_j a[c][j] x_j + b[c]) dx_c`.
    pub fn coefficients(&self, i: usize) -> ([[f64; 3]; 3], [f64; 3]) {
        let g = self.gradients(i);
        let v0 = self.mesh.simplices[i][0];
        let p0 = self.mesh.vertex_f64(v0);
        let f0 = self.value_f64(v0);
        let a = g.map(|r| [r[0], r[1], r[2]]);
        let b = [0, 1, 2].map(|c| f0[c] - g[c].dot(&p0));
        (a, b)
    }

    /// Constant vorticity vector `v` with `dp = sum_j v^j star dx_j`.
    pub fn curl(&self, i: usize) -> Vec3 {
        let g = self.gradients(i);
        Vec3::new(g[2][1] - g[1][2], g[0][2] - g[2][0], g[1][0] - g[0][1])
    }

    pub fn curl_exact(&self, i: usize) -> Result<Q3> {
        Ok(curl_of(self.gradients_exact(i)?))
    }

    /// Exact flux of `dp` through the outward local face `j` of simplex `i`.
    pub fn face_flux(&self, i: usize, j: usize) -> Result<Q> {
        Ok(rq::dot(&self.curl_exact(i)?, &self.mesh.area_vector(i, j)))
    }

    pub fn eval(&self, x: Vec3) -> Option<Vec3> {
        let (i, l) = self.mesh.locate(x)?;
        let s = self.mesh.simplices[i];
        Some((0..4).map(|k| self.value_f64(s[k]) * l[k]).sum())
    }

    /// `int |dp| = sum |v_i| vol(S_i)`.
    pub fn total_variation(&self) -> f64 {
        (0..self.mesh.simplices.len()).map(|i| self.curl(i).norm() * rq::to_f64(&self.mesh.volume(i))).sum()
    }

    /// Largest jump of the tangential components across interior faces,
    /// evaluated at the face vertices from each side's linear expression.
    pub fn tangential_jump(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for f in &self.mesh.faces {
            let [(s1, _), (s2, _)] = f.simplices[..] else { continue };
            let (a1, b1) = self.coefficients(s1);
            let (a2, b2) = self.coefficients(s2);
            let [pa, pb, pc] = f.vertices.map(|v| self.mesh.vertex_f64(v));
            let n = (pb - pa).cross(&(pc - pa)).normalize();
            for x in [pa, pb, pc] {
                let ev = |a: &[[f64; 3]; 3], b: &[f64; 3]| {
                    Vec3::from([0, 1, 2].map(|c| a[c][0] * x[0] + a[c][1] * x[1] + a[c][2] * x[2] + b[c]))
                };
                let d = ev(&a1, &b1) - ev(&a2, &b2);
                worst = worst.max((d - n * d.dot(&n)).norm());
            }
        }
        worst
    }

    /// Globally linear rational form `sum_c (a[c] . x + b[c]) dx_c`.
    pub fn from_linear(mesh: RationalSimplicialMesh, a: [Q3; 3], b: Q3) -> Self {
        let vals = mesh
            .vertices
            .iter()
            .map(|x| [0, 1, 2].map(|c| rq::dot(&a[c], x) + &b[c]))
            .collect();
        Self { mesh, values: VertexValues::Rational(vals) }
    }

    pub fn to_json(&self) -> PLOneFormJson {
        PLOneFormJson {
            scale: RationalJson::from(&self.mesh.scale),
            cubes: self.mesh.cubes.clone(),
            lattice: self.mesh.lattice.clone(),
            simplices: self.mesh.simplices.clone(),
            values: match &self.values {
                VertexValues::Real(v) => ValuesJson::Real(v.clone()),
                VertexValues::Rational(v) => {
                    ValuesJson::Rational(v.iter().map(|x| [0, 1, 2].map(|c| RationalJson::from(&x[c]))).collect())
                }
            },
        }
    }

    pub fn from_json(j: &PLOneFormJson) -> Result<Self> {
        let mesh = triangulate_cubes(&j.cubes, Q::try_from(&j.scale)?)?;
        if mesh.lattice != j.lattice || mesh.simplices != j.simplices {
            return Err(Error::InvalidInput("mesh listing does not match its cubes".into()));
        }
        let n = mesh.vertices.len();
        let values = match &j.values {
            ValuesJson::Real(v) if v.len() == n => VertexValues::Real(v.clone()),
            ValuesJson::Rational(v) if v.len() == n => VertexValues::Rational(
                v.iter()
                    .map(|x| Ok([Q::try_from(&x[0])?, Q::try_from(&x[1])?, Q::try_from(&x[2])?]))
                    .collect::<Result<_>>()?,
            ),
            _ => return Err(Error::InvalidInput("one value triple per vertex required".into())),
        };
        Ok(Self { mesh, values })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValuesJson {
    Real(Vec<[f64; 3]>),
    Rational(Vec<[RationalJson; 3]>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PLOneFormJson {
    pub scale: RationalJson,
    pub cubes: Vec<[i64; 3]>,
    pub lattice: Vec<[i64; 3]>,
    pub simplices: Vec<[usize; 4]>,
    pub values: ValuesJson,
}

/// Vertex interpolation of `f`.
pub fn interpolate(mesh: RationalSimplicialMesh, f: impl Fn(Vec3) -> Vec3) -> Result<PLOneForm> {
    let mut vals = Vec::with_capacity(mesh.vertices.len());
    for v in 0..mesh.vertices.len() {
        let x = mesh.vertex_f64(v);
        let y = f(x);
        if !y.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidInput(format!("form is not finite at vertex {x:?}")));
        }
        vals.push([y[0], y[1], y[2]]);
    }
    Ok(PLOneForm { mesh, values: VertexValues::Real(vals) })
}

/// Round every vertex value to the nearest multiple of `1/den`.
pub fn rationalize(p: &PLOneForm, den: u64) -> Result<PLOneForm> {
    if den == 0 {
        return Err(Error::InvalidParameter("denominator bound must be at least 1".into()));
    }
    let vals = match &p.values {
        VertexValues::Real(v) => v.iter().map(|x| x.map(|c| rq::round_f64_to(c, den))).collect(),
        VertexValues::Rational(v) => v.iter().map(|x| [0, 1, 2].map(|c| rq::round_to(&x[c], den))).collect(),
    };
    Ok(PLOneForm { mesh: p.mesh.clone(), values: VertexValues::Rational(vals) })
}

/// Keast degree-2 rule on the reference tetrahedron (weights sum to one).
const TET_RULE: [[f64; 4]; 4] = {
    let a = 0.585_410_196_624_968_5;
    let b = 0.138_196_601_125_010_5;
    [[a, b, b, b], [b, a, b, b], [b, b, a, b], [b, b, b, a]]
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproximationReport {
    /// `|p - p_delta|` in L2 over the quadrature box.
    pub l2_gap: f64,
    /// `|p_delta|^2` over the mesh minus `|p|^2` over the box.
    pub l2_growth: f64,
    /// `int |d p_delta|`.
    pub tv: f64,
}

/// Compare `original` and `p_delta` on the box `[lo, hi]` with `n^3`
/// midpoint samples.
pub fn approximation_report(
    original: impl Fn(Vec3) -> Vec3,
    p_delta: &PLOneForm,
    lo: Vec3,
    hi: Vec3,
    n: usize,
) -> Result<ApproximationReport> {
    let size = hi - lo;
    let dv = size.x * size.y * size.z / (n * n * n) as f64;
    let mut gap = 0.0;
    let mut norm_p = 0.0;
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let t = Vec3::new((i as f64 + 0.5) / n as f64, (j as f64 + 0.5) / n as f64, (k as f64 + 0.5) / n as f64);
                let x = lo + size.component_mul(&t);
                let a = original(x);
                let b = p_delta
                    .eval(x)
                    .ok_or_else(|| Error::InvalidInput(format!("quadrature point {x:?} outside the mesh")))?;
                gap += (a - b).norm_squared() * dv;
                norm_p += a.norm_squared() * dv;
            }
        }
    }
    let mut norm_pd = 0.0;
    for (i, s) in p_delta.mesh.simplices.iter().enumerate() {
        let vol = rq::to_f64(&p_delta.mesh.volume(i));
        let vals = s.map(|v| p_delta.value_f64(v));
        for w in TET_RULE {
            let y: Vec3 = (0..4).map(|k| vals[k] * w[k]).sum();
            norm_pd += y.norm_squared() * vol / 4.0;
        }
    }
    Ok(ApproximationReport { l2_gap: gap.sqrt(), l2_growth: norm_pd - norm_p, tv: p_delta.total_variation() })
}

/// Rational PL potential whose exterior derivative approximates the
/// exact lattice 2-form `j`: `p' = d* L^-1 j`, interpolated and rounded.
pub fn vorticity_potential(
    j: &Form2,
    mesh: RationalSimplicialMesh,
    den: u64,
    cfg: &PoissonConfig,
) -> Result<PLOneForm> {
    let p = j.poisson_inverse(cfg)?.psi.codiff();
    let interp = interpolate(mesh, |x| p.sample(x))?;
    rationalize(&interp, den)
}
