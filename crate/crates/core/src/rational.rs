//! Exact rational 3-vectors.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

pub type Q = BigRational;
pub type Q3 = [Q; 3];

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qr(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn q3(v: [i64; 3]) -> Q3 {
    v.map(q)
}

pub fn zero3() -> Q3 {
    [Q::zero(), Q::zero(), Q::zero()]
}

pub fn add(a: &Q3, b: &Q3) -> Q3 {
    [&a[0] + &b[0], &a[1] + &b[1], &a[2] + &b[2]]
}

pub fn sub(a: &Q3, b: &Q3) -> Q3 {
    [&a[0] - &b[0], &a[1] - &b[1], &a[2] - &b[2]]
}

pub fn scale(s: &Q, a: &Q3) -> Q3 {
    [s * &a[0], s * &a[1], s * &a[2]]
}

pub fn dot(a: &Q3, b: &Q3) -> Q {
    &a[0] * &b[0] + &a[1] * &b[1] + &a[2] * &b[2]
}

pub fn cross(a: &Q3, b: &Q3) -> Q3 {
    [
        &a[1] * &b[2] - &a[2] * &b[1],
        &a[2] * &b[0] - &a[0] * &b[2],
        &a[0] * &b[1] - &a[1] * &b[0],
    ]
}

/// `(1 - t) a + t b`.
pub fn lerp(a: &Q3, b: &Q3, t: &Q) -> Q3 {
    add(a, &scale(t, &sub(b, a)))
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

pub fn to_vec3(a: &Q3) -> crate::geom::Vec3 {
    crate::geom::Vec3::new(to_f64(&a[0]), to_f64(&a[1]), to_f64(&a[2]))
}

/// Nearest multiple of `1/den` (ties away from zero).
pub fn round_to(x: &Q, den: u64) -> Q {
    let d = Q::from_integer(BigInt::from(den));
    (x * &d).round() / d
}

pub fn round_f64_to(x: f64, den: u64) -> Q {
    let y = (x * den as f64).round();
    Q::new(BigInt::from(y as i128), BigInt::from(den))
}

/// `{num, den}` with decimal digit strings, exact at any size.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalJson {
    pub num: String,
    pub den: String,
}

impl From<&Q> for RationalJson {
    fn from(x: &Q) -> Self {
        Self { num: x.numer().to_string(), den: x.denom().to_string() }
    }
}

impl TryFrom<&RationalJson> for Q {
    type Error = crate::error::Error;
    fn try_from(r: &RationalJson) -> crate::error::Result<Q> {
        let parse = |s: &str| {
            s.parse::<BigInt>().map_err(|_| crate::error::Error::InvalidInput(format!("bad rational component {s:?}")))
        };
        let den = parse(&r.den)?;
        if den.is_zero() {
            return Err(crate::error::Error::InvalidInput("zero denominator".into()));
        }
        Ok(Q::new(parse(&r.num)?, den))
    }
}
