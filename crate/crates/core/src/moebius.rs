//! The group PSL(2,ℂ) acting on the Riemann sphere.
//!
//! A [`Moebius`] value is stored as a determinant-one matrix whose sign is
//! canonicalized (the first non-negligible entry has positive real part, or
//! zero real part and positive imaginary part). Equality is taken modulo ±1.

use std::cmp::Ordering;
use std::fmt;

use num_complex::Complex64;
use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::numerics::{root_of_unity_order, Scalar, Tolerance};

/// Entries below this magnitude are ignored when choosing the canonical sign.
const SIGN_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct Moebius {
    a: Scalar,
    b: Scalar,
    c: Scalar,
    d: Scalar,
}

/// Dynamical type of a Möbius transformation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ElementType {
    Identity,
    Parabolic,
    Elliptic { order: Option<u32> },
    Loxodromic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CommutingPairClass {
    NotCommuting,
    SharedFixedSet,
    KleinFourPair,
}

/// A point of ℙ¹ = ℂ ∪ {∞}.
#[derive(Clone, Debug)]
pub enum SpherePoint {
    Finite(Scalar),
    Infinity,
}

/// Fixed-point set of a transformation.
#[derive(Clone, Debug, PartialEq)]
pub enum FixedPoints {
    /// The identity fixes every point.
    Every,
    /// One point (parabolic) or two points, in [`SpherePoint::lex_cmp`] order.
    Points(Vec<SpherePoint>),
}

impl FixedPoints {
    pub fn points(&self) -> Option<&[SpherePoint]> {
        match self {
            FixedPoints::Every => None,
            FixedPoints::Points(p) => Some(p),
        }
    }
}

fn positive_orientation(z: &Scalar) -> bool {
    match z {
        Scalar::Exact { .. } => match z.re_sign() {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => z.im_sign() == Ordering::Greater,
        },
        Scalar::Approx(w) => {
            if w.re.abs() > SIGN_FLOOR {
                w.re > 0.0
            } else {
                w.im > 0.0
            }
        }
    }
}

fn negligible(z: &Scalar) -> bool {
    match z {
        Scalar::Exact { .. } => z.is_exact_zero(),
        Scalar::Approx(w) => w.norm() <= SIGN_FLOOR,
    }
}

impl Moebius {
    /// Builds `[[a, b], [c, d]]`, scaling to determinant one.
    pub fn new(a: Scalar, b: Scalar, c: Scalar, d: Scalar) -> Result<Self> {
        let det = &(&a * &d) - &(&b * &c);
        let singular = match &det {
            Scalar::Exact { .. } => det.is_exact_zero(),
            // NaN norms land here too
            Scalar::Approx(w) => !w.norm().is_finite() || w.norm() < f64::MIN_POSITIVE,
        };
        if singular {
            return Err(Error::Singular(format!(
                "determinant of [[{a}, {b}], [{c}, {d}]] vanishes"
            )));
        }
        let m = if det == Scalar::one() {
            Self { a, b, c, d }
        } else {
            let s = det.sqrt();
            Self {
                a: &a / &s,
                b: &b / &s,
                c: &c / &s,
                d: &d / &s,
            }
        };
        Ok(m.canonical_sign())
    }

    pub fn from_ints(a: i64, b: i64, c: i64, d: i64) -> Result<Self> {
        Self::new(a.into(), b.into(), c.into(), d.into())
    }

    pub fn from_c64(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<Self> {
        Self::new(a.into(), b.into(), c.into(), d.into())
    }

    pub fn identity() -> Self {
        Self {
            a: Scalar::one(),
            b: Scalar::zero(),
            c: Scalar::zero(),
            d: Scalar::one(),
        }
    }

    /// `diag(α, 1/α)`, i.e. `z ↦ α² z`.
    pub fn diagonal(alpha: &Scalar) -> Result<Self> {
        let inv = alpha
            .recip()
            .ok_or_else(|| Error::Singular("diagonal entry is zero".into()))?;
        Ok(Self {
            a: alpha.clone(),
            b: Scalar::zero(),
            c: Scalar::zero(),
            d: inv,
        }
        .canonical_sign())
    }

    /// `[[1, t], [0, 1]]`, i.e. `z ↦ z + t`.
    pub fn translation(t: &Scalar) -> Self {
        Self {
            a: Scalar::one(),
            b: t.clone(),
            c: Scalar::zero(),
            d: Scalar::one(),
        }
    }

    /// `z ↦ a z + b`.
    pub fn affine(a: &Scalar, b: &Scalar) -> Result<Self> {
        Self::new(a.clone(), b.clone(), Scalar::zero(), Scalar::one())
    }

    /// The standard involution `[[0, i], [i, 0]]`, `z ↦ 1/z`.
    pub fn swap() -> Self {
        Self {
            a: Scalar::zero(),
            b: Scalar::i(),
            c: Scalar::i(),
            d: Scalar::zero(),
        }
    }

    pub fn a(&self) -> &Scalar {
        &self.a
    }
    pub fn b(&self) -> &Scalar {
        &self.b
    }
    pub fn c(&self) -> &Scalar {
        &self.c
    }
    pub fn d(&self) -> &Scalar {
        &self.d
    }

    pub fn entries(&self) -> [&Scalar; 4] {
        [&self.a, &self.b, &self.c, &self.d]
    }

    pub fn to_c64(&self) -> [Complex64; 4] {
        [
            self.a.to_c64(),
            self.b.to_c64(),
            self.c.to_c64(),
            self.d.to_c64(),
        ]
    }

    pub fn is_exact(&self) -> bool {
        self.entries().iter().all(|e| e.is_exact())
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.to_c64().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn canonical_sign(self) -> Self {
        let lead = self.entries().into_iter().find(|e| !negligible(e)).cloned();
        match lead {
            Some(e) if !positive_orientation(&e) => self.negated(),
            _ => self,
        }
    }

    fn negated(&self) -> Self {
        Self {
            a: -&self.a,
            b: -&self.b,
            c: -&self.c,
            d: -&self.d,
        }
    }

    fn from_product(a: Scalar, b: Scalar, c: Scalar, d: Scalar) -> Self {
        let raw = Self {
            a: a.clone(),
            b: b.clone(),
            c: c.clone(),
            d: d.clone(),
        };
        if raw.is_exact() {
            // a product of determinant-one matrices has determinant one
            return raw.canonical_sign();
        }
        Self::new(a, b, c, d).unwrap_or(raw)
    }

    /// `self ∘ other` (apply `other` first).
    pub fn compose(&self, other: &Self) -> Self {
        Self::from_product(
            &(&self.a * &other.a) + &(&self.b * &other.c),
            &(&self.a * &other.b) + &(&self.b * &other.d),
            &(&self.c * &other.a) + &(&self.d * &other.c),
            &(&self.c * &other.b) + &(&self.d * &other.d),
        )
    }

    pub fn inverse(&self) -> Self {
        Self {
            a: self.d.clone(),
            b: -&self.b,
            c: -&self.c,
            d: self.a.clone(),
        }
        .canonical_sign()
    }

    pub fn powi(&self, n: i64) -> Self {
        let base = if n < 0 { self.inverse() } else { self.clone() };
        let mut result = Self::identity();
        let mut sq = base;
        let mut e = n.unsigned_abs();
        while e > 0 {
            if e & 1 == 1 {
                result = result.compose(&sq);
            }
            e >>= 1;
            if e > 0 {
                sq = sq.compose(&sq);
            }
        }
        result
    }

    /// `g ∘ self ∘ g⁻¹`.
    pub fn conjugated_by(&self, g: &Self) -> Self {
        g.compose(self).compose(&g.inverse())
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.compose(other)
            .compose(&self.inverse())
            .compose(&other.inverse())
    }

    pub fn trace(&self) -> Scalar {
        &self.a + &self.d
    }

    /// `tr²`, well defined on PSL(2,ℂ).
    pub fn trace_sq(&self) -> Scalar {
        let t = self.trace();
        &t * &t
    }

    /// Minimum over the two signs of the largest entrywise distance.
    pub fn distance(&self, other: &Self) -> f64 {
        let x = self.to_c64();
        let y = other.to_c64();
        let plus = (0..4).map(|k| (x[k] - y[k]).norm()).fold(0.0, f64::max);
        let minus = (0..4).map(|k| (x[k] + y[k]).norm()).fold(0.0, f64::max);
        plus.min(minus)
    }

    /// PSL equality. Exact when both sides are exact; otherwise the
    /// entrywise distance is compared against `eps · max(1, largest entry)`.
    pub fn eq_tol(&self, other: &Self, tol: Tolerance) -> bool {
        if self.is_exact() && other.is_exact() {
            let same = |s: &Self, o: &Self| s.a == o.a && s.b == o.b && s.c == o.c && s.d == o.d;
            return same(self, other) || same(self, &other.negated());
        }
        let scale = self.max_abs_entry().max(other.max_abs_entry()).max(1.0);
        self.distance(other) <= tol.eps() * scale
    }

    pub fn is_identity(&self, tol: Tolerance) -> bool {
        self.eq_tol(&Self::identity(), tol)
    }

    pub fn commutes_with(&self, other: &Self, tol: Tolerance) -> bool {
        self.compose(other).eq_tol(&other.compose(self), tol)
    }

    /// `(z₀ : z₁) ↦ (a z₀ + b z₁ : c z₀ + d z₁)`.
    pub fn act(&self, p: &SpherePoint) -> SpherePoint {
        let (num, den) = match p {
            SpherePoint::Finite(z) => (&(&self.a * z) + &self.b, &(&self.c * z) + &self.d),
            SpherePoint::Infinity => (self.a.clone(), self.c.clone()),
        };
        SpherePoint::from_homogeneous(&num, &den).expect("nonsingular map")
    }

    pub fn apply(&self, z: &Scalar) -> SpherePoint {
        self.act(&SpherePoint::Finite(z.clone()))
    }

    /// Roots of `c z² + (d − a) z − b = 0`, with ∞ counted when `c = 0`.
    pub fn fixed_points(&self, tol: Tolerance) -> FixedPoints {
        if self.is_identity(tol) {
            return FixedPoints::Every;
        }
        let dma = &self.d - &self.a;
        let mut pts = if self.c.is_zero(tol) {
            if dma.is_zero(tol) {
                vec![SpherePoint::Infinity]
            } else {
                vec![SpherePoint::Finite(&self.b / &dma), SpherePoint::Infinity]
            }
        } else {
            let disc = &self.trace_sq() - &Scalar::from_int(4);
            let amd = -&dma;
            let two_c = &self.c * &Scalar::from_int(2);
            if disc.is_zero(tol) {
                vec![SpherePoint::Finite(&amd / &two_c)]
            } else {
                let s = disc.sqrt();
                // pick the sign avoiding cancellation, recover the other root
                // from the product −b/c
                let q_plus = &amd + &s;
                let q_minus = &amd - &s;
                let q = if q_plus.abs() >= q_minus.abs() {
                    q_plus
                } else {
                    q_minus
                };
                let r1 = &q / &two_c;
                let r2 = &(&self.b * &Scalar::from_int(-2)) / &q;
                vec![SpherePoint::Finite(r1), SpherePoint::Finite(r2)]
            }
        };
        pts.sort_by(|p, q| p.lex_cmp(q));
        FixedPoints::Points(pts)
    }

    /// Dynamical type from `tr²`; elliptic orders are searched up to `max_order`.
    pub fn classify_element(&self, max_order: u32, tol: Tolerance) -> ElementType {
        let t2 = self.trace_sq();
        let four = Scalar::from_int(4);
        if t2.approx_eq(&four, tol) {
            return if self.is_identity(tol) {
                ElementType::Identity
            } else {
                ElementType::Parabolic
            };
        }
        let elliptic = match &t2 {
            Scalar::Exact { .. } => {
                t2.im_sign() == Ordering::Equal
                    && t2.re_sign() != Ordering::Less
                    && t2.cmp_re(&four) == Ordering::Less
            }
            Scalar::Approx(w) => w.im.abs() <= tol.eps() && w.re >= -tol.eps() && w.re < 4.0,
        };
        if !elliptic {
            return ElementType::Loxodromic;
        }
        let t = self.trace();
        let lambda = &(&t + &(&t2 - &four).sqrt()) / &Scalar::from_int(2);
        let multiplier = &lambda * &lambda;
        ElementType::Elliptic {
            order: root_of_unity_order(&multiplier, max_order.max(1), tol),
        }
    }

    pub fn is_involution(&self, tol: Tolerance) -> bool {
        self.classify_element(2, tol) == (ElementType::Elliptic { order: Some(2) })
    }

    /// Sends `z1 ↦ 0`, `z2 ↦ 1`, `z3 ↦ ∞`.
    pub fn map_points(z1: &SpherePoint, z2: &SpherePoint, z3: &SpherePoint) -> Result<Self> {
        use SpherePoint::*;
        let one = Scalar::one();
        let zero = Scalar::zero();
        match (z1, z2, z3) {
            (Infinity, Finite(p2), Finite(p3)) => Self::new(zero, p2 - p3, one, -p3),
            (Finite(p1), Infinity, Finite(p3)) => Self::new(one.clone(), -p1, one, -p3),
            (Finite(p1), Finite(p2), Infinity) => Self::new(one, -p1, zero, p2 - p1),
            (Finite(p1), Finite(p2), Finite(p3)) => {
                let u = p2 - p3;
                let v = p2 - p1;
                Self::new(u.clone(), -&(p1 * &u), v.clone(), -&(p3 * &v))
            }
            _ => Err(Error::Singular(
                "map_points needs three distinct points".into(),
            )),
        }
        .map_err(|_| Error::Singular("map_points needs three distinct points".into()))
    }
}

impl Default for Moebius {
    fn default() -> Self {
        Self::identity()
    }
}

impl PartialEq for Moebius {
    fn eq(&self, other: &Self) -> bool {
        self.eq_tol(other, Tolerance::default())
    }
}

impl fmt::Display for Moebius {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.a, self.b, self.c, self.d)
    }
}

impl Serialize for Moebius {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.entries().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Moebius {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let entries: Vec<Scalar> = Vec::deserialize(deserializer)?;
        let [a, b, c, d]: [Scalar; 4] = entries.try_into().map_err(|v: Vec<Scalar>| {
            de::Error::custom(format!("matrix must have 4 entries, got {}", v.len()))
        })?;
        Moebius::new(a, b, c, d).map_err(de::Error::custom)
    }
}

impl SpherePoint {
    pub fn zero() -> Self {
        Self::Finite(Scalar::zero())
    }

    pub fn int(n: i64) -> Self {
        Self::Finite(Scalar::from_int(n))
    }

    /// `(z₀ : z₁)`; `None` if both vanish.
    pub fn from_homogeneous(z0: &Scalar, z1: &Scalar) -> Option<Self> {
        if z0.is_exact_zero() && z1.is_exact_zero() {
            return None;
        }
        let at_infinity = match z1 {
            Scalar::Exact { .. } => z1.is_exact_zero(),
            Scalar::Approx(w) => w.norm() <= 4.0 * f64::EPSILON * z0.abs(),
        };
        if at_infinity {
            if z0.abs() == 0.0 {
                return None;
            }
            Some(Self::Infinity)
        } else {
            Some(Self::Finite(z0 / z1))
        }
    }

    pub fn is_infinity(&self) -> bool {
        matches!(self, Self::Infinity)
    }

    pub fn finite(&self) -> Option<&Scalar> {
        match self {
            Self::Finite(z) => Some(z),
            Self::Infinity => None,
        }
    }

    /// Chordal distance on the unit sphere (diameter 2).
    pub fn chordal_distance(&self, other: &Self) -> f64 {
        match (self, other) {
            (Self::Infinity, Self::Infinity) => 0.0,
            (Self::Finite(z), Self::Infinity) | (Self::Infinity, Self::Finite(z)) => {
                2.0 / (1.0 + z.to_c64().norm_sqr()).sqrt()
            }
            (Self::Finite(z), Self::Finite(w)) => {
                let (z, w) = (z.to_c64(), w.to_c64());
                2.0 * (z - w).norm() / ((1.0 + z.norm_sqr()) * (1.0 + w.norm_sqr())).sqrt()
            }
        }
    }

    pub fn eq_tol(&self, other: &Self, tol: Tolerance) -> bool {
        match (self, other) {
            (Self::Finite(z), Self::Finite(w)) if z.is_exact() && w.is_exact() => z == w,
            _ => self.chordal_distance(other) <= tol.eps(),
        }
    }

    /// Finite points by (re, im), then ∞.
    pub fn lex_cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Self::Infinity, Self::Infinity) => Ordering::Equal,
            (Self::Infinity, _) => Ordering::Greater,
            (_, Self::Infinity) => Ordering::Less,
            (Self::Finite(z), Self::Finite(w)) => z.lex_cmp(w),
        }
    }
}

impl PartialEq for SpherePoint {
    fn eq(&self, other: &Self) -> bool {
        self.eq_tol(other, Tolerance::default())
    }
}

impl fmt::Display for SpherePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(z) => write!(f, "{z}"),
            Self::Infinity => write!(f, "∞"),
        }
    }
}

impl Serialize for SpherePoint {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Self::Finite(z) => z.serialize(serializer),
            Self::Infinity => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for SpherePoint {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Wire {
            Tag(String),
            Point(Scalar),
        }
        match Wire::deserialize(deserializer)? {
            Wire::Tag(s) if s == "inf" || s == "∞" => Ok(Self::Infinity),
            Wire::Tag(s) => Err(de::Error::custom(format!("unknown sphere point `{s}`"))),
            Wire::Point(z) => Ok(Self::Finite(z)),
        }
    }
}

/// Whether two point lists agree as sets.
pub fn same_point_set(p: &[SpherePoint], q: &[SpherePoint], tol: Tolerance) -> bool {
    p.len() == q.len()
        && p.iter().all(|x| q.iter().any(|y| x.eq_tol(y, tol)))
        && q.iter().all(|y| p.iter().any(|x| x.eq_tol(y, tol)))
}

pub fn commuting_pair_class(m1: &Moebius, m2: &Moebius, tol: Tolerance) -> CommutingPairClass {
    if !m1.commutes_with(m2, tol) {
        return CommutingPairClass::NotCommuting;
    }
    if m1.is_involution(tol) && m2.is_involution(tol) {
        if let (FixedPoints::Points(f1), FixedPoints::Points(f2)) =
            (m1.fixed_points(tol), m2.fixed_points(tol))
        {
            let disjoint = f1.iter().all(|p| f2.iter().all(|q| !p.eq_tol(q, tol)));
            if disjoint {
                return CommutingPairClass::KleinFourPair;
            }
        }
    }
    CommutingPairClass::SharedFixedSet
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalFormKind {
    /// Every generator is the identity.
    Trivial,
    /// Common fixed pair sent to {0, ∞}.
    Diagonal,
    /// Common fixed point sent to ∞.
    UpperTriangular,
    /// Klein four group sent to the standard one.
    KleinFour,
    /// No common structure; conjugator is the identity.
    General,
}

#[derive(Clone, Debug, Serialize)]
pub struct NormalForm {
    pub kind: NormalFormKind,
    pub conjugator: Moebius,
    pub gens: Vec<Moebius>,
}

fn conjugate_all(gens: &[Moebius], g: &Moebius) -> Vec<Moebius> {
    gens.iter().map(|m| m.conjugated_by(g)).collect()
}

/// The Klein four group generated by `gens`, as a pair of distinct
/// involutions whose product is the third.
fn klein_pair(nonid: &[&Moebius], tol: Tolerance) -> Option<(Moebius, Moebius)> {
    let first = nonid.first()?;
    let second = nonid
        .iter()
        .find(|m| commuting_pair_class(first, m, tol) == CommutingPairClass::KleinFourPair)?;
    let third = first.compose(second);
    let members = [(*first).clone(), (*second).clone(), third];
    nonid
        .iter()
        .all(|m| members.iter().any(|k| k.eq_tol(m, tol)))
        .then(|| ((*first).clone(), (*second).clone()))
}

/// Conjugates the generators into diagonal, upper-triangular or standard
/// Klein-four form when they share the corresponding structure.
pub fn conjugate_to_normal_form(gens: &[Moebius], tol: Tolerance) -> NormalForm {
    let nonid: Vec<&Moebius> = gens.iter().filter(|m| !m.is_identity(tol)).collect();
    let identity_form = |kind| NormalForm {
        kind,
        conjugator: Moebius::identity(),
        gens: gens.to_vec(),
    };
    if nonid.is_empty() {
        return identity_form(NormalFormKind::Trivial);
    }
    let sets: Vec<Vec<SpherePoint>> = nonid
        .iter()
        .filter_map(|m| m.fixed_points(tol).points().map(|p| p.to_vec()))
        .collect();
    let common: Vec<SpherePoint> = sets[0]
        .iter()
        .filter(|p| sets[1..].iter().all(|s| s.iter().any(|q| q.eq_tol(p, tol))))
        .cloned()
        .collect();
    match common.as_slice() {
        [p, q] => {
            // points are sorted, so `p` is the lexicographically smaller one
            let g = match (p, q) {
                (SpherePoint::Finite(p), SpherePoint::Infinity) => Moebius::translation(&-p),
                (SpherePoint::Finite(p), SpherePoint::Finite(q)) => {
                    Moebius::new(Scalar::one(), -p, Scalar::one(), -q)
                        .expect("distinct fixed points")
                }
                _ => Moebius::identity(),
            };
            NormalForm {
                kind: NormalFormKind::Diagonal,
                gens: conjugate_all(gens, &g),
                conjugator: g,
            }
        }
        [p] => {
            let g = match p {
                SpherePoint::Infinity => Moebius::identity(),
                SpherePoint::Finite(p) => {
                    Moebius::new(Scalar::zero(), Scalar::one(), Scalar::one(), -p)
                        .expect("nonsingular")
                }
            };
            NormalForm {
                kind: NormalFormKind::UpperTriangular,
                gens: conjugate_all(gens, &g),
                conjugator: g,
            }
        }
        _ => match klein_pair(&nonid, tol) {
            Some((first, second)) => {
                let fa = first.fixed_points(tol);
                let fb = second.fixed_points(tol);
                let (fa, fb) = (fa.points().unwrap(), fb.points().unwrap());
                let g = Moebius::map_points(&fa[0], &fb[0], &fa[1])
                    .expect("Klein four fixed points are distinct");
                NormalForm {
                    kind: NormalFormKind::KleinFour,
                    gens: conjugate_all(gens, &g),
                    conjugator: g,
                }
            }
            None => identity_form(NormalFormKind::General),
        },
    }
}
