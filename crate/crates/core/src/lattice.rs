//! Lattices in ℂ, multiplicative groups A ⊂ ℂ×, and grains.

use std::cmp::Ordering;

use num_complex::Complex64;
use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::numerics::{root_of_unity, Scalar, Tolerance};

/// Largest number of candidate products [`member_mult`] will try.
pub const MEMBER_SEARCH_LIMIT: u64 = 20_000_000;

pub const DEFAULT_EXP_BOUND: u32 = 20;

/// A lattice `ℤλ₁ ⊕ ℤλ₂` with a Gauss-reduced, positively oriented basis:
/// `|λ₁| ≤ |λ₂|`, `|Re(λ₂/λ₁)| ≤ 1/2`, `Im(λ₂/λ₁) > 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Lattice {
    l1: Scalar,
    l2: Scalar,
}

fn im_cross(u: &Scalar, v: &Scalar) -> Scalar {
    // Im(conj(u)·v), the oriented area of (u, v)
    (&u.conj() * v).imag_part()
}

fn re_dot(u: &Scalar, v: &Scalar) -> Scalar {
    (&u.conj() * v).real_part()
}

/// Real number `x` with `|x − round(x)| ≤ slack`, as that integer.
fn near_integer(x: &Scalar, slack: f64) -> Option<i64> {
    let k = x.round_re()?;
    match x {
        Scalar::Exact { .. } => (x == &Scalar::from_int(k)).then_some(k),
        Scalar::Approx(w) => ((w.re - k as f64).abs() <= slack).then_some(k),
    }
}

/// Gauss reduction of `(λ₁, λ₂)`.
pub fn reduce_basis(l1: &Scalar, l2: &Scalar, tol: Tolerance) -> Result<Lattice> {
    let cross = im_cross(l1, l2);
    let dependent = match &cross {
        Scalar::Exact { .. } => cross.is_exact_zero(),
        Scalar::Approx(w) => w.re.abs() <= tol.eps() * l1.abs() * l2.abs(),
    };
    if dependent || l1.is_exact_zero() || l2.is_exact_zero() {
        return Err(Error::DependentPeriods(format!(
            "{l1} and {l2} are linearly dependent over ℝ"
        )));
    }
    let half = Scalar::from_ratio(1, 2);
    let (mut u, mut v) = (l1.clone(), l2.clone());
    if v.norm_sqr().cmp_re(&u.norm_sqr()) == Ordering::Less {
        std::mem::swap(&mut u, &mut v);
    }
    for _ in 0..10_000 {
        let mu = &re_dot(&u, &v) / &u.norm_sqr();
        let abs_mu = if mu.re_sign() == Ordering::Less {
            -&mu
        } else {
            mu.clone()
        };
        if abs_mu.cmp_re(&half) == Ordering::Greater {
            let k = mu
                .round_re()
                .ok_or_else(|| Error::InvalidInput("lattice reduction overflow".into()))?;
            v = &v - &(&Scalar::from_int(k) * &u);
        }
        if v.norm_sqr().cmp_re(&u.norm_sqr()) == Ordering::Less {
            std::mem::swap(&mut u, &mut v);
        } else {
            break;
        }
    }
    if im_cross(&u, &v).re_sign() == Ordering::Less {
        v = -v;
    }
    Ok(Lattice { l1: u, l2: v })
}

impl Lattice {
    pub fn new(l1: Scalar, l2: Scalar) -> Result<Self> {
        reduce_basis(&l1, &l2, Tolerance::default())
    }

    pub fn from_ints(a: (i64, i64), b: (i64, i64)) -> Result<Self> {
        Self::new(Scalar::gaussian(a.0, a.1), Scalar::gaussian(b.0, b.1))
    }

    /// `⟨1, i⟩`.
    pub fn square() -> Self {
        Self {
            l1: Scalar::one(),
            l2: Scalar::i(),
        }
    }

    /// `⟨1, e^{iπ/3}⟩`.
    pub fn hexagonal() -> Self {
        Self {
            l1: Scalar::one(),
            l2: Scalar::from_c64(Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_3)),
        }
    }

    pub fn periods(&self) -> [&Scalar; 2] {
        [&self.l1, &self.l2]
    }

    pub fn l1(&self) -> &Scalar {
        &self.l1
    }

    pub fn l2(&self) -> &Scalar {
        &self.l2
    }

    pub fn is_exact(&self) -> bool {
        self.l1.is_exact() && self.l2.is_exact()
    }

    pub fn tau(&self) -> Scalar {
        &self.l2 / &self.l1
    }

    /// Area of a fundamental parallelogram.
    pub fn covolume(&self) -> Scalar {
        im_cross(&self.l1, &self.l2)
    }

    /// `cΛ`.
    pub fn scaled(&self, c: &Scalar) -> Result<Self> {
        reduce_basis(&(c * &self.l1), &(c * &self.l2), Tolerance::default())
    }

    /// Real coordinates `(x, y)` with `z = x λ₁ + y λ₂`.
    pub fn coordinates(&self, z: &Scalar) -> (Scalar, Scalar) {
        let area = self.covolume();
        let x = &im_cross(z, &self.l2) / &area;
        let y = &im_cross(&self.l1, z) / &area;
        (x, y)
    }

    /// Integer coordinates of `z` if `z ∈ Λ`.
    pub fn integer_coordinates(&self, z: &Scalar, tol: Tolerance) -> Option<(i64, i64)> {
        let (x, y) = self.coordinates(z);
        let slack = tol.eps() * (1.0 + x.abs() + y.abs());
        Some((near_integer(&x, slack)?, near_integer(&y, slack)?))
    }

    pub fn contains(&self, z: &Scalar, tol: Tolerance) -> bool {
        self.integer_coordinates(z, tol).is_some()
    }

    /// `z` reduced into the fundamental parallelogram `[0,1)λ₁ + [0,1)λ₂`.
    pub fn reduce_point(&self, z: &Scalar) -> Scalar {
        let (x, y) = self.coordinates(z);
        let fx = x.re_f64().floor() as i64;
        let fy = y.re_f64().floor() as i64;
        &(z - &(&Scalar::from_int(fx) * &self.l1)) - &(&Scalar::from_int(fy) * &self.l2)
    }

    /// Distance from `z` to the nearest lattice point.
    pub fn distance_to_lattice(&self, z: &Scalar) -> f64 {
        let r = self.reduce_point(z).to_c64();
        let (l1, l2) = (self.l1.to_c64(), self.l2.to_c64());
        let mut best = f64::INFINITY;
        for i in -1..=2 {
            for j in -1..=2 {
                let p = l1 * i as f64 + l2 * j as f64;
                best = best.min((r - p).norm());
            }
        }
        best
    }

    /// Order of the rotation group `{ζ : ζΛ = Λ}`: 4, 6 or 2.
    pub fn symmetry_order(&self, tol: Tolerance) -> u32 {
        let tau = self.tau();
        if tau.approx_eq(&Scalar::i(), tol) {
            return 4;
        }
        let hex = [root_of_unity(6, 1), root_of_unity(3, 1)];
        if hex.iter().any(|h| tau.approx_eq(h, tol)) {
            6
        } else {
            2
        }
    }

    /// Whether `ζ Λ = Λ` for the given root of unity.
    pub fn is_invariant_under(&self, zeta: &Scalar, tol: Tolerance) -> bool {
        self.contains(&(zeta * &self.l1), tol) && self.contains(&(zeta * &self.l2), tol)
    }
}

/// `[Λ₁ : Λ₀]` if `Λ₀ ⊆ Λ₁`.
pub fn is_sublattice(l0: &Lattice, l1: &Lattice, tol: Tolerance) -> Option<u64> {
    let (a, b) = l1.integer_coordinates(&l0.l1, tol)?;
    let (c, d) = l1.integer_coordinates(&l0.l2, tol)?;
    let det = (a as i128 * d as i128 - b as i128 * c as i128).unsigned_abs();
    (det > 0).then_some(det as u64)
}

impl Serialize for Lattice {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Wire<'a> {
            periods: [&'a Scalar; 2],
        }
        Wire {
            periods: self.periods(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Lattice {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Wire {
            periods: [Scalar; 2],
        }
        let w = Wire::deserialize(deserializer)?;
        let [l1, l2] = w.periods;
        Lattice::new(l1, l2).map_err(de::Error::custom)
    }
}

/// A finitely generated subgroup of ℂ× together with the `r`-th roots of
/// unity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultGroup {
    pub generators: Vec<Scalar>,
    #[serde(default = "one_u32")]
    pub torsion: u32,
}

fn one_u32() -> u32 {
    1
}

impl MultGroup {
    pub fn new(generators: Vec<Scalar>, torsion: u32) -> Result<Self> {
        let g = Self {
            generators,
            torsion,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.torsion == 0 {
            return Err(Error::InvalidInput("torsion order must be positive".into()));
        }
        if self
            .generators
            .iter()
            .any(|g| g.is_exact_zero() || g.abs() == 0.0)
        {
            return Err(Error::InvalidInput(
                "generators of A must be nonzero".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of a bounded membership search.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum Membership {
    /// `x = ζ^root · ∏ gᵢ^{eᵢ}` with `ζ = e^{2πi/r}`.
    Found {
        exponents: Vec<i64>,
        root: u32,
    },
    NotFoundWithinBound {
        bound: u32,
    },
}

impl Membership {
    pub fn is_member(&self) -> bool {
        matches!(self, Membership::Found { .. })
    }
}

/// Bounded search for `x` in `A`: all exponent vectors with `|eᵢ| ≤ bound`.
pub fn member_mult(
    x: &Scalar,
    group: &MultGroup,
    bound: u32,
    tol: Tolerance,
) -> Result<Membership> {
    group.validate()?;
    if x.is_exact_zero() {
        return Err(Error::InvalidInput("0 is never in a subgroup of ℂ×".into()));
    }
    let k = group.generators.len() as u32;
    let width = 2 * bound as u64 + 1;
    let total = width
        .checked_pow(k)
        .and_then(|t| t.checked_mul(group.torsion as u64))
        .unwrap_or(u64::MAX);
    if total > MEMBER_SEARCH_LIMIT {
        return Err(Error::SearchTooLarge(format!(
            "{total} candidate products exceed the limit {MEMBER_SEARCH_LIMIT}"
        )));
    }
    let approx =
        !x.is_exact() || group.torsion > 4 || group.generators.iter().any(|g| !g.is_exact());
    let b = bound as i64;
    let roots = (0..group.torsion).map(|j| root_of_unity(group.torsion, j as i64));
    let hit = if approx {
        let powers: Vec<Vec<Complex64>> = group
            .generators
            .iter()
            .map(|g| (-b..=b).map(|e| g.to_c64().powi(e as i32)).collect())
            .collect();
        let roots: Vec<Complex64> = roots.map(|r| r.to_c64()).collect();
        let target = x.to_c64();
        let slack = tol.eps() * target.norm().max(1.0);
        odometer(
            &powers,
            b,
            Complex64::new(1.0, 0.0),
            |p, q| p * q,
            |prod| {
                roots
                    .iter()
                    .position(|z| (prod * z - target).norm() <= slack)
            },
        )
    } else {
        let powers: Vec<Vec<Scalar>> = group
            .generators
            .iter()
            .map(|g| (-b..=b).map(|e| g.powi(e)).collect())
            .collect();
        let roots: Vec<Scalar> = roots.collect();
        odometer(
            &powers,
            b,
            Scalar::one(),
            |p, q| p * q,
            |prod| roots.iter().position(|z| &(prod * z) == x),
        )
    };
    Ok(match hit {
        Some((exponents, root)) => Membership::Found {
            exponents,
            root: root as u32,
        },
        None => Membership::NotFoundWithinBound { bound },
    })
}

/// Visits exponent vectors in `[-b, b]^k`, smallest `|e|` first in each slot,
/// and returns the first one whose product `hit` accepts.
fn odometer<T>(
    powers: &[Vec<T>],
    b: i64,
    one: T,
    mul: impl Fn(&T, &T) -> T,
    hit: impl Fn(&T) -> Option<usize>,
) -> Option<(Vec<i64>, usize)> {
    let order: Vec<i64> = std::iter::once(0)
        .chain((1..=b).flat_map(|e| [e, -e]))
        .collect();
    let mut idx = vec![0usize; powers.len()];
    loop {
        let mut prod = mul(&one, &one);
        for (i, &j) in idx.iter().enumerate() {
            prod = mul(&prod, &powers[i][(order[j] + b) as usize]);
        }
        if let Some(r) = hit(&prod) {
            return Some((idx.iter().map(|&j| order[j]).collect(), r));
        }
        let mut slot = 0;
        loop {
            if slot == idx.len() {
                return None;
            }
            idx[slot] += 1;
            if idx[slot] < order.len() {
                break;
            }
            idx[slot] = 0;
            slot += 1;
        }
    }
}

/// Whether `e^{cλ₁}` and `e^{cλ₂}` both lie in `A` (within the search bound).
pub fn is_grain(
    c: &Scalar,
    lattice: &Lattice,
    group: &MultGroup,
    bound: u32,
    tol: Tolerance,
) -> Result<bool> {
    if c.is_zero(tol) {
        return Err(Error::ZeroGrain);
    }
    for period in lattice.periods() {
        let x = (c * period).exp();
        if !member_mult(&x, group, bound, tol)?.is_member() {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, Debug, Serialize)]
pub struct GrainSet {
    pub lattice: Lattice,
    /// `A = exp(A′)`, generated by the exponentials of the `A′` periods.
    pub group: MultGroup,
    pub grains: Vec<Scalar>,
}

/// All `c = a/λ₁` with `a ∈ A′` of coefficient height at most `height`
/// such that `cΛ ⊆ A′`, each re-checked with [`is_grain`] against
/// `A = exp(A′)`.
pub fn grains_enumerate(
    lattice: &Lattice,
    a_prime: &Lattice,
    height: u32,
    exp_bound: u32,
    tol: Tolerance,
) -> Result<GrainSet> {
    let group = MultGroup::new(a_prime.periods().iter().map(|a| a.exp()).collect(), 1)?;
    let h = height as i64;
    let mut grains = Vec::new();
    for m in -h..=h {
        for n in -h..=h {
            if m == 0 && n == 0 {
                continue;
            }
            let a = &(&Scalar::from_int(m) * a_prime.l1()) + &(&Scalar::from_int(n) * a_prime.l2());
            let c = &a / lattice.l1();
            let image = &c * lattice.l2();
            let Some((p, q)) = a_prime.integer_coordinates(&image, tol) else {
                continue;
            };
            // exponents needed in A are the A′ coordinates of cλ₁, cλ₂
            let needed = [m, n, p, q]
                .iter()
                .map(|e| e.unsigned_abs())
                .max()
                .unwrap_or(0);
            let bound = exp_bound.max(needed as u32);
            if is_grain(&c, lattice, &group, bound, tol)? {
                grains.push(c);
            }
        }
    }
    grains.sort_by(|x, y| {
        x.abs()
            .partial_cmp(&y.abs())
            .unwrap_or(Ordering::Equal)
            .then(x.lex_cmp(y))
    });
    Ok(GrainSet {
        lattice: lattice.clone(),
        group,
        grains,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    /// Independent oracle: every period of `b` is an integer combination of
    /// `a`, by brute-force search over small coefficients.
    fn spans(a: [Complex64; 2], b: Complex64) -> bool {
        (-40..=40)
            .any(|m| (-40..=40).any(|n| (a[0] * m as f64 + a[1] * n as f64 - b).norm() < 1e-7))
    }

    #[test]
    fn reduction_examples() {
        let l = Lattice::from_ints((1, 0), (0, 1)).unwrap();
        assert_eq!(l.periods(), [&Scalar::one(), &Scalar::i()]);
        let l = Lattice::from_ints((1, 0), (1, 1)).unwrap();
        assert_eq!(l.periods(), [&Scalar::one(), &Scalar::i()]);
        let l = Lattice::from_ints((2, 0), (1, 2)).unwrap();
        let tau = l.tau();
        assert!(tau.re_f64().abs() <= 0.5 && tau.im_f64() > 0.0 && tau.abs() >= 1.0);
        assert!(l.is_exact());
        assert!(Lattice::from_ints((1, 0), (2, 0)).is_err());
    }

    #[test]
    fn symmetry_examples() {
        assert_eq!(Lattice::square().symmetry_order(tol()), 4);
        assert_eq!(Lattice::hexagonal().symmetry_order(tol()), 6);
        assert_eq!(
            Lattice::from_ints((1, 0), (0, 2))
                .unwrap()
                .symmetry_order(tol()),
            2
        );
        // hexagonal lattice in a non-reduced basis
        let w = Complex64::from_polar(1.0, PI / 3.0);
        let l = Lattice::new(
            Scalar::from_c64(w * 3.0 + 1.0),
            Scalar::from_c64(w * 2.0 + 1.0),
        )
        .unwrap();
        assert_eq!(l.symmetry_order(tol()), 6);
    }

    #[test]
    fn sublattice_examples() {
        let l = Lattice::square();
        assert_eq!(is_sublattice(&l, &l, tol()), Some(1));
        let two = l.scaled(&Scalar::from_int(2)).unwrap();
        assert_eq!(is_sublattice(&two, &l, tol()), Some(4));
        let sub = Lattice::from_ints((2, 0), (0, 1)).unwrap();
        assert_eq!(is_sublattice(&sub, &l, tol()), Some(2));
        assert_eq!(is_sublattice(&l, &two, tol()), None);
    }

    #[test]
    fn membership_examples() {
        let a = MultGroup::new(vec![Scalar::from_int(2)], 1).unwrap();
        assert!(member_mult(&Scalar::from_int(2), &a, 20, tol())
            .unwrap()
            .is_member());
        assert!(member_mult(&Scalar::one(), &a, 20, tol())
            .unwrap()
            .is_member());
        assert_eq!(
            member_mult(&Scalar::from_int(3), &a, 20, tol()).unwrap(),
            Membership::NotFoundWithinBound { bound: 20 }
        );
        assert!(member_mult(&Scalar::from_ratio(1, 1024), &a, 20, tol())
            .unwrap()
            .is_member());
        let with_sign = MultGroup::new(vec![Scalar::from_int(2)], 2).unwrap();
        assert!(member_mult(&Scalar::from_int(-8), &with_sign, 20, tol())
            .unwrap()
            .is_member());
        let huge = MultGroup::new(vec![Scalar::from_int(2); 6], 1).unwrap();
        assert!(matches!(
            member_mult(&Scalar::one(), &huge, 20, tol()),
            Err(Error::SearchTooLarge(_))
        ));
    }

    fn log2_lattice() -> Lattice {
        Lattice::new(
            Scalar::approx(0.0, 2.0 * PI),
            Scalar::approx(2f64.ln(), 0.0),
        )
        .unwrap()
    }

    #[test]
    fn grain_examples() {
        let lat = log2_lattice();
        let a = MultGroup::new(vec![Scalar::from_int(2)], 1).unwrap();
        assert!(is_grain(&Scalar::one(), &lat, &a, 20, tol()).unwrap());
        assert!(!is_grain(&Scalar::from_ratio(1, 2), &lat, &a, 20, tol()).unwrap());
        assert_eq!(
            is_grain(&Scalar::zero(), &lat, &a, 20, tol()),
            Err(Error::ZeroGrain)
        );
        // c·2πi = 2πi·√2 gives an irrational rotation, never in a torsion-free A
        let c = Scalar::approx(2f64.sqrt(), 0.0);
        assert!(!is_grain(&c, &lat, &a, 20, tol()).unwrap());
    }

    #[test]
    fn grain_enumeration_examples() {
        let lat = log2_lattice();
        let set = grains_enumerate(&lat, &lat, 10, 20, tol()).unwrap();
        assert!(set
            .grains
            .iter()
            .any(|c| c.approx_eq(&Scalar::one(), tol())));
        assert_eq!(set.grains.len(), 20);

        let sq = Lattice::square();
        let a2 = Lattice::from_ints((2, 0), (0, 2)).unwrap();
        let set = grains_enumerate(&sq, &a2, 3, 20, tol()).unwrap();
        assert!(set.grains.contains(&Scalar::from_int(2)));
        assert!(set.grains.contains(&Scalar::gaussian(0, 2)));
        assert!(!set.grains.contains(&Scalar::one()));

        let generic = Lattice::new(Scalar::one(), Scalar::approx(0.3, 2f64.sqrt())).unwrap();
        let other =
            Lattice::new(Scalar::approx(PI, 0.0), Scalar::approx(0.1, 3f64.sqrt())).unwrap();
        assert!(grains_enumerate(&generic, &other, 5, 20, tol())
            .unwrap()
            .grains
            .is_empty());
    }

    #[test]
    fn lattice_json() {
        let l: Lattice = serde_json::from_str(r#"{"periods": [["1","0"], ["1","1"]]}"#).unwrap();
        assert_eq!(l, Lattice::square());
        assert!(serde_json::from_str::<Lattice>(r#"{"periods": [["1","0"], ["2","0"]]}"#).is_err());
    }

    fn period() -> impl Strategy<Value = Complex64> {
        (-5.0f64..5.0, -5.0f64..5.0).prop_map(|(r, i)| Complex64::new(r, i))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn reduction_preserves_lattice(a in period(), b in period()) {
            let area = (a.conj() * b).im;
            prop_assume!(area.abs() > 0.5);
            let l = Lattice::new(a.into(), b.into()).unwrap();
            let red = [l.l1().to_c64(), l.l2().to_c64()];
            prop_assert!(spans(red, a) && spans(red, b));
            prop_assert!(spans([a, b], red[0]) && spans([a, b], red[1]));
            let tau = l.tau().to_c64();
            prop_assert!(tau.re.abs() <= 0.5 + 1e-12 && tau.norm() >= 1.0 - 1e-12 && tau.im > 0.0);
        }

        #[test]
        fn exact_reduction_is_exact(a in (-9i64..9, -9i64..9), b in (-9i64..9, -9i64..9)) {
            prop_assume!(a.0 * b.1 - a.1 * b.0 != 0);
            let l = Lattice::from_ints(a, b).unwrap();
            prop_assert!(l.is_exact());
            prop_assert_eq!(is_sublattice(&Lattice::from_ints(a, b).unwrap(), &l, tol()), Some(1));
        }

        #[test]
        fn symmetry_order_is_scale_invariant(which in 0usize..3, c in period()) {
            prop_assume!(c.norm() > 0.1);
            let base = [Lattice::square(), Lattice::hexagonal(), Lattice::from_ints((1, 0), (1, 3)).unwrap()];
            let l = &base[which];
            let scaled = l.scaled(&c.into()).unwrap();
            prop_assert_eq!(scaled.symmetry_order(tol()), l.symmetry_order(tol()));
        }

        #[test]
        fn enumerated_grains_verify(h in 1u32..5) {
            let lat = Lattice::from_ints((1, 0), (0, 1)).unwrap();
            let ap = Lattice::from_ints((2, 0), (1, 3)).unwrap();
            let set = grains_enumerate(&lat, &ap, h, 20, tol()).unwrap();
            for c in &set.grains {
                prop_assert!(is_grain(c, &lat, &set.group, 40, tol()).unwrap());
                prop_assert!(is_sublattice(&lat.scaled(c).unwrap(), &ap, tol()).is_some());
            }
        }
    }
}
