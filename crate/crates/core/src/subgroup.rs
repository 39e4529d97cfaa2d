//! Conjugacy classes of subgroups of PSL(2,ℂ): recognition, centralizers and
//! normalizers.
//!
//! Every [`SubgroupClass`] names a standard representative. When a witness
//! `w` is present, `w Γ w⁻¹` lies in that representative. The standard
//! representatives are:
//!
//! | tag | representative |
//! |---|---|
//! | `C2` | `{1, z ↦ −z}` |
//! | `CyclicDiagonal(n)` | `z ↦ e^{2πik/n} z` |
//! | `…SubgroupOfTorus`, `Cstar` | diagonal matrices `z ↦ μz` |
//! | `SubgroupOfTranslations`, `TranslationsFull` | `z ↦ z + t` |
//! | `KleinFour` | `{1, z ↦ −z, z ↦ 1/z, z ↦ −1/z}` |
//! | `Dihedral(n)` | `CyclicDiagonal(n)` together with `z ↦ 1/z` |
//! | `Tetrahedral`, `Octahedral` | rotations of the cube with 2-fold axes through `0, ±1, ±i, ∞` |
//! | `Icosahedral` | an icosahedral group containing the tetrahedral one |
//! | `C2xCstar` | `z ↦ μz` and `z ↦ μ/z` |
//! | `CnLtimesC(n)` | `z ↦ ζz + t`, `ζⁿ = 1` |
//! | `Affine` | `z ↦ az + t` |

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::moebius::{
    commuting_pair_class, conjugate_to_normal_form, CommutingPairClass, ElementType, FixedPoints,
    Moebius, NormalFormKind, SpherePoint,
};
use crate::numerics::{lcm_u64, root_of_unity, root_of_unity_order, Scalar, Tolerance};

pub const DEFAULT_CAP: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "class")]
pub enum SubgroupTag {
    Trivial,
    C2,
    CyclicDiagonal { n: u32 },
    FiniteSubgroupOfTorus,
    InfiniteSubgroupOfTorus,
    SubgroupOfTranslations,
    KleinFour,
    Dihedral { n: u32 },
    Tetrahedral,
    Octahedral,
    Icosahedral,
    C2xCstar,
    Cstar,
    TranslationsFull,
    CnLtimesC { n: u32 },
    Affine,
    Full,
    Unrecognized,
}

pub(crate) fn subscript(n: u32) -> String {
    n.to_string()
        .chars()
        .map(|c| char::from_u32(0x2080 + c.to_digit(10).unwrap()).unwrap())
        .collect()
}

impl SubgroupTag {
    /// Conventional symbol, e.g. `C₂ × ℂ×`.
    pub fn symbol(&self) -> String {
        match self {
            Self::Trivial => "1".into(),
            Self::C2 => "C₂".into(),
            Self::CyclicDiagonal { n } => format!("C{}", subscript(*n)),
            Self::FiniteSubgroupOfTorus => "finite subgroup of ℂ×".into(),
            Self::InfiniteSubgroupOfTorus => "infinite subgroup of ℂ×".into(),
            Self::SubgroupOfTranslations => "subgroup of ℂ".into(),
            Self::KleinFour => "C₂ × C₂".into(),
            Self::Dihedral { n } => format!("D{}", subscript(*n)),
            Self::Tetrahedral => "tetrahedral group".into(),
            Self::Octahedral => "rotations of the cube".into(),
            Self::Icosahedral => "icosahedral group".into(),
            Self::C2xCstar => "C₂ × ℂ×".into(),
            Self::Cstar => "ℂ×".into(),
            Self::TranslationsFull => "ℂ".into(),
            Self::CnLtimesC { n } => format!("C{} ⋉ ℂ", subscript(*n)),
            Self::Affine => "ℂ× ⋉ ℂ".into(),
            Self::Full => "PSL(2,ℂ)".into(),
            Self::Unrecognized => "unrecognized".into(),
        }
    }

    /// Order of the group, when finite and known.
    pub fn order(&self) -> Option<usize> {
        Some(match self {
            Self::Trivial => 1,
            Self::C2 => 2,
            Self::CyclicDiagonal { n } => *n as usize,
            Self::KleinFour => 4,
            Self::Dihedral { n } => 2 * *n as usize,
            Self::Tetrahedral => 12,
            Self::Octahedral => 24,
            Self::Icosahedral => 60,
            _ => return None,
        })
    }

    pub fn is_finite(&self) -> bool {
        self.order().is_some() || *self == Self::FiniteSubgroupOfTorus
    }
}

impl fmt::Display for SubgroupTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.symbol())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SubgroupClass {
    #[serde(flatten)]
    pub tag: SubgroupTag,
    pub symbol: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Moebius>,
}

impl SubgroupClass {
    pub fn new(tag: SubgroupTag, witness: Option<Moebius>) -> Self {
        Self {
            tag,
            symbol: tag.symbol(),
            witness,
        }
    }

    pub fn in_frame(tag: SubgroupTag, witness: &Moebius) -> Self {
        Self::new(tag, Some(witness.clone()))
    }

    fn to_standard(&self, m: &Moebius) -> Moebius {
        match &self.witness {
            Some(w) => m.conjugated_by(w),
            None => m.clone(),
        }
    }

    fn to_original(&self, m: &Moebius) -> Moebius {
        match &self.witness {
            Some(w) => m.conjugated_by(&w.inverse()),
            None => m.clone(),
        }
    }

    /// Membership of `m` in the group this class denotes.
    ///
    /// For the torus and translation subgroups only containment in the
    /// ambient one-parameter group is checked.
    pub fn contains(&self, m: &Moebius, tol: Tolerance) -> bool {
        let s = self.to_standard(m);
        let loose = tol.scaled(s.max_abs_entry().max(1.0));
        let diagonal = s.b().is_zero(loose) && s.c().is_zero(loose);
        let antidiagonal = s.a().is_zero(loose) && s.d().is_zero(loose);
        let upper = s.c().is_zero(loose);
        let multiplier = || s.a() * s.a();
        let unipotent = upper && multiplier().approx_eq(&Scalar::one(), loose);
        let root = |n: u32| -> bool {
            root_of_unity_order(&multiplier(), n, tol).is_some_and(|k| n.is_multiple_of(k))
        };
        match self.tag {
            SubgroupTag::Trivial => s.is_identity(tol),
            SubgroupTag::Full => true,
            SubgroupTag::Unrecognized => false,
            SubgroupTag::C2 => diagonal && root(2),
            SubgroupTag::CyclicDiagonal { n } => diagonal && root(n),
            SubgroupTag::FiniteSubgroupOfTorus
            | SubgroupTag::InfiniteSubgroupOfTorus
            | SubgroupTag::Cstar => diagonal,
            SubgroupTag::SubgroupOfTranslations | SubgroupTag::TranslationsFull => unipotent,
            SubgroupTag::C2xCstar => diagonal || antidiagonal,
            SubgroupTag::CnLtimesC { n } => upper && root(n),
            SubgroupTag::Affine => upper,
            SubgroupTag::KleinFour
            | SubgroupTag::Dihedral { .. }
            | SubgroupTag::Tetrahedral
            | SubgroupTag::Octahedral
            | SubgroupTag::Icosahedral => {
                standard_elements(self.tag).is_some_and(|els| els.iter().any(|e| e.eq_tol(&s, tol)))
            }
        }
    }

    /// Elements of the group: all of them for finite standard classes,
    /// otherwise `count` pseudo-random members.
    pub fn sample_elements<R: Rng>(&self, rng: &mut R, count: usize) -> Vec<Moebius> {
        if let Some(els) = standard_elements(self.tag) {
            return els.iter().map(|e| self.to_original(e)).collect();
        }
        let mut unit = || {
            let (r, t): (f64, f64) = (
                rng.gen_range(0.3..2.0),
                rng.gen_range(0.0..std::f64::consts::TAU),
            );
            Complex64::from_polar(r, t)
        };
        let mut out = Vec::with_capacity(count);
        for k in 0..count {
            let (u, v, w) = (unit(), unit(), unit());
            let s = match self.tag {
                SubgroupTag::C2xCstar if k % 2 == 1 => {
                    Moebius::from_c64(0.0.into(), u, -u.inv(), 0.0.into())
                }
                SubgroupTag::C2xCstar
                | SubgroupTag::Cstar
                | SubgroupTag::FiniteSubgroupOfTorus
                | SubgroupTag::InfiniteSubgroupOfTorus => Moebius::diagonal(&u.into()),
                SubgroupTag::TranslationsFull | SubgroupTag::SubgroupOfTranslations => {
                    Ok(Moebius::translation(&v.into()))
                }
                SubgroupTag::CnLtimesC { n } => {
                    let zeta = root_of_unity(n, k as i64);
                    Moebius::affine(&zeta, &v.into())
                }
                SubgroupTag::Affine => Moebius::affine(&u.into(), &v.into()),
                _ => Moebius::from_c64(u, v, w, u + v * w),
            };
            if let Ok(s) = s {
                out.push(self.to_original(&s));
            }
        }
        out
    }
}

/// Result of a bounded closure computation.
#[derive(Clone, Debug)]
pub enum Closure {
    Finite(Vec<Moebius>),
    ExceedsCap,
}

impl Closure {
    pub fn elements(&self) -> Option<&[Moebius]> {
        match self {
            Closure::Finite(e) => Some(e),
            Closure::ExceedsCap => None,
        }
    }
}

/// Breadth-first closure of `gens` under composition and inverses.
pub fn closure_enumerate(gens: &[Moebius], cap: usize, tol: Tolerance) -> Closure {
    let mut steps: Vec<Moebius> = Vec::new();
    for g in gens {
        for h in [g.clone(), g.inverse()] {
            if !h.is_identity(tol) && !steps.iter().any(|s| s.eq_tol(&h, tol)) {
                steps.push(h);
            }
        }
    }
    let mut elements = vec![Moebius::identity()];
    let mut frontier = 0;
    while frontier < elements.len() {
        let current = elements[frontier].clone();
        frontier += 1;
        for s in &steps {
            let next = current.compose(s);
            if !elements.iter().any(|e| e.eq_tol(&next, tol)) {
                if elements.len() >= cap {
                    return Closure::ExceedsCap;
                }
                elements.push(next);
            }
        }
    }
    Closure::Finite(elements)
}

fn element_order(m: &Moebius, cap: usize, tol: Tolerance) -> Option<u32> {
    match m.classify_element(cap as u32, tol) {
        ElementType::Identity => Some(1),
        ElementType::Elliptic { order } => order,
        _ => None,
    }
}

type Census = BTreeMap<u32, usize>;

fn census(elements: &[Moebius], cap: usize, tol: Tolerance) -> Option<Census> {
    let mut out = Census::new();
    for e in elements {
        *out.entry(element_order(e, cap, tol)?).or_default() += 1;
    }
    Some(out)
}

fn euler_phi(n: u32) -> usize {
    (1..=n).filter(|k| num_integer::gcd(*k, n) == 1).count()
}

fn cyclic_census(n: u32) -> Census {
    (1..=n)
        .filter(|d| n.is_multiple_of(*d))
        .map(|d| (d, euler_phi(d)))
        .collect()
}

fn expected_census(tag: SubgroupTag) -> Option<Census> {
    Some(match tag {
        SubgroupTag::Dihedral { n } => {
            let mut c = cyclic_census(n);
            *c.entry(2).or_default() += n as usize;
            c
        }
        SubgroupTag::KleinFour => [(1, 1), (2, 3)].into(),
        SubgroupTag::Tetrahedral => [(1, 1), (2, 3), (3, 8)].into(),
        SubgroupTag::Octahedral => [(1, 1), (2, 9), (3, 8), (4, 6)].into(),
        SubgroupTag::Icosahedral => [(1, 1), (2, 15), (3, 20), (5, 24)].into(),
        _ => return None,
    })
}

/// Order-3 rotation of the cube cycling `1 → i → ∞ → 1`.
fn cube_r3() -> Moebius {
    let one = SpherePoint::int(1);
    let i = SpherePoint::Finite(Scalar::i());
    let p = Moebius::map_points(&one, &i, &SpherePoint::Infinity).unwrap();
    let q = Moebius::map_points(&i, &SpherePoint::Infinity, &one).unwrap();
    q.inverse().compose(&p)
}

/// Quarter turn `z ↦ iz`.
fn cube_r4() -> Moebius {
    Moebius::affine(&Scalar::i(), &Scalar::zero()).unwrap()
}

/// Involution with fixed points `u ≠ v` (both finite).
fn involution_fixing(u: &Scalar, v: &Scalar) -> Result<Moebius> {
    let s = u + v;
    Moebius::new(
        s.clone(),
        &Scalar::from_int(-2) * &(u * v),
        Scalar::from_int(2),
        -s,
    )
}

/// Half-turn about an edge axis of the icosahedron with vertices at the
/// cyclic permutations of `(0, ±1, ±φ)`.
fn icosa_half_turn() -> Moebius {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    // stereographic image of the axis (1, φ², φ)/(2φ) and its antipode
    let p = Complex64::new(1.0 / phi, phi);
    let q = -1.0 / p.conj();
    involution_fixing(&p.into(), &q.into()).unwrap()
}

fn klein_generators() -> Vec<Moebius> {
    vec![Moebius::diagonal(&Scalar::i()).unwrap(), Moebius::swap()]
}

/// `z ↦ e^{2πi/n} z`.
pub fn rotation(n: u32) -> Moebius {
    Moebius::diagonal(&Scalar::from_c64(Complex64::from_polar(
        1.0,
        std::f64::consts::PI / n as f64,
    )))
    .unwrap()
}

/// Generators of the standard representative of a finite tag.
pub fn standard_generators(tag: SubgroupTag) -> Option<Vec<Moebius>> {
    Some(match tag {
        SubgroupTag::Trivial => vec![],
        SubgroupTag::C2 => vec![Moebius::diagonal(&Scalar::i()).unwrap()],
        SubgroupTag::CyclicDiagonal { n } => vec![rotation(n)],
        SubgroupTag::KleinFour => klein_generators(),
        SubgroupTag::Dihedral { n } => vec![rotation(n), Moebius::swap()],
        SubgroupTag::Tetrahedral => [klein_generators(), vec![cube_r3()]].concat(),
        SubgroupTag::Octahedral => [klein_generators(), vec![cube_r3(), cube_r4()]].concat(),
        SubgroupTag::Icosahedral => {
            [klein_generators(), vec![cube_r3(), icosa_half_turn()]].concat()
        }
        _ => return None,
    })
}

/// All elements of the standard representative of a finite tag.
pub fn standard_elements(tag: SubgroupTag) -> Option<Vec<Moebius>> {
    let gens = standard_generators(tag)?;
    closure_enumerate(&gens, tag.order()?.max(1), Tolerance::default())
        .elements()
        .map(|e| e.to_vec())
}

fn fixed_pair(m: &Moebius, tol: Tolerance) -> Option<(SpherePoint, SpherePoint)> {
    match m.fixed_points(tol) {
        FixedPoints::Points(p) if p.len() == 2 => Some((p[0].clone(), p[1].clone())),
        _ => None,
    }
}

/// Frame sending the Klein four group generated by two commuting involutions
/// to the standard one.
fn klein_frame(a: &Moebius, b: &Moebius, tol: Tolerance) -> Option<Moebius> {
    let nf = conjugate_to_normal_form(&[a.clone(), b.clone()], tol);
    (nf.kind == NormalFormKind::KleinFour).then_some(nf.conjugator)
}

fn group_is_inside(
    elements: &[Moebius],
    frame: &Moebius,
    target: &[Moebius],
    tol: Tolerance,
) -> bool {
    elements.iter().all(|e| {
        let s = e.conjugated_by(frame);
        target.iter().any(|t| t.eq_tol(&s, tol))
    })
}

fn finite_witness(
    tag: SubgroupTag,
    elements: &[Moebius],
    cap: usize,
    tol: Tolerance,
) -> Option<Moebius> {
    let orders: Vec<Option<u32>> = elements
        .iter()
        .map(|e| element_order(e, cap, tol))
        .collect();
    let involutions: Vec<&Moebius> = elements
        .iter()
        .zip(&orders)
        .filter(|(_, o)| **o == Some(2))
        .map(|(e, _)| e)
        .collect();
    let commuting_involution = |a: &Moebius| {
        involutions
            .iter()
            .find(|b| commuting_pair_class(a, b, tol) == CommutingPairClass::KleinFourPair)
            .map(|b| (*b).clone())
    };
    match tag {
        SubgroupTag::KleinFour | SubgroupTag::Tetrahedral => {
            let a = involutions.first()?;
            klein_frame(a, &commuting_involution(a)?, tol)
        }
        SubgroupTag::Octahedral => {
            // the normal Klein four subgroup consists of squares of 4-cycles
            let squares: Vec<Moebius> = elements
                .iter()
                .zip(&orders)
                .filter(|(_, o)| **o == Some(4))
                .map(|(e, _)| e.compose(e))
                .collect();
            let a = squares.first()?;
            let b = squares
                .iter()
                .find(|b| commuting_pair_class(a, b, tol) == CommutingPairClass::KleinFourPair)?;
            klein_frame(a, b, tol)
        }
        SubgroupTag::Icosahedral => {
            let a = involutions.first()?;
            let frame = klein_frame(a, &commuting_involution(a)?, tol)?;
            let target = standard_elements(SubgroupTag::Icosahedral)?;
            if group_is_inside(elements, &frame, &target, tol) {
                Some(frame)
            } else {
                let flipped = cube_r4().compose(&frame);
                group_is_inside(elements, &flipped, &target, tol).then_some(flipped)
            }
        }
        SubgroupTag::Dihedral { n } => {
            let r = elements
                .iter()
                .zip(&orders)
                .find(|(_, o)| **o == Some(n))?
                .0;
            let (p, q) = fixed_pair(r, tol)?;
            let flip = involutions.iter().find_map(|f| {
                let (u, _) = fixed_pair(f, tol)?;
                (!u.eq_tol(&p, tol) && !u.eq_tol(&q, tol)).then_some(u)
            })?;
            Moebius::map_points(&p, &flip, &q).ok()
        }
        _ => None,
    }
}

fn match_finite(elements: &[Moebius], cap: usize, tol: Tolerance) -> SubgroupClass {
    let Some(found) = census(elements, cap, tol) else {
        return SubgroupClass::new(SubgroupTag::Unrecognized, None);
    };
    let n = elements.len() as u32;
    let mut candidates = vec![
        SubgroupTag::KleinFour,
        SubgroupTag::Tetrahedral,
        SubgroupTag::Octahedral,
        SubgroupTag::Icosahedral,
    ];
    if n.is_multiple_of(2) && n >= 6 {
        candidates.push(SubgroupTag::Dihedral { n: n / 2 });
    }
    for tag in candidates {
        if expected_census(tag).as_ref() == Some(&found) {
            let witness = finite_witness(tag, elements, cap, tol);
            return SubgroupClass::new(tag, witness);
        }
    }
    SubgroupClass::new(SubgroupTag::Unrecognized, None)
}

/// Classifies the group generated by `gens` up to conjugacy.
pub fn recognize(gens: &[Moebius], cap: usize, tol: Tolerance) -> SubgroupClass {
    let nf = conjugate_to_normal_form(gens, tol);
    let frame = &nf.conjugator;
    match nf.kind {
        NormalFormKind::Trivial => SubgroupClass::in_frame(SubgroupTag::Trivial, frame),
        NormalFormKind::Diagonal => {
            let mut lcm = 1u64;
            for g in nf.gens.iter().filter(|g| !g.is_identity(tol)) {
                let mu = g.a() * g.a();
                match root_of_unity_order(&mu, cap as u32, tol) {
                    Some(k) => lcm = lcm_u64(lcm, k as u64),
                    None => {
                        return SubgroupClass::in_frame(SubgroupTag::InfiniteSubgroupOfTorus, frame)
                    }
                }
            }
            let tag = match lcm {
                2 => SubgroupTag::C2,
                k if k <= cap as u64 => SubgroupTag::CyclicDiagonal { n: k as u32 },
                _ => SubgroupTag::FiniteSubgroupOfTorus,
            };
            SubgroupClass::in_frame(tag, frame)
        }
        NormalFormKind::UpperTriangular => {
            let all_parabolic = gens.iter().all(|g| {
                matches!(
                    g.classify_element(2, tol),
                    ElementType::Parabolic | ElementType::Identity
                )
            });
            if all_parabolic {
                SubgroupClass::in_frame(SubgroupTag::SubgroupOfTranslations, frame)
            } else {
                SubgroupClass::new(SubgroupTag::Unrecognized, None)
            }
        }
        NormalFormKind::KleinFour => SubgroupClass::in_frame(SubgroupTag::KleinFour, frame),
        NormalFormKind::General => match closure_enumerate(gens, cap, tol) {
            Closure::Finite(elements) => match_finite(&elements, cap, tol),
            Closure::ExceedsCap => SubgroupClass::new(SubgroupTag::Unrecognized, None),
        },
    }
}

fn outside(tag: SubgroupTag) -> Error {
    Error::OutsideCatalogue(format!(
        "the group generated ({tag}) is not in the catalogue"
    ))
}

/// Centralizer of the group generated by `gens`, in the frame of its witness.
///
/// Dihedral groups `Dₙ` with `n ≥ 3` are centralized by the half-turn about
/// their main axis, so their centralizer is `C₂`.
pub fn centralizer(gens: &[Moebius], cap: usize, tol: Tolerance) -> Result<SubgroupClass> {
    let class = recognize(gens, cap, tol);
    let tag = match class.tag {
        SubgroupTag::Trivial => SubgroupTag::Full,
        SubgroupTag::C2 => SubgroupTag::C2xCstar,
        SubgroupTag::CyclicDiagonal { .. }
        | SubgroupTag::FiniteSubgroupOfTorus
        | SubgroupTag::InfiniteSubgroupOfTorus => SubgroupTag::Cstar,
        SubgroupTag::SubgroupOfTranslations => SubgroupTag::TranslationsFull,
        SubgroupTag::KleinFour => SubgroupTag::KleinFour,
        SubgroupTag::Dihedral { .. } => SubgroupTag::C2,
        SubgroupTag::Tetrahedral | SubgroupTag::Octahedral | SubgroupTag::Icosahedral => {
            SubgroupTag::Trivial
        }
        other => return Err(outside(other)),
    };
    Ok(SubgroupClass::new(tag, class.witness))
}

/// A subgroup given either by its class or by an explicit element list.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "descriptor", rename_all = "snake_case")]
pub enum GroupDescriptor {
    Class(SubgroupClass),
    Finite {
        class: SubgroupClass,
        order: usize,
        elements: Vec<Moebius>,
    },
}

impl GroupDescriptor {
    pub fn class(&self) -> &SubgroupClass {
        match self {
            GroupDescriptor::Class(c) => c,
            GroupDescriptor::Finite { class, .. } => class,
        }
    }

    pub fn elements(&self) -> Option<&[Moebius]> {
        match self {
            GroupDescriptor::Class(_) => None,
            GroupDescriptor::Finite { elements, .. } => Some(elements),
        }
    }
}

/// Whether `m` conjugates the finite group `elements` into itself.
fn normalizes(m: &Moebius, gens: &[Moebius], elements: &[Moebius], tol: Tolerance) -> bool {
    gens.iter().all(|g| {
        let c = g.conjugated_by(m);
        elements.iter().any(|e| e.eq_tol(&c, tol))
    })
}

/// Normalizer of a finite non-cyclic group, by searching the maps that send
/// a triple of fixed points to fixed points of elements of the same orders.
fn finite_normalizer(
    gens: &[Moebius],
    elements: &[Moebius],
    cap: usize,
    tol: Tolerance,
) -> Vec<Moebius> {
    let orders: Vec<u32> = elements
        .iter()
        .map(|e| element_order(e, cap, tol).unwrap_or(0))
        .collect();
    let Some((i1, &top)) = orders.iter().enumerate().max_by_key(|(_, o)| **o) else {
        return vec![];
    };
    let Some((p1, p2)) = fixed_pair(&elements[i1], tol) else {
        return vec![];
    };
    let second = elements.iter().zip(&orders).find_map(|(e, o)| {
        let (u, v) = fixed_pair(e, tol)?;
        let disjoint = [&u, &v]
            .iter()
            .all(|x| !x.eq_tol(&p1, tol) && !x.eq_tol(&p2, tol));
        disjoint.then_some((u, *o))
    });
    let Some((p3, o3)) = second else {
        return vec![];
    };
    let base = Moebius::map_points(&p1, &p2, &p3).expect("distinct fixed points");

    let mut pairs: Vec<(SpherePoint, SpherePoint)> = Vec::new();
    let mut thirds: Vec<SpherePoint> = Vec::new();
    for (e, &o) in elements.iter().zip(&orders) {
        let Some((u, v)) = fixed_pair(e, tol) else {
            continue;
        };
        if o == top {
            for pair in [(u.clone(), v.clone()), (v.clone(), u.clone())] {
                if !pairs
                    .iter()
                    .any(|(a, b)| a.eq_tol(&pair.0, tol) && b.eq_tol(&pair.1, tol))
                {
                    pairs.push(pair);
                }
            }
        }
        if o == o3 {
            for w in [u, v] {
                if !thirds.iter().any(|t| t.eq_tol(&w, tol)) {
                    thirds.push(w);
                }
            }
        }
    }
    let mut found: Vec<Moebius> = Vec::new();
    for (q1, q2) in &pairs {
        for q3 in &thirds {
            if q3.eq_tol(q1, tol) || q3.eq_tol(q2, tol) {
                continue;
            }
            let Ok(target) = Moebius::map_points(q1, q2, q3) else {
                continue;
            };
            let h = target.inverse().compose(&base);
            if normalizes(&h, gens, elements, tol) && !found.iter().any(|f| f.eq_tol(&h, tol)) {
                found.push(h);
            }
        }
    }
    found
}

/// Real-linear independence of two translation lengths.
fn translations_normalizer(frame_gens: &[Moebius], tol: Tolerance) -> Result<u32> {
    let shifts: Vec<Scalar> = frame_gens
        .iter()
        .filter(|g| !g.is_identity(tol))
        .map(|g| g.b() / g.d())
        .collect();
    let refuse = |why: &str| Err(Error::Unsupported(format!("normalizer of Γ ⊂ ℂ: {why}")));
    match shifts.as_slice() {
        [] => Ok(1),
        [_] => Ok(2),
        [t1, t2] => match Lattice::new(t1.clone(), t2.clone()) {
            Ok(lattice) => Ok(lattice.symmetry_order(tol)),
            Err(_) => {
                // collinear: cyclic iff the ratio is rational
                let ratio = (t2 / t1).real_part();
                let rational = match &ratio {
                    Scalar::Exact { .. } => true,
                    Scalar::Approx(w) => (1..=10_000).any(|q| {
                        let p = (w.re * q as f64).round();
                        (w.re * q as f64 - p).abs() <= tol.eps() * q as f64
                    }),
                };
                if rational {
                    Ok(2)
                } else {
                    refuse("dense rank-two subgroup of a line")
                }
            }
        },
        _ => refuse("more than two generators"),
    }
}

/// Normalizer of the group generated by `gens`.
pub fn normalizer(gens: &[Moebius], cap: usize, tol: Tolerance) -> Result<GroupDescriptor> {
    let class = recognize(gens, cap, tol);
    let witness = class.witness.clone();
    let as_class = |tag| {
        Ok(GroupDescriptor::Class(SubgroupClass::new(
            tag,
            witness.clone(),
        )))
    };
    match class.tag {
        SubgroupTag::Trivial => as_class(SubgroupTag::Full),
        SubgroupTag::C2
        | SubgroupTag::CyclicDiagonal { .. }
        | SubgroupTag::FiniteSubgroupOfTorus
        | SubgroupTag::InfiniteSubgroupOfTorus => as_class(SubgroupTag::C2xCstar),
        SubgroupTag::SubgroupOfTranslations => {
            let frame = witness.clone().unwrap_or_default();
            let frame_gens: Vec<Moebius> = gens.iter().map(|g| g.conjugated_by(&frame)).collect();
            let n = translations_normalizer(&frame_gens, tol)?;
            as_class(SubgroupTag::CnLtimesC { n })
        }
        SubgroupTag::KleinFour
        | SubgroupTag::Dihedral { .. }
        | SubgroupTag::Tetrahedral
        | SubgroupTag::Octahedral
        | SubgroupTag::Icosahedral => {
            let elements = match closure_enumerate(gens, cap, tol) {
                Closure::Finite(e) => e,
                Closure::ExceedsCap => return Err(outside(class.tag)),
            };
            let normalizer = finite_normalizer(gens, &elements, cap, tol);
            let class = recognize(&normalizer, cap, tol);
            Ok(GroupDescriptor::Finite {
                class,
                order: normalizer.len(),
                elements: normalizer,
            })
        }
        other => Err(outside(other)),
    }
}

/// Rows of the catalogue of one-dimensional homogeneous curves `G/H`.
pub const MODEL_CATALOGUE: [(&str, &str, &str, &str); 8] = [
    ("translations", "ℂ", "0", "ℂ"),
    ("discrete_affine", "A ⋉ ℂ", "A", "ℂ"),
    ("affine", "ℂ× ⋉ ℂ", "ℂ×", "ℂ"),
    ("torus_translations", "ℂ/Λ₀", "0", "ℂ/Λ₀"),
    ("zn_torus", "ℤₙ ⋉ ℂ/Λ₀", "ℤₙ", "ℂ/Λ₀"),
    ("cstar", "ℂ×", "1", "ℂ×"),
    ("z2_cstar", "ℤ₂ ⋉ ℂ×", "ℤ₂", "ℂ×"),
    ("projective", "PSL(2,ℂ)", "Borel", "ℙ¹"),
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Effectiveness {
    pub model: String,
    pub group: String,
    pub stabilizer: String,
    pub space: String,
    pub effective: bool,
    pub kernel: String,
}

/// Every catalogue row is a faithful action, so the kernel is trivial.
pub fn is_effective(model_id: &str) -> Result<Effectiveness> {
    let (id, g, h, x) = MODEL_CATALOGUE
        .iter()
        .find(|row| row.0 == model_id)
        .ok_or_else(|| Error::UnknownModel(model_id.to_string()))?;
    Ok(Effectiveness {
        model: id.to_string(),
        group: g.to_string(),
        stabilizer: h.to_string(),
        space: x.to_string(),
        effective: true,
        kernel: "trivial".into(),
    })
}
