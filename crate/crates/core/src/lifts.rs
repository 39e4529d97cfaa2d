//! Flat ℙ¹-bundles over curves and the product geometries lifted from curve
//! structures.
//!
//! For an elliptic base the representation images are listed on the reduced
//! periods `λ₁, λ₂` of the base lattice, in that order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::curves::{
    automorphism_group, classify_structures, AutoDescriptor, Classification, CurveDescriptor,
    DevelopingSystem, ModelElement, StructureSpec,
};
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::moebius::{conjugate_to_normal_form, FixedPoints, Moebius, NormalFormKind, SpherePoint};
use crate::numerics::{gcd_u32, root_of_unity, Scalar, Tolerance};
use crate::subgroup::{
    centralizer, normalizer, subscript, SubgroupClass, SubgroupTag, MODEL_CATALOGUE,
};

pub const DEFAULT_BRANCH_BOUND: u32 = 50;

/// A representation of the fundamental group of a curve into PSL(2,ℂ).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RepresentationSpec", into = "RepresentationSpec")]
pub struct Representation {
    base: CurveDescriptor,
    images: Vec<Moebius>,
}

/// Wire form of a [`Representation`], not yet checked.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepresentationSpec {
    pub genus: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<Lattice>,
    pub images: Vec<Moebius>,
}

impl RepresentationSpec {
    pub fn build(self, tol: Tolerance) -> Result<Representation> {
        Representation::new(
            CurveDescriptor {
                genus: self.genus,
                lattice: self.lattice,
            },
            self.images,
            tol,
        )
    }
}

impl TryFrom<RepresentationSpec> for Representation {
    type Error = Error;

    fn try_from(w: RepresentationSpec) -> Result<Self> {
        w.build(Tolerance::default())
    }
}

impl From<Representation> for RepresentationSpec {
    fn from(r: Representation) -> Self {
        RepresentationSpec {
            genus: r.base.genus,
            lattice: r.base.lattice,
            images: r.images,
        }
    }
}

impl Representation {
    /// Checks the image count and the defining relation of the fundamental
    /// group: commuting images on an elliptic curve, trivial product of
    /// commutators in higher genus.
    pub fn new(base: CurveDescriptor, images: Vec<Moebius>, tol: Tolerance) -> Result<Self> {
        base.validate()?;
        if images.len() != base.generator_count() {
            return Err(Error::InvalidInput(format!(
                "a genus-{} curve needs {} images, got {}",
                base.genus,
                base.generator_count(),
                images.len()
            )));
        }
        if base.genus == 1 && !images[0].commutes_with(&images[1], tol) {
            return Err(Error::InvariantViolation(
                "images on an elliptic curve must commute".into(),
            ));
        }
        if base.genus >= 2 {
            let rel = crate::curves::surface_relation(&images, base.genus)?;
            if !rel.is_identity(tol.scaled(rel.max_abs_entry())) {
                return Err(Error::InvariantViolation(
                    "product of commutators is not the identity".into(),
                ));
            }
        }
        Ok(Self { base, images })
    }

    pub fn trivial(base: CurveDescriptor) -> Result<Self> {
        let n = base.generator_count();
        Self::new(base, vec![Moebius::identity(); n], Tolerance::default())
    }

    pub fn base(&self) -> &CurveDescriptor {
        &self.base
    }

    pub fn images(&self) -> &[Moebius] {
        &self.images
    }

    /// `ρ(m λ₁ + n λ₂)` on an elliptic base.
    fn at_period(&self, m: i64, n: i64) -> Moebius {
        self.images[0].powi(m).compose(&self.images[1].powi(n))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RepClass {
    TrivialImage,
    /// Common two-point fixed set: conjugate into the diagonal torus.
    DiagonalType,
    /// Common single fixed point: conjugate into the translations.
    UnipotentType,
    KleinFour,
    Other,
}

impl RepClass {
    fn in_catalogue(self) -> Result<Self> {
        match self {
            RepClass::Other => Err(Error::OutsideCatalogue(
                "the image is not trivial, diagonal, unipotent or Klein four".into(),
            )),
            c => Ok(c),
        }
    }
}

pub fn rep_class(rep: &Representation, tol: Tolerance) -> RepClass {
    let nf = conjugate_to_normal_form(&rep.images, tol);
    match nf.kind {
        NormalFormKind::Trivial => RepClass::TrivialImage,
        NormalFormKind::Diagonal => RepClass::DiagonalType,
        NormalFormKind::UpperTriangular => {
            let unipotent = nf
                .gens
                .iter()
                .all(|g| (g.a() - g.d()).is_zero(tol.scaled(g.max_abs_entry())));
            if unipotent {
                RepClass::UnipotentType
            } else {
                RepClass::Other
            }
        }
        NormalFormKind::KleinFour => RepClass::KleinFour,
        NormalFormKind::General => RepClass::Other,
    }
}

/// A flat ℙ¹-bundle together with the class of its representation.
#[derive(Clone, Debug, Serialize)]
pub struct FlatBundle {
    pub rep: Representation,
    pub class: RepClass,
    pub image: SubgroupClass,
}

impl FlatBundle {
    pub fn new(rep: Representation, cap: usize, tol: Tolerance) -> Self {
        let class = rep_class(&rep, tol);
        let image = crate::subgroup::recognize(&rep.images, cap, tol);
        Self { rep, class, image }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "result", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum BundleTriviality {
    /// `ρ` extends to `t ↦ exp(t X)`; `b` is the parameter of the family
    /// `diag(e^{bt/2}, e^{−bt/2})` or `[[1, bt], [0, 1]]` in the frame `w ↦ frame·w`.
    Trivial {
        b: Scalar,
        frame: Moebius,
        branches: Vec<i64>,
    },
    NoWitnessWithinBound {
        bound: u32,
    },
    /// Klein four images do not extend to a one-parameter subgroup.
    NotTrivial,
}

impl BundleTriviality {
    pub fn witness(&self) -> Option<&Scalar> {
        match self {
            BundleTriviality::Trivial { b, .. } => Some(b),
            _ => None,
        }
    }
}

/// Searches for a one-parameter subgroup extending `ρ` over an elliptic base.
pub fn is_trivial_bundle(
    rep: &Representation,
    branch_bound: u32,
    tol: Tolerance,
) -> Result<BundleTriviality> {
    let lattice = rep.base.lattice_for("bundle triviality")?;
    let [l1, l2] = lattice.periods();
    let nf = conjugate_to_normal_form(&rep.images, tol);
    let frame = nf.conjugator.clone();
    match rep_class(rep, tol).in_catalogue()? {
        RepClass::TrivialImage => Ok(BundleTriviality::Trivial {
            b: Scalar::zero(),
            frame,
            branches: vec![0, 0],
        }),
        RepClass::KleinFour => Ok(BundleTriviality::NotTrivial),
        RepClass::UnipotentType => {
            // in the frame ρ(λ) = [[1, t], [0, 1]] up to sign
            let t: Vec<Scalar> = nf.gens.iter().map(|g| g.b() / g.d()).collect();
            let b = &t[0] / l1;
            let fits = (&b * l2).approx_eq(&t[1], tol.scaled(t[1].abs().max(1.0)));
            Ok(if fits {
                BundleTriviality::Trivial {
                    b,
                    frame,
                    branches: vec![0, 0],
                }
            } else {
                BundleTriviality::NoWitnessWithinBound { bound: 0 }
            })
        }
        RepClass::DiagonalType => {
            let pi_i = Scalar::approx(0.0, std::f64::consts::PI);
            let log_mu: Vec<Scalar> = nf.gens.iter().map(|g| g.a().to_approx().ln()).collect();
            let two = Scalar::from_int(2);
            let bound = branch_bound as i64;
            // the sign ambiguity of PSL(2,ℂ) is absorbed by odd branches
            let mut ks: Vec<i64> = (-bound..=bound).collect();
            ks.sort_by_key(|k| k.abs());
            for k1 in ks {
                let b = &(&two * &(&log_mu[0] + &(&Scalar::from_int(k1) * &pi_i))) / l1;
                let half = &(&b * l2) / &two;
                let k2 = (&(&half - &log_mu[1]) / &pi_i).to_c64();
                let k2r = k2.re.round();
                let slack = 1e-6_f64.max(tol.eps() * 1e3) * (1.0 + half.abs());
                if k2r.abs() > bound as f64
                    || (k2 - num_complex::Complex64::new(k2r, 0.0)).norm() > slack
                {
                    continue;
                }
                // the family evaluated at the periods must reproduce ρ
                let reproduces = nf.gens.iter().zip([l1, l2]).all(|(g, l)| {
                    let m = Moebius::diagonal(&(&(&b * l) / &two).exp()).expect("nonzero");
                    m.eq_tol(g, tol.scaled(1e3))
                });
                if reproduces {
                    return Ok(BundleTriviality::Trivial {
                        b,
                        frame,
                        branches: vec![k1, k2r as i64],
                    });
                }
            }
            Ok(BundleTriviality::NoWitnessWithinBound {
                bound: branch_bound,
            })
        }
        RepClass::Other => unreachable!(),
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "sections", rename_all = "snake_case")]
pub enum ParallelSections {
    /// Trivial image: every point of the fibre.
    Every,
    Points {
        points: Vec<SpherePoint>,
    },
}

impl ParallelSections {
    pub fn count(&self) -> Option<usize> {
        match self {
            ParallelSections::Every => None,
            ParallelSections::Points { points } => Some(points.len()),
        }
    }
}

/// Common fixed points of all images.
pub fn parallel_sections(rep: &Representation, tol: Tolerance) -> ParallelSections {
    let mut common: Option<Vec<SpherePoint>> = None;
    for m in &rep.images {
        if let FixedPoints::Points(pts) = m.fixed_points(tol) {
            common = Some(match common {
                None => pts,
                Some(prev) => prev
                    .into_iter()
                    .filter(|p| pts.iter().any(|q| q.eq_tol(p, tol)))
                    .collect(),
            });
        }
    }
    match common {
        None => ParallelSections::Every,
        Some(points) => ParallelSections::Points { points },
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum Orbit {
    Finite {
        points: Vec<SpherePoint>,
        size: usize,
    },
    ExceedsCap {
        cap: usize,
    },
}

impl Orbit {
    pub fn size(&self) -> Option<usize> {
        match self {
            Orbit::Finite { size, .. } => Some(*size),
            Orbit::ExceedsCap { .. } => None,
        }
    }
}

/// Orbit of `w` under the group generated by the images.
pub fn finite_orbits(rep: &Representation, w: &SpherePoint, cap: usize, tol: Tolerance) -> Orbit {
    let moves: Vec<Moebius> = rep
        .images
        .iter()
        .flat_map(|m| [m.clone(), m.inverse()])
        .filter(|m| !m.is_identity(tol))
        .collect();
    let mut seen = vec![w.clone()];
    let mut frontier = 0;
    while frontier < seen.len() {
        let p = seen[frontier].clone();
        frontier += 1;
        for m in &moves {
            let q = m.act(&p);
            if !seen.iter().any(|s| s.eq_tol(&q, tol)) {
                if seen.len() == cap {
                    return Orbit::ExceedsCap { cap };
                }
                seen.push(q);
            }
        }
    }
    seen.sort_by(|a, b| a.lex_cmp(b));
    let size = seen.len();
    Orbit::Finite { points: seen, size }
}

/// The product model `(G₀ × PSL(2,ℂ)) / (H₀ × B)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProductModel {
    pub group: String,
    pub stabilizer: String,
    pub space: String,
}

/// The lift of a curve structure to the flat bundle of `ρ`: developing map
/// `(z, w) ↦ (δ_C(z), w)` and holonomy `γ ↦ (h_C(γ), ρ(γ))`.
#[derive(Clone, Debug, Serialize)]
pub struct LiftedGeometry {
    pub base: DevelopingSystem,
    pub rep: Representation,
    pub model: ProductModel,
    pub holonomy: Vec<(ModelElement, Moebius)>,
    pub developing_map: String,
}

pub fn lift(ds: &DevelopingSystem, rep: &Representation) -> Result<LiftedGeometry> {
    if ds.curve != rep.base {
        return Err(Error::BaseMismatch(format!(
            "structure on genus {}, representation on genus {}",
            ds.curve.genus, rep.base.genus
        )));
    }
    let (_, g0, h0, x0) = MODEL_CATALOGUE
        .iter()
        .find(|row| row.0 == ds.model.id())
        .expect("every model has a catalogue row");
    Ok(LiftedGeometry {
        base: ds.clone(),
        rep: rep.clone(),
        model: ProductModel {
            group: format!("({g0}) × PSL(2,ℂ)"),
            stabilizer: format!("({h0}) × B"),
            space: format!("({x0}) × ℙ¹"),
        },
        holonomy: ds
            .holonomy
            .iter()
            .cloned()
            .zip(rep.images.iter().cloned())
            .collect(),
        developing_map: "(z, w) ↦ (δ_C(z), w)".into(),
    })
}

/// A permutation of the fundamental group induced by a base automorphism,
/// given as words: `words[j]` lists `(generator, exponent)` pairs whose
/// product is the image of generator `j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorAction {
    pub words: Vec<Vec<(usize, i64)>>,
}

/// A fibre map `h₀` extending a base automorphism.
#[derive(Clone, Debug, Serialize)]
pub struct ComponentLift {
    /// Rotation `α^k` on an elliptic base, or the index of the supplied action.
    pub k: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Scalar>,
    pub h0: Moebius,
    pub verified: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct LiftedAutomorphisms {
    pub centralizer: SubgroupClass,
    pub base: AutoDescriptor,
    /// `Z × Aut°(E_C)`.
    pub identity_component: String,
    pub components: Vec<ComponentLift>,
    /// Order of the image of `Aut(E)` in the base component group.
    pub component_order: u32,
    pub group: String,
    pub exact_sequence: String,
}

/// Candidates `h₀` with `h₀ ρ(γ) h₀⁻¹ = target(γ)` for each generator.
fn conjugators(
    rep: &Representation,
    class: RepClass,
    targets: &[Moebius],
    cap: usize,
    tol: Tolerance,
) -> Result<Option<Moebius>> {
    let check = |h: &Moebius| {
        rep.images.iter().zip(targets).all(|(g, t)| {
            g.conjugated_by(h)
                .eq_tol(t, tol.scaled(1e3 * t.max_abs_entry()))
        })
    };
    let nf = conjugate_to_normal_form(&rep.images, tol);
    let f = &nf.conjugator;
    let candidates: Vec<Moebius> = match class {
        RepClass::TrivialImage => vec![Moebius::identity()],
        // normalizer of a torus: the torus and the swap, which both act on the
        // torus by ±1, so the swap and the identity cover all cases
        RepClass::DiagonalType => [Moebius::identity(), Moebius::swap()]
            .iter()
            .map(|h| f.inverse().compose(h).compose(f))
            .collect(),
        RepClass::UnipotentType => {
            // in the frame conjugation by z ↦ az scales translations by a
            let t: Vec<Scalar> = nf.gens.iter().map(|g| g.b() / g.d()).collect();
            let u: Vec<Scalar> = targets
                .iter()
                .map(|g| {
                    let g = g.conjugated_by(f);
                    g.b() / g.d()
                })
                .collect();
            let Some(j) = t.iter().position(|x| !x.is_zero(tol)) else {
                return Ok(None);
            };
            let a = &u[j] / &t[j];
            if a.is_zero(tol) {
                return Ok(None);
            }
            vec![f
                .inverse()
                .compose(&Moebius::affine(&a, &Scalar::zero())?)
                .compose(f)]
        }
        RepClass::KleinFour => normalizer(&rep.images, cap, tol)?
            .elements()
            .map(<[Moebius]>::to_vec)
            .unwrap_or_default(),
        RepClass::Other => vec![],
    };
    Ok(candidates.into_iter().find(|h| check(h)))
}

fn wraps(symbol: &str) -> String {
    if symbol.contains(' ') {
        format!("({symbol})")
    } else {
        symbol.to_string()
    }
}

/// Automorphisms of a lifted geometry.
///
/// The identity component is the centralizer `Z` of the image times the
/// identity component of the base automorphisms. Each base rotation
/// `z ↦ α^k z` (or each supplied action in higher genus) lifts when some
/// `h₀` conjugates `ρ(γ)` to `ρ(α^k γ)`; every reported `h₀` has been checked
/// on all generators.
pub fn lifted_automorphisms(
    lg: &LiftedGeometry,
    base_actions: &[GeneratorAction],
    cap: usize,
    tol: Tolerance,
) -> Result<LiftedAutomorphisms> {
    let rep = &lg.rep;
    let class = rep_class(rep, tol).in_catalogue()?;
    let z = centralizer(&rep.images, cap, tol)?;
    let base = automorphism_group(&lg.base, tol)?;
    let z_symbol = z.tag.symbol();
    let mut components = vec![];

    if rep.base.genus == 1 {
        let lattice = rep.base.lattice_for("lifted automorphisms")?;
        let n = base.rotation_order.unwrap_or(1);
        for k in 1..n {
            let alpha = root_of_unity(n, k as i64);
            let targets: Option<Vec<Moebius>> = lattice
                .periods()
                .iter()
                .map(|l| {
                    let (m, j) = lattice.integer_coordinates(&(&alpha * *l), tol.scaled(1e3))?;
                    Some(rep.at_period(m, j))
                })
                .collect();
            let targets = targets.ok_or_else(|| {
                Error::InvariantViolation(format!("α^{k} does not preserve the lattice"))
            })?;
            if let Some(h0) = conjugators(rep, class, &targets, cap, tol)? {
                components.push(ComponentLift {
                    k,
                    alpha: Some(alpha),
                    h0,
                    verified: true,
                });
            }
        }
    } else {
        for (idx, action) in base_actions.iter().enumerate() {
            if action.words.len() != rep.images.len() {
                return Err(Error::InvalidInput(format!(
                    "action {idx} lists {} words for {} generators",
                    action.words.len(),
                    rep.images.len()
                )));
            }
            let mut targets = vec![];
            for word in &action.words {
                let mut acc = Moebius::identity();
                for &(g, e) in word {
                    let img = rep
                        .images
                        .get(g)
                        .ok_or_else(|| Error::InvalidInput(format!("no generator {g}")))?;
                    acc = acc.compose(&img.powi(e));
                }
                targets.push(acc);
            }
            if let Some(h0) = conjugators(rep, class, &targets, cap, tol)? {
                components.push(ComponentLift {
                    k: idx as u32 + 1,
                    alpha: None,
                    h0,
                    verified: true,
                });
            }
        }
    }

    let finite_z = z.tag.is_finite() || z.tag == SubgroupTag::Trivial;
    let base_id = base.identity_component.as_str();
    let identity_component = match (z.tag, base_id) {
        (SubgroupTag::Trivial, b) => b.to_string(),
        (_, "1") => z_symbol.clone(),
        (_, b) => format!("{} × {b}", z_symbol),
    };
    let (component_order, group, exact_sequence) = if rep.base.genus == 1 {
        let n = base.rotation_order.unwrap_or(1);
        // lifted rotations form a subgroup of ℤₙ
        let m = components.iter().fold(n, |acc, c| gcd_u32(acc, c.k));
        let order = n / m;
        let rotations = if order == 1 {
            base_id.to_string()
        } else {
            format!("C{} ⋉ {base_id}", subscript(order))
        };
        let group = if base.homogeneous {
            match (z.tag, order) {
                (SubgroupTag::Trivial, _) => rotations,
                (_, 1) => format!("{} × {}", z_symbol, base_id),
                _ if finite_z || class == RepClass::TrivialImage => {
                    format!("{} × {}", z_symbol, wraps(&rotations))
                }
                _ => format!("({} × {}) ⋊ C{}", z_symbol, base_id, subscript(order)),
            }
        } else {
            format!("extension of a finite group by {}", wraps(&z_symbol))
        };
        let seq = format!(
            "1 → {identity_component} → Aut(E) → C{} → 1",
            subscript(order)
        );
        (order, group, seq)
    } else {
        let order = components.len() as u32 + 1;
        let seq = format!("1 → {} → Aut(E) → F → 1", z_symbol);
        (
            order,
            format!("extension of F (order {order}) by {}", wraps(&z_symbol)),
            seq,
        )
    };
    Ok(LiftedAutomorphisms {
        centralizer: z,
        base,
        identity_component,
        components,
        component_order,
        group,
        exact_sequence,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Multisection {
    pub orbit: Vec<SpherePoint>,
    pub size: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct OrbitReport {
    pub parallel_sections: ParallelSections,
    /// Finite orbits of the image other than single points.
    pub multisections: Vec<Multisection>,
    /// Orbit size of generically chosen fibre points, when finite.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generic_multisection_size: Option<usize>,
    pub open_orbit: bool,
    /// Number of orbits of the automorphism group, when finite.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orbit_count: Option<usize>,
    pub summary: String,
}

const GENERIC_SAMPLES: usize = 16;
const ORBIT_SEED: u64 = 0x5eed;

/// Orbits of the automorphism group of a lifted geometry on an elliptic or
/// higher-genus base.
pub fn orbit_structure(lg: &LiftedGeometry, cap: usize, tol: Tolerance) -> Result<OrbitReport> {
    let rep = &lg.rep;
    let class = rep_class(rep, tol).in_catalogue()?;
    let auto = lifted_automorphisms(lg, &[], cap, tol)?;
    let sections = parallel_sections(rep, tol);
    let transitive_base = auto.base.homogeneous;
    let swapped = auto.components.iter().any(|c| {
        // the lift of z ↦ −z exchanges the two sections
        match &sections {
            ParallelSections::Points { points } if points.len() == 2 => {
                c.h0.act(&points[0]).eq_tol(&points[1], tol.scaled(1e3))
            }
            _ => false,
        }
    });
    let report = match class {
        RepClass::TrivialImage => OrbitReport {
            parallel_sections: sections,
            multisections: vec![],
            generic_multisection_size: None,
            open_orbit: transitive_base,
            orbit_count: transitive_base.then_some(1),
            summary: "homogeneous fiber".into(),
        },
        RepClass::DiagonalType => {
            let c2 = auto.centralizer.tag == SubgroupTag::C2xCstar;
            let paired = c2 || swapped;
            let summary = if paired {
                "two orbits: the pair of parallel sections, and its open complement"
            } else {
                "three orbits: each parallel section, and their open complement"
            };
            OrbitReport {
                parallel_sections: sections,
                multisections: vec![],
                generic_multisection_size: None,
                open_orbit: transitive_base,
                orbit_count: transitive_base.then_some(if paired { 2 } else { 3 }),
                summary: summary.into(),
            }
        }
        RepClass::UnipotentType => OrbitReport {
            parallel_sections: sections,
            multisections: vec![],
            generic_multisection_size: None,
            open_orbit: transitive_base,
            orbit_count: transitive_base.then_some(2),
            summary: "two orbits: the parallel section, and its open complement".into(),
        },
        RepClass::KleinFour => {
            let mut multisections: Vec<Multisection> = vec![];
            for m in &rep.images {
                let Some(pts) = m.fixed_points(tol).points().map(<[SpherePoint]>::to_vec) else {
                    continue;
                };
                if let Orbit::Finite { points, size } = finite_orbits(rep, &pts[0], cap, tol) {
                    let known = multisections
                        .iter()
                        .any(|s| s.orbit.iter().any(|p| p.eq_tol(&points[0], tol)));
                    if !known {
                        multisections.push(Multisection {
                            orbit: points,
                            size,
                        });
                    }
                }
            }
            // the third involution is the product of the two generators
            let third = rep.images[0].compose(&rep.images[1]);
            if let Some(pts) = third.fixed_points(tol).points() {
                if let Orbit::Finite { points, size } = finite_orbits(rep, &pts[0], cap, tol) {
                    if !multisections
                        .iter()
                        .any(|s| s.orbit.iter().any(|p| p.eq_tol(&points[0], tol)))
                    {
                        multisections.push(Multisection {
                            orbit: points,
                            size,
                        });
                    }
                }
            }
            let mut rng = ChaCha8Rng::seed_from_u64(ORBIT_SEED);
            let sizes: Vec<Option<usize>> = (0..GENERIC_SAMPLES)
                .map(|_| {
                    let w = SpherePoint::Finite(Scalar::approx(
                        rng.gen_range(-3.0..3.0),
                        rng.gen_range(-3.0..3.0),
                    ));
                    finite_orbits(rep, &w, cap, tol).size()
                })
                .collect();
            let generic = sizes
                .iter()
                .all(|s| *s == sizes[0])
                .then_some(sizes[0])
                .flatten();
            OrbitReport {
                parallel_sections: sections,
                multisections,
                generic_multisection_size: generic,
                open_orbit: false,
                orbit_count: None,
                summary: "no open orbits: every automorphism orbit is a union of at most 6 parallel elliptic curves"
                    .into(),
            }
        }
        RepClass::Other => unreachable!(),
    };
    Ok(report)
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
#[allow(clippy::large_enum_variant)]
pub enum SurfaceInput {
    RationalHomogeneous {
        name: String,
    },
    Ruled {
        structure: StructureSpec,
        rep: RepresentationSpec,
    },
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SurfaceClassification {
    RationalHomogeneous {
        surface: String,
        structure: String,
        group: String,
        stabilizer: String,
        flat: bool,
    },
    Ruled {
        lift: Box<LiftedGeometry>,
        rep_class: RepClass,
        curve_moduli: Classification,
        moduli: String,
        flat: bool,
    },
}

/// Dispatches a surface containing a rational curve to its geometry.
pub fn classify_surface(input: &SurfaceInput, tol: Tolerance) -> Result<SurfaceClassification> {
    match input {
        SurfaceInput::RationalHomogeneous { name } => match name.as_str() {
            "P2" => Ok(SurfaceClassification::RationalHomogeneous {
                surface: "ℙ²".into(),
                structure: "standard projective structure".into(),
                group: "PSL(3,ℂ)".into(),
                stabilizer: "stabilizer of a point of ℙ²".into(),
                flat: true,
            }),
            "P1xP1" => Ok(SurfaceClassification::RationalHomogeneous {
                surface: "ℙ¹ × ℙ¹".into(),
                structure: "standard structure".into(),
                group: "ℤ₂ ⋉ (PSL(2,ℂ) × PSL(2,ℂ))".into(),
                stabilizer: "B × B".into(),
                flat: true,
            }),
            other => Err(Error::UnknownKind(format!(
                "rational homogeneous surface `{other}`"
            ))),
        },
        SurfaceInput::Ruled { structure, rep } => {
            let ds = structure.build(tol)?;
            let rep = rep.clone().build(tol)?;
            let lg = lift(&ds, &rep)?;
            Ok(SurfaceClassification::Ruled {
                rep_class: rep_class(&rep, tol),
                curve_moduli: classify_structures(&ds.model, &ds.curve),
                moduli: "(moduli of the curve structures) × Hom(π₁(C), PSL(2,ℂ))/PSL(2,ℂ), by conjugacy-class representatives".into(),
                lift: Box::new(lg),
                flat: true,
            })
        }
    }
}

/// Parses a surface query, mapping an unrecognised `kind` to its own error.
pub fn parse_surface_input(value: serde_json::Value) -> Result<SurfaceInput> {
    let kind = value
        .get("kind")
        .and_then(|k| k.as_str())
        .unwrap_or_default()
        .to_string();
    if kind != "rational_homogeneous" && kind != "ruled" {
        return Err(Error::UnknownKind(format!("surface kind `{kind}`")));
    }
    serde_json::from_value(value).map_err(|e| Error::InvalidInput(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::{build_developing_system, ModelGeometry, StructureParams};
    use crate::subgroup::DEFAULT_CAP;
    use proptest::prelude::*;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn elliptic(lattice: Lattice) -> CurveDescriptor {
        CurveDescriptor::elliptic(lattice)
    }

    fn klein(lattice: Lattice) -> Representation {
        let k1 = Moebius::diagonal(&Scalar::i()).unwrap();
        Representation::new(elliptic(lattice), vec![k1, Moebius::swap()], tol()).unwrap()
    }

    fn diag(lattice: Lattice, a: Scalar, b: Scalar) -> Representation {
        let images = vec![
            Moebius::diagonal(&a).unwrap(),
            Moebius::diagonal(&b).unwrap(),
        ];
        Representation::new(elliptic(lattice), images, tol()).unwrap()
    }

    fn structure(model: ModelGeometry, lattice: Lattice, c: Scalar) -> DevelopingSystem {
        build_developing_system(
            &model,
            &elliptic(lattice),
            &StructureParams::with_c(c),
            tol(),
        )
        .unwrap()
    }

    #[test]
    fn classes() {
        let sq = Lattice::square();
        let id = Representation::trivial(elliptic(sq.clone())).unwrap();
        assert_eq!(rep_class(&id, tol()), RepClass::TrivialImage);
        let d = diag(sq.clone(), Scalar::from_int(2), Scalar::gaussian(0, 3));
        assert_eq!(rep_class(&d, tol()), RepClass::DiagonalType);
        assert_eq!(rep_class(&klein(sq.clone()), tol()), RepClass::KleinFour);
        let u = Representation::new(
            elliptic(sq.clone()),
            vec![
                Moebius::translation(&Scalar::one()),
                Moebius::translation(&Scalar::i()),
            ],
            tol(),
        )
        .unwrap();
        assert_eq!(rep_class(&u, tol()), RepClass::UnipotentType);
        let bad = Representation::new(
            elliptic(sq),
            vec![
                Moebius::diagonal(&Scalar::from_int(2)).unwrap(),
                Moebius::swap(),
            ],
            tol(),
        );
        assert!(matches!(bad, Err(Error::InvariantViolation(_))));
    }

    #[test]
    fn triviality_witnesses() {
        let sq = Lattice::square();
        let half = Scalar::from_ratio(1, 2);
        let images: Vec<Moebius> = sq
            .periods()
            .iter()
            .map(|l| Moebius::diagonal(&(&half * *l).exp()).unwrap())
            .collect();
        let rep = Representation::new(elliptic(sq.clone()), images, tol()).unwrap();
        let b = is_trivial_bundle(&rep, DEFAULT_BRANCH_BOUND, tol()).unwrap();
        assert!(
            b.witness().unwrap().approx_eq(&Scalar::one(), tol()),
            "{b:?}"
        );
        let u = Representation::new(
            elliptic(sq.clone()),
            sq.periods()
                .iter()
                .map(|l| Moebius::translation(l))
                .collect(),
            tol(),
        )
        .unwrap();
        assert_eq!(
            is_trivial_bundle(&u, 50, tol()).unwrap().witness(),
            Some(&Scalar::one())
        );
        assert_eq!(
            is_trivial_bundle(&klein(sq.clone()), 50, tol()).unwrap(),
            BundleTriviality::NotTrivial
        );
        let d = diag(sq, Scalar::from_int(2), Scalar::from_int(3));
        assert_eq!(
            is_trivial_bundle(&d, 50, tol()).unwrap(),
            BundleTriviality::NoWitnessWithinBound { bound: 50 }
        );
    }

    #[test]
    fn sections_and_orbits() {
        let sq = Lattice::square();
        let d = diag(sq.clone(), Scalar::from_int(2), Scalar::from_int(3));
        assert_eq!(parallel_sections(&d, tol()).count(), Some(2));
        let u = Representation::new(
            elliptic(sq.clone()),
            vec![Moebius::translation(&Scalar::one()), Moebius::identity()],
            tol(),
        )
        .unwrap();
        assert_eq!(parallel_sections(&u, tol()).count(), Some(1));
        let k = klein(sq);
        assert_eq!(parallel_sections(&k, tol()).count(), Some(0));
        assert_eq!(
            finite_orbits(&k, &SpherePoint::zero(), 100, tol()).size(),
            Some(2)
        );
        let Orbit::Finite { points, .. } = finite_orbits(&k, &SpherePoint::int(2), 100, tol())
        else {
            panic!()
        };
        let expected: Vec<SpherePoint> = [(-2, 1), (-1, 2), (1, 2), (2, 1)]
            .iter()
            .map(|&(p, q)| SpherePoint::Finite(Scalar::from_ratio(p, q)))
            .collect();
        assert!(crate::moebius::same_point_set(&points, &expected, tol()));
        assert!(matches!(
            finite_orbits(&d, &SpherePoint::int(2), 50, tol()),
            Orbit::ExceedsCap { .. }
        ));
    }

    #[test]
    fn lift_pairs_holonomy() {
        let sq = Lattice::square();
        let ds = structure(ModelGeometry::Translations, sq.clone(), Scalar::one());
        let lg = lift(&ds, &klein(sq)).unwrap();
        assert_eq!(lg.holonomy.len(), 2);
        assert_eq!(lg.holonomy[1].1, Moebius::swap());
        let other = Representation::trivial(CurveDescriptor::higher(2)).unwrap();
        assert!(matches!(lift(&ds, &other), Err(Error::BaseMismatch(_))));
    }

    #[test]
    fn cube_rotations_lift() {
        let hex = Lattice::hexagonal();
        let ds = structure(ModelGeometry::Affine, hex.clone(), Scalar::zero());
        let lg = lift(&ds, &klein(hex)).unwrap();
        let aut = lifted_automorphisms(&lg, &[], DEFAULT_CAP, tol()).unwrap();
        assert_eq!(aut.group, "C₂ × C₂ × (C₆ ⋉ ℂ)");
        for c in &aut.components {
            let alpha = c.alpha.clone().unwrap();
            let [l1, l2] = lg.base.curve.lattice.as_ref().unwrap().periods();
            for (img, l) in lg.rep.images().iter().zip([l1, l2]) {
                let (m, n) = lg
                    .base
                    .curve
                    .lattice
                    .as_ref()
                    .unwrap()
                    .integer_coordinates(&(&alpha * l), tol())
                    .unwrap();
                assert!(img
                    .conjugated_by(&c.h0)
                    .eq_tol(&lg.rep.at_period(m, n), tol()));
            }
        }
        let report = orbit_structure(&lg, DEFAULT_CAP, tol()).unwrap();
        assert!(!report.open_orbit);
        assert_eq!(
            report.multisections.iter().filter(|m| m.size == 2).count(),
            3
        );
        assert_eq!(report.generic_multisection_size, Some(4));
    }

    #[test]
    fn diagonal_swap_lift() {
        let sq = Lattice::square();
        let ds = structure(ModelGeometry::Affine, sq.clone(), Scalar::zero());
        let lg = lift(&ds, &diag(sq, Scalar::from_int(2), Scalar::from_int(3))).unwrap();
        let aut = lifted_automorphisms(&lg, &[], DEFAULT_CAP, tol()).unwrap();
        assert_eq!(aut.components.len(), 1);
        assert_eq!(aut.components[0].h0, Moebius::swap());
        let report = orbit_structure(&lg, DEFAULT_CAP, tol()).unwrap();
        assert_eq!((report.orbit_count, report.open_orbit), (Some(2), true));
    }

    #[test]
    fn trivial_rep_orbits() {
        let sq = Lattice::square();
        let ds = structure(ModelGeometry::Translations, sq.clone(), Scalar::one());
        let lg = lift(&ds, &Representation::trivial(elliptic(sq)).unwrap()).unwrap();
        let report = orbit_structure(&lg, DEFAULT_CAP, tol()).unwrap();
        assert_eq!(report.summary, "homogeneous fiber");
        assert_eq!(report.orbit_count, Some(1));
    }

    #[test]
    fn surfaces() {
        let p2 = classify_surface(
            &SurfaceInput::RationalHomogeneous { name: "P2".into() },
            tol(),
        )
        .unwrap();
        assert!(
            matches!(p2, SurfaceClassification::RationalHomogeneous { ref group, .. } if group == "PSL(3,ℂ)")
        );
        let bad = parse_surface_input(serde_json::json!({"kind": "k3"}));
        assert!(matches!(bad, Err(Error::UnknownKind(_))));
        let json = serde_json::json!({
            "kind": "ruled",
            "structure": {"model": {"id": "translations"},
                          "curve": {"genus": 1, "lattice": {"periods": [["1","0"],["0","1"]]}},
                          "params": {"c": ["1","0"]}},
            "rep": {"genus": 1, "lattice": {"periods": [["1","0"],["0","1"]]},
                    "images": [[["0","1"],["0","0"],["0","0"],["0","-1"]],
                               [["0","0"],["0","1"],["0","1"],["0","0"]]]}
        });
        let out = classify_surface(&parse_surface_input(json).unwrap(), tol()).unwrap();
        assert!(matches!(
            out,
            SurfaceClassification::Ruled {
                rep_class: RepClass::KleinFour,
                ..
            }
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn class_is_conjugation_invariant(a in -3i64..4, b in -3i64..4, c in -3i64..4, d in 1i64..4, which in 0usize..3) {
            prop_assume!(a * d - b * c != 0);
            let g = Moebius::from_ints(a, b, c, d).unwrap();
            let sq = Lattice::square();
            let rep = [
                klein(sq.clone()),
                diag(sq.clone(), Scalar::from_int(2), Scalar::gaussian(1, 1)),
                Representation::new(elliptic(sq.clone()), vec![Moebius::translation(&Scalar::one()), Moebius::translation(&Scalar::i())], tol()).unwrap(),
            ][which].clone();
            let conj = Representation::new(
                rep.base().clone(),
                rep.images().iter().map(|m| m.conjugated_by(&g)).collect(),
                tol(),
            ).unwrap();
            prop_assert_eq!(rep_class(&rep, tol()), rep_class(&conj, tol()));
            if let ParallelSections::Points { points } = parallel_sections(&conj, tol()) {
                for p in &points {
                    for m in conj.images() {
                        prop_assert!(m.act(p).eq_tol(p, tol().scaled(1e3)));
                    }
                }
            }
        }

        #[test]
        fn witness_reproduces_images(br in -2.0f64..2.0, bi in -2.0f64..2.0, unipotent: bool) {
            let b = Scalar::approx(br, bi);
            prop_assume!(b.abs() > 0.05);
            let lat = Lattice::new(Scalar::one(), Scalar::approx(0.2, 1.1)).unwrap();
            let half = Scalar::from_ratio(1, 2);
            let images: Vec<Moebius> = lat.periods().iter().map(|l| if unipotent {
                Moebius::translation(&(&b * *l))
            } else {
                Moebius::diagonal(&(&(&b * &half) * *l).exp()).unwrap()
            }).collect();
            let rep = Representation::new(elliptic(lat), images, tol()).unwrap();
            let found = is_trivial_bundle(&rep, DEFAULT_BRANCH_BOUND, tol()).unwrap();
            let w = found.witness().cloned();
            prop_assert!(w.is_some(), "{:?}", found);
            prop_assert!((w.unwrap().to_c64() - b.to_c64()).norm() <= 1e-9);
        }

        #[test]
        fn klein_orbit_sizes(x in -5.0f64..5.0, y in -5.0f64..5.0) {
            let k = klein(Lattice::square());
            let size = finite_orbits(&k, &SpherePoint::Finite(Scalar::approx(x, y)), 100, tol()).size().unwrap();
            prop_assert!(size == 2 || size == 4);
        }
    }
}
