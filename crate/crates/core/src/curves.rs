//! Locally homogeneous structures on compact curves: developing systems for
//! each homogeneous model, equivariance checks, moduli coordinates,
//! conjugacy, automorphism groups and the Schwarzian derivative.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{is_grain, member_mult, Lattice, MultGroup, DEFAULT_EXP_BOUND};
use crate::moebius::{Moebius, SpherePoint};
use crate::numerics::{root_of_unity, Scalar, Tolerance};
use crate::subgroup::subscript;

/// A homogeneous model curve `G/H`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelGeometry {
    /// `ℂ` acting on itself.
    Translations,
    /// `A ⋉ ℂ` acting on `ℂ`, `A ⊂ ℂ×` discrete.
    DiscreteAffine { group: MultGroup },
    /// `ℂ× ⋉ ℂ` acting on `ℂ`.
    Affine,
    /// `ℂ/Λ₀` acting on itself.
    TorusTranslations { lattice: Lattice },
    /// `ℤₙ ⋉ ℂ/Λ₀` acting on `ℂ/Λ₀`.
    ZnTorus { n: u32, lattice: Lattice },
    /// `ℂ×` acting on itself.
    Cstar,
    /// `ℤ₂ ⋉ ℂ×` acting on `ℂ×` by `z ↦ az`, `z ↦ a/z`.
    Z2Cstar,
    /// `PSL(2,ℂ)` acting on `ℙ¹`.
    Projective,
}

impl ModelGeometry {
    pub fn id(&self) -> &'static str {
        match self {
            Self::Translations => "translations",
            Self::DiscreteAffine { .. } => "discrete_affine",
            Self::Affine => "affine",
            Self::TorusTranslations { .. } => "torus_translations",
            Self::ZnTorus { .. } => "zn_torus",
            Self::Cstar => "cstar",
            Self::Z2Cstar => "z2_cstar",
            Self::Projective => "projective",
        }
    }

    pub fn validate(&self, tol: Tolerance) -> Result<()> {
        match self {
            Self::ZnTorus { n, lattice } => {
                if ![2, 3, 4, 6].contains(n) {
                    return Err(Error::InvalidInput(format!(
                        "ℤₙ ⋉ ℂ/Λ₀ needs n ∈ {{2,3,4,6}}, got {n}"
                    )));
                }
                let s = lattice.symmetry_order(tol);
                if s % n != 0 {
                    return Err(Error::LatticeModelMismatch(format!(
                        "Λ₀ has rotation symmetry of order {s}, not divisible by {n}"
                    )));
                }
                Ok(())
            }
            Self::DiscreteAffine { group } => group.validate(),
            _ => Ok(()),
        }
    }

    /// The quotient lattice `Λ₀` for the torus models.
    pub fn torus(&self) -> Option<&Lattice> {
        match self {
            Self::TorusTranslations { lattice } | Self::ZnTorus { lattice, .. } => Some(lattice),
            _ => None,
        }
    }
}

/// A compact curve: genus, plus the period lattice when the genus is one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveDescriptor {
    pub genus: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<Lattice>,
}

impl CurveDescriptor {
    pub fn elliptic(lattice: Lattice) -> Self {
        Self {
            genus: 1,
            lattice: Some(lattice),
        }
    }

    pub fn rational() -> Self {
        Self {
            genus: 0,
            lattice: None,
        }
    }

    pub fn higher(genus: u32) -> Self {
        Self {
            genus,
            lattice: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match (self.genus, &self.lattice) {
            (1, None) => Err(Error::InvalidInput(
                "an elliptic curve needs a lattice".into(),
            )),
            (g, Some(_)) if g != 1 => Err(Error::InvalidInput(format!(
                "a genus-{g} curve carries no lattice"
            ))),
            _ => Ok(()),
        }
    }

    /// The elliptic lattice, or an error naming the operation.
    pub fn lattice_for(&self, what: &str) -> Result<&Lattice> {
        self.lattice
            .as_ref()
            .ok_or_else(|| Error::InvalidInput(format!("{what} needs an elliptic curve")))
    }

    /// Number of fundamental-group generators.
    pub fn generator_count(&self) -> usize {
        match self.genus {
            0 => 0,
            1 => 2,
            g => 2 * g as usize,
        }
    }
}

/// The developing map, up to the model's conjugation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum DevFamily {
    /// `δ(z) = cz` (taken modulo `Λ₀` on torus models).
    Linear { c: Scalar },
    /// `δ(z) = z`.
    AffineLinear,
    /// `δ(z) = k e^{cz}`.
    Exponential { c: Scalar, k: Scalar },
    /// `δ(z) = Lz + Λ₀`.
    TorusCover { l: Scalar },
    /// `δ = id` on `ℙ¹`.
    IdentityP1,
    /// Genus at least two: only the holonomy is recorded.
    HolonomyOnly,
}

impl DevFamily {
    /// Evaluates `δ` at a point of the universal cover.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        match self {
            Self::Linear { c } => c.to_c64() * z,
            Self::TorusCover { l } => l.to_c64() * z,
            Self::AffineLinear | Self::IdentityP1 | Self::HolonomyOnly => z,
            Self::Exponential { c, k } => k.to_c64() * (c.to_c64() * z).exp(),
        }
    }

    fn eval_scalar(&self, z: &Scalar) -> Scalar {
        match self {
            Self::Linear { c } => c * z,
            Self::TorusCover { l } => l * z,
            Self::AffineLinear | Self::IdentityP1 | Self::HolonomyOnly => z.clone(),
            Self::Exponential { c, k } => k * &(c * z).exp(),
        }
    }
}

/// An element of a model group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
#[allow(clippy::large_enum_variant)] // short-lived values, boxing buys nothing
pub enum ModelElement {
    /// `z ↦ az + b` (on `ℂ` or `ℂ/Λ₀`).
    Affine {
        a: Scalar,
        b: Scalar,
    },
    /// `z ↦ az`, or `z ↦ a/z` when `flip` is set.
    Multiplicative {
        flip: bool,
        a: Scalar,
    },
    Mobius {
        matrix: Moebius,
    },
}

impl ModelElement {
    fn translation(b: Scalar) -> Self {
        Self::Affine {
            a: Scalar::one(),
            b,
        }
    }

    fn scaled(&self, factor: &Scalar) -> Self {
        match self {
            Self::Affine { a, b } => {
                if a.approx_eq(&Scalar::one(), Tolerance::default()) {
                    Self::Affine {
                        a: a.clone(),
                        b: b * factor,
                    }
                } else {
                    Self::Affine {
                        a: a * factor,
                        b: b.clone(),
                    }
                }
            }
            Self::Multiplicative { flip, a } => Self::Multiplicative {
                flip: *flip,
                a: a * factor,
            },
            Self::Mobius { matrix } => {
                let mut e: Vec<Scalar> = matrix.entries().into_iter().cloned().collect();
                let lead = e.iter().position(|x| x.abs() > 1e-12).unwrap_or(0);
                e[lead] = &e[lead] * factor;
                let [a, b, c, d]: [Scalar; 4] = e.try_into().unwrap();
                Self::Mobius {
                    matrix: Moebius::new(a, b, c, d).unwrap_or_else(|_| matrix.clone()),
                }
            }
        }
    }
}

/// A locally homogeneous structure: model, curve, developing map family and
/// holonomy on the fundamental-group generators (the reduced periods for an
/// elliptic curve, `a₁, b₁, …, a_g, b_g` otherwise).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DevelopingSystem {
    pub model: ModelGeometry,
    pub curve: CurveDescriptor,
    pub family: DevFamily,
    pub holonomy: Vec<ModelElement>,
}

/// Parameters for [`build_developing_system`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Scalar>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<Scalar>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<Scalar>,
    /// `"linear"` or `"exponential"`, for models admitting both.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    /// Holonomy images for curves of genus at least two.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub images: Option<Vec<Moebius>>,
}

impl StructureParams {
    pub fn with_c(c: Scalar) -> Self {
        Self {
            c: Some(c),
            ..Self::default()
        }
    }
}

/// Wire form of a developing system: parameters plus an optional holonomy
/// override.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureSpec {
    pub model: ModelGeometry,
    pub curve: CurveDescriptor,
    #[serde(default)]
    pub params: StructureParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holonomy: Option<Vec<ModelElement>>,
}

impl StructureSpec {
    pub fn build(&self, tol: Tolerance) -> Result<DevelopingSystem> {
        let ds = build_developing_system(&self.model, &self.curve, &self.params, tol)?;
        match &self.holonomy {
            Some(h) => ds.with_holonomy(h.clone()),
            None => Ok(ds),
        }
    }
}

fn nonzero(name: &str, value: Option<&Scalar>, tol: Tolerance) -> Result<Scalar> {
    match value {
        None => Err(Error::InvalidInput(format!(
            "parameter `{name}` is required"
        ))),
        Some(v) if v.is_zero(tol) => Err(Error::ForbiddenParameter(format!(
            "`{name}` must be nonzero"
        ))),
        Some(v) => Ok(v.clone()),
    }
}

fn wants_exponential(params: &StructureParams) -> Result<Option<bool>> {
    match params.family.as_deref() {
        None => Ok(None),
        Some("linear") => Ok(Some(false)),
        Some("exponential") => Ok(Some(true)),
        Some(other) => Err(Error::InvalidInput(format!("unknown family `{other}`"))),
    }
}

/// Builds the catalogue structure for `(model, curve, params)` with holonomy
/// from the closed forms.
pub fn build_developing_system(
    model: &ModelGeometry,
    curve: &CurveDescriptor,
    params: &StructureParams,
    tol: Tolerance,
) -> Result<DevelopingSystem> {
    model.validate(tol)?;
    curve.validate()?;
    if let Classification::NoneAdmitted = classify_structures(model, curve) {
        return Err(Error::InvalidInput(format!(
            "no {} structures exist on a genus-{} curve",
            model.id(),
            curve.genus
        )));
    }
    if curve.genus == 0 {
        return Ok(DevelopingSystem {
            model: model.clone(),
            curve: curve.clone(),
            family: DevFamily::IdentityP1,
            holonomy: vec![],
        });
    }
    if curve.genus >= 2 {
        let images = params
            .images
            .clone()
            .ok_or_else(|| Error::InvalidInput("genus ≥ 2 needs holonomy `images`".into()))?;
        let rel = surface_relation(&images, curve.genus)?;
        if !rel.is_identity(tol.scaled(rel.max_abs_entry())) {
            return Err(Error::InvariantViolation(
                "product of commutators of the images is not the identity".into(),
            ));
        }
        return Ok(DevelopingSystem {
            model: model.clone(),
            curve: curve.clone(),
            family: DevFamily::HolonomyOnly,
            holonomy: images
                .into_iter()
                .map(|matrix| ModelElement::Mobius { matrix })
                .collect(),
        });
    }
    let lattice = curve.lattice_for("this model")?;
    let periods = lattice.periods();
    let c_param = params.c.as_ref();
    let exp_hol = |c: &Scalar| -> Vec<Scalar> { periods.iter().map(|l| (c * *l).exp()).collect() };

    let (family, holonomy) = match model {
        ModelGeometry::Translations => {
            let c = nonzero("c", c_param, tol)?;
            let hol = periods
                .iter()
                .map(|l| ModelElement::translation(&c * *l))
                .collect();
            (DevFamily::Linear { c }, hol)
        }
        ModelGeometry::DiscreteAffine { group } => {
            let c = nonzero("c", c_param, tol)?;
            let grain = wants_exponential(params)?.unwrap_or(params.k.is_some());
            if grain {
                let k = match &params.k {
                    Some(k) => nonzero("k", Some(k), tol)?,
                    None => Scalar::one(),
                };
                if !is_grain(&c, lattice, group, DEFAULT_EXP_BOUND, tol)? {
                    return Err(Error::NotAGrain(format!("e^(cλ) ∉ A for c = {c}")));
                }
                let hol = exp_hol(&c)
                    .into_iter()
                    .map(|a| ModelElement::Affine {
                        a,
                        b: Scalar::zero(),
                    })
                    .collect();
                (DevFamily::Exponential { c, k }, hol)
            } else {
                let hol = periods
                    .iter()
                    .map(|l| ModelElement::translation(&c * *l))
                    .collect();
                (DevFamily::Linear { c }, hol)
            }
        }
        ModelGeometry::Affine => {
            let exponential = match wants_exponential(params)? {
                Some(e) => e,
                None => c_param.is_some_and(|c| !c.is_zero(tol)),
            };
            if exponential {
                let c = nonzero("c", c_param, tol)?;
                let k = match &params.k {
                    Some(k) => nonzero("k", Some(k), tol)?,
                    None => Scalar::one(),
                };
                let hol = exp_hol(&c)
                    .into_iter()
                    .map(|a| ModelElement::Affine {
                        a,
                        b: Scalar::zero(),
                    })
                    .collect();
                (DevFamily::Exponential { c, k }, hol)
            } else {
                let hol = periods
                    .iter()
                    .map(|l| ModelElement::translation((*l).clone()))
                    .collect();
                (DevFamily::AffineLinear, hol)
            }
        }
        ModelGeometry::TorusTranslations { lattice: l0 } => {
            let l = nonzero("l", params.l.as_ref().or(c_param), tol)?;
            let hol = periods
                .iter()
                .map(|p| ModelElement::translation(l0.reduce_point(&(&l * *p))))
                .collect();
            (DevFamily::TorusCover { l }, hol)
        }
        ModelGeometry::ZnTorus { lattice: l0, .. } => {
            let c = nonzero("c", c_param, tol)?;
            let hol = periods
                .iter()
                .map(|p| ModelElement::translation(l0.reduce_point(&(&c * *p))))
                .collect();
            (DevFamily::Linear { c }, hol)
        }
        ModelGeometry::Cstar | ModelGeometry::Z2Cstar => {
            let c = nonzero("c", c_param, tol)?;
            let hol = exp_hol(&c)
                .into_iter()
                .map(|a| ModelElement::Multiplicative { flip: false, a })
                .collect();
            (
                DevFamily::Exponential {
                    c,
                    k: Scalar::one(),
                },
                hol,
            )
        }
        ModelGeometry::Projective => match c_param.filter(|c| !c.is_zero(tol)) {
            Some(c) => {
                let half = Scalar::from_ratio(1, 2);
                let hol = periods
                    .iter()
                    .map(|l| ModelElement::Mobius {
                        matrix: Moebius::diagonal(&(&(c * &half) * *l).exp()).expect("nonzero"),
                    })
                    .collect();
                (
                    DevFamily::Exponential {
                        c: c.clone(),
                        k: Scalar::one(),
                    },
                    hol,
                )
            }
            None => {
                let hol = periods
                    .iter()
                    .map(|l| ModelElement::Mobius {
                        matrix: Moebius::translation(l),
                    })
                    .collect();
                (DevFamily::AffineLinear, hol)
            }
        },
    };
    Ok(DevelopingSystem {
        model: model.clone(),
        curve: curve.clone(),
        family,
        holonomy,
    })
}

/// `[m₁, m₂][m₃, m₄]⋯`; errors if the image count is not `2g`.
pub fn surface_relation(images: &[Moebius], genus: u32) -> Result<Moebius> {
    if images.len() != 2 * genus as usize {
        return Err(Error::InvalidInput(format!(
            "genus {genus} needs {} images, got {}",
            2 * genus,
            images.len()
        )));
    }
    Ok(images.chunks(2).fold(Moebius::identity(), |acc, pair| {
        acc.compose(&pair[0].commutator(&pair[1]))
    }))
}

impl DevelopingSystem {
    /// Replaces the holonomy after checking the element kinds against the
    /// model. Relations are not enforced here; [`verify_equivariance`]
    /// measures them.
    pub fn with_holonomy(mut self, holonomy: Vec<ModelElement>) -> Result<Self> {
        if holonomy.len() != self.curve.generator_count() {
            return Err(Error::InvalidInput(format!(
                "expected {} holonomy values, got {}",
                self.curve.generator_count(),
                holonomy.len()
            )));
        }
        let tol = Tolerance::default();
        for h in &holonomy {
            let ok = match (&self.model, h) {
                (ModelGeometry::Translations, ModelElement::Affine { a, .. }) => {
                    a.approx_eq(&Scalar::one(), tol)
                }
                (ModelGeometry::TorusTranslations { .. }, ModelElement::Affine { a, .. }) => {
                    a.approx_eq(&Scalar::one(), tol)
                }
                (ModelGeometry::ZnTorus { n, .. }, ModelElement::Affine { a, .. }) => a
                    .powi(*n as i64)
                    .approx_eq(&Scalar::one(), tol.scaled(10.0)),
                (
                    ModelGeometry::DiscreteAffine { .. } | ModelGeometry::Affine,
                    ModelElement::Affine { a, .. },
                ) => !a.is_zero(tol),
                (ModelGeometry::Cstar, ModelElement::Multiplicative { flip, a }) => {
                    !flip && !a.is_zero(tol)
                }
                (ModelGeometry::Z2Cstar, ModelElement::Multiplicative { a, .. }) => !a.is_zero(tol),
                (ModelGeometry::Projective, ModelElement::Mobius { .. }) => true,
                _ => false,
            };
            if !ok {
                return Err(Error::InvalidInput(format!(
                    "holonomy value {h:?} is not in the group of the {} model",
                    self.model.id()
                )));
            }
        }
        self.holonomy = holonomy;
        Ok(self)
    }

    /// The same structure with `h(γ_index)` multiplied by `1 + rel`
    /// (translation part for translations, linear part otherwise, leading
    /// matrix entry for Möbius values).
    pub fn with_perturbed_holonomy(&self, index: usize, rel: f64) -> Result<Self> {
        let mut out = self.clone();
        let slot = out
            .holonomy
            .get_mut(index)
            .ok_or_else(|| Error::InvalidInput(format!("no holonomy value at index {index}")))?;
        let factor = Scalar::approx(1.0 + rel, 0.0);
        *slot = match (&self.model.torus(), &*slot) {
            // on ℂ/Λ₀ a relative change of b can vanish modulo Λ₀; shift by a
            // fraction of the shortest period instead
            (Some(l0), ModelElement::Affine { a, b }) => ModelElement::Affine {
                a: a.clone(),
                b: b + &(&Scalar::approx(rel, 0.0) * l0.l1()),
            },
            _ => slot.scaled(&factor),
        };
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivarianceReport {
    pub max_residual: f64,
    pub threshold: f64,
    pub pass: bool,
    pub samples: usize,
    pub metric: &'static str,
}

fn relative_gap(x: &Scalar, y: &Scalar) -> f64 {
    let d = (x - y).abs();
    if d == 0.0 {
        return 0.0;
    }
    d / x.abs().max(y.abs()).max(1.0)
}

fn apply_affine(a: &Scalar, b: &Scalar, w: &Scalar) -> Scalar {
    &(a * w) + b
}

/// Random points of the fundamental parallelogram, exact when the lattice is.
fn sample_points(lattice: &Lattice, count: usize, seed: u64) -> Vec<Scalar> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let (u, v): (f64, f64) = (rng.gen(), rng.gen());
            let (u, v) = if lattice.is_exact() {
                (
                    Scalar::from_f64_exact(u, 0.0).unwrap(),
                    Scalar::from_f64_exact(v, 0.0).unwrap(),
                )
            } else {
                (Scalar::approx(u, 0.0), Scalar::approx(v, 0.0))
            };
            &(&u * lattice.l1()) + &(&v * lattice.l2())
        })
        .collect()
}

/// Evaluates `|δ(z + λⱼ) − h(λⱼ)·δ(z)|` at `samples` seeded random points
/// `z` for every generator.
///
/// Residuals are relative (`|x − y| / max(1, |x|, |y|)`) for maps into `ℂ` or
/// `ℂ×`, the distance to `Λ₀` for torus models, and chordal on `ℙ¹`. For
/// genus at least two the residual is the distance of the product of
/// commutators from the identity. The check passes when the worst residual
/// is at most `eps · max(1, |c λ|)`.
pub fn verify_equivariance(
    ds: &DevelopingSystem,
    samples: usize,
    seed: u64,
    tol: Tolerance,
) -> Result<EquivarianceReport> {
    if samples == 0 {
        return Err(Error::InvalidInput("sample count must be positive".into()));
    }
    if ds.holonomy.len() != ds.curve.generator_count() {
        return Err(Error::InvalidInput(
            "holonomy does not match the curve".into(),
        ));
    }
    if ds.curve.genus != 1 {
        let (residual, metric) = if ds.curve.genus == 0 {
            (0.0, "trivial")
        } else {
            let images = mobius_images(&ds.holonomy)?;
            let rel = surface_relation(&images, ds.curve.genus)?;
            (rel.distance(&Moebius::identity()), "relation")
        };
        let threshold = tol.eps();
        return Ok(EquivarianceReport {
            max_residual: residual,
            threshold,
            pass: residual <= threshold,
            samples: 0,
            metric,
        });
    }
    let lattice = ds.curve.lattice_for("verification")?;
    let points = sample_points(lattice, samples, seed);
    let torus = ds.model.torus();
    let metric = match (&ds.model, torus) {
        (_, Some(_)) => "torus",
        (ModelGeometry::Projective, _) => "chordal",
        _ => "relative",
    };
    let mut worst = 0.0f64;
    let mut scale = 1.0f64;
    for (period, h) in lattice.periods().iter().zip(&ds.holonomy) {
        let slope = match &ds.family {
            DevFamily::Linear { c } | DevFamily::Exponential { c, .. } => c.abs(),
            DevFamily::TorusCover { l } => l.abs(),
            _ => 1.0,
        };
        scale = scale.max(slope * period.abs());
        for z in &points {
            let shifted = z + *period;
            let x = ds.family.eval_scalar(&shifted);
            let w = ds.family.eval_scalar(z);
            let r = match (h, torus) {
                (ModelElement::Affine { a, b }, Some(l0)) => {
                    let y = apply_affine(a, b, &w);
                    l0.distance_to_lattice(&(&x - &y)) / l0.l1().abs().max(1.0)
                }
                (ModelElement::Affine { a, b }, None) => relative_gap(&x, &apply_affine(a, b, &w)),
                (ModelElement::Multiplicative { flip, a }, _) => {
                    let y = if *flip { a / &w } else { a * &w };
                    relative_gap(&x, &y)
                }
                (ModelElement::Mobius { matrix }, _) => {
                    let y = matrix.act(&SpherePoint::Finite(w));
                    SpherePoint::Finite(x).chordal_distance(&y)
                }
            };
            worst = worst.max(if r.is_nan() { f64::INFINITY } else { r });
        }
    }
    let threshold = tol.eps() * scale;
    Ok(EquivarianceReport {
        max_residual: worst,
        threshold,
        pass: worst <= threshold,
        samples,
        metric,
    })
}

fn mobius_images(holonomy: &[ModelElement]) -> Result<Vec<Moebius>> {
    holonomy
        .iter()
        .map(|h| match h {
            ModelElement::Mobius { matrix } => Ok(matrix.clone()),
            other => Err(Error::InvalidInput(format!(
                "expected a Möbius holonomy value, got {other:?}"
            ))),
        })
        .collect()
}

/// The moduli column of the catalogue for a (model, curve) pair.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModuliDescription {
    pub space: String,
    pub dimension: u32,
    pub punctured: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quotient: Option<String>,
    /// Set when the catalogue string and the coordinate reported by
    /// [`moduli_coordinate`] describe the space differently.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub discrepancy: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Classification {
    Admitted(ModuliDescription),
    NoneAdmitted,
}

fn superscript(n: u32) -> String {
    const DIGITS: [char; 10] = ['⁰', '¹', '²', '³', '⁴', '⁵', '⁶', '⁷', '⁸', '⁹'];
    n.to_string()
        .chars()
        .map(|c| DIGITS[c.to_digit(10).unwrap() as usize])
        .collect()
}

fn sections(n: u32) -> String {
    if n == 1 {
        "H⁰(κ)".into()
    } else {
        format!("H⁰(κ^⊗{n})")
    }
}

fn row(space: String, dimension: u32, punctured: bool, quotient: Option<&str>) -> Classification {
    Classification::Admitted(ModuliDescription {
        space,
        dimension,
        punctured,
        quotient: quotient.map(str::to_string),
        discrepancy: None,
    })
}

/// Moduli of `model`-structures on `curve`, or `NoneAdmitted`.
pub fn classify_structures(model: &ModelGeometry, curve: &CurveDescriptor) -> Classification {
    match (model, curve.genus) {
        (ModelGeometry::Projective, 0) => row("*".into(), 0, false, None),
        (ModelGeometry::Projective, 1) => row(format!("{} ≅ ℂ", sections(2)), 1, false, Some("c ≅ −c")),
        (ModelGeometry::Projective, g) => {
            let d = 3 * g - 3;
            row(format!("{} ≅ ℂ{}", sections(2), superscript(d)), d, false, None)
        }
        (_, g) if g != 1 => Classification::NoneAdmitted,
        (ModelGeometry::Translations, _) => row(format!("{} ∖ 0 ≅ ℂ×", sections(1)), 1, true, None),
        (ModelGeometry::DiscreteAffine { .. }, _) => row(
            "(H⁰(κ)/A) ∪ ⋃_{c ∈ Γ(Λ,A)} ℂ×/A".into(),
            1,
            false,
            Some("/A"),
        ),
        (ModelGeometry::Affine, _) => row(format!("{} ≅ ℂ", sections(1)), 1, false, None),
        (ModelGeometry::TorusTranslations { .. }, _) => {
            Classification::Admitted(ModuliDescription {
                space: format!("{} ≅ ℂ", sections(1)),
                dimension: 1,
                punctured: false,
                quotient: None,
                discrepancy: Some(
                    "structures are classified by the linear isomorphism L ≠ 0; the coordinate reported is L".into(),
                ),
            })
        }
        (ModelGeometry::ZnTorus { n, .. }, _) => {
            row(format!("{} ≅ ℂ", sections(*n)), 1, false, Some("c ≅ αᵏc"))
        }
        (ModelGeometry::Cstar, _) => row(format!("{} ∖ 0 ≅ ℂ×", sections(1)), 1, true, None),
        (ModelGeometry::Z2Cstar, _) => {
            row(format!("{} ∖ 0 ≅ ℂ×", sections(2)), 1, true, Some("c ≅ −c"))
        }
    }
}

/// Canonical parameter labelling the conjugacy class of a structure.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModuliCoordinate {
    /// The 1-form `c dz`.
    OneForm { c: Scalar },
    /// `(c dz)ⁿ`, stored as `cⁿ`.
    Power { n: u32, value: Scalar },
    /// The linear isomorphism `L` of a torus cover.
    LinearIso { l: Scalar },
    /// A translation-induced `A ⋉ ℂ` structure: `c dz` modulo `A`.
    TranslationClass { c: Scalar },
    /// A grain structure: the grain `c` and `k` modulo `A`.
    GrainClass { c: Scalar, k: Scalar },
    /// The unique structure on `ℙ¹`.
    Point,
    /// Genus at least two: the quadratic differential is not computed.
    Unresolved { genus: u32 },
}

pub fn moduli_coordinate(ds: &DevelopingSystem) -> ModuliCoordinate {
    if ds.curve.genus == 0 {
        return ModuliCoordinate::Point;
    }
    if ds.curve.genus >= 2 {
        return ModuliCoordinate::Unresolved {
            genus: ds.curve.genus,
        };
    }
    let c = match &ds.family {
        DevFamily::Linear { c } | DevFamily::Exponential { c, .. } => c.clone(),
        DevFamily::TorusCover { l } => l.clone(),
        _ => Scalar::zero(),
    };
    match (&ds.model, &ds.family) {
        (ModelGeometry::TorusTranslations { .. }, _) => ModuliCoordinate::LinearIso { l: c },
        (ModelGeometry::ZnTorus { n, .. }, _) => ModuliCoordinate::Power {
            n: *n,
            value: c.powi(*n as i64),
        },
        (ModelGeometry::Z2Cstar | ModelGeometry::Projective, _) => ModuliCoordinate::Power {
            n: 2,
            value: &c * &c,
        },
        (ModelGeometry::DiscreteAffine { .. }, DevFamily::Exponential { c, k }) => {
            ModuliCoordinate::GrainClass {
                c: c.clone(),
                k: k.clone(),
            }
        }
        (ModelGeometry::DiscreteAffine { .. }, _) => ModuliCoordinate::TranslationClass { c },
        _ => ModuliCoordinate::OneForm { c },
    }
}

fn close(a: &Scalar, b: &Scalar, tol: Tolerance) -> bool {
    a.approx_eq(b, tol.scaled(a.abs().max(b.abs()).max(1.0) * 10.0))
}

/// Whether two structures on the same curve with the same model are
/// conjugate, by comparing moduli coordinates under the model's
/// identification.
pub fn is_conjugate(
    ds1: &DevelopingSystem,
    ds2: &DevelopingSystem,
    exp_bound: u32,
    tol: Tolerance,
) -> Result<bool> {
    if ds1.model != ds2.model {
        return Err(Error::ModelMismatch(format!(
            "{} vs {}",
            ds1.model.id(),
            ds2.model.id()
        )));
    }
    if ds1.curve != ds2.curve {
        return Err(Error::BaseMismatch(
            "structures live on different curves".into(),
        ));
    }
    let in_group = |x: &Scalar| -> Result<bool> {
        match &ds1.model {
            ModelGeometry::DiscreteAffine { group } => {
                Ok(member_mult(x, group, exp_bound, tol)?.is_member())
            }
            _ => Ok(false),
        }
    };
    use ModuliCoordinate::*;
    Ok(match (moduli_coordinate(ds1), moduli_coordinate(ds2)) {
        (OneForm { c: a }, OneForm { c: b }) => close(&a, &b, tol),
        (Power { value: a, .. }, Power { value: b, .. }) => close(&a, &b, tol),
        (LinearIso { l: a }, LinearIso { l: b }) => close(&a, &b, tol),
        (TranslationClass { c: a }, TranslationClass { c: b }) => in_group(&(&a / &b))?,
        (GrainClass { c: c1, k: k1 }, GrainClass { c: c2, k: k2 }) => {
            close(&c1, &c2, tol) && in_group(&(&k1 / &k2))?
        }
        (Point, Point) => true,
        (Unresolved { .. }, Unresolved { .. }) => {
            return Err(Error::Unsupported(
                "conjugacy of higher-genus projective structures needs the quadratic differential"
                    .into(),
            ))
        }
        _ => false,
    })
}

/// Automorphism group of a structure.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AutoDescriptor {
    pub group: String,
    pub homogeneous: bool,
    /// Complex dimension.
    pub dimension: u32,
    /// Identity component.
    pub identity_component: String,
    /// Order `n` of the rotations `z ↦ e^{2πi/n} z` in the component group,
    /// for elliptic curves.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rotation_order: Option<u32>,
}

fn rotations_then_translations(n: u32) -> AutoDescriptor {
    AutoDescriptor {
        group: if n == 1 {
            "translations".into()
        } else {
            format!("ℤ{} ⋉ ℂ", subscript(n))
        },
        homogeneous: true,
        dimension: 1,
        identity_component: "ℂ".into(),
        rotation_order: Some(n),
    }
}

fn finite_auto(group: &str) -> AutoDescriptor {
    AutoDescriptor {
        group: group.into(),
        homogeneous: false,
        dimension: 0,
        identity_component: "1".into(),
        rotation_order: None,
    }
}

/// Largest `m` dividing `limit` with `e^{2πi/m} Λ = Λ` and `pred(m)`.
fn rotation_order(
    lattices: &[&Lattice],
    limit: u32,
    tol: Tolerance,
    pred: impl Fn(u32) -> Result<bool>,
) -> Result<u32> {
    for m in [6, 4, 3, 2] {
        if !limit.is_multiple_of(m) {
            continue;
        }
        let zeta = root_of_unity(m, 1);
        if lattices.iter().all(|l| l.is_invariant_under(&zeta, tol)) && pred(m)? {
            return Ok(m);
        }
    }
    Ok(1)
}

pub fn automorphism_group(ds: &DevelopingSystem, tol: Tolerance) -> Result<AutoDescriptor> {
    match ds.curve.genus {
        0 => {
            return Ok(AutoDescriptor {
                group: "PSL(2,ℂ)".into(),
                homogeneous: true,
                dimension: 3,
                identity_component: "PSL(2,ℂ)".into(),
                rotation_order: None,
            })
        }
        1 => {}
        _ => return Ok(finite_auto("finite")),
    }
    let lattice = ds.curve.lattice_for("automorphisms")?;
    let loose = tol.scaled(1e3);
    let bihol = || rotation_order(&[lattice], 12, loose, |_| Ok(true));
    let exponential = matches!(ds.family, DevFamily::Exponential { .. });
    Ok(match &ds.model {
        ModelGeometry::Translations | ModelGeometry::Cstar => rotations_then_translations(1),
        ModelGeometry::Affine if exponential => rotations_then_translations(1),
        ModelGeometry::Affine => rotations_then_translations(bihol()?),
        ModelGeometry::Z2Cstar => rotations_then_translations(2),
        ModelGeometry::Projective if exponential => rotations_then_translations(2),
        ModelGeometry::Projective => rotations_then_translations(bihol()?),
        ModelGeometry::DiscreteAffine { .. } if exponential => finite_auto("finite"),
        ModelGeometry::DiscreteAffine { group } => {
            let n = rotation_order(&[lattice], 12, loose, |m| {
                Ok(member_mult(&root_of_unity(m, 1), group, DEFAULT_EXP_BOUND, tol)?.is_member())
            })?;
            rotations_then_translations(n)
        }
        ModelGeometry::TorusTranslations { lattice: l0 } => {
            let l = match &ds.family {
                DevFamily::TorusCover { l } => l.clone(),
                _ => Scalar::one(),
            };
            let pulled = l0.scaled(&l.recip().unwrap_or_else(Scalar::one))?;
            rotations_then_translations(rotation_order(&[lattice, &pulled], 12, loose, |_| {
                Ok(true)
            })?)
        }
        ModelGeometry::ZnTorus { n, .. } => {
            rotations_then_translations(rotation_order(&[lattice], *n, loose, |_| Ok(true))?)
        }
    })
}

/// Whether the automorphism group acts transitively.
pub fn is_homogeneous(ds: &DevelopingSystem, tol: Tolerance) -> Result<bool> {
    Ok(automorphism_group(ds, tol)?.homogeneous)
}

/// Default radius of the difference stencil in [`schwarzian_fd`].
pub const DEFAULT_SCHWARZIAN_STEP: f64 = 0.25;
const STENCIL_POINTS: usize = 32;

/// Finite-difference Schwarzian `F‴/F′ − (3/2)(F″/F′)²` at `z`.
///
/// Derivatives come from the discrete Cauchy integral over `32` points on the
/// circle of radius `step` about `z`; `F` must be holomorphic on that disc.
pub fn schwarzian_fd(
    f: impl Fn(Complex64) -> Complex64,
    z: Complex64,
    step: f64,
) -> Result<Complex64> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidInput("step must be positive".into()));
    }
    let n = STENCIL_POINTS;
    let mut coeff = [Complex64::new(0.0, 0.0); 4];
    let mut magnitude = 0.0f64;
    for j in 0..n {
        let w = Complex64::from_polar(1.0, std::f64::consts::TAU * j as f64 / n as f64);
        let v = f(z + w * step);
        if !v.is_finite() {
            return Err(Error::InvalidInput(format!("F is not finite near {z}")));
        }
        magnitude = magnitude.max(v.norm());
        for (m, slot) in coeff.iter_mut().enumerate().skip(1) {
            *slot += v * w.powi(-(m as i32));
        }
    }
    // F^(m)(z) ≈ m! / (n rᵐ) Σ F(z + r wʲ) w^(−jm)
    let d1 = coeff[1] / (n as f64 * step);
    let d2 = coeff[2] * 2.0 / (n as f64 * step.powi(2));
    let d3 = coeff[3] * 6.0 / (n as f64 * step.powi(3));
    if d1.norm() <= 1e-12 * magnitude.max(1.0) {
        return Err(Error::VanishingDerivative(format!("{z}")));
    }
    let q = d2 / d1;
    Ok(d3 / d1 - q * q * 1.5)
}

/// Closed-form Schwarzian of a catalogue developing map (constant in `z`).
pub fn schwarzian_exact(family: &DevFamily) -> Scalar {
    match family {
        DevFamily::Exponential { c, .. } => &(c * c) * &Scalar::from_ratio(-1, 2),
        _ => Scalar::zero(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn square() -> CurveDescriptor {
        CurveDescriptor::elliptic(Lattice::square())
    }

    fn build(model: ModelGeometry, curve: &CurveDescriptor, c: Scalar) -> DevelopingSystem {
        build_developing_system(&model, curve, &StructureParams::with_c(c), tol()).unwrap()
    }

    #[test]
    fn translation_holonomy() {
        let ds = build(ModelGeometry::Translations, &square(), Scalar::one());
        assert_eq!(ds.holonomy[0], ModelElement::translation(Scalar::one()));
        assert_eq!(ds.holonomy[1], ModelElement::translation(Scalar::i()));
    }

    #[test]
    fn projective_unipotent_holonomy() {
        let ds = build(ModelGeometry::Projective, &square(), Scalar::zero());
        assert_eq!(ds.family, DevFamily::AffineLinear);
        assert_eq!(
            ds.holonomy[1],
            ModelElement::Mobius {
                matrix: Moebius::translation(&Scalar::i())
            }
        );
    }

    #[test]
    fn non_grain_is_rejected() {
        let lat = Lattice::new(
            Scalar::approx(0.0, 2.0 * PI),
            Scalar::approx(2f64.ln(), 0.0),
        )
        .unwrap();
        let model = ModelGeometry::DiscreteAffine {
            group: MultGroup::new(vec![Scalar::from_int(2)], 1).unwrap(),
        };
        let params = StructureParams {
            c: Some(Scalar::from_ratio(1, 2)),
            family: Some("exponential".into()),
            ..Default::default()
        };
        let curve = CurveDescriptor::elliptic(lat);
        assert!(matches!(
            build_developing_system(&model, &curve, &params, tol()),
            Err(Error::NotAGrain(_))
        ));
        let ok = StructureParams {
            c: Some(Scalar::one()),
            ..params
        };
        let ds = build_developing_system(&model, &curve, &ok, tol()).unwrap();
        assert!(verify_equivariance(&ds, 20, 1, tol()).unwrap().pass);
        assert!(!automorphism_group(&ds, tol()).unwrap().homogeneous);
    }

    #[test]
    fn forbidden_parameters() {
        let z = StructureParams::with_c(Scalar::zero());
        for model in [
            ModelGeometry::Translations,
            ModelGeometry::Cstar,
            ModelGeometry::Z2Cstar,
        ] {
            assert!(matches!(
                build_developing_system(&model, &square(), &z, tol()),
                Err(Error::ForbiddenParameter(_))
            ));
        }
        let bad = ModelGeometry::ZnTorus {
            n: 4,
            lattice: Lattice::hexagonal(),
        };
        assert!(matches!(
            build_developing_system(
                &bad,
                &square(),
                &StructureParams::with_c(Scalar::one()),
                tol()
            ),
            Err(Error::LatticeModelMismatch(_))
        ));
    }

    #[test]
    fn cstar_exponential_verifies() {
        let lat = Lattice::new(Scalar::approx(0.0, 2.0 * PI), Scalar::from_int(3)).unwrap();
        let ds = build(
            ModelGeometry::Cstar,
            &CurveDescriptor::elliptic(lat),
            Scalar::one(),
        );
        let r = verify_equivariance(&ds, 50, 7, tol()).unwrap();
        assert!(r.pass && r.max_residual <= 1e-9, "{r:?}");
    }

    #[test]
    fn linear_torus_is_exact() {
        let model = ModelGeometry::ZnTorus {
            n: 2,
            lattice: Lattice::from_ints((1, 0), (0, 2)).unwrap(),
        };
        let ds = build(model, &square(), Scalar::gaussian(1, 2));
        let r = verify_equivariance(&ds, 30, 3, tol()).unwrap();
        assert_eq!(r.max_residual, 0.0);
        let ds = build(
            ModelGeometry::Translations,
            &square(),
            Scalar::from_ratio(2, 3),
        );
        assert_eq!(
            verify_equivariance(&ds, 30, 3, tol()).unwrap().max_residual,
            0.0
        );
    }

    #[test]
    fn corrupted_holonomy_fails() {
        for (model, c) in [
            (ModelGeometry::Translations, Scalar::one()),
            (ModelGeometry::Cstar, Scalar::approx(0.5, 0.2)),
            (ModelGeometry::Projective, Scalar::approx(0.5, 0.2)),
            (ModelGeometry::Projective, Scalar::zero()),
            (
                ModelGeometry::TorusTranslations {
                    lattice: Lattice::hexagonal(),
                },
                Scalar::one(),
            ),
        ] {
            let ds = build(model, &square(), c);
            assert!(verify_equivariance(&ds, 20, 1, tol()).unwrap().pass);
            let bad = ds.with_perturbed_holonomy(0, 0.01).unwrap();
            assert!(!verify_equivariance(&bad, 20, 1, tol()).unwrap().pass);
        }
    }

    #[test]
    fn table_rows() {
        let g2 = CurveDescriptor::higher(2);
        match classify_structures(&ModelGeometry::Projective, &g2) {
            Classification::Admitted(d) => {
                assert_eq!(d.space, "H⁰(κ^⊗2) ≅ ℂ³");
                assert_eq!(d.dimension, 3);
            }
            other => panic!("{other:?}"),
        }
        match classify_structures(&ModelGeometry::Projective, &CurveDescriptor::rational()) {
            Classification::Admitted(d) => assert_eq!((d.space.as_str(), d.dimension), ("*", 0)),
            other => panic!("{other:?}"),
        }
        assert_eq!(
            classify_structures(&ModelGeometry::Cstar, &g2),
            Classification::NoneAdmitted
        );
    }

    #[test]
    fn coordinates_and_conjugacy() {
        let model = ModelGeometry::ZnTorus {
            n: 2,
            lattice: Lattice::square(),
        };
        let ds = build(model, &square(), Scalar::from_int(3));
        assert_eq!(
            moduli_coordinate(&ds),
            ModuliCoordinate::Power {
                n: 2,
                value: Scalar::from_int(9)
            }
        );
        let p = build(ModelGeometry::Projective, &square(), Scalar::from_int(2));
        let q = build(ModelGeometry::Projective, &square(), Scalar::from_int(-2));
        assert_eq!(moduli_coordinate(&p), moduli_coordinate(&q));
        assert!(is_conjugate(&p, &q, 20, tol()).unwrap());
        let z4 = ModelGeometry::ZnTorus {
            n: 4,
            lattice: Lattice::square(),
        };
        let c = Scalar::approx(0.7, 0.3);
        let a = build(z4.clone(), &square(), c.clone());
        let b = build(z4, &square(), &c * &Scalar::i());
        assert!(is_conjugate(&a, &b, 20, tol()).unwrap());
        let t1 = build(ModelGeometry::Translations, &square(), Scalar::one());
        let t2 = build(ModelGeometry::Translations, &square(), Scalar::from_int(2));
        assert_eq!(
            moduli_coordinate(&t1),
            ModuliCoordinate::OneForm { c: Scalar::one() }
        );
        assert!(!is_conjugate(&t1, &t2, 20, tol()).unwrap());
        assert!(matches!(
            is_conjugate(&t1, &p, 20, tol()),
            Err(Error::ModelMismatch(_))
        ));
    }

    #[test]
    fn automorphism_examples() {
        let p = build(ModelGeometry::Projective, &square(), Scalar::one());
        let a = automorphism_group(&p, tol()).unwrap();
        assert_eq!((a.group.as_str(), a.homogeneous), ("ℤ₂ ⋉ ℂ", true));
        let p0 = build(ModelGeometry::Projective, &square(), Scalar::zero());
        assert_eq!(
            automorphism_group(&p0, tol()).unwrap().rotation_order,
            Some(4)
        );
        let g2 = build_developing_system(
            &ModelGeometry::Projective,
            &CurveDescriptor::higher(2),
            &StructureParams {
                images: Some(vec![Moebius::identity(); 4]),
                ..Default::default()
            },
            tol(),
        )
        .unwrap();
        let a = automorphism_group(&g2, tol()).unwrap();
        assert_eq!((a.group.as_str(), a.homogeneous), ("finite", false));
        let hex = CurveDescriptor::elliptic(Lattice::hexagonal());
        let z3 = build(
            ModelGeometry::ZnTorus {
                n: 3,
                lattice: Lattice::hexagonal(),
            },
            &hex,
            Scalar::one(),
        );
        assert_eq!(
            automorphism_group(&z3, tol()).unwrap().rotation_order,
            Some(3)
        );
        let z2 = build(
            ModelGeometry::ZnTorus {
                n: 2,
                lattice: Lattice::hexagonal(),
            },
            &square(),
            Scalar::one(),
        );
        assert_eq!(
            automorphism_group(&z2, tol()).unwrap().rotation_order,
            Some(2)
        );
    }

    #[test]
    fn schwarzian_examples() {
        let z = Complex64::new(0.3, -0.2);
        let s = schwarzian_fd(|w| w, z, DEFAULT_SCHWARZIAN_STEP).unwrap();
        assert!(s.norm() < 1e-9);
        let s = schwarzian_fd(|w| (w * 2.0).exp(), z, DEFAULT_SCHWARZIAN_STEP).unwrap();
        assert!((s - Complex64::new(-2.0, 0.0)).norm() < 1e-6 * 2.0);
        let s = schwarzian_fd(
            |w| w.inv(),
            Complex64::new(1.5, 0.5),
            DEFAULT_SCHWARZIAN_STEP,
        )
        .unwrap();
        assert!(s.norm() < 1e-8);
        assert!(matches!(
            schwarzian_fd(|w| w * w, Complex64::new(0.0, 0.0), DEFAULT_SCHWARZIAN_STEP),
            Err(Error::VanishingDerivative(_))
        ));
        let exact = schwarzian_exact(&DevFamily::Exponential {
            c: Scalar::from_int(2),
            k: Scalar::one(),
        });
        assert_eq!(exact, Scalar::from_int(-2));
    }

    #[test]
    fn spec_json_roundtrip() {
        let json = r#"{
            "model": {"id": "zn_torus", "n": 4, "lattice": {"periods": [["1","0"],["0","1"]]}},
            "curve": {"genus": 1, "lattice": {"periods": [["1","0"],["0","2"]]}},
            "params": {"c": ["3", "0"]}
        }"#;
        let spec: StructureSpec = serde_json::from_str(json).unwrap();
        let ds = spec.build(tol()).unwrap();
        assert!(verify_equivariance(&ds, 10, 0, tol()).unwrap().pass);
        let text = serde_json::to_string(&ds).unwrap();
        assert!(text.contains("\"family\":\"linear\""));
    }

    fn annulus() -> impl Strategy<Value = Complex64> {
        (0.1f64..3.0, 0.0f64..(2.0 * PI)).prop_map(|(r, t)| Complex64::from_polar(r, t))
    }

    fn tau() -> impl Strategy<Value = Complex64> {
        (-0.5f64..0.5, 0.0f64..1.0)
            .prop_map(|(x, y)| Complex64::new(x, ((1.0 - x * x).sqrt()).max(0.87) + y))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn catalogue_structures_verify(c in annulus(), t in tau(), which in 0usize..7) {
            let curve = CurveDescriptor::elliptic(Lattice::new(Scalar::one(), t.into()).unwrap());
            let model = [
                ModelGeometry::Translations,
                ModelGeometry::Affine,
                ModelGeometry::Cstar,
                ModelGeometry::Z2Cstar,
                ModelGeometry::Projective,
                ModelGeometry::ZnTorus { n: 2, lattice: Lattice::square() },
                ModelGeometry::TorusTranslations { lattice: Lattice::hexagonal() },
            ][which].clone();
            let ds = build(model, &curve, c.into());
            let report = verify_equivariance(&ds, 16, 11, tol()).unwrap();
            prop_assert!(report.pass, "{:?}", report);
        }

        #[test]
        fn schwarzian_is_moebius_invariant(c in annulus(), m in (-2i64..3, -2i64..3, -2i64..3, 1i64..3)) {
            let (a, b, cc, d) = m;
            prop_assume!(a * d - b * cc != 0);
            let g = Moebius::from_ints(a, b, cc, d).unwrap();
            let z = Complex64::new(0.1, 0.2);
            let f = |w: Complex64| (c * w).exp();
            // g ∘ f must be holomorphic well beyond the stencil circle
            let pole_free = (0..=8).all(|ring| {
                (0..64).all(|j| {
                    let r = 2.0 * DEFAULT_SCHWARZIAN_STEP * ring as f64 / 8.0;
                    let w = z + Complex64::from_polar(r, j as f64 * PI / 32.0);
                    (cc as f64 * f(w) + d as f64).norm() > 0.2
                })
            });
            prop_assume!(pole_free);
            let [ga, gb, gc, gd] = g.to_c64();
            let composed = |w: Complex64| { let v = f(w); (ga * v + gb) / (gc * v + gd) };
            let s1 = schwarzian_fd(f, z, DEFAULT_SCHWARZIAN_STEP).unwrap();
            let s2 = schwarzian_fd(composed, z, DEFAULT_SCHWARZIAN_STEP).unwrap();
            prop_assert!((s1 - s2).norm() <= 1e-6 * s1.norm().max(1.0), "{} vs {}", s1, s2);
        }

        #[test]
        fn coordinates_separate_classes(c1 in annulus(), c2 in annulus(), which in 0usize..4) {
            let model = [
                ModelGeometry::Translations,
                ModelGeometry::Projective,
                ModelGeometry::ZnTorus { n: 4, lattice: Lattice::square() },
                ModelGeometry::Z2Cstar,
            ][which].clone();
            let a = build(model.clone(), &square(), c1.into());
            let b = build(model, &square(), c2.into());
            let same = close_coordinates(&moduli_coordinate(&a), &moduli_coordinate(&b));
            prop_assert_eq!(same, is_conjugate(&a, &b, 20, tol()).unwrap());
        }

        #[test]
        fn zn_roots_rebuild_conjugate(c in annulus(), which in 0usize..3, root in 0i64..6) {
            let (n, lat) = [(2, Lattice::square()), (4, Lattice::square()), (6, Lattice::hexagonal())][which].clone();
            let model = ModelGeometry::ZnTorus { n, lattice: lat };
            let ds = build(model.clone(), &square(), c.into());
            let ModuliCoordinate::Power { value, .. } = moduli_coordinate(&ds) else { unreachable!() };
            let w = value.to_c64();
            let r = Complex64::from_polar(w.norm().powf(1.0 / n as f64), w.arg() / n as f64)
                * Complex64::from_polar(1.0, 2.0 * PI * root as f64 / n as f64);
            let rebuilt = build(model, &square(), r.into());
            prop_assert!(is_conjugate(&ds, &rebuilt, 20, tol()).unwrap());
        }
    }

    fn close_coordinates(a: &ModuliCoordinate, b: &ModuliCoordinate) -> bool {
        use ModuliCoordinate::*;
        match (a, b) {
            (OneForm { c: x }, OneForm { c: y })
            | (Power { value: x, .. }, Power { value: y, .. }) => {
                (x.to_c64() - y.to_c64()).norm() <= 1e-8 * x.abs().max(1.0)
            }
            _ => a == b,
        }
    }
}
