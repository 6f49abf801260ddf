//! The cl-X-Dice family.
//!
//! Every variant is the same pair of ratios over six weighting fields:
//!
//! ```text
//! Tprec = <Q_sp Q_vl> / (<Q_sp Q_spvp (1 - S_L)> + <Q_sp Q_slvl>)
//! Tsens = <Q_sl Q_vp> / (<Q_sl Q_slvl (1 - S_P)> + <Q_sl Q_spvp>)
//! ```
//!
//! where `<.>` is the grid sum of elementwise products. A variant only picks
//! which field fills each slot; in 3D the skeleton weights of the radius
//! based variants are squared.

use std::fmt;

use crate::error::{Error, Result};
use crate::morphology::{Normalization, SkeletonBundle};

use super::overlap::{harmonic_mean, ratio, Topo};

/// Per-element fields a recipe slot can select.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FieldKind {
    /// Skeleton S.
    Skeleton,
    /// Skeleton radius R.
    Radius,
    /// Inverse skeleton radius I.
    InvRadius,
    /// R / R_max.
    RadiusNorm,
    /// I / I_min.
    InvRadiusNorm,
    /// Mask V.
    Mask,
    /// Distance map D.
    Dist,
    /// D / R_max.
    DistNorm,
}

impl FieldKind {
    pub fn is_normalized(self) -> bool {
        matches!(
            self,
            FieldKind::RadiusNorm | FieldKind::InvRadiusNorm | FieldKind::DistNorm
        )
    }

    /// Skeleton-supported kinds (as opposed to mask-supported ones).
    pub fn on_skeleton(self) -> bool {
        !matches!(self, FieldKind::Mask | FieldKind::Dist | FieldKind::DistNorm)
    }
}

/// One recipe slot: a field raised to an exponent.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QField {
    pub field: FieldKind,
    pub exponent: u32,
}

/// The six weighting fields of one Table-style column. Slots ending in `l`
/// read the reference bundle, those ending in `p` the prediction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Recipe {
    pub sl: QField,
    pub sp: QField,
    pub vl: QField,
    pub vp: QField,
    pub slvl: QField,
    pub spvp: QField,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    /// clDice.
    ClD,
    ClSD,
    ClMD,
    ClMSD,
    ClMID,
    ClMSND,
    /// cbDice.
    ClMIND,
}

impl Variant {
    pub const ALL: [Variant; 7] = [
        Variant::ClD,
        Variant::ClSD,
        Variant::ClMD,
        Variant::ClMSD,
        Variant::ClMID,
        Variant::ClMSND,
        Variant::ClMIND,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::ClD => "cl-D",
            Variant::ClSD => "cl-S-D",
            Variant::ClMD => "cl-M-D",
            Variant::ClMSD => "cl-MS-D",
            Variant::ClMID => "cl-MI-D",
            Variant::ClMSND => "cl-MSN-D",
            Variant::ClMIND => "cl-MIN-D",
        }
    }

    /// Accepts canonical names, `-Dice` spellings and the `clDice` /
    /// `cbDice` aliases, case-insensitively.
    pub fn parse(name: &str) -> Result<Variant> {
        let key = name.trim().to_ascii_lowercase();
        let key = key.strip_suffix("ice").map(|k| k.to_string()).unwrap_or(key);
        Ok(match key.as_str() {
            "cl-d" | "cld" => Variant::ClD,
            "cl-s-d" => Variant::ClSD,
            "cl-m-d" => Variant::ClMD,
            "cl-ms-d" => Variant::ClMSD,
            "cl-mi-d" => Variant::ClMID,
            "cl-msn-d" => Variant::ClMSND,
            "cl-min-d" | "cbd" | "cb-d" => Variant::ClMIND,
            _ => return Err(Error::UnknownVariant(name.to_string())),
        })
    }

    pub fn recipe(self, dim: usize) -> Recipe {
        use FieldKind::*;
        let e = if dim == 3 { 2 } else { 1 };
        let q = |field, exponent| QField { field, exponent };
        let (skel, skel_exp, vol, skel_vol) = match self {
            Variant::ClD => (Skeleton, 1, Mask, Skeleton),
            Variant::ClSD => (Radius, e, Mask, Skeleton),
            Variant::ClMD => (Skeleton, 1, Dist, Radius),
            Variant::ClMSD => (Radius, e, Dist, Radius),
            Variant::ClMID => (InvRadius, e, Dist, Radius),
            Variant::ClMSND => (RadiusNorm, e, DistNorm, RadiusNorm),
            Variant::ClMIND => (InvRadiusNorm, e, DistNorm, RadiusNorm),
        };
        Recipe {
            sl: q(skel, skel_exp),
            sp: q(skel, skel_exp),
            vl: q(vol, 1),
            vp: q(vol, 1),
            slvl: q(skel_vol, 1),
            spvp: q(skel_vol, 1),
        }
    }

    pub fn is_normalized(self) -> bool {
        matches!(self, Variant::ClMSND | Variant::ClMIND)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A variant bound to a dimension, with the label it is reported under.
#[derive(Clone, Debug, PartialEq)]
pub struct VariantSpec {
    pub label: String,
    pub variant: Variant,
    pub dim: usize,
    pub recipe: Recipe,
    /// How the bundles handed to this variant are expected to be scaled.
    /// Under [`Normalization::Joint`] the normalized variants reject bundles
    /// whose `r_max` differ.
    pub normalization: Normalization,
}

impl VariantSpec {
    pub fn new(variant: Variant, dim: usize) -> Result<Self> {
        Self::labelled(variant.name(), variant, dim)
    }

    pub fn parse(name: &str, dim: usize) -> Result<Self> {
        Self::labelled(name.trim(), Variant::parse(name)?, dim)
    }

    fn labelled(label: &str, variant: Variant, dim: usize) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::InvalidArgument(format!("dimension {dim} is not 2 or 3")));
        }
        Ok(Self {
            label: label.to_string(),
            variant,
            dim,
            recipe: variant.recipe(dim),
            normalization: Normalization::default(),
        })
    }

    pub fn with_normalization(mut self, normalization: Normalization) -> Self {
        self.normalization = normalization;
        self
    }
}

/// Per-element view of one bundle's fields.
pub(crate) struct Fields<'a> {
    b: &'a SkeletonBundle,
}

impl<'a> Fields<'a> {
    pub(crate) fn new(b: &'a SkeletonBundle) -> Self {
        Self { b }
    }

    #[inline]
    pub(crate) fn get(&self, kind: FieldKind, i: usize) -> f64 {
        let b = self.b;
        match kind {
            FieldKind::Skeleton => b.skeleton.get(i) as u8 as f64,
            FieldKind::Radius => b.radius.get(i),
            FieldKind::InvRadius => b.inv_radius.get(i),
            FieldKind::RadiusNorm => b.radius.get(i) / b.r_max,
            FieldKind::InvRadiusNorm => b.inv_radius.get(i) / b.i_min,
            FieldKind::Mask => b.mask.get(i) as u8 as f64,
            FieldKind::Dist => b.dist.get(i),
            FieldKind::DistNorm => b.dist.get(i) / b.r_max,
        }
    }

    #[inline]
    pub(crate) fn q(&self, slot: QField, i: usize) -> f64 {
        let v = self.get(slot.field, i);
        if slot.exponent == 1 {
            v
        } else {
            v.powi(slot.exponent as i32)
        }
    }
}

/// Raw numerators and denominators, before the zero and cap conventions.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RatioSums {
    pub prec_num: f64,
    pub prec_den: f64,
    pub sens_num: f64,
    pub sens_den: f64,
}

pub fn cl_x_sums(spec: &VariantSpec, pred: &SkeletonBundle, reference: &SkeletonBundle) -> Result<RatioSums> {
    let shape = pred.mask.shape();
    shape.ensure_same(reference.mask.shape())?;
    if spec.dim != shape.ndim() {
        return Err(Error::DimensionMismatch {
            variant: spec.dim,
            grid: shape.ndim(),
        });
    }
    if spec.normalization == Normalization::Joint && spec.variant.is_normalized() && pred.r_max != reference.r_max {
        return Err(Error::RmaxMismatch {
            pred: pred.r_max,
            reference: reference.r_max,
        });
    }
    let r = &spec.recipe;
    let (p, l) = (Fields::new(pred), Fields::new(reference));
    let mut s = RatioSums::default();
    for i in 0..shape.len() {
        let q_sp = p.q(r.sp, i);
        let q_sl = l.q(r.sl, i);
        if q_sp != 0.0 {
            let not_sl = 1.0 - l.get(FieldKind::Skeleton, i);
            s.prec_num += q_sp * l.q(r.vl, i);
            s.prec_den += q_sp * p.q(r.spvp, i) * not_sl + q_sp * l.q(r.slvl, i);
        }
        if q_sl != 0.0 {
            let not_sp = 1.0 - p.get(FieldKind::Skeleton, i);
            s.sens_num += q_sl * p.q(r.vp, i);
            s.sens_den += q_sl * l.q(r.slvl, i) * not_sp + q_sl * p.q(r.spvp, i);
        }
    }
    Ok(s)
}

pub fn cl_x_parts(spec: &VariantSpec, pred: &SkeletonBundle, reference: &SkeletonBundle) -> Result<Topo> {
    let s = cl_x_sums(spec, pred, reference)?;
    let tprec = ratio(s.prec_num, s.prec_den);
    let tsens = ratio(s.sens_num, s.sens_den);
    Ok(Topo {
        tprec,
        tsens,
        value: harmonic_mean(tprec, tsens),
    })
}

pub fn cl_x_dice(spec: &VariantSpec, pred: &SkeletonBundle, reference: &SkeletonBundle) -> Result<f64> {
    Ok(cl_x_parts(spec, pred, reference)?.value)
}
