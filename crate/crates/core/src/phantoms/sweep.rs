//! Perturbation sweeps comparing overlap and centerline scores.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::BinaryField;
use crate::metrics::{cl_x_dice, dice, VariantSpec};
use crate::morphology::paired_bundles;
use crate::numfmt::render;

use super::{delete_branch, generate, scale, translate, PhantomSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    /// Tube of radius 4 shifted perpendicular to its axis by 0..=3.
    Translation,
    /// Tube of radius 4 rescaled about the grid center.
    Scaling,
    /// Volumetric two-branch phantom with radii 1 and 4, each daughter
    /// deleted in turn.
    Imbalance,
}

impl Experiment {
    pub const ALL: [Experiment; 3] = [Experiment::Translation, Experiment::Scaling, Experiment::Imbalance];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Translation => "translation",
            Experiment::Scaling => "scaling",
            Experiment::Imbalance => "imbalance",
        }
    }

    /// The reference phantom of the sweep.
    pub fn phantom(self) -> PhantomSpec {
        match self {
            Experiment::Translation => PhantomSpec::tube(&[61, 31], 4.0, 40.0),
            Experiment::Scaling => PhantomSpec::tube(&[97, 41], 4.0, 40.0),
            Experiment::Imbalance => PhantomSpec::ybranch(&[64, 64, 14], [1.0, 4.0], 24.0),
        }
    }

    pub const SCALE_FACTORS: [f64; 5] = [0.5, 0.75, 1.0, 1.25, 1.5];

    /// `(param, prediction)` pairs, in sweep order.
    pub fn predictions(self) -> Result<Vec<(String, BinaryField)>> {
        let spec = self.phantom();
        let reference = generate(&spec)?;
        Ok(match self {
            Experiment::Translation => (0..=3)
                .map(|t| Ok((t.to_string(), translate(&reference, &[0, t])?)))
                .collect::<Result<_>>()?,
            Experiment::Scaling => Self::SCALE_FACTORS
                .iter()
                .map(|&f| Ok((f.to_string(), scale(&reference, f)?)))
                .collect::<Result<_>>()?,
            Experiment::Imbalance => vec![
                ("intact".to_string(), reference.clone()),
                ("delete_thin".to_string(), delete_branch(&spec, &reference, 1)?),
                ("delete_thick".to_string(), delete_branch(&spec, &reference, 2)?),
            ],
        })
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown experiment {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub param: String,
    pub metric: String,
    pub value: f64,
}

/// Scores every perturbed prediction against the unperturbed phantom.
///
/// For each parameter the rows are Dice, each variant, then the paired
/// scores `0.5 Dice + 0.5 X` labelled `dice+X`. Without explicit variants
/// the sweep uses clDice, cl-M-D and cbDice.
pub fn sweep(experiment: Experiment, variants: &[VariantSpec]) -> Result<Vec<SweepRow>> {
    let reference = generate(&experiment.phantom())?;
    let dim = reference.shape().ndim();
    let variants: Vec<VariantSpec> = if variants.is_empty() {
        ["clDice", "cl-M-D", "cbDice"]
            .iter()
            .map(|n| VariantSpec::parse(n, dim))
            .collect::<Result<_>>()?
    } else {
        variants.to_vec()
    };
    let mut rows = Vec::new();
    for (param, pred) in experiment.predictions()? {
        let d = dice(&pred, &reference)?;
        let mut push = |metric: String, value: f64| {
            rows.push(SweepRow {
                param: param.clone(),
                metric,
                value,
            })
        };
        push("dice".into(), d);
        let xs = variants
            .iter()
            .map(|v| {
                let (bp, bl) = paired_bundles(&pred, &reference, v.normalization)?;
                Ok((v.label.clone(), cl_x_dice(v, &bp, &bl)?))
            })
            .collect::<Result<Vec<_>>>()?;
        for (label, x) in &xs {
            push(label.clone(), *x);
        }
        for (label, x) in &xs {
            push(format!("dice+{label}"), 0.5 * d + 0.5 * x);
        }
    }
    Ok(rows)
}

/// CSV with header `param,metric,value`, LF line endings.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("param,metric,value\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.param, r.metric, render(r.value)));
    }
    out
}
