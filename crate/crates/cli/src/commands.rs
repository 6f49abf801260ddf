use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde_json::{json, Map, Value};
use thiserror::Error;
use vesseltop::io::{read_labels, write_labels};
use vesseltop::metrics::{betti_numbers, EvalOptions, SCHEMA};
use vesseltop::numfmt::sig6;
use vesseltop::phantoms::{generate, sweep, sweep_csv, Experiment, Geometry, PhantomSpec};
use vesseltop::softloss::{
    grad_check, random_instance, CombinedLoss, CombinedLossSpec, CrossEntropy, SoftClX, SoftDice, SoftLoss,
};
use vesseltop::{build_bundle, evaluate, LabelGrid, Normalization, VariantSpec};

use crate::{ExperimentArgs, Format, GradcheckArgs, Kind, MetricsArgs, PhantomArgs};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] vesseltop::Error),

    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: vesseltop::Error,
    },

    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        #[source]
        source: io::Error,
    },

    #[error("gradient check failed: max relative error {error} exceeds {tolerance}")]
    GradientMismatch { error: f64, tolerance: f64 },
}

impl CliError {
    /// 2 for bad input, 3 for failures on our side.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Core(_) | CliError::Read { .. } => 2,
            CliError::Write { .. } | CliError::GradientMismatch { .. } => 3,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Write {
            path: path.display().to_string(),
            source,
        }),
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| CliError::Write {
                    path: "stdout".into(),
                    source,
                })
        }
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json serializes");
    s.push('\n');
    s
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|t| t.trim())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<T>().map_err(|_| CliError::Usage(format!("bad {what} entry {t:?}"))))
        .collect()
}

fn parse_variants(s: &str, dim: usize, normalization: Normalization) -> Result<Vec<VariantSpec>> {
    let specs = s
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| Ok(VariantSpec::parse(t, dim)?.with_normalization(normalization)))
        .collect::<Result<Vec<_>>>()?;
    if specs.is_empty() {
        return Err(CliError::Usage("no variants given".into()));
    }
    Ok(specs)
}

/// `name:1,2` entries, possibly several per argument separated by `;`.
fn parse_groups(args: &[String]) -> Result<Vec<(String, Vec<usize>)>> {
    let mut out: Vec<(String, Vec<usize>)> = Vec::new();
    for entry in args.iter().flat_map(|a| a.split(';')).map(str::trim).filter(|e| !e.is_empty()) {
        let (name, ids) = entry
            .split_once(':')
            .ok_or_else(|| CliError::Usage(format!("group {entry:?} is not name:ids")))?;
        let name = name.trim();
        if name.is_empty() || out.iter().any(|(n, _)| n == name) {
            return Err(CliError::Usage(format!("group name {name:?} is empty or repeated")));
        }
        out.push((name.to_string(), parse_list(ids, "class id")?));
    }
    Ok(out)
}

pub fn metrics(a: &MetricsArgs) -> Result<()> {
    if !(a.tol.is_finite() && a.tol > 0.0) {
        return Err(CliError::Usage(format!("--tol must be positive, got {}", a.tol)));
    }
    let normalization = Normalization::parse(&a.normalization)?;
    let groups = parse_groups(&a.groups)?;
    let read = |path: &Path| {
        read_labels(path).map_err(|source| CliError::Read {
            path: path.display().to_string(),
            source,
        })
    };
    let pred = read(&a.pred)?;
    let reference = read(&a.reference)?;
    let mut opts = EvalOptions::new(parse_variants(&a.variants, reference.shape().ndim(), normalization)?);
    opts.tolerance = a.tol;
    opts.groups = groups;
    opts.num_classes = a.num_classes;
    let report = evaluate(&pred, &reference, &opts)?;
    let text = match a.format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
    };
    emit(a.out.as_deref(), &text)
}

pub fn phantom(a: &PhantomArgs) -> Result<()> {
    let dims: Vec<usize> = parse_list(&a.dims, "dimension")?;
    let geometry = match a.kind {
        Kind::Tube => Geometry::Tube {
            radius: a.radius,
            length: a.length,
        },
        Kind::Ybranch => {
            let radii: Vec<f64> = parse_list(&a.radii, "radius")?;
            let [r0, r1] = radii[..] else {
                return Err(CliError::Usage(format!("--radii needs two values, got {}", radii.len())));
            };
            Geometry::YBranch {
                radii: [r0, r1],
                trunk_radius: a.trunk_radius,
                length: a.length,
                spread_deg: a.spread,
            }
        }
        Kind::Ring => Geometry::Ring {
            inner: a.inner,
            outer: a.outer,
        },
    };
    let mut spec = PhantomSpec::new(&dims, geometry);
    if let Some(o) = a.orientation {
        spec.orientation_deg = o;
    }
    spec.jitter = a.jitter;
    spec.seed = a.seed;
    let mask = generate(&spec)?;
    write_labels(&a.out, &LabelGrid::from_mask(&mask)).map_err(|e| match e {
        vesseltop::Error::Io(source) => CliError::Write {
            path: a.out.display().to_string(),
            source,
        },
        other => other.into(),
    })?;
    let summary = json!({
        "schema": SCHEMA,
        "kind": format!("{:?}", a.kind).to_lowercase(),
        "dims": dims,
        "foreground": mask.count(),
        "betti": betti_numbers(&mask).0,
        "out": a.out.display().to_string(),
    });
    emit(None, &pretty(&summary))
}

pub fn experiment(a: &ExperimentArgs) -> Result<()> {
    let experiment: Experiment = a.name.parse()?;
    let normalization = Normalization::parse(&a.normalization)?;
    let dim = experiment.phantom().dims.len();
    let variants = parse_variants(a.variants.as_deref().unwrap_or("clDice,cl-M-D,cbDice"), dim, normalization)?;
    let rows = sweep(experiment, &variants)?;
    emit(a.out.as_deref(), &sweep_csv(&rows))
}

fn build_loss(a: &GradcheckArgs, reference: &vesseltop::BinaryField) -> Result<Box<dyn SoftLoss>> {
    let dim = reference.shape().ndim();
    let name = a.loss.trim();
    let variant = match name.to_ascii_lowercase().as_str() {
        "dice" | "ce" => None,
        _ => Some(VariantSpec::parse(name, dim)?),
    };
    if a.alpha.is_some() || a.beta.is_some() {
        let mut spec = CombinedLossSpec::new(a.alpha.unwrap_or(0.0), a.beta.unwrap_or(0.0), variant);
        spec.soft_skel_iters = a.iters;
        return Ok(Box::new(CombinedLoss::new(&spec, reference)?));
    }
    Ok(match (name.to_ascii_lowercase().as_str(), variant) {
        ("dice", _) => Box::new(SoftDice::new(reference)),
        ("ce", _) => Box::new(CrossEntropy::new(reference)),
        (_, Some(v)) => Box::new(SoftClX::new(&v, &build_bundle(reference, None)?, a.iters)?),
        _ => unreachable!("every other name parsed as a variant"),
    })
}

pub fn gradcheck(a: &GradcheckArgs) -> Result<()> {
    if !(a.eps.is_finite() && a.eps > 0.0 && a.eps < 0.05) {
        return Err(CliError::Usage(format!("--eps must lie in (0, 0.05), got {}", a.eps)));
    }
    if a.instances == 0 {
        return Err(CliError::Usage("--instances must be positive".into()));
    }
    let shapes: Vec<Vec<usize>> = if a.dims.is_empty() {
        vec![vec![8, 8], vec![6, 6, 6]]
    } else {
        a.dims.iter().map(|d| parse_list(d, "dimension")).collect::<Result<_>>()?
    };
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for (k, dims) in shapes.iter().enumerate() {
        for i in 0..a.instances {
            let seed = a
                .seed
                .wrapping_mul(1_000_003)
                .wrapping_add((k * a.instances + i) as u64);
            let (p, reference) = random_instance(dims, seed)?;
            let loss = build_loss(a, &reference)?;
            let g = grad_check(loss.as_ref(), &p, a.eps, None)?;
            worst = worst.max(g.max_rel_error);
            rows.push(json!({
                "dims": dims,
                "seed": seed,
                "max_rel_error": sig6(g.max_rel_error),
            }));
        }
    }
    let pass = worst < a.tolerance;
    let mut m = Map::new();
    m.insert("schema".into(), json!(SCHEMA));
    m.insert("loss".into(), json!(a.loss));
    if a.alpha.is_some() || a.beta.is_some() {
        m.insert("alpha".into(), json!(a.alpha.unwrap_or(0.0)));
        m.insert("beta".into(), json!(a.beta.unwrap_or(0.0)));
    }
    m.insert("eps".into(), json!(a.eps));
    m.insert("seed".into(), json!(a.seed));
    m.insert("tolerance".into(), json!(a.tolerance));
    m.insert("instances".into(), Value::Array(rows));
    m.insert("max_rel_error".into(), json!(sig6(worst)));
    m.insert("pass".into(), json!(pass));
    emit(a.out.as_deref(), &pretty(&Value::Object(m)))?;
    if pass {
        Ok(())
    } else {
        Err(CliError::GradientMismatch {
            error: worst,
            tolerance: a.tolerance,
        })
    }
}
