//! Multi-class evaluation and report rendering.

use indexmap::IndexMap;
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::grid::{GridShape, LabelGrid};
use crate::morphology::{build_bundle, Normalization};
use crate::numfmt::{render, sig6};

use super::betti::betti_err;
use super::nsd::nsd;
use super::overlap::dice;
use super::variants::{cl_x_dice, VariantSpec};

pub const SCHEMA: &str = "vesseltop/1";

#[derive(Clone, Debug)]
pub struct EvalOptions {
    pub variants: Vec<VariantSpec>,
    /// NSD tolerance in physical units.
    pub tolerance: f64,
    /// Named class subsets reported as group means, in order.
    pub groups: Vec<(String, Vec<usize>)>,
    /// Class count including background. Defaults to the reference's, and at
    /// least 2.
    pub num_classes: Option<usize>,
}

impl EvalOptions {
    pub fn new(variants: Vec<VariantSpec>) -> Self {
        Self {
            variants,
            tolerance: 1.0,
            groups: Vec::new(),
            num_classes: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassMetrics {
    pub class_id: usize,
    /// Largest skeleton radius of the prediction and of the reference.
    pub r_max_pred: f64,
    pub r_max_ref: f64,
    pub dice: f64,
    /// cl-X-Dice values keyed by the requested variant label.
    pub cl_x: IndexMap<String, f64>,
    pub betti_err: u64,
    pub nsd: f64,
}

/// Unweighted means over a set of classes.
#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub classes: Vec<usize>,
    pub dice: f64,
    pub cl_x: IndexMap<String, f64>,
    pub betti_err: f64,
    pub nsd: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricReport {
    pub shape: GridShape,
    pub tolerance: f64,
    pub per_class: Vec<ClassMetrics>,
    pub aggregate: Summary,
    pub groups: IndexMap<String, Summary>,
}

pub fn evaluate(pred: &LabelGrid, reference: &LabelGrid, opts: &EvalOptions) -> Result<MetricReport> {
    let shape = reference.shape();
    shape.ensure_same(pred.shape())?;
    for spec in &opts.variants {
        if spec.dim != shape.ndim() {
            return Err(Error::DimensionMismatch {
                variant: spec.dim,
                grid: shape.ndim(),
            });
        }
    }
    let k = opts.num_classes.unwrap_or(reference.num_classes().max(2));
    if k < 2 {
        return Err(Error::ClassVocabulary("at least one foreground class is required".into()));
    }
    for (name, labels) in [("prediction", pred), ("reference", reference)] {
        if let Some(&bad) = labels.labels().iter().find(|&&l| l as usize >= k) {
            return Err(Error::ClassVocabulary(format!(
                "{name} contains label {bad} but the vocabulary has {k} classes"
            )));
        }
    }
    for (name, ids) in &opts.groups {
        if ids.is_empty() {
            return Err(Error::InvalidArgument(format!("group {name:?} has no classes")));
        }
        if let Some(&bad) = ids.iter().find(|&&c| c == 0 || c >= k) {
            return Err(Error::UnknownClass {
                class_id: bad,
                num_classes: k,
            });
        }
    }
    let pred = pred.clone().with_num_classes(k)?;
    let reference = reference.clone().with_num_classes(k)?;

    let per_class = (1..k)
        .map(|c| class_metrics(&pred, &reference, c, opts))
        .collect::<Result<Vec<_>>>()?;
    let all: Vec<usize> = (1..k).collect();
    let aggregate = summarize(&per_class, &all, &opts.variants);
    let groups = opts
        .groups
        .iter()
        .map(|(name, ids)| (name.clone(), summarize(&per_class, ids, &opts.variants)))
        .collect();
    Ok(MetricReport {
        shape: shape.clone(),
        tolerance: opts.tolerance,
        per_class,
        aggregate,
        groups,
    })
}

fn class_metrics(pred: &LabelGrid, reference: &LabelGrid, class_id: usize, opts: &EvalOptions) -> Result<ClassMetrics> {
    let p = pred.binarize(class_id)?;
    let l = reference.binarize(class_id)?;
    let (bp, bl) = (build_bundle(&p, None)?, build_bundle(&l, None)?);
    let joint = opts
        .variants
        .iter()
        .any(|v| v.normalization == Normalization::Joint)
        .then(|| {
            let r = bp.r_max.max(bl.r_max);
            (bp.clone().with_r_max(r), bl.clone().with_r_max(r))
        });
    let mut cl_x = IndexMap::new();
    for spec in &opts.variants {
        let (a, b) = match (&joint, spec.normalization) {
            (Some((a, b)), Normalization::Joint) => (a, b),
            _ => (&bp, &bl),
        };
        cl_x.insert(spec.label.clone(), cl_x_dice(spec, a, b)?);
    }
    Ok(ClassMetrics {
        class_id,
        r_max_pred: bp.r_max,
        r_max_ref: bl.r_max,
        dice: dice(&p, &l)?,
        cl_x,
        betti_err: betti_err(&p, &l)?,
        nsd: nsd(&p, &l, opts.tolerance)?,
    })
}

fn summarize(per_class: &[ClassMetrics], ids: &[usize], variants: &[VariantSpec]) -> Summary {
    let rows: Vec<&ClassMetrics> = ids.iter().map(|&c| &per_class[c - 1]).collect();
    let n = rows.len().max(1) as f64;
    let mean = |f: &dyn Fn(&ClassMetrics) -> f64| rows.iter().map(|r| f(r)).sum::<f64>() / n;
    let mut cl_x = IndexMap::new();
    for spec in variants {
        cl_x.insert(spec.label.clone(), mean(&|r| r.cl_x[&spec.label]));
    }
    Summary {
        classes: ids.to_vec(),
        dice: mean(&|r| r.dice),
        cl_x,
        betti_err: mean(&|r| r.betti_err as f64),
        nsd: mean(&|r| r.nsd),
    }
}

fn num(x: f64) -> Value {
    json!(sig6(x))
}

fn metric_map(dice: f64, cl_x: &IndexMap<String, f64>, betti: Value, nsd: f64) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("dice".into(), num(dice));
    let cl: Map<String, Value> = cl_x.iter().map(|(k, &v)| (k.clone(), num(v))).collect();
    m.insert("cl_x".into(), Value::Object(cl));
    m.insert("betti_err".into(), betti);
    m.insert("nsd".into(), num(nsd));
    m
}

fn summary_json(s: &Summary) -> Value {
    let mut m = Map::new();
    m.insert("classes".into(), json!(s.classes));
    m.extend(metric_map(s.dice, &s.cl_x, num(s.betti_err), s.nsd));
    Value::Object(m)
}

impl MetricReport {
    pub fn to_json_value(&self) -> Value {
        let mut per_class = Map::new();
        for c in &self.per_class {
            let mut m = Map::new();
            m.insert("r_max_pred".into(), num(c.r_max_pred));
            m.insert("r_max_ref".into(), num(c.r_max_ref));
            m.extend(metric_map(c.dice, &c.cl_x, json!(c.betti_err), c.nsd));
            per_class.insert(c.class_id.to_string(), Value::Object(m));
        }
        let groups: Map<String, Value> = self.groups.iter().map(|(k, s)| (k.clone(), summary_json(s))).collect();
        json!({
            "schema": SCHEMA,
            "shape": {
                "dims": self.shape.dims(),
                "spacing": self.shape.spacing(),
            },
            "tolerance": num(self.tolerance),
            "per_class": per_class,
            "aggregate": summary_json(&self.aggregate),
            "groups": groups,
        })
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json_value()).expect("report serializes");
        s.push('\n');
        s
    }

    /// Long-format table with header `scope,metric,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("scope,metric,value\n");
        let mut row = |scope: &str, metric: &str, value: String| {
            out.push_str(&format!("{scope},{metric},{value}\n"));
        };
        let mut rows = |scope: &str, dice: f64, cl_x: &IndexMap<String, f64>, betti: String, nsd: f64| {
            row(scope, "dice", render(dice));
            for (k, &v) in cl_x {
                row(scope, k, render(v));
            }
            row(scope, "betti_err", betti);
            row(scope, "nsd", render(nsd));
        };
        for c in &self.per_class {
            let scope = format!("class:{}", c.class_id);
            rows(&scope, c.dice, &c.cl_x, c.betti_err.to_string(), c.nsd);
        }
        let a = &self.aggregate;
        rows("aggregate", a.dice, &a.cl_x, render(a.betti_err), a.nsd);
        for (name, g) in &self.groups {
            rows(&format!("group:{name}"), g.dice, &g.cl_x, render(g.betti_err), g.nsd);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::Variant;

    fn grid() -> LabelGrid {
        let shape = GridShape::plane(20, 16);
        let labels = (0..shape.len())
            .map(|i| {
                let [x, y, _] = shape.coords(i);
                match (x, y) {
                    (2..=17, 2..=4) => 1,
                    (2..=17, 8..=8) => 2,
                    (5..=14, 12..=13) => 3,
                    _ => 0,
                }
            })
            .collect();
        LabelGrid::from_labels(shape, labels).unwrap()
    }

    fn opts() -> EvalOptions {
        let variants = ["clDice", "cbDice"]
            .iter()
            .map(|n| VariantSpec::parse(n, 2).unwrap())
            .collect();
        let mut o = EvalOptions::new(variants);
        o.groups = vec![("L".into(), vec![1, 2]), ("S".into(), vec![3])];
        o
    }

    #[test]
    fn identical_inputs() {
        let g = grid();
        let r = evaluate(&g, &g, &opts()).unwrap();
        assert_eq!(r.per_class.len(), 3);
        for c in &r.per_class {
            assert_eq!(c.dice, 1.0);
            assert!(c.cl_x.values().all(|&v| v == 1.0));
            assert_eq!(c.betti_err, 0);
            assert_eq!(c.nsd, 1.0);
        }
        assert_eq!(r.groups["L"].classes, vec![1, 2]);
        assert_eq!(r.groups["S"].classes, vec![3]);
        let json = r.to_json();
        assert!(json.starts_with("{\n  \"schema\": \"vesseltop/1\""));
        assert!(r.to_csv().starts_with("scope,metric,value\nclass:1,dice,1\nclass:1,clDice,1\n"));
    }

    #[test]
    fn missing_class() {
        let g = grid();
        let labels = g.labels().iter().map(|&l| if l == 2 { 0 } else { l }).collect();
        let p = LabelGrid::new(g.shape().clone(), labels, 4).unwrap();
        let r = evaluate(&p, &g, &opts()).unwrap();
        let c2 = &r.per_class[1];
        assert_eq!(c2.dice, 0.0);
        assert_eq!(c2.cl_x["clDice"], 0.0);
        assert_eq!(c2.betti_err, 1);
        let l = &r.groups["L"];
        assert!((l.dice - 0.5).abs() < 1e-12);
        assert!((r.aggregate.dice - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn vocabulary_errors() {
        let g = grid();
        let mut o = opts();
        o.num_classes = Some(3);
        assert!(matches!(evaluate(&g, &g, &o), Err(Error::ClassVocabulary(_))));
        let mut o = opts();
        o.groups = vec![("bad".into(), vec![0])];
        assert!(matches!(evaluate(&g, &g, &o), Err(Error::UnknownClass { .. })));
        let mut o = opts();
        o.variants = vec![VariantSpec::new(Variant::ClD, 3).unwrap()];
        assert!(evaluate(&g, &g, &o).is_err());
    }
}
