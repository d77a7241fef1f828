//! Message-passing networks over labelled graphs.
//!
//! A round computes `m_v = sum over u in N(v) of msg(l_v, l_u, f(v), f(u))` and then
//! `l_v <- upd(l_v, m_v)`. With [`FMode::Zero`] both degree arguments are 0;
//! with [`FMode::Degree`] they are the vertex degrees.

mod builtin;
mod custom;
mod degree;
mod json;
mod transform;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::graph::{partition_of, GraphError, LabelledGraph, Labelling, Partition};
use crate::matrix::MatrixError;
use crate::scalar::Scalar;

pub use builtin::{builtin_layer, BuiltinLayer, Family, LayerParams};
pub use custom::{CustomLayer, Expr, Factor};
pub use degree::DegreeFn;
pub use json::{spec_from_json, spec_to_json, LayerDto, SpecDto};
pub use transform::{
    anonymize_h_const, degree_probe_spec, lift_plus_one, wrap_comb_aggr, AggrFn, CombFn, CombAggrLayer,
};

pub use crate::field::Activation;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MpnnError {
    #[error("{family}: missing parameter {name}")]
    MissingParam { family: Family, name: &'static str },
    #[error("{family}: parameter {name} is not used by this family")]
    ExtraParam { family: Family, name: &'static str },
    #[error("parameter {name} = {value} outside {range}")]
    ParamRange { name: &'static str, value: String, range: &'static str },
    #[error("{0}")]
    Shape(String),
    #[error("round {round}: labels have width {found}, layer expects {expected}")]
    InputWidth { round: usize, expected: usize, found: usize },
    #[error("round {round}: {what} width {found} differs from {expected}")]
    OutputWidth { round: usize, what: &'static str, expected: usize, found: usize },
    #[error("round {round}: layer uses degrees but the spec is anonymous")]
    DegreesUnderZeroMode { round: usize },
    #[error("value not representable in this scalar type: {0}")]
    NotRepresentable(String),
    #[error("degree function: {0}")]
    DegreeFn(String),
    #[error("round {round}: h is not the constant one function")]
    HNotConstant { round: usize },
    #[error("round {round}: layer is not a degree-normalized GNN layer")]
    NotDgnn { round: usize },
    #[error("round {round}: label entry {value} is not a vertex degree")]
    NotADegree { round: usize, value: String },
    #[error("custom layer: {0}")]
    Custom(String),
    #[error("spec json: {0}")]
    Json(String),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Whether messages see vertex degrees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FMode {
    Zero,
    Degree,
}

/// One round's message and update functions.
pub trait Layer<S: Scalar>: Send + Sync {
    /// Expected label width, when fixed.
    fn in_width(&self) -> Option<usize>;

    fn uses_degrees(&self) -> bool;

    fn message(&self, x: &[S], y: &[S], dv: usize, du: usize) -> Result<Vec<S>, MpnnError>;

    fn update(&self, x: &[S], m: &[S]) -> Result<Vec<S>, MpnnError>;
}

#[derive(Clone)]
pub enum LayerDef<S: Scalar> {
    Builtin(BuiltinLayer<S>),
    Custom(CustomLayer<S>),
    Native(Arc<dyn Layer<S>>),
}

impl<S: Scalar> fmt::Debug for LayerDef<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LayerDef::Builtin(b) => write!(f, "Builtin({})", b.family()),
            LayerDef::Custom(c) => write!(f, "Custom({c:?})"),
            LayerDef::Native(_) => f.write_str("Native"),
        }
    }
}

impl<S: Scalar> Layer<S> for LayerDef<S> {
    fn in_width(&self) -> Option<usize> {
        match self {
            LayerDef::Builtin(b) => b.in_width(),
            LayerDef::Custom(c) => c.in_width(),
            LayerDef::Native(n) => n.in_width(),
        }
    }

    fn uses_degrees(&self) -> bool {
        match self {
            LayerDef::Builtin(b) => b.uses_degrees(),
            LayerDef::Custom(c) => c.uses_degrees(),
            LayerDef::Native(n) => n.uses_degrees(),
        }
    }

    fn message(&self, x: &[S], y: &[S], dv: usize, du: usize) -> Result<Vec<S>, MpnnError> {
        match self {
            LayerDef::Builtin(b) => b.message(x, y, dv, du),
            LayerDef::Custom(c) => c.message(x, y, dv, du),
            LayerDef::Native(n) => n.message(x, y, dv, du),
        }
    }

    fn update(&self, x: &[S], m: &[S]) -> Result<Vec<S>, MpnnError> {
        match self {
            LayerDef::Builtin(b) => b.update(x, m),
            LayerDef::Custom(c) => c.update(x, m),
            LayerDef::Native(n) => n.update(x, m),
        }
    }
}

/// A network: one layer per round.
#[derive(Debug, Clone)]
pub struct MpnnSpec<S: Scalar> {
    pub f_mode: FMode,
    pub layers: Vec<LayerDef<S>>,
}

impl<S: Scalar> MpnnSpec<S> {
    pub fn new(f_mode: FMode, layers: Vec<LayerDef<S>>) -> Result<Self, MpnnError> {
        let spec = Self { f_mode, layers };
        spec.validate()?;
        Ok(spec)
    }

    pub fn rounds(&self) -> usize {
        self.layers.len()
    }

    /// Anonymous specs may not contain degree-using layers.
    pub fn validate(&self) -> Result<(), MpnnError> {
        if self.f_mode == FMode::Zero {
            if let Some(t) = self.layers.iter().position(|l| l.uses_degrees()) {
                return Err(MpnnError::DegreesUnderZeroMode { round: t + 1 });
            }
        }
        Ok(())
    }
}

/// Labels per round, index 0 being the initial labels.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace<S = crate::field::ExactScalar> {
    pub labellings: Vec<Labelling<S>>,
    pub partitions: Vec<Partition>,
}

impl<S: Scalar> RunTrace<S> {
    pub fn partitions(&self) -> &[Partition] {
        &self.partitions
    }

    pub fn num_rounds(&self) -> usize {
        self.labellings.len() - 1
    }
}

/// Runs every round of `spec` on `g` in exact arithmetic (for exact `S`).
pub fn run_mpnn<S: Scalar>(g: &LabelledGraph<S>, spec: &MpnnSpec<S>) -> Result<RunTrace<S>, MpnnError> {
    spec.validate()?;
    let degrees = g.degrees();
    let f = |v: usize| if spec.f_mode == FMode::Degree { degrees[v] } else { 0 };
    let mut labellings = vec![g.labels().clone()];
    for (t, layer) in spec.layers.iter().enumerate() {
        let round = t + 1;
        let cur = labellings.last().unwrap();
        if let Some(w) = layer.in_width() {
            if w != cur.dim() {
                return Err(MpnnError::InputWidth { round, expected: w, found: cur.dim() });
            }
        }
        let mut rows = Vec::with_capacity(g.n());
        let mut msg_width = None;
        let mut out_width = None;
        for v in 0..g.n() {
            let x = cur.row(v);
            let mut m: Option<Vec<S>> = None;
            for &u in g.neighbours(v) {
                let part = layer.message(x, cur.row(u), f(v), f(u))?;
                check_width(round, "message", &mut msg_width, part.len())?;
                m = Some(match m {
                    None => part,
                    Some(acc) => add_vec(&acc, &part),
                });
            }
            let m = m.expect("graphs have no isolated vertices");
            let next = layer.update(x, &m)?;
            check_width(round, "update", &mut out_width, next.len())?;
            rows.push(next);
        }
        let dim = out_width.unwrap_or(0);
        labellings.push(Labelling::new(rows, dim)?);
    }
    let partitions = labellings.iter().map(partition_of).collect();
    Ok(RunTrace { labellings, partitions })
}

fn check_width(round: usize, what: &'static str, seen: &mut Option<usize>, found: usize) -> Result<(), MpnnError> {
    match *seen {
        None => {
            *seen = Some(found);
            Ok(())
        }
        Some(expected) if expected != found => Err(MpnnError::OutputWidth { round, what, expected, found }),
        Some(_) => Ok(()),
    }
}

pub(crate) fn add_vec<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.clone() + y.clone()).collect()
}

pub(crate) fn scale_vec<S: Scalar>(k: &S, a: &[S]) -> Vec<S> {
    a.iter().map(|x| k.clone() * x.clone()).collect()
}

pub(crate) fn activate_vec<S: Scalar>(sigma: Activation, a: &[S]) -> Vec<S> {
    a.iter().map(|x| x.activate(sigma)).collect()
}
