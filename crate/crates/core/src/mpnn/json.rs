//! JSON form of [`MpnnSpec`]. Scalars are strings in the surd syntax
//! (`"1/2"`, `"-3*sqrt(2)"`), matrices are lists of rows.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{
    builtin_layer, Activation, CustomLayer, DegreeFn, Expr, FMode, Factor, Family, LayerDef, LayerParams, MpnnError,
    MpnnSpec,
};
use crate::field::parse_scalar;
use crate::matrix::Matrix;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecDto {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rounds: Option<usize>,
    pub f_mode: FMode,
    pub layers: Vec<LayerDto>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LayerDto {
    Builtin {
        family: Family,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        w: Option<Vec<Vec<String>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        w1: Option<Vec<Vec<String>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        w2: Option<Vec<Vec<String>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bias: Option<Vec<String>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        p: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        q: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        r: Option<String>,
        #[serde(default = "no_activation")]
        sigma: Activation,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        g: Option<DegreeFnDto>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        h: Option<DegreeFnDto>,
    },
    Custom {
        message: ExprDto,
        update: ExprDto,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        in_width: Option<usize>,
    },
}

fn no_activation() -> Activation {
    Activation::Identity
}

/// A named degree function or a table from degree to value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DegreeFnDto {
    Name(String),
    Table(BTreeMap<String, String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ExprDto {
    X,
    Y,
    M,
    Const { value: Vec<String> },
    Matmul { arg: Box<ExprDto>, w: Vec<Vec<String>> },
    Scale { factor: FactorDto, arg: Box<ExprDto> },
    Add { args: Vec<ExprDto> },
    Concat { args: Vec<ExprDto> },
    Activate { sigma: Activation, arg: Box<ExprDto> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "of", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FactorDto {
    Dv { f: DegreeFnDto },
    Du { f: DegreeFnDto },
    Const { value: String },
}

fn scalar<S: Scalar>(text: &str) -> Result<S, MpnnError> {
    let x = parse_scalar(text).map_err(|e| MpnnError::Json(e.to_string()))?;
    S::from_surd(&x).ok_or_else(|| MpnnError::NotRepresentable(x.to_string()))
}

fn vector<S: Scalar>(v: &[String]) -> Result<Vec<S>, MpnnError> {
    v.iter().map(|t| scalar(t)).collect()
}

fn matrix<S: Scalar>(rows: &[Vec<String>]) -> Result<Matrix<S>, MpnnError> {
    let cols = rows.first().map_or(0, Vec::len);
    let rows = rows.iter().map(|r| vector(r)).collect::<Result<Vec<_>, _>>()?;
    Ok(Matrix::from_rows(rows, cols)?)
}

fn degree_fn(d: &DegreeFnDto) -> Result<DegreeFn, MpnnError> {
    match d {
        DegreeFnDto::Name(n) => DegreeFn::from_name(n).ok_or_else(|| MpnnError::Json(format!("unknown degree function {n}"))),
        DegreeFnDto::Table(t) => Ok(DegreeFn::Table(
            t.iter()
                .map(|(k, v)| {
                    let d = k.parse().map_err(|_| MpnnError::Json(format!("degree key {k:?} is not an integer")))?;
                    Ok((d, scalar(v)?))
                })
                .collect::<Result<_, MpnnError>>()?,
        )),
    }
}

fn expr<S: Scalar>(e: &ExprDto) -> Result<Expr<S>, MpnnError> {
    let boxed = |a: &ExprDto| expr(a).map(Box::new);
    let list = |args: &[ExprDto]| args.iter().map(expr).collect::<Result<Vec<_>, _>>();
    Ok(match e {
        ExprDto::X => Expr::X,
        ExprDto::Y => Expr::Y,
        ExprDto::M => Expr::M,
        ExprDto::Const { value } => Expr::Const(vector(value)?),
        ExprDto::Matmul { arg, w } => Expr::MatMul(boxed(arg)?, matrix(w)?),
        ExprDto::Scale { factor, arg } => {
            let f = match factor {
                FactorDto::Dv { f } => Factor::Dv(degree_fn(f)?),
                FactorDto::Du { f } => Factor::Du(degree_fn(f)?),
                FactorDto::Const { value } => Factor::Const(scalar(value)?),
            };
            Expr::Scale(f, boxed(arg)?)
        }
        ExprDto::Add { args } => Expr::Add(list(args)?),
        ExprDto::Concat { args } => Expr::Concat(list(args)?),
        ExprDto::Activate { sigma, arg } => Expr::Activate(*sigma, boxed(arg)?),
    })
}

impl SpecDto {
    pub fn build<S: Scalar>(&self) -> Result<MpnnSpec<S>, MpnnError> {
        if let Some(t) = self.rounds {
            if t != self.layers.len() {
                return Err(MpnnError::Json(format!("rounds = {t} but {} layers given", self.layers.len())));
            }
        }
        let mut layers = Vec::with_capacity(self.layers.len());
        for l in &self.layers {
            layers.push(match l {
                LayerDto::Builtin { family, w, w1, w2, bias, p, q, r, sigma, g, h } => {
                    let params = LayerParams {
                        w: w.as_deref().map(matrix).transpose()?,
                        w1: w1.as_deref().map(matrix).transpose()?,
                        w2: w2.as_deref().map(matrix).transpose()?,
                        bias: bias.as_deref().map(vector).transpose()?,
                        p: p.as_deref().map(scalar).transpose()?,
                        q: q.as_deref().map(scalar).transpose()?,
                        r: r.as_deref().map(scalar).transpose()?,
                        sigma: *sigma,
                        g_fn: g.as_ref().map(degree_fn).transpose()?,
                        h_fn: h.as_ref().map(degree_fn).transpose()?,
                    };
                    LayerDef::Builtin(builtin_layer(*family, params)?)
                }
                LayerDto::Custom { message, update, in_width } => LayerDef::Custom(CustomLayer {
                    message: expr(message)?,
                    update: expr(update)?,
                    in_width: *in_width,
                }),
            });
        }
        MpnnSpec::new(self.f_mode, layers)
    }
}

fn strs<S: Scalar>(v: &[S]) -> Vec<String> {
    v.iter().map(ToString::to_string).collect()
}

fn mat_strs<S: Scalar>(m: &Matrix<S>) -> Vec<Vec<String>> {
    m.to_rows().iter().map(|r| strs(r)).collect()
}

fn degree_fn_dto(d: &DegreeFn) -> DegreeFnDto {
    match d {
        DegreeFn::Table(t) => DegreeFnDto::Table(t.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()),
        other => DegreeFnDto::Name(other.name().expect("named degree function")),
    }
}

fn expr_dto<S: Scalar>(e: &Expr<S>) -> ExprDto {
    let boxed = |a: &Expr<S>| Box::new(expr_dto(a));
    match e {
        Expr::X => ExprDto::X,
        Expr::Y => ExprDto::Y,
        Expr::M => ExprDto::M,
        Expr::Const(v) => ExprDto::Const { value: strs(v) },
        Expr::MatMul(a, w) => ExprDto::Matmul { arg: boxed(a), w: mat_strs(w) },
        Expr::Scale(f, a) => ExprDto::Scale {
            factor: match f {
                Factor::Dv(g) => FactorDto::Dv { f: degree_fn_dto(g) },
                Factor::Du(g) => FactorDto::Du { f: degree_fn_dto(g) },
                Factor::Const(c) => FactorDto::Const { value: c.to_string() },
            },
            arg: boxed(a),
        },
        Expr::Add(es) => ExprDto::Add { args: es.iter().map(expr_dto).collect() },
        Expr::Concat(es) => ExprDto::Concat { args: es.iter().map(expr_dto).collect() },
        Expr::Activate(s, a) => ExprDto::Activate { sigma: *s, arg: boxed(a) },
    }
}

impl SpecDto {
    pub fn from_spec<S: Scalar>(spec: &MpnnSpec<S>) -> Result<Self, MpnnError> {
        let mut layers = Vec::new();
        for (t, l) in spec.layers.iter().enumerate() {
            layers.push(match l {
                LayerDef::Builtin(b) => {
                    let p = b.params();
                    LayerDto::Builtin {
                        family: b.family(),
                        w: p.w.as_ref().map(mat_strs),
                        w1: p.w1.as_ref().map(mat_strs),
                        w2: p.w2.as_ref().map(mat_strs),
                        bias: p.bias.as_deref().map(strs),
                        p: p.p.as_ref().map(ToString::to_string),
                        q: p.q.as_ref().map(ToString::to_string),
                        r: p.r.as_ref().map(ToString::to_string),
                        sigma: p.sigma,
                        g: p.g_fn.as_ref().map(degree_fn_dto),
                        h: p.h_fn.as_ref().map(degree_fn_dto),
                    }
                }
                LayerDef::Custom(c) => LayerDto::Custom {
                    message: expr_dto(&c.message),
                    update: expr_dto(&c.update),
                    in_width: c.in_width,
                },
                LayerDef::Native(_) => {
                    return Err(MpnnError::Json(format!("round {}: native layers have no JSON form", t + 1)))
                }
            });
        }
        Ok(Self { rounds: Some(layers.len()), f_mode: spec.f_mode, layers })
    }
}

pub fn spec_from_json<S: Scalar>(text: &str) -> Result<MpnnSpec<S>, MpnnError> {
    let dto: SpecDto = serde_json::from_str(text).map_err(|e| MpnnError::Json(e.to_string()))?;
    dto.build()
}

pub fn spec_to_json<S: Scalar>(spec: &MpnnSpec<S>) -> Result<String, MpnnError> {
    let dto = SpecDto::from_spec(spec)?;
    serde_json::to_string_pretty(&dto).map_err(|e| MpnnError::Json(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ExactScalar;
    use crate::graph::parse_graph;
    use crate::mpnn::run_mpnn;
    use crate::mpnn::tests::FIG1;

    const GCN: &str = r#"{
        "f_mode": "degree",
        "layers": [
            {"kind": "builtin", "family": "gcn-kipf", "sigma": "relu",
             "w": [["1","0","0"],["0","1","0"],["0","0","1"]]},
            {"kind": "builtin", "family": "general-dgnn", "p": "1/2", "g": "inv-deg", "h": {"1": "1", "2": "sqrt(2)", "3": "2"},
             "w2": [["1","0"],["0","1"],["1","-1"]], "bias": ["0", "-1/3"]},
            {"kind": "custom", "in_width": 2,
             "message": {"op": "scale", "factor": {"of": "dv", "f": "inv-sqrt-affine:1/2"}, "arg": {"op": "y"}},
             "update": {"op": "activate", "sigma": "sign", "arg": {"op": "concat", "args": [{"op": "x"}, {"op": "m"}]}}}
        ]
    }"#;

    #[test]
    fn round_trip_preserves_runs() {
        let spec: MpnnSpec<ExactScalar> = spec_from_json(GCN).unwrap();
        let text = spec_to_json(&spec).unwrap();
        let again: MpnnSpec<ExactScalar> = spec_from_json(&text).unwrap();
        assert_eq!(spec_to_json(&again).unwrap(), text);
        let g = parse_graph(FIG1).unwrap();
        assert_eq!(run_mpnn(&g, &spec).unwrap(), run_mpnn(&g, &again).unwrap());
    }

    #[test]
    fn bad_documents() {
        let unknown = r#"{"f_mode": "zero", "layers": [{"kind": "builtin", "family": "gnn", "w9": []}]}"#;
        assert!(matches!(spec_from_json::<ExactScalar>(unknown), Err(MpnnError::Json(_))));
        let extra = r#"{"f_mode": "zero", "layers": [{"kind": "builtin", "family": "gnn-minus", "w": [["1"]], "p": "0", "q": "0", "r": "1"}]}"#;
        assert!(matches!(spec_from_json::<ExactScalar>(extra), Err(MpnnError::ExtraParam { .. })));
        let count = r#"{"rounds": 2, "f_mode": "zero", "layers": []}"#;
        assert!(matches!(spec_from_json::<ExactScalar>(count), Err(MpnnError::Json(_))));
        let irrational = r#"{"f_mode": "zero", "layers": [{"kind": "builtin", "family": "gnn-minus", "w": [["sqrt(2)"]], "p": "0", "q": "0"}]}"#;
        assert!(matches!(
            spec_from_json::<crate::field::Rational>(irrational),
            Err(MpnnError::NotRepresentable(_))
        ));
    }
}
