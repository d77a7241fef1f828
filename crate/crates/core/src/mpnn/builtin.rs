use std::fmt;

use serde::{Deserialize, Serialize};

use super::{activate_vec, add_vec, scale_vec, Activation, DegreeFn, Layer, MpnnError};
use crate::field::{Rational, Sign};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Built-in layer families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    /// `sigma(L W1 + A L W2 + B)`
    Gnn,
    /// `sigma((A + pI) L W - qJ)`
    GnnMinus,
    /// `sigma((D+I)^-1/2 (A+I) (D+I)^-1/2 L W)`
    GcnKipf,
    Dgnn1,
    Dgnn2,
    Dgnn3,
    Dgnn4,
    Dgnn5,
    Dgnn6,
    /// `sigma(L W1 + diag(g)(A + pI)diag(h) L W2 + B)`
    GeneralDgnn,
    /// messages `sigma(y W2)`, update `sigma(x W1 + m + b)`
    CombAggr,
}

impl Family {
    pub const ALL: [Family; 11] = [
        Family::Gnn,
        Family::GnnMinus,
        Family::GcnKipf,
        Family::Dgnn1,
        Family::Dgnn2,
        Family::Dgnn3,
        Family::Dgnn4,
        Family::Dgnn5,
        Family::Dgnn6,
        Family::GeneralDgnn,
        Family::CombAggr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Gnn => "gnn",
            Family::GnnMinus => "gnn-minus",
            Family::GcnKipf => "gcn-kipf",
            Family::Dgnn1 => "dgnn1",
            Family::Dgnn2 => "dgnn2",
            Family::Dgnn3 => "dgnn3",
            Family::Dgnn4 => "dgnn4",
            Family::Dgnn5 => "dgnn5",
            Family::Dgnn6 => "dgnn6",
            Family::GeneralDgnn => "general-dgnn",
            Family::CombAggr => "comb-aggr",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn uses_degrees(self) -> bool {
        !matches!(self, Family::Gnn | Family::GnnMinus | Family::CombAggr)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parameters of a built-in layer. Which fields are required depends on the family.
#[derive(Debug, Clone)]
pub struct LayerParams<S: Scalar> {
    pub w: Option<Matrix<S>>,
    pub w1: Option<Matrix<S>>,
    pub w2: Option<Matrix<S>>,
    pub bias: Option<Vec<S>>,
    pub p: Option<S>,
    pub q: Option<S>,
    pub r: Option<S>,
    pub sigma: Activation,
    pub g_fn: Option<DegreeFn>,
    pub h_fn: Option<DegreeFn>,
}

impl<S: Scalar> Default for LayerParams<S> {
    fn default() -> Self {
        Self {
            w: None,
            w1: None,
            w2: None,
            bias: None,
            p: None,
            q: None,
            r: None,
            sigma: Activation::Identity,
            g_fn: None,
            h_fn: None,
        }
    }
}

#[derive(Debug, Clone)]
enum Kind<S: Scalar> {
    Gnn { w1: Matrix<S>, w2: Matrix<S> },
    GnnMinus { w: Matrix<S>, p: S, q: S },
    CombAggr { w1: Matrix<S>, w2: Matrix<S> },
    Dgnn { w1: Option<Matrix<S>>, w2: Matrix<S>, p: S, g: DegreeFn, h: DegreeFn },
}

/// A validated built-in layer.
#[derive(Debug, Clone)]
pub struct BuiltinLayer<S: Scalar> {
    family: Family,
    params: LayerParams<S>,
    kind: Kind<S>,
    bias: Option<Vec<S>>,
    sigma: Activation,
}

/// The degree-normalized form of a layer: `W1`, `W2`, `p`, `g`, `h`.
#[derive(Debug, Clone)]
pub struct DgnnParts<'a, S: Scalar> {
    pub w1: Option<&'a Matrix<S>>,
    pub w2: &'a Matrix<S>,
    pub bias: Option<&'a [S]>,
    pub p: &'a S,
    pub g: &'a DegreeFn,
    pub h: &'a DegreeFn,
    pub sigma: Activation,
}

struct Checker<'a, S: Scalar> {
    family: Family,
    params: &'a LayerParams<S>,
}

impl<S: Scalar> Checker<'_, S> {
    fn present(&self, name: &'static str) -> bool {
        let p = self.params;
        match name {
            "w" => p.w.is_some(),
            "w1" => p.w1.is_some(),
            "w2" => p.w2.is_some(),
            "bias" => p.bias.is_some(),
            "p" => p.p.is_some(),
            "q" => p.q.is_some(),
            "r" => p.r.is_some(),
            "g" => p.g_fn.is_some(),
            "h" => p.h_fn.is_some(),
            _ => unreachable!("unknown parameter {name}"),
        }
    }

    fn allow(&self, required: &[&'static str], optional: &[&'static str]) -> Result<(), MpnnError> {
        for name in ["w", "w1", "w2", "bias", "p", "q", "r", "g", "h"] {
            let req = required.contains(&name);
            let present = self.present(name);
            if req && !present {
                return Err(MpnnError::MissingParam { family: self.family, name });
            }
            if present && !req && !optional.contains(&name) {
                return Err(MpnnError::ExtraParam { family: self.family, name });
            }
        }
        Ok(())
    }
}

fn in_unit<S: Scalar>(name: &'static str, v: &S, open_low: bool) -> Result<(), MpnnError> {
    let low = v.signum();
    let high = (S::one() - v.clone()).signum();
    let ok = high != Sign::Negative && (low == Sign::Positive || (!open_low && low == Sign::Zero));
    if ok {
        Ok(())
    } else {
        Err(MpnnError::ParamRange {
            name,
            value: v.to_string(),
            range: if open_low { "(0, 1]" } else { "[0, 1]" },
        })
    }
}

fn check_shapes<S: Scalar>(a: &Matrix<S>, b: &Matrix<S>, bias: Option<&Vec<S>>) -> Result<(), MpnnError> {
    if (a.nrows(), a.ncols()) != (b.nrows(), b.ncols()) {
        return Err(MpnnError::Shape(format!(
            "weight shapes differ: {}x{} vs {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    check_bias(a, bias)
}

fn check_bias<S: Scalar>(w: &Matrix<S>, bias: Option<&Vec<S>>) -> Result<(), MpnnError> {
    match bias {
        Some(b) if b.len() != w.ncols() => {
            Err(MpnnError::Shape(format!("bias has width {}, weights output {}", b.len(), w.ncols())))
        }
        _ => Ok(()),
    }
}

fn rational_of<S: Scalar>(name: &'static str, v: &S) -> Result<Rational, MpnnError> {
    v.to_rational().ok_or_else(|| MpnnError::NotRepresentable(format!("{name} = {v} must be rational")))
}

/// Validates `params` for `family` and compiles the layer.
pub fn builtin_layer<S: Scalar>(family: Family, params: LayerParams<S>) -> Result<BuiltinLayer<S>, MpnnError> {
    let c = Checker { family, params: &params };
    let p = &params;
    let dgnn = |w1: Option<Matrix<S>>, w2: Matrix<S>, pval: S, g: DegreeFn, h: DegreeFn| Kind::Dgnn {
        w1,
        w2,
        p: pval,
        g,
        h,
    };
    let kind = match family {
        Family::Gnn | Family::CombAggr => {
            c.allow(&["w1", "w2"], &["bias"])?;
            let (w1, w2) = (p.w1.clone().unwrap(), p.w2.clone().unwrap());
            check_shapes(&w1, &w2, p.bias.as_ref())?;
            if family == Family::Gnn {
                Kind::Gnn { w1, w2 }
            } else {
                Kind::CombAggr { w1, w2 }
            }
        }
        Family::GnnMinus => {
            c.allow(&["w", "p", "q"], &[])?;
            let (pv, qv) = (p.p.clone().unwrap(), p.q.clone().unwrap());
            in_unit("p", &pv, false)?;
            in_unit("q", &qv, false)?;
            Kind::GnnMinus { w: p.w.clone().unwrap(), p: pv, q: qv }
        }
        Family::GcnKipf => {
            c.allow(&["w"], &[])?;
            let w = p.w.clone().unwrap();
            dgnn(None, w, S::one(), DegreeFn::InvSqrtDegPlusOne, DegreeFn::InvSqrtDegPlusOne)
        }
        Family::Dgnn1 | Family::Dgnn2 | Family::Dgnn3 | Family::Dgnn4 | Family::Dgnn5 => {
            c.allow(&["w"], &["bias"])?;
            let w = p.w.clone().unwrap();
            check_bias(&w, p.bias.as_ref())?;
            match family {
                Family::Dgnn1 => dgnn(None, w, S::zero(), DegreeFn::InvDeg, DegreeFn::One),
                Family::Dgnn2 => dgnn(None, w, S::zero(), DegreeFn::InvSqrtDeg, DegreeFn::InvSqrtDeg),
                Family::Dgnn3 => dgnn(None, w, S::one(), DegreeFn::InvDegPlusOne, DegreeFn::One),
                Family::Dgnn4 => {
                    dgnn(None, w, S::one(), DegreeFn::InvSqrtDegPlusOne, DegreeFn::InvSqrtDegPlusOne)
                }
                _ => dgnn(Some(w.clone()), w, S::zero(), DegreeFn::InvSqrtDeg, DegreeFn::InvSqrtDeg),
            }
        }
        Family::Dgnn6 => {
            c.allow(&["w", "r", "p"], &["bias"])?;
            let (rv, pv) = (p.r.clone().unwrap(), p.p.clone().unwrap());
            in_unit("r", &rv, true)?;
            in_unit("p", &pv, false)?;
            let w = p.w.clone().unwrap();
            check_bias(&w, p.bias.as_ref())?;
            let f = DegreeFn::InvSqrtAffine(rational_of("r", &rv)?);
            dgnn(None, w, pv, f.clone(), f)
        }
        Family::GeneralDgnn => {
            c.allow(&["w2", "p", "g", "h"], &["w1", "bias"])?;
            let pv = p.p.clone().unwrap();
            in_unit("p", &pv, false)?;
            let w2 = p.w2.clone().unwrap();
            match &p.w1 {
                Some(w1) => check_shapes(w1, &w2, p.bias.as_ref())?,
                None => check_bias(&w2, p.bias.as_ref())?,
            }
            dgnn(p.w1.clone(), w2, pv, p.g_fn.clone().unwrap(), p.h_fn.clone().unwrap())
        }
    };
    Ok(BuiltinLayer { family, bias: params.bias.clone(), sigma: params.sigma, params, kind })
}

impl<S: Scalar> BuiltinLayer<S> {
    pub fn family(&self) -> Family {
        self.family
    }

    pub fn params(&self) -> &LayerParams<S> {
        &self.params
    }

    pub fn sigma(&self) -> Activation {
        self.sigma
    }

    /// Degree-normalized parts, for families that compile to that form.
    pub fn dgnn_parts(&self) -> Option<DgnnParts<'_, S>> {
        match &self.kind {
            Kind::Dgnn { w1, w2, p, g, h } => Some(DgnnParts {
                w1: w1.as_ref(),
                w2,
                bias: self.bias.as_deref(),
                p,
                g,
                h,
                sigma: self.sigma,
            }),
            _ => None,
        }
    }

    /// Coefficient `g(dv) h(du)` on a neighbour's `y W2` term.
    pub fn neighbour_coefficient(&self, dv: usize, du: usize) -> Result<Option<S>, MpnnError> {
        match &self.kind {
            Kind::Dgnn { g, h, .. } => Ok(Some(g.eval::<S>(dv)? * h.eval::<S>(du)?)),
            _ => Ok(None),
        }
    }

    /// Coefficient `p g(dv) h(dv)` on the vertex's own `x W2` term.
    pub fn self_coefficient(&self, dv: usize) -> Result<Option<S>, MpnnError> {
        match &self.kind {
            Kind::Dgnn { g, h, p, .. } => Ok(Some(p.clone() * g.eval::<S>(dv)? * h.eval::<S>(dv)?)),
            _ => Ok(None),
        }
    }

    fn finish(&self, pre: Vec<S>) -> Vec<S> {
        let pre = match &self.bias {
            Some(b) => add_vec(&pre, b),
            None => pre,
        };
        activate_vec(self.sigma, &pre)
    }
}

impl<S: Scalar> Layer<S> for BuiltinLayer<S> {
    fn in_width(&self) -> Option<usize> {
        Some(match &self.kind {
            Kind::Gnn { w1, .. } | Kind::CombAggr { w1, .. } => w1.nrows(),
            Kind::GnnMinus { w, .. } => w.nrows(),
            Kind::Dgnn { w2, .. } => w2.nrows(),
        })
    }

    fn uses_degrees(&self) -> bool {
        matches!(self.kind, Kind::Dgnn { .. })
    }

    fn message(&self, x: &[S], y: &[S], dv: usize, du: usize) -> Result<Vec<S>, MpnnError> {
        match &self.kind {
            Kind::Gnn { w2, .. } => Ok(w2.vec_mul(y)?),
            Kind::GnnMinus { w, .. } => Ok(w.vec_mul(y)?),
            Kind::CombAggr { w2, .. } => Ok(activate_vec(self.sigma, &w2.vec_mul(y)?)),
            Kind::Dgnn { p, g, h, .. } => {
                if dv == 0 || du == 0 {
                    return Err(MpnnError::DegreeFn("degree-aware layer called without degrees".into()));
                }
                // pre-weight message: the own term is shared over the dv edges
                let (gv, hv, hu) = (g.eval::<S>(dv)?, h.eval::<S>(dv)?, h.eval::<S>(du)?);
                let own = p.clone() * gv.clone() * hv * S::from_ratio(1, dv as i64);
                Ok(add_vec(&scale_vec(&own, x), &scale_vec(&(gv * hu), y)))
            }
        }
    }

    fn update(&self, x: &[S], m: &[S]) -> Result<Vec<S>, MpnnError> {
        match &self.kind {
            Kind::Gnn { w1, .. } | Kind::CombAggr { w1, .. } => Ok(self.finish(add_vec(&w1.vec_mul(x)?, m))),
            Kind::GnnMinus { w, p, q } => {
                let own = scale_vec(p, &w.vec_mul(x)?);
                let pre: Vec<S> = add_vec(&own, m).into_iter().map(|v| v - q.clone()).collect();
                Ok(activate_vec(self.sigma, &pre))
            }
            Kind::Dgnn { w1, w2, .. } => {
                let mut pre = w2.vec_mul(m)?;
                if let Some(w1) = w1 {
                    pre = add_vec(&pre, &w1.vec_mul(x)?);
                }
                Ok(self.finish(pre))
            }
        }
    }
}
