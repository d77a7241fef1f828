use std::sync::Arc;

use super::{
    add_vec, scale_vec, CustomLayer, DegreeFn, Expr, FMode, Layer, LayerDef, MpnnError, MpnnSpec,
};
use crate::field::Activation;
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Per-label map used by [`wrap_comb_aggr`].
pub type AggrFn<S> = Arc<dyn Fn(&[S]) -> Result<Vec<S>, MpnnError> + Send + Sync>;
/// Combination of a vertex label with its aggregated neighbourhood.
pub type CombFn<S> = Arc<dyn Fn(&[S], &[S]) -> Result<Vec<S>, MpnnError> + Send + Sync>;

/// One round that appends the vertex degree: messages are the constant 1
/// and the update concatenates it to the label.
pub fn degree_probe_spec<S: Scalar>(s0: usize) -> MpnnSpec<S> {
    let layer = CustomLayer::new(Expr::Const(vec![S::one()]), Expr::Concat(vec![Expr::X, Expr::M])).with_in_width(s0);
    MpnnSpec { f_mode: FMode::Zero, layers: vec![LayerDef::Custom(layer)] }
}

fn read_degree<S: Scalar>(v: &S, round: usize) -> Result<usize, MpnnError> {
    let bad = || MpnnError::NotADegree { round, value: v.to_string() };
    let q = v.to_rational().ok_or_else(bad)?;
    if !q.is_integer() {
        return Err(bad());
    }
    use num_traits::ToPrimitive;
    match q.to_integer().to_usize() {
        Some(d) if d > 0 => Ok(d),
        _ => Err(bad()),
    }
}

fn split_last<S>(x: &[S]) -> (&[S], &S) {
    let (last, rest) = x.split_last().expect("lifted labels carry a degree column");
    (rest, last)
}

/// Replays a layer on all but the last label component, which holds the degree.
struct Lifted<S: Scalar> {
    inner: LayerDef<S>,
    degrees: bool,
    round: usize,
}

impl<S: Scalar> Layer<S> for Lifted<S> {
    fn in_width(&self) -> Option<usize> {
        self.inner.in_width().map(|w| w + 1)
    }

    fn uses_degrees(&self) -> bool {
        false
    }

    fn message(&self, x: &[S], y: &[S], _: usize, _: usize) -> Result<Vec<S>, MpnnError> {
        let ((xs, dx), (ys, dy)) = (split_last(x), split_last(y));
        let (dv, du) = if self.degrees {
            (read_degree(dx, self.round)?, read_degree(dy, self.round)?)
        } else {
            (0, 0)
        };
        self.inner.message(xs, ys, dv, du)
    }

    fn update(&self, x: &[S], m: &[S]) -> Result<Vec<S>, MpnnError> {
        let (xs, d) = split_last(x);
        let mut out = self.inner.update(xs, m)?;
        out.push(d.clone());
        Ok(out)
    }
}

/// Anonymous spec with one extra round: the degree probe, then each
/// original round reading degrees from the appended component.
pub fn lift_plus_one<S: Scalar>(spec: &MpnnSpec<S>) -> MpnnSpec<S> {
    let degrees = spec.f_mode == FMode::Degree;
    let probe = CustomLayer::new(Expr::Const(vec![S::one()]), Expr::Concat(vec![Expr::X, Expr::M]));
    let probe = match spec.layers.first().and_then(|l| l.in_width()) {
        Some(w) => probe.with_in_width(w),
        None => probe,
    };
    let mut layers = vec![LayerDef::Custom(probe)];
    for (t, l) in spec.layers.iter().enumerate() {
        let lifted = Lifted { inner: l.clone(), degrees, round: t + 2 };
        layers.push(LayerDef::Native(Arc::new(lifted)));
    }
    MpnnSpec { f_mode: FMode::Zero, layers }
}

/// A degree-normalized layer with `h = 1` run anonymously: the message
/// carries `(y W2, 1)` so the update can recover the degree from the count.
struct Anonymized<S: Scalar> {
    w1: Option<Matrix<S>>,
    w2: Matrix<S>,
    bias: Option<Vec<S>>,
    p: S,
    g: DegreeFn,
    sigma: Activation,
    round: usize,
}

impl<S: Scalar> Layer<S> for Anonymized<S> {
    fn in_width(&self) -> Option<usize> {
        Some(self.w2.nrows())
    }

    fn uses_degrees(&self) -> bool {
        false
    }

    fn message(&self, _x: &[S], y: &[S], _: usize, _: usize) -> Result<Vec<S>, MpnnError> {
        let mut out = self.w2.vec_mul(y)?;
        out.push(S::one());
        Ok(out)
    }

    fn update(&self, x: &[S], m: &[S]) -> Result<Vec<S>, MpnnError> {
        let (sum, count) = split_last(m);
        let d = read_degree(count, self.round)?;
        let gd: S = self.g.eval(d)?;
        let own = scale_vec(&(self.p.clone() * gd.clone()), &self.w2.vec_mul(x)?);
        let mut pre = add_vec(&own, &scale_vec(&gd, sum));
        if let Some(w1) = &self.w1 {
            pre = add_vec(&pre, &w1.vec_mul(x)?);
        }
        if let Some(b) = &self.bias {
            pre = add_vec(&pre, b);
        }
        Ok(pre.iter().map(|v| v.activate(self.sigma)).collect())
    }
}

/// Rewrites a degree-aware spec whose layers all have `h = 1` into an
/// anonymous spec with the same labels every round.
pub fn anonymize_h_const<S: Scalar>(spec: &MpnnSpec<S>) -> Result<MpnnSpec<S>, MpnnError> {
    let mut layers = Vec::with_capacity(spec.layers.len());
    for (t, l) in spec.layers.iter().enumerate() {
        let round = t + 1;
        let parts = match l {
            LayerDef::Builtin(b) => b.dgnn_parts(),
            _ => None,
        }
        .ok_or(MpnnError::NotDgnn { round })?;
        if !parts.h.is_one() {
            return Err(MpnnError::HNotConstant { round });
        }
        layers.push(LayerDef::Native(Arc::new(Anonymized {
            w1: parts.w1.cloned(),
            w2: parts.w2.clone(),
            bias: parts.bias.map(<[S]>::to_vec),
            p: parts.p.clone(),
            g: parts.g.clone(),
            sigma: parts.sigma,
            round,
        })));
    }
    Ok(MpnnSpec { f_mode: FMode::Zero, layers })
}

/// Layer with message `h(y)` and update `comb(x, g(m))`.
#[derive(Clone)]
pub struct CombAggrLayer<S: Scalar> {
    pub comb: CombFn<S>,
    pub aggr_h: AggrFn<S>,
    pub aggr_g: AggrFn<S>,
}

impl<S: Scalar> Layer<S> for CombAggrLayer<S> {
    fn in_width(&self) -> Option<usize> {
        None
    }

    fn uses_degrees(&self) -> bool {
        false
    }

    fn message(&self, _x: &[S], y: &[S], _: usize, _: usize) -> Result<Vec<S>, MpnnError> {
        (self.aggr_h)(y)
    }

    fn update(&self, x: &[S], m: &[S]) -> Result<Vec<S>, MpnnError> {
        (self.comb)(x, &(self.aggr_g)(m)?)
    }
}

/// Anonymous spec repeating the same combination/aggregation round.
pub fn wrap_comb_aggr<S: Scalar>(comb: CombFn<S>, aggr_h: AggrFn<S>, aggr_g: AggrFn<S>, rounds: usize) -> MpnnSpec<S> {
    let layer: Arc<dyn Layer<S>> = Arc::new(CombAggrLayer { comb, aggr_h, aggr_g });
    MpnnSpec { f_mode: FMode::Zero, layers: vec![LayerDef::Native(layer); rounds] }
}
