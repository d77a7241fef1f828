use super::{activate_vec, add_vec, scale_vec, Activation, DegreeFn, Layer, MpnnError};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Scalar factor in an [`Expr::Scale`].
#[derive(Debug, Clone, PartialEq)]
pub enum Factor<S: Scalar> {
    /// A function of the receiving vertex's degree.
    Dv(DegreeFn),
    /// A function of the sending vertex's degree.
    Du(DegreeFn),
    Const(S),
}

/// Expression over the inputs of a message or update function.
///
/// In a message `X` is the receiver's label and `Y` the sender's; in an
/// update `X` is the vertex label and `M` the summed message.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr<S: Scalar> {
    X,
    Y,
    M,
    Const(Vec<S>),
    /// `e W`
    MatMul(Box<Expr<S>>, Matrix<S>),
    Scale(Factor<S>, Box<Expr<S>>),
    Add(Vec<Expr<S>>),
    Concat(Vec<Expr<S>>),
    Activate(Activation, Box<Expr<S>>),
}

impl<S: Scalar> Expr<S> {
    pub fn matmul(self, w: Matrix<S>) -> Self {
        Expr::MatMul(Box::new(self), w)
    }

    pub fn scale(self, f: Factor<S>) -> Self {
        Expr::Scale(f, Box::new(self))
    }

    pub fn activate(self, sigma: Activation) -> Self {
        Expr::Activate(sigma, Box::new(self))
    }

    fn uses_degrees(&self) -> bool {
        match self {
            Expr::X | Expr::Y | Expr::M | Expr::Const(_) => false,
            Expr::Scale(Factor::Dv(_) | Factor::Du(_), _) => true,
            Expr::Scale(_, e) | Expr::MatMul(e, _) | Expr::Activate(_, e) => e.uses_degrees(),
            Expr::Add(es) | Expr::Concat(es) => es.iter().any(Expr::uses_degrees),
        }
    }

    fn eval(&self, env: &Env<'_, S>) -> Result<Vec<S>, MpnnError> {
        let input = |v: Option<&[S]>, name: &str| {
            v.map(<[S]>::to_vec)
                .ok_or_else(|| MpnnError::Custom(format!("{name} is not available here")))
        };
        Ok(match self {
            Expr::X => env.x.to_vec(),
            Expr::Y => input(env.y, "Y")?,
            Expr::M => input(env.m, "M")?,
            Expr::Const(c) => c.clone(),
            Expr::MatMul(e, w) => w.vec_mul(&e.eval(env)?)?,
            Expr::Scale(f, e) => {
                let k = match f {
                    Factor::Const(c) => c.clone(),
                    Factor::Dv(g) => g.eval(env.degree(0)?)?,
                    Factor::Du(g) => g.eval(env.degree(1)?)?,
                };
                scale_vec(&k, &e.eval(env)?)
            }
            Expr::Add(es) => {
                let mut parts = es.iter().map(|e| e.eval(env));
                let mut acc = parts.next().ok_or_else(|| MpnnError::Custom("empty sum".into()))??;
                for p in parts {
                    let p = p?;
                    if p.len() != acc.len() {
                        return Err(MpnnError::Custom(format!("adding widths {} and {}", acc.len(), p.len())));
                    }
                    acc = add_vec(&acc, &p);
                }
                acc
            }
            Expr::Concat(es) => {
                let mut out = Vec::new();
                for e in es {
                    out.extend(e.eval(env)?);
                }
                out
            }
            Expr::Activate(sigma, e) => activate_vec(*sigma, &e.eval(env)?),
        })
    }
}

struct Env<'a, S> {
    x: &'a [S],
    y: Option<&'a [S]>,
    m: Option<&'a [S]>,
    degrees: Option<(usize, usize)>,
}

impl<S> Env<'_, S> {
    fn degree(&self, which: usize) -> Result<usize, MpnnError> {
        let (dv, du) = self.degrees.ok_or_else(|| MpnnError::Custom("degrees are only available in messages".into()))?;
        Ok(if which == 0 { dv } else { du })
    }
}

/// A layer whose message and update are expressions.
#[derive(Debug, Clone, PartialEq)]
pub struct CustomLayer<S: Scalar> {
    pub message: Expr<S>,
    pub update: Expr<S>,
    pub in_width: Option<usize>,
}

impl<S: Scalar> CustomLayer<S> {
    pub fn new(message: Expr<S>, update: Expr<S>) -> Self {
        Self { message, update, in_width: None }
    }

    pub fn with_in_width(mut self, w: usize) -> Self {
        self.in_width = Some(w);
        self
    }
}

impl<S: Scalar> Layer<S> for CustomLayer<S> {
    fn in_width(&self) -> Option<usize> {
        self.in_width
    }

    fn uses_degrees(&self) -> bool {
        self.message.uses_degrees()
    }

    fn message(&self, x: &[S], y: &[S], dv: usize, du: usize) -> Result<Vec<S>, MpnnError> {
        self.message.eval(&Env { x, y: Some(y), m: None, degrees: Some((dv, du)) })
    }

    fn update(&self, x: &[S], m: &[S]) -> Result<Vec<S>, MpnnError> {
        self.update.eval(&Env { x, y: None, m: Some(m), degrees: None })
    }
}
