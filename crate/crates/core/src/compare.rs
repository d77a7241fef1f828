//! Weaker / g-weaker / equally-strong relations between runs on one graph.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GraphError, Partition};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompareError {
    #[error("right trace has {found} rounds, the shifted comparison needs {needed}")]
    InsufficientRounds { needed: usize, found: usize },
    #[error("round counts differ: {0} vs {1}")]
    RoundMismatch(usize, usize),
    #[error("bad shift {0:?}: expected 0, +1 or xC with C a positive integer")]
    BadShift(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Round map `g` in "left is g-weaker than right".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shift {
    Identity,
    PlusOne,
    TimesC(usize),
}

impl Shift {
    pub fn apply(self, t: usize) -> usize {
        match self {
            Shift::Identity => t,
            Shift::PlusOne => t + 1,
            Shift::TimesC(c) => c * t,
        }
    }
}

impl FromStr for Shift {
    type Err = CompareError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || CompareError::BadShift(s.to_string());
        match s.trim() {
            "0" | "identity" => Ok(Shift::Identity),
            "+1" | "plus_one" => Ok(Shift::PlusOne),
            t => {
                let c: usize = t.strip_prefix('x').ok_or_else(bad)?.parse().map_err(|_| bad())?;
                if c == 0 {
                    return Err(bad());
                }
                Ok(Shift::TimesC(c))
            }
        }
    }
}

impl fmt::Display for Shift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shift::Identity => write!(f, "0"),
            Shift::PlusOne => write!(f, "+1"),
            Shift::TimesC(c) => write!(f, "x{c}"),
        }
    }
}

/// A pair merged by the right run at `right_round` but separated by the left
/// run at `round`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub round: usize,
    pub right_round: usize,
    pub v: usize,
    pub w: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompareVerdict {
    pub holds: bool,
    pub first_violation: Option<Violation>,
}

/// Whether `left` is `shift`-weaker than `right`: for every round `t` of
/// `left`, `right[shift(t)]` refines `left[t]`.
pub fn weaker(left: &[Partition], right: &[Partition], shift: Shift) -> Result<CompareVerdict, CompareError> {
    let last = left.len().saturating_sub(1);
    let needed = shift.apply(last);
    if right.len() <= needed {
        return Err(CompareError::InsufficientRounds { needed, found: right.len().saturating_sub(1) });
    }
    for (t, a) in left.iter().enumerate() {
        let rt = shift.apply(t);
        if let Some((v, w)) = right[rt].refinement_witness(a)? {
            return Ok(CompareVerdict { holds: false, first_violation: Some(Violation { round: t, right_round: rt, v, w }) });
        }
    }
    Ok(CompareVerdict { holds: true, first_violation: None })
}

/// Weaker in both directions with the identity shift.
pub fn equally_strong(a: &[Partition], b: &[Partition]) -> Result<bool, CompareError> {
    if a.len() != b.len() {
        return Err(CompareError::RoundMismatch(a.len().saturating_sub(1), b.len().saturating_sub(1)));
    }
    Ok(weaker(a, b, Shift::Identity)?.holds && weaker(b, a, Shift::Identity)?.holds)
}

/// Re-checks a witness directly against the two partitions.
pub fn witness_is_genuine(left: &[Partition], right: &[Partition], x: &Violation) -> bool {
    let (Some(a), Some(b)) = (left.get(x.round), right.get(x.right_round)) else {
        return false;
    };
    x.v < a.n() && x.w < a.n() && b.class_of(x.v) == b.class_of(x.w) && a.class_of(x.v) != a.class_of(x.w)
}

/// One comparison with the context needed to report it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comparison {
    pub left: String,
    pub right: String,
    pub shift: Shift,
    pub left_classes: Vec<usize>,
    pub right_classes: Vec<usize>,
    pub verdict: CompareVerdict,
    /// Names for the witness vertices, when available.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_names: Option<(String, String)>,
}

impl Comparison {
    /// Runs [`weaker`] and records class counts. `names` maps vertex
    /// indices to display names.
    pub fn run(
        left_name: &str,
        left: &[Partition],
        right_name: &str,
        right: &[Partition],
        shift: Shift,
        names: Option<&[String]>,
    ) -> Result<Self, CompareError> {
        let verdict = weaker(left, right, shift)?;
        let witness_names = match (&verdict.first_violation, names) {
            (Some(x), Some(n)) => Some((n[x.v].clone(), n[x.w].clone())),
            _ => None,
        };
        Ok(Self {
            left: left_name.to_string(),
            right: right_name.to_string(),
            shift,
            left_classes: left.iter().map(Partition::num_classes).collect(),
            right_classes: right.iter().map(Partition::num_classes).collect(),
            verdict,
            witness_names,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub comparisons: Vec<Comparison>,
    pub holds: usize,
    pub fails: usize,
}

pub fn report(comparisons: Vec<Comparison>) -> Report {
    let holds = comparisons.iter().filter(|c| c.verdict.holds).count();
    let fails = comparisons.len() - holds;
    Report { comparisons, holds, fails }
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.comparisons {
            let rel = if c.verdict.holds { "<=" } else { "!<=" };
            let _ = writeln!(out, "{} {rel}[{}] {}", c.left, c.shift, c.right);
            let _ = writeln!(out, "  classes {}: {:?}", c.left, c.left_classes);
            let _ = writeln!(out, "  classes {}: {:?}", c.right, c.right_classes);
            if let Some(x) = &c.verdict.first_violation {
                let (v, w) = c
                    .witness_names
                    .clone()
                    .unwrap_or_else(|| ((x.v + 1).to_string(), (x.w + 1).to_string()));
                let _ = writeln!(
                    out,
                    "  witness: {} merges {v}, {w} at round {}; {} separates them at round {}",
                    c.right, x.right_round, c.left, x.round
                );
            }
        }
        if !self.comparisons.is_empty() {
            let _ = writeln!(out, "{} held, {} failed", self.holds, self.fails);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::parse_graph;
    use crate::mpnn::tests::FIG1;
    use crate::mpnn::{builtin_layer, run_mpnn, Activation, Family, FMode, LayerDef, LayerParams, MpnnSpec};
    use crate::wl::wl_rounds;
    use crate::Matrix;
    use proptest::prelude::*;

    fn p(ids: &[usize]) -> Partition {
        Partition::from_ids(ids)
    }

    fn gcn_trace(rounds: usize) -> Vec<Partition> {
        let g = parse_graph(FIG1).unwrap();
        let params = LayerParams { w: Some(Matrix::identity(3)), sigma: Activation::Relu, ..LayerParams::default() };
        let layer = LayerDef::Builtin(builtin_layer(Family::GcnKipf, params).unwrap());
        let spec = MpnnSpec::new(FMode::Degree, vec![layer; rounds]).unwrap();
        run_mpnn(&g, &spec).unwrap().partitions
    }

    #[test]
    fn gcn_is_not_weaker_than_wl_on_fig1() {
        let gcn = gcn_trace(3);
        let wl = wl_rounds(&parse_graph(FIG1).unwrap(), 4).rounds;
        let v = weaker(&gcn, &wl[..4], Shift::Identity).unwrap();
        assert!(!v.holds);
        let x = v.first_violation.unwrap();
        assert_eq!((x.round, x.v, x.w), (1, 3, 4));
        assert!(witness_is_genuine(&gcn, &wl, &x));
        assert!(weaker(&gcn, &wl, Shift::PlusOne).unwrap().holds);
        assert!(weaker(&wl[..4], &gcn, Shift::Identity).unwrap().holds);
        assert!(!equally_strong(&wl[..4], &gcn).unwrap());
    }

    #[test]
    fn report_names_the_witness() {
        let g = parse_graph(FIG1).unwrap();
        let gcn = gcn_trace(3);
        let wl = wl_rounds(&g, 3).rounds;
        let c = Comparison::run("gcn", &gcn, "wl", &wl, Shift::Identity, Some(g.names())).unwrap();
        let r = report(vec![c]);
        assert_eq!((r.holds, r.fails), (0, 1));
        assert!(r.to_text().contains("merges v4, v5 at round 1"), "{}", r.to_text());
        assert!(r.to_json().contains("\"first_violation\""));
        assert_eq!(report(Vec::new()).to_text(), "");
    }

    #[test]
    fn round_requirements() {
        let a = vec![p(&[0, 0]), p(&[0, 1])];
        assert_eq!(
            weaker(&a, &a, Shift::PlusOne),
            Err(CompareError::InsufficientRounds { needed: 2, found: 1 })
        );
        assert_eq!(equally_strong(&a, &a[..1]), Err(CompareError::RoundMismatch(1, 0)));
        assert!(weaker(&a[..1], &a, Shift::TimesC(2)).unwrap().holds);
    }

    #[test]
    fn shift_syntax() {
        assert_eq!("0".parse::<Shift>().unwrap(), Shift::Identity);
        assert_eq!("+1".parse::<Shift>().unwrap(), Shift::PlusOne);
        assert_eq!("x2".parse::<Shift>().unwrap(), Shift::TimesC(2));
        for bad in ["x0", "2", "+2", "x"] {
            assert!(bad.parse::<Shift>().is_err(), "{bad}");
        }
        assert_eq!(Shift::TimesC(3).to_string(), "x3");
    }

    fn trace(n: usize, t: usize) -> impl Strategy<Value = Vec<Partition>> {
        proptest::collection::vec(proptest::collection::vec(0..3usize, n), t).prop_map(|rs| rs.iter().map(|r| p(r)).collect())
    }

    proptest! {
        #[test]
        fn weaker_is_a_preorder(a in trace(5, 3), b in trace(5, 3), c in trace(5, 3)) {
            prop_assert!(weaker(&a, &a, Shift::Identity).unwrap().holds);
            let ab = weaker(&a, &b, Shift::Identity).unwrap().holds;
            let bc = weaker(&b, &c, Shift::Identity).unwrap().holds;
            if ab && bc {
                prop_assert!(weaker(&a, &c, Shift::Identity).unwrap().holds);
            }
            if equally_strong(&a, &b).unwrap() && equally_strong(&b, &c).unwrap() {
                prop_assert!(equally_strong(&a, &c).unwrap());
            }
            prop_assert_eq!(equally_strong(&a, &b).unwrap(), equally_strong(&b, &a).unwrap());
        }

        #[test]
        fn witnesses_are_genuine(a in trace(6, 3), b in trace(6, 3)) {
            let v = weaker(&a, &b, Shift::Identity).unwrap();
            prop_assert_eq!(v.holds, v.first_violation.is_none());
            if let Some(x) = v.first_violation {
                prop_assert!(witness_is_genuine(&a, &b, &x));
            }
        }
    }
}
