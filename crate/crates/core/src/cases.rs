//! Built-in example graphs, the counterexample harness and seeded samplers.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compare::{weaker, CompareError, Shift};
use crate::field::{parse_scalar, Activation, ExactScalar, FieldError};
use crate::graph::{GraphError, LabelledGraph, Labelling};
use crate::matrix::Matrix;
use crate::mpnn::{builtin_layer, run_mpnn, BuiltinLayer, DegreeFn, FMode, Family, LayerDef, LayerParams, MpnnError, MpnnSpec};
use crate::scalar::Scalar;
use crate::wl::wl_rounds;

type E = ExactScalar;

/// The generator behind every seeded draw.
pub type CaseRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> CaseRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CaseError {
    #[error("unknown graph {0:?}; built-in graphs are fig1, g1, g2, g3")]
    UnknownGraph(String),
    #[error("unknown case {0:?}; run `cases list`")]
    UnknownCase(String),
    #[error("need at least 2 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("edge probability {0} must lie in [0, 1] with numerator and denominator below 2^32")]
    BadProbability(String),
    #[error("no graph without isolated vertices after {0} draws")]
    SamplerExhausted(usize),
    #[error("case {} falsified", .0.case)]
    Falsified(Box<CaseReport>),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Mpnn(#[from] MpnnError),
    #[error(transparent)]
    Compare(#[from] CompareError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

const FIG1_EDGES: [(usize, usize); 5] = [(0, 2), (1, 2), (2, 3), (3, 4), (4, 5)];
const G1_EDGES: [(usize, usize); 4] = [(0, 1), (0, 2), (3, 1), (3, 2)];
const G3_EDGES: [(usize, usize); 8] = [(0, 1), (0, 2), (0, 3), (0, 4), (5, 6), (5, 7), (5, 8), (5, 9)];

fn one_hot(classes: &[usize], dim: usize) -> Labelling<E> {
    let rows = classes
        .iter()
        .map(|&c| (0..dim).map(|j| if j == c { E::one() } else { E::zero() }).collect())
        .collect();
    Labelling::new(rows, dim).expect("rows have width dim")
}

/// `fig1`, `g1`, `g2` or `g3`.
pub fn builtin_graph(id: &str) -> Result<LabelledGraph<E>, CaseError> {
    let g = match id {
        "fig1" => LabelledGraph::new(one_hot(&[0, 0, 1, 2, 2, 1], 3), &FIG1_EDGES)?,
        "g1" => LabelledGraph::new(one_hot(&[0, 1, 1, 2], 3), &G1_EDGES)?,
        "g2" => LabelledGraph::new(one_hot(&[0, 1], 2), &[(0, 1)])?,
        "g3" => {
            let names = ["v1", "v2", "v3", "v4", "v5", "w1", "w2", "w3", "w4", "w5"];
            LabelledGraph::new(one_hot(&[0, 1, 1, 2, 2, 1, 0, 0, 2, 2], 3), &G3_EDGES)?
                .with_names(names.iter().map(|s| s.to_string()).collect())
        }
        other => return Err(CaseError::UnknownGraph(other.to_string())),
    };
    Ok(g)
}

/// A built-in id or a path to a graph file.
pub fn load_graph(id_or_path: &str) -> Result<LabelledGraph<E>, String> {
    match builtin_graph(id_or_path) {
        Ok(g) => Ok(g),
        Err(CaseError::UnknownGraph(_)) => {
            let text = std::fs::read_to_string(id_or_path).map_err(|e| format!("{id_or_path}: {e}"))?;
            crate::graph::parse_graph(&text).map_err(|e| format!("{id_or_path}: {e}"))
        }
        Err(e) => Err(e.to_string()),
    }
}

/// Pre-activation rows of a degree-normalized layer with the weight matrix
/// factored out: `P` such that the layer computes `sigma(P W + B)`.
///
/// Requires `W1` absent or equal to `W2`.
pub fn pre_weight_rows(g: &LabelledGraph<E>, layer: &BuiltinLayer<E>) -> Result<Vec<Vec<E>>, MpnnError> {
    let parts = layer
        .dgnn_parts()
        .ok_or_else(|| MpnnError::Custom(format!("{} has no degree-normalized form", layer.family())))?;
    if parts.w1.is_some_and(|w1| w1 != parts.w2) {
        return Err(MpnnError::Custom("W1 and W2 differ; no single weight to factor out".into()));
    }
    let with_self = parts.w1.is_some();
    let degrees = g.degrees();
    let mut rows = Vec::with_capacity(g.n());
    for v in 0..g.n() {
        let x = g.labels().row(v);
        let k = layer.self_coefficient(degrees[v])?.expect("degree-normalized");
        let k = if with_self { k + E::one() } else { k };
        let mut row: Vec<E> = x.iter().map(|a| k.clone() * a.clone()).collect();
        for &u in g.neighbours(v) {
            let c = layer.neighbour_coefficient(degrees[v], degrees[u])?.expect("degree-normalized");
            for (r, y) in row.iter_mut().zip(g.labels().row(u)) {
                *r = r.clone() + c.clone() * y.clone();
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// One family checked within a case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyCheck {
    pub family: String,
    /// Pre-weight rows for every vertex, in scalar text syntax.
    pub rows: Vec<Vec<String>>,
    pub rows_match_displayed: bool,
    pub pair_rows_equal: bool,
    pub trials_equal: usize,
    pub trials_separated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub case: String,
    pub graph: String,
    pub seed: u64,
    pub trials: usize,
    pub pair: (String, String),
    pub families: Vec<FamilyCheck>,
    /// Families run only as corroboration; they do not affect `passed`.
    pub corroborating: Vec<FamilyCheck>,
    pub wl_round: usize,
    pub wl_separates_pair: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plus_one_holds: Option<bool>,
    pub passed: bool,
}

impl CaseReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "{} on {} ({} trials, seed {}): {verdict}", self.case, self.graph, self.trials, self.seed);
        let _ = writeln!(out, "  pair {} / {}", self.pair.0, self.pair.1);
        for (tag, list) in [("", &self.families), (" (corroborating)", &self.corroborating)] {
            for f in list {
                let _ = writeln!(
                    out,
                    "  {}{tag}: displayed rows {}, pair rows {}, trials equal {} separated {}",
                    f.family,
                    if f.rows_match_displayed { "match" } else { "DIFFER" },
                    if f.pair_rows_equal { "equal" } else { "differ" },
                    f.trials_equal,
                    f.trials_separated
                );
            }
        }
        let _ = writeln!(
            out,
            "  WL {} the pair at round {}",
            if self.wl_separates_pair { "separates" } else { "merges" },
            self.wl_round
        );
        if let Some(h) = self.plus_one_holds {
            let _ = writeln!(out, "  one step ahead over 3 rounds: {h}");
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CaseInfo {
    pub id: &'static str,
    pub graph: &'static str,
    pub pair: (usize, usize),
    pub families: &'static [Family],
    /// The network separates the pair (and WL merges it) instead of the reverse.
    pub network_separates: bool,
}

pub const CASES: [CaseInfo; 4] = [
    CaseInfo { id: "fig1-gcn", graph: "fig1", pair: (3, 4), families: &[Family::GcnKipf], network_separates: true },
    CaseInfo {
        id: "g1-dgnn12",
        graph: "g1",
        pair: (0, 3),
        families: &[Family::Dgnn1, Family::Dgnn2, Family::GeneralDgnn],
        network_separates: false,
    },
    CaseInfo { id: "g2-dgnn34", graph: "g2", pair: (0, 1), families: &[Family::Dgnn3, Family::Dgnn4], network_separates: false },
    CaseInfo { id: "g3-dgnn5", graph: "g3", pair: (0, 5), families: &[Family::Dgnn5], network_separates: false },
];

pub fn case_info(id: &str) -> Result<CaseInfo, CaseError> {
    CASES.iter().copied().find(|c| c.id == id).ok_or_else(|| CaseError::UnknownCase(id.to_string()))
}

fn s(t: &str) -> E {
    parse_scalar(t).expect("literal parses")
}

fn rows_of(lines: &[&[&str]]) -> Vec<Vec<E>> {
    lines.iter().map(|r| r.iter().map(|t| s(t)).collect()).collect()
}

/// Pre-weight matrix exactly as displayed for the case, in terms of the
/// layer's `g` and `h`.
fn displayed_rows(case: &str, layer: &BuiltinLayer<E>) -> Result<Vec<Vec<E>>, MpnnError> {
    let gh = |d: usize| -> Result<E, MpnnError> { Ok(layer.neighbour_coefficient(d, d)?.expect("degree-normalized")) };
    let z = E::zero();
    Ok(match case {
        "fig1-gcn" => rows_of(&[
            &["1/2", "1/4*sqrt(2)", "0"],
            &["1/2", "1/4*sqrt(2)", "0"],
            &["1/2*sqrt(2)", "1/4", "1/6*sqrt(3)"],
            &["0", "1/6*sqrt(3)", "2/3"],
            &["0", "1/6*sqrt(6)", "2/3"],
            &["0", "1/2", "1/6*sqrt(6)"],
        ]),
        "g1-dgnn12" => {
            let c = gh(2)?;
            let two_c = c.clone() + c.clone();
            vec![
                vec![z.clone(), two_c.clone(), z.clone()],
                vec![c.clone(), z.clone(), c.clone()],
                vec![c.clone(), z.clone(), c],
                vec![z.clone(), two_c, z],
            ]
        }
        "g2-dgnn34" => {
            let c = gh(1)?;
            vec![vec![c.clone(), c.clone()], vec![c.clone(), c]]
        }
        "g3-dgnn5" => rows_of(&[
            &["1", "1", "1"],
            &["1/2", "1", "0"],
            &["1/2", "1", "0"],
            &["1/2", "0", "1"],
            &["1/2", "0", "1"],
            &["1", "1", "1"],
            &["1", "1/2", "0"],
            &["1", "1/2", "0"],
            &["0", "1/2", "1"],
            &["0", "1/2", "1"],
        ]),
        other => return Err(MpnnError::Custom(format!("no displayed matrix for {other}"))),
    })
}

/// Draws a rational in `[-bound, bound] / dens`.
pub fn random_entry<S: Scalar>(rng: &mut CaseRng, bound: i64, dens: &[i64]) -> S {
    let num = rng.gen_range(-bound..=bound);
    let den = *dens.choose(rng).expect("non-empty denominators");
    S::from_ratio(num, den)
}

pub fn random_matrix<S: Scalar>(rng: &mut CaseRng, rows: usize, cols: usize, bound: i64, dens: &[i64]) -> Matrix<S> {
    let mut m = Matrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m.set(i, j, random_entry(rng, bound, dens));
        }
    }
    m
}

fn pick<T: Clone>(rng: &mut CaseRng, xs: &[T]) -> T {
    xs.choose(rng).expect("non-empty choice").clone()
}

const UNIT_FRACTIONS: [(i64, i64); 5] = [(1, 4), (1, 3), (1, 2), (2, 3), (3, 4)];
const NAMED_DEGREE_FNS: [DegreeFn; 5] =
    [DegreeFn::One, DegreeFn::InvDeg, DegreeFn::InvSqrtDeg, DegreeFn::InvDegPlusOne, DegreeFn::InvSqrtDegPlusOne];

/// Parameters for one layer of `family` with random weights drawn as
/// numerator in `[-bound, bound]` over a denominator from `dens`.
/// `p` and `q` come from a fixed set of fractions in (0, 1).
pub fn random_params<S: Scalar>(
    rng: &mut CaseRng,
    family: Family,
    in_width: usize,
    out_width: usize,
    bound: i64,
    dens: &[i64],
) -> LayerParams<S> {
    let m = |rng: &mut CaseRng| random_matrix::<S>(rng, in_width, out_width, bound, dens);
    let frac = |rng: &mut CaseRng| {
        let (a, b) = pick(rng, &UNIT_FRACTIONS);
        S::from_ratio(a, b)
    };
    let sigma = pick(rng, &[Activation::Relu, Activation::Sign]);
    let mut p = LayerParams { sigma, ..LayerParams::default() };
    let bias = |rng: &mut CaseRng| (0..out_width).map(|_| random_entry::<S>(rng, bound, dens)).collect::<Vec<_>>();
    match family {
        Family::Gnn | Family::CombAggr => {
            p.w1 = Some(m(rng));
            p.w2 = Some(m(rng));
            p.bias = Some(bias(rng));
        }
        Family::GnnMinus => {
            p.w = Some(m(rng));
            p.p = Some(frac(rng));
            p.q = Some(frac(rng));
        }
        Family::GcnKipf => p.w = Some(m(rng)),
        Family::Dgnn1 | Family::Dgnn2 | Family::Dgnn3 | Family::Dgnn4 | Family::Dgnn5 => {
            p.w = Some(m(rng));
            p.bias = Some(bias(rng));
        }
        Family::Dgnn6 => {
            p.w = Some(m(rng));
            p.p = Some(frac(rng));
            let (a, b) = pick(rng, &[(1, 4), (1, 2), (3, 4), (1, 1)]);
            p.r = Some(S::from_ratio(a, b));
            p.bias = Some(bias(rng));
        }
        Family::GeneralDgnn => {
            p.w2 = Some(m(rng));
            if rng.gen_bool(0.5) {
                p.w1 = Some(m(rng));
            }
            p.p = Some(frac(rng));
            p.g_fn = Some(pick(rng, &NAMED_DEGREE_FNS));
            p.h_fn = Some(pick(rng, &NAMED_DEGREE_FNS));
            p.bias = Some(bias(rng));
        }
    }
    p
}

/// A spec of `rounds` random layers of `family`, hidden widths in 2..=4,
/// weight numerators in `[-3, 3]` over denominators 1 and 2.
pub fn random_spec<S: Scalar>(
    rng: &mut CaseRng,
    family: Family,
    rounds: usize,
    in_width: usize,
) -> Result<MpnnSpec<S>, MpnnError> {
    let mut width = in_width;
    let mut layers = Vec::with_capacity(rounds);
    for _ in 0..rounds {
        let out = rng.gen_range(2..=4);
        let params = random_params::<S>(rng, family, width, out, 3, &[1, 2]);
        layers.push(LayerDef::Builtin(builtin_layer(family, params)?));
        width = out;
    }
    let f_mode = if family.uses_degrees() { FMode::Degree } else { FMode::Zero };
    MpnnSpec::new(f_mode, layers)
}

fn identity_layer(family: Family, dim: usize) -> Result<BuiltinLayer<E>, MpnnError> {
    let w = Matrix::identity(dim);
    let mut p = LayerParams::<E> { sigma: Activation::Relu, ..LayerParams::default() };
    match family {
        Family::GeneralDgnn => {
            // an arbitrary g and h with no self term
            p.w2 = Some(w);
            p.p = Some(E::zero());
            p.g_fn = Some(DegreeFn::InvSqrtDegPlusOne);
            p.h_fn = Some(DegreeFn::InvDegPlusOne);
        }
        Family::Dgnn6 => {
            p.w = Some(w);
            p.r = Some(E::from_ratio(1, 2));
            p.p = Some(E::from_ratio(1, 2));
        }
        _ => p.w = Some(w),
    }
    builtin_layer(family, p)
}

/// Random weights for a structural layer, keeping its degree functions.
fn trial_layer(rng: &mut CaseRng, base: &BuiltinLayer<E>, dim: usize) -> Result<BuiltinLayer<E>, MpnnError> {
    let family = base.family();
    let mut p = random_params::<E>(rng, family, dim, dim, 5, &[1, 2, 3]);
    if family == Family::GeneralDgnn {
        let bp = base.params();
        p.w1 = None;
        p.p = bp.p.clone();
        p.g_fn = bp.g_fn.clone();
        p.h_fn = bp.h_fn.clone();
    }
    builtin_layer(family, p)
}

fn check_family(
    case: &str,
    g: &LabelledGraph<E>,
    family: Family,
    pair: (usize, usize),
    trials: usize,
    rng: &mut CaseRng,
    displayed: bool,
) -> Result<FamilyCheck, CaseError> {
    let dim = g.labels().dim();
    let layer = identity_layer(family, dim)?;
    let rows = pre_weight_rows(g, &layer)?;
    let rows_match_displayed = !displayed || rows == displayed_rows(case, &layer)?;
    let pair_rows_equal = rows[pair.0] == rows[pair.1];
    let (mut equal, mut separated) = (0, 0);
    for _ in 0..trials {
        let l = trial_layer(rng, &layer, dim)?;
        let spec = MpnnSpec::new(FMode::Degree, vec![LayerDef::Builtin(l)])?;
        let out = run_mpnn(g, &spec)?;
        let last = &out.labellings[1];
        if last.row(pair.0) == last.row(pair.1) {
            equal += 1;
        } else {
            separated += 1;
        }
    }
    Ok(FamilyCheck {
        family: family.name().to_string(),
        rows: rows.iter().map(|r| r.iter().map(ToString::to_string).collect()).collect(),
        rows_match_displayed,
        pair_rows_equal,
        trials_equal: equal,
        trials_separated: separated,
    })
}

/// Runs the structural, randomized and WL checks of one case.
/// A falsified claim comes back as [`CaseError::Falsified`] carrying the full report.
pub fn verify_counterexample(id: &str, trials: usize, seed: u64) -> Result<CaseReport, CaseError> {
    let info = case_info(id)?;
    let g = builtin_graph(info.graph)?;
    let mut rng = rng_from_seed(seed);
    let mut families = Vec::new();
    for &f in info.families {
        families.push(check_family(id, &g, f, info.pair, trials, &mut rng, true)?);
    }
    let mut corroborating = Vec::new();
    let mut plus_one_holds = None;
    if info.network_separates {
        corroborating.push(check_family(id, &g, Family::Dgnn6, info.pair, trials, &mut rng, false)?);
        let layer = identity_layer(Family::GcnKipf, g.labels().dim())?;
        let spec = MpnnSpec::new(FMode::Degree, vec![LayerDef::Builtin(layer); 3])?;
        let net = run_mpnn(&g, &spec)?;
        let wl = wl_rounds(&g, 4);
        plus_one_holds = Some(weaker(&net.partitions, &wl.rounds, Shift::PlusOne)?.holds);
    }
    let wl = wl_rounds(&g, 1);
    let wl_separates_pair = wl.rounds[1].class_of(info.pair.0) != wl.rounds[1].class_of(info.pair.1);
    let passed = if info.network_separates {
        families.iter().all(|f| f.rows_match_displayed && !f.pair_rows_equal)
            && !wl_separates_pair
            && plus_one_holds == Some(true)
    } else {
        families.iter().all(|f| f.rows_match_displayed && f.pair_rows_equal && f.trials_separated == 0) && wl_separates_pair
    };
    let report = CaseReport {
        case: id.to_string(),
        graph: info.graph.to_string(),
        seed,
        trials,
        pair: (g.name(info.pair.0).to_string(), g.name(info.pair.1).to_string()),
        families,
        corroborating,
        wl_round: 1,
        wl_separates_pair,
        plus_one_holds,
        passed,
    };
    if report.passed {
        Ok(report)
    } else {
        Err(CaseError::Falsified(Box::new(report)))
    }
}

fn probability_ratio(p: &crate::field::Rational) -> Result<(u32, u32), CaseError> {
    use num_traits::{Signed, ToPrimitive};
    let bad = || CaseError::BadProbability(p.to_string());
    if p.is_negative() || p > &crate::field::Rational::from_integer(1.into()) {
        return Err(bad());
    }
    let n = p.numer().to_u32().ok_or_else(bad)?;
    let d = p.denom().to_u32().ok_or_else(bad)?;
    Ok((n, d))
}

const MAX_DRAWS: usize = 1000;
/// One-hot alphabet size of sampled labels.
pub const SAMPLE_ALPHABET: usize = 3;

fn draw(rng: &mut CaseRng, n: usize, (num, den): (u32, u32), connected: bool) -> Result<LabelledGraph<E>, CaseError> {
    for _ in 0..MAX_DRAWS {
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if rng.gen_ratio(num, den) {
                    edges.push((a, b));
                }
            }
        }
        let classes: Vec<usize> = (0..n).map(|_| rng.gen_range(0..SAMPLE_ALPHABET)).collect();
        match LabelledGraph::new(one_hot(&classes, SAMPLE_ALPHABET), &edges) {
            Ok(g) if !connected || is_connected(&g) => return Ok(g),
            Ok(_) | Err(GraphError::Isolated(_)) => continue,
            Err(e) => return Err(e.into()),
        }
    }
    Err(CaseError::SamplerExhausted(MAX_DRAWS))
}

pub fn is_connected<S: Scalar>(g: &LabelledGraph<S>) -> bool {
    let mut seen = vec![false; g.n()];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &u in g.neighbours(v) {
            if !seen[u] {
                seen[u] = true;
                stack.push(u);
            }
        }
    }
    seen.into_iter().all(|x| x)
}

/// Erdős–Rényi draw with one-hot labels, redrawn until no vertex is isolated.
pub fn sample_graph(n: usize, edge_prob: &crate::field::Rational, seed: u64) -> Result<LabelledGraph<E>, CaseError> {
    sample_graph_with(&mut rng_from_seed(seed), n, edge_prob, false)
}

/// As [`sample_graph`] from a caller-held generator; `connected` also
/// redraws disconnected graphs.
pub fn sample_graph_with(
    rng: &mut CaseRng,
    n: usize,
    edge_prob: &crate::field::Rational,
    connected: bool,
) -> Result<LabelledGraph<E>, CaseError> {
    if n < 2 {
        return Err(CaseError::TooFewVertices(n));
    }
    draw(rng, n, probability_ratio(edge_prob)?, connected)
}
