//! Labelled graphs, labellings and the coarseness order between them.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{parse_scalar, ExactScalar, FieldError};
use crate::matrix::{unique_rows, Matrix};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("vertex {0} is isolated")]
    Isolated(usize),
    #[error("vertex {vertex} has label width {found}, expected {expected}")]
    DimensionMismatch { vertex: usize, expected: usize, found: usize },
    #[error("vertex {vertex} out of range 1..={n}")]
    OutOfRange { vertex: usize, n: usize },
    #[error("edge {{{0}, {1}}} listed twice")]
    DuplicateEdge(usize, usize),
    #[error("vertex {0} declared twice")]
    DuplicateVertex(usize),
    #[error("vertex {0} has no label line")]
    MissingLabel(usize),
    #[error("label width must be at least 1")]
    EmptyLabel,
    #[error("vertex counts differ: {0} vs {1}")]
    VertexCountMismatch(usize, usize),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Class id per vertex, dense and numbered by first occurrence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Partition {
    class_of: Vec<usize>,
}

impl Partition {
    /// Groups positions holding equal keys.
    pub fn from_keys<K: PartialEq + Clone>(keys: &[K]) -> Self {
        let (_, class_of) = unique_rows(&keys.iter().map(|k| vec![k.clone()]).collect::<Vec<_>>());
        Self { class_of }
    }

    /// Renumbers arbitrary ids densely in first-occurrence order.
    pub fn from_ids(ids: &[usize]) -> Self {
        let mut seen: Vec<usize> = Vec::new();
        let class_of = ids
            .iter()
            .map(|id| match seen.iter().position(|s| s == id) {
                Some(k) => k,
                None => {
                    seen.push(*id);
                    seen.len() - 1
                }
            })
            .collect();
        Self { class_of }
    }

    pub fn discrete(n: usize) -> Self {
        Self { class_of: (0..n).collect() }
    }

    pub fn n(&self) -> usize {
        self.class_of.len()
    }

    pub fn class_of(&self, v: usize) -> usize {
        self.class_of[v]
    }

    pub fn classes(&self) -> &[usize] {
        &self.class_of
    }

    pub fn num_classes(&self) -> usize {
        self.class_of.iter().max().map_or(0, |m| m + 1)
    }

    /// Members of each class, in class order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_classes()];
        for (v, &c) in self.class_of.iter().enumerate() {
            out[c].push(v);
        }
        out
    }

    /// First pair `(v, w)`, `v < w`, that `self` merges but `coarse` separates.
    /// `None` means every class of `self` lies inside a class of `coarse`.
    pub fn refinement_witness(&self, coarse: &Partition) -> Result<Option<(usize, usize)>, GraphError> {
        if self.n() != coarse.n() {
            return Err(GraphError::VertexCountMismatch(self.n(), coarse.n()));
        }
        let mut rep: Vec<Option<usize>> = vec![None; self.num_classes()];
        for w in 0..self.n() {
            let c = self.class_of[w];
            match rep[c] {
                None => rep[c] = Some(w),
                Some(v) if coarse.class_of[v] != coarse.class_of[w] => return Ok(Some((v, w))),
                Some(_) => {}
            }
        }
        Ok(None)
    }

    /// Whether `coarse` is coarser than `self`.
    pub fn refines(&self, coarse: &Partition) -> Result<bool, GraphError> {
        Ok(self.refinement_witness(coarse)?.is_none())
    }

    pub fn equivalent(&self, other: &Partition) -> Result<bool, GraphError> {
        Ok(self.refines(other)? && other.refines(self)?)
    }
}

/// One label row per vertex, all of width `dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct Labelling<S = ExactScalar> {
    dim: usize,
    rows: Vec<Vec<S>>,
}

impl<S: Scalar> Labelling<S> {
    pub fn new(rows: Vec<Vec<S>>, dim: usize) -> Result<Self, GraphError> {
        for (v, r) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(GraphError::DimensionMismatch { vertex: v + 1, expected: dim, found: r.len() });
            }
        }
        Ok(Self { dim, rows })
    }

    pub fn from_matrix(m: &Matrix<S>) -> Self {
        Self { dim: m.ncols(), rows: m.to_rows() }
    }

    pub fn to_matrix(&self) -> Matrix<S> {
        Matrix::from_rows(self.rows.clone(), self.dim).expect("rows have uniform width")
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, v: usize) -> &[S] {
        &self.rows[v]
    }

    pub fn rows(&self) -> &[Vec<S>] {
        &self.rows
    }

    pub fn partition(&self) -> Partition {
        partition_of(self)
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Labelling<T> {
        Labelling { dim: self.dim, rows: self.rows.iter().map(|r| r.iter().map(&f).collect()).collect() }
    }

    /// Distinct rows in first-occurrence order.
    pub fn unique_rows(&self) -> Vec<Vec<S>> {
        unique_rows(&self.rows).0
    }
}

/// Vertices share a class iff their rows are equal.
pub fn partition_of<S: Scalar>(l: &Labelling<S>) -> Partition {
    Partition { class_of: unique_rows(&l.rows).1 }
}

/// Whether `coarse` is coarser than `fine`: equal rows in `fine` stay equal in `coarse`.
pub fn refines<S: Scalar, T: Scalar>(fine: &Labelling<S>, coarse: &Labelling<T>) -> Result<bool, GraphError> {
    partition_of(fine).refines(&partition_of(coarse))
}

pub fn equivalent<S: Scalar, T: Scalar>(a: &Labelling<S>, b: &Labelling<T>) -> Result<bool, GraphError> {
    partition_of(a).equivalent(&partition_of(b))
}

/// Undirected simple graph without isolated vertices, with vertex labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelledGraph<S = ExactScalar> {
    adj: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
    labels: Labelling<S>,
    names: Vec<String>,
}

impl<S: Scalar> LabelledGraph<S> {
    /// Builds from 0-based edges. Vertex count is the number of label rows.
    pub fn new(labels: Labelling<S>, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let n = labels.n();
        if labels.dim() == 0 {
            return Err(GraphError::EmptyLabel);
        }
        let mut set = BTreeSet::new();
        for &(a, b) in edges {
            for v in [a, b] {
                if v >= n {
                    return Err(GraphError::OutOfRange { vertex: v + 1, n });
                }
            }
            if a == b {
                return Err(GraphError::SelfLoop(a + 1));
            }
            let key = (a.min(b), a.max(b));
            if !set.insert(key) {
                return Err(GraphError::DuplicateEdge(key.0 + 1, key.1 + 1));
            }
        }
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in &set {
            adj[a].push(b);
            adj[b].push(a);
        }
        for (v, nb) in adj.iter_mut().enumerate() {
            if nb.is_empty() {
                return Err(GraphError::Isolated(v + 1));
            }
            nb.sort_unstable();
        }
        let names = (1..=n).map(|i| format!("v{i}")).collect();
        Ok(Self { adj, edges: set.into_iter().collect(), labels, names })
    }

    pub fn with_names(mut self, names: Vec<String>) -> Self {
        assert_eq!(names.len(), self.n(), "one name per vertex");
        self.names = names;
        self
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbours(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn labels(&self) -> &Labelling<S> {
        &self.labels
    }

    pub fn name(&self, v: usize) -> &str {
        &self.names[v]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Degree of a 0-based vertex.
    pub fn degree(&self, v: usize) -> Result<usize, GraphError> {
        self.adj
            .get(v)
            .map(Vec::len)
            .ok_or(GraphError::OutOfRange { vertex: v + 1, n: self.n() })
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adj.iter().map(Vec::len).collect()
    }

    pub fn adjacency(&self) -> Matrix<S> {
        let mut a = Matrix::zeros(self.n(), self.n());
        for &(u, v) in &self.edges {
            a.set(u, v, S::one());
            a.set(v, u, S::one());
        }
        a
    }

    /// Same graph with new labels.
    pub fn relabel<T: Scalar>(&self, labels: Labelling<T>) -> Result<LabelledGraph<T>, GraphError> {
        if labels.n() != self.n() {
            return Err(GraphError::VertexCountMismatch(labels.n(), self.n()));
        }
        Ok(LabelledGraph { adj: self.adj.clone(), edges: self.edges.clone(), labels, names: self.names.clone() })
    }

    pub fn map_labels<T: Scalar>(&self, f: impl Fn(&S) -> T) -> LabelledGraph<T> {
        self.relabel(self.labels.map(f)).expect("same vertex count")
    }

    /// Image under the vertex permutation `old v -> perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.n();
        assert_eq!(perm.len(), n);
        let mut rows = vec![Vec::new(); n];
        let mut names = vec![String::new(); n];
        for v in 0..n {
            rows[perm[v]] = self.labels.rows[v].clone();
            names[perm[v]] = self.names[v].clone();
        }
        let edges: Vec<_> = self.edges.iter().map(|&(a, b)| (perm[a], perm[b])).collect();
        let labels = Labelling { dim: self.labels.dim, rows };
        Self::new(labels, &edges).expect("permutation preserves validity").with_names(names)
    }
}

impl LabelledGraph<ExactScalar> {
    /// Canonical text form; `parse_graph(g.to_text())` reproduces `g` up to names.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "n {}", self.n()).unwrap();
        for (v, row) in self.labels.rows.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(ToString::to_string).collect();
            writeln!(out, "v {} {}: {}", v + 1, self.labels.dim, cells.join(", ")).unwrap();
        }
        for &(a, b) in &self.edges {
            writeln!(out, "e {} {}", a + 1, b + 1).unwrap();
        }
        out
    }
}

/// Parses the text graph format:
///
/// ```text
/// # comment
/// n 2
/// v 1 2: 1, 0
/// v 2 2: 0, 1
/// e 1 2
/// ```
pub fn parse_graph(text: &str) -> Result<LabelledGraph<ExactScalar>, GraphError> {
    let syntax = |line: usize, msg: &str| GraphError::Syntax { line, msg: msg.to_string() };
    let mut n: Option<usize> = None;
    let mut labels: Vec<Option<Vec<ExactScalar>>> = Vec::new();
    let mut dim: Option<usize> = None;
    let mut edges = Vec::new();
    let vertex = |tok: &str, line: usize, n: usize| -> Result<usize, GraphError> {
        let id: usize = tok.parse().map_err(|_| syntax(line, &format!("bad vertex id {tok:?}")))?;
        if id == 0 || id > n {
            return Err(GraphError::OutOfRange { vertex: id, n });
        }
        Ok(id - 1)
    };
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let (kw, rest) = body.split_once(char::is_whitespace).unwrap_or((body, ""));
        let rest = rest.trim();
        match kw {
            "n" => {
                if n.is_some() {
                    return Err(syntax(line, "vertex count given twice"));
                }
                let count: usize = rest.parse().map_err(|_| syntax(line, "bad vertex count"))?;
                if count == 0 {
                    return Err(syntax(line, "vertex count must be positive"));
                }
                n = Some(count);
                labels = vec![None; count];
            }
            "v" => {
                let count = n.ok_or_else(|| syntax(line, "'n' must come first"))?;
                let (head, values) = rest.split_once(':').ok_or_else(|| syntax(line, "missing ':'"))?;
                let mut parts = head.split_whitespace();
                let (Some(id), Some(width), None) = (parts.next(), parts.next(), parts.next()) else {
                    return Err(syntax(line, "expected 'v <id> <width>: ...'"));
                };
                let v = vertex(id, line, count)?;
                let width: usize = width.parse().map_err(|_| syntax(line, "bad label width"))?;
                if width == 0 {
                    return Err(GraphError::EmptyLabel);
                }
                let row = values
                    .split(',')
                    .map(|t| parse_scalar(t.trim()))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| syntax(line, &e.to_string()))?;
                if row.len() != width {
                    return Err(GraphError::DimensionMismatch { vertex: v + 1, expected: width, found: row.len() });
                }
                match dim {
                    Some(d) if d != width => {
                        return Err(GraphError::DimensionMismatch { vertex: v + 1, expected: d, found: width })
                    }
                    _ => dim = Some(width),
                }
                if labels[v].is_some() {
                    return Err(GraphError::DuplicateVertex(v + 1));
                }
                labels[v] = Some(row);
            }
            "e" => {
                let count = n.ok_or_else(|| syntax(line, "'n' must come first"))?;
                let mut parts = rest.split_whitespace();
                let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
                    return Err(syntax(line, "expected 'e <id> <id>'"));
                };
                edges.push((vertex(a, line, count)?, vertex(b, line, count)?));
            }
            other => return Err(syntax(line, &format!("unknown directive {other:?}"))),
        }
    }
    let n = n.ok_or_else(|| syntax(text.lines().count().max(1), "missing 'n' line"))?;
    let rows = labels
        .into_iter()
        .enumerate()
        .map(|(v, r)| r.ok_or(GraphError::MissingLabel(v + 1)))
        .collect::<Result<Vec<_>, _>>()?;
    let dim = dim.expect("n > 0 and every vertex labelled");
    debug_assert_eq!(rows.len(), n);
    LabelledGraph::new(Labelling::new(rows, dim)?, &edges)
}
