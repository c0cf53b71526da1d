//! Weighted directed communication graphs and their Laplacians.
//!
//! A positive weight `a_ij` encodes an edge from node `j` to node `i`:
//! information flows from the *source* `j` into the *target* `i`, so row
//! `i` of the adjacency matrix collects the weights of the edges arriving
//! at node `i`. The edge-list file format lists `source target weight`
//! per line; ingestion maps each line to `a[target][source]`.

use std::collections::HashSet;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// A single weighted directed edge `source -> target`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
    pub weight: f64,
}

/// A weighted digraph on nodes `0..node_count` with strictly positive
/// edge weights and no self-loops. An absent edge has weight zero and is
/// never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedDigraph {
    node_count: usize,
    edges: Vec<Edge>,
}

impl WeightedDigraph {
    /// Validates and canonicalizes an edge set. Edges are kept sorted by
    /// `(source, target)` so identical graphs compare equal regardless of
    /// construction order.
    pub fn new(node_count: usize, mut edges: Vec<Edge>) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::InvalidConfig(
                "graph must have at least one node".into(),
            ));
        }
        for e in &edges {
            if e.source >= node_count {
                return Err(Error::NodeOutOfRange {
                    line: 0,
                    node: e.source,
                    count: node_count,
                });
            }
            if e.target >= node_count {
                return Err(Error::NodeOutOfRange {
                    line: 0,
                    node: e.target,
                    count: node_count,
                });
            }
            if e.source == e.target {
                return Err(Error::SelfLoop {
                    line: 0,
                    node: e.source,
                });
            }
            if !(e.weight > 0.0) {
                return Err(Error::NonPositiveWeight {
                    line: 0,
                    weight: e.weight,
                });
            }
        }
        edges.sort_by_key(|e| (e.source, e.target));
        for w in edges.windows(2) {
            if w[0].source == w[1].source && w[0].target == w[1].target {
                return Err(Error::DuplicateEdge {
                    line: 0,
                    from: w[0].source,
                    to: w[0].target,
                });
            }
        }
        Ok(Self { node_count, edges })
    }

    /// Parses the edge-list document format: the first non-comment line is
    /// the node count, every following line is `source target weight`
    /// (whitespace separated, 0-based indices). `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut node_count: Option<usize> = None;
        let mut edges: Vec<(usize, Edge)> = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }

            match node_count {
                None => {
                    let n = line.parse::<usize>().map_err(|_| Error::Parse {
                        line: line_no,
                        message: format!("expected node count, found `{line}`"),
                    })?;
                    if n == 0 {
                        return Err(Error::Parse {
                            line: line_no,
                            message: "node count must be positive".into(),
                        });
                    }
                    node_count = Some(n);
                }
                Some(n) => {
                    let fields: Vec<&str> = line.split_whitespace().collect();
                    if fields.len() != 3 {
                        return Err(Error::Parse {
                            line: line_no,
                            message: format!(
                                "expected `source target weight`, found {} fields",
                                fields.len()
                            ),
                        });
                    }
                    let source = fields[0].parse::<usize>().map_err(|_| Error::Parse {
                        line: line_no,
                        message: format!("invalid source index `{}`", fields[0]),
                    })?;
                    let target = fields[1].parse::<usize>().map_err(|_| Error::Parse {
                        line: line_no,
                        message: format!("invalid target index `{}`", fields[1]),
                    })?;
                    let weight = fields[2].parse::<f64>().map_err(|_| Error::Parse {
                        line: line_no,
                        message: format!("invalid weight `{}`", fields[2]),
                    })?;
                    if source >= n {
                        return Err(Error::NodeOutOfRange {
                            line: line_no,
                            node: source,
                            count: n,
                        });
                    }
                    if target >= n {
                        return Err(Error::NodeOutOfRange {
                            line: line_no,
                            node: target,
                            count: n,
                        });
                    }
                    if source == target {
                        return Err(Error::SelfLoop {
                            line: line_no,
                            node: source,
                        });
                    }
                    if !(weight > 0.0) {
                        return Err(Error::NonPositiveWeight {
                            line: line_no,
                            weight,
                        });
                    }
                    edges.push((
                        line_no,
                        Edge {
                            source,
                            target,
                            weight,
                        },
                    ));
                }
            }
        }

        let node_count = node_count.ok_or(Error::Parse {
            line: text.lines().count().max(1),
            message: "document contains no node count".into(),
        })?;

        let mut seen = HashSet::new();
        for (line, e) in &edges {
            if !seen.insert((e.source, e.target)) {
                return Err(Error::DuplicateEdge {
                    line: *line,
                    from: e.source,
                    to: e.target,
                });
            }
        }

        Self::new(node_count, edges.into_iter().map(|(_, e)| e).collect())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Dense adjacency matrix with `a[(target, source)] = weight`.
    pub fn adjacency(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.node_count, self.node_count);
        for e in &self.edges {
            a[(e.target, e.source)] = e.weight;
        }
        a
    }

    /// Successor lists following edge direction (source -> target).
    pub fn successors(&self) -> Vec<Vec<usize>> {
        let mut succ = vec![Vec::new(); self.node_count];
        for e in &self.edges {
            succ[e.source].push(e.target);
        }
        succ
    }

    /// Per-node list of incoming `(source, weight)` pairs.
    pub fn in_edges(&self) -> Vec<Vec<(usize, f64)>> {
        let mut inc = vec![Vec::new(); self.node_count];
        for e in &self.edges {
            inc[e.target].push((e.source, e.weight));
        }
        inc
    }

    /// Weighted in-degree of every node, `d_i = sum_j a_ij`.
    pub fn in_degrees(&self) -> Vec<f64> {
        let mut deg = vec![0.0; self.node_count];
        for e in &self.edges {
            deg[e.target] += e.weight;
        }
        deg
    }

    /// Relabels every node through `perm` (`new id = perm[old id]`).
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.node_count {
            return Err(Error::Dimension(format!(
                "permutation has {} entries for {} nodes",
                perm.len(),
                self.node_count
            )));
        }
        let edges = self
            .edges
            .iter()
            .map(|e| Edge {
                source: perm[e.source],
                target: perm[e.target],
                weight: e.weight,
            })
            .collect();
        Self::new(self.node_count, edges)
    }
}

/// Dense Laplacian `L` of a weighted digraph: `l_ii = sum_k a_ik`,
/// `l_ij = -a_ij` off the diagonal. Row sums are zero by construction and
/// the all-ones vector spans part of the right null space.
#[derive(Debug, Clone, PartialEq)]
pub struct Laplacian {
    matrix: DMatrix<f64>,
}

impl Laplacian {
    pub fn from_graph(g: &WeightedDigraph) -> Self {
        let n = g.node_count();
        let mut m = DMatrix::zeros(n, n);
        for e in g.edges() {
            m[(e.target, e.source)] = -e.weight;
            m[(e.target, e.target)] += e.weight;
        }
        Self { matrix: m }
    }

    /// Wraps an existing matrix, verifying the Laplacian sign pattern and
    /// zero row sums (tolerance `1e-12 * max|l_ij|`).
    pub fn try_from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::Dimension(format!(
                "Laplacian must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let scale = matrix.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tol = 1e-12 * scale.max(1.0);
        for i in 0..matrix.nrows() {
            let mut row_sum = 0.0;
            for j in 0..matrix.ncols() {
                let v = matrix[(i, j)];
                row_sum += v;
                if i == j && v < 0.0 {
                    return Err(Error::InvalidConfig(format!(
                        "negative diagonal entry l[{i},{i}] = {v}"
                    )));
                }
                if i != j && v > 0.0 {
                    return Err(Error::InvalidConfig(format!(
                        "positive off-diagonal entry l[{i},{j}] = {v}"
                    )));
                }
            }
            if row_sum.abs() > tol {
                return Err(Error::InvalidConfig(format!(
                    "row {i} sums to {row_sum:e}, expected 0"
                )));
            }
        }
        Ok(Self { matrix })
    }

    pub fn order(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    /// Reconstructs the digraph encoded by the off-diagonal entries.
    pub fn induced_graph(&self) -> WeightedDigraph {
        let n = self.order();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j && self.matrix[(i, j)] != 0.0 {
                    edges.push(Edge {
                        source: j,
                        target: i,
                        weight: -self.matrix[(i, j)],
                    });
                }
            }
        }
        WeightedDigraph::new(n, edges).expect("off-diagonal pattern is a valid graph")
    }
}

/// Builds the Laplacian matrix of `g`.
pub fn build_laplacian(g: &WeightedDigraph) -> Laplacian {
    Laplacian::from_graph(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn parse_basic_document() {
        let g = WeightedDigraph::parse("3\n0 1 1.0\n1 0 1.0").unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edges().len(), 2);
    }

    #[test]
    fn parse_comments_and_blank_lines() {
        let g = WeightedDigraph::parse("# header\n\n2  # nodes\n0 1 2.5 # edge\n").unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edges(), &[Edge { source: 0, target: 1, weight: 2.5 }]);
    }

    #[test]
    fn parse_rejects_self_loop() {
        match WeightedDigraph::parse("2\n0 0 1.0") {
            Err(Error::SelfLoop { line: 2, node: 0 }) => {}
            other => panic!("expected self-loop error, got {other:?}"),
        }
    }

    #[test]
    fn parse_rejects_nonpositive_weight() {
        match WeightedDigraph::parse("2\n0 1 -2.0") {
            Err(Error::NonPositiveWeight { line: 2, .. }) => {}
            other => panic!("expected weight error, got {other:?}"),
        }
        assert!(WeightedDigraph::parse("2\n0 1 0.0").is_err());
    }

    #[test]
    fn parse_rejects_duplicate_edge() {
        match WeightedDigraph::parse("3\n0 1 1.0\n0 1 2.0") {
            Err(Error::DuplicateEdge {
                line: 3,
                from: 0,
                to: 1,
            }) => {}
            other => panic!("expected duplicate error, got {other:?}"),
        }
    }

    #[test]
    fn parse_rejects_out_of_range_and_empty() {
        assert!(matches!(
            WeightedDigraph::parse("2\n0 5 1.0"),
            Err(Error::NodeOutOfRange { node: 5, .. })
        ));
        assert!(matches!(
            WeightedDigraph::parse("# nothing\n"),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn laplacian_of_bidirectional_pair() {
        // a_ij > 0 encodes edge (j, i): row i sums incoming weights.
        let g = WeightedDigraph::parse("2\n0 1 1.0\n1 0 1.0").unwrap();
        let l = build_laplacian(&g);
        let expected = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        assert_abs_diff_eq!(l.as_matrix(), &expected, epsilon = 0.0);
    }

    #[test]
    fn laplacian_of_edgeless_graph_is_zero() {
        let g = WeightedDigraph::new(3, vec![]).unwrap();
        let l = build_laplacian(&g);
        assert_eq!(l.as_matrix(), &DMatrix::zeros(3, 3));
    }

    #[test]
    fn laplacian_of_three_cycle() {
        // Hand evaluation of the definition on the unit 3-cycle
        // 0 -> 1 -> 2 -> 0: each row has diagonal 1 and a single -1 for
        // its incoming neighbour.
        let g = WeightedDigraph::parse("3\n0 1 1\n1 2 1\n2 0 1").unwrap();
        let l = build_laplacian(&g);
        let expected = DMatrix::from_row_slice(
            3,
            3,
            &[
                1.0, 0.0, -1.0, //
                -1.0, 1.0, 0.0, //
                0.0, -1.0, 1.0,
            ],
        );
        assert_abs_diff_eq!(l.as_matrix(), &expected, epsilon = 0.0);
    }

    #[test]
    fn laplacian_row_sums_vanish() {
        let g = WeightedDigraph::parse("4\n0 1 0.3\n2 1 0.7\n3 1 1.9\n1 2 2.2\n0 3 0.1").unwrap();
        let l = build_laplacian(&g);
        let scale = l.as_matrix().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..4 {
            let s: f64 = l.as_matrix().row(i).iter().sum();
            assert!(s.abs() <= 1e-12 * scale, "row {i}: {s:e}");
        }
        assert!(Laplacian::try_from_matrix(l.as_matrix().clone()).is_ok());
    }

    #[test]
    fn try_from_matrix_validates_pattern() {
        let ok = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]);
        assert!(Laplacian::try_from_matrix(ok).is_ok());
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, -1.0, -1.0]);
        assert!(Laplacian::try_from_matrix(bad).is_err());
    }

    #[test]
    fn induced_graph_round_trips() {
        let g = WeightedDigraph::parse("3\n0 1 1.5\n1 2 0.5\n2 0 2.0").unwrap();
        let l = build_laplacian(&g);
        assert_eq!(l.induced_graph(), g);
    }
}
