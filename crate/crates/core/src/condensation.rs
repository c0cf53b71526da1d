//! Bicomponent condensation and the canonical block form of the Laplacian.
//!
//! Permuting non-basic nodes to the front and basic bicomponents to the
//! trailing diagonal puts the Laplacian into the block upper-triangular
//! shape
//!
//! ```text
//!     [ L_0  L_01 ... L_0k ]
//! L = [  0   L_1       0   ]
//!     [  :        ...      ]
//!     [  0    0  ...   L_k ]
//! ```
//!
//! where each `L_i` (i >= 1) is the Laplacian of a basic bicomponent
//! (simple zero eigenvalue) and the grounded block `L_0` has all its
//! eigenvalues in the open right half-plane. The rows of a basic block
//! are zero outside their own diagonal block because a basic bicomponent
//! receives no edges from the rest of the graph.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::{Laplacian, WeightedDigraph};
use crate::scc::strongly_connected_components;

/// One bicomponent with its basic flag. `nodes` holds original node ids,
/// sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bicomponent {
    pub nodes: Vec<usize>,
    pub basic: bool,
}

/// The bicomponent structure of a graph together with the node
/// permutation that exposes the canonical block form.
#[derive(Debug, Clone, PartialEq)]
pub struct CondensationDecomposition {
    node_count: usize,
    /// Layout order: non-basic bicomponents first, then basic ones, each
    /// group ordered by smallest contained node index.
    components: Vec<Bicomponent>,
    basic_count: usize,
    non_basic_node_count: usize,
    /// `permutation[new] = old`: position `new` of the permuted Laplacian
    /// corresponds to original node `permutation[new]`.
    permutation: Vec<usize>,
    /// `position_of[old] = new`.
    position_of: Vec<usize>,
    /// Start offset of each component's diagonal block, aligned with
    /// `components`; a trailing sentinel holds `node_count`.
    block_offsets: Vec<usize>,
}

impl CondensationDecomposition {
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// All bicomponents in block-layout order (non-basic, then basic).
    pub fn bicomponents(&self) -> &[Bicomponent] {
        &self.components
    }

    /// Number of basic bicomponents, `k`.
    pub fn basic_count(&self) -> usize {
        self.basic_count
    }

    /// Basic bicomponents in layout order (`L_1 ... L_k`).
    pub fn basic_bicomponents(&self) -> impl Iterator<Item = &Bicomponent> {
        self.components.iter().filter(|c| c.basic)
    }

    /// Original ids of the nodes covered by `L_0`, in layout order.
    pub fn non_basic_nodes(&self) -> &[usize] {
        &self.permutation[..self.non_basic_node_count]
    }

    pub fn non_basic_node_count(&self) -> usize {
        self.non_basic_node_count
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    pub fn is_basic_node(&self, node: usize) -> bool {
        self.position_of[node] >= self.non_basic_node_count
    }

    /// Laplacian of `g` permuted into the canonical block form.
    pub fn permuted_laplacian(&self, lap: &Laplacian) -> DMatrix<f64> {
        let n = self.node_count;
        let m = lap.as_matrix();
        DMatrix::from_fn(n, n, |i, j| m[(self.permutation[i], self.permutation[j])])
    }

    /// The grounded block `L_0` (may be 0x0 when every node is basic).
    pub fn l0_block(&self, lap: &Laplacian) -> DMatrix<f64> {
        let p = self.permuted_laplacian(lap);
        let s = self.non_basic_node_count;
        p.view((0, 0), (s, s)).into_owned()
    }

    /// Coupling block `L_0i` from the non-basic rows into basic
    /// bicomponent `i` (0-based among basic components).
    pub fn coupling_block(&self, lap: &Laplacian, i: usize) -> DMatrix<f64> {
        let (start, len) = self.basic_block_range(i);
        let p = self.permuted_laplacian(lap);
        p.view((0, start), (self.non_basic_node_count, len))
            .into_owned()
    }

    /// Diagonal block `L_{i+1}` of basic bicomponent `i`; equals the
    /// Laplacian of the induced subgraph because basic bicomponents have
    /// no incoming edges.
    pub fn basic_block(&self, lap: &Laplacian, i: usize) -> DMatrix<f64> {
        let (start, len) = self.basic_block_range(i);
        let p = self.permuted_laplacian(lap);
        p.view((start, start), (len, len)).into_owned()
    }

    fn basic_block_range(&self, i: usize) -> (usize, usize) {
        let comp_idx = self.components.len() - self.basic_count + i;
        let start = self.block_offsets[comp_idx];
        let len = self.block_offsets[comp_idx + 1] - start;
        (start, len)
    }
}

/// Computes the condensation of `g`: bicomponents, basic flags, and the
/// canonical permutation.
pub fn condense(g: &WeightedDigraph) -> CondensationDecomposition {
    let sccs = strongly_connected_components(g);
    let n = g.node_count();

    let mut comp_of = vec![usize::MAX; n];
    for (idx, comp) in sccs.iter().enumerate() {
        for &v in comp {
            comp_of[v] = idx;
        }
    }

    // Basic <=> no incoming edge from outside the component.
    let mut basic = vec![true; sccs.len()];
    for e in g.edges() {
        if comp_of[e.source] != comp_of[e.target] {
            basic[comp_of[e.target]] = false;
        }
    }

    let mut components: Vec<Bicomponent> = sccs
        .into_iter()
        .enumerate()
        .map(|(idx, nodes)| Bicomponent {
            nodes,
            basic: basic[idx],
        })
        .collect();
    // Non-basic first, then basic; each group by smallest contained node.
    components.sort_by_key(|c| (c.basic, c.nodes[0]));

    let basic_count = components.iter().filter(|c| c.basic).count();
    let mut permutation = Vec::with_capacity(n);
    let mut block_offsets = Vec::with_capacity(components.len() + 1);
    for c in &components {
        block_offsets.push(permutation.len());
        permutation.extend_from_slice(&c.nodes);
    }
    block_offsets.push(n);

    let non_basic_node_count = components
        .iter()
        .filter(|c| !c.basic)
        .map(|c| c.nodes.len())
        .sum();

    let mut position_of = vec![0usize; n];
    for (new, &old) in permutation.iter().enumerate() {
        position_of[old] = new;
    }

    CondensationDecomposition {
        node_count: n,
        components,
        basic_count,
        non_basic_node_count,
        permutation,
        position_of,
        block_offsets,
    }
}

/// A graph contains a directed spanning tree iff it has exactly one
/// basic bicomponent.
pub fn has_directed_spanning_tree(d: &CondensationDecomposition) -> bool {
    d.basic_count() == 1
}

/// Asymptotic mixing coefficients of the non-basic nodes.
///
/// Row `j` (a non-basic node) holds the convex-combination weights
/// `beta_{j,i}` tying node `j`'s limit trajectory to the limits of the
/// `k` basic bicomponents. The rows are the entries of `-L_0^{-1} L_0i 1`
/// mapped back to original node ids; they are nonnegative and sum to one,
/// and depend only on the graph.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaMatrix {
    nodes: Vec<usize>,
    values: DMatrix<f64>,
}

impl BetaMatrix {
    /// Non-basic node ids in ascending order, one per row.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn basic_count(&self) -> usize {
        self.values.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Rows-by-k matrix of coefficients, aligned with `nodes()`.
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    /// Coefficient row of a specific non-basic node.
    pub fn row_for_node(&self, node: usize) -> Option<Vec<f64>> {
        let r = self.nodes.iter().position(|&v| v == node)?;
        Some(self.values.row(r).iter().copied().collect())
    }
}

/// Computes the beta coefficients by a dense LU solve against the
/// grounded block: column `i` solves `L_0 x = -L_0i 1`.
pub fn compute_beta(d: &CondensationDecomposition, lap: &Laplacian) -> Result<BetaMatrix> {
    if lap.order() != d.node_count() {
        return Err(Error::Dimension(format!(
            "Laplacian order {} does not match decomposition on {} nodes",
            lap.order(),
            d.node_count()
        )));
    }
    let s = d.non_basic_node_count();
    let k = d.basic_count();
    if s == 0 {
        return Ok(BetaMatrix {
            nodes: Vec::new(),
            values: DMatrix::zeros(0, k),
        });
    }

    let mut rhs = DMatrix::zeros(s, k);
    for i in 0..k {
        let coupling = d.coupling_block(lap, i);
        for r in 0..s {
            rhs[(r, i)] = -coupling.row(r).iter().sum::<f64>();
        }
    }

    let l0 = d.l0_block(lap);
    let lu = l0.lu();
    let mut solved = lu.solve(&rhs).ok_or_else(|| {
        Error::Singular(
            "grounded block L_0 is singular, contradicting the basic/non-basic split".into(),
        )
    })?;

    // The coefficients are nonnegative by the M-matrix structure of L_0;
    // anything beyond rounding noise signals a broken decomposition.
    for v in solved.iter_mut() {
        if *v < -1e-9 {
            return Err(Error::Singular(format!(
                "negative mixing coefficient {v:e} from the grounded solve"
            )));
        }
        if *v <= 0.0 {
            *v = 0.0;
        }
    }

    // Reorder rows by ascending original node id.
    let mut order: Vec<usize> = (0..s).collect();
    let layout = d.non_basic_nodes();
    order.sort_by_key(|&r| layout[r]);
    let nodes: Vec<usize> = order.iter().map(|&r| layout[r]).collect();
    let values = DMatrix::from_fn(s, k, |r, c| solved[(order[r], c)]);

    Ok(BetaMatrix { nodes, values })
}
