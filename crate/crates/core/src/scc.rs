//! Strongly connected components (bicomponents) of a weighted digraph.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::graph::WeightedDigraph;

/// Computes the maximal strongly connected components of `g`.
///
/// The result order is canonical: a valid reverse-topological order of
/// the condensation DAG (components with no outgoing cross edges come
/// first), with incomparable components ordered by their smallest
/// contained node index. Nodes inside a component are sorted ascending.
pub fn strongly_connected_components(g: &WeightedDigraph) -> Vec<Vec<usize>> {
    let succ = g.successors();
    let comp_of = tarjan(g.node_count(), &succ);
    let comp_count = comp_of.iter().map(|&c| c + 1).max().unwrap_or(0);

    let mut components: Vec<Vec<usize>> = vec![Vec::new(); comp_count];
    for (node, &c) in comp_of.iter().enumerate() {
        components[c].push(node); // ascending: nodes visited in index order
    }

    // Canonical reverse-topological order: repeatedly emit, among the
    // components whose successors are all emitted, the one with the
    // smallest contained node index.
    let mut out_deg = vec![0usize; comp_count];
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); comp_count];
    for e in g.edges() {
        let (cu, cv) = (comp_of[e.source], comp_of[e.target]);
        if cu != cv {
            out_deg[cu] += 1;
            preds[cv].push(cu);
        }
    }

    let mut heap: BinaryHeap<Reverse<(usize, usize)>> = BinaryHeap::new();
    for c in 0..comp_count {
        if out_deg[c] == 0 {
            heap.push(Reverse((components[c][0], c)));
        }
    }
    let mut order = Vec::with_capacity(comp_count);
    while let Some(Reverse((_, c))) = heap.pop() {
        order.push(c);
        for &p in &preds[c] {
            out_deg[p] -= 1;
            if out_deg[p] == 0 {
                heap.push(Reverse((components[p][0], p)));
            }
        }
    }
    debug_assert_eq!(order.len(), comp_count);

    order
        .into_iter()
        .map(|c| std::mem::take(&mut components[c]))
        .collect()
}

/// Iterative Tarjan; returns the component id of every node.
fn tarjan(n: usize, succ: &[Vec<usize>]) -> Vec<usize> {
    const UNSET: usize = usize::MAX;
    let mut index = vec![UNSET; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut comp_of = vec![UNSET; n];
    let mut next_index = 0usize;
    let mut comp_count = 0usize;

    // DFS frame: (node, position in its successor list).
    let mut frames: Vec<(usize, usize)> = Vec::new();

    for root in 0..n {
        if index[root] != UNSET {
            continue;
        }
        frames.push((root, 0));
        while let Some(&mut (v, ref mut ei)) = frames.last_mut() {
            if *ei == 0 {
                index[v] = next_index;
                low[v] = next_index;
                next_index += 1;
                stack.push(v);
                on_stack[v] = true;
            }
            if let Some(&w) = succ[v].get(*ei) {
                *ei += 1;
                if index[w] == UNSET {
                    frames.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().expect("tarjan stack underflow");
                        on_stack[w] = false;
                        comp_of[w] = comp_count;
                        if w == v {
                            break;
                        }
                    }
                    comp_count += 1;
                }
                frames.pop();
                if let Some(&(parent, _)) = frames.last() {
                    low[parent] = low[parent].min(low[v]);
                }
            }
        }
    }
    comp_of
}
