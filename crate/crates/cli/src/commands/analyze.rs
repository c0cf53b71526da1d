//! `weaksync analyze <graph>`: bicomponent membership, basic flags,
//! spanning-tree verdict, and the mixing-coefficient matrix.

use std::path::Path;

use weaksync::{
    build_laplacian, compute_beta, condense, has_directed_spanning_tree, WeightedDigraph,
};

use crate::failure::{with_path, Failure};

pub fn run(graph_path: &Path) -> Result<(), Failure> {
    let graph = WeightedDigraph::from_file(graph_path).map_err(|e| with_path(graph_path, e))?;
    let lap = build_laplacian(&graph);
    let d = condense(&graph);
    let beta = compute_beta(&d, &lap)?;

    println!("graph: {}", graph_path.display());
    println!("nodes: {}", graph.node_count());
    println!("edges: {}", graph.edges().len());
    println!("bicomponents: {}", d.bicomponents().len());
    for (i, c) in d.bicomponents().iter().enumerate() {
        let kind = if c.basic { "basic    " } else { "non-basic" };
        let nodes: Vec<String> = c.nodes.iter().map(|n| n.to_string()).collect();
        println!(
            "  [{i}] {kind} size {:<3} nodes: {}",
            c.nodes.len(),
            nodes.join(" ")
        );
    }
    println!("basic bicomponents: {}", d.basic_count());
    println!(
        "directed spanning tree: {}",
        has_directed_spanning_tree(&d)
    );

    if beta.is_empty() {
        println!("beta matrix: empty (every node is in a basic bicomponent)");
    } else {
        println!(
            "beta matrix (rows: non-basic nodes, columns: {} basic bicomponents):",
            beta.basic_count()
        );
        for (r, &node) in beta.nodes().iter().enumerate() {
            let row: Vec<String> = (0..beta.basic_count())
                .map(|c| format!("{:.6}", beta.values()[(r, c)]))
                .collect();
            println!("  node {node:<3} : {}", row.join("  "));
        }
    }
    Ok(())
}
