//! Seeded random graph generators used by the verification suites.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::graph::{Edge, WeightedDigraph};

fn weight<R: Rng>(rng: &mut R) -> f64 {
    rng.random_range(0.2..=2.0)
}

/// Erdos-Renyi style digraph: every ordered pair becomes an edge with
/// probability `p`.
pub fn random_digraph<R: Rng>(n: usize, p: f64, rng: &mut R) -> WeightedDigraph {
    let mut edges = Vec::new();
    for s in 0..n {
        for t in 0..n {
            if s != t && rng.random_bool(p) {
                edges.push(Edge {
                    source: s,
                    target: t,
                    weight: weight(rng),
                });
            }
        }
    }
    WeightedDigraph::new(n, edges).expect("generated edges are valid")
}

/// Strongly connected digraph: a random Hamiltonian cycle plus `extra`
/// random chords.
pub fn random_strongly_connected<R: Rng>(n: usize, extra: usize, rng: &mut R) -> WeightedDigraph {
    assert!(n >= 2, "strong connectivity needs n >= 2");
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut present = vec![false; n * n];
    let mut edges = Vec::new();
    for i in 0..n {
        let s = order[i];
        let t = order[(i + 1) % n];
        present[s * n + t] = true;
        edges.push(Edge {
            source: s,
            target: t,
            weight: weight(rng),
        });
    }
    let mut added = 0;
    let mut attempts = 0;
    while added < extra && attempts < 20 * extra + 100 {
        attempts += 1;
        let s = rng.random_range(0..n);
        let t = rng.random_range(0..n);
        if s != t && !present[s * n + t] {
            present[s * n + t] = true;
            edges.push(Edge {
                source: s,
                target: t,
                weight: weight(rng),
            });
            added += 1;
        }
    }
    WeightedDigraph::new(n, edges).expect("generated edges are valid")
}

/// Digraph containing a directed spanning tree rooted at node 0: a random
/// parent tree plus `extra` random chords (extra edges cannot remove the
/// root's reachability).
pub fn random_spanning_tree_graph<R: Rng>(n: usize, extra: usize, rng: &mut R) -> WeightedDigraph {
    let mut present = vec![false; n * n];
    let mut edges = Vec::new();
    for node in 1..n {
        let parent = rng.random_range(0..node);
        present[parent * n + node] = true;
        edges.push(Edge {
            source: parent,
            target: node,
            weight: weight(rng),
        });
    }
    let mut added = 0;
    let mut attempts = 0;
    while added < extra && attempts < 20 * extra + 100 {
        attempts += 1;
        let s = rng.random_range(0..n);
        let t = rng.random_range(0..n);
        if s != t && !present[s * n + t] {
            present[s * n + t] = true;
            edges.push(Edge {
                source: s,
                target: t,
                weight: weight(rng),
            });
            added += 1;
        }
    }
    WeightedDigraph::new(n, edges).expect("generated edges are valid")
}

/// A condensation-DAG graph: nodes partitioned into cycles, with forward
/// inter-component edges. Component 0 is always basic; when there are at
/// least two components the last one always receives an incoming edge, so
/// non-basic nodes exist.
pub fn random_condensation_dag<R: Rng>(max_n: usize, rng: &mut R) -> WeightedDigraph {
    assert!(max_n >= 3);
    let n = rng.random_range(3..=max_n);

    // Partition 0..n into component size blocks.
    let mut sizes = Vec::new();
    let mut left = n;
    while left > 0 {
        let s = rng.random_range(1..=left.min(4));
        sizes.push(s);
        left -= s;
    }
    if sizes.len() == 1 && n >= 2 {
        // Force at least two components so non-basic structure exists.
        let s = sizes[0];
        sizes = vec![s - s / 2, s / 2];
        sizes.retain(|&v| v > 0);
    }

    let mut components: Vec<Vec<usize>> = Vec::new();
    let mut next = 0;
    for &s in &sizes {
        components.push((next..next + s).collect());
        next += s;
    }

    let mut edges = Vec::new();
    for comp in &components {
        if comp.len() >= 2 {
            for i in 0..comp.len() {
                edges.push(Edge {
                    source: comp[i],
                    target: comp[(i + 1) % comp.len()],
                    weight: weight(rng),
                });
            }
        }
    }

    // Forward inter-component edges; receiving components become
    // non-basic. The final component always receives one.
    let c = components.len();
    for j in 1..c {
        let incoming = if j == c - 1 { true } else { rng.random_bool(0.6) };
        if !incoming {
            continue;
        }
        let feeders = rng.random_range(1..=j.min(2));
        let mut used = Vec::new();
        for _ in 0..feeders {
            let from = rng.random_range(0..j);
            if used.contains(&from) {
                continue;
            }
            used.push(from);
            let s = components[from][rng.random_range(0..components[from].len())];
            let t = components[j][rng.random_range(0..components[j].len())];
            edges.push(Edge {
                source: s,
                target: t,
                weight: weight(rng),
            });
        }
    }

    // Deduplicate: cycle edges and inter-component edges never collide,
    // but two feeder draws can.
    edges.sort_by_key(|e| (e.source, e.target));
    edges.dedup_by_key(|e| (e.source, e.target));

    WeightedDigraph::new(n, edges).expect("generated edges are valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::condensation::condense;
    use crate::scc::strongly_connected_components;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn strongly_connected_generator_is_strongly_connected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let n = rng.random_range(2..=8);
            let g = random_strongly_connected(n, 4, &mut rng);
            assert_eq!(strongly_connected_components(&g).len(), 1);
        }
    }

    #[test]
    fn spanning_tree_generator_has_unique_basic_bicomponent() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let n = rng.random_range(2..=12);
            let g = random_spanning_tree_graph(n, 5, &mut rng);
            assert_eq!(condense(&g).basic_count(), 1);
        }
    }

    #[test]
    fn condensation_dag_generator_mixes_basic_and_non_basic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut saw_non_basic = 0;
        for _ in 0..50 {
            let g = random_condensation_dag(10, &mut rng);
            let d = condense(&g);
            assert!(d.basic_count() >= 1);
            if d.non_basic_node_count() > 0 {
                saw_non_basic += 1;
            }
        }
        assert!(saw_non_basic > 25, "only {saw_non_basic} graphs had non-basic nodes");
    }
}
