//! `weaksync verify (<graph> | --random N COUNT SEED)`: run the
//! certificate suites. A graph that is not strongly connected is
//! condensed and every basic bicomponent of size >= 2 is checked.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use weaksync::gen::random_strongly_connected;
use weaksync::nalgebra::DVector;
use weaksync::{
    build_laplacian, condense, left_eigenvector_weights, q_rho, verify_h_inequality, Laplacian,
    WeightedDigraph,
};

use crate::failure::{with_path, Failure};

pub struct VerifyStats {
    pub components_checked: usize,
    pub components_skipped: usize,
    pub trials: usize,
    pub violations: Vec<String>,
}

fn check_component(
    label: &str,
    lap: &Laplacian,
    trials: usize,
    rng: &mut ChaCha8Rng,
    stats: &mut VerifyStats,
) {
    let alpha = match left_eigenvector_weights(lap) {
        Ok(a) => a,
        Err(e) => {
            stats.violations.push(format!("{label}: {e}"));
            return;
        }
    };
    let residual = (alpha.transpose() * lap.as_matrix()).norm();
    if residual > 1e-10 {
        stats
            .violations
            .push(format!("{label}: alpha'L residual {residual:.3e}"));
    }

    match verify_h_inequality(lap, &alpha) {
        Ok(cert) => {
            if !(cert.gamma > 0.0) {
                stats
                    .violations
                    .push(format!("{label}: gamma {:.3e} not positive", cert.gamma));
            }
            if cert.certificate_min_eig < -1e-9 {
                stats.violations.push(format!(
                    "{label}: certificate min eig {:.3e}",
                    cert.certificate_min_eig
                ));
            }
            println!(
                "{label}: alpha residual {residual:.2e}, gamma {:.4}, kernel {}, \
                 certificate min eig {:.2e}",
                cert.gamma, cert.kernel_dim, cert.certificate_min_eig
            );
        }
        Err(e) => {
            stats.violations.push(format!("{label}: {e}"));
            return;
        }
    }

    let n = lap.order();
    for _ in 0..trials {
        let rho = DVector::from_fn(n, |_, _| rng.random_range(0.1..10.0));
        let rho_up = &rho + DVector::from_fn(n, |_, _| rng.random_range(0.0..10.0));
        let z = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let (q, q_up) = match (q_rho(&rho, &alpha), q_rho(&rho_up, &alpha)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => {
                stats
                    .violations
                    .push(format!("{label}: Q_rho rejected positive input"));
                break;
            }
        };
        let v = (z.transpose() * &q * &z)[(0, 0)];
        let v_up = (z.transpose() * &q_up * &z)[(0, 0)];
        if v < v_up - 1e-10 {
            stats
                .violations
                .push(format!("{label}: Q_rho monotonicity {v:.6e} < {v_up:.6e}"));
        }
        let ones = DVector::from_element(n, 1.0);
        if (&q * &ones).amax() > 1e-12 {
            stats
                .violations
                .push(format!("{label}: Q_rho does not annihilate ones"));
        }
        stats.trials += 1;
    }
    stats.components_checked += 1;
}

fn check_graph(label: &str, graph: &WeightedDigraph, trials: usize, rng: &mut ChaCha8Rng, stats: &mut VerifyStats) {
    let d = condense(graph);
    let lap = build_laplacian(graph);
    for (i, comp) in d.basic_bicomponents().enumerate() {
        if comp.nodes.len() < 2 {
            println!("{label} component {i}: skipped (single node)");
            stats.components_skipped += 1;
            continue;
        }
        let block = d.basic_block(&lap, i);
        let sub = Laplacian::try_from_matrix(block)
            .expect("basic block is a Laplacian by construction");
        check_component(&format!("{label} component {i}"), &sub, trials, rng, stats);
    }
}

pub fn run_file(graph_path: &Path, trials: usize, seed: u64) -> Result<(), Failure> {
    let graph = WeightedDigraph::from_file(graph_path).map_err(|e| with_path(graph_path, e))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = VerifyStats {
        components_checked: 0,
        components_skipped: 0,
        trials: 0,
        violations: Vec::new(),
    };
    check_graph(&graph_path.display().to_string(), &graph, trials, &mut rng, &mut stats);
    summarize(stats)
}

pub fn run_random(n_max: usize, count: usize, seed: u64, trials: usize) -> Result<(), Failure> {
    if n_max < 2 {
        return Err(Failure::Input("--random needs N >= 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = VerifyStats {
        components_checked: 0,
        components_skipped: 0,
        trials: 0,
        violations: Vec::new(),
    };
    for i in 0..count {
        let n = rng.random_range(2..=n_max);
        let extra = rng.random_range(0..=n);
        let graph = random_strongly_connected(n, extra, &mut rng);
        check_graph(&format!("random[{i}] n={n}"), &graph, trials, &mut rng, &mut stats);
    }
    summarize(stats)
}

fn summarize(stats: VerifyStats) -> Result<(), Failure> {
    println!(
        "verify: {} components checked, {} skipped, {} Q_rho trials, {} violations",
        stats.components_checked,
        stats.components_skipped,
        stats.trials,
        stats.violations.len()
    );
    if stats.violations.is_empty() {
        Ok(())
    } else {
        for v in &stats.violations {
            eprintln!("violation: {v}");
        }
        Err(Failure::Violation(format!(
            "{} property violations",
            stats.violations.len()
        )))
    }
}
