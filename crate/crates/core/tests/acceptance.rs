//! Acceptance suite: one test per shipped claim, each printing a single
//! pass/fail line. Run with `cargo test --test acceptance -- --nocapture`
//! to see the lines.

use std::collections::BTreeSet;
use std::path::Path;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use weaksync::analysis::BetaCheckOutcome;
use weaksync::gen::{random_condensation_dag, random_digraph, random_strongly_connected};
use weaksync::{
    build_laplacian, check_beta_limits, compute_beta, condense, left_eigenvector_weights, q_rho,
    simulate, solve_care, strongly_connected_components, triple_integrator, verify_h_inequality,
    AgentModel, AnalysisSettings, InitialStates, ScenarioConfig, SimulationResult, SyncReport,
    WeightedDigraph,
};

fn conclude(criterion: &str, checks: &[(&str, bool)]) {
    let failed: Vec<&str> = checks
        .iter()
        .filter(|(_, ok)| !ok)
        .map(|(name, _)| *name)
        .collect();
    if failed.is_empty() {
        println!("[PASS] {criterion}");
    } else {
        println!("[FAIL] {criterion}: {}", failed.join(", "));
        panic!("{criterion} failed: {}", failed.join(", "));
    }
}

fn scenario_path(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

fn load_graph(name: &str) -> WeightedDigraph {
    WeightedDigraph::from_file(&scenario_path(name)).expect("scenario graph loads")
}

fn run_scenario(graph: &WeightedDigraph, seed: u64, t_final: f64, dt: f64) -> SimulationResult {
    let mut cfg = ScenarioConfig::new(graph.clone(), triple_integrator());
    cfg.initial = InitialStates::Random { seed, range: 1.0 };
    cfg.t_final = t_final;
    cfg.sample_interval = dt;
    simulate(&cfg).expect("scenario integrates")
}

// ---------------------------------------------------------------------
// Criterion 1: Riccati reproduction for the triple-integrator model.
// ---------------------------------------------------------------------

#[test]
fn criterion_1_riccati_reproduction() {
    let started = Instant::now();
    let model = triple_integrator();
    let sol = solve_care(&model).expect("CARE solves");
    let elapsed = started.elapsed();

    let printed = DMatrix::from_row_slice(
        3,
        3,
        &[2.41, 2.41, 1.0, 2.41, 4.82, 2.41, 1.0, 2.41, 2.41],
    );
    let entrywise = sol
        .p()
        .iter()
        .zip(printed.iter())
        .all(|(a, b)| (a - b).abs() <= 0.01);

    let closed = model.a() - model.b() * model.b().transpose() * sol.p();
    let hurwitz = closed
        .complex_eigenvalues()
        .iter()
        .all(|l| l.re < 0.0);

    conclude(
        "criterion 1: Riccati reproduction (printed P, residual, Hurwitz, < 1 s)",
        &[
            ("entrywise match within 0.01", entrywise),
            ("residual <= 1e-9 * n", sol.residual_norm() <= 1e-9 * 3.0),
            ("closed loop Hurwitz", hurwitz),
            ("runtime < 1 s", elapsed < Duration::from_secs(1)),
        ],
    );
}

// ---------------------------------------------------------------------
// Criterion 2: spanning-tree synchronization on the 20-node network.
// ---------------------------------------------------------------------

fn criterion_2_run() -> (SyncReport, Duration) {
    let graph = load_graph("net20_tree.edges");
    assert!(weaksync::has_directed_spanning_tree(&condense(&graph)));
    let started = Instant::now();
    let result = run_scenario(&graph, 7, 50.0, 0.1);
    let elapsed = started.elapsed();
    let report = SyncReport::build(&result, &graph, &AnalysisSettings::default()).unwrap();
    (report, elapsed)
}

#[test]
fn criterion_2_spanning_tree_synchronization() {
    let (report, elapsed) = criterion_2_run();
    conclude(
        "criterion 2: 20-node spanning tree synchronizes by t = 50",
        &[
            (
                "trailing max |zeta| <= 1e-3",
                report.network_stable.passed,
            ),
            (
                "trailing max disagreement <= 1e-2",
                report.global_sync.passed,
            ),
            (
                "rho growth <= 1e-3 * (1 + rho)",
                report.rho_bounded.passed,
            ),
            ("runtime < 30 s", elapsed < Duration::from_secs(30)),
        ],
    );
}

// ---------------------------------------------------------------------
// Criterion 3: weak synchronization without a spanning tree.
// ---------------------------------------------------------------------

fn criterion_3_run() -> (SyncReport, Duration, Vec<usize>, usize) {
    let graph = load_graph("net16_weak.edges");
    let d = condense(&graph);
    let basic_sizes: Vec<usize> = {
        let mut v: Vec<usize> = d.basic_bicomponents().map(|c| c.nodes.len()).collect();
        v.sort_unstable();
        v
    };
    let non_basic = d.bicomponents().iter().filter(|c| !c.basic).count();
    let started = Instant::now();
    let result = run_scenario(&graph, 11, 60.0, 0.1);
    let elapsed = started.elapsed();
    let report = SyncReport::build(&result, &graph, &AnalysisSettings::default()).unwrap();
    (report, elapsed, basic_sizes, non_basic)
}

#[test]
fn criterion_3_weak_synchronization_without_tree() {
    let (report, elapsed, basic_sizes, non_basic) = criterion_3_run();
    let beta_ok = matches!(
        &report.beta_check,
        BetaCheckOutcome::Checked { agents } if agents.iter().all(|a| a.passed)
    );
    conclude(
        "criterion 3: 16-node network weak-synchronizes (3 basic bicomponents)",
        &[
            ("basic bicomponent sizes are {2, 4, 6}", basic_sizes == vec![2, 4, 6]),
            ("two non-basic bicomponents", non_basic == 2),
            ("network stability passes", report.network_stable.passed),
            (
                "global sync fails with disagreement > 0.1",
                !report.global_sync.passed
                    && report.global_sync.trailing_max_disagreement > 0.1,
            ),
            (
                "every basic bicomponent intra-syncs at 1e-2",
                report.per_bicomponent_sync.iter().all(|c| c.passed),
            ),
            ("every non-basic agent matches its beta prediction", beta_ok),
            ("runtime < 30 s", elapsed < Duration::from_secs(30)),
        ],
    );
}

// ---------------------------------------------------------------------
// Criterion 4: analytic beta against simulated limits on random
// condensation-DAG graphs with integrator agents.
// ---------------------------------------------------------------------

fn criterion_4_runs() -> (usize, usize, f64, Vec<SyncReport>) {
    let model = AgentModel::new(
        DMatrix::from_row_slice(1, 1, &[0.0]),
        DMatrix::from_row_slice(1, 1, &[1.0]),
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let settings = AnalysisSettings {
        beta_tol: 1e-3,
        ..Default::default()
    };

    let mut graphs_checked = 0;
    let mut agents_checked = 0;
    let mut worst = 0.0f64;
    let mut reports = Vec::new();
    while graphs_checked < 50 {
        let graph = random_condensation_dag(10, &mut rng);
        let d = condense(&graph);
        if d.non_basic_node_count() == 0 {
            continue;
        }
        // Weak weights with small realized offsets give arbitrarily slow
        // adaptation, so extend the horizon until the trailing signals are
        // deep in the tail (well past the reporting tolerance, since the
        // state's distance to its limit can exceed |zeta|).
        let mut result = None;
        for t_final in [150.0, 600.0, 2400.0, 9600.0] {
            let mut cfg = ScenarioConfig::new(graph.clone(), model.clone());
            cfg.initial = InitialStates::Random {
                seed: 1000 + graphs_checked as u64,
                range: 1.0,
            };
            cfg.t_final = t_final;
            cfg.sample_interval = t_final / 1500.0;
            let r = simulate(&cfg).expect("integrator scenario runs");
            let settled =
                weaksync::check_network_stability(&r, 1e-5, settings.window_fraction)
                    .unwrap()
                    .passed;
            result = Some(r);
            if settled {
                break;
            }
        }
        let result = result.unwrap();

        let beta = compute_beta(&d, &build_laplacian(&graph)).unwrap();
        let distances = check_beta_limits(&result, &d, &beta, &settings)
            .expect("prerequisites hold for integrator consensus");
        for ev in &distances {
            worst = worst.max(ev.distance);
            assert!(
                ev.passed,
                "graph {graphs_checked}, node {}: distance {:.3e}",
                ev.node, ev.distance
            );
            agents_checked += 1;
        }
        reports.push(SyncReport::build(&result, &graph, &AnalysisSettings::default()).unwrap());
        graphs_checked += 1;
    }
    (graphs_checked, agents_checked, worst, reports)
}

#[test]
fn criterion_4_beta_analytic_vs_simulated() {
    let (graphs, agents, worst, _) = criterion_4_runs();
    conclude(
        "criterion 4: analytic beta matches simulated limits on 50 random graphs",
        &[
            ("50 graphs simulated", graphs == 50),
            ("at least one non-basic agent per graph", agents >= 50),
            ("worst distance <= 1e-3", worst <= 1e-3),
        ],
    );
}

// ---------------------------------------------------------------------
// Criterion 5: certificate suites.
// ---------------------------------------------------------------------

#[test]
fn criterion_5_certificate_suites() {
    // (a) 100 random strongly connected graphs.
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut alpha_ok = true;
    let mut psd_ok = true;
    let mut kernel_ok = true;
    let mut gamma_ok = true;
    let mut certificate_ok = true;
    for _ in 0..100 {
        let n = rng.random_range(2..=8);
        let extra = rng.random_range(0..=n);
        let g = random_strongly_connected(n, extra, &mut rng);
        let lap = build_laplacian(&g);
        let alpha = left_eigenvector_weights(&lap).unwrap();
        alpha_ok &= (alpha.transpose() * lap.as_matrix()).norm() <= 1e-10;
        match verify_h_inequality(&lap, &alpha) {
            Ok(cert) => {
                psd_ok &= cert.min_eig_s >= -1e-9;
                kernel_ok &= cert.kernel_dim == 1;
                gamma_ok &= cert.gamma > 0.0;
                certificate_ok &= cert.certificate_min_eig >= -1e-9;
            }
            Err(_) => {
                kernel_ok = false;
            }
        }
    }

    // (b) + (c) 500 monotonicity trials with Q_rho annihilating ones.
    let mut monotone_ok = true;
    let mut annihilates_ok = true;
    for _ in 0..500 {
        let n = rng.random_range(2..=8);
        let rho = DVector::from_fn(n, |_, _| rng.random_range(0.1..10.0));
        let rho_up = &rho + DVector::from_fn(n, |_, _| rng.random_range(0.0..10.0));
        let alpha = DVector::from_fn(n, |_, _| rng.random_range(0.1..2.0));
        let z = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let q = q_rho(&rho, &alpha).unwrap();
        let q_up = q_rho(&rho_up, &alpha).unwrap();
        let v = (z.transpose() * &q * &z)[(0, 0)];
        let v_up = (z.transpose() * &q_up * &z)[(0, 0)];
        monotone_ok &= v >= v_up - 1e-10;
        let ones = DVector::from_element(n, 1.0);
        annihilates_ok &= (&q * &ones).amax() <= 1e-12 && (&q_up * &ones).amax() <= 1e-12;
    }

    conclude(
        "criterion 5: certificate suites (alpha residual, H-inequality, Q_rho)",
        &[
            ("alpha' L residual <= 1e-10 on 100 graphs", alpha_ok),
            ("HL + L'H PSD", psd_ok),
            ("kernel is 1-dimensional", kernel_ok),
            ("gamma > 0", gamma_ok),
            ("certificate min eig >= -1e-9", certificate_ok),
            ("500 monotonicity trials", monotone_ok),
            ("Q_rho annihilates the ones vector at 1e-12", annihilates_ok),
        ],
    );
}

// ---------------------------------------------------------------------
// Criterion 6: structural oracles on 200 random graphs.
// ---------------------------------------------------------------------

fn closure_sccs(g: &WeightedDigraph) -> BTreeSet<BTreeSet<usize>> {
    let n = g.node_count();
    let mut reach = vec![vec![false; n]; n];
    for i in 0..n {
        reach[i][i] = true;
    }
    for e in g.edges() {
        reach[e.source][e.target] = true;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if reach[i][k] && reach[k][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| reach[i][j] && reach[j][i])
                .collect::<BTreeSet<usize>>()
        })
        .collect()
}

#[test]
fn criterion_6_structural_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut scc_ok = true;
    let mut multiplicity_ok = true;
    for _ in 0..200 {
        let n = rng.random_range(2..=8);
        let p = rng.random_range(0.05..0.5);
        let g = random_digraph(n, p, &mut rng);

        let got: BTreeSet<BTreeSet<usize>> = strongly_connected_components(&g)
            .into_iter()
            .map(|c| c.into_iter().collect())
            .collect();
        scc_ok &= got == closure_sccs(&g);

        let zeros = build_laplacian(&g)
            .as_matrix()
            .complex_eigenvalues()
            .iter()
            .filter(|l| l.norm() < 1e-8)
            .count();
        multiplicity_ok &= condense(&g).basic_count() == zeros;
    }
    conclude(
        "criterion 6: structural oracles on 200 random graphs",
        &[
            ("SCCs equal reachability-closure oracle", scc_ok),
            (
                "basic count equals zero-eigenvalue multiplicity",
                multiplicity_ok,
            ),
        ],
    );
}

// ---------------------------------------------------------------------
// Criterion 7: the synchronization-implies-stability audit over every
// report produced by criteria 2-4.
// ---------------------------------------------------------------------

#[test]
fn criterion_7_sync_implies_stability_audit() {
    let mut reports = Vec::new();
    reports.push(criterion_2_run().0);
    reports.push(criterion_3_run().0);
    reports.extend(criterion_4_runs().3);

    let consistent = reports.iter().all(|r| r.lemma1_consistent);
    let count = reports.len();
    conclude(
        "criterion 7: no report shows global sync without network stability",
        &[
            ("at least 52 reports audited", count >= 52),
            ("every report consistent", consistent),
        ],
    );
}

// ---------------------------------------------------------------------
// Criterion 8: full-scale 60-node replication, qualitative.
// ---------------------------------------------------------------------

#[test]
fn criterion_8_full_scale_replication() {
    let tree = load_graph("net60_tree.edges");
    let broken = load_graph("net60_broken.edges");

    let d_tree = condense(&tree);
    let d_broken = condense(&broken);
    let mut broken_sizes: Vec<usize> = d_broken
        .basic_bicomponents()
        .map(|c| c.nodes.len())
        .collect();
    broken_sizes.sort_unstable();

    let r_tree = run_scenario(&tree, 21, 100.0, 0.2);
    let r_broken = run_scenario(&broken, 21, 100.0, 0.2);
    let settings = AnalysisSettings::default();
    let rep_tree = SyncReport::build(&r_tree, &tree, &settings).unwrap();
    let rep_broken = SyncReport::build(&r_broken, &broken, &settings).unwrap();

    // Qualitative shape: the relative information decays from its early
    // peak, the gains plateau, and the broken network synchronizes per
    // bicomponent while global sync fails.
    let early_peak = |r: &SimulationResult| {
        r.zeta_norms[..r.sample_count() / 4]
            .iter()
            .flat_map(|v| v.iter().copied())
            .fold(0.0f64, f64::max)
    };
    let zeta_decayed_tree =
        rep_tree.network_stable.trailing_max_zeta < 1e-3 * early_peak(&r_tree);
    let zeta_decayed_broken =
        rep_broken.network_stable.trailing_max_zeta < 1e-3 * early_peak(&r_broken);

    conclude(
        "criterion 8: 60-node scenarios run to t = 100 and reproduce the qualitative shape",
        &[
            ("tree network has a directed spanning tree", d_tree.basic_count() == 1),
            ("broken network has basic sizes {4, 8, 30}", broken_sizes == vec![4, 8, 30]),
            ("tree run: network stable", rep_tree.network_stable.passed),
            ("tree run: zeta decayed by 3 orders", zeta_decayed_tree),
            ("tree run: global sync", rep_tree.global_sync.passed),
            ("tree run: rho plateaus", rep_tree.rho_bounded.passed),
            ("broken run: network stable", rep_broken.network_stable.passed),
            ("broken run: zeta decayed by 3 orders", zeta_decayed_broken),
            ("broken run: global sync fails", !rep_broken.global_sync.passed),
            (
                "broken run: every basic bicomponent syncs",
                rep_broken.per_bicomponent_sync.iter().all(|c| c.passed),
            ),
            ("broken run: rho plateaus", rep_broken.rho_bounded.passed),
        ],
    );
}
