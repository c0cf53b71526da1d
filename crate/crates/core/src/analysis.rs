//! Post-run verification: network stability, weak/state synchronization,
//! per-bicomponent synchronization, mixing-limit agreement, and the
//! spectral certificates behind the boundedness argument.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::condensation::{
    compute_beta, condense, has_directed_spanning_tree, BetaMatrix, CondensationDecomposition,
};
use crate::error::{Error, Result};
use crate::graph::{build_laplacian, Laplacian, WeightedDigraph};
use crate::linalg::ones_complement_basis;
use crate::scc::strongly_connected_components;
use crate::sim::SimulationResult;

/// Tolerances and trailing-window width used by every check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisSettings {
    /// Fraction of the run treated as the trailing window.
    pub window_fraction: f64,
    /// Threshold on `max_i |zeta_i|` for network stability.
    pub zeta_tol: f64,
    /// Threshold on pairwise state disagreement for synchronization.
    pub sync_tol: f64,
    /// Relative growth threshold for declaring the gains bounded.
    pub rho_growth_tol: f64,
    /// Threshold on the distance to the predicted mixing limit.
    pub beta_tol: f64,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        Self {
            window_fraction: 0.1,
            zeta_tol: 1e-3,
            sync_tol: 1e-2,
            rho_growth_tol: 1e-3,
            beta_tol: 1e-2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityEvidence {
    pub passed: bool,
    /// Max over the trailing window of `max_i |zeta_i|`.
    pub trailing_max_zeta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RhoBoundedEvidence {
    pub passed: bool,
    pub final_rho: Vec<f64>,
    /// Increase of every gain across the trailing window.
    pub trailing_growth: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GlobalSyncEvidence {
    pub passed: bool,
    /// Max over the trailing window of the pairwise state disagreement.
    pub trailing_max_disagreement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentSyncEvidence {
    pub nodes: Vec<usize>,
    pub passed: bool,
    pub trailing_disagreement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaEvidence {
    pub node: usize,
    pub passed: bool,
    /// Trailing max distance to the predicted combination of basic
    /// bicomponent centroids.
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum BetaCheckOutcome {
    /// No non-basic nodes to check.
    Empty,
    /// Prerequisites (network stability + per-component sync) failed.
    Skipped { reason: String },
    Checked { agents: Vec<BetaEvidence> },
}

/// True iff `max_i |zeta_i|` stays at or below `tol` across the trailing
/// window covering the final `window_fraction` of the run.
pub fn check_network_stability(
    r: &SimulationResult,
    tol: f64,
    window_fraction: f64,
) -> Result<StabilityEvidence> {
    let window = r.trailing_window(window_fraction)?;
    let trailing_max_zeta = r.zeta_norms[window]
        .iter()
        .flat_map(|per_agent| per_agent.iter().copied())
        .fold(0.0f64, f64::max);
    Ok(StabilityEvidence {
        passed: trailing_max_zeta <= tol,
        trailing_max_zeta,
    })
}

/// True iff every gain's increase over the trailing window stays within
/// `growth_tol * (1 + rho_i)`.
pub fn check_rho_bounded(
    r: &SimulationResult,
    growth_tol: f64,
    window_fraction: f64,
) -> Result<RhoBoundedEvidence> {
    let window = r.trailing_window(window_fraction)?;
    let first = &r.rhos[window.start];
    let last = &r.rhos[r.sample_count() - 1];
    let mut passed = true;
    let mut growth = Vec::with_capacity(r.agent_count);
    for i in 0..r.agent_count {
        let inc = last[i] - first[i];
        growth.push(inc);
        if inc > growth_tol * (1.0 + last[i]) {
            passed = false;
        }
    }
    Ok(RhoBoundedEvidence {
        passed,
        final_rho: last.iter().copied().collect(),
        trailing_growth: growth,
    })
}

/// True iff the max pairwise state disagreement stays at or below `tol`
/// across the trailing window.
pub fn check_global_sync(
    r: &SimulationResult,
    tol: f64,
    window_fraction: f64,
) -> Result<GlobalSyncEvidence> {
    let window = r.trailing_window(window_fraction)?;
    let trailing_max_disagreement = r.max_disagreement[window]
        .iter()
        .copied()
        .fold(0.0f64, f64::max);
    Ok(GlobalSyncEvidence {
        passed: trailing_max_disagreement <= tol,
        trailing_max_disagreement,
    })
}

/// Per basic bicomponent: trailing max of the intra-component pairwise
/// disagreement, compared against `tol`.
pub fn check_bicomponent_sync(
    r: &SimulationResult,
    d: &CondensationDecomposition,
    tol: f64,
    window_fraction: f64,
) -> Result<Vec<ComponentSyncEvidence>> {
    if d.node_count() != r.agent_count {
        return Err(Error::Dimension(format!(
            "decomposition covers {} nodes, result has {} agents",
            d.node_count(),
            r.agent_count
        )));
    }
    let window = r.trailing_window(window_fraction)?;
    let n = r.state_dim;
    let mut out = Vec::new();
    for comp in d.basic_bicomponents() {
        let mut worst: f64 = 0.0;
        for s in window.clone() {
            let x = &r.states[s];
            for (a_idx, &a) in comp.nodes.iter().enumerate() {
                let xa = x.rows(a * n, n);
                for &b in &comp.nodes[a_idx + 1..] {
                    worst = worst.max((xa - x.rows(b * n, n)).norm());
                }
            }
        }
        out.push(ComponentSyncEvidence {
            nodes: comp.nodes.clone(),
            passed: worst <= tol,
            trailing_disagreement: worst,
        });
    }
    Ok(out)
}

/// Distance of every non-basic agent's trailing states to the predicted
/// convex combination of basic-bicomponent centroids.
///
/// Fails with `PrerequisiteFailed` when network stability or any basic
/// bicomponent's internal synchronization does not hold at the given
/// tolerances.
pub fn check_beta_limits(
    r: &SimulationResult,
    d: &CondensationDecomposition,
    beta: &BetaMatrix,
    settings: &AnalysisSettings,
) -> Result<Vec<BetaEvidence>> {
    let stability = check_network_stability(r, settings.zeta_tol, settings.window_fraction)?;
    if !stability.passed {
        return Err(Error::PrerequisiteFailed(format!(
            "network stability failed (trailing max |zeta| = {:.3e})",
            stability.trailing_max_zeta
        )));
    }
    let comps = check_bicomponent_sync(r, d, settings.sync_tol, settings.window_fraction)?;
    if let Some(bad) = comps.iter().find(|c| !c.passed) {
        return Err(Error::PrerequisiteFailed(format!(
            "basic bicomponent {:?} is not internally synchronized ({:.3e})",
            bad.nodes, bad.trailing_disagreement
        )));
    }
    beta_distances(r, d, beta, settings.beta_tol, settings.window_fraction)
}

fn beta_distances(
    r: &SimulationResult,
    d: &CondensationDecomposition,
    beta: &BetaMatrix,
    tol: f64,
    window_fraction: f64,
) -> Result<Vec<BetaEvidence>> {
    let window = r.trailing_window(window_fraction)?;
    let n = r.state_dim;
    let basic: Vec<&Vec<usize>> = d.basic_bicomponents().map(|c| &c.nodes).collect();

    let mut out = Vec::new();
    for (row, &node) in beta.nodes().iter().enumerate() {
        let mut worst: f64 = 0.0;
        for s in window.clone() {
            let x = &r.states[s];
            // Predicted limit: sum_i beta_{j,i} * centroid of component i.
            let mut predicted = DVector::zeros(n);
            for (i, nodes) in basic.iter().enumerate() {
                let mut centroid = DVector::zeros(n);
                for &m in nodes.iter() {
                    centroid += x.rows(m * n, n);
                }
                centroid /= nodes.len() as f64;
                predicted += beta.values()[(row, i)] * centroid;
            }
            worst = worst.max((x.rows(node * n, n) - predicted).norm());
        }
        out.push(BetaEvidence {
            node,
            passed: worst <= tol,
            distance: worst,
        });
    }
    Ok(out)
}

/// The full verification report embedded in run manifests.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyncReport {
    pub network_stable: StabilityEvidence,
    pub rho_bounded: RhoBoundedEvidence,
    pub global_sync: GlobalSyncEvidence,
    pub per_bicomponent_sync: Vec<ComponentSyncEvidence>,
    pub beta_check: BetaCheckOutcome,
    pub spanning_tree: bool,
    /// Synchronization must imply network stability on every report.
    pub lemma1_consistent: bool,
    /// With a spanning tree, network stability must imply global
    /// synchronization; `None` when the premise does not apply.
    pub lemma2_consistent: Option<bool>,
    pub settings: AnalysisSettings,
}

impl SyncReport {
    /// Runs every check against a finished simulation of `graph`.
    pub fn build(
        r: &SimulationResult,
        graph: &WeightedDigraph,
        settings: &AnalysisSettings,
    ) -> Result<SyncReport> {
        let lap = build_laplacian(graph);
        let d = condense(graph);
        let beta = compute_beta(&d, &lap)?;

        let network_stable = check_network_stability(r, settings.zeta_tol, settings.window_fraction)?;
        let rho_bounded = check_rho_bounded(r, settings.rho_growth_tol, settings.window_fraction)?;
        let global_sync = check_global_sync(r, settings.sync_tol, settings.window_fraction)?;
        let per_bicomponent_sync =
            check_bicomponent_sync(r, &d, settings.sync_tol, settings.window_fraction)?;

        let beta_check = if beta.is_empty() {
            BetaCheckOutcome::Empty
        } else if !network_stable.passed {
            BetaCheckOutcome::Skipped {
                reason: "network stability failed".into(),
            }
        } else if per_bicomponent_sync.iter().any(|c| !c.passed) {
            BetaCheckOutcome::Skipped {
                reason: "a basic bicomponent is not internally synchronized".into(),
            }
        } else {
            BetaCheckOutcome::Checked {
                agents: beta_distances(
                    r,
                    &d,
                    &beta,
                    settings.beta_tol,
                    settings.window_fraction,
                )?,
            }
        };

        let spanning_tree = has_directed_spanning_tree(&d);
        let lemma1_consistent = !(global_sync.passed && !network_stable.passed);
        let lemma2_consistent = if spanning_tree && network_stable.passed {
            Some(global_sync.passed)
        } else {
            None
        };

        Ok(SyncReport {
            network_stable,
            rho_bounded,
            global_sync,
            per_bicomponent_sync,
            beta_check,
            spanning_tree,
            lemma1_consistent,
            lemma2_consistent,
            settings: settings.clone(),
        })
    }
}

/// Strictly positive left null vector of a strongly connected Laplacian,
/// normalized so the largest entry is 1.
pub fn left_eigenvector_weights(lap: &Laplacian) -> Result<DVector<f64>> {
    let n = lap.order();
    let g = lap.induced_graph();
    if strongly_connected_components(&g).len() != 1 {
        return Err(Error::NotStronglyConnected);
    }
    if n == 1 {
        return Ok(DVector::from_element(1, 1.0));
    }

    // alpha' L = 0  <=>  L' alpha = 0: take the right-singular vector of
    // L' for its smallest singular value.
    let svd = lap.as_matrix().transpose().svd(false, true);
    let v_t = svd.v_t.as_ref().expect("SVD requested V^T");
    let mut min_idx = 0;
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s < svd.singular_values[min_idx] {
            min_idx = i;
        }
    }
    let mut alpha: DVector<f64> = v_t.row(min_idx).transpose();

    // Perron structure: the null vector is one-signed for a strongly
    // connected graph. Flip to positive, then scale max entry to 1.
    let sum: f64 = alpha.iter().sum();
    if sum < 0.0 {
        alpha.neg_mut();
    }
    let max = alpha.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0) {
        return Err(Error::Singular(
            "left null vector has no positive entries".into(),
        ));
    }
    alpha /= max;
    if alpha.iter().any(|&v| v <= 0.0) {
        return Err(Error::Singular(
            "left null vector is not strictly positive".into(),
        ));
    }
    Ok(alpha)
}

/// Certificate that `S = HL + L'H` dominates `3*gamma L'L` on the
/// complement of the consensus direction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HInequalityCertificate {
    /// Largest feasible coefficient: a third of the minimal generalized
    /// Rayleigh quotient of `(S, L'L)` on the complement of span{1}.
    pub gamma: f64,
    /// Smallest eigenvalue of `S` (PSD check).
    pub min_eig_s: f64,
    /// Numerical kernel dimension of `S` (must be 1).
    pub kernel_dim: usize,
    /// Smallest eigenvalue of `S - 3 gamma L'L` restricted to the
    /// complement of span{1}; the self-check of the certificate.
    pub certificate_min_eig: f64,
}

/// Verifies the Lyapunov-form inequality for a strongly connected graph
/// and extracts the largest feasible `gamma`.
pub fn verify_h_inequality(
    lap: &Laplacian,
    alpha: &DVector<f64>,
) -> Result<HInequalityCertificate> {
    let n = lap.order();
    if alpha.len() != n {
        return Err(Error::Dimension(format!(
            "alpha has {} entries for order {}",
            alpha.len(),
            n
        )));
    }
    if n < 2 {
        return Err(Error::InvalidConfig(
            "H-inequality needs at least two nodes".into(),
        ));
    }
    if alpha.iter().any(|&v| v <= 0.0) {
        return Err(Error::NonPositiveInput { what: "alpha" });
    }

    let l = lap.as_matrix();
    let h = DMatrix::from_diagonal(alpha);
    let hl = &h * l;
    let s = &hl + hl.transpose();
    let t = l.transpose() * l;

    let eig_s = s.clone().symmetric_eigen();
    let max_eig_s = eig_s.eigenvalues.iter().copied().fold(0.0f64, f64::max);
    let min_eig_s = eig_s
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let kernel_tol = 1e-8 * max_eig_s.max(1.0);
    let kernel_dim = eig_s
        .eigenvalues
        .iter()
        .filter(|&&v| v.abs() <= kernel_tol)
        .count();
    if kernel_dim != 1 {
        return Err(Error::KernelViolation { dim: kernel_dim });
    }

    // Deflate the shared kernel span{1} and solve the generalized
    // eigenproblem via a Cholesky factor of the deflated L'L.
    let u = ones_complement_basis(n);
    let s_red = u.transpose() * &s * &u;
    let t_red = u.transpose() * &t * &u;
    let chol = nalgebra::Cholesky::new(t_red.clone()).ok_or(Error::KernelViolation {
        dim: kernel_dim + 1,
    })?;
    let lfac = chol.l();
    let tmp = lfac
        .solve_lower_triangular(&s_red)
        .ok_or_else(|| Error::Singular("triangular solve failed".into()))?;
    let reduced = lfac
        .solve_lower_triangular(&tmp.transpose())
        .ok_or_else(|| Error::Singular("triangular solve failed".into()))?;
    let reduced = (&reduced + reduced.transpose()) * 0.5;
    let lambda_min = reduced
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if !(lambda_min > 0.0) {
        return Err(Error::Singular(format!(
            "generalized Rayleigh quotient is not positive: {lambda_min:e}"
        )));
    }
    let gamma = lambda_min / 3.0;

    let check = &s_red - 3.0 * gamma * &t_red;
    let certificate_min_eig = ((&check + check.transpose()) * 0.5)
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);

    Ok(HInequalityCertificate {
        gamma,
        min_eig_s,
        kernel_dim,
        certificate_min_eig,
    })
}

/// The gain-weighted quadratic form
/// `Q_rho = D^{-1} (H D - mu h h') D^{-1}` with `D = diag(rho)`,
/// `H = diag(alpha)`, `h = alpha`, and `mu = 1 / sum_i alpha_i / rho_i`.
/// Satisfies `Q_rho 1 = 0`, is PSD, and is entrywise decreasing in every
/// `rho_i` as a quadratic form.
pub fn q_rho(rho: &DVector<f64>, alpha: &DVector<f64>) -> Result<DMatrix<f64>> {
    let n = rho.len();
    if alpha.len() != n {
        return Err(Error::Dimension(format!(
            "rho has {} entries, alpha has {}",
            n,
            alpha.len()
        )));
    }
    if rho.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::NonPositiveInput { what: "rho" });
    }
    if alpha.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::NonPositiveInput { what: "alpha" });
    }

    let inv_sum: f64 = (0..n).map(|i| alpha[i] / rho[i]).sum();
    let mu = 1.0 / inv_sum;
    let mut q = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let diag = if i == j { alpha[i] * rho[i] } else { 0.0 };
            q[(i, j)] = (diag - mu * alpha[i] * alpha[j]) / (rho[i] * rho[j]);
        }
    }
    Ok(q)
}
