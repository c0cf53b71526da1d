//! Closed-loop simulation of the adaptive protocol.
//!
//! The stacked state is `(x_1; ...; x_N; rho_1; ...; rho_N)`. Each agent
//! runs `x_i' = A x_i - rho_i B K zeta_i` with `rho_i' = |K zeta_i|^2`,
//! where `zeta_i = sum_j a_ij (x_i - x_j)` is the relative information
//! arriving over the network and `K = B'P` comes from the Riccati design.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::control::{protocol_gain, solve_care, AgentModel, ProtocolGain};
use crate::error::{Error, Result};
use crate::graph::{build_laplacian, Laplacian, WeightedDigraph};
use crate::ode::{integrate, Dopri5Settings, IntegratorStats};

/// Relative information `zeta = (L (x) I_n) x`, i.e.
/// `zeta_i = sum_j l_ij x_j`.
pub fn compute_zeta(x: &DVector<f64>, lap: &Laplacian) -> Result<DVector<f64>> {
    let big_n = lap.order();
    if big_n == 0 || !x.len().is_multiple_of(big_n) {
        return Err(Error::Dimension(format!(
            "state length {} is not a multiple of the {} network nodes",
            x.len(),
            big_n
        )));
    }
    let n = x.len() / big_n;
    let l = lap.as_matrix();
    let mut zeta = DVector::zeros(x.len());
    for i in 0..big_n {
        for j in 0..big_n {
            let lij = l[(i, j)];
            if lij != 0.0 {
                for c in 0..n {
                    zeta[i * n + c] += lij * x[j * n + c];
                }
            }
        }
    }
    Ok(zeta)
}

/// Instantaneous state of the coupled system.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationState {
    pub t: f64,
    pub x: DVector<f64>,
    pub rho: DVector<f64>,
}

/// Preprocessed closed-loop right-hand side.
///
/// Evaluation walks the in-edge lists, so one call costs
/// `O(N n^2 + E n + N n m)`.
pub struct ClosedLoop {
    agents: usize,
    n: usize,
    m: usize,
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    k: DMatrix<f64>,
    in_edges: Vec<Vec<(usize, f64)>>,
    in_degree: Vec<f64>,
}

impl ClosedLoop {
    pub fn new(graph: &WeightedDigraph, model: &AgentModel, gain: &ProtocolGain) -> Result<Self> {
        let n = model.state_dim();
        let m = model.input_dim();
        if gain.k.nrows() != m || gain.k.ncols() != n {
            return Err(Error::Dimension(format!(
                "gain K must be {}x{}, got {}x{}",
                m,
                n,
                gain.k.nrows(),
                gain.k.ncols()
            )));
        }
        Ok(Self {
            agents: graph.node_count(),
            n,
            m,
            a: model.a().clone(),
            b: model.b().clone(),
            k: gain.k.clone(),
            in_edges: graph.in_edges(),
            in_degree: graph.in_degrees(),
        })
    }

    pub fn state_len(&self) -> usize {
        self.agents * self.n + self.agents
    }

    /// Allocates the scratch buffers expected by [`ClosedLoop::eval_into`].
    pub fn scratch(&self) -> (DVector<f64>, DVector<f64>) {
        (
            DVector::zeros(self.agents * self.n),
            DVector::zeros(self.m),
        )
    }

    /// Writes the derivative of `(x, rho)` packed in `y` into `dy`.
    pub fn eval_into(
        &self,
        y: &DVector<f64>,
        dy: &mut DVector<f64>,
        zeta: &mut DVector<f64>,
        u: &mut DVector<f64>,
    ) {
        let (agents, n, m) = (self.agents, self.n, self.m);
        let xs = y.as_slice();
        let dys = dy.as_mut_slice();
        let zs = zeta.as_mut_slice();
        let us = u.as_mut_slice();

        // zeta_i = d_i x_i - sum_{(j -> i)} a_ij x_j
        for i in 0..agents {
            let deg = self.in_degree[i];
            for c in 0..n {
                zs[i * n + c] = deg * xs[i * n + c];
            }
            for &(src, w) in &self.in_edges[i] {
                for c in 0..n {
                    zs[i * n + c] -= w * xs[src * n + c];
                }
            }
        }

        for i in 0..agents {
            let rho_i = xs[agents * n + i];
            // u = K zeta_i; rho_i' = |u|^2 keeps the adaptation
            // nonnegative to rounding.
            let mut rho_dot = 0.0;
            for r in 0..m {
                let mut acc = 0.0;
                for c in 0..n {
                    acc += self.k[(r, c)] * zs[i * n + c];
                }
                us[r] = acc;
                rho_dot += acc * acc;
            }
            // dx_i = A x_i - rho_i B u
            for r in 0..n {
                let mut acc = 0.0;
                for c in 0..n {
                    acc += self.a[(r, c)] * xs[i * n + c];
                }
                for c in 0..m {
                    acc -= rho_i * self.b[(r, c)] * us[c];
                }
                dys[i * n + r] = acc;
            }
            dys[agents * n + i] = rho_dot;
        }
    }
}

/// Derivative of `(x, rho)` under the adaptive protocol:
/// `x_i' = A x_i - rho_i B K zeta_i`, `rho_i' = zeta_i' M zeta_i`.
pub fn closed_loop_derivative(
    state: &SimulationState,
    graph: &WeightedDigraph,
    model: &AgentModel,
    gain: &ProtocolGain,
) -> Result<(DVector<f64>, DVector<f64>)> {
    let agents = graph.node_count();
    let n = model.state_dim();
    if state.x.len() != agents * n {
        return Err(Error::Dimension(format!(
            "state has {} entries, expected {}",
            state.x.len(),
            agents * n
        )));
    }
    if state.rho.len() != agents {
        return Err(Error::Dimension(format!(
            "rho has {} entries, expected {}",
            state.rho.len(),
            agents
        )));
    }
    let loop_ = ClosedLoop::new(graph, model, gain)?;
    let mut y = DVector::zeros(loop_.state_len());
    y.rows_mut(0, agents * n).copy_from(&state.x);
    y.rows_mut(agents * n, agents).copy_from(&state.rho);
    let mut dy = DVector::zeros(loop_.state_len());
    let (mut zeta, mut u) = loop_.scratch();
    loop_.eval_into(&y, &mut dy, &mut zeta, &mut u);
    Ok((
        dy.rows(0, agents * n).into_owned(),
        dy.rows(agents * n, agents).into_owned(),
    ))
}

/// How the initial agent states are chosen.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialStates {
    Explicit(Vec<f64>),
    /// Every component drawn uniformly from `[-range, range]`.
    Random { seed: u64, range: f64 },
}

/// A fully resolved simulation scenario.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub graph: WeightedDigraph,
    pub model: AgentModel,
    pub initial: InitialStates,
    /// Initial adaptive gains; `None` means all zero.
    pub initial_gains: Option<Vec<f64>>,
    pub t_final: f64,
    pub sample_interval: f64,
    pub rtol: f64,
    pub atol: f64,
}

impl ScenarioConfig {
    pub fn new(graph: WeightedDigraph, model: AgentModel) -> Self {
        Self {
            graph,
            model,
            initial: InitialStates::Random { seed: 0, range: 1.0 },
            initial_gains: None,
            t_final: 50.0,
            sample_interval: 0.1,
            rtol: 1e-8,
            atol: 1e-10,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_final > 0.0) {
            return Err(Error::InvalidConfig("t_final must be positive".into()));
        }
        if !(self.sample_interval > 0.0) {
            return Err(Error::InvalidConfig(
                "sample_interval must be positive".into(),
            ));
        }
        if !(self.rtol > 0.0) || !(self.atol > 0.0) {
            return Err(Error::InvalidConfig("tolerances must be positive".into()));
        }
        let want = self.graph.node_count() * self.model.state_dim();
        if let InitialStates::Explicit(x) = &self.initial {
            if x.len() != want {
                return Err(Error::InvalidConfig(format!(
                    "initial state has {} entries, expected {}",
                    x.len(),
                    want
                )));
            }
        }
        if let Some(rho) = &self.initial_gains {
            if rho.len() != self.graph.node_count() {
                return Err(Error::InvalidConfig(format!(
                    "initial gains have {} entries, expected {}",
                    rho.len(),
                    self.graph.node_count()
                )));
            }
            if rho.iter().any(|&r| r < 0.0) {
                return Err(Error::InvalidConfig(
                    "initial gains must be nonnegative".into(),
                ));
            }
        }
        Ok(())
    }

    /// Materializes the initial agent states (deterministic per seed:
    /// agent-major, component-minor draw order).
    pub fn initial_state_vector(&self) -> Vec<f64> {
        let want = self.graph.node_count() * self.model.state_dim();
        match &self.initial {
            InitialStates::Explicit(x) => x.clone(),
            InitialStates::Random { seed, range } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                (0..want)
                    .map(|_| rng.random_range(-*range..=*range))
                    .collect()
            }
        }
    }
}

/// Sampled trajectories plus derived per-sample metrics.
#[derive(Debug, Clone)]
pub struct SimulationResult {
    pub times: Vec<f64>,
    /// Stacked agent states per sample, length `N * n`.
    pub states: Vec<DVector<f64>>,
    /// Stacked relative information per sample, length `N * n`.
    pub zetas: Vec<DVector<f64>>,
    /// Adaptive gains per sample, length `N`.
    pub rhos: Vec<DVector<f64>>,
    /// Per-sample per-agent `|zeta_i|`.
    pub zeta_norms: Vec<Vec<f64>>,
    /// Per-sample max pairwise state disagreement `max |x_j - x_l|`.
    pub max_disagreement: Vec<f64>,
    pub stats: IntegratorStats,
    pub agent_count: usize,
    pub state_dim: usize,
}

impl SimulationResult {
    pub fn sample_count(&self) -> usize {
        self.times.len()
    }

    /// View of agent `i`'s state at sample `s`.
    pub fn agent_state(&self, s: usize, i: usize) -> DVector<f64> {
        self.states[s]
            .rows(i * self.state_dim, self.state_dim)
            .into_owned()
    }

    pub fn t_span(&self) -> (f64, f64) {
        (self.times[0], *self.times.last().unwrap())
    }

    /// Indices of the samples inside the trailing window covering the
    /// final `fraction` of the run.
    pub fn trailing_window(&self, fraction: f64) -> Result<std::ops::Range<usize>> {
        if !(fraction > 0.0 && fraction <= 0.5) {
            return Err(Error::InvalidConfig(format!(
                "window fraction {fraction} must lie in (0, 0.5] so the run spans at least \
                 twice the window"
            )));
        }
        let (t0, t1) = self.t_span();
        let cutoff = t1 - fraction * (t1 - t0);
        let start = self.times.partition_point(|&t| t < cutoff);
        if start >= self.times.len() {
            return Err(Error::InvalidConfig(
                "trailing window contains no samples".into(),
            ));
        }
        Ok(start..self.times.len())
    }
}

/// Designs the protocol for the scenario's agent model and integrates the
/// closed loop. Deterministic: identical configs give bitwise-identical
/// samples.
pub fn simulate(cfg: &ScenarioConfig) -> Result<SimulationResult> {
    cfg.validate()?;

    let sol = solve_care(&cfg.model)?;
    let gain = protocol_gain(&sol, &cfg.model);
    simulate_with_gain(cfg, &gain)
}

/// As [`simulate`], but reusing an already-computed protocol gain.
pub fn simulate_with_gain(cfg: &ScenarioConfig, gain: &ProtocolGain) -> Result<SimulationResult> {
    cfg.validate()?;

    let agents = cfg.graph.node_count();
    let n = cfg.model.state_dim();
    let lap = build_laplacian(&cfg.graph);
    let loop_ = ClosedLoop::new(&cfg.graph, &cfg.model, gain)?;

    let mut y0 = DVector::zeros(loop_.state_len());
    let x0 = cfg.initial_state_vector();
    for (i, v) in x0.iter().enumerate() {
        y0[i] = *v;
    }
    if let Some(rho0) = &cfg.initial_gains {
        for (i, v) in rho0.iter().enumerate() {
            y0[agents * n + i] = *v;
        }
    }

    let settings = Dopri5Settings {
        rtol: cfg.rtol,
        atol: cfg.atol,
        max_step: cfg.sample_interval,
        ..Default::default()
    };
    let (mut zeta_buf, mut u_buf) = loop_.scratch();
    let ode = integrate(
        |_, y, dy| loop_.eval_into(y, dy, &mut zeta_buf, &mut u_buf),
        0.0,
        cfg.t_final,
        y0,
        cfg.sample_interval,
        &settings,
    )?;

    let mut states = Vec::with_capacity(ode.samples.len());
    let mut zetas = Vec::with_capacity(ode.samples.len());
    let mut rhos = Vec::with_capacity(ode.samples.len());
    let mut zeta_norms = Vec::with_capacity(ode.samples.len());
    let mut max_disagreement = Vec::with_capacity(ode.samples.len());

    for y in &ode.samples {
        let x = y.rows(0, agents * n).into_owned();
        let rho = y.rows(agents * n, agents).into_owned();
        let zeta = compute_zeta(&x, &lap)?;
        let norms: Vec<f64> = (0..agents).map(|i| zeta.rows(i * n, n).norm()).collect();
        let mut dis: f64 = 0.0;
        for j in 0..agents {
            let xj = x.rows(j * n, n);
            for l in j + 1..agents {
                dis = dis.max((xj - x.rows(l * n, n)).norm());
            }
        }
        states.push(x);
        zetas.push(zeta);
        rhos.push(rho);
        zeta_norms.push(norms);
        max_disagreement.push(dis);
    }

    Ok(SimulationResult {
        times: ode.times,
        states,
        zetas,
        rhos,
        zeta_norms,
        max_disagreement,
        stats: ode.stats,
        agent_count: agents,
        state_dim: n,
    })
}

/// Writes the per-run CSV: `t, x[agent.component]..., zeta_norm[agent]...,
/// rho[agent]...`.
pub fn write_csv<W: Write>(result: &SimulationResult, mut w: W) -> std::io::Result<()> {
    let (agents, n) = (result.agent_count, result.state_dim);
    write!(w, "t")?;
    for i in 0..agents {
        for c in 0..n {
            write!(w, ",x[{i}.{c}]")?;
        }
    }
    for i in 0..agents {
        write!(w, ",zeta_norm[{i}]")?;
    }
    for i in 0..agents {
        write!(w, ",rho[{i}]")?;
    }
    writeln!(w)?;

    for s in 0..result.sample_count() {
        write!(w, "{}", result.times[s])?;
        for v in result.states[s].iter() {
            write!(w, ",{v}")?;
        }
        for v in &result.zeta_norms[s] {
            write!(w, ",{v}")?;
        }
        for v in result.rhos[s].iter() {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}
