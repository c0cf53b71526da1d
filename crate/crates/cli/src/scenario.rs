//! Scenario documents: a TOML file referencing the graph and the agent
//! model (by relative path or inline), plus initial conditions, horizon,
//! and integrator tolerances.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use weaksync::nalgebra::DMatrix;
use weaksync::{AgentModel, InitialStates, ScenarioConfig, WeightedDigraph};

use crate::failure::{with_path, Failure};

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(untagged)]
pub enum MatrixSource {
    Path(String),
    Inline(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Deserialize)]
struct ModelSection {
    a: MatrixSource,
    b: MatrixSource,
}

#[derive(Debug, Clone, Deserialize, Default)]
struct InitialSection {
    x: Option<Vec<f64>>,
    seed: Option<u64>,
    range: Option<f64>,
    rho: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize)]
struct RunSection {
    t_final: f64,
    sample_interval: f64,
}

#[derive(Debug, Clone, Deserialize, Default)]
struct IntegratorSection {
    rtol: Option<f64>,
    atol: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
struct ScenarioFile {
    graph: String,
    model: ModelSection,
    #[serde(default)]
    initial: InitialSection,
    run: RunSection,
    #[serde(default)]
    integrator: IntegratorSection,
}

/// The scenario with every default materialized, as echoed into the run
/// manifest. Together with the referenced inputs it reproduces the run.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedConfig {
    pub graph: String,
    pub model_a: MatrixSource,
    pub model_b: MatrixSource,
    pub initial: InitialStates,
    pub initial_gains: Vec<f64>,
    pub t_final: f64,
    pub sample_interval: f64,
    pub rtol: f64,
    pub atol: f64,
}

pub struct LoadedScenario {
    pub config: ScenarioConfig,
    pub resolved: ResolvedConfig,
    pub seed: Option<u64>,
    /// Files referenced by the scenario (for digesting), scenario file
    /// included.
    pub input_files: Vec<PathBuf>,
}

fn load_matrix(
    source: &MatrixSource,
    base: &Path,
    inputs: &mut Vec<PathBuf>,
) -> Result<DMatrix<f64>, Failure> {
    match source {
        MatrixSource::Path(rel) => {
            let path = base.join(rel);
            let m = weaksync::linalg::read_matrix_file(&path).map_err(|e| with_path(&path, e))?;
            inputs.push(path);
            Ok(m)
        }
        MatrixSource::Inline(rows) => {
            if rows.is_empty() || rows.iter().any(|r| r.len() != rows[0].len()) {
                return Err(Failure::Input(
                    "inline matrix must be rectangular and non-empty".into(),
                ));
            }
            Ok(DMatrix::from_fn(rows.len(), rows[0].len(), |i, j| {
                rows[i][j]
            }))
        }
    }
}

pub fn load_scenario(path: &Path) -> Result<LoadedScenario, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let file: ScenarioFile = toml::from_str(&text)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut input_files = vec![path.to_path_buf()];

    let graph_path = base.join(&file.graph);
    let graph =
        WeightedDigraph::from_file(&graph_path).map_err(|e| with_path(&graph_path, e))?;
    input_files.push(graph_path);

    let a = load_matrix(&file.model.a, base, &mut input_files)?;
    let b = load_matrix(&file.model.b, base, &mut input_files)?;
    let model = AgentModel::new(a, b)?;

    let initial = match (&file.initial.x, file.initial.seed, file.initial.range) {
        (Some(x), _, _) => InitialStates::Explicit(x.clone()),
        (None, seed, range) => InitialStates::Random {
            seed: seed.unwrap_or(0),
            range: range.unwrap_or(1.0),
        },
    };
    let seed = match &initial {
        InitialStates::Random { seed, .. } => Some(*seed),
        InitialStates::Explicit(_) => None,
    };

    let mut config = ScenarioConfig::new(graph, model);
    config.initial = initial.clone();
    config.initial_gains = file.initial.rho.clone();
    config.t_final = file.run.t_final;
    config.sample_interval = file.run.sample_interval;
    if let Some(rtol) = file.integrator.rtol {
        config.rtol = rtol;
    }
    if let Some(atol) = file.integrator.atol {
        config.atol = atol;
    }
    config.validate()?;

    let resolved = ResolvedConfig {
        graph: file.graph.clone(),
        model_a: file.model.a.clone(),
        model_b: file.model.b.clone(),
        initial,
        initial_gains: file
            .initial
            .rho
            .unwrap_or_else(|| vec![0.0; config.graph.node_count()]),
        t_final: config.t_final,
        sample_interval: config.sample_interval,
        rtol: config.rtol,
        atol: config.atol,
    };

    Ok(LoadedScenario {
        config,
        resolved,
        seed,
        input_files,
    })
}
