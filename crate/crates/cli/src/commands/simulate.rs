//! `weaksync simulate <scenario.toml | dir> [--out dir] [--svg]`: run one
//! scenario (or every scenario in a directory) and emit a CSV plus a run
//! manifest embedding the verification report.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use weaksync::{simulate, write_csv, AnalysisSettings, Error, SyncReport};

use crate::failure::Failure;
use crate::manifest::{digest_file, tool_version, write_manifest, RunManifest, RunStatus};
use crate::scenario::load_scenario;
use crate::svg::write_line_plot;

pub fn run(scenario: &Path, out: &Path, svg: bool) -> Result<(), Failure> {
    if scenario.is_dir() {
        run_batch(scenario, out, svg)
    } else {
        run_one(scenario, out, svg)
    }
}

fn run_batch(dir: &Path, out: &Path, svg: bool) -> Result<(), Failure> {
    let mut scenarios: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Failure::Input(format!("{}: {e}", dir.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "toml"))
        .collect();
    scenarios.sort();
    if scenarios.is_empty() {
        return Err(Failure::Input(format!(
            "{}: no scenario files (*.toml) found",
            dir.display()
        )));
    }

    let threads = std::env::var("WEAKSYNC_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&v| v >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|v| v.get())
                .unwrap_or(1)
        })
        .min(scenarios.len());

    let next = AtomicUsize::new(0);
    let failures: Mutex<Vec<Failure>> = Mutex::new(Vec::new());
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::Relaxed);
                if idx >= scenarios.len() {
                    break;
                }
                if let Err(f) = run_one(&scenarios[idx], out, svg) {
                    eprintln!("{}: {}", scenarios[idx].display(), f.message());
                    failures.lock().unwrap().push(f);
                }
            });
        }
    });

    let failures = failures.into_inner().unwrap();
    match failures.into_iter().max_by_key(|f| f.code()) {
        Some(worst) => Err(worst),
        None => Ok(()),
    }
}

fn run_one(scenario_path: &Path, out: &Path, svg: bool) -> Result<(), Failure> {
    let loaded = load_scenario(scenario_path)?;
    std::fs::create_dir_all(out).map_err(|e| Failure::Input(format!("{}: {e}", out.display())))?;
    let stem = scenario_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("run");

    let mut inputs = Vec::new();
    for file in &loaded.input_files {
        inputs.push(digest_file(file)?);
    }

    let csv_path = out.join(format!("{stem}.csv"));
    let manifest_path = out.join(format!("{stem}.manifest.json"));

    let mut manifest = RunManifest {
        tool_version: tool_version(),
        command: "simulate".into(),
        scenario: scenario_path.display().to_string(),
        config: loaded.resolved.clone(),
        seed: loaded.seed,
        inputs,
        outputs: Vec::new(),
        integrator: None,
        report: None,
        status: RunStatus::Ok,
    };

    let result = match simulate(&loaded.config) {
        Ok(r) => r,
        Err(e) => {
            let failed_at = match &e {
                Error::StepSizeUnderflow { t }
                | Error::NonFiniteState { t, .. }
                | Error::MaxStepsExceeded { t, .. } => Some(*t),
                _ => None,
            };
            manifest.status = RunStatus::Failed {
                error: e.to_string(),
                failed_at,
            };
            write_manifest(&manifest_path, &manifest)?;
            return Err(e.into());
        }
    };

    let file = std::fs::File::create(&csv_path)
        .map_err(|e| Failure::Input(format!("{}: {e}", csv_path.display())))?;
    write_csv(&result, std::io::BufWriter::new(file))
        .map_err(|e| Failure::Input(format!("{}: {e}", csv_path.display())))?;
    manifest.outputs.push(csv_path.display().to_string());

    let report = SyncReport::build(&result, &loaded.config.graph, &AnalysisSettings::default())?;

    if svg {
        let zeta_path = out.join(format!("{stem}.zeta.svg"));
        let rho_path = out.join(format!("{stem}.rho.svg"));
        let agents = result.agent_count;
        let zeta_series: Vec<Vec<f64>> = (0..agents)
            .map(|i| result.zeta_norms.iter().map(|s| s[i]).collect())
            .collect();
        let rho_series: Vec<Vec<f64>> = (0..agents)
            .map(|i| result.rhos.iter().map(|s| s[i]).collect())
            .collect();
        write_line_plot(&zeta_path, "|zeta_i(t)|", &result.times, &zeta_series)?;
        write_line_plot(&rho_path, "rho_i(t)", &result.times, &rho_series)?;
        manifest.outputs.push(zeta_path.display().to_string());
        manifest.outputs.push(rho_path.display().to_string());
    }

    manifest.integrator = Some(result.stats);
    manifest.report = Some(report.clone());
    write_manifest(&manifest_path, &manifest)?;

    println!(
        "{stem}: network_stable={} global_sync={} rho_bounded={} spanning_tree={} \
         (steps {}, rejected {})",
        report.network_stable.passed,
        report.global_sync.passed,
        report.rho_bounded.passed,
        report.spanning_tree,
        result.stats.steps_accepted,
        result.stats.steps_rejected,
    );
    Ok(())
}
