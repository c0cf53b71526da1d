//! `weaksync gain --A <file> --B <file>`: solve the Riccati equation and
//! print the protocol matrices.

use std::path::Path;

use weaksync::linalg::read_matrix_file;
use weaksync::nalgebra::DMatrix;
use weaksync::{protocol_gain, solve_care, stabilizability_check, AgentModel};

use crate::failure::{with_path, Failure};

fn print_matrix(label: &str, m: &DMatrix<f64>) {
    println!("{label}:");
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:10.6}", m[(i, j)])).collect();
        println!("  {}", row.join(" "));
    }
}

fn save_matrix(dir: &Path, name: &str, m: &DMatrix<f64>) -> Result<(), Failure> {
    let mut text = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:.17e}", m[(i, j)])).collect();
        text.push_str(&row.join(" "));
        text.push('\n');
    }
    let path = dir.join(name);
    std::fs::write(&path, text)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    Ok(())
}

pub fn run(a_path: &Path, b_path: &Path, out: Option<&Path>) -> Result<(), Failure> {
    let a = read_matrix_file(a_path).map_err(|e| with_path(a_path, e))?;
    let b = read_matrix_file(b_path).map_err(|e| with_path(b_path, e))?;
    let model = AgentModel::new(a, b)?;

    let report = stabilizability_check(&model);
    if !report.stabilizable {
        let w = report.witness.expect("failed check carries a witness");
        return Err(Failure::Numerical(format!(
            "(A, B) is not stabilizable: PBH rank drops at eigenvalue {:.6}{:+.6}i",
            w.re, w.im
        )));
    }

    let sol = solve_care(&model)?;
    let gain = protocol_gain(&sol, &model);

    println!(
        "Riccati solution (residual {:.3e}, {} Newton iterations)",
        sol.residual_norm(),
        sol.iterations()
    );
    print_matrix("P", sol.p());
    print_matrix("K = B'P (feedback gain)", &gain.k);
    print_matrix("M = PBB'P (adaptation quadratic form)", &gain.m);

    if let Some(dir) = out {
        std::fs::create_dir_all(dir)
            .map_err(|e| Failure::Input(format!("{}: {e}", dir.display())))?;
        save_matrix(dir, "P.mat", sol.p())?;
        save_matrix(dir, "K.mat", &gain.k)?;
        save_matrix(dir, "M.mat", &gain.m)?;
        println!("saved P.mat, K.mat, M.mat to {}", dir.display());
    }
    Ok(())
}
