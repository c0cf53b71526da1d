//! Small dense linear-algebra helpers shared across the crate.

use std::path::Path;

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

/// Eigenvalue of `m` with the largest real part.
pub fn rightmost_eigenvalue(m: &DMatrix<f64>) -> Complex<f64> {
    m.complex_eigenvalues()
        .iter()
        .copied()
        .max_by(|a, b| a.re.total_cmp(&b.re))
        .expect("matrix has at least one eigenvalue")
}

/// True iff every eigenvalue of `m` has strictly negative real part.
pub fn is_hurwitz(m: &DMatrix<f64>) -> bool {
    rightmost_eigenvalue(m).re < 0.0
}

/// Rank over the complex field of `re + i*im`, computed from the real
/// embedding `[[re, -im], [im, re]]` whose real rank is twice the complex
/// rank.
pub fn complex_rank(re: &DMatrix<f64>, im: &DMatrix<f64>, tol: f64) -> usize {
    let (r, c) = (re.nrows(), re.ncols());
    assert_eq!((r, c), (im.nrows(), im.ncols()));
    let mut emb = DMatrix::zeros(2 * r, 2 * c);
    emb.view_mut((0, 0), (r, c)).copy_from(re);
    emb.view_mut((0, c), (r, c)).copy_from(&(-im));
    emb.view_mut((r, 0), (r, c)).copy_from(im);
    emb.view_mut((r, c), (r, c)).copy_from(re);
    let svd = emb.svd(false, false);
    let smax = svd.singular_values.max();
    let cut = tol * smax.max(1.0);
    let real_rank = svd.singular_values.iter().filter(|&&s| s > cut).count();
    real_rank / 2
}

/// Pseudo-inverse of a symmetric positive semidefinite matrix: eigenvalues
/// below `rel_tol * lambda_max` are treated as zero.
pub fn pinv_psd(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let lmax = eig.eigenvalues.iter().fold(0.0f64, |a, &v| a.max(v));
    let cut = rel_tol * lmax.max(1.0);
    let n = m.nrows();
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        let lam = eig.eigenvalues[i];
        if lam > cut {
            let v = eig.eigenvectors.column(i);
            out += v * v.transpose() / lam;
        }
    }
    out
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn symmetric_min_eig(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Orthonormal basis of the orthogonal complement of the all-ones vector,
/// as the trailing `n - 1` columns of the Householder reflector that maps
/// `e_1` to `1/sqrt(n)`.
pub fn ones_complement_basis(n: usize) -> DMatrix<f64> {
    assert!(n >= 2, "complement basis needs n >= 2");
    let u = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut w = u.clone();
    w[0] -= 1.0;
    let norm = w.norm();
    let h = if norm > 0.0 {
        let w = w / norm;
        DMatrix::identity(n, n) - 2.0 * &w * w.transpose()
    } else {
        DMatrix::identity(n, n)
    };
    h.columns(1, n - 1).into_owned()
}

/// Parses the matrix text format: one row per non-comment line, entries
/// separated by commas and/or whitespace. `#` starts a comment.
pub fn parse_matrix_text(text: &str) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for tok in line.split(|c: char| c == ',' || c.is_whitespace()) {
            if tok.is_empty() {
                continue;
            }
            row.push(tok.parse::<f64>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("invalid number `{tok}`"),
            })?);
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!(
                        "row has {} entries, expected {}",
                        row.len(),
                        first.len()
                    ),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            line: text.lines().count().max(1),
            message: "document contains no matrix rows".into(),
        });
    }
    let (r, c) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

pub fn read_matrix_file(path: &Path) -> Result<DMatrix<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix_text(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn parse_matrix_commas_and_spaces() {
        let m = parse_matrix_text("0, 1, 0\n0 0 1\n# comment\n0,0,0\n").unwrap();
        assert_eq!(m.nrows(), 3);
        assert_eq!(m[(0, 1)], 1.0);
        assert_eq!(m[(1, 2)], 1.0);
    }

    #[test]
    fn parse_matrix_rejects_ragged_rows() {
        assert!(parse_matrix_text("1 2\n3\n").is_err());
        assert!(parse_matrix_text("\n# only comments\n").is_err());
    }

    #[test]
    fn complex_rank_detects_pbh_drop() {
        // [I - A, B] for A = diag(1,1), B = (1,0)^T at eigenvalue 1.
        let re = DMatrix::from_row_slice(2, 3, &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        let im = DMatrix::zeros(2, 3);
        assert_eq!(complex_rank(&re, &im, 1e-10), 1);
    }

    #[test]
    fn complex_rank_full_for_complex_shift() {
        // [iI - A, B] with A the 2x2 rotation generator and B = e_2 is
        // rank 2 at the eigenvalue i.
        let re = DMatrix::from_row_slice(2, 3, &[0.0, 1.0, 0.0, -1.0, 0.0, 1.0]);
        let im = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        assert_eq!(complex_rank(&re, &im, 1e-10), 2);
    }

    #[test]
    fn ones_complement_is_orthonormal_and_orthogonal_to_ones() {
        for n in 2..7 {
            let u = ones_complement_basis(n);
            let gram = u.transpose() * &u;
            assert_abs_diff_eq!(gram, DMatrix::identity(n - 1, n - 1), epsilon = 1e-12);
            let ones = DVector::from_element(n, 1.0);
            assert!((u.transpose() * ones).norm() < 1e-12);
        }
    }

    #[test]
    fn pinv_psd_inverts_on_range() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]);
        let p = pinv_psd(&m, 1e-12);
        assert_abs_diff_eq!(p[(0, 0)], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(p[(1, 1)], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn hurwitz_check() {
        let stable = DMatrix::from_row_slice(2, 2, &[-1.0, 3.0, 0.0, -0.5]);
        assert!(is_hurwitz(&stable));
        let marginal = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert!(!is_hurwitz(&marginal));
    }
}
