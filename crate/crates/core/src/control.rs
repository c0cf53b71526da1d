//! Protocol gain design: stabilizability test, Lyapunov solves, and the
//! continuous algebraic Riccati equation
//!
//! ```text
//! A'P + PA - PBB'P + I = 0
//! ```
//!
//! solved by Newton-Kleinman iteration. Every Newton step is a Lyapunov
//! solve for the current stabilizing gain, so the only primitive needed
//! is a dense linear solve of the Kronecker linearization; no
//! Hamiltonian-Schur machinery is involved. The iteration is seeded with
//! a Bass-type stabilizing gain built from a shifted Lyapunov equation.

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};
use crate::linalg::{complex_rank, is_hurwitz, pinv_psd, rightmost_eigenvalue, symmetric_min_eig};

/// The homogeneous agent dynamics `x' = Ax + Bu`.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentModel {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
}

impl AgentModel {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::Dimension(format!(
                "A must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if a.nrows() == 0 {
            return Err(Error::Dimension("A must be at least 1x1".into()));
        }
        if b.nrows() != a.nrows() || b.ncols() == 0 {
            return Err(Error::Dimension(format!(
                "B must be {}xm with m >= 1, got {}x{}",
                a.nrows(),
                b.nrows(),
                b.ncols()
            )));
        }
        Ok(Self { a, b })
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }
}

/// Outcome of the PBH test, with the offending eigenvalue on failure.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilizabilityReport {
    pub stabilizable: bool,
    pub witness: Option<Complex<f64>>,
}

/// PBH test: `(A, B)` is stabilizable iff `rank [sI - A, B] = n` for
/// every eigenvalue `s` of `A` with nonnegative real part.
pub fn stabilizability_check(model: &AgentModel) -> StabilizabilityReport {
    let n = model.state_dim();
    let m = model.input_dim();
    let eigs = model.a().complex_eigenvalues();
    for lambda in eigs.iter() {
        // Small negative slack so imaginary-axis eigenvalues perturbed by
        // rounding are still tested.
        if lambda.re < -1e-9 {
            continue;
        }
        let mut re = DMatrix::zeros(n, n + m);
        let mut im = DMatrix::zeros(n, n + m);
        for i in 0..n {
            for j in 0..n {
                re[(i, j)] = -model.a()[(i, j)];
                if i == j {
                    re[(i, j)] += lambda.re;
                    im[(i, j)] = lambda.im;
                }
            }
        }
        re.view_mut((0, n), (n, m)).copy_from(model.b());
        if complex_rank(&re, &im, 1e-8) < n {
            return StabilizabilityReport {
                stabilizable: false,
                witness: Some(*lambda),
            };
        }
    }
    StabilizabilityReport {
        stabilizable: true,
        witness: None,
    }
}

/// Solves `F'X + XF + Q = 0` for symmetric `X`, given Hurwitz `F` and
/// symmetric `Q`, through the dense Kronecker linearization
/// `(I (x) F' + F' (x) I) vec(X) = -vec(Q)`.
pub fn solve_lyapunov(f: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = f.nrows();
    if f.ncols() != n || q.nrows() != n || q.ncols() != n {
        return Err(Error::Dimension(format!(
            "Lyapunov solve needs square F and Q of equal order, got F {}x{}, Q {}x{}",
            f.nrows(),
            f.ncols(),
            q.nrows(),
            q.ncols()
        )));
    }
    let rightmost = rightmost_eigenvalue(f);
    if rightmost.re >= 0.0 {
        return Err(Error::NotHurwitz {
            re: rightmost.re,
            im: rightmost.im,
        });
    }

    let eye = DMatrix::<f64>::identity(n, n);
    let ft = f.transpose();
    let op = eye.kronecker(&ft) + ft.kronecker(&eye);
    let rhs = -DMatrix::from_column_slice(n * n, 1, q.as_slice());
    let sol = op
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("Kronecker Lyapunov operator is singular".into()))?;
    let mut x = DMatrix::from_column_slice(n, n, sol.as_slice());
    x = (&x + x.transpose()) * 0.5;

    let residual = (f.transpose() * &x + &x * f + q).norm();
    let bound = 1e-10 * q.norm().max(f64::MIN_POSITIVE);
    if residual > bound {
        return Err(Error::Convergence {
            what: "Lyapunov solve",
            residual,
            iterations: 1,
        });
    }
    Ok(x)
}

/// The stabilizing Riccati solution together with its residual.
#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiSolution {
    p: DMatrix<f64>,
    residual_norm: f64,
    iterations: usize,
}

impl RiccatiSolution {
    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn residual_norm(&self) -> f64 {
        self.residual_norm
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }
}

/// A stabilizing initial gain for the Newton iteration.
///
/// With `sigma = 1 + max |Re eig(A)|` the shifted matrix `A + sigma*I` is
/// anti-stable, so `Z` from `(A + sigma*I) Z + Z (A + sigma*I)' = 2BB'`
/// is PSD and `K0 = B' Z^+` places the controllable closed-loop spectrum
/// at `Re = -sigma` while uncontrollable (necessarily stable) modes stay
/// put. The pseudo-inverse covers stabilizable pairs that are not
/// controllable, where `Z` is singular.
fn initial_stabilizing_gain(model: &AgentModel) -> Result<DMatrix<f64>> {
    let a = model.a();
    let b = model.b();
    let n = model.state_dim();

    if is_hurwitz(a) {
        return Ok(DMatrix::zeros(model.input_dim(), n));
    }

    let sigma = 1.0
        + a.complex_eigenvalues()
            .iter()
            .fold(0.0f64, |acc, l| acc.max(l.re.abs()));
    let shifted = a + sigma * DMatrix::identity(n, n);
    // (A + sI) Z + Z (A + sI)' = 2BB'  <=>  G'Z + ZG + 2BB' = 0 with
    // G = -(A + sI)', which is Hurwitz by the choice of sigma.
    let g = -shifted.transpose();
    let z = solve_lyapunov(&g, &(2.0 * b * b.transpose()))?;
    let k0 = b.transpose() * pinv_psd(&z, 1e-12);

    let closed = a - b * &k0;
    if !is_hurwitz(&closed) {
        let lambda = rightmost_eigenvalue(&closed);
        return Err(Error::NotHurwitz {
            re: lambda.re,
            im: lambda.im,
        });
    }
    Ok(k0)
}

const CARE_MAX_ITERATIONS: usize = 100;

/// Solves `A'P + PA - PBB'P + I = 0` for the stabilizing `P > 0`.
pub fn solve_care(model: &AgentModel) -> Result<RiccatiSolution> {
    let report = stabilizability_check(model);
    if !report.stabilizable {
        let w = report.witness.unwrap_or_else(|| Complex::new(0.0, 0.0));
        return Err(Error::NotStabilizable { re: w.re, im: w.im });
    }

    let a = model.a();
    let b = model.b();
    let n = model.state_dim();
    let eye = DMatrix::<f64>::identity(n, n);

    let mut k = initial_stabilizing_gain(model)?;
    let mut p_prev: Option<DMatrix<f64>> = None;
    let mut prev_step = f64::INFINITY;
    let mut best: Option<(DMatrix<f64>, f64)> = None;

    for iter in 1..=CARE_MAX_ITERATIONS {
        let closed = a - b * &k;
        let q = &eye + k.transpose() * &k;
        let p = solve_lyapunov(&closed, &q)?;
        k = b.transpose() * &p;

        let residual = (a.transpose() * &p + &p * a - &p * b * b.transpose() * &p + &eye).norm();
        if best.as_ref().is_none_or(|(_, r)| residual < *r) {
            best = Some((p.clone(), residual));
        }

        if let Some(prev) = &p_prev {
            let step = (&p - prev).norm();
            // Converged, or the quadratic contraction has bottomed out at
            // the floating-point noise floor of the inner solves: steps
            // already tiny relative to P but no longer shrinking.
            let stalled =
                iter >= 4 && step >= 0.5 * prev_step && prev_step <= 1e-6 * p.norm();
            if step <= 1e-12 * p.norm() || stalled {
                let (p_best, _) = best.expect("at least one iterate recorded");
                return finish_care(model, p_best, iter);
            }
            prev_step = step;
        }
        p_prev = Some(p);
    }

    let (_, residual) = best.expect("at least one iterate recorded");
    Err(Error::Convergence {
        what: "Riccati Newton iteration",
        residual,
        iterations: CARE_MAX_ITERATIONS,
    })
}

fn finish_care(model: &AgentModel, p: DMatrix<f64>, iterations: usize) -> Result<RiccatiSolution> {
    let a = model.a();
    let b = model.b();
    let n = model.state_dim();
    let eye = DMatrix::<f64>::identity(n, n);

    let residual_norm =
        (a.transpose() * &p + &p * a - &p * b * b.transpose() * &p + &eye).norm();
    if residual_norm > 1e-9 * n as f64 {
        return Err(Error::Convergence {
            what: "Riccati residual",
            residual: residual_norm,
            iterations,
        });
    }
    if symmetric_min_eig(&p) <= 0.0 {
        return Err(Error::Singular(
            "Riccati solution is not positive definite".into(),
        ));
    }
    let closed = a - b * b.transpose() * &p;
    if !is_hurwitz(&closed) {
        let lambda = rightmost_eigenvalue(&closed);
        return Err(Error::NotHurwitz {
            re: lambda.re,
            im: lambda.im,
        });
    }
    Ok(RiccatiSolution {
        p,
        residual_norm,
        iterations,
    })
}

/// Feedback and adaptation matrices of the protocol: `K = B'P` drives
/// `u_i = -rho_i K zeta_i`, and `M = PBB'P = K'K` drives
/// `rho_i' = zeta_i' M zeta_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolGain {
    pub k: DMatrix<f64>,
    pub m: DMatrix<f64>,
}

pub fn protocol_gain(sol: &RiccatiSolution, model: &AgentModel) -> ProtocolGain {
    let k = model.b().transpose() * sol.p();
    let m = k.transpose() * &k;
    ProtocolGain { k, m }
}

/// The triple-integrator agent used throughout the worked scenarios.
pub fn triple_integrator() -> AgentModel {
    let a = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
    let b = DMatrix::from_row_slice(3, 1, &[0.0, 0.0, 1.0]);
    AgentModel::new(a, b).expect("triple integrator is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn triple_integrator_is_stabilizable() {
        let report = stabilizability_check(&triple_integrator());
        assert!(report.stabilizable);
    }

    #[test]
    fn pbh_failure_names_witness() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let b = DMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
        let model = AgentModel::new(a, b).unwrap();
        let report = stabilizability_check(&model);
        assert!(!report.stabilizable);
        let w = report.witness.unwrap();
        assert_abs_diff_eq!(w.re, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(w.im, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn hurwitz_a_with_zero_b_is_stabilizable() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -2.0]);
        let b = DMatrix::from_row_slice(2, 1, &[0.0, 0.0]);
        let model = AgentModel::new(a, b).unwrap();
        assert!(stabilizability_check(&model).stabilizable);
    }

    #[test]
    fn lyapunov_scalar_cases() {
        let x = solve_lyapunov(
            &DMatrix::from_row_slice(1, 1, &[-1.0]),
            &DMatrix::from_row_slice(1, 1, &[2.0]),
        )
        .unwrap();
        assert_abs_diff_eq!(x[(0, 0)], 1.0, epsilon = 1e-12);

        let x = solve_lyapunov(&(-DMatrix::identity(2, 2)), &DMatrix::identity(2, 2)).unwrap();
        assert_abs_diff_eq!(x, DMatrix::identity(2, 2) * 0.5, epsilon = 1e-12);
    }

    #[test]
    fn lyapunov_rejects_non_hurwitz() {
        let err = solve_lyapunov(
            &DMatrix::from_row_slice(1, 1, &[0.5]),
            &DMatrix::identity(1, 1),
        )
        .unwrap_err();
        match err {
            Error::NotHurwitz { re, .. } => assert_abs_diff_eq!(re, 0.5, epsilon = 1e-9),
            other => panic!("expected NotHurwitz, got {other:?}"),
        }
    }

    #[test]
    fn care_scalar_integrator() {
        let model = AgentModel::new(
            DMatrix::from_row_slice(1, 1, &[0.0]),
            DMatrix::from_row_slice(1, 1, &[1.0]),
        )
        .unwrap();
        let sol = solve_care(&model).unwrap();
        assert_abs_diff_eq!(sol.p()[(0, 0)], 1.0, epsilon = 1e-10);
    }

    #[test]
    fn care_scalar_unstable() {
        // Positive root of P^2 - 2P - 1 = 0.
        let model = AgentModel::new(
            DMatrix::from_row_slice(1, 1, &[1.0]),
            DMatrix::from_row_slice(1, 1, &[1.0]),
        )
        .unwrap();
        let sol = solve_care(&model).unwrap();
        assert_abs_diff_eq!(sol.p()[(0, 0)], 1.0 + 2.0f64.sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn care_triple_integrator_matches_known_solution() {
        let model = triple_integrator();
        let sol = solve_care(&model).unwrap();
        let s = 1.0 + 2.0f64.sqrt();
        let expected = DMatrix::from_row_slice(
            3,
            3,
            &[s, s, 1.0, s, 2.0 * s, s, 1.0, s, s],
        );
        assert_abs_diff_eq!(sol.p(), &expected, epsilon = 1e-8);
        assert!(sol.residual_norm() <= 1e-9 * 3.0);
    }

    #[test]
    fn care_handles_deeply_stable_modes() {
        // Mixing a strongly stable mode with an unstable one stresses the
        // shift choice in the initial gain.
        let a = DMatrix::from_row_slice(2, 2, &[-10.0, 0.0, 0.0, 1.0]);
        let b = DMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
        let model = AgentModel::new(a.clone(), b.clone()).unwrap();
        let sol = solve_care(&model).unwrap();
        assert!(is_hurwitz(&(a - &b * b.transpose() * sol.p())));
    }

    #[test]
    fn care_handles_stabilizable_not_controllable() {
        // Uncontrollable but stable mode at -1.
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 2.0]);
        let b = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let model = AgentModel::new(a.clone(), b.clone()).unwrap();
        let sol = solve_care(&model).unwrap();
        assert!(is_hurwitz(&(a - &b * b.transpose() * sol.p())));
        assert!(sol.residual_norm() <= 2e-9);
    }

    #[test]
    fn protocol_gain_triple_integrator() {
        let model = triple_integrator();
        let sol = solve_care(&model).unwrap();
        let gain = protocol_gain(&sol, &model);
        let s = 1.0 + 2.0f64.sqrt();
        let k_expected = DMatrix::from_row_slice(1, 3, &[1.0, s, s]);
        assert_abs_diff_eq!(&gain.k, &k_expected, epsilon = 1e-8);
        let m_expected = k_expected.transpose() * &k_expected;
        assert_abs_diff_eq!(&gain.m, &m_expected, epsilon = 1e-8);
    }

    #[test]
    fn protocol_gain_scalar() {
        let model = AgentModel::new(
            DMatrix::from_row_slice(1, 1, &[0.0]),
            DMatrix::from_row_slice(1, 1, &[1.0]),
        )
        .unwrap();
        let sol = solve_care(&model).unwrap();
        let gain = protocol_gain(&sol, &model);
        assert_abs_diff_eq!(gain.k[(0, 0)], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(gain.m[(0, 0)], 1.0, epsilon = 1e-10);
    }
}
