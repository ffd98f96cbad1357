//! Lowest eigenpairs of the pencil `K u = lambda M u`.
//!
//! The default path is shift-invert Lanczos on `(K - tau M)^{-1} M` with an
//! envelope Cholesky factorization; the shift starts below a Gershgorin
//! estimate of the spectrum and is lowered whenever the factorization
//! reports an indefinite matrix. If no shift factorizes, a diagonally
//! preconditioned LOBPCG iteration takes over. [`dense_oracle`] solves the
//! full problem densely for cross-checks.

mod dense;
mod lanczos;
mod lobpcg;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fem::DiscreteForm;
use crate::sparse::{EnvelopeCholesky, SparseSymMatrix};

pub use dense::{dense_oracle, DENSE_LIMIT};
pub use lobpcg::lobpcg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    ShiftInvertLanczos,
    Lobpcg,
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    /// Residual tolerance `||K u - lambda M u|| / ||M u||`.
    pub tol: f64,
    /// Cap on Lanczos steps (and LOBPCG iterations).
    pub max_iter: usize,
    /// Seed of the starting block.
    pub seed: u64,
    pub shift_retries: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-8,
            max_iter: 600,
            seed: 0x5eed,
            shift_retries: 8,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralResult {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// M-orthonormal, one per eigenvalue, over free unknowns.
    #[serde(skip)]
    pub eigenvectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub solver: SolverKind,
    pub shift: Option<f64>,
    pub seed: u64,
}

impl SpectralResult {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// `||K u - lambda M u||_2 / ||M u||_2`.
pub fn eigen_residual(form: &DiscreteForm, lambda: f64, u: &[f64]) -> f64 {
    residual(&form.form, &form.mass, lambda, u)
}

pub(crate) fn residual(k: &SparseSymMatrix, m: &SparseSymMatrix, lambda: f64, u: &[f64]) -> f64 {
    let ku = k.matvec(u);
    let mu = m.matvec(u);
    let r: f64 = ku.iter().zip(&mu).map(|(a, b)| (a - lambda * b).powi(2)).sum();
    let s: f64 = mu.iter().map(|b| b * b).sum();
    (r / s).sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A shift strictly below the spectrum when the Gershgorin estimate holds.
///
/// `M >= diag(M) / 2` for assembled P1 mass matrices (each element mass
/// dominates a third of its diagonal), which turns the Gershgorin bound on
/// `K` into a bound on the pencil.
fn initial_shift(form: &DiscreteForm) -> f64 {
    let g = form.form.gershgorin_lower();
    let mu = 0.5 * form.mass.diagonal().into_iter().fold(f64::INFINITY, f64::min);
    let bound = if g >= 0.0 { 0.0 } else { g / mu };
    bound - 1e-2 * bound.abs().max(1.0)
}

/// The `k` algebraically smallest eigenpairs with residuals below `opts.tol`.
pub fn smallest_eigenpairs(form: &DiscreteForm, k: usize, opts: &SolverOptions) -> Result<SpectralResult> {
    let n = form.dim();
    if k == 0 || k >= n {
        return Err(Error::InvalidInput(format!(
            "requested {k} eigenpairs of a {n}-dimensional problem"
        )));
    }
    let mut tau = initial_shift(form);
    for _ in 0..=opts.shift_retries {
        let shifted = SparseSymMatrix::lin_comb(1.0, &form.form, -tau, &form.mass);
        match EnvelopeCholesky::new(&shifted) {
            Ok(chol) => return lanczos::shift_invert(form, &chol, tau, k, opts),
            Err(Error::FactorizationFailure { .. }) => {
                tau -= 2.0 * tau.abs().max(1.0);
            }
            Err(e) => return Err(e),
        }
    }
    lobpcg(form, k, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::TripletBuilder;

    fn fdm_laplacian(n: usize) -> DiscreteForm {
        let h = 1.0 / (n + 1) as f64;
        let mut t = TripletBuilder::new(n);
        for i in 0..n {
            t.push(i, i, 2.0 / (h * h));
            if i > 0 {
                t.push(i, i - 1, -1.0 / (h * h));
            }
        }
        DiscreteForm::from_pair(t.build(), SparseSymMatrix::identity(n))
    }

    #[test]
    fn diagonal_pencil() {
        let form = DiscreteForm::from_pair(
            SparseSymMatrix::from_diagonal(&[2.0, 3.0, 7.0]),
            SparseSymMatrix::identity(3),
        );
        let r = smallest_eigenpairs(&form, 2, &SolverOptions::default()).unwrap();
        assert!((r.eigenvalues[0] - 2.0).abs() < 1e-12);
        assert!((r.eigenvalues[1] - 3.0).abs() < 1e-12);
        assert_eq!(r.solver, SolverKind::ShiftInvertLanczos);
    }

    #[test]
    fn fdm_closed_form() {
        let n = 400;
        let h = 1.0 / (n + 1) as f64;
        let r = smallest_eigenpairs(&fdm_laplacian(n), 5, &SolverOptions::default()).unwrap();
        for (j, &lam) in r.eigenvalues.iter().enumerate() {
            let want = 2.0 / (h * h) * (1.0 - ((j + 1) as f64 * std::f64::consts::PI * h).cos());
            assert!((lam - want).abs() < 1e-9 * want, "{j}: {lam} vs {want}");
        }
        assert!(r.max_residual() <= 1e-8);
    }

    #[test]
    fn m_orthonormal_vectors() {
        let form = fdm_laplacian(100);
        let r = smallest_eigenpairs(&form, 4, &SolverOptions::default()).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let g = dot(&r.eigenvectors[i], &form.mass.matvec(&r.eigenvectors[j]));
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g - want).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn negative_spectrum_is_found() {
        let form = DiscreteForm::from_pair(
            SparseSymMatrix::from_diagonal(&[-5.0, 1.0, 2.0, 3.0]),
            SparseSymMatrix::identity(4),
        );
        let r = smallest_eigenpairs(&form, 2, &SolverOptions::default()).unwrap();
        assert!((r.eigenvalues[0] + 5.0).abs() < 1e-12);
        assert!(r.shift.unwrap() < -5.0);
    }

    #[test]
    fn rejects_bad_k() {
        let form = fdm_laplacian(5);
        assert!(smallest_eigenpairs(&form, 0, &SolverOptions::default()).is_err());
        assert!(smallest_eigenpairs(&form, 5, &SolverOptions::default()).is_err());
    }

    #[test]
    fn residual_properties() {
        let form = fdm_laplacian(50);
        let r = smallest_eigenpairs(&form, 1, &SolverOptions::default()).unwrap();
        let u = &r.eigenvectors[0];
        let lam = r.eigenvalues[0];
        assert!(eigen_residual(&form, lam, u) < 1e-8);
        let scaled: Vec<f64> = u.iter().map(|v| -3.5 * v).collect();
        assert!((eigen_residual(&form, lam, &scaled) - eigen_residual(&form, lam, u)).abs() < 1e-12);
        let mut bent = u.clone();
        bent[10] += 0.1;
        assert!(eigen_residual(&form, lam, &bent) > 1e-3);
    }
}
