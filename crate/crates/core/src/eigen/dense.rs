use nalgebra::{Cholesky, SymmetricEigen};

use super::{residual, SolverKind, SpectralResult};
use crate::error::{Error, Result};
use crate::fem::DiscreteForm;

pub const DENSE_LIMIT: usize = 2000;

/// Full spectrum by congruence with the Cholesky factor of `M`
/// (`L^{-1} K L^{-T}`) followed by a dense symmetric eigensolve.
pub fn dense_oracle(form: &DiscreteForm) -> Result<SpectralResult> {
    let n = form.dim();
    if n > DENSE_LIMIT {
        return Err(Error::DimensionTooLarge { n, limit: DENSE_LIMIT });
    }
    let k = form.form.to_dense();
    let m = form.mass.to_dense();
    let chol = Cholesky::new(m).ok_or(Error::FactorizationFailure { row: 0, shift: 0.0 })?;
    let l = chol.l();
    let linv_k = l
        .solve_lower_triangular(&k)
        .ok_or(Error::FactorizationFailure { row: 0, shift: 0.0 })?;
    let c = l
        .solve_lower_triangular(&linv_k.transpose())
        .ok_or(Error::FactorizationFailure { row: 0, shift: 0.0 })?;
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let lt = l.transpose();
    let mut eigenvalues = Vec::with_capacity(n);
    let mut eigenvectors = Vec::with_capacity(n);
    let mut residuals = Vec::with_capacity(n);
    for &i in &order {
        let y = eig.eigenvectors.column(i).into_owned();
        let x = lt
            .solve_upper_triangular(&y)
            .ok_or(Error::FactorizationFailure { row: 0, shift: 0.0 })?;
        let x: Vec<f64> = x.iter().copied().collect();
        let lam = eig.eigenvalues[i];
        residuals.push(residual(&form.form, &form.mass, lam, &x));
        eigenvalues.push(lam);
        eigenvectors.push(x);
    }
    Ok(SpectralResult {
        eigenvalues,
        eigenvectors,
        residuals,
        iterations: 1,
        solver: SolverKind::Dense,
        shift: None,
        seed: 0,
    })
}
