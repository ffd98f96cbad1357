use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{SolverKind, SolverOptions, SpectralResult};
use crate::error::{Error, Result};
use crate::fem::DiscreteForm;
use crate::sparse::SparseSymMatrix;

fn apply(a: &SparseSymMatrix, x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(x.nrows(), x.ncols());
    let mut buf = vec![0.0; x.nrows()];
    for c in 0..x.ncols() {
        a.matvec_into(x.column(c).as_slice(), &mut buf);
        out.column_mut(c).copy_from_slice(&buf);
    }
    out
}

fn m_orthonormal_once(s: &DMatrix<f64>, ms: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let gram = s.transpose() * ms;
    let gram = (&gram + gram.transpose()) * 0.5;
    // Unit-normalizing columns first keeps tiny residual blocks from being
    // swamped by the iterate block in the Gram spectrum.
    let norms: Vec<f64> = (0..gram.nrows())
        .map(|i| if gram[(i, i)] > 0.0 { 1.0 / gram[(i, i)].sqrt() } else { 0.0 })
        .collect();
    let scaled = DMatrix::from_fn(gram.nrows(), gram.ncols(), |i, j| gram[(i, j)] * norms[i] * norms[j]);
    let eig = SymmetricEigen::new(scaled);
    let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..eig.eigenvalues.len())
        .filter(|&i| eig.eigenvalues[i] > 1e-12 * top)
        .collect();
    let mut coef = DMatrix::zeros(s.ncols(), keep.len());
    for (c, &i) in keep.iter().enumerate() {
        let scale = 1.0 / eig.eigenvalues[i].sqrt();
        for r in 0..s.ncols() {
            coef[(r, c)] = eig.eigenvectors[(r, i)] * scale * norms[r];
        }
    }
    (s * &coef, coef)
}

/// M-orthonormal basis of `span(s)`, dropping numerically dependent
/// directions. Returns the basis and the coefficient map `s -> basis`.
fn m_orthonormal(m: &SparseSymMatrix, s: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let (q, c1) = m_orthonormal_once(s, &apply(m, s));
    let (q, c2) = m_orthonormal_once(&q, &apply(m, &q));
    (q, c1 * c2)
}

/// Block preconditioned eigensolver with a Jacobi preconditioner.
pub fn lobpcg(form: &DiscreteForm, k: usize, opts: &SolverOptions) -> Result<SpectralResult> {
    let n = form.dim();
    if k == 0 || k >= n {
        return Err(Error::InvalidInput(format!(
            "requested {k} eigenpairs of a {n}-dimensional problem"
        )));
    }
    let (kmat, mmat) = (&form.form, &form.mass);
    let block = (k + 4).min(n / 3).max(k);
    let kd = kmat.diagonal();
    let md = mmat.diagonal();
    let shift = kd
        .iter()
        .zip(&md)
        .map(|(a, b)| a / b)
        .fold(f64::INFINITY, f64::min)
        .min(0.0)
        .abs();
    let precond: Vec<f64> = kd
        .iter()
        .zip(&md)
        .map(|(a, b)| 1.0 / (a + (shift + 1.0) * b).abs().max(f64::MIN_POSITIVE))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let x0 = DMatrix::from_fn(n, block, |_, _| rng.gen_range(-1.0..1.0));
    let (mut x, _) = m_orthonormal(mmat, &x0);
    let mut p: Option<DMatrix<f64>> = None;
    let mut worst = f64::INFINITY;
    let max_iter = opts.max_iter.max(50) * 10;

    for it in 0..max_iter {
        let kx = apply(kmat, &x);
        let mx = apply(mmat, &x);
        let theta = DVector::from_fn(x.ncols(), |c, _| x.column(c).dot(&kx.column(c)));
        let mut r = kx.clone();
        let mut res = Vec::with_capacity(x.ncols());
        for c in 0..x.ncols() {
            let mut col = r.column_mut(c);
            col -= mx.column(c) * theta[c];
            res.push(col.norm() / mx.column(c).norm());
        }
        worst = res[..k].iter().copied().fold(0.0, f64::max);
        if worst <= opts.tol {
            let mut order: Vec<usize> = (0..x.ncols()).collect();
            order.sort_by(|&a, &b| theta[a].total_cmp(&theta[b]));
            let order = &order[..k];
            return Ok(SpectralResult {
                eigenvalues: order.iter().map(|&c| theta[c]).collect(),
                eigenvectors: order.iter().map(|&c| x.column(c).iter().copied().collect()).collect(),
                residuals: order.iter().map(|&c| res[c]).collect(),
                iterations: it,
                solver: SolverKind::Lobpcg,
                shift: None,
                seed: opts.seed,
            });
        }
        for (i, mut row) in r.row_iter_mut().enumerate() {
            row *= precond[i];
        }

        let mut cols: Vec<DMatrix<f64>> = vec![x.clone(), r];
        if let Some(p) = &p {
            cols.push(p.clone());
        }
        let width: usize = cols.iter().map(|c| c.ncols()).sum();
        let mut s = DMatrix::zeros(n, width);
        let mut off = 0;
        for c in &cols {
            s.columns_mut(off, c.ncols()).copy_from(c);
            off += c.ncols();
        }
        let (q, coef) = m_orthonormal(mmat, &s);
        let kq = apply(kmat, &q);
        let reduced = q.transpose() * kq;
        let reduced = (&reduced + reduced.transpose()) * 0.5;
        let eig = SymmetricEigen::new(reduced);
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let take = block.min(order.len());
        let mut y = DMatrix::zeros(eig.eigenvalues.len(), take);
        for (c, &i) in order[..take].iter().enumerate() {
            y.set_column(c, &eig.eigenvectors.column(i));
        }
        let in_s = &coef * &y;
        let xb = block;
        let new_x = &s * &in_s;
        let tail = s.columns(xb, width - xb) * in_s.rows(xb, width - xb);
        x = new_x;
        p = Some(tail);
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::dense_oracle;
    use crate::fem::{assemble, DofMap};
    use crate::geometry::{build_mesh, DomainSpec, TruncationBc};
    use crate::sigma::SigmaProfile;

    #[test]
    fn matches_dense_on_small_band() {
        let spec = DomainSpec::new(1.0, 3.0, 0.25, TruncationBc::Dirichlet).unwrap();
        let mesh = build_mesh(&spec).unwrap();
        let dofs = DofMap::new(&mesh, spec.truncation_bc);
        let form = assemble(&mesh, &SigmaProfile::constant(0.5), &dofs).unwrap();
        let opts = SolverOptions { tol: 1e-9, ..SolverOptions::default() };
        let it = lobpcg(&form, 3, &opts).unwrap();
        let dense = dense_oracle(&form).unwrap();
        for i in 0..3 {
            let rel = (it.eigenvalues[i] - dense.eigenvalues[i]).abs() / dense.eigenvalues[i].abs();
            assert!(rel < 1e-8, "{i}: {} vs {}", it.eigenvalues[i], dense.eigenvalues[i]);
        }
        assert_eq!(it.solver, SolverKind::Lobpcg);
    }
}
