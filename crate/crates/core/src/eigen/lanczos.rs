use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{dot, residual, SolverKind, SolverOptions, SpectralResult};
use crate::error::{Error, Result};
use crate::fem::DiscreteForm;
use crate::sparse::EnvelopeCholesky;

const CHECK_STRIDE: usize = 8;

/// Lanczos in the M-inner product on `(K - tau M)^{-1} M`, with full
/// reorthogonalization. Ritz values `nu` map back to `lambda = tau + 1/nu`.
pub(super) fn shift_invert(
    form: &DiscreteForm,
    chol: &EnvelopeCholesky,
    tau: f64,
    k: usize,
    opts: &SolverOptions,
) -> Result<SpectralResult> {
    let n = form.dim();
    let (kmat, mmat) = (&form.form, &form.mass);
    let max_steps = opts.max_iter.max(k + 1).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();

    let orthonormalize = |mut w: Vec<f64>, basis: &[Vec<f64>]| -> (Vec<f64>, Vec<f64>, f64) {
        for _ in 0..2 {
            let mw = mmat.matvec(&w);
            for v in basis {
                let c = dot(&mw, v);
                w.iter_mut().zip(v).for_each(|(a, b)| *a -= c * b);
            }
        }
        let mw = mmat.matvec(&w);
        let norm = dot(&w, &mw).max(0.0).sqrt();
        (w, mw, norm)
    };
    let random = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect() };

    let (v0, mv0, nrm) = orthonormalize(random(&mut rng), &basis);
    let scale = 1.0 / nrm;
    basis.push(v0.into_iter().map(|x| x * scale).collect());
    let mut mv_cur: Vec<f64> = mv0.into_iter().map(|x| x * scale).collect();

    let mut last_worst = f64::INFINITY;
    for j in 0..max_steps {
        let mut w = chol.solve(&mv_cur);
        let a = dot(&w, &mv_cur);
        alpha.push(a);
        {
            let vj = &basis[j];
            w.iter_mut().zip(vj).for_each(|(x, v)| *x -= a * v);
            if j > 0 {
                let b = beta[j - 1];
                let vp = &basis[j - 1];
                w.iter_mut().zip(vp).for_each(|(x, v)| *x -= b * v);
            }
        }
        let (mut w, mut mw, mut b) = orthonormalize(w, &basis);
        let scale_ref = alpha.iter().fold(0.0f64, |m, x| m.max(x.abs()));

        let steps = j + 1;
        let at_end = steps == max_steps;
        if steps >= k && (steps % CHECK_STRIDE == 0 || at_end || b <= 1e-14 * scale_ref) {
            let t = tridiagonal(&alpha, &beta[..j]);
            let eig = SymmetricEigen::new(t);
            let mut order: Vec<usize> = (0..steps).collect();
            order.sort_by(|&p, &q| eig.eigenvalues[q].total_cmp(&eig.eigenvalues[p]));
            let wanted = &order[..k];
            let estimate = wanted
                .iter()
                .map(|&c| (b * eig.eigenvectors[(j, c)]).abs() / eig.eigenvalues[c].abs())
                .fold(0.0, f64::max);
            if estimate <= opts.tol || at_end || b <= 1e-14 * scale_ref {
                let mut vals = Vec::with_capacity(k);
                let mut vecs = Vec::with_capacity(k);
                let mut res = Vec::with_capacity(k);
                for &c in wanted {
                    let nu = eig.eigenvalues[c];
                    let mut x = vec![0.0; n];
                    for (i, v) in basis.iter().enumerate() {
                        let y = eig.eigenvectors[(i, c)];
                        x.iter_mut().zip(v).for_each(|(a, b)| *a += y * b);
                    }
                    let lam = tau + 1.0 / nu;
                    res.push(residual(kmat, mmat, lam, &x));
                    vals.push(lam);
                    vecs.push(x);
                }
                let worst = res.iter().copied().fold(0.0, f64::max);
                last_worst = worst;
                if worst <= opts.tol {
                    // Ritz values come out ascending in lambda already.
                    return Ok(SpectralResult {
                        eigenvalues: vals,
                        eigenvectors: vecs,
                        residuals: res,
                        iterations: steps,
                        solver: SolverKind::ShiftInvertLanczos,
                        shift: Some(tau),
                        seed: opts.seed,
                    });
                }
            }
        }
        if at_end {
            break;
        }
        if b <= 1e-14 * scale_ref {
            // Invariant subspace: continue from a fresh direction.
            let (w2, mw2, b2) = orthonormalize(random(&mut rng), &basis);
            w = w2;
            mw = mw2;
            beta.push(0.0);
            b = b2;
        } else {
            beta.push(b);
        }
        let s = 1.0 / b;
        basis.push(w.into_iter().map(|x| x * s).collect());
        mv_cur = mw.into_iter().map(|x| x * s).collect();
    }
    Err(Error::NoConvergence {
        iterations: max_steps,
        residual: last_worst,
    })
}

fn tridiagonal(alpha: &[f64], beta: &[f64]) -> DMatrix<f64> {
    let m = alpha.len();
    let mut t = DMatrix::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    t
}
