//! Dense generalized eigenproblems `A x = mu B x` with `B` symmetric
//! positive definite, reduced to standard form through `B = L L^T`.

use nalgebra::{Cholesky, Complex, DMatrix, DVector, Schur, SymmetricEigen};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Full symmetric-definite decomposition, eigenvalues ascending; eigenvector
/// columns are `B`-orthonormal.
pub fn sym_pencil(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let chol = Cholesky::new(b.clone()).ok_or(Error::NotPositiveDefinite)?;
    let l = chol.l();
    let c = congruence(&l, a)?;
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(c, f64::EPSILON, 0).ok_or(Error::NoConvergence)?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let y = DMatrix::from_fn(a.nrows(), order.len(), |r, k| eig.eigenvectors[(r, order[k])]);
    let x = l.transpose().solve_upper_triangular(&y).ok_or(Error::Singular)?;
    Ok((values, x))
}

/// `L^{-1} A L^{-T}`.
fn congruence(l: &DMatrix<f64>, a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let left = l.solve_lower_triangular(a).ok_or(Error::Singular)?;
    let both = l.solve_lower_triangular(&left.transpose()).ok_or(Error::Singular)?;
    Ok(both.transpose())
}

/// Eigenvalues of a general real pencil, sorted by real part then imaginary
/// part, with eigenvectors for the first `vectors` of them from complex
/// inverse iteration.
pub fn general_pencil(a: &DMatrix<f64>, b: &DMatrix<f64>, vectors: usize) -> Result<(Vec<C64>, Vec<DVector<C64>>)> {
    let n = a.nrows();
    let chol = Cholesky::new(b.clone()).ok_or(Error::NotPositiveDefinite)?;
    let l = chol.l();
    let c = congruence(&l, a)?;
    let schur = Schur::try_new(c.clone(), f64::EPSILON, 100 * n.max(10)).ok_or(Error::NoConvergence)?;
    let mut values: Vec<C64> = schur.complex_eigenvalues().iter().copied().collect();
    values.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    let scale = c.amax().max(f64::MIN_POSITIVE);
    for v in &mut values {
        // clean imaginary roundoff on real eigenvalues
        if v.im.abs() <= 1e-12 * scale {
            v.im = 0.0;
        }
    }
    let cc: DMatrix<C64> = c.map(|x| C64::new(x, 0.0));
    let lt = l.transpose();
    let mut out = Vec::with_capacity(vectors.min(n));
    for &mu in values.iter().take(vectors) {
        let y = inverse_iteration(&cc, mu, scale)?;
        let re = lt.solve_upper_triangular(&y.map(|z| z.re)).ok_or(Error::Singular)?;
        let im = lt.solve_upper_triangular(&y.map(|z| z.im)).ok_or(Error::Singular)?;
        out.push(DVector::from_fn(n, |i, _| C64::new(re[i], im[i])));
    }
    Ok((values, out))
}

fn inverse_iteration(c: &DMatrix<C64>, mu: C64, scale: f64) -> Result<DVector<C64>> {
    let n = c.nrows();
    let shift = mu + C64::new(1e-11 * scale, 1e-11 * scale);
    let mut m = c.clone();
    for i in 0..n {
        m[(i, i)] -= shift;
    }
    let lu = m.lu();
    let mut x = DVector::from_fn(n, |i, _| C64::new(1.0 + (i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()));
    for _ in 0..3 {
        x = lu.solve(&x).ok_or(Error::Singular)?;
        let norm = x.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::NoConvergence);
        }
        x /= C64::new(norm, 0.0);
    }
    Ok(x)
}

/// `|| A x - mu B x || / || x ||`.
pub fn residual(a: &DMatrix<f64>, b: &DMatrix<f64>, mu: C64, x: &DVector<C64>) -> f64 {
    let ac = a.map(|v| C64::new(v, 0.0));
    let bc = b.map(|v| C64::new(v, 0.0));
    let r = &ac * x - &bc * x * mu;
    r.norm() / x.norm()
}

pub fn real_residual(a: &DMatrix<f64>, b: &DMatrix<f64>, mu: f64, x: &DVector<f64>) -> f64 {
    (a * x - b * x * mu).norm() / x.norm()
}

/// Dense symmetric eigenvalues only.
pub fn sym_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(a.clone()).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}
