//! The discrete Dirichlet-to-Neumann operator.
//!
//! With `A = K - λM` split into interior (`I`) and boundary (`B`) blocks, the
//! operator is the pair `(S, Mb)` where
//!
//! ```text
//! S = A_BB - A_BI A_II⁻¹ A_IB
//! ```
//!
//! and `Mb` is the boundary Gram matrix, so `D_λ φ = Mb⁻¹ S φ`. The columns of
//! the lift `[I; -A_II⁻¹ A_IB]` span the discrete-harmonic space
//! `{u : a_λ(u, v) = 0 for every interior test function v}`, and
//! `φᵀ S φ = a_λ(lift φ, lift φ)`.

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector};
use nalgebra_sparse::CsrMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::assembly::AssembledSystem;
use crate::coefficients::CoefficientSet;
use crate::error::{Error, Result};
use crate::linalg::eig::{sym_pencil, C64};
use crate::linalg::sparse::{norm_inf, spmm, spmv, submatrix, to_dense};
use crate::linalg::BandedLu;
use crate::spectral::{dtn_spectrum, SpectrumResult};

pub const DEFAULT_PIVOT_TOL: f64 = 1e-10;
/// Interior blocks with a larger 1-norm condition estimate are treated as
/// singular.
pub const CONDITION_LIMIT: f64 = 1e12;

#[derive(Clone, Debug)]
pub struct DtnOperator {
    pub lambda: f64,
    /// Schur complement, `m x m`, boundary loop order.
    pub s: DMatrix<f64>,
    /// Boundary Gram matrix, `m x m`.
    pub mb: DMatrix<f64>,
    pub interior_idx: Vec<usize>,
    pub boundary_idx: Vec<usize>,
    /// `K - λM` on all nodes.
    pub a: CsrMatrix<f64>,
    /// `A_II⁻¹ A_IB`, `n_I x m`.
    lift_block: DMatrix<f64>,
    lift_factorization: Option<Arc<BandedLu>>,
    pub pivot_ratio: f64,
    pub condition_estimate: f64,
    pub coefficients: CoefficientSet,
}

impl DtnOperator {
    pub fn build(sys: &AssembledSystem, lambda: f64) -> Result<Self> {
        Self::build_with_tol(sys, lambda, DEFAULT_PIVOT_TOL)
    }

    /// Eliminates the interior unknowns of `K - λM`. Fails with
    /// [`Error::SpectrumHit`] when the interior block is numerically singular,
    /// i.e. `λ` lies on the discrete Dirichlet spectrum.
    pub fn build_with_tol(sys: &AssembledSystem, lambda: f64, pivot_tol: f64) -> Result<Self> {
        if !(pivot_tol > 0.0) {
            return Err(Error::InvalidArgument(format!("pivot_tol must be positive, got {pivot_tol}")));
        }
        let a = sys.shifted(lambda);
        let (ii, bb) = (&sys.interior_idx, &sys.boundary_idx);
        let a_bb = to_dense(&submatrix(&a, bb, bb));
        let mb = to_dense(&sys.mb_boundary());
        if ii.is_empty() {
            return Ok(DtnOperator {
                lambda,
                s: a_bb,
                mb,
                interior_idx: Vec::new(),
                boundary_idx: bb.clone(),
                a,
                lift_block: DMatrix::zeros(0, bb.len()),
                lift_factorization: None,
                pivot_ratio: 1.0,
                condition_estimate: 1.0,
                coefficients: sys.coefficients.clone(),
            });
        }
        let a_ii = submatrix(&a, ii, ii);
        let hit = |pivot_ratio: f64, condition: f64| Error::SpectrumHit { lambda, pivot_ratio, condition };
        let lu = BandedLu::factor(&a_ii).map_err(|_| hit(0.0, f64::INFINITY))?;
        let condition = lu.condition_estimate();
        if lu.pivot_ratio < pivot_tol || !(condition <= CONDITION_LIMIT) {
            return Err(hit(lu.pivot_ratio, condition));
        }
        let a_ib = to_dense(&submatrix(&a, ii, bb));
        let a_bi = submatrix(&a, bb, ii);
        let columns: Vec<DVector<f64>> =
            (0..bb.len()).into_par_iter().map(|j| lu.solve(&a_ib.column(j).into_owned())).collect();
        let lift_block = DMatrix::from_columns(&columns);
        let s = a_bb - spmm(&a_bi, &lift_block);
        Ok(DtnOperator {
            lambda,
            s,
            mb,
            interior_idx: ii.clone(),
            boundary_idx: bb.clone(),
            a,
            lift_block,
            pivot_ratio: lu.pivot_ratio,
            condition_estimate: condition,
            lift_factorization: Some(Arc::new(lu)),
            coefficients: sys.coefficients.clone(),
        })
    }

    pub fn boundary_dim(&self) -> usize {
        self.boundary_idx.len()
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn is_self_adjoint(&self) -> bool {
        self.coefficients.is_symmetric()
    }

    /// `(S + Sᵀ) / 2`.
    pub fn s_sym(&self) -> DMatrix<f64> {
        (&self.s + self.s.transpose()) * 0.5
    }

    /// Discrete-harmonic extension: `u_B = φ`, `u_I = -A_II⁻¹ A_IB φ`.
    pub fn lift(&self, phi: &DVector<f64>) -> Result<DVector<f64>> {
        if phi.len() != self.boundary_dim() {
            return Err(Error::LengthMismatch { expected: self.boundary_dim(), got: phi.len() });
        }
        let interior = &self.lift_block * phi;
        let mut u = DVector::zeros(self.dim());
        for (k, &node) in self.boundary_idx.iter().enumerate() {
            u[node] = phi[k];
        }
        for (k, &node) in self.interior_idx.iter().enumerate() {
            u[node] = -interior[k];
        }
        Ok(u)
    }

    /// Lift of every boundary basis vector as columns of an `n x m` matrix.
    pub fn lift_matrix(&self) -> DMatrix<f64> {
        let mut l = DMatrix::zeros(self.dim(), self.boundary_dim());
        for (k, &node) in self.boundary_idx.iter().enumerate() {
            l[(node, k)] = 1.0;
        }
        for (r, &node) in self.interior_idx.iter().enumerate() {
            for k in 0..self.boundary_dim() {
                l[(node, k)] = -self.lift_block[(r, k)];
            }
        }
        l
    }

    /// Solves the interior problem `A_II x = rhs` with the stored factorization.
    pub fn solve_interior(&self, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        let lu = self.lift_factorization.as_ref().ok_or(Error::EmptyInterior)?;
        Ok(lu.solve(rhs))
    }

    pub fn trace(&self, u: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.boundary_dim(), self.boundary_idx.iter().map(|&b| u[b]))
    }

    /// Splits `u = u0 + u1` with `u0` vanishing on the boundary and `u1`
    /// discrete-harmonic.
    pub fn decompose(&self, u: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
        if u.len() != self.dim() {
            return Err(Error::LengthMismatch { expected: self.dim(), got: u.len() });
        }
        let u1 = self.lift(&self.trace(u))?;
        let mut u0 = DVector::zeros(u.len());
        for &i in &self.interior_idx {
            u0[i] = u[i] - u1[i];
        }
        Ok((u0, u1))
    }

    /// `a_λ(u, v) = vᵀ A u` (trial `u`, test `v`).
    pub fn form(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        v.dot(&spmv(&self.a, u))
    }

    /// The boundary form `b_λ(φ, ψ) = a_λ(lift φ, lift ψ)`, evaluated through
    /// the lifts rather than through `S`.
    pub fn boundary_form(&self, phi: &DVector<f64>, psi: &DVector<f64>) -> Result<f64> {
        Ok(self.form(&self.lift(phi)?, &self.lift(psi)?))
    }

    /// Interior residual `(A u)_I`.
    pub fn interior_residual(&self, u: &DVector<f64>) -> DVector<f64> {
        let au = spmv(&self.a, u);
        DVector::from_iterator(self.interior_idx.len(), self.interior_idx.iter().map(|&i| au[i]))
    }

    /// The dense generator `G = Mb⁻¹ S`.
    pub fn generator(&self) -> Result<DMatrix<f64>> {
        let chol = Cholesky::new(self.mb.clone()).ok_or(Error::NotPositiveDefinite)?;
        Ok(chol.solve(&self.s))
    }

    /// Same boundary discretization and node partition.
    pub fn same_mesh(&self, other: &DtnOperator) -> bool {
        self.boundary_idx == other.boundary_idx && self.interior_idx == other.interior_idx && self.mb == other.mb
    }
}

/// Weak conormal derivative of a discrete-harmonic `u`:
/// `h = Mb_BB⁻¹ (A u)_B` with `A = K - λM`.
pub fn conormal(sys: &AssembledSystem, lambda: f64, u: &DVector<f64>) -> Result<DVector<f64>> {
    conormal_with_tol(sys, lambda, u, 1e-10)
}

pub fn conormal_with_tol(sys: &AssembledSystem, lambda: f64, u: &DVector<f64>, tol: f64) -> Result<DVector<f64>> {
    if u.len() != sys.dim() {
        return Err(Error::LengthMismatch { expected: sys.dim(), got: u.len() });
    }
    let a = sys.shifted(lambda);
    let au = spmv(&a, u);
    let scale = norm_inf(&a) * u.amax();
    let residual = sys.interior_idx.iter().map(|&i| au[i].abs()).fold(0.0, f64::max);
    if residual > tol * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NotHarmonic { residual, tolerance: tol * scale });
    }
    let rhs = DVector::from_iterator(sys.boundary_idx.len(), sys.boundary_idx.iter().map(|&b| au[b]));
    let mb = to_dense(&sys.mb_boundary());
    let chol = Cholesky::new(mb).ok_or(Error::NotPositiveDefinite)?;
    Ok(chol.solve(&rhs))
}

/// Smallest `ω` with `sym(S) + ω Mb ⪰ (κ/4) G_harm`, where `G_harm` is the H¹
/// Gram matrix compressed onto the discrete-harmonic space. Negative values
/// mean the estimate already holds with `ω = 0`.
pub fn ellipticity_constant(op: &DtnOperator, sys: &AssembledSystem, kappa: f64) -> Result<f64> {
    let l = op.lift_matrix();
    let gl = spmm(&sys.h1_gram, &l);
    let g_harm = l.transpose() * gl;
    let g_harm = (&g_harm + g_harm.transpose()) * 0.5;
    let pencil = op.s_sym() - g_harm * (kappa / 4.0);
    let (values, _) = sym_pencil(&pencil, &op.mb)?;
    Ok(-values[0])
}

/// One row of the spectral duality check between the boundary operator and
/// the Robin problem with `β = -μ`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DualityRow {
    pub mu: C64Ser,
    pub beta: C64Ser,
    /// `‖(K + β Mb - λ M) w‖ / ‖w‖` with `w = lift(φ)`.
    pub robin_residual: f64,
    /// `‖K‖∞ + |β| ‖Mb‖∞ + |λ| ‖M‖∞`.
    pub matrix_scale: f64,
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct C64Ser {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for C64Ser {
    fn from(z: C64) -> Self {
        C64Ser { re: z.re, im: z.im }
    }
}

/// For the `count` smallest eigenpairs `S φ = μ Mb φ`, lifts `φ` and measures
/// how well `w` solves the Robin eigenproblem `(K - μ Mb) w = λ M w`.
pub fn duality_residuals(op: &DtnOperator, sys: &AssembledSystem, count: usize) -> Result<Vec<DualityRow>> {
    let spec = dtn_spectrum(op, count)?;
    duality_from_spectrum(op, sys, &spec)
}

pub fn duality_from_spectrum(
    op: &DtnOperator,
    sys: &AssembledSystem,
    spec: &SpectrumResult,
) -> Result<Vec<DualityRow>> {
    let vectors =
        spec.eigenvectors.as_ref().ok_or_else(|| Error::InvalidArgument("spectrum carries no eigenvectors".into()))?;
    let (k_norm, mb_norm, m_norm) = (norm_inf(&sys.k), norm_inf(&sys.mb), norm_inf(&sys.m));
    let to_c = |m: &CsrMatrix<f64>| to_dense(m).map(|v| C64::new(v, 0.0));
    let (kc, mbc, mc) = (to_c(&sys.k), to_c(&sys.mb), to_c(&sys.m));
    let lift = op.lift_matrix().map(|v| C64::new(v, 0.0));
    let mut rows = Vec::with_capacity(vectors.len());
    for (mu, phi) in spec.eigenvalues.iter().zip(vectors) {
        let beta = -*mu;
        let w = &lift * phi;
        let r = &kc * &w + &mbc * &w * beta - &mc * &w * C64::new(op.lambda, 0.0);
        rows.push(DualityRow {
            mu: (*mu).into(),
            beta: beta.into(),
            robin_residual: r.norm() / w.norm(),
            matrix_scale: k_norm + beta.norm() * mb_norm + op.lambda.abs() * m_norm,
        });
    }
    Ok(rows)
}

/// Numerical nullity of `S + β Mb` and of `K + β Mb - λ M` (singular values
/// below `tol` times the largest one).
pub fn kernel_dimensions(op: &DtnOperator, sys: &AssembledSystem, beta: f64, tol: f64) -> (usize, usize) {
    let boundary = &op.s + &op.mb * beta;
    let full = to_dense(&sys.k) + to_dense(&sys.mb) * beta - to_dense(&sys.m) * op.lambda;
    (nullity(boundary, tol), nullity(full, tol))
}

fn nullity(m: DMatrix<f64>, tol: f64) -> usize {
    let sv = m.singular_values();
    let top = sv.max();
    sv.iter().filter(|&&s| s <= tol * top).count()
}
