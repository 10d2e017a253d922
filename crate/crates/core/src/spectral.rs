//! Eigenvalue problems: the Dirichlet problem of the form, the Robin problem
//! and the boundary operator, plus the principal-eigenvalue checks.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::assembly::{assemble, AssembledSystem};
use crate::coefficients::CoefficientSet;
use crate::dtn::DtnOperator;
use crate::error::{Error, Result};
use crate::linalg::eig::{general_pencil, residual, sym_pencil, C64};
use crate::linalg::sparse::{axpby, spmv, submatrix, to_dense};
use crate::linalg::BandedLu;
use crate::mesh::Mesh;

/// Relative change of the Rayleigh quotient at which inverse iteration stops.
pub const LAMBDA1_TOL: f64 = 1e-14;
const LAMBDA1_MAX_ITER: usize = 5000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum ProblemTag {
    Dirichlet,
    Robin(f64),
    Dtn(f64),
}

#[derive(Clone, Debug)]
pub struct SpectrumResult {
    /// Sorted by real part, then imaginary part.
    pub eigenvalues: Vec<C64>,
    /// Sign-normalized: the largest-magnitude component is real and positive.
    pub eigenvectors: Option<Vec<DVector<C64>>>,
    pub problem: ProblemTag,
    /// `‖A x - μ B x‖ / ‖x‖` per returned pair.
    pub residual_norms: Vec<f64>,
    pub warnings: Vec<String>,
}

impl SpectrumResult {
    pub fn real_parts(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|z| z.re).collect()
    }
}

fn clamp_count(count: usize, dim: usize, warnings: &mut Vec<String>) -> Result<usize> {
    if count == 0 {
        return Err(Error::InvalidArgument("eigenvalue count must be positive".into()));
    }
    if count > dim {
        warnings.push(format!("requested {count} eigenvalues, dimension is {dim}; clamped"));
    }
    Ok(count.min(dim))
}

/// Makes the largest-magnitude component real positive and the 2-norm one.
pub fn normalize_sign(v: &mut DVector<C64>) {
    let Some((_, &pivot)) = v.iter().enumerate().max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()).then(b.0.cmp(&a.0)))
    else {
        return;
    };
    if pivot.norm() == 0.0 {
        return;
    }
    let phase = pivot.conj() / pivot.norm();
    let norm = v.norm();
    for z in v.iter_mut() {
        *z = *z * phase / norm;
    }
}

/// The `count` smallest eigenpairs of a symmetric-definite pencil.
pub fn eig_sym_pencil(a: &DMatrix<f64>, b: &DMatrix<f64>, count: usize, problem: ProblemTag) -> Result<SpectrumResult> {
    let mut warnings = Vec::new();
    let count = clamp_count(count, a.nrows(), &mut warnings)?;
    let (values, vectors) = sym_pencil(a, b)?;
    let mut out_vals = Vec::with_capacity(count);
    let mut out_vecs = Vec::with_capacity(count);
    let mut residuals = Vec::with_capacity(count);
    for (k, &value) in values.iter().enumerate().take(count) {
        let mu = C64::new(value, 0.0);
        let mut v: DVector<C64> = vectors.column(k).map(|x| C64::new(x, 0.0));
        normalize_sign(&mut v);
        residuals.push(residual(a, b, mu, &v));
        out_vals.push(mu);
        out_vecs.push(v);
    }
    Ok(SpectrumResult {
        eigenvalues: out_vals,
        eigenvectors: Some(out_vecs),
        problem,
        residual_norms: residuals,
        warnings,
    })
}

/// The `count` eigenpairs of smallest real part of a general pencil with `b`
/// symmetric positive definite.
pub fn eig_general_pencil(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    count: usize,
    problem: ProblemTag,
) -> Result<SpectrumResult> {
    let mut warnings = Vec::new();
    let count = clamp_count(count, a.nrows(), &mut warnings)?;
    let (values, vectors) = general_pencil(a, b, count)?;
    let mut out_vecs = Vec::with_capacity(count);
    let mut residuals = Vec::with_capacity(count);
    for (mu, mut v) in values.iter().zip(vectors) {
        normalize_sign(&mut v);
        residuals.push(residual(a, b, *mu, &v));
        out_vecs.push(v);
    }
    Ok(SpectrumResult {
        eigenvalues: values[..count].to_vec(),
        eigenvectors: Some(out_vecs),
        problem,
        residual_norms: residuals,
        warnings,
    })
}

/// First eigenvalue of the Dirichlet Laplacian on the mesh.
pub fn lambda1_dirichlet(mesh: &Mesh) -> Result<f64> {
    lambda1_form(&assemble(mesh, &CoefficientSet::laplace())?)
}

/// Principal Dirichlet eigenvalue of the assembled form: the eigenvalue of
/// smallest real part of `K_II x = μ M_II x`, by shifted inverse iteration.
/// The shift lies strictly left of the spectrum, so the principal eigenvalue
/// is also the one closest to it.
pub fn lambda1_form(sys: &AssembledSystem) -> Result<f64> {
    let ii = &sys.interior_idx;
    if ii.is_empty() {
        return Err(Error::EmptyInterior);
    }
    let norms = &sys.sup_norms;
    let kappa = sys.coefficients.kappa;
    let sigma = -(norms.b_plus_c.powi(2) / (2.0 * kappa) + norms.d_minus) - 1.0;
    let k_ii = submatrix(&sys.k, ii, ii);
    let m_ii = submatrix(&sys.m, ii, ii);
    let shifted = axpby(1.0, &k_ii, -sigma, &m_ii);
    let lu = BandedLu::factor(&shifted)?;
    let quotient = |x: &DVector<f64>| x.dot(&spmv(&k_ii, x)) / x.dot(&spmv(&m_ii, x));
    let mut x = DVector::from_element(ii.len(), 1.0);
    let mut rq = quotient(&x);
    for _ in 0..LAMBDA1_MAX_ITER {
        let mut y = lu.solve(&spmv(&m_ii, &x));
        let norm = y.amax();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::NoConvergence);
        }
        y /= norm;
        let next = quotient(&y);
        let done = (next - rq).abs() <= LAMBDA1_TOL * next.abs().max(1.0);
        x = y;
        rq = next;
        if done {
            return Ok(rq);
        }
    }
    Err(Error::NoConvergence)
}

/// Dense Dirichlet spectrum of the form, on the interior nodes.
pub fn dirichlet_spectrum(sys: &AssembledSystem, count: usize) -> Result<SpectrumResult> {
    let ii = &sys.interior_idx;
    if ii.is_empty() {
        return Err(Error::EmptyInterior);
    }
    let k = to_dense(&submatrix(&sys.k, ii, ii));
    let m = to_dense(&submatrix(&sys.m, ii, ii));
    if sys.is_self_adjoint() {
        eig_sym_pencil(&sym(&k), &m, count, ProblemTag::Dirichlet)
    } else {
        eig_general_pencil(&k, &m, count, ProblemTag::Dirichlet)
    }
}

/// `(K + β Mb) w = λ M w` on all nodes.
pub fn robin_spectrum(sys: &AssembledSystem, beta: f64, count: usize) -> Result<SpectrumResult> {
    let a = to_dense(&axpby(1.0, &sys.k, beta, &sys.mb));
    let m = to_dense(&sys.m);
    if sys.is_self_adjoint() {
        eig_sym_pencil(&sym(&a), &m, count, ProblemTag::Robin(beta))
    } else {
        eig_general_pencil(&a, &m, count, ProblemTag::Robin(beta))
    }
}

/// `S φ = μ Mb φ`.
pub fn dtn_spectrum(op: &DtnOperator, count: usize) -> Result<SpectrumResult> {
    let tag = ProblemTag::Dtn(op.lambda);
    if op.is_self_adjoint() {
        eig_sym_pencil(&op.s_sym(), &op.mb, count, tag)
    } else {
        eig_general_pencil(&op.s, &op.mb, count, tag)
    }
}

fn sym(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Principal eigenpair diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KreinRutmanReport {
    /// `μ_1` is real (to `1e-10` relative).
    pub real: bool,
    /// `Re μ_2 - Re μ_1`.
    pub gap: f64,
    /// The gap exceeds `1e-8` of the spectral scale.
    pub simple: bool,
    /// Smallest real part of the normalized principal eigenvector, relative to
    /// its largest component.
    pub min_component_ratio: f64,
    /// The principal eigenvector is entrywise nonnegative (to `1e-8`) and real.
    pub sign_definite: bool,
}

impl KreinRutmanReport {
    pub fn holds(&self) -> bool {
        self.real && self.simple && self.sign_definite
    }
}

pub fn krein_rutman_check(spec: &SpectrumResult) -> Result<KreinRutmanReport> {
    let vectors =
        spec.eigenvectors.as_ref().ok_or_else(|| Error::InvalidArgument("spectrum carries no eigenvectors".into()))?;
    if spec.eigenvalues.len() < 2 {
        return Err(Error::InvalidArgument("need at least two eigenvalues".into()));
    }
    let scale = spec.eigenvalues.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let mu1 = spec.eigenvalues[0];
    let gap = spec.eigenvalues[1].re - mu1.re;
    let v = &vectors[0];
    let top = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let min_re = v.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    let max_im = v.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let ratio = min_re / top;
    Ok(KreinRutmanReport {
        real: mu1.im.abs() <= 1e-10 * scale,
        gap,
        simple: gap > 1e-8 * scale,
        min_component_ratio: ratio,
        sign_definite: ratio >= -1e-8 && max_im <= 1e-8 * top,
    })
}
