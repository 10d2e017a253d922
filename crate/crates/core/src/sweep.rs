//! Boundary spectra along a range of `λ`.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::assembly::AssembledSystem;
use crate::dtn::DtnOperator;
use crate::error::{Error, Result};
use crate::linalg::eig::sym_pencil;
use crate::linalg::sparse::{submatrix, to_dense};
use crate::spectral::dtn_spectrum;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub lambda: f64,
    /// 1-based eigenvalue index.
    pub k: usize,
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Values of `λ` on the Dirichlet spectrum, where no operator exists.
    pub skipped: Vec<f64>,
    /// Self-adjoint case only: every `Re μ_k` is nonincreasing between
    /// consecutive steps that do not straddle a Dirichlet eigenvalue.
    pub monotone: Option<bool>,
}

impl SweepResult {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "lambda,k,re_mu,im_mu")?;
        for r in &self.rows {
            writeln!(w, "{:.16e},{},{:.16e},{:.16e}", r.lambda, r.k, r.re, r.im)?;
        }
        Ok(())
    }
}

pub fn lambda_grid(lambda_min: f64, lambda_max: f64, steps: usize) -> Result<Vec<f64>> {
    if steps == 0 || !(lambda_min <= lambda_max) || !lambda_min.is_finite() || !lambda_max.is_finite() {
        return Err(Error::InvalidArgument(format!("bad sweep range [{lambda_min}, {lambda_max}] with {steps} steps")));
    }
    if steps == 1 {
        return Ok(vec![lambda_min]);
    }
    let h = (lambda_max - lambda_min) / (steps - 1) as f64;
    Ok((0..steps).map(|j| if j + 1 == steps { lambda_max } else { lambda_min + j as f64 * h }).collect())
}

/// The `count` smallest boundary eigenvalues at each of `steps` equally
/// spaced values of `λ`. Steps on the Dirichlet spectrum are skipped.
pub fn sweep(
    sys: &AssembledSystem,
    lambda_min: f64,
    lambda_max: f64,
    steps: usize,
    count: usize,
) -> Result<SweepResult> {
    let grid = lambda_grid(lambda_min, lambda_max, steps)?;
    let per_step: Vec<Result<Option<Vec<SweepRow>>>> = grid
        .par_iter()
        .map(|&lambda| match DtnOperator::build(sys, lambda) {
            Err(Error::SpectrumHit { .. }) => Ok(None),
            Err(e) => Err(e),
            Ok(op) => {
                let spec = dtn_spectrum(&op, count)?;
                Ok(Some(
                    spec.eigenvalues
                        .iter()
                        .enumerate()
                        .map(|(k, z)| SweepRow { lambda, k: k + 1, re: z.re, im: z.im })
                        .collect(),
                ))
            }
        })
        .collect();
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    let mut blocks = Vec::new();
    for (lambda, step) in grid.iter().zip(per_step) {
        match step? {
            None => skipped.push(*lambda),
            Some(r) => {
                blocks.push(r.clone());
                rows.extend(r);
            }
        }
    }
    if blocks.is_empty() {
        return Err(Error::InvalidArgument("every grid point hits the Dirichlet spectrum".into()));
    }
    let monotone = if sys.is_self_adjoint() { Some(is_monotone(sys, &blocks)?) } else { None };
    Ok(SweepResult { rows, skipped, monotone })
}

fn is_monotone(sys: &AssembledSystem, blocks: &[Vec<SweepRow>]) -> Result<bool> {
    let poles = dirichlet_eigenvalues(sys)?;
    for pair in blocks.windows(2) {
        let (lo, hi) = (pair[0][0].lambda, pair[1][0].lambda);
        if poles.iter().any(|&p| p >= lo && p <= hi) {
            continue;
        }
        for (a, b) in pair[0].iter().zip(&pair[1]) {
            let tol = 1e-9 * a.re.abs().max(1.0);
            if b.re > a.re + tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn dirichlet_eigenvalues(sys: &AssembledSystem) -> Result<Vec<f64>> {
    let ii = &sys.interior_idx;
    if ii.is_empty() {
        return Ok(Vec::new());
    }
    let k = to_dense(&submatrix(&sys.k, ii, ii));
    let m = to_dense(&submatrix(&sys.m, ii, ii));
    Ok(sym_pencil(&((&k + k.transpose()) * 0.5), &m)?.0)
}
