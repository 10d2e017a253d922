//! The semigroup `E(t) = exp(-t G)` with `G = Mb⁻¹ S`, and entrywise checks of
//! positivity, the sub-Markov property, irreducibility and domination.
//!
//! Each check measures the property and, when the side conditions are supplied,
//! reports whether they guarantee it. A failed side condition does not turn a
//! measurement into a failure: the verdict becomes `NotApplicable` and the
//! measurement is kept in `measured_pass`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::coefficients::ConditionMargins;
use crate::dtn::DtnOperator;
use crate::error::{Error, Result};
use crate::linalg::expm::expm;

pub const DEFAULT_TIMES: [f64; 4] = [0.01, 0.1, 1.0, 10.0];
pub const DEFAULT_TOL: f64 = 1e-8;
pub const IRREDUCIBILITY_TOL: f64 = 1e-12;
pub const DOMINATION_PAIRS: usize = 50;

#[derive(Clone, Debug)]
pub struct SemigroupMatrix {
    pub t: f64,
    pub e: DMatrix<f64>,
    pub lambda: f64,
    pub scaling_squaring_depth: u32,
}

pub fn expm_generator(op: &DtnOperator, t: f64) -> Result<SemigroupMatrix> {
    semigroup_at(&op.generator()?, op.lambda, t)
}

/// `exp(-t g)` for a precomputed generator.
pub fn semigroup_at(g: &DMatrix<f64>, lambda: f64, t: f64) -> Result<SemigroupMatrix> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("time must be finite and nonnegative, got {t}")));
    }
    let (e, depth) = expm(&(g * -t))?;
    Ok(SemigroupMatrix { t, e, lambda, scaling_squaring_depth: depth })
}

/// `‖Mb E - Eᵀ Mb‖ / ‖Mb E‖` (Frobenius); zero for a self-adjoint generator.
pub fn mb_symmetry_residual(op: &DtnOperator, e: &DMatrix<f64>) -> f64 {
    let mbe = &op.mb * e;
    (&mbe - mbe.transpose()).norm() / mbe.norm()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    Positivity,
    SubMarkov,
    Irreducibility,
    Domination,
}

#[derive(Clone, Debug, Serialize)]
pub struct PropertyReport {
    pub property: Property,
    pub verdict: Verdict,
    /// The outcome of the measurement alone.
    pub measured_pass: bool,
    /// Signed worst value of the measured quantity; negative means violated
    /// (for irreducibility: the smallest relative entry).
    pub worst_violation: f64,
    pub tolerance: f64,
    #[serde(rename = "margins")]
    pub precondition_margins: Option<ConditionMargins>,
    /// Margins of the dominating operator, for domination checks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dominating_margins: Option<ConditionMargins>,
    /// Worst relative value of `b₂(φ, ψ) - b₁(φ, ψ)` over random nonnegative pairs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub form_worst: Option<f64>,
    #[serde(rename = "times")]
    pub times_tested: Vec<f64>,
    pub notes: Vec<String>,
}

fn verdict(measured: bool, applicable: Option<bool>) -> Verdict {
    match applicable {
        Some(false) => Verdict::NotApplicable,
        _ if measured => Verdict::Pass,
        _ => Verdict::Fail,
    }
}

/// Smallest entry relative to the largest absolute entry.
fn min_relative(e: &DMatrix<f64>) -> f64 {
    let top = e.amax();
    if top == 0.0 {
        return 0.0;
    }
    e.min() / top
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidArgument("no times given".into()));
    }
    Ok(())
}

/// `E(t) ≥ 0` entrywise at every `t`, relative to the largest entry.
pub fn check_positivity(
    op: &DtnOperator,
    times: &[f64],
    tol: f64,
    margins: Option<&ConditionMargins>,
) -> Result<PropertyReport> {
    check_times(times)?;
    let g = op.generator()?;
    let mut worst = f64::INFINITY;
    for &t in times {
        worst = worst.min(min_relative(&semigroup_at(&g, op.lambda, t)?.e));
    }
    let measured = worst >= -tol;
    let mut notes = Vec::new();
    if let Some(m) = margins {
        if !m.positivity_holds() {
            notes.push(format!("positivity margin {:.6e} is not positive", m.margin_a));
        }
    }
    Ok(PropertyReport {
        property: Property::Positivity,
        verdict: verdict(measured, margins.map(|m| m.positivity_holds())),
        measured_pass: measured,
        worst_violation: worst,
        tolerance: tol,
        precondition_margins: margins.copied(),
        dominating_margins: None,
        form_worst: None,
        times_tested: times.to_vec(),
        notes,
    })
}

/// Positivity plus `max_i (E(t) 1)_i ≤ 1 + tol`. The reported value is
/// `min(positivity worst, 1 - max row sum)`.
pub fn check_submarkov(
    op: &DtnOperator,
    times: &[f64],
    tol: f64,
    margins: Option<&ConditionMargins>,
) -> Result<PropertyReport> {
    check_times(times)?;
    let g = op.generator()?;
    let ones = DVector::from_element(op.boundary_dim(), 1.0);
    let mut worst_pos = f64::INFINITY;
    let mut worst_sum = f64::INFINITY;
    for &t in times {
        let e = semigroup_at(&g, op.lambda, t)?.e;
        worst_pos = worst_pos.min(min_relative(&e));
        worst_sum = worst_sum.min(1.0 - (&e * &ones).max());
    }
    let measured = worst_pos >= -tol && worst_sum >= -tol;
    let mut notes = vec![format!("positivity worst {worst_pos:.6e}, 1 - max row sum {worst_sum:.6e}")];
    if let Some(m) = margins {
        if !m.submarkov_holds() {
            notes.push(format!("margins a = {:.6e}, b = {:.6e} do not both hold", m.margin_a, m.margin_b));
        }
    }
    Ok(PropertyReport {
        property: Property::SubMarkov,
        verdict: verdict(measured, margins.map(|m| m.submarkov_holds())),
        measured_pass: measured,
        worst_violation: worst_pos.min(worst_sum),
        tolerance: tol,
        precondition_margins: margins.copied(),
        dominating_margins: None,
        form_worst: None,
        times_tested: times.to_vec(),
        notes,
    })
}

/// Every entry of `E(t_probe)` exceeds `tol` times the largest entry.
pub fn check_irreducible(
    op: &DtnOperator,
    t_probe: f64,
    tol: f64,
    margins: Option<&ConditionMargins>,
) -> Result<PropertyReport> {
    let e = expm_generator(op, t_probe)?.e;
    let ratio = min_relative(&e);
    let measured = ratio > tol;
    let mut notes = Vec::new();
    if let Some(m) = margins {
        if !m.positivity_holds() {
            notes.push(format!("positivity margin {:.6e} is not positive", m.margin_a));
        }
        if !m.irreducibility_holds() {
            notes.push(format!("irreducibility margin {:.6e} is not positive", m.margin_c));
        }
    }
    Ok(PropertyReport {
        property: Property::Irreducibility,
        verdict: verdict(measured, margins.map(|m| m.irreducibility_holds() && m.positivity_holds())),
        measured_pass: measured,
        worst_violation: ratio,
        tolerance: tol,
        precondition_margins: margins.copied(),
        dominating_margins: None,
        form_worst: None,
        times_tested: vec![t_probe],
        notes,
    })
}

/// Domination of `op2`'s semigroup by `op1`'s: `0 ≤ E₂(t) ≤ E₁(t)` entrywise,
/// plus the form inequality `b₂(φ, ψ) ≥ b₁(φ, ψ)` on random nonnegative pairs.
pub fn check_domination(
    op2: &DtnOperator,
    op1: &DtnOperator,
    times: &[f64],
    tol: f64,
    margins2: Option<&ConditionMargins>,
    margins1: Option<&ConditionMargins>,
    seed: u64,
) -> Result<PropertyReport> {
    check_times(times)?;
    if !op2.same_mesh(op1) {
        return Err(Error::MeshMismatch);
    }
    let (g2, g1) = (op2.generator()?, op1.generator()?);
    let mut worst = f64::INFINITY;
    for &t in times {
        let e2 = semigroup_at(&g2, op2.lambda, t)?.e;
        let e1 = semigroup_at(&g1, op1.lambda, t)?.e;
        let top = e1.amax().max(e2.amax());
        if top > 0.0 {
            worst = worst.min((&e1 - &e2).min() / top).min(e2.min() / top);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = op2.boundary_dim();
    let s_scale = op2.s.amax().max(op1.s.amax());
    let mut form_worst = f64::INFINITY;
    for _ in 0..DOMINATION_PAIRS {
        let phi = DVector::from_fn(m, |_, _| rng.random::<f64>());
        let psi = DVector::from_fn(m, |_, _| rng.random::<f64>());
        let diff = op2.boundary_form(&phi, &psi)? - op1.boundary_form(&phi, &psi)?;
        let scale = s_scale * phi.lp_norm(1) * psi.lp_norm(1);
        form_worst = form_worst.min(diff / scale.max(f64::MIN_POSITIVE));
    }

    let measured = worst >= -tol && form_worst >= -tol;
    let mut notes = Vec::new();
    let (c1, c2) = (&op1.coefficients, &op2.coefficients);
    let mut applicable = None;
    if let (Some(m2), Some(m1)) = (margins2, margins1) {
        let same_field = c1.a == c2.a && c1.b == c2.b && c1.c == c2.c;
        let ordered = op2.lambda <= op1.lambda && c2.d >= c1.d;
        let bounded = m1.irreducibility_holds() && m2.irreducibility_holds();
        let ok = m1.domination_ok && m2.domination_ok && same_field && ordered && bounded;
        if !(m1.domination_ok && m2.domination_ok) {
            notes.push("advection is not symmetric (b != c)".into());
        }
        if !same_field {
            notes.push("the two operators have different principal or advection coefficients".into());
        }
        if !ordered {
            notes.push("ordering lambda2 <= lambda1, d2 >= d1 fails".into());
        }
        if !bounded {
            notes.push("lambda_i < kappa lambda1 - |d_i^-| fails or coefficients are not admissible".into());
        }
        applicable = Some(ok);
    }
    notes.push(format!("semigroup worst {worst:.6e}, form worst {form_worst:.6e}, seed {seed}"));
    Ok(PropertyReport {
        property: Property::Domination,
        verdict: verdict(measured, applicable),
        measured_pass: measured,
        worst_violation: worst,
        tolerance: tol,
        precondition_margins: margins2.copied(),
        dominating_margins: margins1.copied(),
        form_worst: Some(form_worst),
        times_tested: times.to_vec(),
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble, assemble_with, AssemblyOptions, BoundaryMass};
    use crate::coefficients::{check_conditions, preset, CoefficientSet};
    use crate::mesh::{generate, Shape};
    use crate::spectral::lambda1_dirichlet;

    #[test]
    fn identity_at_zero_and_constants_preserved() {
        let sys = assemble(&generate(Shape::Disk, 0.25).unwrap(), &CoefficientSet::laplace()).unwrap();
        let op = DtnOperator::build(&sys, 0.0).unwrap();
        let e0 = expm_generator(&op, 0.0).unwrap();
        assert_eq!(e0.e, DMatrix::identity(op.boundary_dim(), op.boundary_dim()));
        let e = expm_generator(&op, 1.0).unwrap().e;
        let ones = DVector::from_element(op.boundary_dim(), 1.0);
        assert!((&e * &ones - &ones).amax() < 1e-10);
        assert!(mb_symmetry_residual(&op, &e) < 1e-9);
        assert!(expm_generator(&op, -1.0).is_err());
    }

    #[test]
    fn semigroup_law() {
        let sys = assemble(&generate(Shape::Square, 0.2).unwrap(), &preset("skew_stream", &[0.5]).unwrap()).unwrap();
        let op = DtnOperator::build(&sys, -1.0).unwrap();
        let a = expm_generator(&op, 0.3).unwrap().e;
        let b = expm_generator(&op, 0.5).unwrap().e;
        let ab = expm_generator(&op, 0.8).unwrap().e;
        assert!((&a * &b - &ab).amax() < 1e-10 * ab.amax());
    }

    const LUMPED: AssemblyOptions = AssemblyOptions { boundary_mass: BoundaryMass::Lumped };

    #[test]
    fn consistent_mass_ripples_at_short_times() {
        let sys = assemble(&generate(Shape::Disk, 0.2).unwrap(), &CoefficientSet::laplace()).unwrap();
        let op = DtnOperator::build(&sys, 0.0).unwrap();
        let short = check_positivity(&op, &[0.01], DEFAULT_TOL, None).unwrap();
        let long = check_positivity(&op, &[1.0], DEFAULT_TOL, None).unwrap();
        assert_eq!(short.verdict, Verdict::Fail);
        assert!(short.worst_violation > -0.05);
        assert_eq!(long.verdict, Verdict::Pass);
    }

    #[test]
    fn laplace_checks_pass() {
        let mesh = generate(Shape::Disk, 0.2).unwrap();
        let sys = assemble_with(&mesh, &CoefficientSet::laplace(), LUMPED).unwrap();
        let l1 = lambda1_dirichlet(&mesh).unwrap();
        let margins = check_conditions(&sys.coefficients, &mesh, 0.0, l1);
        let op = DtnOperator::build(&sys, 0.0).unwrap();
        let r = check_submarkov(&op, &DEFAULT_TIMES, DEFAULT_TOL, Some(&margins)).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
        let r = check_irreducible(&op, 1.0, IRREDUCIBILITY_TOL, Some(&margins)).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
    }

    #[test]
    fn failed_margin_is_not_applicable() {
        let mesh = generate(Shape::Square, 0.25).unwrap();
        let sys = assemble(&mesh, &preset("skew_stream", &[0.5]).unwrap()).unwrap();
        let l1 = lambda1_dirichlet(&mesh).unwrap();
        let margins = check_conditions(&sys.coefficients, &mesh, 0.0, l1);
        assert!(!margins.positivity_holds());
        let op = DtnOperator::build(&sys, 0.0).unwrap();
        let r = check_positivity(&op, &DEFAULT_TIMES, DEFAULT_TOL, Some(&margins)).unwrap();
        assert_eq!(r.verdict, Verdict::NotApplicable);
        assert!(!r.notes.is_empty());
    }

    #[test]
    fn domination_needs_matching_meshes() {
        let a = assemble(&generate(Shape::Square, 0.25).unwrap(), &CoefficientSet::laplace()).unwrap();
        let b = assemble(&generate(Shape::Square, 0.5).unwrap(), &CoefficientSet::laplace()).unwrap();
        let (oa, ob) = (DtnOperator::build(&a, 0.0).unwrap(), DtnOperator::build(&b, 0.0).unwrap());
        assert!(matches!(check_domination(&oa, &ob, &[1.0], DEFAULT_TOL, None, None, 0), Err(Error::MeshMismatch)));
    }

    #[test]
    fn domination_in_lambda() {
        let mesh = generate(Shape::Disk, 0.2).unwrap();
        let sys = assemble_with(&mesh, &CoefficientSet::laplace(), LUMPED).unwrap();
        let l1 = lambda1_dirichlet(&mesh).unwrap();
        let (lam1, lam2) = (1.0, -2.0);
        let m1 = check_conditions(&sys.coefficients, &mesh, lam1, l1);
        let m2 = check_conditions(&sys.coefficients, &mesh, lam2, l1);
        let op1 = DtnOperator::build(&sys, lam1).unwrap();
        let op2 = DtnOperator::build(&sys, lam2).unwrap();
        let r = check_domination(&op2, &op1, &DEFAULT_TIMES, DEFAULT_TOL, Some(&m2), Some(&m1), 11).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
        assert!(r.form_worst.unwrap() >= 0.0);

        let same = check_domination(&op1, &op1, &DEFAULT_TIMES, DEFAULT_TOL, Some(&m1), Some(&m1), 11).unwrap();
        assert_eq!(same.worst_violation, 0.0);
        assert_eq!(same.form_worst, Some(0.0));
    }

    #[test]
    fn wrong_domain_field_is_not_applicable() {
        let mesh = generate(Shape::Square, 0.2).unwrap();
        let sys = assemble_with(&mesh, &preset("rotational", &[1.0]).unwrap(), LUMPED).unwrap();
        let l1 = lambda1_dirichlet(&mesh).unwrap();
        let margins = check_conditions(&sys.coefficients, &mesh, -1.0, l1);
        assert!(margins.margin_a > 0.0 && !margins.admissible);
        let op = DtnOperator::build(&sys, -1.0).unwrap();
        let r = check_submarkov(&op, &DEFAULT_TIMES, DEFAULT_TOL, Some(&margins)).unwrap();
        assert_eq!(r.verdict, Verdict::NotApplicable);
        assert!(!r.measured_pass);
    }
}
