//! Coefficients `(a, b, c, d)` of the operator
//! `-div(a grad u) + b . grad u - div(c u) + d u`, the preset catalog, and the
//! side-condition margins governing positivity, sub-Markovianity,
//! irreducibility and domination of the boundary semigroup.

use std::f64::consts::PI;
use std::io::BufRead;

use nalgebra::{Matrix2, Point2, SymmetricEigen, Vector2};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::quadrature::{boundary_points, element_points};

/// Symmetric diffusion matrix `a(x)`; all supported fields are constant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Diffusion {
    Identity,
    Diag(f64, f64),
    Const { a11: f64, a12: f64, a22: f64 },
}

impl Diffusion {
    pub fn at(&self, _x: Point2<f64>) -> Matrix2<f64> {
        match *self {
            Diffusion::Identity => Matrix2::identity(),
            Diffusion::Diag(kx, ky) => Matrix2::new(kx, 0.0, 0.0, ky),
            Diffusion::Const { a11, a12, a22 } => Matrix2::new(a11, a12, a12, a22),
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let a = self.at(Point2::origin());
        SymmetricEigen::new(a).eigenvalues.min()
    }
}

/// Vector fields for the advection slots `b` and `c`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum VectorField {
    Zero,
    /// `s (-y, x)`: divergence free, tangential on circles about the origin.
    Rotational(f64),
    /// `s (d psi/dy, -d psi/dx)` with `psi = sin(2 pi x) sin(2 pi y)`:
    /// divergence free, tangential on the unit square.
    Stream(f64),
    Constant(f64, f64),
}

impl VectorField {
    pub fn at(&self, p: Point2<f64>) -> Vector2<f64> {
        let (x, y) = (p.x, p.y);
        match *self {
            VectorField::Zero => Vector2::zeros(),
            VectorField::Rotational(s) => Vector2::new(-s * y, s * x),
            VectorField::Stream(s) => {
                let w = 2.0 * PI;
                let (sx, cx) = (w * x).sin_cos();
                let (sy, cy) = (w * y).sin_cos();
                // psi_y = w sx cy, psi_x = w cx sy
                Vector2::new(s * w * sx * cy, -s * w * cx * sy)
            }
            VectorField::Constant(bx, by) => Vector2::new(bx, by),
        }
    }

    /// Analytic divergence.
    pub fn divergence(&self, _p: Point2<f64>) -> f64 {
        match *self {
            // stream: d/dx (psi_y) and d/dy (psi_x) are the same mixed derivative
            VectorField::Zero | VectorField::Rotational(_) | VectorField::Stream(_) | VectorField::Constant(..) => 0.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            VectorField::Zero => true,
            VectorField::Rotational(s) | VectorField::Stream(s) => s == 0.0,
            VectorField::Constant(x, y) => x == 0.0 && y == 0.0,
        }
    }

    fn declared_divfree_tangential(&self) -> bool {
        matches!(self, VectorField::Zero | VectorField::Rotational(_) | VectorField::Stream(_))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientSet {
    pub a: Diffusion,
    pub b: VectorField,
    pub c: VectorField,
    /// Constant reaction coefficient.
    pub d: f64,
    /// Declared ellipticity constant, `a(x) xi . xi >= kappa |xi|^2`.
    pub kappa: f64,
    /// Preset identifiers that produced this set, for reports.
    pub label: String,
}

impl Default for CoefficientSet {
    fn default() -> Self {
        Self::laplace()
    }
}

impl CoefficientSet {
    pub fn laplace() -> Self {
        CoefficientSet {
            a: Diffusion::Identity,
            b: VectorField::Zero,
            c: VectorField::Zero,
            d: 0.0,
            kappa: 1.0,
            label: "laplace".into(),
        }
    }

    pub fn with_d(mut self, d: f64) -> Self {
        self.d = d;
        self
    }

    pub fn with_advection(mut self, b: VectorField, c: VectorField) -> Self {
        self.b = b;
        self.c = c;
        self
    }

    pub fn with_diffusion(mut self, a: Diffusion, kappa: f64) -> Self {
        self.a = a;
        self.kappa = kappa;
        self
    }

    /// `b == c` as fields; the self-adjoint case.
    pub fn is_symmetric(&self) -> bool {
        self.b == self.c
    }

    /// Whether `b` and `c` come from the divergence-free, boundary-tangential
    /// family (the geometry still has to be checked with [`Self::admissibility`]).
    pub fn declared_divfree_tangential(&self) -> bool {
        self.b.declared_divfree_tangential() && self.c.declared_divfree_tangential()
    }

    /// Samples the invariants on the quadrature points of `mesh`.
    pub fn admissibility(&self, mesh: &Mesh) -> Admissibility {
        let interior = element_points(mesh);
        let boundary = boundary_points(mesh);
        let mut symmetry_error: f64 = 0.0;
        let mut min_eig = f64::INFINITY;
        let mut max_div: f64 = 0.0;
        for &p in interior.iter().chain(boundary.iter().map(|(p, _)| p)) {
            let a = self.a.at(p);
            symmetry_error = symmetry_error.max((a[(0, 1)] - a[(1, 0)]).abs());
            min_eig = min_eig.min(SymmetricEigen::new(a.symmetric_part()).eigenvalues.min());
            max_div = max_div.max(self.b.divergence(p).abs()).max(self.c.divergence(p).abs());
        }
        let max_normal_flux = boundary
            .iter()
            .map(|&(p, n)| self.b.at(p).dot(&n).abs().max(self.c.at(p).dot(&n).abs()))
            .fold(0.0, f64::max);
        let ellipticity_ok = min_eig >= self.kappa - 1e-12 && self.kappa > 0.0;
        let divfree_tangential = self.declared_divfree_tangential() && max_div <= 1e-10 && max_normal_flux <= 1e-10;
        Admissibility {
            symmetry_error,
            min_eigenvalue: min_eig,
            ellipticity_ok: ellipticity_ok && symmetry_error <= 1e-12,
            max_divergence: max_div,
            max_normal_flux,
            divfree_tangential,
        }
    }

    /// Sampled sup norms over element quadrature points and boundary points.
    pub fn sup_norms(&self, mesh: &Mesh) -> SupNorms {
        let pts = element_points(mesh).into_iter().chain(boundary_points(mesh).into_iter().map(|(p, _)| p));
        let mut s = SupNorms { b_minus_c: 0.0, b_plus_c: 0.0, d_minus: (-self.d).max(0.0), essinf_d: self.d };
        for p in pts {
            let (b, c) = (self.b.at(p), self.c.at(p));
            s.b_minus_c = s.b_minus_c.max((b - c).norm());
            s.b_plus_c = s.b_plus_c.max((b + c).norm());
        }
        s
    }

    /// Parses the key-value coefficient file.
    ///
    /// ```text
    /// a = identity | diag kx ky | const a11 a12 a22
    /// b = none | rotational s | stream s
    /// c = none | rotational s | stream s
    /// d = const v
    /// kappa = v
    /// ```
    /// Missing keys keep their Laplace defaults; `kappa` defaults to the
    /// smallest eigenvalue of `a`.
    pub fn parse_config<R: BufRead>(r: R) -> Result<Self> {
        let mut set = CoefficientSet::laplace();
        let mut kappa = None;
        let mut label = Vec::new();
        for (n, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let perr = |msg: String| Error::Parse { line: n + 1, msg };
            let (key, value) =
                line.split_once('=').ok_or_else(|| perr(format!("expected `key = value`, got `{line}`")))?;
            let key = key.trim();
            let words: Vec<&str> = value.split_whitespace().collect();
            let nums = |k: usize| -> Result<Vec<f64>> {
                if words.len() != k + 1 {
                    return Err(perr(format!("`{key}` expects {k} numbers after `{}`", words[0])));
                }
                words[1..].iter().map(|w| w.parse::<f64>().map_err(|_| perr(format!("bad number `{w}`")))).collect()
            };
            if words.is_empty() {
                return Err(perr(format!("missing value for `{key}`")));
            }
            match key {
                "a" => {
                    set.a = match words[0] {
                        "identity" => {
                            nums(0)?;
                            Diffusion::Identity
                        }
                        "diag" => {
                            let v = nums(2)?;
                            Diffusion::Diag(v[0], v[1])
                        }
                        "const" => {
                            let v = nums(3)?;
                            Diffusion::Const { a11: v[0], a12: v[1], a22: v[2] }
                        }
                        w => return Err(perr(format!("unknown diffusion `{w}`"))),
                    }
                }
                "b" | "c" => {
                    let field = match words[0] {
                        "none" => {
                            nums(0)?;
                            VectorField::Zero
                        }
                        "rotational" => VectorField::Rotational(nums(1)?[0]),
                        "stream" => VectorField::Stream(nums(1)?[0]),
                        w => return Err(perr(format!("unknown vector field `{w}`"))),
                    };
                    if key == "b" {
                        set.b = field
                    } else {
                        set.c = field
                    }
                }
                "d" => match words[0] {
                    "const" => set.d = nums(1)?[0],
                    w => return Err(perr(format!("unknown scalar field `{w}`"))),
                },
                "kappa" => {
                    if words.len() != 1 {
                        return Err(perr("`kappa` expects one number".into()));
                    }
                    kappa = Some(words[0].parse::<f64>().map_err(|_| perr(format!("bad number `{}`", words[0])))?);
                }
                other => return Err(perr(format!("unknown key `{other}`"))),
            }
            label.push(format!("{key}={}", words.join(" ")));
        }
        set.kappa = kappa.unwrap_or_else(|| set.a.min_eigenvalue());
        if !(set.kappa > 0.0) {
            return Err(Error::InvalidArgument(format!("kappa must be positive, got {}", set.kappa)));
        }
        set.label = if label.is_empty() { "laplace".into() } else { label.join(";") };
        Ok(set)
    }
}

/// Builds a catalog entry. Names may be joined with `+`; each component
/// consumes its parameters from `params` in order.
///
/// | name | params | effect |
/// |---|---|---|
/// | `laplace` | - | `a = I`, `b = c = 0`, `d = 0`, `kappa = 1` |
/// | `scaled_identity` | `k` | `a = k I`, `kappa = k` |
/// | `rotational` | `s` | `b = c = s (-y, x)` |
/// | `stream` | `s` | `b = c =` stream field of strength `s` |
/// | `skew_stream` | `s` | `b =` stream field, `c = 0` |
/// | `constant_d` | `v` | `d = v` |
pub fn preset(name: &str, params: &[f64]) -> Result<CoefficientSet> {
    let mut set = CoefficientSet::laplace();
    let mut rest = params;
    let mut take = |component: &str| -> Result<f64> {
        let (&first, tail) = rest
            .split_first()
            .ok_or_else(|| Error::InvalidArgument(format!("preset `{component}` needs a parameter")))?;
        if !first.is_finite() {
            return Err(Error::InvalidArgument(format!("preset `{component}`: non-finite parameter")));
        }
        rest = tail;
        Ok(first)
    };
    for component in name.split('+') {
        match component {
            "laplace" => {}
            "scaled_identity" => {
                let k = take(component)?;
                if !(k > 0.0) {
                    return Err(Error::InvalidArgument(format!("scaled_identity needs k > 0, got {k}")));
                }
                set.a = Diffusion::Diag(k, k);
                set.kappa = k;
            }
            "rotational" => {
                let s = take(component)?;
                set.b = VectorField::Rotational(s);
                set.c = VectorField::Rotational(s);
            }
            "stream" => {
                let s = take(component)?;
                set.b = VectorField::Stream(s);
                set.c = VectorField::Stream(s);
            }
            "skew_stream" => {
                let s = take(component)?;
                set.b = VectorField::Stream(s);
                set.c = VectorField::Zero;
            }
            "constant_d" => set.d = take(component)?,
            other => return Err(Error::InvalidArgument(format!("unknown preset `{other}`"))),
        }
    }
    if !rest.is_empty() {
        return Err(Error::InvalidArgument(format!("preset `{name}` got {} unused parameter(s)", rest.len())));
    }
    set.label = if params.is_empty() {
        name.to_string()
    } else {
        let p: Vec<String> = params.iter().map(|v| v.to_string()).collect();
        format!("{name}({})", p.join(","))
    };
    Ok(set)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Admissibility {
    pub symmetry_error: f64,
    pub min_eigenvalue: f64,
    pub ellipticity_ok: bool,
    pub max_divergence: f64,
    pub max_normal_flux: f64,
    pub divfree_tangential: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SupNorms {
    pub b_minus_c: f64,
    pub b_plus_c: f64,
    pub d_minus: f64,
    pub essinf_d: f64,
}

/// Side conditions of the semigroup theorem, as signed margins: a positive
/// margin means the hypothesis holds strictly.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConditionMargins {
    pub lambda: f64,
    pub kappa: f64,
    pub norm_b_minus_c: f64,
    pub norm_b_plus_c: f64,
    pub norm_d_minus: f64,
    pub essinf_d: f64,
    pub lambda1_dirichlet: f64,
    /// `kappa lambda1 - (4 |b-c|^2 / kappa + |d^-| + lambda)`; positivity.
    pub margin_a: f64,
    /// `essinf d - lambda`; sub-Markov additionally needs this `>= 0`.
    pub margin_b: f64,
    /// `kappa lambda1 - (|d^-| + lambda)`; irreducibility.
    pub margin_c: f64,
    /// `b == c`, required for domination.
    pub domination_ok: bool,
    /// `a` symmetric with smallest eigenvalue at least `kappa`, and `b`, `c`
    /// divergence-free and tangential at the sample points. The margins only
    /// certify anything when this holds.
    pub admissible: bool,
}

impl ConditionMargins {
    pub fn positivity_holds(&self) -> bool {
        self.admissible && self.margin_a > 0.0
    }

    pub fn submarkov_holds(&self) -> bool {
        self.positivity_holds() && self.margin_b >= 0.0
    }

    pub fn irreducibility_holds(&self) -> bool {
        self.admissible && self.margin_c > 0.0
    }
}

pub fn check_conditions(coeffs: &CoefficientSet, mesh: &Mesh, lambda: f64, lambda1d: f64) -> ConditionMargins {
    let norms = coeffs.sup_norms(mesh);
    let k = coeffs.kappa;
    let threshold = k * lambda1d;
    ConditionMargins {
        lambda,
        kappa: k,
        norm_b_minus_c: norms.b_minus_c,
        norm_b_plus_c: norms.b_plus_c,
        norm_d_minus: norms.d_minus,
        essinf_d: norms.essinf_d,
        lambda1_dirichlet: lambda1d,
        margin_a: threshold - (4.0 / k * norms.b_minus_c.powi(2) + norms.d_minus + lambda),
        margin_b: norms.essinf_d - lambda,
        margin_c: threshold - (norms.d_minus + lambda),
        domination_ok: coeffs.is_symmetric(),
        admissible: {
            let adm = coeffs.admissibility(mesh);
            adm.ellipticity_ok && adm.divfree_tangential
        },
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Lambda1Bounds {
    /// `kappa l1 - |b+c| sqrt(l1) - |d^-|`, valid when `|b+c| < kappa sqrt(l1)`.
    pub general: Option<f64>,
    /// `kappa l1 - |d^-|`, valid for divergence-free tangential advection.
    pub tangential: Option<f64>,
}

/// Lower bounds on the first Dirichlet eigenvalue of the form, in terms of the
/// first Dirichlet-Laplacian eigenvalue `lambda1d`.
pub fn lambda1_lower_bounds(coeffs: &CoefficientSet, mesh: &Mesh, lambda1d: f64) -> Lambda1Bounds {
    let norms = coeffs.sup_norms(mesh);
    let k = coeffs.kappa;
    let root = lambda1d.sqrt();
    let general = (norms.b_plus_c < k * root).then_some(k * lambda1d - norms.b_plus_c * root - norms.d_minus);
    let tangential = coeffs.admissibility(mesh).divfree_tangential.then_some(k * lambda1d - norms.d_minus);
    Lambda1Bounds { general, tangential }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate, Shape};

    #[test]
    fn laplace_preset() {
        let c = preset("laplace", &[]).unwrap();
        assert_eq!(c.a, Diffusion::Identity);
        assert!(c.b.is_zero() && c.c.is_zero());
        assert_eq!((c.d, c.kappa), (0.0, 1.0));
    }

    #[test]
    fn rotational_on_disk_is_admissible_but_not_on_square() {
        let disk = generate(Shape::Disk, 0.2).unwrap();
        let square = generate(Shape::Square, 0.2).unwrap();
        let rot = preset("rotational", &[1.0]).unwrap();
        let ok = rot.admissibility(&disk);
        assert!(ok.divfree_tangential, "{ok:?}");
        assert_eq!(ok.max_divergence, 0.0);
        assert!(ok.max_normal_flux <= 1e-10);
        let bad = rot.admissibility(&square);
        assert!(!bad.divfree_tangential);
        assert!(bad.max_normal_flux > 0.5);
    }

    #[test]
    fn stream_on_square_is_tangential() {
        let square = generate(Shape::Square, 0.1).unwrap();
        for name in ["stream", "skew_stream"] {
            let s = preset(name, &[1.0]).unwrap();
            let adm = s.admissibility(&square);
            assert!(adm.divfree_tangential, "{name}: {adm:?}");
            assert!(adm.ellipticity_ok);
        }
    }

    #[test]
    fn kappa_violation_reported() {
        let square = generate(Shape::Square, 0.5).unwrap();
        let mut c = preset("scaled_identity", &[2.0]).unwrap();
        assert!(c.admissibility(&square).ellipticity_ok);
        c.kappa = 3.0;
        assert!(!c.admissibility(&square).ellipticity_ok);
    }

    #[test]
    fn margins_for_laplace() {
        let square = generate(Shape::Square, 0.25).unwrap();
        let l1 = 2.0 * PI * PI;
        let m = check_conditions(&CoefficientSet::laplace(), &square, 0.0, l1);
        assert_eq!(m.margin_a, l1);
        assert_eq!(m.margin_c, l1);
        assert_eq!(m.margin_b, 0.0);
        assert!(m.submarkov_holds());
        assert!(m.domination_ok);
    }

    #[test]
    fn skew_stream_margin_goes_negative() {
        // |b|_inf = 2 pi s, attained on the boundary at (1/4, 0): 4 (2 pi s)^2 > 2 pi^2 once s > 1/(2 sqrt 2)
        let square = generate(Shape::Square, 0.05).unwrap();
        let l1 = 2.0 * PI * PI;
        let small = check_conditions(&preset("skew_stream", &[0.1]).unwrap(), &square, 0.0, l1);
        assert!(small.margin_a > 0.0);
        let big = check_conditions(&preset("skew_stream", &[0.5]).unwrap(), &square, 0.0, l1);
        assert!((big.norm_b_minus_c - PI).abs() < 1e-12);
        assert!(big.margin_a < 0.0);
        assert!(big.margin_c > 0.0);
        assert!(big.margin_a <= big.margin_c);
        assert!(!big.domination_ok);
    }

    #[test]
    fn lower_bounds() {
        let disk = generate(Shape::Disk, 0.2).unwrap();
        let l1 = 5.783;
        let lap = lambda1_lower_bounds(&CoefficientSet::laplace(), &disk, l1);
        assert_eq!(lap.general, Some(l1));
        assert_eq!(lap.tangential, Some(l1));

        let rot = lambda1_lower_bounds(&preset("rotational", &[3.0]).unwrap(), &disk, l1);
        assert_eq!(rot.tangential, Some(l1));
        assert_eq!(rot.general, None);

        let c = preset("scaled_identity+constant_d", &[2.0, -1.0]).unwrap();
        let b = lambda1_lower_bounds(&c, &disk, l1);
        assert_eq!(b.general, Some(2.0 * l1 - 1.0));
    }

    #[test]
    fn preset_errors() {
        assert!(preset("nope", &[]).is_err());
        assert!(preset("rotational", &[]).is_err());
        assert!(preset("laplace", &[1.0]).is_err());
        assert!(preset("scaled_identity", &[-1.0]).is_err());
    }

    #[test]
    fn config_file() {
        let text = "# coefficients\na = diag 2 3\nb = stream 0.5\nc = none\nd = const -1\n";
        let c = CoefficientSet::parse_config(text.as_bytes()).unwrap();
        assert_eq!(c.a, Diffusion::Diag(2.0, 3.0));
        assert_eq!(c.b, VectorField::Stream(0.5));
        assert_eq!(c.c, VectorField::Zero);
        assert_eq!(c.d, -1.0);
        assert_eq!(c.kappa, 2.0);

        let c = CoefficientSet::parse_config("a = const 2 0.5 2\nkappa = 1.5\n".as_bytes()).unwrap();
        assert_eq!(c.kappa, 1.5);

        for bad in ["a = weird", "b = stream", "kappa = -1", "z = 1", "d = 3"] {
            assert!(CoefficientSet::parse_config(bad.as_bytes()).is_err(), "{bad}");
        }
    }
}
