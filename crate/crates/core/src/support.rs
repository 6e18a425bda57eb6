//! Support functions `ell_v = <phi, v>` and `f_v = <nu, v>`, the tangential
//! field `v_top`, and numerical checks of their gradient and Laplacian
//! identities, of proportionality `ell_v = lambda f_v`, and of the dimensions
//! of the spans `V1 = {ell_v}` and `V2 = {f_v}`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;
use thiserror::Error;

use crate::calculus;
use crate::geometry::{AmbientVector, ChartPoint, GeometryError, Hypersurface};
use crate::quadrature::QuadratureRule;

/// Mean-curvature spread above which a surface is not treated as CMC.
pub const TAU_H: f64 = 1e-6;
/// Maximum residual for proportionality to count as holding.
pub const TAU_PROPORTIONAL: f64 = 1e-7;
/// Relative singular-value cutoff for Gram ranks.
pub const RANK_TOL: f64 = 1e-8;
pub const MIN_SCAN_SAMPLES: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SupportError {
    #[error("mean curvature spread {0:e} exceeds the CMC gate")]
    NotCmc(f64),
    #[error("sum of f_v^2 is {0:e}; lambda is indeterminate")]
    FIndeterminate(f64),
    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SupportSample {
    pub x: AmbientVector,
    pub nu: AmbientVector,
    pub ell: f64,
    pub f: f64,
    /// `v - ell x - f nu`.
    pub v_top: AmbientVector,
}

pub fn support_sample(
    surface: &Hypersurface,
    p: &ChartPoint,
    v: &AmbientVector,
) -> Result<SupportSample, GeometryError> {
    let x = surface.position(p)?;
    let nu = surface.normal_at(p)?;
    let ell = x.dot(v);
    let f = nu.dot(v);
    let v_top = v - ell * &x - f * &nu;
    Ok(SupportSample { x, nu, ell, f, v_top })
}

pub fn ell_at(surface: &Hypersurface, p: &ChartPoint, v: &AmbientVector) -> Result<f64, GeometryError> {
    Ok(surface.position(p)?.dot(v))
}

pub fn f_at(surface: &Hypersurface, p: &ChartPoint, v: &AmbientVector) -> Result<f64, GeometryError> {
    Ok(surface.normal_at(p)?.dot(v))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GradientResiduals {
    /// `|grad ell_v - v_top|`
    pub ell: f64,
    /// `|grad f_v + A(v_top)|`
    pub f: f64,
}

/// Compares chart-differentiated gradients of `ell_v`, `f_v` with `v_top` and
/// `-A(v_top)`.
pub fn check_gradient_identities(
    surface: &Hypersurface,
    p: &ChartPoint,
    v: &AmbientVector,
) -> Result<GradientResiduals, GeometryError> {
    let sample = support_sample(surface, p, v)?;
    let curv = surface.shape_operator(p)?;
    let grad_ell = calculus::gradient(surface, p, |q| ell_at(surface, q, v))?;
    let grad_f = calculus::gradient(surface, p, |q| f_at(surface, q, v))?;
    Ok(GradientResiduals {
        ell: (grad_ell - &sample.v_top).norm(),
        f: (grad_f + curv.apply(&sample.v_top)).norm(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LaplacianResiduals {
    /// `|Delta ell_v + n ell_v - n H f_v|`, valid on any hypersurface.
    pub ell: f64,
    /// `|Delta f_v + |A|^2 f_v - n H ell_v|`; `None` when the surface fails
    /// the CMC gate.
    pub f: Option<f64>,
    pub h_spread: f64,
}

pub fn check_laplacian_identities(
    surface: &Hypersurface,
    p: &ChartPoint,
    v: &AmbientVector,
) -> Result<LaplacianResiduals, GeometryError> {
    let n = surface.dim() as f64;
    let profile = surface.curvature_profile()?;
    let curv = surface.shape_operator(p)?;
    let sample = support_sample(surface, p, v)?;
    let lap_ell = calculus::laplace_beltrami(surface, p, |q| ell_at(surface, q, v))?;
    let ell = (lap_ell + n * sample.ell - n * curv.mean_h * sample.f).abs();
    let h_spread = profile.h_spread();
    let f = if h_spread <= TAU_H {
        let lap_f = calculus::laplace_beltrami(surface, p, |q| f_at(surface, q, v))?;
        Some((lap_f + curv.norm_a_sq * sample.f - n * curv.mean_h * sample.ell).abs())
    } else {
        None
    };
    Ok(LaplacianResiduals { ell, f, h_spread })
}

/// Strict form of the Laplacian check: fails with `NotCmc` instead of
/// skipping the `f_v` identity.
pub fn check_laplacian_identities_cmc(
    surface: &Hypersurface,
    p: &ChartPoint,
    v: &AmbientVector,
) -> Result<(f64, f64), SupportError> {
    let r = check_laplacian_identities(surface, p, v)?;
    match r.f {
        Some(f) => Ok((r.ell, f)),
        None => Err(SupportError::NotCmc(r.h_spread)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProportionalityScan {
    /// Least-squares `lambda` in `ell_v ~ lambda f_v`.
    pub lambda: f64,
    pub max_residual: f64,
    pub holds: bool,
    pub samples: usize,
}

pub fn proportionality_scan(
    surface: &Hypersurface,
    v: &AmbientVector,
    points: &[ChartPoint],
) -> Result<ProportionalityScan, SupportError> {
    if points.len() < MIN_SCAN_SAMPLES {
        return Err(SupportError::InsufficientSamples {
            needed: MIN_SCAN_SAMPLES,
            got: points.len(),
        });
    }
    let pairs: Vec<(f64, f64)> = points
        .iter()
        .map(|p| {
            let s = support_sample(surface, p, v)?;
            Ok((s.ell, s.f))
        })
        .collect::<Result<_, GeometryError>>()?;
    let ff: f64 = pairs.iter().map(|(_, f)| f * f).sum();
    if ff < 1e-12 {
        return Err(SupportError::FIndeterminate(ff));
    }
    let lf: f64 = pairs.iter().map(|(l, f)| l * f).sum();
    let lambda = lf / ff;
    let max_residual = pairs
        .iter()
        .map(|(l, f)| (l - lambda * f).abs())
        .fold(0.0, f64::max);
    Ok(ProportionalityScan {
        lambda,
        max_residual,
        holds: max_residual < TAU_PROPORTIONAL,
        samples: points.len(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SupportFamily {
    /// `{ell_v}`
    V1,
    /// `{f_v}`
    V2,
}

/// Values of `ell_{e_a}` or `f_{e_a}` at every quadrature node, one row per
/// basis vector `e_a`.
pub fn family_values(
    surface: &Hypersurface,
    family: SupportFamily,
    rule: &QuadratureRule,
) -> Result<Vec<Vec<f64>>, GeometryError> {
    let m = surface.ambient_dim();
    let mut rows = vec![Vec::with_capacity(rule.len()); m];
    for p in &rule.points {
        let vec = match family {
            SupportFamily::V1 => surface.position(p)?,
            SupportFamily::V2 => surface.normal_at(p)?,
        };
        for (a, row) in rows.iter_mut().enumerate() {
            row.push(vec[a]);
        }
    }
    Ok(rows)
}

/// Discrete `L^2` Gram matrix `sum_q w_q a_i(q) b_j(q)`.
pub fn gram(rule: &QuadratureRule, a: &[Vec<f64>], b: &[Vec<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(a.len(), b.len(), |i, j| {
        rule.weights
            .iter()
            .zip(a[i].iter().zip(&b[j]))
            .map(|(w, (x, y))| w * x * y)
            .sum()
    })
}

/// Number of eigenvalues of a symmetric PSD matrix above `RANK_TOL * max`.
pub fn numerical_rank(g: &DMatrix<f64>) -> usize {
    if g.nrows() == 0 {
        return 0;
    }
    let eig = SymmetricEigen::new(g.clone());
    let sigma: Vec<f64> = eig.eigenvalues.iter().map(|s| s.abs()).collect();
    let max = sigma.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sigma.iter().filter(|&&s| s > RANK_TOL * max).count()
}

pub fn gram_dimension(
    surface: &Hypersurface,
    family: SupportFamily,
    rule: &QuadratureRule,
) -> Result<usize, SupportError> {
    let needed = 10 * surface.ambient_dim();
    if rule.len() < needed {
        return Err(SupportError::InsufficientSamples {
            needed,
            got: rule.len(),
        });
    }
    let rows = family_values(surface, family, rule)?;
    Ok(numerical_rank(&gram(rule, &rows, &rows)))
}

/// Frobenius norm of the `V1 x V2` Gram block.
pub fn cross_gram_norm(surface: &Hypersurface, rule: &QuadratureRule) -> Result<f64, GeometryError> {
    let v1 = family_values(surface, SupportFamily::V1, rule)?;
    let v2 = family_values(surface, SupportFamily::V2, rule)?;
    Ok(gram(rule, &v1, &v2).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{
        make_clifford, make_counterexample, make_umbilical, BaseSurfaceSpec, CliffordSpec,
        CounterexampleSpec, UmbilicalSpec,
    };
    use crate::quadrature::tensor_rule;
    use crate::rng::Lcg64;
    use approx::assert_abs_diff_eq;

    fn e(m: usize, i: usize) -> AmbientVector {
        let mut v = AmbientVector::zeros(m);
        v[i] = 1.0;
        v
    }

    fn samples(surface: &Hypersurface, count: usize, seed: u64) -> Vec<ChartPoint> {
        let mut rng = Lcg64::new(seed);
        (0..count).map(|_| surface.domain().sample(&mut rng, 0.05)).collect()
    }

    #[test]
    fn clifford_support_values() {
        let m = make_clifford(&CliffordSpec::new(2, 1, 0.6)).unwrap();
        let s = support_sample(&m, &ChartPoint::new(vec![0.0, 0.0]), &e(4, 0)).unwrap();
        assert_abs_diff_eq!(s.ell, 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(s.f, 0.8, epsilon = 1e-15);
        assert!(s.v_top.norm() < 1e-15);
    }

    #[test]
    fn normal_as_v_has_no_tangent_part() {
        let m = make_clifford(&CliffordSpec::new(3, 2, 0.7)).unwrap();
        let p = ChartPoint::new(vec![1.0, 0.4, 2.0]);
        let nu = m.normal_at(&p).unwrap();
        let s = support_sample(&m, &p, &nu).unwrap();
        assert_abs_diff_eq!(s.ell, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.f, 1.0, epsilon = 1e-15);
        assert!(s.v_top.norm() < 1e-15);
        assert!(s.v_top.dot(&s.x).abs() < 1e-15);
    }

    #[test]
    fn umbilical_relation() {
        let m = make_umbilical(&UmbilicalSpec::new(vec![1.0, 0.0, 0.0, 0.0], 0.5)).unwrap();
        let w = AmbientVector::from_vec(vec![0.0, 0.6, -0.8, 0.0]);
        for p in samples(&m, 50, 5) {
            let s = support_sample(&m, &p, &w).unwrap();
            assert_abs_diff_eq!(s.f, -(0.5 / 0.75f64.sqrt()) * s.ell, epsilon = 1e-12);
        }
    }

    #[test]
    fn gradient_identities_on_clifford_and_counterexample() {
        let m = make_clifford(&CliffordSpec::new(2, 1, 0.6)).unwrap();
        for p in samples(&m, 20, 9) {
            let r = check_gradient_identities(&m, &p, &e(4, 0)).unwrap();
            assert!(r.ell < 1e-8 && r.f < 1e-8, "{r:?}");
        }
        let zero = check_gradient_identities(&m, &ChartPoint::new(vec![0.3, 0.2]), &e(4, 0).scale(0.0)).unwrap();
        assert_eq!(zero.ell, 0.0);
        assert_eq!(zero.f, 0.0);

        let ce = make_counterexample(&CounterexampleSpec {
            base: BaseSurfaceSpec::standard(2, 0.02, 2),
        })
        .unwrap();
        for p in samples(&ce.surface, 20, 10) {
            let r = check_gradient_identities(&ce.surface, &p, &ce.axis()).unwrap();
            assert!(r.ell < 1e-8 && r.f < 1e-8, "{r:?}");
        }
    }

    #[test]
    fn laplacian_identities() {
        let m = make_umbilical(&UmbilicalSpec::new(vec![1.0, 0.0, 0.0, 0.0], 0.5)).unwrap();
        let w = e(4, 2);
        for p in samples(&m, 10, 12) {
            let r = check_laplacian_identities(&m, &p, &w).unwrap();
            assert!(r.ell < 1e-4 && r.f.unwrap() < 1e-4, "{r:?}");
            let lap = calculus::laplace_beltrami(&m, &p, |q| ell_at(&m, q, &w)).unwrap();
            let ell = ell_at(&m, &p, &w).unwrap();
            assert_abs_diff_eq!(lap, -(2.0 / 0.75) * ell, epsilon = 1e-4);
        }
        let c = make_clifford(&CliffordSpec::new(2, 1, 0.6)).unwrap();
        for p in samples(&c, 10, 13) {
            let r = check_laplacian_identities(&c, &p, &e(4, 0)).unwrap();
            assert!(r.ell < 1e-4 && r.f.unwrap() < 1e-4, "{r:?}");
        }
    }

    #[test]
    fn counterexample_skips_f_identity() {
        let ce = make_counterexample(&CounterexampleSpec {
            base: BaseSurfaceSpec::standard(2, 0.02, 2),
        })
        .unwrap();
        let p = ChartPoint::new(vec![0.3, 1.0]);
        let r = check_laplacian_identities(&ce.surface, &p, &ce.axis()).unwrap();
        assert!(r.f.is_none());
        assert!(r.ell < 1e-4);
        assert!(matches!(
            check_laplacian_identities_cmc(&ce.surface, &p, &ce.axis()),
            Err(SupportError::NotCmc(_))
        ));
    }

    #[test]
    fn proportionality_constants() {
        let m = make_clifford(&CliffordSpec::new(2, 1, 0.6)).unwrap();
        let pts = samples(&m, 200, 21);
        let first = proportionality_scan(&m, &e(4, 0), &pts).unwrap();
        assert!(first.holds);
        assert_abs_diff_eq!(first.lambda, 0.75, epsilon = 1e-12);
        let second = proportionality_scan(&m, &e(4, 2), &pts).unwrap();
        assert!(second.holds);
        assert_abs_diff_eq!(second.lambda, -4.0 / 3.0, epsilon = 1e-12);

        let ce = make_counterexample(&CounterexampleSpec {
            base: BaseSurfaceSpec::standard(2, 0.02, 2),
        })
        .unwrap();
        let pts = samples(&ce.surface, 200, 22);
        let scan = proportionality_scan(&ce.surface, &ce.axis(), &pts).unwrap();
        assert!(scan.holds);
        assert_abs_diff_eq!(scan.lambda, 1.0, epsilon = 1e-12);

        assert!(matches!(
            proportionality_scan(&m, &e(4, 0), &pts[..10]),
            Err(SupportError::InsufficientSamples { .. })
        ));
        let great = make_umbilical(&UmbilicalSpec::new(vec![1.0, 0.0, 0.0, 0.0], 0.0)).unwrap();
        let pts = samples(&great, 100, 23);
        assert!(matches!(
            proportionality_scan(&great, &e(4, 1), &pts),
            Err(SupportError::FIndeterminate(_))
        ));
    }

    #[test]
    fn gram_dimensions() {
        let great = make_umbilical(&UmbilicalSpec::new(vec![1.0, 0.0, 0.0, 0.0], 0.0)).unwrap();
        let rule = tensor_rule(&great, 12).unwrap();
        assert_eq!(gram_dimension(&great, SupportFamily::V1, &rule).unwrap(), 3);
        assert_eq!(gram_dimension(&great, SupportFamily::V2, &rule).unwrap(), 1);

        let small = make_umbilical(&UmbilicalSpec::new(vec![1.0, 0.0, 0.0, 0.0], 0.5)).unwrap();
        let rule = tensor_rule(&small, 12).unwrap();
        assert_eq!(gram_dimension(&small, SupportFamily::V1, &rule).unwrap(), 4);
        assert_eq!(gram_dimension(&small, SupportFamily::V2, &rule).unwrap(), 4);

        let torus = make_clifford(&CliffordSpec::new(2, 1, 0.6)).unwrap();
        let rule = tensor_rule(&torus, 12).unwrap();
        assert_eq!(gram_dimension(&torus, SupportFamily::V1, &rule).unwrap(), 4);
        assert_eq!(gram_dimension(&torus, SupportFamily::V2, &rule).unwrap(), 4);

        let tiny = tensor_rule(&torus, 4).unwrap();
        assert!(matches!(
            gram_dimension(&torus, SupportFamily::V1, &tiny),
            Err(SupportError::InsufficientSamples { .. })
        ));
    }
}
