//! Laplace spectra of round spheres and Clifford products, Jacobi stability
//! indices, the eigenfunction families `U_+-` and `V_1, V_2`, and the
//! dimension bounds they give.
//!
//! Eigenvalues follow the convention `Delta u + mu u = 0`; a line's Jacobi
//! value is `jac = mu - (|A|^2 + n)`, negative for unstable directions.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde::Serialize;
use thiserror::Error;

use crate::calculus;
use crate::families::{CliffordSpec, FamilyError};
use crate::geometry::{AmbientVector, ChartPoint, GeometryError, Hypersurface};
use crate::quadrature::QuadratureRule;
use crate::support::{
    self, ell_at, f_at, family_values, gram, numerical_rank, SupportError, SupportFamily, TAU_H,
};

/// Absolute tolerance for ties with the Jacobi threshold.
pub const TAU_TIE: f64 = 1e-9;
/// Headroom above the threshold required of the first omitted line.
pub const TRUNCATION_MARGIN: f64 = 10.0;
/// `L^2` norm below which a test function counts as identically zero.
pub const DEGENERATE_NORM: f64 = 1e-10;
/// Spread of `|A|^2` tolerated as constant.
pub const TAU_A: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("bad spectrum spec: {0}")]
    BadSpec(String),
    #[error("spectrum truncated at j_max = {j_max}: first omitted line {first_omitted} is within {margin} of threshold {threshold}")]
    Truncated {
        j_max: usize,
        first_omitted: f64,
        threshold: f64,
        margin: f64,
    },
    #[error("H = 0: use the V1/V2 families")]
    MinimalCase,
    #[error("mean curvature spread {0:e} exceeds the CMC gate")]
    NotCmc(f64),
    #[error("|A|^2 spread {0:e} exceeds the constancy gate")]
    NotConstantA(f64),
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error(transparent)]
    Support(#[from] SupportError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpectralLine {
    pub eigenvalue: f64,
    pub multiplicity: u64,
    /// Harmonic degrees on the two factors; `(j, 0)` for a single sphere.
    pub label: (usize, usize),
}

fn binomial(n: i64, k: i64) -> u64 {
    if k < 0 || n < 0 || k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

/// Dimension of degree-`j` spherical harmonics on `S^m`.
pub fn harmonic_multiplicity(m: usize, j: usize) -> u64 {
    let (m, j) = (m as i64, j as i64);
    binomial(m + j, j) - binomial(m + j - 2, j - 2)
}

fn sphere_eigenvalue(m: usize, radius: f64, j: usize) -> f64 {
    (j * (j + m - 1)) as f64 / (radius * radius)
}

pub fn sphere_spectrum(m: usize, radius: f64, j_max: usize) -> Result<Vec<SpectralLine>, SpectralError> {
    if m == 0 || !(radius > 0.0 && radius.is_finite()) {
        return Err(SpectralError::BadSpec(format!("m = {m}, radius = {radius}")));
    }
    Ok((0..=j_max)
        .map(|j| SpectralLine {
            eigenvalue: sphere_eigenvalue(m, radius, j),
            multiplicity: harmonic_multiplicity(m, j),
            label: (j, 0),
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CliffordSpectrum {
    pub spec: CliffordSpec,
    pub j_max: usize,
    /// Sorted by eigenvalue, then label.
    pub lines: Vec<SpectralLine>,
    /// Smallest eigenvalue with a factor degree above `j_max`.
    pub first_omitted: f64,
    pub threshold: f64,
}

impl CliffordSpectrum {
    pub fn truncation_ok(&self, margin: f64) -> bool {
        self.first_omitted > self.threshold + margin
    }

    /// Equal eigenvalues merged, multiplicities summed.
    pub fn merged(&self) -> Vec<(f64, u64)> {
        let mut out: Vec<(f64, u64)> = Vec::new();
        for line in &self.lines {
            match out.last_mut() {
                Some((mu, m)) if (line.eigenvalue - *mu).abs() <= 1e-12 * mu.abs().max(1.0) => {
                    *m += line.multiplicity;
                }
                _ => out.push((line.eigenvalue, line.multiplicity)),
            }
        }
        out
    }

    pub fn line(&self, p: usize, q: usize) -> Option<&SpectralLine> {
        self.lines.iter().find(|l| l.label == (p, q))
    }
}

fn first_omitted(spec: &CliffordSpec, j_max: usize) -> f64 {
    let j = j_max + 1;
    sphere_eigenvalue(spec.k, spec.r, j).min(sphere_eigenvalue(spec.n - spec.k, spec.co_radius(), j))
}

/// Smallest `j_max` whose first omitted line clears the threshold by
/// `TRUNCATION_MARGIN`.
pub fn default_j_max(spec: &CliffordSpec) -> usize {
    let threshold = spec.jacobi_threshold();
    (1..)
        .find(|&j| first_omitted(spec, j) > threshold + TRUNCATION_MARGIN)
        .expect("eigenvalues grow without bound")
}

/// Product spectrum `mu_p / r^2 + mu_q / (1 - r^2)` for factor degrees up to
/// `j_max`.
pub fn clifford_spectrum(spec: &CliffordSpec, j_max: usize) -> Result<CliffordSpectrum, SpectralError> {
    spec.validate()?;
    let (k, m2) = (spec.k, spec.n - spec.k);
    let (r, s) = (spec.r, spec.co_radius());
    let mut lines = Vec::with_capacity((j_max + 1) * (j_max + 1));
    for p in 0..=j_max {
        for q in 0..=j_max {
            lines.push(SpectralLine {
                eigenvalue: sphere_eigenvalue(k, r, p) + sphere_eigenvalue(m2, s, q),
                multiplicity: harmonic_multiplicity(k, p) * harmonic_multiplicity(m2, q),
                label: (p, q),
            });
        }
    }
    lines.sort_by(|a, b| a.eigenvalue.total_cmp(&b.eigenvalue).then(a.label.cmp(&b.label)));
    Ok(CliffordSpectrum {
        spec: *spec,
        j_max,
        lines,
        first_omitted: first_omitted(spec, j_max),
        threshold: spec.jacobi_threshold(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LineClass {
    Neg,
    Kernel,
    Pos,
}

impl LineClass {
    pub fn as_str(self) -> &'static str {
        match self {
            LineClass::Neg => "neg",
            LineClass::Kernel => "kernel",
            LineClass::Pos => "pos",
        }
    }
}

pub fn classify(eigenvalue: f64, threshold: f64) -> LineClass {
    let jac = eigenvalue - threshold;
    if jac.abs() <= TAU_TIE {
        LineClass::Kernel
    } else if jac < 0.0 {
        LineClass::Neg
    } else {
        LineClass::Pos
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IndexReport {
    pub weak_index: u64,
    pub strong_index: u64,
    pub threshold: f64,
    pub negative_lines: Vec<SpectralLine>,
    pub kernel_lines: Vec<SpectralLine>,
    pub j_max: usize,
}

/// Weak and strong Jacobi indices of a Clifford hypersurface. `j_max`
/// defaults to `default_j_max`.
pub fn index_counts(spec: &CliffordSpec, j_max: Option<usize>) -> Result<IndexReport, SpectralError> {
    spec.validate()?;
    let j_max = j_max.unwrap_or_else(|| default_j_max(spec));
    let spectrum = clifford_spectrum(spec, j_max)?;
    if !spectrum.truncation_ok(0.0) {
        return Err(SpectralError::Truncated {
            j_max,
            first_omitted: spectrum.first_omitted,
            threshold: spectrum.threshold,
            margin: 0.0,
        });
    }
    let threshold = spectrum.threshold;
    let mut report = IndexReport {
        weak_index: 0,
        strong_index: 0,
        threshold,
        negative_lines: Vec::new(),
        kernel_lines: Vec::new(),
        j_max,
    };
    for line in spectrum.lines {
        let constant = line.label == (0, 0);
        match classify(line.eigenvalue, threshold) {
            LineClass::Neg if constant => report.strong_index += line.multiplicity,
            LineClass::Neg => {
                report.weak_index += line.multiplicity;
                report.strong_index += line.multiplicity;
                report.negative_lines.push(line);
            }
            LineClass::Kernel => report.kernel_lines.push(line),
            LineClass::Pos => {}
        }
    }
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IndexTestConstants {
    pub alpha_plus: f64,
    pub alpha_minus: f64,
    pub mu_plus: f64,
    pub mu_minus: f64,
    pub jac_plus: f64,
    pub jac_minus: f64,
    pub disc_d: f64,
}

pub fn index_test_constants(h: f64, norm_a_sq: f64, n: usize) -> Result<IndexTestConstants, SpectralError> {
    if h == 0.0 {
        return Err(SpectralError::MinimalCase);
    }
    let nf = n as f64;
    let disc_d = (norm_a_sq - nf).powi(2) + 4.0 * nf * nf * h * h;
    let root = disc_d.sqrt();
    let mu_plus = 0.5 * (nf + norm_a_sq + root);
    let mu_minus = 0.5 * (nf + norm_a_sq - root);
    let threshold = norm_a_sq + nf;
    Ok(IndexTestConstants {
        alpha_plus: (norm_a_sq - nf + root) / (2.0 * nf * h),
        alpha_minus: (norm_a_sq - nf - root) / (2.0 * nf * h),
        mu_plus,
        mu_minus,
        jac_plus: mu_plus - threshold,
        jac_minus: mu_minus - threshold,
        disc_d,
    })
}

fn require_isoparametric_like(surface: &Hypersurface) -> Result<(f64, f64), SpectralError> {
    let profile = surface.curvature_profile()?;
    if profile.h_spread() > TAU_H {
        return Err(SpectralError::NotCmc(profile.h_spread()));
    }
    if profile.a_spread() > TAU_A {
        return Err(SpectralError::NotConstantA(profile.a_spread()));
    }
    Ok((profile.mean_h(), profile.norm_a_sq()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TestFunctionCheck {
    pub alpha: f64,
    pub mu: f64,
    /// `L^2` norm of `u = ell_v - alpha f_v`.
    pub l2_norm: f64,
    pub degenerate: bool,
    /// Largest `|Delta u + mu u|` over the sample points; zero when degenerate.
    pub residual: f64,
    /// `|int u|`.
    pub integral: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TestFunctionReport {
    pub plus: TestFunctionCheck,
    pub minus: TestFunctionCheck,
}

/// Checks that `ell_v - alpha_+- f_v` are `mu_+-` eigenfunctions with zero
/// mean.
pub fn verify_test_functions(
    surface: &Hypersurface,
    v: &AmbientVector,
    constants: &IndexTestConstants,
    points: &[ChartPoint],
    rule: &QuadratureRule,
) -> Result<TestFunctionReport, SpectralError> {
    require_isoparametric_like(surface)?;
    let check = |alpha: f64, mu: f64| -> Result<TestFunctionCheck, SpectralError> {
        let u = |q: &ChartPoint| -> Result<f64, GeometryError> { Ok(ell_at(surface, q, v)? - alpha * f_at(surface, q, v)?) };
        let values: Vec<f64> = rule.points.iter().map(&u).collect::<Result<_, _>>()?;
        let sq: Vec<f64> = values.iter().map(|x| x * x).collect();
        let l2_norm = rule.integrate(&sq).sqrt();
        let integral = rule.integrate(&values).abs();
        let degenerate = l2_norm < DEGENERATE_NORM;
        let mut residual: f64 = 0.0;
        if !degenerate {
            for p in points {
                let lap = calculus::laplace_beltrami(surface, p, u)?;
                residual = residual.max((lap + mu * u(p)?).abs());
            }
        }
        Ok(TestFunctionCheck {
            alpha,
            mu,
            l2_norm,
            degenerate,
            residual,
            integral,
        })
    };
    Ok(TestFunctionReport {
        plus: check(constants.alpha_plus, constants.mu_plus)?,
        minus: check(constants.alpha_minus, constants.mu_minus)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MinimalJacobiCheck {
    pub norm_a_sq: f64,
    /// Largest `|J ell_v - |A|^2 ell_v|`.
    pub ell_residual: f64,
    /// Largest `|J f_v - n f_v|`.
    pub f_residual: f64,
}

/// On a minimal surface with constant `|A|^2`: `J ell_v = |A|^2 ell_v` and
/// `J f_v = n f_v`.
pub fn verify_minimal_jacobi(
    surface: &Hypersurface,
    v: &AmbientVector,
    points: &[ChartPoint],
) -> Result<MinimalJacobiCheck, SpectralError> {
    let (h, a) = require_isoparametric_like(surface)?;
    if h.abs() > TAU_H {
        return Err(SpectralError::BadSpec(format!("surface is not minimal: H = {h}")));
    }
    let n = surface.dim() as f64;
    let jacobi = |p: &ChartPoint, f: &dyn Fn(&ChartPoint) -> Result<f64, GeometryError>| -> Result<f64, GeometryError> {
        Ok(calculus::laplace_beltrami(surface, p, f)? + (a + n) * f(p)?)
    };
    let mut out = MinimalJacobiCheck {
        norm_a_sq: a,
        ell_residual: 0.0,
        f_residual: 0.0,
    };
    let ell = |q: &ChartPoint| ell_at(surface, q, v);
    let f = |q: &ChartPoint| f_at(surface, q, v);
    for p in points {
        out.ell_residual = out.ell_residual.max((jacobi(p, &ell)? - a * ell(p)?).abs());
        out.f_residual = out.f_residual.max((jacobi(p, &f)? - n * f(p)?).abs());
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BoundFamilies {
    /// `V_1 = {ell_v}`, `V_2 = {f_v}` for minimal surfaces.
    Support,
    /// `U_+-` for `H != 0`.
    TestFunctions,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DimensionBound {
    pub families: BoundFamilies,
    pub rank_first: usize,
    pub rank_second: usize,
    /// Basis vectors `e_a` whose member vanishes identically.
    pub degenerate_first: Vec<usize>,
    pub degenerate_second: Vec<usize>,
    /// `rank_first + rank_second`.
    pub bound: usize,
    /// Rank of the union; equals `bound` exactly when the sum is direct.
    pub union_rank: usize,
    /// Frobenius norm of the cross Gram block.
    pub cross_gram: f64,
}

fn l2_norms(rule: &QuadratureRule, rows: &[Vec<f64>]) -> Vec<f64> {
    rows.iter()
        .map(|r| rule.integrate(&r.iter().map(|x| x * x).collect::<Vec<_>>()).sqrt())
        .collect()
}

/// Gram ranks of the two eigenfunction families, their sum, and their
/// cross Gram norm.
pub fn dimension_bound_report(surface: &Hypersurface, rule: &QuadratureRule) -> Result<DimensionBound, SpectralError> {
    let (h, a) = require_isoparametric_like(surface)?;
    let needed = 10 * surface.ambient_dim();
    if rule.len() < needed {
        return Err(SupportError::InsufficientSamples {
            needed,
            got: rule.len(),
        }
        .into());
    }
    let ell = family_values(surface, SupportFamily::V1, rule)?;
    let nu = family_values(surface, SupportFamily::V2, rule)?;
    let (families, first, second) = if h.abs() <= TAU_H {
        (BoundFamilies::Support, ell, nu)
    } else {
        let c = index_test_constants(h, a, surface.dim())?;
        let combine = |alpha: f64| -> Vec<Vec<f64>> {
            ell.iter()
                .zip(&nu)
                .map(|(l, f)| l.iter().zip(f).map(|(x, y)| x - alpha * y).collect())
                .collect()
        };
        (BoundFamilies::TestFunctions, combine(c.alpha_plus), combine(c.alpha_minus))
    };
    let degenerate = |rows: &[Vec<f64>]| -> Vec<usize> {
        l2_norms(rule, rows)
            .iter()
            .enumerate()
            .filter(|(_, &n)| n < DEGENERATE_NORM)
            .map(|(i, _)| i)
            .collect()
    };
    let keep = |rows: &[Vec<f64>], drop: &[usize]| -> Vec<Vec<f64>> {
        rows.iter()
            .enumerate()
            .filter(|(i, _)| !drop.contains(i))
            .map(|(_, r)| r.clone())
            .collect()
    };
    let degenerate_first = degenerate(&first);
    let degenerate_second = degenerate(&second);
    let first = keep(&first, &degenerate_first);
    let second = keep(&second, &degenerate_second);
    let rank_first = numerical_rank(&gram(rule, &first, &first));
    let rank_second = numerical_rank(&gram(rule, &second, &second));
    let union: Vec<Vec<f64>> = first.iter().chain(&second).cloned().collect();
    let union_rank = numerical_rank(&gram(rule, &union, &union));
    let cross_gram = if first.is_empty() || second.is_empty() {
        0.0
    } else {
        gram(rule, &first, &second).norm()
    };
    Ok(DimensionBound {
        families,
        rank_first,
        rank_second,
        degenerate_first,
        degenerate_second,
        bound: rank_first + rank_second,
        union_rank,
        cross_gram,
    })
}

pub use support::cross_gram_norm;

/// CSV with columns `p,q,mu,mult,jac,class`.
pub fn spectrum_csv(lines: &[SpectralLine], threshold: f64) -> String {
    let mut out = String::from("p,q,mu,mult,jac,class\n");
    for l in lines {
        let _ = writeln!(
            out,
            "{},{},{:.12},{},{:.12},{}",
            l.label.0,
            l.label.1,
            l.eigenvalue,
            l.multiplicity,
            l.eigenvalue - threshold,
            classify(l.eigenvalue, threshold).as_str()
        );
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub r: f64,
    pub weak_index: u64,
    pub strong_index: u64,
    pub kernel: Vec<(usize, usize)>,
    pub on_plateau: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepSummary {
    pub n: usize,
    pub k: usize,
    pub rows: Vec<SweepRow>,
    pub min_weak_index: u64,
    /// Smallest and largest sampled `r` attaining `n + 2`.
    pub plateau: Option<(f64, f64)>,
    /// `[sqrt(k/(n+2)), sqrt((k+2)/(n+2))]`.
    pub expected_plateau: (f64, f64),
    /// Weak index is non-increasing up to the plateau and non-decreasing
    /// after it across the sampled radii.
    pub monotone_outside: bool,
}

pub fn plateau_bounds(n: usize, k: usize) -> (f64, f64) {
    let d = (n + 2) as f64;
    ((k as f64 / d).sqrt(), ((k + 2) as f64 / d).sqrt())
}

pub fn index_sweep(n: usize, k: usize, radii: &[f64]) -> Result<SweepSummary, SpectralError> {
    if radii.is_empty() {
        return Err(SpectralError::BadSpec("empty radius grid".into()));
    }
    let mut sorted = radii.to_vec();
    sorted.sort_by(f64::total_cmp);
    let target = (n + 2) as u64;
    let rows = sorted
        .iter()
        .map(|&r| {
            let rep = index_counts(&CliffordSpec::new(n, k, r), None)?;
            Ok(SweepRow {
                r,
                weak_index: rep.weak_index,
                strong_index: rep.strong_index,
                kernel: rep.kernel_lines.iter().map(|l| l.label).collect(),
                on_plateau: rep.weak_index == target,
            })
        })
        .collect::<Result<Vec<_>, SpectralError>>()?;
    let min_weak_index = rows.iter().map(|r| r.weak_index).min().unwrap_or(0);
    let on: Vec<f64> = rows.iter().filter(|r| r.on_plateau).map(|r| r.r).collect();
    let plateau = on.first().zip(on.last()).map(|(a, b)| (*a, *b));
    let monotone_outside = match plateau {
        Some((lo, hi)) => {
            let left: Vec<u64> = rows.iter().filter(|r| r.r <= lo).map(|r| r.weak_index).collect();
            let right: Vec<u64> = rows.iter().filter(|r| r.r >= hi).map(|r| r.weak_index).collect();
            left.windows(2).all(|w| w[0] >= w[1]) && right.windows(2).all(|w| w[0] <= w[1])
        }
        None => false,
    };
    Ok(SweepSummary {
        n,
        k,
        rows,
        min_weak_index,
        plateau,
        expected_plateau: plateau_bounds(n, k),
        monotone_outside,
    })
}

/// Tab-separated `r weak strong` rows with a `#` header.
pub fn sweep_tsv(summary: &SweepSummary) -> String {
    let mut out = String::from("# r\tweak_index\tstrong_index\tkernel_lines\n");
    for row in &summary.rows {
        let kernel: Vec<String> = row.kernel.iter().map(|(p, q)| format!("({p},{q})")).collect();
        let _ = writeln!(
            out,
            "{:.6}\t{}\t{}\t{}",
            row.r,
            row.weak_index,
            row.strong_index,
            if kernel.is_empty() { "-".to_string() } else { kernel.join(";") }
        );
    }
    out
}

/// Sweep table as CSV with columns `r,weak_index,strong_index,kernel,on_plateau`.
pub fn sweep_csv(summary: &SweepSummary) -> String {
    let mut out = String::from("r,weak_index,strong_index,kernel,on_plateau\n");
    for row in &summary.rows {
        let kernel: Vec<String> = row.kernel.iter().map(|(p, q)| format!("({p};{q})")).collect();
        let _ = writeln!(
            out,
            "{:.6},{},{},{},{}",
            row.r,
            row.weak_index,
            row.strong_index,
            kernel.join(" "),
            row.on_plateau
        );
    }
    out
}

/// Dense symmetric matrix helper for tests and the mesh module.
pub(crate) fn sorted_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = nalgebra::SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}
