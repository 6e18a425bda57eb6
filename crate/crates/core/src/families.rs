//! Closed-form hypersurface families: umbilical slices `S^n(v, c)`, Clifford
//! products `S^k(r) x S^{n-k}(sqrt(1 - r^2))`, and a non-CMC product
//! immersion built over a perturbed small sphere `N` of `S^n`.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    AmbientVector, Chart, ChartPoint, GeometryError, Hypersurface, Interval, ParamDomain,
};
use crate::taylor::Taylor2;

/// Polar chart angles stay this far from the coordinate poles.
pub const POLE_MARGIN: f64 = 1e-3;
/// Admissible curvature window of the base surface is `(1 + d, 2 - d)`.
pub const BASE_CURVATURE_MARGIN: f64 = 0.01;
const DEGENERACY_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FamilyError {
    #[error("bad family spec: {0}")]
    BadSpec(String),
    #[error("base curvatures span [{min}, {max}], outside (1 + {margin}, 2 - {margin})")]
    CurvatureOutOfBounds { min: f64, max: f64, margin: f64 },
    #[error("immersion factor reaches {0:e}; the product map degenerates")]
    DegenerateImmersion(f64),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

fn bad(msg: impl Into<String>) -> FamilyError {
    FamilyError::BadSpec(msg.into())
}

/// Hyperspherical coordinates of the unit sphere `S^m` in `R^{m+1}`:
/// `(cos t1, sin t1 cos t2, ..., sin t1 ... sin t_{m-1} cos t_m, sin t1 ... sin t_m)`.
pub(crate) fn unit_sphere(t: &[Taylor2]) -> Vec<Taylor2> {
    let mut out = Vec::with_capacity(t.len() + 1);
    let mut prod = Taylor2::constant(1.0);
    for ti in t {
        out.push(&prod * ti.cos());
        prod = prod * ti.sin();
    }
    out.push(prod);
    out
}

/// Polar axes followed by one periodic azimuth.
fn sphere_axes(m: usize) -> Vec<Interval> {
    (0..m)
        .map(|i| {
            if i + 1 < m {
                Interval::open(POLE_MARGIN, PI - POLE_MARGIN)
            } else {
                Interval::periodic(-PI, PI)
            }
        })
        .collect()
}

/// Orthonormal basis of the orthogonal complement of the unit vector `v`.
fn complement_basis(v: &AmbientVector) -> Vec<AmbientVector> {
    let m = v.len();
    let mut basis = vec![v.clone()];
    for k in 0..m {
        let mut w = AmbientVector::zeros(m);
        w[k] = 1.0;
        for b in &basis {
            let c = w.dot(b);
            w.axpy(-c, b, 1.0);
        }
        if w.norm() > 1e-6 {
            basis.push(w.normalize());
        }
        if basis.len() == m {
            break;
        }
    }
    basis.remove(0);
    basis
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UmbilicalSpec {
    pub v: Vec<f64>,
    pub c: f64,
}

impl UmbilicalSpec {
    pub fn new(v: impl Into<Vec<f64>>, c: f64) -> Self {
        Self { v: v.into(), c }
    }

    /// Hypersurface dimension `n`; the ambient space is `R^{n+2}`.
    pub fn dim(&self) -> usize {
        self.v.len().saturating_sub(2)
    }

    pub fn validate(&self) -> Result<(), FamilyError> {
        if self.v.len() < 3 {
            return Err(bad("umbilical sphere needs an ambient dimension of at least 3"));
        }
        let norm = self.v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(bad(format!("v must be a unit vector (|v| = {norm})")));
        }
        if !(self.c.abs() < 1.0) {
            return Err(bad(format!("|c| must be < 1 (c = {})", self.c)));
        }
        Ok(())
    }

    pub fn principal_curvature(&self) -> f64 {
        self.c / (1.0 - self.c * self.c).sqrt()
    }

    pub fn mean_curvature(&self) -> f64 {
        self.principal_curvature()
    }

    pub fn norm_a_sq(&self) -> f64 {
        self.dim() as f64 * self.c * self.c / (1.0 - self.c * self.c)
    }
}

#[derive(Debug)]
struct UmbilicalChart {
    spec: UmbilicalSpec,
    v: AmbientVector,
    basis: Vec<AmbientVector>,
    domain: ParamDomain,
}

impl Chart for UmbilicalChart {
    fn dim(&self) -> usize {
        self.spec.dim()
    }

    fn domain(&self) -> &ParamDomain {
        &self.domain
    }

    fn immersion(&self, u: &[Taylor2]) -> Vec<Taylor2> {
        let y = unit_sphere(u);
        let rho = (1.0 - self.spec.c * self.spec.c).sqrt();
        (0..self.v.len())
            .map(|k| {
                let mut acc = Taylor2::constant(self.spec.c * self.v[k]);
                for (yj, bj) in y.iter().zip(&self.basis) {
                    acc = acc + yj * (rho * bj[k]);
                }
                acc
            })
            .collect()
    }

    fn gauss_map(&self, u: &[Taylor2]) -> Option<Vec<Taylor2>> {
        let c = self.spec.c;
        let inv = 1.0 / (1.0 - c * c).sqrt();
        let x = self.immersion(u);
        Some(
            x.iter()
                .zip(self.v.iter())
                .map(|(xk, vk)| xk.scale(-c).offset(*vk).scale(inv))
                .collect(),
        )
    }

    fn label(&self) -> String {
        format!("umbilical(n={}, c={})", self.spec.dim(), self.spec.c)
    }
}

/// `S^n(v, c) = {x in S^{n+1} : <x, v> = c}` with normal `(v - c x)/sqrt(1 - c^2)`.
pub fn make_umbilical(spec: &UmbilicalSpec) -> Result<Hypersurface, FamilyError> {
    spec.validate()?;
    let v = AmbientVector::from_vec(spec.v.clone());
    let basis = complement_basis(&v);
    let domain = ParamDomain::new(sphere_axes(spec.dim()));
    Ok(Hypersurface::new(UmbilicalChart {
        spec: spec.clone(),
        v,
        basis,
        domain,
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CliffordSpec {
    pub n: usize,
    pub k: usize,
    pub r: f64,
}

impl CliffordSpec {
    pub fn new(n: usize, k: usize, r: f64) -> Self {
        Self { n, k, r }
    }

    /// The minimal member `r = sqrt(k/n)`.
    pub fn minimal(n: usize, k: usize) -> Self {
        Self::new(n, k, (k as f64 / n as f64).sqrt())
    }

    pub fn validate(&self) -> Result<(), FamilyError> {
        if self.n < 2 {
            return Err(bad(format!("Clifford hypersurfaces need n >= 2 (n = {})", self.n)));
        }
        if self.k < 1 || self.k > self.n - 1 {
            return Err(bad(format!("k must lie in [1, n-1] (k = {}, n = {})", self.k, self.n)));
        }
        if !(self.r > 0.0 && self.r < 1.0) {
            return Err(bad(format!("r must lie in (0, 1) (r = {})", self.r)));
        }
        Ok(())
    }

    /// Radius of the second factor.
    pub fn co_radius(&self) -> f64 {
        (1.0 - self.r * self.r).sqrt()
    }

    /// `(kappa on the first factor, kappa on the second factor)`.
    pub fn principal_curvatures(&self) -> (f64, f64) {
        let (r, s) = (self.r, self.co_radius());
        (-s / r, r / s)
    }

    pub fn mean_curvature(&self) -> f64 {
        let (n, k, r) = (self.n as f64, self.k as f64, self.r);
        (n * r * r - k) / (n * r * self.co_radius())
    }

    pub fn norm_a_sq(&self) -> f64 {
        let (n, k, r) = (self.n as f64, self.k as f64, self.r);
        k / (r * r) + (n - k) / (1.0 - r * r) - n
    }

    /// `|A|^2 + n`, the Jacobi shift.
    pub fn jacobi_threshold(&self) -> f64 {
        self.norm_a_sq() + self.n as f64
    }
}

#[derive(Debug)]
struct CliffordChart {
    spec: CliffordSpec,
    domain: ParamDomain,
}

impl CliffordChart {
    fn factors(&self, u: &[Taylor2]) -> (Vec<Taylor2>, Vec<Taylor2>) {
        let (a, b) = u.split_at(self.spec.k);
        (unit_sphere(a), unit_sphere(b))
    }
}

impl Chart for CliffordChart {
    fn dim(&self) -> usize {
        self.spec.n
    }

    fn domain(&self) -> &ParamDomain {
        &self.domain
    }

    fn immersion(&self, u: &[Taylor2]) -> Vec<Taylor2> {
        let (x, y) = self.factors(u);
        let (r, s) = (self.spec.r, self.spec.co_radius());
        x.into_iter()
            .map(|t| t * r)
            .chain(y.into_iter().map(|t| t * s))
            .collect()
    }

    fn gauss_map(&self, u: &[Taylor2]) -> Option<Vec<Taylor2>> {
        // (sqrt(1-r^2)/r x, -r/sqrt(1-r^2) y) with x = r X, y = s Y
        let (x, y) = self.factors(u);
        let (r, s) = (self.spec.r, self.spec.co_radius());
        Some(
            x.into_iter()
                .map(|t| t * s)
                .chain(y.into_iter().map(|t| t * (-r)))
                .collect(),
        )
    }

    fn label(&self) -> String {
        format!("clifford(n={}, k={}, r={})", self.spec.n, self.spec.k, self.spec.r)
    }
}

/// `M_k(r)` with one hyperspherical chart per factor.
pub fn make_clifford(spec: &CliffordSpec) -> Result<Hypersurface, FamilyError> {
    spec.validate()?;
    let mut axes = sphere_axes(spec.k);
    axes.extend(sphere_axes(spec.n - spec.k));
    Ok(Hypersurface::new(CliffordChart {
        spec: *spec,
        domain: ParamDomain::new(axes),
    }))
}

/// A colatitude-modulated small sphere `N` of `S^n`:
/// `x = (cos rho, sin rho y)`, `y in S^{n-1}`, `rho = rho0 + eps cos(m t1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaseSurfaceSpec {
    /// Dimension of the sphere `S^n` containing `N`.
    pub n: usize,
    pub rho0: f64,
    pub eps: f64,
    pub m: u32,
}

impl BaseSurfaceSpec {
    /// Unperturbed colatitude `arccos(4/5)`, whose slice has curvature `4/3`.
    pub fn standard(n: usize, eps: f64, m: u32) -> Self {
        Self {
            n,
            rho0: 0.8f64.acos(),
            eps,
            m,
        }
    }

    pub fn validate(&self) -> Result<(), FamilyError> {
        if !(self.n == 2 || self.n == 3) {
            return Err(bad(format!("base surface supports n = 2 or 3 (n = {})", self.n)));
        }
        if !(self.eps >= 0.0) {
            return Err(bad(format!("eps must be >= 0 (eps = {})", self.eps)));
        }
        if self.m == 0 {
            return Err(bad("perturbation frequency must be >= 1"));
        }
        if !(self.rho0 - self.eps > 0.0 && self.rho0 + self.eps < PI) {
            return Err(bad("colatitude leaves (0, pi)"));
        }
        Ok(())
    }
}

#[derive(Debug)]
struct BaseChart {
    spec: BaseSurfaceSpec,
    domain: ParamDomain,
}

impl BaseChart {
    fn colatitude(&self, t1: &Taylor2) -> (Taylor2, Taylor2) {
        let m = self.spec.m as f64;
        let wave = t1.scale(m);
        let rho = wave.cos().scale(self.spec.eps).offset(self.spec.rho0);
        let rho_dot = wave.sin().scale(-self.spec.eps * m);
        (rho, rho_dot)
    }

    /// `y(t)` and `dy/dt1`.
    fn direction(&self, t: &[Taylor2]) -> (Vec<Taylor2>, Vec<Taylor2>) {
        let z = unit_sphere(&t[1..]);
        let (s1, c1) = (t[0].sin(), t[0].cos());
        let mut y = vec![c1.clone()];
        let mut y_t1 = vec![-&s1];
        for zk in &z {
            y.push(&s1 * zk);
            y_t1.push(&c1 * zk);
        }
        (y, y_t1)
    }
}

impl Chart for BaseChart {
    fn dim(&self) -> usize {
        self.spec.n - 1
    }

    fn domain(&self) -> &ParamDomain {
        &self.domain
    }

    fn immersion(&self, u: &[Taylor2]) -> Vec<Taylor2> {
        let (rho, _) = self.colatitude(&u[0]);
        let (y, _) = self.direction(u);
        let s = rho.sin();
        std::iter::once(rho.cos())
            .chain(y.iter().map(|yk| &s * yk))
            .collect()
    }

    fn gauss_map(&self, u: &[Taylor2]) -> Option<Vec<Taylor2>> {
        // (sin rho, -cos rho y + (rho'/sin rho) y_t1) / sqrt(1 + rho'^2/sin^2 rho)
        let (rho, rho_dot) = self.colatitude(&u[0]);
        let (y, y_t1) = self.direction(u);
        let (s, c) = (rho.sin(), rho.cos());
        let slope = &rho_dot / &s;
        let inv_norm = (1.0 + &slope * &slope).sqrt().recip();
        let mut out = vec![&s * &inv_norm];
        for (yk, dk) in y.iter().zip(&y_t1) {
            out.push((&slope * dk - &c * yk) * &inv_norm);
        }
        Some(out)
    }

    fn label(&self) -> String {
        format!(
            "base(n={}, rho0={}, eps={}, m={})",
            self.spec.n, self.spec.rho0, self.spec.eps, self.spec.m
        )
    }
}

/// Validated base surface with its sampled curvature range.
#[derive(Clone, Debug)]
pub struct BaseSurface {
    pub spec: BaseSurfaceSpec,
    pub surface: Hypersurface,
    pub kappa_min: f64,
    pub kappa_max: f64,
    chart: Arc<BaseChart>,
}

fn base_sample_points(spec: &BaseSurfaceSpec) -> Vec<ChartPoint> {
    match spec.n {
        2 => (0..512)
            .map(|i| ChartPoint::new(vec![-PI + 2.0 * PI * i as f64 / 512.0]))
            .collect(),
        _ => {
            let mut pts = Vec::with_capacity(64 * 64);
            for i in 0..64 {
                let t1 = POLE_MARGIN + (PI - 2.0 * POLE_MARGIN) * (i as f64 + 0.5) / 64.0;
                for j in 0..64 {
                    pts.push(ChartPoint::new(vec![t1, -PI + 2.0 * PI * j as f64 / 64.0]));
                }
            }
            pts
        }
    }
}

/// Builds `N` and rejects specs whose curvatures leave `(1 + 0.01, 2 - 0.01)`.
pub fn make_base_surface(spec: &BaseSurfaceSpec) -> Result<BaseSurface, FamilyError> {
    spec.validate()?;
    let axes = if spec.n == 2 {
        vec![Interval::periodic(-PI, PI)]
    } else {
        vec![
            Interval::open(POLE_MARGIN, PI - POLE_MARGIN),
            Interval::periodic(-PI, PI),
        ]
    };
    let chart = Arc::new(BaseChart {
        spec: *spec,
        domain: ParamDomain::new(axes),
    });
    let surface = Hypersurface::from_arc(chart.clone());
    let mut kappa_min = f64::INFINITY;
    let mut kappa_max = f64::NEG_INFINITY;
    for p in base_sample_points(spec) {
        for k in surface.shape_operator(&p)?.kappas {
            kappa_min = kappa_min.min(k);
            kappa_max = kappa_max.max(k);
        }
    }
    let margin = BASE_CURVATURE_MARGIN;
    if !(kappa_min > 1.0 + margin && kappa_max < 2.0 - margin) {
        return Err(FamilyError::CurvatureOutOfBounds {
            min: kappa_min,
            max: kappa_max,
            margin,
        });
    }
    Ok(BaseSurface {
        spec: *spec,
        surface,
        kappa_min,
        kappa_max,
        chart,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleSpec {
    pub base: BaseSurfaceSpec,
}

#[derive(Debug)]
struct ProductChart {
    base: Arc<BaseChart>,
    domain: ParamDomain,
}

impl ProductChart {
    fn pieces(&self, u: &[Taylor2]) -> (Taylor2, Taylor2, Vec<Taylor2>, Vec<Taylor2>) {
        let arg = u[0].scale(SQRT_2);
        let (s, c) = (arg.sin(), arg.cos());
        let x = self.base.immersion(&u[1..]);
        let nu = self
            .base
            .gauss_map(&u[1..])
            .expect("base chart has a Gauss map");
        (s, c, x, nu)
    }

    fn assemble(&self, u: &[Taylor2], tail_sign: f64) -> Vec<Taylor2> {
        let (s, c, x, nu) = self.pieces(u);
        std::iter::once(s.scale(FRAC_1_SQRT_2))
            .chain(x.iter().zip(&nu).map(|(xk, nk)| {
                ((xk + nk) * &c).scale(0.5) + (xk - nk).scale(0.5 * tail_sign)
            }))
            .collect()
    }
}

impl Chart for ProductChart {
    fn dim(&self) -> usize {
        self.base.dim() + 1
    }

    fn domain(&self) -> &ParamDomain {
        &self.domain
    }

    fn immersion(&self, u: &[Taylor2]) -> Vec<Taylor2> {
        self.assemble(u, 1.0)
    }

    fn gauss_map(&self, u: &[Taylor2]) -> Option<Vec<Taylor2>> {
        Some(self.assemble(u, -1.0))
    }

    fn label(&self) -> String {
        format!("counterexample[{}]", self.base.label())
    }
}

/// The product immersion over `N` on which `ell_v = f_v` for `v = e_1`.
#[derive(Clone, Debug)]
pub struct Counterexample {
    pub spec: CounterexampleSpec,
    pub base: BaseSurface,
    pub surface: Hypersurface,
    /// Minimum of `|(1 - lambda_i) cos(sqrt2 s) + 1 + lambda_i|` over samples.
    pub min_factor: f64,
}

impl Counterexample {
    /// Chart point of the product over base point `t` at parameter `s`.
    pub fn chart_point(&self, s: f64, base: &ChartPoint) -> ChartPoint {
        let mut u = vec![s];
        u.extend_from_slice(base.params());
        ChartPoint::new(u)
    }

    /// `e_1` of the ambient `R^{n+2}`.
    pub fn axis(&self) -> AmbientVector {
        let mut v = AmbientVector::zeros(self.surface.ambient_dim());
        v[0] = 1.0;
        v
    }
}

pub fn make_counterexample(spec: &CounterexampleSpec) -> Result<Counterexample, FamilyError> {
    let base = make_base_surface(&spec.base)?;
    let mut axes = vec![Interval::periodic(-PI / SQRT_2, PI / SQRT_2)];
    axes.extend_from_slice(base.chart.domain().axes());
    let chart = ProductChart {
        base: base.chart.clone(),
        domain: ParamDomain::new(axes),
    };
    let mut min_factor = f64::INFINITY;
    for i in 0..256 {
        let s = -PI / SQRT_2 + SQRT_2 * PI * i as f64 / 256.0;
        let cs = (SQRT_2 * s).cos();
        for lam in [base.kappa_min, base.kappa_max] {
            min_factor = min_factor.min(((1.0 - lam) * cs + 1.0 + lam).abs());
        }
    }
    if min_factor < DEGENERACY_TOL {
        return Err(FamilyError::DegenerateImmersion(min_factor));
    }
    Ok(Counterexample {
        spec: *spec,
        surface: Hypersurface::new(chart),
        base,
        min_factor,
    })
}
