//! Charts, jets, normals and shape operators for hypersurfaces `M^n` of the
//! unit sphere `S^{n+1}` in `R^{n+2}`.
//!
//! A [`Chart`] supplies a parametrization written over [`Taylor2`], and
//! optionally a closed-form Gauss map. [`Hypersurface`] wraps a chart with an
//! orientation flag and a jet mode: analytic jets come straight from the
//! Taylor arithmetic, finite-difference jets use central differences on the
//! chart positions and a Gram-Schmidt normal.

use std::fmt;
use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

use crate::rng::Lcg64;
use crate::taylor::Taylor2;

/// A point or vector of the ambient Euclidean space `R^{n+2}`.
pub type AmbientVector = DVector<f64>;

/// Unit-sphere tolerance for analytic jets.
pub const TAU_GEO: f64 = 1e-9;
/// Tolerance for finite-difference jets.
pub const TAU_FD: f64 = 1e-6;
/// Smallest admissible determinant of the first fundamental form.
pub const TAU_RANK: f64 = 1e-14;
/// Central-difference step on chart parameters.
pub const FD_STEP: f64 = 1e-5;
/// Default distance kept from non-periodic chart boundaries when sampling.
pub const SAMPLE_MARGIN: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("chart point {0:?} lies outside the parameter domain")]
    OutOfDomain(Vec<f64>),
    #[error("first fundamental form is degenerate (det = {0:e})")]
    RankDeficient(f64),
    #[error("shape operator asymmetric by {0:e}; the jet is unreliable")]
    Asymmetric(f64),
    #[error("expected {expected} chart parameters, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

pub type Result<T, E = GeometryError> = std::result::Result<T, E>;

/// Coordinates in a chart's parameter domain.
#[derive(Clone, Debug, PartialEq)]
pub struct ChartPoint(pub Vec<f64>);

impl ChartPoint {
    pub fn new(params: impl Into<Vec<f64>>) -> Self {
        Self(params.into())
    }

    pub fn params(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub(crate) fn shifted(&self, axis: usize, step: f64) -> Self {
        let mut out = self.clone();
        out.0[axis] += step;
        out
    }
}

impl From<Vec<f64>> for ChartPoint {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// One axis of a parameter box.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    /// Periodic axes wrap with period `hi - lo`.
    pub periodic: bool,
}

impl Interval {
    pub fn open(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            periodic: false,
        }
    }

    pub fn periodic(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            periodic: true,
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamDomain {
    axes: Vec<Interval>,
}

impl ParamDomain {
    pub fn new(axes: Vec<Interval>) -> Self {
        Self { axes }
    }

    pub fn axes(&self) -> &[Interval] {
        &self.axes
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn contains(&self, p: &ChartPoint) -> bool {
        p.dim() == self.dim()
            && self
                .axes
                .iter()
                .zip(p.params())
                .all(|(ax, &x)| x.is_finite() && (ax.periodic || (x > ax.lo && x < ax.hi)))
    }

    /// Maps periodic coordinates back into `[lo, hi)`.
    pub fn wrap(&self, p: &mut ChartPoint) {
        for (ax, x) in self.axes.iter().zip(p.0.iter_mut()) {
            if ax.periodic {
                *x = ax.lo + (*x - ax.lo).rem_euclid(ax.width());
            }
        }
    }

    pub fn center(&self) -> ChartPoint {
        ChartPoint(
            self.axes
                .iter()
                .map(|ax| 0.5 * (ax.lo + ax.hi))
                .collect(),
        )
    }

    /// Uniform sample, keeping `margin` away from non-periodic boundaries.
    pub fn sample(&self, rng: &mut Lcg64, margin: f64) -> ChartPoint {
        ChartPoint(
            self.axes
                .iter()
                .map(|ax| {
                    if ax.periodic {
                        rng.uniform(ax.lo, ax.hi)
                    } else {
                        rng.uniform(ax.lo + margin, ax.hi - margin)
                    }
                })
                .collect(),
        )
    }
}

/// A parametrized piece of hypersurface in a unit sphere.
pub trait Chart: Send + Sync + fmt::Debug {
    /// Intrinsic dimension `n`.
    fn dim(&self) -> usize;
    /// Dimension of the ambient Euclidean space, `n + 2`.
    fn ambient_dim(&self) -> usize {
        self.dim() + 2
    }
    fn domain(&self) -> &ParamDomain;
    fn immersion(&self, u: &[Taylor2]) -> Vec<Taylor2>;
    /// Closed-form unit normal, when the family has one.
    fn gauss_map(&self, _u: &[Taylor2]) -> Option<Vec<Taylor2>> {
        None
    }
    fn label(&self) -> String;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Orientation {
    #[default]
    Positive,
    Negative,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Positive => 1.0,
            Orientation::Negative => -1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum JetMode {
    #[default]
    Analytic,
    FiniteDifference,
}

impl JetMode {
    pub fn tau_geo(self) -> f64 {
        match self {
            JetMode::Analytic => TAU_GEO,
            JetMode::FiniteDifference => TAU_FD,
        }
    }
}

/// Immersion value with first and second parameter derivatives.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceJet {
    pub value: AmbientVector,
    pub d1: Vec<AmbientVector>,
    /// `d2[i][j] = d^2 phi / du_i du_j`.
    pub d2: Vec<Vec<AmbientVector>>,
}

impl SurfaceJet {
    pub fn dim(&self) -> usize {
        self.d1.len()
    }

    /// First fundamental form `g_ij = <d_i phi, d_j phi>`.
    pub fn metric(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| self.d1[i].dot(&self.d1[j]))
    }

    /// Christoffel symbols `Gamma^k_ij = g^{kl} <phi_ij, phi_l>` of the
    /// induced metric, indexed `[k][i][j]`.
    pub fn christoffel(&self, metric_inv: &DMatrix<f64>) -> Vec<Vec<Vec<f64>>> {
        let n = self.dim();
        let mut out = vec![vec![vec![0.0; n]; n]; n];
        for i in 0..n {
            for j in 0..n {
                let lowered: Vec<f64> = (0..n).map(|l| self.d2[i][j].dot(&self.d1[l])).collect();
                for k in 0..n {
                    out[k][i][j] = (0..n).map(|l| metric_inv[(k, l)] * lowered[l]).sum();
                }
            }
        }
        out
    }

    /// Ambient vector `sum_i c_i d_i phi`.
    pub fn push_forward(&self, coeffs: &[f64]) -> AmbientVector {
        let mut out = AmbientVector::zeros(self.value.len());
        for (c, d) in coeffs.iter().zip(&self.d1) {
            out.axpy(*c, d, 1.0);
        }
        out
    }

    /// Chart components of the tangential projection of `w`.
    pub fn pull_back(&self, w: &AmbientVector) -> Option<Vec<f64>> {
        let rhs = DVector::from_iterator(self.dim(), self.d1.iter().map(|d| d.dot(w)));
        let sol = self.metric().cholesky()?.solve(&rhs);
        Some(sol.iter().copied().collect())
    }
}

/// Unit normal and its first parameter derivatives.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalJet {
    pub normal: AmbientVector,
    pub d1: Vec<AmbientVector>,
}

/// Shape operator data at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureData {
    /// Shape operator in the orthonormal tangent frame `frame`.
    pub shape: DMatrix<f64>,
    /// Principal curvatures, ascending.
    pub kappas: Vec<f64>,
    pub mean_h: f64,
    pub norm_a_sq: f64,
    /// Gram-Schmidt orthonormalization of the chart derivatives.
    pub frame: Vec<AmbientVector>,
    /// Unit principal directions matching `kappas`.
    pub directions: Vec<AmbientVector>,
}

impl CurvatureData {
    fn from_shape(shape: DMatrix<f64>, frame: Vec<AmbientVector>) -> Self {
        let n = shape.nrows();
        let eig = SymmetricEigen::new(shape.clone());
        let mut order: Vec<usize> = (0..n).collect();
        // stable sort keeps the solver's order among exact ties
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let kappas: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let directions = order
            .iter()
            .map(|&i| {
                let mut d = AmbientVector::zeros(frame[0].len());
                for (a, e) in frame.iter().enumerate() {
                    d.axpy(eig.eigenvectors[(a, i)], e, 1.0);
                }
                d
            })
            .collect();
        let mean_h = kappas.iter().sum::<f64>() / n as f64;
        let norm_a_sq = kappas.iter().map(|k| k * k).sum();
        Self {
            shape,
            kappas,
            mean_h,
            norm_a_sq,
            frame,
            directions,
        }
    }

    /// `A(t)` for an ambient tangent vector `t`.
    pub fn apply(&self, t: &AmbientVector) -> AmbientVector {
        let coords = DVector::from_iterator(self.frame.len(), self.frame.iter().map(|e| e.dot(t)));
        let image = &self.shape * coords;
        let mut out = AmbientVector::zeros(t.len());
        for (c, e) in image.iter().zip(&self.frame) {
            out.axpy(*c, e, 1.0);
        }
        out
    }
}

/// Min/max of `H` and `|A|^2` over a fixed deterministic sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvatureProfile {
    pub h_min: f64,
    pub h_max: f64,
    pub a_min: f64,
    pub a_max: f64,
}

impl CurvatureProfile {
    pub fn h_spread(&self) -> f64 {
        self.h_max - self.h_min
    }

    pub fn a_spread(&self) -> f64 {
        self.a_max - self.a_min
    }

    pub fn mean_h(&self) -> f64 {
        0.5 * (self.h_min + self.h_max)
    }

    pub fn norm_a_sq(&self) -> f64 {
        0.5 * (self.a_min + self.a_max)
    }
}

const PROFILE_SEED: u64 = 0x5eed_cafe;
const PROFILE_SAMPLES: usize = 64;

/// An immersed hypersurface described by one chart.
#[derive(Clone)]
pub struct Hypersurface {
    chart: Arc<dyn Chart>,
    orientation: Orientation,
    mode: JetMode,
    profile: Arc<OnceLock<Result<CurvatureProfile>>>,
}

impl fmt::Debug for Hypersurface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Hypersurface")
            .field("chart", &self.chart.label())
            .field("orientation", &self.orientation)
            .field("mode", &self.mode)
            .finish()
    }
}

impl Hypersurface {
    pub fn new(chart: impl Chart + 'static) -> Self {
        Self::from_arc(Arc::new(chart))
    }

    pub fn from_arc(chart: Arc<dyn Chart>) -> Self {
        Self {
            chart,
            orientation: Orientation::Positive,
            mode: JetMode::Analytic,
            profile: Arc::new(OnceLock::new()),
        }
    }

    pub fn with_orientation(&self, orientation: Orientation) -> Self {
        Self {
            orientation,
            profile: Arc::new(OnceLock::new()),
            ..self.clone()
        }
    }

    pub fn with_mode(&self, mode: JetMode) -> Self {
        Self {
            mode,
            profile: Arc::new(OnceLock::new()),
            ..self.clone()
        }
    }

    pub fn chart(&self) -> &dyn Chart {
        self.chart.as_ref()
    }

    pub fn label(&self) -> String {
        self.chart.label()
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn ambient_dim(&self) -> usize {
        self.chart.ambient_dim()
    }

    pub fn domain(&self) -> &ParamDomain {
        self.chart.domain()
    }

    pub fn mode(&self) -> JetMode {
        self.mode
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    fn check_point(&self, p: &ChartPoint) -> Result<()> {
        if p.dim() != self.dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dim(),
                got: p.dim(),
            });
        }
        if !self.domain().contains(p) {
            return Err(GeometryError::OutOfDomain(p.0.clone()));
        }
        Ok(())
    }

    fn raw_position(&self, p: &ChartPoint) -> AmbientVector {
        let vals = self.chart.immersion(&Taylor2::constants(p.params()));
        AmbientVector::from_iterator(vals.len(), vals.iter().map(Taylor2::value))
    }

    /// `phi(p)` without derivatives.
    pub fn position(&self, p: &ChartPoint) -> Result<AmbientVector> {
        self.check_point(p)?;
        Ok(self.raw_position(p))
    }

    pub fn immersion_jet(&self, p: &ChartPoint) -> Result<SurfaceJet> {
        self.check_point(p)?;
        let jet = match self.mode {
            JetMode::Analytic => {
                let vals = self.chart.immersion(&Taylor2::variables(p.params()));
                jet_from_taylor(&vals, p.dim())
            }
            JetMode::FiniteDifference => self.fd_jet(p),
        };
        let det = jet.metric().determinant();
        if !(det.abs() >= TAU_RANK) {
            return Err(GeometryError::RankDeficient(det));
        }
        Ok(jet)
    }

    fn fd_jet(&self, p: &ChartPoint) -> SurfaceJet {
        let n = p.dim();
        let h = FD_STEP;
        let value = self.raw_position(p);
        let plus: Vec<AmbientVector> = (0..n).map(|i| self.raw_position(&p.shifted(i, h))).collect();
        let minus: Vec<AmbientVector> =
            (0..n).map(|i| self.raw_position(&p.shifted(i, -h))).collect();
        let d1 = (0..n).map(|i| (&plus[i] - &minus[i]) / (2.0 * h)).collect();
        let mut d2 = vec![vec![AmbientVector::zeros(value.len()); n]; n];
        for i in 0..n {
            d2[i][i] = (&plus[i] - 2.0 * &value + &minus[i]) / (h * h);
            for j in (i + 1)..n {
                let pp = self.raw_position(&p.shifted(i, h).shifted(j, h));
                let pm = self.raw_position(&p.shifted(i, h).shifted(j, -h));
                let mp = self.raw_position(&p.shifted(i, -h).shifted(j, h));
                let mm = self.raw_position(&p.shifted(i, -h).shifted(j, -h));
                let mixed = (pp - pm - mp + mm) / (4.0 * h * h);
                d2[i][j] = mixed.clone();
                d2[j][i] = mixed;
            }
        }
        SurfaceJet { value, d1, d2 }
    }

    fn formula_normal(&self, p: &ChartPoint) -> Option<AmbientVector> {
        let vals = self.chart.gauss_map(&Taylor2::constants(p.params()))?;
        Some(AmbientVector::from_iterator(vals.len(), vals.iter().map(Taylor2::value)))
    }

    /// Unit normal with its parameter derivatives.
    pub fn unit_normal(&self, p: &ChartPoint) -> Result<NormalJet> {
        let jet = self.immersion_jet(p)?;
        self.normal_from_jet(p, &jet)
    }

    pub(crate) fn normal_from_jet(&self, p: &ChartPoint, jet: &SurfaceJet) -> Result<NormalJet> {
        let sign = self.orientation.sign();
        if self.mode == JetMode::Analytic {
            if let Some(vals) = self.chart.gauss_map(&Taylor2::variables(p.params())) {
                let tj = jet_from_taylor(&vals, p.dim());
                return Ok(NormalJet {
                    normal: sign * tj.value,
                    d1: tj.d1.into_iter().map(|d| sign * d).collect(),
                });
            }
        }
        let mut normal = complement_normal(jet);
        if let Some(formula) = self.formula_normal(p) {
            if normal.dot(&formula) < 0.0 {
                normal = -normal;
            }
        }
        normal *= sign;
        let d1 = weingarten(jet, &normal)?;
        Ok(NormalJet { normal, d1 })
    }

    /// Normal vector only; cheap for families with a closed-form Gauss map.
    pub fn normal_at(&self, p: &ChartPoint) -> Result<AmbientVector> {
        if self.mode == JetMode::Analytic {
            self.check_point(p)?;
            if let Some(n) = self.formula_normal(p) {
                return Ok(self.orientation.sign() * n);
            }
        }
        Ok(self.unit_normal(p)?.normal)
    }

    pub fn shape_operator(&self, p: &ChartPoint) -> Result<CurvatureData> {
        let jet = self.immersion_jet(p)?;
        let nj = self.normal_from_jet(p, &jet)?;
        shape_from_jets(&jet, &nj)
    }

    /// `H` and `|A|^2` extremes over a fixed 64-point sample.
    pub fn curvature_profile(&self) -> Result<CurvatureProfile> {
        self.profile
            .get_or_init(|| {
                let mut rng = Lcg64::new(PROFILE_SEED);
                let mut prof = CurvatureProfile {
                    h_min: f64::INFINITY,
                    h_max: f64::NEG_INFINITY,
                    a_min: f64::INFINITY,
                    a_max: f64::NEG_INFINITY,
                };
                for _ in 0..PROFILE_SAMPLES {
                    let p = self.domain().sample(&mut rng, SAMPLE_MARGIN);
                    let c = self.shape_operator(&p)?;
                    prof.h_min = prof.h_min.min(c.mean_h);
                    prof.h_max = prof.h_max.max(c.mean_h);
                    prof.a_min = prof.a_min.min(c.norm_a_sq);
                    prof.a_max = prof.a_max.max(c.norm_a_sq);
                }
                Ok(prof)
            })
            .clone()
    }

    /// Gauss-Newton projection of an ambient point onto the chart image,
    /// started from `guess`. Returns the foot point and the residual distance.
    pub fn project(&self, point: &AmbientVector, guess: &ChartPoint) -> Result<(ChartPoint, f64)> {
        let mut u = guess.clone();
        for _ in 0..50 {
            let jet = self.immersion_jet(&u)?;
            let resid = point - &jet.value;
            let step = jet
                .pull_back(&resid)
                .ok_or(GeometryError::RankDeficient(0.0))?;
            for (x, dx) in u.0.iter_mut().zip(&step) {
                *x += dx;
            }
            self.domain().wrap(&mut u);
            if step.iter().map(|s| s * s).sum::<f64>().sqrt() < 1e-15 {
                break;
            }
        }
        let dist = (point - self.position(&u)?).norm();
        Ok((u, dist))
    }
}

fn jet_from_taylor(vals: &[Taylor2], dim: usize) -> SurfaceJet {
    let m = vals.len();
    let value = AmbientVector::from_iterator(m, vals.iter().map(Taylor2::value));
    let d1 = (0..dim)
        .map(|i| AmbientVector::from_iterator(m, vals.iter().map(|t| t.d1(i))))
        .collect();
    let d2 = (0..dim)
        .map(|i| {
            (0..dim)
                .map(|j| AmbientVector::from_iterator(m, vals.iter().map(|t| t.d2(i, j))))
                .collect()
        })
        .collect();
    SurfaceJet { value, d1, d2 }
}

/// Unit vector orthogonal to `x` and every chart derivative, signed so that
/// `det[x, d_1 phi, ..., d_n phi, nu] > 0`.
fn complement_normal(jet: &SurfaceJet) -> AmbientVector {
    let m = jet.value.len();
    let mut basis: Vec<AmbientVector> = Vec::with_capacity(m);
    for v in std::iter::once(&jet.value).chain(&jet.d1) {
        let mut w = v.clone();
        for b in &basis {
            let c = w.dot(b);
            w.axpy(-c, b, 1.0);
        }
        let norm = w.norm();
        basis.push(w / norm);
    }
    let mut best = AmbientVector::zeros(m);
    for k in 0..m {
        let mut w = AmbientVector::zeros(m);
        w[k] = 1.0;
        for b in &basis {
            let c = w.dot(b);
            w.axpy(-c, b, 1.0);
        }
        if w.norm() > best.norm() {
            best = w;
        }
    }
    let mut normal = best.normalize();
    let mut frame = DMatrix::zeros(m, m);
    frame.set_column(0, &jet.value);
    for (i, d) in jet.d1.iter().enumerate() {
        frame.set_column(i + 1, d);
    }
    frame.set_column(m - 1, &normal);
    if frame.determinant() < 0.0 {
        normal = -normal;
    }
    normal
}

/// `d_i nu = -h_ij g^{jk} d_k phi` with `h_ij = <phi_ij, nu>`.
fn weingarten(jet: &SurfaceJet, normal: &AmbientVector) -> Result<Vec<AmbientVector>> {
    let n = jet.dim();
    let g = jet.metric();
    let g_inv = g
        .clone()
        .try_inverse()
        .ok_or(GeometryError::RankDeficient(g.determinant()))?;
    let h = DMatrix::from_fn(n, n, |i, j| jet.d2[i][j].dot(normal));
    let coeffs = &h * &g_inv;
    Ok((0..n)
        .map(|i| {
            let c: Vec<f64> = (0..n).map(|k| -coeffs[(i, k)]).collect();
            jet.push_forward(&c)
        })
        .collect())
}

fn shape_from_jets(jet: &SurfaceJet, nj: &NormalJet) -> Result<CurvatureData> {
    let n = jet.dim();
    let m = jet.value.len();
    let g = jet.metric();
    let chol = g
        .clone()
        .cholesky()
        .ok_or(GeometryError::RankDeficient(g.determinant()))?;
    // E = J L^{-T} is the Gram-Schmidt frame of the chart derivatives.
    let l_inv_t = chol
        .l()
        .try_inverse()
        .ok_or(GeometryError::RankDeficient(g.determinant()))?
        .transpose();
    let mut jac = DMatrix::zeros(m, n);
    let mut dnu = DMatrix::zeros(m, n);
    for i in 0..n {
        jac.set_column(i, &jet.d1[i]);
        dnu.set_column(i, &nj.d1[i]);
    }
    let frame_mat = &jac * &l_inv_t;
    let dnu_frame = &dnu * &l_inv_t;
    let shape = -(frame_mat.transpose() * dnu_frame);
    let defect = (&shape - shape.transpose()).amax();
    if defect > 10.0 * TAU_FD {
        return Err(GeometryError::Asymmetric(defect));
    }
    let sym = 0.5 * (&shape + shape.transpose());
    let frame = (0..n).map(|a| frame_mat.column(a).into_owned()).collect();
    Ok(CurvatureData::from_shape(sym, frame))
}
