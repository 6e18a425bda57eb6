//! Integral curves of `v_top` on a surface where `ell_v = lambda f_v`, their
//! arc-length reparametrizations (geodesics that are Euclidean circles), the
//! closed forms of those circles and of the normal along them, propagation of
//! principal curvatures along the circles, and the partition of curvatures at
//! a point of `N = {ell_v = 0}` that decides whether constant mean curvature
//! is compatible with the propagated curvatures.

use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;

use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::{AmbientVector, ChartPoint, GeometryError, Hypersurface};
use crate::lemma::{self, LemmaError, PartialFractionVerdict, RationalLinear};
use crate::support::{support_sample, TAU_PROPORTIONAL};

/// `|v_top|` below which a point counts as critical for `ell_v`.
pub const TAU_CRIT: f64 = 1e-8;
pub const TAU_ODE: f64 = 1e-7;
pub const DEFAULT_DT: f64 = 1e-3;
/// Curvature classification tolerance for analytic data.
pub const TAU_CLASS: f64 = 1e-7;
/// Curvature classification tolerance for integrated data.
pub const TAU_CLASS_INTEGRATED: f64 = 1e-4;
/// `|a|` above which an anchor is off `N`.
pub const TAU_ANCHOR: f64 = 1e-9;
pub const TAU_POLE: f64 = 1e-12;
/// Half-width of the window skipped around poles of the propagation formula.
pub const POLE_WINDOW: f64 = 1e-3;

#[derive(Debug, Error, Clone)]
pub enum GeodesicError {
    #[error("|v_top| = {speed:e} below the critical threshold at t = {t}")]
    HitCriticalPoint {
        t: f64,
        speed: f64,
        partial: Box<CurvePath>,
    },
    #[error("flow left the chart domain at t = {t}")]
    ChartExit {
        t: f64,
        state: ChartPoint,
        partial: Box<CurvePath>,
    },
    #[error("zero speed at sample {0}")]
    ZeroSpeed(usize),
    #[error("anchor is critical: b = {0:e}")]
    CriticalAnchor(f64),
    #[error("anchor is off the zero level set: ell_v = {0:e}")]
    AnchorNotOnN(f64),
    #[error("s = {s} outside (-{limit}, {limit})")]
    OutOfRange { s: f64, limit: f64 },
    #[error("propagation denominator {denominator:e} vanishes at s = {s}")]
    PoleAtS { s: f64, denominator: f64 },
    #[error("ell_v - lambda f_v = {0:e} at the anchor")]
    NotProportional(f64),
    #[error("lambda must be finite and nonzero, got {0}")]
    BadLambda(f64),
    #[error("bad step or span: {0}")]
    BadStep(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

pub type Result<T, E = GeodesicError> = std::result::Result<T, E>;

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda != 0.0 {
        Ok(())
    } else {
        Err(GeodesicError::BadLambda(lambda))
    }
}

/// `w = sqrt(1 + lambda^-2)`.
pub fn circle_frequency(lambda: f64) -> f64 {
    (1.0 + 1.0 / (lambda * lambda)).sqrt()
}

/// Half-length `pi / (2 w)` of the arc on which the closed forms hold.
pub fn half_range(lambda: f64) -> f64 {
    FRAC_PI_2 / circle_frequency(lambda)
}

/// Flow time for an anchor on `N` to reach arc length `s`; along such a flow
/// `ds/dt = cos(w s)`.
pub fn flow_time_to_reach(lambda: f64, s: f64) -> f64 {
    let w = circle_frequency(lambda);
    (w * s).sin().atanh() / w
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Parametrization {
    FlowTime,
    ArcLength,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathSample {
    /// Flow time or arc length, per the path's parametrization.
    pub param: f64,
    /// Signed arc length from the initial point.
    pub arclength: f64,
    pub chart: ChartPoint,
    pub point: AmbientVector,
    pub normal: AmbientVector,
    pub velocity: AmbientVector,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurvePath {
    pub parametrization: Parametrization,
    /// Ordered by increasing parameter.
    pub samples: Vec<PathSample>,
}

impl CurvePath {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Largest `||point| - 1|` over the path.
    pub fn sphere_defect(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| (s.point.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Sample whose parameter is closest to `param`.
    pub fn nearest(&self, param: f64) -> Option<&PathSample> {
        self.samples
            .iter()
            .min_by(|a, b| (a.param - param).abs().total_cmp(&(b.param - param).abs()))
    }
}

struct FlowState {
    u: Vec<f64>,
    s: f64,
}

/// Chart velocity of `v_top` and its ambient length.
fn flow_field(surface: &Hypersurface, u: &[f64], v: &AmbientVector) -> Result<(Vec<f64>, f64)> {
    let jet = surface.immersion_jet(&ChartPoint::new(u.to_vec()))?;
    let c = jet
        .pull_back(v)
        .ok_or(GeometryError::RankDeficient(jet.metric().determinant()))?;
    let speed = jet.push_forward(&c).norm();
    Ok((c, speed))
}

fn make_sample(
    surface: &Hypersurface,
    t: f64,
    state: &FlowState,
    v: &AmbientVector,
) -> Result<(PathSample, f64)> {
    let chart = ChartPoint::new(state.u.clone());
    let s = support_sample(surface, &chart, v)?;
    let speed = s.v_top.norm();
    Ok((
        PathSample {
            param: t,
            arclength: state.s,
            chart,
            point: s.x,
            normal: s.nu,
            velocity: s.v_top,
        },
        speed,
    ))
}

fn rk4_step(surface: &Hypersurface, state: &FlowState, v: &AmbientVector, h: f64) -> Result<FlowState> {
    let shift = |k: &[f64], a: f64| -> Vec<f64> {
        state.u.iter().zip(k).map(|(u, k)| u + a * k).collect()
    };
    let (k1, s1) = flow_field(surface, &state.u, v)?;
    let (k2, s2) = flow_field(surface, &shift(&k1, 0.5 * h), v)?;
    let (k3, s3) = flow_field(surface, &shift(&k2, 0.5 * h), v)?;
    let (k4, s4) = flow_field(surface, &shift(&k3, h), v)?;
    let u = (0..state.u.len())
        .map(|i| state.u[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    Ok(FlowState {
        u,
        s: state.s + h / 6.0 * (s1 + 2.0 * s2 + 2.0 * s3 + s4),
    })
}

/// One-directional integration from `t = 0` to `t_end`.
fn integrate_half(
    surface: &Hypersurface,
    x0: &ChartPoint,
    v: &AmbientVector,
    t_end: f64,
    dt: f64,
) -> Result<Vec<PathSample>> {
    let steps = (t_end.abs() / dt).round() as usize;
    let h = if steps == 0 { 0.0 } else { t_end / steps as f64 };
    let mut state = FlowState {
        u: x0.params().to_vec(),
        s: 0.0,
    };
    let mut out = Vec::with_capacity(steps + 1);
    let (first, speed) = make_sample(surface, 0.0, &state, v)?;
    out.push(first);
    if speed < TAU_CRIT {
        return Err(critical(0.0, speed, out));
    }
    for i in 1..=steps {
        let t = h * i as f64;
        let mut next = match rk4_step(surface, &state, v, h) {
            Ok(n) => n,
            Err(GeodesicError::Geometry(GeometryError::OutOfDomain(_))) => {
                return Err(chart_exit(t, ChartPoint::new(state.u), out));
            }
            Err(e) => return Err(e),
        };
        let mut p = ChartPoint::new(next.u);
        if !surface.domain().contains(&p) {
            return Err(chart_exit(t, p, out));
        }
        surface.domain().wrap(&mut p);
        next.u = p.0;
        let (sample, speed) = make_sample(surface, t, &next, v)?;
        out.push(sample);
        if speed < TAU_CRIT {
            return Err(critical(t, speed, out));
        }
        state = next;
    }
    Ok(out)
}

fn flow_path(samples: Vec<PathSample>) -> Box<CurvePath> {
    Box::new(CurvePath {
        parametrization: Parametrization::FlowTime,
        samples,
    })
}

fn critical(t: f64, speed: f64, samples: Vec<PathSample>) -> GeodesicError {
    GeodesicError::HitCriticalPoint {
        t,
        speed,
        partial: flow_path(samples),
    }
}

fn chart_exit(t: f64, state: ChartPoint, samples: Vec<PathSample>) -> GeodesicError {
    GeodesicError::ChartExit {
        t,
        state,
        partial: flow_path(samples),
    }
}

/// Fixed-step RK4 integration of `alpha' = v_top(alpha)` in chart
/// coordinates over `t_span = (t0, t1)` with `t0 <= 0 <= t1`, together with
/// the arc length `s' = |v_top|`.
pub fn integrate_vtop_flow(
    surface: &Hypersurface,
    x0: &ChartPoint,
    v: &AmbientVector,
    t_span: (f64, f64),
    dt: f64,
) -> Result<CurvePath> {
    let (t0, t1) = t_span;
    if !(dt > 0.0 && t0 <= 0.0 && t1 >= 0.0 && t0.is_finite() && t1.is_finite()) {
        return Err(GeodesicError::BadStep(format!("dt = {dt}, span = ({t0}, {t1})")));
    }
    let backward = integrate_half(surface, x0, v, t0, dt);
    let forward = integrate_half(surface, x0, v, t1, dt);
    let merge = |mut back: Vec<PathSample>, fwd: Vec<PathSample>| {
        back.reverse();
        back.pop();
        back.extend(fwd);
        back
    };
    match (backward, forward) {
        (Ok(b), Ok(f)) => Ok(CurvePath {
            parametrization: Parametrization::FlowTime,
            samples: merge(b, f),
        }),
        (Err(e), Ok(f)) => Err(with_partial(e, |p| merge(p, f))),
        (Ok(b), Err(e)) => Err(with_partial(e, |p| merge(b, p))),
        (Err(e), Err(_)) => Err(e),
    }
}

fn with_partial(err: GeodesicError, join: impl FnOnce(Vec<PathSample>) -> Vec<PathSample>) -> GeodesicError {
    match err {
        GeodesicError::HitCriticalPoint { t, speed, partial } => GeodesicError::HitCriticalPoint {
            t,
            speed,
            partial: flow_path(join(partial.samples)),
        },
        GeodesicError::ChartExit { t, state, partial } => GeodesicError::ChartExit {
            t,
            state,
            partial: flow_path(join(partial.samples)),
        },
        other => other,
    }
}

/// Richardson-style comparison: largest ambient gap between the runs with
/// step `dt` and `dt / 2` at their common times.
pub fn richardson_defect(
    surface: &Hypersurface,
    x0: &ChartPoint,
    v: &AmbientVector,
    t_span: (f64, f64),
    dt: f64,
) -> Result<f64> {
    let coarse = integrate_vtop_flow(surface, x0, v, t_span, dt)?;
    let fine = integrate_vtop_flow(surface, x0, v, t_span, 0.5 * dt)?;
    Ok(coarse
        .samples
        .iter()
        .map(|c| {
            let f = fine.nearest(c.param).expect("fine path is non-empty");
            (&c.point - &f.point).norm()
        })
        .fold(0.0, f64::max))
}

/// Relabels a path by arc length and normalizes its velocities.
pub fn reparametrize_arclength(path: &CurvePath) -> Result<CurvePath> {
    let samples = path
        .samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let speed = s.velocity.norm();
            if !(speed > 0.0) {
                return Err(GeodesicError::ZeroSpeed(i));
            }
            Ok(PathSample {
                param: s.arclength,
                velocity: &s.velocity / speed,
                ..s.clone()
            })
        })
        .collect::<Result<_>>()?;
    Ok(CurvePath {
        parametrization: Parametrization::ArcLength,
        samples,
    })
}

/// Second derivative on a non-uniform grid.
fn second_difference(
    h_minus: f64,
    h_plus: f64,
    prev: &AmbientVector,
    mid: &AmbientVector,
    next: &AmbientVector,
) -> AmbientVector {
    2.0 * ((next - mid) / h_plus - (mid - prev) / h_minus) / (h_plus + h_minus)
}

fn first_difference(h_minus: f64, h_plus: f64, prev: &AmbientVector, mid: &AmbientVector, next: &AmbientVector) -> AmbientVector {
    // second-order accurate on non-uniform grids
    let a = -h_plus / (h_minus * (h_minus + h_plus));
    let b = (h_plus - h_minus) / (h_minus * h_plus);
    let c = h_minus / (h_plus * (h_minus + h_plus));
    a * prev + b * mid + c * next
}

fn interior<'a>(path: &'a CurvePath) -> impl Iterator<Item = (f64, f64, [&'a PathSample; 3])> + 'a {
    path.samples.windows(3).map(|w| {
        let hm = w[1].param - w[0].param;
        let hp = w[2].param - w[1].param;
        (hm, hp, [&w[0], &w[1], &w[2]])
    })
}

/// Largest tangential component of `beta''` at interior samples of an
/// arc-length path; zero for a geodesic.
pub fn tangential_acceleration(surface: &Hypersurface, path: &CurvePath) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (hm, hp, [a, b, c]) in interior(path) {
        let acc = second_difference(hm, hp, &a.point, &b.point, &c.point);
        let jet = surface.immersion_jet(&b.chart)?;
        let coeffs = jet
            .pull_back(&acc)
            .ok_or(GeometryError::RankDeficient(0.0))?;
        worst = worst.max(jet.push_forward(&coeffs).norm());
    }
    Ok(worst)
}

/// Largest `|(beta')'' + w^2 beta'|` at interior samples.
pub fn circle_law_residual(path: &CurvePath, lambda: f64) -> f64 {
    let w2 = 1.0 + 1.0 / (lambda * lambda);
    interior(path)
        .map(|(hm, hp, [a, b, c])| {
            (second_difference(hm, hp, &a.velocity, &b.velocity, &c.velocity) + w2 * &b.velocity).norm()
        })
        .fold(0.0, f64::max)
}

/// Largest `|beta'' + beta + nu(beta) / lambda|` at interior samples, with
/// `beta''` differenced from the unit velocities.
pub fn acceleration_residual(path: &CurvePath, lambda: f64) -> f64 {
    interior(path)
        .map(|(hm, hp, [a, b, c])| {
            let acc = first_difference(hm, hp, &a.velocity, &b.velocity, &c.velocity);
            (acc + &b.point + &b.normal / lambda).norm()
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GeodesicCircleParams {
    pub lambda: f64,
    pub w: f64,
    pub a: f64,
    pub b: f64,
    pub s1: f64,
    /// Unit vector `v`.
    pub v: Vec<f64>,
    pub anchor_x: Vec<f64>,
    pub anchor_nu: Vec<f64>,
    pub anchor_vtop_dir: Vec<f64>,
}

impl GeodesicCircleParams {
    pub fn half_range(&self) -> f64 {
        FRAC_PI_2 / self.w
    }

    /// `w^-1 sin(w s - w s1)`.
    pub fn ell_along(&self, s: f64) -> f64 {
        (self.w * (s - self.s1)).sin() / self.w
    }
}

fn to_vec(v: &AmbientVector) -> Vec<f64> {
    v.iter().copied().collect()
}

fn from_vec(v: &[f64]) -> AmbientVector {
    AmbientVector::from_column_slice(v)
}

pub fn circle_params(
    surface: &Hypersurface,
    x: &ChartPoint,
    v: &AmbientVector,
    lambda: f64,
) -> Result<GeodesicCircleParams> {
    check_lambda(lambda)?;
    let unit = v.normalize();
    let s = support_sample(surface, x, &unit)?;
    let defect = s.ell - lambda * s.f;
    if defect.abs() >= TAU_PROPORTIONAL {
        return Err(GeodesicError::NotProportional(defect));
    }
    let w = circle_frequency(lambda);
    let a = s.ell;
    let b2 = 1.0 / (w * w) - a * a;
    let b = b2.max(0.0).sqrt();
    if b <= TAU_CRIT {
        return Err(GeodesicError::CriticalAnchor(b));
    }
    let s1 = -(w * a).clamp(-1.0, 1.0).asin() / w;
    Ok(GeodesicCircleParams {
        lambda,
        w,
        a,
        b,
        s1,
        v: to_vec(&unit),
        anchor_x: to_vec(&s.x),
        anchor_nu: to_vec(&s.nu),
        anchor_vtop_dir: to_vec(&s.v_top.normalize()),
    })
}

/// Point on the circle through an arbitrary anchor:
/// `x + w^-1 sin(ws) beta'(0) + w^-2 (1 - cos(ws)) beta''(0)` with
/// `beta''(0) = -x - nu / lambda`.
pub fn circle_point(params: &GeodesicCircleParams, s: f64) -> AmbientVector {
    let w = params.w;
    let x = from_vec(&params.anchor_x);
    let acc = -(&x + from_vec(&params.anchor_nu) / params.lambda);
    x + (w * s).sin() / w * from_vec(&params.anchor_vtop_dir) + (1.0 - (w * s).cos()) / (w * w) * acc
}

/// Closed forms of `beta_x(s)` and `nu(beta_x(s))` for an anchor on `N`.
pub fn closed_form_beta(params: &GeodesicCircleParams, s: f64) -> Result<(AmbientVector, AmbientVector)> {
    if params.a.abs() >= TAU_ANCHOR {
        return Err(GeodesicError::AnchorNotOnN(params.a));
    }
    let limit = params.half_range();
    if s.abs() >= limit {
        return Err(GeodesicError::OutOfRange { s, limit });
    }
    let (w, lambda) = (params.w, params.lambda);
    let x = from_vec(&params.anchor_x);
    let v = from_vec(&params.v);
    let offset = &x + from_vec(&params.anchor_nu) / lambda;
    let (sn, cs) = (w * s).sin_cos();
    let beta = sn / w * &v + (cs - 1.0) / (w * w) * &offset + &x;
    let nu = lambda * w * sn * &v + lambda * cs * &offset - lambda * &beta;
    Ok((beta, nu))
}

/// Distance from an ambient point to the surface, by projection from `guess`.
pub fn surface_distance(surface: &Hypersurface, point: &AmbientVector, guess: &ChartPoint) -> Result<f64> {
    Ok(surface.project(point, guess)?.1)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ClosedFormDeviation {
    pub point: f64,
    pub normal: f64,
    pub samples: usize,
}

/// Largest gap between an arc-length path and the closed forms over
/// `|s| < pi / (2w) - margin`.
pub fn closed_form_deviation(
    path: &CurvePath,
    params: &GeodesicCircleParams,
    margin: f64,
) -> Result<ClosedFormDeviation> {
    let limit = params.half_range() - margin;
    let mut dev = ClosedFormDeviation {
        point: 0.0,
        normal: 0.0,
        samples: 0,
    };
    for s in path.samples.iter().filter(|s| s.param.abs() < limit) {
        let (beta, nu) = closed_form_beta(params, s.param)?;
        dev.point = dev.point.max((&s.point - beta).norm());
        dev.normal = dev.normal.max((&s.normal - nu).norm());
        dev.samples += 1;
    }
    Ok(dev)
}

/// Largest `|<beta(s), v> - w^-1 sin(ws - ws1)|` along an arc-length path.
pub fn ell_sine_residual(path: &CurvePath, params: &GeodesicCircleParams) -> f64 {
    let v = from_vec(&params.v);
    path.samples
        .iter()
        .map(|s| (s.point.dot(&v) - params.ell_along(s.param)).abs())
        .fold(0.0, f64::max)
}

fn propagation_denominator(kappa: f64, lambda: f64, s: f64) -> f64 {
    let w = circle_frequency(lambda);
    lambda * (lambda - kappa) * (w * s).cos() + 1.0 + lambda * kappa
}

/// Tangent transport factor `mu_i` of a principal direction along the circle.
pub fn transport_factor(kappa: f64, lambda: f64, s: f64) -> f64 {
    propagation_denominator(kappa, lambda, s) / (1.0 + lambda * lambda)
}

/// Principal curvature at `beta_x(s)` propagated from the value `kappa` at
/// the anchor `x` on `N`.
pub fn propagate_kappa(kappa: f64, lambda: f64, s: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let denominator = propagation_denominator(kappa, lambda, s);
    if denominator.abs() <= TAU_POLE {
        return Err(GeodesicError::PoleAtS { s, denominator });
    }
    Ok(-1.0 / lambda + (1.0 + lambda * lambda) * (1.0 / lambda + kappa) / denominator)
}

/// Arc-length values in `(-pi/(2w), pi/(2w))` where the propagation formula
/// has a pole for anchor curvature `kappa`.
pub fn poles(kappa: f64, lambda: f64) -> Vec<f64> {
    let b = lambda * (lambda - kappa);
    let c = 1.0 + lambda * kappa;
    if b == 0.0 {
        return Vec::new();
    }
    let x = -c / b;
    // cos(ws) = x with ws in (-pi/2, pi/2) forces 0 < x <= 1
    if !(x > 0.0 && x <= 1.0) {
        return Vec::new();
    }
    let s = x.acos() / circle_frequency(lambda);
    if s == 0.0 {
        vec![0.0]
    } else {
        vec![-s, s]
    }
}

/// Splits the principal curvatures at a point of `N` into the one belonging
/// to the direction of `v` (closest to `-1/lambda`) and the rest.
pub fn split_v_curvature(kappas: &[f64], lambda: f64) -> (f64, Vec<f64>) {
    let target = -1.0 / lambda;
    let idx = kappas
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - target).abs().total_cmp(&(b.1 - target).abs()))
        .map(|(i, _)| i)
        .expect("at least one curvature");
    let mut rest = kappas.to_vec();
    let k = rest.remove(idx);
    (k, rest)
}

/// `|-1/lambda + sum_i lambda_i(beta(s)) - n H|`.
pub fn cmc_closure_residual(rest: &[f64], lambda: f64, h: f64, s: f64) -> Result<f64> {
    let n = rest.len() as f64 + 1.0;
    let mut total = -1.0 / lambda;
    for &k in rest {
        total += propagate_kappa(k, lambda, s)?;
    }
    Ok((total - n * h).abs())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FrameDefects {
    /// `|v_top - v|`
    pub gradient: f64,
    /// `|A(v) + v / lambda|`
    pub shape: f64,
}

/// On `N`, `grad ell_v = v` and `A(v) = -v / lambda`.
pub fn level_set_frame(surface: &Hypersurface, p: &ChartPoint, v: &AmbientVector, lambda: f64) -> Result<FrameDefects> {
    check_lambda(lambda)?;
    let s = support_sample(surface, p, v)?;
    let curv = surface.shape_operator(p)?;
    Ok(FrameDefects {
        gradient: (&s.v_top - v).norm(),
        shape: (curv.apply(v) + v / lambda).norm(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TransportCheck {
    pub kappa: f64,
    pub mu: f64,
    /// `|gamma_s'(0) - mu gamma'(0)| / |gamma'(0)|`
    pub residual: f64,
}

/// Checks `gamma_s'(0) = mu_i gamma'(0)` where `gamma` is a chart curve in
/// `N` through the anchor whose tangent is a principal direction, and
/// `gamma_s(t) = beta_{gamma(t)}(s)` is built from the closed form.
pub fn transport_check(
    surface: &Hypersurface,
    gamma: &dyn Fn(f64) -> ChartPoint,
    v: &AmbientVector,
    lambda: f64,
    s: f64,
) -> Result<TransportCheck> {
    let h = 1e-5;
    let at = |t: f64| -> Result<(AmbientVector, AmbientVector)> {
        let p = gamma(t);
        let x = surface.position(&p)?;
        let params = circle_params(surface, &p, v, lambda)?;
        Ok((x, closed_form_beta(&params, s)?.0))
    };
    let (xp, bp) = at(h)?;
    let (xm, bm) = at(-h)?;
    let tangent = (xp - xm) / (2.0 * h);
    let moved = (bp - bm) / (2.0 * h);
    let p0 = gamma(0.0);
    let curv = surface.shape_operator(&p0)?;
    let unit = tangent.normalize();
    let kappa = curv.apply(&unit).dot(&unit);
    let mu = transport_factor(kappa, lambda, s);
    Ok(TransportCheck {
        kappa,
        mu,
        residual: (moved - mu * &tangent).norm() / tangent.norm(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvaturePartition {
    pub lambda: f64,
    pub mean_h: f64,
    pub i1: Vec<usize>,
    pub i2: Vec<usize>,
    /// Distinct values with their indices, sorted by value.
    pub i3_groups: Vec<(f64, Vec<usize>)>,
    pub n2: usize,
    pub d_x: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ObstructionCertificate {
    /// `I_3` is empty and the identity reads `0 = d` with `d != 0`.
    EmptySum { d: BigRational },
    /// The rational identity `sum m_i a_i / (b_i X + c_i) = d` fails.
    PartialFraction {
        factors: Vec<RationalLinear>,
        a: Vec<BigRational>,
        d: BigRational,
        verdict: PartialFractionVerdict,
    },
    /// Rationalized data violate the lemma's hypotheses.
    Degenerate(String),
}

#[derive(Clone, Debug, PartialEq)]
pub enum ObstructionVerdict {
    Consistent,
    Contradiction(ObstructionCertificate),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObstructionReport {
    pub partition: CurvaturePartition,
    /// Tolerance-based decision: `I_3` empty and `|d| <= tau`.
    pub consistent: bool,
    /// Exact decision on rationalized data; advisory.
    pub verdict: ObstructionVerdict,
}

/// Classifies the `n - 1` curvatures at a point of `N` other than `-1/lambda`
/// and decides whether they are compatible with mean curvature `h`.
pub fn partition_and_obstruction(curvatures: &[f64], lambda: f64, h: f64, tau_class: f64) -> Result<ObstructionReport> {
    check_lambda(lambda)?;
    let n = curvatures.len() + 1;
    let inv = 1.0 / lambda;
    let mut i1 = Vec::new();
    let mut i2 = Vec::new();
    let mut rest: Vec<(usize, f64)> = Vec::new();
    for (i, &k) in curvatures.iter().enumerate() {
        if (k + inv).abs() <= tau_class {
            i1.push(i);
        } else if (k - lambda).abs() <= tau_class {
            i2.push(i);
        } else {
            rest.push((i, k));
        }
    }
    rest.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut groups: Vec<(Vec<f64>, Vec<usize>)> = Vec::new();
    for (i, k) in rest {
        match groups.last_mut() {
            Some((vals, idx)) if (k - vals[vals.len() - 1]).abs() <= tau_class => {
                vals.push(k);
                idx.push(i);
            }
            _ => groups.push((vec![k], vec![i])),
        }
    }
    let i3_groups: Vec<(f64, Vec<usize>)> = groups
        .into_iter()
        .map(|(vals, idx)| (vals.iter().sum::<f64>() / vals.len() as f64, idx))
        .collect();
    let n2 = i2.len();
    let l2 = 1.0 + lambda * lambda;
    let d_x = (n as f64 * (h + inv) - n2 as f64 * (lambda + inv)) / l2;
    let consistent = i3_groups.is_empty() && d_x.abs() <= tau_class;
    let verdict = exact_verdict(&i3_groups, lambda, d_x);
    Ok(ObstructionReport {
        partition: CurvaturePartition {
            lambda,
            mean_h: h,
            i1,
            i2,
            i3_groups,
            n2,
            d_x,
        },
        consistent,
        verdict,
    })
}

fn exact_verdict(groups: &[(f64, Vec<usize>)], lambda: f64, d_x: f64) -> ObstructionVerdict {
    let degenerate = |e: LemmaError| ObstructionVerdict::Contradiction(ObstructionCertificate::Degenerate(e.to_string()));
    let d = match lemma::rationalize(d_x) {
        Ok(d) => d,
        Err(e) => return degenerate(e),
    };
    if groups.is_empty() {
        return if d.is_zero() {
            ObstructionVerdict::Consistent
        } else {
            ObstructionVerdict::Contradiction(ObstructionCertificate::EmptySum { d })
        };
    }
    let mut factors = Vec::with_capacity(groups.len());
    let mut a = Vec::with_capacity(groups.len());
    for (k, idx) in groups {
        let coeffs = [
            idx.len() as f64 * (1.0 / lambda + k),
            lambda * (lambda - k),
            1.0 + lambda * k,
        ]
        .map(lemma::rationalize);
        let [ai, bi, ci] = match coeffs {
            [Ok(a), Ok(b), Ok(c)] => [a, b, c],
            _ => return degenerate(LemmaError::NonFinite(*k)),
        };
        factors.push(RationalLinear::new(bi, ci));
        a.push(ai);
    }
    match lemma::partial_fraction_verdict(&factors, &a, &d) {
        Ok(PartialFractionVerdict::IdentityHolds) => ObstructionVerdict::Consistent,
        Ok(verdict) => ObstructionVerdict::Contradiction(ObstructionCertificate::PartialFraction {
            factors,
            a,
            d,
            verdict,
        }),
        Err(e) => degenerate(e),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathRow {
    pub s: f64,
    pub point: Vec<f64>,
    pub ell: f64,
    /// Measured principal curvatures other than `-1/lambda`, ascending.
    pub kappas: Vec<f64>,
    /// Propagated predictions, ascending; empty when not requested.
    pub predicted: Vec<f64>,
}

/// Per-sample table along an arc-length path, every `stride`-th sample.
/// Samples within `POLE_WINDOW` of a propagation pole get no prediction.
pub fn path_table(
    surface: &Hypersurface,
    path: &CurvePath,
    v: &AmbientVector,
    lambda: f64,
    anchor_rest: Option<&[f64]>,
    stride: usize,
) -> Result<Vec<PathRow>> {
    let unit = v.normalize();
    let pole_list: Vec<f64> = anchor_rest
        .unwrap_or_default()
        .iter()
        .flat_map(|&k| poles(k, lambda))
        .collect();
    let mut rows = Vec::new();
    for sample in path.samples.iter().step_by(stride.max(1)) {
        let curv = surface.shape_operator(&sample.chart)?;
        let (_, kappas) = split_v_curvature(&curv.kappas, lambda);
        let near_pole = pole_list.iter().any(|p| (p - sample.param).abs() < POLE_WINDOW);
        let predicted = match anchor_rest {
            Some(rest) if !near_pole => {
                let mut out = rest
                    .iter()
                    .map(|&k| propagate_kappa(k, lambda, sample.param))
                    .collect::<Result<Vec<_>>>()?;
                out.sort_by(f64::total_cmp);
                out
            }
            _ => Vec::new(),
        };
        rows.push(PathRow {
            s: sample.param,
            point: to_vec(&sample.point),
            ell: sample.point.dot(&unit),
            kappas,
            predicted,
        });
    }
    Ok(rows)
}

/// Largest `|measured - predicted|` over rows with predictions.
pub fn prediction_deviation(rows: &[PathRow]) -> f64 {
    rows.iter()
        .filter(|r| r.predicted.len() == r.kappas.len())
        .flat_map(|r| r.kappas.iter().zip(&r.predicted).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max)
}

/// Whitespace-separated columns with a `#` header, for gnuplot.
pub fn rows_to_tsv(rows: &[PathRow]) -> String {
    let mut out = String::new();
    let Some(first) = rows.first() else {
        return out;
    };
    let mut header = vec!["s".to_string()];
    header.extend((0..first.point.len()).map(|i| format!("x{i}")));
    header.push("ell_v".into());
    header.extend((1..=first.kappas.len()).map(|i| format!("kappa{i}")));
    header.extend((1..=first.kappas.len()).map(|i| format!("pred{i}")));
    let _ = writeln!(out, "# {}", header.join("\t"));
    for r in rows {
        let mut cols = vec![format!("{:.12e}", r.s)];
        cols.extend(r.point.iter().map(|x| format!("{x:.12e}")));
        cols.push(format!("{:.12e}", r.ell));
        cols.extend(r.kappas.iter().map(|x| format!("{x:.12e}")));
        if r.predicted.len() == r.kappas.len() {
            cols.extend(r.predicted.iter().map(|x| format!("{x:.12e}")));
        } else {
            cols.extend(r.kappas.iter().map(|_| "nan".to_string()));
        }
        let _ = writeln!(out, "{}", cols.join("\t"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{
        make_clifford, make_counterexample, make_umbilical, BaseSurfaceSpec, CliffordSpec, Counterexample,
        CounterexampleSpec, UmbilicalSpec,
    };
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, SQRT_2};

    fn e(m: usize, i: usize) -> AmbientVector {
        let mut v = AmbientVector::zeros(m);
        v[i] = 1.0;
        v
    }

    fn torus() -> Hypersurface {
        make_clifford(&CliffordSpec::new(2, 1, 0.6)).unwrap()
    }

    fn counterexample() -> Counterexample {
        make_counterexample(&CounterexampleSpec {
            base: BaseSurfaceSpec::standard(2, 0.02, 2),
        })
        .unwrap()
    }

    fn span(lambda: f64) -> (f64, f64) {
        let t = flow_time_to_reach(lambda, half_range(lambda) - 0.02);
        (-t, t)
    }

    #[test]
    fn clifford_flow_stays_on_theta_circle() {
        let m = torus();
        let x0 = ChartPoint::new(vec![FRAC_PI_2, 0.0]);
        assert_abs_diff_eq!(m.position(&x0).unwrap()[1], 0.6, epsilon = 1e-15);
        let path = integrate_vtop_flow(&m, &x0, &e(4, 0), (-1.0, 1.0), DEFAULT_DT).unwrap();
        assert_eq!(path.len(), 2001);
        for s in &path.samples {
            assert!(s.chart.params()[1].abs() < 1e-14);
            assert!((s.point.norm() - 1.0).abs() < TAU_ODE);
        }
        let arc = reparametrize_arclength(&path).unwrap();
        for s in &arc.samples {
            // arc length along the radius-0.6 circle
            assert_abs_diff_eq!(s.param, 0.6 * (FRAC_PI_2 - s.chart.params()[0]), epsilon = 1e-6);
            assert_abs_diff_eq!(s.velocity.norm(), 1.0, epsilon = 1e-12);
        }
        let again = reparametrize_arclength(&arc).unwrap();
        for (a, b) in arc.samples.iter().zip(&again.samples) {
            assert!((a.param - b.param).abs() < 1e-10);
            assert!((&a.velocity - &b.velocity).norm() < 1e-10);
        }
    }

    #[test]
    fn flow_from_critical_point() {
        let m = torus();
        let x0 = ChartPoint::new(vec![0.4, 1.0]);
        let nu = m.normal_at(&x0).unwrap();
        match integrate_vtop_flow(&m, &x0, &nu, (-1.0, 1.0), DEFAULT_DT) {
            Err(GeodesicError::HitCriticalPoint { t, partial, .. }) => {
                assert_eq!(t, 0.0);
                assert_eq!(partial.len(), 1);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn long_flow_reports_critical_point_with_partial_path() {
        let m = torus();
        let x0 = ChartPoint::new(vec![FRAC_PI_2, 0.0]);
        match integrate_vtop_flow(&m, &x0, &e(4, 0), (0.0, 30.0), 1e-2) {
            Err(GeodesicError::HitCriticalPoint { t, partial, .. }) => {
                assert!(t > 5.0 && t < 30.0);
                assert!(partial.len() > 500);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn counterexample_flow_stays_on_sphere() {
        let ce = counterexample();
        let x0 = ChartPoint::new(vec![0.2, 1.3]);
        let path = integrate_vtop_flow(&ce.surface, &x0, &ce.axis(), (-1.5, 1.5), DEFAULT_DT).unwrap();
        assert!(path.sphere_defect() < TAU_ODE);
        let defect = richardson_defect(&ce.surface, &x0, &ce.axis(), (-1.5, 1.5), DEFAULT_DT).unwrap();
        assert!(defect < 1e-9, "{defect}");
    }

    #[test]
    fn counterexample_flow_is_geodesic() {
        let ce = counterexample();
        let x0 = ChartPoint::new(vec![0.2, 1.3]);
        let path = integrate_vtop_flow(&ce.surface, &x0, &ce.axis(), span(1.0), DEFAULT_DT).unwrap();
        let arc = reparametrize_arclength(&path).unwrap();
        assert!(tangential_acceleration(&ce.surface, &arc).unwrap() < 1e-4);
        assert!(circle_law_residual(&arc, 1.0) < 1e-3 * 2.0);
        assert!(acceleration_residual(&arc, 1.0) < 1e-4);
    }

    #[test]
    fn zero_speed_is_rejected() {
        let m = torus();
        let x0 = ChartPoint::new(vec![FRAC_PI_2, 0.0]);
        let mut path = integrate_vtop_flow(&m, &x0, &e(4, 0), (0.0, 0.01), DEFAULT_DT).unwrap();
        path.samples[3].velocity *= 0.0;
        assert!(matches!(reparametrize_arclength(&path), Err(GeodesicError::ZeroSpeed(3))));
    }

    #[test]
    fn circle_params_on_torus() {
        let m = torus();
        let p = circle_params(&m, &ChartPoint::new(vec![FRAC_PI_2, 0.0]), &e(4, 0), 0.75).unwrap();
        assert_abs_diff_eq!(p.w, 5.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.a, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.b, 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(p.s1, 0.0, epsilon = 1e-15);

        // ell = 0.6 cos(theta) = w^-1 sin(0.3 w) at theta = pi/2 - 0.5
        let off = circle_params(&m, &ChartPoint::new(vec![FRAC_PI_2 - 0.5, 0.0]), &e(4, 0), 0.75).unwrap();
        assert_abs_diff_eq!(off.s1, -0.3, epsilon = 1e-12);
        assert_abs_diff_eq!((off.w * off.a).powi(2) + (off.w * off.b).powi(2), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(-off.w * off.a, (off.w * off.s1).sin(), epsilon = 1e-12);
        assert_abs_diff_eq!(off.w * off.b, (off.w * off.s1).cos(), epsilon = 1e-12);

        let crit = circle_params(&m, &ChartPoint::new(vec![0.0, 0.0]), &e(4, 0), 0.75);
        assert!(matches!(crit, Err(GeodesicError::CriticalAnchor(_))));
        let wrong = circle_params(&m, &ChartPoint::new(vec![1.0, 0.0]), &e(4, 0), 0.5);
        assert!(matches!(wrong, Err(GeodesicError::NotProportional(_))));
        assert!(matches!(
            closed_form_beta(&off, 0.1),
            Err(GeodesicError::AnchorNotOnN(_))
        ));
    }

    #[test]
    fn counterexample_frequency() {
        let ce = counterexample();
        let p = circle_params(&ce.surface, &ce.chart_point(0.0, &ChartPoint::new(vec![0.5])), &ce.axis(), 1.0).unwrap();
        assert_abs_diff_eq!(p.w, SQRT_2, epsilon = 1e-15);
    }

    #[test]
    fn closed_form_on_torus() {
        let m = torus();
        let p = circle_params(&m, &ChartPoint::new(vec![FRAC_PI_2, 0.0]), &e(4, 0), 0.75).unwrap();
        for s in [-0.9, -0.3, 0.0, 0.5, 0.9] {
            let (beta, nu) = closed_form_beta(&p, s).unwrap();
            let arg = 5.0 * s / 3.0;
            let expect = [0.6 * arg.sin(), 0.6 * arg.cos(), 0.8, 0.0];
            for (a, b) in beta.iter().zip(expect) {
                assert_abs_diff_eq!(*a, b, epsilon = 1e-14);
            }
            let chart = ChartPoint::new(vec![FRAC_PI_2 - arg, 0.0]);
            assert!((nu - m.normal_at(&chart).unwrap()).norm() < 1e-14);
            assert_abs_diff_eq!(beta[0], (p.w * s).sin() / p.w, epsilon = 1e-14);
            assert!(surface_distance(&m, &beta, &ChartPoint::new(vec![FRAC_PI_2, 0.1])).unwrap() < 1e-6);
        }
        let (beta, nu) = closed_form_beta(&p, 0.0).unwrap();
        assert_eq!(to_vec(&beta), p.anchor_x);
        assert_eq!(to_vec(&nu), p.anchor_nu);
        assert!(matches!(closed_form_beta(&p, 1.0), Err(GeodesicError::OutOfRange { .. })));
    }

    #[test]
    fn closed_form_matches_integration_on_counterexample() {
        let ce = counterexample();
        let anchor = ce.chart_point(0.0, &ChartPoint::new(vec![0.9]));
        let params = circle_params(&ce.surface, &anchor, &ce.axis(), 1.0).unwrap();
        let path = integrate_vtop_flow(&ce.surface, &anchor, &ce.axis(), span(1.0), DEFAULT_DT).unwrap();
        let arc = reparametrize_arclength(&path).unwrap();
        let dev = closed_form_deviation(&arc, &params, 0.05).unwrap();
        assert!(dev.point < 1e-4 && dev.normal < 1e-4, "{dev:?}");
        assert!(dev.samples > 1000);
        assert!(ell_sine_residual(&arc, &params) < 1e-6);
    }

    #[test]
    fn general_circle_through_off_level_anchor() {
        let m = torus();
        let anchor = ChartPoint::new(vec![1.1, 0.7]);
        let params = circle_params(&m, &anchor, &e(4, 0), 0.75).unwrap();
        let path = integrate_vtop_flow(&m, &anchor, &e(4, 0), (-1.0, 1.0), DEFAULT_DT).unwrap();
        let arc = reparametrize_arclength(&path).unwrap();
        assert!(ell_sine_residual(&arc, &params) < 1e-6);
        for s in arc.samples.iter().step_by(50) {
            assert!((circle_point(&params, s.param) - &s.point).norm() < 1e-6);
        }
    }

    #[test]
    fn propagation_examples() {
        for s in [-0.8, 0.0, 0.3, 0.7] {
            assert_abs_diff_eq!(propagate_kappa(0.75, 0.75, s).unwrap(), 0.75, epsilon = 1e-14);
            assert_abs_diff_eq!(propagate_kappa(-4.0 / 3.0, 0.75, s).unwrap(), -4.0 / 3.0, epsilon = 1e-14);
        }
        // (1 - k) cos(w s) + 1 + k vanishes at cos(w s) = 1/2
        let k = -3.0;
        let poles = poles(k, 1.0);
        assert_eq!(poles.len(), 2);
        assert!(matches!(
            propagate_kappa(k, 1.0, poles[1]),
            Err(GeodesicError::PoleAtS { .. })
        ));
    }

    #[test]
    fn propagation_matches_curvature_on_counterexample() {
        let ce = counterexample();
        let anchor = ce.chart_point(0.0, &ChartPoint::new(vec![2.1]));
        let kappas = ce.surface.shape_operator(&anchor).unwrap().kappas;
        let (vk, rest) = split_v_curvature(&kappas, 1.0);
        assert_abs_diff_eq!(vk, -1.0, epsilon = 1e-9);
        let path = integrate_vtop_flow(&ce.surface, &anchor, &ce.axis(), span(1.0), DEFAULT_DT).unwrap();
        let arc = reparametrize_arclength(&path).unwrap();
        let sample = arc.nearest(0.4).unwrap();
        assert!((sample.param - 0.4).abs() < 1e-3);
        let measured = ce.surface.shape_operator(&sample.chart).unwrap().kappas;
        let (_, measured_rest) = split_v_curvature(&measured, 1.0);
        let predicted = propagate_kappa(rest[0], 1.0, sample.param).unwrap();
        assert!((measured_rest[0] - predicted).abs() < 1e-4);
        // the curvature actually moves along the circle
        assert!((predicted - rest[0]).abs() > 0.01);

        let rows = path_table(&ce.surface, &arc, &ce.axis(), 1.0, Some(&rest), 40).unwrap();
        assert!(prediction_deviation(&rows) < 1e-4);
        let tsv = rows_to_tsv(&rows);
        assert!(tsv.starts_with("# s\tx0\tx1\tx2\tx3\tell_v\tkappa1\tpred1\n"));
        assert_eq!(tsv.lines().count(), rows.len() + 1);
    }

    #[test]
    fn tangent_transport_on_counterexample() {
        let ce = counterexample();
        let gamma = |t: f64| ce.chart_point(0.0, &ChartPoint::new(vec![0.7 + t]));
        for s in [-0.6, 0.25, 0.9] {
            let c = transport_check(&ce.surface, &gamma, &ce.axis(), 1.0, s).unwrap();
            assert!(c.residual < 1e-4, "{c:?}");
        }
    }

    #[test]
    fn level_set_frame_facts() {
        let m = torus();
        let f = level_set_frame(&m, &ChartPoint::new(vec![FRAC_PI_2, 1.2]), &e(4, 0), 0.75).unwrap();
        assert!(f.gradient < 1e-8 && f.shape < 1e-8);
        let ce = counterexample();
        let p = ce.chart_point(0.0, &ChartPoint::new(vec![-1.4]));
        let f = level_set_frame(&ce.surface, &p, &ce.axis(), 1.0).unwrap();
        assert!(f.gradient < 1e-8 && f.shape < 1e-8, "{f:?}");
    }

    #[test]
    fn cmc_closure_on_clifford_and_umbilical() {
        let spec = CliffordSpec::new(3, 1, 0.5);
        let h = spec.mean_curvature();
        let (first, second) = spec.principal_curvatures();
        let lambda = -1.0 / second;
        for s in [-0.5, 0.0, 0.4] {
            assert!(cmc_closure_residual(&[second, first], lambda, h, s).unwrap() < 1e-12);
        }
        let u = UmbilicalSpec::new(vec![1.0, 0.0, 0.0, 0.0, 0.0], 0.4);
        let k = u.principal_curvature();
        assert!(cmc_closure_residual(&[k, k], -1.0 / k, u.mean_curvature(), 0.3).unwrap() < 1e-12);
    }

    #[test]
    fn partition_examples() {
        let r = partition_and_obstruction(&[0.75], 0.75, -0.2916666666666667, TAU_CLASS).unwrap();
        assert_eq!(r.partition.i2, vec![0]);
        assert!(r.partition.i3_groups.is_empty());
        assert_abs_diff_eq!(r.partition.d_x, 0.0, epsilon = 1e-12);
        assert!(r.consistent);
        assert_eq!(r.verdict, ObstructionVerdict::Consistent);

        let r = partition_and_obstruction(&[0.2, 0.3], 1.0, 0.1, TAU_CLASS).unwrap();
        assert_eq!(r.partition.i3_groups.len(), 2);
        assert!(!r.consistent);
        match &r.verdict {
            ObstructionVerdict::Contradiction(ObstructionCertificate::PartialFraction { verdict, .. }) => {
                assert!(!verdict.holds())
            }
            other => panic!("{other:?}"),
        }

        let r = partition_and_obstruction(&[-2.0, -2.0], 0.5, -2.0, TAU_CLASS).unwrap();
        assert_eq!(r.partition.i1, vec![0, 1]);
        assert!(r.consistent);
        let r = partition_and_obstruction(&[-2.0, -2.0], 0.5, 0.0, TAU_CLASS).unwrap();
        assert!(!r.consistent);
        assert!(matches!(
            r.verdict,
            ObstructionVerdict::Contradiction(ObstructionCertificate::EmptySum { .. })
        ));

        // a single repeated I_3 value
        let r = partition_and_obstruction(&[0.2, 0.2 + 1e-9], 1.0, 0.5, TAU_CLASS).unwrap();
        assert_eq!(r.partition.i3_groups.len(), 1);
        assert_eq!(r.partition.i3_groups[0].1.len(), 2);
        assert!(matches!(r.verdict, ObstructionVerdict::Contradiction(_)));
    }

    #[test]
    fn partition_on_level_set_points() {
        let spec = CliffordSpec::new(3, 2, 0.7);
        let m = make_clifford(&spec).unwrap();
        let lambda = spec.r / spec.co_radius();
        // polar angle pi/2 puts the point on N for v = e_1
        let p = ChartPoint::new(vec![FRAC_PI_2, 0.8, 2.0]);
        let s = support_sample(&m, &p, &e(5, 0)).unwrap();
        assert!(s.ell.abs() < 1e-15);
        let curv = m.shape_operator(&p).unwrap();
        let (_, rest) = split_v_curvature(&curv.kappas, lambda);
        let r = partition_and_obstruction(&rest, lambda, curv.mean_h, TAU_CLASS).unwrap();
        assert!(r.consistent);
        assert_eq!(r.verdict, ObstructionVerdict::Consistent);
        assert_eq!(r.partition.i1.len() + r.partition.i2.len(), 2);

        let u = UmbilicalSpec::new(vec![1.0, 0.0, 0.0, 0.0], 0.3);
        let m = make_umbilical(&u).unwrap();
        let lambda = -1.0 / u.principal_curvature();
        let p = ChartPoint::new(vec![1.0, 0.3]);
        let curv = m.shape_operator(&p).unwrap();
        // any unit tangent vector is orthogonal to the axis and to x
        let v = m.immersion_jet(&p).unwrap().d1[1].normalize();
        let s = support_sample(&m, &p, &v).unwrap();
        assert!(s.ell.abs() < 1e-12);
        assert_abs_diff_eq!(s.ell, lambda * s.f, epsilon = 1e-12);
        let (_, rest) = split_v_curvature(&curv.kappas, lambda);
        let r = partition_and_obstruction(&rest, lambda, curv.mean_h, TAU_CLASS).unwrap();
        assert!(r.consistent);
        assert_eq!(r.verdict, ObstructionVerdict::Consistent);
    }

    proptest! {
        #[test]
        fn propagation_is_identity_at_anchor(k in -5.0f64..5.0, lambda in 0.1f64..4.0, neg in any::<bool>()) {
            let lambda = if neg { -lambda } else { lambda };
            let d = propagation_denominator(k, lambda, 0.0);
            prop_assume!(d.abs() > 1e-6);
            prop_assert!((propagate_kappa(k, lambda, 0.0).unwrap() - k).abs() < 1e-9 * (1.0 + k.abs()));
            prop_assert!((transport_factor(k, lambda, 0.0) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn fixed_values_do_not_move(lambda in 0.1f64..4.0, s in -0.5f64..0.5) {
            let lim = half_range(lambda);
            let s = s * lim;
            prop_assert!((propagate_kappa(lambda, lambda, s).unwrap() - lambda).abs() < 1e-9 * lambda.max(1.0));
            let inv = -1.0 / lambda;
            prop_assert!((propagate_kappa(inv, lambda, s).unwrap() - inv).abs() < 1e-9 * inv.abs().max(1.0));
        }

        #[test]
        fn circle_constants(lambda in 0.2f64..3.0, frac in -0.99f64..0.99) {
            let w = circle_frequency(lambda);
            let a = frac / w;
            let b = (1.0 / (w * w) - a * a).sqrt();
            let s1 = -(w * a).asin() / w;
            prop_assert!(s1.abs() < half_range(lambda));
            prop_assert!(((w * a).powi(2) + (w * b).powi(2) - 1.0).abs() < 1e-12);
            prop_assert!((w * b - (w * s1).cos()).abs() < 1e-9);
        }
    }
}
