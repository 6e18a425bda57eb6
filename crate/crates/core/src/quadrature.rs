//! Tensor-product quadrature over chart domains: trapezoidal on periodic axes,
//! Gauss-Legendre on the others, weighted by the Riemannian volume density.

use std::f64::consts::PI;

use crate::geometry::{ChartPoint, GeometryError, Hypersurface};

#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<ChartPoint>,
    /// Includes `sqrt(det g)`.
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn volume(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, f)| w * f).sum()
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    for i in 0..order.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=order {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            // p1 = P_order(x), p0 = P_{order-1}(x)
            dp = order as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

/// Tensor rule with `nodes_per_axis` nodes on every chart axis.
pub fn tensor_rule(surface: &Hypersurface, nodes_per_axis: usize) -> Result<QuadratureRule, GeometryError> {
    let axis_rules: Vec<(Vec<f64>, Vec<f64>)> = surface
        .domain()
        .axes()
        .iter()
        .map(|ax| {
            if ax.periodic {
                let h = ax.width() / nodes_per_axis as f64;
                let nodes = (0..nodes_per_axis).map(|i| ax.lo + h * i as f64).collect();
                (nodes, vec![h; nodes_per_axis])
            } else {
                let (x, w) = gauss_legendre(nodes_per_axis);
                let half = 0.5 * ax.width();
                let mid = 0.5 * (ax.lo + ax.hi);
                (
                    x.iter().map(|t| mid + half * t).collect(),
                    w.iter().map(|wi| half * wi).collect(),
                )
            }
        })
        .collect();
    let dim = axis_rules.len();
    let total = nodes_per_axis.pow(dim as u32);
    let mut points = Vec::with_capacity(total);
    let mut weights = Vec::with_capacity(total);
    let mut idx = vec![0usize; dim];
    for _ in 0..total {
        let params: Vec<f64> = idx.iter().enumerate().map(|(a, &i)| axis_rules[a].0[i]).collect();
        let w: f64 = idx.iter().enumerate().map(|(a, &i)| axis_rules[a].1[i]).product();
        let p = ChartPoint::new(params);
        let density = surface.immersion_jet(&p)?.metric().determinant().sqrt();
        points.push(p);
        weights.push(w * density);
        for a in (0..dim).rev() {
            idx[a] += 1;
            if idx[a] < nodes_per_axis {
                break;
            }
            idx[a] = 0;
        }
    }
    Ok(QuadratureRule { points, weights })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{make_clifford, make_umbilical, CliffordSpec, UmbilicalSpec};
    use approx::assert_abs_diff_eq;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(6);
        let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert_abs_diff_eq!(integral, 2.0 / 11.0, epsilon = 1e-14);
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn torus_area() {
        let m = make_clifford(&CliffordSpec::new(2, 1, 0.6)).unwrap();
        let rule = tensor_rule(&m, 16).unwrap();
        let area = 4.0 * PI * PI * 0.6 * 0.8;
        assert_abs_diff_eq!(rule.volume(), area, epsilon = 1e-12);
    }

    #[test]
    fn sphere_area_up_to_pole_caps() {
        let m = make_umbilical(&UmbilicalSpec::new(vec![1.0, 0.0, 0.0, 0.0], 0.0)).unwrap();
        let rule = tensor_rule(&m, 24).unwrap();
        // the chart omits caps of angular radius 1e-3 around both poles
        assert_abs_diff_eq!(rule.volume(), 4.0 * PI, epsilon = 1e-4);
    }
}
