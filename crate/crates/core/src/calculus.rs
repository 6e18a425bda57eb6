//! Intrinsic finite-difference calculus on a chart: gradients and the
//! Laplace-Beltrami operator of scalar functions, computed only from function
//! values plus the induced metric and its Christoffel symbols.

use nalgebra::DVector;

use crate::geometry::{AmbientVector, ChartPoint, GeometryError, Hypersurface};

/// Step for the fourth-order gradient stencil.
pub const GRADIENT_STEP: f64 = 1e-4;
/// Step for the fourth-order second-derivative stencils.
pub const LAPLACIAN_STEP: f64 = 1e-3;

const D1_OFFSETS: [(f64, f64); 4] = [(-2.0, 1.0), (-1.0, -8.0), (1.0, 8.0), (2.0, -1.0)];

fn first_partial<F>(f: &F, p: &ChartPoint, axis: usize, h: f64) -> Result<f64, GeometryError>
where
    F: Fn(&ChartPoint) -> Result<f64, GeometryError>,
{
    let mut acc = 0.0;
    for (k, w) in D1_OFFSETS {
        acc += w * f(&p.shifted(axis, k * h))?;
    }
    Ok(acc / (12.0 * h))
}

fn second_partial<F>(
    f: &F,
    p: &ChartPoint,
    i: usize,
    j: usize,
    h: f64,
    center: f64,
) -> Result<f64, GeometryError>
where
    F: Fn(&ChartPoint) -> Result<f64, GeometryError>,
{
    if i == j {
        let f = |k: f64| f(&p.shifted(i, k * h));
        let acc = -f(2.0)? + 16.0 * f(1.0)? - 30.0 * center + 16.0 * f(-1.0)? - f(-2.0)?;
        return Ok(acc / (12.0 * h * h));
    }
    let mut acc = 0.0;
    for (ki, wi) in D1_OFFSETS {
        for (kj, wj) in D1_OFFSETS {
            acc += wi * wj * f(&p.shifted(i, ki * h).shifted(j, kj * h))?;
        }
    }
    Ok(acc / (144.0 * h * h))
}

/// Riemannian gradient as an ambient tangent vector, `g^{ij} d_j f d_i phi`.
pub fn gradient<F>(surface: &Hypersurface, p: &ChartPoint, f: F) -> Result<AmbientVector, GeometryError>
where
    F: Fn(&ChartPoint) -> Result<f64, GeometryError>,
{
    let jet = surface.immersion_jet(p)?;
    let n = jet.dim();
    let mut df = DVector::zeros(n);
    for i in 0..n {
        df[i] = first_partial(&f, p, i, GRADIENT_STEP)?;
    }
    let g = jet.metric();
    let coeffs = g
        .clone()
        .cholesky()
        .ok_or(GeometryError::RankDeficient(g.determinant()))?
        .solve(&df);
    Ok(jet.push_forward(coeffs.as_slice()))
}

/// `Delta f = g^{ij} (d_i d_j f - Gamma^k_ij d_k f)`.
pub fn laplace_beltrami<F>(surface: &Hypersurface, p: &ChartPoint, f: F) -> Result<f64, GeometryError>
where
    F: Fn(&ChartPoint) -> Result<f64, GeometryError>,
{
    let jet = surface.immersion_jet(p)?;
    let n = jet.dim();
    let g = jet.metric();
    let g_inv = g
        .clone()
        .try_inverse()
        .ok_or(GeometryError::RankDeficient(g.determinant()))?;
    let gamma = jet.christoffel(&g_inv);
    let h = LAPLACIAN_STEP;
    let center = f(p)?;
    let grad: Vec<f64> = (0..n)
        .map(|k| first_partial(&f, p, k, h))
        .collect::<Result<_, _>>()?;
    let mut lap = 0.0;
    for i in 0..n {
        for j in i..n {
            let mut hess = second_partial(&f, p, i, j, h, center)?;
            hess -= (0..n).map(|k| gamma[k][i][j] * grad[k]).sum::<f64>();
            let weight = if i == j { 1.0 } else { 2.0 };
            lap += weight * g_inv[(i, j)] * hess;
        }
    }
    Ok(lap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{make_clifford, make_umbilical, CliffordSpec, UmbilicalSpec};
    use approx::assert_abs_diff_eq;

    #[test]
    fn laplacian_of_constant_vanishes() {
        let m = make_umbilical(&UmbilicalSpec::new(vec![1.0, 0.0, 0.0, 0.0], 0.3)).unwrap();
        let p = ChartPoint::new(vec![1.1, 0.4]);
        let lap = laplace_beltrami(&m, &p, |_| Ok(2.5)).unwrap();
        assert_eq!(lap, 0.0);
    }

    #[test]
    fn flat_torus_fourier_mode() {
        // cos(theta) on the r-circle has eigenvalue 1/r^2
        let m = make_clifford(&CliffordSpec::new(2, 1, 0.6)).unwrap();
        let p = ChartPoint::new(vec![0.7, -0.2]);
        let lap = laplace_beltrami(&m, &p, |q| Ok(q.params()[0].cos())).unwrap();
        assert_abs_diff_eq!(lap, -0.7f64.cos() / 0.36, epsilon = 1e-8);
    }

    #[test]
    fn round_sphere_coordinate_function() {
        // height on a round S^2 of radius rho is an eigenfunction with 2/rho^2
        let m = make_umbilical(&UmbilicalSpec::new(vec![1.0, 0.0, 0.0, 0.0], 0.6)).unwrap();
        let p = ChartPoint::new(vec![0.9, 2.0]);
        let height = |q: &ChartPoint| Ok(m.position(q)?[1]);
        let lap = laplace_beltrami(&m, &p, height).unwrap();
        let rho2 = 1.0 - 0.36;
        assert_abs_diff_eq!(lap, -2.0 / rho2 * height(&p).unwrap(), epsilon = 1e-7);
    }
}
