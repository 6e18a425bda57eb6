//! Exact rational arithmetic for the partial-fraction obstruction: given
//! linear factors `p_i = b_i X + c_i` with pairwise distinct roots, the
//! deleted products `q_i = prod_{j != i} p_j` are linearly independent and
//! `sum_i a_i / p_i = d` holds identically only when every `a_i` and `d`
//! vanish.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::rng::Lcg64;

/// Denominator cap for continued-fraction rationalization.
pub const DENOMINATOR_CAP: i64 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LemmaError {
    #[error("linear factor {index} has zero leading coefficient")]
    ZeroLeading { index: usize },
    #[error("factors {i} and {j} share the root {root}")]
    DuplicateRoot { i: usize, j: usize, root: String },
    #[error("need at least {needed} factors, got {got}")]
    TooFewFactors { needed: usize, got: usize },
    #[error("expected {expected} coefficients, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("identity holds with nonzero coefficients")]
    Violated,
    #[error("cannot rationalize non-finite value {0}")]
    NonFinite(f64),
}

pub fn rat(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Best rational approximation with denominator at most `DENOMINATOR_CAP`,
/// by continued fractions.
pub fn rationalize(x: f64) -> Result<BigRational, LemmaError> {
    rationalize_capped(x, DENOMINATOR_CAP)
}

pub fn rationalize_capped(x: f64, cap: i64) -> Result<BigRational, LemmaError> {
    if !x.is_finite() {
        return Err(LemmaError::NonFinite(x));
    }
    let sign = if x < 0.0 { -1 } else { 1 };
    let mut rest = x.abs();
    // convergents h/k
    let (mut h0, mut h1): (i128, i128) = (0, 1);
    let (mut k0, mut k1): (i128, i128) = (1, 0);
    for _ in 0..64 {
        let a = rest.floor();
        if a > 1e15 {
            break;
        }
        let a = a as i128;
        let h2 = a * h1 + h0;
        let k2 = a * k1 + k0;
        if k2 > cap as i128 {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = rest - a as f64;
        if frac < 1e-15 {
            break;
        }
        rest = 1.0 / frac;
    }
    if k1 == 0 {
        // the value exceeds every representable integer part
        return Err(LemmaError::NonFinite(x));
    }
    Ok(BigRational::new(
        BigInt::from(sign * h1),
        BigInt::from(k1),
    ))
}

pub fn to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// `b X + c` with `b != 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalLinear {
    pub b: BigRational,
    pub c: BigRational,
}

impl RationalLinear {
    pub fn new(b: BigRational, c: BigRational) -> Self {
        Self { b, c }
    }

    pub fn from_ints(b: i64, c: i64) -> Self {
        Self::new(rat(b, 1), rat(c, 1))
    }

    pub fn root(&self) -> BigRational {
        -&self.c / &self.b
    }

    pub fn to_poly(&self) -> RationalPoly {
        RationalPoly::new(vec![self.c.clone(), self.b.clone()])
    }
}

/// Coefficients in ascending degree, trailing zeros trimmed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalPoly {
    coeffs: Vec<BigRational>,
}

impl RationalPoly {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: BigRational) -> Self {
        Self::new(vec![c])
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    /// Coefficient of `X^k`, zero beyond the degree.
    pub fn coeff(&self, k: usize) -> BigRational {
        self.coeffs.get(k).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        self.coeffs
            .iter()
            .rev()
            .fold(BigRational::zero(), |acc, c| acc * x + c)
    }

    pub fn add(&self, other: &Self) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        Self::new((0..len).map(|k| self.coeff(k) + other.coeff(k)).collect())
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![BigRational::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }
}

impl fmt::Display for RationalPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .rev()
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, c)| match k {
                0 => format!("{c}"),
                1 => format!("({c})X"),
                _ => format!("({c})X^{k}"),
            })
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

fn check_factors(ps: &[RationalLinear]) -> Result<(), LemmaError> {
    for (i, p) in ps.iter().enumerate() {
        if p.b.is_zero() {
            return Err(LemmaError::ZeroLeading { index: i });
        }
    }
    let roots: Vec<BigRational> = ps.iter().map(RationalLinear::root).collect();
    for i in 0..roots.len() {
        for j in i + 1..roots.len() {
            if roots[i] == roots[j] {
                return Err(LemmaError::DuplicateRoot {
                    i,
                    j,
                    root: roots[i].to_string(),
                });
            }
        }
    }
    Ok(())
}

fn deleted_products(ps: &[RationalLinear]) -> Vec<RationalPoly> {
    (0..ps.len())
        .map(|i| {
            ps.iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .fold(RationalPoly::constant(BigRational::one()), |acc, (_, p)| {
                    acc.mul(&p.to_poly())
                })
        })
        .collect()
}

/// `q_i = prod_{j != i} p_j` for `k >= 2` factors with distinct roots.
pub fn build_q(ps: &[RationalLinear]) -> Result<Vec<RationalPoly>, LemmaError> {
    if ps.len() < 2 {
        return Err(LemmaError::TooFewFactors {
            needed: 2,
            got: ps.len(),
        });
    }
    check_factors(ps)?;
    Ok(deleted_products(ps))
}

/// Rank of a dense rational matrix by exact Gaussian elimination.
pub fn exact_rank(rows: &[Vec<BigRational>]) -> usize {
    let mut m: Vec<Vec<BigRational>> = rows.to_vec();
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..cols {
        let Some(pivot) = (rank..m.len()).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, pivot);
        let inv = m[rank][col].recip();
        for r in rank + 1..m.len() {
            if m[r][col].is_zero() {
                continue;
            }
            let factor = &m[r][col] * &inv;
            for c in col..cols {
                let delta = &factor * &m[rank][c];
                m[r][c] -= delta;
            }
        }
        rank += 1;
    }
    rank
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndependenceCertificate {
    pub k: usize,
    pub rank: usize,
}

impl IndependenceCertificate {
    pub fn independent(&self) -> bool {
        self.rank == self.k
    }
}

/// Exact rank of the coefficient matrix of `qs`.
pub fn independence_verdict(qs: &[RationalPoly]) -> IndependenceCertificate {
    let width = qs
        .iter()
        .filter_map(RationalPoly::degree)
        .max()
        .map_or(0, |d| d + 1);
    let rows: Vec<Vec<BigRational>> = qs
        .iter()
        .map(|q| (0..width).map(|k| q.coeff(k)).collect())
        .collect();
    IndependenceCertificate {
        k: qs.len(),
        rank: exact_rank(&rows),
    }
}

/// `E[i][j] = q_j(-c_i / b_i)`; diagonal nonzero and off-diagonal zero is
/// the evaluation argument for independence.
pub fn evaluation_matrix(ps: &[RationalLinear], qs: &[RationalPoly]) -> Vec<Vec<BigRational>> {
    ps.iter()
        .map(|p| {
            let x = p.root();
            qs.iter().map(|q| q.eval(&x)).collect()
        })
        .collect()
}

pub fn is_diagonal_nonzero(e: &[Vec<BigRational>]) -> bool {
    e.iter().enumerate().all(|(i, row)| {
        row.iter()
            .enumerate()
            .all(|(j, v)| if i == j { !v.is_zero() } else { v.is_zero() })
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PartialFractionVerdict {
    IdentityHolds,
    /// `sum a_i q_i - d R` has the nonzero coefficient `value` at `X^degree`.
    OnlyZeroSolution {
        degree: usize,
        value: BigRational,
        residual: RationalPoly,
    },
}

impl PartialFractionVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, PartialFractionVerdict::IdentityHolds)
    }
}

/// Decides whether `sum_i a_i / p_i(X) = d` holds identically, by clearing
/// denominators. A single factor is accepted with `q_1 = 1`.
pub fn partial_fraction_verdict(
    ps: &[RationalLinear],
    a: &[BigRational],
    d: &BigRational,
) -> Result<PartialFractionVerdict, LemmaError> {
    if ps.is_empty() {
        return Err(LemmaError::TooFewFactors { needed: 1, got: 0 });
    }
    if a.len() != ps.len() {
        return Err(LemmaError::LengthMismatch {
            expected: ps.len(),
            got: a.len(),
        });
    }
    check_factors(ps)?;
    let qs = deleted_products(ps);
    let r = ps
        .iter()
        .fold(RationalPoly::constant(BigRational::one()), |acc, p| acc.mul(&p.to_poly()));
    let residual = qs
        .iter()
        .zip(a)
        .fold(r.scale(&-d), |acc, (q, ai)| acc.add(&q.scale(ai)));
    match residual.degree() {
        None => {
            if d.is_zero() && a.iter().all(Zero::is_zero) {
                Ok(PartialFractionVerdict::IdentityHolds)
            } else {
                Err(LemmaError::Violated)
            }
        }
        Some(degree) => {
            let value = residual.coeff(degree);
            Ok(PartialFractionVerdict::OnlyZeroSolution {
                degree,
                value,
                residual,
            })
        }
    }
}

/// The obstruction identity built exactly from `lambda`, distinct
/// curvature values `lambda_i` with multiplicities `m_i`, and `d`:
/// `a_i = m_i (1/lambda + lambda_i)`, `b_i = lambda (lambda - lambda_i)`,
/// `c_i = 1 + lambda lambda_i`.
pub fn curvature_identity(
    lambda: &BigRational,
    groups: &[(BigRational, usize)],
    d: &BigRational,
) -> Result<PartialFractionVerdict, LemmaError> {
    let mut ps = Vec::with_capacity(groups.len());
    let mut a = Vec::with_capacity(groups.len());
    for (li, m) in groups {
        ps.push(RationalLinear::new(
            lambda * (lambda - li),
            BigRational::one() + lambda * li,
        ));
        a.push(BigRational::from_integer(BigInt::from(*m)) * (lambda.recip() + li));
    }
    partial_fraction_verdict(&ps, &a, d)
}

/// Random obstruction data with nonempty `I_3`: `lambda != 0` and distinct
/// `lambda_i` avoiding `lambda` and `-1/lambda`.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticInstance {
    pub lambda: BigRational,
    pub groups: Vec<(BigRational, usize)>,
    pub d: BigRational,
}

impl SyntheticInstance {
    pub fn verdict(&self) -> Result<PartialFractionVerdict, LemmaError> {
        curvature_identity(&self.lambda, &self.groups, &self.d)
    }
}

fn random_rational(rng: &mut Lcg64) -> BigRational {
    rat(rng.int_range(-20, 20), rng.int_range(1, 12))
}

pub fn synthetic_instance(rng: &mut Lcg64) -> SyntheticInstance {
    let lambda = loop {
        let l = random_rational(rng);
        if !l.is_zero() {
            break l;
        }
    };
    let forbidden = [lambda.clone(), -lambda.recip()];
    let k = rng.int_range(1, 4) as usize;
    let mut groups: Vec<(BigRational, usize)> = Vec::with_capacity(k);
    while groups.len() < k {
        let li = random_rational(rng);
        if forbidden.contains(&li) || groups.iter().any(|(g, _)| *g == li) {
            continue;
        }
        groups.push((li, rng.int_range(1, 3) as usize));
    }
    SyntheticInstance {
        lambda,
        groups,
        d: random_rational(rng),
    }
}
