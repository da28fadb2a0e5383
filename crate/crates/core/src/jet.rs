//! Truncated mixed Wirtinger jets.
//!
//! A [`Jet`] stores the Taylor coefficients of a real-analytic field around a
//! base point, treating `ξ` and `ξ̄` as independent variables:
//!
//! ```text
//! F(ξ0 + u, ξ̄0 + v) = Σ_{a ≤ p, b ≤ q} c[a][b] u^a v^b,   c[a][b] = ∂^a ∂̄^b F / (a! b!)
//! ```
//!
//! With this normalisation a product of two fields is a plain Cauchy product
//! of their coefficient tables, and every coefficient inside the truncation box
//! is exact (up to round-off) as long as the inputs are. The only operations
//! that lose information are the derivatives, which shift the table by one
//! step; the jet tracks this through its valid order and refuses to extract
//! anything beyond it. Coefficients past the valid order are never stored.
//!
//! Coefficients may be complex scalars, complex vectors or complex matrices;
//! the [`Coeff`] trait captures the handful of operations the algebra needs.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Default threshold below which `f†f` and tower normalizers count as zero.
pub const DEFAULT_DEGENERACY: f64 = 1e-12;

/// A point `ξ = ξ¹ + iξ²` of the complex plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalPoint {
    pub xi1: f64,
    pub xi2: f64,
}

impl EvalPoint {
    pub fn new(xi1: f64, xi2: f64) -> Result<Self> {
        if !(xi1.is_finite() && xi2.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "evaluation point ({xi1}, {xi2}) is not finite"
            )));
        }
        Ok(Self { xi1, xi2 })
    }

    pub fn from_complex(xi: Complex64) -> Result<Self> {
        Self::new(xi.re, xi.im)
    }

    pub fn origin() -> Self {
        Self { xi1: 0.0, xi2: 0.0 }
    }

    pub fn xi(&self) -> Complex64 {
        Complex64::new(self.xi1, self.xi2)
    }

    pub fn offset(&self, d1: f64, d2: f64) -> Self {
        Self {
            xi1: self.xi1 + d1,
            xi2: self.xi2 + d2,
        }
    }
}

impl fmt::Display for EvalPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.11e}{:+.11e}i", self.xi1, self.xi2)
    }
}

/// Truncation order in `ξ` (`p`) and in `ξ̄` (`q`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BidegreeOrder {
    pub p: usize,
    pub q: usize,
}

impl BidegreeOrder {
    pub const fn new(p: usize, q: usize) -> Self {
        Self { p, q }
    }

    pub const fn symmetric(d: usize) -> Self {
        Self { p: d, q: d }
    }

    pub fn min(self, other: Self) -> Self {
        Self {
            p: self.p.min(other.p),
            q: self.q.min(other.q),
        }
    }

    pub fn swapped(self) -> Self {
        Self { p: self.q, q: self.p }
    }

    /// True when a coefficient of bidegree `(a, b)` lies inside this order.
    pub fn admits(self, a: usize, b: usize) -> bool {
        a <= self.p && b <= self.q
    }

    pub fn covers(self, other: Self) -> bool {
        self.admits(other.p, other.q)
    }

    fn len(self) -> usize {
        (self.p + 1) * (self.q + 1)
    }
}

impl fmt::Display for BidegreeOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.p, self.q)
    }
}

/// Coefficient types a [`Jet`] can carry.
pub trait Coeff: Clone + fmt::Debug {
    fn zero_like(&self) -> Self;
    fn add_assign_ref(&mut self, other: &Self);
    fn sub_assign_ref(&mut self, other: &Self);
    fn scale(&self, s: Complex64) -> Self;
    /// Complex conjugate for scalars and vectors, conjugate transpose for matrices.
    fn star(&self) -> Self;
    fn norm(&self) -> f64;
}

impl Coeff for Complex64 {
    fn zero_like(&self) -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn add_assign_ref(&mut self, other: &Self) {
        *self += other;
    }
    fn sub_assign_ref(&mut self, other: &Self) {
        *self -= other;
    }
    fn scale(&self, s: Complex64) -> Self {
        self * s
    }
    fn star(&self) -> Self {
        self.conj()
    }
    fn norm(&self) -> f64 {
        Complex64::norm(*self)
    }
}

impl Coeff for CVec {
    fn zero_like(&self) -> Self {
        CVec::zeros(self.len())
    }
    fn add_assign_ref(&mut self, other: &Self) {
        *self += other;
    }
    fn sub_assign_ref(&mut self, other: &Self) {
        *self -= other;
    }
    fn scale(&self, s: Complex64) -> Self {
        self * s
    }
    fn star(&self) -> Self {
        self.map(|z| z.conj())
    }
    fn norm(&self) -> f64 {
        DVector::norm(self)
    }
}

impl Coeff for CMat {
    fn zero_like(&self) -> Self {
        CMat::zeros(self.nrows(), self.ncols())
    }
    fn add_assign_ref(&mut self, other: &Self) {
        *self += other;
    }
    fn sub_assign_ref(&mut self, other: &Self) {
        *self -= other;
    }
    fn scale(&self, s: Complex64) -> Self {
        self * s
    }
    fn star(&self) -> Self {
        self.adjoint()
    }
    fn norm(&self) -> f64 {
        DMatrix::norm(self)
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// Truncated bidegree series with coefficients of type `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet<T> {
    valid: BidegreeOrder,
    coeffs: Vec<T>,
}

pub type ScalarJet = Jet<Complex64>;
pub type VectorJet = Jet<CVec>;
pub type MatrixJet = Jet<CMat>;

impl<T: Coeff> Jet<T> {
    pub fn from_fn(valid: BidegreeOrder, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut coeffs = Vec::with_capacity(valid.len());
        for a in 0..=valid.p {
            for b in 0..=valid.q {
                coeffs.push(f(a, b));
            }
        }
        Self { valid, coeffs }
    }

    /// Jet of a field that is constant near the base point.
    pub fn constant(value: T, order: BidegreeOrder) -> Self {
        let zero = value.zero_like();
        Self::from_fn(
            order,
            |a, b| {
                if a == 0 && b == 0 {
                    value.clone()
                } else {
                    zero.clone()
                }
            },
        )
    }

    pub fn valid(&self) -> BidegreeOrder {
        self.valid
    }

    #[inline]
    fn idx(&self, a: usize, b: usize) -> usize {
        a * (self.valid.q + 1) + b
    }

    #[inline]
    fn at(&self, a: usize, b: usize) -> &T {
        &self.coeffs[self.idx(a, b)]
    }

    /// Value of the field at the base point.
    pub fn value(&self) -> &T {
        &self.coeffs[0]
    }

    /// Stored Taylor coefficient `∂^a ∂̄^b F / (a! b!)`.
    pub fn coeff(&self, a: usize, b: usize) -> Result<&T> {
        self.require(BidegreeOrder::new(a, b))?;
        Ok(self.at(a, b))
    }

    /// The derivative `∂^a ∂̄^b F` at the base point.
    pub fn derivative(&self, a: usize, b: usize) -> Result<T> {
        let c = self.coeff(a, b)?;
        Ok(c.scale(Complex64::new(factorial(a) * factorial(b), 0.0)))
    }

    pub fn require(&self, needed: BidegreeOrder) -> Result<()> {
        if self.valid.covers(needed) {
            Ok(())
        } else {
            Err(Error::InsufficientOrder {
                needed,
                available: self.valid,
            })
        }
    }

    /// `∂` of the field, one order shorter in `ξ`.
    pub fn d(&self) -> Result<Self> {
        self.require(BidegreeOrder::new(1, 0))?;
        let valid = BidegreeOrder::new(self.valid.p - 1, self.valid.q);
        Ok(Self::from_fn(valid, |a, b| {
            self.at(a + 1, b).scale(Complex64::new((a + 1) as f64, 0.0))
        }))
    }

    /// `∂̄` of the field, one order shorter in `ξ̄`.
    pub fn dbar(&self) -> Result<Self> {
        self.require(BidegreeOrder::new(0, 1))?;
        let valid = BidegreeOrder::new(self.valid.p, self.valid.q - 1);
        Ok(Self::from_fn(valid, |a, b| {
            self.at(a, b + 1).scale(Complex64::new((b + 1) as f64, 0.0))
        }))
    }

    /// `∂∂̄` of the field.
    pub fn d_dbar(&self) -> Result<Self> {
        self.d()?.dbar()
    }

    /// Hermitian conjugate of the field. Since `(∂A)† = ∂̄(A†)` the
    /// coefficient table is transposed and the valid orders swap.
    pub fn hconj(&self) -> Self {
        Self::from_fn(self.valid.swapped(), |a, b| self.at(b, a).star())
    }

    pub fn truncated(&self, order: BidegreeOrder) -> Self {
        let valid = self.valid.min(order);
        if valid == self.valid {
            return self.clone();
        }
        Self::from_fn(valid, |a, b| self.at(a, b).clone())
    }

    pub fn map<U: Coeff>(&self, f: impl Fn(&T) -> U) -> Jet<U> {
        Jet {
            valid: self.valid,
            coeffs: self.coeffs.iter().map(f).collect(),
        }
    }

    /// Coefficient-wise combination on the common valid box.
    pub fn zip_with<U: Coeff, V: Coeff>(&self, other: &Jet<U>, f: impl Fn(&T, &U) -> V) -> Jet<V> {
        let valid = self.valid.min(other.valid);
        Jet::from_fn(valid, |a, b| f(self.at(a, b), other.at(a, b)))
    }

    /// Truncated Cauchy product under a bilinear coefficient pairing `f`.
    ///
    /// The result is valid on the componentwise minimum of the operand orders.
    pub fn product<U: Coeff, V: Coeff>(&self, other: &Jet<U>, f: impl Fn(&T, &U) -> V) -> Jet<V> {
        let valid = self.valid.min(other.valid);
        Jet::from_fn(valid, |i, j| {
            let mut acc = f(self.at(0, 0), other.at(i, j));
            for a in 0..=i {
                for b in 0..=j {
                    if a == 0 && b == 0 {
                        continue;
                    }
                    acc.add_assign_ref(&f(self.at(a, b), other.at(i - a, j - b)));
                }
            }
            acc
        })
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map(|c| c.scale(s))
    }

    /// Multiply by a scalar field.
    pub fn times(&self, s: &ScalarJet) -> Self {
        s.product(self, |z, c| c.scale(*z))
    }

    /// Largest coefficient norm; handy for diagnostics.
    pub fn max_coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(Coeff::norm).fold(0.0, f64::max)
    }
}

impl<T: Coeff> Add for &Jet<T> {
    type Output = Jet<T>;
    fn add(self, rhs: Self) -> Jet<T> {
        self.zip_with(rhs, |a, b| {
            let mut s = a.clone();
            s.add_assign_ref(b);
            s
        })
    }
}

impl<T: Coeff> Sub for &Jet<T> {
    type Output = Jet<T>;
    fn sub(self, rhs: Self) -> Jet<T> {
        self.zip_with(rhs, |a, b| {
            let mut s = a.clone();
            s.sub_assign_ref(b);
            s
        })
    }
}

impl<T: Coeff> Neg for &Jet<T> {
    type Output = Jet<T>;
    fn neg(self) -> Jet<T> {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Mul for &ScalarJet {
    type Output = ScalarJet;
    fn mul(self, rhs: Self) -> ScalarJet {
        self.product(rhs, |a, b| a * b)
    }
}

/// Matrix product of matrix jets. Panics on a dimension mismatch; see
/// [`MatrixJet::try_mul`] for the checked form.
impl Mul for &MatrixJet {
    type Output = MatrixJet;
    fn mul(self, rhs: Self) -> MatrixJet {
        self.product(rhs, |a, b| a * b)
    }
}

impl ScalarJet {
    pub fn one(order: BidegreeOrder) -> Self {
        Self::constant(Complex64::new(1.0, 0.0), order)
    }

    /// Reciprocal series. Fails when the value slot is at or below `eps`.
    pub fn inv(&self, eps: f64) -> Result<Self> {
        let v = *self.value();
        if v.norm().is_nan() || v.norm() <= eps {
            return Err(Error::degenerate(None, v.norm(), eps));
        }
        let inv0 = 1.0 / v;
        let valid = self.valid;
        let mut out = vec![Complex64::new(0.0, 0.0); valid.len()];
        let q1 = valid.q + 1;
        for i in 0..=valid.p {
            for j in 0..=valid.q {
                if i == 0 && j == 0 {
                    out[0] = inv0;
                    continue;
                }
                let mut acc = Complex64::new(0.0, 0.0);
                for a in 0..=i {
                    for b in 0..=j {
                        if a == 0 && b == 0 {
                            continue;
                        }
                        acc += self.at(a, b) * out[(i - a) * q1 + (j - b)];
                    }
                }
                out[i * q1 + j] = -acc * inv0;
            }
        }
        Ok(Self { valid, coeffs: out })
    }

    /// Jet of a holomorphic polynomial. Exact to any order.
    pub fn from_poly(poly: &Poly, point: EvalPoint, order: BidegreeOrder) -> Self {
        let taylor = poly.taylor(point.xi(), order.p);
        Self::from_fn(order, |a, b| if b == 0 { taylor[a] } else { Complex64::new(0.0, 0.0) })
    }

    /// Jet of a polynomial in `ξ` and `ξ̄`.
    pub fn from_bipoly(poly: &BiPoly, point: EvalPoint, order: BidegreeOrder) -> Self {
        let z = point.xi();
        let zb = z.conj();
        Self::from_fn(order, |a, b| {
            poly.terms
                .iter()
                .filter(|t| t.0 >= a && t.1 >= b)
                .map(|&(m, n, c)| {
                    c * binomial(m, a) * binomial(n, b) * z.powu((m - a) as u32) * zb.powu((n - b) as u32)
                })
                .sum()
        })
    }
}

impl VectorJet {
    /// Stack scalar jets into a vector jet.
    pub fn from_components(components: &[ScalarJet]) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidArgument("empty vector jet".into()));
        }
        let valid = components.iter().map(|c| c.valid).reduce(BidegreeOrder::min).unwrap();
        Ok(Self::from_fn(valid, |a, b| {
            CVec::from_iterator(components.len(), components.iter().map(|c| *c.at(a, b)))
        }))
    }

    pub fn dim(&self) -> usize {
        self.value().len()
    }

    /// Scalar field `f†g`.
    pub fn inner(&self, other: &VectorJet) -> ScalarJet {
        self.hconj().product(other, |a, b| a.dot(b))
    }

    /// Matrix field `f ⊗ g†`.
    pub fn outer(&self, other: &VectorJet) -> MatrixJet {
        self.product(&other.hconj(), |a, b| a * b.transpose())
    }
}

impl MatrixJet {
    pub fn identity(n: usize, order: BidegreeOrder) -> Self {
        Self::constant(CMat::identity(n, n), order)
    }

    pub fn dim(&self) -> usize {
        self.value().nrows()
    }

    pub fn try_mul(&self, other: &MatrixJet) -> Result<MatrixJet> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok(self * other)
    }

    pub fn apply(&self, v: &VectorJet) -> VectorJet {
        self.product(v, |m, x| m * x)
    }

    pub fn trace(&self) -> ScalarJet {
        self.map(|m| m.trace())
    }

    /// `[A, B] = AB − BA`.
    pub fn commutator(&self, other: &MatrixJet) -> MatrixJet {
        &(self * other) - &(other * self)
    }
}

/// Holomorphic polynomial in `ξ`, coefficients in ascending degree.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    pub coeffs: Vec<Complex64>,
}

impl Poly {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        Self { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn monomial(degree: usize, c: Complex64) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); degree + 1];
        coeffs[degree] = c;
        Self::new(coeffs)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.norm() == 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Degree ignoring trailing zeros; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.iter().rposition(|c| c.norm() != 0.0)
    }

    pub fn eval(&self, xi: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, c| acc * xi + c)
    }

    /// Taylor coefficients about `xi` up to degree `order`.
    pub fn taylor(&self, xi: Complex64, order: usize) -> Vec<Complex64> {
        (0..=order)
            .map(|a| {
                self.coeffs
                    .iter()
                    .enumerate()
                    .skip(a)
                    .map(|(m, c)| c * binomial(m, a) * xi.powu((m - a) as u32))
                    .sum()
            })
            .collect()
    }

    /// `ξ^d p(1/ξ)`: the same polynomial seen from the chart at infinity.
    pub fn reversed(&self, d: usize) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); d + 1];
        for (m, c) in self.coeffs.iter().enumerate() {
            if c.norm() != 0.0 {
                coeffs[d - m] = *c;
            }
        }
        Self::new(coeffs)
    }
}

/// Polynomial in `ξ` and `ξ̄`: terms `(m, n, c)` meaning `c ξ^m ξ̄^n`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BiPoly {
    pub terms: Vec<(usize, usize, Complex64)>,
}

impl BiPoly {
    pub fn new(terms: Vec<(usize, usize, Complex64)>) -> Self {
        Self { terms }
    }

    pub fn eval(&self, xi: Complex64) -> Complex64 {
        self.terms
            .iter()
            .map(|&(m, n, c)| c * xi.powu(m as u32) * xi.conj().powu(n as u32))
            .sum()
    }

    pub fn mul(&self, other: &BiPoly) -> BiPoly {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for &(m1, n1, c1) in &self.terms {
            for &(m2, n2, c2) in &other.terms {
                terms.push((m1 + m2, n1 + n2, c1 * c2));
            }
        }
        BiPoly { terms }
    }

    /// Symbolic `∂^a ∂̄^b`.
    pub fn derivative(&self, a: usize, b: usize) -> BiPoly {
        let falling = |n: usize, k: usize| (0..k).fold(1.0, |acc, j| acc * (n - j) as f64);
        BiPoly {
            terms: self
                .terms
                .iter()
                .filter(|t| t.0 >= a && t.1 >= b)
                .map(|&(m, n, c)| (m - a, n - b, c * falling(m, a) * falling(n, b)))
                .collect(),
        }
    }
}

/// Central-difference estimates of `∂F`, `∂̄F` and `∂∂̄F`.
#[derive(Debug, Clone)]
pub struct FdEstimate {
    pub d: CMat,
    pub dbar: CMat,
    pub d_dbar: CMat,
}

/// Finite-difference cross-check of the jet derivatives.
///
/// Uses the centre and the four axis neighbours of the 3×3 stencil with
/// `∂ = (∂₁ − i∂₂)/2`, `∂̄ = (∂₁ + i∂₂)/2` and `∂∂̄ = Δ/4`. Error is `O(h²)`.
pub fn fd_oracle<F>(field: F, point: EvalPoint, h: f64) -> Result<FdEstimate>
where
    F: Fn(EvalPoint) -> Result<CMat>,
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("step {h} must be positive")));
    }
    let c = field(point)?;
    let xp = field(point.offset(h, 0.0))?;
    let xm = field(point.offset(-h, 0.0))?;
    let yp = field(point.offset(0.0, h))?;
    let ym = field(point.offset(0.0, -h))?;

    let d1 = (&xp - &xm) / Complex64::new(2.0 * h, 0.0);
    let d2 = (&yp - &ym) / Complex64::new(2.0 * h, 0.0);
    let i = Complex64::i();
    let half = Complex64::new(0.5, 0.0);
    let d = (&d1 - &d2 * i) * half;
    let dbar = (&d1 + &d2 * i) * half;
    let lap = (&xp + &xm + &yp + &ym - &c * Complex64::new(4.0, 0.0)) / Complex64::new(h * h, 0.0);
    Ok(FdEstimate {
        d,
        dbar,
        d_dbar: lap * Complex64::new(0.25, 0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pt(x: f64, y: f64) -> EvalPoint {
        EvalPoint::new(x, y).unwrap()
    }

    #[test]
    fn constant_poly_jet() {
        let j = ScalarJet::from_poly(&Poly::from_real(&[1.0]), pt(0.3, -0.7), BidegreeOrder::symmetric(2));
        for a in 0..=2 {
            for b in 0..=2 {
                let expect = if a == 0 && b == 0 { 1.0 } else { 0.0 };
                assert_eq!(*j.coeff(a, b).unwrap(), c(expect, 0.0));
            }
        }
        assert_eq!(j.valid(), BidegreeOrder::symmetric(2));
    }

    #[test]
    fn identity_poly_jet_at_origin() {
        let j = ScalarJet::from_poly(
            &Poly::from_real(&[0.0, 1.0]),
            EvalPoint::origin(),
            BidegreeOrder::symmetric(2),
        );
        assert_eq!(*j.coeff(0, 0).unwrap(), c(0.0, 0.0));
        assert_eq!(*j.coeff(1, 0).unwrap(), c(1.0, 0.0));
        assert_eq!(*j.coeff(2, 0).unwrap(), c(0.0, 0.0));
        assert_eq!(*j.coeff(1, 1).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn square_poly_jet_matches_direct_expansion() {
        // (1 + u)^2 = 1 + 2u + u^2
        let j = ScalarJet::from_poly(
            &Poly::from_real(&[0.0, 0.0, 1.0]),
            pt(1.0, 0.0),
            BidegreeOrder::symmetric(2),
        );
        assert_eq!(*j.coeff(0, 0).unwrap(), c(1.0, 0.0));
        assert_eq!(*j.coeff(1, 0).unwrap(), c(2.0, 0.0));
        assert_eq!(*j.coeff(2, 0).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn identity_matrix_jet_is_multiplicative_unit() {
        let order = BidegreeOrder::symmetric(2);
        let p = pt(0.4, 0.1);
        let entry = |m, n, z: Complex64| BiPoly::new(vec![(m, n, z)]);
        let polys = [
            entry(1, 0, c(1.0, 2.0)),
            entry(0, 1, c(-1.0, 0.5)),
            entry(2, 1, c(0.3, 0.0)),
            entry(0, 0, c(2.0, 0.0)),
        ];
        let j = MatrixJet::from_fn(order, |a, b| {
            CMat::from_fn(2, 2, |r, s| {
                *ScalarJet::from_bipoly(&polys[2 * r + s], p, order).coeff(a, b).unwrap()
            })
        });
        let id = MatrixJet::identity(2, order);
        let prod = &id * &j;
        assert!((&prod - &j).max_coeff_norm() < 1e-15);
    }

    #[test]
    fn product_of_xi_and_xibar() {
        let order = BidegreeOrder::symmetric(1);
        let xi = ScalarJet::from_bipoly(&BiPoly::new(vec![(1, 0, c(1.0, 0.0))]), EvalPoint::origin(), order);
        let xib = ScalarJet::from_bipoly(&BiPoly::new(vec![(0, 1, c(1.0, 0.0))]), EvalPoint::origin(), order);
        let prod = &xi * &xib;
        assert_eq!(*prod.coeff(0, 0).unwrap(), c(0.0, 0.0));
        assert_eq!(*prod.coeff(1, 0).unwrap(), c(0.0, 0.0));
        assert_eq!(*prod.coeff(0, 1).unwrap(), c(0.0, 0.0));
        assert_eq!(*prod.coeff(1, 1).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn square_of_one_plus_modulus_squared() {
        // (1 + ξξ̄)² = 1 + 2ξξ̄ + ξ²ξ̄²; at ξ = 1:
        //   value 4, ∂ = 2(1+ξξ̄)ξ̄ = 4, ∂∂̄ = 2(1 + 2ξξ̄) = 6.
        let order = BidegreeOrder::symmetric(2);
        let s = ScalarJet::from_bipoly(
            &BiPoly::new(vec![(0, 0, c(1.0, 0.0)), (1, 1, c(1.0, 0.0))]),
            pt(1.0, 0.0),
            order,
        );
        let sq = &s * &s;
        assert_abs_diff_eq!(sq.value().re, 4.0, epsilon = 1e-14);
        assert_abs_diff_eq!(sq.derivative(1, 0).unwrap().re, 4.0, epsilon = 1e-14);
        assert_abs_diff_eq!(sq.derivative(1, 1).unwrap().re, 6.0, epsilon = 1e-14);
        assert_abs_diff_eq!(sq.coeff(1, 1).unwrap().re, 6.0, epsilon = 1e-14);
    }

    #[test]
    fn hconj_fixes_hermitian_constant_and_swaps_orders() {
        let h = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.5, -2.0), c(0.5, 2.0), c(-3.0, 0.0)]);
        let j = MatrixJet::constant(h, BidegreeOrder::new(2, 1));
        let jc = j.hconj();
        assert_eq!(jc.valid(), BidegreeOrder::new(1, 2));
        assert_eq!(jc.value(), j.value());
        assert!(jc.max_coeff_norm() == j.max_coeff_norm());
    }

    #[test]
    fn hconj_of_outer_product_numerator() {
        // f = (1, ξ) at the origin; numerator f ⊗ f† kept to orders (2, 1).
        let order = BidegreeOrder::symmetric(2);
        let f = VectorJet::from_components(&[
            ScalarJet::from_poly(&Poly::from_real(&[1.0]), EvalPoint::origin(), order),
            ScalarJet::from_poly(&Poly::from_real(&[0.0, 1.0]), EvalPoint::origin(), order),
        ])
        .unwrap();
        let num = f.outer(&f).truncated(BidegreeOrder::new(2, 1));
        assert_eq!(num.valid(), BidegreeOrder::new(2, 1));
        let conj = num.hconj();
        assert_eq!(conj.valid(), BidegreeOrder::new(1, 2));
        // The numerator is Hermitian, so conjugation only relabels slots.
        assert_eq!(
            conj.truncated(BidegreeOrder::new(1, 1)),
            num.truncated(BidegreeOrder::new(1, 1))
        );
    }

    #[test]
    fn inverse_of_constant() {
        let j = ScalarJet::constant(c(2.0, 0.0), BidegreeOrder::symmetric(2));
        let inv = j.inv(DEFAULT_DEGENERACY).unwrap();
        assert_eq!(*inv.value(), c(0.5, 0.0));
        assert!(inv.coeffs.iter().skip(1).all(|z| z.norm() == 0.0));
    }

    #[test]
    fn inverse_of_one_plus_modulus_squared_at_origin() {
        let s = ScalarJet::from_bipoly(
            &BiPoly::new(vec![(0, 0, c(1.0, 0.0)), (1, 1, c(1.0, 0.0))]),
            EvalPoint::origin(),
            BidegreeOrder::symmetric(1),
        );
        let inv = s.inv(DEFAULT_DEGENERACY).unwrap();
        assert_abs_diff_eq!(inv.value().re, 1.0);
        assert_abs_diff_eq!(inv.derivative(1, 0).unwrap().norm(), 0.0);
        assert_abs_diff_eq!(inv.derivative(0, 1).unwrap().norm(), 0.0);
        assert_abs_diff_eq!(inv.derivative(1, 1).unwrap().re, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn inverse_of_zero_is_degenerate() {
        let z = ScalarJet::constant(c(0.0, 0.0), BidegreeOrder::symmetric(1));
        assert!(matches!(z.inv(DEFAULT_DEGENERACY), Err(Error::DegeneratePoint { .. })));
    }

    #[test]
    fn derivatives_of_simple_polys() {
        let order = BidegreeOrder::symmetric(2);
        let xi = ScalarJet::from_poly(&Poly::from_real(&[0.0, 1.0]), pt(0.7, 0.2), order);
        let dxi = xi.d().unwrap();
        assert_eq!(*dxi.value(), c(1.0, 0.0));
        assert!(dxi.coeffs.iter().skip(1).all(|z| z.norm() == 0.0));
        assert_eq!(dxi.valid(), BidegreeOrder::new(1, 2));

        let hol = ScalarJet::from_poly(&Poly::from_real(&[1.0, -2.0, 3.0]), pt(0.7, 0.2), order);
        assert_eq!(hol.dbar().unwrap().max_coeff_norm(), 0.0);

        let sq = ScalarJet::from_poly(&Poly::from_real(&[0.0, 0.0, 1.0]), EvalPoint::origin(), order);
        let dd = sq.d().unwrap().d().unwrap();
        assert_eq!(*dd.value(), c(2.0, 0.0));
        assert_eq!(dd.valid(), BidegreeOrder::new(0, 2));
    }

    #[test]
    fn extraction_past_valid_order_fails() {
        let j = ScalarJet::one(BidegreeOrder::new(1, 0));
        assert!(matches!(j.coeff(0, 1), Err(Error::InsufficientOrder { .. })));
        assert!(matches!(j.dbar(), Err(Error::InsufficientOrder { .. })));
        assert!(j.d().unwrap().d().is_err());
    }

    #[test]
    fn checked_mul_rejects_mismatched_dims() {
        let a = MatrixJet::identity(2, BidegreeOrder::symmetric(1));
        let b = MatrixJet::identity(3, BidegreeOrder::symmetric(1));
        assert_eq!(a.try_mul(&b), Err(Error::DimensionMismatch(2, 3)));
    }

    #[test]
    fn fd_oracle_on_constant_field() {
        let m = CMat::from_element(2, 2, c(0.3, -1.0));
        let est = fd_oracle(|_| Ok(m.clone()), pt(0.1, 0.2), 1e-3).unwrap();
        assert!(est.d.norm() < 1e-12 && est.dbar.norm() < 1e-12 && est.d_dbar.norm() < 1e-8);
    }

    #[test]
    fn fd_oracle_rejects_bad_step() {
        assert!(fd_oracle(|_| Ok(CMat::zeros(1, 1)), EvalPoint::origin(), 0.0).is_err());
    }

    fn bipoly_strategy() -> impl Strategy<Value = BiPoly> {
        prop::collection::vec((0usize..3, 0usize..3, -2.0f64..2.0, -2.0f64..2.0), 1..5)
            .prop_map(|t| BiPoly::new(t.into_iter().map(|(m, n, re, im)| (m, n, c(re, im))).collect()))
    }

    proptest! {
        // Every slot of the jet product equals the symbolic derivative of the
        // symbolically multiplied polynomials.
        #[test]
        fn leibniz_matches_symbolic_product(a in bipoly_strategy(), b in bipoly_strategy(),
                                            x in -1.5f64..1.5, y in -1.5f64..1.5) {
            let p = pt(x, y);
            let order = BidegreeOrder::symmetric(3);
            let prod = &ScalarJet::from_bipoly(&a, p, order) * &ScalarJet::from_bipoly(&b, p, order);
            let sym = a.mul(&b);
            for i in 0..=3 {
                for j in 0..=3 {
                    let expect = sym.derivative(i, j).eval(p.xi());
                    let got = prod.derivative(i, j).unwrap();
                    prop_assert!((got - expect).norm() <= 1e-10 * (1.0 + expect.norm()));
                }
            }
        }

        #[test]
        fn hconj_is_an_involution(entries in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0), 4 * 6)) {
            let order = BidegreeOrder::new(1, 2);
            let mut it = entries.chunks(4);
            let j = MatrixJet::from_fn(order, |_, _| {
                let e = it.next().unwrap();
                CMat::from_row_slice(2, 2, &[c(e[0].0, e[0].1), c(e[1].0, e[1].1), c(e[2].0, e[2].1), c(e[3].0, e[3].1)])
            });
            prop_assert_eq!(j.hconj().hconj(), j);
        }

        #[test]
        fn inverse_times_self_is_one(a in bipoly_strategy(), shift in 1.0f64..3.0,
                                     x in -1.0f64..1.0, y in -1.0f64..1.0) {
            let mut poly = a;
            poly.terms.push((0, 0, c(shift * 4.0, 0.0)));
            let s = ScalarJet::from_bipoly(&poly, pt(x, y), BidegreeOrder::symmetric(3));
            prop_assume!(s.value().norm() > 0.5);
            let inv = s.inv(DEFAULT_DEGENERACY).unwrap();
            let one = &s * &inv;
            let resid = (&one - &ScalarJet::one(one.valid())).max_coeff_norm();
            prop_assert!(resid < 1e-12 * (1.0 + s.max_coeff_norm() * inv.max_coeff_norm()));
        }

        #[test]
        fn validity_never_grows(p1 in 0usize..4, q1 in 0usize..4, p2 in 0usize..4, q2 in 0usize..4) {
            let a = ScalarJet::one(BidegreeOrder::new(p1, q1));
            let b = ScalarJet::one(BidegreeOrder::new(p2, q2));
            let m = BidegreeOrder::new(p1.min(p2), q1.min(q2));
            prop_assert_eq!((&a * &b).valid(), m);
            prop_assert_eq!((&a + &b).valid(), m);
            if let Ok(d) = (&a * &b).d() {
                prop_assert_eq!(d.valid(), BidegreeOrder::new(m.p - 1, m.q));
            }
        }
    }
}
