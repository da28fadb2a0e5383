//! Projector towers generated from holomorphic seeds and the identities they
//! satisfy.
//!
//! A seed `f₀(ξ)` is a vector of `N` polynomials. Repeated application of the
//! raising operator `f ↦ (I − P(f)) ∂f` produces `f₁, …, f_{N−1}`, and each
//! `f_k` defines the rank-1 Hermitian projector `P_k = f_k f_k† / (f_k† f_k)`.
//! All fields are carried as jets at a single base point, so the derivatives
//! needed by the residual checks are read off exactly rather than differenced.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::jet::{BidegreeOrder, CMat, CVec, EvalPoint, MatrixJet, Poly, ScalarJet, VectorJet, DEFAULT_DEGENERACY};

const FIRST: BidegreeOrder = BidegreeOrder::symmetric(1);

/// Holomorphic seed `f₀ = (f⁰, …, f^{N−1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct HoloSeed {
    pub label: String,
    components: Vec<Poly>,
}

impl HoloSeed {
    pub fn new(label: impl Into<String>, components: Vec<Poly>) -> Result<Self> {
        if components.len() < 2 {
            return Err(Error::InvalidSeed(format!(
                "need at least 2 components, got {}",
                components.len()
            )));
        }
        if let Some(i) = components.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidSeed(format!("component {i} has non-finite coefficients")));
        }
        if components.iter().all(Poly::is_zero) {
            return Err(Error::InvalidSeed("all components are the zero polynomial".into()));
        }
        Ok(Self {
            label: label.into(),
            components,
        })
    }

    /// `(√C(N−1, j) ξ^j)_j`, the standard finite-action seed.
    pub fn veronese(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSeed(format!("need N >= 2, got {n}")));
        }
        let components = (0..n)
            .map(|j| {
                let binom = (0..j).fold(1.0, |acc, i| acc * (n - 1 - i) as f64 / (i + 1) as f64);
                Poly::monomial(j, Complex64::new(binom.sqrt(), 0.0))
            })
            .collect();
        Self::new(format!("veronese-{n}"), components)
    }

    pub fn n(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Poly] {
        &self.components
    }

    pub fn degree(&self) -> usize {
        self.components.iter().filter_map(Poly::degree).max().unwrap_or(0)
    }

    /// The same curve written in the chart `w = 1/ξ`: `w^d f(1/w)`.
    pub fn at_infinity(&self) -> HoloSeed {
        let d = self.degree();
        HoloSeed {
            label: format!("{}@inf", self.label),
            components: self.components.iter().map(|p| p.reversed(d)).collect(),
        }
    }

    pub fn eval(&self, xi: Complex64) -> CVec {
        CVec::from_iterator(self.n(), self.components.iter().map(|p| p.eval(xi)))
    }

    pub fn vector_jet(&self, point: EvalPoint, order: BidegreeOrder) -> VectorJet {
        let comps: Vec<ScalarJet> = self
            .components
            .iter()
            .map(|p| ScalarJet::from_poly(p, point, order))
            .collect();
        VectorJet::from_components(&comps).expect("seed has at least two components")
    }

    /// Working order that leaves every tower level with at least `(2, 2)`.
    pub fn default_order(&self) -> BidegreeOrder {
        BidegreeOrder::symmetric(self.n() + 1)
    }
}

/// `P = f f† / (f† f)`.
pub fn projector_from_vector(f: &VectorJet, eps: f64) -> Result<MatrixJet> {
    let inv = f.inner(f).inv(eps)?;
    Ok(f.outer(f).times(&inv))
}

fn project_out(f: &VectorJet, g: &VectorJet, eps: f64) -> Result<VectorJet> {
    let inv = f.inner(f).inv(eps)?;
    let coef = &f.inner(g) * &inv;
    Ok(g - &f.times(&coef))
}

/// `(I − P(f)) ∂f`.
pub fn raise_vector(f: &VectorJet, eps: f64) -> Result<VectorJet> {
    project_out(f, &f.d()?, eps)
}

/// `(I − P(f)) ∂̄f`.
pub fn lower_vector(f: &VectorJet, eps: f64) -> Result<VectorJet> {
    project_out(f, &f.dbar()?, eps)
}

/// `∂P P ∂̄P / tr(∂P P ∂̄P)`.
pub fn raise_projector(p: &MatrixJet, eps: f64) -> Result<MatrixJet> {
    let num = &(&p.d()? * p) * &p.dbar()?;
    let inv = num.trace().inv(eps)?;
    Ok(num.times(&inv))
}

/// `∂̄P P ∂P / tr(∂̄P P ∂P)`.
pub fn lower_projector(p: &MatrixJet, eps: f64) -> Result<MatrixJet> {
    let num = &(&p.dbar()? * p) * &p.d()?;
    let inv = num.trace().inv(eps)?;
    Ok(num.times(&inv))
}

/// Value and first/mixed derivatives of a matrix field at the base point.
#[derive(Debug, Clone)]
pub struct FieldDerivs {
    pub value: CMat,
    pub d: CMat,
    pub dbar: CMat,
    pub d_dbar: CMat,
}

impl FieldDerivs {
    pub fn of(jet: &MatrixJet) -> Result<Self> {
        jet.require(FIRST)?;
        Ok(Self {
            value: jet.value().clone(),
            d: jet.derivative(1, 0)?,
            dbar: jet.derivative(0, 1)?,
            d_dbar: jet.derivative(1, 1)?,
        })
    }

    fn zeros(n: usize) -> Self {
        let z = CMat::zeros(n, n);
        Self {
            value: z.clone(),
            d: z.clone(),
            dbar: z.clone(),
            d_dbar: z,
        }
    }

    fn axpy(&mut self, s: Complex64, other: &FieldDerivs) {
        self.value += &other.value * s;
        self.d += &other.d * s;
        self.dbar += &other.dbar * s;
        self.d_dbar += &other.d_dbar * s;
    }

    /// `Σ λ_i F_i`, using linearity of the derivatives.
    pub fn combination(fields: &[FieldDerivs], weights: &[Complex64]) -> Result<Self> {
        if fields.len() != weights.len() {
            return Err(Error::DimensionMismatch(fields.len(), weights.len()));
        }
        let n = fields.first().map(|f| f.value.nrows()).unwrap_or(0);
        let mut acc = Self::zeros(n);
        for (f, &w) in fields.iter().zip(weights) {
            acc.axpy(w, f);
        }
        Ok(acc)
    }

    /// `‖[∂∂̄F, F]‖`.
    pub fn el_residual(&self) -> f64 {
        commutator(&self.d_dbar, &self.value).norm()
    }
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// The `N` projector fields at one base point.
#[derive(Debug, Clone)]
pub struct ProjectorTower {
    pub seed: HoloSeed,
    pub point: EvalPoint,
    pub order: BidegreeOrder,
    /// `f_0 … f_{N−1}`.
    pub vectors: Vec<VectorJet>,
    /// `P_0 … P_{N−1}`.
    pub levels: Vec<MatrixJet>,
}

/// Builds the full tower. Fails with the offending level when some `f_k†f_k`
/// falls below `eps`.
pub fn build_tower(seed: &HoloSeed, point: EvalPoint, order: BidegreeOrder) -> Result<ProjectorTower> {
    build_levels(seed, point, order, seed.n(), DEFAULT_DEGENERACY)
}

/// Builds the first `count` levels of the tower.
pub fn build_levels(
    seed: &HoloSeed,
    point: EvalPoint,
    order: BidegreeOrder,
    count: usize,
    eps: f64,
) -> Result<ProjectorTower> {
    let count = count.min(seed.n());
    if count == 0 {
        return Err(Error::InvalidArgument("tower needs at least one level".into()));
    }
    let needed = BidegreeOrder::symmetric(count);
    if !order.covers(needed) {
        return Err(Error::InsufficientOrder {
            needed,
            available: order,
        });
    }
    let mut vectors = Vec::with_capacity(count);
    let mut levels = Vec::with_capacity(count);
    let mut f = seed.vector_jet(point, order);
    for k in 0..count {
        let inv = f.inner(&f).inv(eps).map_err(|e| e.at_level(k))?;
        levels.push(f.outer(&f).times(&inv));
        if k + 1 < count {
            let df = f.d()?;
            let coef = &f.inner(&df) * &inv;
            let next = &df - &f.times(&coef);
            vectors.push(std::mem::replace(&mut f, next));
        }
    }
    vectors.push(f);
    Ok(ProjectorTower {
        seed: seed.clone(),
        point,
        order,
        vectors,
        levels,
    })
}

impl ProjectorTower {
    pub fn n(&self) -> usize {
        self.seed.n()
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn level(&self, k: usize) -> Result<&MatrixJet> {
        self.levels
            .get(k)
            .ok_or_else(|| Error::InvalidArgument(format!("level {k} out of range 0..{}", self.len())))
    }

    pub fn derivs(&self, k: usize) -> Result<FieldDerivs> {
        FieldDerivs::of(self.level(k)?)
    }

    pub fn all_derivs(&self) -> Result<Vec<FieldDerivs>> {
        (0..self.len()).map(|k| self.derivs(k)).collect()
    }

    /// Copy with every jet cut down to `order`.
    pub fn truncated(&self, order: BidegreeOrder) -> Self {
        Self {
            seed: self.seed.clone(),
            point: self.point,
            order: self.order.min(order),
            vectors: self.vectors.iter().map(|v| v.truncated(order)).collect(),
            levels: self.levels.iter().map(|p| p.truncated(order)).collect(),
        }
    }

    pub fn values(&self) -> Vec<CMat> {
        self.levels.iter().map(|p| p.value().clone()).collect()
    }

    /// Worst of `‖P² − P‖`, `‖P† − P‖` and `|tr P − 1|` over the levels.
    pub fn projector_defect(&self) -> f64 {
        self.levels
            .iter()
            .map(|p| projector_defect(p.value()))
            .fold(0.0, f64::max)
    }
}

pub fn projector_defect(p: &CMat) -> f64 {
    let idem = (p * p - p).norm();
    let herm = (p.adjoint() - p).norm();
    let tr = (p.trace() - Complex64::new(1.0, 0.0)).norm();
    idem.max(herm).max(tr)
}

/// `‖[∂∂̄P, P]‖`.
pub fn el_residual_projector(p: &MatrixJet) -> Result<f64> {
    Ok(FieldDerivs::of(p)?.el_residual())
}

/// Norm of `(I − P)[∂∂̄f − ((f†∂̄f)∂f + (f†∂f)∂̄f)/f†f]`.
pub fn el_residual_vector(f: &VectorJet, eps: f64) -> Result<f64> {
    f.require(FIRST)?;
    let v = f.value();
    let d = f.derivative(1, 0)?;
    let db = f.derivative(0, 1)?;
    let ddb = f.derivative(1, 1)?;
    let nn = v.dotc(v);
    if nn.norm().is_nan() || nn.norm() <= eps {
        return Err(Error::degenerate(None, nn.norm(), eps));
    }
    let inner = &ddb - (&d * v.dotc(&db) + &db * v.dotc(&d)) / nn;
    let projected = &inner - v * (v.dotc(&inner) / nn);
    Ok(projected.norm())
}

/// Worst deviation from `P_k P_j = δ_kj P_k` and `Σ P_j = I`.
pub fn orthocompleteness_residual(tower: &ProjectorTower) -> f64 {
    let vals = tower.values();
    let n = tower.n();
    let mut worst: f64 = 0.0;
    for (k, pk) in vals.iter().enumerate() {
        for (j, pj) in vals.iter().enumerate() {
            let prod = pk * pj;
            let r = if k == j { (prod - pk).norm() } else { prod.norm() };
            worst = worst.max(r);
        }
    }
    let sum = vals.iter().fold(CMat::zeros(n, n), |acc, p| acc + p);
    worst.max((sum - CMat::identity(n, n)).norm())
}

/// `α_k = tr(P_k ∂P_k ∂̄P_k)` and its partner `ᾱ_k = tr(∂P_k P_k ∂̄P_k)`.
///
/// The two traces are computed independently; both are real, but they are
/// not complex conjugates of one another.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaCoeffs {
    pub level: usize,
    pub alpha: Complex64,
    pub alpha_bar: Complex64,
    /// `tr(∂P_k ∂̄P_k)`, the Lagrangian density.
    pub density: Complex64,
}

impl AlphaCoeffs {
    pub fn from_derivs(level: usize, f: &FieldDerivs) -> Self {
        Self {
            level,
            alpha: (&f.value * &f.d * &f.dbar).trace(),
            alpha_bar: (&f.d * &f.value * &f.dbar).trace(),
            density: (&f.d * &f.dbar).trace(),
        }
    }

    /// Largest imaginary part among the three traces.
    pub fn imag_defect(&self) -> f64 {
        self.alpha
            .im
            .abs()
            .max(self.alpha_bar.im.abs())
            .max(self.density.im.abs())
    }

    /// `|α + ᾱ − tr(∂P ∂̄P)|`.
    pub fn sum_defect(&self) -> f64 {
        (self.alpha + self.alpha_bar - self.density).norm()
    }
}

pub fn alpha_coeffs(tower: &ProjectorTower, k: usize) -> Result<AlphaCoeffs> {
    Ok(AlphaCoeffs::from_derivs(k, &tower.derivs(k)?))
}

/// `‖∂∂̄P_k − (α_k P_{k−1} − (α_k + ᾱ_k) P_k + ᾱ_k P_{k+1})‖`, with absent
/// neighbours at the ends of the tower taken as zero.
pub fn decomposition_residual(tower: &ProjectorTower, k: usize) -> Result<f64> {
    let derivs = tower.derivs(k)?;
    let a = AlphaCoeffs::from_derivs(k, &derivs);
    let mut rhs = &derivs.value * -(a.alpha + a.alpha_bar);
    if k > 0 {
        rhs += tower.level(k - 1)?.value() * a.alpha;
    }
    if k + 1 < tower.len() {
        rhs += tower.level(k + 1)?.value() * a.alpha_bar;
    }
    Ok((derivs.d_dbar - rhs).norm())
}

/// Residuals of the neighbour relations between consecutive levels.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DerivativeOrthogonality {
    /// `P_{k+1}∂P_{k+1} = −∂P_k P_k` and `∂̄P_{k+1}P_{k+1} = −P_k∂̄P_k`.
    pub neighbours: f64,
    /// `P_0 ∂P_0 = 0` and `P_{N−1} ∂̄P_{N−1} = 0`.
    pub outermost: f64,
    /// `Σ_{j<k} ∂P_j = −P_k∂P_k` and its conjugate.
    pub partial_sums: f64,
    /// `∂P_k S_k = P_k∂P_k`, `S_k ∂P_k = 0` and conjugates, `S_k = Σ_{j<k} P_j`.
    pub lower_block: f64,
}

impl DerivativeOrthogonality {
    pub fn max(&self) -> f64 {
        self.neighbours
            .max(self.outermost)
            .max(self.partial_sums)
            .max(self.lower_block)
    }
}

pub fn derivative_orthogonality_residual(tower: &ProjectorTower) -> Result<DerivativeOrthogonality> {
    let ds = tower.all_derivs()?;
    let n = tower.n();
    let mut r = DerivativeOrthogonality::default();
    for k in 0..ds.len().saturating_sub(1) {
        let (lo, hi) = (&ds[k], &ds[k + 1]);
        let a = (&hi.value * &hi.d + &lo.d * &lo.value).norm();
        let b = (&hi.dbar * &hi.value + &lo.value * &lo.dbar).norm();
        r.neighbours = r.neighbours.max(a).max(b);
    }
    r.outermost = (&ds[0].value * &ds[0].d).norm();
    if ds.len() == n {
        let top = &ds[n - 1];
        r.outermost = r.outermost.max((&top.value * &top.dbar).norm());
    }

    let mut sum_d = CMat::zeros(n, n);
    let mut sum_db = CMat::zeros(n, n);
    let mut sum_p = CMat::zeros(n, n);
    for f in &ds {
        let pdp = &f.value * &f.d;
        let dbp_p = &f.dbar * &f.value;
        r.partial_sums = r
            .partial_sums
            .max((&sum_d + &pdp).norm())
            .max((&sum_db + &dbp_p).norm());
        r.lower_block = r
            .lower_block
            .max((&f.d * &sum_p - &pdp).norm())
            .max((&sum_p * &f.d).norm())
            .max((&sum_p * &f.dbar - &dbp_p).norm())
            .max((&f.dbar * &sum_p).norm());
        sum_d += &f.d;
        sum_db += &f.dbar;
        sum_p += &f.value;
    }
    Ok(r)
}

/// `P = Σ λ_i P_i` with its diagnostics.
#[derive(Debug, Clone)]
pub struct Combination {
    pub jet: MatrixJet,
    /// `‖[∂∂̄P, P]‖`.
    pub el_residual: f64,
    /// `‖P² − P‖`.
    pub idempotency_residual: f64,
}

pub fn combine_projectors(tower: &ProjectorTower, weights: &[Complex64]) -> Result<Combination> {
    check_weights(weights, tower.len())?;
    let jet = tower
        .levels
        .iter()
        .zip(weights)
        .map(|(p, &w)| p.scale(w))
        .reduce(|a, b| &a + &b)
        .expect("non-empty tower");
    let el_residual = el_residual_projector(&jet)?;
    let v = jet.value();
    let idempotency_residual = (v * v - v).norm();
    Ok(Combination {
        jet,
        el_residual,
        idempotency_residual,
    })
}

pub(crate) fn check_weights(weights: &[Complex64], n: usize) -> Result<()> {
    if weights.len() != n {
        return Err(Error::DimensionMismatch(weights.len(), n));
    }
    if weights.iter().all(|w| w.norm() == 0.0) {
        return Err(Error::InvalidArgument("all weights are zero".into()));
    }
    Ok(())
}
