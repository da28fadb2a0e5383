//! Soliton surfaces `X_k` in su(N), the surfaces `Y_k` built over them, and
//! the quantities attached to both (metric, action, multileaf combinations).
//!
//! Closed forms come straight from the projector tower:
//!
//! ```text
//! X_k = −i(P_k + 2 Σ_{j<k} P_j) + i c_k I,        c_k = (1 + 2k)/N
//! ∂X_k = −i[∂P_k, P_k],  ∂̄X_k = i[∂̄P_k, P_k]
//! ∂Y_k = −i[∂X_k, X_k],  ∂̄Y_k = i[∂̄X_k, X_k]
//! ```
//!
//! The path-integration routines integrate the same 1-forms along polylines
//! with composite Gauss–Legendre quadrature, which exercises closedness of
//! the forms independently of the closed-form algebra.

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use serde::Serialize;

use crate::algebra::algebra_defects;
use crate::error::{Error, Result};
use crate::jet::{BidegreeOrder, CMat, EvalPoint, MatrixJet, DEFAULT_DEGENERACY};
use crate::model::{build_levels, build_tower, check_weights, commutator, FieldDerivs, HoloSeed, ProjectorTower};
use crate::quad::{pairwise_sum, pairwise_sum_f64, GaussLegendre};

fn i() -> Complex64 {
    Complex64::i()
}

/// `c_k = (1 + 2k)/N`.
pub fn c_k(k: usize, n: usize) -> f64 {
    (1 + 2 * k) as f64 / n as f64
}

/// Value and complex tangents of a surface at one point.
#[derive(Debug, Clone)]
pub struct ImmersionSample {
    pub n: usize,
    pub level: usize,
    pub c_k: f64,
    pub x: CMat,
    pub dx: CMat,
    pub dbarx: CMat,
}

impl ImmersionSample {
    /// Worst of `‖X† + X‖` and `|tr X|`.
    pub fn algebra_defect(&self) -> f64 {
        let (ah, tr) = algebra_defects(&self.x);
        ah.max(tr)
    }

    /// `‖∂̄X + (∂X)†‖`; zero for a real surface.
    pub fn tangent_defect(&self) -> f64 {
        (&self.dbarx + self.dx.adjoint()).norm()
    }
}

fn check_level(tower: &ProjectorTower, k: usize) -> Result<()> {
    if k >= tower.len() {
        return Err(Error::InvalidArgument(format!(
            "level {k} out of range 0..{}",
            tower.len()
        )));
    }
    Ok(())
}

fn lower_sum(values: &[CMat], k: usize, n: usize) -> CMat {
    values[..k].iter().fold(CMat::zeros(n, n), |acc, p| acc + p)
}

fn closed_value(values: &[CMat], k: usize, n: usize) -> CMat {
    let s = lower_sum(values, k, n);
    (&values[k] + s * Complex64::new(2.0, 0.0)) * -i() + CMat::identity(n, n) * (i() * c_k(k, n))
}

/// `X_k` in closed form with tangents from the commutator 1-form.
pub fn immersion_closed_form(tower: &ProjectorTower, k: usize) -> Result<ImmersionSample> {
    check_level(tower, k)?;
    immersion_at_partial(tower, k)
}

/// `X_k` as a jet, built linearly from the projector jets.
pub fn immersion_jet(tower: &ProjectorTower, k: usize) -> Result<MatrixJet> {
    check_level(tower, k)?;
    let n = tower.n();
    let two = Complex64::new(2.0, 0.0);
    let mut acc = tower.levels[k].clone();
    for p in &tower.levels[..k] {
        acc = &acc + &p.scale(two);
    }
    let shift = MatrixJet::identity(n, acc.valid()).scale(i() * c_k(k, n));
    Ok(&acc.scale(-i()) + &shift)
}

/// Tangents of the closed form, `−i(∂P_k + 2Σ_{j<k} ∂P_j)` and its `∂̄`
/// partner, against the commutator tangents. Zero exactly when the closed form
/// integrates the 1-form.
pub fn closed_form_tangent_residual(tower: &ProjectorTower, k: usize) -> Result<f64> {
    let sample = immersion_closed_form(tower, k)?;
    let ds = tower.all_derivs()?;
    let two = Complex64::new(2.0, 0.0);
    let (mut d, mut db) = (ds[k].d.clone(), ds[k].dbar.clone());
    for f in &ds[..k] {
        d += &f.d * two;
        db += &f.dbar * two;
    }
    Ok((d * -i() - &sample.dx).norm().max((db * -i() - &sample.dbarx).norm()))
}

/// `(∂Y, ∂̄Y) = (−i[∂X, X], i[∂̄X, X])` for an arbitrary matrix field.
pub fn stacked_tangents(x: &CMat, dx: &CMat, dbarx: &CMat) -> (CMat, CMat) {
    (commutator(dx, x) * -i(), commutator(dbarx, x) * i())
}

/// `Y_k`: tangents from the stacked 1-form, value `−X_k` (the traceless
/// choice of integration constant).
pub fn stacked_surface(tower: &ProjectorTower, k: usize) -> Result<ImmersionSample> {
    let xs = immersion_closed_form(tower, k)?;
    let (dy, dbary) = stacked_tangents(&xs.x, &xs.dx, &xs.dbarx);
    Ok(ImmersionSample {
        n: xs.n,
        level: k,
        c_k: xs.c_k,
        x: -xs.x,
        dx: dy,
        dbarx: dbary,
    })
}

/// Worst of `‖X_k + Y_k‖`, `‖∂X_k + ∂Y_k‖` and `‖∂̄X_k + ∂̄Y_k‖`.
pub fn idempotency_residual(tower: &ProjectorTower, k: usize) -> Result<f64> {
    let xs = immersion_closed_form(tower, k)?;
    let ys = stacked_surface(tower, k)?;
    Ok((&xs.x + &ys.x)
        .norm()
        .max((&xs.dx + &ys.dx).norm())
        .max((&xs.dbarx + &ys.dbarx).norm()))
}

/// Tangent part of the idempotency residual for any matrix field given as a jet.
pub fn field_idempotency_residual(x: &MatrixJet) -> Result<f64> {
    let f = FieldDerivs::of(x)?;
    let (dy, dbary) = stacked_tangents(&f.value, &f.d, &f.dbar);
    Ok((&f.d + dy).norm().max((&f.dbar + dbary).norm()))
}

/// Minimal-polynomial residual: cubic for interior levels, quadratic at the
/// holomorphic (`k = 0`) and antiholomorphic (`k = N−1`) ends.
pub fn minimal_polynomial_residual(sample: &ImmersionSample) -> f64 {
    let n = sample.n;
    let id = CMat::identity(n, n);
    let x = &sample.x;
    let shifted = |root: f64| x - &id * (i() * root);
    let c = sample.c_k;
    if sample.level == 0 {
        (shifted(c) * shifted(c - 1.0)).norm()
    } else if sample.level == n - 1 {
        let c0 = c_k(0, n);
        (shifted(-c0) * shifted(-(c0 - 1.0))).norm()
    } else {
        (shifted(c) * shifted(c - 1.0) * shifted(c - 2.0)).norm()
    }
}

/// Expected spectrum of `−iX_k`: `c−1` once, `c−2` with multiplicity `k`,
/// `c` with multiplicity `N−k−1`, sorted ascending.
pub fn expected_spectrum(level: usize, n: usize) -> Vec<f64> {
    let c = c_k(level, n);
    let mut ev: Vec<f64> = std::iter::once(c - 1.0)
        .chain(std::iter::repeat_n(c - 2.0, level))
        .chain(std::iter::repeat_n(c, n - level - 1))
        .collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Max distance between the eigenvalues of the Hermitian `−iX` and
/// [`expected_spectrum`], multiplicities included.
pub fn spectral_residual(sample: &ImmersionSample) -> f64 {
    let h = &sample.x * -i();
    let h = (&h + h.adjoint()) * Complex64::new(0.5, 0.0);
    let mut ev: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev.iter()
        .zip(expected_spectrum(sample.level, sample.n))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// `‖Σ_k (−1)^k X_k‖`.
pub fn alternating_sum_residual(tower: &ProjectorTower) -> Result<f64> {
    if tower.len() != tower.n() {
        return Err(Error::InvalidArgument("alternating sum needs the full tower".into()));
    }
    let n = tower.n();
    let values = tower.values();
    let mut sum = CMat::zeros(n, n);
    for k in 0..n {
        let x = closed_value(&values, k, n);
        if k % 2 == 0 {
            sum += x;
        } else {
            sum -= x;
        }
    }
    Ok(sum.norm())
}

/// `X = Σ λ_k X_k` with its diagnostics.
#[derive(Debug, Clone)]
pub struct Multileaf {
    pub jet: MatrixJet,
    /// `‖[∂∂̄X, X]‖`.
    pub el_residual: f64,
    /// `‖X† + X‖`; reported only for real weights.
    pub anti_hermitian: Option<f64>,
    /// `|tr X|`; reported only for real weights.
    pub trace: Option<f64>,
}

pub fn multileaf(tower: &ProjectorTower, weights: &[Complex64]) -> Result<Multileaf> {
    check_weights(weights, tower.len())?;
    let mut jet: Option<MatrixJet> = None;
    for (k, &w) in weights.iter().enumerate() {
        let term = immersion_jet(tower, k)?.scale(w);
        jet = Some(match jet {
            Some(acc) => &acc + &term,
            None => term,
        });
    }
    let jet = jet.expect("non-empty weights");
    let el_residual = FieldDerivs::of(&jet)?.el_residual();
    let real = weights.iter().all(|w| w.im == 0.0);
    let (ah, tr) = algebra_defects(jet.value());
    Ok(Multileaf {
        jet,
        el_residual,
        anti_hermitian: real.then_some(ah),
        trace: real.then_some(tr),
    })
}

/// Induced metric on `X_k` in conformal coordinates: only `g₁₂ = g₂₁` is nonzero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricSample {
    pub g11: f64,
    pub g12: f64,
    pub g22: f64,
    /// `tr(∂X_k ∂̄X_k)`, which should equal `−g₁₂`.
    pub surface_trace: f64,
}

impl MetricSample {
    pub fn cross_check_defect(&self) -> f64 {
        (self.surface_trace + self.g12).abs()
    }
}

pub fn metric_at(tower: &ProjectorTower, k: usize) -> Result<MetricSample> {
    let dp = tower.derivs(k)?;
    let xs = immersion_closed_form(tower, k)?;
    let g12 = (&dp.d * &dp.dbar).trace().re;
    Ok(MetricSample {
        g11: 0.0,
        g12,
        g22: 0.0,
        surface_trace: (&xs.dx * &xs.dbarx).trace().re,
    })
}

/// Polyline integration path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSpec {
    pub waypoints: Vec<EvalPoint>,
    pub segments_per_leg: usize,
    /// Maximum number of panel doublings.
    pub refinement: usize,
    pub tol: f64,
}

impl PathSpec {
    pub fn new(waypoints: Vec<EvalPoint>) -> Result<Self> {
        if waypoints.len() < 2 {
            return Err(Error::InvalidArgument("a path needs at least two waypoints".into()));
        }
        Ok(Self {
            waypoints,
            segments_per_leg: 1,
            refinement: 8,
            tol: 1e-9,
        })
    }

    pub fn straight(a: EvalPoint, b: EvalPoint) -> Self {
        Self::new(vec![a, b]).expect("two waypoints")
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn start(&self) -> EvalPoint {
        self.waypoints[0]
    }

    pub fn end(&self) -> EvalPoint {
        *self.waypoints.last().unwrap()
    }
}

/// Result of integrating a matrix-valued 1-form along a path.
#[derive(Debug, Clone)]
pub struct PathIntegral {
    pub value: CMat,
    /// Change between the last two refinements.
    pub est_error: f64,
    pub refinements: usize,
    pub evaluations: usize,
}

const PATH_RULE_ORDER: usize = 8;

/// Integrates `∂F dξ + ∂̄F dξ̄` along `path`, where `tangents(ξ)` returns
/// `(∂F, ∂̄F)`. Panels are doubled until the total changes by less than
/// `path.tol`.
pub fn integrate_one_form<F>(path: &PathSpec, n: usize, tangents: F) -> Result<PathIntegral>
where
    F: Fn(EvalPoint) -> Result<(CMat, CMat)>,
{
    let gl = GaussLegendre::new(PATH_RULE_ORDER);
    let mut evaluations = 0;
    let mut estimate = |panels: usize| -> Result<CMat> {
        let mut legs = Vec::with_capacity(path.waypoints.len() - 1);
        for w in path.waypoints.windows(2) {
            let (a, b) = (w[0].xi(), w[1].xi());
            let delta = b - a;
            if delta.norm() == 0.0 {
                continue;
            }
            let mut terms = Vec::with_capacity(panels * PATH_RULE_ORDER);
            for (t, wt) in gl.composite(0.0, 1.0, panels) {
                let (d, db) = tangents(EvalPoint::from_complex(a + delta * t)?)?;
                evaluations += 1;
                terms.push((d * delta + db * delta.conj()) * Complex64::new(wt, 0.0));
            }
            legs.push(pairwise_sum(&terms).unwrap_or_else(|| CMat::zeros(n, n)));
        }
        Ok(pairwise_sum(&legs).unwrap_or_else(|| CMat::zeros(n, n)))
    };

    let mut panels = path.segments_per_leg.max(1);
    let mut prev = estimate(panels)?;
    let mut last_change = f64::INFINITY;
    for r in 1..=path.refinement {
        panels *= 2;
        let cur = estimate(panels)?;
        last_change = (&cur - &prev).norm();
        if last_change < path.tol {
            return Ok(PathIntegral {
                value: cur,
                est_error: last_change,
                refinements: r,
                evaluations,
            });
        }
        prev = cur;
    }
    Err(Error::NoConvergence {
        refinements: path.refinement,
        last_change,
        tol: path.tol,
    })
}

fn traceless(m: CMat) -> CMat {
    let n = m.nrows();
    let shift = m.trace() / Complex64::new(n as f64, 0.0);
    m - CMat::identity(n, n) * shift
}

fn node_tower(seed: &HoloSeed, k: usize, point: EvalPoint) -> Result<ProjectorTower> {
    build_levels(seed, point, BidegreeOrder::symmetric(k + 1), k + 1, DEFAULT_DEGENERACY)
}

fn check_seed_level(seed: &HoloSeed, k: usize) -> Result<()> {
    if k >= seed.n() {
        return Err(Error::InvalidArgument(format!(
            "level {k} out of range 0..{}",
            seed.n()
        )));
    }
    Ok(())
}

/// `X_k(end) − X_k(start)` by integrating `dX_k = i(−[∂P_k, P_k]dξ + [∂̄P_k, P_k]dξ̄)`.
pub fn integrate_immersion(seed: &HoloSeed, k: usize, path: &PathSpec) -> Result<PathIntegral> {
    check_seed_level(seed, k)?;
    let mut out = integrate_one_form(path, seed.n(), |pt| {
        let d = node_tower(seed, k, pt)?.derivs(k)?;
        Ok((commutator(&d.d, &d.value) * -i(), commutator(&d.dbar, &d.value) * i()))
    })?;
    out.value = traceless(out.value);
    Ok(out)
}

/// `Y_k(end) − Y_k(start)` by integrating `dY_k = −i[∂X_k, X_k]dξ + i[∂̄X_k, X_k]dξ̄`.
pub fn integrate_stacked(seed: &HoloSeed, k: usize, path: &PathSpec) -> Result<PathIntegral> {
    check_seed_level(seed, k)?;
    let mut out = integrate_one_form(path, seed.n(), |pt| {
        let xs = immersion_at_partial(&node_tower(seed, k, pt)?, k)?;
        Ok(stacked_tangents(&xs.x, &xs.dx, &xs.dbarx))
    })?;
    out.value = traceless(out.value);
    Ok(out)
}

fn immersion_at_partial(tower: &ProjectorTower, k: usize) -> Result<ImmersionSample> {
    let n = tower.n();
    let values = tower.values();
    let dp = tower.derivs(k)?;
    Ok(ImmersionSample {
        n,
        level: k,
        c_k: c_k(k, n),
        x: closed_value(&values, k, n),
        dx: commutator(&dp.d, &dp.value) * -i(),
        dbarx: commutator(&dp.dbar, &dp.value) * i(),
    })
}

/// Closed-form `X_k` at a point, building only the levels it needs.
pub fn immersion_at(seed: &HoloSeed, k: usize, point: EvalPoint) -> Result<ImmersionSample> {
    check_seed_level(seed, k)?;
    immersion_at_partial(&node_tower(seed, k, point)?, k)
}

/// Base point for path integrals: the origin, or the first non-degenerate
/// point of the spiral `r_j = 0.1 j`, `θ_j = j·2.39996…` (golden angle),
/// `j = 1 … 200`.
pub fn base_point(seed: &HoloSeed) -> Result<EvalPoint> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    std::iter::once(EvalPoint::origin())
        .chain((1..=200).map(|j| {
            let (r, t) = (0.1 * j as f64, golden * j as f64);
            EvalPoint {
                xi1: r * t.cos(),
                xi2: r * t.sin(),
            }
        }))
        .find(|&p| build_tower(seed, p, seed.default_order()).is_ok())
        .ok_or_else(|| {
            Error::InvalidSeed(format!(
                "seed {} is degenerate along the whole base-point spiral",
                seed.label
            ))
        })
}

/// Quadrature settings for the action integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadConfig {
    /// Gauss–Legendre points per panel.
    pub rule_order: usize,
    pub r_panels: usize,
    pub theta_panels: usize,
    pub tol: f64,
    pub max_refinements: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            rule_order: 8,
            r_panels: 2,
            theta_panels: 4,
            tol: 1e-7,
            max_refinements: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActionResult {
    pub value: f64,
    pub est_error: f64,
    /// Contribution of `|ξ| ≤ 1`.
    pub inner: f64,
    /// Contribution of `|ξ| > 1`, computed as `|w| < 1` with `w = 1/ξ`.
    pub outer: f64,
    pub chart_split: String,
    pub refinements: usize,
}

fn density(seed: &HoloSeed, k: usize, point: EvalPoint) -> Result<f64> {
    let d = node_tower(seed, k, point)?.derivs(k)?;
    Ok((&d.d * &d.dbar).trace().re)
}

fn disk_integral(seed: &HoloSeed, k: usize, gl: &GaussLegendre, r_panels: usize, t_panels: usize) -> Result<f64> {
    let thetas = gl.composite(0.0, 2.0 * std::f64::consts::PI, t_panels);
    let mut rows = Vec::with_capacity(r_panels * gl.nodes.len());
    for (r, wr) in gl.composite(0.0, 1.0, r_panels) {
        let mut row = Vec::with_capacity(thetas.len());
        for &(t, wt) in &thetas {
            let p = EvalPoint {
                xi1: r * t.cos(),
                xi2: r * t.sin(),
            };
            row.push(wt * density(seed, k, p)?);
        }
        rows.push(wr * r * pairwise_sum_f64(&row));
    }
    Ok(pairwise_sum_f64(&rows))
}

/// `∫ tr(∂P_k ∂̄P_k) dξ¹dξ²` over the sphere, split into the unit disk and the
/// chart at infinity (where the seed is replaced by `w^d f(1/w)`; both the
/// projectors and the conformally invariant density are unchanged).
pub fn action(seed: &HoloSeed, k: usize, cfg: &QuadConfig) -> Result<ActionResult> {
    check_seed_level(seed, k)?;
    if cfg.tol.is_nan() || cfg.tol <= 0.0 || cfg.rule_order == 0 || cfg.r_panels == 0 || cfg.theta_panels == 0 {
        return Err(Error::InvalidArgument(format!("bad quadrature config {cfg:?}")));
    }
    let gl = GaussLegendre::new(cfg.rule_order);
    let far = seed.at_infinity();
    let both = |rp: usize, tp: usize| -> Result<(f64, f64)> {
        Ok((
            disk_integral(seed, k, &gl, rp, tp)?,
            disk_integral(&far, k, &gl, rp, tp)?,
        ))
    };
    let (mut rp, mut tp) = (cfg.r_panels, cfg.theta_panels);
    let mut prev = both(rp, tp)?;
    let mut last_change = f64::INFINITY;
    for r in 1..=cfg.max_refinements {
        rp *= 2;
        tp *= 2;
        let cur = both(rp, tp)?;
        let value = cur.0 + cur.1;
        last_change = (value - (prev.0 + prev.1)).abs();
        if last_change < cfg.tol {
            // Never report less than the round-off of the accumulation.
            let est_error = last_change.max(1e3 * f64::EPSILON * value.abs());
            return Ok(ActionResult {
                value,
                est_error,
                inner: cur.0,
                outer: cur.1,
                chart_split: format!(
                    "inner |xi|<=1 and outer |w|<=1 with w=1/xi (seed reversed at degree {}); {}x{} panels of {} points",
                    seed.degree(),
                    rp,
                    tp,
                    cfg.rule_order
                ),
                refinements: r,
            });
        }
        prev = cur;
    }
    Err(Error::NoConvergence {
        refinements: cfg.max_refinements,
        last_change,
        tol: cfg.tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::{Poly, DEFAULT_DEGENERACY};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pt(x: f64, y: f64) -> EvalPoint {
        EvalPoint::new(x, y).unwrap()
    }

    fn cp1() -> HoloSeed {
        HoloSeed::new("cp1", vec![Poly::from_real(&[1.0]), Poly::from_real(&[0.0, 1.0])]).unwrap()
    }

    fn diag(entries: &[Complex64]) -> CMat {
        CMat::from_diagonal(&nalgebra::DVector::from_vec(entries.to_vec()))
    }

    #[test]
    fn cp1_immersions_at_origin() {
        let tower = build_tower(&cp1(), EvalPoint::origin(), cp1().default_order()).unwrap();
        let x0 = immersion_closed_form(&tower, 0).unwrap();
        let expect = diag(&[c(0.0, -0.5), c(0.0, 0.5)]);
        assert!((&x0.x - &expect).norm() < 1e-15);
        let x1 = immersion_closed_form(&tower, 1).unwrap();
        assert!((&x1.x - &expect).norm() < 1e-15);
        assert_abs_diff_eq!(x0.c_k, 0.5);
        assert_abs_diff_eq!(x1.c_k, 1.5);
    }

    #[test]
    fn closed_forms_are_in_the_algebra() {
        let seed = HoloSeed::veronese(4).unwrap();
        let tower = build_tower(&seed, pt(0.9, -1.7), seed.default_order()).unwrap();
        for k in 0..4 {
            let s = immersion_closed_form(&tower, k).unwrap();
            assert!(s.algebra_defect() < 1e-12);
            assert!(s.tangent_defect() < 1e-12);
            assert!(spectral_residual(&s) < 1e-10);
            assert!(closed_form_tangent_residual(&tower, k).unwrap() < 1e-10);
        }
    }

    #[test]
    fn expected_spectra() {
        assert_eq!(expected_spectrum(0, 2), vec![-0.5, 0.5]);
        // N = 3, k = 1: c = 1, spectrum {c−2, c−1, c}.
        assert_eq!(expected_spectrum(1, 3), vec![-1.0, 0.0, 1.0]);
        let top = expected_spectrum(3, 4);
        let mut distinct = top.clone();
        distinct.dedup();
        assert_eq!(distinct.len(), 2);
    }

    #[test]
    fn minimal_polynomials_at_origin() {
        let seed = HoloSeed::veronese(3).unwrap();
        let tower = build_tower(&seed, EvalPoint::origin(), seed.default_order()).unwrap();
        let x1 = immersion_closed_form(&tower, 1).unwrap();
        assert!((&x1.x - diag(&[c(0.0, -1.0), c(0.0, 0.0), c(0.0, 1.0)])).norm() < 1e-15);
        assert!(minimal_polynomial_residual(&x1) < 1e-15);

        let t2 = build_tower(&cp1(), pt(0.4, 0.2), cp1().default_order()).unwrap();
        for k in 0..2 {
            assert!(minimal_polynomial_residual(&immersion_closed_form(&t2, k).unwrap()) < 1e-12);
        }
    }

    #[test]
    fn random_anti_hermitian_fails_polynomial_and_spectrum() {
        let a = CMat::from_row_slice(
            3,
            3,
            &[
                c(0.0, 0.3),
                c(0.2, 0.7),
                c(-0.4, 0.1),
                c(-0.2, 0.7),
                c(0.0, -0.9),
                c(0.5, 0.5),
                c(0.4, 0.1),
                c(-0.5, 0.5),
                c(0.0, 0.6),
            ],
        );
        let s = ImmersionSample {
            n: 3,
            level: 1,
            c_k: 1.0,
            x: a.clone(),
            dx: CMat::zeros(3, 3),
            dbarx: CMat::zeros(3, 3),
        };
        assert!(minimal_polynomial_residual(&s) > 0.1);
        assert!(spectral_residual(&s) > 0.1);
    }

    #[test]
    fn alternating_sums() {
        for n in 2..=4 {
            let seed = HoloSeed::veronese(n).unwrap();
            let tower = build_tower(&seed, pt(-0.3, 1.2), seed.default_order()).unwrap();
            assert!(alternating_sum_residual(&tower).unwrap() < 1e-12);
        }
    }

    #[test]
    fn stacked_surface_is_minus_original() {
        let tower = build_tower(&cp1(), EvalPoint::origin(), cp1().default_order()).unwrap();
        let y0 = stacked_surface(&tower, 0).unwrap();
        assert!((&y0.x - diag(&[c(0.0, 0.5), c(0.0, -0.5)])).norm() < 1e-15);
        assert!(y0.x.trace().norm() < 1e-15);

        let seed = HoloSeed::veronese(3).unwrap();
        for &(x, y) in &[(0.2, 0.3), (-1.5, 2.0)] {
            let tower = build_tower(&seed, pt(x, y), seed.default_order()).unwrap();
            for k in 0..3 {
                let xs = immersion_closed_form(&tower, k).unwrap();
                let ys = stacked_surface(&tower, k).unwrap();
                assert!((&xs.dx + &ys.dx).norm() < 1e-10);
                assert!(idempotency_residual(&tower, k).unwrap() < 1e-10);
            }
        }
    }

    #[test]
    fn non_projector_field_is_not_idempotent() {
        let order = BidegreeOrder::symmetric(1);
        let a = CMat::from_row_slice(2, 2, &[c(0.0, 0.4), c(0.3, -0.8), c(-0.3, -0.8), c(0.0, -0.4)]);
        let b = CMat::from_row_slice(2, 2, &[c(0.5, 0.1), c(1.0, 0.0), c(-0.2, 0.3), c(0.7, -0.6)]);
        // X(ξ) = A + ξB − ξ̄B†, anti-Hermitian for all ξ.
        let x = MatrixJet::from_fn(order, |p, q| match (p, q) {
            (0, 0) => a.clone(),
            (1, 0) => b.clone(),
            (0, 1) => -b.adjoint(),
            _ => CMat::zeros(2, 2),
        });
        assert!(field_idempotency_residual(&x).unwrap() > 0.1);
    }

    #[test]
    fn multileaf_surfaces() {
        let seed = HoloSeed::veronese(3).unwrap();
        let tower = build_tower(&seed, pt(0.6, 0.8), seed.default_order()).unwrap();
        let unit = multileaf(&tower, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!((unit.jet.value() - immersion_closed_form(&tower, 1).unwrap().x).norm() < 1e-15);

        let real = multileaf(&tower, &[c(0.3, 0.0), c(-1.2, 0.0), c(2.5, 0.0)]).unwrap();
        assert!(real.el_residual < 1e-10);
        assert!(real.anti_hermitian.unwrap() < 1e-12 && real.trace.unwrap() < 1e-12);

        let complex = multileaf(&tower, &[c(1.0, 1.0), c(0.0, 0.0), c(2.0, 0.0)]).unwrap();
        assert!(complex.el_residual < 1e-10);
        assert!(complex.anti_hermitian.is_none());
        assert!(crate::algebra::algebra_defects(complex.jet.value()).0 > 0.1);
    }

    #[test]
    fn metric_for_cp1() {
        for &(x, y) in &[(0.0, 0.0), (1.3, -0.4)] {
            let tower = build_tower(&cp1(), pt(x, y), cp1().default_order()).unwrap();
            let m = metric_at(&tower, 0).unwrap();
            assert_abs_diff_eq!(m.g12, 1.0 / (1.0 + x * x + y * y).powi(2), epsilon = 1e-14);
            assert!(m.cross_check_defect() < 1e-12);
            assert_eq!((m.g11, m.g22), (0.0, 0.0));
        }
    }

    #[test]
    fn path_integral_cp1_unit_segment() {
        let path = PathSpec::straight(EvalPoint::origin(), pt(1.0, 0.0));
        let got = integrate_immersion(&cp1(), 0, &path).unwrap();
        let expect = CMat::from_row_slice(2, 2, &[c(0.0, 0.5), c(0.0, -0.5), c(0.0, -0.5), c(0.0, -0.5)]);
        assert!((&got.value - &expect).norm() < 2e-9, "{}", got.value);
    }

    #[test]
    fn zero_length_path_gives_zero() {
        let path = PathSpec::straight(pt(0.3, 0.3), pt(0.3, 0.3));
        let got = integrate_immersion(&cp1(), 0, &path).unwrap();
        assert_eq!(got.value.norm(), 0.0);
    }

    #[test]
    fn straight_and_dogleg_paths_agree() {
        let straight = PathSpec::straight(EvalPoint::origin(), pt(1.0, 0.0));
        let dogleg = PathSpec::new(vec![EvalPoint::origin(), pt(0.0, 1.0), pt(1.0, 0.0)]).unwrap();
        let seed = HoloSeed::veronese(3).unwrap();
        for k in 0..3 {
            let a = integrate_immersion(&seed, k, &straight).unwrap();
            let b = integrate_immersion(&seed, k, &dogleg).unwrap();
            assert!((&a.value - &b.value).norm() < 2e-9);
        }
    }

    #[test]
    fn stacked_path_integral_is_minus_immersion_increment() {
        let seed = HoloSeed::veronese(3).unwrap();
        let path = PathSpec::new(vec![pt(0.1, -0.2), pt(0.9, 0.4), pt(-0.5, 1.1)]).unwrap();
        for k in 0..3 {
            let y = integrate_stacked(&seed, k, &path).unwrap();
            let x_end = immersion_at(&seed, k, path.end()).unwrap().x;
            let x_start = immersion_at(&seed, k, path.start()).unwrap().x;
            assert!((&y.value + (x_end - x_start)).norm() < 1e-8);
        }
    }

    #[test]
    fn unreachable_path_tolerance_fails() {
        let path = PathSpec {
            refinement: 2,
            tol: 1e-30,
            ..PathSpec::straight(EvalPoint::origin(), pt(2.0, 1.0))
        };
        assert!(matches!(
            integrate_immersion(&cp1(), 0, &path),
            Err(Error::NoConvergence { .. })
        ));
    }

    #[test]
    fn base_point_is_origin_for_regular_seeds() {
        assert_eq!(base_point(&cp1()).unwrap(), EvalPoint::origin());
        // (1, ξ²) has a branch point at the origin.
        let branched = HoloSeed::new(
            "branch",
            vec![Poly::from_real(&[1.0]), Poly::from_real(&[0.0, 0.0, 1.0])],
        )
        .unwrap();
        let p = base_point(&branched).unwrap();
        assert!(p.xi().norm() > 0.0);
        assert!(build_levels(
            &branched,
            EvalPoint::origin(),
            branched.default_order(),
            2,
            DEFAULT_DEGENERACY
        )
        .is_err());
    }

    #[test]
    fn action_cp1_is_pi() {
        let r = action(&cp1(), 0, &QuadConfig::default()).unwrap();
        assert_abs_diff_eq!(r.value, PI, epsilon = 1e-6);
        assert_abs_diff_eq!(r.inner, PI / 2.0, epsilon = 1e-6);
        assert!(r.est_error >= 0.0);
    }

    #[test]
    fn action_veronese3_is_two_pi() {
        let seed = HoloSeed::veronese(3).unwrap();
        let r = action(&seed, 0, &QuadConfig::default()).unwrap();
        assert_abs_diff_eq!(r.value, 2.0 * PI, epsilon = 1e-5);
    }

    #[test]
    fn action_level_mirror_symmetry() {
        let seed = HoloSeed::veronese(4).unwrap();
        let cfg = QuadConfig::default();
        let a0 = action(&seed, 0, &cfg).unwrap();
        let a3 = action(&seed, 3, &cfg).unwrap();
        assert!((a0.value - a3.value).abs() <= 2.0 * a0.est_error.max(a3.est_error));
        let a1 = action(&seed, 1, &cfg).unwrap();
        let a2 = action(&seed, 2, &cfg).unwrap();
        assert!((a1.value - a2.value).abs() <= 2.0 * a1.est_error.max(a2.est_error));
    }

    #[test]
    fn action_rejects_unreachable_tolerance() {
        let cfg = QuadConfig {
            tol: 1e-30,
            max_refinements: 2,
            ..QuadConfig::default()
        };
        assert!(matches!(action(&cp1(), 0, &cfg), Err(Error::NoConvergence { .. })));
    }
}
