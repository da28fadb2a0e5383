//! Grid sweeps of the identity suite.
//!
//! [`run_suite`] builds one tower per grid point, evaluates every enabled
//! check there, and folds the per-point residuals into a
//! [`VerificationReport`]. Folding happens in grid order after the parallel
//! map, so the report does not depend on the thread count.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{algebra_defects, sun_coordinates};
use crate::error::{Error, Result};
use crate::jet::{
    fd_oracle, BiPoly, BidegreeOrder, CMat, EvalPoint, MatrixJet, Poly, ScalarJet, VectorJet, DEFAULT_DEGENERACY,
};
use crate::model::{
    alpha_coeffs, build_levels, build_tower, decomposition_residual, derivative_orthogonality_residual,
    el_residual_projector, el_residual_vector, orthocompleteness_residual, projector_from_vector, raise_projector,
    raise_vector, FieldDerivs, HoloSeed, ProjectorTower,
};
use crate::stack::{
    alternating_sum_residual, base_point, closed_form_tangent_residual, field_idempotency_residual,
    idempotency_residual, immersion_at, immersion_closed_form, immersion_jet, integrate_immersion, integrate_stacked,
    metric_at, minimal_polynomial_residual, spectral_residual, PathSpec,
};

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "CPN_STACK_THREADS";

/// Sample points in the ξ-plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GridSpec {
    /// `nx × ny` points on the square `[−extent, extent]²`.
    Cartesian { nx: usize, ny: usize, extent: f64 },
    /// Radii `extent·(i+1)/nr`, angles `2πj/ntheta`.
    DiskPolar { nr: usize, ntheta: usize, extent: f64 },
    /// Uniform in the disk `|ξ| ≤ extent`. Longer grids extend shorter ones.
    Random { count: usize, extent: f64, prng_seed: u64 },
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::Cartesian {
            nx: 21,
            ny: 21,
            extent: 3.0,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        let (count, extent) = match *self {
            GridSpec::Cartesian { nx, ny, extent } => (nx * ny, extent),
            GridSpec::DiskPolar { nr, ntheta, extent } => (nr * ntheta, extent),
            GridSpec::Random { count, extent, .. } => (count, extent),
        };
        if count == 0 {
            return Err(Error::InvalidArgument("grid has no sample points".into()));
        }
        if !(extent > 0.0 && extent.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "grid extent must be positive and finite, got {extent}"
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        match *self {
            GridSpec::Cartesian { nx, ny, .. } => nx * ny,
            GridSpec::DiskPolar { nr, ntheta, .. } => nr * ntheta,
            GridSpec::Random { count, .. } => count,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn points(&self) -> Result<Vec<EvalPoint>> {
        self.validate()?;
        let axis = |n: usize, extent: f64, i: usize| {
            if n == 1 {
                0.0
            } else {
                -extent + 2.0 * extent * i as f64 / (n - 1) as f64
            }
        };
        let pts = match *self {
            GridSpec::Cartesian { nx, ny, extent } => (0..ny)
                .flat_map(|j| (0..nx).map(move |i| (axis(nx, extent, i), axis(ny, extent, j))))
                .collect::<Vec<_>>(),
            GridSpec::DiskPolar { nr, ntheta, extent } => (0..nr)
                .flat_map(|i| {
                    let r = extent * (i + 1) as f64 / nr as f64;
                    (0..ntheta).map(move |j| {
                        let t = std::f64::consts::TAU * j as f64 / ntheta as f64;
                        (r * t.cos(), r * t.sin())
                    })
                })
                .collect(),
            GridSpec::Random {
                count,
                extent,
                prng_seed,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(prng_seed);
                (0..count)
                    .map(|_| {
                        let r = extent * rng.random::<f64>().sqrt();
                        let t = std::f64::consts::TAU * rng.random::<f64>();
                        (r * t.cos(), r * t.sin())
                    })
                    .collect()
            }
        };
        pts.into_iter().map(|(x, y)| EvalPoint::new(x, y)).collect()
    }

    /// Endpoints for the path-integral checks: a prefix for random grids,
    /// evenly strided otherwise.
    fn path_endpoints(&self, points: &[EvalPoint], m: usize) -> Vec<(usize, EvalPoint)> {
        let m = m.min(points.len());
        match self {
            GridSpec::Random { .. } => points.iter().copied().enumerate().take(m).collect(),
            _ => (0..m)
                .map(|j| {
                    let i = j * points.len() / m;
                    (i, points[i])
                })
                .collect(),
        }
    }
}

/// Pass thresholds. All residuals are absolute Frobenius norms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Projector, Euler–Lagrange, orthogonality, decomposition and idempotency identities.
    pub identity: f64,
    /// Minimal polynomials, spectra and the alternating sum.
    pub polynomial: f64,
    /// su(N) membership of surfaces.
    pub membership: f64,
    /// `tr(∂X∂̄X) + g₁₂`.
    pub metric: f64,
    /// Path-integrated surfaces against closed forms.
    pub path: f64,
    /// Refinement tolerance of the path quadrature.
    pub path_quadrature: f64,
    /// Minimum idempotency defect of a generic projector combination.
    pub non_idempotent_floor: f64,
    /// Pointwise jet versus finite-difference agreement at the finer step.
    pub fd_agreement: f64,
    pub fd_steps: [f64; 2],
    pub fd_order_target: f64,
    pub fd_order_band: f64,
    /// Largest tolerated fraction of degenerate samples per check.
    pub degenerate_fraction: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            identity: 1e-9,
            polynomial: 1e-8,
            membership: 1e-10,
            metric: 1e-12,
            path: 1e-7,
            path_quadrature: 1e-9,
            non_idempotent_floor: 1e-2,
            fd_agreement: 1e-3,
            fd_steps: [1e-3, 5e-4],
            fd_order_target: 2.0,
            fd_order_band: 0.2,
            degenerate_fraction: 0.05,
        }
    }
}

/// What a check's statistic must satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Bound {
    AtMost { limit: f64 },
    AtLeast { limit: f64 },
    Within { target: f64, halfwidth: f64 },
}

impl Bound {
    pub fn holds(&self, v: f64) -> bool {
        match *self {
            Bound::AtMost { limit } => v <= limit,
            Bound::AtLeast { limit } => v >= limit,
            Bound::Within { target, halfwidth } => (v - target).abs() <= halfwidth,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Max,
    Min,
    Order,
}

#[derive(Debug, Clone, Copy)]
pub struct CheckInfo {
    pub name: &'static str,
    pub identity: &'static str,
}

const fn info(name: &'static str, identity: &'static str) -> CheckInfo {
    CheckInfo { name, identity }
}

/// Every check the suite knows, in report order.
pub const CHECKS: &[CheckInfo] = &[
    info("tower_projector", "P_k^2 = P_k, P_k^+ = P_k, tr P_k = 1"),
    info("orthocompleteness", "P_j P_k = delta_jk P_k, sum_k P_k = I"),
    info("el_projector", "[dd P_k, P_k] = 0"),
    info(
        "el_vector",
        "(I - P)(dd f - ((f^+ dbar f) d f + (f^+ d f) dbar f)/(f^+ f)) = 0",
    ),
    info("raising_equivalence", "P(raise f_k) = raise P_k"),
    info(
        "derivative_orthogonality",
        "P_{k+1} dP_k = dP_k, dP_k P_{k-1} = 0 and partial sums",
    ),
    info("alpha_edges", "alpha_0 = 0, alphabar_{N-1} = 0"),
    info(
        "alpha_reality",
        "Im alpha_k = Im alphabar_k = 0, alpha_k + alphabar_k = tr(dP_k dbar P_k)",
    ),
    info(
        "decomposition",
        "dd P_k = alpha_k P_{k-1} - (alpha_k + alphabar_k) P_k + alphabar_k P_{k+1}",
    ),
    info("immersion_algebra", "X_k^+ = -X_k, tr X_k = 0, dbar X_k = -(d X_k)^+"),
    info("closed_form_tangents", "d(-i(P_k + 2 sum_{j<k} P_j)) = -i[dP_k, P_k]"),
    info("idempotency", "Y_k = -X_k, dY_k = -dX_k, dbar Y_k = -dbar X_k"),
    info(
        "minimal_polynomial",
        "(X - ic)(X - i(c-1))(X - i(c-2)) = 0, quadratic at k = 0, N-1",
    ),
    info("spectrum", "spec(-iX_k) = {c_k - 1, (c_k - 2)^k, c_k^(N-k-1)}"),
    info("alternating_sum", "sum_k (-1)^k X_k = 0"),
    info(
        "metric_consistency",
        "tr(dX_k dbar X_k) = -g12 = -tr(dP_k dbar P_k), g12 >= 0",
    ),
    info("sphere_radius", "|coords(X_0)| = 1/2 for N = 2"),
    info("combination_el", "[dd V, V] = 0 for V = sum_k l_k P_k"),
    info("combination_lattice_idempotent", "V^2 = V for 0/1 weights"),
    info("combination_generic_non_idempotent", "V^2 != V for generic weights"),
    info("multileaf_el", "[dd X, X] = 0 for X = sum_k l_k X_k"),
    info("multileaf_algebra", "X^+ = -X, tr X = 0 for real weights"),
    info("jet_fd_agreement", "jet derivatives = central differences + O(h^2)"),
    info("jet_fd_order", "log2(e(h)/e(h/2)) = 2"),
    info("immersion_path", "X_k(b) - X_k(a) = integral of dX_k along a segment"),
    info("stacked_path", "-X_k(a) + integral of dY_k along a segment = -X_k(b)"),
];

pub fn check_names() -> impl Iterator<Item = &'static str> {
    CHECKS.iter().map(|c| c.name)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub tolerances: Tolerances,
    /// Random weight vectors drawn per grid point for the combination checks.
    pub weights_per_point: usize,
    pub weight_seed: u64,
    /// Number of grid points used as path endpoints.
    pub path_samples: usize,
    /// `None` reads [`THREADS_ENV`], falling back to all cores.
    pub threads: Option<usize>,
    /// `None` enables every check.
    pub checks: Option<BTreeSet<String>>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            tolerances: Tolerances::default(),
            weights_per_point: 100,
            weight_seed: 0x5eed,
            path_samples: 6,
            threads: None,
            checks: None,
        }
    }
}

impl SuiteConfig {
    pub fn only<I, S>(mut self, names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = names.into_iter().map(Into::into).collect();
        if let Some(bad) = set.iter().find(|n| !check_names().any(|c| c == n.as_str())) {
            return Err(Error::InvalidArgument(format!("unknown check {bad:?}")));
        }
        self.checks = Some(set);
        Ok(self)
    }

    fn enabled(&self, name: &str) -> bool {
        self.checks.as_ref().is_none_or(|s| s.contains(name))
    }

    fn bound(&self, name: &str) -> Bound {
        let t = &self.tolerances;
        let at_most = |limit| Bound::AtMost { limit };
        match name {
            "immersion_algebra" | "sphere_radius" | "multileaf_algebra" => at_most(t.membership),
            "minimal_polynomial" | "spectrum" | "alternating_sum" => at_most(t.polynomial),
            "metric_consistency" => at_most(t.metric),
            "immersion_path" | "stacked_path" => at_most(t.path),
            "jet_fd_agreement" => at_most(t.fd_agreement),
            "combination_generic_non_idempotent" => Bound::AtLeast {
                limit: t.non_idempotent_floor,
            },
            "jet_fd_order" => Bound::Within {
                target: t.fd_order_target,
                halfwidth: t.fd_order_band,
            },
            _ => at_most(t.identity),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedDescription {
    pub label: String,
    pub n: usize,
    /// Ascending coefficients per component as `[re, im]`.
    pub components: Vec<Vec<[f64; 2]>>,
}

impl From<&HoloSeed> for SeedDescription {
    fn from(seed: &HoloSeed) -> Self {
        Self {
            label: seed.label.clone(),
            n: seed.n(),
            components: seed
                .components()
                .iter()
                .map(|p| p.coeffs.iter().map(|c| [c.re, c.im]).collect())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub identity: String,
    pub statistic: Statistic,
    /// `null` when no sample produced a value.
    pub value: Option<f64>,
    /// Sample point attaining `value`, 12 significant digits.
    pub at: Option<String>,
    pub degenerate: usize,
    pub samples: usize,
    pub bound: Bound,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightSampling {
    pub per_point: usize,
    pub prng_seed: u64,
    pub distribution: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub seed: SeedDescription,
    pub grid: GridSpec,
    pub samples: usize,
    pub degenerate_points: usize,
    pub base_point: Option<EvalPoint>,
    pub tolerances: Tolerances,
    pub weights: WeightSampling,
    pub checks: Vec<CheckRecord>,
    pub all_pass: bool,
    /// Kept out of the JSON so identical runs give identical bytes.
    #[serde(skip)]
    pub wall_time: Duration,
}

impl VerificationReport {
    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Plain-text table, one line per check.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "seed {} (N = {}), {} samples, {} degenerate",
            self.seed.label, self.seed.n, self.samples, self.degenerate_points
        );
        for c in &self.checks {
            let v = c.value.map_or("-".to_string(), |v| format!("{v:.3e}"));
            let _ = writeln!(
                out,
                "{:<4} {:<36} {:>11} {:>5}/{:<5} {}",
                if c.pass { "ok" } else { "FAIL" },
                c.name,
                v,
                c.degenerate,
                c.samples,
                c.at.as_deref().unwrap_or("")
            );
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Slot {
    Off,
    Value(f64),
    Degenerate,
}

/// Folds samples in order; the first point attaining the extreme wins.
#[derive(Debug, Clone)]
struct Accumulator {
    statistic: Statistic,
    best: Option<(f64, EvalPoint)>,
    degenerate: usize,
    samples: usize,
}

impl Accumulator {
    fn new(statistic: Statistic) -> Self {
        Self {
            statistic,
            best: None,
            degenerate: 0,
            samples: 0,
        }
    }

    fn push(&mut self, slot: Slot, at: EvalPoint) {
        match slot {
            Slot::Off => {}
            Slot::Degenerate => {
                self.samples += 1;
                self.degenerate += 1;
            }
            Slot::Value(v) => {
                self.samples += 1;
                let better = match self.best {
                    None => true,
                    Some((b, _)) if b.is_nan() => false,
                    Some(_) if v.is_nan() => true,
                    Some((b, _)) => match self.statistic {
                        Statistic::Min => v < b,
                        _ => v > b,
                    },
                };
                if better {
                    self.best = Some((v, at));
                }
            }
        }
    }

    fn finish(self, info: &CheckInfo, bound: Bound, max_degenerate: f64) -> CheckRecord {
        let value = self.best.map(|(v, _)| v);
        let too_degenerate = self.degenerate as f64 > max_degenerate * self.samples as f64;
        let pass = value.is_some_and(|v| bound.holds(v)) && !too_degenerate;
        CheckRecord {
            name: info.name.to_string(),
            identity: info.identity.to_string(),
            statistic: self.statistic,
            value,
            at: self.best.map(|(_, p)| p.to_string()),
            degenerate: self.degenerate,
            samples: self.samples,
            bound,
            pass,
        }
    }
}

fn slot(r: Result<f64>) -> Result<Slot> {
    match r {
        Ok(v) => Ok(Slot::Value(v)),
        Err(e) if e.is_degenerate() => Ok(Slot::Degenerate),
        Err(e) => Err(e),
    }
}

fn max_over<I: IntoIterator<Item = Result<f64>>>(it: I) -> Result<f64> {
    let mut m = 0.0f64;
    for v in it {
        let v = v?;
        m = if v.is_nan() || m.is_nan() { f64::NAN } else { m.max(v) };
    }
    Ok(m)
}

/// Deterministic weights for one grid point: `count` draws uniform in the
/// complex unit square, on a stream keyed by the point index.
fn random_weights(seed: u64, index: usize, n: usize, count: usize) -> Vec<Vec<Complex64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    (0..count)
        .map(|_| (0..n).map(|_| Complex64::new(rng.random(), rng.random())).collect())
        .collect()
}

/// All nonzero 0/1 weight vectors of length `n`.
fn lattice_weights(n: usize) -> Vec<Vec<Complex64>> {
    (1u32..(1 << n))
        .map(|m| (0..n).map(|k| Complex64::new(f64::from((m >> k) & 1), 0.0)).collect())
        .collect()
}

fn value_idempotency(v: &CMat) -> f64 {
    (v * v - v).norm()
}

/// Finite-difference errors at one point: `errs[step][kind]` with kinds
/// `∂, ∂̄, ∂∂̄`, maxed over levels.
fn fd_errors(seed: &HoloSeed, tower: &ProjectorTower, steps: [f64; 2]) -> Result<[[f64; 3]; 2]> {
    let n = seed.n();
    let point = tower.point;
    let derivs = tower.all_derivs()?;
    let order = BidegreeOrder::symmetric(n);
    let mut errs = [[0.0f64; 3]; 2];
    for (s, &h) in steps.iter().enumerate() {
        let mut cache: Vec<(EvalPoint, Vec<CMat>)> = vec![(point, tower.values())];
        for (dx, dy) in [(h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h)] {
            let q = point.offset(dx, dy);
            cache.push((q, build_levels(seed, q, order, n, DEFAULT_DEGENERACY)?.values()));
        }
        for (k, jd) in derivs.iter().enumerate() {
            let fd = fd_oracle(
                |q| {
                    cache
                        .iter()
                        .find(|(p, _)| *p == q)
                        .map(|(_, v)| v[k].clone())
                        .ok_or_else(|| Error::InvalidArgument("finite-difference node outside stencil".into()))
                },
                point,
                h,
            )?;
            let e = [
                (&fd.d - &jd.d).norm(),
                (&fd.dbar - &jd.dbar).norm(),
                (&fd.d_dbar - &jd.d_dbar).norm(),
            ];
            for (acc, e) in errs[s].iter_mut().zip(e) {
                *acc = acc.max(e);
            }
        }
    }
    Ok(errs)
}

struct PointResult {
    slots: Vec<Slot>,
    fd: Option<[[f64; 3]; 2]>,
    degenerate: bool,
}

fn eval_point(seed: &HoloSeed, point: EvalPoint, index: usize, cfg: &SuiteConfig) -> Result<PointResult> {
    let n = seed.n();
    let on = |name: &str| cfg.enabled(name);
    let tower = match build_tower(seed, point, seed.default_order()) {
        Ok(t) => t,
        Err(e) if e.is_degenerate() => {
            let slots = CHECKS
                .iter()
                .map(|c| {
                    if on(c.name) && applies(c.name, n) {
                        Slot::Degenerate
                    } else {
                        Slot::Off
                    }
                })
                .collect();
            return Ok(PointResult {
                slots,
                fd: None,
                degenerate: true,
            });
        }
        Err(e) => return Err(e),
    };
    let levels = 0..n;
    let eps = DEFAULT_DEGENERACY;

    let mut slots = Vec::with_capacity(CHECKS.len());
    let mut fd = None;
    let need_combos = [
        "combination_el",
        "combination_lattice_idempotent",
        "combination_generic_non_idempotent",
        "multileaf_el",
        "multileaf_algebra",
    ]
    .iter()
    .any(|c| on(c));
    let (p_derivs, x_derivs, random, lattice) = if need_combos {
        let p = tower.all_derivs()?;
        let x = levels
            .clone()
            .map(|k| FieldDerivs::of(&immersion_jet(&tower, k)?))
            .collect::<Result<Vec<_>>>()?;
        (
            p,
            x,
            random_weights(cfg.weight_seed, index, n, cfg.weights_per_point),
            lattice_weights(n),
        )
    } else {
        (vec![], vec![], vec![], vec![])
    };

    for c in CHECKS {
        if !on(c.name) || !applies(c.name, n) {
            slots.push(Slot::Off);
            continue;
        }
        let r: Result<f64> = match c.name {
            "tower_projector" => Ok(tower.projector_defect()),
            "orthocompleteness" => Ok(orthocompleteness_residual(&tower)),
            "el_projector" => max_over(tower.levels.iter().map(el_residual_projector)),
            "el_vector" => max_over(tower.vectors.iter().map(|f| el_residual_vector(f, eps))),
            "raising_equivalence" => max_over((0..n - 1).map(|k| {
                let a = projector_from_vector(&raise_vector(&tower.vectors[k], eps)?, eps)?;
                let b = raise_projector(&tower.levels[k], eps)?;
                Ok((a.value() - b.value()).norm())
            })),
            "derivative_orthogonality" => derivative_orthogonality_residual(&tower).map(|l| l.max()),
            "alpha_edges" => {
                let a0 = alpha_coeffs(&tower, 0)?;
                let al = alpha_coeffs(&tower, n - 1)?;
                Ok(a0.alpha.norm().max(al.alpha_bar.norm()))
            }
            "alpha_reality" => max_over(levels.clone().map(|k| {
                let a = alpha_coeffs(&tower, k)?;
                Ok(a.imag_defect().max(a.sum_defect()))
            })),
            "decomposition" => max_over(levels.clone().map(|k| decomposition_residual(&tower, k))),
            "immersion_algebra" => max_over(levels.clone().map(|k| {
                let s = immersion_closed_form(&tower, k)?;
                Ok(s.algebra_defect().max(s.tangent_defect()))
            })),
            "closed_form_tangents" => max_over(levels.clone().map(|k| closed_form_tangent_residual(&tower, k))),
            "idempotency" => max_over(levels.clone().map(|k| idempotency_residual(&tower, k))),
            "minimal_polynomial" => max_over(
                levels
                    .clone()
                    .map(|k| Ok(minimal_polynomial_residual(&immersion_closed_form(&tower, k)?))),
            ),
            "spectrum" => max_over(
                levels
                    .clone()
                    .map(|k| Ok(spectral_residual(&immersion_closed_form(&tower, k)?))),
            ),
            "alternating_sum" => alternating_sum_residual(&tower),
            "metric_consistency" => max_over(levels.clone().map(|k| {
                let m = metric_at(&tower, k)?;
                Ok(m.cross_check_defect().max(-m.g12).max(m.g11.abs()).max(m.g22.abs()))
            })),
            "sphere_radius" => {
                let x0 = immersion_closed_form(&tower, 0)?.x;
                let coords = sun_coordinates(&x0, cfg.tolerances.membership.max(1e-12))?;
                Ok((coords.iter().map(|v| v * v).sum::<f64>().sqrt() - 0.5).abs())
            }
            "combination_el" => max_over(
                random
                    .iter()
                    .chain(&lattice)
                    .map(|w| Ok(FieldDerivs::combination(&p_derivs, w)?.el_residual())),
            ),
            "combination_lattice_idempotent" => max_over(
                lattice
                    .iter()
                    .map(|w| Ok(value_idempotency(&FieldDerivs::combination(&p_derivs, w)?.value))),
            ),
            "combination_generic_non_idempotent" => {
                let mut m = f64::INFINITY;
                for w in &random {
                    m = m.min(value_idempotency(&FieldDerivs::combination(&p_derivs, w)?.value));
                }
                Ok(m)
            }
            "multileaf_el" => max_over(
                random
                    .iter()
                    .chain(&lattice)
                    .map(|w| Ok(FieldDerivs::combination(&x_derivs, w)?.el_residual())),
            ),
            "multileaf_algebra" => max_over(random.iter().map(|w| {
                let real: Vec<Complex64> = w.iter().map(|z| Complex64::new(z.re, 0.0)).collect();
                let (ah, tr) = algebra_defects(&FieldDerivs::combination(&x_derivs, &real)?.value);
                Ok(ah.max(tr))
            })),
            "jet_fd_agreement" => match fd_errors(seed, &tower, cfg.tolerances.fd_steps) {
                Ok(e) => {
                    fd = Some(e);
                    Ok(e[1].iter().copied().fold(0.0, f64::max))
                }
                Err(e) => Err(e),
            },
            // Aggregated after the sweep.
            "jet_fd_order" | "immersion_path" | "stacked_path" => {
                slots.push(Slot::Off);
                continue;
            }
            other => unreachable!("check {other} has no evaluator"),
        };
        slots.push(slot(r)?);
    }
    if fd.is_none() && on("jet_fd_order") && !on("jet_fd_agreement") {
        fd = match fd_errors(seed, &tower, cfg.tolerances.fd_steps) {
            Ok(e) => Some(e),
            Err(e) if e.is_degenerate() => None,
            Err(e) => return Err(e),
        };
    }
    Ok(PointResult {
        slots,
        fd,
        degenerate: false,
    })
}

fn applies(name: &str, n: usize) -> bool {
    match name {
        "sphere_radius" => n == 2,
        _ => true,
    }
}

fn statistic(name: &str) -> Statistic {
    match name {
        "combination_generic_non_idempotent" => Statistic::Min,
        "jet_fd_order" => Statistic::Order,
        _ => Statistic::Max,
    }
}

fn thread_count(cfg: &SuiteConfig) -> usize {
    cfg.threads
        .or_else(|| std::env::var(THREADS_ENV).ok().and_then(|s| s.trim().parse().ok()))
        .unwrap_or(0)
}

fn with_pool<T: Send>(cfg: &SuiteConfig, job: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count(cfg))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    Ok(pool.install(job))
}

fn path_slot(
    seed: &HoloSeed,
    k: usize,
    base: EvalPoint,
    end: EvalPoint,
    tol: &Tolerances,
    stacked: bool,
) -> Result<Slot> {
    let path = PathSpec::straight(base, end).with_tol(tol.path_quadrature);
    let r = (|| -> Result<f64> {
        let x_end = immersion_at(seed, k, end)?.x;
        let x_base = immersion_at(seed, k, base)?.x;
        if stacked {
            let inc = integrate_stacked(seed, k, &path)?.value;
            Ok((inc - &x_base + x_end).norm())
        } else {
            let inc = integrate_immersion(seed, k, &path)?.value;
            Ok((x_base + inc - x_end).norm())
        }
    })();
    match r {
        Err(Error::NoConvergence { .. }) => Ok(Slot::Value(f64::INFINITY)),
        other => slot(other),
    }
}

/// Runs the enabled checks of the identity suite over `grid`.
pub fn run_suite(seed: &HoloSeed, grid: &GridSpec, cfg: &SuiteConfig) -> Result<VerificationReport> {
    let start = Instant::now();
    let points = grid.points()?;
    let n = seed.n();

    let results: Vec<PointResult> = with_pool(cfg, || {
        points
            .par_iter()
            .enumerate()
            .map(|(i, &p)| eval_point(seed, p, i, cfg))
            .collect::<Result<Vec<_>>>()
    })??;

    let mut accs: Vec<Accumulator> = CHECKS.iter().map(|c| Accumulator::new(statistic(c.name))).collect();
    for (r, &p) in results.iter().zip(&points) {
        for (acc, &s) in accs.iter_mut().zip(&r.slots) {
            acc.push(s, p);
        }
    }

    let idx = |name: &str| CHECKS.iter().position(|c| c.name == name).unwrap();

    if cfg.enabled("jet_fd_order") {
        let acc = &mut accs[idx("jet_fd_order")];
        let mut worst = [[0.0f64; 3]; 2];
        for r in &results {
            match r.fd {
                Some(e) => {
                    acc.samples += 1;
                    for s in 0..2 {
                        for kind in 0..3 {
                            worst[s][kind] = worst[s][kind].max(e[s][kind]);
                        }
                    }
                }
                None => acc.push(Slot::Degenerate, EvalPoint::origin()),
            }
        }
        if acc.samples > acc.degenerate {
            let ratio = cfg.tolerances.fd_steps[0] / cfg.tolerances.fd_steps[1];
            let orders = (0..3).map(|kind| (worst[0][kind] / worst[1][kind]).ln() / ratio.ln());
            // Report the order furthest from the target.
            let target = cfg.tolerances.fd_order_target;
            let order = orders.fold(target, |a, b| {
                if (b - target).abs() > (a - target).abs() || b.is_nan() {
                    b
                } else {
                    a
                }
            });
            acc.best = Some((order, EvalPoint::origin()));
        }
    }

    let base = if cfg.enabled("immersion_path") || cfg.enabled("stacked_path") {
        Some(base_point(seed)?)
    } else {
        None
    };
    if let Some(base) = base {
        let ends = grid.path_endpoints(&points, cfg.path_samples);
        for (name, stacked) in [("immersion_path", false), ("stacked_path", true)] {
            if !cfg.enabled(name) {
                continue;
            }
            let jobs: Vec<(usize, EvalPoint)> = ends.iter().flat_map(|&(_, e)| (0..n).map(move |k| (k, e))).collect();
            let slots = with_pool(cfg, || {
                jobs.par_iter()
                    .map(|&(k, e)| path_slot(seed, k, base, e, &cfg.tolerances, stacked))
                    .collect::<Result<Vec<_>>>()
            })??;
            let acc = &mut accs[idx(name)];
            for (&(_, e), s) in jobs.iter().zip(slots) {
                acc.push(s, e);
            }
        }
    }

    let checks: Vec<CheckRecord> = CHECKS
        .iter()
        .zip(accs)
        .filter(|(c, _)| cfg.enabled(c.name) && applies(c.name, n))
        .map(|(c, acc)| {
            let mut rec = acc.finish(c, cfg.bound(c.name), cfg.tolerances.degenerate_fraction);
            if c.name == "jet_fd_order" {
                rec.at = None;
            }
            rec
        })
        .collect();
    let all_pass = checks.iter().all(|c| c.pass);
    Ok(VerificationReport {
        seed: seed.into(),
        grid: grid.clone(),
        samples: points.len(),
        degenerate_points: results.iter().filter(|r| r.degenerate).count(),
        base_point: base,
        tolerances: cfg.tolerances,
        weights: WeightSampling {
            per_point: cfg.weights_per_point,
            prng_seed: cfg.weight_seed,
            distribution: "uniform in the complex unit square, plus every nonzero 0/1 vector".into(),
        },
        checks,
        all_pass,
        wall_time: start.elapsed(),
    })
}

/// Vector field `(1, ξ + ξ̄)`: smooth, but not a harmonic map.
pub fn nonharmonic_field(point: EvalPoint, order: BidegreeOrder) -> VectorJet {
    let one = ScalarJet::from_bipoly(&BiPoly::new(vec![(0, 0, Complex64::new(1.0, 0.0))]), point, order);
    let x = ScalarJet::from_bipoly(
        &BiPoly::new(vec![(1, 0, Complex64::new(1.0, 0.0)), (0, 1, Complex64::new(1.0, 0.0))]),
        point,
        order,
    );
    VectorJet::from_components(&[one, x]).expect("two components")
}

/// Anti-Hermitian field `A + ξB − ξ̄B†` that does not come from a projector.
pub fn linear_anti_hermitian_field(point: EvalPoint, order: BidegreeOrder) -> MatrixJet {
    let c = Complex64::new;
    let a = CMat::from_row_slice(2, 2, &[c(0.0, 0.4), c(0.3, -0.8), c(-0.3, -0.8), c(0.0, -0.4)]);
    let b = CMat::from_row_slice(2, 2, &[c(0.5, 0.1), c(1.0, 0.0), c(-0.2, 0.3), c(0.7, -0.6)]);
    let xi = point.xi();
    MatrixJet::from_fn(order, |p, q| match (p, q) {
        (0, 0) => &a + &b * xi - b.adjoint() * xi.conj(),
        (1, 0) => b.clone(),
        (0, 1) => -b.adjoint(),
        _ => CMat::zeros(2, 2),
    })
}

/// The Euler–Lagrange and idempotency checks on fields that violate their
/// hypotheses. Every check in the returned report is expected to fail.
pub fn run_control_suite(grid: &GridSpec, cfg: &SuiteConfig) -> Result<VerificationReport> {
    let start = Instant::now();
    let points = grid.points()?;
    let order = BidegreeOrder::symmetric(2);
    let eps = DEFAULT_DEGENERACY;
    let names = ["el_projector", "el_vector", "idempotency"];
    let mut accs: Vec<Accumulator> = names.iter().map(|_| Accumulator::new(Statistic::Max)).collect();
    for &p in &points {
        let f = nonharmonic_field(p, order);
        let vals = [
            slot(projector_from_vector(&f, eps).and_then(|pj| el_residual_projector(&pj)))?,
            slot(el_residual_vector(&f, eps))?,
            slot(field_idempotency_residual(&linear_anti_hermitian_field(p, order)))?,
        ];
        for (acc, s) in accs.iter_mut().zip(vals) {
            acc.push(s, p);
        }
    }
    let checks: Vec<CheckRecord> = names
        .iter()
        .zip(accs)
        .map(|(name, acc)| {
            let info = CHECKS.iter().find(|c| c.name == *name).unwrap();
            acc.finish(info, cfg.bound(name), cfg.tolerances.degenerate_fraction)
        })
        .collect();
    let seed = HoloSeed::new(
        "control: (1, xi + conj(xi)) and A + xi B - conj(xi) B^+",
        vec![Poly::from_real(&[1.0]), Poly::from_real(&[0.0, 1.0])],
    )?;
    let mut desc = SeedDescription::from(&seed);
    desc.components.clear();
    Ok(VerificationReport {
        seed: desc,
        grid: grid.clone(),
        samples: points.len(),
        degenerate_points: 0,
        base_point: None,
        tolerances: cfg.tolerances,
        weights: WeightSampling {
            per_point: 0,
            prng_seed: cfg.weight_seed,
            distribution: "none".into(),
        },
        all_pass: checks.iter().all(|c| c.pass),
        checks,
        wall_time: start.elapsed(),
    })
}

/// Seeds exercised by default: Veronese curves for N = 2, 3, 4 and two
/// non-Veronese curves whose Wronskians are nonzero constants, so no grid
/// point is a branch point.
///
/// | label | components |
/// |---|---|
/// | `veronese-2` | `(1, ξ)` |
/// | `veronese-3` | `(1, √2 ξ, ξ²)` |
/// | `veronese-4` | `(1, √3 ξ, √3 ξ², ξ³)` |
/// | `twisted-3` | `(1, 1 + ξ, ξ² + iξ)` |
/// | `twisted-4` | `(2, ξ − i, ξ²/2 + ξ, ξ³ − 2ξ)` |
pub fn default_seed_catalog() -> Vec<HoloSeed> {
    let c = Complex64::new;
    let mut out: Vec<HoloSeed> = (2..=4).map(|n| HoloSeed::veronese(n).expect("veronese")).collect();
    out.push(
        HoloSeed::new(
            "twisted-3",
            vec![
                Poly::from_real(&[1.0]),
                Poly::from_real(&[1.0, 1.0]),
                Poly::new(vec![c(0.0, 0.0), c(0.0, 1.0), c(1.0, 0.0)]),
            ],
        )
        .expect("catalog seed"),
    );
    out.push(
        HoloSeed::new(
            "twisted-4",
            vec![
                Poly::from_real(&[2.0]),
                Poly::new(vec![c(0.0, -1.0), c(1.0, 0.0)]),
                Poly::from_real(&[0.0, 1.0, 0.5]),
                Poly::from_real(&[0.0, -2.0, 0.0, 1.0]),
            ],
        )
        .expect("catalog seed"),
    );
    out
}
