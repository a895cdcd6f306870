//! Finite-difference curvature oracle and checkers for the global
//! statements about straight-spine canal surfaces.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::canal::{gauss_k, mean_scalar, mean_vector, surface_jet, CanalSurface, Mode, RadiusFunction, RadiusSpec};
use crate::error::{Error, Result};
use crate::geom::{dot, Vec4};
use crate::meshio::GridSpec;

/// Relative `|F| / sqrt(EG)` accepted by the oracle as orthogonal.
const ORACLE_ORTHOGONAL_TOL: f64 = 1e-6;
const ORACLE_IRREGULAR_W2: f64 = 1e-14;

/// Default Weingarten tolerance for closed-form fields.
pub const WEINGARTEN_TOL_CLOSED: f64 = 1e-8;
/// Default Weingarten tolerance for oracle-derived fields.
pub const WEINGARTEN_TOL_ORACLE: f64 = 1e-4;
pub const FLAT_TOL: f64 = 1e-12;
pub const LINEAR_WEINGARTEN_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StencilOrder {
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "4")]
    Four,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleConfig {
    pub h_u: f64,
    pub h_v: f64,
    pub order: StencilOrder,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { h_u: 1e-4, h_v: 1e-4, order: StencilOrder::Two }
    }
}

impl OracleConfig {
    pub fn new(h_u: f64, h_v: f64, order: StencilOrder) -> Result<Self> {
        let ok = |h: f64| h > 0.0 && h < 1e-2;
        if !(ok(h_u) && ok(h_v)) {
            return Err(Error::InvalidInput(format!(
                "oracle steps must lie in (0, 1e-2), got h_u = {h_u}, h_v = {h_v}"
            )));
        }
        Ok(OracleConfig { h_u, h_v, order })
    }

    pub fn uniform(h: f64, order: StencilOrder) -> Result<Self> {
        Self::new(h, h, order)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleCurvature {
    pub k: f64,
    pub hvec: Vec4,
}

/// First/second derivative weights of the central stencils, offsets
/// `-m..=m`.
fn stencil(order: StencilOrder) -> (&'static [f64], &'static [f64], f64, f64) {
    match order {
        StencilOrder::Two => (&[-1.0, 0.0, 1.0], &[1.0, -2.0, 1.0], 2.0, 1.0),
        StencilOrder::Four => (
            &[1.0, -8.0, 0.0, 8.0, -1.0],
            &[-1.0, 16.0, -30.0, 16.0, -1.0],
            12.0,
            12.0,
        ),
    }
}

/// Curvature of the patch traced by `sampler`, using only point samples,
/// central differences and the orthogonal-patch projection formulas.
pub fn oracle_curvature<S>(sampler: S, u: f64, v: f64, cfg: &OracleConfig) -> Result<OracleCurvature>
where
    S: Fn(f64, f64) -> Result<Vec4>,
{
    let (w1, w2, s1, s2) = stencil(cfg.order);
    let m = (w1.len() / 2) as isize;
    let (hu, hv) = (cfg.h_u, cfg.h_v);
    let n = w1.len();
    // samples[i][j] = X(u + (i-m) hu, v + (j-m) hv)
    let mut samples = vec![vec![Vec4::ZERO; n]; n];
    for (i, row) in samples.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            // The mixed stencil uses the full square; the pure ones only
            // the centre row and column.
            let (di, dj) = (i as isize - m, j as isize - m);
            *x = sampler(u + di as f64 * hu, v + dj as f64 * hv)?;
        }
    }
    let c = m as usize;
    let mut xu = Vec4::ZERO;
    let mut xv = Vec4::ZERO;
    let mut xuu = Vec4::ZERO;
    let mut xvv = Vec4::ZERO;
    let mut xuv = Vec4::ZERO;
    for k in 0..n {
        xu += samples[k][c] * (w1[k] / (s1 * hu));
        xv += samples[c][k] * (w1[k] / (s1 * hv));
        xuu += samples[k][c] * (w2[k] / (s2 * hu * hu));
        xvv += samples[c][k] * (w2[k] / (s2 * hv * hv));
        for l in 0..n {
            let w = w1[k] * w1[l];
            if w != 0.0 {
                xuv += samples[k][l] * (w / (s1 * s1 * hu * hv));
            }
        }
    }

    let e = dot(xu, xu);
    let f = dot(xu, xv);
    let g = dot(xv, xv);
    if !(f.abs() <= ORACLE_ORTHOGONAL_TOL * (e * g).sqrt()) {
        return Err(Error::NonOrthogonalPatch(f));
    }
    let w2 = e * g - f * f;
    if !(w2 > ORACLE_IRREGULAR_W2) {
        return Err(Error::Irregular(w2));
    }
    let a = dot(xuu, xu) / e;
    let b = dot(xuv, xu);
    let p = dot(xuv, xv);
    let huu = xuu - xu * a + xv * (b / g);
    let huv = xuv - xu * (b / e) - xv * (p / g);
    let hvv = xvv + xu * (p / e) - xv * (dot(xvv, xv) / g);
    let k = (dot(huu, hvv) - dot(huv, huv)) / w2;
    let hvec = (hvv * e - huv * (2.0 * f) + huu * g) / (2.0 * w2);
    Ok(OracleCurvature { k, hvec })
}

/// Oracle evaluated on a canal surface through its point sampler.
pub fn oracle_on_surface(surface: &CanalSurface, u: f64, v: f64, cfg: &OracleConfig) -> Result<OracleCurvature> {
    oracle_curvature(|u, v| surface.point(u, v), u, v, cfg)
}

/// Scalar samples on a uniform `(u, v)` grid, row-major with `u` outer.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub u0: f64,
    pub du: f64,
    pub v0: f64,
    pub dv: f64,
    pub nu: usize,
    pub nv: usize,
    pub values: Vec<f64>,
}

impl ScalarField {
    /// Samples `f` at the nodes of `grid`.
    pub fn sample<F>(grid: &GridSpec, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> Result<f64> + Sync,
    {
        let rows: Vec<Vec<f64>> = (0..grid.nu)
            .into_par_iter()
            .map(|i| {
                let u = grid.u_at(i);
                (0..grid.nv).map(|j| f(u, grid.v_at(j))).collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        Ok(ScalarField {
            u0: grid.u_range[0],
            du: grid.du(),
            v0: 0.0,
            dv: grid.dv(),
            nu: grid.nu,
            nv: grid.nv,
            values: rows.concat(),
        })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.nv + j]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeingartenReport {
    pub max_jacobian: f64,
    pub max_kv: f64,
    pub max_hv: f64,
    pub nu: usize,
    pub nv: usize,
    pub tolerance: f64,
    pub is_weingarten: bool,
}

/// Max of `|K_u H_v - K_v H_u|`, `|K_v|`, `|H_v|` over interior nodes, from
/// central differences.
pub fn weingarten_check(k: &ScalarField, h: &ScalarField, tol: f64) -> Result<WeingartenReport> {
    let dims_match = k.nu == h.nu && k.nv == h.nv && k.du == h.du && k.dv == h.dv;
    if !dims_match {
        return Err(Error::InvalidInput("K and H fields live on different grids".into()));
    }
    if k.nu < 5 || k.nv < 5 {
        return Err(Error::GridTooSmall { nu: k.nu, nv: k.nv });
    }
    let d = |f: &ScalarField, i: usize, j: usize| {
        let fu = (f.get(i + 1, j) - f.get(i - 1, j)) / (2.0 * f.du);
        let fv = (f.get(i, j + 1) - f.get(i, j - 1)) / (2.0 * f.dv);
        (fu, fv)
    };
    let (mut jac, mut kv_max, mut hv_max) = (0.0_f64, 0.0_f64, 0.0_f64);
    for i in 1..k.nu - 1 {
        for j in 1..k.nv - 1 {
            let (ku, kv) = d(k, i, j);
            let (hu, hv) = d(h, i, j);
            jac = jac.max((ku * hv - kv * hu).abs());
            kv_max = kv_max.max(kv.abs());
            hv_max = hv_max.max(hv.abs());
        }
    }
    Ok(WeingartenReport {
        max_jacobian: jac,
        max_kv: kv_max,
        max_hv: hv_max,
        nu: k.nu,
        nv: k.nv,
        tolerance: tol,
        is_weingarten: jac <= tol,
    })
}

/// Closed-form `K` and `H = |H|` fields of a canal surface in `mode`.
pub fn curvature_fields(surface: &CanalSurface, grid: &GridSpec, mode: Mode) -> Result<(ScalarField, ScalarField)> {
    let k = ScalarField::sample(grid, |u, v| gauss_k(&surface.jet(u, v)?, mode))?;
    let h = ScalarField::sample(grid, |u, v| mean_scalar(&surface.jet(u, v)?, mode))?;
    Ok((k, h))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinearWeingartenCert {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub residual: f64,
}

fn require_straight_tube(surface: &CanalSurface) -> Result<f64> {
    if !surface.radius.is_constant() {
        return Err(Error::NotATube("radius is not constant".into()));
    }
    if !surface.is_straight() {
        return Err(Error::NotATube("spine is not a straight line".into()));
    }
    Ok(surface.radius.eval(surface.u_range().0).r)
}

/// Certificate `(0, 2 r0 k, k)` for `aK + bH = c` on a straight-spine tube,
/// with the residual measured over `grid`.
pub fn linear_weingarten_cert(surface: &CanalSurface, grid: &GridSpec, k: f64) -> Result<LinearWeingartenCert> {
    let r0 = require_straight_tube(surface)?;
    if !(k != 0.0 && k.is_finite()) {
        return Err(Error::InvalidInput("certificate scale k must be finite and nonzero".into()));
    }
    let (a, b, c) = (0.0, 2.0 * r0 * k, k);
    let (kf, hf) = curvature_fields(surface, grid, Mode::Straight)?;
    let residual = kf
        .values
        .iter()
        .zip(&hf.values)
        .fold(0.0_f64, |m, (kk, hh)| m.max((a * kk + b * hh - c).abs()));
    Ok(LinearWeingartenCert { a, b, c, residual })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimalRadiusParams {
    pub c1: f64,
    pub c2: f64,
}

impl MinimalRadiusParams {
    /// `C = c2 - ln(2 c1)`
    pub fn shift(&self) -> f64 {
        self.c2 - (2.0 * self.c1).ln()
    }

    /// `c1 cosh(u / c1 + C)` without the branch check.
    pub fn radius(&self) -> Result<RadiusFunction> {
        RadiusFunction::new(RadiusSpec::CoshScaled { c1: self.c1, shift: self.shift() })
    }

    /// Relative residual of `2r + 2 sqrt(r² - c1²) = exp(u/c1 + c2)`.
    pub fn relation_residual(&self, u: f64) -> f64 {
        let x = u / self.c1 + self.shift();
        let r = self.c1 * x.cosh();
        let lhs = 2.0 * r + 2.0 * (r * r - self.c1 * self.c1).max(0.0).sqrt();
        let rhs = (u / self.c1 + self.c2).exp();
        (lhs - rhs).abs() / rhs
    }
}

/// The explicit solution of the implicit minimality relation, valid on
/// `domain` only if `u/c1 + C >= 0` throughout.
pub fn minimal_radius(params: MinimalRadiusParams, domain: [f64; 2]) -> Result<RadiusFunction> {
    if !(params.c1 > 0.0 && params.c1.is_finite() && params.c2.is_finite()) {
        return Err(Error::InvalidInput("minimal radius needs finite c1 > 0 and c2".into()));
    }
    let arg = domain[0] / params.c1 + params.shift();
    if arg < 0.0 {
        return Err(Error::BranchViolation { u: domain[0], arg });
    }
    params.radius()
}

/// Max scalar mean curvature over `grid` from the straight-spine closed form.
pub fn verify_minimal(surface: &CanalSurface, grid: &GridSpec) -> Result<f64> {
    let h = ScalarField::sample(grid, |u, v| mean_scalar(&surface.jet(u, v)?, Mode::Straight))?;
    Ok(h.max_abs())
}

/// Max `|H|` over `grid` from the oracle.
pub fn verify_minimal_oracle(surface: &CanalSurface, grid: &GridSpec, cfg: &OracleConfig) -> Result<f64> {
    let h = ScalarField::sample(grid, |u, v| Ok(oracle_on_surface(surface, u, v, cfg)?.hvec.norm()))?;
    Ok(h.max_abs())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FlatnessReport {
    pub max_abs_k: f64,
    pub is_flat: bool,
}

pub fn flatness_check(surface: &CanalSurface, grid: &GridSpec) -> Result<FlatnessReport> {
    let k = ScalarField::sample(grid, |u, v| gauss_k(&surface.jet(u, v)?, Mode::Straight))?;
    let max_abs_k = k.max_abs();
    Ok(FlatnessReport { max_abs_k, is_flat: max_abs_k <= FLAT_TOL })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EquivalenceReport {
    /// Max relative gap of `K`.
    pub max_rel_k: f64,
    /// Max relative gap of the mean curvature vector.
    pub max_rel_h: f64,
    pub points: usize,
    pub irregular: usize,
}

impl EquivalenceReport {
    pub fn max(&self) -> f64 {
        self.max_rel_k.max(self.max_rel_h)
    }
}

/// Closed general-mode `K` and `H` against the oracle at every regular grid
/// node. Irregular nodes (closed form or oracle) are counted and skipped.
pub fn equivalence_check(surface: &CanalSurface, grid: &GridSpec, cfg: &OracleConfig) -> Result<EquivalenceReport> {
    let nodes: Vec<(f64, f64)> = grid.nodes().collect();
    let gaps: Vec<Option<(f64, f64)>> = nodes
        .par_iter()
        .map(|&(u, v)| {
            let jet = surface_jet(&surface.spine, &surface.radius, u, v)?;
            let closed = match (gauss_k(&jet, Mode::General), mean_vector(&jet, Mode::General)) {
                (Ok(k), Ok(h)) => (k, h),
                (Err(Error::Irregular(_)), _) | (_, Err(Error::Irregular(_))) => return Ok(None),
                (Err(e), _) | (_, Err(e)) => return Err(e),
            };
            let oracle = match oracle_on_surface(surface, u, v, cfg) {
                Ok(o) => o,
                Err(Error::Irregular(_)) => return Ok(None),
                Err(e) => return Err(e),
            };
            let rk = (closed.0 - oracle.k).abs() / oracle.k.abs();
            let rh = (closed.1 - oracle.hvec).norm() / oracle.hvec.norm();
            Ok(Some((rk, rh)))
        })
        .collect::<Result<_>>()?;
    let mut report = EquivalenceReport { max_rel_k: 0.0, max_rel_h: 0.0, points: 0, irregular: 0 };
    for gap in gaps {
        match gap {
            Some((rk, rh)) => {
                report.points += 1;
                report.max_rel_k = report.max_rel_k.max(rk);
                report.max_rel_h = report.max_rel_h.max(rh);
            }
            None => report.irregular += 1,
        }
    }
    Ok(report)
}

/// One analysis result as emitted in JSON reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub check: String,
    pub params: serde_json::Value,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckRecord {
    pub fn new(check: &str, params: serde_json::Value, max_residual: f64, tolerance: f64) -> Self {
        CheckRecord { check: check.into(), params, max_residual, tolerance, pass: max_residual <= tolerance }
    }
}
