//! Canal surfaces `X(u,v) = γ(u) + r(u)(M2(u) cos v + M3(u) sin v)` over a
//! parallel transported spine, with their fundamental forms, Gaussian
//! curvature and mean curvature vector.
//!
//! Every curvature quantity exists twice: as the closed form in the
//! scalars `f`, `g`, `r`, `r'`, `r''`, `ki` (with separate tube and
//! straight-spine reductions), and as the generic projection formulas
//! applied to the surface partials.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{dot, Frame4, Vec4};
use crate::ptframe::FramedCurve;
use crate::spline::CubicSpline;

/// `W²` at or below this marks an irregular point.
pub const IRREGULAR_W2: f64 = 1e-14;
/// Allowed `|F|` for the orthogonal-patch projection formulas.
const ORTHOGONAL_F_TOL: f64 = 1e-8;
/// Allowed `|r'|, |r''|` (tube) or `|ki|, |ki'|` (straight) for the
/// special-case modes.
const MODE_TOL: f64 = 1e-12;
const TUBE_SINGULAR_F: f64 = 1e-12;
/// Relative disagreement between the printed scalar mean curvature and
/// `|H|` that raises `FormulaMismatch`.
const SCALAR_MISMATCH_TOL: f64 = 1e-6;

/// Radius catalog. `kind` selects the variant in JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadiusSpec {
    Constant { r0: f64 },
    /// `a u + b`
    Linear { a: f64, b: f64 },
    /// `a u² + b u + c`; the bare catalog entry is `u²`.
    Quadratic {
        #[serde(default = "one")]
        a: f64,
        #[serde(default)]
        b: f64,
        #[serde(default)]
        c: f64,
    },
    /// `cos(u²)`
    CosSq,
    /// `offset + amplitude · sin u`
    Sine { offset: f64, amplitude: f64 },
    /// `c1 cosh(u / c1 + shift)`
    CoshScaled { c1: f64, shift: f64 },
    /// Not-a-knot spline through `(u, r)` samples.
    Sampled { points: Vec<(f64, f64)> },
}

fn one() -> f64 {
    1.0
}

/// `r`, `r'`, `r''` at one parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadiusJet {
    pub r: f64,
    pub dr: f64,
    pub ddr: f64,
}

#[derive(Clone, Debug)]
pub struct RadiusFunction {
    spec: RadiusSpec,
    spline: Option<Arc<CubicSpline<1>>>,
}

impl RadiusFunction {
    pub fn new(spec: RadiusSpec) -> Result<Self> {
        let spline = match &spec {
            RadiusSpec::Sampled { points } => {
                let knots = points.iter().map(|p| p.0).collect();
                let values = points.iter().map(|p| [p.1]).collect();
                Some(Arc::new(CubicSpline::new(knots, values)?))
            }
            RadiusSpec::CoshScaled { c1, .. } if !(*c1 > 0.0) => {
                return Err(Error::InvalidInput("cosh radius needs c1 > 0".into()));
            }
            _ => None,
        };
        Ok(RadiusFunction { spec, spline })
    }

    pub fn constant(r0: f64) -> Self {
        RadiusFunction { spec: RadiusSpec::Constant { r0 }, spline: None }
    }

    pub fn linear(a: f64, b: f64) -> Self {
        RadiusFunction { spec: RadiusSpec::Linear { a, b }, spline: None }
    }

    pub fn quadratic(a: f64, b: f64, c: f64) -> Self {
        RadiusFunction { spec: RadiusSpec::Quadratic { a, b, c }, spline: None }
    }

    pub fn cos_sq() -> Self {
        RadiusFunction { spec: RadiusSpec::CosSq, spline: None }
    }

    pub fn sine(offset: f64, amplitude: f64) -> Self {
        RadiusFunction { spec: RadiusSpec::Sine { offset, amplitude }, spline: None }
    }

    pub fn spec(&self) -> &RadiusSpec {
        &self.spec
    }

    pub fn is_constant(&self) -> bool {
        match self.spec {
            RadiusSpec::Constant { .. } => true,
            RadiusSpec::Linear { a, .. } => a == 0.0,
            RadiusSpec::Quadratic { a, b, .. } => a == 0.0 && b == 0.0,
            RadiusSpec::Sine { amplitude, .. } => amplitude == 0.0,
            _ => false,
        }
    }

    pub fn eval(&self, u: f64) -> RadiusJet {
        match self.spec {
            RadiusSpec::Constant { r0 } => RadiusJet { r: r0, dr: 0.0, ddr: 0.0 },
            RadiusSpec::Linear { a, b } => RadiusJet { r: a * u + b, dr: a, ddr: 0.0 },
            RadiusSpec::Quadratic { a, b, c } => {
                RadiusJet { r: (a * u + b) * u + c, dr: 2.0 * a * u + b, ddr: 2.0 * a }
            }
            RadiusSpec::CosSq => {
                let (s, c) = (u * u).sin_cos();
                RadiusJet { r: c, dr: -2.0 * u * s, ddr: -2.0 * s - 4.0 * u * u * c }
            }
            RadiusSpec::Sine { offset, amplitude } => {
                let (s, c) = u.sin_cos();
                RadiusJet { r: offset + amplitude * s, dr: amplitude * c, ddr: -amplitude * s }
            }
            RadiusSpec::CoshScaled { c1, shift } => {
                let x = u / c1 + shift;
                RadiusJet { r: c1 * x.cosh(), dr: x.sinh(), ddr: x.cosh() / c1 }
            }
            RadiusSpec::Sampled { .. } => {
                let spline = self.spline.as_ref().expect("sampled radius has a spline");
                let (r, dr, ddr) = spline.eval(u);
                RadiusJet { r: r[0], dr: dr[0], ddr: ddr[0] }
            }
        }
    }

    /// Like [`eval`](Self::eval) but rejects `r(u) <= 0`.
    pub fn eval_positive(&self, u: f64) -> Result<RadiusJet> {
        let jet = self.eval(u);
        if !(jet.r > 0.0) {
            return Err(Error::NonpositiveRadius { u, r: jet.r });
        }
        Ok(jet)
    }
}

/// Pointwise scalar data of a canal patch; all closed forms are functions
/// of these alone.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CanalScalars {
    pub v: f64,
    pub r: f64,
    pub dr: f64,
    pub ddr: f64,
    pub k: [f64; 3],
    pub dk: [f64; 3],
}

impl CanalScalars {
    /// `f = 1 - k2 r cos v - k3 r sin v`
    pub fn f(&self) -> f64 {
        let (s, c) = self.v.sin_cos();
        1.0 - self.k[1] * self.r * c - self.k[2] * self.r * s
    }

    pub fn f_u(&self) -> f64 {
        let (s, c) = self.v.sin_cos();
        -(self.dk[1] * self.r + self.k[1] * self.dr) * c - (self.dk[2] * self.r + self.k[2] * self.dr) * s
    }

    pub fn f_v(&self) -> f64 {
        let (s, c) = self.v.sin_cos();
        self.k[1] * self.r * s - self.k[2] * self.r * c
    }

    /// `g = f_u - k2 r' cos v - k3 r' sin v`
    pub fn g(&self) -> f64 {
        let (s, c) = self.v.sin_cos();
        self.f_u() - self.k[1] * self.dr * c - self.k[2] * self.dr * s
    }

    /// `f r'' - g r'`, recurring in every general formula.
    fn d(&self) -> f64 {
        self.f() * self.ddr - self.g() * self.dr
    }

    /// `f² + r'²`
    fn q(&self) -> f64 {
        let f = self.f();
        f * f + self.dr * self.dr
    }

    /// `W² = r²(f² + r'²)`
    pub fn w2(&self) -> f64 {
        self.r * self.r * self.q()
    }

    /// Copy with `r' = r'' = 0`.
    pub fn as_tube(&self) -> CanalScalars {
        CanalScalars { dr: 0.0, ddr: 0.0, ..*self }
    }

    /// Copy with all spine curvatures zeroed.
    pub fn as_straight(&self) -> CanalScalars {
        CanalScalars { k: [0.0; 3], dk: [0.0; 3], ..*self }
    }
}

/// Closed forms in `(T, M1, M2, M3)` components.
pub mod closed {
    use super::CanalScalars;

    /// `Xu, Xv, Xuu, Xuv, Xvv`.
    pub fn partials(s: &CanalScalars) -> [[f64; 4]; 5] {
        let (sv, cv) = s.v.sin_cos();
        let f = s.f();
        [
            [f, 0.0, s.dr * cv, s.dr * sv],
            [0.0, 0.0, -s.r * sv, s.r * cv],
            [s.g(), f * s.k[0], f * s.k[1] + s.ddr * cv, f * s.k[2] + s.ddr * sv],
            [s.f_v(), 0.0, -s.dr * sv, s.dr * cv],
            [0.0, 0.0, -s.r * cv, -s.r * sv],
        ]
    }

    /// `h(Xu,Xu), h(Xu,Xv), h(Xv,Xv)` as printed.
    pub fn second_form(s: &CanalScalars) -> [[f64; 4]; 3] {
        let (sv, cv) = s.v.sin_cos();
        let (f, r, dr, d, q) = (s.f(), s.r, s.dr, s.d(), s.q());
        let normal_part = f * (f * f - f * f * f + r * d) / (r * q);
        let huu = [
            (f * f * dr * (f - 1.0) - r * dr * d) / (r * q),
            f * s.k[0],
            normal_part * cv,
            normal_part * sv,
        ];
        let base = [dr, 0.0, -f * cv, -f * sv];
        let huv = base.map(|c| s.f_v() * dr / q * c);
        let hvv = base.map(|c| f * r / q * c);
        [huu, huv, hvv]
    }

    /// General Gaussian curvature
    /// `(f⁴ - f³ - f r (f r'' - g r') - f_v² r'²) / (r² (f² + r'²)²)`.
    pub fn gauss_general(s: &CanalScalars) -> f64 {
        let (f, r, dr, q) = (s.f(), s.r, s.dr, s.q());
        let fv = s.f_v();
        (f.powi(4) - f.powi(3) - f * r * s.d() - fv * fv * dr * dr) / (r * r * q * q)
    }

    /// Tube: `(f - 1) / (f r²)`.
    pub fn gauss_tube(s: &CanalScalars) -> f64 {
        let f = s.f();
        (f - 1.0) / (f * s.r * s.r)
    }

    /// Straight spine: `-r'' / (r (1 + r'²)²)`.
    pub fn gauss_straight(s: &CanalScalars) -> f64 {
        let e = 1.0 + s.dr * s.dr;
        -s.ddr / (s.r * e * e)
    }

    pub fn mean_general(s: &CanalScalars) -> [f64; 4] {
        let (sv, cv) = s.v.sin_cos();
        let (f, r, dr, d, q) = (s.f(), s.r, s.dr, s.d(), s.q());
        let scale = 1.0 / (2.0 * r * q * q);
        let normal = -f * f * q + f.powi(3) * (1.0 - f) + f * r * d;
        [
            scale * (f * dr * q - r * dr * d - f * f * dr * (1.0 - f)),
            scale * f * r * s.k[0] * q,
            scale * normal * cv,
            scale * normal * sv,
        ]
    }

    /// Tube: `1/(2 f r) (r k1 M1 + (1 - 2f)(cos v M2 + sin v M3))`.
    pub fn mean_tube(s: &CanalScalars) -> [f64; 4] {
        let (sv, cv) = s.v.sin_cos();
        let f = s.f();
        let scale = 1.0 / (2.0 * f * s.r);
        [0.0, scale * s.r * s.k[0], scale * (1.0 - 2.0 * f) * cv, scale * (1.0 - 2.0 * f) * sv]
    }

    /// Straight spine:
    /// `(1 + r'² - r r'') / (2 r (1 + r'²)²) (r' T - cos v M2 - sin v M3)`.
    pub fn mean_straight(s: &CanalScalars) -> [f64; 4] {
        let (sv, cv) = s.v.sin_cos();
        let e = 1.0 + s.dr * s.dr;
        let scale = (e - s.r * s.ddr) / (2.0 * s.r * e * e);
        [scale * s.dr, 0.0, -scale * cv, -scale * sv]
    }

    /// Printed scalar mean curvature, general case. The radicand is clamped
    /// at zero against rounding.
    pub fn mean_scalar_general(s: &CanalScalars) -> f64 {
        let (f, r, dr, d, q) = (s.f(), s.r, s.dr, s.d(), s.q());
        let k1 = s.k[0];
        let one_f = 1.0 - f;
        let radicand = f * f * q * q - 2.0 * f * r * dr * dr * d - 2.0 * f.powi(3) * q * one_f
            + d * d * r * r
            + 2.0 * f * f * r * d
            + f.powi(4) * one_f * one_f
            + f * f * r * r * k1 * k1 * q
            - 4.0 * f.powi(3) * r * d;
        radicand.max(0.0).sqrt() / (2.0 * r * q.powf(1.5))
    }

    /// Printed tube scalar `(4f² - 4f + r² k1² + 1)^(1/2) / (2 f r)`;
    /// negative where `f < 0`.
    pub fn mean_scalar_tube(s: &CanalScalars) -> f64 {
        let f = s.f();
        let radicand = 4.0 * f * f - 4.0 * f + s.r * s.r * s.k[0] * s.k[0] + 1.0;
        radicand.max(0.0).sqrt() / (2.0 * f * s.r)
    }

    /// Printed straight-spine scalar `(r'² - r'' r + 1) / (2 r (1 + r'²)^(3/2))`;
    /// signed.
    pub fn mean_scalar_straight(s: &CanalScalars) -> f64 {
        let e = 1.0 + s.dr * s.dr;
        (s.dr * s.dr - s.ddr * s.r + 1.0) / (2.0 * s.r * e.powf(1.5))
    }
}

/// All partial derivative data of the patch at `(u, v)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfaceJet {
    pub u: f64,
    pub v: f64,
    pub x: Vec4,
    pub xu: Vec4,
    pub xv: Vec4,
    pub xuu: Vec4,
    pub xuv: Vec4,
    pub xvv: Vec4,
    pub f: f64,
    pub g: f64,
    pub frame: Frame4,
    pub scalars: CanalScalars,
}

impl SurfaceJet {
    pub fn r(&self) -> f64 {
        self.scalars.r
    }
    pub fn dr(&self) -> f64 {
        self.scalars.dr
    }
    pub fn ddr(&self) -> f64 {
        self.scalars.ddr
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FirstFundamental {
    pub e: f64,
    pub f: f64,
    pub g: f64,
    pub w2: f64,
    /// Largest gap between the inner products and `E = f² + r'²`, `F = 0`,
    /// `G = r²`.
    pub closed_defect: f64,
}

/// `h(Xu,Xu)`, `h(Xu,Xv)`, `h(Xv,Xv)` as ambient vectors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SecondFundamental {
    pub huu: Vec4,
    pub huv: Vec4,
    pub hvv: Vec4,
}

impl SecondFundamental {
    pub fn components(&self, frame: &Frame4) -> [[f64; 4]; 3] {
        [frame.coords(self.huu), frame.coords(self.huv), frame.coords(self.hvv)]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvatureData {
    pub k: f64,
    pub hvec: Vec4,
    /// `hvec` along `(T, M1, M2, M3)`.
    pub hvec_frame: [f64; 4],
    /// `|hvec|`
    pub h: f64,
    pub regular: bool,
}

/// Which closed form to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    General,
    Tube,
    Straight,
}

/// A framed spine together with a radius function.
#[derive(Clone, Debug)]
pub struct CanalSurface {
    pub spine: FramedCurve,
    pub radius: RadiusFunction,
}

impl CanalSurface {
    pub fn new(spine: FramedCurve, radius: RadiusFunction) -> Self {
        CanalSurface { spine, radius }
    }

    pub fn u_range(&self) -> (f64, f64) {
        self.spine.range()
    }

    pub fn point(&self, u: f64, v: f64) -> Result<Vec4> {
        surface_point(&self.spine, &self.radius, u, v)
    }

    pub fn jet(&self, u: f64, v: f64) -> Result<SurfaceJet> {
        surface_jet(&self.spine, &self.radius, u, v)
    }

    pub fn is_straight(&self) -> bool {
        self.spine.is_straight(MODE_TOL)
    }
}

/// `γ(u) + r(u)(M2(u) cos v + M3(u) sin v)`.
pub fn surface_point(fc: &FramedCurve, rad: &RadiusFunction, u: f64, v: f64) -> Result<Vec4> {
    let local = fc.local(u)?;
    let r = rad.eval_positive(u)?.r;
    let (s, c) = v.sin_cos();
    Ok(local.point + (local.frame.m2 * c + local.frame.m3 * s) * r)
}

pub fn surface_jet(fc: &FramedCurve, rad: &RadiusFunction, u: f64, v: f64) -> Result<SurfaceJet> {
    let local = fc.local(u)?;
    let rj = rad.eval_positive(u)?;
    let scalars = CanalScalars { v, r: rj.r, dr: rj.dr, ddr: rj.ddr, k: local.k, dk: local.dk };
    let frame = local.frame;
    let [xu, xv, xuu, xuv, xvv] = closed::partials(&scalars).map(|c| frame.compose(c));
    let (s, c) = v.sin_cos();
    Ok(SurfaceJet {
        u,
        v,
        x: local.point + (frame.m2 * c + frame.m3 * s) * rj.r,
        xu,
        xv,
        xuu,
        xuv,
        xvv,
        f: scalars.f(),
        g: scalars.g(),
        frame,
        scalars,
    })
}

/// First fundamental form from inner products, without the regularity check.
pub fn first_form_values(jet: &SurfaceJet) -> FirstFundamental {
    let e = dot(jet.xu, jet.xu);
    let f = dot(jet.xu, jet.xv);
    let g = dot(jet.xv, jet.xv);
    let s = &jet.scalars;
    let closed_defect = (e - (jet.f * jet.f + s.dr * s.dr))
        .abs()
        .max(f.abs())
        .max((g - s.r * s.r).abs());
    FirstFundamental { e, f, g, w2: e * g - f * f, closed_defect }
}

pub fn first_form(jet: &SurfaceJet) -> Result<FirstFundamental> {
    let ff = first_form_values(jet);
    if !(ff.w2 > IRREGULAR_W2) {
        return Err(Error::Irregular(ff.w2));
    }
    Ok(ff)
}

fn check_regular(s: &CanalScalars) -> Result<()> {
    let w2 = s.w2();
    if !(w2 > IRREGULAR_W2) {
        return Err(Error::Irregular(w2));
    }
    Ok(())
}

/// Second fundamental form from the closed expressions.
pub fn second_form_closed(jet: &SurfaceJet) -> Result<SecondFundamental> {
    check_regular(&jet.scalars)?;
    let [huu, huv, hvv] = closed::second_form(&jet.scalars).map(|c| jet.frame.compose(c));
    Ok(SecondFundamental { huu, huv, hvv })
}

/// Second fundamental form from the orthogonal-patch projection formulas
/// applied to the jet's partials.
pub fn second_form_generic(jet: &SurfaceJet, ff: &FirstFundamental) -> Result<SecondFundamental> {
    if !(ff.f.abs() <= ORTHOGONAL_F_TOL) {
        return Err(Error::NonOrthogonalPatch(ff.f));
    }
    if !(ff.w2 > IRREGULAR_W2) {
        return Err(Error::Irregular(ff.w2));
    }
    let (xu, xv) = (jet.xu, jet.xv);
    let huu = jet.xuu - xu * (dot(jet.xuu, xu) / ff.e) + xv * (dot(jet.xuv, xu) / ff.g);
    let huv = jet.xuv - xu * (dot(jet.xuv, xu) / ff.e) - xv * (dot(jet.xuv, xv) / ff.g);
    let hvv = jet.xvv + xu * (dot(jet.xuv, xv) / ff.e) - xv * (dot(jet.xvv, xv) / ff.g);
    Ok(SecondFundamental { huu, huv, hvv })
}

/// `K = (<h11, h22> - <h12, h12>) / W²`.
pub fn gauss_from_forms(ff: &FirstFundamental, sf: &SecondFundamental) -> f64 {
    (dot(sf.huu, sf.hvv) - dot(sf.huv, sf.huv)) / ff.w2
}

/// `H = (E h22 - 2F h12 + G h11) / (2 W²)`.
pub fn mean_from_forms(ff: &FirstFundamental, sf: &SecondFundamental) -> Vec4 {
    (sf.hvv * ff.e - sf.huv * (2.0 * ff.f) + sf.huu * ff.g) / (2.0 * ff.w2)
}

fn check_mode(s: &CanalScalars, mode: Mode) -> Result<()> {
    match mode {
        Mode::General => {}
        Mode::Tube => {
            if !(s.dr.abs() <= MODE_TOL && s.ddr.abs() <= MODE_TOL) {
                return Err(Error::WrongMode(format!(
                    "tube mode needs constant radius (r' = {}, r'' = {})",
                    s.dr, s.ddr
                )));
            }
        }
        Mode::Straight => {
            if s.k.iter().chain(&s.dk).any(|k| !(k.abs() <= MODE_TOL)) {
                return Err(Error::WrongMode(format!(
                    "straight mode needs vanishing spine curvature (k = {:?})",
                    s.k
                )));
            }
        }
    }
    check_regular(s)?;
    if mode == Mode::Tube {
        let f = s.f();
        if !(f.abs() > TUBE_SINGULAR_F) {
            return Err(Error::TubeSingular(f));
        }
    }
    Ok(())
}

/// Gaussian curvature from the closed form selected by `mode`.
pub fn gauss_k(jet: &SurfaceJet, mode: Mode) -> Result<f64> {
    let s = &jet.scalars;
    check_mode(s, mode)?;
    Ok(match mode {
        Mode::General => closed::gauss_general(s),
        Mode::Tube => closed::gauss_tube(s),
        Mode::Straight => closed::gauss_straight(s),
    })
}

fn mean_components(s: &CanalScalars, mode: Mode) -> Result<[f64; 4]> {
    check_mode(s, mode)?;
    Ok(match mode {
        Mode::General => closed::mean_general(s),
        Mode::Tube => closed::mean_tube(s),
        Mode::Straight => closed::mean_straight(s),
    })
}

/// Mean curvature vector from the closed form selected by `mode`.
pub fn mean_vector(jet: &SurfaceJet, mode: Mode) -> Result<Vec4> {
    Ok(jet.frame.compose(mean_components(&jet.scalars, mode)?))
}

/// The printed scalar formula for `mode`, signed where the formula is.
pub fn printed_mean_scalar(jet: &SurfaceJet, mode: Mode) -> Result<f64> {
    let s = &jet.scalars;
    check_mode(s, mode)?;
    Ok(match mode {
        Mode::General => closed::mean_scalar_general(s),
        Mode::Tube => closed::mean_scalar_tube(s),
        Mode::Straight => closed::mean_scalar_straight(s),
    })
}

/// Scalar mean curvature `|H|`, cross-checked against the printed formula
/// taken in absolute value.
pub fn mean_scalar(jet: &SurfaceJet, mode: Mode) -> Result<f64> {
    let c = mean_components(&jet.scalars, mode)?;
    let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
    let printed = printed_mean_scalar(jet, mode)?;
    let gap = (printed.abs() - norm).abs();
    if !(gap <= SCALAR_MISMATCH_TOL * norm.max(printed.abs()) + 1e-14) {
        return Err(Error::FormulaMismatch { printed, norm });
    }
    Ok(norm)
}

/// General-mode curvature at a jet; irregular points are flagged with NaN
/// values rather than rejected.
pub fn curvature(jet: &SurfaceJet) -> CurvatureData {
    let s = &jet.scalars;
    if check_regular(s).is_err() {
        return CurvatureData {
            k: f64::NAN,
            hvec: Vec4([f64::NAN; 4]),
            hvec_frame: [f64::NAN; 4],
            h: f64::NAN,
            regular: false,
        };
    }
    let hvec_frame = closed::mean_general(s);
    let hvec = jet.frame.compose(hvec_frame);
    CurvatureData { k: closed::gauss_general(s), hvec, hvec_frame, h: hvec.norm(), regular: true }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::{make_curve, CurveSpec};
    use crate::ptframe::{propagate, seed_frame};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn straight_spine() -> FramedCurve {
        let c = make_curve(&CurveSpec::line(Vec4::ZERO, Vec4::basis(0), [-2.0, 3.0])).unwrap();
        propagate(&c, -2.0, 3.0, 0.01, &Frame4::CANONICAL).unwrap()
    }

    fn torus_spine() -> FramedCurve {
        let c = make_curve(&CurveSpec::torus(0.6, 0.4, 1.0, 2.0, [0.0, 2.0 * PI])).unwrap();
        propagate(&c, 0.0, 2.0 * PI, 1e-3, &seed_frame(&c, 0.0).unwrap()).unwrap()
    }

    fn cosh() -> RadiusFunction {
        RadiusFunction::new(RadiusSpec::CoshScaled { c1: 1.0, shift: 0.0 }).unwrap()
    }

    fn close(a: Vec4, b: Vec4, tol: f64) -> bool {
        a.max_abs_diff(b) <= tol
    }

    #[test]
    fn radius_catalog_derivatives() {
        // Central differences of r and r' against the stated derivatives.
        let rads = [
            RadiusFunction::constant(2.0),
            RadiusFunction::linear(2.0, 6.0),
            RadiusFunction::quadratic(1.0, 0.0, 0.0),
            RadiusFunction::cos_sq(),
            RadiusFunction::sine(2.0, 0.3),
            RadiusFunction::new(RadiusSpec::CoshScaled { c1: 1.7, shift: -0.4 }).unwrap(),
        ];
        let h = 1e-5;
        for rad in &rads {
            for u in [0.1, 0.5, 0.9, 1.1] {
                let j = rad.eval(u);
                let (p, m) = (rad.eval(u + h), rad.eval(u - h));
                assert!(((p.r - m.r) / (2.0 * h) - j.dr).abs() < 1e-8, "{:?}", rad.spec());
                assert!(((p.dr - m.dr) / (2.0 * h) - j.ddr).abs() < 1e-8, "{:?}", rad.spec());
            }
        }
        assert_eq!(RadiusFunction::quadratic(1.0, 0.0, 0.0).eval(3.0).r, 9.0);
        assert_eq!(RadiusFunction::linear(2.0, 6.0).eval(1.0).r, 8.0);
    }

    #[test]
    fn radius_json_catalog() {
        let spec: RadiusSpec = serde_json::from_str(r#"{"kind":"quadratic"}"#).unwrap();
        assert_eq!(spec, RadiusSpec::Quadratic { a: 1.0, b: 0.0, c: 0.0 });
        let spec: RadiusSpec = serde_json::from_str(r#"{"kind":"cos_sq"}"#).unwrap();
        assert_eq!(spec, RadiusSpec::CosSq);
        let spec: RadiusSpec = serde_json::from_str(r#"{"kind":"linear","a":2,"b":6}"#).unwrap();
        assert_eq!(spec, RadiusSpec::Linear { a: 2.0, b: 6.0 });
    }

    #[test]
    fn sampled_radius_follows_samples() {
        let pts = (0..20).map(|i| (i as f64 * 0.1, 1.0 + (i as f64 * 0.1).powi(2))).collect();
        let rad = RadiusFunction::new(RadiusSpec::Sampled { points: pts }).unwrap();
        let j = rad.eval(0.95);
        assert!((j.r - (1.0 + 0.95 * 0.95)).abs() < 1e-12);
        assert!((j.dr - 1.9).abs() < 1e-10);
        assert!((j.ddr - 2.0).abs() < 1e-8);
    }

    #[test]
    fn nonpositive_radius_is_rejected() {
        let fc = straight_spine();
        assert!(matches!(
            surface_point(&fc, &RadiusFunction::linear(1.0, 0.0), -1.0, 0.0),
            Err(Error::NonpositiveRadius { .. })
        ));
    }

    #[test]
    fn straight_tube_points() {
        let fc = straight_spine();
        let rad = RadiusFunction::constant(1.0);
        assert_eq!(surface_point(&fc, &rad, 0.0, 0.0).unwrap(), Vec4::new(0.0, 0.0, 1.0, 0.0));
        let p = surface_point(&fc, &rad, 0.0, PI / 2.0).unwrap();
        assert!(close(p, Vec4::new(0.0, 0.0, 0.0, 1.0), 1e-16));
    }

    #[test]
    fn torus_tube_point_uses_seed_frame() {
        let fc = torus_spine();
        let seed = seed_frame(fc.curve(), 0.0).unwrap();
        let p = surface_point(&fc, &RadiusFunction::constant(0.1), 0.0, 0.0).unwrap();
        let m2n = (2.56_f64 * 2.56 + 0.96 * 0.96).sqrt();
        let expect = Vec4::new(0.6 + 0.1 * 2.56 / m2n, 0.0, 0.4 - 0.1 * 0.96 / m2n, 0.0);
        assert!(close(p, expect, 1e-14));
        assert!(close(p, Vec4::new(0.6, 0.0, 0.4, 0.0) + seed.m2 * 0.1, 1e-14));
    }

    #[test]
    fn straight_jets() {
        let fc = straight_spine();
        let jet = surface_jet(&fc, &RadiusFunction::constant(1.0), 1.3, 0.8).unwrap();
        assert_eq!(jet.xu, Vec4::basis(0));
        assert_eq!(jet.xuu, Vec4::ZERO);
        assert_eq!((jet.f, jet.g), (1.0, 0.0));

        let jet = surface_jet(&fc, &RadiusFunction::quadratic(1.0, 0.0, 1.0), 1.0, 0.0).unwrap();
        assert!(close(jet.xu, Vec4::new(1.0, 0.0, 2.0, 0.0), 1e-15));
        assert!(close(jet.xvv, Vec4::new(0.0, 0.0, -2.0, 0.0), 1e-15));
        let (s, c) = 0.4_f64.sin_cos();
        let jet = surface_jet(&fc, &RadiusFunction::constant(3.0), 0.2, 0.4).unwrap();
        assert!(close(jet.xv, jet.frame.m2 * (-3.0 * s) + jet.frame.m3 * (3.0 * c), 1e-12));
    }

    #[test]
    fn torus_tube_partials_match_differences() {
        let fc = torus_spine();
        let rad = RadiusFunction::constant(0.2);
        let (u, v) = (0.5, 1.0);
        let jet = surface_jet(&fc, &rad, u, v).unwrap();
        let h = 1e-5;
        let x = |u, v| surface_point(&fc, &rad, u, v).unwrap();
        let xu = (x(u + h, v) - x(u - h, v)) / (2.0 * h);
        let xv = (x(u, v + h) - x(u, v - h)) / (2.0 * h);
        assert!(close(jet.xu, xu, 1e-6));
        assert!(close(jet.xv, xv, 1e-6));
        let xuu = (x(u + h, v) - x(u, v) * 2.0 + x(u - h, v)) / (h * h);
        assert!(close(jet.xuu, xuu, 1e-4));
    }

    #[test]
    fn first_form_examples() {
        let fc = straight_spine();
        let ff = first_form(&surface_jet(&fc, &RadiusFunction::constant(1.0), 0.3, 2.0).unwrap()).unwrap();
        assert!((ff.e - 1.0).abs() < 1e-15 && ff.f.abs() < 1e-15 && (ff.g - 1.0).abs() < 1e-15);
        let ff = first_form(&surface_jet(&fc, &RadiusFunction::linear(2.0, 6.0), 0.0, 1.0).unwrap()).unwrap();
        assert!((ff.e - 5.0).abs() < 1e-13 && ff.f.abs() < 1e-13 && (ff.g - 36.0).abs() < 1e-12);
        assert!(ff.closed_defect < 1e-12);
    }

    /// Spine with k2 = 1 at some node: a unit-radius tube then has f = 0 at
    /// v = 0 there.
    #[test]
    fn first_form_detects_irregular_point() {
        // Unit circle in the (x1, x2) plane: κ = 1. Seed with M2 along γ'' so
        // that k2 = 1 at u = 0, and f = 1 - k2 r cos v vanishes at v = 0.
        let circle = make_curve(&CurveSpec::torus(1.0, 0.0, 1.0, 1.0, [0.0, 1.0])).unwrap();
        let base = seed_frame(&circle, 0.0).unwrap();
        let seed = base.rotate_normals([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, -1.0]]);
        let fc = propagate(&circle, 0.0, 1.0, 0.01, &seed).unwrap();
        // Oracle: scan f over the nodes for the zero.
        let rad = RadiusFunction::constant(1.0);
        let worst = fc
            .grid()
            .iter()
            .map(|&u| surface_jet(&fc, &rad, u, 0.0).unwrap().f.abs())
            .fold(f64::INFINITY, f64::min);
        assert!(worst < 1e-12);
        let jet = surface_jet(&fc, &rad, 0.0, 0.0).unwrap();
        assert!((fc.k2()[0] - 1.0).abs() < 1e-14);
        assert!(matches!(first_form(&jet), Err(Error::Irregular(_))));
        assert!(matches!(gauss_k(&jet, Mode::General), Err(Error::Irregular(_))));
        assert!(!curvature(&jet).regular);
    }

    #[test]
    fn straight_second_forms() {
        let fc = straight_spine();
        let (u, v) = (0.3, 2.0);
        let jet = surface_jet(&fc, &cosh(), u, v).unwrap();
        let ff = first_form(&jet).unwrap();
        let closed = second_form_closed(&jet).unwrap();
        let generic = second_form_generic(&jet, &ff).unwrap();
        // Straight-spine reduction written out directly.
        let (r, dr, ddr) = (u.cosh(), u.sinh(), u.cosh());
        let (s, c) = v.sin_cos();
        let dir = Vec4::new(dr, 0.0, -c, -s);
        let huu = dir * (-ddr / (1.0 + dr * dr));
        let hvv = dir * (r / (1.0 + dr * dr));
        for sf in [closed, generic] {
            assert!(close(sf.huu, huu, 1e-10));
            assert!(close(sf.huv, Vec4::ZERO, 1e-10));
            assert!(close(sf.hvv, hvv, 1e-10));
        }

        let jet = surface_jet(&fc, &RadiusFunction::constant(1.0), u, v).unwrap();
        let sf = second_form_closed(&jet).unwrap();
        assert!(close(sf.huu, Vec4::ZERO, 1e-15));
        assert!(close(sf.hvv, Vec4::new(0.0, 0.0, -c, -s), 1e-15));
        let g = second_form_generic(&jet, &first_form(&jet).unwrap()).unwrap();
        assert!(close(g.huu, sf.huu, 1e-15) && close(g.hvv, sf.hvv, 1e-15));
    }

    #[test]
    fn canal_second_forms_agree() {
        let fc = torus_spine();
        for rad in [RadiusFunction::constant(0.2), RadiusFunction::sine(2.0, 0.3)] {
            for &(u, v) in &[(0.5, 1.0), (2.2, 4.0), (4.9, 0.1)] {
                let jet = surface_jet(&fc, &rad, u, v).unwrap();
                let ff = first_form(&jet).unwrap();
                assert!(ff.closed_defect < 1e-10);
                let a = second_form_closed(&jet).unwrap();
                let b = second_form_generic(&jet, &ff).unwrap();
                let scale = 1.0 + b.huu.norm() + b.hvv.norm();
                assert!(close(a.huu, b.huu, 1e-6 * scale));
                assert!(close(a.huv, b.huv, 1e-6 * scale));
                assert!(close(a.hvv, b.hvv, 1e-6 * scale));
                let comps = b.components(&jet.frame);
                assert!(comps[1][1].abs() < 1e-10 && comps[2][1].abs() < 1e-10);
            }
        }
    }

    #[test]
    fn generic_form_rejects_skew_patch() {
        let fc = straight_spine();
        let jet = surface_jet(&fc, &RadiusFunction::constant(1.0), 0.0, 0.0).unwrap();
        let mut ff = first_form(&jet).unwrap();
        ff.f = 1e-6;
        assert!(matches!(second_form_generic(&jet, &ff), Err(Error::NonOrthogonalPatch(_))));
    }

    #[test]
    fn gauss_examples() {
        let fc = straight_spine();
        let jet = surface_jet(&fc, &RadiusFunction::linear(2.0, 6.0), 0.7, 1.0).unwrap();
        assert_eq!(gauss_k(&jet, Mode::Straight).unwrap(), 0.0);
        let jet = surface_jet(&fc, &cosh(), 0.0, 1.0).unwrap();
        assert_eq!(gauss_k(&jet, Mode::Straight).unwrap(), -1.0);

        let tube = CanalScalars { v: 0.0, r: 1.0, dr: 0.0, ddr: 0.0, k: [0.0, 0.5, 0.0], dk: [0.0; 3] };
        assert_eq!(tube.f(), 0.5);
        assert_eq!(closed::gauss_tube(&tube), -1.0);
        // f³(f - 1)/(r² f⁴) from the general formula at r' = 0.
        assert!((closed::gauss_general(&tube) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn mode_guards() {
        let fc = straight_spine();
        let jet = surface_jet(&fc, &RadiusFunction::linear(2.0, 6.0), 0.7, 1.0).unwrap();
        assert!(matches!(gauss_k(&jet, Mode::Tube), Err(Error::WrongMode(_))));
        let tfc = torus_spine();
        let jet = surface_jet(&tfc, &RadiusFunction::constant(0.2), 0.7, 1.0).unwrap();
        assert!(matches!(gauss_k(&jet, Mode::Straight), Err(Error::WrongMode(_))));
        assert!(matches!(mean_vector(&jet, Mode::Straight), Err(Error::WrongMode(_))));
        assert!(gauss_k(&jet, Mode::Tube).is_ok());
    }

    #[test]
    fn tube_mode_never_divides_by_zero_f() {
        // r' = 0 makes W² = r² f², so f = 0 is caught before the division.
        let s = CanalScalars { v: 0.0, r: 1.0, dr: 0.0, ddr: 0.0, k: [0.0, 1.0, 0.0], dk: [0.0; 3] };
        assert!(matches!(check_mode(&s, Mode::Tube), Err(Error::Irregular(_))));
        assert!(matches!(check_mode(&s, Mode::General), Err(Error::Irregular(_))));
    }

    #[test]
    fn mean_examples() {
        let fc = straight_spine();
        let (s, c) = 0.9_f64.sin_cos();
        let jet = surface_jet(&fc, &RadiusFunction::constant(1.0), 0.5, 0.9).unwrap();
        let h = mean_vector(&jet, Mode::Straight).unwrap();
        assert!(close(h, Vec4::new(0.0, 0.0, -0.5 * c, -0.5 * s), 1e-15));
        assert!((mean_scalar(&jet, Mode::Straight).unwrap() - 0.5).abs() < 1e-15);
        assert!((mean_scalar(&jet, Mode::Tube).unwrap() - 0.5).abs() < 1e-15);

        let jet = surface_jet(&fc, &cosh(), 0.4, 0.9).unwrap();
        assert!(mean_vector(&jet, Mode::Straight).unwrap().norm() < 1e-15);
        assert!(mean_scalar(&jet, Mode::Straight).unwrap() < 1e-15);

        // f = 0.5, r = 1, k1 = 0: printed tube radicand (2f - 1)² = 0.
        let t = CanalScalars { v: 0.0, r: 1.0, dr: 0.0, ddr: 0.0, k: [0.0, 0.5, 0.0], dk: [0.0; 3] };
        assert_eq!(closed::mean_scalar_tube(&t), 0.0);
        assert_eq!(closed::mean_tube(&t), [0.0; 4]);
    }

    #[test]
    fn tube_mean_matches_general_on_torus() {
        let fc = torus_spine();
        let rad = RadiusFunction::constant(0.2);
        for i in 0..10 {
            let u = fc.grid()[500 * i + 3];
            let jet = surface_jet(&fc, &rad, u, 0.6 * i as f64).unwrap();
            let a = mean_vector(&jet, Mode::Tube).unwrap();
            let b = mean_vector(&jet, Mode::General).unwrap();
            assert!(close(a, b, 1e-10));
            let k = gauss_k(&jet, Mode::Tube).unwrap();
            assert!((k - gauss_k(&jet, Mode::General).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn closed_curvature_matches_projection_route() {
        let fc = torus_spine();
        let rad = RadiusFunction::sine(2.0, 0.3);
        for i in 0..25 {
            let (u, v) = (0.2 + 0.24 * i as f64, 0.77 * i as f64);
            let jet = surface_jet(&fc, &rad, u, v).unwrap();
            let ff = first_form(&jet).unwrap();
            let sf = second_form_generic(&jet, &ff).unwrap();
            let k_closed = gauss_k(&jet, Mode::General).unwrap();
            let k_proj = gauss_from_forms(&ff, &sf);
            assert!((k_closed - k_proj).abs() <= 1e-8 * k_proj.abs().max(1.0), "{k_closed} {k_proj}");
            let h_closed = mean_vector(&jet, Mode::General).unwrap();
            let h_proj = mean_from_forms(&ff, &sf);
            assert!(close(h_closed, h_proj, 1e-8 * h_proj.norm().max(1.0)));
            let h = mean_scalar(&jet, Mode::General).unwrap();
            assert!((h - h_closed.norm()).abs() <= 1e-9 * h.max(1e-300));
            let data = curvature(&jet);
            assert!(data.regular && (data.h - h).abs() <= 1e-9 * h.max(1e-300));
        }
    }

    fn scalars_strategy() -> impl Strategy<Value = CanalScalars> {
        (
            0.0..(2.0 * PI),
            0.2..3.0f64,
            -2.0..2.0f64,
            -2.0..2.0f64,
            prop::array::uniform3(-1.5..1.5f64),
            prop::array::uniform3(-1.5..1.5f64),
        )
            .prop_map(|(v, r, dr, ddr, k, dk)| CanalScalars { v, r, dr, ddr, k, dk })
    }

    fn within(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    proptest! {
        #[test]
        fn special_cases_collapse(s in scalars_strategy()) {
            let t = s.as_tube();
            if t.f().abs() > 0.05 {
                prop_assert!(within(closed::gauss_tube(&t), closed::gauss_general(&t), 1e-12));
                let (a, b) = (closed::mean_tube(&t), closed::mean_general(&t));
                for i in 0..4 {
                    prop_assert!(within(a[i], b[i], 1e-12));
                }
                let (p, n) = (closed::mean_scalar_tube(&t).abs(), b.iter().map(|x| x * x).sum::<f64>().sqrt());
                prop_assert!(within(p, n, 1e-12));
            }
            let st = s.as_straight();
            prop_assert!(within(closed::gauss_straight(&st), closed::gauss_general(&st), 1e-12));
            let (a, b) = (closed::mean_straight(&st), closed::mean_general(&st));
            for i in 0..4 {
                prop_assert!(within(a[i], b[i], 1e-12));
            }
            let n = b.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!(within(closed::mean_scalar_straight(&st).abs(), n, 1e-12));
        }

        #[test]
        fn general_scalar_is_vector_norm(s in scalars_strategy()) {
            if s.q() > 0.01 {
                let a = closed::mean_general(&s);
                let n = a.iter().map(|x| x * x).sum::<f64>().sqrt();
                let p = closed::mean_scalar_general(&s);
                prop_assert!((p - n).abs() <= 1e-9 * n.max(1e-3), "{p} vs {n}");
            }
        }
    }
}
