//! Spine curves: the Clifford-torus curve, straight lines and sampled
//! curves, with position/derivative jets and arclength reparametrization.

use std::io::Read;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec4;
use crate::spline::CubicSpline;

const UNIT_SPEED_SPEC_TOL: f64 = 1e-12;
const MIN_SAMPLES: usize = 8;
const DEGENERATE_SPEED: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CurveKind {
    /// `(a cos cu, a sin cu, b cos du, b sin du)`.
    TorusCurve { a: f64, b: f64, c: f64, d: f64 },
    /// `origin + u · direction`.
    Line { origin: Vec4, direction: Vec4 },
    /// Interpolated samples `(u, point)`.
    Sampled { points: Vec<(f64, Vec4)> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveSpec {
    #[serde(flatten)]
    pub kind: CurveKind,
    pub domain: [f64; 2],
}

impl CurveSpec {
    pub fn torus(a: f64, b: f64, c: f64, d: f64, domain: [f64; 2]) -> Self {
        CurveSpec { kind: CurveKind::TorusCurve { a, b, c, d }, domain }
    }

    pub fn line(origin: Vec4, direction: Vec4, domain: [f64; 2]) -> Self {
        CurveSpec { kind: CurveKind::Line { origin, direction }, domain }
    }

    /// Sampled curve whose domain is the sample range.
    pub fn sampled(points: Vec<(f64, Vec4)>) -> Self {
        let domain = match (points.first(), points.last()) {
            (Some(a), Some(b)) => [a.0, b.0],
            _ => [0.0, 0.0],
        };
        CurveSpec { kind: CurveKind::Sampled { points }, domain }
    }
}

/// Position and derivatives of a curve at one parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurveJet {
    pub u: f64,
    pub p: Vec4,
    pub d1: Vec4,
    pub d2: Vec4,
    pub d3: Vec4,
}

#[derive(Clone, Debug)]
enum Shape {
    Torus { a: f64, b: f64, c: f64, d: f64 },
    Line { origin: Vec4, direction: Vec4 },
    Sampled(Arc<CubicSpline<4>>),
}

/// An evaluable spine curve.
#[derive(Clone, Debug)]
pub struct Curve {
    shape: Shape,
    domain: (f64, f64),
}

/// Result of [`unit_speed_check`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpeedReport {
    pub max_deviation: f64,
    pub argmax_u: f64,
}

/// Validates `spec` and builds the curve.
pub fn make_curve(spec: &CurveSpec) -> Result<Curve> {
    match &spec.kind {
        CurveKind::TorusCurve { a, b, c, d } => {
            let speed_sq = a * a * c * c + b * b * d * d;
            if !((speed_sq - 1.0).abs() <= UNIT_SPEED_SPEC_TOL) {
                return Err(Error::InvalidSpec(format!(
                    "torus_curve needs a²c²+b²d² = 1, got {speed_sq}"
                )));
            }
        }
        CurveKind::Line { direction, .. } => {
            let n = direction.norm();
            if !((n - 1.0).abs() <= UNIT_SPEED_SPEC_TOL) {
                return Err(Error::InvalidSpec(format!(
                    "line direction must be a unit vector, |direction| = {n}"
                )));
            }
        }
        CurveKind::Sampled { .. } => {}
    }
    Curve::from_spec_unnormalized(spec)
}

impl Curve {
    /// Builds a curve checking structure only, not unit speed. Intended as
    /// input to [`arclength_reparam`].
    pub fn from_spec_unnormalized(spec: &CurveSpec) -> Result<Curve> {
        let [lo, hi] = spec.domain;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidSpec(format!("domain [{lo}, {hi}] is empty or not finite")));
        }
        let shape = match &spec.kind {
            CurveKind::TorusCurve { a, b, c, d } => {
                if !(*c > 0.0 && *d > 0.0) {
                    return Err(Error::InvalidSpec("torus_curve needs c > 0 and d > 0".into()));
                }
                if ![a, b, c, d].iter().all(|x| x.is_finite()) {
                    return Err(Error::InvalidSpec("torus_curve parameters must be finite".into()));
                }
                Shape::Torus { a: *a, b: *b, c: *c, d: *d }
            }
            CurveKind::Line { origin, direction } => {
                if !(origin.is_finite() && direction.is_finite()) {
                    return Err(Error::InvalidSpec("line data must be finite".into()));
                }
                Shape::Line { origin: *origin, direction: *direction }
            }
            CurveKind::Sampled { points } => {
                if points.len() < MIN_SAMPLES {
                    return Err(Error::InvalidSpec(format!(
                        "sampled curve needs at least {MIN_SAMPLES} points, got {}",
                        points.len()
                    )));
                }
                if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
                    return Err(Error::InvalidSpec(
                        "sampled curve parameters must be strictly increasing".into(),
                    ));
                }
                let (first, last) = (points[0].0, points[points.len() - 1].0);
                if lo < first || hi > last {
                    return Err(Error::InvalidSpec(format!(
                        "domain [{lo}, {hi}] exceeds the sample range [{first}, {last}]"
                    )));
                }
                let knots = points.iter().map(|p| p.0).collect();
                let values = points.iter().map(|p| p.1 .0).collect();
                let spline =
                    CubicSpline::new(knots, values).map_err(|e| Error::InvalidSpec(e.to_string()))?;
                Shape::Sampled(Arc::new(spline))
            }
        };
        Ok(Curve { shape, domain: (lo, hi) })
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn length_of_domain(&self) -> f64 {
        self.domain.1 - self.domain.0
    }

    pub fn contains(&self, u: f64) -> bool {
        let slack = 1e-9 * self.length_of_domain().max(1.0);
        u >= self.domain.0 - slack && u <= self.domain.1 + slack
    }

    /// Position and derivatives up to third order.
    pub fn eval_jet(&self, u: f64) -> Result<CurveJet> {
        if !self.contains(u) {
            return Err(Error::OutOfDomain { u, min: self.domain.0, max: self.domain.1 });
        }
        Ok(self.jet_unchecked(u))
    }

    /// Jet without the domain check; sampled curves extend their end cubics.
    pub(crate) fn jet_unchecked(&self, u: f64) -> CurveJet {
        match &self.shape {
            Shape::Torus { a, b, c, d } => {
                let (s1, c1) = (c * u).sin_cos();
                let (s2, c2) = (d * u).sin_cos();
                CurveJet {
                    u,
                    p: Vec4::new(a * c1, a * s1, b * c2, b * s2),
                    d1: Vec4::new(-a * c * s1, a * c * c1, -b * d * s2, b * d * c2),
                    d2: Vec4::new(-a * c * c * c1, -a * c * c * s1, -b * d * d * c2, -b * d * d * s2),
                    d3: Vec4::new(
                        a * c * c * c * s1,
                        -a * c * c * c * c1,
                        b * d * d * d * s2,
                        -b * d * d * d * c2,
                    ),
                }
            }
            Shape::Line { origin, direction } => CurveJet {
                u,
                p: *origin + *direction * u,
                d1: *direction,
                d2: Vec4::ZERO,
                d3: Vec4::ZERO,
            },
            Shape::Sampled(spline) => {
                let (p, d1, d2) = spline.eval(u);
                let h = 1e-4 * self.length_of_domain();
                let (_, _, d2p) = spline.eval(u + h);
                let (_, _, d2m) = spline.eval(u - h);
                let d3 = (Vec4(d2p) - Vec4(d2m)) / (2.0 * h);
                CurveJet { u, p: Vec4(p), d1: Vec4(d1), d2: Vec4(d2), d3 }
            }
        }
    }

    pub fn point(&self, u: f64) -> Result<Vec4> {
        Ok(self.eval_jet(u)?.p)
    }

    pub fn speed(&self, u: f64) -> Result<f64> {
        Ok(self.eval_jet(u)?.d1.norm())
    }

    pub fn is_line(&self) -> bool {
        matches!(self.shape, Shape::Line { .. })
    }
}

/// Samples `n` equispaced parameters (endpoints included) and reports the
/// worst deviation of the speed from 1.
pub fn unit_speed_check(curve: &Curve, n: usize) -> SpeedReport {
    let n = n.max(2);
    let (lo, hi) = curve.domain();
    let mut report = SpeedReport { max_deviation: 0.0, argmax_u: lo };
    for i in 0..n {
        let u = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        let dev = (curve.jet_unchecked(u).d1.norm() - 1.0).abs();
        if dev > report.max_deviation {
            report = SpeedReport { max_deviation: dev, argmax_u: u };
        }
    }
    report
}

/// Re-grids `curve` by arclength.
///
/// Cumulative length uses Simpson's rule on each of `n` equal subintervals;
/// the inverse map is found by Newton iteration on the same quadrature, and
/// the result is a sampled curve through `n + 1` arclength-equispaced points.
pub fn arclength_reparam(curve: &Curve, n: usize) -> Result<Curve> {
    if n + 1 < MIN_SAMPLES {
        return Err(Error::InvalidInput(format!(
            "arclength_reparam needs at least {} subintervals",
            MIN_SAMPLES - 1
        )));
    }
    let (lo, hi) = curve.domain();
    let step = (hi - lo) / n as f64;
    let speed = |u: f64| curve.jet_unchecked(u).d1.norm();
    let checked_speed = |u: f64| -> Result<f64> {
        let s = speed(u);
        if !(s >= DEGENERATE_SPEED) {
            return Err(Error::DegenerateSpeed { u, speed: s });
        }
        Ok(s)
    };
    let simpson = |a: f64, b: f64, sa: f64, sb: f64| -> f64 {
        (b - a) / 6.0 * (sa + 4.0 * speed(0.5 * (a + b)) + sb)
    };

    let nodes: Vec<f64> = (0..=n).map(|i| if i == n { hi } else { lo + step * i as f64 }).collect();
    let mut speeds = Vec::with_capacity(n + 1);
    for &u in &nodes {
        speeds.push(checked_speed(u)?);
    }
    for w in nodes.windows(2) {
        checked_speed(0.5 * (w[0] + w[1]))?;
    }
    let mut cumulative = vec![0.0; n + 1];
    for i in 0..n {
        cumulative[i + 1] = cumulative[i] + simpson(nodes[i], nodes[i + 1], speeds[i], speeds[i + 1]);
    }
    let total = cumulative[n];

    let mut samples = Vec::with_capacity(n + 1);
    let mut seg = 0;
    for j in 0..=n {
        let target = if j == n { total } else { total * j as f64 / n as f64 };
        while seg + 1 < n && cumulative[seg + 1] < target {
            seg += 1;
        }
        let (ua, ub) = (nodes[seg], nodes[seg + 1]);
        let (sa, sb) = (cumulative[seg], cumulative[seg + 1]);
        let mut u = if j == 0 {
            lo
        } else if j == n {
            hi
        } else {
            let mut u = ua + (ub - ua) * (target - sa) / (sb - sa);
            for _ in 0..30 {
                let residual = sa + simpson(ua, u, speeds[seg], speed(u)) - target;
                let next = (u - residual / speed(u)).clamp(ua, ub);
                let done = (next - u).abs() <= 1e-15 * (1.0 + u.abs());
                u = next;
                if done {
                    break;
                }
            }
            u
        };
        if !u.is_finite() {
            u = ua;
        }
        samples.push((target, curve.jet_unchecked(u).p));
    }
    Curve::from_spec_unnormalized(&CurveSpec::sampled(samples))
}

#[derive(Debug, Deserialize)]
struct SampleRow {
    u: f64,
    x1: f64,
    x2: f64,
    x3: f64,
    x4: f64,
}

/// Reads samples from CSV with header `u,x1,x2,x3,x4`.
pub fn read_samples_csv<R: Read>(reader: R) -> Result<Vec<(f64, Vec4)>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let expected = ["u", "x1", "x2", "x3", "x4"];
    if headers.iter().ne(expected.iter().copied()) {
        return Err(Error::InvalidInput(format!(
            "expected CSV header u,x1,x2,x3,x4, got {}",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let r: SampleRow = row?;
        out.push((r.u, Vec4::new(r.x1, r.x2, r.x3, r.x4)));
    }
    Ok(out)
}

pub fn read_samples_csv_path(path: impl AsRef<Path>) -> Result<Vec<(f64, Vec4)>> {
    read_samples_csv(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn torus() -> Curve {
        make_curve(&CurveSpec::torus(0.6, 0.4, 1.0, 2.0, [0.0, 2.0 * PI])).unwrap()
    }

    #[test]
    fn make_curve_validates() {
        assert!(make_curve(&CurveSpec::torus(0.6, 0.4, 1.0, 2.0, [0.0, 1.0])).is_ok());
        assert!(matches!(
            make_curve(&CurveSpec::torus(1.0, 1.0, 1.0, 1.0, [0.0, 1.0])),
            Err(Error::InvalidSpec(_))
        ));
        assert!(make_curve(&CurveSpec::torus(0.6, 0.4, -1.0, 2.0, [0.0, 1.0])).is_err());
        assert!(make_curve(&CurveSpec::line(Vec4::ZERO, Vec4::basis(0), [0.0, 1.0])).is_ok());
        assert!(make_curve(&CurveSpec::line(Vec4::ZERO, Vec4::basis(0) * 2.0, [0.0, 1.0])).is_err());
        assert!(make_curve(&CurveSpec::line(Vec4::ZERO, Vec4::basis(0), [1.0, 1.0])).is_err());
    }

    #[test]
    fn sampled_spec_checks() {
        let pts: Vec<_> = (0..7).map(|i| (i as f64, Vec4::basis(0) * i as f64)).collect();
        assert!(make_curve(&CurveSpec::sampled(pts)).is_err());
        let mut pts: Vec<_> = (0..8).map(|i| (i as f64, Vec4::basis(0) * i as f64)).collect();
        pts[3].0 = pts[2].0;
        assert!(make_curve(&CurveSpec::sampled(pts)).is_err());
    }

    #[test]
    fn torus_jet_at_zero() {
        let j = torus().eval_jet(0.0).unwrap();
        assert_eq!(j.p, Vec4::new(0.6, 0.0, 0.4, 0.0));
        assert_eq!(j.d1, Vec4::new(0.0, 0.6, 0.0, 0.8));
        assert_eq!(j.d2, Vec4::new(-0.6, 0.0, -1.6, 0.0));
    }

    #[test]
    fn line_jet() {
        let c = make_curve(&CurveSpec::line(Vec4::ZERO, Vec4::basis(0), [0.0, 5.0])).unwrap();
        let j = c.eval_jet(3.0).unwrap();
        assert_eq!(j.p, Vec4::new(3.0, 0.0, 0.0, 0.0));
        assert_eq!(j.d1, Vec4::basis(0));
        assert_eq!(j.d2, Vec4::ZERO);
        assert_eq!(j.d3, Vec4::ZERO);
        assert!(matches!(c.eval_jet(5.5), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn torus_second_derivative_norm_matches_differenced_velocity() {
        // Oracle: central difference of the closed-form velocity.
        let c = torus();
        let h = 1e-5;
        for i in 0..20 {
            let u = 0.1 + 0.3 * i as f64;
            let fd = (c.eval_jet(u + h).unwrap().d1 - c.eval_jet(u - h).unwrap().d1) / (2.0 * h);
            assert!((fd.norm() - 2.92_f64.sqrt()).abs() < 1e-8);
            assert!((c.eval_jet(u).unwrap().d2.norm() - 1.708_800_749_063_506).abs() < 1e-12);
        }
    }

    #[test]
    fn derivatives_match_fourth_order_differences() {
        let curves = [
            torus(),
            make_curve(&CurveSpec::line(Vec4::new(1.0, -2.0, 0.5, 3.0), Vec4::new(0.5, 0.5, 0.5, 0.5), [0.0, 4.0]))
                .unwrap(),
        ];
        let h = 1e-4;
        let d = |f: &dyn Fn(f64) -> Vec4, u: f64| {
            (f(u - 2.0 * h) - f(u - h) * 8.0 + f(u + h) * 8.0 - f(u + 2.0 * h)) / (12.0 * h)
        };
        for c in &curves {
            for i in 1..10 {
                let u = 0.35 * i as f64;
                let j = c.eval_jet(u).unwrap();
                let d1 = d(&|x| c.jet_unchecked(x).p, u);
                let d2 = d(&|x| c.jet_unchecked(x).d1, u);
                let d3 = d(&|x| c.jet_unchecked(x).d2, u);
                for (a, b) in [(j.d1, d1), (j.d2, d2), (j.d3, d3)] {
                    assert!(a.max_abs_diff(b) <= 1e-6 * (1.0 + a.norm()), "{a:?} vs {b:?}");
                }
                assert!(j.d1.dot(j.d2).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn unit_speed_reports() {
        assert!(unit_speed_check(&torus(), 100).max_deviation <= 1e-12);
        let line = make_curve(&CurveSpec::line(Vec4::ZERO, Vec4::basis(2), [0.0, 1.0])).unwrap();
        assert_eq!(unit_speed_check(&line, 10).max_deviation, 0.0);
    }

    fn sampled_torus(n: usize) -> Curve {
        let t = torus();
        let pts = (0..n)
            .map(|i| {
                let u = 2.0 * PI * i as f64 / (n - 1) as f64;
                (u, t.eval_jet(u).unwrap().p)
            })
            .collect();
        make_curve(&CurveSpec::sampled(pts)).unwrap()
    }

    #[test]
    fn sampled_torus_is_near_unit_speed() {
        let rep = unit_speed_check(&sampled_torus(200), 50);
        assert!(rep.max_deviation <= 1e-5, "{rep:?}");
    }

    #[test]
    fn reparam_keeps_unit_speed_curves() {
        let r = arclength_reparam(&torus(), 600).unwrap();
        assert!((r.length_of_domain() - 2.0 * PI).abs() < 1e-9);
        assert!(unit_speed_check(&r, 97).max_deviation <= 1e-6);
    }

    #[test]
    fn reparam_rescales_fast_line() {
        let spec = CurveSpec::line(Vec4::ZERO, Vec4::basis(0) * 2.0, [0.0, 1.0]);
        let fast = Curve::from_spec_unnormalized(&spec).unwrap();
        let r = arclength_reparam(&fast, 16).unwrap();
        assert!((r.length_of_domain() - 2.0).abs() < 1e-12);
        assert!(unit_speed_check(&r, 33).max_deviation <= 1e-12);
        assert!(r.point(1.5).unwrap().max_abs_diff(Vec4::new(1.5, 0.0, 0.0, 0.0)) <= 1e-12);
    }

    #[test]
    fn reparam_is_idempotent() {
        // A non-unit-speed ellipse-like curve.
        let pts = (0..=400)
            .map(|i| {
                let u = 2.0 * PI * i as f64 / 400.0;
                (u, Vec4::new(2.0 * u.cos(), u.sin(), 0.3 * (2.0 * u).cos(), 0.1 * u))
            })
            .collect();
        let c = make_curve(&CurveSpec::sampled(pts)).unwrap();
        let once = arclength_reparam(&c, 800).unwrap();
        assert!(unit_speed_check(&once, 200).max_deviation <= 1e-5);
        let twice = arclength_reparam(&once, 800).unwrap();
        assert!((once.length_of_domain() - twice.length_of_domain()).abs() <= 1e-5);
        for i in 0..50 {
            let s = once.length_of_domain() * i as f64 / 49.0;
            let s2 = s.min(twice.domain().1);
            let a = once.point(s).unwrap();
            let b = twice.point(s2).unwrap();
            assert!(a.max_abs_diff(b) <= 1e-5, "{s}: {a:?} vs {b:?}");
        }
    }

    #[test]
    fn reparam_detects_stationary_point() {
        let pts = (0..=20)
            .map(|i| {
                let u = -1.0 + 0.1 * i as f64;
                (u, Vec4::new(u * u * u, 0.0, 0.0, 0.0))
            })
            .collect();
        let c = make_curve(&CurveSpec::sampled(pts)).unwrap();
        assert!(matches!(arclength_reparam(&c, 20), Err(Error::DegenerateSpeed { .. })));
    }

    #[test]
    fn csv_ingestion() {
        let text = "u,x1,x2,x3,x4\n0,1,0,0,0\n0.5,1.5,2,0,0\n";
        let rows = read_samples_csv(text.as_bytes()).unwrap();
        assert_eq!(rows, vec![(0.0, Vec4::basis(0)), (0.5, Vec4::new(1.5, 2.0, 0.0, 0.0))]);
        assert!(read_samples_csv("t,x1,x2,x3,x4\n0,1,0,0,0\n".as_bytes()).is_err());
        assert!(read_samples_csv("u,x1,x2,x3,x4\n0,1,0,0\n".as_bytes()).is_err());
    }
}
