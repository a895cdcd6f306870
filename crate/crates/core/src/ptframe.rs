//! Parallel transport frames along unit-speed curves.
//!
//! The frame `(T, M1, M2, M3)` obeys `T' = k1 M1 + k2 M2 + k3 M3` and
//! `Mi' = -ki T` with `ki = <γ'', Mi>`. It is integrated with classical RK4
//! and re-orthonormalized after every step against the exact tangent `γ'`.
//! The Frenet frame and the Euler angles relating the two frames are
//! available pointwise for cross-checking.

use std::f64::consts::PI;
use std::io::Write;

use crate::curves::Curve;
use crate::error::{Error, Result};
use crate::geom::{complete_frame, dot, gram_schmidt, Frame4, Vec4, DEFAULT_RANK_TOL};

/// Accepted deviation of `|γ'|` from 1 for frame construction. Loose enough
/// for spline curves coming out of arclength reparametrization.
pub const UNIT_SPEED_TOL: f64 = 1e-5;
/// Below this `|γ''|` the seed frame uses canonical completion.
const FLAT_CURVATURE: f64 = 1e-8;
/// Step of the central differences giving τ and σ.
const FRENET_FD_STEP: f64 = 1e-5;
/// Gimbal lock threshold on `cos θ`.
const GIMBAL_TOL: f64 = 1e-6;
const TANGENT_MATCH_TOL: f64 = 1e-8;

/// A curve sampled on a parameter grid with its transported frame.
#[derive(Clone, Debug)]
pub struct FramedCurve {
    curve: Curve,
    grid: Vec<f64>,
    points: Vec<Vec4>,
    frames: Vec<Frame4>,
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
}

/// Spine point, frame, curvatures and their derivatives at one parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpineLocal {
    pub point: Vec4,
    pub frame: Frame4,
    pub k: [f64; 3],
    pub dk: [f64; 3],
}

/// Frenet frame and curvatures at one parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrenetData {
    pub t: Vec4,
    pub n: Vec4,
    pub b1: Vec4,
    pub b2: Vec4,
    pub kappa: f64,
    pub tau: f64,
    pub sigma: f64,
}

/// Euler angles (radians) carrying the parallel frame normals to the
/// Frenet normals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EulerAngles {
    pub theta: f64,
    pub psi: f64,
    pub phi: f64,
}

/// Maximum deviations between the stored `ki` and the Euler-angle
/// expressions, over nodes where the Frenet frame exists.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CurvatureRelationReport {
    pub max_k1: f64,
    pub max_k2: f64,
    pub max_k3: f64,
    pub skipped: usize,
    pub nodes: usize,
}

impl CurvatureRelationReport {
    pub fn max(&self) -> f64 {
        self.max_k1.max(self.max_k2).max(self.max_k3)
    }
}

fn check_unit_speed(u: f64, d1: Vec4) -> Result<()> {
    let speed = d1.norm();
    if !((speed - 1.0).abs() <= UNIT_SPEED_TOL) {
        return Err(Error::NotUnitSpeed { u, speed });
    }
    Ok(())
}

/// Deterministic initial frame: `T = γ'`, `M1` along `γ''` when the curve
/// bends, the rest by canonical completion.
pub fn seed_frame(curve: &Curve, u0: f64) -> Result<Frame4> {
    let jet = curve.eval_jet(u0)?;
    check_unit_speed(u0, jet.d1)?;
    let t = jet.d1 / jet.d1.norm();
    if jet.d2.norm() > FLAT_CURVATURE {
        if let Ok(tn) = gram_schmidt(&[t, jet.d2], DEFAULT_RANK_TOL) {
            return complete_frame(&[t, tn[1]]);
        }
    }
    complete_frame(&[t])
}

type State = [Vec4; 4];

fn derivative(curve: &Curve, u: f64, s: &State) -> State {
    let acc = curve.jet_unchecked(u).d2;
    let k = [dot(acc, s[1]), dot(acc, s[2]), dot(acc, s[3])];
    [
        s[1] * k[0] + s[2] * k[1] + s[3] * k[2],
        s[0] * -k[0],
        s[0] * -k[1],
        s[0] * -k[2],
    ]
}

fn axpy(s: &State, d: &State, h: f64) -> State {
    std::array::from_fn(|i| s[i] + d[i] * h)
}

/// One RK4 step of length `du` (signed) followed by re-anchoring on the
/// exact tangent at `u + du`.
fn rk4_step(curve: &Curve, u: f64, frame: &Frame4, du: f64) -> Result<Frame4> {
    let s = frame.vectors();
    let a = derivative(curve, u, &s);
    let b = derivative(curve, u + 0.5 * du, &axpy(&s, &a, 0.5 * du));
    let c = derivative(curve, u + 0.5 * du, &axpy(&s, &b, 0.5 * du));
    let d = derivative(curve, u + du, &axpy(&s, &c, du));
    let next: State =
        std::array::from_fn(|i| s[i] + (a[i] + b[i] * 2.0 + c[i] * 2.0 + d[i]) * (du / 6.0));
    let tangent = curve.jet_unchecked(u + du).d1;
    Frame4::from_vectors(next).reanchor(tangent / tangent.norm())
}

fn curvatures(acc: Vec4, frame: &Frame4) -> [f64; 3] {
    [dot(acc, frame.m1), dot(acc, frame.m2), dot(acc, frame.m3)]
}

/// Integrates the parallel transport frame from `u0` to `u1` with node
/// spacing `h` (the last step may be shorter). `u1 < u0` integrates
/// backwards; nodes are always stored in increasing order.
pub fn propagate(curve: &Curve, u0: f64, u1: f64, h: f64, seed: &Frame4) -> Result<FramedCurve> {
    let length = (u1 - u0).abs();
    if !(h > 0.0 && h <= length / 8.0) {
        return Err(Error::StepTooLarge { h, length });
    }
    let start = curve.eval_jet(u0)?;
    curve.eval_jet(u1)?;
    check_unit_speed(u0, start.d1)?;
    let t0 = start.d1 / start.d1.norm();
    let slip = (seed.t - t0).norm();
    if slip > TANGENT_MATCH_TOL {
        return Err(Error::MismatchedTangent(slip));
    }
    let mut frame = seed.reanchor(t0)?;

    let steps = ((length / h) - 1e-9).ceil() as usize;
    let dir = if u1 >= u0 { 1.0 } else { -1.0 };
    let node = |i: usize| if i == steps { u1 } else { u0 + dir * h * i as f64 };

    let mut fc = FramedCurve {
        curve: curve.clone(),
        grid: Vec::with_capacity(steps + 1),
        points: Vec::with_capacity(steps + 1),
        frames: Vec::with_capacity(steps + 1),
        k1: Vec::with_capacity(steps + 1),
        k2: Vec::with_capacity(steps + 1),
        k3: Vec::with_capacity(steps + 1),
    };
    let mut u = u0;
    for i in 0..=steps {
        if i > 0 {
            let next = node(i);
            frame = rk4_step(curve, u, &frame, next - u)?;
            u = next;
        }
        let jet = curve.eval_jet(u)?;
        check_unit_speed(u, jet.d1)?;
        fc.push(u, jet.p, frame, curvatures(jet.d2, &frame));
    }
    if dir < 0.0 {
        fc.reverse();
    }
    Ok(fc)
}

/// Propagates over the whole curve domain starting from `u0`, integrating
/// both ways when `u0` is interior.
pub fn propagate_over_domain(curve: &Curve, u0: f64, h: f64, seed: &Frame4) -> Result<FramedCurve> {
    let (lo, hi) = curve.domain();
    let eps = 1e-12 * (hi - lo);
    if (u0 - lo).abs() <= eps {
        return propagate(curve, lo, hi, h, seed);
    }
    if (u0 - hi).abs() <= eps {
        return propagate(curve, hi, lo, h, seed);
    }
    let back = propagate(curve, u0, lo, h.min((u0 - lo) / 8.0), seed)?;
    let fwd = propagate(curve, u0, hi, h.min((hi - u0) / 8.0), seed)?;
    let mut merged = back;
    merged.pop();
    merged.append(fwd);
    Ok(merged)
}

impl FramedCurve {
    fn push(&mut self, u: f64, p: Vec4, frame: Frame4, k: [f64; 3]) {
        self.grid.push(u);
        self.points.push(p);
        self.frames.push(frame);
        self.k1.push(k[0]);
        self.k2.push(k[1]);
        self.k3.push(k[2]);
    }

    fn pop(&mut self) {
        self.grid.pop();
        self.points.pop();
        self.frames.pop();
        self.k1.pop();
        self.k2.pop();
        self.k3.pop();
    }

    fn append(&mut self, mut other: FramedCurve) {
        self.grid.append(&mut other.grid);
        self.points.append(&mut other.points);
        self.frames.append(&mut other.frames);
        self.k1.append(&mut other.k1);
        self.k2.append(&mut other.k2);
        self.k3.append(&mut other.k3);
    }

    fn reverse(&mut self) {
        self.grid.reverse();
        self.points.reverse();
        self.frames.reverse();
        self.k1.reverse();
        self.k2.reverse();
        self.k3.reverse();
    }

    pub fn curve(&self) -> &Curve {
        &self.curve
    }
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }
    pub fn points(&self) -> &[Vec4] {
        &self.points
    }
    pub fn frames(&self) -> &[Frame4] {
        &self.frames
    }
    pub fn k1(&self) -> &[f64] {
        &self.k1
    }
    pub fn k2(&self) -> &[f64] {
        &self.k2
    }
    pub fn k3(&self) -> &[f64] {
        &self.k3
    }
    pub fn len(&self) -> usize {
        self.grid.len()
    }
    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Parameter range covered by the nodes.
    pub fn range(&self) -> (f64, f64) {
        (self.grid[0], self.grid[self.grid.len() - 1])
    }

    /// True when every stored curvature is zero, i.e. the spine is straight.
    pub fn is_straight(&self, tol: f64) -> bool {
        self.k1.iter().chain(&self.k2).chain(&self.k3).all(|k| k.abs() <= tol)
    }

    pub fn max_orthonormality_defect(&self) -> f64 {
        self.frames.iter().map(Frame4::orthonormality_defect).fold(0.0, f64::max)
    }

    /// Frame at an arbitrary parameter in range: exact at nodes, otherwise
    /// one RK4 sub-step from the node below.
    pub fn frame_at(&self, u: f64) -> Result<Frame4> {
        let (lo, hi) = self.range();
        let slack = 1e-12 * (hi - lo).max(1.0);
        if !(u >= lo - slack && u <= hi + slack) {
            return Err(Error::OutOfDomain { u, min: lo, max: hi });
        }
        let i = self.grid.partition_point(|&g| g <= u).saturating_sub(1);
        let du = u - self.grid[i];
        if du == 0.0 {
            return Ok(self.frames[i]);
        }
        if i + 1 == self.grid.len() && du.abs() <= slack {
            return Ok(self.frames[i]);
        }
        rk4_step(&self.curve, self.grid[i], &self.frames[i], du)
    }

    /// Everything the surface formulas need from the spine at `u`.
    pub fn local(&self, u: f64) -> Result<SpineLocal> {
        let frame = self.frame_at(u)?;
        let jet = self.curve.jet_unchecked(u);
        let k = curvatures(jet.d2, &frame);
        // Mi' = -ki T gives ki' = <γ''', Mi> - ki <γ'', T>.
        let along = dot(jet.d2, frame.t);
        let dk = [
            dot(jet.d3, frame.m1) - k[0] * along,
            dot(jet.d3, frame.m2) - k[1] * along,
            dot(jet.d3, frame.m3) - k[2] * along,
        ];
        Ok(SpineLocal { point: jet.p, frame, k, dk })
    }

    /// Curvature functions `ki = <γ'', Mi>` at `u`.
    pub fn curvatures_at(&self, u: f64) -> Result<[f64; 3]> {
        Ok(self.local(u)?.k)
    }

    /// Derivatives of the curvature functions at `u`.
    pub fn curvature_derivatives_at(&self, u: f64) -> Result<[f64; 3]> {
        Ok(self.local(u)?.dk)
    }

    /// Writes the nodes as CSV with header
    /// `u,x1..x4,T1..T4,M11..M14,M21..M24,M31..M34,k1,k2,k3`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["u".to_string()];
        header.extend((1..=4).map(|i| format!("x{i}")));
        header.extend((1..=4).map(|i| format!("T{i}")));
        for m in 1..=3 {
            header.extend((1..=4).map(|i| format!("M{m}{i}")));
        }
        header.extend(["k1", "k2", "k3"].map(String::from));
        out.write_record(&header)?;
        for i in 0..self.len() {
            let mut rec = vec![self.grid[i].to_string()];
            rec.extend(self.points[i].0.iter().map(f64::to_string));
            for v in self.frames[i].vectors() {
                rec.extend(v.0.iter().map(f64::to_string));
            }
            rec.extend([self.k1[i], self.k2[i], self.k3[i]].iter().map(f64::to_string));
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn frenet_vectors(curve: &Curve, u: f64, tol: f64) -> Result<[Vec4; 4]> {
    let jet = curve.eval_jet(u)?;
    let q = gram_schmidt(&[jet.d1, jet.d2, jet.d3], tol).map_err(|e| match e {
        Error::RankDeficient(k) => Error::FrenetUndefined(k),
        other => other,
    })?;
    let frame = complete_frame(&q)?;
    Ok(frame.vectors())
}

/// Frenet frame from Gram-Schmidt of `(γ', γ'', γ''')`, with `B2` fixing
/// positive orientation. `τ = <N', B1>` and `σ = <B1', B2>` use central
/// differences of the frame vectors.
pub fn frenet_at(curve: &Curve, u: f64, tol: f64) -> Result<FrenetData> {
    let margin = 2.0 * FRENET_FD_STEP;
    let (lo, hi) = curve.domain();
    if !(u - margin >= lo && u + margin <= hi) {
        return Err(Error::OutOfDomain { u, min: lo + margin, max: hi - margin });
    }
    let [t, n, b1, b2] = frenet_vectors(curve, u, tol)?;
    let kappa = curve.eval_jet(u)?.d2.norm();
    let plus = frenet_vectors(curve, u + FRENET_FD_STEP, tol)?;
    let minus = frenet_vectors(curve, u - FRENET_FD_STEP, tol)?;
    let dn = (plus[1] - minus[1]) / (2.0 * FRENET_FD_STEP);
    let db1 = (plus[2] - minus[2]) / (2.0 * FRENET_FD_STEP);
    Ok(FrenetData { t, n, b1, b2, kappa, tau: dot(dn, b1), sigma: dot(db1, b2) })
}

/// Rotation taking the parallel normals to the Frenet normals: rows are
/// the `(M1, M2, M3)` components of `N`, `B1`, `B2`.
pub fn euler_rotation(a: &EulerAngles) -> [[f64; 3]; 3] {
    let (st, ct) = a.theta.sin_cos();
    let (sp, cp) = a.psi.sin_cos();
    let (sf, cf) = a.phi.sin_cos();
    [
        [ct * cp, -cf * sp + sf * st * cp, sf * sp + cf * st * cp],
        [ct * sp, cf * cp + sf * st * sp, -sf * cp + cf * st * sp],
        [-st, sf * ct, cf * ct],
    ]
}

fn wrap_angle(a: f64) -> f64 {
    if a <= -PI {
        a + 2.0 * PI
    } else {
        a
    }
}

/// Extracts `(θ, ψ, φ)` from the Frenet normals expressed in the parallel
/// frame: `sin θ = -<B2, M1>`, `φ = atan2(<B2, M2>, <B2, M3>)`,
/// `ψ = atan2(<B1, M1>, <N, M1>)`.
pub fn euler_angles_at(fr: &FrenetData, pt: &Frame4) -> Result<EulerAngles> {
    let slip = (fr.t - pt.t).norm();
    if slip > TANGENT_MATCH_TOL {
        return Err(Error::MismatchedTangent(slip));
    }
    let sin_theta = (-dot(fr.b2, pt.m1)).clamp(-1.0, 1.0);
    let cos_theta = (1.0 - sin_theta * sin_theta).max(0.0).sqrt();
    if cos_theta <= GIMBAL_TOL {
        return Err(Error::GimbalLock(cos_theta));
    }
    Ok(EulerAngles {
        theta: sin_theta.asin(),
        psi: wrap_angle(dot(fr.b1, pt.m1).atan2(dot(fr.n, pt.m1))),
        phi: wrap_angle(dot(fr.b2, pt.m2).atan2(dot(fr.b2, pt.m3))),
    })
}

/// Checks `k1 = κ cosθ cosψ`, `k2 = κ(-cosφ sinψ + sinφ sinθ cosψ)` and
/// `k3 = κ(sinφ sinψ + cosφ sinθ cosψ)` at every node, skipping nodes where
/// the Frenet frame or the angles are undefined.
pub fn curvature_relation_residuals(fc: &FramedCurve, curve: &Curve) -> CurvatureRelationReport {
    let mut rep = CurvatureRelationReport { nodes: fc.len(), ..Default::default() };
    for i in 0..fc.len() {
        let angles = frenet_at(curve, fc.grid[i], DEFAULT_RANK_TOL)
            .and_then(|fr| euler_angles_at(&fr, &fc.frames[i]).map(|a| (fr, a)));
        let Ok((fr, a)) = angles else {
            rep.skipped += 1;
            continue;
        };
        let row = euler_rotation(&a)[0];
        rep.max_k1 = rep.max_k1.max((fc.k1[i] - fr.kappa * row[0]).abs());
        rep.max_k2 = rep.max_k2.max((fc.k2[i] - fr.kappa * row[1]).abs());
        rep.max_k3 = rep.max_k3.max((fc.k3[i] - fr.kappa * row[2]).abs());
    }
    rep
}
