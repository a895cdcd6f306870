use std::f64::consts::PI;

use proptest::prelude::*;

use canal4d::canal::{
    first_form, gauss_from_forms, gauss_k, mean_from_forms, mean_scalar, mean_vector, second_form_closed,
    second_form_generic, CanalSurface, Mode, RadiusFunction,
};
use canal4d::curves::{make_curve, CurveSpec};
use canal4d::geom::{dot, Vec4};
use canal4d::meshio::{project3, read_obj, write_obj_to, TriMesh};
use canal4d::ptframe::{propagate, seed_frame, FramedCurve};

fn vec4() -> impl Strategy<Value = Vec4> {
    prop::array::uniform4(-1e3..1e3f64).prop_map(Vec4)
}

fn torus_spine() -> FramedCurve {
    let c = make_curve(&CurveSpec::torus(0.6, 0.4, 1.0, 2.0, [0.0, 2.0 * PI])).unwrap();
    propagate(&c, 0.0, 2.0 * PI, 2e-3, &seed_frame(&c, 0.0).unwrap()).unwrap()
}

fn radius_catalog(i: usize) -> RadiusFunction {
    match i {
        0 => RadiusFunction::constant(0.3),
        1 => RadiusFunction::sine(2.0, 0.3),
        2 => RadiusFunction::linear(0.05, 0.2),
        _ => RadiusFunction::quadratic(0.02, 0.0, 0.4),
    }
}

proptest! {
    #[test]
    fn project3_is_linear(p in vec4(), q in vec4(), a in -10i32..10, b in -10i32..10) {
        // Small integer coefficients keep every operation exact.
        let (a, b) = (a as f64, b as f64);
        let lhs = project3(p * a + q * b);
        let (pp, pq) = (project3(p), project3(q));
        let rhs = [0, 1, 2].map(|i| a * pp[i] + b * pq[i]);
        for i in 0..3 {
            prop_assert!((lhs[i] - rhs[i]).abs() <= 1e-9 * (1.0 + rhs[i].abs()));
        }
    }

    #[test]
    fn obj_round_trip_is_bit_exact(
        verts in prop::collection::vec(prop::array::uniform3(prop::num::f64::NORMAL | prop::num::f64::ZERO), 3..40),
        seed in any::<u64>(),
    ) {
        let n = verts.len();
        let faces = (0..n).map(|i| {
            let s = (seed as usize).wrapping_add(i);
            [i, (i + 1 + s % (n - 1)) % n, (i + 2) % n]
        }).collect();
        let mesh = TriMesh { vertices: verts, faces, k: None, h: None };
        let mut buf = Vec::new();
        write_obj_to(&mesh, &mut buf).unwrap();
        let back = read_obj(buf.as_slice()).unwrap();
        prop_assert_eq!(back.faces, mesh.faces);
        for (a, b) in back.vertices.iter().zip(&mesh.vertices) {
            for i in 0..3 {
                prop_assert_eq!(a[i].to_bits(), b[i].to_bits());
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Closed curvature against the projection formulas on random regular
    /// points of catalog canal surfaces.
    #[test]
    fn closed_and_projected_curvature_agree(u in 0.05..(2.0 * PI - 0.05), v in 0.0..(2.0 * PI), which in 0usize..4) {
        thread_local!(static SPINE: FramedCurve = torus_spine());
        let s = SPINE.with(|fc| CanalSurface::new(fc.clone(), radius_catalog(which)));
        let jet = s.jet(u, v).unwrap();
        let ff = first_form(&jet).unwrap();
        prop_assume!(jet.f.abs() > 1e-2);
        let sf = second_form_generic(&jet, &ff).unwrap();
        let closed = second_form_closed(&jet).unwrap();
        let scale = 1.0 + sf.huu.norm() + sf.hvv.norm() + sf.huv.norm();
        prop_assert!((closed.huv - sf.huv).norm() <= 1e-6 * scale);
        for h in [sf.huv, sf.hvv] {
            prop_assert!(dot(h, jet.frame.m1).abs() <= 1e-10 * scale);
        }
        let k = gauss_k(&jet, Mode::General).unwrap();
        let kp = gauss_from_forms(&ff, &sf);
        prop_assert!((k - kp).abs() <= 1e-8 * kp.abs().max(1.0), "{} vs {}", k, kp);
        let h = mean_vector(&jet, Mode::General).unwrap();
        let hp = mean_from_forms(&ff, &sf);
        prop_assert!((h - hp).norm() <= 1e-8 * hp.norm().max(1.0));
        let hs = mean_scalar(&jet, Mode::General).unwrap();
        prop_assert!((hs - h.norm()).abs() <= 1e-9 * hs.max(1e-300));
    }
}
