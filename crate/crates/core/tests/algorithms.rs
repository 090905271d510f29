use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::{Arc, Mutex};

use posflow::algorithms::{
    displacement_apply, fuse_weighted, sma_filter, triangulate, trilaterate, velocity_process,
    AlgorithmError, BearingObservation, DisplacementNode, Fingerprint, FingerprintStore, Landmark,
    RangeObservation, SmaAccuracyNode, SmaWindow, VelocityProcessingNode,
};
use posflow::geometry::{AbsolutePosition, Orientation, ReferenceSpace, Vector3, Velocity};
use posflow::graph::{
    GraphBuilder, ModelBuilder, ModelEvent, NodeContext, NodeError, NodeSpec, SinkNode, SourceNode,
};
use posflow::model::{DataFrame, DataObject};
use posflow::services::NodeDataService;
use posflow::units;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn p2(x: f64, y: f64) -> AbsolutePosition {
    AbsolutePosition::new_2d(x, y, units::meter())
}

fn p3(x: f64, y: f64, z: f64) -> AbsolutePosition {
    AbsolutePosition::new_3d(x, y, z, units::meter())
}

fn range(uid: &str, at: AbsolutePosition, d: f64) -> RangeObservation {
    RangeObservation::new(Landmark::new(uid, at), d, units::meter())
}

fn bearing(uid: &str, x: f64, y: f64, deg: f64) -> BearingObservation {
    BearingObservation::new(Landmark::new(uid, p2(x, y)), deg, units::degree())
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

// ---------------------------------------------------------------- lateration

#[test]
fn trilaterate_symmetric_anchors() {
    let obs = [
        range("a", p2(-1.0, 0.0), 1.0),
        range("b", p2(1.0, 0.0), 1.0),
        range("c", p2(0.0, 1.0), 1.0),
    ];
    let p = trilaterate(&obs).unwrap();
    assert!(
        close(p.vector.x, 0.0, 1e-9) && close(p.vector.y, 0.0, 1e-9),
        "{p:?}"
    );
    assert!(p.accuracy() < 1e-9);
}

#[test]
fn trilaterate_forward_computed_distances() {
    let d = 0.5f64.sqrt();
    let obs = [
        range("a", p2(0.0, 0.0), d),
        range("b", p2(1.0, 0.0), d),
        range("c", p2(0.0, 1.0), d),
    ];
    let p = trilaterate(&obs).unwrap();
    assert!(close(p.vector.x, 0.5, 1e-9) && close(p.vector.y, 0.5, 1e-9));
}

#[test]
fn trilaterate_rejects_too_few_and_collinear() {
    let two = [range("a", p2(0.0, 0.0), 1.0), range("b", p2(1.0, 0.0), 1.0)];
    assert_eq!(
        trilaterate(&two).unwrap_err(),
        AlgorithmError::InsufficientObservations { needed: 3, got: 2 }
    );
    let line = [
        range("a", p2(0.0, 0.0), 1.0),
        range("b", p2(1.0, 0.0), 1.0),
        range("c", p2(2.0, 0.0), 1.0),
    ];
    assert!(matches!(
        trilaterate(&line).unwrap_err(),
        AlgorithmError::SingularGeometry(_)
    ));
    let three_3d = [
        range("a", p3(0.0, 0.0, 0.0), 1.0),
        range("b", p3(1.0, 0.0, 0.0), 1.0),
        range("c", p3(0.0, 1.0, 0.0), 1.0),
    ];
    assert_eq!(
        trilaterate(&three_3d).unwrap_err(),
        AlgorithmError::InsufficientObservations { needed: 4, got: 3 }
    );
}

#[test]
fn trilaterate_mixed_units() {
    // anchors in cm, ranges in m
    let cm = units::centimeter();
    let obs = [
        RangeObservation::new(
            Landmark::new("a", AbsolutePosition::new_2d(0.0, 0.0, cm.clone())),
            0.5,
            units::meter(),
        ),
        RangeObservation::new(
            Landmark::new("b", AbsolutePosition::new_2d(100.0, 0.0, cm.clone())),
            0.5,
            units::meter(),
        ),
        RangeObservation::new(
            Landmark::new("c", AbsolutePosition::new_2d(50.0, 50.0, cm.clone())),
            0.5,
            units::meter(),
        ),
    ];
    let p = trilaterate(&obs).unwrap();
    assert_eq!(p.unit, cm);
    assert!(
        close(p.vector.x, 50.0, 1e-7) && close(p.vector.y, 0.0, 1e-7),
        "{p:?}"
    );
}

#[test]
fn noiseless_trilateration_recovers_generating_point() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for case in 0..100 {
        let spatial = case % 2 == 1;
        let n = rng.random_range(if spatial { 4..7 } else { 3..6 });
        let target = Vector3::new(
            rng.random_range(-10.0..10.0),
            rng.random_range(-10.0..10.0),
            if spatial {
                rng.random_range(-10.0..10.0)
            } else {
                0.0
            },
        );
        let obs: Vec<RangeObservation> = (0..n)
            .map(|i| {
                let a = Vector3::new(
                    rng.random_range(-20.0..20.0),
                    rng.random_range(-20.0..20.0),
                    if spatial {
                        rng.random_range(-20.0..20.0)
                    } else {
                        0.0
                    },
                );
                let pos = if spatial {
                    p3(a.x, a.y, a.z)
                } else {
                    p2(a.x, a.y)
                };
                range(&format!("l{i}"), pos, a.distance(&target))
            })
            .collect();
        let p = trilaterate(&obs).unwrap();
        let err = p.vector.distance(&target);
        assert!(err <= 1e-9, "case {case}: off by {err}");
    }
}

#[test]
fn noiseless_triangulation_recovers_generating_point() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for case in 0..100 {
        let n = rng.random_range(2..5);
        let target: (f64, f64) = (rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
        let mut obs = Vec::new();
        while obs.len() < n {
            let a: (f64, f64) = (rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0));
            let angle = (target.1 - a.1).atan2(target.0 - a.0);
            obs.push(BearingObservation::new(
                Landmark::new(format!("l{}", obs.len()), p2(a.0, a.1)),
                angle,
                units::radian(),
            ));
        }
        // reject nearly parallel pairs, which are ill-posed rather than wrong
        let angles: Vec<f64> = obs.iter().map(|o| o.angle).collect();
        let spread = angles
            .iter()
            .flat_map(|a| angles.iter().map(move |b| (a - b).sin().abs()))
            .fold(0.0, f64::max);
        if spread < 0.2 {
            continue;
        }
        let p = triangulate(&obs).unwrap();
        let err = (p.vector.x - target.0).hypot(p.vector.y - target.1);
        assert!(err <= 1e-9, "case {case}: off by {err}");
    }
}

#[test]
fn triangulate_hand_computed_intersection() {
    let p = triangulate(&[bearing("a", 0.0, 0.0, 45.0), bearing("b", 10.0, 0.0, 135.0)]).unwrap();
    assert!(close(p.vector.x, 5.0, 1e-9) && close(p.vector.y, 5.0, 1e-9));
    assert!(p.accuracy() < 1e-9);
}

#[test]
fn triangulate_target_on_landmark_has_zero_residual() {
    let p = triangulate(&[
        bearing("a", 0.0, 0.0, 30.0),
        bearing("b", 0.0, 0.0, 120.0),
        bearing("c", 5.0, 0.0, 180.0),
    ])
    .unwrap();
    assert!(close(p.vector.x, 0.0, 1e-9) && close(p.vector.y, 0.0, 1e-9));
    assert!(p.accuracy() < 1e-9);
}

#[test]
fn triangulate_rejects_parallel_bearings() {
    let err =
        triangulate(&[bearing("a", 0.0, 0.0, 90.0), bearing("b", 5.0, 0.0, 270.0)]).unwrap_err();
    assert!(matches!(err, AlgorithmError::SingularGeometry(_)));
    assert!(matches!(
        triangulate(&[bearing("a", 0.0, 0.0, 90.0)]).unwrap_err(),
        AlgorithmError::InsufficientObservations { needed: 2, got: 1 }
    ));
}

/// Minimiser of `f` on a `n`×`n` grid over `[x0,x1]×[y0,y1]`.
fn grid_min(
    f: &dyn Fn(f64, f64) -> f64,
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    n: usize,
) -> (f64, f64) {
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for i in 0..n {
        let x = x0 + (x1 - x0) * i as f64 / (n - 1) as f64;
        for j in 0..n {
            let y = y0 + (y1 - y0) * j as f64 / (n - 1) as f64;
            let v = f(x, y);
            if v < best.0 {
                best = (v, x, y);
            }
        }
    }
    (best.1, best.2)
}

/// Repeated 201×201 grid search, zooming in around the best cell.
fn zoom_min(f: &dyn Fn(f64, f64) -> f64, mut cx: f64, mut cy: f64, mut half: f64) -> (f64, f64) {
    while half > 1e-9 {
        (cx, cy) = grid_min(f, cx - half, cx + half, cy - half, cy + half, 201);
        half /= 20.0;
    }
    (cx, cy)
}

fn range_cost<'a>(anchors: &'a [(f64, f64)], d: &'a [f64]) -> impl Fn(f64, f64) -> f64 + 'a {
    move |x, y| {
        anchors
            .iter()
            .zip(d)
            .map(|(a, d)| ((x - a.0).hypot(y - a.1) - d).powi(2))
            .sum()
    }
}

fn bearing_cost(lines: &[(f64, f64, f64)]) -> impl Fn(f64, f64) -> f64 + '_ {
    move |x, y| {
        lines
            .iter()
            .map(|(ax, ay, t)| ((x - ax) * -t.sin() + (y - ay) * t.cos()).powi(2))
            .sum()
    }
}

#[test]
fn noisy_trilateration_matches_grid_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (lo, hi) = (-2.0, 12.0);
    let step = (hi - lo) / 200.0;
    for case in 0..20 {
        let anchors = [(0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0)];
        let t: (f64, f64) = (rng.random_range(1.0..9.0), rng.random_range(1.0..9.0));
        let d: Vec<f64> = anchors
            .iter()
            .map(|a| (t.0 - a.0).hypot(t.1 - a.1) + rng.random_range(-0.3..0.3))
            .collect();
        let obs: Vec<RangeObservation> = anchors
            .iter()
            .zip(&d)
            .enumerate()
            .map(|(i, (a, d))| range(&format!("a{i}"), p2(a.0, a.1), *d))
            .collect();
        let p = trilaterate(&obs).unwrap();
        let cost = range_cost(&anchors, &d);
        let (gx, gy) = grid_min(&cost, lo, hi, lo, hi, 201);
        assert!(
            (p.vector.x - gx).abs() <= step && (p.vector.y - gy).abs() <= step,
            "case {case}: ({}, {}) vs grid ({gx}, {gy})",
            p.vector.x,
            p.vector.y
        );
        let (zx, zy) = zoom_min(&cost, gx, gy, 2.0 * step);
        assert!(
            (p.vector.x - zx).hypot(p.vector.y - zy) <= 1e-6,
            "case {case}: refined grid ({zx}, {zy})"
        );
        let rms = (cost(p.vector.x, p.vector.y) / 4.0).sqrt();
        assert!(close(p.accuracy(), rms, 1e-12));
    }
}

#[test]
fn noisy_triangulation_matches_grid_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (lo, hi) = (-2.0, 12.0);
    let step = (hi - lo) / 200.0;
    for case in 0..20 {
        let anchors = [(0.0, 0.0), (10.0, 0.0), (5.0, 10.0)];
        let t: (f64, f64) = (rng.random_range(2.0..8.0), rng.random_range(2.0..8.0));
        let lines: Vec<(f64, f64, f64)> = anchors
            .iter()
            .map(|a| {
                (
                    a.0,
                    a.1,
                    (t.1 - a.1).atan2(t.0 - a.0) + rng.random_range(-0.03..0.03),
                )
            })
            .collect();
        let obs: Vec<BearingObservation> = lines
            .iter()
            .enumerate()
            .map(|(i, (x, y, th))| {
                BearingObservation::new(
                    Landmark::new(format!("a{i}"), p2(*x, *y)),
                    *th,
                    units::radian(),
                )
            })
            .collect();
        let p = triangulate(&obs).unwrap();
        let cost = bearing_cost(&lines);
        let (gx, gy) = grid_min(&cost, lo, hi, lo, hi, 201);
        assert!(
            (p.vector.x - gx).abs() <= step && (p.vector.y - gy).abs() <= step,
            "case {case}"
        );
        let (zx, zy) = zoom_min(&cost, gx, gy, 2.0 * step);
        assert!(
            (p.vector.x - zx).hypot(p.vector.y - zy) <= 1e-6,
            "case {case}"
        );
        let rms = (cost(p.vector.x, p.vector.y) / 3.0).sqrt();
        assert!(close(p.accuracy(), rms, 1e-9));
    }
}

// -------------------------------------------------------------------- fusion

/// Plain inverse-accuracy weighted mean of everything, hemisphere-aligned
/// quaternions included.
fn fuse_oracle(
    samples: &[(Vector3, f64, Vector3, Vector3, [f64; 4])],
) -> (Vector3, f64, Vector3, Vector3, [f64; 4]) {
    let w: Vec<f64> = samples.iter().map(|s| 1.0 / s.1.max(1e-6)).collect();
    let sw: f64 = w.iter().sum();
    let mean = |f: &dyn Fn(usize) -> f64| (0..samples.len()).map(|i| w[i] * f(i)).sum::<f64>() / sw;
    let v = |k: usize, c: usize| -> f64 {
        let s = &samples[k];
        let vec = match c / 3 {
            0 => s.0,
            1 => s.2,
            _ => s.3,
        };
        [vec.x, vec.y, vec.z][c % 3]
    };
    let comp = |c: usize| {
        Vector3::new(
            mean(&|i| v(i, c)),
            mean(&|i| v(i, c + 1)),
            mean(&|i| v(i, c + 2)),
        )
    };
    let q0 = samples[0].4;
    let mut q = [0.0; 4];
    for (i, s) in samples.iter().enumerate() {
        let dot: f64 = (0..4).map(|k| s.4[k] * q0[k]).sum();
        let sign = if dot < 0.0 { -1.0 } else { 1.0 };
        for (qk, sk) in q.iter_mut().zip(s.4) {
            *qk += w[i] * sign * sk;
        }
    }
    let n = q.iter().map(|c| c * c).sum::<f64>().sqrt();
    let acc = mean(&|i| samples[i].1.max(1e-6));
    (comp(0), acc, comp(3), comp(6), q.map(|c| c / n))
}

#[test]
fn fuse_hand_evaluated_examples() {
    let a = p2(0.0, 0.0).with_accuracy(1.0, units::meter());
    let b = p2(2.0, 0.0).with_accuracy(1.0, units::meter());
    assert!(close(
        fuse_weighted(&[a.clone(), b]).unwrap().vector.x,
        1.0,
        1e-12
    ));
    let c = p2(3.0, 0.0).with_accuracy(2.0, units::meter());
    let f = fuse_weighted(&[a.clone(), c]).unwrap();
    assert!(close(f.vector.x, 1.0, 1e-12));
    assert_eq!(fuse_weighted(std::slice::from_ref(&a)).unwrap(), a);
    assert!(fuse_weighted(&[]).is_err());
}

#[test]
fn fuse_converts_units_and_takes_latest_time() {
    let a = p2(100.0, 0.0)
        .with_timestamp(5)
        .with_accuracy(1.0, units::meter());
    let b = AbsolutePosition::new_2d(300.0, 0.0, units::centimeter())
        .with_timestamp(9)
        .with_accuracy(100.0, units::centimeter());
    let f = fuse_weighted(&[a, b]).unwrap();
    assert_eq!(f.unit, units::meter());
    assert!(close(f.vector.x, 51.5, 1e-12));
    assert_eq!(f.timestamp, 9);
}

#[test]
fn fuse_matches_weighted_mean_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let rv = |rng: &mut ChaCha8Rng, s: f64| {
        Vector3::new(
            rng.random_range(-s..s),
            rng.random_range(-s..s),
            rng.random_range(-s..s),
        )
    };
    for case in 0..200 {
        let n = rng.random_range(1..7);
        let raw: Vec<(Vector3, f64, Vector3, Vector3, [f64; 4])> = (0..n)
            .map(|_| {
                let acc = if rng.random_bool(0.1) {
                    0.0
                } else {
                    rng.random_range(0.01..5.0)
                };
                let axis = rv(&mut rng, 1.0);
                let q = Orientation::from_axis_angle(axis, rng.random_range(-PI..PI));
                let q = [q.x, q.y, q.z, q.w];
                let q = if rng.random_bool(0.5) {
                    q.map(|c| -c)
                } else {
                    q
                };
                (
                    rv(&mut rng, 50.0),
                    acc,
                    rv(&mut rng, 2.0),
                    rv(&mut rng, 2.0),
                    q,
                )
            })
            .collect();
        let samples: Vec<AbsolutePosition> = raw
            .iter()
            .map(|(p, acc, lin, ang, q)| {
                p3(p.x, p.y, p.z)
                    .with_accuracy(*acc, units::meter())
                    .with_velocity(Velocity::new(*lin, *ang))
                    .with_orientation(Orientation::new(q[0], q[1], q[2], q[3]))
            })
            .collect();
        let f = fuse_weighted(&samples).unwrap();
        if n == 1 {
            assert_eq!(f, samples[0]);
            continue;
        }
        let (p, acc, lin, ang, q) = fuse_oracle(&raw);
        let tol = 1e-12;
        let scale = |v: f64| tol * v.abs().max(1.0);
        for (got, want) in [
            (f.vector.x, p.x),
            (f.vector.y, p.y),
            (f.vector.z, p.z),
            (f.velocity.linear.x, lin.x),
            (f.velocity.linear.y, lin.y),
            (f.velocity.linear.z, lin.z),
            (f.velocity.angular.x, ang.x),
            (f.velocity.angular.y, ang.y),
            (f.velocity.angular.z, ang.z),
            (f.accuracy(), acc),
            (f.orientation.x, q[0]),
            (f.orientation.y, q[1]),
            (f.orientation.z, q[2]),
            (f.orientation.w, q[3]),
        ] {
            assert!(
                close(got, want, scale(want)),
                "case {case}: {got} vs {want}"
            );
        }
    }
}

proptest! {
    #[test]
    fn fuse_equal_accuracy_is_arithmetic_mean(
        pts in prop::collection::vec(prop::array::uniform2(-1e3f64..1e3), 2..8),
        acc in 0.01f64..10.0,
    ) {
        let samples: Vec<_> = pts.iter().map(|[x, y]| p2(*x, *y).with_accuracy(acc, units::meter())).collect();
        let f = fuse_weighted(&samples).unwrap();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p[0]).sum::<f64>() / n;
        let my = pts.iter().map(|p| p[1]).sum::<f64>() / n;
        prop_assert!(close(f.vector.x, mx, 1e-12 * mx.abs().max(1.0)));
        prop_assert!(close(f.vector.y, my, 1e-12 * my.abs().max(1.0)));
    }

    #[test]
    fn fuse_ignores_common_accuracy_scale(
        pts in prop::collection::vec((prop::array::uniform2(-1e3f64..1e3), 0.01f64..10.0), 2..8),
        k in 0.01f64..100.0,
    ) {
        let a: Vec<_> = pts.iter().map(|([x, y], acc)| p2(*x, *y).with_accuracy(*acc, units::meter())).collect();
        let b: Vec<_> = pts.iter().map(|([x, y], acc)| p2(*x, *y).with_accuracy(acc * k, units::meter())).collect();
        let (fa, fb) = (fuse_weighted(&a).unwrap(), fuse_weighted(&b).unwrap());
        prop_assert!(fa.vector.distance(&fb.vector) <= 1e-9);
        prop_assert!(close(fb.accuracy(), fa.accuracy() * k, 1e-9 * fb.accuracy().max(1.0)));
    }
}

// -------------------------------------------------------------------- motion

fn quat_oracle(axis: [f64; 3], angle: f64) -> [f64; 4] {
    let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    let s = (angle / 2.0).sin() / n;
    [axis[0] * s, axis[1] * s, axis[2] * s, (angle / 2.0).cos()]
}

#[test]
fn zero_velocity_is_identity() {
    let p = p3(1.0, 2.0, 3.0).with_timestamp(1_000);
    let out = velocity_process(&p, 2.5).unwrap();
    assert_eq!(out.vector, p.vector);
    assert_eq!(out.orientation, p.orientation);
    assert_eq!(out.timestamp, 2_501_000);
}

#[test]
fn velocity_is_rotated_into_global_frame() {
    let q = quat_oracle([0.0, 0.0, 1.0], FRAC_PI_2);
    let p = p2(0.0, 0.0)
        .with_orientation(Orientation::new(q[0], q[1], q[2], q[3]))
        .with_velocity(Velocity::new(Vector3::new(1.0, 0.0, 0.0), Vector3::ZERO));
    let out = velocity_process(&p, 2.0).unwrap();
    assert!(
        out.vector.distance(&Vector3::new(0.0, 2.0, 0.0)) <= 1e-9,
        "{:?}",
        out.vector
    );
}

#[test]
fn angular_velocity_advances_orientation() {
    let p = p2(0.0, 0.0).with_velocity(Velocity::new(
        Vector3::ZERO,
        Vector3::new(0.0, 0.0, FRAC_PI_2),
    ));
    let out = velocity_process(&p, 1.0).unwrap();
    let want = quat_oracle([0.0, 0.0, 1.0], FRAC_PI_2);
    let o = out.orientation;
    for (got, want) in [
        (o.x, want[0]),
        (o.y, want[1]),
        (o.z, want[2]),
        (o.w, want[3]),
    ] {
        assert!(close(got, want, 1e-9));
    }
}

#[test]
fn velocity_in_meters_moves_centimeter_positions() {
    let p = AbsolutePosition::new_2d(10.0, 0.0, units::centimeter())
        .with_velocity(Velocity::new(Vector3::new(0.58, 0.0, 0.0), Vector3::ZERO));
    let out = velocity_process(&p, 0.5).unwrap();
    assert!(close(out.vector.x, 39.0, 1e-9));
}

#[test]
fn negative_interval_is_rejected() {
    assert_eq!(
        velocity_process(&p2(0.0, 0.0), -0.1).unwrap_err(),
        AlgorithmError::NegativeInterval(-0.1)
    );
}

proptest! {
    #[test]
    fn reversing_velocity_returns_home(
        [x, y, z] in prop::array::uniform3(-100.0f64..100.0),
        [vx, vy, vz] in prop::array::uniform3(-3.0f64..3.0),
        [ax, ay, az] in prop::array::uniform3(-1.0f64..1.0),
        angle in -PI..PI,
        dt in 0.0f64..5.0,
    ) {
        let q = Orientation::from_axis_angle(Vector3::new(ax, ay, az + 1.5), angle);
        let v = Vector3::new(vx, vy, vz);
        let there = velocity_process(
            &p3(x, y, z).with_orientation(q).with_velocity(Velocity::new(v, Vector3::ZERO)),
            dt,
        ).unwrap();
        let mut back = there.clone();
        back.velocity = Velocity::new(-v, Vector3::ZERO);
        let home = velocity_process(&back, dt).unwrap();
        prop_assert!(home.vector.distance(&Vector3::new(x, y, z)) <= 1e-9);
    }
}

// ---------------------------------------------------------------- smoothing

#[test]
fn sma_examples() {
    let store = NodeDataService::new();
    let got: Vec<f64> = [1.0, 2.0, 3.0]
        .iter()
        .map(|v| sma_filter(&store, "n", "o", *v, 2).unwrap())
        .collect();
    assert_eq!(got, [1.0, 1.5, 2.5]);
    for _ in 0..5 {
        assert_eq!(sma_filter(&store, "n", "const", 4.0, 3).unwrap(), 4.0);
    }
    for v in [3.0, -1.0, 8.0] {
        assert_eq!(sma_filter(&store, "n", "id", v, 1).unwrap(), v);
    }
    assert!(SmaWindow::new(0).is_err());
    assert!(sma_filter(&store, "n", "zero", 1.0, 0).is_err());
}

#[test]
fn sma_state_is_separate_per_object() {
    let store = NodeDataService::new();
    sma_filter(&store, "n", "a", 10.0, 4).unwrap();
    assert_eq!(sma_filter(&store, "n", "b", 2.0, 4).unwrap(), 2.0);
    assert_eq!(sma_filter(&store, "m", "a", 0.0, 4).unwrap(), 0.0);
    assert_eq!(sma_filter(&store, "n", "a", 0.0, 4).unwrap(), 5.0);
}

proptest! {
    #[test]
    fn sma_matches_window_mean(values in prop::collection::vec(-1e3f64..1e3, 1..40), window in 1usize..8) {
        let store = NodeDataService::new();
        for (i, v) in values.iter().enumerate() {
            let got = sma_filter(&store, "n", "o", *v, window).unwrap();
            let start = (i + 1).saturating_sub(window);
            let slice = &values[start..=i];
            let want = slice.iter().sum::<f64>() / slice.len() as f64;
            prop_assert!(close(got, want, 1e-9));
        }
    }
}

// ------------------------------------------------------------- displacement

#[test]
fn displacement_examples() {
    let store = NodeDataService::new();
    assert_eq!(
        displacement_apply(&store, "n", "o", &p2(0.0, 0.0)).unwrap(),
        None
    );
    assert_eq!(
        displacement_apply(&store, "n", "o", &p2(0.0, 0.0)).unwrap(),
        Some(Vector3::ZERO)
    );
    let d = displacement_apply(&store, "n", "o", &p2(1.0, 2.0))
        .unwrap()
        .unwrap();
    let fused = Vector3::new(10.0, 10.0, 0.0);
    assert_eq!(fused + d, Vector3::new(11.0, 12.0, 0.0));
}

#[test]
fn displacement_converts_previous_sample_unit() {
    let store = NodeDataService::new();
    displacement_apply(&store, "n", "o", &p2(1.0, 0.0)).unwrap();
    let d = displacement_apply(
        &store,
        "n",
        "o",
        &AbsolutePosition::new_2d(150.0, 0.0, units::centimeter()),
    )
    .unwrap()
    .unwrap();
    assert!(close(d.x, 50.0, 1e-9));
}

// --------------------------------------------------------- fingerprinting

fn features(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn two_point_store() -> FingerprintStore {
    let mut s = FingerprintStore::new();
    s.store(Fingerprint::new(
        "fp-a",
        p2(0.0, 0.0),
        features(&[("ap", -50.0)]),
    ))
    .unwrap();
    s.store(Fingerprint::new(
        "fp-b",
        p2(10.0, 0.0),
        features(&[("ap", -70.0)]),
    ))
    .unwrap();
    s
}

#[test]
fn fingerprint_exact_match() {
    let p = two_point_store()
        .locate(&features(&[("ap", -50.0)]), 1)
        .unwrap();
    assert_eq!((p.vector.x, p.vector.y), (0.0, 0.0));
}

#[test]
fn fingerprint_equidistant_mean() {
    let p = two_point_store()
        .locate(&features(&[("ap", -60.0)]), 2)
        .unwrap();
    assert!(close(p.vector.x, 5.0, 1e-12) && close(p.vector.y, 0.0, 1e-12));
    assert!(close(p.accuracy(), 5.0, 1e-12));
}

#[test]
fn fingerprint_tie_goes_to_lower_uid() {
    let mut s = FingerprintStore::new();
    s.store(Fingerprint::new(
        "zeta",
        p2(10.0, 0.0),
        features(&[("ap", -70.0)]),
    ))
    .unwrap();
    s.store(Fingerprint::new(
        "alpha",
        p2(0.0, 0.0),
        features(&[("ap", -50.0)]),
    ))
    .unwrap();
    let p = s.locate(&features(&[("ap", -60.0)]), 1).unwrap();
    assert_eq!(p.vector.x, 0.0);
}

#[test]
fn fingerprint_missing_features_use_floor() {
    let a = features(&[("x", -40.0)]);
    let b = features(&[("y", -40.0)]);
    let want = (60.0f64 * 60.0 * 2.0).sqrt();
    assert!(close(
        FingerprintStore::feature_distance(&a, &b),
        want,
        1e-12
    ));
}

#[test]
fn fingerprint_errors() {
    let empty = FingerprintStore::new();
    assert_eq!(
        empty.locate(&features(&[("ap", -1.0)]), 1).unwrap_err(),
        AlgorithmError::EmptyStore
    );
    let s = two_point_store();
    assert!(s.locate(&features(&[("ap", -1.0)]), 3).is_err());
    assert!(s.locate(&features(&[("ap", -1.0)]), 0).is_err());
    let mut s = FingerprintStore::new();
    assert!(s
        .store(Fingerprint::new("e", p2(0.0, 0.0), BTreeMap::new()))
        .is_err());
    s.store(Fingerprint::new(
        "e",
        p2(0.0, 0.0),
        features(&[("ap", 1.0)]),
    ))
    .unwrap();
    s.store(Fingerprint::new(
        "e",
        p2(1.0, 0.0),
        features(&[("ap", 1.0)]),
    ))
    .unwrap();
    assert_eq!(s.len(), 1);
}

fn random_features(rng: &mut ChaCha8Rng, keys: &[&str], p: f64) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    for k in keys {
        if rng.random_bool(p) {
            out.insert(k.to_string(), rng.random_range(-90.0..-30.0));
        }
    }
    out
}

#[test]
fn fingerprint_knn_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let keys = ["a", "b", "c", "d"];
    let mut store = FingerprintStore::new();
    let mut raw = Vec::new();
    for i in 0..40 {
        let f: BTreeMap<String, f64> = random_features(&mut rng, &keys, 0.8);
        if f.is_empty() {
            continue;
        }
        let pos = (rng.random_range(0.0..20.0), rng.random_range(0.0..20.0));
        let uid = format!("fp{i:02}");
        store
            .store(Fingerprint::new(uid.clone(), p2(pos.0, pos.1), f.clone()))
            .unwrap();
        raw.push((uid, pos, f));
    }
    for _ in 0..30 {
        let q: BTreeMap<String, f64> = random_features(&mut rng, &keys, 0.7);
        let k = rng.random_range(1..6);
        let dist = |f: &BTreeMap<String, f64>| -> f64 {
            keys.iter()
                .map(|key| {
                    let a = q.get(*key).copied().unwrap_or(-100.0);
                    let b = f.get(*key).copied().unwrap_or(-100.0);
                    if q.contains_key(*key) || f.contains_key(*key) {
                        (a - b).powi(2)
                    } else {
                        0.0
                    }
                })
                .sum::<f64>()
                .sqrt()
        };
        let mut ranked: Vec<(f64, &String, (f64, f64))> =
            raw.iter().map(|(u, p, f)| (dist(f), u, *p)).collect();
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(b.1)));
        let mx = ranked[..k].iter().map(|r| r.2 .0).sum::<f64>() / k as f64;
        let my = ranked[..k].iter().map(|r| r.2 .1).sum::<f64>() / k as f64;
        let p = store.locate(&q, k).unwrap();
        assert!(close(p.vector.x, mx, 1e-9) && close(p.vector.y, my, 1e-9));
    }
}

// ------------------------------------------------------------------- nodes

type Frames = Arc<Mutex<Vec<DataFrame>>>;

struct Collect(Frames, bool);

impl SinkNode for Collect {
    fn on_push(&mut self, frame: &DataFrame, _ctx: &mut NodeContext<'_>) -> Result<(), NodeError> {
        self.0.lock().unwrap().push(frame.clone());
        Ok(())
    }

    fn persists(&self) -> bool {
        self.1
    }
}

struct Push;
impl SourceNode for Push {
    fn merges_stored_objects(&self) -> bool {
        false
    }
}

fn one_node_model(
    node: NodeSpec,
    global: Option<ReferenceSpace>,
    spaces: Vec<ReferenceSpace>,
) -> (posflow::graph::Model, Frames) {
    let frames = Frames::default();
    let mut b = ModelBuilder::new();
    if let Some(g) = global {
        b = b.with_global_space(g);
    }
    for s in spaces {
        b = b.add_space(s);
    }
    let model = b
        .add_shape(
            GraphBuilder::new()
                .from(NodeSpec::source(Push).named("src"))
                .via(node)
                .to(NodeSpec::sink(Collect(frames.clone(), false))),
        )
        .build()
        .unwrap();
    (model, frames)
}

fn object_frame(uid: &str, created: i64, obj: DataObject) -> DataFrame {
    let mut f = DataFrame::with_uid(uid, created);
    f.set_source(obj);
    f
}

#[test]
fn velocity_node_advances_to_frame_time() {
    let (model, got) = one_node_model(
        NodeSpec::processing(VelocityProcessingNode::new()),
        None,
        vec![],
    );
    let pos = p2(1.0, 1.0)
        .with_timestamp(1_000_000)
        .with_velocity(Velocity::new(Vector3::new(0.5, 0.0, 0.0), Vector3::ZERO));
    model
        .push_named(
            "src",
            object_frame("f", 3_000_000, DataObject::new("o").with_position(pos)),
        )
        .unwrap();
    let p = got.lock().unwrap()[0]
        .object("o")
        .unwrap()
        .position
        .clone()
        .unwrap();
    assert!(close(p.vector.x, 2.0, 1e-12));
    assert_eq!(p.timestamp, 3_000_000);
}

#[test]
fn velocity_node_warns_on_future_position() {
    let (model, got) = one_node_model(
        NodeSpec::processing(VelocityProcessingNode::new()),
        None,
        vec![],
    );
    let warnings = Arc::new(Mutex::new(0));
    let w = warnings.clone();
    model.on_event(move |e| {
        if matches!(e, ModelEvent::Warning { .. }) {
            *w.lock().unwrap() += 1;
        }
    });
    let pos = p2(1.0, 1.0)
        .with_timestamp(5)
        .with_velocity(Velocity::new(Vector3::new(1.0, 0.0, 0.0), Vector3::ZERO));
    model
        .push_named(
            "src",
            object_frame("f", 1, DataObject::new("o").with_position(pos.clone())),
        )
        .unwrap();
    assert_eq!(*warnings.lock().unwrap(), 1);
    assert_eq!(
        got.lock().unwrap()[0].object("o").unwrap().position,
        Some(pos)
    );
}

#[test]
fn sma_node_smooths_accuracy() {
    let (model, got) = one_node_model(NodeSpec::processing(SmaAccuracyNode::new(2)), None, vec![]);
    for (i, acc) in [4.0, 2.0, 6.0].into_iter().enumerate() {
        let obj =
            DataObject::new("o").with_position(p2(0.0, 0.0).with_accuracy(acc, units::meter()));
        model
            .push_named("src", object_frame(&format!("f{i}"), 0, obj))
            .unwrap();
    }
    let accs: Vec<f64> = got
        .lock()
        .unwrap()
        .iter()
        .map(|f| f.object("o").unwrap().position.as_ref().unwrap().accuracy())
        .collect();
    assert_eq!(accs, [4.0, 3.0, 4.0]);
}

#[test]
fn displacement_node_applies_delta_to_stored_position() {
    let (model, got) = one_node_model(NodeSpec::processing(DisplacementNode::new()), None, vec![]);
    model
        .services()
        .find_data_service("DataObject")
        .unwrap()
        .insert(&DataObject::new("ball").with_position(p2(10.0, 10.0)))
        .unwrap();
    let push = |uid: &str, x: f64, y: f64| {
        model
            .push_named(
                "src",
                object_frame(uid, 0, DataObject::new("ball").with_position(p2(x, y))),
            )
            .unwrap();
    };
    push("f0", 0.0, 0.0);
    assert!(got.lock().unwrap().is_empty(), "first sample only seeds");
    push("f1", 1.0, 2.0);
    let p = got.lock().unwrap()[0]
        .object("ball")
        .unwrap()
        .position
        .clone()
        .unwrap();
    assert_eq!((p.vector.x, p.vector.y), (11.0, 12.0));
}

#[test]
fn displacement_node_rotates_delta_out_of_its_space() {
    let global = ReferenceSpace::root("global", units::meter());
    let q = quat_oracle([0.0, 0.0, 1.0], FRAC_PI_2);
    let internal = ReferenceSpace::child_of("internal", &global)
        .with_rotation(Orientation::new(q[0], q[1], q[2], q[3]));
    let (model, got) = one_node_model(
        NodeSpec::processing(DisplacementNode::in_space(internal.clone())),
        Some(global),
        vec![internal],
    );
    model
        .services()
        .find_data_service("DataObject")
        .unwrap()
        .insert(&DataObject::new("ball").with_position(p2(10.0, 10.0)))
        .unwrap();
    for (uid, x, y) in [("f0", 0.0, 0.0), ("f1", 1.0, 2.0)] {
        model
            .push_named(
                "src",
                object_frame(uid, 0, DataObject::new("ball").with_position(p2(x, y))),
            )
            .unwrap();
    }
    // local = R·global, so a local delta (1,2) is R⁻¹(1,2) = (2,−1) globally
    let p = got.lock().unwrap()[0]
        .object("ball")
        .unwrap()
        .position
        .clone()
        .unwrap();
    assert!(
        close(p.vector.x, 12.0, 1e-9) && close(p.vector.y, 9.0, 1e-9),
        "{:?}",
        p.vector
    );
}
