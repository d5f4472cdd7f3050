//! Area preservation, continuity and back-projection of the ellipse maps.

mod common;

use common::random_config;
use disk_sampling::oracles::sample_cap_rejection;
use disk_sampling::rng::RngStream;
use disk_sampling::stats::{chi_square_two_sample, DiskBins};
use disk_sampling::{
    build_frames, DiskLight, EllipseSampler, NewtonConfig, ShadingPoint, SphericalEllipseFrame,
    Technique, UnitSquareSample, Vec3,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn reference_frame() -> SphericalEllipseFrame {
    let light = DiskLight::new(
        Vec3::new(0.0, 1.5, 1.0),
        Vec3::new(0.0, 0.0, -1.0),
        1.0,
        1.0,
    )
    .unwrap();
    build_frames(&light, &ShadingPoint::new(Vec3::ZERO)).unwrap()
}

fn random_frames(seed: u64, n: usize) -> Vec<SphericalEllipseFrame> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let (light, point) = random_config(&mut rng);
            build_frames(&light, &point).unwrap()
        })
        .collect()
}

fn q_at(s: &EllipseSampler, t: Technique, e1: f64, e2: f64) -> Vec3 {
    s.sample(t, UnitSquareSample::new(e1, e2), &NewtonConfig::default())
        .unwrap()
        .q
}

#[test]
fn jacobian_is_the_solid_angle() {
    let h = 1e-5;
    for frame in random_frames(31, 8).into_iter().chain([reference_frame()]) {
        let s = EllipseSampler::new(&frame).unwrap();
        for t in Technique::MAPS {
            let mut worst = 0.0f64;
            // Offsets keep every stencil off the seams of the concentric and
            // quadrant decompositions.
            for i in 0..20 {
                for j in 0..20 {
                    let (e1, e2) = ((i as f64 + 0.3) / 20.0, (j as f64 + 0.6) / 20.0);
                    let d1 = (q_at(&s, t, e1 + h, e2) - q_at(&s, t, e1 - h, e2)) * (0.5 / h);
                    let d2 = (q_at(&s, t, e1, e2 + h) - q_at(&s, t, e1, e2 - h)) * (0.5 / h);
                    let jac = d1.cross(d2).length();
                    worst = worst.max((jac / frame.omega - 1.0).abs());
                }
            }
            assert!(worst < 1e-3, "{t}: relative Jacobian error {worst}");
        }
    }
}

#[test]
fn square_boundary_maps_to_ellipse_boundary() {
    for frame in random_frames(32, 20) {
        let s = EllipseSampler::new(&frame).unwrap();
        let a = frame.axes;
        let on_boundary = |q: Vec3| {
            let (u, v) = (q.x / (q.z * a.a_t), q.y / (q.z * a.b_t));
            ((u * u + v * v).sqrt() - 1.0).abs() < 1e-7
        };
        for k in 0..=64 {
            let t = k as f64 / 64.0;
            for (e1, e2) in [(t, 0.0), (t, 1.0), (0.0, t), (1.0, t)] {
                assert!(
                    on_boundary(q_at(&s, Technique::LdRadial, e1, e2)),
                    "ld-radial {e1} {e2}"
                );
            }
            for (e1, e2) in [(t, 0.0), (t, 1.0)] {
                assert!(
                    on_boundary(q_at(&s, Technique::Parallel, e1, e2)),
                    "parallel {e1} {e2}"
                );
            }
            assert!(
                on_boundary(q_at(&s, Technique::Radial, t, 0.0)),
                "radial {t}"
            );
            let center = q_at(&s, Technique::Radial, t, 1.0);
            assert!((center - Vec3::Z).length() < 1e-12);
        }
    }
}

#[test]
fn ld_radial_is_continuous_across_seams() {
    let step = 1e-9;
    for frame in random_frames(33, 10) {
        let s = EllipseSampler::new(&frame).unwrap();
        // Diagonals of the concentric map and the quadrant axes.
        for k in 1..64 {
            let t = k as f64 / 64.0;
            for (e1, e2, d1, d2) in [
                (t, t, step, -step),
                (t, 1.0 - t, step, step),
                (0.5, t, step, 0.0),
                (t, 0.5, 0.0, step),
            ] {
                let a = q_at(&s, Technique::LdRadial, e1 - d1, e2 - d2);
                let b = q_at(&s, Technique::LdRadial, e1 + d1, e2 + d2);
                assert!(
                    (a - b).length() < 1e-5,
                    "jump {} at ({e1}, {e2})",
                    (a - b).length()
                );
            }
        }
        // The radial map is continuous in eps1 across quadrant boundaries,
        // including the wrap from eps1 = 1 to eps1 = 0.
        for k in 1..=16 {
            let e2 = k as f64 / 17.0;
            for e1 in [0.25, 0.5, 0.75] {
                let a = q_at(&s, Technique::Radial, e1 - step, e2);
                let b = q_at(&s, Technique::Radial, e1 + step, e2);
                assert!((a - b).length() < 1e-5);
            }
            let a = q_at(&s, Technique::Radial, 1.0, e2);
            let b = q_at(&s, Technique::Radial, 0.0, e2);
            assert!((a - b).length() < 1e-9);
        }
    }
}

#[test]
fn inverse_maps_round_trip() {
    let mut rng = RngStream::new(34, 0);
    for frame in random_frames(34, 20) {
        let s = EllipseSampler::new(&frame).unwrap();
        for t in Technique::MAPS {
            for _ in 0..200 {
                let u = rng.square();
                let q = q_at(&s, t, u.e1, u.e2);
                let back = s.inverse(t, q).unwrap();
                let err = (back.e1 - u.e1).abs().max((back.e2 - u.e2).abs());
                // Close to the chord ends the parallel eps2 is ill-conditioned.
                assert!(err < 1e-6, "{t}: {u:?} -> {back:?}");
            }
        }
    }
}

#[test]
fn samples_back_project_onto_the_disk() {
    let mut rng = RngStream::new(35, 0);
    let cfg = NewtonConfig::default();
    for frame in random_frames(35, 100) {
        let s = EllipseSampler::new(&frame).unwrap();
        let r = frame.light_radius;
        for t in Technique::MAPS {
            for _ in 0..334 {
                let m = s.sample(t, rng.square(), &cfg).unwrap();
                assert_eq!(m.pdf, 1.0 / frame.omega);
                let x = m.disk_point;
                let v = x - frame.light_center;
                assert!(
                    v.dot(frame.disk.z).abs() < 1e-9 * r.max(1.0),
                    "off the plane"
                );
                assert!(
                    v.length() - r < 1e-9 * r,
                    "outside the rim by {}",
                    v.length() - r
                );
                let back = (x - frame.origin).normalized();
                assert!(back.angle_to(m.direction) < 1e-10);
                assert!((m.direction.length() - 1.0).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn distributions_match_the_rejection_oracle() {
    let n = 200_000;
    for (k, frame) in random_frames(36, 4)
        .into_iter()
        .chain([reference_frame()])
        .enumerate()
    {
        let s = EllipseSampler::new(&frame).unwrap();
        let bins = DiskBins::new(frame.light_center, frame.disk.z, frame.light_radius, 16, 16);
        let mut rng = RngStream::new(36, k as u64);
        let oracle = bins.histogram((0..n).map(|_| {
            let c = sample_cap_rejection(&frame, &mut rng);
            frame.world_direction_to_plane(c.direction).unwrap()
        }));
        for t in Technique::MAPS {
            let mut rng = RngStream::new(37, k as u64);
            let cfg = NewtonConfig::default();
            let counts =
                bins.histogram((0..n).map(|_| s.sample(t, rng.square(), &cfg).unwrap().disk_point));
            let chi = chi_square_two_sample(&counts, &oracle);
            assert!(chi.passes(1e-3), "{t} on frame {k}: p = {}", chi.p_value);
        }
    }
}

#[test]
fn newton_converges_without_fallback_failures() {
    let cfg = NewtonConfig::default();
    let mut rng = RngStream::new(38, 0);
    let mut iterations = Vec::new();
    for frame in random_frames(38, 500) {
        let s = EllipseSampler::new(&frame).unwrap();
        for t in [Technique::Parallel, Technique::Radial] {
            let m = s.sample(t, rng.square(), &cfg).unwrap();
            assert!(m.iterations <= cfg.max_iterations);
            iterations.push(m.iterations);
        }
    }
    iterations.sort_unstable();
    assert!(iterations[iterations.len() / 2] <= 4);
}
