//! Shared helpers for the integration tests.
#![allow(dead_code)]

use std::f64::consts::FRAC_PI_2;

use disk_sampling::oracles::integrate;
use disk_sampling::solid_angle::{ellipse_radius, h_parallel, h_radial};
use disk_sampling::{DiskLight, EllipseAxes, ShadingPoint, Vec3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn unit_vector(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let l2 = v.length_squared();
        if l2 > 1e-6 && l2 <= 1.0 {
            return v.normalized();
        }
    }
}

/// Disk with a random tilt and a point at a log-uniform distance between
/// `0.1` and `100` radii, at least slightly off the disk plane.
pub fn random_config(rng: &mut ChaCha8Rng) -> (DiskLight, ShadingPoint) {
    let radius = 10f64.powf(rng.gen_range(-1.0..1.0));
    let center = Vec3::new(
        rng.gen_range(-5.0..5.0),
        rng.gen_range(-5.0..5.0),
        rng.gen_range(-5.0..5.0),
    );
    let normal = unit_vector(rng);
    let light = DiskLight::new(center, normal, radius, 1.0).unwrap();
    let distance = radius * 10f64.powf(rng.gen_range(-1.0..2.0));
    let dir = loop {
        let d = unit_vector(rng);
        if d.dot(normal).abs() > 0.05 {
            break d;
        }
    };
    (light, ShadingPoint::new(center + dir * distance))
}

/// Total solid angle as `4 ∫_0^{π/2} (1 - h_r)`, using `1 - h = r² / (1 + h)`.
pub fn omega_radial_quadrature(axes: &EllipseAxes, rel: f64) -> f64 {
    4.0 * integrate(
        |phi| {
            let r = ellipse_radius(axes, phi);
            r * r / (1.0 + h_radial(axes, phi))
        },
        0.0,
        FRAC_PI_2,
        1e-300,
        rel,
    )
    .unwrap()
}

/// Total solid angle as `∫_{-β}^{β} 2 h_p`, with `φ = β sin s` to smooth the
/// square-root endpoints.
pub fn omega_parallel_quadrature(axes: &EllipseAxes, rel: f64) -> f64 {
    let beta = axes.beta;
    integrate(
        |s| {
            let phi = (beta * s.sin()).clamp(-beta, beta);
            2.0 * h_parallel(axes, phi).unwrap() * beta * s.cos()
        },
        -FRAC_PI_2,
        FRAC_PI_2,
        1e-300,
        rel,
    )
    .unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}
