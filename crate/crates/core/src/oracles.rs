//! Reference machinery that does not depend on the maps under test: uniform
//! area sampling, rejection from the bounding cap, adaptive quadrature and
//! the far-field limit.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{DiskLight, ShadingPoint, SphericalEllipseFrame};
use crate::maps::{concentric_map, UnitSquareSample};
use crate::rng::RngStream;
use crate::vec3::Vec3;

/// Below this `|cos|` at the light an area sample is treated as grazing.
pub const GRAZING_COSINE: f64 = 1e-9;

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleEstimate {
    pub value: f64,
    pub std_error: f64,
    pub count: u64,
}

impl OracleEstimate {
    /// Whether `x` lies within `k` standard errors of the estimate.
    pub fn agrees_with(&self, x: f64, k: f64) -> bool {
        (self.value - x).abs() <= k * self.std_error
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaSample {
    pub disk_point: Vec3,
    pub direction: Vec3,
    /// Solid-angle density; infinite for grazing directions.
    pub pdf: f64,
    pub distance: f64,
}

impl AreaSample {
    pub fn is_grazing(&self) -> bool {
        self.pdf.is_infinite()
    }
}

/// Uniform sample of the disk surface, with its density converted to solid
/// angle as seen from `point`.
pub fn sample_area(light: &DiskLight, point: &ShadingPoint, u: UnitSquareSample) -> AreaSample {
    let (t, b) = light.normal.orthonormal_basis();
    let (rho, theta) = concentric_map(u);
    let (s, c) = theta.sin_cos();
    let x = light.center + (t * c + b * s) * (rho * light.radius);
    let to = x - point.position;
    let dist2 = to.length_squared();
    let distance = dist2.sqrt();
    let direction = to / distance;
    let cos = direction.dot(light.normal).abs();
    let pdf = if cos < GRAZING_COSINE {
        f64::INFINITY
    } else {
        dist2 / (light.area() * cos)
    };
    AreaSample {
        disk_point: x,
        direction,
        pdf,
        distance,
    }
}

/// Uniform direction in the cap of half-angle `alpha` around `z_e`, in
/// ellipse-frame coordinates.
pub fn sample_cap(frame: &SphericalEllipseFrame, e1: f64, e2: f64) -> Vec3 {
    let z = 1.0 - e1 * frame.axes.one_minus_cos_alpha();
    let r = ((1.0 - z) * (1.0 + z)).max(0.0).sqrt();
    let (s, c) = (TAU * e2).sin_cos();
    Vec3::new(r * c, r * s, z)
}

/// Area of the bounding cap.
pub fn cap_solid_angle(frame: &SphericalEllipseFrame) -> f64 {
    TAU * frame.axes.one_minus_cos_alpha()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapSample {
    /// Direction in ellipse-frame coordinates.
    pub q: Vec3,
    pub direction: Vec3,
    /// Proposals drawn, including the accepted one.
    pub trials: u32,
}

/// Uniform direction in the spherical ellipse by rejection from the bounding
/// cap. Membership is decided by intersecting the ray with the disk.
pub fn sample_cap_rejection(frame: &SphericalEllipseFrame, rng: &mut RngStream) -> CapSample {
    let mut trials = 0;
    loop {
        trials += 1;
        let q = sample_cap(frame, rng.uniform(), rng.uniform());
        let direction = frame.to_world(q);
        if frame.ray_hits_disk(direction) {
            return CapSample {
                q,
                direction,
                trials,
            };
        }
    }
}

/// Binomial estimate of the subtended solid angle from `trials` cap
/// proposals. Work is split over fixed streams so the result does not depend
/// on the thread count.
pub fn cap_rejection_solid_angle(
    frame: &SphericalEllipseFrame,
    trials: u64,
    seed: u64,
) -> OracleEstimate {
    const CHUNKS: u64 = 64;
    let hits: u64 = (0..CHUNKS)
        .into_par_iter()
        .map(|chunk| {
            let n = trials / CHUNKS + u64::from(chunk < trials % CHUNKS);
            let mut rng = RngStream::new(seed, chunk);
            let mut hits = 0u64;
            for _ in 0..n {
                let q = sample_cap(frame, rng.uniform(), rng.uniform());
                if frame.ray_hits_disk(frame.to_world(q)) {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    let cap = cap_solid_angle(frame);
    let n = trials.max(1) as f64;
    let p = hits as f64 / n;
    OracleEstimate {
        value: p * cap,
        std_error: cap * (p * (1.0 - p) / n).sqrt(),
        count: trials,
    }
}

/// `π r² |cos θ| / dist²`, the small-disk limit of the solid angle.
pub fn far_field_solid_angle(light: &DiskLight, point: &ShadingPoint) -> f64 {
    let to = point.position - light.center;
    let dist2 = to.length_squared();
    let cos = to.dot(light.normal).abs() / dist2.sqrt();
    PI * light.radius * light.radius * cos / dist2
}

pub const DEFAULT_QUADRATURE_TOLERANCE: f64 = 1e-12;
const MAX_SUBDIVISIONS: usize = 4096;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
// Gauss weights for the odd Kronrod nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// 15-point Kronrod estimate and its difference from the embedded 7-point
/// Gauss rule.
fn gauss_kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let dx = half * XGK[i];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Globally adaptive Gauss-Kronrod integration of `f` over `[a, b]` to an
/// absolute error of `tol`.
pub fn adaptive_quadrature<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    integrate(f, a, b, tol, 0.0)
}

/// As [`adaptive_quadrature`] but stops once the error bound is below `rel`
/// times the magnitude of the integral (or `abs`, whichever is larger).
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs: f64,
    rel: f64,
) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (value, error) = gauss_kronrod(&mut f, a, b);
    let mut intervals = vec![(a, b, value, error)];
    let mut total = value;
    let mut total_error = error;
    loop {
        if total_error <= abs.max(rel * total.abs()) {
            return Ok(total);
        }
        if intervals.len() >= MAX_SUBDIVISIONS {
            return Err(Error::MaxDepth {
                estimate: total,
                error: total_error,
            });
        }
        let worst = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let (lo, hi, v, e) = intervals.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            return Err(Error::MaxDepth {
                estimate: total,
                error: total_error,
            });
        }
        let (v1, e1) = gauss_kronrod(&mut f, lo, mid);
        let (v2, e2) = gauss_kronrod(&mut f, mid, hi);
        total += v1 + v2 - v;
        total_error += e1 + e2 - e;
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
        // Re-sum occasionally so that the running totals do not drift.
        if intervals.len() % 64 == 0 {
            total = intervals.iter().map(|x| x.2).sum();
            total_error = intervals.iter().map(|x| x.3).sum();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_frames;

    fn on_axis() -> (DiskLight, ShadingPoint) {
        (
            DiskLight::new(Vec3::Z, -Vec3::Z, 1.0, 1.0).unwrap(),
            ShadingPoint::new(Vec3::ZERO),
        )
    }

    #[test]
    fn quadrature_polynomial() {
        let v = adaptive_quadrature(|x| x * x, 0.0, 1.0, 1e-14).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn quadrature_reports_max_depth() {
        let r = adaptive_quadrature(|x| 1.0 / x, 0.0, 1.0, 1e-12);
        assert!(matches!(r, Err(Error::MaxDepth { .. })));
    }

    #[test]
    fn area_sample_center() {
        let (light, point) = on_axis();
        let s = sample_area(&light, &point, UnitSquareSample::new(0.5, 0.5));
        assert!((s.disk_point - Vec3::Z).length() < 1e-15);
        assert!((s.pdf - 1.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn area_cosine_on_axis() {
        let (light, point) = on_axis();
        for i in 0..10 {
            let u = UnitSquareSample::new(0.1 * i as f64, 0.37);
            let s = sample_area(&light, &point, u);
            let cos = s.direction.dot(light.normal).abs();
            assert!((cos - 1.0 / s.distance).abs() < 1e-14);
        }
    }

    #[test]
    fn circular_cap_never_rejects() {
        let (light, point) = on_axis();
        let frame = build_frames(&light, &point).unwrap();
        let mut rng = RngStream::new(3, 0);
        for _ in 0..10_000 {
            assert_eq!(sample_cap_rejection(&frame, &mut rng).trials, 1);
        }
    }

    #[test]
    fn cap_estimate_is_thread_independent() {
        let light = DiskLight::new(Vec3::new(0.0, 1.5, 1.0), -Vec3::Z, 1.0, 1.0).unwrap();
        let frame = build_frames(&light, &ShadingPoint::new(Vec3::ZERO)).unwrap();
        let a = cap_rejection_solid_angle(&frame, 100_003, 9);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let b = pool.install(|| cap_rejection_solid_angle(&frame, 100_003, 9));
        assert_eq!(a, b);
        assert!(a.agrees_with(frame.omega, 4.0));
    }

    #[test]
    fn far_field_matches_on_axis_cap() {
        let light = DiskLight::new(Vec3::new(0.0, 0.0, 1000.0), -Vec3::Z, 1.0, 1.0).unwrap();
        let point = ShadingPoint::new(Vec3::ZERO);
        let exact = TAU * (1.0 - 1000.0 / (1000.0f64 * 1000.0 + 1.0).sqrt());
        assert!((far_field_solid_angle(&light, &point) / exact - 1.0).abs() < 1e-5);
    }
}
