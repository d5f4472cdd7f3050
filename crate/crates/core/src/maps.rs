//! Area-preserving maps from the unit square onto a spherical ellipse.
//!
//! * parallel: `eps1` picks the azimuth `phi_p` around `x_e` by inverting the
//!   fractional area `Ω_p`, `eps2` slides along the chord of half-length `h_p`;
//! * radial: `eps1` picks a quadrant and the azimuth `phi_r` around `z_e`,
//!   `eps2` interpolates the altitude between the boundary and the center;
//! * ld-radial: the radial map fed with the concentric disk warp followed by
//!   an inverse polar map, which removes the convergence at the center.
//!
//! Each map also has an inverse, used to check area preservation against
//! independently sampled directions.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::SphericalEllipseFrame;
use crate::solid_angle::{self, ParallelParams, RadialParams};
use crate::vec3::Vec3;

/// Largest double below one.
pub const ONE_MINUS_EPSILON: f64 = 1.0 - f64::EPSILON / 2.0;

/// A point of the closed unit square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitSquareSample {
    pub e1: f64,
    pub e2: f64,
}

impl UnitSquareSample {
    /// Clamps both coordinates into `[0, 1]`; NaN becomes 0.
    pub fn new(e1: f64, e2: f64) -> Self {
        let fix = |v: f64| if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
        UnitSquareSample {
            e1: fix(e1),
            e2: fix(e2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Technique {
    Area,
    Parallel,
    Radial,
    LdRadial,
    TabRadial,
    Oracle,
}

impl Technique {
    pub const ALL: [Technique; 6] = [
        Technique::Area,
        Technique::Parallel,
        Technique::Radial,
        Technique::LdRadial,
        Technique::TabRadial,
        Technique::Oracle,
    ];

    /// The three exact solid-angle maps.
    pub const MAPS: [Technique; 3] = [Technique::Parallel, Technique::Radial, Technique::LdRadial];

    pub fn name(self) -> &'static str {
        match self {
            Technique::Area => "area",
            Technique::Parallel => "parallel",
            Technique::Radial => "radial",
            Technique::LdRadial => "ld-radial",
            Technique::TabRadial => "tab-radial",
            Technique::Oracle => "oracle",
        }
    }

    /// Whether samples are distributed uniformly in solid angle.
    pub fn is_solid_angle(self) -> bool {
        !matches!(self, Technique::Area)
    }
}

impl fmt::Display for Technique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Technique {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "area" => Ok(Technique::Area),
            "parallel" => Ok(Technique::Parallel),
            "radial" => Ok(Technique::Radial),
            "ld-radial" | "ld_radial" => Ok(Technique::LdRadial),
            "tab-radial" | "tab_radial" | "tabulated-radial" => Ok(Technique::TabRadial),
            "oracle" => Ok(Technique::Oracle),
            other => Err(Error::Scene(format!("unknown technique '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapSample {
    /// Direction in ellipse-frame coordinates.
    pub q: Vec3,
    /// Direction in world coordinates.
    pub direction: Vec3,
    /// Solid-angle density.
    pub pdf: f64,
    pub disk_point: Vec3,
    pub technique: Technique,
    /// Root-finding iterations spent on this sample.
    pub iterations: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonConfig {
    /// Tolerance on the fractional area, relative to the total solid angle.
    pub tolerance: f64,
    pub max_iterations: u32,
    /// Replace steps that leave the bracket by bisection. When off such steps
    /// are clamped to the bracket instead.
    pub bisection_fallback: bool,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            tolerance: 1e-10,
            max_iterations: 32,
            bisection_fallback: true,
        }
    }
}

/// Derivatives below this are treated as zero by the root finder.
pub const MIN_DERIVATIVE: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub iterations: u32,
}

/// Solves `f(x) = target` for increasing `f` on `[lo, hi]` with safeguarded
/// Newton steps starting at `guess`. `f` returns the value and derivative;
/// `tol` is absolute.
pub fn invert_monotone<F>(
    mut f: F,
    target: f64,
    lo: f64,
    hi: f64,
    guess: f64,
    tol: f64,
    cfg: &NewtonConfig,
) -> Result<Root>
where
    F: FnMut(f64) -> Result<(f64, f64)>,
{
    let (mut lo, mut hi) = (lo, hi);
    let mut x = guess.clamp(lo, hi);
    let mut best = x;
    let mut best_err = f64::INFINITY;
    for it in 0..cfg.max_iterations {
        let (value, slope) = f(x)?;
        let err = value - target;
        if err.abs() < best_err {
            best_err = err.abs();
            best = x;
        }
        if err.abs() <= tol {
            return Ok(Root { x, iterations: it });
        }
        if err < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - err / slope;
        let inside = newton > lo && newton < hi;
        let next = if slope.abs() >= MIN_DERIVATIVE && inside {
            newton
        } else if cfg.bisection_fallback {
            0.5 * (lo + hi)
        } else if slope.abs() >= MIN_DERIVATIVE && newton.is_finite() {
            newton.clamp(lo, hi)
        } else {
            0.5 * (lo + hi)
        };
        // The bracket has shrunk to adjacent doubles: no better answer exists.
        if next == x || hi - lo <= 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
            return Ok(Root {
                x: next,
                iterations: it + 1,
            });
        }
        x = next;
    }
    Err(Error::NoConvergence {
        best,
        iterations: cfg.max_iterations,
    })
}

/// Shirley-Chiu concentric map. Returns polar coordinates `(r, theta)` with
/// `r` in `[0, 1]` and `theta` in `[0, 2 pi)`.
pub fn concentric_map(u: UnitSquareSample) -> (f64, f64) {
    let a = 2.0 * u.e1 - 1.0;
    let b = 2.0 * u.e2 - 1.0;
    if a == 0.0 && b == 0.0 {
        return (0.0, 0.0);
    }
    let (r, theta) = if a.abs() > b.abs() {
        (a, FRAC_PI_4 * (b / a))
    } else {
        (b, FRAC_PI_2 - FRAC_PI_4 * (a / b))
    };
    let theta = if r < 0.0 { theta + PI } else { theta };
    (r.abs(), wrap_angle(theta))
}

/// Inverse of [`concentric_map`].
pub fn inverse_concentric_map(r: f64, theta: f64) -> UnitSquareSample {
    if r <= 0.0 {
        return UnitSquareSample::new(0.5, 0.5);
    }
    let (s, c) = theta.sin_cos();
    let (x, y) = (r * c, r * s);
    let (a, b) = if x.abs() >= y.abs() {
        let a = r.copysign(x);
        // polar angle of the point seen from the sign-flipped axis
        let t = (y * x.signum()).atan2(x.abs());
        (a, a * t / FRAC_PI_4)
    } else {
        let b = r.copysign(y);
        let t = y.abs().atan2(x * y.signum());
        (b * (FRAC_PI_2 - t) / FRAC_PI_4, b)
    };
    UnitSquareSample::new(0.5 * (a + 1.0), 0.5 * (b + 1.0))
}

fn wrap_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// Quadrant index of a polar angle in `[0, 2 pi)`.
fn quadrant_of(theta: f64) -> usize {
    ((theta / FRAC_PI_2) as usize).min(3)
}

/// Inverse polar map: `u` is the azimuth fraction inside the quadrant of
/// `theta`, mirrored in the odd quadrants, and `v = r^2`.
pub fn inverse_polar(r: f64, theta: f64) -> UnitSquareSample {
    let theta = wrap_angle(theta);
    let k = quadrant_of(theta);
    let local = 2.0 * (theta - k as f64 * FRAC_PI_2) / PI;
    let u = if k.is_multiple_of(2) {
        local
    } else {
        1.0 - local
    };
    UnitSquareSample::new(u, r * r)
}

/// Per-frame constants shared by all samples drawn from one shading point.
#[derive(Debug, Clone, Copy)]
pub struct EllipseSampler {
    pub frame: SphericalEllipseFrame,
    pp: ParallelParams,
    rp: RadialParams,
    half_parallel: f64,
    quarter: f64,
}

impl EllipseSampler {
    pub fn new(frame: &SphericalEllipseFrame) -> Result<Self> {
        let axes = frame.axes;
        let pp = ParallelParams::new(&axes);
        let half_parallel = solid_angle::omega_parallel_positive_unchecked(&axes, &pp, axes.beta)?;
        Ok(EllipseSampler {
            frame: *frame,
            pp,
            rp: RadialParams::new(&axes),
            half_parallel,
            quarter: 0.25 * frame.omega,
        })
    }

    fn tolerance(&self, cfg: &NewtonConfig) -> f64 {
        cfg.tolerance * self.frame.omega
    }

    fn finish(&self, q: Vec3, technique: Technique, iterations: u32) -> Result<MapSample> {
        let direction = self.frame.to_world(q);
        let disk_point = self.frame.world_direction_to_plane(direction)?;
        Ok(MapSample {
            q,
            direction,
            pdf: 1.0 / self.frame.omega,
            disk_point,
            technique,
            iterations,
        })
    }

    /// Solves `Ω_p⁺(phi) = target` on `[0, beta]`.
    fn parallel_azimuth(&self, fraction: f64, cfg: &NewtonConfig) -> Result<Root> {
        let axes = &self.frame.axes;
        let beta = axes.beta;
        if fraction <= 0.0 {
            return Ok(Root {
                x: 0.0,
                iterations: 0,
            });
        }
        let target = fraction * self.half_parallel;
        invert_monotone(
            |phi| {
                let v = solid_angle::omega_parallel_positive_unchecked(axes, &self.pp, phi)?;
                Ok((
                    v,
                    2.0 * solid_angle::h_parallel_unchecked(axes, &self.pp, phi),
                ))
            },
            target,
            0.0,
            beta,
            fraction * beta,
            self.tolerance(cfg),
            cfg,
        )
    }

    /// Parallel map. `eps1 = 1/2` is the central chord; `eps2 > 1/2` moves
    /// toward `+x_e`.
    pub fn parallel(&self, u: UnitSquareSample, cfg: &NewtonConfig) -> Result<MapSample> {
        let t = 2.0 * u.e1 - 1.0;
        let root = self.parallel_azimuth(t.abs().min(1.0), cfg)?;
        let phi = root.x.copysign(t);
        let axes = &self.frame.axes;
        let hp = solid_angle::h_parallel_unchecked(axes, &self.pp, phi);
        let h = (2.0 * u.e2 - 1.0) * hp;
        let rho = ((1.0 - h) * (1.0 + h)).max(0.0).sqrt();
        let (s, c) = phi.sin_cos();
        let q = Vec3::new(h, rho * s, rho * c);
        self.finish(q, Technique::Parallel, root.iterations)
    }

    /// Solves `Ω_r(phi) = fraction * Ω_r(pi/2)` on `[0, pi/2]`.
    fn radial_azimuth(&self, fraction: f64, cfg: &NewtonConfig) -> Result<Root> {
        if fraction <= 0.0 {
            return Ok(Root {
                x: 0.0,
                iterations: 0,
            });
        }
        if fraction >= 1.0 {
            return Ok(Root {
                x: FRAC_PI_2,
                iterations: 0,
            });
        }
        let axes = &self.frame.axes;
        invert_monotone(
            |phi| {
                let v = solid_angle::omega_radial_unchecked(axes, &self.rp, phi)?;
                Ok((v, one_minus_h_radial(axes, phi)))
            },
            fraction * self.quarter,
            0.0,
            FRAC_PI_2,
            fraction * FRAC_PI_2,
            self.tolerance(cfg),
            cfg,
        )
    }

    /// Radial map inside `quadrant` (counter-clockwise from `+x_e`). `local` is
    /// the azimuth fraction measured from the quadrant's starting axis and
    /// `weight` the altitude blend, 0 on the boundary and 1 at the center.
    fn radial_in_quadrant(
        &self,
        quadrant: usize,
        local: f64,
        weight: f64,
        technique: Technique,
        cfg: &NewtonConfig,
    ) -> Result<MapSample> {
        // Odd quadrants run from the y axis back to the x axis.
        let fraction = if quadrant.is_multiple_of(2) {
            local
        } else {
            1.0 - local
        };
        let root = self.radial_azimuth(fraction, cfg)?;
        let phi = root.x;
        let axes = &self.frame.axes;
        let hr = solid_angle::h_radial(axes, phi);
        let h = (1.0 - weight) * hr + weight;
        // sqrt(1 - h^2) with 1 - h = (1 - weight)(1 - h_r)
        let one_minus_h = (1.0 - weight) * one_minus_h_radial(axes, phi);
        let rho = (one_minus_h * (1.0 + h)).max(0.0).sqrt();
        let (s, c) = phi.sin_cos();
        let (sx, sy) = match quadrant {
            0 => (1.0, 1.0),
            1 => (-1.0, 1.0),
            2 => (-1.0, -1.0),
            _ => (1.0, -1.0),
        };
        let q = Vec3::new(sx * rho * c, sy * rho * s, h);
        self.finish(q, technique, root.iterations)
    }

    /// Radial map. `eps1` sweeps the full turn, a quarter per quadrant;
    /// `eps2 = 1` is the ellipse center.
    pub fn radial(&self, u: UnitSquareSample, cfg: &NewtonConfig) -> Result<MapSample> {
        let scaled = 4.0 * u.e1.min(ONE_MINUS_EPSILON);
        let quadrant = (scaled as usize).min(3);
        let local = (scaled - quadrant as f64).clamp(0.0, 1.0);
        self.radial_in_quadrant(quadrant, local, u.e2, Technique::Radial, cfg)
    }

    /// Low-distortion radial map.
    pub fn ld_radial(&self, u: UnitSquareSample, cfg: &NewtonConfig) -> Result<MapSample> {
        let (r, theta) = concentric_map(u);
        let quadrant = quadrant_of(theta);
        let uv = inverse_polar(r, theta);
        let local = if quadrant.is_multiple_of(2) {
            uv.e1
        } else {
            1.0 - uv.e1
        };
        self.radial_in_quadrant(quadrant, local, 1.0 - uv.e2, Technique::LdRadial, cfg)
    }

    pub fn sample(
        &self,
        technique: Technique,
        u: UnitSquareSample,
        cfg: &NewtonConfig,
    ) -> Result<MapSample> {
        match technique {
            Technique::Parallel => self.parallel(u, cfg),
            Technique::Radial => self.radial(u, cfg),
            Technique::LdRadial => self.ld_radial(u, cfg),
            other => Err(Error::Domain(format!(
                "{other} is not an analytic ellipse map"
            ))),
        }
    }

    /// Unit-square preimage of `q` under the parallel map.
    pub fn inverse_parallel(&self, q: Vec3) -> Result<UnitSquareSample> {
        let axes = &self.frame.axes;
        let phi = q.y.atan2(q.z).clamp(-axes.beta, axes.beta);
        let part = solid_angle::omega_parallel_positive_unchecked(axes, &self.pp, phi.abs())?;
        let e1 = 0.5 + 0.5 * (part / self.half_parallel).copysign(phi);
        let hp = solid_angle::h_parallel_unchecked(axes, &self.pp, phi);
        let e2 = if hp > 0.0 {
            0.5 * (q.x / hp + 1.0)
        } else {
            0.5
        };
        Ok(UnitSquareSample::new(e1, e2))
    }

    /// Unit-square preimage of `q` under the radial map.
    pub fn inverse_radial(&self, q: Vec3) -> Result<UnitSquareSample> {
        let theta = wrap_angle(q.y.atan2(q.x));
        let quadrant = quadrant_of(theta);
        let local = self.radial_local(q, quadrant)?;
        let e1 = (quadrant as f64 + local) / 4.0;
        Ok(UnitSquareSample::new(e1, self.radial_weight(q)))
    }

    /// Unit-square preimage of `q` under the low-distortion radial map.
    pub fn inverse_ld_radial(&self, q: Vec3) -> Result<UnitSquareSample> {
        let theta = wrap_angle(q.y.atan2(q.x));
        let quadrant = quadrant_of(theta);
        let local = self.radial_local(q, quadrant)?;
        let v = 1.0 - self.radial_weight(q);
        let polar = (quadrant as f64 + local) * FRAC_PI_2;
        Ok(inverse_concentric_map(v.max(0.0).sqrt(), polar))
    }

    pub fn inverse(&self, technique: Technique, q: Vec3) -> Result<UnitSquareSample> {
        match technique {
            Technique::Parallel => self.inverse_parallel(q),
            Technique::Radial => self.inverse_radial(q),
            Technique::LdRadial => self.inverse_ld_radial(q),
            other => Err(Error::Domain(format!("{other} has no inverse map"))),
        }
    }

    /// Azimuth fraction of `q` within its quadrant, in sweep order.
    fn radial_local(&self, q: Vec3, quadrant: usize) -> Result<f64> {
        let phi = q.y.abs().atan2(q.x.abs());
        let fraction =
            solid_angle::omega_radial_unchecked(&self.frame.axes, &self.rp, phi)? / self.quarter;
        let fraction = fraction.clamp(0.0, 1.0);
        Ok(if quadrant.is_multiple_of(2) {
            fraction
        } else {
            1.0 - fraction
        })
    }

    fn radial_weight(&self, q: Vec3) -> f64 {
        let axes = &self.frame.axes;
        let phi = q.y.abs().atan2(q.x.abs());
        let gap = one_minus_h_radial(axes, phi);
        ((q.z - (1.0 - gap)) / gap).clamp(0.0, 1.0)
    }
}

/// `1 - h_r(phi)` evaluated as `r^2 / (1 + h_r)`.
fn one_minus_h_radial(axes: &crate::geometry::EllipseAxes, phi: f64) -> f64 {
    let r = solid_angle::ellipse_radius(axes, phi);
    r * r / (1.0 + solid_angle::h_radial(axes, phi))
}

pub fn sample_parallel(
    frame: &SphericalEllipseFrame,
    u: UnitSquareSample,
    cfg: &NewtonConfig,
) -> Result<MapSample> {
    EllipseSampler::new(frame)?.parallel(u, cfg)
}

pub fn sample_radial(
    frame: &SphericalEllipseFrame,
    u: UnitSquareSample,
    cfg: &NewtonConfig,
) -> Result<MapSample> {
    EllipseSampler::new(frame)?.radial(u, cfg)
}

pub fn sample_ld_radial(
    frame: &SphericalEllipseFrame,
    u: UnitSquareSample,
    cfg: &NewtonConfig,
) -> Result<MapSample> {
    EllipseSampler::new(frame)?.ld_radial(u, cfg)
}

/// Solid-angle density of the exact maps: `1 / Ω_D` inside the ellipse.
pub fn pdf_solid_angle(frame: &SphericalEllipseFrame, direction: Vec3) -> f64 {
    if frame.ray_hits_disk(direction) {
        1.0 / frame.omega
    } else {
        0.0
    }
}
