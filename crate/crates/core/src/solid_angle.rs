//! Fractional solid-angle functions of a spherical ellipse.
//!
//! Two cylindrical projections give two formulations of the same area:
//!
//! * parallel: cylinder along `x_e`, azimuth `phi_p` in `[-beta, beta]`
//!   around that axis, chord half-length `h_p(phi_p)`;
//! * radial: cylinder along `z_e`, azimuth `phi_r` in `[0, pi/2]` inside one
//!   quadrant, boundary altitude `h_r(phi_r) = sqrt(1 - r(phi_r)^2)`.
//!
//! Both reduce to Legendre incomplete integrals; they are checked against
//! each other and against quadrature in the tests.

use std::f64::consts::FRAC_PI_2;

use crate::elliptic;
use crate::error::{Error, Result};
use crate::geometry::{EllipseAxes, SphericalEllipseFrame};

const RANGE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParallelParams {
    pub p: f64,
    pub m: f64,
    pub c_t: f64,
    pub n: f64,
}

impl ParallelParams {
    pub fn new(axes: &EllipseAxes) -> Self {
        let at2 = axes.a_t * axes.a_t;
        let bt2 = axes.b_t * axes.b_t;
        ParallelParams {
            p: 1.0 / bt2,
            m: ((at2 - bt2) / (at2 + 1.0)).max(0.0),
            // a_t / sqrt(1 + a_t^2) is sin(alpha) = a
            c_t: axes.a,
            n: -bt2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialParams {
    pub n: f64,
    pub m: f64,
    pub k: f64,
}

impl RadialParams {
    pub fn new(axes: &EllipseAxes) -> Self {
        let (a, b) = (axes.a, axes.b);
        let a2 = a * a;
        let b2 = b * b;
        let diff = (a - b) * (a + b);
        RadialParams {
            n: (diff / (a2 * (1.0 - b2))).max(0.0),
            m: (diff / (1.0 - b2)).max(0.0),
            k: b * (1.0 - a2) / (a * (1.0 - b2).sqrt()),
        }
    }
}

fn check_parallel_angle(axes: &EllipseAxes, phi: f64) -> Result<f64> {
    if phi.abs() <= axes.beta + RANGE_SLACK {
        Ok(phi.clamp(-axes.beta, axes.beta))
    } else {
        Err(Error::Domain(format!(
            "parallel azimuth {phi} outside [-{b}, {b}]",
            b = axes.beta
        )))
    }
}

/// Half-length of the chord at parallel azimuth `phi_p`.
pub fn h_parallel(axes: &EllipseAxes, phi_p: f64) -> Result<f64> {
    let phi = check_parallel_angle(axes, phi_p)?;
    Ok(h_parallel_unchecked(axes, &ParallelParams::new(axes), phi))
}

pub(crate) fn h_parallel_unchecked(axes: &EllipseAxes, pp: &ParallelParams, phi: f64) -> f64 {
    let s = phi.abs().sin();
    let s2 = s * s;
    // 1 - (p + 1) sin^2 = 1 - sin^2 / b^2, written to stay accurate near beta.
    let b = axes.b;
    let num = ((b - s) * (b + s) / (b * b)).max(0.0);
    let den = 1.0 - (pp.m * pp.p + 1.0) * s2;
    pp.c_t * (num / den).sqrt()
}

/// `Ω_p⁺(phi_p) = ∫_0^phi_p 2 h_p`, for `phi_p` in `[0, beta]`.
pub fn omega_parallel_positive(axes: &EllipseAxes, phi_p: f64) -> Result<f64> {
    if !(-RANGE_SLACK..=axes.beta + RANGE_SLACK).contains(&phi_p) {
        return Err(Error::Domain(format!(
            "azimuth {phi_p} outside [0, {}]",
            axes.beta
        )));
    }
    omega_parallel_positive_unchecked(
        axes,
        &ParallelParams::new(axes),
        phi_p.clamp(0.0, axes.beta),
    )
}

pub(crate) fn omega_parallel_positive_unchecked(
    axes: &EllipseAxes,
    pp: &ParallelParams,
    phi: f64,
) -> Result<f64> {
    if phi <= 0.0 {
        return Ok(0.0);
    }
    let amplitude = if phi >= axes.beta {
        FRAC_PI_2
    } else {
        (phi.tan() / axes.b_t).min(1.0).asin()
    };
    let n = pp.n;
    let (f, rj, s) = elliptic::first_kind_and_rj(n, amplitude, pp.m)?;
    let third = s * s * s / 3.0 * rj;
    // (2 c_t / b_t) [(1 - n) Π - F] with Π = F + n/3 sin^3 RJ. For small b_t the
    // bracket cancels, so the equivalent -n [F - (1 - n)/3 sin^3 RJ] is used.
    let value = if axes.b_t < 1.0 {
        2.0 * pp.c_t * axes.b_t * (f - (1.0 - n) * third)
    } else {
        let pi = f + n * third;
        2.0 * pp.c_t / axes.b_t * ((1.0 - n) * pi - f)
    };
    Ok(value.max(0.0))
}

/// `Ω_p(phi_p) = ∫_{-beta}^{phi_p} 2 h_p`, for `phi_p` in `[-beta, beta]`.
pub fn omega_parallel(axes: &EllipseAxes, phi_p: f64) -> Result<f64> {
    let phi = check_parallel_angle(axes, phi_p)?;
    omega_parallel_unchecked(axes, &ParallelParams::new(axes), phi)
}

pub(crate) fn omega_parallel_unchecked(
    axes: &EllipseAxes,
    pp: &ParallelParams,
    phi: f64,
) -> Result<f64> {
    let half = omega_parallel_positive_unchecked(axes, pp, axes.beta)?;
    let part = omega_parallel_positive_unchecked(axes, pp, phi.abs())?;
    Ok(if phi >= 0.0 { half + part } else { half - part })
}

/// Planar radius of the parallel-projected ellipse at azimuth `phi_r`.
pub fn ellipse_radius(axes: &EllipseAxes, phi_r: f64) -> f64 {
    let (s, c) = phi_r.sin_cos();
    let (a, b) = (axes.a, axes.b);
    a * b / (a * a * s * s + b * b * c * c).sqrt()
}

/// Boundary altitude `h_r = sqrt(1 - r^2)` along the `z_e` axis.
pub fn h_radial(axes: &EllipseAxes, phi_r: f64) -> f64 {
    let (s, c) = phi_r.sin_cos();
    let (a2, b2) = (axes.a * axes.a, axes.b * axes.b);
    let den = a2 * s * s + b2 * c * c;
    // 1 - r^2 expanded so that no cancellation occurs.
    ((a2 * s * s * (1.0 - b2) + b2 * c * c * (1.0 - a2)) / den).sqrt()
}

/// `Ω_r(phi_r) = ∫_0^phi_r (1 - h_r)`, for `phi_r` in `[0, pi/2]`.
pub fn omega_radial(axes: &EllipseAxes, phi_r: f64) -> Result<f64> {
    if !(-RANGE_SLACK..=FRAC_PI_2 + RANGE_SLACK).contains(&phi_r) {
        return Err(Error::Domain(format!(
            "radial azimuth {phi_r} outside [0, pi/2]"
        )));
    }
    omega_radial_unchecked(axes, &RadialParams::new(axes), phi_r.clamp(0.0, FRAC_PI_2))
}

pub(crate) fn omega_radial_unchecked(
    axes: &EllipseAxes,
    rp: &RadialParams,
    phi: f64,
) -> Result<f64> {
    if phi <= 0.0 {
        return Ok(0.0);
    }
    if phi >= FRAC_PI_2 {
        // Complete case: the elementary term below vanishes.
        return Ok(radial_rj_term(axes, rp, 1.0, 0.0)?.max(0.0));
    }
    // Parametric angle of the tangent ellipse.
    let (sin_phi, cos_phi) = phi.sin_cos();
    let (ys, xs) = (axes.a_t * sin_phi, axes.b_t * cos_phi);
    let norm = ys.hypot(xs);
    let (s, c) = (ys / norm, xs / norm);
    // φ - kΠ(n; φ' | m) rewritten with the addition formula pairing Π(n) and
    // Π(m/n) = Π(a²): an arctangent plus a positive RJ term, so that nothing
    // cancels for small ellipses.
    let a2 = axes.a * axes.a;
    let g = (1.0 - rp.m * s * s).sqrt();
    let ca = (1.0 - a2).sqrt();
    let gap =
        (a2 * c * c + axes.b * axes.b * (1.0 - a2) / (1.0 - axes.b * axes.b) * s * s) / (g + ca);
    let elementary =
        (sin_phi * cos_phi * gap).atan2(g * cos_phi * cos_phi + ca * sin_phi * sin_phi);
    Ok((elementary + radial_rj_term(axes, rp, s, c)?).max(0.0))
}

/// `k a²/3 sin³φ' RJ(cos²φ', 1 - m sin²φ', 1, 1 - a² sin²φ')`.
fn radial_rj_term(axes: &EllipseAxes, rp: &RadialParams, s: f64, c: f64) -> Result<f64> {
    let a2 = axes.a * axes.a;
    let s2 = s * s;
    let rj = elliptic::carlson_rj(c * c, 1.0 - rp.m * s2, 1.0, 1.0 - a2 * s2)?;
    Ok(rp.k * a2 / 3.0 * s2 * s * rj)
}

/// Total solid angle, `4 Ω_r(pi/2)`.
pub fn total_solid_angle_axes(axes: &EllipseAxes) -> Result<f64> {
    Ok(4.0 * omega_radial_unchecked(axes, &RadialParams::new(axes), FRAC_PI_2)?)
}

pub fn total_solid_angle(frame: &SphericalEllipseFrame) -> Result<f64> {
    total_solid_angle_axes(&frame.axes)
}

/// Total solid angle from the parallel formulation, `Ω_p(beta)`.
pub fn total_solid_angle_parallel(axes: &EllipseAxes) -> Result<f64> {
    Ok(2.0 * omega_parallel_positive_unchecked(axes, &ParallelParams::new(axes), axes.beta)?)
}
