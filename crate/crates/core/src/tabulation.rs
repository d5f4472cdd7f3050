//! Tabulated radial map.
//!
//! The normalized fractional quadrant area `Ω_r'(φ) = Ω_r(φ) / Ω_r(π/2)`
//! depends only weakly on `alpha` once `beta` is expressed as `β' = β/α`, so
//! a single 2D table over `(β', φ_r)` built at a reference `alpha` replaces the
//! Newton inversion. A sample picks an azimuth interval from the table and
//! draws a point in the spherical triangle spanned by the ellipse center and
//! the boundary arc at the start of the interval. Points that fall outside
//! the true ellipse are rejected.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{EllipseAxes, SphericalEllipseFrame};
use crate::maps::{MapSample, Technique, UnitSquareSample, ONE_MINUS_EPSILON};
use crate::rng::RngStream;
use crate::solid_angle;
use crate::vec3::Vec3;

pub const DEFAULT_RESOLUTION: usize = 1024;
pub const DEFAULT_ALPHA_REF: f64 = FRAC_PI_4;
pub const DEFAULT_RETRY_CAP: u32 = 16;
/// Deviation of the `alpha` probe above which a calibration warning is due.
pub const ALPHA_PROBE_THRESHOLD: f64 = 0.02;

const MAGIC: &[u8; 4] = b"SETB";
const VERSION: u32 = 1;
pub const HEADER_BYTES: usize = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct RadialTable {
    n_beta: usize,
    n_phi: usize,
    alpha_ref: f64,
    /// Row-major `Ω_r'`, one row per `β'`.
    entries: Vec<f64>,
    /// Row-major boundary arcs `θ(φ_j)` of the reference ellipse.
    theta_starts: Vec<f64>,
}

/// `Ω_r(φ) / Ω_r(π/2)` for the ellipse with semi-arcs `alpha` and
/// `β' alpha`. `β' = 0` is the limit of a vanishing minor axis, where all of
/// the quadrant's area collapses onto `φ = 0`.
pub fn normalized_area(alpha: f64, beta_prime: f64, phi: f64) -> Result<f64> {
    if beta_prime <= 0.0 {
        return Ok(if phi > 0.0 { 1.0 } else { 0.0 });
    }
    let axes = EllipseAxes::from_arcs(alpha, beta_prime.min(1.0) * alpha);
    let quarter = solid_angle::omega_radial(&axes, FRAC_PI_2)?;
    Ok((solid_angle::omega_radial(&axes, phi)? / quarter).clamp(0.0, 1.0))
}

fn boundary_arc(alpha: f64, beta_prime: f64, phi: f64) -> f64 {
    if beta_prime <= 0.0 {
        return if phi > 0.0 { 0.0 } else { alpha };
    }
    let axes = EllipseAxes::from_arcs(alpha, beta_prime.min(1.0) * alpha);
    solid_angle::ellipse_radius(&axes, phi).min(1.0).asin()
}

/// Builds an `n_beta x n_phi` table on uniform grids `β'_i = i / (n_beta - 1)`
/// and `φ_j = j / (n_phi - 1) · π/2`.
pub fn build_table(n_beta: usize, n_phi: usize, alpha_ref: f64) -> Result<RadialTable> {
    if n_beta < 2 || n_phi < 2 {
        return Err(Error::Domain(format!(
            "table resolution {n_beta}x{n_phi} below 2x2"
        )));
    }
    if !(alpha_ref > 0.0 && alpha_ref < FRAC_PI_2) {
        return Err(Error::Domain(format!(
            "reference alpha {alpha_ref} outside (0, pi/2)"
        )));
    }
    let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..n_beta)
        .into_par_iter()
        .map(|i| {
            let bp = i as f64 / (n_beta - 1) as f64;
            let mut row = Vec::with_capacity(n_phi);
            let mut arcs = Vec::with_capacity(n_phi);
            let mut last = 0.0f64;
            for j in 0..n_phi {
                let phi = grid_phi(j, n_phi);
                let v = if j == 0 {
                    0.0
                } else if j == n_phi - 1 {
                    1.0
                } else {
                    normalized_area(alpha_ref, bp, phi)?
                };
                last = last.max(v);
                row.push(last);
                arcs.push(boundary_arc(alpha_ref, bp, phi));
            }
            Ok((row, arcs))
        })
        .collect::<Result<_>>()?;
    let mut entries = Vec::with_capacity(n_beta * n_phi);
    let mut theta_starts = Vec::with_capacity(n_beta * n_phi);
    for (row, arcs) in rows {
        entries.extend(row);
        theta_starts.extend(arcs);
    }
    Ok(RadialTable {
        n_beta,
        n_phi,
        alpha_ref,
        entries,
        theta_starts,
    })
}

fn grid_phi(j: usize, n_phi: usize) -> f64 {
    if j + 1 == n_phi {
        FRAC_PI_2
    } else {
        j as f64 / (n_phi - 1) as f64 * FRAC_PI_2
    }
}

impl RadialTable {
    pub fn n_beta(&self) -> usize {
        self.n_beta
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn alpha_ref(&self) -> f64 {
        self.alpha_ref
    }

    pub fn beta_prime(&self, i: usize) -> f64 {
        i as f64 / (self.n_beta - 1) as f64
    }

    pub fn phi(&self, j: usize) -> f64 {
        grid_phi(j, self.n_phi)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n_phi..(i + 1) * self.n_phi]
    }

    pub fn theta_row(&self, i: usize) -> &[f64] {
        &self.theta_starts[i * self.n_phi..(i + 1) * self.n_phi]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn theta_starts(&self) -> &[f64] {
        &self.theta_starts
    }

    /// Azimuth with normalized area `f` in row `i`, by binary search and
    /// linear interpolation inside the interval.
    fn row_quantile(&self, i: usize, f: f64) -> f64 {
        let row = self.row(i);
        // first k >= 1 with row[k] > f
        let k = row[1..].partition_point(|&v| v <= f) + 1;
        let j = k.min(self.n_phi - 1) - 1;
        let (c0, c1) = (row[j], row[j + 1]);
        let t = if c1 > c0 {
            ((f - c0) / (c1 - c0)).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let step = FRAC_PI_2 / (self.n_phi - 1) as f64;
        (j as f64 + t) * step
    }

    /// Approximate inverse of `Ω_r'` for an ellipse with ratio `beta_prime`,
    /// interpolating the quantiles of the two neighbouring rows.
    pub fn quantile(&self, beta_prime: f64, f: f64) -> f64 {
        let x = beta_prime.clamp(0.0, 1.0) * (self.n_beta - 1) as f64;
        let i = (x as usize).min(self.n_beta - 2);
        let w = x - i as f64;
        let lo = self.row_quantile(i, f);
        if w == 0.0 {
            return lo;
        }
        let hi = self.row_quantile(i + 1, f);
        (1.0 - w) * lo + w * hi
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.n_beta as u32).to_le_bytes())?;
        w.write_all(&(self.n_phi as u32).to_le_bytes())?;
        w.write_all(&self.alpha_ref.to_le_bytes())?;
        for v in self.entries.iter().chain(&self.theta_starts) {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut header = [0u8; HEADER_BYTES];
        r.read_exact(&mut header)
            .map_err(|e| Error::TableFormat(format!("truncated header: {e}")))?;
        if &header[0..4] != MAGIC {
            return Err(Error::TableFormat("bad magic".into()));
        }
        let word = |k: usize| u32::from_le_bytes(header[k..k + 4].try_into().unwrap());
        let version = word(4);
        if version != VERSION {
            return Err(Error::TableFormat(format!("unsupported version {version}")));
        }
        let (n_beta, n_phi) = (word(8) as usize, word(12) as usize);
        if n_beta < 2 || n_phi < 2 {
            return Err(Error::TableFormat(format!(
                "bad resolution {n_beta}x{n_phi}"
            )));
        }
        let alpha_ref = f64::from_le_bytes(header[16..24].try_into().unwrap());
        let count = n_beta * n_phi;
        let mut body = Vec::new();
        r.read_to_end(&mut body)?;
        if body.len() != 2 * count * 8 {
            return Err(Error::TableFormat(format!(
                "expected {} payload bytes, found {}",
                2 * count * 8,
                body.len()
            )));
        }
        let mut values = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
        let entries: Vec<f64> = values.by_ref().take(count).collect();
        let theta_starts: Vec<f64> = values.collect();
        if entries.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::TableFormat("entry outside [0, 1]".into()));
        }
        Ok(RadialTable {
            n_beta,
            n_phi,
            alpha_ref,
            entries,
            theta_starts,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }

    /// Size in bytes of the serialized table.
    pub fn file_size(&self) -> usize {
        HEADER_BYTES + 2 * self.entries.len() * 8
    }
}

/// Largest `|Ω_r'(α, β', φ) - Ω_r'(α_ref, β', φ)|` over `alphas` and a
/// `grid x grid` lattice of `(β', φ)`.
pub fn alpha_sensitivity(alpha_ref: f64, alphas: &[f64], grid: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for i in 1..=grid {
        let bp = i as f64 / grid as f64;
        for j in 1..grid {
            let phi = j as f64 / grid as f64 * FRAC_PI_2;
            let base = normalized_area(alpha_ref, bp, phi)?;
            for &alpha in alphas {
                worst = worst.max((normalized_area(alpha, bp, phi)? - base).abs());
            }
        }
    }
    Ok(worst)
}

/// Solid angle of a spherical triangle (Van Oosterom and Strackee).
pub fn spherical_triangle_area(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    let num = a.dot(b.cross(c)).abs();
    let den = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
    2.0 * num.atan2(den)
}

pub const MIN_TRIANGLE_AREA: f64 = 1e-14;

/// Uniform sample of the spherical triangle `abc` (Arvo). `u.e1` sweeps the
/// area from edge `ab` to `c`; `u.e2 = 0` is vertex `b`.
pub fn sample_spherical_triangle(a: Vec3, b: Vec3, c: Vec3, u: UnitSquareSample) -> Result<Vec3> {
    let area = spherical_triangle_area(a, b, c);
    if !(area >= MIN_TRIANGLE_AREA) {
        return Err(Error::DegenerateTriangle(area));
    }
    Ok(arvo(a, b, c, area, u))
}

fn arvo(a: Vec3, b: Vec3, c: Vec3, area: f64, u: UnitSquareSample) -> Vec3 {
    let nb = a.cross(b);
    let nc = a.cross(c);
    let alpha = nb.cross(nc).length().atan2(nb.dot(nc));
    let (sin_alpha, cos_alpha) = alpha.sin_cos();
    let (s, t) = (u.e1 * area - alpha).sin_cos();
    let uu = t - cos_alpha;
    let vv = s + sin_alpha * a.dot(b);
    let q =
        (((vv * t - uu * s) * cos_alpha - vv) / ((vv * s + uu * t) * sin_alpha)).clamp(-1.0, 1.0);
    let c_perp = orthogonal_unit(c, a);
    let c_hat = a * q + c_perp * ((1.0 - q) * (1.0 + q)).max(0.0).sqrt();
    let z = 1.0 - u.e2 * (1.0 - c_hat.dot(b));
    let z = z.clamp(-1.0, 1.0);
    let p_perp = orthogonal_unit(c_hat, b);
    (b * z + p_perp * ((1.0 - z) * (1.0 + z)).max(0.0).sqrt()).normalized()
}

/// Unit component of `v` orthogonal to unit `axis`.
fn orthogonal_unit(v: Vec3, axis: Vec3) -> Vec3 {
    let w = v - axis * v.dot(axis);
    let len = w.length();
    if len > 0.0 {
        w / len
    } else {
        axis.orthonormal_basis().0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TabConfig {
    /// Attempts per sample before giving up.
    pub retry_cap: u32,
    /// Return rejected samples with zero weight instead of retrying.
    pub zero_weight_on_reject: bool,
}

impl Default for TabConfig {
    fn default() -> Self {
        TabConfig {
            retry_cap: DEFAULT_RETRY_CAP,
            zero_weight_on_reject: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TabSample {
    Accepted(MapSample),
    /// Candidate direction outside the ellipse, in ellipse-frame coordinates.
    Rejected(Vec3),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TabDraw {
    /// `None` when the sample carries zero weight.
    pub sample: Option<MapSample>,
    pub attempts: u32,
    /// The retry cap was hit and the last candidate was pulled onto the
    /// boundary.
    pub exhausted: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TabSampleStats {
    pub accepted: u64,
    pub rejected: u64,
}

impl TabSampleStats {
    pub fn record(&mut self, draw: &TabDraw) {
        let failed = if draw.sample.is_some() && !draw.exhausted {
            self.accepted += 1;
            draw.attempts - 1
        } else {
            draw.attempts
        };
        self.rejected += u64::from(failed);
    }

    pub fn merge(&mut self, other: &TabSampleStats) {
        self.accepted += other.accepted;
        self.rejected += other.rejected;
    }

    pub fn ratio(&self) -> f64 {
        let total = self.accepted + self.rejected;
        if total == 0 {
            0.0
        } else {
            self.rejected as f64 / total as f64
        }
    }
}

fn quadrant_signs(quadrant: usize) -> (f64, f64) {
    match quadrant {
        0 => (1.0, 1.0),
        1 => (-1.0, 1.0),
        2 => (-1.0, -1.0),
        _ => (1.0, -1.0),
    }
}

fn inside_ellipse(axes: &EllipseAxes, q: Vec3) -> bool {
    if q.z <= 0.0 {
        return false;
    }
    let rho = q.x.hypot(q.y);
    let phi = q.y.abs().atan2(q.x.abs());
    rho <= solid_angle::ellipse_radius(axes, phi)
}

fn finish(frame: &SphericalEllipseFrame, q: Vec3) -> Result<MapSample> {
    let direction = frame.to_world(q);
    Ok(MapSample {
        q,
        direction,
        pdf: 1.0 / frame.omega,
        disk_point: frame.world_direction_to_plane(direction)?,
        technique: Technique::TabRadial,
        iterations: 0,
    })
}

/// One tabulated candidate. `u.e1` picks the quadrant and azimuth as in the
/// radial map; `u.e2 = 1` is the ellipse center.
pub fn sample_tabulated(
    table: &RadialTable,
    frame: &SphericalEllipseFrame,
    u: UnitSquareSample,
) -> Result<TabSample> {
    let axes = &frame.axes;
    let scaled = 4.0 * u.e1.min(ONE_MINUS_EPSILON);
    let quadrant = (scaled as usize).min(3);
    let local = (scaled - quadrant as f64).clamp(0.0, 1.0);
    let fraction = if quadrant.is_multiple_of(2) {
        local
    } else {
        1.0 - local
    };

    let phi = table.quantile(axes.beta / axes.alpha, fraction);
    let step = FRAC_PI_2 / (table.n_phi - 1) as f64;
    let x = phi / step;
    let j = (x as usize).min(table.n_phi - 2);
    let t = (x - j as f64).clamp(0.0, 1.0);
    let (phi0, phi1) = (j as f64 * step, (j + 1) as f64 * step);

    // Boundary arc at the interval start, pushed out so that the great-circle
    // edge between the two outer vertices stays outside the ellipse.
    let r0 = solid_angle::ellipse_radius(axes, phi0);
    let tan0 = r0 / ((1.0 - r0) * (1.0 + r0)).sqrt();
    let rho = tan0 / (0.5 * step).cos();
    let vertex = |phi: f64| {
        let (s, c) = phi.sin_cos();
        Vec3::new(rho * c, rho * s, 1.0).normalized()
    };
    let (va, vc) = (vertex(phi0), vertex(phi1));
    let area = spherical_triangle_area(va, Vec3::Z, vc);
    if !(area >= MIN_TRIANGLE_AREA) {
        return Err(Error::DegenerateTriangle(area));
    }
    let p = arvo(va, Vec3::Z, vc, area, UnitSquareSample::new(t, 1.0 - u.e2));
    let (sx, sy) = quadrant_signs(quadrant);
    let q = Vec3::new(sx * p.x, sy * p.y, p.z);
    if inside_ellipse(axes, q) {
        Ok(TabSample::Accepted(finish(frame, q)?))
    } else {
        Ok(TabSample::Rejected(q))
    }
}

/// Draws a tabulated sample, retrying rejected candidates with fresh
/// uniforms from `rng`.
pub fn sample_tabulated_loop(
    table: &RadialTable,
    frame: &SphericalEllipseFrame,
    u: UnitSquareSample,
    rng: &mut RngStream,
    cfg: &TabConfig,
) -> Result<TabDraw> {
    let mut u = u;
    let mut attempts = 0;
    loop {
        attempts += 1;
        match sample_tabulated(table, frame, u)? {
            TabSample::Accepted(s) => {
                return Ok(TabDraw {
                    sample: Some(s),
                    attempts,
                    exhausted: false,
                })
            }
            TabSample::Rejected(q) => {
                if cfg.zero_weight_on_reject {
                    return Ok(TabDraw {
                        sample: None,
                        attempts,
                        exhausted: false,
                    });
                }
                if attempts >= cfg.retry_cap.max(1) {
                    return Ok(TabDraw {
                        sample: Some(finish(frame, clamp_to_boundary(&frame.axes, q))?),
                        attempts,
                        exhausted: true,
                    });
                }
            }
        }
        u = rng.square();
    }
}

fn clamp_to_boundary(axes: &EllipseAxes, q: Vec3) -> Vec3 {
    let phi = q.y.atan2(q.x);
    let r = solid_angle::ellipse_radius(axes, phi) * (1.0 - 1e-12);
    let (s, c) = phi.sin_cos();
    Vec3::new(r * c, r * s, ((1.0 - r) * (1.0 + r)).sqrt())
}
