//! Spherical-ellipse construction for an oriented disk seen from a point.
//!
//! Two frames are involved. The disk frame has `z_d = -n` (pointing from the
//! shading point toward the disk plane) and `y_d` along the in-plane offset
//! from the foot of the perpendicular to the disk center, so the disk center
//! sits at `(0, h, d)` in disk-frame coordinates centered at the shading
//! point. The ellipse frame shares `x_e = x_d`, and `z_e` points at the center
//! of the spherical ellipse; the major semi-arc `alpha` lies along `x_e` and
//! the minor semi-arc `beta` along `y_e`.

use crate::error::{Error, Result};
use crate::solid_angle;
use crate::vec3::Vec3;

/// Relative distance to the disk plane below which the solid angle is
/// treated as zero.
pub const DEGENERACY_TOLERANCE: f64 = 1e-9;

/// In-plane offset (relative to the radius) below which the point is
/// considered to be on the disk axis.
pub const ON_AXIS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskLight {
    pub center: Vec3,
    pub normal: Vec3,
    pub radius: f64,
    pub radiance: f64,
}

impl DiskLight {
    /// Builds a light, normalizing `normal`.
    pub fn new(center: Vec3, normal: Vec3, radius: f64, radiance: f64) -> Result<Self> {
        let len = normal.length();
        if !(len.is_finite() && len > 0.0) {
            return Err(Error::InvalidLight(
                "normal must be a non-zero finite vector",
            ));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidLight("radius must be positive"));
        }
        Ok(DiskLight {
            center,
            normal: normal / len,
            radius,
            radiance,
        })
    }

    pub fn area(&self) -> f64 {
        std::f64::consts::PI * self.radius * self.radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShadingPoint {
    pub position: Vec3,
    pub normal: Option<Vec3>,
}

impl ShadingPoint {
    pub fn new(position: Vec3) -> Self {
        ShadingPoint {
            position,
            normal: None,
        }
    }

    pub fn with_normal(position: Vec3, normal: Vec3) -> Self {
        ShadingPoint {
            position,
            normal: Some(normal.normalized()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiskFrame {
    pub x: Vec3,
    pub y: Vec3,
    pub z: Vec3,
    /// Distance from the shading point to the disk plane (always positive;
    /// the normal is flipped toward the point when needed).
    pub d: f64,
    /// In-plane distance from the foot of the perpendicular to the center.
    pub h: f64,
}

impl DiskFrame {
    pub fn to_world(&self, v: Vec3) -> Vec3 {
        self.x * v.x + self.y * v.y + self.z * v.z
    }

    pub fn to_local(&self, v: Vec3) -> Vec3 {
        Vec3::new(v.dot(self.x), v.dot(self.y), v.dot(self.z))
    }
}

/// Semi-axes of a spherical ellipse in their three equivalent forms: sines
/// (`a`, `b`, the parallel projection onto the tangent plane at the center),
/// arcs (`alpha`, `beta`) and tangents (`a_t`, `b_t`, the gnomonic projection).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipseAxes {
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    pub beta: f64,
    pub a_t: f64,
    pub b_t: f64,
}

impl EllipseAxes {
    /// From the sine semi-axes. Requires `0 < b <= a < 1`.
    pub fn from_sines(a: f64, b: f64) -> Self {
        debug_assert!(0.0 < b && b <= a && a < 1.0, "bad semi-axes a={a} b={b}");
        EllipseAxes {
            a,
            b,
            alpha: a.asin(),
            beta: b.asin(),
            a_t: a / (1.0 - a * a).sqrt(),
            b_t: b / (1.0 - b * b).sqrt(),
        }
    }

    pub fn from_arcs(alpha: f64, beta: f64) -> Self {
        debug_assert!(0.0 < beta && beta <= alpha && alpha < std::f64::consts::FRAC_PI_2);
        EllipseAxes {
            a: alpha.sin(),
            b: beta.sin(),
            alpha,
            beta,
            a_t: alpha.tan(),
            b_t: beta.tan(),
        }
    }

    /// `1 - cos(alpha)` without cancellation.
    pub fn one_minus_cos_alpha(&self) -> f64 {
        self.a * self.a / (1.0 + (1.0 - self.a * self.a).sqrt())
    }

    /// Whether a unit direction in ellipse-frame coordinates lies inside the
    /// spherical ellipse (gnomonic test against the tangent ellipse).
    pub fn contains(&self, q: Vec3) -> bool {
        if q.z <= 0.0 {
            return false;
        }
        let u = q.x / (q.z * self.a_t);
        let v = q.y / (q.z * self.b_t);
        u * u + v * v <= 1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalEllipseFrame {
    pub origin: Vec3,
    pub light_center: Vec3,
    pub light_radius: f64,
    pub disk: DiskFrame,
    pub x: Vec3,
    pub y: Vec3,
    pub z: Vec3,
    pub axes: EllipseAxes,
    pub y0p: f64,
    pub y1p: f64,
    pub z0p: f64,
    pub z1p: f64,
    pub y_h: f64,
    /// Set when the shading point lies on the disk axis (`a == b`).
    pub circular: bool,
    /// Normal was flipped to face the shading point.
    pub flipped: bool,
    /// Total subtended solid angle.
    pub omega: f64,
}

/// Builds the disk and ellipse frames for `light` seen from `point`.
pub fn build_frames(light: &DiskLight, point: &ShadingPoint) -> Result<SphericalEllipseFrame> {
    let o = point.position;
    let c = light.center;
    let r = light.radius;
    let mut n = light.normal;
    let mut dist = (o - c).dot(n);
    let flipped = dist < 0.0;
    if flipped {
        n = -n;
        dist = -dist;
    }
    let scale = (o - c).length().max(r);
    if !(dist / scale >= DEGENERACY_TOLERANCE) {
        return Err(Error::DegenerateGeometry(dist / scale));
    }

    let z_d = -n;
    let d = dist;
    let offset = (c - o) - z_d * d;
    let mut h = offset.length();
    let circular = h < ON_AXIS_TOLERANCE * r;
    let y_d = if circular {
        h = 0.0;
        z_d.orthonormal_basis().1
    } else {
        offset / h
    };
    let x_d = y_d.cross(z_d);
    let disk = DiskFrame {
        x: x_d,
        y: y_d,
        z: z_d,
        d,
        h,
    };

    // Minor-axis end points of the disk in the (y_d, z_d) plane, projected
    // onto the unit sphere.
    let y0 = h - r;
    let y1 = h + r;
    let inv0 = 1.0 / y0.hypot(d);
    let inv1 = 1.0 / y1.hypot(d);
    let (y0p, z0p) = (y0 * inv0, d * inv0);
    let (y1p, z1p) = (y1 * inv1, d * inv1);
    let yhp = 0.5 * (y0p + y1p);
    let zhp = 0.5 * (z0p + z1p);
    let norm_h = yhp.hypot(zhp);
    let (ze_y, ze_z) = (yhp / norm_h, zhp / norm_h);

    // The ray along z_e meets the disk at height y_h; the chord there bounds
    // the major axis.
    let y_h = yhp * d / zhp;
    let r_h = (r * r - (h - y_h) * (h - y_h)).max(0.0).sqrt();
    let a = r_h / (r_h * r_h + y_h * y_h + d * d).sqrt();
    let b = 0.5 * (y1p - y0p).hypot(z1p - z0p);
    // a == b analytically on the axis; keep the ordering exact.
    let a = a.min(1.0 - f64::EPSILON);
    let b = if circular { a } else { b.min(a) };
    if !(b > 0.0) {
        return Err(Error::DegenerateGeometry(b));
    }
    let axes = EllipseAxes::from_sines(a, b);

    let z_e = y_d * ze_y + z_d * ze_z;
    let x_e = x_d;
    let y_e = z_e.cross(x_e);

    let omega = solid_angle::total_solid_angle_axes(&axes)?;

    Ok(SphericalEllipseFrame {
        origin: o,
        light_center: c,
        light_radius: r,
        disk,
        x: x_e,
        y: y_e,
        z: z_e,
        axes,
        y0p,
        y1p,
        z0p,
        z1p,
        y_h,
        circular,
        flipped,
        omega,
    })
}

impl SphericalEllipseFrame {
    /// Ellipse-frame coordinates to world direction.
    pub fn to_world(&self, q: Vec3) -> Vec3 {
        self.x * q.x + self.y * q.y + self.z * q.z
    }

    pub fn to_local(&self, w: Vec3) -> Vec3 {
        Vec3::new(w.dot(self.x), w.dot(self.y), w.dot(self.z))
    }

    /// Intersects the ray from the shading point along world direction `w`
    /// with the disk plane.
    pub fn world_direction_to_plane(&self, w: Vec3) -> Result<Vec3> {
        let cos = w.dot(self.disk.z);
        if !(cos > 0.0) {
            return Err(Error::RayParallelToPlane);
        }
        Ok(self.origin + w * (self.disk.d / cos))
    }

    /// Back-projects `q` (ellipse-frame coordinates) onto the disk plane.
    pub fn direction_to_disk_point(&self, q: Vec3) -> Result<Vec3> {
        self.world_direction_to_plane(self.to_world(q))
    }

    /// Whether the ray along world direction `w` hits the disk.
    pub fn ray_hits_disk(&self, w: Vec3) -> bool {
        match self.world_direction_to_plane(w) {
            Ok(x) => {
                (x - self.light_center).length_squared() <= self.light_radius * self.light_radius
            }
            Err(_) => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn reference() -> (DiskLight, ShadingPoint) {
        (
            DiskLight::new(
                Vec3::new(0.0, 1.5, 1.0),
                Vec3::new(0.0, 0.0, -1.0),
                1.0,
                1.0,
            )
            .unwrap(),
            ShadingPoint::new(Vec3::ZERO),
        )
    }

    fn assert_orthonormal(x: Vec3, y: Vec3, z: Vec3) {
        for (u, v) in [(x, y), (x, z), (y, z)] {
            assert!(u.dot(v).abs() < 1e-10);
        }
        for u in [x, y, z] {
            assert!((u.length() - 1.0).abs() < 1e-10);
        }
        assert!((x.cross(y) - z).length() < 1e-10);
    }

    #[test]
    fn on_axis_is_a_cap() {
        let light = DiskLight::new(Vec3::Z, -Vec3::Z, 1.0, 1.0).unwrap();
        let f = build_frames(&light, &ShadingPoint::new(Vec3::ZERO)).unwrap();
        assert!(f.circular);
        assert!((f.axes.alpha - PI / 4.0).abs() < 1e-12);
        assert!((f.axes.beta - PI / 4.0).abs() < 1e-12);
        let cap = 2.0 * PI * (1.0 - (PI / 4.0).cos());
        assert!((f.omega - cap).abs() < 1e-12 * cap);
        assert!((f.omega - 1.840302).abs() < 1e-6);
    }

    #[test]
    fn reference_frame() {
        let (light, p) = reference();
        let f = build_frames(&light, &p).unwrap();
        assert!(!f.circular);
        assert!(f.axes.alpha > f.axes.beta && f.axes.beta > 0.0);
        assert!(f.axes.a_t >= f.axes.b_t);
        assert_orthonormal(f.x, f.y, f.z);
        assert_orthonormal(f.disk.x, f.disk.y, f.disk.z);
        assert_eq!(f.disk.z, -light.normal);
        assert!((f.x - f.disk.x).length() == 0.0);
        // Values cross-checked against an independent double integral of
        // cos/dist^2 over the disk.
        assert!((f.axes.a - 0.5248494716057857).abs() < 1e-14);
        assert!((f.axes.b - 0.35538055751288666).abs() < 1e-14);
        assert!((f.omega - 0.619100085640243).abs() < 1e-12);
    }

    #[test]
    fn consistency_of_axis_forms() {
        let (light, p) = reference();
        let ax = build_frames(&light, &p).unwrap().axes;
        assert!((ax.a.asin() - ax.alpha).abs() < 1e-12);
        assert!((ax.b.asin() - ax.beta).abs() < 1e-12);
        assert!((ax.alpha.tan() - ax.a_t).abs() < 1e-12);
        assert!((ax.beta.tan() - ax.b_t).abs() < 1e-12);
    }

    #[test]
    fn in_plane_point_is_degenerate() {
        let light = DiskLight::new(Vec3::Z, -Vec3::Z, 1.0, 1.0).unwrap();
        let err = build_frames(&light, &ShadingPoint::new(Vec3::new(0.0, 5.0, 1.0))).unwrap_err();
        assert!(matches!(err, Error::DegenerateGeometry(_)));
    }

    #[test]
    fn back_facing_normal_is_flipped() {
        let (mut light, p) = reference();
        let front = build_frames(&light, &p).unwrap();
        light.normal = -light.normal;
        let back = build_frames(&light, &p).unwrap();
        assert!(back.flipped && !front.flipped);
        assert!((front.omega - back.omega).abs() < 1e-15);
    }

    #[test]
    fn center_direction_hits_axis_foot() {
        let light = DiskLight::new(Vec3::Z, -Vec3::Z, 1.0, 1.0).unwrap();
        let f = build_frames(&light, &ShadingPoint::new(Vec3::ZERO)).unwrap();
        let x = f.direction_to_disk_point(Vec3::Z).unwrap();
        assert!((x - Vec3::Z).length() < 1e-15);
    }

    #[test]
    fn major_vertex_projects_to_rim() {
        let (light, p) = reference();
        let f = build_frames(&light, &p).unwrap();
        let (s, c) = f.axes.alpha.sin_cos();
        for q in [Vec3::new(s, 0.0, c), Vec3::new(-s, 0.0, c)] {
            let x = f.direction_to_disk_point(q).unwrap();
            assert!(((x - light.center).length() - 1.0).abs() < 1e-8);
            assert!((x - light.center).dot(light.normal).abs() < 1e-12);
        }
        let (s, c) = f.axes.beta.sin_cos();
        for q in [Vec3::new(0.0, s, c), Vec3::new(0.0, -s, c)] {
            let x = f.direction_to_disk_point(q).unwrap();
            assert!(((x - light.center).length() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn moving_away_shrinks_solid_angle() {
        let (light, _) = reference();
        let base = build_frames(&light, &ShadingPoint::new(Vec3::ZERO)).unwrap();
        let mut last = base.omega;
        for k in [1.5, 2.0, 4.0, 10.0] {
            let o = base.origin - base.z * (k - 1.0);
            let f = build_frames(&light, &ShadingPoint::new(o)).unwrap();
            assert!(f.omega < last);
            last = f.omega;
        }
    }
}
