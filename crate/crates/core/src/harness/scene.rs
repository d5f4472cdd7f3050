//! Scene description and its line-oriented `key = value` text format.
//!
//! Lengths are in scene units, radiance in W·sr⁻¹·m⁻², angles in degrees.
//! Vectors are three numbers separated by spaces or commas. Lines starting
//! with `#` are comments. Unknown keys are errors.

use crate::error::{Error, Result};
use crate::geometry::DiskLight;
use crate::vec3::Vec3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ground {
    pub point: Vec3,
    pub normal: Vec3,
    pub albedo: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CameraKind {
    Orthographic,
    Pinhole,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    pub kind: CameraKind,
    pub position: Vec3,
    pub direction: Vec3,
    pub up: Vec3,
    /// Half width of the view for orthographic cameras.
    pub extent: f64,
    /// Horizontal field of view for pinhole cameras, in degrees.
    pub fov: f64,
    pub width: usize,
    pub height: usize,
}

impl Camera {
    /// Primary ray through the center of pixel `(x, y)`, row 0 at the top.
    pub fn ray(&self, x: usize, y: usize) -> (Vec3, Vec3) {
        let forward = self.direction.normalized();
        let right = forward.cross(self.up).normalized();
        let up = right.cross(forward);
        let aspect = self.height as f64 / self.width as f64;
        let sx = 2.0 * (x as f64 + 0.5) / self.width as f64 - 1.0;
        let sy = (1.0 - 2.0 * (y as f64 + 0.5) / self.height as f64) * aspect;
        match self.kind {
            CameraKind::Orthographic => (
                self.position + (right * sx + up * sy) * self.extent,
                forward,
            ),
            CameraKind::Pinhole => {
                let t = (0.5 * self.fov.to_radians()).tan();
                (
                    self.position,
                    (forward + (right * sx + up * sy) * t).normalized(),
                )
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scene {
    pub ground: Ground,
    pub light: DiskLight,
    pub double_sided: bool,
    pub camera: Camera,
}

impl Scene {
    /// Unit disk standing on the ground plane `y = 0`, touching it at the
    /// origin with its normal along `z`, seen from straight above.
    pub fn reference() -> Scene {
        Scene {
            ground: Ground {
                point: Vec3::ZERO,
                normal: Vec3::Y,
                albedo: 0.7,
            },
            light: DiskLight {
                center: Vec3::new(0.0, 1.0, 0.0),
                normal: Vec3::Z,
                radius: 1.0,
                radiance: 1.0,
            },
            double_sided: true,
            camera: Camera {
                kind: CameraKind::Orthographic,
                position: Vec3::new(0.0, 10.0, 0.0),
                direction: -Vec3::Y,
                up: -Vec3::Z,
                extent: 2.0,
                fov: 60.0,
                width: 64,
                height: 64,
            },
        }
    }

    pub fn with_resolution(mut self, width: usize, height: usize) -> Scene {
        self.camera.width = width;
        self.camera.height = height;
        self
    }

    pub fn pixel_count(&self) -> usize {
        self.camera.width * self.camera.height
    }

    /// Parses the text format; keys not given keep their reference values.
    pub fn parse(text: &str) -> Result<Scene> {
        let mut s = Scene::reference();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Scene(format!("line {}: {msg}", lineno + 1));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected 'key = value', got '{line}'")))?;
            let (key, value) = (key.trim(), value.trim());
            let num = || parse_number(value).map_err(&err);
            let vec = || parse_vec(value).map_err(&err);
            let count = || {
                value
                    .parse::<usize>()
                    .ok()
                    .filter(|&n| n >= 1)
                    .ok_or_else(|| err(format!("expected a positive integer, got '{value}'")))
            };
            match key {
                "ground.point" => s.ground.point = vec()?,
                "ground.normal" => s.ground.normal = vec()?,
                "ground.albedo" => s.ground.albedo = num()?,
                "light.center" => s.light.center = vec()?,
                "light.normal" => s.light.normal = vec()?,
                "light.radius" => s.light.radius = num()?,
                "light.radiance" => s.light.radiance = num()?,
                "light.double_sided" => {
                    s.double_sided = match value {
                        "true" | "yes" | "1" => true,
                        "false" | "no" | "0" => false,
                        _ => return Err(err(format!("expected a boolean, got '{value}'"))),
                    }
                }
                "camera.kind" => {
                    s.camera.kind = match value {
                        "orthographic" => CameraKind::Orthographic,
                        "pinhole" => CameraKind::Pinhole,
                        _ => return Err(err(format!("unknown camera kind '{value}'"))),
                    }
                }
                "camera.position" => s.camera.position = vec()?,
                "camera.direction" => s.camera.direction = vec()?,
                "camera.up" => s.camera.up = vec()?,
                "camera.extent" => s.camera.extent = num()?,
                "camera.fov" => s.camera.fov = num()?,
                "camera.width" => s.camera.width = count()?,
                "camera.height" => s.camera.height = count()?,
                _ => return Err(err(format!("unknown key '{key}'"))),
            }
        }
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&mut self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.ground.albedo) {
            return Err(Error::Scene(format!(
                "albedo {} outside [0, 1]",
                self.ground.albedo
            )));
        }
        if self.ground.normal.length() == 0.0 {
            return Err(Error::Scene("ground normal is zero".into()));
        }
        self.ground.normal = self.ground.normal.normalized();
        let l = &self.light;
        self.light = DiskLight::new(l.center, l.normal, l.radius, l.radiance)
            .map_err(|e| Error::Scene(e.to_string()))?;
        if self.light.radiance < 0.0 {
            return Err(Error::Scene("negative radiance".into()));
        }
        if self.camera.width == 0 || self.camera.height == 0 {
            return Err(Error::Scene("empty image".into()));
        }
        let forward = self.camera.direction;
        if forward.length() == 0.0 || forward.cross(self.camera.up).length() == 0.0 {
            return Err(Error::Scene(
                "camera direction and up must be independent".into(),
            ));
        }
        if !(self.camera.extent > 0.0) || !(self.camera.fov > 0.0 && self.camera.fov < 180.0) {
            return Err(Error::Scene(
                "camera extent or field of view out of range".into(),
            ));
        }
        Ok(())
    }

    /// Canonical text form; parsing it gives back the same scene.
    pub fn to_text(&self) -> String {
        let v = |v: Vec3| format!("{:?} {:?} {:?}", v.x, v.y, v.z);
        let c = &self.camera;
        let kind = match c.kind {
            CameraKind::Orthographic => "orthographic",
            CameraKind::Pinhole => "pinhole",
        };
        [
            format!("ground.point = {}", v(self.ground.point)),
            format!("ground.normal = {}", v(self.ground.normal)),
            format!("ground.albedo = {:?}", self.ground.albedo),
            format!("light.center = {}", v(self.light.center)),
            format!("light.normal = {}", v(self.light.normal)),
            format!("light.radius = {:?}", self.light.radius),
            format!("light.radiance = {:?}", self.light.radiance),
            format!("light.double_sided = {}", self.double_sided),
            format!("camera.kind = {kind}"),
            format!("camera.position = {}", v(c.position)),
            format!("camera.direction = {}", v(c.direction)),
            format!("camera.up = {}", v(c.up)),
            format!("camera.extent = {:?}", c.extent),
            format!("camera.fov = {:?}", c.fov),
            format!("camera.width = {}", c.width),
            format!("camera.height = {}", c.height),
        ]
        .join("\n")
            + "\n"
    }

    /// Ground point seen through pixel `index`, if the primary ray hits it.
    pub fn shading_point(&self, index: usize) -> Option<Vec3> {
        let (x, y) = (index % self.camera.width, index / self.camera.width);
        let (origin, dir) = self.camera.ray(x, y);
        let n = self.ground.normal;
        let denom = dir.dot(n);
        if denom.abs() < 1e-12 {
            return None;
        }
        let t = (self.ground.point - origin).dot(n) / denom;
        (t > 0.0).then(|| origin + dir * t)
    }
}

fn parse_number(s: &str) -> std::result::Result<f64, String> {
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| format!("expected a number, got '{s}'"))
}

fn parse_vec(s: &str) -> std::result::Result<Vec3, String> {
    let parts: Vec<&str> = s
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|p| !p.is_empty())
        .collect();
    if parts.len() != 3 {
        return Err(format!("expected three components, got '{s}'"));
    }
    Ok(Vec3::new(
        parse_number(parts[0])?,
        parse_number(parts[1])?,
        parse_number(parts[2])?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let s = Scene::reference();
        assert_eq!(Scene::parse(&s.to_text()).unwrap(), s);
    }

    #[test]
    fn unknown_key_rejected() {
        let e = Scene::parse("light.colour = 1").unwrap_err();
        assert!(e.to_string().contains("unknown key"));
    }

    #[test]
    fn bad_values_rejected() {
        assert!(Scene::parse("ground.albedo = 1.5").is_err());
        assert!(Scene::parse("light.center = 1 2").is_err());
        assert!(Scene::parse("camera.width = 0").is_err());
        assert!(Scene::parse("no equals sign").is_err());
    }

    #[test]
    fn comments_and_commas() {
        let s = Scene::parse("# comment\nlight.center = 0, 2, 0  # trailing\n").unwrap();
        assert_eq!(s.light.center, Vec3::new(0.0, 2.0, 0.0));
    }

    #[test]
    fn reference_pixels_hit_ground() {
        let s = Scene::reference();
        for i in 0..s.pixel_count() {
            let p = s.shading_point(i).unwrap();
            assert!(p.y.abs() < 1e-12 && p.z != 0.0);
        }
    }
}
