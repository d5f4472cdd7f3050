//! A small direct-lighting renderer: a Lambertian ground plane lit by one disk
//! light, one primary ray per pixel, and a pluggable light-sampling technique.

pub mod output;
pub mod pattern;
pub mod scene;

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{build_frames, ShadingPoint, SphericalEllipseFrame};
use crate::maps::{EllipseSampler, NewtonConfig, Technique};
use crate::oracles::{sample_area, sample_cap_rejection};
use crate::rng::{derive_seed, RngStream};
use crate::tabulation::{sample_tabulated_loop, RadialTable, TabConfig, TabSampleStats};

pub use pattern::SamplePattern;
pub use scene::{Camera, CameraKind, Ground, Scene};

/// Solid angle below which the far-field switch falls back to area sampling.
pub const DEFAULT_FAR_FIELD_THRESHOLD: f64 = 1e-3;
pub const DEFAULT_REFERENCE_SPP: usize = 65_536;
/// Iteration counts at or above the last bin are pooled there.
pub const NEWTON_BINS: usize = 33;

const REFERENCE_LABEL: u64 = 0x5245_4645_5245_4e43;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderConfig {
    pub technique: Technique,
    pub pattern: SamplePattern,
    pub spp: usize,
    pub seed: u64,
    pub newton: NewtonConfig,
    pub tab: TabConfig,
    /// Switch to area sampling below this solid angle; `None` disables it.
    pub far_field_threshold: Option<f64>,
}

impl RenderConfig {
    pub fn new(technique: Technique, pattern: SamplePattern, spp: usize, seed: u64) -> Self {
        RenderConfig {
            technique,
            pattern,
            spp,
            seed,
            newton: NewtonConfig::default(),
            tab: TabConfig::default(),
            far_field_threshold: None,
        }
    }
}

/// Picks area sampling when the light subtends less than `threshold`.
pub fn far_field_switch(
    frame: &SphericalEllipseFrame,
    requested: Technique,
    threshold: f64,
) -> Technique {
    if frame.omega < threshold {
        Technique::Area
    } else {
        requested
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PixelEstimate {
    pub mean: f64,
    /// Sample variance of the per-sample contributions.
    pub variance: f64,
    pub technique: Technique,
    pub newton: [u64; NEWTON_BINS],
    pub tab: TabSampleStats,
    /// Samples that failed inside a sampler and were counted as zero.
    pub failures: u64,
}

impl PixelEstimate {
    fn empty(technique: Technique) -> Self {
        PixelEstimate {
            mean: 0.0,
            variance: 0.0,
            technique,
            newton: [0; NEWTON_BINS],
            tab: TabSampleStats::default(),
            failures: 0,
        }
    }
}

struct Accumulator {
    n: usize,
    sum: f64,
    sum_sq: f64,
}

impl Accumulator {
    fn add(&mut self, v: f64) {
        self.n += 1;
        self.sum += v;
        self.sum_sq += v * v;
    }

    fn finish(&self, est: &mut PixelEstimate) {
        if self.n == 0 {
            return;
        }
        let n = self.n as f64;
        est.mean = self.sum / n;
        if self.n > 1 {
            est.variance = ((self.sum_sq - self.sum * est.mean) / (n - 1.0)).max(0.0);
        }
    }
}

/// Monte Carlo estimate of the reflected radiance at `pixel`.
pub fn estimate_direct(
    scene: &Scene,
    table: Option<&RadialTable>,
    pixel: usize,
    cfg: &RenderConfig,
) -> Result<PixelEstimate> {
    if cfg.technique == Technique::TabRadial && table.is_none() {
        return Err(Error::Domain("tab-radial needs a table".into()));
    }
    let mut est = PixelEstimate::empty(cfg.technique);
    let Some(o) = scene.shading_point(pixel) else {
        return Ok(est);
    };
    let light = &scene.light;
    let n_o = scene.ground.normal;
    let scale = light.radiance * scene.ground.albedo / PI;
    let facing = (o - light.center).dot(light.normal) > 0.0;
    if cfg.spp == 0 || scale == 0.0 || (!facing && !scene.double_sided) {
        return Ok(est);
    }
    let point = ShadingPoint::with_normal(o, n_o);
    let frame = build_frames(light, &point);
    let technique = match (&frame, cfg.far_field_threshold) {
        (Ok(f), Some(t)) => far_field_switch(f, cfg.technique, t),
        _ => cfg.technique,
    };
    est.technique = technique;

    let mut rng = RngStream::new(cfg.seed, pixel as u64);
    let samples = cfg.pattern.generate(cfg.spp, &mut rng);
    let mut acc = Accumulator {
        n: 0,
        sum: 0.0,
        sum_sq: 0.0,
    };

    if technique == Technique::Area {
        for &u in &samples {
            let s = sample_area(light, &point, u);
            let v = if s.is_grazing() {
                0.0
            } else {
                scale * s.direction.dot(n_o).max(0.0) / s.pdf
            };
            acc.add(v);
        }
        acc.finish(&mut est);
        return Ok(est);
    }

    // In the disk plane the light subtends nothing.
    let Ok(frame) = frame else {
        return Ok(est);
    };
    let weight = scale * frame.omega;
    match technique {
        Technique::Parallel | Technique::Radial | Technique::LdRadial => {
            let sampler = EllipseSampler::new(&frame)?;
            for &u in &samples {
                match sampler.sample(technique, u, &cfg.newton) {
                    Ok(m) => {
                        est.newton[(m.iterations as usize).min(NEWTON_BINS - 1)] += 1;
                        acc.add(weight * m.direction.dot(n_o).max(0.0));
                    }
                    Err(_) => {
                        est.failures += 1;
                        acc.add(0.0);
                    }
                }
            }
        }
        Technique::TabRadial => {
            let table = table.expect("checked above");
            for &u in &samples {
                match sample_tabulated_loop(table, &frame, u, &mut rng, &cfg.tab) {
                    Ok(draw) => {
                        est.tab.record(&draw);
                        let v = draw
                            .sample
                            .map(|m| weight * m.direction.dot(n_o).max(0.0))
                            .unwrap_or(0.0);
                        acc.add(v);
                    }
                    Err(_) => {
                        est.failures += 1;
                        acc.add(0.0);
                    }
                }
            }
        }
        Technique::Oracle => {
            for _ in 0..cfg.spp {
                let c = sample_cap_rejection(&frame, &mut rng);
                acc.add(weight * c.direction.dot(n_o).max(0.0));
            }
        }
        Technique::Area => unreachable!(),
    }
    acc.finish(&mut est);
    Ok(est)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorReport {
    pub technique: Technique,
    pub pattern: SamplePattern,
    pub spp: usize,
    pub width: usize,
    pub height: usize,
    /// Mean radiance per pixel, row-major.
    pub image: Vec<f64>,
    /// Per-pixel variance of single-sample contributions.
    pub variance: Vec<f64>,
    /// Mean squared error against the reference, when one was supplied.
    pub mse: Option<f64>,
    pub seconds: f64,
    pub newton_histogram: Vec<u64>,
    pub tab: TabSampleStats,
    pub failures: u64,
}

impl EstimatorReport {
    fn quantile(&self, q: f64) -> usize {
        let total: u64 = self.newton_histogram.iter().sum();
        if total == 0 {
            return 0;
        }
        let target = (q * total as f64).ceil().max(1.0) as u64;
        let mut seen = 0;
        for (k, &c) in self.newton_histogram.iter().enumerate() {
            seen += c;
            if seen >= target {
                return k;
            }
        }
        self.newton_histogram.len() - 1
    }

    /// Median Newton iterations per sample.
    pub fn newton_p50(&self) -> usize {
        self.quantile(0.5)
    }

    pub fn newton_max(&self) -> usize {
        self.newton_histogram
            .iter()
            .rposition(|&c| c > 0)
            .unwrap_or(0)
    }

    pub fn set_reference(&mut self, reference: &[f64]) {
        self.mse = Some(mse(&self.image, reference));
    }
}

pub fn mse(image: &[f64], reference: &[f64]) -> f64 {
    assert_eq!(image.len(), reference.len(), "image sizes differ");
    if image.is_empty() {
        return 0.0;
    }
    image
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / image.len() as f64
}

/// Renders every pixel. Each pixel owns a random stream keyed by the seed and
/// its index, so the result does not depend on the thread count.
pub fn render(
    scene: &Scene,
    table: Option<&RadialTable>,
    cfg: &RenderConfig,
) -> Result<EstimatorReport> {
    let start = Instant::now();
    let pixels: Vec<PixelEstimate> = (0..scene.pixel_count())
        .into_par_iter()
        .map(|i| estimate_direct(scene, table, i, cfg))
        .collect::<Result<_>>()?;
    let seconds = start.elapsed().as_secs_f64();
    let mut newton = vec![0u64; NEWTON_BINS];
    let mut tab = TabSampleStats::default();
    let mut failures = 0;
    for p in &pixels {
        for (h, c) in newton.iter_mut().zip(p.newton) {
            *h += c;
        }
        tab.merge(&p.tab);
        failures += p.failures;
    }
    Ok(EstimatorReport {
        technique: cfg.technique,
        pattern: cfg.pattern,
        spp: cfg.spp,
        width: scene.camera.width,
        height: scene.camera.height,
        image: pixels.iter().map(|p| p.mean).collect(),
        variance: pixels.iter().map(|p| p.variance).collect(),
        mse: None,
        seconds,
        newton_histogram: newton,
        tab,
        failures,
    })
}

/// Configuration of the reference render: the cap-rejection oracle with its
/// own seed, independent of every technique under test.
pub fn reference_config(spp: usize, seed: u64) -> RenderConfig {
    RenderConfig::new(
        Technique::Oracle,
        SamplePattern::Independent,
        spp,
        derive_seed(seed, REFERENCE_LABEL),
    )
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// File name under which a reference image is cached.
pub fn reference_cache_name(scene: &Scene, spp: usize, seed: u64) -> String {
    let key = format!("{}spp={spp}\nseed={seed}\n", scene.to_text());
    format!("reference-{:016x}.f64", fnv1a(key.as_bytes()))
}

/// Reference image, read from `cache_dir` when present there and written to
/// it otherwise.
pub fn reference_image(
    scene: &Scene,
    spp: usize,
    seed: u64,
    cache_dir: Option<&Path>,
) -> Result<Vec<f64>> {
    let path: Option<PathBuf> = cache_dir.map(|d| d.join(reference_cache_name(scene, spp, seed)));
    if let Some(p) = &path {
        if p.exists() {
            if let Ok(img) = output::load_raw(p, scene.pixel_count()) {
                return Ok(img);
            }
        }
    }
    let image = render(scene, None, &reference_config(spp, seed))?.image;
    if let Some(p) = &path {
        if let Some(dir) = p.parent() {
            std::fs::create_dir_all(dir)?;
        }
        output::save_raw(p, &image)?;
    }
    Ok(image)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub techniques: Vec<Technique>,
    pub spps: Vec<usize>,
    pub pattern: SamplePattern,
    pub seed: u64,
    pub reference_spp: usize,
    /// Directory for the CSV, images and the reference cache.
    pub out_dir: Option<PathBuf>,
    pub omit_timing: bool,
    pub newton: NewtonConfig,
    pub tab: TabConfig,
    pub far_field_threshold: Option<f64>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            techniques: vec![
                Technique::Area,
                Technique::Parallel,
                Technique::Radial,
                Technique::LdRadial,
                Technique::TabRadial,
            ],
            spps: vec![16],
            pattern: SamplePattern::Jittered,
            seed: 1,
            reference_spp: DEFAULT_REFERENCE_SPP,
            out_dir: None,
            omit_timing: false,
            newton: NewtonConfig::default(),
            tab: TabConfig::default(),
            far_field_threshold: None,
        }
    }
}

/// Renders every (technique, spp) pair, scores it against the reference and
/// writes `report.csv`, one PPM and one raw dump per pair to `out_dir`.
pub fn bench(
    scene: &Scene,
    table: Option<&RadialTable>,
    cfg: &BenchConfig,
) -> Result<Vec<EstimatorReport>> {
    let reference = reference_image(scene, cfg.reference_spp, cfg.seed, cfg.out_dir.as_deref())?;
    let mut reports = Vec::new();
    for &technique in &cfg.techniques {
        for &spp in &cfg.spps {
            let mut rc = RenderConfig::new(technique, cfg.pattern, spp, cfg.seed);
            rc.newton = cfg.newton;
            rc.tab = cfg.tab;
            rc.far_field_threshold = cfg.far_field_threshold;
            let mut report = render(scene, table, &rc)?;
            report.set_reference(&reference);
            if let Some(dir) = &cfg.out_dir {
                let stem = format!("{technique}-{spp}");
                output::save_ppm(
                    &dir.join(format!("{stem}.ppm")),
                    &report.image,
                    report.width,
                    report.height,
                )?;
                output::save_raw(&dir.join(format!("{stem}.f64")), &report.image)?;
            }
            reports.push(report);
        }
    }
    if let Some(dir) = &cfg.out_dir {
        output::save_csv(&dir.join("report.csv"), &reports, cfg.omit_timing)?;
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Scene {
        Scene::reference().with_resolution(8, 8)
    }

    #[test]
    fn zero_albedo_is_black() {
        let mut s = small();
        s.ground.albedo = 0.0;
        for t in [Technique::Area, Technique::Radial, Technique::Oracle] {
            let r = render(
                &s,
                None,
                &RenderConfig::new(t, SamplePattern::Independent, 4, 1),
            )
            .unwrap();
            assert!(r.image.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn zero_radiance_gives_zero_error() {
        let mut s = small();
        s.light.radiance = 0.0;
        let reference = reference_image(&s, 16, 1, None).unwrap();
        let mut r = render(
            &s,
            None,
            &RenderConfig::new(Technique::Parallel, SamplePattern::Jittered, 4, 1),
        )
        .unwrap();
        r.set_reference(&reference);
        assert_eq!(r.mse, Some(0.0));
    }

    #[test]
    fn switch_threshold() {
        let s = Scene::reference();
        let f = build_frames(
            &s.light,
            &ShadingPoint::new(crate::Vec3::new(0.5, 0.0, 0.5)),
        )
        .unwrap();
        assert_eq!(
            far_field_switch(&f, Technique::Radial, 1e-3),
            Technique::Radial
        );
        let far = build_frames(
            &s.light,
            &ShadingPoint::new(crate::Vec3::new(0.0, 0.0, 400.0)),
        )
        .unwrap();
        assert!(far.omega < 1e-4);
        assert_eq!(
            far_field_switch(&far, Technique::Radial, 1e-3),
            Technique::Area
        );
    }

    #[test]
    fn tab_radial_requires_table() {
        let r = render(
            &small(),
            None,
            &RenderConfig::new(Technique::TabRadial, SamplePattern::Independent, 1, 1),
        );
        assert!(r.is_err());
    }

    #[test]
    fn newton_quantiles() {
        let mut r = render(
            &small(),
            None,
            &RenderConfig::new(Technique::Area, SamplePattern::Independent, 1, 1),
        )
        .unwrap();
        r.newton_histogram = vec![0; NEWTON_BINS];
        r.newton_histogram[1] = 3;
        r.newton_histogram[2] = 3;
        r.newton_histogram[7] = 1;
        assert_eq!(r.newton_p50(), 2);
        assert_eq!(r.newton_max(), 7);
    }
}
