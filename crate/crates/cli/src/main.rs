//! `disksample`: solid-angle evaluation, point export, table building and
//! benchmarking for disk light sampling.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use disk_sampling::harness::output::format_float;
use disk_sampling::harness::{self, BenchConfig, SamplePattern, Scene};
use disk_sampling::maps::EllipseSampler;
use disk_sampling::oracles::{self, DEFAULT_QUADRATURE_TOLERANCE};
use disk_sampling::rng::RngStream;
use disk_sampling::tabulation::{self, RadialTable, TabConfig};
use disk_sampling::{build_frames, DiskLight, Error, NewtonConfig, ShadingPoint, Technique, Vec3};

/// Input problems: bad flags, bad files, degenerate geometry.
const EXIT_INPUT: u8 = 1;
/// The numbers disagree with each other.
const EXIT_INCONSISTENT: u8 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "disksample",
    version,
    about = "Uniform solid-angle sampling of disk lights"
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the subtended solid angle from both elliptic formulations,
    /// quadrature, and the rejection oracle.
    SolidAngle(SolidAngleArgs),
    /// Write sampled points as CSV.
    Points(PointsArgs),
    /// Render the scene with several techniques and report errors and timings.
    Bench(BenchArgs),
    /// Build a tabulated radial map and write it to disk.
    Table(TableArgs),
}

#[derive(Args, Debug, Clone)]
struct GeometryArgs {
    /// Disk center x,y,z.
    #[arg(long, value_parser = parse_vec3, default_value = "0,1.5,1")]
    center: Vec3,
    /// Disk normal x,y,z.
    #[arg(long, value_parser = parse_vec3, default_value = "0,0,-1")]
    normal: Vec3,
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    /// Shading point x,y,z.
    #[arg(long, value_parser = parse_vec3, default_value = "0,0,0")]
    point: Vec3,
}

#[derive(Args, Debug)]
struct SolidAngleArgs {
    #[command(flatten)]
    geometry: GeometryArgs,
    /// Cap proposals for the rejection estimate.
    #[arg(long, default_value_t = 1_000_000)]
    trials: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args, Debug)]
struct PointsArgs {
    #[command(flatten)]
    geometry: GeometryArgs,
    #[arg(long, value_parser = parse_technique, default_value = "ld-radial")]
    technique: Technique,
    #[arg(long, value_parser = parse_pattern, default_value = "jittered")]
    pattern: SamplePattern,
    /// Number of points.
    #[arg(long, alias = "count", default_value_t = 256)]
    spp: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Table file for tab-radial; built in memory when absent.
    #[arg(long)]
    table: Option<PathBuf>,
    /// Output CSV (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Scene file; the reference scene when absent.
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Comma-separated techniques.
    #[arg(long, value_delimiter = ',', value_parser = parse_technique,
          default_value = "area,parallel,radial,ld-radial,tab-radial")]
    technique: Vec<Technique>,
    #[arg(long, value_parser = parse_pattern, default_value = "jittered")]
    pattern: SamplePattern,
    /// Comma-separated samples per pixel.
    #[arg(long, value_delimiter = ',', default_value = "16")]
    spp: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = harness::DEFAULT_REFERENCE_SPP)]
    reference_spp: usize,
    #[arg(long)]
    table: Option<PathBuf>,
    /// Output directory for report.csv, images and the reference cache.
    #[arg(long)]
    out: PathBuf,
    /// Leave the seconds column empty so the report is reproducible.
    #[arg(long)]
    omit_timing: bool,
    /// Switch to area sampling below this solid angle (sr).
    #[arg(long)]
    far_field: Option<f64>,
}

#[derive(Args, Debug)]
struct TableArgs {
    /// Rows and columns of the table.
    #[arg(long, default_value_t = tabulation::DEFAULT_RESOLUTION)]
    resolution: usize,
    /// Reference semi-arc alpha in radians.
    #[arg(long, default_value_t = tabulation::DEFAULT_ALPHA_REF)]
    alpha_ref: f64,
    #[arg(long)]
    out: PathBuf,
}

fn parse_vec3(s: &str) -> Result<Vec3, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("'{p}': {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [x, y, z] if parts.iter().all(|v| v.is_finite()) => Ok(Vec3::new(x, y, z)),
        _ => Err(format!("expected x,y,z, got '{s}'")),
    }
}

fn parse_technique(s: &str) -> Result<Technique, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_pattern(s: &str) -> Result<SamplePattern, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Failure with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure {
            code: EXIT_INPUT,
            error: e.into(),
        }
    }
}

fn inconsistent(msg: String) -> Failure {
    Failure {
        code: EXIT_INCONSISTENT,
        error: anyhow!(msg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_INPUT)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(anyhow!("--threads must be at least 1").into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match cli.command {
        Command::SolidAngle(a) => solid_angle(&a),
        Command::Points(a) => points(&a),
        Command::Bench(a) => bench(&a),
        Command::Table(a) => table(&a),
    }
}

fn light_and_point(g: &GeometryArgs) -> anyhow::Result<(DiskLight, ShadingPoint)> {
    let light = DiskLight::new(g.center, g.normal, g.radius, 1.0)?;
    Ok((light, ShadingPoint::new(g.point)))
}

fn solid_angle(a: &SolidAngleArgs) -> Result<(), Failure> {
    let (light, point) = light_and_point(&a.geometry)?;
    let frame = build_frames(&light, &point)?;
    let axes = frame.axes;
    let radial = frame.omega;
    let parallel = disk_sampling::solid_angle::total_solid_angle_parallel(&axes)?;
    let quadrature = 4.0
        * oracles::integrate(
            |phi| {
                let r = disk_sampling::solid_angle::ellipse_radius(&axes, phi);
                r * r / (1.0 + disk_sampling::solid_angle::h_radial(&axes, phi))
            },
            0.0,
            std::f64::consts::FRAC_PI_2,
            DEFAULT_QUADRATURE_TOLERANCE * radial,
            1e-13,
        )?;
    let mc = oracles::cap_rejection_solid_angle(&frame, a.trials, a.seed);
    println!("parallel   {}", format_float(parallel));
    println!("radial     {}", format_float(radial));
    println!("quadrature {}", format_float(quadrature));
    println!(
        "oracle     {} +- {}",
        format_float(mc.value),
        format_float(mc.std_error)
    );
    let rel = |x: f64| ((x - radial) / radial).abs();
    let mut problems = Vec::new();
    if rel(parallel) > 1e-9 {
        problems.push(format!(
            "parallel and radial differ by {:e} relative",
            rel(parallel)
        ));
    }
    if rel(quadrature) > 1e-8 {
        problems.push(format!(
            "quadrature differs by {:e} relative",
            rel(quadrature)
        ));
    }
    if !mc.agrees_with(radial, 4.0) {
        problems.push(format!(
            "oracle is {:.2} standard errors away",
            (mc.value - radial).abs() / mc.std_error
        ));
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(inconsistent(problems.join("; ")))
    }
}

fn load_or_build_table(path: Option<&PathBuf>) -> anyhow::Result<RadialTable> {
    Ok(match path {
        Some(p) => RadialTable::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => tabulation::build_table(
            tabulation::DEFAULT_RESOLUTION,
            tabulation::DEFAULT_RESOLUTION,
            tabulation::DEFAULT_ALPHA_REF,
        )?,
    })
}

fn points(a: &PointsArgs) -> Result<(), Failure> {
    let (light, point) = light_and_point(&a.geometry)?;
    let frame = build_frames(&light, &point)?;
    let table = if a.technique == Technique::TabRadial {
        Some(load_or_build_table(a.table.as_ref())?)
    } else {
        None
    };
    let sampler = EllipseSampler::new(&frame)?;
    let newton = NewtonConfig::default();
    let mut rng = RngStream::new(a.seed, 0);
    let pattern = a.pattern.generate(a.spp, &mut rng);

    let sink: Box<dyn Write> = match &a.out {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut w = BufWriter::new(sink);
    writeln!(w, "eps1,eps2,qx,qy,qz,px,py,pz")?;
    for u in pattern {
        let (eps, direction, disk_point) = match a.technique {
            Technique::Area => {
                let s = oracles::sample_area(&light, &point, u);
                (Some(u), s.direction, s.disk_point)
            }
            Technique::Parallel | Technique::Radial | Technique::LdRadial => {
                let m = sampler.sample(a.technique, u, &newton)?;
                (Some(u), m.direction, m.disk_point)
            }
            Technique::TabRadial => {
                let t = table.as_ref().expect("built above");
                let d = tabulation::sample_tabulated_loop(
                    t,
                    &frame,
                    u,
                    &mut rng,
                    &TabConfig::default(),
                )?;
                let m = d.sample.expect("retries are enabled");
                (Some(u), m.direction, m.disk_point)
            }
            Technique::Oracle => {
                let c = oracles::sample_cap_rejection(&frame, &mut rng);
                (
                    None,
                    c.direction,
                    frame.world_direction_to_plane(c.direction)?,
                )
            }
        };
        let q = frame.to_local(direction);
        let (e1, e2) = match eps {
            Some(u) => (format_float(u.e1), format_float(u.e2)),
            None => (String::new(), String::new()),
        };
        let f = format_float;
        writeln!(
            w,
            "{e1},{e2},{},{},{},{},{},{}",
            f(q.x),
            f(q.y),
            f(q.z),
            f(disk_point.x),
            f(disk_point.y),
            f(disk_point.z)
        )?;
    }
    w.flush()?;
    Ok(())
}

fn bench(a: &BenchArgs) -> Result<(), Failure> {
    let scene = match &a.scene {
        Some(p) => {
            let text =
                std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Scene::parse(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => Scene::reference(),
    };
    if a.spp.is_empty() || a.technique.is_empty() {
        return Err(anyhow!("nothing to run").into());
    }
    let table = if a.technique.contains(&Technique::TabRadial) {
        Some(load_or_build_table(a.table.as_ref())?)
    } else {
        None
    };
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let cfg = BenchConfig {
        techniques: a.technique.clone(),
        spps: a.spp.clone(),
        pattern: a.pattern,
        seed: a.seed,
        reference_spp: a.reference_spp,
        out_dir: Some(a.out.clone()),
        omit_timing: a.omit_timing,
        far_field_threshold: a.far_field,
        ..BenchConfig::default()
    };
    let reports = harness::bench(&scene, table.as_ref(), &cfg)?;
    let csv = std::fs::read_to_string(a.out.join("report.csv"))?;
    print!("{csv}");
    let failures: u64 = reports.iter().map(|r| r.failures).sum();
    if failures > 0 {
        return Err(inconsistent(format!(
            "{failures} samples failed inside a sampler"
        )));
    }
    Ok(())
}

fn table(a: &TableArgs) -> Result<(), Failure> {
    let t = tabulation::build_table(a.resolution, a.resolution, a.alpha_ref)?;
    t.save(&a.out)
        .with_context(|| format!("writing {}", a.out.display()))?;
    let back = RadialTable::load(&a.out)?;
    let same = back.alpha_ref().to_bits() == t.alpha_ref().to_bits()
        && back.n_beta() == t.n_beta()
        && back.n_phi() == t.n_phi()
        && bits_equal(back.entries(), t.entries())
        && bits_equal(back.theta_starts(), t.theta_starts());
    if !same {
        return Err(inconsistent(format!(
            "{} does not reload bit-exactly",
            a.out.display()
        )));
    }
    println!("{} {} bytes", a.out.display(), t.file_size());
    Ok(())
}

fn bits_equal(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}
