//! `heislab`: build clouds, fit dimensions, run density probes and sampled
//! checks from the command line.
//!
//! Exit codes: 0 success, 1 other failure, 2 usage, 3 resource limit,
//! 4 a failed `--assert` gate.

mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use heislab::constructions::{
    build_family, cantor_cloud, example_cloud, expected_dims, fs_cloud, hsquare_cloud, segment_cloud, Axis,
    ExampleParams, Source, WeightedCloud,
};
use heislab::density::{
    cloud_panel, ex1_probe_on, ex2_probe_on, ex3_probe_local, ex3_probe_on, family_panel, fs_typical_points,
    sandwich_sample, thm1_scan, thm2_scan, LocalResolution, ProbeResult,
};
use heislab::dimension::{
    check_dimension_inequalities, default_scale_count, estimate_cloud, estimate_dimension, fit_metric_comparison,
    log_scales, net_counts, DimensionEstimate,
};
use heislab::hgeom::{MetricKind, Point};
use heislab::io;
use heislab::Error;

#[derive(Parser)]
#[command(name = "heislab", version, about = "Fractal sets in the Heisenberg group: constructions, dimensions, density probes")]
struct Cli {
    /// Seed for every random choice of the run
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a point cloud and write it as CSV plus a metadata sidecar
    Construct(ConstructArgs),
    /// Fit a covering dimension to a cloud
    Dimension(DimensionArgs),
    /// Run a density probe on a cloud
    Density(DensityArgs),
    /// Sample the ball sandwich inclusions
    Sandwich(SandwichArgs),
    /// Check a dimension pair against the beta bounds, or sample the metric comparison constants
    Compare(CompareArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SetKind {
    Ex1,
    Ex2,
    Hsquare,
    Cantor,
    Fs,
    Xseg,
    Tseg,
}

#[derive(Args)]
struct ConstructArgs {
    #[arg(long, value_enum)]
    set: SetKind,
    /// Construction level (ex1, ex2)
    #[arg(long)]
    level: Option<u32>,
    /// Example 2 parameter, M > 1
    #[arg(long = "M")]
    m: Option<f64>,
    /// Cantor parameter, 0 < d < 1 (cantor, fs)
    #[arg(long)]
    d: Option<f64>,
    /// Address depth (hsquare, cantor; default for both fs depths)
    #[arg(long)]
    depth: Option<u32>,
    #[arg(long)]
    qh_depth: Option<u32>,
    #[arg(long)]
    cantor_depth: Option<u32>,
    #[arg(long, default_value_t = 16)]
    samples_per_rect: usize,
    /// Sample count (xseg, tseg)
    #[arg(long, default_value_t = 10_000)]
    points: usize,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    from: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    to: f64,
    #[arg(long)]
    out: PathBuf,
    /// Also write an (x, t) scatter plot
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    Euclidean,
    Heisenberg,
}

impl From<Metric> for MetricKind {
    fn from(m: Metric) -> Self {
        match m {
            Metric::Euclidean => MetricKind::Euclidean,
            Metric::Heisenberg => MetricKind::Heisenberg,
        }
    }
}

#[derive(Args)]
struct DimensionArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_enum)]
    metric: Metric,
    #[arg(long)]
    delta_min: f64,
    #[arg(long)]
    delta_max: f64,
    /// Number of scales (default: eight per decade)
    #[arg(long)]
    scales: Option<usize>,
    /// Fit every scale instead of dropping both ends
    #[arg(long)]
    no_trim: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a log-log plot
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Fail with exit code 4 unless the slope is within tolerance of the known value
    #[arg(long)]
    assert: bool,
    /// Tolerance for --assert (default: per construction)
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProbeKind {
    Thm1,
    Thm2,
    Ex1,
    Ex2,
    Ex3,
}

#[derive(Args)]
struct DensityArgs {
    /// Cloud CSV; optional only for `--probe ex3 --local`
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long, value_enum)]
    probe: ProbeKind,
    /// thm1 exponent of `rho = r^(1+epsilon)`
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    /// thm2 fraction of `rho = delta r`
    #[arg(long, default_value_t = 0.25)]
    delta: f64,
    /// Measure exponent (thm1, thm2; default: the cloud's Euclidean dimension)
    #[arg(long)]
    s: Option<f64>,
    /// Explicit radii, comma separated, strictly decreasing
    #[arg(long, value_delimiter = ',')]
    radii: Vec<f64>,
    #[arg(long)]
    r_max: Option<f64>,
    #[arg(long)]
    r_min: Option<f64>,
    /// Number of radii between --r-max and --r-min (default: eight per decade)
    #[arg(long)]
    scales: Option<usize>,
    /// Base point `x,y,t`; repeatable. Default: a panel of the cloud
    #[arg(long, allow_hyphen_values = true)]
    point: Vec<String>,
    #[arg(long, default_value_t = 32)]
    panel: usize,
    /// ex3: refine F_s locally around each ball instead of probing the cloud
    #[arg(long)]
    local: bool,
    /// ex3 --local without --in: Cantor parameter
    #[arg(long)]
    d: Option<f64>,
    /// ex3 --local: Q_H pieces per radius
    #[arg(long, default_value_t = 64.0)]
    qh_cells: f64,
    /// ex3 --local: Cantor pieces per radius
    #[arg(long, default_value_t = 128.0)]
    cantor_cells: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Gate the result with the acceptance tolerances (exit code 4 on failure)
    #[arg(long)]
    assert: bool,
}

#[derive(Args)]
struct SandwichArgs {
    /// Bound on the horizontal norm of the base points
    #[arg(long = "R", default_value_t = 2.0)]
    r_max: f64,
    #[arg(long = "r", value_delimiter = ',', default_values_t = [1.0, 0.3, 0.1])]
    r: Vec<f64>,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit code 4 unless there are no violations
    #[arg(long)]
    assert: bool,
}

#[derive(Args)]
struct CompareArgs {
    /// Euclidean dimension estimate JSON
    #[arg(long = "dimE")]
    dim_e: Option<PathBuf>,
    /// Heisenberg dimension estimate JSON
    #[arg(long = "dimH")]
    dim_h: Option<PathBuf>,
    #[arg(long, default_value_t = 0.1)]
    tol: f64,
    /// Instead of a dimension pair, sample this many point pairs for the metric comparison
    #[arg(long)]
    pairs: Option<usize>,
    /// Radius of the sampling ball for --pairs
    #[arg(long = "R", default_value_t = 2.0)]
    r_max: f64,
    /// Bound the sampled comparison constants must respect under --assert
    #[arg(long, default_value_t = 9.0)]
    bound: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    assert: bool,
}

enum Failure {
    Usage(String),
    Resource(String),
    Assert(String),
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) => Failure::Usage(e.to_string()),
            Error::ResourceLimit(_) => Failure::Resource(e.to_string()),
            _ => Failure::Other(e.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn usage<T>(msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure::Usage(msg.into()))
}

fn need<T>(v: Option<T>, flag: &str, set: &str) -> Result<T, Failure> {
    match v {
        Some(v) => Ok(v),
        None => usage(format!("--{flag} is required for {set}")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(f) = configure_threads() {
        return report(f);
    }
    let seed = cli.seed;
    let result = match cli.command {
        Command::Construct(a) => construct(a),
        Command::Dimension(a) => dimension(a),
        Command::Density(a) => density(a, seed),
        Command::Sandwich(a) => sandwich(a, seed),
        Command::Compare(a) => compare(a, seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => report(f),
    }
}

fn report(f: Failure) -> ExitCode {
    let (code, kind, msg) = match f {
        Failure::Usage(m) => (2, "error", m),
        Failure::Resource(m) => (3, "error", m),
        Failure::Assert(m) => (4, "assert failed", m),
        Failure::Other(m) => (1, "error", m),
    };
    eprintln!("heislab: {kind}: {msg}");
    ExitCode::from(code)
}

fn configure_threads() -> Outcome {
    let Ok(v) = std::env::var("HEISLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = match v.trim().parse() {
        Ok(n) if n > 0 => n,
        _ => return usage(format!("HEISLAB_THREADS must be a positive integer, got '{v}'")),
    };
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Failure::Other(e.to_string()))
}

fn emit<T: Serialize>(out: Option<&Path>, value: &T) -> Outcome {
    match out {
        Some(p) => io::write_json(p, value)?,
        None => println!("{}", serde_json::to_string_pretty(value).map_err(|e| Failure::Other(e.to_string()))?),
    }
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Outcome {
    io::write_atomic(path, |w| Ok(w.write_all(text.as_bytes())?))?;
    Ok(())
}

fn construct(a: ConstructArgs) -> Outcome {
    let cloud = match a.set {
        SetKind::Ex1 => {
            let level = need(a.level, "level", "ex1")?;
            example_cloud(ExampleParams::Example1, level, a.samples_per_rect)?.1
        }
        SetKind::Ex2 => {
            let m = need(a.m, "M", "ex2")?;
            let level = need(a.level, "level", "ex2")?;
            let params = ExampleParams::example2(m)?;
            let k0 = params.asymptotic_level();
            if k0.is_none_or(|k0| level < k0 + 1) {
                let bound = k0.map_or_else(|| "no k".to_string(), |k0| format!("k >= {k0}"));
                return usage(format!(
                    "level {level} has no usable radius window: the windows need 2^k > 68M = {} ({bound}) and level >= k + 1",
                    68.0 * m
                ));
            }
            example_cloud(params, level, a.samples_per_rect)?.1
        }
        SetKind::Hsquare => hsquare_cloud(need(a.depth, "depth", "hsquare")?)?,
        SetKind::Cantor => cantor_cloud(need(a.d, "d", "cantor")?, need(a.depth, "depth", "cantor")?)?,
        SetKind::Fs => {
            let d = need(a.d, "d", "fs")?;
            let qh = need(a.qh_depth.or(a.depth), "qh-depth", "fs")?;
            let cd = need(a.cantor_depth.or(a.depth), "cantor-depth", "fs")?;
            fs_cloud(d, qh, cd)?
        }
        SetKind::Xseg => segment_cloud(Axis::X, a.from, a.to, a.points)?,
        SetKind::Tseg => segment_cloud(Axis::T, a.from, a.to, a.points)?,
    };
    io::save_cloud(&cloud, &a.out)?;
    if let Some(p) = &a.svg {
        write_text(p, &svg::cloud_scatter(&cloud))?;
    }
    println!(
        "{}: {} points, level {}, total_mass {} -> {}",
        cloud.source.name(),
        cloud.len(),
        cloud.level,
        cloud.total_mass,
        a.out.display()
    );
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct DimensionOutput {
    source: Source,
    points: usize,
    #[serde(flatten)]
    estimate: DimensionEstimate,
}

/// Slope tolerances of the acceptance table; 0.1 for anything else.
fn default_tolerance(source: &Source, m: MetricKind) -> f64 {
    use MetricKind::*;
    match (source, m) {
        (Source::Xseg { .. }, Euclidean) | (Source::Tseg { .. }, Euclidean) => 0.05,
        (Source::Xseg { .. }, Heisenberg) | (Source::Cantor { .. }, Euclidean) => 0.1,
        (Source::Tseg { .. }, Heisenberg) | (Source::Cantor { .. }, Heisenberg) => 0.15,
        (Source::Hsquare { .. }, _) => 0.2,
        (Source::Fs { .. }, Euclidean) => 0.25,
        (Source::Fs { .. }, Heisenberg) => 0.3,
        _ => 0.1,
    }
}

fn dimension(a: DimensionArgs) -> Outcome {
    let cloud = io::load_cloud(&a.input)?;
    let metric = MetricKind::from(a.metric);
    let n = a.scales.unwrap_or_else(|| default_scale_count(a.delta_max, a.delta_min));
    let estimate = if a.no_trim {
        let deltas = log_scales(a.delta_max, a.delta_min, n)?;
        estimate_dimension(&net_counts(&cloud, &deltas, metric)?, metric)?
    } else {
        estimate_cloud(&cloud, metric, a.delta_max, a.delta_min, n)?
    };
    println!("slope {}", estimate.slope);
    if let Some(p) = &a.svg {
        write_text(p, &svg::loglog_plot(&estimate))?;
    }
    let slope = estimate.slope;
    let out = DimensionOutput { source: cloud.source.clone(), points: cloud.len(), estimate };
    if let Some(p) = &a.out {
        io::write_json(p, &out)?;
    }
    if a.assert {
        let dims = expected_dims(&cloud.source)?;
        let target = match metric {
            MetricKind::Euclidean => dims.dim_e,
            MetricKind::Heisenberg => Some(dims.dim_h),
        };
        let tol = a.tol.unwrap_or_else(|| default_tolerance(&cloud.source, metric));
        match target {
            None => println!("{} dimension of {} is not asserted", metric.name(), cloud.source.name()),
            Some(t) if (slope - t).abs() <= tol => {}
            Some(t) => return Err(Failure::Assert(format!("slope {slope} is not within {tol} of {t}"))),
        }
    }
    Ok(())
}

fn parse_point(s: &str) -> Result<Point, Failure> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let coords: Option<Vec<f64>> = parts.iter().map(|p| p.parse().ok()).collect();
    match coords.as_deref() {
        Some(&[x, y, t]) => Ok(Point::try_new(x, y, t)?),
        _ => usage(format!("expected a point as x,y,t, got '{s}'")),
    }
}

fn radii_of(a: &DensityArgs) -> Result<Vec<f64>, Failure> {
    if !a.radii.is_empty() {
        if a.r_max.is_some() || a.r_min.is_some() {
            return usage("give either --radii or --r-max/--r-min, not both");
        }
        return Ok(a.radii.clone());
    }
    match (a.r_max, a.r_min) {
        (Some(hi), Some(lo)) => {
            let n = a.scales.unwrap_or_else(|| default_scale_count(hi, lo));
            Ok(log_scales(hi, lo, n)?)
        }
        _ => usage("this probe needs radii: --radii or --r-max with --r-min"),
    }
}

fn mismatch<T>(probe: &str, cloud: &WeightedCloud, want: &str) -> Result<T, Failure> {
    usage(format!("probe {probe} needs a cloud of set '{want}', got '{}'", cloud.source.name()))
}

fn density(a: DensityArgs, seed: u64) -> Outcome {
    let user_points = a.point.iter().map(|s| parse_point(s)).collect::<Result<Vec<_>, _>>()?;
    let pick = |default: Vec<Point>| if user_points.is_empty() { default } else { user_points.clone() };
    let cloud = match &a.input {
        Some(p) => Some(io::load_cloud(p)?),
        None if a.probe == ProbeKind::Ex3 && a.local => None,
        None => return usage("--in is required"),
    };
    let result = match a.probe {
        ProbeKind::Thm1 | ProbeKind::Thm2 => {
            let cloud = cloud.as_ref().expect("checked above");
            let s = match a.s {
                Some(s) => s,
                None => match expected_dims(&cloud.source).ok().and_then(|d| d.dim_e) {
                    Some(s) => s,
                    None => return usage("--s is required for clouds of unknown dimension"),
                },
            };
            let radii = radii_of(&a)?;
            let points = pick(cloud_panel(cloud, a.panel));
            if a.probe == ProbeKind::Thm1 {
                thm1_scan(cloud, &points, a.epsilon, &radii, s)?
            } else {
                thm2_scan(cloud, &points, a.delta, &radii, s)?
            }
        }
        ProbeKind::Ex1 => {
            let cloud = cloud.as_ref().expect("checked above");
            if !matches!(cloud.source, Source::Ex1 { .. }) {
                return mismatch("ex1", cloud, "ex1");
            }
            let fam = build_family(ExampleParams::Example1, cloud.level)?;
            ex1_probe_on(&fam, cloud, &pick(family_panel(&fam, a.panel)))?
        }
        ProbeKind::Ex2 => {
            let cloud = cloud.as_ref().expect("checked above");
            let Source::Ex2 { m, .. } = cloud.source else {
                return mismatch("ex2", cloud, "ex2");
            };
            let fam = build_family(ExampleParams::example2(m)?, cloud.level)?;
            ex2_probe_on(m, cloud, &radii_of(&a)?, &pick(family_panel(&fam, a.panel)))?
        }
        ProbeKind::Ex3 => {
            let radii = radii_of(&a)?;
            let fs_params = match &cloud {
                Some(c) => match c.source {
                    Source::Fs { d, cantor_depth, .. } => Some((d, cantor_depth)),
                    _ => return mismatch("ex3", c, "fs"),
                },
                None => None,
            };
            if a.local {
                let d = match (fs_params, a.d) {
                    (Some((d, _)), _) | (None, Some(d)) => d,
                    (None, None) => return usage("--d is required for ex3 --local without --in"),
                };
                let res = LocalResolution {
                    qh_cells_per_radius: a.qh_cells,
                    cantor_cells_per_radius: a.cantor_cells,
                    ..LocalResolution::default()
                };
                let points = pick(fs_typical_points(d, a.panel, seed, 40)?);
                ex3_probe_local(d, &radii, &points, &res, seed)?
            } else {
                let cloud = cloud.as_ref().expect("checked above");
                let (d, cantor_depth) = fs_params.expect("fs source");
                let cantor = cantor_cloud(d, cantor_depth)?;
                ex3_probe_on(cloud, &cantor, d, &radii, &pick(cloud_panel(cloud, a.panel)))?
            }
        }
    };
    emit(a.out.as_deref(), &result)?;
    if a.out.is_some() {
        println!(
            "{}: min ratio {}, max ratio {}, error bound {}",
            result.probe, result.summary.min_ratio, result.summary.max_ratio, result.error_bound
        );
    }
    if a.assert {
        gate(a.probe, &result)?;
    }
    Ok(())
}

/// The acceptance tolerances, applied to one probe result.
fn gate(probe: ProbeKind, r: &ProbeResult) -> Outcome {
    let fail = |m: String| Err(Failure::Assert(m));
    match probe {
        ProbeKind::Thm1 => {
            let low = r.points.iter().filter(|ps| ps.min_ratio() <= 0.05).count();
            if (low as f64) < 0.9 * r.points.len() as f64 {
                return fail(format!("only {low} of {} base points reach a ratio <= 0.05", r.points.len()));
            }
        }
        ProbeKind::Thm2 => {
            let bound = 2f64.powf(-(r.s + 1.0));
            if !(r.summary.max_ratio > bound) {
                return fail(format!("max ratio {} does not exceed 2^-(s+1) = {bound}", r.summary.max_ratio));
            }
        }
        ProbeKind::Ex1 => {
            if r.error_bound > 0.02 {
                return fail(format!("discretization bound {} exceeds the tolerance 0.02", r.error_bound));
            }
            if r.summary.min_ratio < 0.125 - 0.02 {
                return fail(format!(
                    "ratio {} at r = {} below 1/8 - 0.02 at point {}",
                    r.summary.min_ratio, r.summary.argmin_r, r.summary.argmin_point
                ));
            }
        }
        ProbeKind::Ex2 => {
            if r.error_bound > 0.01 {
                return fail(format!("discretization bound {} exceeds the tolerance 0.01", r.error_bound));
            }
            if r.summary.min_ratio < 0.0625 - 0.01 {
                return fail(format!("min ratio {} below 1/16 - 0.01", r.summary.min_ratio));
            }
        }
        ProbeKind::Ex3 => {
            if !(r.summary.min_ratio > 0.0) {
                return fail(format!("min ratio {} is not positive", r.summary.min_ratio));
            }
            if let Some((i, ps)) = r.points.iter().enumerate().find(|(_, ps)| ps.min_ratio() < 0.5 * ps.median_ratio()) {
                return fail(format!("point {i}: min ratio {} below half the median {}", ps.min_ratio(), ps.median_ratio()));
            }
        }
    }
    Ok(())
}

fn sandwich(a: SandwichArgs, seed: u64) -> Outcome {
    let rep = sandwich_sample(a.r_max, &a.r, a.samples, seed)?;
    emit(a.out.as_deref(), &rep)?;
    if a.out.is_some() {
        println!("inner violations {}, outer violations {}", rep.inner_violations, rep.outer_violations);
    }
    if a.assert && (rep.inner_violations > 0 || rep.outer_violations > 0) {
        return Err(Failure::Assert(format!(
            "{} inner and {} outer violations in {} samples",
            rep.inner_violations, rep.outer_violations, rep.samples
        )));
    }
    Ok(())
}

fn compare(a: CompareArgs, seed: u64) -> Outcome {
    match (&a.dim_e, &a.dim_h, a.pairs) {
        (Some(pe), Some(ph), None) => {
            let e: DimensionEstimate = io::read_json(pe)?;
            let h: DimensionEstimate = io::read_json(ph)?;
            if e.metric != MetricKind::Euclidean || h.metric != MetricKind::Heisenberg {
                return usage(format!(
                    "--dimE must hold a euclidean estimate and --dimH a heisenberg one, got {} and {}",
                    e.metric.name(),
                    h.metric.name()
                ));
            }
            let check = check_dimension_inequalities(e.slope, h.slope, a.tol)?;
            emit(a.out.as_deref(), &check)?;
            if a.assert && !check.ok {
                return Err(Failure::Assert(format!(
                    "dimH {} outside [{}, {}] with tolerance {}",
                    check.dim_h, check.beta_minus, check.beta_plus, check.tol
                )));
            }
        }
        (None, None, Some(n)) => {
            let rep = fit_metric_comparison(a.r_max, n, seed)?;
            emit(a.out.as_deref(), &rep)?;
            let worst = rep.sup_ratio_lower.max(rep.sup_ratio_upper);
            if a.assert && !(worst <= a.bound) {
                return Err(Failure::Assert(format!("sampled constant {worst} exceeds {}", a.bound)));
            }
        }
        _ => return usage("give either --dimE with --dimH, or --pairs"),
    }
    Ok(())
}
