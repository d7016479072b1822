//! Command-line front end.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::boundary::{segment, segment_traced, StageTimings, Trace, STAGES};
use crate::config::PipelineParams;
use crate::error::{Error, SegmentError};
use crate::eval::{generate_eye, list_images, map_indexed, run_corpus, truth_path, CorpusSource, SynthPlan};
use crate::imgcore::io::save_rgb_png;
use crate::imgcore::{load_image, save_gray_png, save_mask_png, GrayImage};
use crate::overlay::render_overlay;

pub const EXIT_PIPELINE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_BUDGET: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "irisloc", version, about = "Two-stage iris localization and evaluation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub params: ParamArgs,
    /// Flat `key = value` parameter file; flags override it.
    #[arg(long, global = true, env = "IRISLOC_CONFIG")]
    pub config: Option<PathBuf>,
    /// Images processed concurrently by eval and bench.
    #[arg(long, global = true, env = "IRISLOC_JOBS", default_value_t = 1)]
    pub jobs: usize,
    /// Replaces the seed of a synthetic plan.
    #[arg(long, global = true, env = "IRISLOC_SEED")]
    pub seed: Option<u64>,
    /// Write per-stage debug images next to the segment outputs.
    #[arg(long, global = true, env = "IRISLOC_DEBUG")]
    pub debug: bool,
    /// Mean per-image budget for bench, milliseconds.
    #[arg(long, global = true, env = "IRISLOC_BUDGET_MS")]
    pub budget_ms: Option<f64>,
    /// Print the effective parameters and exit.
    #[arg(long, global = true, env = "IRISLOC_PRINT_CONFIG")]
    pub print_config: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ParamArgs {
    #[arg(long, global = true, env = "IRISLOC_T1")]
    pub t1: Option<f64>,
    #[arg(long, global = true, env = "IRISLOC_T2")]
    pub t2: Option<f64>,
    /// Expected pupil radius, pixels.
    #[arg(long, global = true, env = "IRISLOC_R_AVG")]
    pub r_avg: Option<f64>,
    #[arg(long, global = true, env = "IRISLOC_LAMBDA_A")]
    pub lambda_a: Option<f64>,
    #[arg(long, global = true, env = "IRISLOC_LAMBDA_C")]
    pub lambda_c: Option<f64>,
    #[arg(long, global = true, env = "IRISLOC_SIGMA_ZC")]
    pub sigma_zc: Option<f64>,
    #[arg(long, global = true, env = "IRISLOC_MIN_COMPONENT")]
    pub min_component: Option<usize>,
    #[arg(long, global = true, env = "IRISLOC_GROW_TOL")]
    pub grow_tol: Option<f64>,
    /// Half-width of each stable zone, radians.
    #[arg(long, global = true, env = "IRISLOC_STABLE_HALFWIDTH")]
    pub stable_halfwidth: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Segment one image and write its result record and overlay.
    Segment {
        image: PathBuf,
        /// Output directory.
        #[arg(short, long, default_value = ".")]
        out: PathBuf,
    },
    /// Score a corpus against truth masks.
    Eval {
        #[command(flatten)]
        source: SourceArgs,
        /// CSV report path; printed to stdout when absent.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Render a synthetic plan to images and truth masks.
    Synth {
        #[arg(long)]
        plan: Option<PathBuf>,
        #[arg(long)]
        count: Option<usize>,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Time the pipeline per stage.
    Bench {
        #[command(flatten)]
        source: SourceArgs,
    },
}

#[derive(Debug, Clone, Args)]
pub struct SourceArgs {
    /// Directory of images with `<name>.truth.png` masks.
    #[arg(long, conflicts_with = "plan")]
    pub dir: Option<PathBuf>,
    /// Synthetic plan file; the default plan is used when neither source is given.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    /// Replaces the image count of the plan.
    #[arg(long, conflicts_with = "dir")]
    pub count: Option<usize>,
}

/// Failure carrying its exit status.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn usage(e: impl std::fmt::Display) -> Self {
        CliError { code: EXIT_USAGE, message: e.to_string() }
    }

    fn pipeline(e: &SegmentError) -> Self {
        CliError { code: EXIT_PIPELINE, message: e.to_string() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::usage(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

impl ParamArgs {
    /// Flag overrides as flat `key = value` text.
    fn to_flat(&self) -> String {
        let mut out = String::new();
        let mut put = |key: &str, v: Option<String>| {
            if let Some(v) = v {
                let _ = writeln!(out, "{key} = {v}");
            }
        };
        let float = |v: Option<f64>| v.map(|x| format!("{x:?}"));
        put("t1", float(self.t1));
        put("t2", float(self.t2));
        put("r_avg", float(self.r_avg));
        put("lambda_a", float(self.lambda_a));
        put("lambda_c", float(self.lambda_c));
        put("sigma_zc", float(self.sigma_zc));
        put("min_component", self.min_component.map(|v| v.to_string()));
        put("grow_tol", float(self.grow_tol));
        put("stable_halfwidth", float(self.stable_halfwidth));
        out
    }
}

impl Cli {
    /// Defaults, then the config file, then flags. `fallback_r_avg` fills
    /// the pupil radius when neither file nor flag names it.
    pub fn resolve_params(&self, fallback_r_avg: Option<f64>) -> CliResult<PipelineParams> {
        let mut params = PipelineParams::with_r_avg(fallback_r_avg.unwrap_or(f64::NAN));
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
            params = params.overlay_flat_str(&text)?;
        }
        params = params.overlay_flat_str(&self.params.to_flat())?;
        if params.pupil.r_avg.is_nan() {
            return Err(CliError::usage("the expected pupil radius is required (--r-avg or r_avg in --config)"));
        }
        params.validate()?;
        Ok(params)
    }

    fn plan(&self, path: Option<&Path>, count: Option<usize>) -> CliResult<SynthPlan> {
        let mut plan = match path {
            Some(p) => SynthPlan::load(p)?,
            None => SynthPlan::default(),
        };
        if let Some(n) = count {
            plan.count = n;
        }
        if let Some(seed) = self.seed {
            plan.seed = seed;
        }
        plan.validate()?;
        Ok(plan)
    }

    fn source(&self, args: &SourceArgs) -> CliResult<CorpusSource> {
        match &args.dir {
            Some(dir) => Ok(CorpusSource::Directory(dir.clone())),
            None => Ok(CorpusSource::Synthetic(self.plan(args.plan.as_deref(), args.count)?)),
        }
    }

    fn fallback_r_avg(&self) -> CliResult<Option<f64>> {
        let plan_args = match &self.command {
            Command::Eval { source, .. } | Command::Bench { source } if source.dir.is_none() => {
                Some((source.plan.as_deref(), source.count))
            }
            Command::Synth { plan, count, .. } => Some((plan.as_deref(), *count)),
            _ => None,
        };
        match plan_args {
            Some((path, count)) => Ok(Some(self.plan(path, count)?.suggested_r_avg())),
            None => Ok(None),
        }
    }
}

/// Parses the process arguments, runs, and maps failures to exit codes.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("irisloc: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

pub fn run(cli: &Cli) -> CliResult<()> {
    let params = if matches!(cli.command, Command::Synth { .. }) && !cli.print_config {
        None
    } else {
        Some(cli.resolve_params(cli.fallback_r_avg()?)?)
    };
    if cli.print_config {
        print!("{}", params.expect("resolved above").to_flat_string());
        return Ok(());
    }
    match &cli.command {
        Command::Segment { image, out } => cmd_segment(cli, image, out, &params.expect("resolved")),
        Command::Eval { source, csv } => cmd_eval(cli, source, csv.as_deref(), &params.expect("resolved")),
        Command::Synth { plan, count, out } => cmd_synth(&cli.plan(plan.as_deref(), *count)?, out),
        Command::Bench { source } => cmd_bench(cli, source, &params.expect("resolved")),
    }
}

fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::usage(format!("cannot create {}: {e}", dir.display())))
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))
}

fn stem(path: &Path) -> String {
    path.file_stem().and_then(|s| s.to_str()).unwrap_or("image").to_string()
}

fn write_debug(trace: &Trace, base: &Path) -> CliResult<()> {
    let name = |suffix: &str| base.with_file_name(format!("{}.{suffix}.png", stem(base)));
    if let Some(c) = &trace.coarse {
        save_gray_png(c.trilevel.as_image(), name("trilevel"))?;
        save_gray_png(&c.response, name("log"))?;
        save_mask_png(&c.mask, name("mask"))?;
    }
    if let Some(e) = &trace.edges {
        save_mask_png(e, name("edges"))?;
    }
    Ok(())
}

fn cmd_segment(cli: &Cli, image: &Path, out: &Path, params: &PipelineParams) -> CliResult<()> {
    let img = load_image(image)?;
    create_dir(out)?;
    let base = out.join(format!("{}.png", stem(image)));
    let mut trace = Trace::default();
    let result = segment_traced(&img, params, cli.debug.then_some(&mut trace));
    if cli.debug {
        write_debug(&trace, &base)?;
    }
    let result = result.map_err(|e| CliError::pipeline(&e))?;
    let record = serde_json::to_string_pretty(&result.record()).expect("record serializes");
    write_text(&out.join(format!("{}.json", stem(image))), &format!("{record}\n"))?;
    let canvas = render_overlay(&img, &result);
    save_rgb_png(canvas.width(), canvas.height(), canvas.into_rgb(), out.join(format!("{}.overlay.png", stem(image))))?;
    let (p, i) = (result.pupil, result.iris);
    println!(
        "pupil ({:.2}, {:.2}) r={:.2}  iris ({:.2}, {:.2}) r={:.2}  orientation={:.3}  occluded_runs={}  ms={:.1}",
        p.cx,
        p.cy,
        p.r,
        i.cx,
        i.cy,
        i.r,
        result.orientation,
        result.gap_runs().len(),
        result.timings.total()
    );
    Ok(())
}

fn cmd_eval(cli: &Cli, source: &SourceArgs, csv: Option<&Path>, params: &PipelineParams) -> CliResult<()> {
    let report = run_corpus(&cli.source(source)?, params, cli.jobs)?;
    let text = report.to_csv()?;
    match csv {
        Some(path) => {
            write_text(path, &text)?;
            println!("{}", report.summary_line());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_synth(plan: &SynthPlan, out: &Path) -> CliResult<()> {
    create_dir(out)?;
    for i in 0..plan.count {
        let spec = plan.spec(i)?;
        let eye = generate_eye(&spec)?;
        let image = out.join(format!("{}.png", plan.image_id(i)));
        save_gray_png(&eye.image, &image)?;
        save_mask_png(&eye.truth.iris_mask, truth_path(&image))?;
        let json = serde_json::to_string_pretty(&spec).expect("spec serializes");
        write_text(&out.join(format!("{}.spec.json", plan.image_id(i))), &format!("{json}\n"))?;
    }
    println!("wrote {} synthetic eyes to {}", plan.count, out.display());
    Ok(())
}

/// Nearest-rank percentile of `values`, which must be sorted.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Per-stage mean and 95th percentile, milliseconds.
pub fn timing_table(timings: &[StageTimings]) -> String {
    let mut out = format!("{:<14}{:>10}{:>10}\n", "stage", "mean_ms", "p95_ms");
    let mut row = |name: &str, mut v: Vec<f64>| {
        v.sort_by(f64::total_cmp);
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let _ = writeln!(out, "{name:<14}{mean:>10.2}{:>10.2}", percentile(&v, 95.0));
    };
    for stage in STAGES {
        row(stage.name(), timings.iter().map(|t| t.get(stage)).collect());
    }
    row("total", timings.iter().map(|t| t.total()).collect());
    out
}

fn cmd_bench(cli: &Cli, source: &SourceArgs, params: &PipelineParams) -> CliResult<()> {
    let images: Vec<GrayImage> = match cli.source(source)? {
        CorpusSource::Directory(dir) => list_images(&dir)?
            .iter()
            .map(load_image)
            .collect::<Result<_, _>>()?,
        CorpusSource::Synthetic(plan) => (0..plan.count)
            .map(|i| Ok(generate_eye(&plan.spec(i)?)?.image))
            .collect::<Result<_, Error>>()?,
    };
    let results = map_indexed(images.len(), cli.jobs, |i| segment(&images[i], params).map(|r| r.timings))?;
    let timings: Vec<StageTimings> = results.iter().filter_map(|r| r.as_ref().ok().copied()).collect();
    let failures = results.len() - timings.len();
    if timings.is_empty() {
        let first = results.into_iter().find_map(|r| r.err()).expect("at least one image");
        return Err(CliError::pipeline(&first));
    }
    print!("{}", timing_table(&timings));
    let mean = timings.iter().map(|t| t.total()).sum::<f64>() / timings.len() as f64;
    let budget = cli.budget_ms.unwrap_or(500.0);
    let (w, h) = (images[0].width(), images[0].height());
    println!("images={} failures={failures} size={w}x{h} mean_total_ms={mean:.2} budget_ms={budget}", images.len());
    if !(mean <= budget) || budget <= 0.0 {
        return Err(CliError {
            code: EXIT_BUDGET,
            message: format!("mean segmentation time {mean:.2} ms exceeds the {budget} ms budget"),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("irisloc").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flags_override_defaults() {
        let cli = parse(&["segment", "x.png", "--r-avg", "30", "--lambda-c", "0.2", "--stable-halfwidth", "0.4"]);
        let p = cli.resolve_params(None).unwrap();
        assert_eq!(p.pupil.r_avg, 30.0);
        assert_eq!(p.edges.lambda_c, 0.2);
        assert_eq!(p.boundary.stable_halfwidth, 0.4);
    }

    #[test]
    fn missing_radius_is_a_usage_error() {
        let err = parse(&["segment", "x.png"]).resolve_params(None).unwrap_err();
        assert_eq!(err.code, EXIT_USAGE);
        let err = parse(&["segment", "x.png", "--r-avg", "20", "--t1", "0.7"]).resolve_params(None).unwrap_err();
        assert_eq!(err.code, EXIT_USAGE);
    }

    #[test]
    fn percentile_nearest_rank() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(percentile(&v, 95.0), 95.0);
        assert_eq!(percentile(&[3.0], 95.0), 3.0);
    }

    #[test]
    fn timing_table_lists_every_stage() {
        let t = StageTimings { preprocess: 1.0, ..StageTimings::default() };
        let table = timing_table(&[t, t]);
        assert_eq!(table.lines().count(), STAGES.len() + 2);
        assert!(table.contains("preprocess") && table.contains("total"));
    }
}
