//! Command-line front end: `segment`, `classify`, `pipeline`, `score`, `synth`.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{ConfigOverrides, PipelineConfig};
use crate::error::{Error, Result, StageExt};
use crate::pipeline::{
    classify_and_submit, parse_segments, parse_video_list, run_pipeline, segment_traces, write_angles, write_segments,
};
use crate::postprocess::{parse_submission, write_submission, SubmissionRow};
use crate::scorer::{score, MatchMode, ScoreReport};
use crate::synth::{generate_bundle, SynthScript};

/// Environment variable holding the log filter (default `warn`).
pub const LOG_ENV: &str = "TALSEG_LOG";

#[derive(Debug, Parser)]
#[command(
    name = "talseg",
    version,
    about = "Localize and score anomalous driver activity in keypoint traces"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Threshold head/hand angles and write anomaly segments.
    Segment {
        trace: PathBuf,
        /// Also dump per-frame angles to this file.
        #[arg(long)]
        angles: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Label a segment dump from a score file and write a submission.
    Classify {
        segments: PathBuf,
        scores: PathBuf,
        /// Pins the numeric video ids to this list (one name per line).
        #[arg(long)]
        video_list: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Trace + scores to submission in one pass.
    Pipeline {
        trace: PathBuf,
        scores: PathBuf,
        #[arg(long)]
        video_list: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Score a submission against ground truth.
    Score {
        predictions: PathBuf,
        ground_truth: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Render a synthetic bundle (trace, scores, ground truth) into `--out`.
    Synth {
        script: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML config file; flags take precedence over it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output path (directory for `synth`); stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub fps: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub conf_threshold: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub theta_head: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub theta_hand: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub gap_tolerance: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub min_duration: Option<f64>,
    #[arg(long, value_enum)]
    pub matching: Option<MatchMode>,
    #[arg(long)]
    pub jobs: Option<usize>,
}

impl CommonArgs {
    fn resolve(&self) -> Result<PipelineConfig> {
        let overrides = ConfigOverrides {
            fps: self.fps,
            conf_threshold: self.conf_threshold,
            theta_head: self.theta_head,
            theta_hand: self.theta_hand,
            gap_tolerance: self.gap_tolerance,
            min_duration: self.min_duration,
            matching: self.matching,
            jobs: self.jobs,
        };
        PipelineConfig::resolve(self.config.as_deref(), &overrides).stage("config")
    }

    /// Writes the effective config next to the output.
    fn write_sidecar(&self, cfg: &PipelineConfig) -> Result<()> {
        let Some(out) = &self.out else {
            return Ok(());
        };
        let path = if out.is_dir() {
            out.join("config.toml")
        } else {
            let mut name = out.as_os_str().to_owned();
            name.push(".config.toml");
            PathBuf::from(name)
        };
        fs::write(path, cfg.to_toml())?;
        Ok(())
    }

    fn output(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn read_video_list(path: Option<&Path>) -> Result<Option<Vec<String>>> {
    path.map(|p| parse_video_list(open(p)?)).transpose()
}

pub fn cmd_segment(trace: &Path, angles: Option<&Path>, common: &CommonArgs) -> Result<()> {
    let cfg = common.resolve()?;
    let videos = segment_traces(open(trace)?, &cfg, angles.is_some())?;
    let mut out = common.output()?;
    for v in &videos {
        write_segments(&mut out, &v.segments)?;
    }
    out.flush()?;
    if let Some(path) = angles {
        let mut w = BufWriter::new(File::create(path)?);
        write_angles(&mut w, &videos)?;
        w.flush()?;
    }
    common.write_sidecar(&cfg)
}

fn emit_rows(rows: &[SubmissionRow], common: &CommonArgs) -> Result<()> {
    let mut out = common.output()?;
    write_submission(&mut out, rows)?;
    out.flush()?;
    Ok(())
}

pub fn cmd_classify(segments: &Path, scores: &Path, video_list: Option<&Path>, common: &CommonArgs) -> Result<()> {
    let cfg = common.resolve()?;
    let list = read_video_list(video_list)?;
    let segs = parse_segments(open(segments)?).stage("segmenter")?;
    let rows = classify_and_submit(segs, open(scores)?, &cfg, Vec::new(), list.as_deref())?;
    emit_rows(&rows, common)?;
    common.write_sidecar(&cfg)
}

pub fn cmd_pipeline(trace: &Path, scores: &Path, video_list: Option<&Path>, common: &CommonArgs) -> Result<()> {
    let cfg = common.resolve()?;
    let list = read_video_list(video_list)?;
    let rows = run_pipeline(open(trace)?, open(scores)?, &cfg, list.as_deref())?;
    emit_rows(&rows, common)?;
    common.write_sidecar(&cfg)
}

/// Scores two submission-format files.
pub fn score_files(predictions: &Path, ground_truth: &Path, mode: MatchMode) -> Result<ScoreReport> {
    let preds: Vec<_> = parse_submission(open(predictions)?)
        .stage("predictions")?
        .iter()
        .map(SubmissionRow::to_event)
        .collect();
    let gts: Vec<_> = parse_submission(open(ground_truth)?)
        .stage("ground truth")?
        .iter()
        .map(SubmissionRow::to_event)
        .collect();
    score(&preds, &gts, mode).stage("scorer")
}

pub fn cmd_score(predictions: &Path, ground_truth: &Path, common: &CommonArgs) -> Result<ScoreReport> {
    let cfg = common.resolve()?;
    let report = score_files(predictions, ground_truth, cfg.matching)?;
    if let Some(path) = &common.out {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut w, &report).map_err(io::Error::from)?;
        w.write_all(b"\n")?;
        w.flush()?;
        common.write_sidecar(&cfg)?;
    }
    println!(
        "aggregate={} matched={} unmatched_gt={} unmatched_pred={}",
        report.aggregate,
        report.matched.len(),
        report.unmatched_ground_truths,
        report.unmatched_predictions
    );
    Ok(report)
}

pub fn cmd_synth(script: &Path, common: &CommonArgs) -> Result<()> {
    let cfg = common.resolve()?;
    let out = common
        .out
        .as_deref()
        .ok_or_else(|| Error::Config("synth needs --out <dir>".into()))?;
    let text = fs::read_to_string(script)?;
    let script = SynthScript::from_json(&text).stage("synth")?;
    let bundle = generate_bundle(&script, &cfg.segmenter()).stage("synth")?;
    bundle.write_to_dir(out)?;
    common.write_sidecar(&cfg)
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Segment { trace, angles, common } => cmd_segment(&trace, angles.as_deref(), &common),
        Command::Classify {
            segments,
            scores,
            video_list,
            common,
        } => cmd_classify(&segments, &scores, video_list.as_deref(), &common),
        Command::Pipeline {
            trace,
            scores,
            video_list,
            common,
        } => cmd_pipeline(&trace, &scores, video_list.as_deref(), &common),
        Command::Score {
            predictions,
            ground_truth,
            common,
        } => cmd_score(&predictions, &ground_truth, &common).map(|_| ()),
        Command::Synth { script, common } => cmd_synth(&script, &common),
    }
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or(LOG_ENV, "warn");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

/// Parses arguments, runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    init_logging();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
