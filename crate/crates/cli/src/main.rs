//! `fstmd`: run the detector on frame directories, generate synthetic
//! benchmark sequences, and drive the ROC, tuning and sensitivity
//! experiments.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use feedback_stmd::eval::{
    self, EvalOptions, FeedbackParam, RocAccumulator, TuningAxis, REFERENCE_FALSE_ALARM_RATE,
};
use feedback_stmd::io;
use feedback_stmd::pipeline::{Detector, DetectorBank};
use feedback_stmd::synth::{self, BackgroundSource, GroundTruthEntry, Sequence, SynthConfig};
use feedback_stmd::{Frame, ModelParams};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Failure with the process exit status it maps to.
#[derive(Debug)]
enum Failure {
    /// Bad flags or configuration (1).
    Config(String),
    /// Missing or unreadable input (2).
    Input(String),
    /// Frame size changed mid-stream (3).
    SizeChange(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Input(_) => 2,
            Failure::SizeChange(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Input(m) | Failure::SizeChange(m) => m,
        }
    }
}

impl From<feedback_stmd::Error> for Failure {
    fn from(e: feedback_stmd::Error) -> Self {
        use feedback_stmd::Error as E;
        match e {
            E::InvalidParameter(_) => Failure::Config(e.to_string()),
            E::InvalidState(_) => Failure::SizeChange(e.to_string()),
            E::Read { .. } | E::Io { .. } => Failure::Input(e.to_string()),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

#[derive(Parser, Debug)]
#[command(name = "fstmd", version, about = "Small target motion detection with feedback")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct CommonArgs {
    /// JSON run configuration with optional `model`, `synth` and `eval` sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Seed for synthetic sequences (also reseeds a texture background).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Frame rate for both the model and synthetic sequences.
    #[arg(long, global = true)]
    fps: Option<f64>,
    /// Run only the feedback-free baseline (alpha = 0).
    #[arg(long, global = true)]
    no_feedback: bool,
    /// Detection threshold.
    #[arg(long, global = true)]
    lambda: Option<f64>,
    /// Worker threads for sweeps; defaults to all cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Length of synthetic sequences.
    #[arg(long, global = true)]
    frames: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the detector over a frame directory (or a synthetic sequence).
    Detect {
        /// Directory of PGM/PNG frames, processed in file-name order.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Intermediate maps to dump per frame, e.g. `Q,D,F`.
        #[arg(long, value_delimiter = ',')]
        dump_maps: Vec<String>,
    },
    /// Write synthetic sequences with ground truth.
    Synth {
        /// Experiment group 1..=6 instead of a single sequence.
        #[arg(long)]
        group: Option<u8>,
    },
    /// ROC curve of the detector on a sequence.
    Roc {
        #[arg(long)]
        input: Option<PathBuf>,
        /// Ground truth CSV (`frame,cx,cy`); required with `--input`.
        #[arg(long)]
        gt: Option<PathBuf>,
    },
    /// Tuning curve along one stimulus axis, feedback vs baseline.
    Tune {
        /// velocity, width, height or weber.
        axis: String,
        /// Values as `lo:hi:step` or a comma list.
        #[arg(long)]
        values: Option<String>,
    },
    /// Velocity tuning under different feedback constants.
    Sensitivity {
        /// alpha, n4 or tau4.
        param: String,
        #[arg(long)]
        values: Option<String>,
        #[arg(long)]
        velocities: Option<String>,
    },
}

/// Effective configuration of a run. Echoed to `run_config.json`; feeding
/// that file back with `--config` repeats the run.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RunConfig {
    model: ModelParams,
    /// Absent means the command's own base (initial sequence, or the
    /// uniform tuning stimulus for `tune`/`sensitivity`).
    synth: Option<SynthConfig>,
    eval: EvalOptions,
    jobs: Option<usize>,
}

impl RunConfig {
    fn load(common: &CommonArgs, tuning: bool) -> CliResult<Self> {
        let mut cfg: RunConfig = match &common.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?
            }
            None => RunConfig::default(),
        };
        let mut s = cfg.synth.take().unwrap_or_else(|| {
            if tuning {
                SynthConfig::tuning_base()
            } else {
                SynthConfig::default()
            }
        });
        if let Some(seed) = common.seed {
            s.seed = seed;
            if let BackgroundSource::Texture { seed: ts } = &mut s.background.source {
                *ts = seed;
            }
        }
        if let Some(fps) = common.fps {
            s.fps = fps;
            cfg.model.fps = fps;
        }
        if let Some(n) = common.frames {
            s.duration_frames = n;
        }
        if let Some(l) = common.lambda {
            cfg.model.lambda = l;
        }
        if common.no_feedback {
            cfg.model.alpha = 0.0;
        }
        if common.jobs.is_some() {
            cfg.jobs = common.jobs;
        }
        cfg.synth = Some(s);
        cfg.model.validate()?;
        cfg.synth().validate()?;
        if cfg.jobs == Some(0) {
            return Err(Failure::Config("--jobs must be at least 1".into()));
        }
        Ok(cfg)
    }

    fn synth(&self) -> &SynthConfig {
        self.synth.as_ref().expect("filled in by load")
    }

    /// Feedback model plus baseline, or the baseline alone.
    fn heads(&self) -> Vec<ModelParams> {
        if self.model.alpha == 0.0 {
            vec![self.model.clone()]
        } else {
            vec![self.model.clone(), self.model.without_feedback()]
        }
    }
}

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| Failure::Input(format!("cannot create {}: {e}", dir.display())))
}

fn parse_values(spec: &str) -> CliResult<Vec<f64>> {
    let bad = || Failure::Config(format!("cannot parse values {spec:?}"));
    let parts: Vec<&str> = spec.split(':').collect();
    let values = if parts.len() == 3 {
        let nums: Vec<f64> = parts.iter().map(|p| p.trim().parse().map_err(|_| bad())).collect::<CliResult<_>>()?;
        if !(nums[2] > 0.0 && nums[1] >= nums[0]) {
            return Err(bad());
        }
        eval::linear_grid(nums[0], nums[1], nums[2])
    } else {
        spec.split(',')
            .map(|p| p.trim().parse().map_err(|_| bad()))
            .collect::<CliResult<_>>()?
    };
    if values.is_empty() {
        return Err(bad());
    }
    Ok(values)
}

fn default_axis_values(axis: TuningAxis) -> Vec<f64> {
    match axis {
        TuningAxis::Velocity => eval::linear_grid(50.0, 800.0, 50.0),
        TuningAxis::Width => eval::linear_grid(1.0, 30.0, 1.0),
        TuningAxis::Height => eval::linear_grid(1.0, 20.0, 1.0),
        TuningAxis::Weber => eval::linear_grid(0.1, 1.0, 0.1),
    }
}

fn load_frames(dir: &Path) -> CliResult<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Err(Failure::Input(format!("input directory {} does not exist", dir.display())));
    }
    let frames = io::list_frames(dir)?;
    if frames.is_empty() {
        return Err(Failure::Input(format!("no PGM/PNG frames in {}", dir.display())));
    }
    Ok(frames)
}

/// Frames either from disk or rendered from the synthetic config.
enum Source {
    Files(Vec<PathBuf>),
    Synthetic(Sequence),
}

impl Source {
    fn open(input: Option<&Path>, cfg: &RunConfig) -> CliResult<Self> {
        Ok(match input {
            Some(dir) => Source::Files(load_frames(dir)?),
            None => Source::Synthetic(Sequence::new(cfg.synth().clone())?),
        })
    }

    fn len(&self) -> usize {
        match self {
            Source::Files(f) => f.len(),
            Source::Synthetic(s) => s.len(),
        }
    }

    fn frame(&self, t: usize) -> CliResult<Frame> {
        match self {
            Source::Files(f) => Ok(io::read_gray_image(&f[t])?),
            Source::Synthetic(s) => Ok(s.frame(t)),
        }
    }
}

fn cmd_detect(cfg: &RunConfig, out: &Path, input: Option<&Path>, dump: &[String]) -> CliResult<()> {
    let source = Source::open(input, cfg)?;
    let mut det = Detector::new(cfg.model.clone())?;
    for name in dump {
        if !["P", "L", "Tm3", "Tm1", "F", "D", "E", "Q"]
            .iter()
            .any(|m| m.eq_ignore_ascii_case(name))
        {
            return Err(Failure::Config(format!("unknown map {name:?} for --dump-maps")));
        }
    }
    create_dir(out)?;
    for name in dump {
        create_dir(&out.join("maps").join(name))?;
    }
    let mut dets = Vec::new();
    for t in 0..source.len() {
        let frame = source.frame(t)?;
        let r = det.process_frame(&frame)?;
        for name in dump {
            let key = if name.eq_ignore_ascii_case("tm3") || name.eq_ignore_ascii_case("tm1") {
                name.to_ascii_lowercase()
            } else {
                name.to_ascii_uppercase()
            };
            let map = r.map(&key).expect("name checked above");
            io::write_map_pgm(&out.join("maps").join(name).join(io::frame_file_name(t)), map)?;
        }
        dets.extend(r.detections);
    }
    io::write_detections(&out.join("detections.csv"), &dets)?;
    if let Source::Synthetic(seq) = &source {
        io::write_ground_truth(&out.join("gt.csv"), &seq.ground_truth_all())?;
    }
    log::info!("{} frames, {} detections", source.len(), dets.len());
    Ok(())
}

fn write_sequence(dir: &Path, cfg: &SynthConfig) -> CliResult<()> {
    let seq = Sequence::new(cfg.clone())?;
    create_dir(dir)?;
    for t in 0..seq.len() {
        io::write_frame_pgm(&dir.join(io::frame_file_name(t)), &seq.frame(t))?;
    }
    io::write_ground_truth(&dir.join("gt.csv"), &seq.ground_truth_all())?;
    io::write_json(&dir.join("config.json"), cfg)?;
    Ok(())
}

fn cmd_synth(cfg: &RunConfig, out: &Path, group: Option<u8>) -> CliResult<()> {
    match group {
        None => write_sequence(out, cfg.synth()),
        Some(g) => {
            let configs = synth::group_configs(g, cfg.synth())?;
            configs
                .par_iter()
                .map(|c| write_sequence(&out.join(synth::group_label(g, c)), c))
                .collect::<CliResult<Vec<()>>>()?;
            Ok(())
        }
    }
}

fn roc_rows(acc: &RocAccumulator, opts: &EvalOptions) -> CliResult<Vec<Vec<String>>> {
    let lambdas = match &opts.lambdas {
        Some(l) => l.clone(),
        None => acc.default_lambdas(opts.n_lambdas),
    };
    Ok(acc
        .sweep(&lambdas)?
        .iter()
        .map(|p| vec![p.lambda.to_string(), p.d_r.to_string(), p.f_a.to_string()])
        .collect())
}

fn cmd_roc(cfg: &RunConfig, out: &Path, input: Option<&Path>, gt_path: Option<&Path>) -> CliResult<()> {
    let source = Source::open(input, cfg)?;
    let gt: Vec<GroundTruthEntry> = match (&source, gt_path) {
        (_, Some(p)) => {
            if !p.is_file() {
                return Err(Failure::Input(format!("ground truth {} not found", p.display())));
            }
            io::read_ground_truth(p)?
        }
        (Source::Synthetic(seq), None) => seq.ground_truth_all(),
        (Source::Files(_), None) => {
            return Err(Failure::Input("roc on a frame directory needs --gt".into()))
        }
    };
    let heads = cfg.heads();
    let mut bank = DetectorBank::new(&heads)?;
    let warmup = cfg.eval.warmup_frames(cfg.model.fps);
    let mut accs: Vec<RocAccumulator> = heads
        .iter()
        .map(|p| RocAccumulator::new(p.nms_radius, cfg.eval.match_radius))
        .collect();
    for t in 0..source.len() {
        let qs = bank.process_frame(&source.frame(t)?)?;
        if t < warmup {
            continue;
        }
        let g = gt.iter().find(|g| g.frame_index == t).copied();
        for (acc, q) in accs.iter_mut().zip(&qs) {
            acc.push(t, q, g);
        }
    }
    if accs[0].n_images() == 0 {
        return Err(Failure::Config("no frames left after warm-up".into()));
    }
    create_dir(out)?;
    let header = ["lambda", "d_r", "f_a"];
    let names = if heads.len() == 2 {
        vec!["roc.csv", "roc_nofeedback.csv"]
    } else {
        vec!["roc.csv"]
    };
    for (acc, name) in accs.iter().zip(names) {
        io::write_csv(&out.join(name), &header, &roc_rows(acc, &cfg.eval)?)?;
        let p = acc.at_false_alarm_rate(REFERENCE_FALSE_ALARM_RATE)?;
        println!(
            "{name}: d_r {:.3} at f_a {:.2} (lambda {:.4})",
            p.d_r, p.f_a, p.lambda
        );
    }
    Ok(())
}

fn cmd_tune(cfg: &RunConfig, out: &Path, axis: &str, values: Option<&str>) -> CliResult<()> {
    let axis: TuningAxis = axis.parse()?;
    let values = match values {
        Some(v) => parse_values(v)?,
        None => default_axis_values(axis),
    };
    let heads = [cfg.model.clone(), cfg.model.without_feedback()];
    let curves = eval::tuning_sweep_heads(axis, &values, cfg.synth(), &heads, &cfg.eval)?;
    let rows: Vec<Vec<String>> = values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            vec![
                v.to_string(),
                curves[0].responses[i].to_string(),
                curves[1].responses[i].to_string(),
            ]
        })
        .collect();
    create_dir(out)?;
    io::write_csv(
        &out.join(format!("tuning_{}.csv", axis.name())),
        &["value", "response_feedback", "response_nofeedback"],
        &rows,
    )?;
    println!(
        "{}: argmax feedback {}, no feedback {}",
        axis.name(),
        curves[0].argmax(),
        curves[1].argmax()
    );
    Ok(())
}

fn cmd_sensitivity(
    cfg: &RunConfig,
    out: &Path,
    param: &str,
    values: Option<&str>,
    velocities: Option<&str>,
) -> CliResult<()> {
    let param: FeedbackParam = param.parse()?;
    let values = match values {
        Some(v) => parse_values(v)?,
        None => param.default_values(),
    };
    let velocities = match velocities {
        Some(v) => parse_values(v)?,
        None => default_axis_values(TuningAxis::Velocity),
    };
    let curves = eval::sensitivity_sweep(param, &values, &velocities, cfg.synth(), &cfg.model, &cfg.eval)?;
    let mut rows = Vec::new();
    for (value, curve) in values.iter().zip(&curves) {
        for (v, r) in curve.axis_values.iter().zip(&curve.responses) {
            rows.push(vec![value.to_string(), v.to_string(), r.to_string()]);
        }
        println!("{} = {value}: argmax velocity {}", param.name(), curve.argmax());
    }
    create_dir(out)?;
    io::write_csv(
        &out.join(format!("sensitivity_{}.csv", param.name())),
        &["param_value", "velocity", "response"],
        &rows,
    )?;
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    let tuning = matches!(cli.command, Command::Tune { .. } | Command::Sensitivity { .. });
    let cfg = RunConfig::load(&cli.common, tuning)?;
    if let Some(n) = cfg.jobs {
        // fails only if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let out = cli.common.out.as_path();
    create_dir(out)?;
    io::write_json(&out.join("run_config.json"), &cfg)?;
    match &cli.command {
        Command::Detect { input, dump_maps } => cmd_detect(&cfg, out, input.as_deref(), dump_maps),
        Command::Synth { group } => cmd_synth(&cfg, out, *group),
        Command::Roc { input, gt } => cmd_roc(&cfg, out, input.as_deref(), gt.as_deref()),
        Command::Tune { axis, values } => cmd_tune(&cfg, out, axis, values.as_deref()),
        Command::Sensitivity {
            param,
            values,
            velocities,
        } => cmd_sensitivity(&cfg, out, param, values.as_deref(), velocities.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("fstmd: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
