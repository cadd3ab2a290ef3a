//! Command-line front end. [`run_cli`] parses, dispatches and maps failures
//! to exit codes: 0 success, 1 usage error, 2 runtime failure.
//!
//! A `--config FILE` of `key=value` lines supplies defaults for any long
//! flag; flags given on the command line win.

use std::error::Error;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::thread;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::anomaly::{detect_anomalies, SegmentConfig, ShapeLibrary};
use crate::classify::{
    self, evaluate, feature_matrix, load_dataset, lstm_train, sniff_model, train_gnb, train_tree, write_dataset,
    ActivitySample, GnbModel, LstmModel, ModelKind, TrainConfig, TreeModel, TreeParams,
};
use crate::dsp::DspConfig;
use crate::pipeline::Recorder;
use crate::store;
use crate::synth::{self, ActivityConfig, ChannelConfig, MotionEvent};
use crate::transport::{self, read_capture, write_capture, IngestServer, ServerConfig, DEFAULT_PORT, PORT_ENV};

/// `println!` that ignores a closed stdout.
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

type Result<T> = std::result::Result<T, Box<dyn Error + Send + Sync>>;

#[derive(Debug, Parser)]
#[command(name = "csi-sentry", version, about = "WiFi CSI motion sensing toolkit")]
struct Cli {
    /// key=value defaults for long flags.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic packet capture, or an activity dataset with --dataset.
    Synth(SynthArgs),
    /// Accept replay clients and record their packets into a store.
    Serve(ServeArgs),
    /// Push a capture through a loopback server into a store.
    Ingest(IngestArgs),
    /// Stream a capture to a running server.
    Replay(ReplayArgs),
    /// Export a store as plottable CSV.
    ExportPlot(ExportArgs),
    /// Learn a shape library from a motion-free series.
    AnomalyTrain(AnomalyTrainArgs),
    /// Flag poorly reconstructed stretches of a series.
    AnomalyDetect(AnomalyDetectArgs),
    /// Train an activity classifier.
    HarTrain(HarTrainArgs),
    /// Score a trained classifier on a labeled dataset.
    HarEval(HarEvalArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Seconds of capture.
    #[arg(long, default_value_t = 60.0)]
    duration: f64,
    /// Packets per second.
    #[arg(long, default_value_t = 100.0)]
    rate: f64,
    /// Motion interval in seconds, `START:END`. Repeatable.
    #[arg(long, value_parser = parse_event)]
    event: Vec<(f64, f64)>,
    /// Modulation depth of motion events.
    #[arg(long, default_value_t = 0.5)]
    depth: f64,
    /// Doppler frequency of motion events, Hz.
    #[arg(long, default_value_t = 2.0)]
    doppler: f64,
    /// Noise standard deviation (default 1 for captures, 0.15 for datasets).
    #[arg(long)]
    noise: Option<f64>,
    /// Write `timestamp_us,in_motion` ground truth here.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Write a six-class activity dataset instead of a capture.
    #[arg(long)]
    dataset: bool,
    #[arg(long, default_value_t = 50)]
    per_class: usize,
    #[arg(long, default_value_t = 64)]
    time_steps: usize,
    #[arg(long, default_value_t = 1)]
    channels: usize,
}

#[derive(Debug, Args)]
struct PortArg {
    #[arg(long, env = PORT_ENV, default_value_t = DEFAULT_PORT)]
    port: u16,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[command(flatten)]
    port: PortArg,
    #[arg(long, default_value = "0.0.0.0")]
    host: String,
    #[arg(long)]
    store: PathBuf,
    /// Exit after the first client disconnects.
    #[arg(long)]
    once: bool,
    #[arg(long, default_value_t = 256)]
    capacity: usize,
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    store: PathBuf,
    /// Replay rate in packets per second; 0 sends unpaced.
    #[arg(long, default_value_t = 100.0)]
    rate: f64,
    /// Loopback port; 0 picks a free one.
    #[arg(long, default_value_t = 0)]
    port: u16,
    #[arg(long, default_value_t = 256)]
    capacity: usize,
}

#[derive(Debug, Args)]
struct ReplayArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    port: PortArg,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    /// Packets per second; 0 sends unpaced.
    #[arg(long, default_value_t = 100.0)]
    rate: f64,
}

#[derive(Debug, Args)]
struct ExportArgs {
    #[arg(long)]
    store: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

/// Series source: the amplitude column of a store, or a text file with one
/// value per line.
#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct SeriesArg {
    /// Amplitude log; its amplitude_db column is the series
    #[arg(long)]
    store: Option<PathBuf>,
    /// Text file with one value per line
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AnomalyTrainArgs {
    #[command(flatten)]
    series: SeriesArg,
    /// Library file to write.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 64)]
    segment_len: usize,
    #[arg(long, default_value_t = 32)]
    stride: usize,
    #[arg(long, default_value_t = 8)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct AnomalyDetectArgs {
    #[command(flatten)]
    series: SeriesArg,
    #[arg(long)]
    library: PathBuf,
    #[arg(long, default_value_t = 3.0)]
    threshold_c: f64,
    /// Per-sample report CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    Tree,
    Gnb,
    Lstm,
}

#[derive(Debug, Args)]
struct HarTrainArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = ModelArg::Tree)]
    model: ModelArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long, default_value_t = 2)]
    min_samples_split: usize,
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = classify::lstm::DEFAULT_HIDDEN)]
    hidden: usize,
    #[arg(long, default_value_t = 16)]
    batch: usize,
    #[arg(long, default_value_t = classify::lstm::DEFAULT_DROPOUT)]
    dropout: f64,
}

#[derive(Debug, Args)]
struct HarEvalArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    model_file: PathBuf,
    /// Fail unless the file holds this model type.
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
}

fn parse_event(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or("expected START:END")?;
    let a: f64 = a.trim().parse().map_err(|e| format!("{a}: {e}"))?;
    let b: f64 = b.trim().parse().map_err(|e| format!("{b}: {e}"))?;
    Ok((a, b))
}

/// Finds `--config` in `args` and appends `--key value` for every file entry
/// whose flag is not already present.
fn merge_config(args: Vec<OsString>) -> std::result::Result<Vec<OsString>, String> {
    let strs: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let path = strs.iter().enumerate().find_map(|(i, a)| {
        if a == "--config" {
            strs.get(i + 1).cloned()
        } else {
            a.strip_prefix("--config=").map(str::to_string)
        }
    });
    let Some(path) = path else { return Ok(args) };
    let text = fs::read_to_string(&path).map_err(|e| format!("config {path}: {e}"))?;
    let mut out = args;
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| format!("config {path}:{}: expected key=value", n + 1))?;
        let flag = format!("--{}", key.trim().replace('_', "-"));
        if strs.iter().any(|a| *a == flag || a.starts_with(&format!("{flag}="))) {
            continue;
        }
        match value.trim() {
            "true" => out.push(flag.into()),
            "false" => {}
            v => {
                out.push(flag.into());
                out.push(v.into());
            }
        }
    }
    Ok(out)
}

/// Runs the command line `args` (including the program name) and returns
/// the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match merge_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Synth(a) => cmd_synth(a),
        Command::Serve(a) => cmd_serve(a),
        Command::Ingest(a) => cmd_ingest(a),
        Command::Replay(a) => cmd_replay(a),
        Command::ExportPlot(a) => {
            let rows = store::export_csv(&a.store, &a.out)?;
            say!("exported {rows} rows to {}", a.out.display());
            Ok(())
        }
        Command::AnomalyTrain(a) => cmd_anomaly_train(a),
        Command::AnomalyDetect(a) => cmd_anomaly_detect(a),
        Command::HarTrain(a) => cmd_har_train(a),
        Command::HarEval(a) => cmd_har_eval(a),
    }
}

fn cmd_synth(a: SynthArgs) -> Result<()> {
    if a.dataset {
        let cfg = ActivityConfig {
            per_class: a.per_class,
            time_steps: a.time_steps,
            channels: a.channels,
            noise_sigma: a.noise.unwrap_or(ActivityConfig::default().noise_sigma),
            seed: a.seed,
        };
        if cfg.time_steps < classify::MIN_TIME_STEPS || cfg.channels == 0 || cfg.per_class == 0 {
            return Err("dataset needs --per-class >= 1, --channels >= 1 and --time-steps >= 8".into());
        }
        let data = synth::gen_activity_dataset(&cfg);
        write_dataset(&a.out, &data)?;
        say!("wrote {} samples to {}", data.len(), a.out.display());
        return Ok(());
    }
    let cfg = ChannelConfig {
        noise_sigma: a.noise.unwrap_or(ChannelConfig::default().noise_sigma),
        rate_hz: a.rate,
        seed: a.seed,
        ..Default::default()
    };
    let events: Vec<MotionEvent> = a
        .event
        .iter()
        .map(|&(s, e)| MotionEvent { depth: a.depth, doppler_hz: a.doppler, ..MotionEvent::new(s, e) })
        .collect();
    let stream = synth::gen_stream(&cfg, a.duration, &events)?;
    let n = write_capture(&a.out, stream.iter().map(|p| &p.packet))?;
    if let Some(labels) = &a.labels {
        synth::write_labels(labels, &stream)?;
    }
    say!("wrote {n} packets to {}", a.out.display());
    Ok(())
}

fn cmd_serve(a: ServeArgs) -> Result<()> {
    let mut recorder = Recorder::open(&a.store, DspConfig::default())?;
    let cfg = ServerConfig {
        queue_capacity: a.capacity.max(1),
        max_connections: a.once.then_some(1),
        ..Default::default()
    };
    let server = IngestServer::bind((a.host.as_str(), a.port.port), cfg)?;
    say!("listening on {}", server.local_addr()?);
    let mut failure = None;
    let stats = server.run(|p| {
        if failure.is_none() {
            if let Err(e) = recorder.record(&p) {
                failure = Some(e);
            }
        }
    });
    if let Some(e) = failure {
        return Err(e.into());
    }
    say!(
        "received {} decoded {} errors {} dropped {} stored {}",
        stats.received,
        stats.decoded,
        stats.decode_errors,
        stats.dropped,
        recorder.log().row_count()
    );
    Ok(())
}

fn cmd_ingest(a: IngestArgs) -> Result<()> {
    let packets = read_capture(&a.input)?;
    let mut recorder = Recorder::open(&a.store, DspConfig::default())?;
    let cfg = ServerConfig { queue_capacity: a.capacity.max(1), max_connections: Some(1), ..Default::default() };
    let server = IngestServer::bind(("127.0.0.1", a.port), cfg)?;
    let addr = server.local_addr()?;
    let rate = a.rate;
    let client = thread::spawn(move || transport::stream_packets(addr, packets, rate));
    let mut failure = None;
    let stats = server.run(|p| {
        if failure.is_none() {
            if let Err(e) = recorder.record(&p) {
                failure = Some(e);
            }
        }
    });
    let sent = client.join().map_err(|_| "replay thread panicked")??;
    if let Some(e) = failure {
        return Err(e.into());
    }
    say!(
        "sent {sent} received {} decoded {} errors {} dropped {} stored {}",
        stats.received,
        stats.decoded,
        stats.decode_errors,
        stats.dropped,
        recorder.log().row_count()
    );
    Ok(())
}

fn cmd_replay(a: ReplayArgs) -> Result<()> {
    let packets = read_capture(&a.input)?;
    let sent = transport::stream_packets((a.host.as_str(), a.port.port), packets, a.rate)?;
    say!("sent {sent} packets");
    Ok(())
}

fn load_series(s: &SeriesArg) -> Result<Vec<f64>> {
    if let Some(store) = &s.store {
        return Ok(store::read_log(store)?.iter().map(|r| r.amplitude_db).collect());
    }
    let path = s.input.as_deref().expect("clap enforces one source");
    read_series(path)
}

fn read_series(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| l.trim().parse::<f64>().map_err(|e| format!("{}:{}: {e}", path.display(), i + 1).into()))
        .collect()
}

fn cmd_anomaly_train(a: AnomalyTrainArgs) -> Result<()> {
    let series = load_series(&a.series)?;
    let cfg = SegmentConfig { segment_len: a.segment_len, stride: a.stride, k: a.k, seed: a.seed, ..Default::default() };
    let lib = ShapeLibrary::train(&series, &cfg)?;
    lib.save(&a.out)?;
    say!(
        "library of {} shapes from {} samples; training error mean {:.6} std {:.6}",
        lib.centroids.len(),
        series.len(),
        lib.error_mean,
        lib.error_std
    );
    Ok(())
}

fn cmd_anomaly_detect(a: AnomalyDetectArgs) -> Result<()> {
    let series = load_series(&a.series)?;
    let lib = ShapeLibrary::load(&a.library)?;
    let report = detect_anomalies(&series, &lib, a.threshold_c)?;
    if let Some(out) = &a.out {
        report.write_csv(out)?;
    }
    say!("threshold {:.6}; {} anomalous intervals", report.threshold, report.intervals.len());
    for (s, e) in &report.intervals {
        say!("{s}..={e}");
    }
    Ok(())
}

fn cmd_har_train(a: HarTrainArgs) -> Result<()> {
    let data = load_dataset(&a.input)?;
    if data.is_empty() {
        return Err(classify::ClassifyError::EmptyDataset.into());
    }
    let bytes = match a.model {
        ModelArg::Tree => {
            let (rows, _) = feature_matrix(&data, None)?;
            let params = TreeParams { max_depth: a.max_depth, min_samples_split: a.min_samples_split };
            let tree = train_tree(&rows, params)?;
            say!("tree depth {}", tree.depth());
            tree.to_bytes()
        }
        ModelArg::Gnb => {
            let (rows, _) = feature_matrix(&data, None)?;
            train_gnb(&rows)?.to_bytes()
        }
        ModelArg::Lstm => {
            let model = LstmModel::new(data[0].channels(), a.hidden, a.dropout, a.seed)?;
            let cfg = TrainConfig { epochs: a.epochs, lr: a.lr, batch: a.batch, seed: a.seed, ..Default::default() };
            let (model, report) = lstm_train(&data, model, &cfg)?;
            say!("initial loss {:.6}", report.initial_loss);
            for (i, l) in report.epoch_losses.iter().enumerate() {
                say!("epoch {} loss {l:.6}", i + 1);
            }
            model.to_bytes()
        }
    };
    fs::write(&a.out, bytes)?;
    say!("wrote {}", a.out.display());
    Ok(())
}

/// DWT depth that produced `n_features` features over `channels` channels.
fn levels_for(n_features: usize, channels: usize) -> Result<usize> {
    let per = n_features / channels;
    if per * channels != n_features || per % 3 != 0 || per < 6 {
        return Err(format!("model expects {n_features} features, incompatible with {channels} channels").into());
    }
    Ok(per / 3 - 1)
}

fn feature_predict<F>(data: &[ActivitySample], n_features: usize, predict: F) -> Result<classify::Evaluation>
where
    F: Fn(&[f64]) -> std::result::Result<classify::Activity, classify::ClassifyError>,
{
    let levels = levels_for(n_features, data[0].channels())?;
    let (rows, _) = feature_matrix(data, Some(levels))?;
    let pairs = rows.iter().map(|(x, y)| Ok((*y, predict(x)?))).collect::<Result<Vec<_>>>()?;
    Ok(classify::Evaluation::from_pairs(pairs)?)
}

fn kind_name(kind: ModelKind) -> &'static str {
    match kind {
        ModelKind::Tree => "tree",
        ModelKind::Gnb => "gnb",
        ModelKind::Lstm => "lstm",
    }
}

fn cmd_har_eval(a: HarEvalArgs) -> Result<()> {
    let data = load_dataset(&a.input)?;
    if data.is_empty() {
        return Err(classify::ClassifyError::EmptyDataset.into());
    }
    let bytes = fs::read(&a.model_file)?;
    let kind = sniff_model(&bytes).ok_or("unrecognized model file")?;
    let wanted = a.model.map(|m| match m {
        ModelArg::Tree => ModelKind::Tree,
        ModelArg::Gnb => ModelKind::Gnb,
        ModelArg::Lstm => ModelKind::Lstm,
    });
    if wanted.is_some_and(|w| w != kind) {
        return Err(format!("model file holds a {} model", kind_name(kind)).into());
    }
    let eval = match kind {
        ModelKind::Tree => {
            let m = TreeModel::from_bytes(&bytes)?;
            feature_predict(&data, m.n_features, |x| m.predict(x))?
        }
        ModelKind::Gnb => {
            let m = GnbModel::from_bytes(&bytes)?;
            feature_predict(&data, m.n_features, |x| m.predict(x))?
        }
        ModelKind::Lstm => {
            let m = LstmModel::from_bytes(&bytes)?;
            for s in &data {
                m.predict(s)?;
            }
            evaluate(|s| m.predict(s).expect("checked above"), &data)?
        }
    };
    say!("{eval}");
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn config_fills_missing_flags_only() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.conf");
        fs::write(&cfg, "# defaults\nrate = 50\nseed=9\nonce=true\ndataset=false\n").unwrap();
        let args = os(&["x", "synth", "--seed", "1", "--config", cfg.to_str().unwrap()]);
        let merged: Vec<String> = merge_config(args).unwrap().into_iter().map(|a| a.into_string().unwrap()).collect();
        assert_eq!(&merged[6..], &["--rate", "50", "--once"]);
    }

    #[test]
    fn levels_from_feature_count() {
        assert_eq!(levels_for(15, 1).unwrap(), 4);
        assert_eq!(levels_for(24, 2).unwrap(), 3);
        assert!(levels_for(16, 1).is_err());
    }

    #[test]
    fn event_syntax() {
        assert_eq!(parse_event("60:70").unwrap(), (60.0, 70.0));
        assert!(parse_event("60").is_err());
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run_cli(["csi-sentry", "frobnicate"]), 1);
        assert_eq!(run_cli(["csi-sentry", "synth"]), 1);
        assert_eq!(run_cli(["csi-sentry", "har-train", "--input", "a", "--out", "b", "--model", "svm"]), 1);
        assert_eq!(run_cli(["csi-sentry", "--help"]), 0);
    }

    #[test]
    fn runtime_errors_exit_two() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("missing.csv");
        let out = dir.path().join("out.csv");
        assert_eq!(run_cli(["csi-sentry", "export-plot", "--store", missing.to_str().unwrap(), "--out", out.to_str().unwrap()]), 2);
    }
}
