//! Writes amplitude records to the append-only log, queries a time range,
//! survives a torn tail and exports plottable CSV.

use std::io::Write;

use csi_sentry::dsp::DspConfig;
use csi_sentry::pipeline::Recorder;
use csi_sentry::store::{self, RecordLog};
use csi_sentry::synth::{gen_stream, ChannelConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let log_path = dir.path().join("amplitude.log");

    let mut recorder = Recorder::open(&log_path, DspConfig::default())?;
    for p in gen_stream(&ChannelConfig::default(), 10.0, &[])? {
        recorder.record(&p.packet)?;
    }
    println!("{} rows, last id {:?}", recorder.log().row_count(), recorder.log().last_packet_id());
    drop(recorder);

    let window = store::query_range(&log_path, 2_000_000, 2_050_000)?;
    for r in &window {
        println!("{:>4} {:>8} {:>10.4} {:>10.4} {:.6}", r.packet_id, r.timestamp_us, r.amplitude_db, r.amplitude_smoothed, r.variance);
    }

    // simulate a crash mid-write, then reopen
    std::fs::OpenOptions::new().append(true).open(&log_path)?.write_all(b"1001,10010000,-3")?;
    let log = RecordLog::open(&log_path)?;
    println!("after reopen: {} rows", log.row_count());

    let csv = dir.path().join("plot.csv");
    let rows = log.export_csv(&csv)?;
    let text = std::fs::read_to_string(&csv)?;
    println!("exported {rows} rows; first lines:");
    for line in text.lines().take(3) {
        println!("  {line}");
    }
    Ok(())
}
