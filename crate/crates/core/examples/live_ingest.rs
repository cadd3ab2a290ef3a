//! Runs the TCP ingest server and a paced replay client in one process and
//! records every packet into a store.
//!
//! ```text
//! cargo run --release --example live_ingest -- [seconds] [rate_hz]
//! ```

use std::thread;
use std::time::Instant;

use csi_sentry::dsp::DspConfig;
use csi_sentry::pipeline::Recorder;
use csi_sentry::synth::{ChannelConfig, MotionEvent, StreamGenerator};
use csi_sentry::transport::{stream_packets, IngestServer, ServerConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let seconds: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(5.0);
    let rate: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(100.0);

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("live.log");
    let mut recorder = Recorder::open(&path, DspConfig::default())?;

    let server = IngestServer::bind("127.0.0.1:0", ServerConfig { max_connections: Some(1), ..Default::default() })?;
    let addr = server.local_addr()?;
    println!("listening on {addr}");

    let cfg = ChannelConfig { rate_hz: rate, seed: 1, ..Default::default() };
    let events = [MotionEvent::new(seconds / 2.0, seconds / 2.0 + 1.0)];
    let packets = StreamGenerator::new(&cfg, seconds, &events)?.map(|p| p.packet);
    let start = Instant::now();
    let client = thread::spawn(move || stream_packets(addr, packets, rate));

    let stats = server.run(|p| {
        if let Some(rec) = recorder.record(&p).expect("store append") {
            if rec.packet_id % rate as u64 == 0 {
                println!("t={:>5.2}s  amplitude {:>8.3} dB  variance {:.4}", rec.timestamp_us as f64 / 1e6, rec.amplitude_db, rec.variance);
            }
        }
    });
    let sent = client.join().expect("client thread")?;
    println!("sent {sent} in {:.2?}; {stats:?}", start.elapsed());
    println!("{} rows in {}", recorder.log().row_count(), path.display());
    Ok(())
}
