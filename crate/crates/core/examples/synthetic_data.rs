//! Writes the synthetic inputs the command line consumes: a framed packet
//! capture with ground-truth labels and a six-class activity dataset.
//!
//! ```text
//! cargo run --example synthetic_data -- OUT_DIR
//! ```

use std::path::PathBuf;

use csi_sentry::classify::{load_dataset, write_dataset};
use csi_sentry::synth::{gen_activity_dataset, gen_stream, write_labels, ActivityConfig, ChannelConfig, MotionEvent};
use csi_sentry::transport::{read_capture, write_capture};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "synthetic".into()));
    std::fs::create_dir_all(&out)?;

    let cfg = ChannelConfig { seed: 9, ..Default::default() };
    let stream = gen_stream(&cfg, 30.0, &[MotionEvent::new(10.0, 15.0), MotionEvent { depth: 0.3, ..MotionEvent::new(22.0, 24.0) }])?;
    let n = write_capture(&out.join("capture.bin"), stream.iter().map(|p| &p.packet))?;
    write_labels(&out.join("capture.labels"), &stream)?;
    let moving = stream.iter().filter(|p| p.in_motion).count();
    println!("capture.bin: {n} packets, {moving} in motion");
    assert_eq!(read_capture(&out.join("capture.bin"))?.len(), n);

    let data = gen_activity_dataset(&ActivityConfig { per_class: 20, channels: 2, seed: 4, ..Default::default() });
    write_dataset(&out.join("activities.txt"), &data)?;
    let back = load_dataset(&out.join("activities.txt"))?;
    println!("activities.txt: {} samples of {}x{}", back.len(), back[0].time_steps(), back[0].channels());
    Ok(())
}
