//! Detects a simulated walk-through from windowed amplitude variance.

use csi_sentry::dsp::{median, motion_threshold, AmplitudeTracker, DspConfig};
use csi_sentry::synth::{ChannelConfig, MotionEvent, StreamGenerator};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ChannelConfig { seed: 3, ..Default::default() };
    let event = MotionEvent::new(60.0, 70.0);
    let mut tracker = AmplitudeTracker::new(DspConfig::default())?;
    let mut variance = Vec::new();
    let mut truth = Vec::new();
    for p in StreamGenerator::new(&cfg, 120.0, &[event])? {
        variance.push(tracker.process(&p.packet)?.variance);
        truth.push(p.in_motion);
    }

    // calibrate on the first 30 s, which contain no motion
    let threshold = motion_threshold(&variance[19..3000], 5.0);
    let flagged: Vec<bool> = variance.iter().map(|&v| v > threshold).collect();

    let inside: Vec<f64> = variance.iter().zip(&truth).filter(|(_, &m)| m).map(|(v, _)| *v).collect();
    let outside: Vec<f64> = variance[19..].iter().zip(&truth[19..]).filter(|(_, &m)| !m).map(|(v, _)| *v).collect();
    println!("median variance: still {:.4}, moving {:.4}", median(&outside), median(&inside));
    println!("threshold {threshold:.4}");

    let onset = flagged.iter().skip(3000).position(|&f| f).map(|i| (i + 3000) as f64 / cfg.rate_hz);
    println!("first detection at {onset:?} s (event starts at {} s)", event.t_start);

    let hits = flagged.iter().zip(&truth).filter(|(f, t)| **f && **t).count();
    let false_alarms = flagged.iter().zip(&truth).skip(3000).filter(|(f, t)| **f && !**t).count();
    println!("{hits} of {} motion samples flagged, {false_alarms} false alarms after calibration", inside.len());

    for second in (55..75).step_by(2) {
        let i = second * cfg.rate_hz as usize;
        let bar = "#".repeat(((variance[i] / threshold) * 10.0).min(60.0) as usize);
        println!("{second:>3}s {bar}");
    }
    Ok(())
}
