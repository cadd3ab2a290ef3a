//! Learns a shape library from a clean periodic trace, then flags bursts
//! that the library cannot reconstruct.

use csi_sentry::anomaly::{detect_anomalies, roc_auc, ShapeLibrary, SegmentConfig};
use csi_sentry::synth::{gen_periodic_trace, TraceConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (train, _) = gen_periodic_trace(&TraceConfig { seed: 1, ..Default::default() });
    let cfg = SegmentConfig { segment_len: 64, stride: 32, k: 8, seed: 2, ..Default::default() };
    let lib = ShapeLibrary::train(&train, &cfg)?;
    println!(
        "{} shapes of {} samples; training error {:.5} +- {:.5}",
        lib.centroids.len(),
        lib.segment_len(),
        lib.error_mean,
        lib.error_std
    );

    let bursts = vec![(900, 100), (2000, 160), (3300, 80)];
    let (test, labels) = gen_periodic_trace(&TraceConfig { seed: 3, transients: bursts.clone(), ..Default::default() });
    let report = detect_anomalies(&test, &lib, 3.0)?;
    println!("threshold {:.5}, {:.1}% of samples flagged", report.threshold, 100.0 * report.coverage());
    println!("injected: {bursts:?}");
    for (s, e) in &report.intervals {
        println!("flagged {s}..={e}");
    }

    let (scores, truth): (Vec<f64>, Vec<bool>) = report
        .error_series
        .iter()
        .zip(&report.valid)
        .zip(&labels)
        .filter(|((_, v), _)| **v)
        .map(|((e, _), l)| (*e, *l))
        .unzip();
    println!("sample-level ROC AUC {:.3}", roc_auc(&scores, &truth));
    Ok(())
}
