//! Line-oriented dataset files.
//!
//! ```text
//! walk|0.12,0.40;0.15,0.38;...
//! ```
//!
//! Label, `|`, then time steps separated by `;`, each a comma-separated list
//! of channel values. Blank lines and lines starting with `#` are skipped.
//! Series length may vary between lines; the channel count may not.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{Activity, ActivitySample, ClassifyError};

pub fn load_dataset(path: &Path) -> Result<Vec<ActivitySample>, ClassifyError> {
    parse_dataset(&std::fs::read_to_string(path)?)
}

pub fn parse_dataset(text: &str) -> Result<Vec<ActivitySample>, ClassifyError> {
    let mut out = Vec::new();
    let mut channels: Option<usize> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let malformed = |reason: String| ClassifyError::MalformedLine { line: line_no, reason };
        let (label, body) = line.split_once('|').ok_or_else(|| malformed("missing '|'".into()))?;
        let label: Activity = label
            .trim()
            .parse()
            .map_err(|label| ClassifyError::UnknownLabel { line: line_no, label })?;
        let series = body
            .split(';')
            .map(|step| {
                step.split(',')
                    .map(|v| v.trim().parse::<f64>().map_err(|e| malformed(format!("{v:?}: {e}"))))
                    .collect::<Result<Vec<f64>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        let f = series[0].len();
        if let Some(step) = series.iter().position(|s| s.len() != f) {
            return Err(malformed(format!("time step {step} has {} channels, first has {f}", series[step].len())));
        }
        match channels {
            Some(expected) if expected != f => {
                return Err(ClassifyError::InconsistentF { line: line_no, expected, found: f })
            }
            _ => channels = Some(f),
        }
        let sample = ActivitySample::new(label, series).map_err(|e| malformed(e.to_string()))?;
        out.push(sample);
    }
    Ok(out)
}

pub fn write_dataset(path: &Path, samples: &[ActivitySample]) -> Result<(), ClassifyError> {
    let mut w = BufWriter::new(File::create(path)?);
    for s in samples {
        write!(w, "{}|", s.label)?;
        for (t, row) in s.series().iter().enumerate() {
            if t > 0 {
                w.write_all(b";")?;
            }
            for (f, v) in row.iter().enumerate() {
                if f > 0 {
                    w.write_all(b",")?;
                }
                write!(w, "{v}")?;
            }
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}
