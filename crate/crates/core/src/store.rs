//! Append-only record log with range queries and CSV export.
//!
//! The log is a CSV file: a header line, then one line per
//! [`AmplitudeRecord`] in strictly increasing `packet_id` order. Floats are
//! written in shortest round-trip form so a reopened log is bit-identical to
//! what was appended. A final line without its newline is the residue of an
//! interrupted append; readers skip it and [`RecordLog::open`] cuts it off.

use std::fs::{File, OpenOptions};
use std::io::{self, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::dsp::AmplitudeRecord;

pub const CSV_HEADER: &str = "packet_id,timestamp_us,amplitude_db,amplitude_smoothed,variance";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("packet id {got} is not greater than last stored id {last}")]
    OutOfOrder { last: u64, got: u64 },
    #[error("bad range: t0={t0} > t1={t1}")]
    BadRange { t0: u64, t1: u64 },
    #[error("corrupt log at line {line}: {reason}")]
    Corrupt { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Writer handle on a record log file.
#[derive(Debug)]
pub struct RecordLog {
    path: PathBuf,
    file: File,
    rows: u64,
    last_id: Option<u64>,
    sync: bool,
}

impl RecordLog {
    /// Opens or creates the log at `path`, discarding a torn final line.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let path = path.as_ref().to_path_buf();
        let mut file = OpenOptions::new().read(true).write(true).create(true).truncate(false).open(&path)?;
        let mut text = Vec::new();
        file.read_to_end(&mut text)?;
        let scan = scan(&text)?;
        if scan.complete_len == 0 {
            // new file, or one torn inside its header
            file.set_len(0)?;
            file.seek(SeekFrom::Start(0))?;
            file.write_all(CSV_HEADER.as_bytes())?;
            file.write_all(b"\n")?;
        } else if scan.complete_len < text.len() {
            file.set_len(scan.complete_len as u64)?;
        }
        let (rows, last_id) = (scan.records.len() as u64, scan.records.last().map(|r| r.packet_id));
        let file = OpenOptions::new().append(true).open(&path)?;
        Ok(Self { path, file, rows, last_id, sync: false })
    }

    /// When set, every append is followed by an fsync.
    pub fn set_sync(&mut self, sync: bool) {
        self.sync = sync;
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn row_count(&self) -> u64 {
        self.rows
    }

    pub fn last_packet_id(&self) -> Option<u64> {
        self.last_id
    }

    /// Writes one row. The row is in the file (past any process crash) when
    /// this returns `Ok`.
    pub fn append(&mut self, rec: &AmplitudeRecord) -> Result<(), StoreError> {
        if let Some(last) = self.last_id {
            if rec.packet_id <= last {
                return Err(StoreError::OutOfOrder { last, got: rec.packet_id });
            }
        }
        self.file.write_all(format_exact(rec).as_bytes())?;
        if self.sync {
            self.file.sync_data()?;
        }
        self.rows += 1;
        self.last_id = Some(rec.packet_id);
        Ok(())
    }

    pub fn records(&self) -> Result<Vec<AmplitudeRecord>, StoreError> {
        read_log(&self.path)
    }

    /// Records with `t0 <= timestamp_us <= t1`, in packet id order.
    pub fn query_range(&self, t0: u64, t1: u64) -> Result<Vec<AmplitudeRecord>, StoreError> {
        query_range(&self.path, t0, t1)
    }

    pub fn export_csv(&self, out: impl AsRef<Path>) -> Result<usize, StoreError> {
        export_csv(&self.path, out)
    }
}

/// Reads every complete row of a log. Safe to call while a writer appends.
pub fn read_log(path: impl AsRef<Path>) -> Result<Vec<AmplitudeRecord>, StoreError> {
    let mut text = Vec::new();
    File::open(path)?.read_to_end(&mut text)?;
    if text.is_empty() {
        return Ok(Vec::new());
    }
    Ok(scan(&text)?.records)
}

pub fn query_range(path: impl AsRef<Path>, t0: u64, t1: u64) -> Result<Vec<AmplitudeRecord>, StoreError> {
    if t0 > t1 {
        return Err(StoreError::BadRange { t0, t1 });
    }
    Ok(read_log(path)?.into_iter().filter(|r| (t0..=t1).contains(&r.timestamp_us)).collect())
}

/// Writes the log as CSV with 6 significant digits. Returns the row count.
pub fn export_csv(log: impl AsRef<Path>, out: impl AsRef<Path>) -> Result<usize, StoreError> {
    let records = read_log(log)?;
    write_csv(&records, out)
}

pub fn write_csv(records: &[AmplitudeRecord], out: impl AsRef<Path>) -> Result<usize, StoreError> {
    let mut w = BufWriter::new(File::create(out)?);
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.packet_id,
            r.timestamp_us,
            format_sig6(r.amplitude_db),
            format_sig6(r.amplitude_smoothed),
            format_sig6(r.variance)
        )?;
    }
    w.flush()?;
    Ok(records.len())
}

/// Reads an exported CSV (or a log) back into records.
pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<AmplitudeRecord>, StoreError> {
    read_log(path)
}

fn format_exact(r: &AmplitudeRecord) -> String {
    format!(
        "{},{},{},{},{}\n",
        r.packet_id, r.timestamp_us, r.amplitude_db, r.amplitude_smoothed, r.variance
    )
}

/// Formats like C's `%g`: 6 significant digits, trailing zeros trimmed,
/// exponent form outside `1e-4 <= |x| < 1e6`.
pub fn format_sig6(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (5 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

struct Scan {
    records: Vec<AmplitudeRecord>,
    /// Byte length of the header plus every complete row.
    complete_len: usize,
}

fn scan(text: &[u8]) -> Result<Scan, StoreError> {
    let mut records = Vec::new();
    let mut pos = 0;
    let mut line_no = 0;
    let mut complete_len = 0;
    while pos < text.len() {
        let Some(nl) = text[pos..].iter().position(|&b| b == b'\n') else {
            // torn tail
            break;
        };
        let line = &text[pos..pos + nl];
        line_no += 1;
        let line = std::str::from_utf8(line).map_err(|_| StoreError::Corrupt { line: line_no, reason: "invalid UTF-8".into() })?;
        let line = line.trim_end_matches('\r');
        if line_no == 1 {
            if line != CSV_HEADER {
                return Err(StoreError::Corrupt { line: 1, reason: format!("unexpected header {line:?}") });
            }
        } else {
            let rec = parse_row(line).map_err(|reason| StoreError::Corrupt { line: line_no, reason })?;
            if let Some(prev) = records.last().map(|r: &AmplitudeRecord| r.packet_id) {
                if rec.packet_id <= prev {
                    return Err(StoreError::Corrupt { line: line_no, reason: "packet ids not increasing".into() });
                }
            }
            records.push(rec);
        }
        pos += nl + 1;
        complete_len = pos;
    }
    Ok(Scan { records, complete_len })
}

fn parse_row(line: &str) -> Result<AmplitudeRecord, String> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 5 {
        return Err(format!("expected 5 fields, found {}", fields.len()));
    }
    let int = |s: &str| s.parse::<u64>().map_err(|e| format!("{s:?}: {e}"));
    let float = |s: &str| s.parse::<f64>().map_err(|e| format!("{s:?}: {e}"));
    Ok(AmplitudeRecord {
        packet_id: int(fields[0])?,
        timestamp_us: int(fields[1])?,
        amplitude_db: float(fields[2])?,
        amplitude_smoothed: float(fields[3])?,
        variance: float(fields[4])?,
    })
}
