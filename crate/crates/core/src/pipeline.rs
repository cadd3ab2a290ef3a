//! Packet-to-store glue: amplitude tracking feeding a [`RecordLog`].

use std::path::Path;

use thiserror::Error;

use crate::dsp::{AmplitudeRecord, AmplitudeTracker, DspConfig, DspError};
use crate::store::{RecordLog, StoreError};
use crate::wire::CsiPacket;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Dsp(#[from] DspError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Appends one record per scalable packet. Reopening an existing log
/// continues its packet numbering.
#[derive(Debug)]
pub struct Recorder {
    tracker: AmplitudeTracker,
    log: RecordLog,
    rejected: u64,
}

impl Recorder {
    pub fn open(path: impl AsRef<Path>, cfg: DspConfig) -> Result<Self, PipelineError> {
        let log = RecordLog::open(path)?;
        let first = log.last_packet_id().map_or(1, |id| id + 1);
        let tracker = AmplitudeTracker::new(cfg)?.with_first_id(first);
        Ok(Self { tracker, log, rejected: 0 })
    }

    /// `Ok(None)` when the packet cannot be scaled (for example an all-zero
    /// CSI matrix); such packets are counted in [`rejected`](Self::rejected).
    pub fn record(&mut self, packet: &CsiPacket) -> Result<Option<AmplitudeRecord>, StoreError> {
        match self.tracker.process(packet) {
            Ok(rec) => {
                self.log.append(&rec)?;
                Ok(Some(rec))
            }
            Err(_) => {
                self.rejected += 1;
                Ok(None)
            }
        }
    }

    pub fn rejected(&self) -> u64 {
        self.rejected
    }

    pub fn log(&self) -> &RecordLog {
        &self.log
    }

    pub fn log_mut(&mut self) -> &mut RecordLog {
        &mut self.log
    }
}
