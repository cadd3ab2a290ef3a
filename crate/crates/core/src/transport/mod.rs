//! TCP ingest: framing, a bounded FIFO between socket reader and consumer,
//! the single-client server and the paced replay client.
//!
//! Wire format on the socket: `[u16 big-endian length][packet bytes]`,
//! repeated. The packet itself keeps the little-endian layout of
//! [`crate::wire`].

mod client;
pub mod frame;
pub mod queue;
mod server;

use std::io;

use thiserror::Error;

pub use client::stream_packets;
pub use frame::{encode_frame, read_capture, write_capture, FrameDecoder, FrameEvent};
pub use queue::{FifoQueue, QueueError};
pub use server::{run_ingest_server, IngestServer, IngestStats, OverflowPolicy, ServerConfig, ShutdownHandle};

use crate::wire::WireError;

/// Default listening port.
pub const DEFAULT_PORT: u16 = 5501;
/// Environment variable that overrides [`DEFAULT_PORT`].
pub const PORT_ENV: &str = "CSI_SENTRY_PORT";

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("failed to bind listener: {0}")]
    Bind(#[source] io::Error),
    #[error("failed to connect: {0}")]
    Connect(#[source] io::Error),
    #[error("connection lost after {sent} packets: {source}")]
    ConnectionLost {
        sent: u64,
        #[source]
        source: io::Error,
    },
    #[error("cannot encode packet: {0}")]
    Encode(#[source] WireError),
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Port from `CSI_SENTRY_PORT`, else [`DEFAULT_PORT`].
pub fn default_port() -> u16 {
    std::env::var(PORT_ENV).ok().and_then(|v| v.trim().parse().ok()).unwrap_or(DEFAULT_PORT)
}
