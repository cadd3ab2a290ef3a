//! Length-prefixed framing for packets on a byte stream.
//!
//! Each frame is a big-endian `u16` body length followed by one encoded
//! packet. The same framing is used for capture files on disk.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::wire::{self, CsiPacket, WireError, HEADER_LEN};

/// Frame prefix size in bytes.
pub const PREFIX_LEN: usize = 2;

/// Encodes `packet` as one frame appended to `out`.
pub fn encode_frame(packet: &CsiPacket, out: &mut Vec<u8>) -> Result<(), WireError> {
    let start = out.len();
    out.extend_from_slice(&[0, 0]);
    wire::encode_packet_into(packet, out)?;
    let body = (out.len() - start - PREFIX_LEN) as u16;
    out[start..start + PREFIX_LEN].copy_from_slice(&body.to_be_bytes());
    Ok(())
}

/// One item pulled out of a [`FrameDecoder`].
#[derive(Debug, PartialEq, Eq)]
pub enum FrameEvent {
    /// A complete frame body.
    Body(Vec<u8>),
    /// The prefix announced a body too short to hold a packet header; the
    /// stream can no longer be trusted.
    Malformed(u16),
}

/// Incremental frame splitter for a byte stream that arrives in pieces.
#[derive(Debug, Default)]
pub struct FrameDecoder {
    buf: Vec<u8>,
    start: usize,
}

impl FrameDecoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn extend(&mut self, bytes: &[u8]) {
        if self.start > 0 && self.start == self.buf.len() {
            self.buf.clear();
            self.start = 0;
        }
        self.buf.extend_from_slice(bytes);
    }

    /// Next complete frame, or `None` if more bytes are needed.
    pub fn next_frame(&mut self) -> Option<FrameEvent> {
        let avail = &self.buf[self.start..];
        if avail.len() < PREFIX_LEN {
            return None;
        }
        let len = u16::from_be_bytes([avail[0], avail[1]]);
        if (len as usize) < HEADER_LEN {
            return Some(FrameEvent::Malformed(len));
        }
        let total = PREFIX_LEN + len as usize;
        if avail.len() < total {
            if self.start > 0 {
                self.buf.drain(..self.start);
                self.start = 0;
            }
            return None;
        }
        let body = avail[PREFIX_LEN..total].to_vec();
        self.start += total;
        Some(FrameEvent::Body(body))
    }

    /// Bytes received but not yet returned as a frame.
    pub fn pending(&self) -> usize {
        self.buf.len() - self.start
    }
}

/// Writes packets as a framed capture file. Returns the packet count.
pub fn write_capture<'a, I>(path: &Path, packets: I) -> io::Result<usize>
where
    I: IntoIterator<Item = &'a CsiPacket>,
{
    let mut w = BufWriter::new(File::create(path)?);
    let mut buf = Vec::with_capacity(600);
    let mut n = 0;
    for p in packets {
        buf.clear();
        encode_frame(p, &mut buf).map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e))?;
        w.write_all(&buf)?;
        n += 1;
    }
    w.flush()?;
    Ok(n)
}

/// Reads every packet from a framed capture file.
pub fn read_capture(path: &Path) -> io::Result<Vec<CsiPacket>> {
    let mut bytes = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
    let mut dec = FrameDecoder::new();
    dec.extend(&bytes);
    let mut out = Vec::new();
    while let Some(ev) = dec.next_frame() {
        match ev {
            FrameEvent::Body(body) => out.push(
                wire::decode_packet(&body).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?,
            ),
            FrameEvent::Malformed(len) => {
                return Err(io::Error::new(
                    io::ErrorKind::InvalidData,
                    format!("malformed frame prefix {len} at packet {}", out.len()),
                ))
            }
        }
    }
    if dec.pending() > 0 {
        return Err(io::Error::new(io::ErrorKind::UnexpectedEof, "capture ends mid-frame"));
    }
    Ok(out)
}
