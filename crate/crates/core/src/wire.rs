//! Binary codec for CSI measurement records.
//!
//! Every record is a 20-byte header followed by the CSI payload. Multi-byte
//! fields are little-endian, as the receiving NIC writes them.
//!
//! ```text
//! offset  size  field
//!  0..4     4   timestamp    u32  microsecond tick
//!  4..6     2   bfee_count   u16
//!  6        1   reserved     (written as 0)
//!  7        1   nrx          u8   1..=3
//!  8        1   ntx          u8   1..=3
//!  9        1   rssi_a       u8
//! 10        1   rssi_b       u8
//! 11        1   rssi_c       u8
//! 12        1   noise        i8
//! 13        1   agc          u8
//! 14        1   antenna_sel  u8
//! 15        1   reserved     (written as 0)
//! 16..18    2   length       u16  == 2 * 30 * ntx * nrx
//! 18..20    2   rate         u16
//! 20..      n   payload
//! ```
//!
//! The payload holds `30 * ntx * nrx` complex entries, ordered subcarrier
//! first, then transmit stream, then receive antenna. Each entry is a pair of
//! signed bytes `(re, im)`.

use num_complex::Complex;
use thiserror::Error;

/// Subcarriers reported per measurement.
pub const SUBCARRIERS: usize = 30;
/// Fixed header size in bytes.
pub const HEADER_LEN: usize = 20;
/// Largest antenna count on either side of the link.
pub const MAX_ANTENNAS: u8 = 3;

/// Raw CSI entry as carried on the wire.
pub type RawEntry = Complex<i8>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum WireError {
    #[error("truncated record: need {needed} bytes, have {available}")]
    Truncated { needed: usize, available: usize },
    #[error("payload length {found} does not match antenna layout (expected {expected})")]
    LengthMismatch { expected: usize, found: usize },
    #[error("antenna dimensions out of range: ntx={ntx}, nrx={nrx}")]
    BadDims { ntx: u8, nrx: u8 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("subcarrier index {0} out of range (0..30)")]
pub struct IndexOutOfRange(pub usize);

/// Payload byte count for a given antenna layout.
pub fn payload_len(ntx: u8, nrx: u8) -> usize {
    2 * SUBCARRIERS * ntx as usize * nrx as usize
}

fn dims_ok(ntx: u8, nrx: u8) -> bool {
    (1..=MAX_ANTENNAS).contains(&ntx) && (1..=MAX_ANTENNAS).contains(&nrx)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CsiHeader {
    pub timestamp: u32,
    pub bfee_count: u16,
    pub nrx: u8,
    pub ntx: u8,
    pub rssi_a: u8,
    pub rssi_b: u8,
    pub rssi_c: u8,
    /// Noise floor in dBm; the only signed header field.
    pub noise: i8,
    pub agc: u8,
    pub antenna_sel: u8,
    pub length: u16,
    pub rate: u16,
}

impl CsiHeader {
    /// RSSI values of all three receive chains, zero meaning unused.
    pub fn rssi(&self) -> [u8; 3] {
        [self.rssi_a, self.rssi_b, self.rssi_c]
    }
}

/// Complex channel matrix: 30 subcarriers of `ntx x nrx` entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsiMatrix {
    ntx: u8,
    nrx: u8,
    entries: Vec<RawEntry>,
}

impl CsiMatrix {
    /// Zero-filled matrix for the given layout.
    pub fn zeros(ntx: u8, nrx: u8) -> Result<Self, WireError> {
        if !dims_ok(ntx, nrx) {
            return Err(WireError::BadDims { ntx, nrx });
        }
        let n = SUBCARRIERS * ntx as usize * nrx as usize;
        Ok(Self { ntx, nrx, entries: vec![Complex::new(0, 0); n] })
    }

    /// Builds a matrix from entries in wire order (subcarrier, tx, rx).
    pub fn from_entries(ntx: u8, nrx: u8, entries: Vec<RawEntry>) -> Result<Self, WireError> {
        if !dims_ok(ntx, nrx) {
            return Err(WireError::BadDims { ntx, nrx });
        }
        let expected = SUBCARRIERS * ntx as usize * nrx as usize;
        if entries.len() != expected {
            return Err(WireError::LengthMismatch { expected: 2 * expected, found: 2 * entries.len() });
        }
        Ok(Self { ntx, nrx, entries })
    }

    pub fn ntx(&self) -> u8 {
        self.ntx
    }

    pub fn nrx(&self) -> u8 {
        self.nrx
    }

    /// All entries in wire order.
    pub fn entries(&self) -> &[RawEntry] {
        &self.entries
    }

    fn index(&self, k: usize, tx: usize, rx: usize) -> usize {
        let (ntx, nrx) = (self.ntx as usize, self.nrx as usize);
        debug_assert!(k < SUBCARRIERS && tx < ntx && rx < nrx);
        k * ntx * nrx + tx * nrx + rx
    }

    pub fn get(&self, k: usize, tx: usize, rx: usize) -> RawEntry {
        self.entries[self.index(k, tx, rx)]
    }

    pub fn set(&mut self, k: usize, tx: usize, rx: usize, value: RawEntry) {
        let i = self.index(k, tx, rx);
        self.entries[i] = value;
    }

    /// Entries of one subcarrier, still in (tx, rx) order.
    pub fn subcarrier_entries(&self, k: usize) -> &[RawEntry] {
        let per = self.ntx as usize * self.nrx as usize;
        &self.entries[k * per..(k + 1) * per]
    }

    /// Serialized payload size in bytes.
    pub fn byte_len(&self) -> usize {
        2 * self.entries.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsiPacket {
    pub header: CsiHeader,
    pub matrix: CsiMatrix,
}

impl CsiPacket {
    /// Pairs a header with a matrix, filling in the header's layout fields.
    pub fn new(mut header: CsiHeader, matrix: CsiMatrix) -> Self {
        header.ntx = matrix.ntx;
        header.nrx = matrix.nrx;
        header.length = matrix.byte_len() as u16;
        Self { header, matrix }
    }

    /// Encoded size, header included.
    pub fn wire_len(&self) -> usize {
        HEADER_LEN + self.matrix.byte_len()
    }
}

/// Decodes one record. Bytes past `20 + length` are ignored.
pub fn decode_packet(bytes: &[u8]) -> Result<CsiPacket, WireError> {
    if bytes.len() < HEADER_LEN {
        return Err(WireError::Truncated { needed: HEADER_LEN, available: bytes.len() });
    }
    let u16_at = |i: usize| u16::from_le_bytes([bytes[i], bytes[i + 1]]);
    let header = CsiHeader {
        timestamp: u32::from_le_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]),
        bfee_count: u16_at(4),
        nrx: bytes[7],
        ntx: bytes[8],
        rssi_a: bytes[9],
        rssi_b: bytes[10],
        rssi_c: bytes[11],
        noise: bytes[12] as i8,
        agc: bytes[13],
        antenna_sel: bytes[14],
        length: u16_at(16),
        rate: u16_at(18),
    };
    if !dims_ok(header.ntx, header.nrx) {
        return Err(WireError::BadDims { ntx: header.ntx, nrx: header.nrx });
    }
    let expected = payload_len(header.ntx, header.nrx);
    if header.length as usize != expected {
        return Err(WireError::LengthMismatch { expected, found: header.length as usize });
    }
    let needed = HEADER_LEN + expected;
    if bytes.len() < needed {
        return Err(WireError::Truncated { needed, available: bytes.len() });
    }
    let entries = bytes[HEADER_LEN..needed]
        .chunks_exact(2)
        .map(|pair| Complex::new(pair[0] as i8, pair[1] as i8))
        .collect();
    let matrix = CsiMatrix { ntx: header.ntx, nrx: header.nrx, entries };
    Ok(CsiPacket { header, matrix })
}

/// Encodes one record into a fresh buffer.
pub fn encode_packet(packet: &CsiPacket) -> Result<Vec<u8>, WireError> {
    let mut out = Vec::with_capacity(packet.wire_len());
    encode_packet_into(packet, &mut out)?;
    Ok(out)
}

/// Appends the encoded record to `out`.
pub fn encode_packet_into(packet: &CsiPacket, out: &mut Vec<u8>) -> Result<(), WireError> {
    let h = &packet.header;
    let m = &packet.matrix;
    if !dims_ok(h.ntx, h.nrx) {
        return Err(WireError::BadDims { ntx: h.ntx, nrx: h.nrx });
    }
    if h.ntx != m.ntx || h.nrx != m.nrx {
        return Err(WireError::BadDims { ntx: m.ntx, nrx: m.nrx });
    }
    let expected = payload_len(h.ntx, h.nrx);
    if h.length as usize != expected || m.byte_len() != expected {
        return Err(WireError::LengthMismatch { expected, found: h.length as usize });
    }
    out.reserve(HEADER_LEN + expected);
    out.extend_from_slice(&h.timestamp.to_le_bytes());
    out.extend_from_slice(&h.bfee_count.to_le_bytes());
    out.push(0);
    out.push(h.nrx);
    out.push(h.ntx);
    out.push(h.rssi_a);
    out.push(h.rssi_b);
    out.push(h.rssi_c);
    out.push(h.noise as u8);
    out.push(h.agc);
    out.push(h.antenna_sel);
    out.push(0);
    out.extend_from_slice(&h.length.to_le_bytes());
    out.extend_from_slice(&h.rate.to_le_bytes());
    for e in &m.entries {
        out.push(e.re as u8);
        out.push(e.im as u8);
    }
    Ok(())
}

/// The `ntx x nrx` slice for subcarrier `k`, indexed `[tx][rx]`.
pub fn extract_subcarrier(packet: &CsiPacket, k: usize) -> Result<Vec<Vec<RawEntry>>, IndexOutOfRange> {
    if k >= SUBCARRIERS {
        return Err(IndexOutOfRange(k));
    }
    let nrx = packet.matrix.nrx as usize;
    Ok(packet
        .matrix
        .subcarrier_entries(k)
        .chunks_exact(nrx)
        .map(<[RawEntry]>::to_vec)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn header(ntx: u8, nrx: u8) -> CsiHeader {
        CsiHeader {
            timestamp: 0xDEAD_BEEF,
            bfee_count: 513,
            nrx,
            ntx,
            rssi_a: 30,
            rssi_b: 31,
            rssi_c: 0,
            noise: -92,
            agc: 17,
            antenna_sel: 0b00_10_01_00,
            length: payload_len(ntx, nrx) as u16,
            rate: 0x1c,
        }
    }

    fn counting_packet(ntx: u8, nrx: u8) -> CsiPacket {
        let n = SUBCARRIERS * ntx as usize * nrx as usize;
        let entries = (0..n).map(|i| Complex::new(i as i8, (i as i8).wrapping_neg())).collect();
        CsiPacket::new(header(ntx, nrx), CsiMatrix::from_entries(ntx, nrx, entries).unwrap())
    }

    #[test]
    fn decodes_full_three_by_three_record() {
        let mut buf = vec![0u8; 560];
        buf[7] = 3;
        buf[8] = 3;
        buf[16..18].copy_from_slice(&540u16.to_le_bytes());
        let p = decode_packet(&buf).unwrap();
        assert_eq!(p.matrix.entries().len(), 30 * 3 * 3);
        assert_eq!((p.header.ntx, p.header.nrx, p.header.length), (3, 3, 540));
    }

    #[test]
    fn header_fields_land_on_canonical_offsets() {
        let p = counting_packet(2, 3);
        let bytes = encode_packet(&p).unwrap();
        assert_eq!(&bytes[0..4], &[0xEF, 0xBE, 0xAD, 0xDE]);
        assert_eq!(&bytes[4..6], &[0x01, 0x02]);
        assert_eq!(bytes[6], 0);
        assert_eq!(bytes[7], 3);
        assert_eq!(bytes[8], 2);
        assert_eq!(&bytes[9..12], &[30, 31, 0]);
        assert_eq!(bytes[12], (-92i8) as u8);
        assert_eq!(bytes[13], 17);
        assert_eq!(bytes[14], 0b00_10_01_00);
        assert_eq!(bytes[15], 0);
        assert_eq!(&bytes[16..18], &360u16.to_le_bytes());
        assert_eq!(&bytes[18..20], &[0x1c, 0x00]);
        // entry 1 is (1, -1)
        assert_eq!(&bytes[22..24], &[1, 0xFF]);
    }

    #[test]
    fn length_mismatch_reports_expected_size() {
        let mut buf = vec![0u8; 600];
        buf[7] = 2;
        buf[8] = 2;
        buf[16..18].copy_from_slice(&540u16.to_le_bytes());
        assert_eq!(
            decode_packet(&buf),
            Err(WireError::LengthMismatch { expected: 240, found: 540 })
        );
    }

    #[test]
    fn short_buffers_are_truncated() {
        assert!(matches!(decode_packet(&[0u8; 19]), Err(WireError::Truncated { .. })));
        let bytes = encode_packet(&counting_packet(1, 1)).unwrap();
        assert_eq!(
            decode_packet(&bytes[..79]),
            Err(WireError::Truncated { needed: 80, available: 79 })
        );
    }

    #[test]
    fn bad_dims_on_decode() {
        let mut buf = vec![0u8; 80];
        buf[7] = 4;
        buf[8] = 1;
        assert_eq!(decode_packet(&buf), Err(WireError::BadDims { ntx: 1, nrx: 4 }));
    }

    #[test]
    fn minimal_packet_is_eighty_bytes() {
        let bytes = encode_packet(&counting_packet(1, 1)).unwrap();
        assert_eq!(bytes.len(), 80);
    }

    #[test]
    fn encode_rejects_zero_streams() {
        let mut p = counting_packet(1, 1);
        p.header.ntx = 0;
        assert_eq!(encode_packet(&p), Err(WireError::BadDims { ntx: 0, nrx: 1 }));
    }

    #[test]
    fn reserved_bytes_are_ignored_on_decode() {
        let p = counting_packet(1, 2);
        let mut bytes = encode_packet(&p).unwrap();
        bytes[6] = 0xAA;
        bytes[15] = 0x55;
        assert_eq!(decode_packet(&bytes).unwrap(), p);
    }

    #[test]
    fn extract_subcarrier_bounds_and_values() {
        let mut m = CsiMatrix::zeros(2, 3).unwrap();
        for tx in 0..2 {
            for rx in 0..3 {
                m.set(0, tx, rx, Complex::new(1, 0));
            }
        }
        let p = CsiPacket::new(header(2, 3), m);
        let slice = extract_subcarrier(&p, 0).unwrap();
        assert_eq!(slice, vec![vec![Complex::new(1, 0); 3]; 2]);
        assert_eq!(extract_subcarrier(&p, 30), Err(IndexOutOfRange(30)));
        assert!(extract_subcarrier(&p, 29).is_ok());
    }

    fn arb_packet() -> impl Strategy<Value = CsiPacket> {
        (1u8..=3, 1u8..=3, any::<[u8; 20]>())
            .prop_flat_map(|(ntx, nrx, hdr)| {
                let n = SUBCARRIERS * ntx as usize * nrx as usize;
                (Just((ntx, nrx, hdr)), prop::collection::vec(any::<(i8, i8)>(), n))
            })
            .prop_map(|((ntx, nrx, hdr), pairs)| {
                let header = CsiHeader {
                    timestamp: u32::from_le_bytes([hdr[0], hdr[1], hdr[2], hdr[3]]),
                    bfee_count: u16::from_le_bytes([hdr[4], hdr[5]]),
                    rssi_a: hdr[6],
                    rssi_b: hdr[7],
                    rssi_c: hdr[8],
                    noise: hdr[9] as i8,
                    agc: hdr[10],
                    antenna_sel: hdr[11],
                    rate: u16::from_le_bytes([hdr[12], hdr[13]]),
                    ..CsiHeader::default()
                };
                let entries = pairs.into_iter().map(|(re, im)| Complex::new(re, im)).collect();
                CsiPacket::new(header, CsiMatrix::from_entries(ntx, nrx, entries).unwrap())
            })
    }

    proptest! {
        #[test]
        fn round_trip_is_identity(p in arb_packet()) {
            let bytes = encode_packet(&p).unwrap();
            prop_assert_eq!(bytes.len(), HEADER_LEN + payload_len(p.header.ntx, p.header.nrx));
            prop_assert_eq!(decode_packet(&bytes).unwrap(), p);
        }

        #[test]
        fn subcarrier_slice_matches_byte_offsets(p in arb_packet(), k in 0usize..30) {
            let bytes = encode_packet(&p).unwrap();
            let (ntx, nrx) = (p.header.ntx as usize, p.header.nrx as usize);
            let slice = extract_subcarrier(&p, k).unwrap();
            for t in 0..ntx {
                for r in 0..nrx {
                    let off = HEADER_LEN + 2 * (k * ntx * nrx + t * nrx + r);
                    let want = Complex::new(bytes[off] as i8, bytes[off + 1] as i8);
                    prop_assert_eq!(slice[t][r], want);
                }
            }
        }

        #[test]
        fn decoder_is_total(bytes in prop::collection::vec(any::<u8>(), 0..700)) {
            match decode_packet(&bytes) {
                Ok(p) => prop_assert!(bytes.len() >= p.wire_len()),
                Err(WireError::Truncated { .. } | WireError::LengthMismatch { .. } | WireError::BadDims { .. }) => {}
            }
        }
    }
}
