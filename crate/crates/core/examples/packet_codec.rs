//! Builds a CSI packet, encodes it to the 20-byte-header wire format and
//! decodes it back.

use csi_sentry::dsp::{amplitude_db, compute_scale, DspConfig};
use csi_sentry::synth::{gen_stream, ChannelConfig};
use csi_sentry::wire::{decode_packet, encode_packet, extract_subcarrier, HEADER_LEN};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ChannelConfig { ntx: 2, nrx: 3, seed: 7, ..Default::default() };
    let packet = gen_stream(&cfg, 0.01, &[])?.remove(0).packet;

    let bytes = encode_packet(&packet)?;
    println!("{} bytes on the wire ({HEADER_LEN} header + {} payload)", bytes.len(), bytes.len() - HEADER_LEN);
    println!("header: {:02x?}", &bytes[..HEADER_LEN]);

    let back = decode_packet(&bytes)?;
    assert_eq!(back, packet);
    let h = &back.header;
    println!("ntx {} nrx {} rssi {:?} noise {} dBm agc {}", h.ntx, h.nrx, h.rssi(), h.noise, h.agc);

    let sub0 = extract_subcarrier(&back, 0)?;
    println!("subcarrier 0 (rx x tx): {sub0:?}");
    println!("scale {:.4e}, amplitude {:.3} dB", compute_scale(h, &back.matrix)?, amplitude_db(&back, &DspConfig::default())?);

    // a truncated buffer is an error, never a panic
    println!("truncated: {}", decode_packet(&bytes[..50]).unwrap_err());
    Ok(())
}
