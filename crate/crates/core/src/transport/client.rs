use std::io::Write;
use std::net::{TcpStream, ToSocketAddrs};
use std::thread;
use std::time::{Duration, Instant};

use super::frame::encode_frame;
use super::TransportError;
use crate::wire::CsiPacket;

/// Sends each packet as one frame, paced at `rate_hz`.
///
/// Packet `i` leaves at `start + i / rate_hz` and the call returns no earlier
/// than `start + n / rate_hz`, so `n` packets occupy `n / rate_hz` seconds.
/// A non-positive or non-finite rate sends as fast as the socket allows.
pub fn stream_packets<A, I>(endpoint: A, source: I, rate_hz: f64) -> Result<u64, TransportError>
where
    A: ToSocketAddrs,
    I: IntoIterator<Item = CsiPacket>,
{
    let mut stream = TcpStream::connect(endpoint).map_err(TransportError::Connect)?;
    let _ = stream.set_nodelay(true);
    let period = (rate_hz.is_finite() && rate_hz > 0.0).then(|| Duration::from_secs_f64(1.0 / rate_hz));
    let start = Instant::now();
    let mut sent = 0u64;
    let mut buf = Vec::with_capacity(600);
    for packet in source {
        if let Some(period) = period {
            sleep_until(start + period.mul_f64(sent as f64));
        }
        buf.clear();
        encode_frame(&packet, &mut buf).map_err(TransportError::Encode)?;
        if let Err(source) = stream.write_all(&buf) {
            return Err(TransportError::ConnectionLost { sent, source });
        }
        sent += 1;
    }
    if let Some(period) = period {
        sleep_until(start + period.mul_f64(sent as f64));
    }
    stream.flush().map_err(|source| TransportError::ConnectionLost { sent, source })?;
    Ok(sent)
}

fn sleep_until(deadline: Instant) {
    let now = Instant::now();
    if deadline > now {
        thread::sleep(deadline - now);
    }
}
