use std::io::{self, Read};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use super::frame::{FrameDecoder, FrameEvent};
use super::queue::{FifoQueue, QueueError};
use super::TransportError;
use crate::wire::{self, CsiPacket};

/// What the socket reader does when the queue is full.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OverflowPolicy {
    /// Wait for the consumer. Nothing is lost.
    #[default]
    Block,
    /// Discard the packet and count it in [`IngestStats::dropped`].
    Drop,
}

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub queue_capacity: usize,
    pub overflow: OverflowPolicy,
    /// Stop after this many client connections have closed.
    pub max_connections: Option<usize>,
    /// How often blocked accept/read calls check for shutdown.
    pub poll_interval: Duration,
}

impl Default for ServerConfig {
    fn default() -> Self {
        Self {
            queue_capacity: 256,
            overflow: OverflowPolicy::Block,
            max_connections: None,
            poll_interval: Duration::from_millis(20),
        }
    }
}

/// Counters reported when the server stops.
///
/// `received == decoded + decode_errors` and `dropped <= decoded`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct IngestStats {
    pub received: u64,
    pub decoded: u64,
    pub decode_errors: u64,
    pub dropped: u64,
}

#[derive(Default)]
struct Counters {
    received: AtomicU64,
    decoded: AtomicU64,
    decode_errors: AtomicU64,
    dropped: AtomicU64,
}

impl Counters {
    fn snapshot(&self) -> IngestStats {
        IngestStats {
            received: self.received.load(Ordering::SeqCst),
            decoded: self.decoded.load(Ordering::SeqCst),
            decode_errors: self.decode_errors.load(Ordering::SeqCst),
            dropped: self.dropped.load(Ordering::SeqCst),
        }
    }
}

/// Requests a running [`IngestServer`] to stop.
#[derive(Debug, Clone, Default)]
pub struct ShutdownHandle(Arc<AtomicBool>);

impl ShutdownHandle {
    /// A handle not yet attached to any server.
    pub fn new() -> Self {
        Self(Arc::new(AtomicBool::new(false)))
    }

    pub fn shutdown(&self) {
        self.0.store(true, Ordering::SeqCst);
    }

    pub fn is_shutdown(&self) -> bool {
        self.0.load(Ordering::SeqCst)
    }
}

/// Single-client TCP ingest server.
///
/// A reader thread accepts one connection at a time, splits frames, decodes
/// them and pushes packets into a bounded FIFO. The thread calling
/// [`run`](IngestServer::run) drains that FIFO into the sink.
pub struct IngestServer {
    listener: TcpListener,
    config: ServerConfig,
    shutdown: Arc<AtomicBool>,
}

impl IngestServer {
    pub fn bind<A: ToSocketAddrs>(addr: A, config: ServerConfig) -> Result<Self, TransportError> {
        if config.queue_capacity == 0 {
            return Err(TransportError::Config("queue capacity must be at least 1".into()));
        }
        let listener = TcpListener::bind(addr).map_err(TransportError::Bind)?;
        listener.set_nonblocking(true).map_err(TransportError::Bind)?;
        Ok(Self { listener, config, shutdown: Arc::new(AtomicBool::new(false)) })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    pub fn shutdown_handle(&self) -> ShutdownHandle {
        ShutdownHandle(Arc::clone(&self.shutdown))
    }

    /// Serves until shutdown (or `max_connections`), feeding packets to
    /// `sink` in arrival order. Packets still queued at shutdown are
    /// delivered before this returns.
    pub fn run<F: FnMut(CsiPacket)>(self, mut sink: F) -> IngestStats {
        let queue = Arc::new(FifoQueue::new(self.config.queue_capacity));
        let counters = Arc::new(Counters::default());
        let reader = {
            let queue = Arc::clone(&queue);
            let counters = Arc::clone(&counters);
            let shutdown = Arc::clone(&self.shutdown);
            let config = self.config.clone();
            let listener = self.listener;
            thread::spawn(move || {
                accept_loop(&listener, &config, &shutdown, &queue, &counters);
                queue.close();
            })
        };
        while let Ok(packet) = queue.pop() {
            sink(packet);
        }
        let _ = reader.join();
        counters.snapshot()
    }
}

fn accept_loop(
    listener: &TcpListener,
    config: &ServerConfig,
    shutdown: &AtomicBool,
    queue: &FifoQueue<CsiPacket>,
    counters: &Counters,
) {
    let mut served = 0usize;
    while !shutdown.load(Ordering::SeqCst) {
        match listener.accept() {
            Ok((stream, _peer)) => {
                serve_connection(stream, config, shutdown, queue, counters);
                served += 1;
                if config.max_connections.is_some_and(|max| served >= max) {
                    break;
                }
            }
            Err(e) if e.kind() == io::ErrorKind::WouldBlock => thread::sleep(config.poll_interval),
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(_) => thread::sleep(config.poll_interval),
        }
    }
}

fn serve_connection(
    mut stream: TcpStream,
    config: &ServerConfig,
    shutdown: &AtomicBool,
    queue: &FifoQueue<CsiPacket>,
    counters: &Counters,
) {
    if stream.set_nonblocking(false).is_err() || stream.set_read_timeout(Some(config.poll_interval)).is_err() {
        return;
    }
    let _ = stream.set_nodelay(true);
    let mut decoder = FrameDecoder::new();
    let mut chunk = vec![0u8; 64 * 1024];
    loop {
        match stream.read(&mut chunk) {
            Ok(0) => return,
            Ok(n) => decoder.extend(&chunk[..n]),
            Err(e) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => {
                if shutdown.load(Ordering::SeqCst) {
                    return;
                }
                continue;
            }
            Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
            Err(_) => return,
        }
        while let Some(event) = decoder.next_frame() {
            counters.received.fetch_add(1, Ordering::SeqCst);
            let body = match event {
                FrameEvent::Body(body) => body,
                FrameEvent::Malformed(_) => {
                    counters.decode_errors.fetch_add(1, Ordering::SeqCst);
                    return;
                }
            };
            let packet = match wire::decode_packet(&body) {
                Ok(p) if p.wire_len() == body.len() => p,
                _ => {
                    counters.decode_errors.fetch_add(1, Ordering::SeqCst);
                    continue;
                }
            };
            counters.decoded.fetch_add(1, Ordering::SeqCst);
            let pushed = match config.overflow {
                OverflowPolicy::Block => queue.push(packet),
                OverflowPolicy::Drop => queue.try_push(packet),
            };
            match pushed {
                Ok(()) => {}
                Err(QueueError::Full) => {
                    counters.dropped.fetch_add(1, Ordering::SeqCst);
                }
                Err(QueueError::Closed) => return,
            }
        }
        if shutdown.load(Ordering::SeqCst) {
            return;
        }
    }
}

/// Binds `endpoint` and serves until `shutdown` is triggered.
pub fn run_ingest_server<A, F>(
    endpoint: A,
    queue_capacity: usize,
    shutdown: &ShutdownHandle,
    sink: F,
) -> Result<IngestStats, TransportError>
where
    A: ToSocketAddrs,
    F: FnMut(CsiPacket),
{
    let mut server = IngestServer::bind(endpoint, ServerConfig { queue_capacity, ..Default::default() })?;
    server.shutdown = Arc::clone(&shutdown.0);
    Ok(server.run(sink))
}
