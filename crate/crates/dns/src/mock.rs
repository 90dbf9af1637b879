//! Loopback UDP resolver that answers every query after a scripted delay,
//! or drops it.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::io::ErrorKind;
use std::net::{SocketAddr, UdpSocket};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::delay::DelayLaw;
use crate::error::{io_err, DnsError, Result};
use crate::wire::build_response;

/// Longest the receiver blocks before checking for shutdown.
const POLL: Duration = Duration::from_millis(20);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MockConfig {
    pub delay: DelayLaw,
    pub drop_probability: f64,
    pub seed: u64,
}

impl MockConfig {
    pub fn new(delay: DelayLaw) -> Self {
        MockConfig {
            delay,
            drop_probability: 0.0,
            seed: 0,
        }
    }

    pub fn with_drop(mut self, p: f64) -> Self {
        self.drop_probability = p;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.drop_probability) {
            return Err(DnsError::Config(format!(
                "drop probability {} outside [0, 1]",
                self.drop_probability
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockStats {
    pub received: u64,
    pub answered: u64,
    pub dropped: u64,
    pub malformed: u64,
}

pub struct MockServer {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    handle: Option<JoinHandle<MockStats>>,
}

impl MockServer {
    pub fn spawn(bind: SocketAddr, config: MockConfig) -> Result<Self> {
        config.validate()?;
        let socket = UdpSocket::bind(bind).map_err(io_err(format!("binding mock resolver to {bind}")))?;
        let addr = socket.local_addr().map_err(io_err("reading mock address"))?;
        let stop = Arc::new(AtomicBool::new(false));
        let flag = Arc::clone(&stop);
        let handle = std::thread::Builder::new()
            .name(format!("mock-dns-{addr}"))
            .spawn(move || serve(socket, config, &flag))
            .map_err(io_err("spawning mock resolver thread"))?;
        Ok(MockServer {
            addr,
            stop,
            handle: Some(handle),
        })
    }

    /// Spawn on an ephemeral loopback port.
    pub fn spawn_local(config: MockConfig) -> Result<Self> {
        Self::spawn(SocketAddr::from(([127, 0, 0, 1], 0)), config)
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn shutdown(mut self) -> MockStats {
        self.stop_and_join()
    }

    fn stop_and_join(&mut self) -> MockStats {
        self.stop.store(true, Ordering::SeqCst);
        self.handle
            .take()
            .and_then(|h| h.join().ok())
            .unwrap_or_default()
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.stop_and_join();
    }
}

type Pending = Reverse<(Instant, u64, SocketAddr, Vec<u8>)>;

#[derive(Default)]
struct Outbox {
    queue: BinaryHeap<Pending>,
    closed: bool,
}

/// Receives on the calling thread and hands delayed replies to a sender
/// thread. Socket receive timeouts are too coarse on some kernels to time
/// replies, so the sender waits on a condition variable instead.
fn serve(socket: UdpSocket, config: MockConfig, stop: &AtomicBool) -> MockStats {
    let outbox = Arc::new((Mutex::new(Outbox::default()), Condvar::new()));
    let sender = match socket.try_clone() {
        Ok(tx) => {
            let outbox = Arc::clone(&outbox);
            std::thread::spawn(move || send_loop(tx, &outbox))
        }
        Err(_) => return MockStats::default(),
    };
    let mut rng = redundancy_core::rng::child(config.seed, &[0xD45]);
    let mut stats = MockStats::default();
    let mut seq = 0u64;
    let mut buf = [0u8; 1500];
    let _ = socket.set_read_timeout(Some(POLL));
    while !stop.load(Ordering::SeqCst) {
        match socket.recv_from(&mut buf) {
            Ok((n, from)) => {
                let arrived = Instant::now();
                stats.received += 1;
                let Some(reply) = build_response(&buf[..n]) else {
                    stats.malformed += 1;
                    continue;
                };
                if rng.random::<f64>() < config.drop_probability {
                    stats.dropped += 1;
                    continue;
                }
                let delay = config.delay.sample(&mut rng).max(0.0);
                let due = arrived + Duration::from_secs_f64(delay / 1000.0);
                seq += 1;
                let (lock, cv) = &*outbox;
                lock.lock()
                    .expect("outbox lock")
                    .queue
                    .push(Reverse((due, seq, from, reply)));
                cv.notify_one();
            }
            Err(e) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => {}
            Err(_) => {}
        }
    }
    {
        let (lock, cv) = &*outbox;
        lock.lock().expect("outbox lock").closed = true;
        cv.notify_one();
    }
    stats.answered = sender.join().unwrap_or(0);
    stats
}

fn send_loop(socket: UdpSocket, outbox: &(Mutex<Outbox>, Condvar)) -> u64 {
    let (lock, cv) = outbox;
    let mut sent = 0;
    let mut guard = lock.lock().expect("outbox lock");
    loop {
        if guard.closed {
            return sent;
        }
        let now = Instant::now();
        match guard.queue.peek() {
            Some(Reverse((due, ..))) if *due <= now => {
                let Reverse((_, _, to, bytes)) = guard.queue.pop().expect("peeked");
                drop(guard);
                if socket.send_to(&bytes, to).is_ok() {
                    sent += 1;
                }
                guard = lock.lock().expect("outbox lock");
            }
            Some(Reverse((due, ..))) => {
                let wait = *due - now;
                guard = cv.wait_timeout(guard, wait).expect("outbox lock").0;
            }
            None => guard = cv.wait(guard).expect("outbox lock"),
        }
    }
}

