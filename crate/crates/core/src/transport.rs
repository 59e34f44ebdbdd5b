//! Synchronizing all-gather over fixed-length integer messages.
//!
//! Two backends share the [`Transport`] contract: [`LocalCluster`] runs
//! several ranks inside one program, [`TcpTransport`] connects separate
//! programs. Over TCP, rank 0 accepts the connections and relays each round,
//! so every rank still sees the same rank-ordered concatenation.
//!
//! TCP frames are a little-endian `u32` count followed by that many
//! little-endian `i32` values. The handshake frame is
//! `[version, rank, process_count, buffer_ints, config_checksum]`.

use std::io::{self, BufReader, BufWriter, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use thiserror::Error;

pub const PROTOCOL_VERSION: i32 = 1;
const ABORT_FRAME: u32 = u32::MAX;
const MAX_FRAME: u32 = 1 << 28;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("all-gather length mismatch: expected {expected} integers, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("peer disconnected: {0}")]
    Disconnected(String),
    #[error("handshake failed: {0}")]
    Handshake(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub trait Transport: Send {
    fn rank(&self) -> usize;
    fn size(&self) -> usize;
    /// Every rank contributes `contribution` (same length on all ranks) and
    /// receives all contributions concatenated in rank order.
    fn all_gather(&mut self, contribution: &[i32]) -> Result<Vec<i32>, TransportError>;
}

/// Handshake contents checked by every rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hello {
    pub rank: usize,
    pub process_count: usize,
    pub buffer_ints: usize,
    pub checksum: u32,
}

impl Hello {
    pub fn encode(&self) -> [i32; 5] {
        [
            PROTOCOL_VERSION,
            self.rank as i32,
            self.process_count as i32,
            self.buffer_ints as i32,
            self.checksum as i32,
        ]
    }

    pub fn decode(x: &[i32]) -> Result<Self, TransportError> {
        if x.len() != 5 {
            return Err(TransportError::Handshake(format!("hello of {} integers", x.len())));
        }
        if x[0] != PROTOCOL_VERSION {
            return Err(TransportError::Handshake(format!(
                "protocol version {} (expected {PROTOCOL_VERSION})",
                x[0]
            )));
        }
        if x[1] < 0 || x[2] < 1 || x[3] < 0 {
            return Err(TransportError::Handshake("negative field in hello".into()));
        }
        Ok(Hello {
            rank: x[1] as usize,
            process_count: x[2] as usize,
            buffer_ints: x[3] as usize,
            checksum: x[4] as u32,
        })
    }

    /// Whether `other` describes the same run.
    pub fn compatible(&self, other: &Hello) -> Result<(), TransportError> {
        if self.process_count != other.process_count
            || self.buffer_ints != other.buffer_ints
            || self.checksum != other.checksum
        {
            return Err(TransportError::Handshake(format!(
                "rank {} disagrees with rank {} on the run configuration",
                other.rank, self.rank
            )));
        }
        Ok(())
    }
}

// In-process backend.

struct RoundState {
    generation: u64,
    slots: Vec<Option<Vec<i32>>>,
    arrived: usize,
    result: Result<Arc<Vec<i32>>, (usize, usize)>,
    broken: Option<usize>,
}

struct Rendezvous {
    size: usize,
    state: Mutex<RoundState>,
    cv: Condvar,
}

/// Factory for in-process ranks sharing one rendezvous.
pub struct LocalCluster;

impl LocalCluster {
    #[allow(clippy::new_ret_no_self)]
    pub fn new(size: usize) -> Vec<LocalEndpoint> {
        assert!(size >= 1);
        let rv = Arc::new(Rendezvous {
            size,
            state: Mutex::new(RoundState {
                generation: 0,
                slots: vec![None; size],
                arrived: 0,
                result: Ok(Arc::new(Vec::new())),
                broken: None,
            }),
            cv: Condvar::new(),
        });
        (0..size)
            .map(|rank| LocalEndpoint {
                rank,
                rv: rv.clone(),
            })
            .collect()
    }
}

/// One in-process rank. Dropping it makes pending and later all-gathers on
/// the other ranks fail with [`TransportError::Disconnected`].
pub struct LocalEndpoint {
    rank: usize,
    rv: Arc<Rendezvous>,
}

impl Transport for LocalEndpoint {
    fn rank(&self) -> usize {
        self.rank
    }

    fn size(&self) -> usize {
        self.rv.size
    }

    fn all_gather(&mut self, contribution: &[i32]) -> Result<Vec<i32>, TransportError> {
        let rv = &*self.rv;
        let mut st = rv.state.lock().unwrap_or_else(|p| p.into_inner());
        if let Some(r) = st.broken {
            return Err(TransportError::Disconnected(format!("rank {r} left")));
        }
        let my_gen = st.generation;
        st.slots[self.rank] = Some(contribution.to_vec());
        st.arrived += 1;
        if st.arrived == rv.size {
            let slots: Vec<Vec<i32>> = st.slots.iter_mut().map(|s| s.take().unwrap()).collect();
            let expected = slots[0].len();
            st.result = match slots.iter().find(|s| s.len() != expected) {
                Some(bad) => Err((expected, bad.len())),
                None => Ok(Arc::new(slots.concat())),
            };
            st.arrived = 0;
            st.generation += 1;
            rv.cv.notify_all();
        } else {
            while st.generation == my_gen && st.broken.is_none() {
                st = rv.cv.wait(st).unwrap_or_else(|p| p.into_inner());
            }
            if st.generation == my_gen {
                let r = st.broken.unwrap();
                return Err(TransportError::Disconnected(format!("rank {r} left")));
            }
        }
        match &st.result {
            Ok(v) => Ok(v.as_ref().clone()),
            Err((expected, got)) => Err(TransportError::LengthMismatch {
                expected: *expected,
                got: *got,
            }),
        }
    }
}

impl Drop for LocalEndpoint {
    fn drop(&mut self) {
        let mut st = self.rv.state.lock().unwrap_or_else(|p| p.into_inner());
        if st.broken.is_none() {
            st.broken = Some(self.rank);
        }
        self.rv.cv.notify_all();
    }
}

// TCP backend.

fn write_frame<W: Write>(w: &mut W, data: &[i32]) -> io::Result<()> {
    w.write_all(&(data.len() as u32).to_le_bytes())?;
    for x in data {
        w.write_all(&x.to_le_bytes())?;
    }
    w.flush()
}

fn write_abort<W: Write>(w: &mut W) -> io::Result<()> {
    w.write_all(&ABORT_FRAME.to_le_bytes())?;
    w.flush()
}

/// Reads one frame; `Ok(None)` is an abort frame.
fn read_frame<R: Read>(r: &mut R) -> Result<Option<Vec<i32>>, TransportError> {
    let mut word = [0u8; 4];
    r.read_exact(&mut word).map_err(disconnect)?;
    let n = u32::from_le_bytes(word);
    if n == ABORT_FRAME {
        return Ok(None);
    }
    if n > MAX_FRAME {
        return Err(TransportError::Protocol(format!("frame of {n} integers")));
    }
    let mut bytes = vec![0u8; n as usize * 4];
    r.read_exact(&mut bytes).map_err(disconnect)?;
    Ok(Some(
        bytes
            .chunks_exact(4)
            .map(|b| i32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect(),
    ))
}

fn disconnect(e: io::Error) -> TransportError {
    match e.kind() {
        io::ErrorKind::UnexpectedEof | io::ErrorKind::ConnectionReset | io::ErrorKind::BrokenPipe => {
            TransportError::Disconnected(e.to_string())
        }
        _ => TransportError::Io(e),
    }
}

struct Link {
    reader: BufReader<TcpStream>,
    writer: BufWriter<TcpStream>,
}

impl Link {
    fn new(stream: TcpStream) -> io::Result<Self> {
        stream.set_nodelay(true)?;
        Ok(Link {
            reader: BufReader::new(stream.try_clone()?),
            writer: BufWriter::new(stream),
        })
    }
}

enum Role {
    Root { peers: Vec<Link> },
    Leaf { root: Link },
}

pub struct TcpTransport {
    rank: usize,
    size: usize,
    role: Role,
}

/// Bound rendezvous socket of rank 0, before the other ranks have joined.
pub struct TcpRendezvous {
    listener: TcpListener,
}

impl TcpRendezvous {
    pub fn bind<A: ToSocketAddrs>(addr: A) -> io::Result<Self> {
        Ok(TcpRendezvous {
            listener: TcpListener::bind(addr)?,
        })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    /// Waits for ranks `1..process_count` and validates their handshakes.
    pub fn accept(self, hello: Hello) -> Result<TcpTransport, TransportError> {
        if hello.rank != 0 {
            return Err(TransportError::Handshake("the listening side must be rank 0".into()));
        }
        let mut peers: Vec<Option<Link>> = (1..hello.process_count).map(|_| None).collect();
        let mut joined = 0;
        while joined < peers.len() {
            let (stream, _) = self.listener.accept()?;
            let mut link = Link::new(stream)?;
            let theirs = match read_frame(&mut link.reader)? {
                Some(f) => Hello::decode(&f)?,
                None => return Err(TransportError::Handshake("peer aborted".into())),
            };
            let slot = theirs.rank.checked_sub(1).and_then(|i| peers.get_mut(i));
            let ok = hello.compatible(&theirs).and_then(|_| match slot {
                Some(s) if s.is_none() => Ok(s),
                _ => Err(TransportError::Handshake(format!("unexpected rank {}", theirs.rank))),
            });
            match ok {
                Ok(s) => {
                    write_frame(&mut link.writer, &hello.encode())?;
                    *s = Some(link);
                    joined += 1;
                }
                Err(e) => {
                    let _ = write_abort(&mut link.writer);
                    for l in peers.iter_mut().flatten() {
                        let _ = write_abort(&mut l.writer);
                    }
                    return Err(e);
                }
            }
        }
        Ok(TcpTransport {
            rank: 0,
            size: hello.process_count,
            role: Role::Root {
                peers: peers.into_iter().map(Option::unwrap).collect(),
            },
        })
    }
}

impl TcpTransport {
    /// Joins the rendezvous at `addr`, retrying until `timeout` elapses.
    pub fn connect<A: ToSocketAddrs>(addr: A, hello: Hello, timeout: Duration) -> Result<Self, TransportError> {
        if hello.rank == 0 || hello.rank >= hello.process_count {
            return Err(TransportError::Handshake(format!(
                "connecting rank must be in 1..{}",
                hello.process_count
            )));
        }
        let addrs: Vec<SocketAddr> = addr.to_socket_addrs()?.collect();
        let deadline = Instant::now() + timeout;
        let stream = loop {
            match addrs.iter().find_map(|a| TcpStream::connect(a).ok()) {
                Some(s) => break s,
                None if Instant::now() < deadline => std::thread::sleep(Duration::from_millis(50)),
                None => return Err(TransportError::Disconnected("could not reach rank 0".into())),
            }
        };
        let mut root = Link::new(stream)?;
        write_frame(&mut root.writer, &hello.encode())?;
        let theirs = match read_frame(&mut root.reader)? {
            Some(f) => Hello::decode(&f)?,
            None => return Err(TransportError::Handshake("rank 0 rejected the configuration".into())),
        };
        hello.compatible(&theirs)?;
        Ok(TcpTransport {
            rank: hello.rank,
            size: hello.process_count,
            role: Role::Leaf { root },
        })
    }
}

impl Transport for TcpTransport {
    fn rank(&self) -> usize {
        self.rank
    }

    fn size(&self) -> usize {
        self.size
    }

    fn all_gather(&mut self, contribution: &[i32]) -> Result<Vec<i32>, TransportError> {
        match &mut self.role {
            Role::Leaf { root } => {
                write_frame(&mut root.writer, contribution).map_err(disconnect)?;
                match read_frame(&mut root.reader)? {
                    Some(all) if all.len() == contribution.len() * self.size => Ok(all),
                    Some(all) => Err(TransportError::LengthMismatch {
                        expected: contribution.len() * self.size,
                        got: all.len(),
                    }),
                    None => Err(TransportError::Protocol("rank 0 aborted the round".into())),
                }
            }
            Role::Root { peers } => {
                let mut all = contribution.to_vec();
                let mut mismatch = None;
                for p in peers.iter_mut() {
                    let part = read_frame(&mut p.reader)?
                        .ok_or_else(|| TransportError::Protocol("peer aborted".into()))?;
                    if part.len() != contribution.len() && mismatch.is_none() {
                        mismatch = Some(part.len());
                    }
                    all.extend(part);
                }
                if let Some(got) = mismatch {
                    for p in peers.iter_mut() {
                        let _ = write_abort(&mut p.writer);
                    }
                    return Err(TransportError::LengthMismatch {
                        expected: contribution.len(),
                        got,
                    });
                }
                for p in peers.iter_mut() {
                    write_frame(&mut p.writer, &all).map_err(disconnect)?;
                }
                Ok(all)
            }
        }
    }
}
