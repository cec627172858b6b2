//! Point-to-point byte transports between domains.
//!
//! Messages between one pair of ranks arrive in send order.

use std::collections::VecDeque;
use std::io::{Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::mpsc::{channel, Receiver, Sender};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use crate::error::{DpdError, Result};

pub trait Transport: Send + Sync {
    fn rank(&self) -> usize;
    fn size(&self) -> usize;
    fn send(&self, dest: usize, bytes: Vec<u8>) -> Result<()>;
    fn recv(&self, src: usize) -> Result<Vec<u8>>;
}

/// In-process transport over one channel per ordered rank pair.
pub struct ChannelTransport {
    rank: usize,
    to: Vec<Sender<Vec<u8>>>,
    from: Vec<Mutex<Receiver<Vec<u8>>>>,
}

impl ChannelTransport {
    /// Endpoints for ranks `0..n`.
    pub fn mesh(n: usize) -> Vec<ChannelTransport> {
        let mut to: Vec<Vec<Sender<Vec<u8>>>> = (0..n).map(|_| Vec::with_capacity(n)).collect();
        let mut from: Vec<Vec<Option<Receiver<Vec<u8>>>>> = (0..n).map(|_| (0..n).map(|_| None).collect()).collect();
        for src in 0..n {
            for dst in 0..n {
                let (tx, rx) = channel();
                to[src].push(tx);
                from[dst][src] = Some(rx);
            }
        }
        to.into_iter()
            .zip(from)
            .enumerate()
            .map(|(rank, (to, from))| ChannelTransport {
                rank,
                to,
                from: from.into_iter().map(|r| Mutex::new(r.unwrap())).collect(),
            })
            .collect()
    }
}

impl Transport for ChannelTransport {
    fn rank(&self) -> usize {
        self.rank
    }

    fn size(&self) -> usize {
        self.to.len()
    }

    fn send(&self, dest: usize, bytes: Vec<u8>) -> Result<()> {
        self.to
            .get(dest)
            .ok_or_else(|| DpdError::Transport(format!("no rank {dest}")))?
            .send(bytes)
            .map_err(|_| DpdError::Transport(format!("rank {dest} hung up")))
    }

    fn recv(&self, src: usize) -> Result<Vec<u8>> {
        self.from
            .get(src)
            .ok_or_else(|| DpdError::Transport(format!("no rank {src}")))?
            .lock()
            .unwrap()
            .recv()
            .map_err(|_| DpdError::Transport(format!("rank {src} hung up")))
    }
}

/// TCP transport: a full mesh of streams, each message framed by a `u32` LE
/// length. Writes go through one background thread per peer so that ranks
/// sending to each other at once cannot block. Messages to self stay in memory.
pub struct TcpTransport {
    rank: usize,
    peers: Vec<Option<Peer>>,
    own: Mutex<VecDeque<Vec<u8>>>,
}

struct Peer {
    reader: Mutex<TcpStream>,
    writer: Mutex<Sender<Vec<u8>>>,
    _thread: std::thread::JoinHandle<()>,
}

impl Peer {
    fn new(s: TcpStream) -> Result<Self> {
        s.set_nodelay(true).map_err(tcp_err)?;
        let mut w = s.try_clone().map_err(tcp_err)?;
        let (tx, rx) = channel::<Vec<u8>>();
        let thread = std::thread::spawn(move || {
            for msg in rx {
                let len = (msg.len() as u32).to_le_bytes();
                if w.write_all(&len).and_then(|_| w.write_all(&msg)).is_err() {
                    break;
                }
            }
        });
        Ok(Self {
            reader: Mutex::new(s),
            writer: Mutex::new(tx),
            _thread: thread,
        })
    }
}

fn tcp_err(e: std::io::Error) -> DpdError {
    DpdError::Transport(e.to_string())
}

impl TcpTransport {
    /// Bind `addrs[rank]`, connect to higher ranks, accept lower ones.
    pub fn connect(rank: usize, addrs: &[SocketAddr], timeout: Duration) -> Result<Self> {
        let listener = TcpListener::bind(addrs[rank]).map_err(tcp_err)?;
        Self::with_listener(rank, listener, addrs, timeout)
    }

    pub fn with_listener(rank: usize, listener: TcpListener, addrs: &[SocketAddr], timeout: Duration) -> Result<Self> {
        let n = addrs.len();
        let mut peers: Vec<Option<Peer>> = (0..n).map(|_| None).collect();
        for (dst, addr) in addrs.iter().enumerate().skip(rank + 1) {
            let start = Instant::now();
            let mut s = loop {
                match TcpStream::connect(addr) {
                    Ok(s) => break s,
                    Err(_) if start.elapsed() < timeout => {
                        std::thread::sleep(Duration::from_millis(20));
                    }
                    Err(e) => return Err(tcp_err(e)),
                }
            };
            s.write_all(&(rank as u32).to_le_bytes()).map_err(tcp_err)?;
            peers[dst] = Some(Peer::new(s)?);
        }
        for _ in 0..rank {
            let (mut s, _) = listener.accept().map_err(tcp_err)?;
            let mut w = [0u8; 4];
            s.read_exact(&mut w).map_err(tcp_err)?;
            let src = u32::from_le_bytes(w) as usize;
            if src >= rank || peers[src].is_some() {
                return Err(DpdError::Transport(format!("unexpected peer {src}")));
            }
            peers[src] = Some(Peer::new(s)?);
        }
        Ok(Self {
            rank,
            peers,
            own: Mutex::new(VecDeque::new()),
        })
    }

    fn peer(&self, r: usize) -> Result<&Peer> {
        self.peers
            .get(r)
            .and_then(|p| p.as_ref())
            .ok_or_else(|| DpdError::Transport(format!("no connection to rank {r}")))
    }
}

impl Transport for TcpTransport {
    fn rank(&self) -> usize {
        self.rank
    }

    fn size(&self) -> usize {
        self.peers.len()
    }

    fn send(&self, dest: usize, bytes: Vec<u8>) -> Result<()> {
        if dest == self.rank {
            self.own.lock().unwrap().push_back(bytes);
            return Ok(());
        }
        self.peer(dest)?
            .writer
            .lock()
            .unwrap()
            .send(bytes)
            .map_err(|_| DpdError::Transport(format!("writer to rank {dest} stopped")))
    }

    fn recv(&self, src: usize) -> Result<Vec<u8>> {
        if src == self.rank {
            return self
                .own
                .lock()
                .unwrap()
                .pop_front()
                .ok_or_else(|| DpdError::Transport("no pending message to self".into()));
        }
        let mut s = self.peer(src)?.reader.lock().unwrap();
        let mut w = [0u8; 4];
        s.read_exact(&mut w).map_err(tcp_err)?;
        let mut buf = vec![0u8; u32::from_le_bytes(w) as usize];
        s.read_exact(&mut buf).map_err(tcp_err)?;
        Ok(buf)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring<T: Transport>(t: &T) -> Vec<u8> {
        let n = t.size();
        let r = t.rank();
        t.send((r + 1) % n, vec![r as u8; r + 1]).unwrap();
        t.send(r, vec![99]).unwrap();
        assert_eq!(t.recv(r).unwrap(), vec![99]);
        t.recv((r + n - 1) % n).unwrap()
    }

    #[test]
    fn channel_ring() {
        let mesh = ChannelTransport::mesh(3);
        let got: Vec<Vec<u8>> = std::thread::scope(|s| {
            let hs: Vec<_> = mesh.into_iter().map(|t| s.spawn(move || ring(&t))).collect();
            hs.into_iter().map(|h| h.join().unwrap()).collect()
        });
        assert_eq!(got, vec![vec![2, 2, 2], vec![0], vec![1, 1]]);
    }

    #[test]
    fn tcp_ring() {
        let listeners: Vec<TcpListener> = (0..3).map(|_| TcpListener::bind("127.0.0.1:0").unwrap()).collect();
        let addrs: Vec<SocketAddr> = listeners.iter().map(|l| l.local_addr().unwrap()).collect();
        let got: Vec<Vec<u8>> = std::thread::scope(|s| {
            let hs: Vec<_> = listeners
                .into_iter()
                .enumerate()
                .map(|(r, l)| {
                    let addrs = addrs.clone();
                    s.spawn(move || {
                        let t = TcpTransport::with_listener(r, l, &addrs, Duration::from_secs(5)).unwrap();
                        ring(&t)
                    })
                })
                .collect();
            hs.into_iter().map(|h| h.join().unwrap()).collect()
        });
        assert_eq!(got, vec![vec![2, 2, 2], vec![0], vec![1, 1]]);
    }
}
