use std::io::{BufRead, BufReader, BufWriter, ErrorKind, Write};
use std::net::{SocketAddr, TcpStream, ToSocketAddrs, UdpSocket};
use std::time::{Duration, Instant};

use super::message::{decode, encode_for, Ack, Commit, Hello, SceneMessage, Spawn, Tile, Transport, PROTOCOL_VERSION};
use super::ProtocolError;
use crate::tiles::TileGrid;

/// Datagrams sent between short pauses, so a local receiver can keep up.
const DATAGRAM_BURST: usize = 64;

#[derive(Debug, Clone)]
pub struct SendOptions {
    pub transport: Transport,
    /// Deadline for connecting and for the Commit acknowledgement.
    pub timeout: Duration,
    pub tile_size: f64,
    pub scene_id: String,
}

impl Default for SendOptions {
    fn default() -> Self {
        Self {
            transport: Transport::Stream,
            timeout: Duration::from_secs(5),
            tile_size: 1.0,
            scene_id: "scene".into(),
        }
    }
}

/// Outcome of a committed scene.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AckSummary {
    pub detail: String,
    pub tiles_sent: usize,
    pub spawns_sent: usize,
}

/// The full message sequence for one scene: Hello, road tiles in row-major
/// order, spawns, then Commit carrying the tile count.
pub fn scene_messages(grid: &TileGrid, spawns: &[Spawn], options: &SendOptions) -> Vec<SceneMessage> {
    let mut msgs = vec![SceneMessage::Hello(Hello {
        protocol_version: PROTOCOL_VERSION,
        grid_width: grid.width() as u32,
        grid_height: grid.height() as u32,
        tile_size: options.tile_size,
    })];
    let mut tiles = 0u64;
    for (x, y, code) in grid.road_cells() {
        msgs.push(SceneMessage::Tile(Tile {
            x: x as u32,
            y: y as u32,
            code: code.value(),
        }));
        tiles += 1;
    }
    msgs.extend(spawns.iter().cloned().map(SceneMessage::Spawn));
    msgs.push(SceneMessage::Commit(Commit {
        scene_id: options.scene_id.clone(),
        tile_count: Some(tiles),
    }));
    msgs
}

pub fn send_scene(
    grid: &TileGrid,
    spawns: &[Spawn],
    endpoint: &str,
    options: &SendOptions,
) -> Result<AckSummary, ProtocolError> {
    send_scene_filtered(grid, spawns, endpoint, options, |_| true)
}

/// Like [`send_scene`], but only messages for which `keep` returns true are
/// put on the wire. Used to inject loss.
pub fn send_scene_filtered(
    grid: &TileGrid,
    spawns: &[Spawn],
    endpoint: &str,
    options: &SendOptions,
    keep: impl FnMut(&SceneMessage) -> bool,
) -> Result<AckSummary, ProtocolError> {
    let msgs = scene_messages(grid, spawns, options);
    let summary = AckSummary {
        detail: String::new(),
        tiles_sent: grid.road_count(),
        spawns_sent: spawns.len(),
    };
    let mut frames = Vec::with_capacity(msgs.len());
    let mut keep = keep;
    for msg in msgs.iter().filter(|m| keep(m)) {
        frames.push(encode_for(msg, options.transport)?);
    }
    let addr = resolve(endpoint)?;
    // The first Ack settles the exchange: either an earlier message was
    // rejected or it answers the Commit.
    let ack = match options.transport {
        Transport::Stream => send_stream(addr, &frames, options.timeout)?,
        Transport::Datagram => send_datagram(addr, &frames, options.timeout)?,
    };
    if ack.is_ok() {
        Ok(AckSummary {
            detail: ack.detail,
            ..summary
        })
    } else {
        Err(ProtocolError::NackReceived { detail: ack.detail })
    }
}

fn resolve(endpoint: &str) -> Result<SocketAddr, ProtocolError> {
    endpoint
        .to_socket_addrs()
        .map_err(|e| ProtocolError::InvalidEndpoint(format!("{endpoint}: {e}")))?
        .next()
        .ok_or_else(|| ProtocolError::InvalidEndpoint(endpoint.to_string()))
}

fn io_error(e: std::io::Error, addr: SocketAddr) -> ProtocolError {
    match e.kind() {
        ErrorKind::ConnectionRefused => ProtocolError::ConnectionRefused(addr.to_string()),
        ErrorKind::WouldBlock | ErrorKind::TimedOut => ProtocolError::Timeout,
        _ => ProtocolError::Io(e),
    }
}

fn remaining(deadline: Instant) -> Result<Duration, ProtocolError> {
    let left = deadline.saturating_duration_since(Instant::now());
    if left.is_zero() {
        Err(ProtocolError::Timeout)
    } else {
        Ok(left)
    }
}

fn send_stream(addr: SocketAddr, frames: &[Vec<u8>], timeout: Duration) -> Result<Ack, ProtocolError> {
    let conn = TcpStream::connect_timeout(&addr, timeout).map_err(|e| io_error(e, addr))?;
    let deadline = Instant::now() + timeout;
    let mut writer = BufWriter::new(conn.try_clone()?);
    for frame in frames {
        writer.write_all(frame).map_err(|e| io_error(e, addr))?;
    }
    writer.flush().map_err(|e| io_error(e, addr))?;
    let mut reader = BufReader::new(conn);
    let mut line = Vec::new();
    loop {
        reader.get_ref().set_read_timeout(Some(remaining(deadline)?))?;
        line.clear();
        match reader.read_until(b'\n', &mut line) {
            Ok(0) => {
                return Err(ProtocolError::Io(std::io::Error::new(
                    ErrorKind::UnexpectedEof,
                    "server closed the connection before acknowledging",
                )))
            }
            Ok(_) => {
                if let SceneMessage::Ack(ack) = decode(&line)? {
                    return Ok(ack);
                }
            }
            Err(e) => return Err(io_error(e, addr)),
        }
    }
}

fn send_datagram(addr: SocketAddr, frames: &[Vec<u8>], timeout: Duration) -> Result<Ack, ProtocolError> {
    let local: SocketAddr = if addr.is_ipv4() {
        "0.0.0.0:0".parse().expect("valid address")
    } else {
        "[::]:0".parse().expect("valid address")
    };
    let socket = UdpSocket::bind(local)?;
    socket.connect(addr)?;
    let deadline = Instant::now() + timeout;
    for (i, frame) in frames.iter().enumerate() {
        if i > 0 && i % DATAGRAM_BURST == 0 {
            std::thread::sleep(Duration::from_millis(1));
        }
        socket.send(frame).map_err(|e| io_error(e, addr))?;
    }
    let mut buf = vec![0u8; 65_536];
    loop {
        socket.set_read_timeout(Some(remaining(deadline)?))?;
        let len = socket.recv(&mut buf).map_err(|e| io_error(e, addr))?;
        if let Ok(SceneMessage::Ack(ack)) = decode(&buf[..len]) {
            return Ok(ack);
        }
    }
}
