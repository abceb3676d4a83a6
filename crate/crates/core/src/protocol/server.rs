use std::io::{self, BufRead, BufReader, ErrorKind, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs, UdpSocket};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};
use std::thread::JoinHandle;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::message::{decode, encode_for, Ack, Hello, SceneMessage, Spawn, Transport};
use super::ProtocolError;
use crate::fsutil;
use crate::tiles::{TileCode, TileGrid};

const POLL: Duration = Duration::from_millis(20);
const MAX_FRAME: usize = 1 << 20;
const MAX_DATAGRAM: usize = 65_536;

/// Dump file: the tile grid format plus the spawned agents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneDump {
    #[serde(flatten)]
    pub grid: TileGrid,
    pub agents: Vec<Spawn>,
}

/// Server-side mirror of the scene being built.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SceneState {
    pub session: Option<Hello>,
    pub grid: Option<TileGrid>,
    pub agents: Vec<Spawn>,
    pub committed: bool,
    pub scene_id: Option<String>,
    /// Tile messages accepted since the last Hello or Clear.
    pub tiles_received: u64,
}

impl SceneState {
    fn open(&mut self) -> Result<&mut TileGrid, Ack> {
        if self.committed {
            return Err(Ack::error("scene committed; send clear or hello first"));
        }
        self.grid.as_mut().ok_or_else(|| Ack::error("no session"))
    }

    /// Applies one message. Returns the reply, if any: Commit is always
    /// answered, other messages only when rejected. A rejected message leaves
    /// the state unchanged.
    pub fn apply(&mut self, msg: SceneMessage, dump_path: &Path) -> Option<Ack> {
        match msg {
            SceneMessage::Hello(hello) => {
                let grid = TileGrid::empty(hello.grid_width as usize, hello.grid_height as usize)
                    .expect("validated positive dimensions");
                *self = SceneState {
                    session: Some(hello),
                    grid: Some(grid),
                    ..SceneState::default()
                };
                None
            }
            SceneMessage::Tile(tile) => {
                let grid = match self.open() {
                    Ok(g) => g,
                    Err(ack) => return Some(ack),
                };
                let code = TileCode::new(tile.code);
                if grid.set(tile.x as usize, tile.y as usize, code).is_err() {
                    return Some(Ack::error(format!(
                        "tile ({}, {}) outside {}x{} grid",
                        tile.x,
                        tile.y,
                        grid.width(),
                        grid.height()
                    )));
                }
                self.tiles_received += 1;
                None
            }
            SceneMessage::Spawn(spawn) => {
                if let Err(ack) = self.open() {
                    return Some(ack);
                }
                self.agents.push(spawn);
                None
            }
            SceneMessage::Clear => {
                if let Some(hello) = &self.session {
                    self.grid = Some(
                        TileGrid::empty(hello.grid_width as usize, hello.grid_height as usize)
                            .expect("validated positive dimensions"),
                    );
                }
                self.agents.clear();
                self.committed = false;
                self.scene_id = None;
                self.tiles_received = 0;
                None
            }
            SceneMessage::Commit(commit) => Some(self.commit(commit, dump_path)),
            SceneMessage::Ack(_) => Some(Ack::error("unexpected ack from client")),
        }
    }

    fn commit(&mut self, commit: super::message::Commit, dump_path: &Path) -> Ack {
        let Some(grid) = &self.grid else {
            return Ack::error("no session");
        };
        if self.committed {
            return if self.scene_id.as_deref() == Some(commit.scene_id.as_str()) {
                Ack::ok(format!("scene {} already committed", commit.scene_id))
            } else {
                Ack::error("scene committed; send clear or hello first")
            };
        }
        if let Some(expected) = commit.tile_count {
            if expected != self.tiles_received {
                return Ack::error(format!(
                    "tile count mismatch: commit declares {expected}, received {}",
                    self.tiles_received
                ));
            }
        }
        let dump = SceneDump {
            grid: grid.clone(),
            agents: self.agents.clone(),
        };
        if let Err(e) = fsutil::write_json(dump_path, &dump) {
            return Ack::error(format!("cannot write dump: {e}"));
        }
        self.committed = true;
        self.scene_id = Some(commit.scene_id);
        Ack::ok(format!("committed {} tiles", grid.road_count()))
    }
}

/// Decodes and applies one raw frame; decoding failures become error Acks.
pub fn handle_frame(state: &mut SceneState, frame: &[u8], dump_path: &Path) -> Option<Ack> {
    match decode(frame) {
        Ok(msg) => state.apply(msg, dump_path),
        Err(e) => Some(Ack::error(e.to_string())),
    }
}

enum Socket {
    Stream(TcpListener),
    Datagram(UdpSocket),
}

/// Headless scene receiver: one session at a time, messages applied strictly
/// in arrival order.
pub struct SceneServer {
    socket: Socket,
    dump_path: PathBuf,
    state: Arc<Mutex<SceneState>>,
}

/// Running server thread.
pub struct ServerHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    state: Arc<Mutex<SceneState>>,
    thread: Option<JoinHandle<io::Result<()>>>,
}

fn lock(state: &Mutex<SceneState>) -> MutexGuard<'_, SceneState> {
    state.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

impl SceneServer {
    pub fn bind(
        listen: impl ToSocketAddrs,
        transport: Transport,
        dump_path: impl Into<PathBuf>,
    ) -> Result<Self, ProtocolError> {
        let socket = match transport {
            Transport::Stream => {
                let listener = TcpListener::bind(listen)?;
                listener.set_nonblocking(true)?;
                Socket::Stream(listener)
            }
            Transport::Datagram => {
                let socket = UdpSocket::bind(listen)?;
                socket.set_read_timeout(Some(POLL))?;
                Socket::Datagram(socket)
            }
        };
        Ok(Self {
            socket,
            dump_path: dump_path.into(),
            state: Arc::default(),
        })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        match &self.socket {
            Socket::Stream(l) => l.local_addr(),
            Socket::Datagram(s) => s.local_addr(),
        }
    }

    pub fn transport(&self) -> Transport {
        match self.socket {
            Socket::Stream(_) => Transport::Stream,
            Socket::Datagram(_) => Transport::Datagram,
        }
    }

    pub fn state(&self) -> SceneState {
        lock(&self.state).clone()
    }

    /// Serves until `stop` is set.
    pub fn run(&self, stop: &AtomicBool) -> io::Result<()> {
        self.run_inner(stop, false)
    }

    /// Serves until the first successful commit (or `stop`).
    pub fn run_until_commit(&self, stop: &AtomicBool) -> io::Result<()> {
        self.run_inner(stop, true)
    }

    fn run_inner(&self, stop: &AtomicBool, once: bool) -> io::Result<()> {
        let done = || stop.load(Ordering::SeqCst) || (once && lock(&self.state).committed);
        match &self.socket {
            Socket::Stream(listener) => loop {
                if done() {
                    return Ok(());
                }
                match listener.accept() {
                    Ok((conn, _)) => self.serve_connection(conn, &done)?,
                    Err(e) if e.kind() == ErrorKind::WouldBlock => std::thread::sleep(POLL),
                    Err(e) if e.kind() == ErrorKind::Interrupted => {}
                    Err(e) => return Err(e),
                }
            },
            Socket::Datagram(socket) => {
                let mut buf = vec![0u8; MAX_DATAGRAM];
                loop {
                    if done() {
                        return Ok(());
                    }
                    match socket.recv_from(&mut buf) {
                        Ok((len, peer)) => {
                            let reply = handle_frame(&mut lock(&self.state), &buf[..len], &self.dump_path);
                            if let Some(ack) = reply {
                                let bytes = encode_for(&SceneMessage::Ack(ack), Transport::Datagram)
                                    .expect("acks always encode");
                                // Replies are best effort on datagram transport.
                                let _ = socket.send_to(&bytes, peer);
                            }
                        }
                        Err(e)
                            if matches!(
                                e.kind(),
                                ErrorKind::WouldBlock
                                    | ErrorKind::TimedOut
                                    | ErrorKind::Interrupted
                                    | ErrorKind::ConnectionRefused
                                    | ErrorKind::ConnectionReset
                            ) => {}
                        Err(e) => return Err(e),
                    }
                }
            }
        }
    }

    fn serve_connection(&self, conn: TcpStream, done: &impl Fn() -> bool) -> io::Result<()> {
        conn.set_nonblocking(false)?;
        conn.set_read_timeout(Some(POLL))?;
        let mut writer = conn.try_clone()?;
        let mut reader = BufReader::new(conn);
        let mut frame = Vec::new();
        // Set while discarding the rest of an oversized frame.
        let mut skipping = false;
        loop {
            let room = (MAX_FRAME + 1 - frame.len()) as u64;
            let read = (&mut reader).take(room).read_until(b'\n', &mut frame);
            let finished = match read {
                Ok(0) => true,
                Ok(_) => false,
                Err(e)
                    if matches!(
                        e.kind(),
                        ErrorKind::WouldBlock | ErrorKind::TimedOut | ErrorKind::Interrupted
                    ) =>
                {
                    if done() {
                        return Ok(());
                    }
                    false
                }
                Err(e) if matches!(e.kind(), ErrorKind::ConnectionReset | ErrorKind::BrokenPipe) => return Ok(()),
                Err(e) => return Err(e),
            };
            let complete = frame.last() == Some(&b'\n');
            if frame.len() > MAX_FRAME && !complete {
                frame.clear();
                if !skipping {
                    skipping = true;
                    if reply(&mut writer, Ack::error("frame too long")).is_err() {
                        return Ok(());
                    }
                }
                continue;
            }
            if skipping && (complete || finished) {
                skipping = false;
                frame.clear();
            }
            if frame.is_empty() && finished {
                return Ok(());
            }
            if frame.last() == Some(&b'\n') || finished {
                let ack = handle_frame(&mut lock(&self.state), &frame, &self.dump_path);
                frame.clear();
                if let Some(ack) = ack {
                    if reply(&mut writer, ack).is_err() {
                        return Ok(());
                    }
                }
            }
            if finished {
                return Ok(());
            }
        }
    }

    /// Runs the server on a background thread.
    pub fn spawn(self) -> io::Result<ServerHandle> {
        let addr = self.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let state = Arc::clone(&self.state);
        let flag = Arc::clone(&stop);
        let thread = std::thread::Builder::new()
            .name("scene-server".into())
            .spawn(move || self.run(&flag))?;
        Ok(ServerHandle {
            addr,
            stop,
            state,
            thread: Some(thread),
        })
    }
}

fn reply(writer: &mut TcpStream, ack: Ack) -> io::Result<()> {
    let bytes = encode_for(&SceneMessage::Ack(ack), Transport::Stream).expect("acks always encode");
    writer.write_all(&bytes)
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn state(&self) -> SceneState {
        lock(&self.state).clone()
    }

    pub fn shutdown(mut self) -> io::Result<()> {
        self.stop_and_join()
    }

    fn stop_and_join(&mut self) -> io::Result<()> {
        self.stop.store(true, Ordering::SeqCst);
        match self.thread.take() {
            Some(t) => t.join().map_err(|_| io::Error::other("server thread panicked"))?,
            None => Ok(()),
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        let _ = self.stop_and_join();
    }
}
