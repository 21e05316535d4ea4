//! One session per connection, over raw lines or WebSocket.
//!
//! A connection whose first bytes are `GET ` is upgraded to a WebSocket
//! carrying one frame per text message; anything else speaks the line
//! protocol directly.

use std::io::{self, BufRead, BufReader, Read, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender, TryRecvError};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use tungstenite::{Message as WsMessage, WebSocket};

use super::{decode_control, encode_engine_into, ControlMessage, EngineMessage, MAX_FRAME_LEN};
use crate::session::{ChannelSink, ControlChannel, Outbound, Session, SessionError};

/// Longest time a frame waits in the outbound batch.
pub const MAX_LATENCY: Duration = Duration::from_millis(20);

/// Builds the session for a new connection.
pub type SessionFactory =
    Arc<dyn Fn(ChannelSink) -> Result<Session<ChannelSink>, SessionError> + Send + Sync>;

pub struct Server {
    listener: TcpListener,
    factory: SessionFactory,
}

impl Server {
    pub fn bind(addr: impl ToSocketAddrs, factory: SessionFactory) -> io::Result<Server> {
        Ok(Server {
            listener: TcpListener::bind(addr)?,
            factory,
        })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    /// Accepts connections until the listener fails.
    pub fn run(self) -> io::Result<()> {
        for stream in self.listener.incoming() {
            let stream = stream?;
            let factory = Arc::clone(&self.factory);
            thread::spawn(move || {
                let peer = stream.peer_addr().ok();
                log::info!("connection from {peer:?}");
                if let Err(e) = connection(stream, factory) {
                    log::warn!("connection {peer:?}: {e}");
                }
                log::info!("connection {peer:?} closed");
            });
        }
        Ok(())
    }

    pub fn spawn(self) -> JoinHandle<io::Result<()>> {
        thread::spawn(move || self.run())
    }
}

/// Control commands from the peer. A dropped peer reads as one `clear`,
/// so a running search stops at its next poll.
struct Inbound {
    rx: Receiver<ControlMessage>,
    closed: bool,
}

impl ControlChannel for Inbound {
    fn poll(&mut self) -> Option<ControlMessage> {
        match self.rx.try_recv() {
            Ok(c) => Some(c),
            Err(TryRecvError::Disconnected) if !self.closed => {
                self.closed = true;
                Some(ControlMessage::Clear)
            }
            Err(_) => None,
        }
    }

    fn wait(&mut self) -> Option<ControlMessage> {
        self.rx.recv().ok()
    }
}

fn start_session(
    factory: SessionFactory,
    out: Sender<Outbound>,
) -> (Sender<ControlMessage>, JoinHandle<()>) {
    let (ctl_tx, ctl_rx) = mpsc::channel();
    let handle = thread::spawn(move || {
        let sink = ChannelSink(out.clone());
        match factory(sink) {
            Ok(mut session) => {
                session.set_control(Box::new(Inbound {
                    rx: ctl_rx,
                    closed: false,
                }));
                session.serve_commands();
            }
            Err(e) => {
                let _ = out.send(Outbound::Message(EngineMessage::Error {
                    message: e.to_string(),
                }));
                let _ = out.send(Outbound::Close);
            }
        }
    });
    (ctl_tx, handle)
}

/// How long a silent peer may delay the transport choice; a raw client
/// may wait for the greeting frames before sending anything.
const SNIFF_TIMEOUT: Duration = Duration::from_millis(200);

fn connection(stream: TcpStream, factory: SessionFactory) -> io::Result<()> {
    let mut head = [0u8; 4];
    let start = Instant::now();
    stream.set_read_timeout(Some(SNIFF_TIMEOUT))?;
    let n = loop {
        let n = match stream.peek(&mut head) {
            Ok(n) => n,
            Err(e)
                if matches!(
                    e.kind(),
                    io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut
                ) =>
            {
                0
            }
            Err(e) => return Err(e),
        };
        if n == head.len() || !b"GET ".starts_with(&head[..n]) || start.elapsed() >= SNIFF_TIMEOUT {
            break n;
        }
        thread::sleep(Duration::from_millis(1));
    };
    stream.set_read_timeout(None)?;
    if n == 4 && &head == b"GET " {
        websocket(stream, factory)
    } else {
        raw(stream, factory)
    }
}

fn diagnostic(message: String) -> Outbound {
    Outbound::Message(EngineMessage::Error { message })
}

fn raw(stream: TcpStream, factory: SessionFactory) -> io::Result<()> {
    let (out_tx, out_rx) = mpsc::channel();
    let (ctl_tx, session) = start_session(factory, out_tx.clone());
    let writer = {
        let mut w = stream.try_clone()?;
        thread::spawn(move || {
            batch(out_rx, |frames| {
                w.write_all(frames.as_bytes())?;
                w.flush()
            });
            let _ = w.shutdown(Shutdown::Both);
        })
    };
    let mut reader = BufReader::new(stream);
    let mut line = Vec::new();
    loop {
        line.clear();
        let n = (&mut reader)
            .take(MAX_FRAME_LEN as u64 + 1)
            .read_until(b'\n', &mut line)?;
        if n == 0 {
            break;
        }
        if line.last() != Some(&b'\n') && n > MAX_FRAME_LEN {
            let _ = out_tx.send(diagnostic(format!(
                "frame longer than {MAX_FRAME_LEN} bytes"
            )));
            let _ = out_tx.send(Outbound::Close);
            break;
        }
        match inbound(&line) {
            Ok(cmd) => {
                if ctl_tx.send(cmd).is_err() {
                    break;
                }
            }
            Err(message) => {
                let _ = out_tx.send(diagnostic(message));
                let _ = out_tx.send(Outbound::Close);
                break;
            }
        }
    }
    drop(ctl_tx);
    drop(out_tx);
    let _ = session.join();
    let _ = writer.join();
    Ok(())
}

fn inbound(bytes: &[u8]) -> Result<ControlMessage, String> {
    let text = std::str::from_utf8(bytes).map_err(|e| format!("frame is not UTF-8: {e}"))?;
    let text = text.strip_suffix('\n').unwrap_or(text);
    let text = text.strip_suffix('\r').unwrap_or(text);
    decode_control(text).map_err(|e| e.to_string())
}

/// Writes session output in batches: at every wait marker and at most
/// `MAX_LATENCY` after the first unwritten frame. Returns on `Close`, when
/// the channel closes or when writing fails.
fn batch(rx: Receiver<Outbound>, mut write: impl FnMut(&str) -> io::Result<()>) {
    let mut buf = String::new();
    let mut deadline: Option<Instant> = None;
    loop {
        let next = match deadline {
            Some(d) => rx.recv_timeout(d.saturating_duration_since(Instant::now())),
            None => rx.recv().map_err(|_| RecvTimeoutError::Disconnected),
        };
        let (send, stop) = match next {
            Ok(Outbound::Message(m)) => {
                if encode_engine_into(&m, &mut buf).is_err() {
                    log::warn!("dropping unencodable frame {m:?}");
                }
                let due = *deadline.get_or_insert_with(|| Instant::now() + MAX_LATENCY);
                (Instant::now() >= due, false)
            }
            Ok(Outbound::Flush) | Err(RecvTimeoutError::Timeout) => (true, false),
            Ok(Outbound::Close) | Err(RecvTimeoutError::Disconnected) => (true, true),
        };
        if send {
            if !buf.is_empty() && write(&buf).is_err() {
                return;
            }
            buf.clear();
            deadline = None;
        }
        if stop {
            return;
        }
    }
}

fn websocket(stream: TcpStream, factory: SessionFactory) -> io::Result<()> {
    let mut ws = tungstenite::accept(stream).map_err(|e| io::Error::other(e.to_string()))?;
    ws.get_ref()
        .set_read_timeout(Some(Duration::from_millis(5)))?;
    let (out_tx, out_rx) = mpsc::channel();
    let (ctl_tx, session) = start_session(factory, out_tx.clone());
    drop(out_tx);
    let mut ctl_tx = Some(ctl_tx);
    let mut buf = String::new();
    let mut deadline: Option<Instant> = None;
    let mut closing = false;
    'io: loop {
        loop {
            match out_rx.try_recv() {
                Ok(Outbound::Message(m)) => {
                    let _ = encode_engine_into(&m, &mut buf);
                    deadline.get_or_insert_with(|| Instant::now() + MAX_LATENCY);
                }
                Ok(Outbound::Flush) => deadline = Some(Instant::now()),
                Ok(Outbound::Close) | Err(TryRecvError::Disconnected) => {
                    closing = true;
                    break;
                }
                Err(TryRecvError::Empty) => break,
            }
        }
        if closing || deadline.is_some_and(|d| Instant::now() >= d) {
            if ws_send(&mut ws, &buf).is_err() {
                break 'io;
            }
            buf.clear();
            deadline = None;
        }
        if closing {
            let _ = ws.close(None);
            let _ = ws.flush();
            break;
        }
        match ws.read() {
            Ok(WsMessage::Text(t)) => {
                let Some(tx) = &ctl_tx else { continue };
                match inbound(t.as_str().as_bytes()) {
                    Ok(cmd) => {
                        let _ = tx.send(cmd);
                    }
                    Err(message) => {
                        let mut frame = String::new();
                        let _ = encode_engine_into(&EngineMessage::Error { message }, &mut frame);
                        buf.push_str(&frame);
                        // the session drains and ends; then the socket closes
                        ctl_tx = None;
                    }
                }
            }
            Ok(WsMessage::Close(_)) => ctl_tx = None,
            Ok(_) => {}
            Err(tungstenite::Error::Io(e))
                if matches!(
                    e.kind(),
                    io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut
                ) => {}
            Err(_) => break,
        }
    }
    drop(ctl_tx);
    drop(out_rx);
    let _ = session.join();
    Ok(())
}

fn ws_send(ws: &mut WebSocket<TcpStream>, frames: &str) -> Result<(), tungstenite::Error> {
    for line in frames.split_inclusive('\n') {
        ws.write(WsMessage::text(line))?;
    }
    ws.flush()
}
