use std::io::{self, Write};
use std::sync::mpsc;

use crate::protocol::{encode_engine_into, ControlMessage, EngineMessage};

/// Receives engine messages in emission order.
pub trait EventSink {
    fn emit(&mut self, msg: EngineMessage);

    /// Called whenever the session waits for its next command.
    fn flush(&mut self) {}
}

impl EventSink for Vec<EngineMessage> {
    fn emit(&mut self, msg: EngineMessage) {
        self.push(msg);
    }
}

impl<S: EventSink + ?Sized> EventSink for &mut S {
    fn emit(&mut self, msg: EngineMessage) {
        (**self).emit(msg)
    }

    fn flush(&mut self) {
        (**self).flush()
    }
}

impl<S: EventSink + ?Sized> EventSink for Box<S> {
    fn emit(&mut self, msg: EngineMessage) {
        (**self).emit(msg)
    }

    fn flush(&mut self) {
        (**self).flush()
    }
}

/// Discards everything.
#[derive(Debug, Default, Clone, Copy)]
pub struct NullSink;

impl EventSink for NullSink {
    fn emit(&mut self, _msg: EngineMessage) {}
}

/// Sends every message to both sinks.
#[derive(Debug, Default)]
pub struct Tee<A, B>(pub A, pub B);

impl<A: EventSink, B: EventSink> EventSink for Tee<A, B> {
    fn emit(&mut self, msg: EngineMessage) {
        self.0.emit(msg.clone());
        self.1.emit(msg);
    }

    fn flush(&mut self) {
        self.0.flush();
        self.1.flush();
    }
}

/// Encodes messages as frames onto a writer. The first write or encoding
/// error is kept and later output is dropped.
#[derive(Debug)]
pub struct FrameWriter<W: Write> {
    out: W,
    buf: String,
    error: Option<io::Error>,
}

impl<W: Write> FrameWriter<W> {
    pub fn new(out: W) -> Self {
        FrameWriter {
            out,
            buf: String::with_capacity(1 << 16),
            error: None,
        }
    }

    fn drain(&mut self) {
        if self.error.is_none() && !self.buf.is_empty() {
            if let Err(e) = self.out.write_all(self.buf.as_bytes()) {
                self.error = Some(e);
            }
        }
        self.buf.clear();
    }

    /// Flushes and returns the writer, or the first error seen.
    pub fn finish(mut self) -> io::Result<W> {
        EventSink::flush(&mut self);
        match self.error.take() {
            Some(e) => Err(e),
            None => Ok(self.out),
        }
    }

    pub fn error(&self) -> Option<&io::Error> {
        self.error.as_ref()
    }
}

impl<W: Write> EventSink for FrameWriter<W> {
    fn emit(&mut self, msg: EngineMessage) {
        if let Err(e) = encode_engine_into(&msg, &mut self.buf) {
            if self.error.is_none() {
                self.error = Some(io::Error::new(io::ErrorKind::InvalidData, e));
            }
        }
        if self.buf.len() >= 1 << 16 {
            self.drain();
        }
    }

    fn flush(&mut self) {
        self.drain();
        if self.error.is_none() {
            if let Err(e) = self.out.flush() {
                self.error = Some(e);
            }
        }
    }
}

/// Engine output for a connection: messages, plus a marker at every wait.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outbound {
    Message(EngineMessage),
    Flush,
    /// Ends the connection once everything before it is written.
    Close,
}

/// Forwards messages over a channel; a closed channel drops them.
#[derive(Debug, Clone)]
pub struct ChannelSink(pub mpsc::Sender<Outbound>);

impl EventSink for ChannelSink {
    fn emit(&mut self, msg: EngineMessage) {
        let _ = self.0.send(Outbound::Message(msg));
    }

    fn flush(&mut self) {
        let _ = self.0.send(Outbound::Flush);
    }
}

/// Source of commands that arrive while a search runs.
pub trait ControlChannel: Send {
    /// A pending command, without blocking.
    fn poll(&mut self) -> Option<ControlMessage>;

    /// The next command, blocking until one arrives; `None` once the
    /// channel is closed or drained.
    fn wait(&mut self) -> Option<ControlMessage> {
        self.poll()
    }
}

impl ControlChannel for mpsc::Receiver<ControlMessage> {
    fn poll(&mut self) -> Option<ControlMessage> {
        self.try_recv().ok()
    }

    fn wait(&mut self) -> Option<ControlMessage> {
        self.recv().ok()
    }
}

impl ControlChannel for std::collections::VecDeque<ControlMessage> {
    fn poll(&mut self) -> Option<ControlMessage> {
        self.pop_front()
    }
}
