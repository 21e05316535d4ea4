//! The engine/GUI message vocabulary, its line codec, a stream validator
//! and a TCP/WebSocket server.

mod codec;
mod message;
mod server;
mod validate;

pub use codec::{
    decode, decode_control, decode_engine, encode, encode_control, encode_engine,
    encode_engine_into, DecodeError, DecodeErrorKind, EncodeError, MAX_FRAME_LEN,
};
pub use message::{ControlMessage, Direction, EngineMessage, Message, WireId};
pub use server::{Server, SessionFactory, MAX_LATENCY};
pub use validate::{StreamValidator, ValidationError};
