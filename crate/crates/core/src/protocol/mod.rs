//! Line-delimited JSON scene protocol: messages, a headless receiver, and a
//! sender.

mod client;
mod message;
mod server;

pub use client::{scene_messages, send_scene, send_scene_filtered, AckSummary, SendOptions};
pub use message::{
    decode, encode, encode_datagram, encode_for, Ack, AckStatus, Commit, Hello, SceneMessage, Spawn, Tile, Transport,
    DEFAULT_PORT, PROTOCOL_VERSION,
};
pub use server::{handle_frame, SceneDump, SceneServer, SceneState, ServerHandle};

#[derive(Debug, thiserror::Error)]
pub enum ProtocolError {
    #[error("malformed frame: {0}")]
    MalformedFrame(String),
    #[error("unknown message type `{0}`")]
    UnknownType(String),
    #[error("field out of range: {0}")]
    FieldOutOfRange(String),
    #[error("cannot encode message: {0}")]
    InvalidMessage(String),
    #[error("invalid endpoint {0}")]
    InvalidEndpoint(String),
    #[error("connection refused by {0}")]
    ConnectionRefused(String),
    #[error("server rejected the scene: {detail}")]
    NackReceived { detail: String },
    #[error("timed out waiting for acknowledgement")]
    Timeout,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
