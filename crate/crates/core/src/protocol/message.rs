use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::ProtocolError;

pub const PROTOCOL_VERSION: u32 = 1;
pub const DEFAULT_PORT: u16 = 7777;

/// Opens a session and declares the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hello {
    pub protocol_version: u32,
    pub grid_width: u32,
    pub grid_height: u32,
    /// World units per cell; the only pixel-to-world scale in the system.
    pub tile_size: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tile {
    pub x: u32,
    pub y: u32,
    pub code: u8,
}

/// An agent placed in the scene, in world units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Spawn {
    pub kind: String,
    pub x: f64,
    pub y: f64,
    /// Radians.
    pub heading: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Commit {
    pub scene_id: String,
    /// Number of tiles the sender emitted in this session; lets the server
    /// detect lost datagrams.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tile_count: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AckStatus {
    Ok,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ack {
    pub status: AckStatus,
    pub detail: String,
}

impl Ack {
    pub fn ok(detail: impl Into<String>) -> Self {
        Self {
            status: AckStatus::Ok,
            detail: detail.into(),
        }
    }

    pub fn error(detail: impl Into<String>) -> Self {
        Self {
            status: AckStatus::Error,
            detail: detail.into(),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == AckStatus::Ok
    }
}

/// One protocol message. On the wire: a JSON object whose `type` field names
/// the variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum SceneMessage {
    Hello(Hello),
    Tile(Tile),
    Spawn(Spawn),
    Clear,
    Commit(Commit),
    Ack(Ack),
}

/// How messages are delimited on a transport.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Transport {
    /// TCP, newline-delimited.
    Stream,
    /// UDP, one message per datagram.
    Datagram,
}

fn out_of_range(detail: impl Into<String>) -> ProtocolError {
    ProtocolError::FieldOutOfRange(detail.into())
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

impl SceneMessage {
    pub fn type_name(&self) -> &'static str {
        match self {
            SceneMessage::Hello(_) => "hello",
            SceneMessage::Tile(_) => "tile",
            SceneMessage::Spawn(_) => "spawn",
            SceneMessage::Clear => "clear",
            SceneMessage::Commit(_) => "commit",
            SceneMessage::Ack(_) => "ack",
        }
    }

    /// Checks field ranges that the types alone do not enforce.
    pub fn validate(&self) -> Result<(), ProtocolError> {
        match self {
            SceneMessage::Hello(h) => {
                if h.protocol_version != PROTOCOL_VERSION {
                    return Err(out_of_range(format!(
                        "protocol_version {} (supported: {PROTOCOL_VERSION})",
                        h.protocol_version
                    )));
                }
                if h.grid_width == 0 || h.grid_height == 0 {
                    return Err(out_of_range("grid dimensions must be positive"));
                }
                if !h.tile_size.is_finite() || h.tile_size <= 0.0 {
                    return Err(out_of_range("tile_size must be positive and finite"));
                }
            }
            SceneMessage::Tile(t) => {
                if t.code > 15 {
                    return Err(out_of_range(format!("tile code {} not in 0..=15", t.code)));
                }
            }
            SceneMessage::Spawn(s) => {
                if !is_identifier(&s.kind) {
                    return Err(out_of_range(format!("spawn kind {:?} is not an identifier", s.kind)));
                }
                if !(s.x.is_finite() && s.y.is_finite() && s.heading.is_finite()) {
                    return Err(out_of_range("spawn coordinates must be finite"));
                }
            }
            SceneMessage::Commit(c) => {
                if c.scene_id.is_empty() {
                    return Err(out_of_range("scene_id must be non-empty"));
                }
            }
            SceneMessage::Clear | SceneMessage::Ack(_) => {}
        }
        Ok(())
    }
}

/// Single-line JSON for a datagram (no trailing newline).
pub fn encode_datagram(msg: &SceneMessage) -> Result<Vec<u8>, ProtocolError> {
    msg.validate()?;
    serde_json::to_vec(msg).map_err(|e| ProtocolError::InvalidMessage(e.to_string()))
}

/// Single-line JSON terminated by `\n`, for stream transports.
pub fn encode(msg: &SceneMessage) -> Result<Vec<u8>, ProtocolError> {
    let mut bytes = encode_datagram(msg)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn encode_for(msg: &SceneMessage, transport: Transport) -> Result<Vec<u8>, ProtocolError> {
    match transport {
        Transport::Stream => encode(msg),
        Transport::Datagram => encode_datagram(msg),
    }
}

fn variant<T: DeserializeOwned>(fields: Map<String, Value>) -> Result<T, ProtocolError> {
    serde_json::from_value(Value::Object(fields)).map_err(|e| out_of_range(e.to_string()))
}

/// Parses one framed message (an optional trailing newline is accepted).
pub fn decode(bytes: &[u8]) -> Result<SceneMessage, ProtocolError> {
    let bytes = bytes.strip_suffix(b"\n").unwrap_or(bytes);
    let bytes = bytes.strip_suffix(b"\r").unwrap_or(bytes);
    let text = std::str::from_utf8(bytes).map_err(|_| ProtocolError::MalformedFrame("frame is not UTF-8".into()))?;
    let value: Value =
        serde_json::from_str(text).map_err(|e| ProtocolError::MalformedFrame(format!("not JSON: {e}")))?;
    let Value::Object(mut fields) = value else {
        return Err(ProtocolError::MalformedFrame("frame is not a JSON object".into()));
    };
    let kind = match fields.remove("type") {
        Some(Value::String(s)) => s,
        Some(_) => return Err(ProtocolError::MalformedFrame("`type` is not a string".into())),
        None => return Err(ProtocolError::MalformedFrame("missing `type`".into())),
    };
    let msg = match kind.as_str() {
        "hello" => SceneMessage::Hello(variant(fields)?),
        "tile" => SceneMessage::Tile(variant(fields)?),
        "spawn" => SceneMessage::Spawn(variant(fields)?),
        "clear" => {
            if let Some(extra) = fields.keys().next() {
                return Err(out_of_range(format!("unknown field `{extra}` in clear")));
            }
            SceneMessage::Clear
        }
        "commit" => SceneMessage::Commit(variant(fields)?),
        "ack" => SceneMessage::Ack(variant(fields)?),
        _ => return Err(ProtocolError::UnknownType(kind)),
    };
    msg.validate()?;
    Ok(msg)
}
