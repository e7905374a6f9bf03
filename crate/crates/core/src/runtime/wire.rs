// Copyright 2026 The Offload Authors
// SPDX-License-Identifier: Apache-2.0

//! Node-to-node messages: a u32 big-endian length, a type byte, a payload.

use std::io::{self, Read, Write};

pub const MSG_MIGRATE: u8 = 1;
pub const MSG_RETURN: u8 = 2;
pub const MSG_ERROR: u8 = 3;
pub const MSG_PING: u8 = 4;

/// Refuse anything larger than this.
pub const MAX_MESSAGE: usize = 64 << 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Message {
    /// Program identifier and an outbound capture.
    Migrate { program_id: String, capture: Vec<u8> },
    /// Clone work units spent and the return capture.
    Return { clone_work: u64, capture: Vec<u8> },
    Error(String),
    Ping,
}

impl Message {
    pub fn encode(&self) -> Vec<u8> {
        let (kind, payload) = match self {
            Message::Migrate { program_id, capture } => {
                let mut p = Vec::with_capacity(2 + program_id.len() + capture.len());
                p.extend_from_slice(&(program_id.len() as u16).to_be_bytes());
                p.extend_from_slice(program_id.as_bytes());
                p.extend_from_slice(capture);
                (MSG_MIGRATE, p)
            }
            Message::Return { clone_work, capture } => {
                let mut p = Vec::with_capacity(8 + capture.len());
                p.extend_from_slice(&clone_work.to_be_bytes());
                p.extend_from_slice(capture);
                (MSG_RETURN, p)
            }
            Message::Error(text) => (MSG_ERROR, text.as_bytes().to_vec()),
            Message::Ping => (MSG_PING, Vec::new()),
        };
        let mut out = Vec::with_capacity(5 + payload.len());
        out.extend_from_slice(&((payload.len() + 1) as u32).to_be_bytes());
        out.push(kind);
        out.extend_from_slice(&payload);
        out
    }

    /// Decodes one message body (type byte and payload, without the length).
    pub fn decode(body: &[u8]) -> Result<Message, String> {
        let (&kind, payload) = body.split_first().ok_or("empty message")?;
        match kind {
            MSG_MIGRATE => {
                if payload.len() < 2 {
                    return Err("truncated MIGRATE".into());
                }
                let n = u16::from_be_bytes([payload[0], payload[1]]) as usize;
                let id = payload.get(2..2 + n).ok_or("truncated program id")?;
                let program_id = String::from_utf8(id.to_vec()).map_err(|_| "program id is not UTF-8")?;
                Ok(Message::Migrate { program_id, capture: payload[2 + n..].to_vec() })
            }
            MSG_RETURN => {
                let work = payload.get(..8).ok_or("truncated RETURN")?;
                let clone_work = u64::from_be_bytes(work.try_into().expect("8 bytes"));
                Ok(Message::Return { clone_work, capture: payload[8..].to_vec() })
            }
            MSG_ERROR => Ok(Message::Error(String::from_utf8_lossy(payload).into_owned())),
            MSG_PING if payload.is_empty() => Ok(Message::Ping),
            MSG_PING => Err("PING with payload".into()),
            k => Err(format!("unknown message type {k}")),
        }
    }
}

pub fn write_message(w: &mut impl Write, msg: &Message) -> io::Result<()> {
    w.write_all(&msg.encode())?;
    w.flush()
}

/// Reads one message. `Ok(None)` on a clean end of stream.
pub fn read_message(r: &mut impl Read) -> io::Result<Option<Message>> {
    let mut len = [0u8; 4];
    match r.read_exact(&mut len) {
        Ok(()) => {}
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e),
    }
    let n = u32::from_be_bytes(len) as usize;
    if n == 0 || n > MAX_MESSAGE {
        return Err(io::Error::new(io::ErrorKind::InvalidData, format!("bad message length {n}")));
    }
    let mut body = vec![0u8; n];
    r.read_exact(&mut body)?;
    Message::decode(&body).map(Some).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}
