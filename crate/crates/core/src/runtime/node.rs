// Copyright 2026 The Offload Authors
// SPDX-License-Identifier: Apache-2.0

//! The clone side and the transports that reach it.

use std::collections::BTreeMap;
use std::io;
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::sync::Arc;
use std::thread;

use log::{debug, warn};

use super::wire::{read_message, write_message, Message};
use super::RuntimeError;
use crate::migrator::{capture_return, deserialize, elide_templates, resume, serialize};
use crate::minivm::{NoHooks, Program, RunStop, Vm, VmConfig};

/// Clone oids start here so they are easy to tell apart in logs.
pub const CLONE_OID_BASE: u64 = 1_000_000;

/// A clone node. Holds the installed (rewritten) programs by identifier and
/// runs each incoming thread on a fresh VM. Native handler state is the one
/// thing that outlives a migration: natives of a type only ever run on one
/// node, so the clone keeps their state for the length of a session.
#[derive(Debug, Clone, Default)]
pub struct CloneNode {
    programs: BTreeMap<String, Arc<Program>>,
}

impl CloneNode {
    pub fn new() -> CloneNode {
        CloneNode::default()
    }

    pub fn install(&mut self, program_id: impl Into<String>, program: Arc<Program>) {
        self.programs.insert(program_id.into(), program);
    }

    pub fn programs(&self) -> impl Iterator<Item = &str> {
        self.programs.keys().map(String::as_str)
    }

    /// Resumes the captured thread, runs it until it re-integrates and
    /// returns the serialized return capture with the work spent.
    pub fn execute(
        &self,
        session: &mut NativeState,
        program_id: &str,
        bytes: &[u8],
    ) -> Result<(u64, Vec<u8>), RuntimeError> {
        let program = self
            .programs
            .get(program_id)
            .ok_or_else(|| RuntimeError::UnknownProgram(program_id.to_string()))?;
        let capture = deserialize(bytes)?;
        let config = VmConfig { oid_base: CLONE_OID_BASE, ..VmConfig::default() };
        let mut vm = Vm::new(Arc::clone(program), config)?;
        vm.set_native_state(session.clone());
        let thread = resume(&capture, &mut vm)?;
        match vm.run_thread(thread.tid, &mut NoHooks)? {
            RunStop::Reintegrated => {}
            other => return Err(RuntimeError::UnexpectedStop(other)),
        }
        let back = elide_templates(&capture_return(&vm, &thread)?, &thread.registry);
        *session = vm.native_state().clone();
        Ok((vm.clock().work(), serialize(&back)))
    }

    /// Answers one request. Failures become `ERROR` replies.
    pub fn handle(&self, session: &mut NativeState, msg: Message) -> Message {
        match msg {
            Message::Ping => Message::Ping,
            Message::Migrate { program_id, capture } => match self.execute(session, &program_id, &capture) {
                Ok((clone_work, capture)) => Message::Return { clone_work, capture },
                Err(e) => {
                    warn!("rejecting migration of {program_id}: {e}");
                    Message::Error(e.to_string())
                }
            },
            other => Message::Error(format!("unexpected request {:?}", kind_name(&other))),
        }
    }
}

fn kind_name(msg: &Message) -> &'static str {
    match msg {
        Message::Migrate { .. } => "MIGRATE",
        Message::Return { .. } => "RETURN",
        Message::Error(_) => "ERROR",
        Message::Ping => "PING",
    }
}

/// Native handler state of one session, by declaring type.
pub type NativeState = BTreeMap<String, i64>;

/// Moves a serialized thread to a clone and brings the answer back.
pub trait Transport {
    /// Sends a capture and returns `(clone work, return capture)`.
    fn migrate(&mut self, program_id: &str, capture: Vec<u8>) -> Result<(u64, Vec<u8>), RuntimeError>;
}

/// Clone in the same process. Still goes through full serialization. One
/// value is one session.
#[derive(Debug, Clone)]
pub struct InProcess {
    pub node: Arc<CloneNode>,
    natives: NativeState,
}

impl InProcess {
    pub fn new(node: Arc<CloneNode>) -> InProcess {
        InProcess { node, natives: NativeState::new() }
    }
}

impl Transport for InProcess {
    fn migrate(&mut self, program_id: &str, capture: Vec<u8>) -> Result<(u64, Vec<u8>), RuntimeError> {
        let request = Message::Migrate { program_id: program_id.to_string(), capture };
        // Round-trip the framing too, so both transports see the same bytes.
        let body = request.encode();
        let request = Message::decode(&body[4..]).map_err(RuntimeError::Protocol)?;
        reply_payload(self.node.handle(&mut self.natives, request))
    }
}

/// Clone reached over TCP. The connection is the session.
#[derive(Debug)]
pub struct TcpTransport {
    stream: TcpStream,
}

impl TcpTransport {
    pub fn connect(addr: impl ToSocketAddrs) -> Result<TcpTransport, RuntimeError> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        Ok(TcpTransport { stream })
    }

    pub fn ping(&mut self) -> Result<(), RuntimeError> {
        write_message(&mut self.stream, &Message::Ping)?;
        match read_message(&mut self.stream)? {
            Some(Message::Ping) => Ok(()),
            Some(other) => Err(RuntimeError::Protocol(format!("expected PING, got {}", kind_name(&other)))),
            None => Err(RuntimeError::Protocol("connection closed".into())),
        }
    }
}

impl Transport for TcpTransport {
    fn migrate(&mut self, program_id: &str, capture: Vec<u8>) -> Result<(u64, Vec<u8>), RuntimeError> {
        write_message(&mut self.stream, &Message::Migrate { program_id: program_id.to_string(), capture })?;
        match read_message(&mut self.stream)? {
            Some(reply) => reply_payload(reply),
            None => Err(RuntimeError::Protocol("connection closed".into())),
        }
    }
}

fn reply_payload(reply: Message) -> Result<(u64, Vec<u8>), RuntimeError> {
    match reply {
        Message::Return { clone_work, capture } => Ok((clone_work, capture)),
        Message::Error(text) => Err(RuntimeError::Remote(text)),
        other => Err(RuntimeError::Protocol(format!("expected RETURN, got {}", kind_name(&other)))),
    }
}

/// Serves one connection until the peer hangs up. Malformed frames get an
/// `ERROR` reply and close the connection.
pub fn serve_connection(node: &CloneNode, mut stream: TcpStream) -> io::Result<()> {
    let mut natives = NativeState::new();
    loop {
        match read_message(&mut stream) {
            Ok(Some(msg)) => write_message(&mut stream, &node.handle(&mut natives, msg))?,
            Ok(None) => return Ok(()),
            Err(e) if e.kind() == io::ErrorKind::InvalidData => {
                write_message(&mut stream, &Message::Error(e.to_string()))?;
                return Ok(());
            }
            Err(e) => return Err(e),
        }
    }
}

/// Accepts connections forever (or `limit` of them), one thread each.
pub fn serve_clone(listener: TcpListener, node: Arc<CloneNode>, limit: Option<usize>) -> io::Result<()> {
    let mut handles = Vec::new();
    for (n, stream) in listener.incoming().enumerate() {
        let stream = stream?;
        debug!("clone connection from {:?}", stream.peer_addr().ok());
        let node = Arc::clone(&node);
        handles.push(thread::spawn(move || {
            if let Err(e) = serve_connection(&node, stream) {
                warn!("clone connection failed: {e}");
            }
        }));
        if limit.is_some_and(|l| n + 1 >= l) {
            break;
        }
    }
    for h in handles {
        let _ = h.join();
    }
    Ok(())
}
