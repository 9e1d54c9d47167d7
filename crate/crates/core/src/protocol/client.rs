use std::io::{self, BufRead, BufReader, Write};
use std::net::{TcpStream, ToSocketAddrs};

use super::{Request, ResetPayload, Response};
use crate::world::Action;

/// Blocking protocol client over one connection.
pub struct ProtocolClient {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
}

impl ProtocolClient {
    pub fn connect(addr: impl ToSocketAddrs) -> io::Result<ProtocolClient> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        Ok(ProtocolClient { writer: stream.try_clone()?, reader: BufReader::new(stream) })
    }

    /// Send one raw line and return the raw response line.
    pub fn raw(&mut self, line: &str) -> io::Result<String> {
        self.writer.write_all(line.as_bytes())?;
        self.writer.write_all(b"\n")?;
        self.writer.flush()?;
        let mut out = String::new();
        if self.reader.read_line(&mut out)? == 0 {
            return Err(io::Error::new(io::ErrorKind::UnexpectedEof, "server closed the connection"));
        }
        Ok(out.trim_end().to_string())
    }

    pub fn request(&mut self, req: &Request) -> io::Result<Response> {
        let line = self.raw(&req.to_json().to_string())?;
        serde_json::from_str(&line).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }

    pub fn reset(&mut self, payload: ResetPayload) -> io::Result<Response> {
        self.request(&Request::Reset(payload))
    }

    pub fn step(&mut self, session: &str, action: &Action) -> io::Result<Response> {
        self.request(&Request::Step { session: session.to_string(), action: action.clone() })
    }

    pub fn observe(&mut self, session: &str) -> io::Result<Response> {
        self.request(&Request::Observe { session: session.to_string() })
    }

    pub fn info(&mut self) -> io::Result<Response> {
        self.request(&Request::Info)
    }

    pub fn close(&mut self, session: &str) -> io::Result<Response> {
        self.request(&Request::Close { session: session.to_string() })
    }
}
