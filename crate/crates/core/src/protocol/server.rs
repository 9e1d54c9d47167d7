use std::io::{self, BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::Arc;
use std::thread;

use super::{encode_bounded, handle_message, ErrorCode, Registry, Response};

/// Read one `\n`-terminated line of at most `limit` bytes. Longer lines are
/// consumed and reported as `Err(len)`.
fn read_bounded_line(r: &mut impl BufRead, limit: usize) -> io::Result<Option<Result<String, usize>>> {
    let mut buf = Vec::new();
    let mut len = 0usize;
    loop {
        let chunk = r.fill_buf()?;
        if chunk.is_empty() {
            return Ok((len > 0).then(|| finish(buf, len, limit)));
        }
        let (take, done) = match chunk.iter().position(|&b| b == b'\n') {
            Some(i) => (i + 1, true),
            None => (chunk.len(), false),
        };
        let body = if done { &chunk[..take - 1] } else { &chunk[..take] };
        if len + body.len() <= limit {
            buf.extend_from_slice(body);
        }
        len += body.len();
        r.consume(take);
        if done {
            return Ok(Some(finish(buf, len, limit)));
        }
    }
}

fn finish(buf: Vec<u8>, len: usize, limit: usize) -> Result<String, usize> {
    if len > limit {
        return Err(len);
    }
    Ok(String::from_utf8_lossy(&buf).into_owned())
}

fn connection(stream: TcpStream, reg: &Registry) -> io::Result<()> {
    let mut writer = stream.try_clone()?;
    let mut reader = BufReader::new(stream);
    while let Some(line) = read_bounded_line(&mut reader, reg.max_message_bytes)? {
        let reply = match line {
            Ok(l) if l.trim().is_empty() => continue,
            Ok(l) => handle_message(reg, l.trim_end_matches('\r')),
            Err(n) => encode_bounded(
                &Response::error(ErrorCode::Size, format!("request of {n} bytes exceeds the {} byte bound", reg.max_message_bytes), None),
                reg.max_message_bytes,
            ),
        };
        writer.write_all(reply.as_bytes())?;
        writer.write_all(b"\n")?;
        writer.flush()?;
    }
    Ok(())
}

/// Accept connections forever, one thread each.
pub fn serve(listener: TcpListener, reg: Arc<Registry>) -> io::Result<()> {
    for stream in listener.incoming() {
        let stream = stream?;
        stream.set_nodelay(true)?;
        let reg = reg.clone();
        thread::spawn(move || {
            let _ = connection(stream, &reg);
        });
    }
    Ok(())
}

/// A server running on a background thread.
pub struct ServerHandle {
    pub addr: SocketAddr,
    pub registry: Arc<Registry>,
}

impl ServerHandle {
    /// Serve `reg` on an ephemeral localhost port.
    pub fn spawn(reg: Registry) -> io::Result<ServerHandle> {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        let registry = Arc::new(reg);
        let r = registry.clone();
        thread::spawn(move || serve(listener, r));
        Ok(ServerHandle { addr, registry })
    }
}
