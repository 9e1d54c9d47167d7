use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};

use serde::{Deserialize, Serialize};

use super::{Planner, PlannerError};
use crate::tasks::Task;
use crate::world::{Action, ActionResult, ObservationFrame};

/// Messages from the harness to a planner service, one JSON object per line.
#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PlannerRequest {
    Begin { task: Task, seed: u64 },
    Act { observation: Box<ObservationFrame>, last_result: Option<ActionResult> },
}

#[derive(Debug, Default, Serialize, Deserialize)]
pub struct PlannerReply {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<Action>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Planner living in another process, reached over TCP.
pub struct RemotePlanner {
    addr: String,
    conn: Option<(BufReader<TcpStream>, TcpStream)>,
}

impl RemotePlanner {
    pub fn new(addr: &str) -> RemotePlanner {
        RemotePlanner { addr: addr.to_string(), conn: None }
    }

    fn call(&mut self, req: &PlannerRequest) -> Result<PlannerReply, PlannerError> {
        let (reader, writer) = self.conn.as_mut().ok_or_else(|| PlannerError::Protocol("not connected".into()))?;
        let mut line = serde_json::to_string(req).map_err(|e| PlannerError::Protocol(e.to_string()))?;
        line.push('\n');
        writer.write_all(line.as_bytes())?;
        let mut reply = String::new();
        if reader.read_line(&mut reply)? == 0 {
            return Err(PlannerError::Protocol("planner closed the connection".into()));
        }
        let reply: PlannerReply = serde_json::from_str(&reply).map_err(|e| PlannerError::Protocol(format!("bad reply: {e}")))?;
        if let Some(e) = reply.error {
            return Err(PlannerError::Protocol(e));
        }
        Ok(reply)
    }
}

impl Planner for RemotePlanner {
    fn name(&self) -> String {
        format!("remote:{}", self.addr)
    }

    fn reset(&mut self, task: &Task, seed: u64) -> Result<(), PlannerError> {
        let stream = TcpStream::connect(&self.addr)?;
        stream.set_nodelay(true)?;
        self.conn = Some((BufReader::new(stream.try_clone()?), stream));
        self.call(&PlannerRequest::Begin { task: task.clone(), seed })?;
        Ok(())
    }

    fn next_action(&mut self, obs: &ObservationFrame, _task: &Task, last: Option<&ActionResult>) -> Result<Action, PlannerError> {
        let reply = self.call(&PlannerRequest::Act { observation: Box::new(obs.clone()), last_result: last.cloned() })?;
        reply.action.ok_or_else(|| PlannerError::Protocol("reply carries no action".into()))
    }
}

fn serve_connection(stream: TcpStream, make: &(dyn Fn() -> Box<dyn Planner> + Sync)) -> std::io::Result<()> {
    let mut writer = stream.try_clone()?;
    let reader = BufReader::new(stream);
    let mut planner = make();
    let mut task: Option<Task> = None;
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let reply = match serde_json::from_str::<PlannerRequest>(&line) {
            Err(e) => PlannerReply { action: None, error: Some(format!("bad request: {e}")) },
            Ok(PlannerRequest::Begin { task: t, seed }) => match planner.reset(&t, seed) {
                Ok(()) => {
                    task = Some(t);
                    PlannerReply::default()
                }
                Err(e) => PlannerReply { action: None, error: Some(e.to_string()) },
            },
            Ok(PlannerRequest::Act { observation, last_result }) => match &task {
                None => PlannerReply { action: None, error: Some("act before begin".into()) },
                Some(t) => match planner.next_action(&observation, t, last_result.as_ref()) {
                    Ok(a) => PlannerReply { action: Some(a), error: None },
                    Err(e) => PlannerReply { action: None, error: Some(e.to_string()) },
                },
            },
        };
        let mut out = serde_json::to_string(&reply).expect("reply serializes");
        out.push('\n');
        writer.write_all(out.as_bytes())?;
    }
    Ok(())
}

/// Host planners built by `make`, one per connection, until the listener fails.
pub fn serve_planner(listener: TcpListener, make: impl Fn() -> Box<dyn Planner> + Send + Sync + 'static) -> std::io::Result<()> {
    let make = std::sync::Arc::new(make);
    for stream in listener.incoming() {
        let stream = stream?;
        stream.set_nodelay(true)?;
        let make = make.clone();
        std::thread::spawn(move || {
            let _ = serve_connection(stream, &*make);
        });
    }
    Ok(())
}
