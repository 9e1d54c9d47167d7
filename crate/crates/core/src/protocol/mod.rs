//! Session protocol: newline-delimited JSON requests and responses.
//!
//! Every request line yields exactly one response line. Requests carry a
//! `type` (`reset`, `step`, `observe`, `info`, `close`), a `session` for the
//! session-scoped types, and a `payload` object where one is needed.

mod client;
mod server;

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::contingency::{Difficulty, OutcomeTable};
use crate::episode::{Episode, EpisodeStatus};
use crate::kinematics::Embodiment;
use crate::proprio::{mpe_grid, MpeIndex};
use crate::tasks::{SuiteScene, Task, TaskCategory};
use crate::world::{Action, ActionResult, ObservationFrame};

pub use client::ProtocolClient;
pub use server::{serve, ServerHandle};

/// Default bound on a single response line, in bytes.
pub const DEFAULT_MAX_MESSAGE_BYTES: usize = 4 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ErrorCode {
    #[serde(rename = "E_PARSE")]
    Parse,
    #[serde(rename = "E_REQUEST")]
    Request,
    #[serde(rename = "E_SESSION")]
    Session,
    #[serde(rename = "E_TASK")]
    Task,
    #[serde(rename = "E_ACTION")]
    Action,
    #[serde(rename = "E_TERMINAL")]
    Terminal,
    #[serde(rename = "E_SIZE")]
    Size,
    #[serde(rename = "E_INTERNAL")]
    Internal,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::Parse => "E_PARSE",
            ErrorCode::Request => "E_REQUEST",
            ErrorCode::Session => "E_SESSION",
            ErrorCode::Task => "E_TASK",
            ErrorCode::Action => "E_ACTION",
            ErrorCode::Terminal => "E_TERMINAL",
            ErrorCode::Size => "E_SIZE",
            ErrorCode::Internal => "E_INTERNAL",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WireError {
    pub code: ErrorCode,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResetPayload {
    pub task: String,
    #[serde(default)]
    pub seed: u64,
    /// Defaults to the task's own difficulty.
    #[serde(default)]
    pub difficulty: Option<Difficulty>,
    /// Defaults to the scene's embodiment.
    #[serde(default)]
    pub robot: Option<Embodiment>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Request {
    Reset(ResetPayload),
    Step { session: String, action: Action },
    Observe { session: String },
    Info,
    Close { session: String },
}

impl Request {
    pub fn to_json(&self) -> Value {
        use serde_json::json;
        match self {
            Request::Reset(p) => json!({"type": "reset", "payload": p}),
            Request::Step { session, action } => json!({"type": "step", "session": session, "payload": {"action": action}}),
            Request::Observe { session } => json!({"type": "observe", "session": session}),
            Request::Info => json!({"type": "info"}),
            Request::Close { session } => json!({"type": "close", "session": session}),
        }
    }

    /// Parse one request line; the error is the response to send back.
    pub fn parse(line: &str) -> Result<Request, WireError> {
        let v: Value = serde_json::from_str(line).map_err(|e| err(ErrorCode::Parse, format!("invalid JSON: {e}")))?;
        let obj = v.as_object().ok_or_else(|| err(ErrorCode::Request, "request must be a JSON object"))?;
        for k in obj.keys() {
            if !matches!(k.as_str(), "type" | "session" | "payload") {
                return Err(err(ErrorCode::Request, format!("unknown request field {k:?}")));
            }
        }
        let kind = obj.get("type").and_then(Value::as_str).ok_or_else(|| err(ErrorCode::Request, "missing request type"))?;
        let session = || -> Result<String, WireError> {
            obj.get("session")
                .and_then(Value::as_str)
                .map(str::to_string)
                .ok_or_else(|| err(ErrorCode::Request, format!("{kind} needs a session")))
        };
        let payload = obj.get("payload").cloned().unwrap_or(Value::Null);
        match kind {
            "reset" => serde_json::from_value(payload)
                .map(Request::Reset)
                .map_err(|e| err(ErrorCode::Request, format!("bad reset payload: {e}"))),
            "step" => {
                let session = session()?;
                let action = payload.get("action").ok_or_else(|| err(ErrorCode::Action, "step payload needs an action"))?;
                let action = serde_json::from_value(action.clone()).map_err(|e| err(ErrorCode::Action, format!("malformed action: {e}")))?;
                Ok(Request::Step { session, action })
            }
            "observe" => Ok(Request::Observe { session: session()? }),
            "info" => Ok(Request::Info),
            "close" => Ok(Request::Close { session: session()? }),
            other => Err(err(ErrorCode::Request, format!("unknown request type {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskInfo {
    pub id: String,
    pub category: TaskCategory,
    pub scene: String,
    pub instruction: String,
    pub step_budget: u32,
    pub difficulty: Difficulty,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ServerInfo {
    pub version: String,
    pub tasks: Vec<TaskInfo>,
    pub scenes: Vec<String>,
    pub slow_motion: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observation: Option<ObservationFrame>,
    /// Motion-based position index of every `token_grid` entry.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mpe: Option<Vec<Vec<MpeIndex>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feedback: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<ActionResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub done: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub success: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps_used: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub digest: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub info: Option<ServerInfo>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<WireError>,
}

impl Response {
    pub fn error(code: ErrorCode, message: impl Into<String>, session: Option<String>) -> Response {
        Response { ok: false, session, error: Some(err(code, message)), ..Response::default() }
    }
}

fn err(code: ErrorCode, message: impl Into<String>) -> WireError {
    WireError { code, message: message.into() }
}

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Scene(#[from] crate::world::SceneError),
    #[error(transparent)]
    Task(#[from] crate::tasks::TaskError),
    #[error(transparent)]
    Table(#[from] crate::contingency::ContingencyError),
}

/// Server-side state: the task catalogue and the live sessions.
pub struct Registry {
    scenes: BTreeMap<String, SuiteScene>,
    tasks: BTreeMap<String, Task>,
    table: Option<Arc<OutcomeTable>>,
    pub slow_motion: bool,
    pub max_message_bytes: usize,
    sessions: RwLock<HashMap<String, Arc<Mutex<Episode>>>>,
    next_session: AtomicU64,
}

fn files_with_suffix(dir: &Path, suffix: &str) -> Result<Vec<std::path::PathBuf>, RegistryError> {
    let rd = std::fs::read_dir(dir).map_err(|e| RegistryError::Io(format!("{}: {e}", dir.display())))?;
    let mut out: Vec<_> = rd
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.file_name().and_then(|f| f.to_str()).is_some_and(|f| f.ends_with(suffix)))
        .collect();
    out.sort();
    Ok(out)
}

impl Registry {
    /// Every task must name a known scene and validate against it.
    pub fn new(scenes: Vec<SuiteScene>, tasks: Vec<Task>, table: Option<Arc<OutcomeTable>>) -> Result<Registry, RegistryError> {
        let scenes: BTreeMap<String, SuiteScene> = scenes.into_iter().map(|s| (s.name.clone(), s)).collect();
        let mut by_id = BTreeMap::new();
        for t in tasks {
            let scene = scenes
                .get(&t.scene)
                .ok_or_else(|| crate::tasks::TaskError::File(format!("task {} names unknown scene {}", t.id, t.scene)))?;
            t.validate_against(&scene.world_with(scene_embodiment(scene), table.clone())?)?;
            by_id.insert(t.id.clone(), t);
        }
        Ok(Registry {
            scenes,
            tasks: by_id,
            table,
            slow_motion: false,
            max_message_bytes: DEFAULT_MAX_MESSAGE_BYTES,
            sessions: RwLock::new(HashMap::new()),
            next_session: AtomicU64::new(1),
        })
    }

    /// Load `*.scene.json` from `scenes`, `*.task.json` from `tasks`, and an
    /// optional outcome table file.
    pub fn from_dirs(scenes: &Path, tasks: &Path, table: Option<&Path>) -> Result<Registry, RegistryError> {
        let scene_list =
            files_with_suffix(scenes, ".scene.json")?.iter().map(|p| SuiteScene::load(p)).collect::<Result<Vec<_>, _>>()?;
        let task_list = files_with_suffix(tasks, ".task.json")?.iter().map(|p| Task::load(p)).collect::<Result<Vec<_>, _>>()?;
        let table = match table {
            Some(p) => {
                let txt = std::fs::read_to_string(p).map_err(|e| RegistryError::Io(format!("{}: {e}", p.display())))?;
                Some(Arc::new(OutcomeTable::from_json(&txt)?))
            }
            None => None,
        };
        Registry::new(scene_list, task_list, table)
    }

    pub fn with_slow_motion(mut self, on: bool) -> Registry {
        self.slow_motion = on;
        self
    }

    pub fn tasks(&self) -> impl Iterator<Item = &Task> {
        self.tasks.values()
    }

    pub fn task(&self, id: &str) -> Option<&Task> {
        self.tasks.get(id)
    }

    pub fn session_count(&self) -> usize {
        self.sessions.read().expect("session map").len()
    }

    fn session(&self, id: &str) -> Option<Arc<Mutex<Episode>>> {
        self.sessions.read().expect("session map").get(id).cloned()
    }

    pub fn info(&self) -> ServerInfo {
        ServerInfo {
            version: env!("CARGO_PKG_VERSION").to_string(),
            tasks: self
                .tasks
                .values()
                .map(|t| TaskInfo {
                    id: t.id.clone(),
                    category: t.category,
                    scene: t.scene.clone(),
                    instruction: t.instruction.clone(),
                    step_budget: t.step_budget,
                    difficulty: t.difficulty,
                })
                .collect(),
            scenes: self.scenes.keys().cloned().collect(),
            slow_motion: self.slow_motion,
        }
    }
}

fn scene_embodiment(s: &SuiteScene) -> Embodiment {
    s.file.robot.embodiment
}

fn observation_response(session: &str, ep: &Episode) -> Response {
    let obs = ep.observe();
    Response {
        ok: true,
        session: Some(session.to_string()),
        mpe: Some(mpe_grid(&obs)),
        observation: Some(obs),
        done: Some(ep.is_done()),
        success: Some(ep.status == EpisodeStatus::Succeeded),
        steps_used: Some(ep.steps_used),
        digest: Some(ep.world.digest_hex()),
        ..Response::default()
    }
}

/// Answer one typed request. Errors leave every session untouched.
pub fn handle_request(reg: &Registry, req: Request) -> Response {
    match req {
        Request::Info => Response { ok: true, info: Some(reg.info()), ..Response::default() },
        Request::Reset(p) => {
            let Some(task) = reg.tasks.get(&p.task) else {
                return Response::error(ErrorCode::Task, format!("no task named {:?}", p.task), None);
            };
            let scene = &reg.scenes[&task.scene];
            let robot = p.robot.unwrap_or_else(|| scene_embodiment(scene));
            let world = match scene.world_with(robot, reg.table.clone()) {
                Ok(w) => w,
                Err(e) => return Response::error(ErrorCode::Internal, e.to_string(), None),
            };
            let difficulty = p.difficulty.unwrap_or(task.difficulty);
            let mut ep = match Episode::new(world, task.clone(), difficulty, p.seed) {
                Ok(ep) => ep,
                Err(e) => return Response::error(ErrorCode::Task, e.to_string(), None),
            };
            ep.slow_motion = reg.slow_motion;
            let id = format!("s{}", reg.next_session.fetch_add(1, Ordering::Relaxed));
            let resp = observation_response(&id, &ep);
            reg.sessions.write().expect("session map").insert(id, Arc::new(Mutex::new(ep)));
            resp
        }
        Request::Step { session, action } => {
            let Some(ep) = reg.session(&session) else {
                return Response::error(ErrorCode::Session, format!("no session {session:?}"), Some(session));
            };
            let mut ep = ep.lock().expect("session lock");
            if ep.is_done() {
                return Response::error(ErrorCode::Terminal, "episode already finished", Some(session));
            }
            match ep.step(&action) {
                Ok(report) => {
                    let mut r = observation_response(&session, &ep);
                    r.feedback = Some(report.result.feedback.clone());
                    r.result = Some(report.result);
                    r
                }
                Err(e) => Response::error(ErrorCode::Terminal, e.to_string(), Some(session)),
            }
        }
        Request::Observe { session } => {
            let Some(ep) = reg.session(&session) else {
                return Response::error(ErrorCode::Session, format!("no session {session:?}"), Some(session));
            };
            let mut ep = ep.lock().expect("session lock");
            if ep.slow_motion {
                ep.tick();
            }
            observation_response(&session, &ep)
        }
        Request::Close { session } => match reg.sessions.write().expect("session map").remove(&session) {
            Some(_) => Response { ok: true, session: Some(session), ..Response::default() },
            None => Response::error(ErrorCode::Session, format!("no session {session:?}"), Some(session)),
        },
    }
}

/// Answer one request line with one response line (no trailing newline).
pub fn handle_message(reg: &Registry, line: &str) -> String {
    let resp = match Request::parse(line) {
        Ok(req) => handle_request(reg, req),
        Err(e) => Response { ok: false, error: Some(e), ..Response::default() },
    };
    encode_bounded(&resp, reg.max_message_bytes)
}

fn encode_bounded(resp: &Response, limit: usize) -> String {
    let text = serde_json::to_string(resp).unwrap_or_else(|e| {
        serde_json::to_string(&Response::error(ErrorCode::Internal, e.to_string(), resp.session.clone()))
            .expect("error responses serialize")
    });
    if text.len() <= limit {
        return text;
    }
    let small = Response::error(ErrorCode::Size, format!("response of {} bytes exceeds the {limit} byte bound", text.len()), resp.session.clone());
    serde_json::to_string(&small).expect("error responses serialize")
}
