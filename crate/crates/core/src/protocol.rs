//! Newline-delimited JSON wire protocol for out-of-process agents.
//!
//! Every line is one compact JSON object with sorted keys, a `v` version
//! field and a `kind`. See `docs/protocol.md` for the byte-level contract.

use std::io::{BufRead, Write};
use std::net::{TcpListener, TcpStream};
use std::process::{Command, Stdio};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::agents::Agent;
use crate::env::{Action, EnvConfig, EnvError, EnvHandle, Observation, Session, TaskView};
use crate::metrics::{Outcome, Transcript};
use crate::schema::AttributeSchema;
use crate::taskgen::TaskSet;

pub const VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Message {
    /// Sent by both sides first. The server includes the attribute schema.
    Hello {
        role: String,
        name: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        schema: Option<AttributeSchema>,
    },
    TaskOffer {
        task: TaskView,
    },
    Action {
        task_id: String,
        action: Action,
    },
    Observation {
        task_id: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        observation: Option<Observation>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        error: Option<EnvError>,
    },
    Result {
        transcript: Transcript,
    },
}

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("unsupported protocol version {0}")]
    Version(u64),
    #[error("unexpected message: expected {expected}, got {got}")]
    Unexpected { expected: &'static str, got: String },
    #[error("connection closed")]
    Disconnect,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Compact JSON with keys sorted at every level.
pub fn compact_json<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("serializable value");
    serde_json::to_string(&v).expect("value serializes")
}

pub fn encode(msg: &Message) -> String {
    let mut v = serde_json::to_value(msg).expect("message serializes");
    if let Value::Object(m) = &mut v {
        m.insert("v".into(), Value::from(VERSION));
    }
    serde_json::to_string(&v).expect("value serializes")
}

pub fn decode(line: &str) -> Result<Message, ProtocolError> {
    let mut v: Value = serde_json::from_str(line).map_err(|e| ProtocolError::Malformed(e.to_string()))?;
    let Value::Object(m) = &mut v else {
        return Err(ProtocolError::Malformed("not a JSON object".into()));
    };
    match m.remove("v").and_then(|x| x.as_u64()) {
        Some(VERSION) => {}
        Some(other) => return Err(ProtocolError::Version(other)),
        None => return Err(ProtocolError::Malformed("missing `v`".into())),
    }
    serde_json::from_value(v).map_err(|e| ProtocolError::Malformed(e.to_string()))
}

pub fn kind_of(msg: &Message) -> &'static str {
    match msg {
        Message::Hello { .. } => "hello",
        Message::TaskOffer { .. } => "task_offer",
        Message::Action { .. } => "action",
        Message::Observation { .. } => "observation",
        Message::Result { .. } => "result",
    }
}

fn send(w: &mut dyn Write, msg: &Message) -> Result<(), ProtocolError> {
    let mut line = encode(msg);
    line.push('\n');
    w.write_all(line.as_bytes())?;
    w.flush()?;
    Ok(())
}

/// Next message, or None at end of stream.
fn recv(r: &mut dyn BufRead) -> Result<Option<Message>, ProtocolError> {
    let mut line = String::new();
    loop {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            return Ok(None);
        }
        if !line.trim().is_empty() {
            return decode(line.trim_end_matches(['\n', '\r'])).map(Some);
        }
    }
}

/// Host the given tasks for a remote agent on one connection. A session
/// interrupted by a disconnect or protocol error is scored as a timeout,
/// and so is every task not yet offered.
pub fn host(
    r: &mut dyn BufRead,
    w: &mut dyn Write,
    set: &TaskSet,
    task_ids: &[String],
    cfg: &EnvConfig,
) -> Result<Vec<Transcript>, ProtocolError> {
    let agent = match recv(r)? {
        Some(Message::Hello { name, .. }) => name,
        Some(m) => {
            return Err(ProtocolError::Unexpected {
                expected: "hello",
                got: kind_of(&m).into(),
            })
        }
        None => return Err(ProtocolError::Disconnect),
    };
    send(
        w,
        &Message::Hello {
            role: "env".into(),
            name: "camsearch".into(),
            schema: Some(set.schema.clone()),
        },
    )?;
    let mut out = Vec::new();
    let mut alive = true;
    for id in task_ids {
        let mut session = Session::new(set, id, cfg.clone())
            .map_err(|e| ProtocolError::Malformed(e.to_string()))?
            .with_agent_name(&agent);
        if alive {
            alive = drive(r, w, &mut session).is_ok();
        }
        let t = session.transcript();
        if alive {
            send(w, &Message::Result { transcript: t.clone() })?;
        }
        out.push(t);
    }
    Ok(out)
}

fn drive(r: &mut dyn BufRead, w: &mut dyn Write, session: &mut Session) -> Result<(), ProtocolError> {
    send(
        w,
        &Message::TaskOffer {
            task: session.view().clone(),
        },
    )?;
    while !session.done() {
        let (task_id, action) = match recv(r)? {
            Some(Message::Action { task_id, action }) => (task_id, action),
            Some(m) => {
                return Err(ProtocolError::Unexpected {
                    expected: "action",
                    got: kind_of(&m).into(),
                })
            }
            None => return Err(ProtocolError::Disconnect),
        };
        let reply = match session.step(&action) {
            Ok(o) => Message::Observation {
                task_id,
                observation: Some(o),
                error: None,
            },
            Err(e) => Message::Observation {
                task_id,
                observation: None,
                error: Some(e),
            },
        };
        send(w, &reply)?;
    }
    Ok(())
}

/// Listen on `addr` and host every task for each connecting agent in turn.
/// Stops after `max_clients` connections when given.
pub fn serve_tcp(
    addr: &str,
    set: &TaskSet,
    cfg: &EnvConfig,
    max_clients: Option<usize>,
    mut on_done: impl FnMut(Vec<Transcript>),
) -> Result<(), ProtocolError> {
    let listener = TcpListener::bind(addr)?;
    let ids: Vec<String> = set.tasks.iter().map(|t| t.id.clone()).collect();
    for (n, stream) in listener.incoming().enumerate() {
        let stream = stream?;
        stream.set_nodelay(true)?;
        let mut r = std::io::BufReader::new(stream.try_clone()?);
        let mut w = stream;
        match host(&mut r, &mut w, set, &ids, cfg) {
            Ok(ts) => on_done(ts),
            Err(e) => eprintln!("client error: {e}"),
        }
        if max_clients.is_some_and(|m| n + 1 >= m) {
            break;
        }
    }
    Ok(())
}

/// Where an external agent lives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Endpoint {
    Tcp(String),
    /// A command whose stdin/stdout speak the protocol.
    Command(Vec<String>),
}

impl Endpoint {
    pub fn parse(s: &str) -> Endpoint {
        match s.strip_prefix("tcp://") {
            Some(addr) => Endpoint::Tcp(addr.to_string()),
            None => Endpoint::Command(s.split_whitespace().map(String::from).collect()),
        }
    }
}

/// Run an external agent over the tasks. The env side keeps all state.
pub fn run_external(endpoint: &Endpoint, set: &TaskSet, task_ids: &[String], cfg: &EnvConfig) -> Result<Vec<Transcript>, ProtocolError> {
    match endpoint {
        Endpoint::Tcp(addr) => {
            let stream = TcpStream::connect(addr)?;
            stream.set_nodelay(true)?;
            let mut r = std::io::BufReader::new(stream.try_clone()?);
            let mut w = stream;
            host(&mut r, &mut w, set, task_ids, cfg)
        }
        Endpoint::Command(argv) => {
            let (prog, args) = argv.split_first().ok_or_else(|| ProtocolError::Malformed("empty command".into()))?;
            let mut child = Command::new(prog)
                .args(args)
                .stdin(Stdio::piped())
                .stdout(Stdio::piped())
                .spawn()?;
            let mut w = child.stdin.take().expect("piped stdin");
            let mut r = std::io::BufReader::new(child.stdout.take().expect("piped stdout"));
            let out = host(&mut r, &mut w, set, task_ids, cfg);
            drop(w);
            let _ = child.wait();
            out
        }
    }
}

/// Agent-side view of a remote session.
pub struct RemoteEnv<'a> {
    r: &'a mut dyn BufRead,
    w: &'a mut dyn Write,
    schema: AttributeSchema,
    view: TaskView,
    done: bool,
    fault: Option<ProtocolError>,
}

impl EnvHandle for RemoteEnv<'_> {
    fn view(&self) -> &TaskView {
        &self.view
    }

    fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    fn step(&mut self, action: &Action) -> Result<Observation, EnvError> {
        if self.done {
            return Err(EnvError::SessionDone);
        }
        let msg = Message::Action {
            task_id: self.view.task_id.clone(),
            action: action.clone(),
        };
        if let Err(e) = send(self.w, &msg) {
            self.done = true;
            self.fault = Some(e);
            return Err(EnvError::SessionDone);
        }
        match recv(self.r) {
            Ok(Some(Message::Observation {
                observation: Some(o), ..
            })) => {
                self.done = o.done;
                Ok(o)
            }
            Ok(Some(Message::Observation { error: Some(e), .. })) => Err(e),
            other => {
                self.done = true;
                self.fault = Some(match other {
                    Err(e) => e,
                    Ok(None) => ProtocolError::Disconnect,
                    Ok(Some(m)) => ProtocolError::Unexpected {
                        expected: "observation",
                        got: kind_of(&m).into(),
                    },
                });
                Err(EnvError::SessionDone)
            }
        }
    }

    fn done(&self) -> bool {
        self.done
    }
}

/// Agent side of a connection: answer every offer with `make_agent` and
/// collect the server's results.
pub fn run_client(
    r: &mut dyn BufRead,
    w: &mut dyn Write,
    name: &str,
    mut make_agent: impl FnMut(&TaskView) -> Box<dyn Agent>,
) -> Result<Vec<Transcript>, ProtocolError> {
    send(
        w,
        &Message::Hello {
            role: "agent".into(),
            name: name.into(),
            schema: None,
        },
    )?;
    let schema = match recv(r)? {
        Some(Message::Hello { schema: Some(s), .. }) => s,
        Some(m) => {
            return Err(ProtocolError::Unexpected {
                expected: "hello",
                got: kind_of(&m).into(),
            })
        }
        None => return Err(ProtocolError::Disconnect),
    };
    let mut out = Vec::new();
    loop {
        let view = match recv(r)? {
            Some(Message::TaskOffer { task }) => task,
            Some(Message::Result { transcript }) => {
                out.push(transcript);
                continue;
            }
            Some(m) => {
                return Err(ProtocolError::Unexpected {
                    expected: "task_offer",
                    got: kind_of(&m).into(),
                })
            }
            None => return Ok(out),
        };
        let mut agent = make_agent(&view);
        let mut env = RemoteEnv {
            r: &mut *r,
            w: &mut *w,
            schema: schema.clone(),
            view,
            done: false,
            fault: None,
        };
        agent.run(&mut env);
        if let Some(e) = env.fault {
            return Err(e);
        }
        if !env.done {
            return Err(ProtocolError::Unexpected {
                expected: "finished session",
                got: "agent stopped early".into(),
            });
        }
    }
}

/// Timeout transcript for a task that never ran.
pub fn timeout_transcript(set: &TaskSet, task_id: &str, agent: &str) -> Option<Transcript> {
    let s = Session::new(set, task_id, EnvConfig::default()).ok()?.with_agent_name(agent);
    let t = s.transcript();
    debug_assert_eq!(t.outcome, Outcome::Timeout);
    Some(t)
}

/// Messages of the golden corpus, one of each kind and every action and
/// payload variant, built from the fixture tasks.
pub fn golden_messages() -> Vec<Message> {
    use crate::agents::OracleAgent;
    let set = crate::fixture::factory_small_taskset();
    let mut msgs = vec![
        Message::Hello {
            role: "agent".into(),
            name: "scripted".into(),
            schema: None,
        },
        Message::Hello {
            role: "env".into(),
            name: "camsearch".into(),
            schema: Some(set.schema.clone()),
        },
    ];
    let extra: [&[Action]; 3] = [
        &[Action::QueryGalleryDistribution, Action::QueryGalleryRecords],
        &[Action::GetZoneStructure, Action::QueryGalleryRecords, Action::CheckTemporal],
        &[Action::ask_spatial(), Action::ask("favourite_colour")],
    ];
    for (task, pre) in set.tasks.iter().zip(extra) {
        let mut session = Session::new(&set, &task.id, EnvConfig::default())
            .expect("fixture task")
            .with_agent_name("scripted");
        msgs.push(Message::TaskOffer {
            task: session.view().clone(),
        });
        let mut log = Recorder {
            inner: &mut session,
            msgs: &mut msgs,
        };
        for a in pre {
            let _ = log.step(a);
        }
        OracleAgent::new(task.clone()).run(&mut log);
        msgs.push(Message::Result {
            transcript: session.transcript(),
        });
    }
    msgs
}

struct Recorder<'s, 'a> {
    inner: &'s mut Session<'a>,
    msgs: &'s mut Vec<Message>,
}

impl EnvHandle for Recorder<'_, '_> {
    fn view(&self) -> &TaskView {
        self.inner.view()
    }

    fn schema(&self) -> &AttributeSchema {
        EnvHandle::schema(self.inner)
    }

    fn step(&mut self, action: &Action) -> Result<Observation, EnvError> {
        let task_id = self.inner.view().task_id.clone();
        self.msgs.push(Message::Action {
            task_id: task_id.clone(),
            action: action.clone(),
        });
        let r = self.inner.step(action);
        self.msgs.push(Message::Observation {
            task_id,
            observation: r.as_ref().ok().cloned(),
            error: r.as_ref().err().cloned(),
        });
        r
    }

    fn done(&self) -> bool {
        EnvHandle::done(self.inner)
    }
}

/// The golden corpus as shipped: one encoded message per line.
pub fn golden_corpus() -> String {
    golden_messages().iter().map(|m| encode(m) + "\n").collect()
}
