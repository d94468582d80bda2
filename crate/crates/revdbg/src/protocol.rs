//! Newline-delimited JSON protocol over a local socket or stdio.
//!
//! The server greets each connection with
//! `{"hello":{"schema":N,"version":"..."}}`. Every following line is a
//! request `{"id":n,"cmd":"...",...}` answered by one line carrying the same
//! id and either `view`, `detail` or `error`.

use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};
use std::net::{TcpListener, ToSocketAddrs};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

use revdbg_core::syntax::Pid;
use revdbg_core::system::Policy;

use crate::session::{Command, Session, SessionError, Settings};
use crate::view::{HistoryDetail, StateView, SCHEMA_VERSION};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hello {
    pub schema: u32,
    pub version: String,
}

impl Hello {
    pub fn current() -> Self {
        Hello {
            schema: SCHEMA_VERSION,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "cmd", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Call {
    Hello,
    Open {
        source: String,
        entry: String,
        #[serde(default)]
        log: Option<String>,
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default)]
        policy: Option<String>,
        #[serde(default)]
        fuel: Option<usize>,
    },
    /// Any session command line: a request, `trace`, `replay`, `run`, ...
    Apply { session: u64, line: String },
    Snapshot { session: u64 },
    Inspect { session: u64, pid: Pid, index: usize },
    Close { session: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub kind: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reply {
    Hello(Hello),
    View(Box<StateView>),
    Detail(HistoryDetail),
    Closed(u64),
    Error(ErrorBody),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub id: Json,
    #[serde(flatten)]
    pub reply: Reply,
}

fn error(kind: &str, message: impl Into<String>) -> Reply {
    Reply::Error(ErrorBody {
        kind: kind.to_string(),
        message: message.into(),
    })
}

impl From<SessionError> for Reply {
    fn from(e: SessionError) -> Self {
        error(e.kind(), e.to_string())
    }
}

/// All open sessions. Each session is locked while one of its commands
/// runs, so commands of one session are applied one at a time.
#[derive(Default)]
pub struct Service {
    sessions: Mutex<BTreeMap<u64, Arc<Mutex<Session>>>>,
    next_id: Mutex<u64>,
}

impl Service {
    pub fn new() -> Self {
        Self::default()
    }

    fn session(&self, id: u64) -> Result<Arc<Mutex<Session>>, SessionError> {
        self.sessions
            .lock()
            .expect("session table")
            .get(&id)
            .cloned()
            .ok_or(SessionError::UnknownSession(id))
    }

    pub fn call(&self, call: Call) -> Reply {
        match self.dispatch(call) {
            Ok(r) => r,
            Err(e) => e.into(),
        }
    }

    fn dispatch(&self, call: Call) -> Result<Reply, SessionError> {
        Ok(match call {
            Call::Hello => Reply::Hello(Hello::current()),
            Call::Open {
                source,
                entry,
                log,
                seed,
                policy,
                fuel,
            } => {
                let mut settings = Settings::default();
                if let Some(s) = seed {
                    settings.seed = s;
                }
                if let Some(p) = policy {
                    settings.policy = p.parse::<Policy>().map_err(SessionError::Usage)?;
                }
                if let Some(f) = fuel {
                    settings.fuel = f;
                }
                let mut next = self.next_id.lock().expect("id counter");
                let id = *next + 1;
                let s = Session::create(id, &source, &entry, log.as_deref(), settings)?;
                *next = id;
                let view = s.snapshot();
                self.sessions.lock().expect("session table").insert(id, Arc::new(Mutex::new(s)));
                Reply::View(Box::new(view))
            }
            Call::Apply { session, line } => {
                let s = self.session(session)?;
                let mut s = s.lock().expect("session");
                let cmd = Command::parse(&line)?;
                Reply::View(Box::new(s.apply(&cmd)?))
            }
            Call::Snapshot { session } => Reply::View(Box::new(self.session(session)?.lock().expect("session").snapshot())),
            Call::Inspect { session, pid, index } => {
                Reply::Detail(self.session(session)?.lock().expect("session").inspect(pid, index)?)
            }
            Call::Close { session } => {
                self.sessions
                    .lock()
                    .expect("session table")
                    .remove(&session)
                    .ok_or(SessionError::UnknownSession(session))?;
                Reply::Closed(session)
            }
        })
    }

    /// Answer one request line.
    pub fn handle_line(&self, line: &str) -> Response {
        let mut fields = match serde_json::from_str::<Json>(line) {
            Ok(Json::Object(m)) => m,
            Ok(_) => {
                return Response {
                    id: Json::Null,
                    reply: error("bad-request", "expected a JSON object"),
                }
            }
            Err(e) => {
                return Response {
                    id: Json::Null,
                    reply: error("bad-request", e.to_string()),
                }
            }
        };
        let id = fields.remove("id").unwrap_or(Json::Null);
        let reply = match serde_json::from_value::<Call>(Json::Object(fields)) {
            Ok(call) => self.call(call),
            Err(e) => error("bad-request", e.to_string()),
        };
        Response { id, reply }
    }

    /// Greet, then answer requests line by line until end of input.
    pub fn serve_stream(&self, input: impl BufRead, mut output: impl Write) -> io::Result<()> {
        let hello = serde_json::json!({ "hello": Hello::current() });
        writeln!(output, "{hello}")?;
        output.flush()?;
        for line in input.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let resp = self.handle_line(&line);
            writeln!(output, "{}", serde_json::to_string(&resp).expect("responses serialize"))?;
            output.flush()?;
        }
        Ok(())
    }
}

/// Accept connections on a local address, one thread per connection.
/// `on_bound` receives the actual address, useful with port 0.
pub fn serve_tcp(addr: impl ToSocketAddrs, on_bound: impl FnOnce(std::net::SocketAddr)) -> io::Result<()> {
    let listener = TcpListener::bind(addr)?;
    on_bound(listener.local_addr()?);
    let service = Arc::new(Service::new());
    for stream in listener.incoming() {
        let stream = stream?;
        let service = service.clone();
        std::thread::spawn(move || {
            let reader = match stream.try_clone() {
                Ok(r) => io::BufReader::new(r),
                Err(_) => return,
            };
            let _ = service.serve_stream(reader, stream);
        });
    }
    Ok(())
}
