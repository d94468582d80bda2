//! Debug sessions, their JSON views and the line protocol served to front ends.

pub mod protocol;
pub mod session;
pub mod view;

pub use protocol::{serve_tcp, Call, Hello, Reply, Response, Service};
pub use session::{run_forward, Command, Mode, Session, SessionError, Settings, UNDO_DEPTH};
pub use view::{HistoryDetail, ProcessView, StateView, SCHEMA_VERSION};
