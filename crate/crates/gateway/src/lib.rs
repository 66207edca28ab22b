//! Model access for hypertree planning.
//!
//! Every call is a [`ModelRequest`] tagged with a [`Role`]. The [`Gateway`]
//! renders the role's template, asks a [`Backend`] for text, and parses the
//! reply under the role's strict schema into a [`Payload`]. Replies that fail
//! to parse are retried with a format reminder. Raw replies are cached by a
//! key hashed from role, template, slots, attempt and model, which is also
//! the key used by JSONL transcripts for record and replay.

mod backend;
mod config;
mod error;
mod gateway;
mod request;
mod role;
mod template;

pub use backend::{
    parse_chat_response, read_transcript, Backend, BackendCall, FnBackend, HttpChat, RawReply, RecordingBackend,
    ReplayBackend, TranscriptEntry,
};
pub use config::{BackendConfig, BackendKind, HttpSettings};
pub use error::GatewayError;
pub use gateway::{CallRecord, Gateway};
pub use request::{estimate_tokens, Completion, ModelRequest, Usage};
pub use role::{parse_reply, Payload, Role, DONE_MARKERS};
pub use template::{Template, TemplateSet};
