//! Trace documents: exact JSON and a lossy CSV view.

pub mod csv;
pub mod trace;

pub use csv::emit_csv;
pub use trace::{certificate_from_json, from_document, program_hash, to_document, TraceDocument};
