//! HTTP service and command-line front end: upload an explanation table,
//! open a session on a chart, add insights in the controlled language (or
//! free text through a model provider), complete open slots, and check them.

pub mod api;
pub mod card;
pub mod check;
pub mod cli;
pub mod store;

pub use api::{router, AppState};
pub use store::{InsightRecord, Session, Store};
