//! Std side of the pipeline: staged targets, child processes, detection
//! runs, verification, the model gateway and the patching session.

pub mod exec;
pub mod io;
pub mod target;
pub mod detect;
pub mod verify;
pub mod gateway;
pub mod config;
pub mod report;
pub mod session;
pub mod bench;
pub mod generate;
