//! Library surface of the experiment driver; the `forgetlab` binary is a
//! thin wrapper over these modules.

pub mod args;
pub mod commands;
pub mod json;
pub mod verify;
