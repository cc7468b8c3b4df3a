//! Command-line front end and acceptance harness for `momentlab`.

pub mod acceptance;
pub mod config;
pub mod oracle;
pub mod pairs;
pub mod calibrate;
pub mod commands;
