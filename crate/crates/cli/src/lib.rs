//! Command line and HTTP front-ends over `viewdisc`.

pub mod api;
pub mod commands;
