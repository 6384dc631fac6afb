//! Operator surface for the market game: batch subcommands and the session API.

pub mod commands;
pub mod server;
pub mod transport;
