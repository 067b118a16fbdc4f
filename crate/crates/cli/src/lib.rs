//! Library surface of the command-line front end: command implementations,
//! JSON/markdown rendering, and the golden reference table. The binary in
//! `main.rs` is a thin argument-parsing shell over these functions.

pub mod commands;
pub mod config;
pub mod render;
pub mod table;

/// Process exit codes shared by every subcommand.
pub mod exit_codes {
    /// Everything computed and every cross-check agreed.
    pub const SUCCESS: i32 = 0;
    /// A mismatch between routes, a failed verification, or a refused rule.
    pub const MISMATCH: i32 = 1;
    /// Malformed input: ring text, prime, flags, or config file.
    pub const INPUT: i32 = 2;
    /// A computation exceeded its resource budget.
    pub const BUDGET: i32 = 3;
}
