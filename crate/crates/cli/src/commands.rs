//! Subcommand implementations. Each returns the process exit code:
//! 0 success, 1 partial or test failure, 2 usage or input-contract violation.

pub mod eval;
pub mod forward;
pub mod loss;
pub mod nem;
pub mod selftest;

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARTIAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
