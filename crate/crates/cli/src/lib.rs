//! Command-line front end: run configuration, CSV emission and the
//! `simulate`, `sensitivity`, `estimate`, `identify` and `stability` commands.

pub mod commands;
pub mod config;
pub mod csvio;
pub mod error;

pub use config::RunConfig;
pub use error::CliError;

/// Formats `v` rounded to 12 significant digits, in the shortest text that
/// parses back to that rounded value.
pub fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let rounded: f64 = format!("{v:.11e}").parse().unwrap_or(v);
    let a = rounded.abs();
    if (1e-5..1e15).contains(&a) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}
