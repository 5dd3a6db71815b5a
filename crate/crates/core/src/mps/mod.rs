//! MPS format reader and writer.
//!
//! The supported grammar covers the sections `NAME`, `OBJSENSE`, `ROWS`,
//! `COLUMNS` (with `'MARKER'` / `'INTORG'` / `'INTEND'` integrality toggles),
//! `RHS`, `RANGES`, `BOUNDS` and `ENDATA`. `ROWS` and `COLUMNS` are
//! mandatory, everything else is optional, and `ENDATA` must be present.
//! Parsing is strict: every input either yields an instance or a positioned
//! error; nothing is silently coerced.
//!
//! Semantics follow common solver conventions:
//!
//! - row codes: `N` objective (the first one; further `N` rows are ignored
//!   with a warning), `L` gives `(-inf, rhs]`, `G` gives `[lhs, +inf)`, `E`
//!   gives `[v, v]`;
//! - an `RHS` entry on the objective row sets the *negated* objective
//!   constant;
//! - `RANGES` turns a single-sided row into a two-sided one: `L` becomes
//!   `[rhs - |r|, rhs]`, `G` becomes `[lhs, lhs + |r|]`, and `E` becomes
//!   `[v, v + r]` for `r >= 0` or `[v + r, v]` for `r < 0`;
//! - default variable bounds are `[0, +inf)`; bound codes `UP`, `LO`, `FX`,
//!   `BV`, `MI`, `PL`, `FR`, `UI` and `LI` apply sequentially. An `UP` bound
//!   with a negative value on a *continuous* variable whose lower bound was
//!   never set explicitly pushes the lower bound to `-inf` (the widespread
//!   convention); an integer variable keeps its default lower bound of 0, so
//!   a negative upper bound there is a hard error;
//! - `UI`/`LI` mark a continuous variable as general integer; `BV` makes a
//!   variable binary with bounds `[0, 1]`.
//!
//! Both dialects share one whitespace tokenizer, so names must not contain
//! blanks. The fixed dialect only differs on output: classic column layout,
//! and names longer than eight characters are rejected. Values are written
//! in shortest round-trip decimal form, so `parse(write(i))` reproduces
//! every real bit-exactly.
//!
//! Two-sided rows are encoded through RANGES, which stores one side exactly
//! and derives the other as `side ± range` in rounded arithmetic. For a few
//! percent of side pairs no representable range reproduces the second side
//! bit-exactly (round-to-even parity locks it out). The writer then keeps
//! the closest standard encoding and adds a comment pin
//!
//! ```text
//! * reoptbench-exact-side LHS <row> <value>
//! ```
//!
//! which this parser applies after RANGES processing while every other MPS
//! reader ignores it as an ordinary comment and sees a row at most one ulp
//! off. Rows free on both sides have no encoding at all (`N` rows are
//! discarded on parse) and are write errors.

mod parse;
mod write;

use thiserror::Error;

pub use parse::{parse_mps, parse_mps_file, ParsedMps};
pub use write::{write_mps, write_mps_file};

/// Format family. One tokenizer serves both; the mode matters on output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MpsMode {
    Fixed,
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MpsDialect {
    pub mode: MpsMode,
    /// When false, an `OBJSENSE` section is parsed but does not change the
    /// instance sense, and maximization instances cannot be written.
    pub objective_sense_section_honored: bool,
}

impl Default for MpsDialect {
    fn default() -> Self {
        MpsDialect { mode: MpsMode::Free, objective_sense_section_honored: true }
    }
}

impl MpsDialect {
    pub fn fixed() -> Self {
        MpsDialect { mode: MpsMode::Fixed, objective_sense_section_honored: true }
    }
}

/// Parse failure at a 1-based line and column.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("parse error at line {line}, column {column}: {message}")]
pub struct MpsParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum MpsError {
    #[error(transparent)]
    Parse(#[from] MpsParseError),
    #[error("write error: {0}")]
    Write(#[from] MpsWriteError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MpsWriteError {
    #[error("name {name:?} exceeds the fixed-format width of 8 characters; use the free dialect")]
    NameTooLong { name: String },
    #[error("name {name:?} is empty or contains whitespace and cannot be written")]
    UnwritableName { name: String },
    #[error("row {name:?} is free on both sides and has no MPS encoding")]
    FreeRow { name: String },
    #[error("instance sense is maximize but the dialect ignores OBJSENSE")]
    SenseNotRecordable,
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
}
