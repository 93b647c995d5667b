//! The review command language: `tSort`, `tFilter`, `tGrep`, `tColor`, `tReset`.
//!
//! Commands are parsed into a closed AST and evaluated identically over a
//! locally loaded page of reviews or over a whole scope on the server.

mod ast;
mod eval;
mod parser;

pub use ast::{
    AttrKey, AttrRef, AttributeCatalog, Command, Comparator, Direction, GrepPattern, LENGTH,
    SENTIMENT,
};
pub use eval::{
    apply, apply_to_set, evaluate_remote, parse_history, HistoryError, ReviewStore, Session,
};
pub use parser::{parse, ParseError, ParseErrorKind, COMMAND_NAMES};
