//! Hand-written parser for `name(args)` command strings.
//!
//! ```text
//! command := name '(' [arg (',' arg)*] ')' [';']
//! tSort(attr [, asc|desc])        default desc
//! tFilter(attr, op number)        op ∈ < <= > >= == !=
//! tGrep(/regex/[i] | "literal")   literals match case-insensitively
//! tColor(attr)
//! tReset()
//! ```

use std::fmt;

use super::ast::{AttrRef, AttributeCatalog, Command, Comparator, Direction, GrepPattern};

pub const COMMAND_NAMES: [&str; 5] = ["tSort", "tFilter", "tGrep", "tColor", "tReset"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    UnknownCommand,
    Arity,
    UnknownAttribute,
    InvalidRegex,
    InvalidArgument,
}

impl ParseErrorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ParseErrorKind::Syntax => "syntax",
            ParseErrorKind::UnknownCommand => "unknown_command",
            ParseErrorKind::Arity => "arity",
            ParseErrorKind::UnknownAttribute => "unknown_attribute",
            ParseErrorKind::InvalidRegex => "invalid_regex",
            ParseErrorKind::InvalidArgument => "invalid_argument",
        }
    }
}

/// A parse failure; `position` is a character offset into the input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub message: String,
    pub position: usize,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at position {}", self.message, self.position)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq)]
enum Arg {
    Word(String),
    Number(f64),
    Regex { pattern: String, flags: String },
    Str(String),
    Predicate(Comparator, f64),
}

impl Arg {
    fn describe(&self) -> &'static str {
        match self {
            Arg::Word(_) => "a name",
            Arg::Number(_) => "a number",
            Arg::Regex { .. } => "a regular expression",
            Arg::Str(_) => "a string",
            Arg::Predicate(..) => "a comparison",
        }
    }
}

struct Cursor<'a> {
    chars: Vec<char>,
    pos: usize,
    catalog: &'a AttributeCatalog,
}

fn err(kind: ParseErrorKind, position: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        kind,
        message: message.into(),
        position,
    }
}

impl Cursor<'_> {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        self.skip_ws();
        match self.peek() {
            Some(x) if x == c => {
                self.pos += 1;
                Ok(())
            }
            Some(x) => Err(err(
                ParseErrorKind::Syntax,
                self.pos,
                format!("expected '{c}', found '{x}'"),
            )),
            None => Err(err(
                ParseErrorKind::Syntax,
                self.pos,
                format!("expected '{c}', found end of input"),
            )),
        }
    }

    fn identifier(&mut self) -> String {
        let start = self.pos;
        while self
            .peek()
            .is_some_and(|c| c.is_alphanumeric() || matches!(c, '_' | '-' | '.'))
        {
            self.pos += 1;
        }
        self.chars[start..self.pos].iter().collect()
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self
            .peek()
            .is_some_and(|c| c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E'))
        {
            self.pos += 1;
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ if text.is_empty() => Err(err(ParseErrorKind::Syntax, start, "expected a number")),
            _ => Err(err(
                ParseErrorKind::InvalidArgument,
                start,
                format!("invalid number {text:?}"),
            )),
        }
    }

    fn comparator(&mut self) -> Result<Comparator, ParseError> {
        let start = self.pos;
        let two: String = self.chars[self.pos..].iter().take(2).collect();
        let (cmp, len) = match two.as_str() {
            "<=" => (Comparator::Le, 2),
            ">=" => (Comparator::Ge, 2),
            "==" => (Comparator::Eq, 2),
            "!=" => (Comparator::Ne, 2),
            _ => match self.peek() {
                Some('<') => (Comparator::Lt, 1),
                Some('>') => (Comparator::Gt, 1),
                Some('=') => (Comparator::Eq, 1),
                _ => {
                    return Err(err(
                        ParseErrorKind::InvalidArgument,
                        start,
                        "expected a comparison operator (<, <=, >, >=, ==, !=)",
                    ))
                }
            },
        };
        self.pos += len;
        // Accept JavaScript's strict operators too.
        if matches!(cmp, Comparator::Eq | Comparator::Ne) && len == 2 && self.peek() == Some('=') {
            self.pos += 1;
        }
        Ok(cmp)
    }

    fn regex_literal(&mut self) -> Result<Arg, ParseError> {
        let open = self.pos;
        self.pos += 1;
        let mut pattern = String::new();
        loop {
            match self.peek() {
                None => {
                    return Err(err(
                        ParseErrorKind::Syntax,
                        open,
                        "unterminated regular expression",
                    ))
                }
                Some('/') => {
                    self.pos += 1;
                    break;
                }
                Some('\\') => {
                    match self.chars.get(self.pos + 1) {
                        Some('/') => pattern.push('/'),
                        Some(&c) => {
                            pattern.push('\\');
                            pattern.push(c);
                        }
                        None => pattern.push('\\'),
                    }
                    self.pos += 2;
                }
                Some(c) => {
                    pattern.push(c);
                    self.pos += 1;
                }
            }
        }
        let flags_at = self.pos;
        let flags: String = {
            let start = self.pos;
            while self.peek().is_some_and(|c| c.is_ascii_alphabetic()) {
                self.pos += 1;
            }
            self.chars[start..self.pos].iter().collect()
        };
        if let Some(bad) = flags.chars().find(|&c| c != 'i') {
            return Err(err(
                ParseErrorKind::InvalidRegex,
                flags_at,
                format!("unsupported regular expression flag '{bad}'"),
            ));
        }
        Ok(Arg::Regex { pattern, flags })
    }

    fn string_literal(&mut self) -> Result<Arg, ParseError> {
        let open = self.pos;
        let quote = self.chars[self.pos];
        self.pos += 1;
        let mut s = String::new();
        loop {
            match self.peek() {
                None => return Err(err(ParseErrorKind::Syntax, open, "unterminated string")),
                Some(c) if c == quote => {
                    self.pos += 1;
                    return Ok(Arg::Str(s));
                }
                Some('\\') => {
                    match self.chars.get(self.pos + 1) {
                        Some(&c) if c == quote || c == '\\' => s.push(c),
                        Some(&c) => {
                            s.push('\\');
                            s.push(c);
                        }
                        None => s.push('\\'),
                    }
                    self.pos += 2;
                }
                Some(c) => {
                    s.push(c);
                    self.pos += 1;
                }
            }
        }
    }

    fn arg(&mut self) -> Result<(usize, Arg), ParseError> {
        self.skip_ws();
        let at = self.pos;
        let arg = match self.peek() {
            Some('/') => self.regex_literal()?,
            Some('"') | Some('\'') => self.string_literal()?,
            Some('<') | Some('>') | Some('=') | Some('!') => {
                let cmp = self.comparator()?;
                let v = self.number()?;
                Arg::Predicate(cmp, v)
            }
            Some(c) if c.is_ascii_digit() || c == '-' || c == '+' => Arg::Number(self.number()?),
            Some(c) if c.is_alphanumeric() || c == '_' => Arg::Word(self.identifier()),
            Some(c) => {
                return Err(err(
                    ParseErrorKind::Syntax,
                    at,
                    format!("unexpected character '{c}'"),
                ))
            }
            None => return Err(err(ParseErrorKind::Syntax, at, "unexpected end of input")),
        };
        Ok((at, arg))
    }

    fn args(&mut self) -> Result<Vec<(usize, Arg)>, ParseError> {
        let mut args = Vec::new();
        self.skip_ws();
        if self.peek() == Some(')') {
            self.pos += 1;
            return Ok(args);
        }
        loop {
            args.push(self.arg()?);
            self.skip_ws();
            match self.peek() {
                Some(',') => self.pos += 1,
                Some(')') => {
                    self.pos += 1;
                    return Ok(args);
                }
                Some(c) => {
                    return Err(err(
                        ParseErrorKind::Syntax,
                        self.pos,
                        format!("expected ',' or ')', found '{c}'"),
                    ))
                }
                None => {
                    return Err(err(
                        ParseErrorKind::Syntax,
                        self.pos,
                        "expected ')', found end of input",
                    ))
                }
            }
        }
    }

    fn attribute(&self, at: usize, arg: &Arg) -> Result<AttrRef, ParseError> {
        match arg {
            Arg::Word(w) | Arg::Str(w) => self.catalog.resolve(w).ok_or_else(|| {
                err(
                    ParseErrorKind::UnknownAttribute,
                    at,
                    format!(
                        "unknown attribute {w:?}; schema attributes: [{}] (plus sentiment, length)",
                        self.catalog.schema().join(", ")
                    ),
                )
            }),
            other => Err(err(
                ParseErrorKind::InvalidArgument,
                at,
                format!("expected an attribute name, found {}", other.describe()),
            )),
        }
    }
}

fn arity(name: &str, expected: &str, got: usize, at: usize) -> ParseError {
    err(
        ParseErrorKind::Arity,
        at,
        format!(
            "{name} expects {expected}, got {got} argument{}",
            if got == 1 { "" } else { "s" }
        ),
    )
}

/// Parses one command, resolving attribute names against `catalog`.
pub fn parse(input: &str, catalog: &AttributeCatalog) -> Result<Command, ParseError> {
    let mut c = Cursor {
        chars: input.chars().collect(),
        pos: 0,
        catalog,
    };
    c.skip_ws();
    let name_at = c.pos;
    let name = c.identifier();
    if name.is_empty() {
        return Err(err(
            ParseErrorKind::Syntax,
            name_at,
            "expected a command name",
        ));
    }
    if !COMMAND_NAMES.contains(&name.as_str()) {
        return Err(err(
            ParseErrorKind::UnknownCommand,
            name_at,
            format!(
                "unknown command {name}; valid commands: {}",
                COMMAND_NAMES.join(", ")
            ),
        ));
    }
    c.expect('(')?;
    let close_at = c.pos;
    let args = c.args()?;
    c.skip_ws();
    if c.peek() == Some(';') {
        c.pos += 1;
        c.skip_ws();
    }
    if let Some(ch) = c.peek() {
        return Err(err(
            ParseErrorKind::Syntax,
            c.pos,
            format!("unexpected '{ch}' after command"),
        ));
    }

    let cmd = match name.as_str() {
        "tSort" => {
            if args.is_empty() || args.len() > 2 {
                return Err(arity(
                    &name,
                    "1 or 2 arguments (attribute[, asc|desc])",
                    args.len(),
                    close_at,
                ));
            }
            let attribute = c.attribute(args[0].0, &args[0].1)?;
            let direction = match args.get(1) {
                None => Direction::Desc,
                Some((at, Arg::Word(w) | Arg::Str(w))) => match w.to_lowercase().as_str() {
                    "asc" => Direction::Asc,
                    "desc" => Direction::Desc,
                    _ => {
                        return Err(err(
                            ParseErrorKind::InvalidArgument,
                            *at,
                            format!("sort direction must be asc or desc, found {w:?}"),
                        ))
                    }
                },
                Some((at, other)) => {
                    return Err(err(
                        ParseErrorKind::InvalidArgument,
                        *at,
                        format!(
                            "sort direction must be asc or desc, found {}",
                            other.describe()
                        ),
                    ))
                }
            };
            Command::Sort {
                attribute,
                direction,
            }
        }
        "tFilter" => {
            if args.len() != 2 {
                return Err(arity(
                    &name,
                    "2 arguments (attribute, comparison)",
                    args.len(),
                    close_at,
                ));
            }
            let attribute = c.attribute(args[0].0, &args[0].1)?;
            match &args[1] {
                (_, Arg::Predicate(comparator, value)) => Command::Filter {
                    attribute,
                    comparator: *comparator,
                    value: *value,
                },
                (at, other) => {
                    return Err(err(
                        ParseErrorKind::InvalidArgument,
                        *at,
                        format!(
                            "expected a comparison such as '> 0.5', found {}",
                            other.describe()
                        ),
                    ))
                }
            }
        }
        "tGrep" => {
            if args.len() != 1 {
                return Err(arity(
                    &name,
                    "1 argument (/regex/ or \"text\")",
                    args.len(),
                    close_at,
                ));
            }
            let (at, arg) = &args[0];
            let pattern = match arg {
                Arg::Regex { pattern, flags } => {
                    GrepPattern::new(pattern, false, flags.contains('i'))
                }
                Arg::Str(s) => GrepPattern::new(s, true, true),
                other => {
                    return Err(err(
                        ParseErrorKind::InvalidArgument,
                        *at,
                        format!("expected /regex/ or \"text\", found {}", other.describe()),
                    ))
                }
            };
            Command::Grep(pattern.map_err(|e| {
                err(
                    ParseErrorKind::InvalidRegex,
                    at + 1,
                    format!("invalid regular expression: {}", last_line(&e.to_string())),
                )
            })?)
        }
        "tColor" => {
            if args.len() != 1 {
                return Err(arity(&name, "1 argument (attribute)", args.len(), close_at));
            }
            Command::Color(c.attribute(args[0].0, &args[0].1)?)
        }
        "tReset" => {
            if !args.is_empty() {
                return Err(arity(&name, "no arguments", args.len(), close_at));
            }
            Command::Reset
        }
        _ => unreachable!("name checked above"),
    };
    Ok(cmd)
}

fn last_line(s: &str) -> String {
    s.lines()
        .map(str::trim)
        .rfind(|l| !l.is_empty())
        .unwrap_or(s)
        .to_string()
}
