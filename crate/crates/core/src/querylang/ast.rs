use std::fmt;

use regex::Regex;

/// Pseudo-attribute: the review's overall sentiment.
pub const SENTIMENT: &str = "sentiment";
/// Pseudo-attribute: the review's length in characters.
pub const LENGTH: &str = "length";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AttrKey {
    /// Index into the schema.
    Schema(usize),
    Sentiment,
    Length,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AttrRef {
    pub name: String,
    pub key: AttrKey,
}

/// Names a command may refer to: the schema plus the pseudo-attributes.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeCatalog {
    schema: Vec<String>,
}

impl AttributeCatalog {
    pub fn new(schema: &[String]) -> Self {
        AttributeCatalog {
            schema: schema.to_vec(),
        }
    }

    pub fn resolve(&self, name: &str) -> Option<AttrRef> {
        let name = name.trim().to_lowercase();
        let key = if let Some(i) = self.schema.iter().position(|a| *a == name) {
            AttrKey::Schema(i)
        } else if name == SENTIMENT {
            AttrKey::Sentiment
        } else if name == LENGTH {
            AttrKey::Length
        } else {
            return None;
        };
        Some(AttrRef { name, key })
    }

    pub fn schema(&self) -> &[String] {
        &self.schema
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Asc,
    Desc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Comparator {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl Comparator {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Lt => "<",
            Comparator::Le => "<=",
            Comparator::Gt => ">",
            Comparator::Ge => ">=",
            Comparator::Eq => "==",
            Comparator::Ne => "!=",
        }
    }

    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            Comparator::Lt => lhs < rhs,
            Comparator::Le => lhs <= rhs,
            Comparator::Gt => lhs > rhs,
            Comparator::Ge => lhs >= rhs,
            Comparator::Eq => lhs == rhs,
            Comparator::Ne => lhs != rhs,
        }
    }
}

/// A compiled text pattern.
#[derive(Debug, Clone)]
pub struct GrepPattern {
    /// Pattern as written (regex source, or the literal text).
    pub source: String,
    pub literal: bool,
    pub case_insensitive: bool,
    regex: Regex,
}

impl GrepPattern {
    pub fn new(source: &str, literal: bool, case_insensitive: bool) -> Result<Self, regex::Error> {
        let source = if literal {
            source.to_string()
        } else {
            unescape_slashes(source)
        };
        let body = if literal {
            regex::escape(&source)
        } else {
            source.clone()
        };
        let regex = regex::RegexBuilder::new(&body)
            .case_insensitive(case_insensitive)
            .build()?;
        Ok(GrepPattern {
            source,
            literal,
            case_insensitive,
            regex,
        })
    }

    pub fn is_match(&self, text: &str) -> bool {
        self.regex.is_match(text)
    }

    pub fn regex(&self) -> &Regex {
        &self.regex
    }
}

/// `\/` and `/` mean the same thing in a regex; keep the bare form so a
/// pattern has one canonical source.
fn unescape_slashes(source: &str) -> String {
    let mut out = String::with_capacity(source.len());
    let mut chars = source.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('/') => out.push('/'),
            Some(n) => {
                out.push('\\');
                out.push(n);
            }
            None => out.push('\\'),
        }
    }
    out
}

impl PartialEq for GrepPattern {
    fn eq(&self, other: &Self) -> bool {
        self.source == other.source
            && self.literal == other.literal
            && self.case_insensitive == other.case_insensitive
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Sort {
        attribute: AttrRef,
        direction: Direction,
    },
    Filter {
        attribute: AttrRef,
        comparator: Comparator,
        value: f64,
    },
    Grep(GrepPattern),
    Color(AttrRef),
    Reset,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Sort { .. } => "tSort",
            Command::Filter { .. } => "tFilter",
            Command::Grep(_) => "tGrep",
            Command::Color(_) => "tColor",
            Command::Reset => "tReset",
        }
    }

    /// Whether the server evaluates this command when replaying a history.
    pub fn is_remote(&self) -> bool {
        !matches!(self, Command::Color(_))
    }
}

/// Canonical source form; parses back to an equal command.
impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Command::Sort {
                attribute,
                direction,
            } => {
                let d = match direction {
                    Direction::Asc => "asc",
                    Direction::Desc => "desc",
                };
                write!(f, "tSort({}, {d})", attribute.name)
            }
            Command::Filter {
                attribute,
                comparator,
                value,
            } => write!(
                f,
                "tFilter({}, {} {value:?})",
                attribute.name,
                comparator.symbol()
            ),
            Command::Grep(p) if p.literal => {
                let escaped = p.source.replace('\\', "\\\\").replace('"', "\\\"");
                write!(f, "tGrep(\"{escaped}\")")
            }
            Command::Grep(p) => {
                let escaped = p.source.replace('/', "\\/");
                write!(
                    f,
                    "tGrep(/{escaped}/{})",
                    if p.case_insensitive { "i" } else { "" }
                )
            }
            Command::Color(a) => write!(f, "tColor({})", a.name),
            Command::Reset => write!(f, "tReset()"),
        }
    }
}
