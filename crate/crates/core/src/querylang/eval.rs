use std::fmt;

use super::ast::{AttrKey, AttrRef, AttributeCatalog, Command, Direction};
use super::parser::{parse, ParseError};

/// Read access to review text and attribute values by review index.
pub trait ReviewStore {
    fn text(&self, review: usize) -> &str;
    /// `None` when the attribute is absent for this review.
    fn value(&self, review: usize, key: AttrKey) -> Option<f64>;
}

/// Composable command state over an initial set of reviews.
#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    initial: Vec<usize>,
    pub history: Vec<Command>,
    pub working_set: Vec<usize>,
    pub color_attribute: Option<AttrRef>,
}

impl Session {
    pub fn new(initial: Vec<usize>) -> Self {
        Session {
            working_set: initial.clone(),
            initial,
            history: Vec::new(),
            color_attribute: None,
        }
    }

    pub fn initial(&self) -> &[usize] {
        &self.initial
    }

    /// Applies one command in place. Every new command runs on the result of
    /// the previous one; `Reset` restores the initial set and clears history.
    pub fn apply(&mut self, command: Command, store: &dyn ReviewStore) {
        match &command {
            Command::Reset => {
                self.working_set = self.initial.clone();
                self.history.clear();
                self.color_attribute = None;
                return;
            }
            Command::Color(attr) => self.color_attribute = Some(attr.clone()),
            other => self.working_set = apply_to_set(&self.working_set, other, store),
        }
        self.history.push(command);
    }

    /// Rebuilds a session by replaying `history` over `initial`.
    pub fn replay(initial: Vec<usize>, history: &[Command], store: &dyn ReviewStore) -> Self {
        let mut s = Session::new(initial);
        for c in history {
            s.apply(c.clone(), store);
        }
        s
    }
}

/// Functional form of [`Session::apply`].
pub fn apply(mut session: Session, command: Command, store: &dyn ReviewStore) -> Session {
    session.apply(command, store);
    session
}

/// Result of a single set-transforming command over `set`. `Color` and
/// `Reset` leave the set unchanged here; session state handles them.
pub fn apply_to_set(set: &[usize], command: &Command, store: &dyn ReviewStore) -> Vec<usize> {
    match command {
        Command::Sort {
            attribute,
            direction,
        } => {
            let mut keyed: Vec<(usize, Option<f64>)> = set
                .iter()
                .map(|&r| (r, store.value(r, attribute.key)))
                .collect();
            // Stable: equal keys keep their previous relative order.
            keyed.sort_by(|(_, a), (_, b)| match (a, b) {
                (Some(x), Some(y)) => match direction {
                    Direction::Asc => x.total_cmp(y),
                    Direction::Desc => y.total_cmp(x),
                },
                (Some(_), None) => std::cmp::Ordering::Less,
                (None, Some(_)) => std::cmp::Ordering::Greater,
                (None, None) => std::cmp::Ordering::Equal,
            });
            keyed.into_iter().map(|(r, _)| r).collect()
        }
        Command::Filter {
            attribute,
            comparator,
            value,
        } => set
            .iter()
            .copied()
            .filter(|&r| {
                store
                    .value(r, attribute.key)
                    .is_some_and(|v| comparator.holds(v, *value))
            })
            .collect(),
        Command::Grep(pattern) => set
            .iter()
            .copied()
            .filter(|&r| pattern.is_match(store.text(r)))
            .collect(),
        Command::Color(_) | Command::Reset => set.to_vec(),
    }
}

/// Replays a history over the whole scope on the server side.
///
/// `scope` is in corpus order; the result keeps that order unless a sort
/// reorders it. `Color` is display state and is skipped.
pub fn evaluate_remote(
    history: &[Command],
    scope: &[usize],
    store: &dyn ReviewStore,
) -> Vec<usize> {
    let mut set = scope.to_vec();
    for c in history {
        set = match c {
            Command::Reset => scope.to_vec(),
            Command::Color(_) => set,
            other => apply_to_set(&set, other, store),
        };
    }
    set
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistoryError {
    /// Zero-based index of the offending entry.
    pub index: usize,
    pub error: ParseError,
}

impl fmt::Display for HistoryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "history entry {}: {}", self.index, self.error)
    }
}

impl std::error::Error for HistoryError {}

/// Parses the wire form of a history (one command string per entry).
pub fn parse_history<S: AsRef<str>>(
    entries: &[S],
    catalog: &AttributeCatalog,
) -> Result<Vec<Command>, HistoryError> {
    entries
        .iter()
        .enumerate()
        .map(|(index, s)| parse(s.as_ref(), catalog).map_err(|error| HistoryError { index, error }))
        .collect()
}
