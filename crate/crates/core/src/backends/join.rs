use std::collections::HashMap;

use super::{Completion, Tag};
use crate::units::Micros;

/// Merges partial completions of a request split across several sub-requests.
#[derive(Debug, Default)]
pub(crate) struct Joiner {
    open: HashMap<Tag, Partial>,
}

#[derive(Debug)]
struct Partial {
    outstanding: usize,
    bytes: u64,
    at: Micros,
    cost_delta_cents: f64,
}

impl Joiner {
    pub fn open(&mut self, tag: Tag, parts: usize) {
        debug_assert!(parts > 0);
        let prev = self.open.insert(
            tag,
            Partial {
                outstanding: parts,
                bytes: 0,
                at: 0,
                cost_delta_cents: 0.0,
            },
        );
        debug_assert!(prev.is_none(), "tag {tag} reused while in flight");
    }

    /// Records one finished part; returns the merged completion after the last.
    pub fn finish_part(
        &mut self,
        tag: Tag,
        at: Micros,
        bytes: u64,
        cost: f64,
    ) -> Option<Completion> {
        let p = self.open.get_mut(&tag)?;
        p.outstanding -= 1;
        p.bytes += bytes;
        p.at = p.at.max(at);
        p.cost_delta_cents += cost;
        if p.outstanding > 0 {
            return None;
        }
        let p = self.open.remove(&tag)?;
        Some(Completion {
            tag,
            at: p.at,
            bytes: p.bytes,
            cost_delta_cents: p.cost_delta_cents,
        })
    }
}

/// Allocates private tags for sub-requests sent to an inner backend.
#[derive(Debug)]
pub(crate) struct TagMap<V> {
    next: Tag,
    map: HashMap<Tag, V>,
}

impl<V> Default for TagMap<V> {
    fn default() -> Self {
        Self {
            next: 0,
            map: HashMap::new(),
        }
    }
}

impl<V> TagMap<V> {
    pub fn insert(&mut self, value: V) -> Tag {
        let tag = self.next;
        self.next += 1;
        self.map.insert(tag, value);
        tag
    }

    pub fn take(&mut self, tag: Tag) -> Option<V> {
        self.map.remove(&tag)
    }

    /// Tag that the next `insert` will return.
    pub fn peek_next(&self) -> Tag {
        self.next
    }
}
