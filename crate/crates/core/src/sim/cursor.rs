//! Walking a chain's pin sequence through the registry.
//!
//! Starting from `(Pin::ZERO, t = 0)` the next key is `key(prev_pin, t)`.
//! A live entry becomes the new `prev_pin`; a contested entry only bumps `t`
//! so the replacement lands at `key(prev_pin, t + 1)`.

use crate::crypto::{MapKey, Pin, PinKeys};
use crate::registry::PinEntry;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cursor {
    /// PRF counter for the next key.
    pub t: u64,
    pub prev_pin: Pin,
    /// Key of `prev_pin`, or `MapKey::GENESIS_PREV` before the first pin.
    pub prev_key: MapKey,
}

impl Default for Cursor {
    fn default() -> Self {
        Cursor::genesis()
    }
}

impl Cursor {
    pub const fn genesis() -> Self {
        Cursor {
            t: 0,
            prev_pin: Pin::ZERO,
            prev_key: MapKey::GENESIS_PREV,
        }
    }

    pub fn next_key(&self, keys: &PinKeys) -> MapKey {
        keys.key(&self.prev_pin, self.t)
    }

    pub fn advance(&mut self, key: MapKey, entry: &PinEntry) {
        if !entry.contested {
            self.prev_pin = entry.pin;
            self.prev_key = key;
        }
        self.t += 1;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    /// Follow the entry. `settled` marks it as immutable so a cached
    /// cursor may skip past it next time.
    Accept { settled: bool },
    /// Stop in front of the entry and report it.
    Stop,
    /// Treat the key as empty.
    Hidden,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkEntry {
    pub t: u64,
    pub key: MapKey,
    pub prev_key: MapKey,
    pub entry: PinEntry,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkEnd {
    /// Position of the first empty (or stopped) key.
    pub cursor: Cursor,
    pub stopped_at: Option<WalkEntry>,
}

/// Walks from `*settled`, advancing `*settled` over the leading run of
/// entries classified as settled.
pub fn walk(
    keys: &PinKeys,
    settled: &mut Cursor,
    lookup: impl Fn(&MapKey) -> Option<PinEntry>,
    mut classify: impl FnMut(&WalkEntry) -> Step,
) -> WalkEnd {
    let mut cursor = *settled;
    let mut prefix_settled = true;
    loop {
        let key = cursor.next_key(keys);
        let Some(entry) = lookup(&key) else {
            return WalkEnd {
                cursor,
                stopped_at: None,
            };
        };
        let item = WalkEntry {
            t: cursor.t,
            key,
            prev_key: cursor.prev_key,
            entry,
        };
        match classify(&item) {
            Step::Accept { settled: s } => {
                cursor.advance(key, &entry);
                prefix_settled &= s;
                if prefix_settled {
                    *settled = cursor;
                }
            }
            Step::Stop => {
                return WalkEnd {
                    cursor,
                    stopped_at: Some(item),
                }
            }
            Step::Hidden => {
                return WalkEnd {
                    cursor,
                    stopped_at: None,
                }
            }
        }
    }
}

/// Every entry reachable from genesis, in order, following all of them.
pub fn collect_all(keys: &PinKeys, lookup: impl Fn(&MapKey) -> Option<PinEntry>) -> (Vec<WalkEntry>, Cursor) {
    let mut out = Vec::new();
    let mut start = Cursor::genesis();
    let end = walk(keys, &mut start, lookup, |item| {
        out.push(item.clone());
        Step::Accept { settled: false }
    });
    (out, end.cursor)
}
