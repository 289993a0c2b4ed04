//! Recovering one chain's pins from an event log given its secret.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::crypto::{MapKey, Pin, PinKeys};
use crate::eventlog::LogRecord;
use crate::registry::{EventKind, PinEntry, ProposalAction, RegistryEvent};
use crate::sim::cursor::{walk, Cursor, Step};

/// How far past an empty key to look for a pin that skipped a counter value.
pub const GAP_LOOKAHEAD: u64 = 8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerifiedPin {
    pub index: u64,
    pub key: MapKey,
    pub pin: Pin,
    pub posted_at: u64,
    pub registry: Option<String>,
    pub contested: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VerifyReport {
    pub pins: Vec<VerifiedPin>,
    pub contested: u64,
    /// Counter values with no pin although a later value has one.
    pub gaps: Vec<u64>,
    pub next_index: u64,
}

impl VerifyReport {
    pub fn is_consistent(&self) -> bool {
        self.gaps.is_empty()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for p in &self.pins {
            out.push_str(&format!(
                "{:>5}  {}  {}  height {}{}\n",
                p.index,
                p.key,
                if p.contested { "CONTESTED".to_string() } else { p.pin.to_string() },
                p.posted_at,
                p.registry.as_deref().map(|r| format!("  on {r}")).unwrap_or_default()
            ));
        }
        out.push_str(&format!(
            "pins: {}, contested: {}, gaps: {:?}, next index: {}\n",
            self.pins.len(),
            self.contested,
            self.gaps,
            self.next_index
        ));
        out
    }
}

#[derive(Debug, Clone)]
struct Posted {
    entry: PinEntry,
    registry: Option<String>,
}

/// Every pin posted in `records` plus contest outcomes, keyed by map key.
/// Records that are not registry events are ignored.
fn collect_pins(records: &[LogRecord]) -> BTreeMap<MapKey, Posted> {
    let mut pins = BTreeMap::new();
    for record in records {
        let Ok(event) = RegistryEvent::from_record(record) else { continue };
        let registry = record.payload_str("registry").map(str::to_string);
        match event.kind {
            EventKind::PinAdded { key, pin } => {
                pins.entry(key).or_insert(Posted {
                    entry: PinEntry {
                        pin,
                        posted_at: event.height,
                        contested: false,
                    },
                    registry,
                });
            }
            EventKind::ProposalActioned {
                action: ProposalAction::ContestPin { target },
                passed: true,
                ..
            } => {
                if let Some(p) = pins.get_mut(&target) {
                    p.entry.pin = Pin::CONTESTED;
                    p.entry.contested = true;
                }
            }
            _ => {}
        }
    }
    pins
}

pub fn verify_log(records: &[LogRecord], keys: &PinKeys) -> VerifyReport {
    let pins = collect_pins(records);
    let lookup = |k: &MapKey| pins.get(k).map(|p| p.entry);
    let mut report = VerifyReport {
        pins: Vec::new(),
        contested: 0,
        gaps: Vec::new(),
        next_index: 0,
    };
    let mut cursor = Cursor::genesis();
    loop {
        let end = walk(keys, &mut cursor, lookup, |item| {
            report.pins.push(VerifiedPin {
                index: item.t,
                key: item.key,
                pin: item.entry.pin,
                posted_at: item.entry.posted_at,
                registry: pins.get(&item.key).and_then(|p| p.registry.clone()),
                contested: item.entry.contested,
            });
            report.contested += item.entry.contested as u64;
            Step::Accept { settled: true }
        });
        let skip = (1..=GAP_LOOKAHEAD).find(|s| {
            let probe = Cursor {
                t: end.cursor.t + s,
                ..end.cursor
            };
            pins.contains_key(&probe.next_key(keys))
        });
        match skip {
            Some(s) => {
                report.gaps.extend(end.cursor.t..end.cursor.t + s);
                cursor = Cursor {
                    t: end.cursor.t + s,
                    ..end.cursor
                };
            }
            None => {
                report.next_index = end.cursor.t;
                return report;
            }
        }
    }
}
