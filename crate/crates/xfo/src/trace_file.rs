//! The `.trace.json` interchange format and state replay from it.

use serde::{Deserialize, Serialize};
use xfo_core::microworld::Simulation;
use xfo_core::relations::HAS_QUALITY;
use xfo_core::{Direction, EntityId, Event, StateEntry, Tick, TraceEvent};

pub const FORMAT: &str = "xfo-trace";
pub const VERSION: u32 = 1;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum TraceError {
    #[error("malformed trace: {0}")]
    Malformed(String),
    #[error("tick {tick} is outside the trace (horizon {horizon})")]
    TickOutOfRange { tick: Tick, horizon: Tick },
}

/// A recorded simulation: header fields, then every event in order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceFile {
    pub format: String,
    pub version: u32,
    pub model: String,
    pub scenario: String,
    pub horizon: Tick,
    /// Last tick the simulation was advanced to.
    pub until: Tick,
    pub events: Vec<TraceEvent>,
}

impl TraceFile {
    pub fn from_simulation(sim: &Simulation) -> Self {
        TraceFile {
            format: FORMAT.to_string(),
            version: VERSION,
            model: sim.scenario().model.clone(),
            scenario: sim.scenario().name.clone(),
            horizon: sim.horizon(),
            until: sim.clock(),
            events: sim.trace().to_vec(),
        }
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("trace serializes");
        s.push('\n');
        s
    }

    /// Parses and checks a trace: header, ordering, and that links and
    /// unlinks pair up.
    pub fn from_json(text: &str) -> Result<Self, TraceError> {
        let file: TraceFile =
            serde_json::from_str(text).map_err(|e| TraceError::Malformed(e.to_string()))?;
        if file.format != FORMAT {
            return Err(TraceError::Malformed(format!(
                "unknown format `{}`",
                file.format
            )));
        }
        if file.version != VERSION {
            return Err(TraceError::Malformed(format!(
                "unsupported version {}",
                file.version
            )));
        }
        if file.until > file.horizon {
            return Err(TraceError::Malformed("`until` exceeds the horizon".into()));
        }
        for pair in file.events.windows(2) {
            if pair[1].seq <= pair[0].seq {
                return Err(TraceError::Malformed(format!(
                    "seq {} does not increase",
                    pair[1].seq
                )));
            }
            if pair[1].at < pair[0].at {
                return Err(TraceError::Malformed(format!(
                    "event {} goes back in time",
                    pair[1].seq
                )));
            }
        }
        if let Some(last) = file.events.last() {
            if last.at > file.until {
                return Err(TraceError::Malformed(format!(
                    "event {} is after `until`",
                    last.seq
                )));
            }
        }
        Replay::new(&file)?;
        Ok(file)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Span {
    pub from: String,
    pub relation: String,
    pub to: String,
    pub start: Tick,
    pub end: Option<Tick>,
}

impl Span {
    pub fn is_active_at(&self, at: Tick) -> bool {
        self.start <= at && self.end.is_none_or(|e| at < e)
    }
}

/// Link history rebuilt from `Link`/`Unlink` events alone.
#[derive(Debug, Clone)]
pub struct Replay {
    pub spans: Vec<Span>,
    pub horizon: Tick,
}

impl Replay {
    pub fn new(file: &TraceFile) -> Result<Self, TraceError> {
        let mut spans: Vec<Span> = Vec::new();
        for ev in &file.events {
            match &ev.event {
                Event::Link { from, relation, to } => {
                    let open = spans.iter().any(|s| {
                        s.end.is_none() && &s.from == from && &s.relation == relation && &s.to == to
                    });
                    if open {
                        return Err(TraceError::Malformed(format!(
                            "event {}: `{from} {relation} {to}` linked twice",
                            ev.seq
                        )));
                    }
                    spans.push(Span {
                        from: from.clone(),
                        relation: relation.clone(),
                        to: to.clone(),
                        start: ev.at,
                        end: None,
                    });
                }
                Event::Unlink { from, relation, to } => {
                    let span = spans.iter_mut().find(|s| {
                        s.end.is_none() && &s.from == from && &s.relation == relation && &s.to == to
                    });
                    match span {
                        Some(s) => s.end = Some(ev.at),
                        None => {
                            return Err(TraceError::Malformed(format!(
                                "event {}: `{from} {relation} {to}` unlinked but never linked",
                                ev.seq
                            )))
                        }
                    }
                }
                _ => {}
            }
        }
        Ok(Replay {
            spans,
            horizon: file.horizon,
        })
    }

    /// Same entries, in the same order, as the kernel's `state_of`.
    pub fn state_at(&self, entity: &str, at: Tick) -> Vec<StateEntry> {
        let mut out = Vec::new();
        for s in self.spans.iter().filter(|s| s.is_active_at(at)) {
            if s.from == entity {
                out.push(StateEntry {
                    direction: Direction::Out,
                    kind: s.relation.clone(),
                    counterpart: EntityId::new(s.to.as_str()),
                });
            }
            if s.to == entity {
                out.push(StateEntry {
                    direction: Direction::In,
                    kind: s.relation.clone(),
                    counterpart: EntityId::new(s.from.as_str()),
                });
            }
        }
        out.sort_by(|a, b| {
            (a.kind.as_str(), a.counterpart.as_str(), a.direction).cmp(&(
                b.kind.as_str(),
                b.counterpart.as_str(),
                b.direction,
            ))
        });
        out
    }

    /// Every entity named by a link, in order of first appearance.
    pub fn entities(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for s in &self.spans {
            for e in [s.from.as_str(), s.to.as_str()] {
                if !out.contains(&e) {
                    out.push(e);
                }
            }
        }
        out
    }

    /// Subjects of `Has_Quality` links, in order of first appearance.
    pub fn quality_subjects(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for s in self.spans.iter().filter(|s| s.relation == HAS_QUALITY) {
            if !out.contains(&s.from.as_str()) {
                out.push(&s.from);
            }
        }
        out
    }

    /// `Has_Quality` spans of one subject, ends clipped to the horizon.
    pub fn quality_spans(&self, subject: &str) -> Vec<(Tick, Tick, &str)> {
        self.spans
            .iter()
            .filter(|s| s.relation == HAS_QUALITY && s.from == subject)
            .map(|s| {
                (
                    s.start,
                    s.end.unwrap_or(self.horizon).min(self.horizon),
                    s.to.as_str(),
                )
            })
            .filter(|(start, end, _)| start < end)
            .collect()
    }

    /// The quality a subject has at `at`; the alphabetically first if several.
    pub fn quality_at(&self, subject: &str, at: Tick) -> Option<&str> {
        self.spans
            .iter()
            .filter(|s| s.relation == HAS_QUALITY && s.from == subject && s.is_active_at(at))
            .map(|s| s.to.as_str())
            .min()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn link(seq: u64, at: Tick, from: &str, to: &str) -> TraceEvent {
        TraceEvent {
            seq,
            at,
            event: Event::Link {
                from: from.into(),
                relation: HAS_QUALITY.into(),
                to: to.into(),
            },
        }
    }

    fn unlink(seq: u64, at: Tick, from: &str, to: &str) -> TraceEvent {
        TraceEvent {
            seq,
            at,
            event: Event::Unlink {
                from: from.into(),
                relation: HAS_QUALITY.into(),
                to: to.into(),
            },
        }
    }

    fn file(events: Vec<TraceEvent>) -> TraceFile {
        TraceFile {
            format: FORMAT.into(),
            version: VERSION,
            model: "m".into(),
            scenario: "s".into(),
            horizon: 5,
            until: 5,
            events,
        }
    }

    #[test]
    fn json_round_trip_keeps_field_order() {
        let mut f = file(vec![link(0, 0, "lamp", "dark")]);
        f.events.push(TraceEvent {
            seq: 1,
            at: 1,
            event: Event::StepStart {
                run: 0,
                workflow: "w".into(),
                step: "s".into(),
                agent: None,
                placeholder: false,
            },
        });
        let json = f.to_json();
        assert!(json.find("\"format\"").unwrap() < json.find("\"events\"").unwrap());
        let ev = json.find("\"seq\": 0").unwrap();
        assert!(ev < json[ev..].find("\"kind\": \"Link\"").unwrap() + ev);
        assert_eq!(TraceFile::from_json(&json).unwrap(), f);
    }

    #[test]
    fn replay_spans_and_state() {
        let f = file(vec![
            link(0, 0, "lamp", "dark"),
            unlink(1, 2, "lamp", "dark"),
            link(2, 2, "lamp", "green"),
        ]);
        let r = Replay::new(&f).unwrap();
        assert_eq!(r.quality_spans("lamp"), [(0, 2, "dark"), (2, 5, "green")]);
        assert_eq!(r.quality_at("lamp", 1), Some("dark"));
        assert_eq!(r.state_at("green", 3)[0].direction, Direction::In);
        assert!(r
            .state_at("lamp", 9)
            .iter()
            .any(|e| e.counterpart.as_str() == "green"));
    }

    #[test]
    fn malformed_inputs() {
        let good = file(vec![link(0, 0, "a", "b")]).to_json();
        let truncated = &good[..good.len() / 2];
        assert!(matches!(
            TraceFile::from_json(truncated),
            Err(TraceError::Malformed(_))
        ));
        let unpaired = file(vec![unlink(0, 1, "a", "b")]).to_json();
        assert!(TraceFile::from_json(&unpaired).is_err());
        let backwards = file(vec![link(0, 3, "a", "b"), link(1, 1, "c", "d")]).to_json();
        assert!(TraceFile::from_json(&backwards).is_err());
        let wrong = good.replace("xfo-trace", "other");
        assert!(TraceFile::from_json(&wrong).is_err());
    }
}
