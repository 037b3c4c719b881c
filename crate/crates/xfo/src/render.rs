//! SVG views of a trace: a timeline of quality spans per entity and a
//! snapshot of lamp states at one tick. Output depends only on the trace
//! and options, with integer coordinates throughout.

use std::fmt::Write;

use xfo_core::relations::CONTINUANT_PART_OF;
use xfo_core::Tick;

use crate::trace_file::{Replay, TraceError, TraceFile};

const COLORS: [(&str, &str); 4] = [
    ("green", "#2e8b57"),
    ("yellow", "#e6c200"),
    ("red", "#c0392b"),
    ("dark", "#777777"),
];

/// Used for qualities outside the color table, picked by name.
const PALETTE: [&str; 6] = [
    "#4a6fa5", "#9b59b6", "#d98c3f", "#3c9d9b", "#8c6d46", "#b85c8a",
];

const LEFT: u64 = 160;
const TOP: u64 = 40;
const BAND: u64 = 24;
const GAP: u64 = 8;
const PLOT_WIDTH: u64 = 720;

pub fn color_of(quality: &str) -> &'static str {
    let lower = quality.to_ascii_lowercase();
    if let Some((_, c)) = COLORS.iter().find(|(n, _)| *n == lower) {
        return c;
    }
    if let Some((_, c)) = COLORS.iter().find(|(n, _)| lower.contains(n)) {
        return c;
    }
    let sum: usize = quality.bytes().map(usize::from).sum();
    PALETTE[sum % PALETTE.len()]
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

#[derive(Debug, Clone, Default)]
pub struct TimelineOptions {
    /// Entities to draw, in this order. Empty means every subject of a
    /// `Has_Quality` link.
    pub entities: Vec<String>,
}

pub fn render_timeline(file: &TraceFile, opts: &TimelineOptions) -> Result<String, TraceError> {
    let replay = Replay::new(file)?;
    let known = replay.entities();
    let unknown: Vec<&str> = opts
        .entities
        .iter()
        .map(String::as_str)
        .filter(|e| !known.contains(e))
        .collect();
    if !unknown.is_empty() {
        return Err(TraceError::Malformed(format!(
            "unknown entities in filter: {}",
            unknown.join(", ")
        )));
    }
    let subjects: Vec<&str> = if opts.entities.is_empty() {
        replay.quality_subjects()
    } else {
        opts.entities.iter().map(String::as_str).collect()
    };

    let horizon = file.horizon.max(1);
    let px = (PLOT_WIDTH / horizon).max(2);
    let width = LEFT + horizon * px + 40;
    let axis_y = TOP + subjects.len() as u64 * (BAND + GAP);
    let height = axis_y + 40;
    let x = |t: Tick| LEFT + t * px;

    let mut out = String::new();
    writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\" font-family=\"monospace\" font-size=\"12\">"
    )
    .unwrap();
    writeln!(
        out,
        "<text x=\"10\" y=\"20\">{} / {} (horizon {})</text>",
        escape(&file.model),
        escape(&file.scenario),
        file.horizon
    )
    .unwrap();
    for (i, subject) in subjects.iter().enumerate() {
        let y = TOP + i as u64 * (BAND + GAP);
        writeln!(
            out,
            "<g class=\"band\" data-entity=\"{}\">",
            escape(subject)
        )
        .unwrap();
        writeln!(
            out,
            "<text x=\"10\" y=\"{}\">{}</text>",
            y + 16,
            escape(subject)
        )
        .unwrap();
        for (start, end, quality) in replay.quality_spans(subject) {
            writeln!(
                out,
                "<rect x=\"{}\" y=\"{y}\" width=\"{}\" height=\"{BAND}\" fill=\"{}\" data-quality=\"{}\" data-start=\"{start}\" data-end=\"{end}\"/>",
                x(start),
                (end - start) * px,
                color_of(quality),
                escape(quality)
            )
            .unwrap();
        }
        writeln!(out, "</g>").unwrap();
    }
    writeln!(
        out,
        "<line x1=\"{LEFT}\" y1=\"{axis_y}\" x2=\"{}\" y2=\"{axis_y}\" stroke=\"black\"/>",
        x(horizon)
    )
    .unwrap();
    let step = 30u64.div_ceil(px).max(1);
    let mut t = 0;
    while t <= horizon {
        writeln!(
            out,
            "<line x1=\"{0}\" y1=\"{axis_y}\" x2=\"{0}\" y2=\"{1}\" stroke=\"black\"/><text x=\"{0}\" y=\"{2}\" text-anchor=\"middle\">{t}</text>",
            x(t),
            axis_y + 5,
            axis_y + 20
        )
        .unwrap();
        t += step;
    }
    writeln!(out, "</svg>").unwrap();
    Ok(out)
}

/// One row per whole (the target of `Continuant_Part_Of` links active at
/// `at`), one circle per part, filled with the part's quality color.
pub fn render_snapshot(file: &TraceFile, at: Tick) -> Result<String, TraceError> {
    if at > file.horizon {
        return Err(TraceError::TickOutOfRange {
            tick: at,
            horizon: file.horizon,
        });
    }
    let replay = Replay::new(file)?;
    let mut groups: Vec<(String, Vec<&str>)> = Vec::new();
    for subject in replay.quality_subjects() {
        let whole = replay
            .spans
            .iter()
            .find(|s| s.relation == CONTINUANT_PART_OF && s.from == subject && s.is_active_at(at))
            .map(|s| s.to.clone())
            .unwrap_or_else(|| subject.to_string());
        match groups.iter_mut().find(|(w, _)| *w == whole) {
            Some((_, parts)) => parts.push(subject),
            None => groups.push((whole, vec![subject])),
        }
    }

    let widest = groups
        .iter()
        .map(|(_, p)| p.len() as u64)
        .max()
        .unwrap_or(0);
    let width = LEFT + widest * 40 + 20;
    let height = TOP + groups.len() as u64 * 48 + 10;
    let mut out = String::new();
    writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\" font-family=\"monospace\" font-size=\"12\">"
    )
    .unwrap();
    writeln!(
        out,
        "<text x=\"10\" y=\"20\">{} / {} at tick {at}</text>",
        escape(&file.model),
        escape(&file.scenario)
    )
    .unwrap();
    for (row, (whole, parts)) in groups.iter().enumerate() {
        let cy = TOP + row as u64 * 48 + 16;
        writeln!(out, "<g class=\"group\" data-entity=\"{}\">", escape(whole)).unwrap();
        writeln!(
            out,
            "<text x=\"10\" y=\"{}\">{}</text>",
            cy + 4,
            escape(whole)
        )
        .unwrap();
        for (i, part) in parts.iter().enumerate() {
            let cx = LEFT + i as u64 * 40 + 16;
            let (fill, quality) = match replay.quality_at(part, at) {
                Some(q) => (color_of(q), q),
                None => ("none", ""),
            };
            writeln!(
                out,
                "<circle cx=\"{cx}\" cy=\"{cy}\" r=\"14\" fill=\"{fill}\" stroke=\"black\" data-entity=\"{}\" data-quality=\"{}\"/>",
                escape(part),
                escape(quality)
            )
            .unwrap();
        }
        writeln!(out, "</g>").unwrap();
    }
    writeln!(out, "</svg>").unwrap();
    Ok(out)
}
