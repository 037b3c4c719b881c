//! Hand-written event-queue simulation of the desk traffic scenario. It
//! shares no code with the kernel: the lights, phases and queue order are
//! spelled out here directly.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

pub struct Light {
    pub name: &'static str,
    /// Green, yellow and red lamp.
    pub lamps: [&'static str; 3],
    /// Green, yellow and red durations.
    pub durations: [u64; 3],
    pub start: u64,
}

pub fn desk_lights() -> [Light; 2] {
    [
        Light {
            name: "lightA",
            lamps: ["lampA_green", "lampA_yellow", "lampA_red"],
            durations: [2, 1, 3],
            start: 0,
        },
        Light {
            name: "lightB",
            lamps: ["lampB_green", "lampB_yellow", "lampB_red"],
            durations: [1, 1, 2],
            start: 1,
        },
    ]
}

pub const DESK_HORIZON: u64 = 12;

const COLORS: [&str; 3] = ["green", "yellow", "red"];
const PHASES: [&str; 3] = ["green_phase", "yellow_phase", "red_phase"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Due {
    Start,
    PowerOnEnd,
    PhaseEnd(usize),
}

/// Expected trace lines, `"<tick> <kind> <details>"`, in order.
pub fn expected_trace(lights: &[Light], horizon: u64) -> Vec<String> {
    let mut out = Vec::new();
    for l in lights {
        for lamp in l.lamps {
            out.push(format!("0 Link {lamp} Continuant_Part_Of {}", l.name));
        }
    }
    for l in lights {
        for lamp in l.lamps {
            out.push(format!("0 Link {lamp} Has_Quality dark"));
        }
    }

    // (tick, schedule order, run, what)
    let mut queue: BinaryHeap<Reverse<(u64, u64, usize, Due)>> = BinaryHeap::new();
    let mut seq = 0;
    let mut push = |queue: &mut BinaryHeap<_>, tick, run, due| {
        queue.push(Reverse((tick, seq, run, due)));
        seq += 1;
    };
    for (run, l) in lights.iter().enumerate() {
        push(&mut queue, l.start, run, Due::Start);
    }

    while let Some(Reverse((now, _, run, due))) = queue.pop() {
        if now > horizon {
            break;
        }
        let l = &lights[run];
        match due {
            Due::Start => {
                out.push(format!("{now} WorkflowStart run={run}"));
                out.push(format!("{now} StepStart run={run} power_on"));
                push(&mut queue, now, run, Due::PowerOnEnd);
            }
            Due::PowerOnEnd => {
                out.push(format!("{now} Unlink {} Has_Quality dark", l.lamps[0]));
                out.push(format!("{now} Link {} Has_Quality green", l.lamps[0]));
                out.push(format!("{now} StepEnd run={run} power_on"));
                if now >= horizon {
                    out.push(format!("{now} WorkflowComplete run={run}"));
                } else {
                    out.push(format!("{now} StepStart run={run} {}", PHASES[0]));
                    push(&mut queue, now + l.durations[0], run, Due::PhaseEnd(0));
                }
            }
            Due::PhaseEnd(p) => {
                let next = (p + 1) % 3;
                let (off, on) = (l.lamps[p], l.lamps[next]);
                // Unlinks first, then links.
                out.push(format!("{now} Unlink {off} Has_Quality {}", COLORS[p]));
                out.push(format!("{now} Unlink {on} Has_Quality dark"));
                out.push(format!("{now} Link {off} Has_Quality dark"));
                out.push(format!("{now} Link {on} Has_Quality {}", COLORS[next]));
                out.push(format!("{now} StepEnd run={run} {}", PHASES[p]));
                if next == 0 && now >= horizon {
                    out.push(format!("{now} WorkflowComplete run={run}"));
                } else {
                    out.push(format!("{now} StepStart run={run} {}", PHASES[next]));
                    push(
                        &mut queue,
                        now + l.durations[next],
                        run,
                        Due::PhaseEnd(next),
                    );
                }
            }
        }
    }
    out
}

/// Color of each lamp at `at` according to the oracle's phase arithmetic.
pub fn lamp_color(l: &Light, lamp: usize, at: u64) -> &'static str {
    if at < l.start {
        return "dark";
    }
    let cycle: u64 = l.durations.iter().sum();
    let mut t = (at - l.start) % cycle;
    let mut phase = 0;
    while t >= l.durations[phase] {
        t -= l.durations[phase];
        phase += 1;
    }
    if phase == lamp {
        COLORS[lamp]
    } else {
        "dark"
    }
}

/// Spot values worked out by hand from the durations.
pub fn self_check() {
    let lights = desk_lights();
    assert_eq!(lamp_color(&lights[0], 0, 1), "green");
    assert_eq!(lamp_color(&lights[0], 1, 2), "yellow");
    assert_eq!(lamp_color(&lights[0], 2, 5), "red");
    assert_eq!(lamp_color(&lights[0], 0, 6), "green");
    assert_eq!(lamp_color(&lights[1], 0, 0), "dark");
    assert_eq!(lamp_color(&lights[1], 0, 1), "green");
    assert_eq!(lamp_color(&lights[1], 2, 4), "red");
}
