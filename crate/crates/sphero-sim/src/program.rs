//! The spiral roll program and the trajectory it produces.

use crate::config::ScenarioConfig;

/// One roll: heading in degrees clockwise from the area's +y axis, speed on
/// the 0–255 scale, duration in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Command {
    pub heading_deg: f64,
    pub speed: f64,
    pub duration_ms: i64,
}

/// Unit direction of a heading in area coordinates.
pub fn heading_direction(heading_deg: f64) -> (f64, f64) {
    let h = heading_deg.to_radians();
    (h.sin(), h.cos())
}

/// Counter-clockwise angle from +x of a heading, in radians.
pub fn heading_yaw(heading_deg: f64) -> f64 {
    (90.0 - heading_deg).to_radians()
}

/// Alternating X and Y legs turning 90° each time, spiralling inwards from
/// the bottom right corner. Each X leg is `dec_x_ms` shorter than the
/// previous one and each Y leg `dec_y_ms`; the program ends at the first leg
/// whose duration would not be positive.
pub fn generate_input_program(cfg: &ScenarioConfig) -> Vec<Command> {
    // left, up, right, down
    const HEADINGS: [f64; 4] = [270.0, 0.0, 90.0, 180.0];
    let mut out = Vec::new();
    for i in 0.. {
        let round = (i / 2) as i64;
        let duration_ms = if i % 2 == 0 {
            cfg.leg_x_ms - round * cfg.dec_x_ms
        } else {
            cfg.leg_y_ms - round * cfg.dec_y_ms
        };
        if duration_ms <= 0 {
            break;
        }
        out.push(Command {
            heading_deg: HEADINGS[i % 4],
            speed: cfg.speed_setting,
            duration_ms,
        });
    }
    out
}

/// A straight piece of motion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start_us: i64,
    pub end_us: i64,
    pub from: (f64, f64),
    pub heading_deg: f64,
    /// cm/s
    pub speed: f64,
}

/// State of the robot at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    pub x: f64,
    pub y: f64,
    pub heading_deg: f64,
    /// cm/s along the heading.
    pub speed: f64,
}

/// Piecewise-linear motion obtained by rolling a program at a fixed speed.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub segments: Vec<Segment>,
    pub end: (f64, f64),
}

impl Trajectory {
    /// Rolls `program` from `start` at `speed_mps`, starting at `t0_us`.
    pub fn roll(program: &[Command], start: (f64, f64), speed_mps: f64, t0_us: i64) -> Self {
        let mut segments = Vec::with_capacity(program.len());
        let mut t = t0_us;
        let mut p = start;
        let speed = speed_mps * 100.0;
        for c in program {
            let dur = c.duration_ms * 1000;
            segments.push(Segment {
                start_us: t,
                end_us: t + dur,
                from: p,
                heading_deg: c.heading_deg,
                speed,
            });
            let (dx, dy) = heading_direction(c.heading_deg);
            let d = speed * dur as f64 / 1e6;
            p = (p.0 + dx * d, p.1 + dy * d);
            t += dur;
        }
        Trajectory { segments, end: p }
    }

    pub fn end_us(&self) -> i64 {
        self.segments.last().map_or(0, |s| s.end_us)
    }

    pub fn start_us(&self) -> i64 {
        self.segments.first().map_or(0, |s| s.start_us)
    }

    /// Position, heading and speed at `t_us`. Before the start the robot
    /// waits at its first position; after the end it stands still.
    pub fn state(&self, t_us: i64) -> State {
        let Some(first) = self.segments.first() else {
            return State {
                x: self.end.0,
                y: self.end.1,
                heading_deg: 0.0,
                speed: 0.0,
            };
        };
        if t_us < first.start_us {
            return State {
                x: first.from.0,
                y: first.from.1,
                heading_deg: first.heading_deg,
                speed: 0.0,
            };
        }
        let idx = self.segments.partition_point(|s| s.end_us <= t_us);
        match self.segments.get(idx) {
            Some(s) => {
                let (dx, dy) = heading_direction(s.heading_deg);
                let d = s.speed * (t_us - s.start_us) as f64 / 1e6;
                State {
                    x: s.from.0 + dx * d,
                    y: s.from.1 + dy * d,
                    heading_deg: s.heading_deg,
                    speed: s.speed,
                }
            }
            None => State {
                x: self.end.0,
                y: self.end.1,
                heading_deg: self.segments.last().expect("non-empty").heading_deg,
                speed: 0.0,
            },
        }
    }

    /// Samples every `step_us` plus every corner, up to `until_us`.
    pub fn sample(&self, step_us: i64, until_us: i64) -> Vec<(i64, f64, f64)> {
        let mut times: Vec<i64> = (0..)
            .map(|k| self.start_us() + k * step_us)
            .take_while(|t| *t <= until_us)
            .collect();
        times.extend(
            self.segments
                .iter()
                .map(|s| s.end_us)
                .filter(|t| *t <= until_us),
        );
        times.sort_unstable();
        times.dedup();
        times
            .into_iter()
            .map(|t| {
                let s = self.state(t);
                (t, s.x, s.y)
            })
            .collect()
    }
}

/// Starting point placing the first X and Y legs centred in the area, at
/// its bottom right corner.
pub fn start_position(cfg: &ScenarioConfig) -> (f64, f64) {
    let leg_x = cfg.speed_mps * 100.0 * cfg.leg_x_ms as f64 / 1000.0;
    let leg_y = cfg.speed_mps * 100.0 * cfg.leg_y_ms as f64 / 1000.0;
    let margin_x = ((cfg.area_width_cm - leg_x) / 2.0).max(0.0);
    let margin_y = ((cfg.area_height_cm - leg_y) / 2.0).max(0.0);
    (cfg.area_width_cm - margin_x, margin_y)
}

/// Where the robot really goes.
pub fn ground_truth(cfg: &ScenarioConfig) -> Trajectory {
    Trajectory::roll(
        &generate_input_program(cfg),
        start_position(cfg),
        cfg.speed_mps,
        0,
    )
}
