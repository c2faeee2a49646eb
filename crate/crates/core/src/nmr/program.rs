use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{param, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum PulseEvent {
    /// Free evolution under the scalar coupling.
    Delay { duration: f64 },
    /// Simultaneous rotation `R_phase(angle)` of every target spin (1-based).
    /// `ideal` pulses take no time even in finite-width simulation.
    Rf { targets: Vec<usize>, phase: f64, angle: f64, ideal: bool },
}

impl PulseEvent {
    pub fn delay(duration: f64) -> Result<Self> {
        if !(duration.is_finite() && duration >= 0.0) {
            return Err(param(format!("delay {duration} must be finite and non-negative")));
        }
        Ok(Self::Delay { duration })
    }

    pub fn rf(targets: &[usize], phase: f64, angle: f64) -> Result<Self> {
        Self::rf_with(targets, phase, angle, false)
    }

    pub fn rf_with(targets: &[usize], phase: f64, angle: f64, ideal: bool) -> Result<Self> {
        if targets.is_empty() {
            return Err(param("RF event needs at least one target spin"));
        }
        if targets.contains(&0) {
            return Err(param("spin indices are 1-based"));
        }
        if !(phase.is_finite() && angle.is_finite()) {
            return Err(param("RF phase and angle must be finite"));
        }
        if !(angle > -2.0 * PI && angle <= 2.0 * PI) {
            return Err(param(format!("RF angle {angle} outside (-2pi, 2pi]")));
        }
        let mut t = targets.to_vec();
        t.sort_unstable();
        t.dedup();
        Ok(Self::Rf { targets: t, phase, angle, ideal })
    }

    /// Physical duration given the pi-pulse length.
    pub fn duration(&self, t_pi: f64) -> f64 {
        match self {
            PulseEvent::Delay { duration } => *duration,
            PulseEvent::Rf { ideal: true, .. } => 0.0,
            PulseEvent::Rf { angle, .. } => t_pi * angle.abs() / PI,
        }
    }

    pub fn is_delay(&self) -> bool {
        matches!(self, PulseEvent::Delay { .. })
    }
}

/// An ordered pulse sequence compiled for a machine with pi-pulse length `t_pi`.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseProgram {
    events: Vec<PulseEvent>,
    t_pi: f64,
    warnings: Vec<String>,
}

impl PulseProgram {
    pub fn new(events: Vec<PulseEvent>, t_pi: f64) -> Self {
        Self { events, t_pi, warnings: Vec::new() }
    }

    pub fn empty(t_pi: f64) -> Self {
        Self::new(Vec::new(), t_pi)
    }

    pub fn events(&self) -> &[PulseEvent] {
        &self.events
    }

    pub(crate) fn events_mut(&mut self) -> &mut Vec<PulseEvent> {
        &mut self.events
    }

    pub fn t_pi(&self) -> f64 {
        self.t_pi
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub(crate) fn warn(&mut self, msg: String) {
        self.warnings.push(msg);
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn push(&mut self, event: PulseEvent) {
        self.events.push(event);
    }

    pub fn extend(&mut self, other: PulseProgram) {
        self.events.extend(other.events);
        self.warnings.extend(other.warnings);
    }

    /// Sum of delays plus pulse durations.
    pub fn wall_time(&self) -> f64 {
        self.wall_time_with(self.t_pi)
    }

    pub fn wall_time_with(&self, t_pi: f64) -> f64 {
        self.events.iter().map(|e| e.duration(t_pi)).sum()
    }

    pub fn total_delay(&self) -> f64 {
        self.events
            .iter()
            .filter_map(|e| match e {
                PulseEvent::Delay { duration } => Some(*duration),
                _ => None,
            })
            .sum()
    }

    pub fn rf_count(&self) -> usize {
        self.events.iter().filter(|e| !e.is_delay()).count()
    }

    /// Line-oriented text form, closed by a `WALL` record.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            match e {
                PulseEvent::Delay { duration } => {
                    let _ = writeln!(out, "DELAY {duration}");
                }
                PulseEvent::Rf { targets, phase, angle, ideal } => {
                    let spins: Vec<String> = targets.iter().map(|t| t.to_string()).collect();
                    let _ = write!(out, "RF {} {phase} {angle}", spins.join(","));
                    if *ideal {
                        out.push_str(" ideal");
                    }
                    out.push('\n');
                }
            }
        }
        let _ = writeln!(out, "WALL {}", self.wall_time());
        out
    }

    /// Parses [`to_text`](Self::to_text) output. Durations of RF events are
    /// derived from `t_pi`; the recomputed wall time must match the `WALL`
    /// record to 1e-9 s.
    pub fn parse(text: &str, t_pi: f64) -> Result<Self> {
        let perr = |line: usize, msg: String| Error::Parse { line, msg };
        let mut events = Vec::new();
        let mut wall: Option<(usize, f64)> = None;
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if wall.is_some() {
                return Err(perr(lineno, "content after WALL record".into()));
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let num = |s: &str| -> Result<f64> {
                s.parse::<f64>().map_err(|_| perr(lineno, format!("invalid number `{s}`")))
            };
            match fields.as_slice() {
                ["DELAY", d] => events.push(
                    PulseEvent::delay(num(d)?).map_err(|e| perr(lineno, e.to_string()))?,
                ),
                ["RF", spins, phase, angle, rest @ ..] => {
                    let ideal = match rest {
                        [] => false,
                        ["ideal"] => true,
                        _ => return Err(perr(lineno, format!("unexpected trailing fields in `{line}`"))),
                    };
                    let targets = spins
                        .split(',')
                        .map(|s| {
                            s.parse::<usize>()
                                .map_err(|_| perr(lineno, format!("invalid spin index `{s}`")))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    events.push(
                        PulseEvent::rf_with(&targets, num(phase)?, num(angle)?, ideal)
                            .map_err(|e| perr(lineno, e.to_string()))?,
                    );
                }
                ["WALL", w] => wall = Some((lineno, num(w)?)),
                _ => return Err(perr(lineno, format!("unrecognized record `{line}`"))),
            }
        }
        let program = Self::new(events, t_pi);
        let (lineno, recorded) =
            wall.ok_or_else(|| perr(text.lines().count().max(1), "missing WALL record".into()))?;
        let actual = program.wall_time();
        if (actual - recorded).abs() > 1e-9 {
            return Err(perr(
                lineno,
                format!("WALL {recorded} does not match recomputed wall time {actual}"),
            ));
        }
        Ok(program)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn wall_time_adds_pulse_durations() {
        let t_pi = 20e-6;
        let p = PulseProgram::new(
            vec![
                PulseEvent::rf(&[1], 0.0, FRAC_PI_2).unwrap(),
                PulseEvent::delay(1e-3).unwrap(),
                PulseEvent::delay(0.5e-3).unwrap(),
                PulseEvent::rf(&[1], 0.0, FRAC_PI_2).unwrap(),
            ],
            t_pi,
        );
        assert!((p.wall_time() - 1.52e-3).abs() < 1e-12);
    }

    #[test]
    fn event_validation() {
        assert!(PulseEvent::delay(-1.0).is_err());
        assert!(PulseEvent::rf(&[], 0.0, 1.0).is_err());
        assert!(PulseEvent::rf(&[1], 0.0, -2.0 * PI).is_err());
        assert!(PulseEvent::rf(&[1], 0.0, 2.0 * PI).is_ok());
        assert_eq!(PulseEvent::rf_with(&[2], 0.0, PI, true).unwrap().duration(1.0), 0.0);
    }

    #[test]
    fn text_round_trip() {
        let mut p = PulseProgram::empty(2e-5);
        p.push(PulseEvent::rf(&[3, 1, 2], -FRAC_PI_2, FRAC_PI_2).unwrap());
        p.push(PulseEvent::delay(1.25e-4).unwrap());
        p.push(PulseEvent::rf_with(&[3], PI, PI, true).unwrap());
        let text = p.to_text();
        assert!(text.starts_with("RF 1,2,3 "));
        assert!(text.trim_end().ends_with(&format!("WALL {}", p.wall_time())));
        let back = PulseProgram::parse(&text, 2e-5).unwrap();
        assert_eq!(back.events(), p.events());
    }

    #[test]
    fn parse_rejects_wall_mismatch() {
        let text = "DELAY 0.001\nWALL 0.002\n";
        assert!(matches!(PulseProgram::parse(text, 2e-5), Err(Error::Parse { line: 2, .. })));
        assert!(PulseProgram::parse("DELAY 0.001\n", 2e-5).is_err());
        assert!(PulseProgram::parse("PULSE 1\nWALL 0\n", 2e-5).is_err());
        // wall time depends on t_pi
        let text = "RF 1 0 3.141592653589793\nWALL 0.00002\n";
        assert!(PulseProgram::parse(text, 2e-5).is_ok());
        assert!(PulseProgram::parse(text, 1e-5).is_err());
    }
}
