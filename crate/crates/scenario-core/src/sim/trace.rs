//! World states, traces, interpolation, and CSV export.

use std::collections::BTreeMap;
use std::io;

use super::SimError;

/// One actor's simulated state in the scenario frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ActorState {
    /// Longitudinal position, m.
    pub x: f64,
    /// Lateral/crossing position, m.
    pub y: f64,
    /// Speed, m/s.
    pub v: f64,
    /// Acceleration, m/s².
    pub a: f64,
}

/// Snapshot of the whole simulation at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub t: f64,
    pub actors: BTreeMap<String, ActorState>,
    /// Event-fired flags, per event uid.
    pub fired: BTreeMap<String, bool>,
}

impl WorldState {
    pub fn empty(t: f64) -> Self {
        Self { t, actors: BTreeMap::new(), fired: BTreeMap::new() }
    }

    pub fn actor(&self, uid: &str) -> Option<&ActorState> {
        self.actors.get(uid)
    }
}

/// One event firing.
#[derive(Debug, Clone, PartialEq)]
pub struct EventFire {
    pub uid: String,
    pub t: f64,
}

/// Time-ordered record of one simulation run: samples at step boundaries
/// plus exact event instants, the per-event fire times, and the outcome (the
/// end-event disjuncts true at the final instant).
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    /// Actor uids in scenario document order; fixes CSV row order.
    pub actor_order: Vec<String>,
    pub samples: Vec<WorldState>,
    pub events: Vec<EventFire>,
    pub outcome: Vec<String>,
}

impl Trace {
    /// First and last sample times.
    pub fn span(&self) -> Option<(f64, f64)> {
        Some((self.samples.first()?.t, self.samples.last()?.t))
    }

    pub fn fire_time(&self, event_uid: &str) -> Option<f64> {
        self.events.iter().find(|e| e.uid == event_uid).map(|e| e.t)
    }

    /// State at `t`: exact at sample instants, linearly interpolated between
    /// adjacent samples. Event flags come from the sample at or before `t`.
    pub fn state_at(&self, t: f64) -> Result<WorldState, SimError> {
        let (lo, hi) = self.span().ok_or(SimError::OutOfRange { t, lo: 0.0, hi: 0.0 })?;
        if t < lo || t > hi {
            return Err(SimError::OutOfRange { t, lo, hi });
        }
        // Samples are non-decreasing in t; find the bracketing pair.
        let idx = self.samples.partition_point(|s| s.t < t);
        if idx < self.samples.len() && self.samples[idx].t == t {
            return Ok(self.samples[idx].clone());
        }
        let after = &self.samples[idx];
        let before = &self.samples[idx - 1];
        let span = after.t - before.t;
        let alpha = if span > 0.0 { (t - before.t) / span } else { 0.0 };
        let mut actors = BTreeMap::new();
        for (uid, b) in &before.actors {
            let a = &after.actors[uid];
            actors.insert(
                uid.clone(),
                ActorState {
                    x: b.x + alpha * (a.x - b.x),
                    y: b.y + alpha * (a.y - b.y),
                    v: b.v + alpha * (a.v - b.v),
                    a: b.a + alpha * (a.a - b.a),
                },
            );
        }
        Ok(WorldState { t, actors, fired: before.fired.clone() })
    }

    /// Writes the trace as CSV: header `t,actor_uid,x,y,v,a`, one row per
    /// actor per sample, time-major, actors in scenario order.
    pub fn write_csv<W: io::Write>(&self, writer: W) -> Result<(), SimError> {
        let mut csv = csv::Writer::from_writer(writer);
        csv.write_record(["t", "actor_uid", "x", "y", "v", "a"])
            .map_err(|e| SimError::Io(e.to_string()))?;
        for sample in &self.samples {
            for uid in &self.actor_order {
                let state = &sample.actors[uid];
                csv.write_record([
                    sample.t.to_string(),
                    uid.clone(),
                    state.x.to_string(),
                    state.y.to_string(),
                    state.v.to_string(),
                    state.a.to_string(),
                ])
                .map_err(|e| SimError::Io(e.to_string()))?;
            }
        }
        csv.flush().map_err(|e| SimError::Io(e.to_string()))
    }

    /// Writes the event log as CSV: header `event_uid,t`, in fire order.
    pub fn write_events_csv<W: io::Write>(&self, writer: W) -> Result<(), SimError> {
        let mut csv = csv::Writer::from_writer(writer);
        csv.write_record(["event_uid", "t"])
            .map_err(|e| SimError::Io(e.to_string()))?;
        for fire in &self.events {
            csv.write_record([fire.uid.clone(), fire.t.to_string()])
                .map_err(|e| SimError::Io(e.to_string()))?;
        }
        csv.flush().map_err(|e| SimError::Io(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(t: f64, x: f64, v: f64) -> WorldState {
        let mut actors = BTreeMap::new();
        actors.insert("ego".to_owned(), ActorState { x, y: 0.0, v, a: 0.0 });
        let mut fired = BTreeMap::new();
        fired.insert("start".to_owned(), true);
        WorldState { t, actors, fired }
    }

    fn trace() -> Trace {
        Trace {
            actor_order: vec!["ego".to_owned()],
            samples: vec![sample(0.0, 0.0, 8.0), sample(1.0, 8.0, 8.0), sample(2.0, 16.0, 8.0)],
            events: vec![EventFire { uid: "start".into(), t: 0.0 }],
            outcome: vec![],
        }
    }

    #[test]
    fn state_at_is_exact_on_samples_and_interpolates_between() {
        let tr = trace();
        assert_eq!(tr.state_at(1.0).unwrap(), tr.samples[1]);
        let mid = tr.state_at(0.5).unwrap();
        assert_eq!(mid.actors["ego"].x, 4.0);
        assert!(matches!(tr.state_at(-0.1), Err(SimError::OutOfRange { .. })));
        assert!(matches!(tr.state_at(2.1), Err(SimError::OutOfRange { .. })));
    }

    #[test]
    fn csv_export_is_time_major() {
        let tr = trace();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,actor_uid,x,y,v,a");
        assert_eq!(lines[1], "0,ego,0,0,8,0");
        assert_eq!(lines[2], "1,ego,8,0,8,0");

        let mut buf = Vec::new();
        tr.write_events_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "event_uid,t");
        assert_eq!(text.lines().nth(1).unwrap(), "start,0");
    }
}
