use crate::error::{Error, Result};

/// An instantaneous change applied during a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Action {
    /// Negate every memory-atom detuning.
    CribFlip,
    /// Retune processing node `node` (0-based).
    SetNodeDetuning { node: usize, detuning: f64 },
    /// Switch off the waveguide coupling `gamma1`.
    DecoupleWaveguide,
    /// Set the collective coupling of processing node `node` (0-based).
    CoupleNode { node: usize, omega: f64 },
    /// Negate all detunings and the cavity field.
    Reversal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub action: Action,
}

/// Events with strictly increasing times.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Schedule {
    events: Vec<Event>,
}

impl Schedule {
    pub fn new(events: Vec<Event>) -> Result<Self> {
        if let Some(w) = events.windows(2).find(|w| !(w[1].time > w[0].time)) {
            return Err(Error::Schedule(format!(
                "event times must increase strictly: {} then {}",
                w[0].time, w[1].time
            )));
        }
        if events.iter().any(|e| !e.time.is_finite()) {
            return Err(Error::Schedule("event times must be finite".into()));
        }
        Ok(Self { events })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// A single detuning flip at `tau`.
    pub fn crib_at(tau: f64) -> Self {
        Self {
            events: vec![Event {
                time: tau,
                action: Action::CribFlip,
            }],
        }
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }
}
