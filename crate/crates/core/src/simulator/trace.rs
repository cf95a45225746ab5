use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::fchdl::NetName;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StimulusEvent {
    pub t: f64,
    pub net: NetName,
    pub v: u8,
}

/// Time-ordered input waveform. JSON form: `[{"t":0,"net":"A","v":1}]`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Stimulus {
    pub events: Vec<StimulusEvent>,
}

impl Stimulus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn at(mut self, t: f64, net: &str, v: u8) -> Self {
        self.events.push(StimulusEvent {
            t,
            net: NetName::new(net),
            v,
        });
        self
    }

    /// Events in time order; ties keep their listed order.
    pub fn sorted_events(&self) -> Vec<StimulusEvent> {
        let mut events = self.events.clone();
        events.sort_by(|a, b| a.t.total_cmp(&b.t));
        events
    }

    /// Square wave on `net` with rising edges every `1/hz` seconds,
    /// 50% duty, from `start` until `end`.
    pub fn square_wave(mut self, net: &str, hz: f64, start: f64, end: f64) -> Self {
        let period = 1.0 / hz;
        let mut k = 0u32;
        loop {
            let rise = start + k as f64 * period;
            if rise >= end {
                break;
            }
            self = self.at(rise, net, 1).at(rise + period / 2.0, net, 0);
            k += 1;
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub values: BTreeMap<NetName, u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangeEvent {
    pub t: f64,
    pub net: NetName,
    pub old: u8,
    pub new: u8,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub samples: Vec<Sample>,
    pub events: Vec<ChangeEvent>,
}

impl Trace {
    /// Value of `net` at the last sample taken at or before `t`.
    pub fn value_at(&self, net: &str, t: f64) -> Option<u8> {
        self.samples
            .iter()
            .take_while(|s| s.t <= t + super::TIME_EPS)
            .last()
            .and_then(|s| s.values.get(net).copied())
    }

    /// Times at which `net` went from 0 to 1.
    pub fn rising_edges(&self, net: &str) -> Vec<f64> {
        self.events
            .iter()
            .filter(|e| e.net.as_str() == net && e.new == 1)
            .map(|e| e.t)
            .collect()
    }

    /// Times at which `net` went from 1 to 0.
    pub fn falling_edges(&self, net: &str) -> Vec<f64> {
        self.events
            .iter()
            .filter(|e| e.net.as_str() == net && e.new == 0)
            .map(|e| e.t)
            .collect()
    }

    /// Total time `net` spent high, measured sample to sample.
    pub fn high_duration(&self, net: &str) -> f64 {
        self.samples
            .windows(2)
            .filter(|w| w[0].values.get(net) == Some(&1))
            .map(|w| w[1].t - w[0].t)
            .sum()
    }
}
