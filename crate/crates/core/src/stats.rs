use serde::{Deserialize, Serialize};

/// Communication and privacy bookkeeping for one protocol run.
///
/// Bit counts are summed from serialized report sizes and are exact.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TranscriptStats {
    pub bits_total: u64,
    pub bits_per_client_mean: f64,
    pub messages_total: u64,
    pub clients: u64,
    pub accounted_eps: f64,
    pub accounted_delta: f64,
}

impl TranscriptStats {
    pub fn new(clients: usize) -> Self {
        Self {
            clients: clients as u64,
            ..Self::default()
        }
    }

    /// Record one client message of `bits` payload bits.
    pub fn record(&mut self, bits: u64) {
        self.bits_total += bits;
        self.messages_total += 1;
        self.refresh();
    }

    pub fn with_budget(mut self, eps: f64, delta: f64) -> Self {
        self.accounted_eps = eps;
        self.accounted_delta = delta;
        self
    }

    /// Accumulate counters from another run over the same client population size.
    pub fn absorb(&mut self, other: &TranscriptStats) {
        self.bits_total += other.bits_total;
        self.messages_total += other.messages_total;
        self.clients += other.clients;
        self.refresh();
    }

    fn refresh(&mut self) {
        self.bits_per_client_mean = if self.clients == 0 {
            0.0
        } else {
            self.bits_total as f64 / self.clients as f64
        };
    }
}
