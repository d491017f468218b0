//! Adapter that lets the trace engine drive a [`Simulation`] through
//! the ordinary [`Transport`] interface.

use crate::probing::{Transport, TransportError};

use super::sim::Simulation;

/// Owns a simulation and queues the responses it produces. Reusable
/// across traces: the simulation clock and counters carry over, which
/// is exactly what multi-round measurement campaigns need.
#[derive(Clone, Debug)]
pub struct SimTransport {
    sim: Simulation,
    /// (arrival, insertion sequence, packet) — sequence breaks ties.
    queue: Vec<(u64, u64, Vec<u8>)>,
    seq: u64,
}

impl SimTransport {
    pub fn new(sim: Simulation) -> SimTransport {
        SimTransport { sim, queue: Vec::new(), seq: 0 }
    }

    pub fn sim(&self) -> &Simulation {
        &self.sim
    }

    pub fn sim_mut(&mut self) -> &mut Simulation {
        &mut self.sim
    }
}

impl Transport for SimTransport {
    fn send(&mut self, octets: &[u8]) -> Result<u64, TransportError> {
        let reply = self.sim.inject(octets).map_err(|e| TransportError::Other(e.to_string()))?;
        let sent_at = self.sim.now_us();
        if let Some((packet, rtt_us)) = reply {
            self.queue.push((sent_at + rtt_us, self.seq, packet));
            self.seq += 1;
        }
        Ok(sent_at)
    }

    fn recv(&mut self, deadline_us: u64) -> Result<Option<(Vec<u8>, u64)>, TransportError> {
        let next = self
            .queue
            .iter()
            .enumerate()
            .filter(|(_, (arrival, _, _))| *arrival <= deadline_us)
            .min_by_key(|(_, (arrival, seq, _))| (*arrival, *seq))
            .map(|(i, _)| i);
        match next {
            Some(i) => {
                let (arrival, _, packet) = self.queue.remove(i);
                self.sim.advance_to(arrival);
                Ok(Some((packet, arrival)))
            }
            None => {
                self.sim.advance_to(deadline_us);
                Ok(None)
            }
        }
    }

    fn now_us(&self) -> u64 {
        self.sim.now_us()
    }

    fn sleep_us(&mut self, us: u64) {
        self.sim.sleep(us);
    }
}
