//! Analytic compute-time, CPU-energy, and communication cost models, plus
//! the ledger that tracks them alongside a run.
//!
//! Per local iteration on a station: time is
//! `cycles_per_bit * shard_bits / cpu_freq`, energy is
//! `0.5 * capacitance * cycles_per_bit * shard_bits * cpu_freq^2`.
//! Communication per round counts one model transfer per participant
//! uplink plus one per roster station downlink, at `bytes_per_param`
//! (default 4) per parameter; a megabyte is 10^6 bytes unless configured
//! otherwise. Energy and time in the ledger are derived from integer
//! iteration counts on demand, so totals agree with the closed forms
//! exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceProfile {
    /// CPU cycles needed per bit of local data.
    pub cycles_per_bit: f64,
    /// CPU frequency in Hz.
    pub cpu_freq_hz: f64,
    /// Effective capacitance coefficient of the computing chip; the energy
    /// term carries the conventional 0.5 factor.
    pub capacitance_coeff: f64,
    /// Size of the station's local dataset in bits.
    pub shard_bits: f64,
}

impl DeviceProfile {
    pub fn new(
        cycles_per_bit: f64,
        cpu_freq_hz: f64,
        capacitance_coeff: f64,
        shard_bits: f64,
    ) -> Result<Self> {
        if !(cycles_per_bit > 0.0 && cpu_freq_hz > 0.0 && capacitance_coeff > 0.0) {
            return Err(Error::config(
                "device profile fields must be strictly positive",
            ));
        }
        if shard_bits < 0.0 {
            return Err(Error::config("shard_bits must be non-negative"));
        }
        Ok(Self {
            cycles_per_bit,
            cpu_freq_hz,
            capacitance_coeff,
            shard_bits,
        })
    }

    /// Seconds for one local iteration.
    pub fn local_iteration_time(&self) -> f64 {
        self.cycles_per_bit * self.shard_bits / self.cpu_freq_hz
    }

    /// Joules for one local iteration.
    pub fn iteration_energy(&self) -> f64 {
        0.5 * self.capacitance_coeff
            * self.cycles_per_bit
            * self.shard_bits
            * self.cpu_freq_hz
            * self.cpu_freq_hz
    }

    /// Joules for `iterations` local iterations.
    pub fn total_energy(&self, iterations: u64) -> f64 {
        iterations as f64 * self.iteration_energy()
    }
}

/// Documented convention for a shard's bit length: 32 bits per feature
/// and 32 per label (main plus each auxiliary).
pub fn shard_bits(samples: usize, feature_len: usize, labels_per_sample: usize) -> f64 {
    (samples as u64 * 32 * (feature_len as u64 + labels_per_sample as u64)) as f64
}

/// One communication round: which stations uploaded, how many were
/// broadcast to, and the exchanged model's parameter count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundComm {
    pub round: usize,
    pub participants: Vec<usize>,
    pub roster: usize,
    pub model_params: usize,
}

impl RoundComm {
    /// Model transfers this round: participant uplinks plus roster
    /// downlinks.
    pub fn transfers(&self) -> u64 {
        (self.participants.len() + self.roster) as u64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationCost {
    pub id: usize,
    pub profile: DeviceProfile,
    /// SGD steps one round of participation costs this station.
    pub iterations_per_round: u64,
    pub rounds_participated: u64,
}

impl StationCost {
    pub fn iterations(&self) -> u64 {
        self.iterations_per_round * self.rounds_participated
    }

    pub fn energy_j(&self) -> f64 {
        self.profile.total_energy(self.iterations())
    }

    pub fn modeled_s(&self) -> f64 {
        self.iterations() as f64 * self.profile.local_iteration_time()
    }
}

/// Cumulative cost state for one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostLedger {
    pub bytes_per_param: u64,
    pub mb_definition: u64,
    pub stations: Vec<StationCost>,
    pub rounds: Vec<RoundComm>,
}

impl CostLedger {
    pub fn new(bytes_per_param: u64, mb_definition: u64) -> Self {
        Self {
            bytes_per_param,
            mb_definition,
            stations: Vec::new(),
            rounds: Vec::new(),
        }
    }

    pub fn register_station(
        &mut self,
        id: usize,
        profile: DeviceProfile,
        iterations_per_round: u64,
    ) {
        self.stations.push(StationCost {
            id,
            profile,
            iterations_per_round,
            rounds_participated: 0,
        });
    }

    /// Records one completed round: broadcast to `roster` stations and
    /// uplinks from `participants`.
    pub fn log_round(
        &mut self,
        round: usize,
        participants: Vec<usize>,
        roster: usize,
        model_params: usize,
    ) {
        for u in &participants {
            self.stations[*u].rounds_participated += 1;
        }
        self.rounds.push(RoundComm {
            round,
            participants,
            roster,
            model_params,
        });
    }

    /// Exact cumulative communication volume in bytes.
    pub fn comm_bytes(&self) -> u64 {
        self.rounds
            .iter()
            .map(|r| r.transfers() * r.model_params as u64 * self.bytes_per_param)
            .sum()
    }

    pub fn comm_mb(&self) -> f64 {
        comm_cost(&self.rounds, self.bytes_per_param, self.mb_definition)
    }

    /// Sum of all stations' modeled CPU energy.
    pub fn total_energy_j(&self) -> f64 {
        self.stations.iter().map(|s| s.energy_j()).sum()
    }

    /// Modeled elapsed compute time under synchronous rounds: each round
    /// costs the slowest participant's iteration block.
    pub fn modeled_elapsed_s(&self) -> f64 {
        self.rounds.iter().map(|r| self.round_time_s(r)).sum()
    }

    fn round_time_s(&self, round: &RoundComm) -> f64 {
        round
            .participants
            .iter()
            .map(|u| {
                let s = &self.stations[*u];
                s.iterations_per_round as f64 * s.profile.local_iteration_time()
            })
            .fold(0.0, f64::max)
    }

    fn round_energy_j(&self, round: &RoundComm) -> f64 {
        round
            .participants
            .iter()
            .map(|u| {
                let s = &self.stations[*u];
                s.profile.total_energy(s.iterations_per_round)
            })
            .sum()
    }

    /// Per-round cumulative (comm bytes, energy J, modeled seconds) rows.
    pub fn cumulative_rows(&self) -> Vec<(usize, u64, f64, f64)> {
        let mut bytes = 0u64;
        let mut energy = 0.0;
        let mut time = 0.0;
        self.rounds
            .iter()
            .map(|r| {
                bytes += r.transfers() * r.model_params as u64 * self.bytes_per_param;
                energy += self.round_energy_j(r);
                time += self.round_time_s(r);
                (r.round, bytes, energy, time)
            })
            .collect()
    }

    /// Communication megabytes over rounds `1..=through_round`.
    pub fn comm_mb_through(&self, through_round: usize) -> f64 {
        let slice: Vec<RoundComm> = self
            .rounds
            .iter()
            .filter(|r| r.round <= through_round)
            .cloned()
            .collect();
        comm_cost(&slice, self.bytes_per_param, self.mb_definition)
    }

    /// Total station energy over rounds `1..=through_round`.
    pub fn energy_j_through(&self, through_round: usize) -> f64 {
        self.rounds
            .iter()
            .filter(|r| r.round <= through_round)
            .map(|r| self.round_energy_j(r))
            .sum()
    }
}

/// Total communication cost of a round log, in megabytes.
pub fn comm_cost(rounds: &[RoundComm], bytes_per_param: u64, mb_definition: u64) -> f64 {
    let bytes: u64 = rounds
        .iter()
        .map(|r| r.transfers() * r.model_params as u64 * bytes_per_param)
        .sum();
    bytes as f64 / mb_definition as f64
}

/// First round (1-based) whose accuracy reaches `kappa`, scanning the raw
/// per-round series.
pub fn rounds_to_target(accuracy_by_round: &[f64], kappa: f64) -> Option<usize> {
    accuracy_by_round
        .iter()
        .position(|a| *a >= kappa)
        .map(|i| i + 1)
}

/// Rounds-to-target and the communication megabytes spent getting there,
/// or `None` if the target is never reached within the logged rounds.
pub fn comm_cost_to_accuracy(
    accuracy_by_round: &[f64],
    ledger: &CostLedger,
    kappa: f64,
) -> Option<(usize, f64)> {
    let hit = rounds_to_target(accuracy_by_round, kappa)?;
    Some((hit, ledger.comm_mb_through(hit)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_profile() -> DeviceProfile {
        DeviceProfile::new(40.0, 2.0e9, 2.0e-28, 1.0e6).unwrap()
    }

    #[test]
    fn iteration_time_reference_value() {
        assert_eq!(reference_profile().local_iteration_time(), 0.02);
    }

    #[test]
    fn iteration_time_empty_workload() {
        let p = DeviceProfile::new(40.0, 2.0e9, 2.0e-28, 0.0).unwrap();
        assert_eq!(p.local_iteration_time(), 0.0);
        assert_eq!(p.iteration_energy(), 0.0);
    }

    #[test]
    fn doubling_frequency_halves_time_quadruples_energy() {
        let p = reference_profile();
        let fast = DeviceProfile::new(
            p.cycles_per_bit,
            2.0 * p.cpu_freq_hz,
            p.capacitance_coeff,
            p.shard_bits,
        )
        .unwrap();
        assert_eq!(fast.local_iteration_time(), p.local_iteration_time() / 2.0);
        assert_eq!(fast.iteration_energy(), 4.0 * p.iteration_energy());
    }

    #[test]
    fn linear_scaling_in_bits_and_cycles() {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-15 * b.abs();
        let p = reference_profile();
        let big = DeviceProfile::new(
            p.cycles_per_bit,
            p.cpu_freq_hz,
            p.capacitance_coeff,
            3.0 * p.shard_bits,
        )
        .unwrap();
        assert!(close(
            big.local_iteration_time(),
            3.0 * p.local_iteration_time()
        ));
        assert!(close(big.iteration_energy(), 3.0 * p.iteration_energy()));
        let busy = DeviceProfile::new(
            5.0 * p.cycles_per_bit,
            p.cpu_freq_hz,
            p.capacitance_coeff,
            p.shard_bits,
        )
        .unwrap();
        assert!(close(
            busy.local_iteration_time(),
            5.0 * p.local_iteration_time()
        ));
        assert!(close(busy.iteration_energy(), 5.0 * p.iteration_energy()));
    }

    #[test]
    fn iteration_energy_reference_value() {
        assert!((reference_profile().iteration_energy() - 0.016).abs() < 1e-15);
    }

    #[test]
    fn total_energy_reference_values() {
        let p = reference_profile();
        assert!((p.total_energy(100) - 1.6).abs() < 1e-12);
        assert_eq!(p.total_energy(0), 0.0);
        assert_eq!(p.total_energy(1), p.iteration_energy());
    }

    #[test]
    fn comm_cost_small_case() {
        let rounds = vec![RoundComm {
            round: 1,
            participants: vec![0, 1],
            roster: 2,
            model_params: 10,
        }];
        let mb = comm_cost(&rounds, 4, 1_000_000);
        assert_eq!(mb, 160.0 / 1.0e6);
    }

    #[test]
    fn comm_cost_full_roster_reference_value() {
        let rounds = vec![RoundComm {
            round: 1,
            participants: (0..6).collect(),
            roster: 6,
            model_params: 257_358,
        }];
        assert_eq!(comm_cost(&rounds, 4, 1_000_000), 12.353184);
    }

    #[test]
    fn comm_cost_empty_log_is_zero() {
        assert_eq!(comm_cost(&[], 4, 1_000_000), 0.0);
    }

    #[test]
    fn broadcast_only_round_still_counts_roster_downlinks() {
        let mut ledger = CostLedger::new(4, 1_000_000);
        ledger.log_round(1, vec![], 6, 100);
        assert_eq!(ledger.comm_bytes(), 6 * 100 * 4);
    }

    #[test]
    fn ledger_matches_closed_form() {
        let mut ledger = CostLedger::new(4, 1_000_000);
        let p = reference_profile();
        ledger.register_station(0, p, 28);
        ledger.register_station(1, p, 14);
        ledger.log_round(1, vec![0, 1], 2, 500);
        ledger.log_round(2, vec![0], 2, 500);
        assert_eq!(ledger.comm_bytes(), (4 + 3) * 500 * 4);
        assert_eq!(ledger.comm_mb(), comm_cost(&ledger.rounds, 4, 1_000_000));
        // station 0: 2 rounds * 28 iters, station 1: 1 round * 14 iters
        assert_eq!(ledger.stations[0].iterations(), 56);
        assert_eq!(ledger.stations[1].iterations(), 14);
        assert_eq!(
            ledger.total_energy_j(),
            p.total_energy(56) + p.total_energy(14)
        );
        let rows = ledger.cumulative_rows();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1].1, ledger.comm_bytes());
        assert!((rows[1].2 - ledger.total_energy_j()).abs() < 1e-12);
    }

    #[test]
    fn first_crossing_examples() {
        assert_eq!(rounds_to_target(&[0.5, 0.7, 0.82, 0.85], 0.8), Some(3));
        assert_eq!(rounds_to_target(&[0.5, 0.7], 0.4), Some(1));
        assert_eq!(rounds_to_target(&[0.5, 0.7, 0.82, 0.85], 0.99), None);
    }

    #[test]
    fn cost_to_accuracy_first_crossing() {
        let mut ledger = CostLedger::new(4, 1_000_000);
        ledger.register_station(0, reference_profile(), 10);
        ledger.register_station(1, reference_profile(), 10);
        for round in 1..=4 {
            ledger.log_round(round, vec![0, 1], 2, 1000);
        }
        let (rounds, mb) = comm_cost_to_accuracy(&[0.5, 0.7, 0.82, 0.85], &ledger, 0.8).unwrap();
        assert_eq!(rounds, 3);
        assert_eq!(mb, 3.0 * 4.0 * 1000.0 * 4.0 / 1.0e6);
        assert!(comm_cost_to_accuracy(&[0.5], &ledger, 0.99).is_none());
    }

    #[test]
    fn first_crossing_monotone_in_target() {
        let series = [0.2, 0.4, 0.4, 0.6, 0.75, 0.8, 0.85];
        let mut last = 0;
        for kappa in [0.1, 0.3, 0.5, 0.7, 0.8] {
            let r = rounds_to_target(&series, kappa).unwrap();
            assert!(r >= last);
            last = r;
        }
    }

    #[test]
    fn shard_bits_convention() {
        // 10 samples, 24 features, 3 labels -> 10 * 32 * 27
        assert_eq!(shard_bits(10, 24, 3), 8640.0);
    }

    #[test]
    fn invalid_profiles_rejected() {
        assert!(DeviceProfile::new(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(DeviceProfile::new(1.0, -1.0, 1.0, 1.0).is_err());
        assert!(DeviceProfile::new(1.0, 1.0, 1.0, -5.0).is_err());
    }
}
