//! Pauli fault sampling for the three error scenarios: independent data
//! errors, phenomenological syndrome flips, and circuit-level depolarizing
//! noise with location-dependent rates.
//!
//! Faulty operations are modeled as perfect operations followed by a random
//! Pauli drawn uniformly from the non-identity one- or two-qubit Paulis.
//! Preparation faults flip the prepared state (X after |0⟩, Z after |+⟩) and
//! measurement faults flip the classical record only.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codes::CodeSpec;
use crate::pauli::{Pauli, PauliOperator};

#[derive(Debug, Error, PartialEq)]
pub enum NoiseError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Error rates for one experiment point.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NoiseParams {
    /// Per-operation error probability.
    pub p: f64,
    /// Syndrome flip probability for the phenomenological scenario.
    /// Usually set to p.
    pub q: f64,
    /// Rate multiplier for CNOTs touching an octagon ancilla; 3 models
    /// long-range octagon parity checks at triple the error rate.
    pub octagon_cnot_multiplier: f64,
}

impl NoiseParams {
    pub fn new(p: f64) -> Result<NoiseParams, NoiseError> {
        NoiseParams::with(p, p, 1.0)
    }

    pub fn with(p: f64, q: f64, octagon_cnot_multiplier: f64) -> Result<NoiseParams, NoiseError> {
        let params = NoiseParams {
            p,
            q,
            octagon_cnot_multiplier,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), NoiseError> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(NoiseError::InvalidParameter(format!(
                "p must lie in [0, 1], got {}",
                self.p
            )));
        }
        if !(0.0..=1.0).contains(&self.q) {
            return Err(NoiseError::InvalidParameter(format!(
                "q must lie in [0, 1], got {}",
                self.q
            )));
        }
        if self.octagon_cnot_multiplier < 0.0 {
            return Err(NoiseError::InvalidParameter(format!(
                "octagon CNOT multiplier must be non-negative, got {}",
                self.octagon_cnot_multiplier
            )));
        }
        if self.p * self.octagon_cnot_multiplier > 1.0 {
            return Err(NoiseError::InvalidParameter(format!(
                "effective octagon CNOT rate {} exceeds 1",
                self.p * self.octagon_cnot_multiplier
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultKind {
    Prep,
    Measure,
    Idle,
    OneQubitGate,
    TwoQubitGate,
}

/// One noisy operation slot in a schedule.
#[derive(Debug, Clone, Copy)]
pub struct FaultLocation {
    pub kind: FaultKind,
    pub qubits: [usize; 2],
    pub timestep: usize,
    pub touches_octagon_ancilla: bool,
}

impl FaultLocation {
    pub fn effective_rate(&self, params: &NoiseParams) -> f64 {
        if self.kind == FaultKind::TwoQubitGate && self.touches_octagon_ancilla {
            params.p * params.octagon_cnot_multiplier
        } else {
            params.p
        }
    }
}

/// What a sampled fault does, applied after the ideal operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultEffect {
    None,
    /// Uniform non-identity Pauli on the location's single qubit.
    OneQubit(Pauli),
    /// Uniform non-identity two-qubit Pauli on (first, second) qubit.
    TwoQubit(Pauli, Pauli),
    /// Flip of the freshly prepared state.
    PrepFlip,
    /// Classical flip of the measurement record.
    MeasureFlip,
}

const ONE_QUBIT_PAULIS: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

fn pauli_from_code(code: u8) -> Pauli {
    match code {
        0 => Pauli::I,
        1 => Pauli::X,
        2 => Pauli::Y,
        _ => Pauli::Z,
    }
}

/// Uniform draw from the 15 non-identity two-qubit Paulis.
pub fn sample_two_qubit_pauli<R: Rng>(rng: &mut R) -> (Pauli, Pauli) {
    let v = rng.random_range(1u8..16);
    (pauli_from_code(v & 3), pauli_from_code(v >> 2))
}

/// Uniform draw from {X, Y, Z}.
pub fn sample_one_qubit_pauli<R: Rng>(rng: &mut R) -> Pauli {
    ONE_QUBIT_PAULIS[rng.random_range(0..3)]
}

/// Samples the fault for one location: with the location's effective rate,
/// a uniform non-identity Pauli for gates and idles, a state flip for
/// preparations, a record flip for measurements.
pub fn sample_fault<R: Rng>(
    loc: &FaultLocation,
    params: &NoiseParams,
    rng: &mut R,
) -> Result<FaultEffect, NoiseError> {
    let rate = loc.effective_rate(params);
    if !(0.0..=1.0).contains(&rate) {
        return Err(NoiseError::InvalidParameter(format!(
            "effective rate {rate} outside [0, 1]"
        )));
    }
    Ok(sample_fault_unchecked(loc, rate, rng))
}

/// Hot-path sampler; rate validity is the caller's responsibility
/// (checked once per simulation, not once per operation).
#[inline]
pub fn sample_fault_unchecked<R: Rng>(
    loc: &FaultLocation,
    rate: f64,
    rng: &mut R,
) -> FaultEffect {
    if rate <= 0.0 || !rng.random_bool(rate) {
        return FaultEffect::None;
    }
    match loc.kind {
        FaultKind::Prep => FaultEffect::PrepFlip,
        FaultKind::Measure => FaultEffect::MeasureFlip,
        FaultKind::Idle | FaultKind::OneQubitGate => {
            FaultEffect::OneQubit(sample_one_qubit_pauli(rng))
        }
        FaultKind::TwoQubitGate => {
            let (a, b) = sample_two_qubit_pauli(rng);
            FaultEffect::TwoQubit(a, b)
        }
    }
}

/// Independent data errors: X applied with probability p and Z with
/// probability p on every qubit (Y with probability p²).
pub fn sample_data_errors<R: Rng>(spec: &CodeSpec, p: f64, rng: &mut R) -> PauliOperator {
    let mut error = PauliOperator::identity(spec.n);
    if p <= 0.0 {
        return error;
    }
    for q in 0..spec.n {
        if rng.random_bool(p) {
            error.flip_x(q);
        }
        if rng.random_bool(p) {
            error.flip_z(q);
        }
    }
    error
}

/// Symmetric bit-flip of a syndrome bit with probability q.
#[inline]
pub fn sample_syndrome_flip<R: Rng>(q: f64, rng: &mut R) -> bool {
    q > 0.0 && rng.random_bool(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::build_c4_toric;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_rate_is_identity() {
        let spec = build_c4_toric(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_data_errors(&spec, 0.0, &mut rng).is_identity());
        assert!(!sample_syndrome_flip(0.0, &mut rng));
        let loc = FaultLocation {
            kind: FaultKind::TwoQubitGate,
            qubits: [0, 1],
            timestep: 0,
            touches_octagon_ancilla: true,
        };
        let params = NoiseParams::with(0.0, 0.0, 3.0).unwrap();
        assert_eq!(sample_fault(&loc, &params, &mut rng).unwrap(), FaultEffect::None);
    }

    #[test]
    fn unit_rate_flips_everything() {
        let spec = build_c4_toric(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let error = sample_data_errors(&spec, 1.0, &mut rng);
        for q in 0..spec.n {
            assert_eq!(error.pauli_at(q), Pauli::Y);
        }
        assert!(sample_syndrome_flip(1.0, &mut rng));
    }

    #[test]
    fn octagon_multiplier_scales_rate() {
        let params = NoiseParams::with(0.0015, 0.0015, 3.0).unwrap();
        let octagon_cnot = FaultLocation {
            kind: FaultKind::TwoQubitGate,
            qubits: [0, 1],
            timestep: 0,
            touches_octagon_ancilla: true,
        };
        let plain_cnot = FaultLocation {
            touches_octagon_ancilla: false,
            ..octagon_cnot
        };
        assert!((octagon_cnot.effective_rate(&params) - 0.0045).abs() < 1e-15);
        assert!((plain_cnot.effective_rate(&params) - 0.0015).abs() < 1e-15);
        let idle = FaultLocation {
            kind: FaultKind::Idle,
            ..octagon_cnot
        };
        assert!((idle.effective_rate(&params) - 0.0015).abs() < 1e-15);
    }

    #[test]
    fn invalid_rates_rejected() {
        assert!(NoiseParams::new(-0.1).is_err());
        assert!(NoiseParams::new(1.1).is_err());
        assert!(NoiseParams::with(0.5, 0.5, 3.0).is_err()); // 1.5 > 1
        assert!(NoiseParams::with(0.5, 2.0, 1.0).is_err());
    }

    #[test]
    fn data_error_weight_matches_binomial_mean() {
        // n = 8l² at l = 4, p = 0.1: mean X-weight np = 12.8, checked to
        // three standard errors of the sample mean over 10⁴ samples.
        let spec = build_c4_toric(4).unwrap();
        let p = 0.1;
        let samples = 10_000usize;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut total = 0usize;
        for _ in 0..samples {
            let e = sample_data_errors(&spec, p, &mut rng);
            total += (0..spec.n).filter(|&q| e.x_bit(q)).count();
        }
        let mean = total as f64 / samples as f64;
        let expect = spec.n as f64 * p;
        let sigma = (spec.n as f64 * p * (1.0 - p) / samples as f64).sqrt();
        assert!(
            (mean - expect).abs() < 3.0 * sigma,
            "mean {mean} vs {expect} ± {}",
            3.0 * sigma
        );
    }

    #[test]
    fn syndrome_flip_rate_is_bernoulli() {
        let q = 0.03;
        let draws = 100_000usize;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let hits = (0..draws).filter(|_| sample_syndrome_flip(q, &mut rng)).count();
        let rate = hits as f64 / draws as f64;
        let sigma = (q * (1.0 - q) / draws as f64).sqrt();
        assert!((rate - q).abs() < 3.0 * sigma);
    }

    #[test]
    fn one_qubit_faults_are_uniform() {
        let p = 0.3;
        let draws = 100_000usize;
        let loc = FaultLocation {
            kind: FaultKind::OneQubitGate,
            qubits: [0, 0],
            timestep: 0,
            touches_octagon_ancilla: false,
        };
        let params = NoiseParams::new(p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut counts = [0usize; 3];
        for _ in 0..draws {
            match sample_fault(&loc, &params, &mut rng).unwrap() {
                FaultEffect::OneQubit(Pauli::X) => counts[0] += 1,
                FaultEffect::OneQubit(Pauli::Y) => counts[1] += 1,
                FaultEffect::OneQubit(Pauli::Z) => counts[2] += 1,
                FaultEffect::None => {}
                other => panic!("unexpected effect {other:?}"),
            }
        }
        let expect = draws as f64 * p / 3.0;
        let sigma = (draws as f64 * (p / 3.0) * (1.0 - p / 3.0)).sqrt();
        for (i, &c) in counts.iter().enumerate() {
            assert!(
                (c as f64 - expect).abs() < 3.0 * sigma,
                "pauli {i}: {c} vs {expect}"
            );
        }
    }

    #[test]
    fn two_qubit_marginal_on_first_qubit() {
        // 12 of the 15 non-identity two-qubit Paulis act non-trivially on
        // the first qubit, so the marginal non-trivial rate is (12/15)·r.
        let p = 0.4;
        let draws = 100_000usize;
        let loc = FaultLocation {
            kind: FaultKind::TwoQubitGate,
            qubits: [0, 1],
            timestep: 0,
            touches_octagon_ancilla: false,
        };
        let params = NoiseParams::new(p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut nontrivial_first = 0usize;
        for _ in 0..draws {
            if let FaultEffect::TwoQubit(a, _) = sample_fault(&loc, &params, &mut rng).unwrap() {
                if a != Pauli::I {
                    nontrivial_first += 1;
                }
            }
        }
        let expect_rate = 12.0 / 15.0 * p;
        let rate = nontrivial_first as f64 / draws as f64;
        let sigma = (expect_rate * (1.0 - expect_rate) / draws as f64).sqrt();
        assert!((rate - expect_rate).abs() < 3.0 * sigma, "{rate} vs {expect_rate}");
    }

    #[test]
    fn identical_seed_gives_identical_stream() {
        let spec = build_c4_toric(3).unwrap();
        let params = NoiseParams::new(0.07).unwrap();
        let loc = FaultLocation {
            kind: FaultKind::TwoQubitGate,
            qubits: [1, 2],
            timestep: 3,
            touches_octagon_ancilla: false,
        };
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            let mut stream = Vec::new();
            for _ in 0..500 {
                stream.push(sample_fault(&loc, &params, &mut rng).unwrap());
            }
            stream.push(FaultEffect::OneQubit(
                if sample_data_errors(&spec, 0.2, &mut rng).is_identity() {
                    Pauli::I
                } else {
                    Pauli::X
                },
            ));
            stream
        };
        assert_eq!(run(), run());
    }
}
