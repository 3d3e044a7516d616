//! Syndrome-extraction schedules and multi-round Pauli-frame simulation.
//!
//! Three schedules are built here:
//!
//! * the standard interleaved toric schedule (four CNOT timesteps plus
//!   preparation and measurement),
//! * the eight-step C4-toric schedule with one ancilla per check, square X
//!   checks measured mid-round before the square Z CNOTs run,
//! * the four-step C4-toric schedule where each octagon is read out through
//!   a Bell-state ancilla pair whose outcomes are multiplied, with square X
//!   and Z checks measured simultaneously.
//!
//! Within every check the CNOT order is chosen so that single ancilla faults
//! propagate to benign data errors: the last two qubits of each square check
//! form that cluster's gauge side, and octagon passes visit one qubit per
//! cluster so that partial products reduce to isolated single-qubit errors
//! modulo the stabilizer and gauge group. The figures in the source material
//! are diagrams, so `validate_schedule` machine-checks every constraint.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codes::{CheckKind, CodeFamily, CodeSpec, Orientation};
use crate::noise::{
    sample_fault_unchecked, FaultEffect, FaultKind, FaultLocation, NoiseParams, NoiseError,
};
use crate::pauli::{multiply, Pauli, PauliOperator};

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("schedule {0:?} requires the {1} family")]
    WrongFamily(ScheduleKind, CodeFamily),
    #[error("noise parameters invalid: {0}")]
    BadNoise(#[from] NoiseError),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Toric4,
    C4Eight,
    C4Four,
}

impl std::fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScheduleKind::Toric4 => write!(f, "toric4"),
            ScheduleKind::C4Eight => write!(f, "c4_eight"),
            ScheduleKind::C4Four => write!(f, "c4_four"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    /// |0⟩ preparation / Z-basis measurement.
    Z,
    /// |+⟩ preparation / X-basis measurement.
    X,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleOp {
    Prep { qubit: usize, basis: Basis },
    Cnot { control: usize, target: usize },
    Measure { qubit: usize, basis: Basis },
    Idle { qubit: usize },
}

impl ScheduleOp {
    pub fn qubits(&self) -> [Option<usize>; 2] {
        match *self {
            ScheduleOp::Prep { qubit, .. }
            | ScheduleOp::Measure { qubit, .. }
            | ScheduleOp::Idle { qubit } => [Some(qubit), None],
            ScheduleOp::Cnot { control, target } => [Some(control), Some(target)],
        }
    }
}

/// One round of syndrome extraction: timestep-ordered elementary operations,
/// plus the mapping from checks to their readout ancillas.
#[derive(Debug, Clone)]
pub struct Schedule {
    pub kind: ScheduleKind,
    pub n_data: usize,
    pub n_ancilla: usize,
    pub timesteps: Vec<Vec<ScheduleOp>>,
    /// Per check id: the ancilla qubits whose outcomes XOR into its
    /// syndrome bit (one for single-ancilla checks, two for Bell pairs).
    pub readouts: Vec<Vec<usize>>,
    /// Flags ancilla qubits serving octagon checks (for the 3p experiment).
    pub octagon_ancilla: Vec<bool>,
    /// Timesteps containing data-ancilla CNOTs.
    pub data_cnot_steps: Vec<usize>,
}

impl Schedule {
    pub fn n_total(&self) -> usize {
        self.n_data + self.n_ancilla
    }

    /// Inclusive [first, last] timestep in which each ancilla is used.
    fn ancilla_live_ranges(timesteps: &[Vec<ScheduleOp>], n_data: usize, n_anc: usize) -> Vec<(usize, usize)> {
        let mut ranges = vec![(usize::MAX, 0); n_anc];
        for (t, ops) in timesteps.iter().enumerate() {
            for op in ops {
                for q in op.qubits().into_iter().flatten() {
                    if q >= n_data {
                        let r = &mut ranges[q - n_data];
                        r.0 = r.0.min(t);
                        r.1 = r.1.max(t);
                    }
                }
            }
        }
        ranges
    }

    /// Adds explicit idle operations for every living, unused qubit in
    /// every timestep, then sorts each timestep for a stable dump order.
    fn fill_idles(&mut self) {
        let ranges = Self::ancilla_live_ranges(&self.timesteps, self.n_data, self.n_ancilla);
        for (t, ops) in self.timesteps.iter_mut().enumerate() {
            let mut busy = vec![false; self.n_data + self.n_ancilla];
            for op in ops.iter() {
                for q in op.qubits().into_iter().flatten() {
                    busy[q] = true;
                }
            }
            for q in 0..self.n_data {
                if !busy[q] {
                    ops.push(ScheduleOp::Idle { qubit: q });
                }
            }
            for a in 0..self.n_ancilla {
                let (first, last) = ranges[a];
                if first <= t && t <= last && !busy[self.n_data + a] {
                    ops.push(ScheduleOp::Idle { qubit: self.n_data + a });
                }
            }
        }
    }

    /// Stable text listing for golden tests and inspection.
    pub fn dump_text(&self) -> String {
        use std::fmt::Write;
        let name = |q: usize| {
            if q < self.n_data {
                format!("d{q}")
            } else {
                format!("a{}", q - self.n_data)
            }
        };
        let mut out = String::new();
        writeln!(out, "schedule {} data={} ancilla={}", self.kind, self.n_data, self.n_ancilla).unwrap();
        for (t, ops) in self.timesteps.iter().enumerate() {
            writeln!(out, "timestep {t}:").unwrap();
            for op in ops {
                match *op {
                    ScheduleOp::Prep { qubit, basis } => {
                        writeln!(out, "  prep {} {}", name(qubit), if basis == Basis::Z { "|0>" } else { "|+>" }).unwrap()
                    }
                    ScheduleOp::Cnot { control, target } => {
                        writeln!(out, "  cnot {} -> {}", name(control), name(target)).unwrap()
                    }
                    ScheduleOp::Measure { qubit, basis } => {
                        writeln!(out, "  measure {} {:?}", name(qubit), basis).unwrap()
                    }
                    ScheduleOp::Idle { qubit } => writeln!(out, "  idle {}", name(qubit)).unwrap(),
                }
            }
        }
        out
    }
}

/// Per-round syndrome rows, the derived space-time defects, and the final
/// data error (ground truth for failure judgment, never decoder-visible).
#[derive(Debug, Clone)]
pub struct SyndromeRecord {
    pub num_checks: usize,
    /// `noisy_rounds + 1` rows; the last row comes from the ideal closing
    /// round.
    pub rounds: Vec<Vec<bool>>,
    /// (check id, round index) where consecutive rounds differ; round -1 is
    /// the all-trivial reference.
    pub defects: Vec<(usize, usize)>,
    pub final_data_error: PauliOperator,
}

impl SyndromeRecord {
    pub fn from_rows(rows: Vec<Vec<bool>>, final_data_error: PauliOperator) -> SyndromeRecord {
        let num_checks = rows.first().map_or(0, |r| r.len());
        let mut defects = Vec::new();
        for (r, row) in rows.iter().enumerate() {
            for (c, &bit) in row.iter().enumerate() {
                let prev = if r == 0 { false } else { rows[r - 1][c] };
                if bit != prev {
                    defects.push((c, r));
                }
            }
        }
        SyndromeRecord {
            num_checks,
            rounds: rows,
            defects,
            final_data_error,
        }
    }
}

// ---------------------------------------------------------------------------
// Schedule builders
// ---------------------------------------------------------------------------

/// Within-check CNOT step tables, indexed by cluster corner (0 = NW, 1 = NE,
/// 2 = SW, 3 = SE). Squares visit their gauge side last; octagon passes
/// visit one qubit per cluster.
mod tables {
    /// Four-step schedule: timestep of each job per corner.
    pub const FOUR_SQX_H: [usize; 4] = [2, 3, 0, 1];
    pub const FOUR_SQZ_H: [usize; 4] = [0, 2, 1, 3];
    pub const FOUR_OCTZ_H: [usize; 4] = [3, 0, 3, 0];
    pub const FOUR_OCTX_H: [usize; 4] = [1, 1, 2, 2];
    pub const FOUR_SQX_V: [usize; 4] = [2, 0, 3, 1];
    pub const FOUR_SQZ_V: [usize; 4] = [0, 1, 2, 3];
    pub const FOUR_OCTZ_V: [usize; 4] = [1, 2, 1, 2];
    pub const FOUR_OCTX_V: [usize; 4] = [3, 3, 0, 0];

    /// Bell-half membership per corner (0 = first ancilla, 1 = second).
    pub const HALF_OCTZ_H: [usize; 4] = [0, 1, 1, 0];
    pub const HALF_OCTZ_V: [usize; 4] = [1, 0, 0, 1];
    pub const HALF_OCTX_H: [usize; 4] = [0, 1, 1, 0];
    pub const HALF_OCTX_V: [usize; 4] = [0, 1, 0, 1];

    /// Eight-step schedule: (row, step-within-row) of each job per corner.
    /// Row 0 is the top row (with the square X checks), row 1 the bottom.
    pub const EIGHT_SQX_H: [usize; 4] = [2, 3, 0, 1];
    pub const EIGHT_SQZ_H: [usize; 4] = [0, 2, 1, 3];
    pub const EIGHT_SQX_V: [usize; 4] = [2, 0, 3, 1];
    pub const EIGHT_SQZ_V: [usize; 4] = [0, 1, 2, 3];
    pub const EIGHT_OCTX_H: [(usize, usize); 4] = [(0, 0), (0, 1), (1, 0), (1, 2)];
    pub const EIGHT_OCTZ_H: [(usize, usize); 4] = [(0, 1), (1, 3), (0, 2), (1, 0)];
    pub const EIGHT_OCTX_V: [(usize, usize); 4] = [(0, 3), (1, 3), (0, 2), (1, 1)];
    pub const EIGHT_OCTZ_V: [(usize, usize); 4] = [(0, 0), (0, 3), (1, 1), (1, 2)];
}

fn require_family(
    spec: &CodeSpec,
    kind: ScheduleKind,
    family: CodeFamily,
) -> Result<(), ScheduleError> {
    if spec.family != family {
        return Err(ScheduleError::WrongFamily(kind, family));
    }
    Ok(())
}

/// Interleaved toric schedule: preparation, four CNOT timesteps in the
/// N-W-E-S order for both stars and plaquettes, measurement.
pub fn build_toric_schedule(spec: &CodeSpec) -> Result<Schedule, ScheduleError> {
    require_family(spec, ScheduleKind::Toric4, CodeFamily::Toric)?;
    let l = spec.l;
    let n_data = spec.n;
    let n_checks = spec.num_checks();
    let anc = |check: usize| n_data + check;
    let h = |i: usize, j: usize| (j % l) * l + (i % l);
    let v = |i: usize, j: usize| l * l + (j % l) * l + (i % l);

    let mut timesteps: Vec<Vec<ScheduleOp>> = vec![Vec::new(); 6];
    for (c, check) in spec.checks.iter().enumerate() {
        let basis = if check.kind == CheckKind::ToricPlaquette {
            Basis::Z
        } else {
            Basis::X
        };
        timesteps[0].push(ScheduleOp::Prep { qubit: anc(c), basis });
        timesteps[5].push(ScheduleOp::Measure { qubit: anc(c), basis });
    }
    for j in 0..l {
        for i in 0..l {
            // Plaquette f(i,j): data is the CNOT control.
            let plaq = anc(j * l + i);
            for (step, &edge) in [h(i, j + 1), v(i, j), v(i + 1, j), h(i, j)].iter().enumerate() {
                timesteps[1 + step].push(ScheduleOp::Cnot { control: edge, target: plaq });
            }
            // Star s(i,j): ancilla is the CNOT control.
            let star = anc(l * l + j * l + i);
            for (step, &edge) in [v(i, j), h(i + l - 1, j), h(i, j), v(i, j + l - 1)]
                .iter()
                .enumerate()
            {
                timesteps[1 + step].push(ScheduleOp::Cnot { control: star, target: edge });
            }
        }
    }

    let mut schedule = Schedule {
        kind: ScheduleKind::Toric4,
        n_data,
        n_ancilla: n_checks,
        timesteps,
        readouts: (0..n_checks).map(|c| vec![anc(c)]).collect(),
        octagon_ancilla: vec![false; n_data + n_checks],
        data_cnot_steps: vec![1, 2, 3, 4],
    };
    schedule.fill_idles();
    Ok(schedule)
}

/// Corner steps for one C4 cluster job, resolved by orientation.
fn by_orientation<T: Copy>(orientation: Orientation, horizontal: T, vertical: T) -> T {
    match orientation {
        Orientation::Horizontal => horizontal,
        Orientation::Vertical => vertical,
    }
}

/// The (cluster, corner) members of each octagon check, in the fixed
/// geometric order: the two sides from horizontal clusters first.
fn octagon_members(spec: &CodeSpec, check: usize) -> Vec<(usize, u8)> {
    spec.checks[check]
        .op
        .support()
        .iter()
        .map(|&q| (spec.qubit_cluster[q], spec.qubit_corner[q]))
        .collect()
}

/// Eight-step C4-toric schedule: one ancilla per check, eight CNOT
/// timesteps in two rows of four, square X ancillas measured in an extra
/// timestep between the rows, square Z ancillas freshly prepared there.
pub fn build_c4_schedule_8step(spec: &CodeSpec) -> Result<Schedule, ScheduleError> {
    use tables::*;
    require_family(spec, ScheduleKind::C4Eight, CodeFamily::C4Toric)?;
    let l2 = spec.l * spec.l;
    let n_data = spec.n;
    let n_checks = spec.num_checks();
    let anc = |check: usize| n_data + check;

    // Timesteps: 0 prep | 1..=4 row 0 | 5 mid measure/prep | 6..=9 row 1 | 10 measure.
    let mut timesteps: Vec<Vec<ScheduleOp>> = vec![Vec::new(); 11];
    let mut octagon_ancilla = vec![false; n_data + n_checks];

    for (c, check) in spec.checks.iter().enumerate() {
        match check.kind {
            CheckKind::SquareX => {
                timesteps[0].push(ScheduleOp::Prep { qubit: anc(c), basis: Basis::X });
                timesteps[5].push(ScheduleOp::Measure { qubit: anc(c), basis: Basis::X });
            }
            CheckKind::SquareZ => {
                timesteps[5].push(ScheduleOp::Prep { qubit: anc(c), basis: Basis::Z });
                timesteps[10].push(ScheduleOp::Measure { qubit: anc(c), basis: Basis::Z });
            }
            CheckKind::OctagonX => {
                octagon_ancilla[anc(c)] = true;
                timesteps[0].push(ScheduleOp::Prep { qubit: anc(c), basis: Basis::X });
                timesteps[10].push(ScheduleOp::Measure { qubit: anc(c), basis: Basis::X });
            }
            CheckKind::OctagonZ => {
                octagon_ancilla[anc(c)] = true;
                timesteps[0].push(ScheduleOp::Prep { qubit: anc(c), basis: Basis::Z });
                timesteps[10].push(ScheduleOp::Measure { qubit: anc(c), basis: Basis::Z });
            }
            _ => unreachable!("C4 spec has no toric checks"),
        }
    }

    let row_step = |row: usize, step: usize| 1 + 5 * row + step;
    for (c, check) in spec.checks.iter().enumerate() {
        match check.kind {
            CheckKind::SquareX => {
                // X check: ancilla drives the data.
                for &q in check.op.support().iter() {
                    let corner = spec.qubit_corner[q] as usize;
                    let orientation = spec.edge_coord(spec.qubit_cluster[q]).0;
                    let step = by_orientation(orientation, EIGHT_SQX_H, EIGHT_SQX_V)[corner];
                    timesteps[row_step(0, step)].push(ScheduleOp::Cnot { control: anc(c), target: q });
                }
            }
            CheckKind::SquareZ => {
                for &q in check.op.support().iter() {
                    let corner = spec.qubit_corner[q] as usize;
                    let orientation = spec.edge_coord(spec.qubit_cluster[q]).0;
                    let step = by_orientation(orientation, EIGHT_SQZ_H, EIGHT_SQZ_V)[corner];
                    timesteps[row_step(1, step)].push(ScheduleOp::Cnot { control: q, target: anc(c) });
                }
            }
            CheckKind::OctagonX => {
                for &q in check.op.support().iter() {
                    let corner = spec.qubit_corner[q] as usize;
                    let orientation = spec.edge_coord(spec.qubit_cluster[q]).0;
                    let (row, step) =
                        by_orientation(orientation, EIGHT_OCTX_H, EIGHT_OCTX_V)[corner];
                    timesteps[row_step(row, step)].push(ScheduleOp::Cnot { control: anc(c), target: q });
                }
            }
            CheckKind::OctagonZ => {
                for &q in check.op.support().iter() {
                    let corner = spec.qubit_corner[q] as usize;
                    let orientation = spec.edge_coord(spec.qubit_cluster[q]).0;
                    let (row, step) =
                        by_orientation(orientation, EIGHT_OCTZ_H, EIGHT_OCTZ_V)[corner];
                    timesteps[row_step(row, step)].push(ScheduleOp::Cnot { control: q, target: anc(c) });
                }
            }
            _ => unreachable!(),
        }
    }
    debug_assert_eq!(n_checks, 6 * l2);

    let mut schedule = Schedule {
        kind: ScheduleKind::C4Eight,
        n_data,
        n_ancilla: n_checks,
        timesteps,
        readouts: (0..n_checks).map(|c| vec![anc(c)]).collect(),
        octagon_ancilla,
        data_cnot_steps: vec![1, 2, 3, 4, 6, 7, 8, 9],
    };
    schedule.fill_idles();
    Ok(schedule)
}

/// Four-step C4-toric schedule: octagons read out through Bell-state
/// ancilla pairs (outcomes multiplied), all square checks measured
/// simultaneously, every data qubit used in every CNOT timestep.
pub fn build_c4_schedule_4step(spec: &CodeSpec) -> Result<Schedule, ScheduleError> {
    use tables::*;
    require_family(spec, ScheduleKind::C4Four, CodeFamily::C4Toric)?;
    let l2 = spec.l * spec.l;
    let n_data = spec.n;
    let n_anc = 8 * l2; // 2d² ancillas, matching the toric code
    // Layout: square X ancillas, square Z ancillas, then octagon pairs in
    // check-id order.
    let sqx_anc = |e: usize| n_data + e;
    let sqz_anc = |e: usize| n_data + 2 * l2 + e;
    let octx_anc = |v: usize, half: usize| n_data + 4 * l2 + 2 * v + half;
    let octz_anc = |f: usize, half: usize| n_data + 6 * l2 + 2 * f + half;

    // Timesteps: 0 prep | 1 Bell CNOTs | 2..=5 data CNOTs | 6 measure.
    let mut timesteps: Vec<Vec<ScheduleOp>> = vec![Vec::new(); 7];
    let mut octagon_ancilla = vec![false; n_data + n_anc];
    let mut readouts = vec![Vec::new(); spec.num_checks()];

    for (c, check) in spec.checks.iter().enumerate() {
        match check.kind {
            CheckKind::SquareX => {
                let e = c;
                timesteps[0].push(ScheduleOp::Prep { qubit: sqx_anc(e), basis: Basis::X });
                timesteps[6].push(ScheduleOp::Measure { qubit: sqx_anc(e), basis: Basis::X });
                readouts[c] = vec![sqx_anc(e)];
            }
            CheckKind::SquareZ => {
                let e = c - 2 * l2;
                timesteps[0].push(ScheduleOp::Prep { qubit: sqz_anc(e), basis: Basis::Z });
                timesteps[6].push(ScheduleOp::Measure { qubit: sqz_anc(e), basis: Basis::Z });
                readouts[c] = vec![sqz_anc(e)];
            }
            CheckKind::OctagonX => {
                let v = c - 4 * l2;
                let (a0, a1) = (octx_anc(v, 0), octx_anc(v, 1));
                octagon_ancilla[a0] = true;
                octagon_ancilla[a1] = true;
                timesteps[0].push(ScheduleOp::Prep { qubit: a0, basis: Basis::X });
                timesteps[0].push(ScheduleOp::Prep { qubit: a1, basis: Basis::Z });
                timesteps[1].push(ScheduleOp::Cnot { control: a0, target: a1 });
                timesteps[6].push(ScheduleOp::Measure { qubit: a0, basis: Basis::X });
                timesteps[6].push(ScheduleOp::Measure { qubit: a1, basis: Basis::X });
                readouts[c] = vec![a0, a1];
            }
            CheckKind::OctagonZ => {
                let f = c - 5 * l2;
                let (a0, a1) = (octz_anc(f, 0), octz_anc(f, 1));
                octagon_ancilla[a0] = true;
                octagon_ancilla[a1] = true;
                timesteps[0].push(ScheduleOp::Prep { qubit: a0, basis: Basis::X });
                timesteps[0].push(ScheduleOp::Prep { qubit: a1, basis: Basis::Z });
                timesteps[1].push(ScheduleOp::Cnot { control: a0, target: a1 });
                timesteps[6].push(ScheduleOp::Measure { qubit: a0, basis: Basis::Z });
                timesteps[6].push(ScheduleOp::Measure { qubit: a1, basis: Basis::Z });
                readouts[c] = vec![a0, a1];
            }
            _ => unreachable!("C4 spec has no toric checks"),
        }
    }

    for (c, check) in spec.checks.iter().enumerate() {
        match check.kind {
            CheckKind::SquareX | CheckKind::SquareZ => {
                let is_x = check.kind == CheckKind::SquareX;
                for &q in check.op.support().iter() {
                    let corner = spec.qubit_corner[q] as usize;
                    let orientation = spec.edge_coord(spec.qubit_cluster[q]).0;
                    let step = if is_x {
                        by_orientation(orientation, FOUR_SQX_H, FOUR_SQX_V)[corner]
                    } else {
                        by_orientation(orientation, FOUR_SQZ_H, FOUR_SQZ_V)[corner]
                    };
                    let a = readouts[c][0];
                    timesteps[2 + step].push(if is_x {
                        ScheduleOp::Cnot { control: a, target: q }
                    } else {
                        ScheduleOp::Cnot { control: q, target: a }
                    });
                }
            }
            CheckKind::OctagonX | CheckKind::OctagonZ => {
                let is_x = check.kind == CheckKind::OctagonX;
                for &q in check.op.support().iter() {
                    let corner = spec.qubit_corner[q] as usize;
                    let orientation = spec.edge_coord(spec.qubit_cluster[q]).0;
                    let (step, half) = if is_x {
                        (
                            by_orientation(orientation, FOUR_OCTX_H, FOUR_OCTX_V)[corner],
                            by_orientation(orientation, HALF_OCTX_H, HALF_OCTX_V)[corner],
                        )
                    } else {
                        (
                            by_orientation(orientation, FOUR_OCTZ_H, FOUR_OCTZ_V)[corner],
                            by_orientation(orientation, HALF_OCTZ_H, HALF_OCTZ_V)[corner],
                        )
                    };
                    let a = readouts[c][half];
                    timesteps[2 + step].push(if is_x {
                        ScheduleOp::Cnot { control: a, target: q }
                    } else {
                        ScheduleOp::Cnot { control: q, target: a }
                    });
                }
            }
            _ => unreachable!(),
        }
    }

    let mut schedule = Schedule {
        kind: ScheduleKind::C4Four,
        n_data,
        n_ancilla: n_anc,
        timesteps,
        readouts,
        octagon_ancilla,
        data_cnot_steps: vec![2, 3, 4, 5],
    };
    schedule.fill_idles();
    Ok(schedule)
}

pub fn build_schedule(spec: &CodeSpec, kind: ScheduleKind) -> Result<Schedule, ScheduleError> {
    match kind {
        ScheduleKind::Toric4 => build_toric_schedule(spec),
        ScheduleKind::C4Eight => build_c4_schedule_8step(spec),
        ScheduleKind::C4Four => build_c4_schedule_4step(spec),
    }
}

// ---------------------------------------------------------------------------
// Pauli-frame simulation
// ---------------------------------------------------------------------------

struct Engine<'a> {
    schedule: &'a Schedule,
    frame: PauliOperator,
    outcomes: Vec<bool>,
}

impl<'a> Engine<'a> {
    fn new(schedule: &'a Schedule) -> Engine<'a> {
        Engine {
            schedule,
            frame: PauliOperator::identity(schedule.n_total()),
            outcomes: vec![false; schedule.n_ancilla],
        }
    }

    fn with_data_frame(schedule: &'a Schedule, data: &PauliOperator) -> Engine<'a> {
        let mut engine = Engine::new(schedule);
        for q in 0..schedule.n_data {
            if data.x_bit(q) {
                engine.frame.flip_x(q);
            }
            if data.z_bit(q) {
                engine.frame.flip_z(q);
            }
        }
        engine
    }

    /// Executes one round, applying `fault(timestep, op_index, op)` after
    /// each ideal operation, and an optional extra frame `injection` before
    /// the given timestep. Returns the round's syndrome row.
    fn run_round(
        &mut self,
        mut fault: impl FnMut(usize, usize, &ScheduleOp) -> FaultEffect,
        injection: Option<(usize, &PauliOperator)>,
    ) -> Vec<bool> {
        for (t, ops) in self.schedule.timesteps.iter().enumerate() {
            if let Some((inject_t, pauli)) = injection {
                if inject_t == t {
                    self.frame.mul_assign(pauli);
                }
            }
            for (k, op) in ops.iter().enumerate() {
                let effect = fault(t, k, op);
                match *op {
                    ScheduleOp::Prep { qubit, basis } => {
                        self.frame.clear_qubit(qubit);
                        if effect == FaultEffect::PrepFlip {
                            match basis {
                                Basis::Z => self.frame.flip_x(qubit),
                                Basis::X => self.frame.flip_z(qubit),
                            }
                        }
                    }
                    ScheduleOp::Cnot { control, target } => {
                        self.frame.cnot(control, target);
                        if let FaultEffect::TwoQubit(a, b) = effect {
                            self.frame.apply_pauli(control, a);
                            self.frame.apply_pauli(target, b);
                        }
                    }
                    ScheduleOp::Measure { qubit, basis } => {
                        let mut bit = match basis {
                            Basis::Z => self.frame.x_bit(qubit),
                            Basis::X => self.frame.z_bit(qubit),
                        };
                        if effect == FaultEffect::MeasureFlip {
                            bit = !bit;
                        }
                        self.outcomes[qubit - self.schedule.n_data] = bit;
                    }
                    ScheduleOp::Idle { qubit } => {
                        if let FaultEffect::OneQubit(p) = effect {
                            self.frame.apply_pauli(qubit, p);
                        }
                    }
                }
            }
        }
        self.schedule
            .readouts
            .iter()
            .map(|ancillas| {
                ancillas
                    .iter()
                    .fold(false, |acc, &a| acc ^ self.outcomes[a - self.schedule.n_data])
            })
            .collect()
    }

    fn final_data_error(&self) -> PauliOperator {
        self.frame.truncated(self.schedule.n_data)
    }
}

fn no_fault(_: usize, _: usize, _: &ScheduleOp) -> FaultEffect {
    FaultEffect::None
}

fn location_of(op: &ScheduleOp, timestep: usize, schedule: &Schedule) -> FaultLocation {
    match *op {
        ScheduleOp::Prep { qubit, .. } => FaultLocation {
            kind: FaultKind::Prep,
            qubits: [qubit, qubit],
            timestep,
            touches_octagon_ancilla: schedule.octagon_ancilla[qubit],
        },
        ScheduleOp::Measure { qubit, .. } => FaultLocation {
            kind: FaultKind::Measure,
            qubits: [qubit, qubit],
            timestep,
            touches_octagon_ancilla: schedule.octagon_ancilla[qubit],
        },
        ScheduleOp::Idle { qubit } => FaultLocation {
            kind: FaultKind::Idle,
            qubits: [qubit, qubit],
            timestep,
            touches_octagon_ancilla: schedule.octagon_ancilla[qubit],
        },
        ScheduleOp::Cnot { control, target } => FaultLocation {
            kind: FaultKind::TwoQubitGate,
            qubits: [control, target],
            timestep,
            touches_octagon_ancilla: schedule.octagon_ancilla[control]
                || schedule.octagon_ancilla[target],
        },
    }
}

/// Runs `rounds` noisy rounds followed by one noiseless closing round.
pub fn simulate_rounds<R: Rng>(
    _spec: &CodeSpec,
    schedule: &Schedule,
    params: &NoiseParams,
    rounds: usize,
    rng: &mut R,
) -> Result<SyndromeRecord, ScheduleError> {
    if rounds == 0 {
        return Err(ScheduleError::InvalidParameter(
            "at least one noisy round is required".into(),
        ));
    }
    params.validate()?;
    let mut engine = Engine::new(schedule);
    let mut rows = Vec::with_capacity(rounds + 1);
    for _ in 0..rounds {
        let row = engine.run_round(
            |t, _, op| {
                let loc = location_of(op, t, schedule);
                sample_fault_unchecked(&loc, loc.effective_rate(params), rng)
            },
            None,
        );
        rows.push(row);
    }
    rows.push(engine.run_round(no_fault, None));
    Ok(SyndromeRecord::from_rows(rows, engine.final_data_error()))
}

/// One noiseless round on a given data frame: the measured syndrome must
/// equal the frame's commutation syndrome.
pub fn noiseless_syndrome(_spec: &CodeSpec, schedule: &Schedule, data_frame: &PauliOperator) -> Vec<bool> {
    let mut engine = Engine::with_data_frame(schedule, data_frame);
    engine.run_round(no_fault, None)
}

/// A single deterministic fault at one schedule location in one round.
#[derive(Debug, Clone, Copy)]
pub struct Injection {
    pub round: usize,
    pub timestep: usize,
    pub op_index: usize,
    pub effect: FaultEffect,
}

/// Noiseless simulation except for one injected fault; `rounds` noisy-round
/// slots plus the closing round, as in [`simulate_rounds`].
pub fn simulate_with_injection(
    _spec: &CodeSpec,
    schedule: &Schedule,
    rounds: usize,
    injection: Injection,
) -> SyndromeRecord {
    let mut engine = Engine::new(schedule);
    let mut rows = Vec::with_capacity(rounds + 1);
    for r in 0..rounds {
        let row = engine.run_round(
            |t, k, _| {
                if r == injection.round && t == injection.timestep && k == injection.op_index {
                    injection.effect
                } else {
                    FaultEffect::None
                }
            },
            None,
        );
        rows.push(row);
    }
    rows.push(engine.run_round(no_fault, None));
    SyndromeRecord::from_rows(rows, engine.final_data_error())
}

/// Noiseless simulation with an arbitrary Pauli XORed into the frame at the
/// start of (round, timestep); exercises gauge transparency and linearity.
pub fn simulate_with_frame_injection(
    _spec: &CodeSpec,
    schedule: &Schedule,
    rounds: usize,
    at_round: usize,
    at_timestep: usize,
    pauli: &PauliOperator,
) -> SyndromeRecord {
    assert_eq!(pauli.num_qubits(), schedule.n_total());
    let mut engine = Engine::new(schedule);
    let mut rows = Vec::with_capacity(rounds + 1);
    for r in 0..rounds {
        let injection = (r == at_round).then_some((at_timestep, pauli));
        rows.push(engine.run_round(no_fault, injection));
    }
    rows.push(engine.run_round(no_fault, None));
    SyndromeRecord::from_rows(rows, engine.final_data_error())
}

/// All distinct single-fault variants of one round of the schedule.
pub fn enumerate_fault_variants(schedule: &Schedule) -> Vec<Injection> {
    let paulis = [Pauli::X, Pauli::Y, Pauli::Z];
    let mut variants = Vec::new();
    for (t, ops) in schedule.timesteps.iter().enumerate() {
        for (k, op) in ops.iter().enumerate() {
            match op {
                ScheduleOp::Prep { .. } => variants.push(Injection {
                    round: 0,
                    timestep: t,
                    op_index: k,
                    effect: FaultEffect::PrepFlip,
                }),
                ScheduleOp::Measure { .. } => variants.push(Injection {
                    round: 0,
                    timestep: t,
                    op_index: k,
                    effect: FaultEffect::MeasureFlip,
                }),
                ScheduleOp::Idle { .. } => {
                    for p in paulis {
                        variants.push(Injection {
                            round: 0,
                            timestep: t,
                            op_index: k,
                            effect: FaultEffect::OneQubit(p),
                        });
                    }
                }
                ScheduleOp::Cnot { .. } => {
                    for a in [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z] {
                        for b in [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z] {
                            if a == Pauli::I && b == Pauli::I {
                                continue;
                            }
                            variants.push(Injection {
                                round: 0,
                                timestep: t,
                                op_index: k,
                                effect: FaultEffect::TwoQubit(a, b),
                            });
                        }
                    }
                }
            }
        }
    }
    variants
}

// ---------------------------------------------------------------------------
// Schedule validation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub failures: Vec<String>,
    pub frames_checked: usize,
    pub fault_variants_checked: usize,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Steepest-descent coset reduction: at each step multiply by the
/// stabilizer or gauge generator giving the largest weight drop.
fn reduce_weight(spec: &CodeSpec, op: &PauliOperator) -> PauliOperator {
    let mut best = op.clone();
    let generators: Vec<&PauliOperator> = spec
        .checks
        .iter()
        .map(|c| &c.op)
        .chain(spec.gauge_generators.iter())
        .collect();
    loop {
        let mut improved: Option<PauliOperator> = None;
        for g in &generators {
            let candidate = multiply(&best, g).expect("same dimension");
            let bar = improved.as_ref().map_or(best.weight(), |c| c.weight());
            if candidate.weight() < bar {
                improved = Some(candidate);
            }
        }
        match improved {
            Some(c) => best = c,
            None => return best,
        }
    }
}

/// Largest per-cluster weight after exact minimization over each cluster's
/// local group (its two square checks and its gauge pair, 16 elements).
/// Toric clusters hold a single qubit and have no local group.
fn max_cluster_weight(spec: &CodeSpec, op: &PauliOperator) -> usize {
    let mut touched: Vec<usize> = op.support().iter().map(|&q| spec.qubit_cluster[q]).collect();
    touched.sort_unstable();
    touched.dedup();
    if spec.family == CodeFamily::Toric {
        return if touched.is_empty() { 0 } else { 1 };
    }
    let l2 = spec.l * spec.l;
    let mut worst = 0;
    for &cluster in &touched {
        let locals = [
            &spec.checks[cluster].op,            // XXXX
            &spec.checks[2 * l2 + cluster].op,   // ZZZZ
            &spec.gauge_generators[2 * cluster],
            &spec.gauge_generators[2 * cluster + 1],
        ];
        let cluster_weight = |p: &PauliOperator| {
            (0..4usize)
                .filter(|&k| {
                    let q = 4 * cluster + k;
                    p.x_bit(q) || p.z_bit(q)
                })
                .count()
        };
        let mut min_w = cluster_weight(op);
        for mask in 1u8..16 {
            let mut candidate = op.clone();
            for (bit, g) in locals.iter().enumerate() {
                if mask >> bit & 1 == 1 {
                    candidate.mul_assign(g);
                }
            }
            min_w = min_w.min(cluster_weight(&candidate));
        }
        worst = worst.max(min_w);
    }
    worst
}

/// Machine-checks a schedule: (a) noiseless syndrome reproduction on random
/// frames, (b) per-timestep qubit exclusivity and explicit idles, (c) the
/// structural ordering constraints of its kind, (d) single-fault residual
/// analysis (the residual data error, reduced modulo the stabilizer and
/// gauge group, stays local). End-to-end matchability of every single fault
/// is exercised separately by the decoder's exhaustive sweep.
pub fn validate_schedule(spec: &CodeSpec, schedule: &Schedule) -> ValidationReport {
    use rand::SeedableRng;
    let mut failures = Vec::new();

    // (b) exclusivity and explicit idles.
    let ranges =
        Schedule::ancilla_live_ranges(&schedule.timesteps, schedule.n_data, schedule.n_ancilla);
    for (t, ops) in schedule.timesteps.iter().enumerate() {
        let mut seen = vec![false; schedule.n_total()];
        for op in ops {
            for q in op.qubits().into_iter().flatten() {
                if seen[q] {
                    failures.push(format!("timestep {t}: qubit {q} used twice"));
                }
                seen[q] = true;
            }
        }
        for q in 0..schedule.n_data {
            if !seen[q] {
                failures.push(format!("timestep {t}: data qubit {q} has no explicit op"));
            }
        }
        for a in 0..schedule.n_ancilla {
            let (first, last) = ranges[a];
            if first <= t && t <= last && !seen[schedule.n_data + a] {
                failures.push(format!("timestep {t}: live ancilla {a} has no explicit op"));
            }
        }
    }

    // (c) structural constraints per schedule kind.
    let cnot_steps: Vec<usize> = schedule
        .timesteps
        .iter()
        .enumerate()
        .filter(|(_, ops)| ops.iter().any(|op| matches!(op, ScheduleOp::Cnot { .. })))
        .map(|(t, _)| t)
        .collect();
    let data_cnot_steps: Vec<usize> = schedule
        .timesteps
        .iter()
        .enumerate()
        .filter(|(_, ops)| {
            ops.iter().any(|op| match op {
                ScheduleOp::Cnot { control, target } => {
                    *control < schedule.n_data || *target < schedule.n_data
                }
                _ => false,
            })
        })
        .map(|(t, _)| t)
        .collect();
    if data_cnot_steps != schedule.data_cnot_steps {
        failures.push(format!(
            "data CNOT steps {data_cnot_steps:?} disagree with declared {:?}",
            schedule.data_cnot_steps
        ));
    }
    match schedule.kind {
        ScheduleKind::Toric4 => {
            if cnot_steps.len() != 4 {
                failures.push(format!("toric schedule has {} CNOT steps, wants 4", cnot_steps.len()));
            }
            if schedule.timesteps.len() != 6 {
                failures.push(format!(
                    "toric schedule has {} timesteps, wants 6",
                    schedule.timesteps.len()
                ));
            }
        }
        ScheduleKind::C4Eight => {
            if cnot_steps.len() != 8 {
                failures.push(format!("8-step schedule has {} CNOT steps, wants 8", cnot_steps.len()));
            }
            // Square X CNOTs must all precede the mid-round measurement of
            // their ancillas, which must precede every square Z CNOT.
            let step_of = |pred: &dyn Fn(&ScheduleOp) -> bool, last: bool| -> Option<usize> {
                let hits: Vec<usize> = schedule
                    .timesteps
                    .iter()
                    .enumerate()
                    .filter(|(_, ops)| ops.iter().any(|op| pred(op)))
                    .map(|(t, _)| t)
                    .collect();
                if last { hits.last().copied() } else { hits.first().copied() }
            };
            let is_kind_anc = |q: usize, kind: CheckKind| {
                q >= schedule.n_data && spec.checks[q - schedule.n_data].kind == kind
            };
            let last_sqx_cnot = step_of(
                &|op| matches!(op, ScheduleOp::Cnot { control, .. } if is_kind_anc(*control, CheckKind::SquareX)),
                true,
            );
            let sqx_measure = step_of(
                &|op| matches!(op, ScheduleOp::Measure { qubit, .. } if is_kind_anc(*qubit, CheckKind::SquareX)),
                false,
            );
            let first_sqz_cnot = step_of(
                &|op| matches!(op, ScheduleOp::Cnot { target, .. } if is_kind_anc(*target, CheckKind::SquareZ)),
                false,
            );
            let sqz_measure = step_of(
                &|op| matches!(op, ScheduleOp::Measure { qubit, .. } if is_kind_anc(*qubit, CheckKind::SquareZ)),
                false,
            );
            match (last_sqx_cnot, sqx_measure, first_sqz_cnot, sqz_measure) {
                (Some(a), Some(b), Some(c), Some(d)) => {
                    if !(a < b && b < c && c <= d) {
                        failures.push(format!(
                            "8-step ordering violated: sqX cnots end {a}, sqX measured {b}, sqZ cnots start {c}, sqZ measured {d}"
                        ));
                    }
                }
                _ => failures.push("8-step schedule is missing square check stages".into()),
            }
        }
        ScheduleKind::C4Four => {
            if data_cnot_steps.len() != 4 {
                failures.push(format!(
                    "4-step schedule has {} data CNOT steps, wants 4",
                    data_cnot_steps.len()
                ));
            }
            // Bell preparation strictly precedes data interaction.
            if let (Some(&bell), Some(&first_data)) = (
                cnot_steps.iter().find(|t| !data_cnot_steps.contains(t)),
                data_cnot_steps.first(),
            ) {
                if bell >= first_data {
                    failures.push("Bell CNOTs do not precede data CNOTs".into());
                }
            } else {
                failures.push("4-step schedule is missing its Bell preparation step".into());
            }
            // Octagons read out through ancilla pairs, two data qubits per
            // octagon per timestep (one per half).
            for (c, check) in spec.checks.iter().enumerate() {
                if !check.kind.is_square() && schedule.readouts[c].len() != 2 {
                    failures.push(format!("octagon check {c} lacks a Bell ancilla pair"));
                }
            }
            for &t in &data_cnot_steps {
                let mut per_anc = std::collections::HashMap::new();
                for op in &schedule.timesteps[t] {
                    if let ScheduleOp::Cnot { control, target } = op {
                        let anc = if *control >= schedule.n_data { control } else { target };
                        *per_anc.entry(*anc).or_insert(0usize) += 1;
                    }
                }
                if per_anc.values().any(|&n| n != 1) {
                    failures.push(format!("timestep {t}: an ancilla sees more than one data CNOT"));
                }
            }
            // Square X and Z checks are measured simultaneously.
            let mut sqx_meas = None;
            let mut sqz_meas = None;
            for (t, ops) in schedule.timesteps.iter().enumerate() {
                for op in ops {
                    if let ScheduleOp::Measure { qubit, .. } = op {
                        for (c, r) in schedule.readouts.iter().enumerate() {
                            if r.contains(qubit) {
                                match spec.checks[c].kind {
                                    CheckKind::SquareX => sqx_meas = Some(t),
                                    CheckKind::SquareZ => sqz_meas = Some(t),
                                    _ => {}
                                }
                            }
                        }
                    }
                }
            }
            if sqx_meas != sqz_meas {
                failures.push(format!(
                    "square X measured at {sqx_meas:?} but square Z at {sqz_meas:?}; they must coincide"
                ));
            }
        }
    }

    // (a) noiseless extraction reproduces the commutation syndrome.
    let frames_checked = 200;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
    for trial in 0..frames_checked {
        let mut frame = PauliOperator::identity(spec.n);
        for q in 0..spec.n {
            if rng.random_bool(0.25) {
                frame.flip_x(q);
            }
            if rng.random_bool(0.25) {
                frame.flip_z(q);
            }
        }
        let measured = noiseless_syndrome(spec, schedule, &frame);
        let expected = spec.syndrome(&frame);
        if measured != expected {
            failures.push(format!("frame {trial}: measured syndrome deviates from commutation"));
        }
    }

    // (d) single-fault residuals stay local modulo stabilizer and gauge.
    let variants = enumerate_fault_variants(schedule);
    let fault_variants_checked = variants.len();
    for injection in &variants {
        let record = simulate_with_injection(spec, schedule, 1, *injection);
        let reduced = reduce_weight(spec, &record.final_data_error);
        let cluster_weight = max_cluster_weight(spec, &reduced);
        let limit = 2;
        if cluster_weight > limit {
            failures.push(format!(
                "fault at t{} op{} ({:?}) leaves per-cluster weight {cluster_weight}",
                injection.timestep, injection.op_index, injection.effect
            ));
        }
        if spec.family == CodeFamily::Toric && reduced.weight() > 2 {
            failures.push(format!(
                "fault at t{} op{} ({:?}) leaves weight {} on the torus",
                injection.timestep,
                injection.op_index,
                injection.effect,
                reduced.weight()
            ));
        }
    }

    ValidationReport {
        failures,
        frames_checked,
        fault_variants_checked,
    }
}
