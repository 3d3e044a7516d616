//! Construction of toric and C4-toric code instances.
//!
//! The toric code lives on an `l`-by-`l` periodic square lattice with one
//! qubit per edge, plaquette Z⁴ checks and star X⁴ checks. The C4-toric code
//! replaces every edge qubit with a four-qubit cluster carrying the C4 checks
//! XXXX and ZZZZ; the toric checks, rewritten through C4 logical operators,
//! become weight-8 octagon checks on the square-octagon lattice. One C4
//! logical qubit per cluster is left as a gauge qubit whose weight-2 XX and
//! ZZ logicals are treated as harmless.
//!
//! Geometry conventions (fixed once, verified by `verify_code`):
//!
//! * Vertices `(i, j)` with `i, j` in `0..l`; horizontal edge `h(i,j)` runs
//!   from `(i,j)` to `(i+1,j)`, vertical edge `v(i,j)` from `(i,j)` to
//!   `(i,j+1)`. Face `f(i,j)` has `h(i,j)` as its bottom boundary and
//!   `v(i,j)` as its left boundary.
//! * Cluster corners are numbered 0 = NW, 1 = NE, 2 = SW, 3 = SE, so the
//!   sides are top `{0,1}`, bottom `{2,3}`, left `{0,2}`, right `{1,3}`.
//! * The used C4 logical Z lies on the side parallel to the underlying toric
//!   edge: top for horizontal clusters, right for vertical clusters. The
//!   complementary pair (X on top / Z on right for horizontal clusters,
//!   X on left / Z on bottom for vertical ones) generates the gauge group.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::pauli::{self, gf2_rank, Pauli, PauliOperator};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodeError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("search budget exceeded: {0}")]
    BudgetExceeded(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodeFamily {
    Toric,
    C4Toric,
}

impl fmt::Display for CodeFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CodeFamily::Toric => write!(f, "toric"),
            CodeFamily::C4Toric => write!(f, "c4_toric"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum CheckKind {
    SquareX,
    SquareZ,
    OctagonX,
    OctagonZ,
    ToricStar,
    ToricPlaquette,
}

impl CheckKind {
    /// The Pauli error type this check detects: Z-type checks flag X errors
    /// and vice versa.
    pub fn detects(self) -> Pauli {
        match self {
            CheckKind::SquareZ | CheckKind::OctagonZ | CheckKind::ToricPlaquette => Pauli::X,
            CheckKind::SquareX | CheckKind::OctagonX | CheckKind::ToricStar => Pauli::Z,
        }
    }

    pub fn is_square(self) -> bool {
        matches!(self, CheckKind::SquareX | CheckKind::SquareZ)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Orientation {
    Horizontal,
    Vertical,
}

/// Spatial coordinate of a check on the underlying toric lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SiteCoord {
    /// A plaquette of the toric lattice (hosts octagon Z / toric Z checks).
    Face { i: usize, j: usize },
    /// A vertex of the toric lattice (hosts octagon X / toric X checks).
    Vertex { i: usize, j: usize },
    /// A toric edge (hosts the square checks of its cluster).
    Edge {
        orientation: Orientation,
        i: usize,
        j: usize,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub op: PauliOperator,
    pub kind: CheckKind,
    pub coord: SiteCoord,
}

/// Cluster side, as a pair of corner indices.
type Side = [u8; 2];

const TOP: Side = [0, 1];
const BOTTOM: Side = [2, 3];
const LEFT: Side = [0, 2];
const RIGHT: Side = [1, 3];

/// A concrete code instance: qubit layout, checks, logical representatives,
/// gauge generators, and the geometry the decoder metric consumes.
#[derive(Debug, Clone, Serialize)]
pub struct CodeSpec {
    pub family: CodeFamily,
    pub l: usize,
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub checks: Vec<Check>,
    /// Logical representatives in the order X̄₁, X̄₂, Z̄₁, Z̄₂; the pairing is
    /// canonical: X̄ᵢ anticommutes with Z̄ᵢ only.
    pub logicals: [PauliOperator; 4],
    /// Empty for the plain toric code. For the C4-toric code, two
    /// anticommuting weight-2 generators per cluster (XX then ZZ).
    pub gauge_generators: Vec<PauliOperator>,
    /// Toric edge id owning each qubit (the qubit id itself for the toric
    /// family).
    pub qubit_cluster: Vec<usize>,
    /// Corner of the qubit within its cluster (always 0 for the toric
    /// family).
    pub qubit_corner: Vec<u8>,
}

impl CodeSpec {
    pub fn num_checks(&self) -> usize {
        self.checks.len()
    }

    /// Number of toric edges, i.e. clusters.
    pub fn num_edges(&self) -> usize {
        2 * self.l * self.l
    }

    pub fn edge_id(&self, orientation: Orientation, i: usize, j: usize) -> usize {
        let l = self.l;
        match orientation {
            Orientation::Horizontal => j * l + i,
            Orientation::Vertical => l * l + j * l + i,
        }
    }

    pub fn edge_coord(&self, edge: usize) -> (Orientation, usize, usize) {
        let l = self.l;
        if edge < l * l {
            (Orientation::Horizontal, edge % l, edge / l)
        } else {
            let e = edge - l * l;
            (Orientation::Vertical, e % l, e / l)
        }
    }

    /// Syndrome of an error: one bit per check, set where the error
    /// anticommutes with the check.
    pub fn syndrome(&self, error: &PauliOperator) -> Vec<bool> {
        self.checks
            .iter()
            .map(|c| error.symplectic(&c.op).expect("dimension checked") == 1)
            .collect()
    }

    pub fn syndrome_is_trivial(&self, error: &PauliOperator) -> bool {
        self.checks
            .iter()
            .all(|c| error.symplectic(&c.op).expect("dimension checked") == 0)
    }

    /// JSON document with the qubit count, check list (Pauli strings plus
    /// coordinates), logicals and gauge counts; used by golden-file tests.
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "family": self.family,
            "l": self.l,
            "n": self.n,
            "k": self.k,
            "d": self.d,
            "checks": self.checks.iter().map(|c| serde_json::json!({
                "pauli": c.op.to_string(),
                "kind": c.kind,
                "coord": c.coord,
            })).collect::<Vec<_>>(),
            "logicals": self.logicals.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
            "gauge_generators": self.gauge_generators.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
        })
    }
}

fn check_lattice_size(l: usize) -> Result<(), CodeError> {
    if l < 2 {
        return Err(CodeError::InvalidParameter(format!(
            "lattice size l must be at least 2, got {l}"
        )));
    }
    Ok(())
}

/// Plain toric code on an `l`-by-`l` periodic lattice: a ⟦2l², 2, l⟧ code.
pub fn build_toric(l: usize) -> Result<CodeSpec, CodeError> {
    check_lattice_size(l)?;
    let n = 2 * l * l;
    let h = |i: usize, j: usize| (j % l) * l + (i % l);
    let v = |i: usize, j: usize| l * l + (j % l) * l + (i % l);

    let mut checks = Vec::with_capacity(2 * l * l);
    for j in 0..l {
        for i in 0..l {
            let support = [h(i, j), h(i, j + 1), v(i, j), v(i + 1, j)];
            checks.push(Check {
                op: PauliOperator::from_support(n, Pauli::Z, &support),
                kind: CheckKind::ToricPlaquette,
                coord: SiteCoord::Face { i, j },
            });
        }
    }
    for j in 0..l {
        for i in 0..l {
            let support = [h(i, j), h(i + l - 1, j), v(i, j), v(i, j + l - 1)];
            checks.push(Check {
                op: PauliOperator::from_support(n, Pauli::X, &support),
                kind: CheckKind::ToricStar,
                coord: SiteCoord::Vertex { i, j },
            });
        }
    }

    let x1 = PauliOperator::from_support(n, Pauli::X, &(0..l).map(|i| v(i, 0)).collect::<Vec<_>>());
    let x2 = PauliOperator::from_support(n, Pauli::X, &(0..l).map(|j| h(0, j)).collect::<Vec<_>>());
    let z1 = PauliOperator::from_support(n, Pauli::Z, &(0..l).map(|j| v(0, j)).collect::<Vec<_>>());
    let z2 = PauliOperator::from_support(n, Pauli::Z, &(0..l).map(|i| h(i, 0)).collect::<Vec<_>>());

    Ok(CodeSpec {
        family: CodeFamily::Toric,
        l,
        n,
        k: 2,
        d: l,
        checks,
        logicals: [x1, x2, z1, z2],
        gauge_generators: Vec::new(),
        qubit_cluster: (0..n).collect(),
        qubit_corner: vec![0; n],
    })
}

/// The side of a cluster hosting the used logical Z (parallel to the
/// underlying toric edge).
fn used_z_side(orientation: Orientation) -> Side {
    match orientation {
        Orientation::Horizontal => TOP,
        Orientation::Vertical => RIGHT,
    }
}

/// The side hosting the used logical X (anticommutes with the used Z side).
fn used_x_side(orientation: Orientation) -> Side {
    match orientation {
        Orientation::Horizontal => LEFT,
        Orientation::Vertical => TOP,
    }
}

fn gauge_x_side(orientation: Orientation) -> Side {
    match orientation {
        Orientation::Horizontal => TOP,
        Orientation::Vertical => LEFT,
    }
}

fn gauge_z_side(orientation: Orientation) -> Side {
    match orientation {
        Orientation::Horizontal => RIGHT,
        Orientation::Vertical => BOTTOM,
    }
}

/// C4-concatenated toric code: a ⟦8l², 2, 2l⟧ code with 2l² gauge qubits.
pub fn build_c4_toric(l: usize) -> Result<CodeSpec, CodeError> {
    check_lattice_size(l)?;
    let n = 8 * l * l;
    let h = |i: usize, j: usize| (j % l) * l + (i % l);
    let v = |i: usize, j: usize| l * l + (j % l) * l + (i % l);
    let qubits = |cluster: usize, side: Side| [4 * cluster + side[0] as usize, 4 * cluster + side[1] as usize];

    let side_support = |acc: &mut Vec<usize>, cluster: usize, side: Side| {
        acc.extend_from_slice(&qubits(cluster, side));
    };

    let mut checks = Vec::new();
    // Square checks, cluster by cluster: X first so that check ids 0..2l²
    // are the SquareX family and 2l²..4l² the SquareZ family.
    for e in 0..2 * l * l {
        checks.push(Check {
            op: PauliOperator::from_support(n, Pauli::X, &[4 * e, 4 * e + 1, 4 * e + 2, 4 * e + 3]),
            kind: CheckKind::SquareX,
            coord: edge_site(l, e),
        });
    }
    for e in 0..2 * l * l {
        checks.push(Check {
            op: PauliOperator::from_support(n, Pauli::Z, &[4 * e, 4 * e + 1, 4 * e + 2, 4 * e + 3]),
            kind: CheckKind::SquareZ,
            coord: edge_site(l, e),
        });
    }
    // Octagon X checks at vertices: the four cluster sides facing the star.
    for j in 0..l {
        for i in 0..l {
            let mut support = Vec::with_capacity(8);
            side_support(&mut support, h(i, j), LEFT);
            side_support(&mut support, h(i + l - 1, j), RIGHT);
            side_support(&mut support, v(i, j), BOTTOM);
            side_support(&mut support, v(i, j + l - 1), TOP);
            checks.push(Check {
                op: PauliOperator::from_support(n, Pauli::X, &support),
                kind: CheckKind::OctagonX,
                coord: SiteCoord::Vertex { i, j },
            });
        }
    }
    // Octagon Z checks at faces: the four cluster sides facing the plaquette.
    for j in 0..l {
        for i in 0..l {
            let mut support = Vec::with_capacity(8);
            side_support(&mut support, h(i, j), TOP);
            side_support(&mut support, h(i, j + 1), BOTTOM);
            side_support(&mut support, v(i, j), RIGHT);
            side_support(&mut support, v(i + 1, j), LEFT);
            checks.push(Check {
                op: PauliOperator::from_support(n, Pauli::Z, &support),
                kind: CheckKind::OctagonZ,
                coord: SiteCoord::Face { i, j },
            });
        }
    }

    // Gauge generators: the unused C4 logical pair of each cluster.
    let mut gauge_generators = Vec::with_capacity(4 * l * l);
    for e in 0..2 * l * l {
        let orientation = if e < l * l {
            Orientation::Horizontal
        } else {
            Orientation::Vertical
        };
        gauge_generators.push(PauliOperator::from_support(
            n,
            Pauli::X,
            &qubits(e, gauge_x_side(orientation)),
        ));
        gauge_generators.push(PauliOperator::from_support(
            n,
            Pauli::Z,
            &qubits(e, gauge_z_side(orientation)),
        ));
    }

    // Logical representatives: the toric cycles lifted through the used C4
    // logical of each cluster along the cycle. Weight 2l each.
    let lift = |paulis: Pauli, edges: Vec<usize>, side_of: fn(Orientation) -> Side| {
        let mut support = Vec::with_capacity(2 * edges.len());
        for e in &edges {
            let orientation = if *e < l * l {
                Orientation::Horizontal
            } else {
                Orientation::Vertical
            };
            support.extend_from_slice(&qubits(*e, side_of(orientation)));
        }
        PauliOperator::from_support(n, paulis, &support)
    };
    let x1 = lift(Pauli::X, (0..l).map(|i| v(i, 0)).collect(), used_x_side);
    let x2 = lift(Pauli::X, (0..l).map(|j| h(0, j)).collect(), used_x_side);
    let z1 = lift(Pauli::Z, (0..l).map(|j| v(0, j)).collect(), used_z_side);
    let z2 = lift(Pauli::Z, (0..l).map(|i| h(i, 0)).collect(), used_z_side);

    let mut qubit_cluster = Vec::with_capacity(n);
    let mut qubit_corner = Vec::with_capacity(n);
    for e in 0..2 * l * l {
        for corner in 0..4u8 {
            qubit_cluster.push(e);
            qubit_corner.push(corner);
        }
    }

    Ok(CodeSpec {
        family: CodeFamily::C4Toric,
        l,
        n,
        k: 2,
        d: 2 * l,
        checks,
        logicals: [x1, x2, z1, z2],
        gauge_generators,
        qubit_cluster,
        qubit_corner,
    })
}

fn edge_site(l: usize, edge: usize) -> SiteCoord {
    if edge < l * l {
        SiteCoord::Edge {
            orientation: Orientation::Horizontal,
            i: edge % l,
            j: edge / l,
        }
    } else {
        let e = edge - l * l;
        SiteCoord::Edge {
            orientation: Orientation::Vertical,
            i: e % l,
            j: e / l,
        }
    }
}

/// Outcome of structural verification of a [`CodeSpec`].
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub violations: Vec<String>,
    pub counts: BTreeMap<CheckKind, usize>,
    pub rank: usize,
    pub derived_k: i64,
    /// pairing[i][j] set iff X̄ᵢ anticommutes with Z̄ⱼ.
    pub pairing: [[bool; 2]; 2],
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Verifies commutation structure, check counts, rank and logical pairing.
/// Failures are reported, not raised.
pub fn verify_code(spec: &CodeSpec) -> VerificationReport {
    let mut violations = Vec::new();
    let commute = |a: &PauliOperator, b: &PauliOperator| a.symplectic(b).expect("same n") == 0;

    for (i, a) in spec.checks.iter().enumerate() {
        for (j, b) in spec.checks.iter().enumerate().skip(i + 1) {
            if !commute(&a.op, &b.op) {
                violations.push(format!("checks {i} and {j} anticommute"));
            }
        }
    }
    for (i, logical) in spec.logicals.iter().enumerate() {
        for (j, c) in spec.checks.iter().enumerate() {
            if !commute(logical, &c.op) {
                violations.push(format!("logical {i} anticommutes with check {j}"));
            }
        }
    }
    for (g, gauge) in spec.gauge_generators.iter().enumerate() {
        for (j, c) in spec.checks.iter().enumerate() {
            if !commute(gauge, &c.op) {
                violations.push(format!("gauge generator {g} anticommutes with check {j}"));
            }
        }
        for (i, logical) in spec.logicals.iter().enumerate() {
            if !commute(gauge, logical) {
                violations.push(format!("gauge generator {g} anticommutes with logical {i}"));
            }
        }
    }
    // Gauge generators must anticommute exactly with their cluster partner.
    for (a, ga) in spec.gauge_generators.iter().enumerate() {
        for (b, gb) in spec.gauge_generators.iter().enumerate().skip(a + 1) {
            let paired = a / 2 == b / 2;
            if commute(ga, gb) == paired {
                violations.push(format!(
                    "gauge generators {a} and {b} {} unexpectedly",
                    if paired { "commute" } else { "anticommute" }
                ));
            }
        }
    }

    let mut counts = BTreeMap::new();
    for c in &spec.checks {
        *counts.entry(c.kind).or_insert(0usize) += 1;
    }
    let l2 = spec.l * spec.l;
    let expected: &[(CheckKind, usize)] = match spec.family {
        CodeFamily::Toric => &[(CheckKind::ToricPlaquette, l2), (CheckKind::ToricStar, l2)],
        CodeFamily::C4Toric => &[
            (CheckKind::SquareX, 2 * l2),
            (CheckKind::SquareZ, 2 * l2),
            (CheckKind::OctagonX, l2),
            (CheckKind::OctagonZ, l2),
        ],
    };
    for &(kind, want) in expected {
        let got = counts.get(&kind).copied().unwrap_or(0);
        if got != want {
            violations.push(format!("{kind:?} count {got}, expected {want}"));
        }
    }

    let ops: Vec<PauliOperator> = spec.checks.iter().map(|c| c.op.clone()).collect();
    let rank = gf2_rank(&ops);
    if rank != spec.checks.len() - 2 {
        violations.push(format!(
            "check rank {rank}, expected {} (two global dependencies)",
            spec.checks.len() - 2
        ));
    }
    let gauge_qubits = spec.gauge_generators.len() / 2;
    let derived_k = spec.n as i64 - rank as i64 - gauge_qubits as i64;
    if derived_k != spec.k as i64 {
        violations.push(format!("derived k {derived_k}, expected {}", spec.k));
    }

    let mut pairing = [[false; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            pairing[i][j] = !commute(&spec.logicals[i], &spec.logicals[2 + j]);
        }
        if pairing[i] != [i == 0, i == 1] {
            violations.push(format!(
                "logical X̄{} pairs as {:?}, expected canonical pairing",
                i + 1,
                pairing[i]
            ));
        }
    }

    VerificationReport {
        violations,
        counts,
        rank,
        derived_k,
        pairing,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MinWeightSearch {
    Found(usize),
    NotFound,
}

/// Brute-force minimum weight of a logical operator: the smallest support on
/// which a pure-X (or pure-Z) operator commutes with every opposite-type
/// check yet anticommutes with some logical representative. Gauge operators
/// never qualify since they commute with all four representatives.
pub fn min_logical_weight(spec: &CodeSpec, w_max: usize) -> Result<MinWeightSearch, CodeError> {
    const BUDGET: u128 = 50_000_000;
    let mut total: u128 = 0;
    let mut binom: u128 = 1;
    for w in 1..=w_max {
        binom = binom
            .saturating_mul(spec.n as u128 - w as u128 + 1)
            .saturating_div(w as u128);
        total = total.saturating_add(binom);
        if total > BUDGET {
            return Err(CodeError::BudgetExceeded(format!(
                "enumerating supports of weight <= {w_max} on {} qubits exceeds budget {BUDGET}",
                spec.n
            )));
        }
    }

    for w in 1..=w_max {
        for &error_type in &[Pauli::X, Pauli::Z] {
            // Signature per qubit: anticommutation bits against every
            // opposite-type check, plus the four logical representatives in
            // the top bits. A support is a logical iff the XOR of its
            // signatures has no check bit set and at least one logical bit.
            let opposite: Vec<&PauliOperator> = spec
                .checks
                .iter()
                .filter(|c| c.kind.detects() == error_type)
                .map(|c| &c.op)
                .collect();
            let words = (opposite.len() + 4).div_ceil(64);
            let single = |q: usize| {
                PauliOperator::from_support(spec.n, error_type, &[q])
            };
            let signatures: Vec<Vec<u64>> = (0..spec.n)
                .map(|q| {
                    let s = single(q);
                    let mut sig = vec![0u64; words];
                    for (c, check) in opposite.iter().enumerate() {
                        if s.symplectic(check).unwrap() == 1 {
                            sig[c / 64] |= 1 << (c % 64);
                        }
                    }
                    for (k, logical) in spec.logicals.iter().enumerate() {
                        let bit = opposite.len() + k;
                        if s.symplectic(logical).unwrap() == 1 {
                            sig[bit / 64] |= 1 << (bit % 64);
                        }
                    }
                    sig
                })
                .collect();
            let mut logical_mask = vec![0u64; words];
            for k in 0..4 {
                let bit = opposite.len() + k;
                logical_mask[bit / 64] |= 1 << (bit % 64);
            }
            let check_mask: Vec<u64> = logical_mask.iter().map(|m| !m).collect();

            if search_supports(&signatures, &check_mask, &logical_mask, spec.n, w) {
                return Ok(MinWeightSearch::Found(w));
            }
        }
    }
    Ok(MinWeightSearch::NotFound)
}

/// Depth-first enumeration of weight-`w` supports, XOR-accumulating
/// signatures; true if some support is syndrome-free and flips a logical.
fn search_supports(
    signatures: &[Vec<u64>],
    check_mask: &[u64],
    logical_mask: &[u64],
    n: usize,
    w: usize,
) -> bool {
    fn recurse(
        signatures: &[Vec<u64>],
        check_mask: &[u64],
        logical_mask: &[u64],
        acc: &mut Vec<u64>,
        start: usize,
        remaining: usize,
        n: usize,
    ) -> bool {
        if remaining == 0 {
            let trivial_syndrome = acc
                .iter()
                .zip(check_mask)
                .all(|(a, m)| a & m == 0);
            let flips_logical = acc
                .iter()
                .zip(logical_mask)
                .any(|(a, m)| a & m != 0);
            return trivial_syndrome && flips_logical;
        }
        for q in start..=(n - remaining) {
            for (a, s) in acc.iter_mut().zip(&signatures[q]) {
                *a ^= s;
            }
            if recurse(signatures, check_mask, logical_mask, acc, q + 1, remaining - 1, n) {
                return true;
            }
            for (a, s) in acc.iter_mut().zip(&signatures[q]) {
                *a ^= s;
            }
        }
        false
    }
    let mut acc = vec![0u64; check_mask.len()];
    recurse(signatures, check_mask, logical_mask, &mut acc, 0, w, n)
}

/// Generators of the stabilizer-plus-gauge row space, used for membership
/// cross-checks of the failure judgment.
pub fn stabilizer_gauge_basis(spec: &CodeSpec) -> Vec<PauliOperator> {
    spec.checks
        .iter()
        .map(|c| c.op.clone())
        .chain(spec.gauge_generators.iter().cloned())
        .collect()
}

/// Membership test in the stabilizer·gauge group (GF(2) row-space test).
pub fn in_stabilizer_gauge_group(spec: &CodeSpec, op: &PauliOperator) -> bool {
    pauli::in_span(&stabilizer_gauge_basis(spec), op)
}
