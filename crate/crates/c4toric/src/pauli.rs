//! Binary-symplectic Pauli algebra.
//!
//! Operators are stored as packed X/Z bit words without phase tracking:
//! syndromes and failure judgments only ever consume commutation data, so
//! phases would be dead weight in the Monte Carlo kernel. Multiplication is
//! componentwise XOR, commutation is the symplectic form, and the only
//! Clifford needed by the syndrome-extraction schedules is CNOT conjugation.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PauliError {
    #[error("operator dimension mismatch: {0} qubits vs {1} qubits")]
    DimensionMismatch(usize, usize),
    #[error("qubit index {index} out of range for {n} qubits")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("CNOT control and target coincide (qubit {0})")]
    DegenerateCnot(usize),
    #[error("invalid Pauli character {0:?}")]
    InvalidCharacter(char),
}

/// Single-qubit Pauli, encoded as (x, z) bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }
}

const WORD_BITS: usize = 64;

fn words_for(n: usize) -> usize {
    n.div_ceil(WORD_BITS)
}

/// An n-qubit Pauli operator in binary-symplectic form (no phase).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliOperator {
    n: usize,
    x: Vec<u64>,
    z: Vec<u64>,
}

impl PauliOperator {
    pub fn identity(n: usize) -> Self {
        let w = words_for(n);
        PauliOperator {
            n,
            x: vec![0; w],
            z: vec![0; w],
        }
    }

    /// Builds an operator acting as `p` on each listed qubit.
    pub fn from_support(n: usize, pauli: Pauli, support: &[usize]) -> Self {
        let mut op = Self::identity(n);
        let (x, z) = pauli.bits();
        for &q in support {
            assert!(q < n, "qubit {q} out of range for {n} qubits");
            if x {
                op.flip_x(q);
            }
            if z {
                op.flip_z(q);
            }
        }
        op
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn is_identity(&self) -> bool {
        self.x.iter().all(|&w| w == 0) && self.z.iter().all(|&w| w == 0)
    }

    #[inline]
    pub fn x_bit(&self, q: usize) -> bool {
        debug_assert!(q < self.n);
        self.x[q / WORD_BITS] >> (q % WORD_BITS) & 1 == 1
    }

    #[inline]
    pub fn z_bit(&self, q: usize) -> bool {
        debug_assert!(q < self.n);
        self.z[q / WORD_BITS] >> (q % WORD_BITS) & 1 == 1
    }

    #[inline]
    pub fn flip_x(&mut self, q: usize) {
        debug_assert!(q < self.n);
        self.x[q / WORD_BITS] ^= 1 << (q % WORD_BITS);
    }

    #[inline]
    pub fn flip_z(&mut self, q: usize) {
        debug_assert!(q < self.n);
        self.z[q / WORD_BITS] ^= 1 << (q % WORD_BITS);
    }

    /// Clears both components on one qubit (used by state preparation).
    #[inline]
    pub fn clear_qubit(&mut self, q: usize) {
        debug_assert!(q < self.n);
        let mask = !(1u64 << (q % WORD_BITS));
        self.x[q / WORD_BITS] &= mask;
        self.z[q / WORD_BITS] &= mask;
    }

    #[inline]
    pub fn pauli_at(&self, q: usize) -> Pauli {
        Pauli::from_bits(self.x_bit(q), self.z_bit(q))
    }

    #[inline]
    pub fn apply_pauli(&mut self, q: usize, p: Pauli) {
        let (x, z) = p.bits();
        if x {
            self.flip_x(q);
        }
        if z {
            self.flip_z(q);
        }
    }

    /// Number of qubits on which the operator acts non-trivially.
    pub fn weight(&self) -> usize {
        self.x
            .iter()
            .zip(&self.z)
            .map(|(&a, &b)| (a | b).count_ones() as usize)
            .sum()
    }

    /// Qubits with a non-identity component, ascending.
    pub fn support(&self) -> Vec<usize> {
        (0..self.n)
            .filter(|&q| self.x_bit(q) || self.z_bit(q))
            .collect()
    }

    /// In-place phaseless product (componentwise XOR). Panics on length
    /// mismatch; the checked route is [`multiply`].
    pub fn mul_assign(&mut self, rhs: &PauliOperator) {
        assert_eq!(self.n, rhs.n, "operator dimension mismatch");
        for (a, b) in self.x.iter_mut().zip(&rhs.x) {
            *a ^= b;
        }
        for (a, b) in self.z.iter_mut().zip(&rhs.z) {
            *a ^= b;
        }
    }

    /// Symplectic product: 0 if the operators commute, 1 if they anticommute.
    pub fn symplectic(&self, rhs: &PauliOperator) -> Result<u8, PauliError> {
        if self.n != rhs.n {
            return Err(PauliError::DimensionMismatch(self.n, rhs.n));
        }
        let mut acc = 0u32;
        for i in 0..self.x.len() {
            acc ^= (self.x[i] & rhs.z[i]).count_ones();
            acc ^= (self.z[i] & rhs.x[i]).count_ones();
        }
        Ok((acc & 1) as u8)
    }

    /// Conjugates in place by CNOT(control, target): X on the control copies
    /// to the target, Z on the target copies to the control.
    #[inline]
    pub fn cnot(&mut self, control: usize, target: usize) {
        debug_assert!(control != target);
        if self.x_bit(control) {
            self.flip_x(target);
        }
        if self.z_bit(target) {
            self.flip_z(control);
        }
    }

    /// Restriction to the first `m` qubits.
    pub fn truncated(&self, m: usize) -> PauliOperator {
        assert!(m <= self.n);
        let mut out = PauliOperator::identity(m);
        for q in 0..m {
            if self.x_bit(q) {
                out.flip_x(q);
            }
            if self.z_bit(q) {
                out.flip_z(q);
            }
        }
        out
    }

    /// The (x_bits ∥ z_bits) row used by GF(2) elimination.
    fn symplectic_row(&self) -> Vec<u64> {
        let mut row = Vec::with_capacity(2 * self.x.len());
        row.extend_from_slice(&self.x);
        row.extend_from_slice(&self.z);
        row
    }
}

/// Phaseless group product of two operators of equal length.
pub fn multiply(a: &PauliOperator, b: &PauliOperator) -> Result<PauliOperator, PauliError> {
    if a.n != b.n {
        return Err(PauliError::DimensionMismatch(a.n, b.n));
    }
    let mut out = a.clone();
    out.mul_assign(b);
    Ok(out)
}

/// True iff the two operators commute.
pub fn commutes(a: &PauliOperator, b: &PauliOperator) -> Result<bool, PauliError> {
    Ok(a.symplectic(b)? == 0)
}

/// Conjugation of `p` by CNOT(control, target), as a new operator.
pub fn conjugate_by_cnot(
    p: &PauliOperator,
    control: usize,
    target: usize,
) -> Result<PauliOperator, PauliError> {
    let n = p.num_qubits();
    if control >= n {
        return Err(PauliError::IndexOutOfRange { index: control, n });
    }
    if target >= n {
        return Err(PauliError::IndexOutOfRange { index: target, n });
    }
    if control == target {
        return Err(PauliError::DegenerateCnot(control));
    }
    let mut out = p.clone();
    out.cnot(control, target);
    Ok(out)
}

/// Rank over GF(2) of the binary-symplectic matrix whose rows are the given
/// operators. An empty list has rank 0.
pub fn gf2_rank(ops: &[PauliOperator]) -> usize {
    if ops.is_empty() {
        return 0;
    }
    let n = ops[0].n;
    assert!(
        ops.iter().all(|op| op.n == n),
        "rank of mixed-dimension operators"
    );
    let mut rows: Vec<Vec<u64>> = ops.iter().map(|op| op.symplectic_row()).collect();
    let words = rows[0].len();
    let mut rank = 0;
    for col in 0..(words * WORD_BITS) {
        let (w, b) = (col / WORD_BITS, col % WORD_BITS);
        let Some(pivot) = (rank..rows.len()).find(|&r| rows[r][w] >> b & 1 == 1) else {
            continue;
        };
        rows.swap(rank, pivot);
        let pivot_row = rows[rank].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != rank && row[w] >> b & 1 == 1 {
                for (a, p) in row.iter_mut().zip(&pivot_row) {
                    *a ^= p;
                }
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}

/// True iff `op` lies in the GF(2) row space spanned by `basis`.
pub fn in_span(basis: &[PauliOperator], op: &PauliOperator) -> bool {
    let mut with: Vec<PauliOperator> = basis.to_vec();
    with.push(op.clone());
    gf2_rank(&with) == gf2_rank(basis)
}

impl fmt::Display for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.n {
            let c = match self.pauli_at(q) {
                Pauli::I => 'I',
                Pauli::X => 'X',
                Pauli::Y => 'Y',
                Pauli::Z => 'Z',
            };
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliOperator({self})")
    }
}

impl FromStr for PauliOperator {
    type Err = PauliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut op = PauliOperator::identity(s.chars().count());
        for (q, c) in s.chars().enumerate() {
            let p = match c {
                'I' | 'i' => Pauli::I,
                'X' | 'x' => Pauli::X,
                'Y' | 'y' => Pauli::Y,
                'Z' | 'z' => Pauli::Z,
                other => return Err(PauliError::InvalidCharacter(other)),
            };
            op.apply_pauli(q, p);
        }
        Ok(op)
    }
}

impl serde::Serialize for PauliOperator {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for PauliOperator {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn op(s: &str) -> PauliOperator {
        s.parse().unwrap()
    }

    #[test]
    fn multiply_self_inverse() {
        assert_eq!(multiply(&op("XIXI"), &op("XIXI")).unwrap(), op("IIII"));
    }

    #[test]
    fn multiply_componentwise() {
        assert_eq!(multiply(&op("XXXX"), &op("ZZZZ")).unwrap(), op("YYYY"));
        assert_eq!(multiply(&op("IZIZ"), &op("ZZII")).unwrap(), op("ZIIZ"));
    }

    #[test]
    fn multiply_dimension_error() {
        assert_eq!(
            multiply(&op("XX"), &op("XXX")).unwrap_err(),
            PauliError::DimensionMismatch(2, 3)
        );
    }

    #[test]
    fn commutation_examples() {
        // even anticommuting overlap
        assert!(commutes(&op("XXXX"), &op("ZZZZ")).unwrap());
        // disjoint support
        assert!(commutes(&op("XIXI"), &op("IZIZ")).unwrap());
        // single anticommuting position, evaluated by hand:
        // q2: X vs I, q3: X vs Z (anticommute), q1: I vs Z -> one odd position
        assert!(!commutes(&op("IIXX"), &op("IZIZ")).unwrap());
    }

    #[test]
    fn cnot_propagation() {
        assert_eq!(conjugate_by_cnot(&op("XI"), 0, 1).unwrap(), op("XX"));
        assert_eq!(conjugate_by_cnot(&op("IZ"), 0, 1).unwrap(), op("ZZ"));
        assert_eq!(conjugate_by_cnot(&op("ZX"), 0, 1).unwrap(), op("ZX"));
    }

    #[test]
    fn cnot_errors() {
        assert!(matches!(
            conjugate_by_cnot(&op("XI"), 0, 2),
            Err(PauliError::IndexOutOfRange { index: 2, n: 2 })
        ));
        assert!(matches!(
            conjugate_by_cnot(&op("XI"), 1, 1),
            Err(PauliError::DegenerateCnot(1))
        ));
    }

    #[test]
    fn rank_examples() {
        assert_eq!(gf2_rank(&[op("XXXX"), op("ZZZZ")]), 2);
        assert_eq!(gf2_rank(&[op("XIXI"), op("IXIX"), op("XXXX")]), 2);
        assert_eq!(gf2_rank(&[]), 0);
    }

    #[test]
    fn weight_counts_nonidentity_positions() {
        assert_eq!(op("IIII").weight(), 0);
        assert_eq!(op("XYZI").weight(), 3);
        assert_eq!(op("XYZI").support(), vec![0, 1, 2]);
    }

    #[test]
    fn display_round_trip() {
        let s = "IXYZZYXI";
        assert_eq!(op(s).to_string(), s);
    }

    #[test]
    fn wide_operators_cross_word_boundaries() {
        let n = 131;
        let mut a = PauliOperator::identity(n);
        a.flip_x(0);
        a.flip_x(64);
        a.flip_z(130);
        assert_eq!(a.weight(), 3);
        let mut b = PauliOperator::identity(n);
        b.flip_z(64);
        assert!(!commutes(&a, &b).unwrap());
    }

    fn arb_pauli_op(n: usize) -> impl Strategy<Value = PauliOperator> {
        proptest::collection::vec(0u8..4, n).prop_map(move |ps| {
            let mut op = PauliOperator::identity(n);
            for (q, &p) in ps.iter().enumerate() {
                op.apply_pauli(
                    q,
                    match p {
                        0 => Pauli::I,
                        1 => Pauli::X,
                        2 => Pauli::Y,
                        _ => Pauli::Z,
                    },
                );
            }
            op
        })
    }

    proptest! {
        #[test]
        fn prop_self_inverse(a in arb_pauli_op(12)) {
            prop_assert!(multiply(&a, &a).unwrap().is_identity());
        }

        #[test]
        fn prop_commutative_associative(
            a in arb_pauli_op(9), b in arb_pauli_op(9), c in arb_pauli_op(9)
        ) {
            prop_assert_eq!(
                multiply(&a, &b).unwrap(),
                multiply(&b, &a).unwrap()
            );
            prop_assert_eq!(
                multiply(&multiply(&a, &b).unwrap(), &c).unwrap(),
                multiply(&a, &multiply(&b, &c).unwrap()).unwrap()
            );
        }

        #[test]
        fn prop_symplectic_symmetric_bilinear(
            a in arb_pauli_op(10), b in arb_pauli_op(10), c in arb_pauli_op(10)
        ) {
            prop_assert_eq!(a.symplectic(&b).unwrap(), b.symplectic(&a).unwrap());
            // sympl(a, bc) = sympl(a, b) + sympl(a, c) mod 2
            let bc = multiply(&b, &c).unwrap();
            prop_assert_eq!(
                a.symplectic(&bc).unwrap(),
                a.symplectic(&b).unwrap() ^ a.symplectic(&c).unwrap()
            );
        }

        #[test]
        fn prop_cnot_involution(a in arb_pauli_op(8), c in 0usize..8, t in 0usize..8) {
            prop_assume!(c != t);
            let once = conjugate_by_cnot(&a, c, t).unwrap();
            let twice = conjugate_by_cnot(&once, c, t).unwrap();
            prop_assert_eq!(twice, a);
        }

        #[test]
        fn prop_rank_stable_under_products(
            ops in proptest::collection::vec(arb_pauli_op(8), 1..6),
            mask in proptest::collection::vec(any::<bool>(), 6)
        ) {
            let mut prod = PauliOperator::identity(8);
            for (op, &take) in ops.iter().zip(&mask) {
                if take {
                    prod.mul_assign(op);
                }
            }
            let base = gf2_rank(&ops);
            let mut extended = ops.clone();
            extended.push(prod);
            prop_assert_eq!(gf2_rank(&extended), base);
        }
    }
}
