//! Sparse exact operators on two and three tensor legs over the Laurent
//! ring in q.
//!
//! An operator is a finite sum `sum z e_{i j} (x) e_{k l} (...)` stored as
//! a map from the full multi-index to its coefficient. Multiplication
//! contracts matrix units legwise (e_{i j} e_{k l} = [j = k] e_{i l}), so a
//! sparse hash join on the contracted index tuple computes products without
//! materializing dense matrices. Keys are kept in a canonical order, which
//! makes equality, witnesses, and serialization deterministic.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::hash::Hash;

use num_traits::Zero;
use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::qlaurent::{ratio, QScalar, Rat};
use crate::r0::R0Matrix;
use crate::roots::{Idx, Root};
use crate::triples::BDTriple;

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum TensorError {
    #[error("ambient dimension mismatch: {0} vs {1}")]
    DimensionMismatch(Idx, Idx),
    #[error("entry at {0:?} lies outside the upper/lower/diagonal sectors")]
    SectorViolation(Vec<Idx>),
}

/// A full multi-index: row and column index per leg.
pub trait MultiIndex: Copy + Ord + Eq + Hash + fmt::Debug {
    type Half: Copy + Ord + Eq + Hash;
    const LEGS: usize;
    fn rows(&self) -> Self::Half;
    fn cols(&self) -> Self::Half;
    fn from_parts(rows: Self::Half, cols: Self::Half) -> Self;
    fn half_tuples(n: Idx) -> Vec<Self::Half>;
    fn as_indices(&self) -> Vec<Idx>;
}

impl MultiIndex for [Idx; 4] {
    type Half = [Idx; 2];
    const LEGS: usize = 2;
    fn rows(&self) -> [Idx; 2] {
        [self[0], self[2]]
    }
    fn cols(&self) -> [Idx; 2] {
        [self[1], self[3]]
    }
    fn from_parts(rows: [Idx; 2], cols: [Idx; 2]) -> Self {
        [rows[0], cols[0], rows[1], cols[1]]
    }
    fn half_tuples(n: Idx) -> Vec<[Idx; 2]> {
        let mut out = Vec::with_capacity((n as usize).pow(2));
        for i in 1..=n {
            for k in 1..=n {
                out.push([i, k]);
            }
        }
        out
    }
    fn as_indices(&self) -> Vec<Idx> {
        self.as_slice().to_vec()
    }
}

impl MultiIndex for [Idx; 6] {
    type Half = [Idx; 3];
    const LEGS: usize = 3;
    fn rows(&self) -> [Idx; 3] {
        [self[0], self[2], self[4]]
    }
    fn cols(&self) -> [Idx; 3] {
        [self[1], self[3], self[5]]
    }
    fn from_parts(rows: [Idx; 3], cols: [Idx; 3]) -> Self {
        [rows[0], cols[0], rows[1], cols[1], rows[2], cols[2]]
    }
    fn half_tuples(n: Idx) -> Vec<[Idx; 3]> {
        let mut out = Vec::with_capacity((n as usize).pow(3));
        for i in 1..=n {
            for k in 1..=n {
                for u in 1..=n {
                    out.push([i, k, u]);
                }
            }
        }
        out
    }
    fn as_indices(&self) -> Vec<Idx> {
        self.as_slice().to_vec()
    }
}

/// Sparse operator with QScalar coefficients.
#[derive(Clone, PartialEq, Eq)]
pub struct TensorOp<K: MultiIndex> {
    n: Idx,
    entries: BTreeMap<K, QScalar>,
}

pub type TensorOp2 = TensorOp<[Idx; 4]>;
pub type TensorOp3 = TensorOp<[Idx; 6]>;

impl<K: MultiIndex> TensorOp<K> {
    pub fn zero(n: Idx) -> Self {
        TensorOp { n, entries: BTreeMap::new() }
    }

    pub fn identity(n: Idx) -> Self {
        let mut entries = BTreeMap::new();
        for half in K::half_tuples(n) {
            entries.insert(K::from_parts(half, half), QScalar::one());
        }
        TensorOp { n, entries }
    }

    pub fn n(&self) -> Idx {
        self.n
    }

    pub fn num_entries(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &K) -> QScalar {
        self.entries.get(key).cloned().unwrap_or_else(QScalar::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, &QScalar)> {
        self.entries.iter()
    }

    pub fn insert_add(&mut self, key: K, value: QScalar) {
        if value.is_zero() {
            return;
        }
        let slot = self.entries.entry(key).or_insert_with(QScalar::zero);
        *slot += value;
        if slot.is_zero() {
            self.entries.remove(&key);
        }
    }

    pub fn add(&self, rhs: &Self) -> Result<Self, TensorError> {
        self.check_dim(rhs)?;
        let mut out = self.clone();
        for (k, v) in &rhs.entries {
            out.insert_add(*k, v.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self, TensorError> {
        self.check_dim(rhs)?;
        let mut out = self.clone();
        for (k, v) in &rhs.entries {
            out.insert_add(*k, -v.clone());
        }
        Ok(out)
    }

    pub fn neg(&self) -> Self {
        let entries = self.entries.iter().map(|(k, v)| (*k, -v.clone())).collect();
        TensorOp { n: self.n, entries }
    }

    pub fn scale(&self, s: &QScalar) -> Self {
        if s.is_zero() {
            return Self::zero(self.n);
        }
        let entries = self.entries.iter().map(|(k, v)| (*k, v * s)).collect();
        TensorOp { n: self.n, entries }
    }

    pub fn scale_rat(&self, s: &Rat) -> Self {
        self.scale(&QScalar::from_rat(s.clone()))
    }

    /// Legwise matrix-unit contraction.
    pub fn mul(&self, rhs: &Self) -> Result<Self, TensorError> {
        self.check_dim(rhs)?;
        let mut by_rows: HashMap<K::Half, Vec<(&K, &QScalar)>> = HashMap::new();
        for (k, v) in &rhs.entries {
            by_rows.entry(k.rows()).or_default().push((k, v));
        }
        let mut out = Self::zero(self.n);
        for (lk, lv) in &self.entries {
            if let Some(matches) = by_rows.get(&lk.cols()) {
                for (rk, rv) in matches {
                    out.insert_add(K::from_parts(lk.rows(), rk.cols()), lv * rv);
                }
            }
        }
        Ok(out)
    }

    /// Substitute q -> q^{-1} in every coefficient.
    pub fn subst_q_inverse(&self) -> Self {
        let entries = self.entries.iter().map(|(k, v)| (*k, v.subst_q_inverse())).collect();
        TensorOp { n: self.n, entries }
    }

    /// First differing multi-index under the canonical key order, with the
    /// residual coefficient.
    pub fn first_difference(&self, rhs: &Self) -> Option<(K, QScalar)> {
        let mut keys: Vec<&K> = self.entries.keys().chain(rhs.entries.keys()).collect();
        keys.sort();
        keys.dedup();
        for k in keys {
            let d = self.get(k) - rhs.get(k);
            if !d.is_zero() {
                return Some((*k, d));
            }
        }
        None
    }

    /// Per-leg weight of a multi-index: the sum over legs of e_row - e_col,
    /// in e-basis coordinates.
    pub fn key_weight(&self, key: &K) -> Vec<i64> {
        let mut w = vec![0i64; self.n as usize];
        let v = key.as_indices();
        for leg in 0..K::LEGS {
            w[v[2 * leg] as usize - 1] += 1;
            w[v[2 * leg + 1] as usize - 1] -= 1;
        }
        w
    }

    pub fn is_zero_weight(&self, key: &K) -> bool {
        self.key_weight(key).iter().all(|&x| x == 0)
    }

    fn check_dim(&self, rhs: &Self) -> Result<(), TensorError> {
        if self.n != rhs.n {
            Err(TensorError::DimensionMismatch(self.n, rhs.n))
        } else {
            Ok(())
        }
    }
}

impl<K: MultiIndex> fmt::Debug for TensorOp<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "TensorOp(n={}, {} entries)", self.n, self.entries.len())?;
        for (k, v) in &self.entries {
            writeln!(f, "  {:?}: {}", k.as_indices(), v)?;
        }
        Ok(())
    }
}

impl<K: MultiIndex> Serialize for TensorOp<K> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Record<'a> {
            row: Vec<Idx>,
            col: Vec<Idx>,
            coeff: &'a QScalar,
        }
        let mut seq = serializer.serialize_seq(Some(self.entries.len()))?;
        for (k, v) in &self.entries {
            let kv = k.as_indices();
            let row = (0..K::LEGS).map(|l| kv[2 * l]).collect();
            let col = (0..K::LEGS).map(|l| kv[2 * l + 1]).collect();
            seq.serialize_element(&Record { row, col, coeff: v })?;
        }
        seq.end()
    }
}

impl TensorOp2 {
    /// Swap the two legs.
    pub fn flip21(&self) -> Self {
        let entries = self
            .entries
            .iter()
            .map(|(k, v)| ([k[2], k[3], k[0], k[1]], v.clone()))
            .collect();
        TensorOp { n: self.n, entries }
    }

    /// Legwise transpose: e_{i j} (x) e_{k l} -> e_{j i} (x) e_{l k}.
    pub fn transpose_legs(&self) -> Self {
        let entries = self
            .entries
            .iter()
            .map(|(k, v)| ([k[1], k[0], k[3], k[2]], v.clone()))
            .collect();
        TensorOp { n: self.n, entries }
    }

    /// Embed into three legs, acting as the identity on the omitted leg.
    pub fn embed3(&self, legs: LegPair) -> TensorOp3 {
        let mut out = TensorOp3::zero(self.n);
        for (k, v) in &self.entries {
            for m in 1..=self.n {
                let key = match legs {
                    LegPair::L12 => [k[0], k[1], k[2], k[3], m, m],
                    LegPair::L13 => [k[0], k[1], m, m, k[2], k[3]],
                    LegPair::L23 => [m, m, k[0], k[1], k[2], k[3]],
                };
                out.insert_add(key, v.clone());
            }
        }
        out
    }

    /// Conjugation by q^{r^0}: since q^{r^0} acts diagonally with eigenvalue
    /// q^{c[a][b]} on e_a (x) e_b, the entry at e_{i j} (x) e_{k l} picks up
    /// q^{c[i][k] + c[j][l]}.
    pub fn conjugate_qr0(&self, r0: &R0Matrix) -> Self {
        assert_eq!(self.n, r0.n(), "ambient dimension mismatch");
        let mut out = Self::zero(self.n);
        for (k, v) in &self.entries {
            let e = r0.get(k[0], k[2]) + r0.get(k[1], k[3]);
            out.insert_add(*k, v * &QScalar::q_power(e));
        }
        out
    }

    /// Split into the upper (x) lower part plus half the diagonal part, and
    /// the lower (x) upper part plus the other half.
    ///
    /// Errors when an entry lies outside those three sectors.
    pub fn split_pm(&self) -> Result<(Self, Self), TensorError> {
        let mut plus = Self::zero(self.n);
        let mut minus = Self::zero(self.n);
        for (k, v) in &self.entries {
            let [i, j, kk, l] = *k;
            if i < j && kk > l {
                plus.insert_add(*k, v.clone());
            } else if i > j && kk < l {
                minus.insert_add(*k, v.clone());
            } else if i == j && kk == l {
                let half = v * &QScalar::from_rat(ratio(1, 2));
                plus.insert_add(*k, half.clone());
                minus.insert_add(*k, half);
            } else {
                return Err(TensorError::SectorViolation(k.as_indices()));
            }
        }
        Ok((plus, minus))
    }

    /// Coefficient of e_beta (x) e_{-alpha}.
    pub fn coeff_plus(&self, alpha: &Root, beta: &Root) -> QScalar {
        let (bi, bj) = beta.e_pos();
        let (aj, ai) = alpha.e_neg();
        self.get(&[bi, bj, aj, ai])
    }

    /// Coefficient of e_{-alpha} (x) e_beta.
    pub fn coeff_minus(&self, alpha: &Root, beta: &Root) -> QScalar {
        let (aj, ai) = alpha.e_neg();
        let (bi, bj) = beta.e_pos();
        self.get(&[aj, ai, bi, bj])
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum LegPair {
    L12,
    L13,
    L23,
}

/// The permutation operator P = sum e_{i j} (x) e_{j i}.
pub fn permutation_p(n: Idx) -> TensorOp2 {
    let mut out = TensorOp2::zero(n);
    for i in 1..=n {
        for j in 1..=n {
            out.insert_add([i, j, j, i], QScalar::one());
        }
    }
    out
}

/// The diagonal projection P^0 = sum e_{i i} (x) e_{i i}.
pub fn diag_p0(n: Idx) -> TensorOp2 {
    let mut out = TensorOp2::zero(n);
    for i in 1..=n {
        out.insert_add([i, i, i, i], QScalar::one());
    }
    out
}

/// The standard classical r-matrix
/// r_s = 1/2 sum_i e_{i i} (x) e_{i i} + sum_{alpha > 0} e_{-alpha} (x) e_alpha.
pub fn classical_r(n: Idx) -> TensorOp2 {
    let mut out = TensorOp2::zero(n);
    let half = QScalar::from_rat(ratio(1, 2));
    for i in 1..=n {
        out.insert_add([i, i, i, i], half.clone());
    }
    for alpha in Root::all_positive(n) {
        let (r1, c1) = alpha.e_neg();
        let (r2, c2) = alpha.e_pos();
        out.insert_add([r1, c1, r2, c2], QScalar::one());
    }
    out
}

/// The standard Drinfeld-Jimbo solution of the QYBE:
/// R_s = q sum_i e_{i i} (x) e_{i i} + sum_{i != j} e_{i i} (x) e_{j j}
///       + (q - q^{-1}) sum_{i > j} e_{i j} (x) e_{j i}.
pub fn quantum_r(n: Idx) -> TensorOp2 {
    let mut out = TensorOp2::zero(n);
    let q = QScalar::q_power(crate::qlaurent::rat(1));
    let qq = QScalar::q_minus_qinv();
    for i in 1..=n {
        for j in 1..=n {
            if i == j {
                out.insert_add([i, i, i, i], q.clone());
            } else {
                out.insert_add([i, i, j, j], QScalar::one());
            }
        }
    }
    for i in 1..=n {
        for j in 1..i {
            out.insert_add([i, j, j, i], qq.clone());
        }
    }
    out
}

/// The off-diagonal classical correction
/// a = sum_{alpha prec beta} sign(alpha, beta) e_{-alpha} ^ e_beta.
pub fn build_a(t: &BDTriple) -> TensorOp2 {
    let mut out = TensorOp2::zero(t.n());
    for p in t.x_pairs() {
        let sign = t.sign(&p.alpha, &p.beta).expect("x_pairs yields prec pairs");
        let s = QScalar::from_int(sign);
        let (ar, ac) = p.alpha.e_neg();
        let (br, bc) = p.beta.e_pos();
        out.insert_add([ar, ac, br, bc], s.clone());
        out.insert_add([br, bc, ar, ac], -s);
    }
    out
}

/// The classical r-matrix r = r^0 + a + r_s of a triple with continuous
/// datum r0.
pub fn classical_r_full(t: &BDTriple, r0: &R0Matrix) -> TensorOp2 {
    let n = t.n();
    let mut out = classical_r(n);
    for (k, v) in build_a(t).iter() {
        out.insert_add(*k, v.clone());
    }
    for i in 1..=n {
        for j in 1..=n {
            if i != j && !r0.get(i, j).is_zero() {
                out.insert_add([i, i, j, j], QScalar::from_rat(r0.get(i, j).clone()));
            }
        }
    }
    out
}

/// The CYBE bracket [r12, r13] + [r12, r23] + [r13, r23] on three legs.
pub fn cybe_bracket(r: &TensorOp2) -> TensorOp3 {
    let r12 = r.embed3(LegPair::L12);
    let r13 = r.embed3(LegPair::L13);
    let r23 = r.embed3(LegPair::L23);
    let comm = |a: &TensorOp3, b: &TensorOp3| {
        a.mul(b).unwrap().sub(&b.mul(a).unwrap()).unwrap()
    };
    comm(&r12, &r13)
        .add(&comm(&r12, &r23))
        .unwrap()
        .add(&comm(&r13, &r23))
        .unwrap()
}
