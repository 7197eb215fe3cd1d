//! The continuous datum r^0: an antisymmetric bilinear form on the diagonal
//! Cartan, solved exactly over Q from the per-root linear constraints
//!
//!   [(alpha - tau alpha) (x) 1] r^0 = 1/2 [(alpha + tau alpha) (x) 1] P^0
//!
//! for every alpha in Gamma_1, together with the space of symmetries of the
//! triple and the closed form for generalized Cremmer-Gervais triples.

use num_integer::Integer;
use num_traits::{One, Zero};
use serde::ser::SerializeSeq;
use serde::{Serialize, Serializer};

use crate::linalg::{nullspace, rank, solve_with_nullspace, span_equal};
use crate::qlaurent::{rat, ratio, Rat};
use crate::roots::Idx;
use crate::triples::{res_mod, BDTriple, TripleError};

/// r^0 = sum_{i,j} c[i][j] e_ii (x) e_jj with antisymmetric c.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct R0Matrix {
    n: Idx,
    c: Vec<Vec<Rat>>,
}

impl R0Matrix {
    pub fn zero(n: Idx) -> Self {
        R0Matrix { n, c: vec![vec![Rat::zero(); n as usize]; n as usize] }
    }

    /// Build from entries; enforces antisymmetry.
    pub fn from_entries(n: Idx, c: Vec<Vec<Rat>>) -> Self {
        let m = R0Matrix { n, c };
        assert!(m.is_antisymmetric(), "r^0 must be antisymmetric with zero diagonal");
        m
    }

    pub fn n(&self) -> Idx {
        self.n
    }

    /// Coefficient of e_ii (x) e_jj, 1-indexed.
    pub fn get(&self, i: Idx, j: Idx) -> &Rat {
        &self.c[i as usize - 1][j as usize - 1]
    }

    /// Set the coefficient of e_ii (x) e_jj and its antisymmetric partner.
    pub fn set(&mut self, i: Idx, j: Idx, v: Rat) {
        assert!(i != j, "diagonal entries of r^0 are zero");
        self.c[j as usize - 1][i as usize - 1] = -v.clone();
        self.c[i as usize - 1][j as usize - 1] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|row| row.iter().all(|v| v.is_zero()))
    }

    pub fn is_antisymmetric(&self) -> bool {
        let n = self.n as usize;
        (0..n).all(|i| {
            (0..n).all(|j| self.c[i][j] == -self.c[j][i].clone())
        })
    }

    /// Whether every row sums to zero, i.e. the form lives in the wedge
    /// square of the traceless diagonal subalgebra.
    pub fn has_zero_row_sums(&self) -> bool {
        self.c.iter().all(|row| row.iter().fold(Rat::zero(), |a, b| a + b).is_zero())
    }

    pub fn add(&self, other: &R0Matrix) -> R0Matrix {
        assert_eq!(self.n, other.n);
        let n = self.n as usize;
        let c = (0..n)
            .map(|i| (0..n).map(|j| &self.c[i][j] + &other.c[i][j]).collect())
            .collect();
        R0Matrix { n: self.n, c }
    }

    pub fn scale(&self, by: &Rat) -> R0Matrix {
        let c = self
            .c
            .iter()
            .map(|row| row.iter().map(|v| v * by).collect())
            .collect();
        R0Matrix { n: self.n, c }
    }

    /// Flatten the strictly-upper triangle in row-major order.
    fn upper_vec(&self) -> Vec<Rat> {
        let n = self.n as usize;
        let mut out = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                out.push(self.c[i][j].clone());
            }
        }
        out
    }

    fn from_upper_vec(n: Idx, v: &[Rat]) -> R0Matrix {
        let nu = n as usize;
        let mut m = R0Matrix::zero(n);
        let mut at = 0;
        for i in 0..nu {
            for j in (i + 1)..nu {
                m.c[i][j] = v[at].clone();
                m.c[j][i] = -v[at].clone();
                at += 1;
            }
        }
        m
    }
}

impl Serialize for R0Matrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.c.len()))?;
        for row in &self.c {
            let rendered: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            seq.serialize_element(&rendered)?;
        }
        seq.end()
    }
}

/// One violated constraint of the r^0 system, as data.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct R0Violation {
    /// The source simple root alpha_s whose equation fails.
    pub source: Idx,
    /// Cartan coordinate of the failing scalar equation.
    pub coordinate: Idx,
    pub lhs: Rat,
    pub rhs: Rat,
}

/// e-basis coordinates of alpha_s - tau(alpha_s) and alpha_s + tau(alpha_s).
fn constraint_vectors(n: Idx, s: Idx, t: Idx) -> (Vec<Rat>, Vec<Rat>) {
    let nu = n as usize;
    let mut diff = vec![Rat::zero(); nu];
    let mut sum = vec![Rat::zero(); nu];
    for (idx, sgn) in [(s, 1i64), (s + 1, -1), (t, -1), (t + 1, 1)] {
        diff[idx as usize - 1] += rat(sgn);
    }
    for (idx, sgn) in [(s, 1i64), (s + 1, -1), (t, 1), (t + 1, -1)] {
        sum[idx as usize - 1] += rat(sgn);
    }
    (diff, sum)
}

/// Check the constraint system directly; violations are data.
pub fn tr02_violations(t: &BDTriple, r0: &R0Matrix) -> Vec<R0Violation> {
    assert_eq!(t.n(), r0.n(), "ambient dimension mismatch");
    let n = t.n();
    let mut out = Vec::new();
    for (s, ts) in t.tau_pairs() {
        let (diff, sum) = constraint_vectors(n, s, ts);
        for j in 1..=n {
            let mut lhs = Rat::zero();
            for i in 1..=n {
                lhs += &diff[i as usize - 1] * r0.get(i, j);
            }
            let rhs = &sum[j as usize - 1] * ratio(1, 2);
            if lhs != rhs {
                out.push(R0Violation { source: s, coordinate: j, lhs, rhs });
            }
        }
    }
    out
}

pub fn satisfies_tr02(t: &BDTriple, r0: &R0Matrix) -> bool {
    tr02_violations(t, r0).is_empty()
}

/// Assemble the constraint matrix over the strictly-upper-triangle
/// variables, plus the right-hand side.
fn tr02_system(t: &BDTriple) -> (Vec<Vec<Rat>>, Vec<Rat>) {
    let n = t.n() as usize;
    let nvars = n * (n - 1) / 2;
    let var = |i: usize, j: usize| -> usize {
        // index of (i, j), i < j, row-major over the upper triangle
        debug_assert!(i < j);
        i * n - i * (i + 1) / 2 + (j - i - 1)
    };
    let mut mat = Vec::new();
    let mut rhs = Vec::new();
    for (s, ts) in t.tau_pairs() {
        let (diff, sum) = constraint_vectors(t.n(), s, ts);
        for j in 0..n {
            let mut row = vec![Rat::zero(); nvars];
            for i in 0..n {
                if diff[i].is_zero() || i == j {
                    continue;
                }
                if i < j {
                    row[var(i, j)] += &diff[i];
                } else {
                    row[var(j, i)] -= &diff[i];
                }
            }
            mat.push(row);
            rhs.push(&sum[j] * ratio(1, 2));
        }
    }
    (mat, rhs)
}

/// Rows constraining every row sum of the antisymmetric matrix to zero,
/// i.e. restricting to the wedge square of the traceless subalgebra.
fn row_sum_rows(n: usize) -> Vec<Vec<Rat>> {
    let nvars = n * (n - 1) / 2;
    let var = |i: usize, j: usize| -> usize { i * n - i * (i + 1) / 2 + (j - i - 1) };
    let mut rows = Vec::new();
    for i in 0..n {
        let mut row = vec![Rat::zero(); nvars];
        for j in 0..n {
            if i == j {
                continue;
            }
            if i < j {
                row[var(i, j)] += Rat::one();
            } else {
                row[var(j, i)] -= Rat::one();
            }
        }
        rows.push(row);
    }
    rows
}

/// Solve the r^0 system exactly. Returns the canonical particular solution
/// and a basis of the homogeneous kernel inside the wedge square of the
/// Cartan.
///
/// The canonical solution is the free-variables-zero solution of the system
/// augmented with the zero-row-sum side condition when that is consistent
/// (it always is in practice; generalized Cremmer-Gervais triples make it
/// unique), and of the bare system otherwise.
pub fn solve_r0(t: &BDTriple) -> (R0Matrix, Vec<R0Matrix>) {
    let n = t.n() as usize;
    let (mat, rhs) = tr02_system(t);
    let kernel: Vec<R0Matrix> = if mat.is_empty() {
        let nvars = n * (n - 1) / 2;
        (0..nvars)
            .map(|k| {
                let mut v = vec![Rat::zero(); nvars];
                v[k] = Rat::one();
                R0Matrix::from_upper_vec(t.n(), &v)
            })
            .collect()
    } else {
        nullspace(&mat)
            .into_iter()
            .map(|v| R0Matrix::from_upper_vec(t.n(), &v))
            .collect()
    };

    let mut aug = mat.clone();
    let mut aug_rhs = rhs.clone();
    for row in row_sum_rows(n) {
        aug.push(row);
        aug_rhs.push(Rat::zero());
    }
    let particular = match solve_with_nullspace(&aug, &aug_rhs) {
        Some((p, _)) => p,
        None => {
            solve_with_nullspace(&mat, &rhs)
                .expect("the r^0 constraint system is consistent for valid triples")
                .0
        }
    };
    (R0Matrix::from_upper_vec(t.n(), &particular), kernel)
}

/// Dimension of the trace-zero solution set: the nullspace of the system
/// with the zero-row-sum rows appended.
pub fn trace_zero_kernel_dim(t: &BDTriple) -> usize {
    let n = t.n() as usize;
    let (mut mat, _) = tr02_system(t);
    mat.extend(row_sum_rows(n));
    let nvars = n * (n - 1) / 2;
    nvars - rank(&mat)
}

/// Basis of the space of symmetries of the triple: x in the Cartan with
/// (x, alpha) = (x, tau alpha) for every alpha in Gamma_1.
pub fn symmetry_space(t: &BDTriple) -> Vec<Vec<Rat>> {
    let n = t.n() as usize;
    let mut mat: Vec<Vec<Rat>> = Vec::new();
    for (s, ts) in t.tau_pairs() {
        let (diff, _) = constraint_vectors(t.n(), s, ts);
        mat.push(diff);
    }
    if mat.is_empty() {
        return (0..n)
            .map(|k| {
                let mut v = vec![Rat::zero(); n];
                v[k] = Rat::one();
                v
            })
            .collect();
    }
    nullspace(&mat)
}

/// Wedge u ^ v as an antisymmetric diagonal (x) diagonal matrix.
pub fn wedge_matrix(n: Idx, u: &[Rat], v: &[Rat]) -> R0Matrix {
    let nu = n as usize;
    let mut m = R0Matrix::zero(n);
    for i in 0..nu {
        for j in 0..nu {
            m.c[i][j] = &u[i] * &v[j] - &u[j] * &v[i];
        }
    }
    m
}

/// Basis of the wedge square of the span of the given vectors.
pub fn lambda2_basis(n: Idx, vectors: &[Vec<Rat>]) -> Vec<R0Matrix> {
    let mut out = Vec::new();
    for (p, u) in vectors.iter().enumerate() {
        for v in vectors.iter().skip(p + 1) {
            out.push(wedge_matrix(n, u, v));
        }
    }
    out
}

/// Whether two families of antisymmetric matrices span the same space.
pub fn r0_span_equal(a: &[R0Matrix], b: &[R0Matrix]) -> bool {
    let av: Vec<Vec<Rat>> = a.iter().map(R0Matrix::upper_vec).collect();
    let bv: Vec<Vec<Rat>> = b.iter().map(R0Matrix::upper_vec).collect();
    span_equal(&av, &bv)
}

/// Closed form for the generalized Cremmer-Gervais triple indexed by
/// (n, m): off-diagonal entries 1/2 - res((j-i)/m)/n where res(x/m) is the
/// residue in 1..=n of x m^{-1} mod n.
pub fn gcg_r0(n: Idx, m: Idx) -> Result<R0Matrix, TripleError> {
    if m < 1 || m >= n || n.gcd(&m) != 1 {
        return Err(TripleError::Parse {
            input: format!("(n, m) = ({n}, {m})"),
            reason: "gcd(n, m) must be 1 with 1 <= m < n".into(),
        });
    }
    let minv = mod_inverse(m, n);
    let mut out = R0Matrix::zero(n);
    for i in 1..=n {
        for j in 1..=n {
            if i == j {
                continue;
            }
            let d = ((i64::from(j) - i64::from(i)).rem_euclid(i64::from(n))) as Idx;
            let res = res_mod(d * minv % n + n, n);
            out.c[i as usize - 1][j as usize - 1] = ratio(1, 2) - Rat::new(res.into(), n.into());
        }
    }
    debug_assert!(out.is_antisymmetric());
    Ok(out)
}

fn mod_inverse(m: Idx, n: Idx) -> Idx {
    (1..n).find(|&x| (x * m) % n == 1).expect("m is invertible mod n when coprime")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::triples::enumerate;

    #[test]
    fn empty_triple_has_zero_particular_and_full_kernel() {
        for n in 2..=5 {
            let t = BDTriple::empty(n);
            let (p, kernel) = solve_r0(&t);
            assert!(p.is_zero());
            assert_eq!(kernel.len(), (n as usize) * (n as usize - 1) / 2);
        }
    }

    #[test]
    fn cg_n3_particular_matches_known_solution() {
        let t = BDTriple::cremmer_gervais(3);
        let (p, _) = solve_r0(&t);
        let expected = R0Matrix::from_entries(
            3,
            vec![
                vec![rat(0), ratio(1, 6), ratio(-1, 6)],
                vec![ratio(-1, 6), rat(0), ratio(1, 6)],
                vec![ratio(1, 6), ratio(-1, 6), rat(0)],
            ],
        );
        assert_eq!(p, expected);
        assert!(satisfies_tr02(&t, &p));
        assert_eq!(p, gcg_r0(3, 1).unwrap());
    }

    #[test]
    fn particular_solves_constraints_for_all_small_triples() {
        for n in 2..=5 {
            for t in enumerate(n, 9).unwrap() {
                let (p, kernel) = solve_r0(&t);
                assert!(satisfies_tr02(&t, &p), "triple {t}");
                for h in &kernel {
                    assert!(satisfies_tr02(&t, &p.add(h)), "triple {t}");
                }
            }
        }
    }

    #[test]
    fn kernel_is_wedge_square_of_symmetries() {
        for n in 2..=5 {
            for t in enumerate(n, 9).unwrap() {
                let (_, kernel) = solve_r0(&t);
                let sym = symmetry_space(&t);
                let of_sym = lambda2_basis(t.n(), &sym);
                assert!(r0_span_equal(&kernel, &of_sym), "triple {t}");
            }
        }
    }

    #[test]
    fn symmetry_space_cg3() {
        let t = BDTriple::cremmer_gervais(3);
        let sym = symmetry_space(&t);
        assert_eq!(sym.len(), 2);
    }

    #[test]
    fn trace_zero_kernel_is_trivial_for_gcg() {
        for (n, m) in [(3, 1), (4, 1), (4, 3), (5, 2), (6, 5), (7, 3)] {
            let t = BDTriple::generalized_cremmer_gervais(n, m).unwrap();
            assert_eq!(trace_zero_kernel_dim(&t), 0, "(n, m) = ({n}, {m})");
        }
    }

    #[test]
    fn trace_zero_kernel_matches_traceless_symmetries() {
        for n in 2..=5 {
            for t in enumerate(n, 9).unwrap() {
                let sym = symmetry_space(&t);
                let d = sym.len();
                // The identity is always a symmetry and never traceless, so
                // the traceless part has dimension d - 1.
                let expected = (d - 1) * (d.saturating_sub(2)) / 2;
                assert_eq!(trace_zero_kernel_dim(&t), expected, "triple {t}");
            }
        }
    }

    #[test]
    fn gcg_r0_is_antisymmetric_and_solves_constraints() {
        for n in 2..=8u16 {
            for m in 1..n {
                if n.gcd(&m) != 1 {
                    continue;
                }
                let r0 = gcg_r0(n, m).unwrap();
                assert!(r0.is_antisymmetric());
                assert!(r0.has_zero_row_sums(), "(n, m) = ({n}, {m})");
                let t = BDTriple::generalized_cremmer_gervais(n, m).unwrap();
                assert!(satisfies_tr02(&t, &r0), "(n, m) = ({n}, {m})");
                // The unique trace-zero solution is the canonical one.
                assert_eq!(solve_r0(&t).0, r0, "(n, m) = ({n}, {m})");
            }
        }
    }

    #[test]
    fn gcg_r0_rejects_non_coprime() {
        assert!(gcg_r0(6, 2).is_err());
    }
}
