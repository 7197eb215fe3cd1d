//! Exact Gaussian elimination over Q: solving, nullspaces, and span
//! comparison for the small dense systems that arise from the r^0
//! constraints and the tau-index lattice.

use num_traits::{One, Zero};

use crate::qlaurent::Rat;

/// Reduced row echelon form in place; returns the pivot column of each
/// pivot row.
// The elimination loop reads the pivot row while writing another, so the
// index form stays.
#[allow(clippy::needless_range_loop)]
pub fn rref(mat: &mut [Vec<Rat>]) -> Vec<usize> {
    let rows = mat.len();
    let cols = if rows == 0 { 0 } else { mat[0].len() };
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        let Some(pr) = (row..rows).find(|&r| !mat[r][col].is_zero()) else {
            continue;
        };
        mat.swap(row, pr);
        let inv = mat[row][col].clone();
        for v in mat[row][col..cols].iter_mut() {
            *v = v.clone() / inv.clone();
        }
        for r in 0..rows {
            if r != row && !mat[r][col].is_zero() {
                let factor = mat[r][col].clone();
                for c in col..cols {
                    let delta = &factor * &mat[row][c];
                    mat[r][c] = mat[r][c].clone() - delta;
                }
            }
        }
        pivots.push(col);
        row += 1;
        if row == rows {
            break;
        }
    }
    pivots
}

pub fn rank(mat: &[Vec<Rat>]) -> usize {
    let mut m = mat.to_vec();
    rref(&mut m).len()
}

/// Solve `a x = b`. Returns the particular solution with all free variables
/// set to zero (under the left-to-right pivot order) and a basis of the
/// nullspace of `a`; `None` when inconsistent.
pub fn solve_with_nullspace(a: &[Vec<Rat>], b: &[Rat]) -> Option<(Vec<Rat>, Vec<Vec<Rat>>)> {
    let rows = a.len();
    assert_eq!(rows, b.len(), "matrix and right-hand side sizes differ");
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let mut aug: Vec<Vec<Rat>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    let pivots = rref(&mut aug);
    // Inconsistent iff a pivot lands in the appended column.
    if pivots.last() == Some(&cols) {
        return None;
    }
    let mut particular = vec![Rat::zero(); cols];
    for (r, &pc) in pivots.iter().enumerate() {
        particular[pc] = aug[r][cols].clone();
    }
    let mut basis = Vec::new();
    for free in 0..cols {
        if pivots.contains(&free) {
            continue;
        }
        let mut vec = vec![Rat::zero(); cols];
        vec[free] = Rat::one();
        for (r, &pc) in pivots.iter().enumerate() {
            vec[pc] = -aug[r][free].clone();
        }
        basis.push(vec);
    }
    Some((particular, basis))
}

/// Solve `a x = b` when the solution is unique; `None` when inconsistent or
/// underdetermined.
pub fn solve_unique(a: &[Vec<Rat>], b: &[Rat]) -> Option<Vec<Rat>> {
    let (particular, basis) = solve_with_nullspace(a, b)?;
    if basis.is_empty() {
        Some(particular)
    } else {
        None
    }
}

/// Basis of the nullspace of `a`.
pub fn nullspace(a: &[Vec<Rat>]) -> Vec<Vec<Rat>> {
    let rows = a.len();
    let zero = vec![Rat::zero(); rows];
    solve_with_nullspace(a, &zero)
        .expect("homogeneous system is always consistent")
        .1
}

/// Whether two families of vectors span the same subspace.
pub fn span_equal(u: &[Vec<Rat>], v: &[Vec<Rat>]) -> bool {
    let ru = rank(u);
    let rv = rank(v);
    if ru != rv {
        return false;
    }
    let mut joint: Vec<Vec<Rat>> = u.to_vec();
    joint.extend(v.iter().cloned());
    rank(&joint) == ru
}

/// Whether `v` lies in the span of `basis`.
pub fn in_span(basis: &[Vec<Rat>], v: &[Rat]) -> bool {
    let mut joint: Vec<Vec<Rat>> = basis.to_vec();
    let r = rank(&joint);
    joint.push(v.to_vec());
    rank(&joint) == r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qlaurent::{rat, ratio};

    fn m(rows: &[&[i64]]) -> Vec<Vec<Rat>> {
        rows.iter().map(|r| r.iter().map(|&x| rat(x)).collect()).collect()
    }

    #[test]
    fn solves_a_unique_system() {
        let a = m(&[&[1, 1], &[1, -1]]);
        let b = vec![rat(3), rat(1)];
        let x = solve_unique(&a, &b).unwrap();
        assert_eq!(x, vec![rat(2), rat(1)]);
    }

    #[test]
    fn detects_inconsistency() {
        let a = m(&[&[1, 1], &[2, 2]]);
        let b = vec![rat(1), rat(3)];
        assert!(solve_with_nullspace(&a, &b).is_none());
    }

    #[test]
    fn nullspace_of_rank_one_map() {
        let a = m(&[&[1, 2, -1]]);
        let basis = nullspace(&a);
        assert_eq!(basis.len(), 2);
        for v in &basis {
            let dot = v[0].clone() + rat(2) * v[1].clone() - v[2].clone();
            assert!(dot.is_zero());
        }
    }

    #[test]
    fn particular_solution_zeroes_free_variables() {
        let a = m(&[&[1, 1, 0]]);
        let b = vec![ratio(1, 2)];
        let (p, basis) = solve_with_nullspace(&a, &b).unwrap();
        assert_eq!(p, vec![ratio(1, 2), rat(0), rat(0)]);
        assert_eq!(basis.len(), 2);
    }

    #[test]
    fn span_comparison() {
        let u = m(&[&[1, 0, 1], &[0, 1, 0]]);
        let v = m(&[&[1, 1, 1], &[1, -1, 1]]);
        assert!(span_equal(&u, &v));
        let w = m(&[&[1, 0, 0], &[0, 1, 0]]);
        assert!(!span_equal(&u, &w));
        assert!(in_span(&u, &[rat(2), rat(3), rat(2)]));
        assert!(!in_span(&u, &[rat(0), rat(0), rat(1)]));
    }
}
