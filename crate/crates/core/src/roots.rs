//! Positive roots of type A_{n-1} and their relative-position relations.
//!
//! A positive root e_i - e_j (1 <= i < j <= n) is stored by its endpoint
//! pair. For two roots a = e_i - e_j and b = e_k - e_l with i < k exactly
//! one of `j = k` (a is immediately left-adjacent to b), `j < k` (a lies
//! strictly left of b), or `j > k` (a overlaps or contains b) holds; the
//! mirror cases apply when i > k. The endpoint comparisons are defined for
//! arbitrary lengths, not only |a| = |b|.

use std::fmt;

use serde::Serialize;

/// Index type for basis vectors e_1..e_n and simple roots alpha_1..alpha_{n-1}.
pub type Idx = u16;

/// The positive root e_i - e_j with i < j.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Root {
    pub i: Idx,
    pub j: Idx,
}

impl Root {
    /// Panics if i >= j; negatives are represented by context, never stored.
    pub fn new(i: Idx, j: Idx) -> Self {
        assert!(i < j, "root endpoints must satisfy i < j, got ({i}, {j})");
        Root { i, j }
    }

    /// The simple root alpha_s = e_s - e_{s+1}.
    pub fn simple(s: Idx) -> Self {
        Root::new(s, s + 1)
    }

    /// |root| = j - i; always at least 1.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        (self.j - self.i) as usize
    }

    pub fn is_simple(&self) -> bool {
        self.j == self.i + 1
    }

    /// Indices s of the simple constituents alpha_s, left to right.
    pub fn simple_indices(&self) -> impl Iterator<Item = Idx> {
        self.i..self.j
    }

    /// Matrix-unit position of e_root (row, column).
    pub fn e_pos(&self) -> (Idx, Idx) {
        (self.i, self.j)
    }

    /// Matrix-unit position of e_{-root}.
    pub fn e_neg(&self) -> (Idx, Idx) {
        (self.j, self.i)
    }

    /// All positive roots for ambient dimension n, ordered by (i, j).
    pub fn all_positive(n: Idx) -> Vec<Root> {
        let mut out = Vec::new();
        for i in 1..=n {
            for j in (i + 1)..=n {
                out.push(Root::new(i, j));
            }
        }
        out
    }
}

impl fmt::Display for Root {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_simple() {
            write!(f, "alpha_{}", self.i)
        } else {
            write!(f, "e_{} - e_{}", self.i, self.j)
        }
    }
}

impl fmt::Debug for Root {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} - {})", self.i, self.j)
    }
}

/// Inner product (e_i - e_j, e_k - e_l) from orthonormality of the e_i.
pub fn inner(a: &Root, b: &Root) -> i64 {
    let d = |x: Idx, y: Idx| i64::from(x == y);
    d(a.i, b.i) - d(a.i, b.j) - d(a.j, b.i) + d(a.j, b.j)
}

/// Relative position of two positive roots by endpoint comparison.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
pub enum Relation {
    Equal,
    /// Distinct roots sharing a left endpoint.
    Incomparable,
    /// a's right endpoint is b's left endpoint.
    Lessdot,
    /// b's right endpoint is a's left endpoint.
    Gtrdot,
    /// a lies strictly to the left of b.
    LessFar,
    /// b lies strictly to the left of a.
    GtrFar,
    /// a starts left of b and reaches past b's left endpoint.
    LessBar,
    /// b starts left of a and reaches past a's left endpoint.
    GtrBar,
}

impl Relation {
    pub fn symbol(&self) -> &'static str {
        match self {
            Relation::Equal => "=",
            Relation::Incomparable => "incomparable",
            Relation::Lessdot => "<.",
            Relation::Gtrdot => ">.",
            Relation::LessFar => "<<",
            Relation::GtrFar => ">>",
            Relation::LessBar => "<-",
            Relation::GtrBar => ">-",
        }
    }

    pub fn mirror(&self) -> Relation {
        match self {
            Relation::Equal => Relation::Equal,
            Relation::Incomparable => Relation::Incomparable,
            Relation::Lessdot => Relation::Gtrdot,
            Relation::Gtrdot => Relation::Lessdot,
            Relation::LessFar => Relation::GtrFar,
            Relation::GtrFar => Relation::LessFar,
            Relation::LessBar => Relation::GtrBar,
            Relation::GtrBar => Relation::LessBar,
        }
    }
}

/// Endpoint relation of a = e_i - e_j and b = e_k - e_l.
pub fn relation(a: &Root, b: &Root) -> Relation {
    use std::cmp::Ordering;
    match a.i.cmp(&b.i) {
        Ordering::Equal => {
            if a.j == b.j {
                Relation::Equal
            } else {
                Relation::Incomparable
            }
        }
        Ordering::Less => match a.j.cmp(&b.i) {
            Ordering::Equal => Relation::Lessdot,
            Ordering::Less => Relation::LessFar,
            Ordering::Greater => Relation::LessBar,
        },
        Ordering::Greater => match b.j.cmp(&a.i) {
            Ordering::Equal => Relation::Gtrdot,
            Ordering::Less => Relation::GtrFar,
            Ordering::Greater => Relation::GtrBar,
        },
    }
}

/// Whether a and b are strictly separated in either direction.
///
/// This is a relative-position notion, not orthogonality of the inner
/// product: adjacent roots have inner product -1 and are not separated,
/// while e.g. nested roots can have inner product 0 yet are not separated.
pub fn perp_sense(a: &Root, b: &Root) -> bool {
    matches!(relation(a, b), Relation::LessFar | Relation::GtrFar)
}
