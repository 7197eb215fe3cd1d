//! Belavin-Drinfeld triples of type A_{n-1}: validation, exhaustive
//! enumeration, the additive extension of tau, the partial order given by
//! iterating tau, orientation signs, classification, sub-triples,
//! tau-orthogonal decomposition, and the tau-index.
//!
//! A triple is (Gamma_1, Gamma_2, tau) with Gamma_1, Gamma_2 subsets of the
//! simple roots and tau: Gamma_1 -> Gamma_2 a bijection that preserves inner
//! products and is nilpotent (every orbit eventually leaves Gamma_1).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::roots::{inner, Idx, Root};

/// A validated Belavin-Drinfeld triple.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BDTriple {
    n: Idx,
    /// Simple-root indices of Gamma_1, and tau on them. The key set is
    /// Gamma_1; the value set is Gamma_2.
    tau: BTreeMap<Idx, Idx>,
}

/// A single violated triple condition, with a witness.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Violation {
    /// A source or target index lies outside 1..=n-1.
    IndexOutOfRange { index: Idx },
    /// Two sources map to the same target.
    NotInjective { a: Idx, b: Idx, image: Idx },
    /// (tau a, tau b) != (a, b) for simple roots a, b in Gamma_1.
    Isometry { a: Idx, b: Idx, source_inner: i64, image_inner: i64 },
    /// The tau-orbit of the first cycle element never leaves Gamma_1.
    Nilpotency { cycle: Vec<Idx> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::IndexOutOfRange { index } => {
                write!(f, "simple-root index {index} out of range")
            }
            Violation::NotInjective { a, b, image } => {
                write!(f, "tau is not injective: alpha_{a} and alpha_{b} both map to alpha_{image}")
            }
            Violation::Isometry { a, b, source_inner, image_inner } => write!(
                f,
                "isometry violated on (alpha_{a}, alpha_{b}): inner {source_inner} vs {image_inner}"
            ),
            Violation::Nilpotency { cycle } => {
                write!(f, "nilpotency violated: tau cycles through {cycle:?}")
            }
        }
    }
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum TripleError {
    #[error("invalid Belavin-Drinfeld triple: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("root {0} is not in the additive span of Gamma_1")]
    NotInSpan(Root),
    #[error("{0} does not precede {1} under tau")]
    NotPrec(Root, Root),
    #[error("weight is not in the lattice H generated by tau(alpha) - alpha")]
    NotInH,
    #[error("enumeration dimension {n} exceeds the configured cap {cap}")]
    CapExceeded { n: Idx, cap: Idx },
    #[error("ambient dimension mismatch: {0} vs {1}")]
    DimensionMismatch(Idx, Idx),
    #[error("triples do not form a tau-orthogonal union: {0}")]
    NotOrthogonalUnion(String),
    #[error("cannot parse triple from {input:?}: {reason}")]
    Parse { input: String, reason: String },
}

/// Check the triple conditions on raw data; violations are data, not failures.
pub fn validate(n: Idx, tau_pairs: &[(Idx, Idx)]) -> Vec<Violation> {
    let mut out = Vec::new();
    let max = n.saturating_sub(1);
    for &(a, b) in tau_pairs {
        for index in [a, b] {
            if index < 1 || index > max {
                out.push(Violation::IndexOutOfRange { index });
            }
        }
    }
    if !out.is_empty() {
        return out;
    }
    let mut seen: BTreeMap<Idx, Idx> = BTreeMap::new();
    for &(a, b) in tau_pairs {
        if let Some(&a0) = seen.get(&b) {
            out.push(Violation::NotInjective { a: a0, b: a, image: b });
        } else {
            seen.insert(b, a);
        }
    }
    if !out.is_empty() {
        return out;
    }
    let tau: BTreeMap<Idx, Idx> = tau_pairs.iter().copied().collect();
    // Isometry: tau preserves inner products of simple roots, i.e. adjacency
    // in the Dynkin diagram.
    let sources: Vec<Idx> = tau.keys().copied().collect();
    for (p, &a) in sources.iter().enumerate() {
        for &b in &sources[p + 1..] {
            let source_inner = inner(&Root::simple(a), &Root::simple(b));
            let image_inner = inner(&Root::simple(tau[&a]), &Root::simple(tau[&b]));
            if source_inner != image_inner {
                out.push(Violation::Isometry { a, b, source_inner, image_inner });
            }
        }
    }
    // Nilpotency: every orbit leaves Gamma_1.
    for &a in &sources {
        let mut orbit = vec![a];
        let mut cur = a;
        loop {
            match tau.get(&cur) {
                None => break,
                Some(&next) => {
                    if orbit.contains(&next) {
                        out.push(Violation::Nilpotency { cycle: orbit });
                        break;
                    }
                    orbit.push(next);
                    cur = next;
                }
            }
        }
    }
    out
}

impl BDTriple {
    /// Build a triple from tau given as (source, target) simple-root index
    /// pairs, validating all conditions.
    pub fn new(n: Idx, tau_pairs: &[(Idx, Idx)]) -> Result<Self, TripleError> {
        assert!(n >= 2, "ambient dimension must be at least 2");
        let violations = validate(n, tau_pairs);
        if !violations.is_empty() {
            return Err(TripleError::Invalid(violations));
        }
        Ok(BDTriple { n, tau: tau_pairs.iter().copied().collect() })
    }

    pub fn empty(n: Idx) -> Self {
        BDTriple::new(n, &[]).expect("empty triple is always valid")
    }

    /// The triple omitting one root on each side, indexed by m coprime to n:
    /// Gamma_1 = Gamma \ {alpha_{n-m}}, tau(alpha_i) = alpha_{res(i+m)} with
    /// residues taken in 1..=n.
    pub fn generalized_cremmer_gervais(n: Idx, m: Idx) -> Result<Self, TripleError> {
        if m < 1 || m >= n || num_integer::gcd(n, m) != 1 {
            return Err(TripleError::Parse {
                input: format!("(n, m) = ({n}, {m})"),
                reason: "m must satisfy 1 <= m < n and gcd(n, m) = 1".into(),
            });
        }
        let pairs: Vec<(Idx, Idx)> =
            (1..n).filter(|&i| i != n - m).map(|i| (i, res_mod(i + m, n))).collect();
        BDTriple::new(n, &pairs)
    }

    /// The maximal triple with tau(alpha_i) = alpha_{i+1}.
    pub fn cremmer_gervais(n: Idx) -> Self {
        BDTriple::generalized_cremmer_gervais(n, 1).expect("m = 1 is always coprime to n")
    }

    pub fn n(&self) -> Idx {
        self.n
    }

    pub fn gamma1(&self) -> impl Iterator<Item = Idx> + '_ {
        self.tau.keys().copied()
    }

    pub fn gamma2(&self) -> BTreeSet<Idx> {
        self.tau.values().copied().collect()
    }

    pub fn gamma1_len(&self) -> usize {
        self.tau.len()
    }

    pub fn tau_pairs(&self) -> impl Iterator<Item = (Idx, Idx)> + '_ {
        self.tau.iter().map(|(&a, &b)| (a, b))
    }

    pub fn tau_simple(&self, s: Idx) -> Option<Idx> {
        self.tau.get(&s).copied()
    }

    pub fn contains_gamma1(&self, s: Idx) -> bool {
        self.tau.contains_key(&s)
    }

    /// Whether the positive root lies in the additive span of Gamma_1,
    /// i.e. all its simple constituents are in Gamma_1.
    pub fn in_tilde_gamma1(&self, root: &Root) -> bool {
        root.simple_indices().all(|s| self.tau.contains_key(&s))
    }

    /// Positive roots of the span of Gamma_1, ordered by endpoints.
    pub fn tilde_gamma1(&self) -> Vec<Root> {
        Root::all_positive(self.n)
            .into_iter()
            .filter(|r| self.in_tilde_gamma1(r))
            .collect()
    }

    /// tau extended additively: the sum of the images of the constituents.
    ///
    /// The image is again a root because tau preserves inner products, so a
    /// connected chain of simple roots maps onto a connected chain.
    pub fn extend_tau(&self, root: &Root) -> Result<Root, TripleError> {
        if !self.in_tilde_gamma1(root) {
            return Err(TripleError::NotInSpan(*root));
        }
        // Sum tau(alpha_s) over constituents in weight coordinates.
        let mut weight = vec![0i64; self.n as usize + 1];
        for s in root.simple_indices() {
            let t = self.tau[&s];
            weight[t as usize] += 1;
            weight[t as usize + 1] -= 1;
        }
        weight_to_root(&weight).ok_or(TripleError::NotInSpan(*root))
    }

    /// The unique k >= 1 with tau^k(alpha) = beta, if any.
    pub fn prec(&self, alpha: &Root, beta: &Root) -> Option<usize> {
        let mut cur = *alpha;
        for k in 1..=self.prec_bound() {
            cur = self.extend_tau(&cur).ok()?;
            if cur == *beta {
                return Some(k);
            }
        }
        None
    }

    fn prec_bound(&self) -> usize {
        // An orbit of tau on positive roots never revisits a root, so the
        // chain length is bounded by the number of positive roots.
        let n = self.n as usize;
        n * (n - 1) / 2 + 1
    }

    /// The chain (k, tau^k(alpha)) for k = 1, 2, ... while defined.
    pub fn tau_orbit(&self, alpha: &Root) -> Vec<(usize, Root)> {
        let mut out = Vec::new();
        let mut cur = *alpha;
        for k in 1..=self.prec_bound() {
            match self.extend_tau(&cur) {
                Ok(next) => {
                    out.push((k, next));
                    cur = next;
                }
                Err(_) => break,
            }
        }
        out
    }

    /// All pairs alpha -> tau^k(alpha) = beta with k >= 1, ordered by alpha
    /// then k.
    pub fn x_pairs(&self) -> Vec<XPair> {
        let mut out = Vec::new();
        for alpha in self.tilde_gamma1() {
            for (power, beta) in self.tau_orbit(&alpha) {
                out.push(XPair { alpha, beta, power });
            }
        }
        out
    }

    /// Number of twist layers: the largest power occurring in an X pair.
    pub fn layer_count(&self) -> usize {
        self.x_pairs().iter().map(|p| p.power).max().unwrap_or(0)
    }

    /// Orientation of the k-fold map on alpha, where tau^k(alpha) = beta:
    /// reversing when the leftmost simple constituent of alpha lands on the
    /// rightmost constituent of beta.
    pub fn orientation(&self, alpha: &Root, beta: &Root) -> Result<Orientation, TripleError> {
        let k = self.prec(alpha, beta).ok_or(TripleError::NotPrec(*alpha, *beta))?;
        if alpha.is_simple() {
            return Ok(Orientation::Preserving);
        }
        // k-fold image of the leftmost simple constituent.
        let mut s = alpha.i;
        for _ in 0..k {
            s = self.tau[&s];
        }
        if s == beta.i {
            Ok(Orientation::Preserving)
        } else if s == beta.j - 1 {
            Ok(Orientation::Reversing)
        } else {
            unreachable!("isometry forces the constituent chain onto the image chain")
        }
    }

    /// sign(alpha, beta): (-1)^{1-|alpha|} when the k-fold map reverses
    /// orientation, +1 otherwise (+1 always for simple alpha).
    pub fn sign(&self, alpha: &Root, beta: &Root) -> Result<i64, TripleError> {
        match self.orientation(alpha, beta)? {
            Orientation::Preserving => Ok(1),
            Orientation::Reversing => {
                Ok(if alpha.len() % 2 == 1 { 1 } else { -1 })
            }
        }
    }

    /// Whether other is a sub-triple: Gamma_1' contained in Gamma_1 with tau
    /// agreeing on it.
    pub fn is_sub_triple(&self, other: &BDTriple) -> bool {
        other.n == self.n
            && other.tau.iter().all(|(a, b)| self.tau.get(a) == Some(b))
    }

    /// All sub-triples (including the empty one and self), in a
    /// deterministic order.
    pub fn sub_triples(&self) -> Vec<BDTriple> {
        let sources: Vec<Idx> = self.tau.keys().copied().collect();
        let mut out = Vec::new();
        for mask in 0u32..(1 << sources.len()) {
            let pairs: Vec<(Idx, Idx)> = sources
                .iter()
                .enumerate()
                .filter(|(p, _)| mask >> p & 1 == 1)
                .map(|(_, &a)| (a, self.tau[&a]))
                .collect();
            out.push(BDTriple::new(self.n, &pairs).expect("restriction of a valid triple"));
        }
        out
    }

    /// Classification flags.
    pub fn classify(&self) -> Classification {
        let gamma1: BTreeSet<Idx> = self.tau.keys().copied().collect();
        let gamma2 = self.gamma2();
        let disjoint = gamma1.is_disjoint(&gamma2);
        let (generalized_disjoint, orthogonal_generalized_disjoint) = self.gd_flags();
        let generalized_cg = self.gcg_m().is_some();
        let cg = self.gcg_m() == Some(1);
        let decomposable = self.decompose().len() >= 2;
        Classification {
            disjoint,
            generalized_disjoint,
            orthogonal_generalized_disjoint,
            generalized_cg,
            cg,
            decomposable,
        }
    }

    /// The m with tau(alpha_i) = alpha_{res(i+m)}, when Gamma_1 omits
    /// exactly one simple root and tau has that shape.
    pub fn gcg_m(&self) -> Option<Idx> {
        if self.n < 2 || self.tau.len() + 2 != self.n as usize {
            return None;
        }
        let missing: Vec<Idx> = (1..self.n).filter(|s| !self.tau.contains_key(s)).collect();
        let m = self.n - missing[0];
        if num_integer::gcd(self.n, m) != 1 {
            return None;
        }
        for (&a, &b) in &self.tau {
            if b != res_mod(a + m, self.n) {
                return None;
            }
        }
        Some(m)
    }

    /// Maximal runs of consecutive Gamma_1 indices. Distinct runs are
    /// mutually orthogonal, so any orthogonal partition is a union of runs.
    fn blocks(&self) -> Vec<Vec<Idx>> {
        let mut blocks: Vec<Vec<Idx>> = Vec::new();
        for &s in self.tau.keys() {
            match blocks.last_mut() {
                Some(last) if *last.last().unwrap() + 1 == s => last.push(s),
                _ => blocks.push(vec![s]),
            }
        }
        blocks
    }

    /// Generalized-disjoint and orthogonal-generalized-disjoint flags.
    ///
    /// A partition Gamma_1 = P_1 u ... u P_m with mutually orthogonal parts
    /// and tau(P_i) n Gamma_1 inside P_{i+1} (empty for i = m) exists iff the
    /// layer constraints l(block of tau(s)) = l(block of s) + 1 admit a
    /// consistent labeling of the consecutive runs; the orthogonal variant
    /// additionally needs tau(P_i) orthogonal to every P_j with j != i+1 for
    /// some consistent labeling.
    fn gd_flags(&self) -> (bool, bool) {
        let blocks = self.blocks();
        if blocks.is_empty() {
            return (true, true);
        }
        let block_of = |s: Idx| blocks.iter().position(|b| b.contains(&s)).unwrap();
        // Directed constraints between runs induced by tau staying in Gamma_1.
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for (&a, &b) in &self.tau {
            if self.tau.contains_key(&b) {
                edges.push((block_of(a), block_of(b)));
            }
        }
        // Per-component relative labels by BFS; a conflict kills both flags.
        let nb = blocks.len();
        let mut comp = vec![usize::MAX; nb];
        let mut level = vec![0i64; nb];
        let mut ncomp = 0;
        for start in 0..nb {
            if comp[start] != usize::MAX {
                continue;
            }
            comp[start] = ncomp;
            level[start] = 0;
            let mut queue = vec![start];
            while let Some(u) = queue.pop() {
                for &(x, y) in &edges {
                    for (from, to, delta) in [(x, y, 1i64), (y, x, -1i64)] {
                        if from == u {
                            if comp[to] == usize::MAX {
                                comp[to] = ncomp;
                                level[to] = level[u] + delta;
                                queue.push(to);
                            } else if level[to] != level[u] + delta {
                                return (false, false);
                            }
                        }
                    }
                }
            }
            ncomp += 1;
        }
        // Orthogonal variant: search over per-component shifts. Labels are
        // normalized to start at 1; shifts range within the total label span.
        let span = self.tau.len() as i64;
        let mut shifts = vec![0i64; ncomp];
        let ok = self.search_ogd_shifts(&blocks, &comp, &level, &mut shifts, 0, span);
        (true, ok)
    }

    fn search_ogd_shifts(
        &self,
        blocks: &[Vec<Idx>],
        comp: &[usize],
        level: &[i64],
        shifts: &mut Vec<i64>,
        at: usize,
        span: i64,
    ) -> bool {
        if at == shifts.len() {
            return self.check_ogd_labeling(blocks, comp, level, shifts);
        }
        for s in -span..=span {
            shifts[at] = s;
            if self.search_ogd_shifts(blocks, comp, level, shifts, at + 1, span) {
                return true;
            }
        }
        false
    }

    fn check_ogd_labeling(
        &self,
        blocks: &[Vec<Idx>],
        comp: &[usize],
        level: &[i64],
        shifts: &[i64],
    ) -> bool {
        let labels: Vec<i64> =
            (0..blocks.len()).map(|b| level[b] + shifts[comp[b]]).collect();
        let lo = *labels.iter().min().unwrap();
        let hi = *labels.iter().max().unwrap();
        // Parts must be nonempty for every label in the range.
        for l in lo..=hi {
            if !labels.contains(&l) {
                return false;
            }
        }
        // tau(P_i) orthogonal to P_j for every j != i+1.
        for (bi, block) in blocks.iter().enumerate() {
            for &a in block {
                let ta = self.tau[&a];
                for (bj, other) in blocks.iter().enumerate() {
                    if labels[bj] == labels[bi] + 1 {
                        continue;
                    }
                    for &b in other {
                        if inner(&Root::simple(ta), &Root::simple(b)) != 0 {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    /// Indecomposable components whose tau-orthogonal union is this triple.
    ///
    /// Components are the classes of the finest partition closed under:
    /// non-orthogonal sources join, sources with non-orthogonal images join,
    /// and a source joins its image when the image lies in Gamma_1.
    // Union-find works on positions, so the index loops stay.
    #[allow(clippy::needless_range_loop)]
    pub fn decompose(&self) -> Vec<BDTriple> {
        let sources: Vec<Idx> = self.tau.keys().copied().collect();
        let m = sources.len();
        let pos = |s: Idx| sources.iter().position(|&x| x == s).unwrap();
        let mut parent: Vec<usize> = (0..m).collect();
        fn find(parent: &mut Vec<usize>, x: usize) -> usize {
            if parent[x] != x {
                let r = find(parent, parent[x]);
                parent[x] = r;
            }
            parent[x]
        }
        let join = |parent: &mut Vec<usize>, a: usize, b: usize| {
            let (ra, rb) = (find(parent, a), find(parent, b));
            if ra != rb {
                parent[ra] = rb;
            }
        };
        for (p, &a) in sources.iter().enumerate() {
            for q in (p + 1)..m {
                let b = sources[q];
                if inner(&Root::simple(a), &Root::simple(b)) != 0
                    || inner(&Root::simple(self.tau[&a]), &Root::simple(self.tau[&b])) != 0
                {
                    join(&mut parent, p, q);
                }
            }
            let image = self.tau[&a];
            if self.tau.contains_key(&image) {
                join(&mut parent, p, pos(image));
            }
        }
        let mut classes: BTreeMap<usize, Vec<(Idx, Idx)>> = BTreeMap::new();
        for p in 0..m {
            let root = find(&mut parent, p);
            classes.entry(root).or_default().push((sources[p], self.tau[&sources[p]]));
        }
        let mut comps: Vec<BDTriple> = classes
            .into_values()
            .map(|pairs| BDTriple::new(self.n, &pairs).expect("component of a valid triple"))
            .collect();
        comps.sort();
        comps
    }

    /// Assemble a triple as a union of components, checking that the union
    /// is tau-orthogonal: sources from different components orthogonal,
    /// images orthogonal, and any image inside Gamma_1 stays in its own
    /// component.
    pub fn try_union(components: &[BDTriple]) -> Result<BDTriple, TripleError> {
        let n = components.first().map(|t| t.n).unwrap_or(2);
        let mut pairs: Vec<(Idx, Idx)> = Vec::new();
        for t in components {
            if t.n != n {
                return Err(TripleError::DimensionMismatch(n, t.n));
            }
            pairs.extend(t.tau_pairs());
        }
        for (ci, a) in components.iter().enumerate() {
            for b in components.iter().skip(ci + 1) {
                for (sa, ta) in a.tau_pairs() {
                    for (sb, tb) in b.tau_pairs() {
                        if inner(&Root::simple(sa), &Root::simple(sb)) != 0 {
                            return Err(TripleError::NotOrthogonalUnion(format!(
                                "sources alpha_{sa}, alpha_{sb} are not orthogonal"
                            )));
                        }
                        if inner(&Root::simple(ta), &Root::simple(tb)) != 0 {
                            return Err(TripleError::NotOrthogonalUnion(format!(
                                "images alpha_{ta}, alpha_{tb} are not orthogonal"
                            )));
                        }
                    }
                }
            }
        }
        let union = BDTriple::new(n, &pairs)?;
        for t in components {
            for (_, image) in t.tau_pairs() {
                if union.contains_gamma1(image) && !t.contains_gamma1(image) {
                    return Err(TripleError::NotOrthogonalUnion(format!(
                        "image alpha_{image} lands in Gamma_1 outside its own component"
                    )));
                }
            }
        }
        Ok(union)
    }

    /// The tau-index of a weight: the number of summands in the unique
    /// expression of the weight as a nonnegative integer combination of the
    /// vectors tau(alpha) - alpha over alpha in Gamma_1.
    ///
    /// The weight is given in e-basis coordinates (length n).
    pub fn tau_index(&self, weight: &[i64]) -> Result<usize, TripleError> {
        use crate::linalg::solve_unique;
        use crate::qlaurent::{rat, Rat};
        use num_traits::{One, Signed, ToPrimitive, Zero};
        if weight.len() != self.n as usize {
            return Err(TripleError::DimensionMismatch(self.n, weight.len() as Idx));
        }
        let sources: Vec<Idx> = self.tau.keys().copied().collect();
        if sources.is_empty() {
            return if weight.iter().all(|&w| w == 0) { Ok(0) } else { Err(TripleError::NotInH) };
        }
        // Columns are tau(alpha_s) - alpha_s in e-coordinates.
        let rows = self.n as usize;
        let mut mat: Vec<Vec<Rat>> = vec![vec![Rat::zero(); sources.len()]; rows];
        for (col, &s) in sources.iter().enumerate() {
            let t = self.tau[&s];
            let su = s as usize;
            let tu = t as usize;
            mat[tu - 1][col] += rat(1);
            mat[tu][col] -= rat(1);
            mat[su - 1][col] -= rat(1);
            mat[su][col] += rat(1);
        }
        let rhs: Vec<Rat> = weight.iter().map(|&w| rat(w)).collect();
        let sol = solve_unique(&mat, &rhs).ok_or(TripleError::NotInH)?;
        let mut total = 0usize;
        for c in &sol {
            if c.is_negative() || !c.denom().is_one() {
                return Err(TripleError::NotInH);
            }
            total += c.numer().to_usize().ok_or(TripleError::NotInH)?;
        }
        Ok(total)
    }

    /// Canonical text form, e.g. `n=5; a1->a3, a2->a4`.
    pub fn to_text(&self) -> String {
        if self.tau.is_empty() {
            return format!("n={}", self.n);
        }
        let pairs: Vec<String> =
            self.tau.iter().map(|(a, b)| format!("a{a}->a{b}")).collect();
        format!("n={}; {}", self.n, pairs.join(", "))
    }

    /// Parse the text form; the target may be written `a3` or `3`.
    pub fn parse_text(input: &str) -> Result<BDTriple, TripleError> {
        let err = |reason: &str| TripleError::Parse { input: input.into(), reason: reason.into() };
        let mut parts = input.splitn(2, [';']);
        let head = parts.next().unwrap_or("").trim();
        let n: Idx = head
            .strip_prefix("n=")
            .ok_or_else(|| err("expected leading n=<int>"))?
            .trim()
            .parse()
            .map_err(|_| err("cannot parse n"))?;
        if n < 2 {
            return Err(err("n must be at least 2"));
        }
        let mut pairs = Vec::new();
        if let Some(rest) = parts.next() {
            for chunk in rest.split(',').map(str::trim).filter(|c| !c.is_empty()) {
                let (lhs, rhs) = chunk
                    .split_once("->")
                    .ok_or_else(|| err("expected a<i>->a<j> pairs"))?;
                let parse_idx = |s: &str| -> Result<Idx, TripleError> {
                    s.trim()
                        .trim_start_matches('a')
                        .parse()
                        .map_err(|_| err("cannot parse simple-root index"))
                };
                pairs.push((parse_idx(lhs)?, parse_idx(rhs)?));
            }
        }
        BDTriple::new(n, &pairs)
    }
}

impl fmt::Display for BDTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_text())
    }
}

impl fmt::Debug for BDTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BDTriple({})", self.to_text())
    }
}

/// tau^power(alpha) = beta.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct XPair {
    pub alpha: Root,
    pub beta: Root,
    pub power: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Orientation {
    Preserving,
    Reversing,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct Classification {
    pub disjoint: bool,
    pub generalized_disjoint: bool,
    pub orthogonal_generalized_disjoint: bool,
    pub generalized_cg: bool,
    pub cg: bool,
    pub decomposable: bool,
}

impl Classification {
    pub fn flags(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.disjoint {
            out.push("disjoint");
        }
        if self.generalized_disjoint {
            out.push("generalized-disjoint");
        }
        if self.orthogonal_generalized_disjoint {
            out.push("orthogonal-generalized-disjoint");
        }
        if self.generalized_cg {
            out.push("generalized-cg");
        }
        if self.cg {
            out.push("cg");
        }
        if self.decomposable {
            out.push("decomposable");
        }
        out
    }

    pub fn has_flag(&self, flag: &str) -> Option<bool> {
        match flag {
            "disjoint" => Some(self.disjoint),
            "generalized-disjoint" => Some(self.generalized_disjoint),
            "orthogonal-generalized-disjoint" => Some(self.orthogonal_generalized_disjoint),
            "generalized-cg" => Some(self.generalized_cg),
            "cg" => Some(self.cg),
            "decomposable" => Some(self.decomposable),
            "indecomposable" => Some(!self.decomposable),
            _ => None,
        }
    }
}

/// Residue of x modulo n taken in 1..=n.
pub fn res_mod(x: Idx, n: Idx) -> Idx {
    let r = x % n;
    if r == 0 {
        n
    } else {
        r
    }
}

/// Interpret a weight vector (1-indexed internally by padding) as a
/// positive root e_a - e_b if it has exactly that shape.
fn weight_to_root(weight: &[i64]) -> Option<Root> {
    let mut plus = None;
    let mut minus = None;
    for (idx, &w) in weight.iter().enumerate().skip(1) {
        match w {
            0 => {}
            1 if plus.is_none() => plus = Some(idx as Idx),
            -1 if minus.is_none() => minus = Some(idx as Idx),
            _ => return None,
        }
    }
    match (plus, minus) {
        (Some(a), Some(b)) if a < b => Some(Root::new(a, b)),
        _ => None,
    }
}

/// Exhaustively enumerate all valid triples for ambient dimension n, the
/// empty triple included, in a deterministic order.
pub fn enumerate(n: Idx, cap: Idx) -> Result<Vec<BDTriple>, TripleError> {
    enumerate_filtered(n, cap, |_| true)
}

/// Enumerate triples whose Gamma_1 size passes the filter; used to restrict
/// sweeps to e.g. maximal triples without paying for the full search.
pub fn enumerate_filtered(
    n: Idx,
    cap: Idx,
    size_filter: impl Fn(usize) -> bool + Sync,
) -> Result<Vec<BDTriple>, TripleError> {
    if n > cap {
        return Err(TripleError::CapExceeded { n, cap });
    }
    let m = (n - 1) as usize;
    let mut out = Vec::new();
    for mask in 0u32..(1 << m) {
        let sources: Vec<Idx> =
            (1..=m as Idx).filter(|s| mask >> (s - 1) & 1 == 1).collect();
        if !size_filter(sources.len()) {
            continue;
        }
        let mut images: Vec<Idx> = Vec::with_capacity(sources.len());
        let mut used = vec![false; m + 1];
        extend_injection(n, &sources, &mut images, &mut used, &mut out);
    }
    Ok(out)
}

/// Backtracking over injections Gamma_1 -> Gamma, pruning by the isometry
/// condition edge-by-edge, with the nilpotency check at the leaves.
fn extend_injection(
    n: Idx,
    sources: &[Idx],
    images: &mut Vec<Idx>,
    used: &mut Vec<bool>,
    out: &mut Vec<BDTriple>,
) {
    let at = images.len();
    if at == sources.len() {
        let pairs: Vec<(Idx, Idx)> =
            sources.iter().copied().zip(images.iter().copied()).collect();
        if validate(n, &pairs).is_empty() {
            out.push(BDTriple { n, tau: pairs.into_iter().collect() });
        }
        return;
    }
    'candidates: for img in 1..n {
        if used[img as usize] {
            continue;
        }
        for p in 0..at {
            let src_inner = inner(&Root::simple(sources[p]), &Root::simple(sources[at]));
            let img_inner = inner(&Root::simple(images[p]), &Root::simple(img));
            if src_inner != img_inner {
                continue 'candidates;
            }
        }
        images.push(img);
        used[img as usize] = true;
        extend_injection(n, sources, images, used, out);
        images.pop();
        used[img as usize] = false;
    }
}
