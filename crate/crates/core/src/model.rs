//! Mixed-dimension site registers and local-term Hamiltonians.
//!
//! The full Hilbert space is the tensor product of the register's sites in
//! id order, site 0 most significant. A [`TermList`] is a sum of small dense
//! matrices, each acting on an ordered tuple of distinct sites.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{operator_norm, C64, ZERO};
use crate::sparse::{Config, SparseState};

/// Largest arity a term may have.
pub const MAX_ARITY: usize = 4;
/// Upper bound on the operator norm of a single term.
pub const MAX_TERM_NORM: f64 = 2.0;
/// Full-space operations refuse registers above this many qubit-equivalents.
pub const FULL_SPACE_GUARD_QUBITS: f64 = 22.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SiteRole {
    Work,
    Station,
    GadgetQubit,
    GadgetQutrit,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Site {
    pub id: usize,
    pub dim: usize,
    pub role: SiteRole,
    pub label: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Register {
    sites: Vec<Site>,
}

impl Register {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a site and returns its id.
    pub fn push(&mut self, dim: usize, role: SiteRole, label: impl Into<String>) -> usize {
        let id = self.sites.len();
        self.sites.push(Site {
            id,
            dim,
            role,
            label: label.into(),
        });
        id
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn site(&self, id: usize) -> &Site {
        &self.sites[id]
    }

    pub fn find(&self, label: &str) -> Option<usize> {
        self.sites.iter().position(|s| s.label == label)
    }

    pub fn dims(&self) -> Vec<usize> {
        self.sites.iter().map(|s| s.dim).collect()
    }

    /// Product of the site dimensions, `None` on overflow.
    pub fn total_dim(&self) -> Option<usize> {
        self.sites
            .iter()
            .try_fold(1usize, |acc, s| acc.checked_mul(s.dim))
    }

    /// `log2` of the full dimension.
    pub fn qubit_equivalents(&self) -> f64 {
        self.sites.iter().map(|s| (s.dim as f64).log2()).sum()
    }

    /// Mixed-radix strides, site 0 most significant. Saturates on overflow;
    /// only meaningful when `total_dim` is `Some`.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![0usize; self.sites.len()];
        let mut acc = 1usize;
        for (i, s) in self.sites.iter().enumerate().rev() {
            strides[i] = acc;
            acc = acc.saturating_mul(s.dim);
        }
        strides
    }

    pub fn validate(&self) -> Result<()> {
        let mut labels = HashSet::new();
        for (i, s) in self.sites.iter().enumerate() {
            if s.id != i {
                return Err(Error::RegisterMismatch(format!(
                    "site ids must be dense: position {i} has id {}",
                    s.id
                )));
            }
            if s.dim != 2 && s.dim != 3 {
                return Err(Error::RegisterMismatch(format!(
                    "site {} has dimension {}",
                    s.label, s.dim
                )));
            }
            if !labels.insert(s.label.as_str()) {
                return Err(Error::RegisterMismatch(format!(
                    "duplicate site label {}",
                    s.label
                )));
            }
        }
        Ok(())
    }

    /// Full-space dimension, or an error above 22 qubit-equivalents.
    pub fn full_space_guard(&self) -> Result<usize> {
        let q = self.qubit_equivalents();
        if q > FULL_SPACE_GUARD_QUBITS + 1e-9 {
            return Err(Error::ResourceGuard(format!(
                "register has {q:.2} qubit-equivalents, full-space limit is {FULL_SPACE_GUARD_QUBITS}"
            )));
        }
        self.total_dim()
            .ok_or_else(|| Error::ResourceGuard("register dimension overflows".into()))
    }
}

/// One local term: a dense matrix over `sites` (first site most significant).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub sites: Vec<usize>,
    #[serde(with = "complex_pairs")]
    pub matrix: Vec<C64>,
    pub tag: String,
}

impl Term {
    pub fn arity(&self) -> usize {
        self.sites.len()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TermList {
    #[serde(rename = "sites")]
    pub register: Register,
    pub terms: Vec<Term>,
}

impl TermList {
    pub fn new(register: Register) -> Self {
        TermList {
            register,
            terms: Vec::new(),
        }
    }

    pub fn local_dim(&self, sites: &[usize]) -> usize {
        sites.iter().map(|&s| self.register.site(s).dim).product()
    }

    /// Checks the term against the register and the structural invariants.
    pub fn check_term(&self, term: &Term) -> Result<()> {
        if term.sites.is_empty() || term.sites.len() > MAX_ARITY {
            return Err(Error::InvalidTerm(format!(
                "{}: arity {} outside 1..={MAX_ARITY}",
                term.tag,
                term.sites.len()
            )));
        }
        let mut seen = HashSet::new();
        for &s in &term.sites {
            if s >= self.register.len() {
                return Err(Error::InvalidTerm(format!("{}: no site {s}", term.tag)));
            }
            if !seen.insert(s) {
                return Err(Error::InvalidTerm(format!(
                    "{}: site {s} repeated",
                    term.tag
                )));
            }
        }
        let d = self.local_dim(&term.sites);
        if term.matrix.len() != d * d {
            return Err(Error::InvalidTerm(format!(
                "{}: matrix has {} entries, expected {}",
                term.tag,
                term.matrix.len(),
                d * d
            )));
        }
        let n = operator_norm(&term.matrix, d);
        if n > MAX_TERM_NORM + 1e-12 {
            return Err(Error::InvalidTerm(format!(
                "{}: operator norm {n} exceeds {MAX_TERM_NORM}",
                term.tag
            )));
        }
        Ok(())
    }

    pub fn push(&mut self, term: Term) -> Result<()> {
        self.check_term(&term)?;
        self.terms.push(term);
        Ok(())
    }

    /// Re-checks the register and every term, e.g. after deserialization.
    pub fn validate(&self) -> Result<()> {
        self.register.validate()?;
        self.terms.iter().try_for_each(|t| self.check_term(t))
    }

    /// `H psi` over the full space, summed term by term in index order.
    pub fn apply(&self, psi: &[C64]) -> Result<Vec<C64>> {
        let op = self.full_operator()?;
        if psi.len() != op.dim {
            return Err(Error::DimensionMismatch {
                expected: op.dim,
                got: psi.len(),
            });
        }
        let mut out = vec![ZERO; op.dim];
        op.apply_into(psi, &mut out);
        Ok(out)
    }

    /// Matrix-free full-space operator (guarded at 22 qubit-equivalents).
    pub fn full_operator(&self) -> Result<FullOperator> {
        let dim = self.register.full_space_guard()?;
        Ok(FullOperator {
            dim,
            kernels: self.kernels(),
            free: self
                .terms
                .iter()
                .map(|t| free_sites(&self.register, &t.sites))
                .collect(),
        })
    }

    /// Operator acting on [`SparseState`]s; works for registers of any size.
    pub fn sparse_operator(&self) -> SparseOperator {
        let kernels = self.kernels();
        let mut by_site = vec![Vec::new(); self.register.len()];
        let mut always = Vec::new();
        for (k, kern) in kernels.iter().enumerate() {
            for &s in &kern.sites {
                by_site[s].push(k);
            }
            if !kern.cols[0].is_empty() {
                always.push(k);
            }
        }
        SparseOperator {
            kernels,
            by_site,
            always,
        }
    }

    pub fn apply_sparse(&self, state: &SparseState) -> SparseState {
        self.sparse_operator().apply(state)
    }

    /// Sum of identity-padded terms as a sparse matrix.
    pub fn embed_full(&self) -> Result<CsrMatrix> {
        let dim = self.register.full_space_guard()?;
        let mut triplets: Vec<(usize, usize, C64)> = Vec::new();
        for (term, kern) in self.terms.iter().zip(self.kernels()) {
            let free = free_sites(&self.register, &term.sites);
            for_each_base(&free, |base| {
                for (l, col) in kern.cols.iter().enumerate() {
                    for &(r, v) in col {
                        triplets.push((base + kern.offsets[r], base + kern.offsets[l], v));
                    }
                }
            });
        }
        Ok(CsrMatrix::from_triplets(dim, triplets))
    }

    fn kernels(&self) -> Vec<TermKernel> {
        let strides = self.register.strides();
        self.terms
            .iter()
            .map(|t| TermKernel::new(t, &self.register, &strides))
            .collect()
    }

    pub fn audit(&self) -> Audit {
        let mut degree = vec![0usize; self.register.len()];
        let mut max_arity = 0;
        let mut max_norm = 0.0f64;
        for t in &self.terms {
            max_arity = max_arity.max(t.arity());
            for &s in &t.sites {
                degree[s] += 1;
            }
            let d = self.local_dim(&t.sites);
            max_norm = max_norm.max(operator_norm(&t.matrix, d));
        }
        Audit {
            site_count: self.register.len(),
            term_count: self.terms.len(),
            max_arity,
            max_term_norm: max_norm,
            max_degree: degree.iter().copied().max().unwrap_or(0),
            qubit_equivalents: self.register.qubit_equivalents(),
            per_site_degree: self
                .register
                .sites()
                .iter()
                .zip(&degree)
                .map(|(s, &d)| SiteDegree {
                    site: s.id,
                    label: s.label.clone(),
                    degree: d,
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let t: TermList = serde_json::from_str(text)?;
        t.validate()?;
        Ok(t)
    }
}

pub fn apply_term_list(h: &TermList, psi: &[C64]) -> Result<Vec<C64>> {
    h.apply(psi)
}

pub fn embed_full(h: &TermList) -> Result<CsrMatrix> {
    h.embed_full()
}

pub fn audit(h: &TermList) -> Audit {
    h.audit()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SiteDegree {
    pub site: usize,
    pub label: String,
    pub degree: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Audit {
    pub site_count: usize,
    pub term_count: usize,
    pub max_arity: usize,
    pub max_term_norm: f64,
    pub max_degree: usize,
    pub qubit_equivalents: f64,
    pub per_site_degree: Vec<SiteDegree>,
}

/// Precomputed action of one term: for every local column, its nonzero rows.
#[derive(Clone, Debug)]
struct TermKernel {
    sites: Vec<usize>,
    dims: Vec<usize>,
    /// Full-space offset of each local basis index (zero elsewhere).
    offsets: Vec<usize>,
    cols: Vec<Vec<(usize, C64)>>,
}

impl TermKernel {
    fn new(term: &Term, register: &Register, strides: &[usize]) -> Self {
        let dims: Vec<usize> = term.sites.iter().map(|&s| register.site(s).dim).collect();
        let d: usize = dims.iter().product();
        // offsets are only meaningful for registers within the full-space guard
        let offsets = (0..d)
            .map(|l| {
                local_digits(l, &dims)
                    .iter()
                    .zip(&term.sites)
                    .fold(0usize, |acc, (&dg, &s)| {
                        acc.wrapping_add(dg.wrapping_mul(strides[s]))
                    })
            })
            .collect();
        let cols = (0..d)
            .map(|l| {
                (0..d)
                    .filter_map(|r| {
                        let v = term.matrix[r * d + l];
                        (v != ZERO).then_some((r, v))
                    })
                    .collect()
            })
            .collect();
        TermKernel {
            sites: term.sites.clone(),
            dims,
            offsets,
            cols,
        }
    }

    fn local_index(&self, config: &Config) -> usize {
        self.sites
            .iter()
            .zip(&self.dims)
            .fold(0, |acc, (&s, &d)| acc * d + config.get(s) as usize)
    }
}

fn local_digits(mut l: usize, dims: &[usize]) -> Vec<usize> {
    let mut digits = vec![0; dims.len()];
    for i in (0..dims.len()).rev() {
        digits[i] = l % dims[i];
        l /= dims[i];
    }
    digits
}

/// (dim, stride) of every site not in `sites`, least significant first.
fn free_sites(register: &Register, sites: &[usize]) -> Vec<(usize, usize)> {
    let strides = register.strides();
    (0..register.len())
        .rev()
        .filter(|s| !sites.contains(s))
        .map(|s| (register.site(s).dim, strides[s]))
        .collect()
}

/// Calls `f` on every full-space index whose term-site digits are all zero.
fn for_each_base(free: &[(usize, usize)], mut f: impl FnMut(usize)) {
    let mut digits = vec![0usize; free.len()];
    let mut base = 0usize;
    loop {
        f(base);
        let mut i = 0;
        loop {
            if i == free.len() {
                return;
            }
            let (dim, stride) = free[i];
            digits[i] += 1;
            base += stride;
            if digits[i] < dim {
                break;
            }
            base -= stride * dim;
            digits[i] = 0;
            i += 1;
        }
    }
}

/// Matrix-free Hamiltonian on dense full-space vectors.
#[derive(Clone, Debug)]
pub struct FullOperator {
    dim: usize,
    kernels: Vec<TermKernel>,
    free: Vec<Vec<(usize, usize)>>,
}

impl FullOperator {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `out += H x`
    pub fn apply_into(&self, x: &[C64], out: &mut [C64]) {
        for (kern, free) in self.kernels.iter().zip(&self.free) {
            for_each_base(free, |base| {
                for (l, col) in kern.cols.iter().enumerate() {
                    let xv = x[base + kern.offsets[l]];
                    if xv == ZERO {
                        continue;
                    }
                    for &(r, v) in col {
                        out[base + kern.offsets[r]] += v * xv;
                    }
                }
            });
        }
    }

    /// Maximum absolute row sum, an upper bound on the spectral norm.
    pub fn row_sum_bound(&self) -> f64 {
        let mut rows = vec![0.0f64; self.dim];
        for (kern, free) in self.kernels.iter().zip(&self.free) {
            let d = kern.offsets.len();
            let mut local = vec![0.0f64; d];
            for col in &kern.cols {
                for &(r, v) in col {
                    local[r] += v.norm();
                }
            }
            for_each_base(free, |base| {
                for r in 0..d {
                    rows[base + kern.offsets[r]] += local[r];
                }
            });
        }
        rows.into_iter().fold(0.0, f64::max)
    }
}

/// Term-list action on sparse states. Only terms touching an occupied site
/// (or acting on the all-empty local configuration) are visited.
#[derive(Clone, Debug)]
pub struct SparseOperator {
    kernels: Vec<TermKernel>,
    by_site: Vec<Vec<usize>>,
    always: Vec<usize>,
}

impl SparseOperator {
    pub fn apply(&self, state: &SparseState) -> SparseState {
        let mut out = SparseState::new();
        let mut candidates = Vec::new();
        for (cfg, &amp) in &state.entries {
            candidates.clear();
            candidates.extend_from_slice(&self.always);
            for (s, _) in cfg.pairs() {
                candidates.extend_from_slice(&self.by_site[s]);
            }
            candidates.sort_unstable();
            candidates.dedup();
            for &k in &candidates {
                let kern = &self.kernels[k];
                let l = kern.local_index(cfg);
                for &(r, v) in &kern.cols[l] {
                    let mut next = cfg.clone();
                    for (&s, &dg) in kern.sites.iter().zip(&local_digits(r, &kern.dims)) {
                        next.set(s, dg as u8);
                    }
                    out.add(next, v * amp);
                }
            }
        }
        out
    }
}

/// Compressed sparse row matrix over the full space.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    pub dim: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<C64>,
}

impl CsrMatrix {
    /// Sums duplicate entries and drops exact zeros.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0usize; dim + 1];
        let mut indices = Vec::new();
        let mut values: Vec<C64> = Vec::new();
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..dim {
            indptr[i + 1] += indptr[i];
        }
        let mut m = CsrMatrix {
            dim,
            indptr,
            indices,
            values,
        };
        m.prune();
        m
    }

    fn prune(&mut self) {
        let mut indptr = vec![0usize; self.dim + 1];
        let mut indices = Vec::with_capacity(self.indices.len());
        let mut values = Vec::with_capacity(self.values.len());
        for r in 0..self.dim {
            for k in self.indptr[r]..self.indptr[r + 1] {
                if self.values[k] != ZERO {
                    indices.push(self.indices[k]);
                    values.push(self.values[k]);
                }
            }
            indptr[r + 1] = indices.len();
        }
        self.indptr = indptr;
        self.indices = indices;
        self.values = values;
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let row = &self.indices[self.indptr[r]..self.indptr[r + 1]];
        match row.binary_search(&c) {
            Ok(k) => self.values[self.indptr[r] + k],
            Err(_) => ZERO,
        }
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        (0..self.dim)
            .map(|r| {
                (self.indptr[r]..self.indptr[r + 1])
                    .map(|k| self.values[k] * x[self.indices[k]])
                    .sum()
            })
            .collect()
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<C64> {
        let mut out = vec![ZERO; self.dim * self.dim];
        for r in 0..self.dim {
            for k in self.indptr[r]..self.indptr[r + 1] {
                out[r * self.dim + self.indices[k]] = self.values[k];
            }
        }
        out
    }

    /// `max |H_ij - conj(H_ji)|`
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.dim {
            for k in self.indptr[r]..self.indptr[r + 1] {
                let c = self.indices[k];
                worst = worst.max((self.values[k] - self.get(c, r).conj()).norm());
            }
        }
        worst
    }
}

/// Serializes a complex vector as `[[re, im], ...]`.
pub(crate) mod complex_pairs {
    use super::C64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[C64], s: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = v.iter().map(|z| [z.re, z.im]).collect();
        pairs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<C64>, D::Error> {
        let pairs: Vec<[f64; 2]> = Vec::deserialize(d)?;
        Ok(pairs.into_iter().map(|[re, im]| C64::new(re, im)).collect())
    }
}

/// Serializes one complex number as `[re, im]`.
pub(crate) mod complex_pair {
    use super::C64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(z: &C64, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(C64::new(re, im))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, mat2_flat, max_abs_diff, ONE, PAULI_X};

    fn qubits(n: usize) -> Register {
        let mut r = Register::new();
        for i in 0..n {
            r.push(2, SiteRole::Work, format!("q{i}"));
        }
        r
    }

    #[test]
    fn empty_term_list_gives_zero() {
        let h = TermList::new(qubits(2));
        let psi = vec![c(0.5, 0.0); 4];
        assert_eq!(h.apply(&psi).unwrap(), vec![ZERO; 4]);
        assert_eq!(h.embed_full().unwrap().nnz(), 0);
    }

    #[test]
    fn pauli_x_flips() {
        let mut h = TermList::new(qubits(1));
        h.push(Term {
            sites: vec![0],
            matrix: mat2_flat(&PAULI_X),
            tag: "x".into(),
        })
        .unwrap();
        let out = h.apply(&[ONE, ZERO]).unwrap();
        assert_eq!(out, vec![ZERO, ONE]);
    }

    #[test]
    fn embed_pads_untouched_site_with_identity() {
        // X (x) X on sites (0, 2) of a 3-qubit register
        let mut h = TermList::new(qubits(3));
        let xx = crate::linalg::kron(&mat2_flat(&PAULI_X), 2, &mat2_flat(&PAULI_X), 2);
        h.push(Term {
            sites: vec![0, 2],
            matrix: xx,
            tag: "xx".into(),
        })
        .unwrap();
        let m = h.embed_full().unwrap();
        assert_eq!(m.nnz(), 8);
        // |000> -> |101>, |010> -> |111>
        assert_eq!(m.get(0b101, 0b000), ONE);
        assert_eq!(m.get(0b111, 0b010), ONE);
        assert_eq!(m.get(0b111, 0b000), ZERO);
    }

    #[test]
    fn rejects_bad_terms() {
        let mut h = TermList::new(qubits(2));
        let bad_dim = Term {
            sites: vec![0],
            matrix: vec![ONE; 9],
            tag: "dim".into(),
        };
        assert!(h.push(bad_dim).is_err());
        let repeated = Term {
            sites: vec![0, 0],
            matrix: vec![ZERO; 16],
            tag: "rep".into(),
        };
        assert!(h.push(repeated).is_err());
        let big = Term {
            sites: vec![0],
            matrix: vec![c(3.0, 0.0), ZERO, ZERO, ZERO],
            tag: "big".into(),
        };
        assert!(h.push(big).is_err());
    }

    #[test]
    fn sparse_and_dense_agree_on_qutrits() {
        let mut r = qubits(1);
        r.push(3, SiteRole::GadgetQutrit, "u");
        let mut h = TermList::new(r);
        // |B><A|_u (x) X_q + h.c.
        let mut m = vec![ZERO; 36];
        // local index = q*3 + u
        for q in 0..2 {
            let qf = 1 - q;
            m[(qf * 3 + 2) * 6 + (q * 3 + 1)] = ONE;
            m[(q * 3 + 1) * 6 + (qf * 3 + 2)] = ONE;
        }
        h.push(Term {
            sites: vec![0, 1],
            matrix: m,
            tag: "t".into(),
        })
        .unwrap();
        let psi: Vec<C64> = (0..6).map(|i| c(i as f64, 0.5 * i as f64)).collect();
        let dense = h.apply(&psi).unwrap();
        let sparse = h
            .apply_sparse(&SparseState::from_dense(&psi, &h.register, 0.0))
            .to_dense(&h.register);
        assert!(max_abs_diff(&dense, &sparse) < 1e-15);
        assert!(h.embed_full().unwrap().hermitian_defect() < 1e-15);
    }

    #[test]
    fn guard_rejects_large_registers() {
        let h = TermList::new(qubits(23));
        assert!(matches!(h.full_operator(), Err(Error::ResourceGuard(_))));
        assert!(matches!(h.embed_full(), Err(Error::ResourceGuard(_))));
    }
}
