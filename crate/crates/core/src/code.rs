//! Linear storage codes and their combinatorial analytics.
//!
//! A [`LinearCode`] is held as a full-row-rank `k × n` generator matrix. The
//! analytics here (information sets, generalized Hamming weights, puncturing,
//! direct-sum decomposition) are exact and enumeration based; each enumeration
//! is guarded by a configurable cap.

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::field::{Field, FieldError, Sym};
use crate::linalg::{self, Matrix, SpanSolver};

/// Upper bound on `binomial(n, k)` for information-set enumeration.
pub const DEFAULT_INFO_SET_CAP: u128 = 1_000_000;
/// Upper bound on `q^k` for subspace and codeword enumeration.
pub const DEFAULT_SUBSPACE_CAP: u128 = 1 << 20;
/// Blocklengths are limited so coordinate sets fit a `u64` mask.
pub const MAX_BLOCKLENGTH: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodeError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("generator matrix is empty")]
    Empty,
    #[error("generator rows have unequal lengths")]
    Ragged,
    #[error("generator has rank {rank} but {k} rows; rows must be linearly independent")]
    RankDeficient { rank: usize, k: usize },
    #[error("dimension k = {k} exceeds blocklength n = {n}")]
    DimensionTooLarge { k: usize, n: usize },
    #[error("blocklength {0} exceeds the supported maximum {MAX_BLOCKLENGTH}")]
    TooLong(usize),
    #[error("symbol {value} at row {row}, column {col} is not in GF({q})")]
    SymbolOutOfRange {
        value: u64,
        row: usize,
        col: usize,
        q: u32,
    },
    #[error("decimal column {index} = {value} does not fit in {k} base-{q} digits")]
    ColumnTooWide {
        index: usize,
        value: u64,
        k: usize,
        q: u32,
    },
    #[error("coordinate set must have size k = {k}, got {got}")]
    WrongSetSize { k: usize, got: usize },
    #[error("coordinate {coord} outside [1, {n}]")]
    CoordOutOfRange { coord: usize, n: usize },
    #[error("coordinate set is empty")]
    EmptySet,
    #[error("enumeration of {needed} items exceeds the cap {cap}; test candidate sets on demand instead")]
    CapExceeded { needed: u128, cap: u128 },
    #[error("s = {s} outside [1, {k}]")]
    BadSubcodeDimension { s: usize, k: usize },
    #[error("coordinate {0} is identically zero in every codeword")]
    ZeroCoordinate(usize),
}

/// A set of code coordinates.
///
/// Stored 0-based and sorted; rendered and serialized 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CoordSet(Vec<usize>);

impl CoordSet {
    /// From 0-based indices (sorted and deduplicated).
    pub fn new(mut coords: Vec<usize>) -> Self {
        coords.sort_unstable();
        coords.dedup();
        CoordSet(coords)
    }

    /// From 1-based indices as written in the literature.
    pub fn one_based(coords: &[usize]) -> Self {
        assert!(coords.iter().all(|&c| c >= 1), "1-based coordinates");
        CoordSet::new(coords.iter().map(|c| c - 1).collect())
    }

    pub fn from_mask(mask: u64) -> Self {
        CoordSet((0..64).filter(|i| mask >> i & 1 == 1).collect())
    }

    pub fn mask(&self) -> u64 {
        self.0.iter().fold(0, |m, &c| m | 1 << c)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, c: usize) -> bool {
        self.0.binary_search(&c).is_ok()
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.0.iter().map(|c| c + 1).collect()
    }
}

impl fmt::Display for CoordSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.to_one_based().iter().map(|c| c.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

impl Serialize for CoordSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_one_based().serialize(s)
    }
}

impl<'de> Deserialize<'de> for CoordSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Vec::<usize>::deserialize(d)?;
        if v.contains(&0) {
            return Err(serde::de::Error::custom("coordinates are 1-based"));
        }
        Ok(CoordSet::one_based(&v))
    }
}

/// An `[n, k]` linear code over GF(q) given by a full-rank generator matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearCode {
    field: Field,
    generator: Matrix,
    /// Column `l` of the generator packed as bits, binary codes only.
    binary_columns: Option<Vec<u64>>,
}

#[derive(Serialize, Deserialize)]
struct CodeRepr {
    q: u32,
    generator: Vec<Vec<Sym>>,
}

impl Serialize for LinearCode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        CodeRepr {
            q: self.field.order(),
            generator: self.generator.to_rows(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for LinearCode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = CodeRepr::deserialize(d)?;
        let field = Field::new(repr.q).map_err(serde::de::Error::custom)?;
        LinearCode::new(field, repr.generator).map_err(serde::de::Error::custom)
    }
}

impl LinearCode {
    /// Validates shape, symbol range and full row rank.
    pub fn new(field: Field, rows: Vec<Vec<Sym>>) -> Result<Self, CodeError> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(CodeError::Empty);
        }
        let n = rows[0].len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(CodeError::Ragged);
        }
        if n > MAX_BLOCKLENGTH {
            return Err(CodeError::TooLong(n));
        }
        let k = rows.len();
        if k > n {
            return Err(CodeError::DimensionTooLarge { k, n });
        }
        for (r, row) in rows.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                if v >= field.order() {
                    return Err(CodeError::SymbolOutOfRange {
                        value: v as u64,
                        row: r,
                        col: c,
                        q: field.order(),
                    });
                }
            }
        }
        let generator = Matrix::from_rows(&rows);
        let rank = linalg::rank(&field, &generator);
        if rank != k {
            return Err(CodeError::RankDeficient { rank, k });
        }
        let binary_columns = field.is_binary().then(|| {
            (0..n)
                .map(|c| (0..k).fold(0u64, |m, r| m | (generator.get(r, c) as u64) << r))
                .collect()
        });
        Ok(LinearCode {
            field,
            generator,
            binary_columns,
        })
    }

    /// Parses the compact decimal column form: each integer is one column of
    /// height `k`, written in base `q` with the first row as least
    /// significant digit. Over GF(2), `13` is the column `(1,0,1,1)^T`.
    pub fn from_decimal_columns(
        field: Field,
        k: usize,
        columns: &[u64],
    ) -> Result<Self, CodeError> {
        let q = field.order() as u64;
        let mut rows = vec![vec![0; columns.len()]; k];
        for (c, &value) in columns.iter().enumerate() {
            let mut rest = value;
            for row in rows.iter_mut() {
                row[c] = (rest % q) as Sym;
                rest /= q;
            }
            if rest != 0 {
                return Err(CodeError::ColumnTooWide {
                    index: c,
                    value,
                    k,
                    q: field.order(),
                });
            }
        }
        LinearCode::new(field, rows)
    }

    /// Inverse of [`LinearCode::from_decimal_columns`].
    pub fn to_decimal_columns(&self) -> Vec<u64> {
        let q = self.field.order() as u64;
        (0..self.n())
            .map(|c| {
                (0..self.k())
                    .rev()
                    .fold(0u64, |acc, r| acc * q + self.generator.get(r, c) as u64)
            })
            .collect()
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn generator(&self) -> &Matrix {
        &self.generator
    }

    pub fn n(&self) -> usize {
        self.generator.cols()
    }

    pub fn k(&self) -> usize {
        self.generator.rows()
    }

    pub fn column(&self, l: usize) -> Vec<Sym> {
        self.generator.column(l)
    }

    pub fn rank(&self) -> usize {
        linalg::rank(&self.field, &self.generator)
    }

    /// Short stable fingerprint of the field and generator.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(format!("q={};", self.field.order()).as_bytes());
        for row in self.generator.to_rows() {
            let s: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            h.update(s.join(",").as_bytes());
            h.update(b";");
        }
        hex::encode(&h.finalize()[..16])
    }

    pub fn encode(&self, message: &[Sym]) -> Vec<Sym> {
        self.generator.left_mul(&self.field, message)
    }

    /// Rank of the column submatrix selected by `mask`.
    pub fn rank_of_mask(&self, mask: u64) -> usize {
        match &self.binary_columns {
            Some(cols) => {
                let mut basis = [0u64; 64];
                let mut rank = 0;
                for (l, &col) in cols.iter().enumerate() {
                    if mask >> l & 1 == 0 {
                        continue;
                    }
                    let mut v = col;
                    while v != 0 {
                        let top = 63 - v.leading_zeros() as usize;
                        if basis[top] == 0 {
                            basis[top] = v;
                            rank += 1;
                            break;
                        }
                        v ^= basis[top];
                    }
                }
                rank
            }
            None => {
                let cols: Vec<usize> = (0..self.n()).filter(|l| mask >> l & 1 == 1).collect();
                linalg::rank(&self.field, &self.generator.select_columns(&cols))
            }
        }
    }

    /// True when the coordinates in `mask` contain an information set.
    pub fn spans(&self, mask: u64) -> bool {
        self.rank_of_mask(mask) == self.k()
    }

    fn check_coords(&self, set: &CoordSet) -> Result<(), CodeError> {
        if let Some(&c) = set.indices().iter().find(|&&c| c >= self.n()) {
            return Err(CodeError::CoordOutOfRange {
                coord: c + 1,
                n: self.n(),
            });
        }
        Ok(())
    }

    pub fn is_information_set(&self, set: &CoordSet) -> Result<bool, CodeError> {
        if set.len() != self.k() {
            return Err(CodeError::WrongSetSize {
                k: self.k(),
                got: set.len(),
            });
        }
        self.check_coords(set)?;
        Ok(self.spans(set.mask()))
    }

    pub fn enumerate_information_sets(&self) -> Result<Vec<CoordSet>, CodeError> {
        self.enumerate_information_sets_capped(DEFAULT_INFO_SET_CAP)
    }

    /// All information sets in lexicographic order.
    pub fn enumerate_information_sets_capped(&self, cap: u128) -> Result<Vec<CoordSet>, CodeError> {
        let needed = binomial(self.n() as u64, self.k() as u64);
        if needed > cap {
            return Err(CodeError::CapExceeded { needed, cap });
        }
        let mut out = Vec::new();
        for combo in Combinations::new(self.n(), self.k()) {
            let set = CoordSet::new(combo);
            if self.spans(set.mask()) {
                out.push(set);
            }
        }
        Ok(out)
    }

    /// Lexicographically smallest information set inside `mask`.
    pub fn smallest_information_set_within(&self, mask: u64) -> Option<CoordSet> {
        // greedy column selection in index order yields the lexicographically smallest basis
        let mut chosen = 0u64;
        let mut rank = 0;
        for l in 0..self.n() {
            if mask >> l & 1 == 0 {
                continue;
            }
            let r = self.rank_of_mask(chosen | 1 << l);
            if r > rank {
                chosen |= 1 << l;
                rank = r;
            }
        }
        (rank == self.k()).then(|| CoordSet::from_mask(chosen))
    }

    pub fn support_mask(&self, word: &[Sym]) -> u64 {
        word.iter()
            .enumerate()
            .fold(0, |m, (l, &v)| if v != 0 { m | 1 << l } else { m })
    }

    /// Support of the whole code.
    pub fn support(&self) -> CoordSet {
        CoordSet::new(
            (0..self.n())
                .filter(|&l| !self.generator.is_zero_column(l))
                .collect(),
        )
    }

    fn check_enumeration(&self, cap: u128) -> Result<(), CodeError> {
        let needed = (self.field.order() as u128).saturating_pow(self.k() as u32);
        if needed > cap {
            return Err(CodeError::CapExceeded { needed, cap });
        }
        Ok(())
    }

    /// All `q^k` codewords in message-counter order.
    pub fn codewords(&self, cap: u128) -> Result<Vec<Vec<Sym>>, CodeError> {
        self.check_enumeration(cap)?;
        let q = self.field.order();
        let total = (q as u64).pow(self.k() as u32);
        Ok((0..total)
            .map(|mut idx| {
                let msg: Vec<Sym> = (0..self.k())
                    .map(|_| {
                        let d = (idx % q as u64) as Sym;
                        idx /= q as u64;
                        d
                    })
                    .collect();
                self.encode(&msg)
            })
            .collect())
    }

    pub fn generalized_hamming_weight(&self, s: usize) -> Result<usize, CodeError> {
        self.generalized_hamming_weight_capped(s, DEFAULT_SUBSPACE_CAP)
    }

    /// `d_s`: the smallest support of an `s`-dimensional subcode, found by
    /// enumerating every `s`-dimensional subspace of the message space in
    /// reduced echelon form.
    pub fn generalized_hamming_weight_capped(
        &self,
        s: usize,
        cap: u128,
    ) -> Result<usize, CodeError> {
        let k = self.k();
        if s == 0 || s > k {
            return Err(CodeError::BadSubcodeDimension { s, k });
        }
        self.check_enumeration(cap)?;
        let q = self.field.order();
        let mut best = usize::MAX;
        for pivots in Combinations::new(k, s) {
            // free positions: (row i, column c) with c > pivot_i and c not a pivot
            let free: Vec<(usize, usize)> = pivots
                .iter()
                .enumerate()
                .flat_map(|(i, &p)| {
                    let pivots = &pivots;
                    (p + 1..k)
                        .filter(move |c| !pivots.contains(c))
                        .map(move |c| (i, c))
                })
                .collect();
            let mut basis = vec![vec![0 as Sym; k]; s];
            for (i, &p) in pivots.iter().enumerate() {
                basis[i][p] = 1;
            }
            let mut digits = vec![0 as Sym; free.len()];
            loop {
                for (&(i, c), &d) in free.iter().zip(&digits) {
                    basis[i][c] = d;
                }
                let support = basis
                    .iter()
                    .fold(0u64, |m, row| m | self.support_mask(&self.encode(row)));
                best = best.min(support.count_ones() as usize);
                if !increment(&mut digits, q) {
                    break;
                }
            }
        }
        Ok(best)
    }

    /// `(d_1, …, d_k)`.
    pub fn weight_hierarchy(&self) -> Result<Vec<usize>, CodeError> {
        (1..=self.k())
            .map(|s| self.generalized_hamming_weight(s))
            .collect()
    }

    /// Checks `d_s ≥ (n/k)·s` for every `s`, returning the first failing `s`.
    pub fn mds_pir_necessary_check(&self) -> Result<NecessaryCheck, CodeError> {
        let (n, k) = (self.n(), self.k());
        for s in 1..=k {
            let d = self.generalized_hamming_weight(s)?;
            // d_s ≥ n s / k  ⇔  d_s k ≥ n s
            if d * k < n * s {
                return Ok(NecessaryCheck {
                    pass: false,
                    failing_s: Some(s),
                });
            }
        }
        Ok(NecessaryCheck {
            pass: true,
            failing_s: None,
        })
    }

    /// Restriction to the coordinates `set`, with dependent rows removed.
    pub fn puncture(&self, set: &CoordSet) -> Result<Punctured, CodeError> {
        if set.is_empty() {
            return Err(CodeError::EmptySet);
        }
        self.check_coords(set)?;
        let mut sub = self.generator.select_columns(set.indices());
        let pivots = linalg::rref(&self.field, &mut sub);
        if pivots.is_empty() {
            return Err(CodeError::ZeroCoordinate(set.indices()[0] + 1));
        }
        let rows: Vec<usize> = (0..pivots.len()).collect();
        let code = LinearCode::new(self.field.clone(), sub.select_rows(&rows).to_rows())?;
        Ok(Punctured {
            code,
            coords: set.clone(),
        })
    }

    /// Finest partition of the coordinates into blocks on which the code
    /// splits as a direct sum.
    ///
    /// Two coordinates share a block when they lie in a common fundamental
    /// circuit of the generator's column matroid with respect to the pivot
    /// basis of its reduced echelon form.
    pub fn direct_sum_decompose(&self) -> Result<Decomposition, CodeError> {
        let n = self.n();
        if let Some(l) = (0..n).find(|&l| self.generator.is_zero_column(l)) {
            return Err(CodeError::ZeroCoordinate(l + 1));
        }
        let mut reduced = self.generator.clone();
        let pivots = linalg::rref(&self.field, &mut reduced);
        let mut dsu = DisjointSets::new(n);
        for l in 0..n {
            if pivots.contains(&l) {
                continue;
            }
            for (row, &p) in pivots.iter().enumerate() {
                if reduced.get(row, l) != 0 {
                    dsu.union(l, p);
                }
            }
        }
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        let mut block_of = vec![usize::MAX; n];
        for l in 0..n {
            let root = dsu.find(l);
            if block_of[root] == usize::MAX {
                block_of[root] = blocks.len();
                blocks.push(Vec::new());
            }
            blocks[block_of[root]].push(l);
        }
        let parts = blocks
            .into_iter()
            .map(|b| self.puncture(&CoordSet::new(b)))
            .collect::<Result<Vec<_>, _>>()?;
        debug_assert_eq!(parts.iter().map(|p| p.code.k()).sum::<usize>(), self.k());
        Ok(Decomposition { parts })
    }

    /// True when both generators span the same code.
    pub fn same_code(&self, other: &LinearCode) -> bool {
        if self.field != other.field || self.n() != other.n() || self.k() != other.k() {
            return false;
        }
        let mut rows = self.generator.to_rows();
        rows.extend(other.generator.to_rows());
        linalg::rank(&self.field, &Matrix::from_rows(&rows)) == self.k()
    }

    /// Solver expressing columns of the generator in terms of the columns
    /// selected by `mask`.
    pub fn column_solver(&self, mask: u64) -> (Vec<usize>, SpanSolver) {
        let coords: Vec<usize> = (0..self.n()).filter(|l| mask >> l & 1 == 1).collect();
        let cols: Vec<Vec<Sym>> = coords.iter().map(|&l| self.column(l)).collect();
        let solver = SpanSolver::new(&self.field, &cols, self.k());
        (coords, solver)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NecessaryCheck {
    pub pass: bool,
    pub failing_s: Option<usize>,
}

/// A punctured code with the map from its columns to mother-code coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Punctured {
    pub code: LinearCode,
    pub coords: CoordSet,
}

impl Punctured {
    /// Mother-code coordinate of local column `j`.
    pub fn mother_coord(&self, j: usize) -> usize {
        self.coords.indices()[j]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decomposition {
    pub parts: Vec<Punctured>,
}

impl Decomposition {
    pub fn is_trivial(&self) -> bool {
        self.parts.len() == 1
    }

    /// `(n_p, k_p)` per part.
    pub fn shapes(&self) -> Vec<(usize, usize)> {
        self.parts
            .iter()
            .map(|p| (p.code.n(), p.code.k()))
            .collect()
    }

    /// Block-diagonal generator placed back on the recorded coordinates.
    pub fn reassemble(&self) -> Result<LinearCode, CodeError> {
        let n: usize = self.parts.iter().map(|p| p.code.n()).sum();
        let field = self.parts[0].code.field().clone();
        let mut rows = Vec::new();
        for part in &self.parts {
            for r in 0..part.code.k() {
                let mut row = vec![0; n];
                for (j, &v) in part.code.generator().row(r).iter().enumerate() {
                    row[part.mother_coord(j)] = v;
                }
                rows.push(row);
            }
        }
        LinearCode::new(field, rows)
    }
}

struct DisjointSets(Vec<usize>);

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets((0..n).collect())
    }

    fn find(&mut self, x: usize) -> usize {
        let p = self.0[x];
        if p == x {
            return x;
        }
        let r = self.find(p);
        self.0[x] = r;
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Odometer increment of base-`q` digits; false on wrap-around.
fn increment(digits: &mut [Sym], q: u32) -> bool {
    for d in digits.iter_mut() {
        *d += 1;
        if *d < q {
            return true;
        }
        *d = 0;
    }
    false
}

pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Lexicographic `k`-subsets of `0..n`.
pub struct Combinations {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Self {
        Combinations {
            n,
            current: (k <= n).then(|| (0..k).collect()),
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let k = out.len();
        let mut next = out.clone();
        let mut i = k;
        loop {
            if i == 0 {
                self.current = None;
                break;
            }
            i -= 1;
            if next[i] < self.n - k + i {
                next[i] += 1;
                for j in i + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                self.current = Some(next);
                break;
            }
        }
        Some(out)
    }
}
