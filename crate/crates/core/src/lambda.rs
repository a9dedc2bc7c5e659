//! Rate matrices: binary `ν × n` matrices with constant column weight `κ`
//! whose every row support contains an information set.
//!
//! The search is an exact backtracking procedure with a node budget, so a
//! negative answer is either a proof (search exhausted) or an honest
//! "budget exceeded".

use std::rc::Rc;

use num_integer::Integer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::code::{CodeError, CoordSet, LinearCode};

pub const DEFAULT_NU_MAX: usize = 8;
pub const DEFAULT_BUDGET: u64 = 20_000_000;
/// Candidate row supports are enumerated over all `2^n` subsets.
pub const MAX_SEARCH_BLOCKLENGTH: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LambdaError {
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error("matrix has no rows")]
    Empty,
    #[error("row {row} has {got} columns, code has n = {n}")]
    DimensionMismatch { row: usize, got: usize, n: usize },
    #[error("entry ({row}, {col}) is {value}, expected 0 or 1")]
    NotBinary { row: usize, col: usize, value: u8 },
    #[error("need 1 <= kappa <= nu, got kappa = {kappa}, nu = {nu}")]
    BadParameters { kappa: usize, nu: usize },
    #[error("blocklength {0} too large for exhaustive rate-matrix search (max {MAX_SEARCH_BLOCKLENGTH})")]
    SearchTooLarge(usize),
    #[error("matrix was certified for code {expected}, not {got}")]
    HashMismatch { expected: String, got: String },
    #[error("invalid rate matrix: {0}")]
    Invalid(Violation),
    #[error("malformed rate-matrix JSON: {0}")]
    Json(String),
}

/// The first failing condition of a candidate rate matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    ColumnWeight {
        column: usize,
        weight: usize,
        expected: usize,
    },
    RowWithoutInformationSet {
        row: usize,
    },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::ColumnWeight {
                column,
                weight,
                expected,
            } => write!(
                f,
                "column {column} has weight {weight}, expected {expected}"
            ),
            Violation::RowWithoutInformationSet { row } => {
                write!(f, "support of row {row} contains no information set")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Validation {
    pub valid: bool,
    pub violation: Option<Violation>,
}

/// A validated rate matrix. Rows are stored as coordinate bitmasks.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RateMatrix {
    kappa: usize,
    nu: usize,
    n: usize,
    rows: Vec<u64>,
    code_hash: String,
}

fn to_masks(n: usize, rows: &[Vec<u8>]) -> Result<Vec<u64>, LambdaError> {
    if rows.is_empty() {
        return Err(LambdaError::Empty);
    }
    rows.iter()
        .enumerate()
        .map(|(r, row)| {
            if row.len() != n {
                return Err(LambdaError::DimensionMismatch {
                    row: r + 1,
                    got: row.len(),
                    n,
                });
            }
            row.iter().enumerate().try_fold(0u64, |m, (c, &v)| match v {
                0 => Ok(m),
                1 => Ok(m | 1 << c),
                _ => Err(LambdaError::NotBinary {
                    row: r + 1,
                    col: c + 1,
                    value: v,
                }),
            })
        })
        .collect()
}

/// Checks both defining conditions; `κ` is read off the first column.
/// Rows and columns in a violation are 1-based.
pub fn validate_rate_matrix(
    code: &LinearCode,
    rows: &[Vec<u8>],
) -> Result<Validation, LambdaError> {
    let masks = to_masks(code.n(), rows)?;
    Ok(match first_violation(code, &masks) {
        None => Validation {
            valid: true,
            violation: None,
        },
        Some(v) => Validation {
            valid: false,
            violation: Some(v),
        },
    })
}

fn first_violation(code: &LinearCode, masks: &[u64]) -> Option<Violation> {
    let weight = |c: usize| masks.iter().filter(|&&m| m >> c & 1 == 1).count();
    let expected = weight(0);
    if let Some(c) = (0..code.n()).find(|&c| weight(c) != expected) {
        return Some(Violation::ColumnWeight {
            column: c + 1,
            weight: weight(c),
            expected,
        });
    }
    masks
        .iter()
        .position(|&m| !code.spans(m))
        .map(|r| Violation::RowWithoutInformationSet { row: r + 1 })
}

impl RateMatrix {
    pub fn new(code: &LinearCode, rows: &[Vec<u8>]) -> Result<Self, LambdaError> {
        let masks = to_masks(code.n(), rows)?;
        Self::from_masks(code, masks)
    }

    fn from_masks(code: &LinearCode, masks: Vec<u64>) -> Result<Self, LambdaError> {
        if let Some(v) = first_violation(code, &masks) {
            return Err(LambdaError::Invalid(v));
        }
        let kappa = masks.iter().filter(|&&m| m & 1 == 1).count();
        if kappa == 0 {
            return Err(LambdaError::BadParameters {
                kappa,
                nu: masks.len(),
            });
        }
        Ok(RateMatrix {
            kappa,
            nu: masks.len(),
            n: code.n(),
            rows: masks,
            code_hash: code.hash(),
        })
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn code_hash(&self) -> &str {
        &self.code_hash
    }

    /// Entry at 0-based row `u`, column `l`.
    pub fn get(&self, u: usize, l: usize) -> bool {
        self.rows[u] >> l & 1 == 1
    }

    /// Support of row `u` as a bitmask.
    pub fn row_mask(&self, u: usize) -> u64 {
        self.rows[u]
    }

    pub fn row_support(&self, u: usize) -> CoordSet {
        CoordSet::from_mask(self.rows[u])
    }

    pub fn rows(&self) -> Vec<Vec<u8>> {
        self.rows
            .iter()
            .map(|&m| (0..self.n).map(|l| (m >> l & 1) as u8).collect())
            .collect()
    }

    /// `κ/ν` in lowest terms.
    pub fn ratio(&self) -> (usize, usize) {
        let g = self.kappa.gcd(&self.nu);
        (self.kappa / g, self.nu / g)
    }

    /// Fails unless the matrix was certified for `code`.
    pub fn check_code(&self, code: &LinearCode) -> Result<(), LambdaError> {
        let got = code.hash();
        if got != self.code_hash {
            return Err(LambdaError::HashMismatch {
                expected: self.code_hash.clone(),
                got,
            });
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&RateMatrixFile {
            kappa: self.kappa,
            nu: self.nu,
            rows: self.rows(),
            code_hash: self.code_hash.clone(),
        })
        .expect("serializable")
    }

    /// Parses and re-validates against `code`.
    pub fn from_json(code: &LinearCode, json: &str) -> Result<Self, LambdaError> {
        let file: RateMatrixFile =
            serde_json::from_str(json).map_err(|e| LambdaError::Json(e.to_string()))?;
        let m = RateMatrix::new(code, &file.rows)?;
        m.check_code(code)?;
        if (m.kappa, m.nu) != (file.kappa, file.nu) {
            return Err(LambdaError::Json(format!(
                "declared (kappa, nu) = ({}, {}) but matrix has ({}, {})",
                file.kappa, file.nu, m.kappa, m.nu
            )));
        }
        Ok(m)
    }
}

#[derive(Serialize, Deserialize)]
struct RateMatrixFile {
    kappa: usize,
    nu: usize,
    rows: Vec<Vec<u8>>,
    code_hash: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SearchOutcome {
    Found(RateMatrix),
    /// The search space was exhausted.
    NoneExists,
    BudgetExceeded,
}

impl SearchOutcome {
    pub fn found(self) -> Option<RateMatrix> {
        match self {
            SearchOutcome::Found(m) => Some(m),
            _ => None,
        }
    }
}

struct Search<'a> {
    code: &'a LinearCode,
    n: usize,
    kappa: usize,
    /// candidate indices containing column c, ascending
    by_column: Vec<Rc<[usize]>>,
    candidates: Vec<u64>,
    /// (complement of a flat, k − rank of the flat): every spanning row
    /// meets the mask in at least that many coordinates
    cuts: Vec<(u64, usize)>,
    deficit: Vec<usize>,
    chosen: Vec<usize>,
    nodes: u64,
    budget: u64,
    exhausted_budget: bool,
}

impl Search<'_> {
    /// Places `remaining` more rows; `column`/`floor` carry the symmetry
    /// breaking state from the previous choice.
    fn run(&mut self, remaining: usize, column: usize, floor: usize) -> bool {
        self.nodes += 1;
        if self.nodes > self.budget {
            self.exhausted_budget = true;
            return false;
        }
        let total: usize = self.deficit.iter().sum();
        if remaining == 0 {
            return total == 0;
        }
        if total < remaining * self.code.k() || self.deficit.iter().any(|&d| d > remaining) {
            return false;
        }
        for &(mask, need) in &self.cuts {
            let have: usize = (0..self.n)
                .filter(|l| mask >> l & 1 == 1)
                .map(|l| self.deficit[l])
                .sum();
            if have < need * remaining {
                return false;
            }
        }
        let Some(c) = self.deficit.iter().position(|&d| d > 0) else {
            return false;
        };
        let mut open = 0u64;
        let mut forced = 0u64;
        for (l, &d) in self.deficit.iter().enumerate() {
            if d > 0 {
                open |= 1 << l;
            }
            if d == remaining {
                forced |= 1 << l;
            }
        }
        let start = if c == column { floor } else { 0 };
        let list = Rc::clone(&self.by_column[c]);
        let mut found = false;
        for &idx in list.iter().filter(|&&i| i >= start) {
            let mask = self.candidates[idx];
            if mask & !open != 0 || mask & forced != forced {
                continue;
            }
            self.apply(mask, false);
            self.chosen.push(idx);
            found = self.run(remaining - 1, c, idx);
            if found || self.exhausted_budget {
                break;
            }
            self.chosen.pop();
            self.apply(mask, true);
        }
        found
    }

    fn apply(&mut self, mask: u64, undo: bool) {
        for l in 0..self.n {
            if mask >> l & 1 == 1 {
                if undo {
                    self.deficit[l] += 1;
                } else {
                    self.deficit[l] -= 1;
                }
            }
        }
    }
}

/// Supersets of information sets, ordered by size then mask value.
fn spanning_supports(code: &LinearCode) -> Result<Vec<u64>, LambdaError> {
    let n = code.n();
    if n > MAX_SEARCH_BLOCKLENGTH {
        return Err(LambdaError::SearchTooLarge(n));
    }
    let mut out: Vec<u64> = (1u64..1 << n)
        .filter(|m| m.count_ones() as usize >= code.k() && code.spans(*m))
        .collect();
    out.sort_by_key(|m| (m.count_ones(), *m));
    Ok(out)
}

/// Complements of all proper flats of the column matroid, with the
/// minimum intersection any spanning set has with them.
fn flat_cuts(code: &LinearCode) -> Vec<(u64, usize)> {
    let n = code.n();
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let closure = |m: u64| {
        let r = code.rank_of_mask(m);
        (0..n).fold(m, |acc, l| {
            if code.rank_of_mask(m | 1 << l) == r {
                acc | 1 << l
            } else {
                acc
            }
        })
    };
    let mut seen = std::collections::HashSet::new();
    let mut queue = vec![closure(0)];
    let mut cuts = Vec::new();
    while let Some(flat) = queue.pop() {
        if !seen.insert(flat) {
            continue;
        }
        let r = code.rank_of_mask(flat);
        if r == code.k() {
            continue;
        }
        cuts.push((full & !flat, code.k() - r));
        for l in 0..n {
            if flat >> l & 1 == 0 {
                queue.push(closure(flat | 1 << l));
            }
        }
    }
    cuts.sort_unstable();
    cuts
}

/// Exact search for a rate matrix with the given column weight and row count.
pub fn find_rate_matrix(
    code: &LinearCode,
    kappa: usize,
    nu: usize,
    budget: u64,
) -> Result<SearchOutcome, LambdaError> {
    if kappa == 0 || kappa > nu {
        return Err(LambdaError::BadParameters { kappa, nu });
    }
    let candidates = spanning_supports(code)?;
    Ok(search_with(code, &candidates, kappa, nu, budget))
}

fn search_with(
    code: &LinearCode,
    candidates: &[u64],
    kappa: usize,
    nu: usize,
    budget: u64,
) -> SearchOutcome {
    let n = code.n();
    // κ n ≥ ν k is necessary: each row carries at least k ones
    if kappa * n < nu * code.k() {
        return SearchOutcome::NoneExists;
    }
    let by_column = (0..n)
        .map(|c| {
            (0..candidates.len())
                .filter(|&i| candidates[i] >> c & 1 == 1)
                .collect()
        })
        .collect();
    let mut search = Search {
        code,
        n,
        kappa,
        by_column,
        candidates: candidates.to_vec(),
        cuts: flat_cuts(code),
        deficit: vec![kappa; n],
        chosen: Vec::new(),
        nodes: 0,
        budget,
        exhausted_budget: false,
    };
    if search.run(nu, usize::MAX, 0) {
        let masks = search.chosen.iter().map(|&i| candidates[i]).collect();
        let m = RateMatrix::from_masks(code, masks).expect("search emits valid matrices");
        debug_assert_eq!(m.kappa, search.kappa);
        SearchOutcome::Found(m)
    } else if search.exhausted_budget {
        SearchOutcome::BudgetExceeded
    } else {
        SearchOutcome::NoneExists
    }
}

/// Result of minimizing `κ/ν`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinRatio {
    pub matrix: RateMatrix,
    /// True when every smaller ratio with `ν ≤ ν_max` was ruled out
    /// exhaustively rather than by running out of budget.
    pub certified: bool,
}

/// Reduced fractions `a/b ≥ k/n` with `b ≤ nu_max`, ascending by value.
fn fractions_from(k: usize, n: usize, nu_max: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for b in 1..=nu_max {
        let start = (b * k).div_ceil(n).max(1);
        for a in start..=b {
            if a.gcd(&b) == 1 {
                out.push((a, b));
            }
        }
    }
    out.sort_by(|x, y| (x.0 * y.1).cmp(&(y.0 * x.1)));
    out
}

/// Smallest `κ/ν` over all rate matrices with `ν ≤ nu_max`.
///
/// Every code has the trivial all-ones `1 × n` matrix, so a result always
/// exists; `certified` reports whether smaller ratios were fully excluded.
pub fn find_min_ratio(
    code: &LinearCode,
    nu_max: usize,
    budget: u64,
) -> Result<MinRatio, LambdaError> {
    if nu_max == 0 {
        return Err(LambdaError::BadParameters { kappa: 0, nu: 0 });
    }
    let candidates = spanning_supports(code)?;
    let mut certified = true;
    for (a, b) in fractions_from(code.k(), code.n(), nu_max) {
        for mult in 1..=nu_max / b {
            match search_with(code, &candidates, a * mult, b * mult, budget) {
                SearchOutcome::Found(matrix) => return Ok(MinRatio { matrix, certified }),
                SearchOutcome::NoneExists => {}
                SearchOutcome::BudgetExceeded => certified = false,
            }
        }
    }
    unreachable!("the all-ones row is always a rate matrix")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CapacityVerdict {
    Yes(RateMatrix),
    /// No matrix with `κ/ν = k/n` exists for any `ν ≤ ν_max`.
    NoWithinNuMax,
    Inconclusive,
}

impl CapacityVerdict {
    pub fn is_yes(&self) -> bool {
        matches!(self, CapacityVerdict::Yes(_))
    }

    pub fn label(&self) -> &'static str {
        match self {
            CapacityVerdict::Yes(_) => "yes",
            CapacityVerdict::NoWithinNuMax => "no",
            CapacityVerdict::Inconclusive => "inconclusive",
        }
    }
}

/// Looks for a rate matrix with `κ/ν = k/n` among multiples of the reduced ratio.
pub fn is_capacity_achieving(
    code: &LinearCode,
    nu_max: usize,
    budget: u64,
) -> Result<CapacityVerdict, LambdaError> {
    let g = code.k().gcd(&code.n());
    let (a, b) = (code.k() / g, code.n() / g);
    let candidates = spanning_supports(code)?;
    let mut inconclusive = false;
    for mult in 1..=nu_max / b {
        match search_with(code, &candidates, a * mult, b * mult, budget) {
            SearchOutcome::Found(m) => return Ok(CapacityVerdict::Yes(m)),
            SearchOutcome::NoneExists => {}
            SearchOutcome::BudgetExceeded => inconclusive = true,
        }
    }
    Ok(if inconclusive {
        CapacityVerdict::Inconclusive
    } else {
        CapacityVerdict::NoWithinNuMax
    })
}

/// Per column `l`, the rows of the rate matrix holding a one (`present`)
/// and a zero (`absent`), both ascending. Row indices are 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterferencePair {
    /// `κ × n`
    pub present: Vec<Vec<usize>>,
    /// `(ν − κ) × n`
    pub absent: Vec<Vec<usize>>,
}

impl InterferencePair {
    pub fn build(m: &RateMatrix) -> Self {
        let mut present = vec![vec![0; m.n]; m.kappa];
        let mut absent = vec![vec![0; m.n]; m.nu - m.kappa];
        for l in 0..m.n {
            let (ones, zeros): (Vec<usize>, Vec<usize>) = (0..m.nu).partition(|&u| m.get(u, l));
            for (i, u) in ones.into_iter().enumerate() {
                present[i][l] = u;
            }
            for (i, u) in zeros.into_iter().enumerate() {
                absent[i][l] = u;
            }
        }
        InterferencePair { present, absent }
    }

    /// Columns in which row `u` appears among the present entries.
    pub fn occurrences(&self, u: usize) -> CoordSet {
        let n = self.present.first().map_or(0, Vec::len);
        CoordSet::new(
            (0..n)
                .filter(|&l| self.present.iter().any(|r| r[l] == u))
                .collect(),
        )
    }

    /// Index `i` with `present[i][l] == u`, if any.
    pub fn present_index(&self, u: usize, l: usize) -> Option<usize> {
        self.present.iter().position(|r| r[l] == u)
    }

    /// Every row's occurrence set spans the code, and an absent entry in
    /// column `l` never occurs in column `l` of the present matrix.
    pub fn check_claims(&self, code: &LinearCode, nu: usize) -> bool {
        let spanning = (0..nu).all(|u| code.spans(self.occurrences(u).mask()));
        let disjoint = self
            .absent
            .iter()
            .flat_map(|row| row.iter().enumerate())
            .all(|(l, &b)| !self.occurrences(b).contains(l));
        spanning && disjoint
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Field;
    use crate::fixtures;

    #[test]
    fn example_matrices_are_valid() {
        let v = validate_rate_matrix(&fixtures::c1(), &fixtures::c1_rate_rows()).unwrap();
        assert!(v.valid);
        let v = validate_rate_matrix(&fixtures::c2(), &fixtures::c2_rate_rows()).unwrap();
        assert!(v.valid);
        let ones = vec![vec![1u8; 5]];
        let m = RateMatrix::new(&fixtures::c1(), &ones).unwrap();
        assert_eq!((m.kappa(), m.nu()), (1, 1));
    }

    #[test]
    fn violations_are_named() {
        let mut rows = fixtures::c1_rate_rows();
        rows[0][3] = 0;
        let v = validate_rate_matrix(&fixtures::c1(), &rows).unwrap();
        assert_eq!(
            v.violation,
            Some(Violation::ColumnWeight {
                column: 4,
                weight: 1,
                expected: 2
            })
        );
        // constant weight but row 3 = {3,4,5} is not spanning
        let rows = vec![vec![1, 1, 0, 0, 0], vec![0, 0, 1, 1, 1]];
        let v = validate_rate_matrix(&fixtures::c1(), &rows).unwrap();
        assert!(!v.valid);
        assert!(matches!(
            validate_rate_matrix(&fixtures::c1(), &[vec![1, 1]]),
            Err(LambdaError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn search_examples() {
        let c1 = fixtures::c1();
        let m = find_rate_matrix(&c1, 2, 3, DEFAULT_BUDGET)
            .unwrap()
            .found()
            .unwrap();
        assert!(validate_rate_matrix(&c1, &m.rows()).unwrap().valid);
        assert_eq!(
            find_rate_matrix(&c1, 1, 2, DEFAULT_BUDGET).unwrap(),
            SearchOutcome::NoneExists
        );

        let rep = fixtures::repetition2();
        let m = find_rate_matrix(&rep, 1, 2, DEFAULT_BUDGET)
            .unwrap()
            .found()
            .unwrap();
        let mut rows = m.rows();
        rows.sort();
        assert_eq!(rows, vec![vec![0, 1], vec![1, 0]]);
    }

    #[test]
    fn tiny_budget_is_reported() {
        let out = find_rate_matrix(&fixtures::c2(), 2, 3, 2).unwrap();
        assert_eq!(out, SearchOutcome::BudgetExceeded);
    }

    #[test]
    fn min_ratios() {
        let m = find_min_ratio(&fixtures::c1(), 6, DEFAULT_BUDGET).unwrap();
        assert_eq!(m.matrix.ratio(), (2, 3));
        assert!(m.certified);
        let m = find_min_ratio(&fixtures::repetition2(), 2, DEFAULT_BUDGET).unwrap();
        assert_eq!(m.matrix.ratio(), (1, 2));
    }

    #[test]
    fn capacity_verdicts() {
        assert_eq!(
            is_capacity_achieving(&fixtures::c1(), DEFAULT_NU_MAX, DEFAULT_BUDGET).unwrap(),
            CapacityVerdict::NoWithinNuMax
        );
        assert!(
            is_capacity_achieving(&fixtures::parity3(), DEFAULT_NU_MAX, DEFAULT_BUDGET)
                .unwrap()
                .is_yes()
        );
        assert!(
            is_capacity_achieving(&fixtures::repetition2(), DEFAULT_NU_MAX, DEFAULT_BUDGET)
                .unwrap()
                .is_yes()
        );
    }

    #[test]
    fn interference_pair_of_c1() {
        let c1 = fixtures::c1();
        let m = RateMatrix::new(&c1, &fixtures::c1_rate_rows()).unwrap();
        // RateMatrix sorts rows by mask; rebuild the example's row order to compare
        let pair = InterferencePair::build(&m);
        let relabel = |u: usize| {
            let mask = m.row_mask(u);
            fixtures::c1_rate_rows()
                .iter()
                .position(|r| {
                    r.iter()
                        .enumerate()
                        .all(|(l, &v)| (mask >> l & 1) as u8 == v)
                })
                .unwrap()
                + 1
        };
        let cols: Vec<Vec<usize>> = (0..5)
            .map(|l| {
                let mut c: Vec<usize> = pair.present.iter().map(|r| relabel(r[l])).collect();
                c.sort();
                c
            })
            .collect();
        assert_eq!(
            cols,
            vec![vec![2, 3], vec![1, 3], vec![1, 3], vec![1, 2], vec![1, 2]]
        );
        let b: Vec<usize> = pair.absent[0].iter().map(|&u| relabel(u)).collect();
        assert_eq!(b, vec![1, 2, 2, 3, 3]);
        assert!(pair.check_claims(&c1, 3));
        let first = (0..3).find(|&u| relabel(u) == 1).unwrap();
        assert_eq!(pair.occurrences(first), CoordSet::one_based(&[2, 3, 4, 5]));
    }

    #[test]
    fn kappa_equal_nu_has_no_absent_rows() {
        let m = RateMatrix::new(&fixtures::c1(), &[vec![1; 5], vec![1; 5]]).unwrap();
        assert!(InterferencePair::build(&m).absent.is_empty());
    }

    #[test]
    fn json_round_trip_and_hash_check() {
        let c1 = fixtures::c1();
        let m = RateMatrix::new(&c1, &fixtures::c1_rate_rows()).unwrap();
        let back = RateMatrix::from_json(&c1, &m.to_json()).unwrap();
        assert_eq!(back, m);
        assert!(matches!(
            RateMatrix::from_json(&fixtures::c3(), &m.to_json()),
            Err(LambdaError::DimensionMismatch { .. }) | Err(LambdaError::HashMismatch { .. })
        ));
    }

    #[test]
    fn fraction_order() {
        let f = fractions_from(3, 5, 4);
        assert_eq!(f, vec![(2, 3), (3, 4), (1, 1)]);
    }

    #[test]
    fn gf3_search() {
        let code = crate::code::LinearCode::new(
            Field::new(3).unwrap(),
            vec![vec![1, 1, 1], vec![0, 1, 2]],
        )
        .unwrap();
        assert!(is_capacity_achieving(&code, 3, DEFAULT_BUDGET)
            .unwrap()
            .is_yes());
    }
}
