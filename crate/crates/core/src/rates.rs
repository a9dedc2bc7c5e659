//! Exact capacity and rate formulas.
//!
//! Everything is computed over arbitrary-precision rationals; decimal
//! rendering happens only in [`render4`].

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::code::LinearCode;
use crate::lambda::RateMatrix;

pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RateError {
    #[error("k = n = {0}: storage without redundancy is unsupported")]
    NoRedundancy(usize),
    #[error("need 1 <= k <= n, got n = {n}, k = {k}")]
    BadCode { n: usize, k: usize },
    #[error("need 1 <= kappa < nu, got kappa = {kappa}, nu = {nu}")]
    BadRatio { kappa: usize, nu: usize },
    #[error("file count must be at least 1")]
    NoFiles,
    #[error("parts have total dimension {got}, expected {expected}")]
    DimensionSum { got: usize, expected: usize },
    #[error("stripe count for the file-dependent scheme is unbounded when f is infinite")]
    UnboundedStripes,
    #[error("download {0} is not an integer")]
    NonIntegral(String),
    #[error("cannot parse file count {0:?}; expected a positive integer or \"inf\"")]
    ParseFiles(String),
}

/// Number of files, possibly unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Files {
    Finite(u32),
    Infinite,
}

impl Files {
    pub fn finite(self) -> Option<u32> {
        match self {
            Files::Finite(f) => Some(f),
            Files::Infinite => None,
        }
    }

    fn check(self) -> Result<(), RateError> {
        if self == Files::Finite(0) {
            return Err(RateError::NoFiles);
        }
        Ok(())
    }
}

impl fmt::Display for Files {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Files::Finite(n) => write!(f, "{n}"),
            Files::Infinite => write!(f, "inf"),
        }
    }
}

impl FromStr for Files {
    type Err = RateError;

    fn from_str(s: &str) -> Result<Self, RateError> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(Files::Infinite),
            t => match t.parse::<u32>() {
                Ok(0) | Err(_) => Err(RateError::ParseFiles(s.to_string())),
                Ok(n) => Ok(Files::Finite(n)),
            },
        }
    }
}

impl Serialize for Files {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Files {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

pub fn ratio(num: usize, den: usize) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// `base / (1 − r^f)`, or `base` when `f` is infinite.
fn geometric_boost(base: Rational, r: &Rational, files: Files) -> Rational {
    match files {
        Files::Infinite => base,
        Files::Finite(f) => base / (Rational::one() - num_traits::pow(r.clone(), f as usize)),
    }
}

/// Capacity of retrieval from `[n, k]` MDS-coded storage with `f` files.
pub fn mds_pir_capacity(n: usize, k: usize, files: Files) -> Result<Rational, RateError> {
    files.check()?;
    if k == 0 || k > n {
        return Err(RateError::BadCode { n, k });
    }
    if k == n {
        return Err(RateError::NoRedundancy(n));
    }
    Ok(geometric_boost(ratio(n - k, n), &ratio(k, n), files))
}

fn check_ratio(kappa: usize, nu: usize) -> Result<(), RateError> {
    if kappa == 0 || kappa >= nu {
        return Err(RateError::BadRatio { kappa, nu });
    }
    Ok(())
}

/// Rate of the symmetric scheme driven by a `κ × ν` rate matrix.
pub fn rate_symmetric(
    kappa: usize,
    nu: usize,
    k: usize,
    n: usize,
    files: Files,
) -> Result<Rational, RateError> {
    files.check()?;
    check_ratio(kappa, nu)?;
    if k == 0 || k > n {
        return Err(RateError::BadCode { n, k });
    }
    let base = ratio((nu - kappa) * k, kappa * n);
    Ok(geometric_boost(base, &ratio(kappa, nu), files))
}

/// Rate of the asymmetric scheme driven by a `κ × ν` rate matrix.
pub fn rate_asymmetric(kappa: usize, nu: usize, files: Files) -> Result<Rational, RateError> {
    files.check()?;
    check_ratio(kappa, nu)?;
    Ok(geometric_boost(
        ratio(nu - kappa, nu),
        &ratio(kappa, nu),
        files,
    ))
}

/// Rate of composing capacity-achieving schemes on the parts `(n_p, k_p)`
/// of a direct-sum decomposition.
pub fn rate_direct_sum(
    parts: &[(usize, usize)],
    k: usize,
    files: Files,
) -> Result<Rational, RateError> {
    let total: usize = parts.iter().map(|p| p.1).sum();
    if total != k {
        return Err(RateError::DimensionSum {
            got: total,
            expected: k,
        });
    }
    let mut inv = Rational::zero();
    for &(n_p, k_p) in parts {
        inv += ratio(k_p, k) / mds_pir_capacity(n_p, k_p, files)?;
    }
    Ok(inv.recip())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    /// File-dependent symmetric scheme, `β = ν^f`.
    P1,
    /// File-independent symmetric scheme.
    P2,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StripeDownload {
    pub beta: BigUint,
    /// Symbols downloaded from each node.
    pub per_node: BigUint,
    pub total: BigUint,
}

fn to_uint(r: &Rational) -> Result<BigUint, RateError> {
    if !r.is_integer() || r.is_negative() {
        return Err(RateError::NonIntegral(r.to_string()));
    }
    Ok(r.to_integer().to_biguint().expect("nonnegative"))
}

/// Stripe count and download cost for a capacity-achieving `[n, k]` code.
pub fn stripe_and_download(
    n: usize,
    k: usize,
    files: Files,
    scheme: Scheme,
) -> Result<StripeDownload, RateError> {
    let g = k.gcd(&n);
    let nu = n / g;
    let (beta, capacity) = match scheme {
        Scheme::P1 => {
            let f = files.finite().ok_or(RateError::UnboundedStripes)?;
            (
                num_traits::pow(BigUint::from(nu), f as usize),
                mds_pir_capacity(n, k, files)?,
            )
        }
        Scheme::P2 => {
            if k >= n {
                return Err(RateError::NoRedundancy(n));
            }
            (
                BigUint::from(k.lcm(&(n - k)) / k),
                mds_pir_capacity(n, k, Files::Infinite)?,
            )
        }
    };
    let beta_r = Rational::from_integer(BigInt::from(beta.clone()));
    let total = beta_r.clone() * ratio(k, 1) / capacity;
    let per_node = total.clone() / ratio(n, 1);
    Ok(StripeDownload {
        beta,
        per_node: to_uint(&per_node)?,
        total: to_uint(&total)?,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderingCheck {
    #[serde(with = "rational_string")]
    pub symmetric: Rational,
    #[serde(with = "rational_string")]
    pub asymmetric: Rational,
    #[serde(with = "rational_string")]
    pub capacity: Rational,
    /// `symmetric ≤ asymmetric ≤ capacity`.
    pub holds: bool,
    /// All three coincide.
    pub equal: bool,
}

/// Symmetric rate, asymmetric rate and capacity for a code and rate matrix.
pub fn proposition1_check(
    code: &LinearCode,
    m: &RateMatrix,
    files: Files,
) -> Result<OrderingCheck, RateError> {
    let (kappa, nu) = (m.kappa(), m.nu());
    let symmetric = rate_symmetric(kappa, nu, code.k(), code.n(), files)?;
    let asymmetric = rate_asymmetric(kappa, nu, files)?;
    let capacity = mds_pir_capacity(code.n(), code.k(), files)?;
    let holds = symmetric <= asymmetric && asymmetric <= capacity;
    let equal = symmetric == asymmetric && asymmetric == capacity;
    Ok(OrderingCheck {
        symmetric,
        asymmetric,
        capacity,
        holds,
        equal,
    })
}

/// Download bookkeeping of the file-dependent scheme.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleCounts {
    pub kappa: usize,
    pub nu: usize,
    pub files: u32,
    /// Undesired symbols per entry generated up to round `ℓ`, for `ℓ ∈ [f−1]`.
    pub undesired: Vec<BigUint>,
    /// Desired symbols per entry up to round `ℓ + 1`, for `ℓ ∈ [f−1]`.
    pub desired: Vec<BigUint>,
    /// Symbols downloaded per rate-matrix entry.
    pub per_entry: BigUint,
}

pub fn binomial(n: u32, k: u32) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    (0..k).fold(BigUint::one(), |acc, i| acc * (n - i) / (i + 1))
}

pub fn schedule_counts(kappa: usize, nu: usize, files: u32) -> Result<ScheduleCounts, RateError> {
    check_ratio(kappa, nu)?;
    if files == 0 {
        return Err(RateError::NoFiles);
    }
    let f = files;
    let kp = |e: u32| num_traits::pow(BigUint::from(kappa), e as usize);
    let gap = |e: u32| num_traits::pow(BigUint::from(nu - kappa), e as usize);
    let undesired = (1..f)
        .map(|l| (1..=l).map(|h| kp(f - (h + 1)) * gap(h - 1)).sum())
        .collect();
    let desired = (1..f)
        .map(|l| {
            kp(f - 1)
                + (1..=l)
                    .map(|h| binomial(f - 1, h) * kp(f - (h + 1)) * gap(h))
                    .sum::<BigUint>()
        })
        .collect();
    let per_entry =
        (num_traits::pow(BigUint::from(nu), f as usize) - kp(f)) / BigUint::from(nu - kappa);
    Ok(ScheduleCounts {
        kappa,
        nu,
        files: f,
        undesired,
        desired,
        per_entry,
    })
}

/// Decimal rendering rounded half-up to four places, trailing zeros trimmed.
pub fn render4(r: &Rational) -> String {
    let scaled = r * Rational::from_integer(BigInt::from(10_000));
    let rounded = (scaled + Rational::new(BigInt::one(), BigInt::from(2)))
        .floor()
        .to_integer();
    let negative = rounded.is_negative();
    let digits = rounded.abs().to_string();
    let padded = format!("{digits:0>5}");
    let (int, frac) = padded.split_at(padded.len() - 4);
    let frac = frac.trim_end_matches('0');
    let sign = if negative { "-" } else { "" };
    if frac.is_empty() {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{frac}")
    }
}

pub fn to_f64(r: &Rational) -> f64 {
    r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}

/// One row of a rate table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RateReport {
    pub code: String,
    pub n: usize,
    pub k: usize,
    pub files: Files,
    pub kappa: usize,
    pub nu: usize,
    #[serde(with = "rational_string")]
    pub capacity: Rational,
    #[serde(with = "rational_string")]
    pub capacity_inf: Rational,
    #[serde(with = "option_rational_string")]
    pub symmetric: Option<Rational>,
    #[serde(with = "option_rational_string")]
    pub asymmetric: Option<Rational>,
    #[serde(with = "option_rational_string")]
    pub direct_sum: Option<Rational>,
    /// Rate of a hand-built asymmetric schedule, when one is supplied.
    #[serde(with = "option_rational_string")]
    pub schedule: Option<Rational>,
    pub beta_p1: Option<BigUint>,
    pub download_p1: Option<BigUint>,
    pub beta_p2: Option<BigUint>,
    pub download_p2: Option<BigUint>,
}

impl RateReport {
    /// Builds the closed-form rates for a code with rate matrix `κ/ν`.
    ///
    /// `direct_sum_parts` lists the parts of a decomposition whose pieces
    /// are all capacity-achieving; `capacity_achieving` enables the
    /// stripe/download columns.
    pub fn build(
        name: &str,
        code: &LinearCode,
        kappa: usize,
        nu: usize,
        files: Files,
        direct_sum_parts: Option<&[(usize, usize)]>,
        capacity_achieving: bool,
    ) -> Result<Self, RateError> {
        let (n, k) = (code.n(), code.k());
        let (symmetric, asymmetric) = if kappa < nu {
            (
                Some(rate_symmetric(kappa, nu, k, n, files)?),
                Some(rate_asymmetric(kappa, nu, files)?),
            )
        } else {
            (None, None)
        };
        let direct_sum = match direct_sum_parts {
            Some(parts) if parts.len() > 1 => Some(rate_direct_sum(parts, k, files)?),
            _ => None,
        };
        let (beta_p1, download_p1) = match files.finite() {
            Some(f) if kappa < nu => {
                let counts = schedule_counts(kappa, nu, f)?;
                let beta = num_traits::pow(BigUint::from(nu), f as usize);
                (
                    Some(beta),
                    Some(counts.per_entry * BigUint::from(kappa * n)),
                )
            }
            _ => (None, None),
        };
        let (beta_p2, download_p2) = if capacity_achieving {
            let sd = stripe_and_download(n, k, files, Scheme::P2)?;
            (Some(sd.beta), Some(sd.total))
        } else {
            (None, None)
        };
        Ok(RateReport {
            code: name.to_string(),
            n,
            k,
            files,
            kappa,
            nu,
            capacity: mds_pir_capacity(n, k, files)?,
            capacity_inf: mds_pir_capacity(n, k, Files::Infinite)?,
            symmetric,
            asymmetric,
            direct_sum,
            schedule: None,
            beta_p1,
            download_p1,
            beta_p2,
            download_p2,
        })
    }

    pub const CSV_HEADER: [&'static str; 7] = ["code", "kappa/nu", "R_S", "R_A", "R_B", "R_C", "C"];

    /// Table cells in [`RateReport::CSV_HEADER`] order; `-` marks a
    /// scheme that does not apply.
    pub fn table_cells(&self) -> [String; 7] {
        let cell = |r: &Option<Rational>| r.as_ref().map_or_else(|| "-".to_string(), render4);
        let g = self.kappa.gcd(&self.nu);
        [
            self.code.clone(),
            format!("{}/{}", self.kappa / g, self.nu / g),
            cell(&self.symmetric),
            cell(&self.asymmetric),
            cell(&self.direct_sum),
            cell(&self.schedule),
            render4(&self.capacity),
        ]
    }

    pub fn write_csv<W: std::io::Write>(reports: &[RateReport], out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::CSV_HEADER)?;
        for r in reports {
            w.write_record(r.table_cells())?;
        }
        w.flush()?;
        Ok(())
    }
}

pub mod rational_string {
    use super::Rational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&r.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

pub mod option_rational_string {
    use super::Rational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match r {
            Some(r) => s.serialize_some(&r.to_string()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|s| s.parse().map_err(serde::de::Error::custom))
            .transpose()
    }
}
