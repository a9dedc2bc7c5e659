//! Finite field arithmetic over GF(q), q = p^e.
//!
//! Elements are carried as their canonical integer representative in `[0, q)`.
//! For extension fields the representative is the coefficient vector of the
//! polynomial basis read low-degree-first as base-`p` digits, so for GF(4)
//! the element `1 + x` is encoded as `3`.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Raw field symbol: canonical representative in `[0, q)`.
pub type Sym = u32;

/// Largest supported field order.
pub const MAX_ORDER: u32 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("field order {0} is not a prime power")]
    NotPrimePower(u32),
    #[error("field order {0} exceeds the supported maximum {MAX_ORDER}")]
    TooLarge(u32),
    #[error("division by zero")]
    DivisionByZero,
    #[error("operands belong to different fields (GF({0}) vs GF({1}))")]
    Mismatch(u32, u32),
    #[error("value {value} is not an element of GF({q})")]
    OutOfRange { value: u32, q: u32 },
    #[error("no primitive polynomial found for GF({0})")]
    NoPrimitive(u32),
}

/// Order, characteristic and extension degree of a finite field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldSpec {
    pub q: u32,
    pub characteristic: u32,
    pub degree: u32,
}

impl FieldSpec {
    pub fn new(q: u32) -> Result<Self, FieldError> {
        if q > MAX_ORDER {
            return Err(FieldError::TooLarge(q));
        }
        if q < 2 {
            return Err(FieldError::NotPrimePower(q));
        }
        let p = smallest_factor(q);
        let mut rest = q;
        let mut e = 0;
        while rest.is_multiple_of(p) {
            rest /= p;
            e += 1;
        }
        if rest != 1 {
            return Err(FieldError::NotPrimePower(q));
        }
        Ok(FieldSpec {
            q,
            characteristic: p,
            degree: e,
        })
    }
}

fn smallest_factor(q: u32) -> u32 {
    let mut d = 2;
    while d * d <= q {
        if q.is_multiple_of(d) {
            return d;
        }
        d += 1;
    }
    q
}

/// A field element tagged with its field order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldElement {
    pub value: Sym,
    pub q: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Primitive polynomials over GF(2), bit `i` holding the coefficient of `x^i`.
const BINARY_PRIMITIVE: [u32; 17] = [
    0, 0b11, 0x7, 0xB, 0x13, 0x25, 0x43, 0x89, 0x11D, 0x211, 0x409, 0x805, 0x1053, 0x201B, 0x4443,
    0x8003, 0x1100B,
];

#[derive(Debug, Clone)]
enum Repr {
    Binary,
    Prime,
    Extension { exp: Vec<Sym>, log: Vec<u32> },
}

/// An immutable field context. Cheap to clone for small fields; share by
/// reference across threads otherwise.
#[derive(Debug, Clone)]
pub struct Field {
    spec: FieldSpec,
    repr: Repr,
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
    }
}
impl Eq for Field {}

impl Field {
    pub fn new(q: u32) -> Result<Self, FieldError> {
        let spec = FieldSpec::new(q)?;
        let repr = if q == 2 {
            Repr::Binary
        } else if spec.degree == 1 {
            Repr::Prime
        } else {
            let (exp, log) = build_log_tables(spec)?;
            Repr::Extension { exp, log }
        };
        Ok(Field { spec, repr })
    }

    pub fn binary() -> Self {
        Field {
            spec: FieldSpec {
                q: 2,
                characteristic: 2,
                degree: 1,
            },
            repr: Repr::Binary,
        }
    }

    pub fn spec(&self) -> FieldSpec {
        self.spec
    }

    pub fn order(&self) -> u32 {
        self.spec.q
    }

    pub fn is_binary(&self) -> bool {
        matches!(self.repr, Repr::Binary)
    }

    pub fn element(&self, value: Sym) -> Result<FieldElement, FieldError> {
        if value >= self.spec.q {
            return Err(FieldError::OutOfRange {
                value,
                q: self.spec.q,
            });
        }
        Ok(FieldElement {
            value,
            q: self.spec.q,
        })
    }

    #[inline]
    pub fn add(&self, a: Sym, b: Sym) -> Sym {
        match &self.repr {
            Repr::Binary => a ^ b,
            Repr::Prime => (a + b) % self.spec.q,
            Repr::Extension { .. } => {
                let p = self.spec.characteristic;
                if p == 2 {
                    a ^ b
                } else {
                    digitwise(a, b, p, |x, y| (x + y) % p)
                }
            }
        }
    }

    #[inline]
    pub fn neg(&self, a: Sym) -> Sym {
        match &self.repr {
            Repr::Binary => a,
            Repr::Prime => (self.spec.q - a) % self.spec.q,
            Repr::Extension { .. } => {
                let p = self.spec.characteristic;
                if p == 2 {
                    a
                } else {
                    digitwise(a, 0, p, |x, _| (p - x) % p)
                }
            }
        }
    }

    #[inline]
    pub fn sub(&self, a: Sym, b: Sym) -> Sym {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: Sym, b: Sym) -> Sym {
        match &self.repr {
            Repr::Binary => a & b,
            Repr::Prime => ((a as u64 * b as u64) % self.spec.q as u64) as Sym,
            Repr::Extension { exp, log } => {
                if a == 0 || b == 0 {
                    0
                } else {
                    let order = self.spec.q - 1;
                    exp[((log[a as usize] + log[b as usize]) % order) as usize]
                }
            }
        }
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self, a: Sym) -> Option<Sym> {
        if a == 0 {
            return None;
        }
        Some(match &self.repr {
            Repr::Binary => 1,
            Repr::Prime => pow_mod(a as u64, (self.spec.q - 2) as u64, self.spec.q as u64) as Sym,
            Repr::Extension { exp, log } => {
                let order = self.spec.q - 1;
                exp[((order - log[a as usize]) % order) as usize]
            }
        })
    }

    pub fn div(&self, a: Sym, b: Sym) -> Result<Sym, FieldError> {
        let inv = self.inv(b).ok_or(FieldError::DivisionByZero)?;
        Ok(self.mul(a, inv))
    }

    /// `acc + coef * x`
    #[inline]
    pub fn mul_add(&self, acc: Sym, coef: Sym, x: Sym) -> Sym {
        self.add(acc, self.mul(coef, x))
    }

    pub fn dot(&self, a: &[Sym], b: &[Sym]) -> Sym {
        a.iter()
            .zip(b)
            .fold(0, |acc, (&x, &y)| self.mul_add(acc, x, y))
    }

    /// Checked arithmetic on tagged elements.
    pub fn arith(
        &self,
        a: FieldElement,
        b: FieldElement,
        op: ArithOp,
    ) -> Result<FieldElement, FieldError> {
        for e in [a, b] {
            if e.q != self.spec.q {
                return Err(FieldError::Mismatch(e.q, self.spec.q));
            }
            if e.value >= e.q {
                return Err(FieldError::OutOfRange {
                    value: e.value,
                    q: e.q,
                });
            }
        }
        let value = match op {
            ArithOp::Add => self.add(a.value, b.value),
            ArithOp::Sub => self.sub(a.value, b.value),
            ArithOp::Mul => self.mul(a.value, b.value),
            ArithOp::Div => self.div(a.value, b.value)?,
        };
        Ok(FieldElement {
            value,
            q: self.spec.q,
        })
    }

    /// Uniform draw from `[0, q)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Sym {
        rng.gen_range(0..self.spec.q)
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> FieldElement {
        FieldElement {
            value: self.sample(rng),
            q: self.spec.q,
        }
    }
}

/// Free-standing form of [`Field::arith`] that first checks both operands
/// live in the same field.
pub fn field_arith(
    a: FieldElement,
    b: FieldElement,
    op: ArithOp,
) -> Result<FieldElement, FieldError> {
    if a.q != b.q {
        return Err(FieldError::Mismatch(a.q, b.q));
    }
    Field::new(a.q)?.arith(a, b, op)
}

fn digitwise(a: Sym, b: Sym, p: u32, f: impl Fn(u32, u32) -> u32) -> Sym {
    let (mut a, mut b) = (a, b);
    let mut out = 0;
    let mut scale = 1;
    while a > 0 || b > 0 {
        out += f(a % p, b % p) * scale;
        a /= p;
        b /= p;
        scale *= p;
    }
    out
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % m;
        }
        base = base * base % m;
        exp >>= 1;
    }
    acc
}

/// Powers of `x` modulo a monic degree-`e` polynomial over GF(p), encoded as
/// base-`p` digit vectors. `poly_low` holds the `e` low coefficients.
fn powers_of_x(spec: FieldSpec, poly_low: &[u32]) -> Option<Vec<Sym>> {
    let p = spec.characteristic;
    let e = spec.degree as usize;
    let order = (spec.q - 1) as usize;
    let mut digits = vec![0u32; e];
    digits[0] = 1;
    let mut seen = vec![false; spec.q as usize];
    let mut exp = Vec::with_capacity(order);
    for _ in 0..order {
        let v = digits.iter().rev().fold(0u32, |acc, &d| acc * p + d);
        if v == 0 || seen[v as usize] {
            return None;
        }
        seen[v as usize] = true;
        exp.push(v);
        // multiply by x: shift up, reduce the overflow with x^e = -poly_low
        let top = digits[e - 1];
        for i in (1..e).rev() {
            digits[i] = digits[i - 1];
        }
        digits[0] = 0;
        if top != 0 {
            for i in 0..e {
                digits[i] = (digits[i] + (p - poly_low[i]) * top) % p;
            }
        }
    }
    Some(exp)
}

fn build_log_tables(spec: FieldSpec) -> Result<(Vec<Sym>, Vec<u32>), FieldError> {
    let p = spec.characteristic;
    let e = spec.degree as usize;
    let exp = if p == 2 && e < BINARY_PRIMITIVE.len() {
        let poly = BINARY_PRIMITIVE[e];
        let low: Vec<u32> = (0..e).map(|i| (poly >> i) & 1).collect();
        powers_of_x(spec, &low).ok_or(FieldError::NoPrimitive(spec.q))?
    } else {
        // smallest monic primitive polynomial in base-p order of its low coefficients
        let mut found = None;
        for code in 0..p.pow(e as u32) {
            let low: Vec<u32> = (0..e).map(|i| (code / p.pow(i as u32)) % p).collect();
            if low[0] == 0 {
                continue;
            }
            if let Some(exp) = powers_of_x(spec, &low) {
                found = Some(exp);
                break;
            }
        }
        found.ok_or(FieldError::NoPrimitive(spec.q))?
    };
    let mut log = vec![0u32; spec.q as usize];
    for (i, &v) in exp.iter().enumerate() {
        log[v as usize] = i as u32;
    }
    Ok((exp, log))
}
