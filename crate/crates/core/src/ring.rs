//! Exact arithmetic in truncated polynomial rings `F_p[u]/(u^m)`.
//!
//! Elements are coefficient vectors of length `m` with entries in `[0, p)`;
//! multiplication is coefficient convolution with every term of degree >= m
//! dropped. The radical tower is rad^j = (u^j), so the radical depth of an
//! element is the index of its first nonzero coefficient.

use crate::error::{Error, Result};
use arrayvec::ArrayVec;
use serde::{Deserialize, Serialize};

/// Largest supported truncation order. With p >= 2 and the global size cap
/// p^(m*n) <= 65536, m can never exceed 16.
pub const MAX_TRUNCATION: usize = 16;

/// Largest supported prime modulus.
pub const MAX_PRIME: u8 = 7;

/// Global cap on module size |A| = p^(m*n).
pub const MAX_MODULE_SIZE: u64 = 65536;

const SMALL_PRIMES: [u8; 4] = [2, 3, 5, 7];

pub(crate) type CoeffVec = ArrayVec<u8, MAX_TRUNCATION>;

/// The ring `F_p[u]/(u^m)`: `p` a prime modulus, `m` the truncation order.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub struct TruncatedRing {
    p: u8,
    m: u8,
}

impl TruncatedRing {
    pub fn new(p: u8, m: u8) -> Result<Self> {
        if !SMALL_PRIMES.contains(&p) {
            return Err(Error::InvalidConfig {
                field: "ring.p".into(),
                message: format!("p must be a prime <= {MAX_PRIME}, got {p}"),
            });
        }
        if m < 1 || m as usize > MAX_TRUNCATION {
            return Err(Error::InvalidConfig {
                field: "ring.m".into(),
                message: format!("m must be in 1..={MAX_TRUNCATION}, got {m}"),
            });
        }
        if (p as u64).pow(m as u32) > MAX_MODULE_SIZE {
            return Err(Error::SizeCap {
                what: format!("ring size p^m = {}^{}", p, m),
                actual: (p as u64).pow(m as u32) as usize,
                cap: MAX_MODULE_SIZE as usize,
            });
        }
        Ok(Self { p, m })
    }

    pub fn p(&self) -> u8 {
        self.p
    }

    pub fn m(&self) -> u8 {
        self.m
    }

    /// Number of elements, p^m.
    pub fn size(&self) -> u32 {
        (self.p as u32).pow(self.m as u32)
    }

    pub fn zero(&self) -> RingElement {
        let mut coeffs = CoeffVec::new();
        for _ in 0..self.m {
            coeffs.push(0);
        }
        RingElement {
            ring: *self,
            coeffs,
        }
    }

    pub fn one(&self) -> RingElement {
        self.monomial(0, 1)
    }

    /// c * u^j, with c reduced mod p. Returns zero when j >= m.
    pub fn monomial(&self, j: usize, c: u8) -> RingElement {
        let mut e = self.zero();
        if j < self.m as usize {
            e.coeffs[j] = c % self.p;
        }
        e
    }

    /// Builds an element from raw coefficients, reducing mod p and padding
    /// or truncating to length m.
    pub fn element(&self, coeffs: &[u8]) -> RingElement {
        let mut e = self.zero();
        for (j, &c) in coeffs.iter().enumerate().take(self.m as usize) {
            e.coeffs[j] = c % self.p;
        }
        e
    }

    /// Element whose coefficients are the base-p digits of `code`.
    pub fn decode(&self, code: u32) -> RingElement {
        let mut e = self.zero();
        let mut rest = code;
        for j in 0..self.m as usize {
            e.coeffs[j] = (rest % self.p as u32) as u8;
            rest /= self.p as u32;
        }
        e
    }

    /// Iterates over all p^m elements in code order.
    pub fn elements(&self) -> impl Iterator<Item = RingElement> + '_ {
        (0..self.size()).map(move |code| self.decode(code))
    }

    /// Iterates over the ideal (u^j) = rad^j. For j >= m this is just {0}.
    pub fn ideal_elements(&self, j: usize) -> impl Iterator<Item = RingElement> + '_ {
        let free = (self.m as usize).saturating_sub(j);
        let count = (self.p as u32).pow(free as u32);
        (0..count).map(move |code| {
            let mut e = self.zero();
            let mut rest = code;
            for idx in j..self.m as usize {
                e.coeffs[idx] = (rest % self.p as u32) as u8;
                rest /= self.p as u32;
            }
            e
        })
    }

    fn check_same(&self, other: &TruncatedRing) -> Result<()> {
        if self != other {
            return Err(Error::MismatchedRings {
                p_a: self.p,
                m_a: self.m,
                p_b: other.p,
                m_b: other.m,
            });
        }
        Ok(())
    }
}

/// An element of `F_p[u]/(u^m)`; `coeffs[j]` is the coefficient of `u^j`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct RingElement {
    ring: TruncatedRing,
    coeffs: CoeffVec,
}

impl RingElement {
    pub fn ring(&self) -> TruncatedRing {
        self.ring
    }

    pub fn coeffs(&self) -> &[u8] {
        &self.coeffs
    }

    pub fn coeff(&self, j: usize) -> u8 {
        self.coeffs.get(j).copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    /// Mixed-radix code of the coefficient vector, inverse of `decode`.
    pub fn code(&self) -> u32 {
        let mut code = 0u32;
        for &c in self.coeffs.iter().rev() {
            code = code * self.ring.p as u32 + c as u32;
        }
        code
    }

    pub fn add(&self, other: &RingElement) -> Result<RingElement> {
        self.ring.check_same(&other.ring)?;
        let mut out = self.clone();
        for (c, &o) in out.coeffs.iter_mut().zip(other.coeffs.iter()) {
            *c = (*c + o) % self.ring.p;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &RingElement) -> Result<RingElement> {
        self.ring.check_same(&other.ring)?;
        let mut out = self.clone();
        let p = self.ring.p;
        for (c, &o) in out.coeffs.iter_mut().zip(other.coeffs.iter()) {
            *c = (*c + p - o) % p;
        }
        Ok(out)
    }

    pub fn neg(&self) -> RingElement {
        let mut out = self.clone();
        let p = self.ring.p;
        for c in out.coeffs.iter_mut() {
            *c = (p - *c) % p;
        }
        out
    }

    /// Truncated product: coefficient convolution, degrees >= m dropped.
    pub fn mul(&self, other: &RingElement) -> Result<RingElement> {
        self.ring.check_same(&other.ring)?;
        let m = self.ring.m as usize;
        let p = self.ring.p as u16;
        let mut out = self.ring.zero();
        for i in 0..m {
            if self.coeffs[i] == 0 {
                continue;
            }
            for j in 0..m - i {
                let acc = out.coeffs[i + j] as u16 + self.coeffs[i] as u16 * other.coeffs[j] as u16;
                out.coeffs[i + j] = (acc % p) as u8;
            }
        }
        Ok(out)
    }

    /// Multiplication by an integer scalar (repeated addition mod p).
    pub fn scale(&self, k: u8) -> RingElement {
        let mut out = self.clone();
        let p = self.ring.p as u16;
        for c in out.coeffs.iter_mut() {
            *c = ((*c as u16 * k as u16) % p) as u8;
        }
        out
    }

    /// Valuation against the radical tower: the smallest j with
    /// `coeffs[j]` != 0, and m for the zero element.
    pub fn radical_depth(&self) -> usize {
        self.coeffs
            .iter()
            .position(|&c| c != 0)
            .unwrap_or(self.ring.m as usize)
    }

    /// Zeroes every coefficient at index >= `threshold`, keeping the part
    /// of the element that lies below the given radical layer.
    pub fn truncate_below(&self, threshold: usize) -> RingElement {
        let mut out = self.clone();
        for j in threshold..self.ring.m as usize {
            out.coeffs[j] = 0;
        }
        out
    }
}

impl std::fmt::Display for RingElement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut terms = Vec::new();
        for (j, &c) in self.coeffs.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let t = match (j, c) {
                (0, c) => format!("{c}"),
                (1, 1) => "u".to_string(),
                (1, c) => format!("{c}u"),
                (j, 1) => format!("u^{j}"),
                (j, c) => format!("{c}u^{j}"),
            };
            terms.push(t);
        }
        if terms.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", terms.join("+"))
        }
    }
}

/// An additive character of (R, +) in coefficient-functional form: the
/// character value is the p-th root of unity with exponent
/// `sum_j weights[j] * coeffs[j]` mod p. Exponents are stored exactly; no
/// transcendental value is ever materialized.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct AdditiveCharacter {
    ring: TruncatedRing,
    weights: CoeffVec,
}

impl AdditiveCharacter {
    pub fn new(ring: TruncatedRing, weights: &[u8]) -> Result<Self> {
        if weights.len() != ring.m() as usize {
            return Err(Error::InvalidConfig {
                field: "character.weights".into(),
                message: format!(
                    "expected {} weights (one per coefficient), got {}",
                    ring.m(),
                    weights.len()
                ),
            });
        }
        let mut w = CoeffVec::new();
        for &x in weights {
            w.push(x % ring.p());
        }
        Ok(Self { ring, weights: w })
    }

    /// The trivial character (all weights zero).
    pub fn trivial(ring: TruncatedRing) -> Self {
        Self {
            ring,
            weights: ring.zero().coeffs,
        }
    }

    pub fn ring(&self) -> TruncatedRing {
        self.ring
    }

    pub fn weights(&self) -> &[u8] {
        &self.weights
    }

    /// Root-of-unity exponent of the character at `x`, as a residue mod p.
    pub fn eval(&self, x: &RingElement) -> u8 {
        let p = self.ring.p() as u16;
        let mut acc = 0u16;
        for (&w, &c) in self.weights.iter().zip(x.coeffs().iter()) {
            acc = (acc + w as u16 * c as u16) % p;
        }
        acc as u8
    }

    /// The smallest s with rad^s(R) contained in ker(chi), i.e. the index
    /// past the last nonzero weight. Returns m when only the zero ideal is
    /// invisible, and 0 for the trivial character.
    pub fn invisible_threshold(&self) -> usize {
        self.weights
            .iter()
            .rposition(|&w| w != 0)
            .map_or(0, |j| j + 1)
    }
}
