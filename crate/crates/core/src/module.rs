//! Finite modules A = R_1^{n_1} x ... x R_k^{n_k} over truncated rings.
//!
//! Every element is identified with an integer code whose base-p digits are
//! the coefficient vectors of all components, block-major. All blocks share
//! the prime p, so addition is digit-wise mod p on codes. Single-block spaces
//! are the common case; multi-block spaces arise from direct sums.

use crate::error::{Error, Result};
use crate::ring::{RingElement, TruncatedRing, MAX_MODULE_SIZE};
use rand::Rng;

/// One direct-sum block: rank-n free module over a truncated ring.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct Block {
    pub ring: TruncatedRing,
    pub rank: usize,
}

impl Block {
    /// Number of base-p digits a block element occupies.
    fn digits(&self) -> usize {
        self.rank * self.ring.m() as usize
    }
}

/// The underlying additive object of a phase: a product of blocks.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ModuleSpace {
    p: u8,
    blocks: Vec<Block>,
}

impl ModuleSpace {
    pub fn new(blocks: Vec<Block>) -> Result<Self> {
        let p = blocks
            .first()
            .map(|b| b.ring.p())
            .ok_or_else(|| Error::Internal("module space needs at least one block".into()))?;
        let mut size: u64 = 1;
        for (i, b) in blocks.iter().enumerate() {
            if b.ring.p() != p {
                return Err(Error::MismatchedRings {
                    p_a: p,
                    m_a: blocks[0].ring.m(),
                    p_b: b.ring.p(),
                    m_b: b.ring.m(),
                });
            }
            if b.rank == 0 {
                return Err(Error::InvalidConfig {
                    field: format!("blocks[{i}].rank"),
                    message: "rank must be >= 1".into(),
                });
            }
            size = size.saturating_mul((b.ring.size() as u64).pow(b.rank as u32));
            if size > MAX_MODULE_SIZE {
                return Err(Error::SizeCap {
                    what: "|A| = p^(sum of m*n over blocks)".into(),
                    actual: size as usize,
                    cap: MAX_MODULE_SIZE as usize,
                });
            }
        }
        Ok(Self { p, blocks })
    }

    /// Single-block space R^n.
    pub fn free(ring: TruncatedRing, rank: usize) -> Result<Self> {
        Self::new(vec![Block { ring, rank }])
    }

    pub fn p(&self) -> u8 {
        self.p
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block(&self, b: usize) -> Block {
        self.blocks[b]
    }

    /// Total number of components across blocks.
    pub fn total_rank(&self) -> usize {
        self.blocks.iter().map(|b| b.rank).sum()
    }

    /// Index of the first component of block `b` in flattened element order.
    pub fn component_offset(&self, b: usize) -> usize {
        self.blocks[..b].iter().map(|x| x.rank).sum()
    }

    fn total_digits(&self) -> usize {
        self.blocks.iter().map(Block::digits).sum()
    }

    /// |A|.
    pub fn size(&self) -> u32 {
        self.blocks
            .iter()
            .map(|b| (b.ring.size() as u64).pow(b.rank as u32))
            .product::<u64>() as u32
    }

    pub fn codes(&self) -> std::ops::Range<u32> {
        0..self.size()
    }

    pub fn zero(&self) -> ModuleElement {
        let comps = self
            .blocks
            .iter()
            .flat_map(|b| (0..b.rank).map(|_| b.ring.zero()))
            .collect();
        ModuleElement { comps }
    }

    pub fn decode(&self, code: u32) -> ModuleElement {
        let mut elem = self.zero();
        let mut rest = code;
        let p = self.p as u32;
        let mut c = 0;
        for b in &self.blocks {
            for _ in 0..b.rank {
                let ring_size = b.ring.size();
                elem.comps[c] = b.ring.decode(rest % ring_size);
                rest /= ring_size;
                c += 1;
            }
        }
        debug_assert_eq!(rest, 0);
        let _ = p;
        elem
    }

    pub fn encode(&self, elem: &ModuleElement) -> u32 {
        let mut code = 0u64;
        let mut mult = 1u64;
        for (c, b) in self.component_blocks() {
            code += elem.comps[c].code() as u64 * mult;
            mult *= b.ring.size() as u64;
        }
        code as u32
    }

    fn component_blocks(&self) -> impl Iterator<Item = (usize, Block)> + '_ {
        self.blocks
            .iter()
            .flat_map(|b| (0..b.rank).map(move |_| *b))
            .enumerate()
    }

    /// Digit-wise addition of codes (all digits are mod p).
    pub fn add_codes(&self, a: u32, b: u32) -> u32 {
        let p = self.p as u32;
        let mut out = 0u32;
        let mut mult = 1u32;
        let (mut ra, mut rb) = (a, b);
        for _ in 0..self.total_digits() {
            out += ((ra + rb) % p) * mult;
            ra /= p;
            rb /= p;
            mult = mult.saturating_mul(p);
        }
        out
    }

    pub fn neg_code(&self, a: u32) -> u32 {
        let p = self.p as u32;
        let mut out = 0u32;
        let mut mult = 1u32;
        let mut ra = a;
        for _ in 0..self.total_digits() {
            out += ((p - ra % p) % p) * mult;
            ra /= p;
            mult = mult.saturating_mul(p);
        }
        out
    }

    pub fn sub_codes(&self, a: u32, b: u32) -> u32 {
        self.add_codes(a, self.neg_code(b))
    }

    /// Additive generators of (A, +): u^j in component i of each block.
    pub fn basis(&self) -> Vec<ModuleElement> {
        let mut out = Vec::new();
        for (bi, b) in self.blocks.iter().enumerate() {
            let off = self.component_offset(bi);
            for i in 0..b.rank {
                for j in 0..b.ring.m() as usize {
                    let mut e = self.zero();
                    e.comps[off + i] = b.ring.monomial(j, 1);
                    out.push(e);
                }
            }
        }
        out
    }

    /// Permutation of codes induced by translation x -> x + a.
    pub fn translation_table(&self, a: u32) -> Vec<u32> {
        self.codes().map(|x| self.add_codes(x, a)).collect()
    }
}

/// Element of a module space, components flattened block-major.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct ModuleElement {
    comps: Vec<RingElement>,
}

impl ModuleElement {
    pub fn from_components(space: &ModuleSpace, comps: Vec<RingElement>) -> Result<Self> {
        if comps.len() != space.total_rank() {
            return Err(Error::InvalidConfig {
                field: "translation".into(),
                message: format!(
                    "expected {} components, got {}",
                    space.total_rank(),
                    comps.len()
                ),
            });
        }
        for ((c, b), comp) in space.component_blocks().zip(comps.iter()) {
            if comp.ring() != b.ring {
                return Err(Error::InvalidConfig {
                    field: format!("translation[{c}]"),
                    message: "component ring does not match its block".into(),
                });
            }
        }
        Ok(Self { comps })
    }

    pub fn components(&self) -> &[RingElement] {
        &self.comps
    }

    pub fn component(&self, i: usize) -> &RingElement {
        &self.comps[i]
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(RingElement::is_zero)
    }
}

/// A block-diagonal R-linear automorphism of the module space, stored with
/// its inverse so translations and phase tables can be relabeled in either
/// direction without re-solving.
#[derive(Clone, Debug)]
pub struct Automorphism {
    space: ModuleSpace,
    /// One invertible rank x rank matrix per block.
    forward: Vec<Vec<Vec<RingElement>>>,
    inverse: Vec<Vec<Vec<RingElement>>>,
}

impl Automorphism {
    pub fn identity(space: &ModuleSpace) -> Self {
        let mats = space
            .blocks()
            .iter()
            .map(|b| identity_matrix(b.ring, b.rank))
            .collect::<Vec<_>>();
        Self {
            space: space.clone(),
            forward: mats.clone(),
            inverse: mats,
        }
    }

    /// Random product of elementary row operations, per block. The inverse
    /// is accumulated alongside, so the result is invertible by construction.
    pub fn random<R: Rng>(space: &ModuleSpace, rng: &mut R) -> Self {
        let mut auto = Self::identity(space);
        for (bi, b) in space.blocks().iter().enumerate() {
            let n = b.rank;
            let ring = b.ring;
            let steps = 4 + 2 * n;
            for _ in 0..steps {
                match rng.gen_range(0..3u8) {
                    // swap two rows
                    0 if n > 1 => {
                        let i = rng.gen_range(0..n);
                        let j = rng.gen_range(0..n);
                        if i != j {
                            auto.forward[bi].swap(i, j);
                            // (E M)^-1 = M^-1 E^-1: column swap on the inverse
                            for row in auto.inverse[bi].iter_mut() {
                                row.swap(i, j);
                            }
                        }
                    }
                    // scale a row by a unit
                    1 => {
                        let i = rng.gen_range(0..n);
                        let c = random_unit(ring, rng);
                        let c_inv = unit_inverse(&c);
                        for x in auto.forward[bi][i].iter_mut() {
                            *x = x.mul(&c).unwrap();
                        }
                        for row in auto.inverse[bi].iter_mut() {
                            row[i] = row[i].mul(&c_inv).unwrap();
                        }
                    }
                    // add a multiple of one row to another
                    _ if n > 1 => {
                        let i = rng.gen_range(0..n);
                        let mut j = rng.gen_range(0..n);
                        if i == j {
                            j = (j + 1) % n;
                        }
                        let r = ring.decode(rng.gen_range(0..ring.size()));
                        for k in 0..n {
                            let add = auto.forward[bi][j][k].mul(&r).unwrap();
                            auto.forward[bi][i][k] = auto.forward[bi][i][k].add(&add).unwrap();
                        }
                        for row in auto.inverse[bi].iter_mut() {
                            let sub = row[i].mul(&r).unwrap();
                            row[j] = row[j].sub(&sub).unwrap();
                        }
                    }
                    _ => {}
                }
            }
        }
        auto
    }

    pub fn apply(&self, elem: &ModuleElement) -> ModuleElement {
        self.apply_with(&self.forward, elem)
    }

    pub fn apply_inverse(&self, elem: &ModuleElement) -> ModuleElement {
        self.apply_with(&self.inverse, elem)
    }

    #[allow(clippy::needless_range_loop)]
    fn apply_with(&self, mats: &[Vec<Vec<RingElement>>], elem: &ModuleElement) -> ModuleElement {
        let mut out = self.space.zero();
        for (bi, b) in self.space.blocks().iter().enumerate() {
            let off = self.space.component_offset(bi);
            for i in 0..b.rank {
                let mut acc = b.ring.zero();
                for j in 0..b.rank {
                    let t = mats[bi][i][j].mul(&elem.comps[off + j]).unwrap();
                    acc = acc.add(&t).unwrap();
                }
                out.comps[off + i] = acc;
            }
        }
        out
    }

    /// Table of codes for x -> alpha(x).
    pub fn code_table(&self) -> Vec<u32> {
        self.space
            .codes()
            .map(|c| self.space.encode(&self.apply(&self.space.decode(c))))
            .collect()
    }
}

fn identity_matrix(ring: TruncatedRing, n: usize) -> Vec<Vec<RingElement>> {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { ring.one() } else { ring.zero() })
                .collect()
        })
        .collect()
}

fn random_unit<R: Rng>(ring: TruncatedRing, rng: &mut R) -> RingElement {
    loop {
        let x = ring.decode(rng.gen_range(0..ring.size()));
        if x.coeff(0) != 0 {
            return x;
        }
    }
}

/// Inverse of a unit in `F_p[u]/(u^m)` by Newton iteration: the constant term
/// is inverted mod p, then y <- y(2 - xy) doubles the precision each step.
pub fn unit_inverse(x: &RingElement) -> RingElement {
    let ring = x.ring();
    let p = ring.p();
    assert!(x.coeff(0) != 0, "not a unit");
    let c0_inv = (1..p).find(|&y| (x.coeff(0) * y) % p == 1).unwrap();
    let mut y = ring.element(&[c0_inv]);
    let two = ring.one().add(&ring.one()).unwrap();
    loop {
        let xy = x.mul(&y).unwrap();
        if xy == ring.one() {
            return y;
        }
        let corr = two.sub(&xy).unwrap();
        y = y.mul(&corr).unwrap();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn space_2_4_2() -> ModuleSpace {
        ModuleSpace::free(TruncatedRing::new(2, 4).unwrap(), 2).unwrap()
    }

    #[test]
    fn sizes_and_codes() {
        let a = space_2_4_2();
        assert_eq!(a.size(), 256);
        for code in a.codes() {
            assert_eq!(a.encode(&a.decode(code)), code);
        }
    }

    #[test]
    fn code_arithmetic_matches_elementwise() {
        let a = ModuleSpace::free(TruncatedRing::new(3, 2).unwrap(), 2).unwrap();
        for x in a.codes() {
            for y in a.codes() {
                let ex = a.decode(x);
                let ey = a.decode(y);
                let sum: Vec<_> = ex
                    .components()
                    .iter()
                    .zip(ey.components())
                    .map(|(u, v)| u.add(v).unwrap())
                    .collect();
                let sum = ModuleElement::from_components(&a, sum).unwrap();
                assert_eq!(a.add_codes(x, y), a.encode(&sum));
            }
        }
        for x in a.codes() {
            assert_eq!(a.add_codes(x, a.neg_code(x)), 0);
        }
    }

    #[test]
    fn basis_spans_by_digits() {
        let a = space_2_4_2();
        assert_eq!(a.basis().len(), 8);
        // every basis element has exactly one nonzero digit
        for e in a.basis() {
            let code = a.encode(&e);
            assert!(code.is_power_of_two() || a.p() != 2 || code == 1);
            assert_ne!(code, 0);
        }
    }

    #[test]
    fn size_cap_enforced() {
        let r = TruncatedRing::new(2, 16).unwrap();
        assert!(ModuleSpace::free(r, 2).is_err());
    }

    #[test]
    fn automorphisms_invert() {
        let a = space_2_4_2();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let alpha = Automorphism::random(&a, &mut rng);
            for code in [0u32, 1, 2, 17, 63, 255] {
                let x = a.decode(code);
                assert_eq!(alpha.apply_inverse(&alpha.apply(&x)), x);
                assert_eq!(alpha.apply(&alpha.apply_inverse(&x)), x);
            }
        }
    }

    #[test]
    fn automorphisms_are_additive() {
        let a = ModuleSpace::free(TruncatedRing::new(2, 2).unwrap(), 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let alpha = Automorphism::random(&a, &mut rng);
        let table = alpha.code_table();
        for x in a.codes() {
            for y in a.codes() {
                let lhs = table[a.add_codes(x, y) as usize];
                let rhs = a.add_codes(table[x as usize], table[y as usize]);
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn unit_inverse_works() {
        for &(p, m) in &[(2u8, 4u8), (3, 3), (5, 2)] {
            let r = TruncatedRing::new(p, m).unwrap();
            for x in r.elements().filter(|x| x.coeff(0) != 0) {
                assert_eq!(x.mul(&unit_inverse(&x)).unwrap(), r.one());
            }
        }
    }
}
