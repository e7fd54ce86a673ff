//! Quadratic phases and the additive-derivative calculus.
//!
//! A phase is a function phi: A -> R stored as a full value table indexed by
//! module codes. Structured constructors (gram matrix + linear part +
//! constant) materialize tables; validity (additive degree <= 2) is enforced
//! at construction by checking that third differences vanish.
//!
//! Degree checks run over the additive basis of A rather than over all
//! direction tuples: difference operators commute and satisfy
//! D_{h+h'} = D_h + D_{h'} + D_h D_{h'}, so an iterated difference in
//! arbitrary directions expands into iterated differences of at least the
//! same order in basis directions. The equivalence is verified against the
//! all-directions oracle in the test suite.

use crate::error::{Error, Result};
use crate::module::{Automorphism, ModuleElement, ModuleSpace};
use crate::ring::{AdditiveCharacter, RingElement, TruncatedRing};
use serde::{Deserialize, Serialize};

/// Full polarization table B(x, y) = phi(x+y) - phi(x) - phi(y) on A x A.
pub struct Polarization {
    size: u32,
    values: Vec<RingElement>,
    pub additive_in_first: bool,
    pub additive_in_second: bool,
}

impl Polarization {
    pub fn value(&self, x: u32, y: u32) -> &RingElement {
        &self.values[(x as u64 * self.size as u64 + y as u64) as usize]
    }
}

/// A function A -> R_b of additive degree <= 2, tabulated over all of A.
/// `block` names the block of the space carrying the values; the table may
/// only depend on the coordinates of that block.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct QuadraticPhase {
    space: ModuleSpace,
    block: usize,
    values: Vec<RingElement>,
}

impl QuadraticPhase {
    pub fn zero(space: &ModuleSpace, block: usize) -> Self {
        let z = space.block(block).ring.zero();
        Self {
            space: space.clone(),
            block,
            values: vec![z; space.size() as usize],
        }
    }

    /// Builds a phase from an explicit table and validates that it is
    /// quadratic (all third differences vanish identically) and depends only
    /// on the coordinates of its block.
    pub fn from_table(space: &ModuleSpace, block: usize, values: Vec<RingElement>) -> Result<Self> {
        let phase = Self::from_table_unchecked(space, block, values)?;
        if space.blocks().len() > 1 {
            let div = phase.block_divisor();
            let local_size = phase.block_size() as u64;
            for x in space.codes() {
                let local = ((x as u64 / div) % local_size) as u32;
                if phase.values[x as usize] != phase.values[(local as u64 * div) as usize] {
                    return Err(Error::InvalidConfig {
                        field: "phase.table".into(),
                        message: format!(
                            "table value at code {x} depends on coordinates outside block {block}"
                        ),
                    });
                }
            }
        }
        phase.check_quadratic()?;
        Ok(phase)
    }

    /// Table constructor without the quadratic-validity check. Used by the
    /// derivative calculus (which preserves validity) and by tests that need
    /// to exercise the rejection path. The table must depend only on the
    /// block coordinates.
    pub fn from_table_unchecked(
        space: &ModuleSpace,
        block: usize,
        values: Vec<RingElement>,
    ) -> Result<Self> {
        if values.len() != space.size() as usize {
            return Err(Error::InvalidConfig {
                field: "phase.table".into(),
                message: format!("expected {} values, got {}", space.size(), values.len()),
            });
        }
        let ring = space.block(block).ring;
        if values.iter().any(|v| v.ring() != ring) {
            return Err(Error::InvalidConfig {
                field: "phase.table".into(),
                message: "table values must live in the block ring".into(),
            });
        }
        Ok(Self {
            space: space.clone(),
            block,
            values,
        })
    }

    /// phi(x) = x^T gram x + linear . x + constant over the block ring,
    /// reading the components of the given block.
    pub fn from_structured(
        space: &ModuleSpace,
        block: usize,
        gram: &[Vec<RingElement>],
        linear: &[RingElement],
        constant: &RingElement,
    ) -> Result<Self> {
        let b = space.block(block);
        let n = b.rank;
        let ring = b.ring;
        if gram.len() != n || gram.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidConfig {
                field: "phase.gram".into(),
                message: format!("gram must be {n}x{n}"),
            });
        }
        if linear.len() != n {
            return Err(Error::InvalidConfig {
                field: "phase.linear".into(),
                message: format!("linear part must have {n} entries"),
            });
        }
        let off = space.component_offset(block);
        let mut values = Vec::with_capacity(space.size() as usize);
        for code in space.codes() {
            let x = space.decode(code);
            let comps = &x.components()[off..off + n];
            let mut acc = constant.clone();
            for i in 0..n {
                acc = acc.add(&linear[i].mul(&comps[i])?)?;
                for j in 0..n {
                    let term = gram[i][j].mul(&comps[i])?.mul(&comps[j])?;
                    acc = acc.add(&term)?;
                }
            }
            if acc.ring() != ring {
                return Err(Error::MismatchedRings {
                    p_a: ring.p(),
                    m_a: ring.m(),
                    p_b: acc.ring().p(),
                    m_b: acc.ring().m(),
                });
            }
            values.push(acc);
        }
        // structured phases are quadratic by construction; keep the check as
        // a guard against constructor drift
        let phase = Self::from_table_unchecked(space, block, values)?;
        phase.check_quadratic()?;
        Ok(phase)
    }

    pub fn space(&self) -> &ModuleSpace {
        &self.space
    }

    pub fn block(&self) -> usize {
        self.block
    }

    pub fn ring(&self) -> TruncatedRing {
        self.space.block(self.block).ring
    }

    pub fn value(&self, code: u32) -> &RingElement {
        &self.values[code as usize]
    }

    pub fn values(&self) -> &[RingElement] {
        &self.values
    }

    pub fn at(&self, x: &ModuleElement) -> &RingElement {
        self.value(self.space.encode(x))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(RingElement::is_zero)
    }

    pub fn add(&self, other: &QuadraticPhase) -> Result<QuadraticPhase> {
        if self.space != other.space || self.block != other.block {
            return Err(Error::Internal(
                "phase addition requires matching space and block".into(),
            ));
        }
        let values = self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| a.add(b))
            .collect::<Result<Vec<_>>>()?;
        Self::from_table_unchecked(&self.space, self.block, values)
    }

    /// Adds a constant to every value.
    pub fn add_constant(&self, c: &RingElement) -> Result<QuadraticPhase> {
        let values = self
            .values
            .iter()
            .map(|v| v.add(c))
            .collect::<Result<Vec<_>>>()?;
        Self::from_table_unchecked(&self.space, self.block, values)
    }

    /// phi(. + h) as a table.
    pub fn translate(&self, h: u32) -> QuadraticPhase {
        let values = self
            .space
            .codes()
            .map(|x| self.values[self.space.add_codes(x, h) as usize].clone())
            .collect();
        Self {
            space: self.space.clone(),
            block: self.block,
            values,
        }
    }

    /// Finite difference D_h phi = phi(. + h) - phi.
    pub fn additive_derivative(&self, h: u32) -> QuadraticPhase {
        let values = self
            .space
            .codes()
            .map(|x| {
                self.values[self.space.add_codes(x, h) as usize]
                    .sub(&self.values[x as usize])
                    .expect("same ring")
            })
            .collect();
        Self {
            space: self.space.clone(),
            block: self.block,
            values,
        }
    }

    fn is_constant(&self) -> bool {
        self.values.iter().all(|v| v == &self.values[0])
    }

    /// Code multiplier locating this block's digits within the full space.
    fn block_divisor(&self) -> u64 {
        self.space.blocks()[..self.block]
            .iter()
            .map(|x| (x.ring.size() as u64).pow(x.rank as u32))
            .product()
    }

    fn block_size(&self) -> u32 {
        let b = self.space.block(self.block);
        (b.ring.size() as u64).pow(b.rank as u32) as u32
    }

    /// Single-block view of the table. A phase depends only on its block's
    /// coordinates, so the degree calculus and value scans run here instead
    /// of over the full product space.
    fn block_view(&self) -> (ModuleSpace, QuadraticPhase) {
        if self.space.blocks().len() == 1 {
            return (self.space.clone(), self.clone());
        }
        let b = self.space.block(self.block);
        let sub = ModuleSpace::free(b.ring, b.rank).expect("block passed caps at construction");
        let div = self.block_divisor();
        let values = sub
            .codes()
            .map(|y| self.values[(y as u64 * div) as usize].clone())
            .collect();
        let phase = QuadraticPhase {
            space: sub.clone(),
            block: 0,
            values,
        };
        (sub, phase)
    }

    /// Distinct values of the table: one representative per block code.
    pub(crate) fn block_values(&self) -> impl Iterator<Item = &RingElement> {
        let div = self.block_divisor();
        (0..self.block_size()).map(move |y| &self.values[(y as u64 * div) as usize])
    }

    fn basis_codes(&self) -> Vec<u32> {
        self.space
            .basis()
            .iter()
            .map(|e| self.space.encode(e))
            .collect()
    }

    /// Smallest d >= 0 such that every (d+1)-fold iterated difference
    /// vanishes identically. Returns 3 for tables that are not quadratic.
    /// Differences in directions outside the block vanish, so the check runs
    /// on the block view over basis directions; the reduction to basis
    /// tuples is exercised against the all-directions oracle in tests.
    pub fn additive_degree(&self) -> usize {
        let (_, view) = self.block_view();
        if view.is_constant() {
            return 0;
        }
        let basis = view.basis_codes();
        let firsts: Vec<_> = basis.iter().map(|&b| view.additive_derivative(b)).collect();
        if firsts.iter().all(QuadraticPhase::is_constant) {
            return 1;
        }
        let all_second_constant = firsts.iter().all(|d1| {
            basis
                .iter()
                .all(|&b| d1.additive_derivative(b).is_constant())
        });
        if all_second_constant {
            2
        } else {
            3
        }
    }

    fn check_quadratic(&self) -> Result<()> {
        let (_, view) = self.block_view();
        let div = self.block_divisor();
        let lift = |code: u32| (code as u64 * div) as u32;
        let basis = view.basis_codes();
        for &b1 in &basis {
            let d1 = view.additive_derivative(b1);
            for &b2 in &basis {
                let d2 = d1.additive_derivative(b2);
                if !d2.is_constant() {
                    let base = d2.value(0).clone();
                    let x = view
                        .space
                        .codes()
                        .find(|&c| d2.value(c) != &base)
                        .expect("nonconstant table has a differing point");
                    // D_x D_{b2} D_{b1} phi (0) = d2(x) - d2(0) != 0
                    return Err(Error::NotQuadratic {
                        h1: lift(b1),
                        h2: lift(b2),
                        h3: lift(x),
                        x: 0,
                    });
                }
            }
        }
        Ok(())
    }

    /// Polarization B(x, y) = phi(x+y) - phi(x) - phi(y), with biadditivity
    /// flags per argument. Biadditivity is decided by basis increments.
    pub fn polarize(&self) -> Result<Polarization> {
        let size = self.space.size();
        if size > 256 {
            return Err(Error::SizeCap {
                what: "polarization table |A|^2".into(),
                actual: size as usize * size as usize,
                cap: 256 * 256,
            });
        }
        let mut values = Vec::with_capacity((size as usize) * (size as usize));
        for x in self.space.codes() {
            for y in self.space.codes() {
                let v = self.values[self.space.add_codes(x, y) as usize]
                    .sub(&self.values[x as usize])?
                    .sub(&self.values[y as usize])?;
                values.push(v);
            }
        }
        let pol = Polarization {
            size,
            values,
            additive_in_first: true,
            additive_in_second: true,
        };
        let mut pol = pol;
        pol.additive_in_first = self.polarization_additive(&pol, true)?;
        pol.additive_in_second = self.polarization_additive(&pol, false)?;
        Ok(pol)
    }

    fn polarization_additive(&self, pol: &Polarization, first: bool) -> Result<bool> {
        for b in self.basis_codes() {
            for x in self.space.codes() {
                for y in self.space.codes() {
                    let xb = self.space.add_codes(x, b);
                    let (lhs, t1, t2) = if first {
                        (pol.value(xb, y), pol.value(x, y), pol.value(b, y))
                    } else {
                        (pol.value(y, xb), pol.value(y, x), pol.value(y, b))
                    };
                    if lhs != &t1.add(t2)? {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }

    /// Strict biadditivity check that reports a witness triple on failure.
    pub fn polarize_checked(&self) -> Result<Polarization> {
        let pol = self.polarize()?;
        if !pol.additive_in_first || !pol.additive_in_second {
            let witness = self.find_biadditivity_witness(&pol);
            let (x, x2, y) = witness.unwrap_or((0, 0, 0));
            return Err(Error::NotBiadditive { x, x2, y });
        }
        Ok(pol)
    }

    fn find_biadditivity_witness(&self, pol: &Polarization) -> Option<(u32, u32, u32)> {
        for x in self.space.codes() {
            for x2 in self.space.codes() {
                for y in self.space.codes() {
                    let sum = self.space.add_codes(x, x2);
                    let expect = pol.value(x, y).add(pol.value(x2, y)).ok()?;
                    if pol.value(sum, y) != &expect {
                        return Some((x, x2, y));
                    }
                }
            }
        }
        None
    }

    /// Zeroes all value coefficients at radical indices >= `threshold`.
    /// Truncation is coefficientwise, hence additive, so it commutes with
    /// finite differences and preserves quadratic validity.
    pub fn truncate_below(&self, threshold: usize) -> QuadraticPhase {
        let values = self
            .values
            .iter()
            .map(|v| v.truncate_below(threshold))
            .collect();
        Self {
            space: self.space.clone(),
            block: self.block,
            values,
        }
    }

    /// True when some value has a nonzero coefficient at radical index `j`.
    pub fn has_layer_data(&self, j: usize) -> bool {
        self.block_values().any(|v| v.coeff(j) != 0)
    }

    /// Smallest radical depth among the values (m for the zero phase).
    pub fn min_value_depth(&self) -> usize {
        self.block_values()
            .map(RingElement::radical_depth)
            .min()
            .unwrap_or(self.ring().m() as usize)
    }

    /// Relabels the table by a module automorphism: x -> phi(alpha(x)).
    pub fn compose_with(&self, alpha_table: &[u32]) -> QuadraticPhase {
        let values = self
            .space
            .codes()
            .map(|x| self.values[alpha_table[x as usize] as usize].clone())
            .collect();
        Self {
            space: self.space.clone(),
            block: self.block,
            values,
        }
    }
}

/// One generating pair: a translation a in A and a phase phi.
#[derive(Clone, PartialEq, Debug)]
pub struct PhaseGenerator {
    pub translation: ModuleElement,
    pub phase: QuadraticPhase,
}

/// Admissibility regime reported by the analysis.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Admissibility {
    Strong,
    Weak,
}

/// Finite phase data (A, Phi, chi): the object every analysis consumes.
/// `characters[b]` is the additive character used for block b. An empty
/// generator list is the zero phase.
#[derive(Clone, PartialEq, Debug)]
pub struct PhaseData {
    space: ModuleSpace,
    characters: Vec<AdditiveCharacter>,
    generators: Vec<PhaseGenerator>,
}

impl PhaseData {
    pub fn new(
        space: ModuleSpace,
        characters: Vec<AdditiveCharacter>,
        generators: Vec<PhaseGenerator>,
    ) -> Result<Self> {
        if characters.len() != space.blocks().len() {
            return Err(Error::InvalidConfig {
                field: "character".into(),
                message: "one character per block required".into(),
            });
        }
        for (b, chi) in characters.iter().enumerate() {
            if chi.ring() != space.block(b).ring {
                return Err(Error::InvalidConfig {
                    field: format!("character[{b}]"),
                    message: "character ring does not match block ring".into(),
                });
            }
        }
        for (i, g) in generators.iter().enumerate() {
            if g.phase.space() != &space {
                return Err(Error::InvalidConfig {
                    field: format!("generators[{i}].phase"),
                    message: "phase space does not match data space".into(),
                });
            }
            if g.translation.components().len() != space.total_rank() {
                return Err(Error::InvalidConfig {
                    field: format!("generators[{i}].translation"),
                    message: "translation has wrong number of components".into(),
                });
            }
        }
        Ok(Self {
            space,
            characters,
            generators,
        })
    }

    /// Single-block constructor over R^n.
    pub fn single(
        ring: TruncatedRing,
        rank: usize,
        character: AdditiveCharacter,
        generators: Vec<PhaseGenerator>,
    ) -> Result<Self> {
        let space = ModuleSpace::free(ring, rank)?;
        Self::new(space, vec![character], generators)
    }

    pub fn space(&self) -> &ModuleSpace {
        &self.space
    }

    pub fn characters(&self) -> &[AdditiveCharacter] {
        &self.characters
    }

    pub fn character(&self, block: usize) -> &AdditiveCharacter {
        &self.characters[block]
    }

    pub fn generators(&self) -> &[PhaseGenerator] {
        &self.generators
    }

    pub fn is_zero_phase(&self) -> bool {
        self.generators
            .iter()
            .all(|g| g.translation.is_zero() && g.phase.is_zero())
    }

    /// Maximal additive degree over the generator phases; 0 for
    /// translation-only or empty data.
    pub fn defect_rank(&self) -> usize {
        self.generators
            .iter()
            .map(|g| g.phase.additive_degree())
            .max()
            .unwrap_or(0)
    }

    /// Defect rank restricted to generators whose phase carries block `b`.
    pub fn block_defect_rank(&self, b: usize) -> usize {
        self.generators
            .iter()
            .filter(|g| g.phase.block() == b && !g.phase.is_zero())
            .map(|g| g.phase.additive_degree())
            .max()
            .unwrap_or(0)
    }

    /// Block phase over the product of all summand spaces. Generators are
    /// embedded blockwise; characters act per block. All summands must share
    /// the prime p (rings may differ in truncation order).
    pub fn direct_sum(summands: &[PhaseData]) -> Result<PhaseData> {
        if summands.is_empty() {
            return Err(Error::Internal("direct sum of zero summands".into()));
        }
        let blocks: Vec<_> = summands
            .iter()
            .flat_map(|s| s.space.blocks().iter().copied())
            .collect();
        let space = ModuleSpace::new(blocks)?;
        let characters: Vec<_> = summands
            .iter()
            .flat_map(|s| s.characters.iter().cloned())
            .collect();

        let mut generators = Vec::new();
        let mut block_off = 0usize;
        let mut comp_off = 0usize;
        let mut digit_div = 1u64;
        for s in summands {
            let local_size = s.space.size() as u64;
            for g in &s.generators {
                // translation: own components in place, zero elsewhere
                let mut comps = space.zero().components().to_vec();
                for (i, c) in g.translation.components().iter().enumerate() {
                    comps[comp_off + i] = c.clone();
                }
                let translation = ModuleElement::from_components(&space, comps)?;
                // phase table: value depends only on this summand's digits
                let block = block_off + g.phase.block();
                let values = space
                    .codes()
                    .map(|x| {
                        let local = ((x as u64 / digit_div) % local_size) as u32;
                        g.phase.value(local).clone()
                    })
                    .collect();
                let phase = QuadraticPhase::from_table_unchecked(&space, block, values)?;
                generators.push(PhaseGenerator { translation, phase });
            }
            block_off += s.space.blocks().len();
            comp_off += s.space.total_rank();
            digit_div *= local_size;
        }
        PhaseData::new(space, characters, generators)
    }

    /// Projects the data onto one block: translations keep only their
    /// block components, phases of other blocks become zero.
    pub fn block_restriction(&self, b: usize) -> Result<PhaseData> {
        let block = self.space.block(b);
        let sub = ModuleSpace::free(block.ring, block.rank)?;
        let off = self.space.component_offset(b);
        // embedding codes of the sub-space into the full space
        let digit_div: u64 = self.space.blocks()[..b]
            .iter()
            .map(|x| (x.ring.size() as u64).pow(x.rank as u32))
            .product();
        let generators = self
            .generators
            .iter()
            .map(|g| {
                let comps = g.translation.components()[off..off + block.rank].to_vec();
                let translation = ModuleElement::from_components(&sub, comps)?;
                let phase = if g.phase.block() == b {
                    let values = sub
                        .codes()
                        .map(|y| {
                            let full = (y as u64 * digit_div) as u32;
                            g.phase.value(full).clone()
                        })
                        .collect();
                    QuadraticPhase::from_table_unchecked(&sub, 0, values)?
                } else {
                    QuadraticPhase::zero(&sub, 0)
                };
                Ok(PhaseGenerator { translation, phase })
            })
            .collect::<Result<Vec<_>>>()?;
        PhaseData::new(sub, vec![self.characters[b].clone()], generators)
    }

    /// Applies a module automorphism uniformly: translations through the
    /// inverse, phase tables by precomposition. The realized operator family
    /// is conjugate to the original, so every analysis invariant must agree.
    pub fn relabel(&self, alpha: &Automorphism) -> Result<PhaseData> {
        let table = alpha.code_table();
        let generators = self
            .generators
            .iter()
            .map(|g| {
                Ok(PhaseGenerator {
                    translation: alpha.apply_inverse(&g.translation),
                    phase: g.phase.compose_with(&table),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        PhaseData::new(self.space.clone(), self.characters.clone(), generators)
    }

    pub fn permute_generators(&self, perm: &[usize]) -> PhaseData {
        let mut sorted = perm.to_vec();
        sorted.sort_unstable();
        assert!(
            sorted == (0..self.generators.len()).collect::<Vec<_>>(),
            "not a permutation of the generator indices"
        );
        let generators = perm.iter().map(|&i| self.generators[i].clone()).collect();
        Self {
            space: self.space.clone(),
            characters: self.characters.clone(),
            generators,
        }
    }
}
