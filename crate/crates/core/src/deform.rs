//! Discrete deformations over boundary strata and the finite moduli
//! groupoid.
//!
//! A deformation activates a subset of the obstruction strata and picks one
//! nontrivial lift (a residue class of the watched layer) per activated
//! stratum. Applying it adds the chosen invisible constant to the stratum's
//! witness generator, which changes boundary data only: the rigidity island
//! is untouched because truncation below the visibility threshold erases the
//! added constant.

use crate::boundary::{compute_strata, ObstructionStratum, DEFAULT_AXIOM_TABLE};
use crate::error::{Error, Result};
use crate::module::ModuleSpace;
use crate::operator::interaction_signature;
use crate::phase::{PhaseData, PhaseGenerator};
use crate::ring::RingElement;
use serde::{Deserialize, Serialize};

/// Spec of one stratum a deformation can touch: (depth, block, layer).
pub type StratumKey = (usize, usize, usize);

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeformationKind {
    Trivial,
    SingleStratum,
    MultiStratum,
}

/// An activation pattern over the strata of a base phase plus one lift
/// choice per activated stratum. Lift index i picks the residue class
/// (i + 1) * u^layer.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Deformation {
    pub strata: Vec<StratumKey>,
    pub activation: Vec<bool>,
    pub lifts: Vec<Option<usize>>,
}

impl Deformation {
    pub fn kind(&self) -> DeformationKind {
        match self.activation.iter().filter(|&&a| a).count() {
            0 => DeformationKind::Trivial,
            1 => DeformationKind::SingleStratum,
            _ => DeformationKind::MultiStratum,
        }
    }

    pub fn pattern_string(&self) -> String {
        self.activation
            .iter()
            .map(|&a| if a { '1' } else { '0' })
            .collect()
    }
}

fn stratum_keys(strata: &[ObstructionStratum]) -> Vec<StratumKey> {
    strata.iter().map(|s| (s.depth, s.block, s.layer)).collect()
}

/// All activation patterns over the base strata with their finite lift
/// choices. The count is exactly prod over strata of (1 + (p - 1)) and is
/// bounded by prod (1 + ambiguity_count).
pub fn enumerate_deformations(data: &PhaseData) -> Vec<Deformation> {
    let strata = compute_strata(data, &DEFAULT_AXIOM_TABLE);
    let keys = stratum_keys(&strata);
    let lifts_per_stratum = (data.space().p() - 1) as usize;
    let mut out = vec![Deformation {
        strata: keys.clone(),
        activation: vec![false; keys.len()],
        lifts: vec![None; keys.len()],
    }];
    for i in 0..keys.len() {
        let mut extended = Vec::new();
        for d in &out {
            for lift in 0..lifts_per_stratum {
                let mut next = d.clone();
                next.activation[i] = true;
                next.lifts[i] = Some(lift);
                extended.push(next);
            }
        }
        out.extend(extended);
    }
    out.sort_by_key(|d| {
        (
            d.activation.iter().filter(|&&a| a).count(),
            d.pattern_string(),
            d.lifts.clone(),
        )
    });
    out
}

/// Builds a deformation from an activation bitstring, choosing the first
/// lift for every activated stratum.
pub fn deformation_from_pattern(data: &PhaseData, pattern: &str) -> Result<Deformation> {
    let strata = compute_strata(data, &DEFAULT_AXIOM_TABLE);
    let keys = stratum_keys(&strata);
    if pattern.len() != keys.len() {
        return Err(Error::InvalidConfig {
            field: "pattern".into(),
            message: format!(
                "pattern length {} does not match stratum count {}",
                pattern.len(),
                keys.len()
            ),
        });
    }
    let mut activation = Vec::new();
    for ch in pattern.chars() {
        match ch {
            '0' => activation.push(false),
            '1' => activation.push(true),
            other => {
                return Err(Error::InvalidConfig {
                    field: "pattern".into(),
                    message: format!("pattern must be a bitstring, found {other:?}"),
                })
            }
        }
    }
    let lifts = activation
        .iter()
        .map(|&a| if a { Some(0) } else { None })
        .collect();
    Ok(Deformation {
        strata: keys,
        activation,
        lifts,
    })
}

/// Applies a deformation: every activated stratum has the chosen residue
/// class added to its witness generator as the constant (lift+1) * u^layer.
/// The island data is unchanged by construction.
pub fn apply_deformation(data: &PhaseData, deformation: &Deformation) -> Result<PhaseData> {
    let strata = compute_strata(data, &DEFAULT_AXIOM_TABLE);
    let keys = stratum_keys(&strata);
    if keys != deformation.strata {
        return Err(Error::InvalidConfig {
            field: "deformation".into(),
            message: "deformation strata do not match the base phase".into(),
        });
    }
    let max_lift = (data.space().p() - 1) as usize;
    let mut generators = data.generators().to_vec();
    for (i, stratum) in strata.iter().enumerate() {
        if !deformation.activation[i] {
            continue;
        }
        let lift = deformation.lifts[i].ok_or_else(|| Error::InvalidConfig {
            field: "deformation.lifts".into(),
            message: format!("activated stratum {i} has no lift choice"),
        })?;
        if lift >= max_lift {
            return Err(Error::LiftOutOfRange {
                depth: stratum.depth,
                index: lift,
                available: max_lift,
            });
        }
        let ring = data.space().block(stratum.block).ring;
        let delta = ring.monomial(stratum.layer, (lift + 1) as u8);
        let g = &mut generators[stratum.witness.generator];
        g.phase = g.phase.add_constant(&delta)?;
    }
    PhaseData::new(data.space().clone(), data.characters().to_vec(), generators)
}

/// Classification triple of a rigidity island: intrinsic defect rank,
/// termination length, interaction signature.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct ClassificationTriple {
    pub defect_rank: usize,
    pub termination_length: usize,
    pub signature: String,
}

/// Classifies a strong phase. Input with nonempty strata is rejected.
pub fn classify_island(island: &PhaseData, signature_cap: usize) -> Result<ClassificationTriple> {
    if !compute_strata(island, &DEFAULT_AXIOM_TABLE).is_empty() {
        return Err(Error::NotAnIsland);
    }
    let filtration = crate::boundary::build_filtration(island);
    let signature = interaction_signature(island, signature_cap)?;
    Ok(ClassificationTriple {
        defect_rank: island.defect_rank(),
        termination_length: filtration.length,
        signature: signature.fingerprint,
    })
}

const EQUIVALENCE_AUTOMORPHISM_CAP: usize = 4096;
const EQUIVALENCE_GENERATOR_CAP: usize = 8;
const EQUIVALENCE_SPACE_CAP: u32 = 256;

/// Explicit witness that two phase data are relabeling-equivalent: a
/// generator permutation plus the code table of a module automorphism.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EquivalenceWitness {
    pub generator_perm: Vec<usize>,
    pub automorphism_table: Vec<u32>,
}

fn enumerate_matrices(
    ring: crate::ring::TruncatedRing,
    n: usize,
    cap: usize,
) -> Result<Vec<Vec<Vec<RingElement>>>> {
    let entries = n * n;
    let total = (ring.size() as u64).checked_pow(entries as u32);
    match total {
        Some(t) if (t as usize) <= cap => {}
        _ => {
            return Err(Error::SignatureTooLarge {
                what: format!(
                    "automorphism enumeration |R|^(n^2) with |R|={}",
                    ring.size()
                ),
                limit: cap,
            })
        }
    }
    let total = total.unwrap();
    let mut out = Vec::new();
    for idx in 0..total {
        let mut rest = idx;
        let mut mat = vec![vec![ring.zero(); n]; n];
        for row in mat.iter_mut() {
            for cell in row.iter_mut() {
                *cell = ring.decode((rest % ring.size() as u64) as u32);
                rest /= ring.size() as u64;
            }
        }
        if matrix_is_invertible(&mat, ring, n) {
            out.push(mat);
        }
    }
    Ok(out)
}

fn matrix_is_invertible(
    mat: &[Vec<RingElement>],
    ring: crate::ring::TruncatedRing,
    n: usize,
) -> bool {
    // over a local ring a matrix is invertible iff its determinant is a unit
    match n {
        1 => mat[0][0].coeff(0) != 0,
        2 => {
            let ad = mat[0][0].mul(&mat[1][1]).unwrap();
            let bc = mat[0][1].mul(&mat[1][0]).unwrap();
            ad.sub(&bc).unwrap().coeff(0) != 0
        }
        _ => {
            let _ = ring;
            // reduce mod the radical and check invertibility over F_p by
            // permanent-free elimination on the residue matrix
            residue_invertible(mat, n)
        }
    }
}

#[allow(clippy::needless_range_loop)]
fn residue_invertible(mat: &[Vec<RingElement>], n: usize) -> bool {
    let p = mat[0][0].ring().p() as i64;
    let mut a: Vec<Vec<i64>> = (0..n)
        .map(|i| (0..n).map(|j| mat[i][j].coeff(0) as i64).collect())
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| a[r][col] % p != 0);
        let Some(pivot) = pivot else { return false };
        a.swap(col, pivot);
        let inv = (1..p).find(|&y| (a[col][col] * y) % p == 1).unwrap();
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = (a[r][col] * inv) % p;
            for c in 0..n {
                a[r][c] = ((a[r][c] - factor * a[col][c]) % p + p) % p;
            }
        }
    }
    true
}

/// Code tables of all block-diagonal module automorphisms, capped.
fn automorphism_tables(space: &ModuleSpace, cap: usize) -> Result<Vec<Vec<u32>>> {
    let mut per_block: Vec<Vec<Vec<Vec<RingElement>>>> = Vec::new();
    let mut combinations = 1usize;
    for b in space.blocks() {
        let mats = enumerate_matrices(b.ring, b.rank, cap)?;
        combinations = combinations.saturating_mul(mats.len());
        if combinations > cap {
            return Err(Error::SignatureTooLarge {
                what: "automorphism combinations across blocks".into(),
                limit: cap,
            });
        }
        per_block.push(mats);
    }
    let mut choices = vec![0usize; per_block.len()];
    let mut tables = Vec::with_capacity(combinations);
    loop {
        tables.push(table_for_choice(space, &per_block, &choices));
        let mut i = 0;
        loop {
            if i == choices.len() {
                return Ok(tables);
            }
            choices[i] += 1;
            if choices[i] < per_block[i].len() {
                break;
            }
            choices[i] = 0;
            i += 1;
        }
    }
}

#[allow(clippy::needless_range_loop)]
fn table_for_choice(
    space: &ModuleSpace,
    per_block: &[Vec<Vec<Vec<RingElement>>>],
    choices: &[usize],
) -> Vec<u32> {
    space
        .codes()
        .map(|code| {
            let x = space.decode(code);
            let mut out = space.zero();
            let mut comps = out.components().to_vec();
            for (bi, b) in space.blocks().iter().enumerate() {
                let off = space.component_offset(bi);
                let mat = &per_block[bi][choices[bi]];
                for i in 0..b.rank {
                    let mut acc = b.ring.zero();
                    for j in 0..b.rank {
                        acc = acc
                            .add(&mat[i][j].mul(x.component(off + j)).unwrap())
                            .unwrap();
                    }
                    comps[off + i] = acc;
                }
            }
            out = crate::module::ModuleElement::from_components(space, comps).unwrap();
            space.encode(&out)
        })
        .collect()
}

fn invert_table(table: &[u32]) -> Vec<u32> {
    let mut inv = vec![0u32; table.len()];
    for (x, &y) in table.iter().enumerate() {
        inv[y as usize] = x as u32;
    }
    inv
}

fn relabel_by_table(data: &PhaseData, table: &[u32], inv: &[u32]) -> Result<PhaseData> {
    let space = data.space();
    let generators = data
        .generators()
        .iter()
        .map(|g| {
            let code = space.encode(&g.translation);
            let translation = space.decode(inv[code as usize]);
            Ok(PhaseGenerator {
                translation,
                phase: g.phase.compose_with(table),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    PhaseData::new(space.clone(), data.characters().to_vec(), generators)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = vec![vec![0usize]];
    for k in 1..n {
        let mut next = Vec::new();
        for p in &out {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, k);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

fn check_equivalence_caps(a: &PhaseData) -> Result<()> {
    if a.space().size() > EQUIVALENCE_SPACE_CAP {
        return Err(Error::SizeCap {
            what: "equivalence search |A|".into(),
            actual: a.space().size() as usize,
            cap: EQUIVALENCE_SPACE_CAP as usize,
        });
    }
    if a.generators().len() > EQUIVALENCE_GENERATOR_CAP {
        return Err(Error::SizeCap {
            what: "equivalence search generator count".into(),
            actual: a.generators().len(),
            cap: EQUIVALENCE_GENERATOR_CAP,
        });
    }
    Ok(())
}

fn find_equivalence_with_tables(
    a: &PhaseData,
    b: &PhaseData,
    tables: &[Vec<u32>],
) -> Result<Option<EquivalenceWitness>> {
    if a.space() != b.space() || a.characters() != b.characters() {
        return Ok(None);
    }
    if a.generators().len() != b.generators().len() {
        return Ok(None);
    }
    let perms = permutations(a.generators().len());
    for table in tables {
        let inv = invert_table(table);
        let relabeled = relabel_by_table(b, table, &inv)?;
        for perm in &perms {
            let candidate = relabeled.permute_generators(perm);
            if candidate == *a {
                return Ok(Some(EquivalenceWitness {
                    generator_perm: perm.clone(),
                    automorphism_table: table.clone(),
                }));
            }
        }
    }
    Ok(None)
}

/// Exhaustive relabeling search: is there a generator permutation and a
/// module automorphism carrying `a` exactly onto `b`? Desk-scale only; the
/// caps are hard errors, not silent truncation.
pub fn find_equivalence(a: &PhaseData, b: &PhaseData) -> Result<Option<EquivalenceWitness>> {
    check_equivalence_caps(a)?;
    let tables = automorphism_tables(a.space(), EQUIVALENCE_AUTOMORPHISM_CAP)?;
    find_equivalence_with_tables(a, b, &tables)
}

/// Raw deformation count together with the count after merging deformations
/// whose applied phases are relabeling-equivalent. `reduced` is None when
/// the search caps rule out the exhaustive merge.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DeformationCounts {
    pub raw: usize,
    pub reduced: Option<usize>,
}

pub fn deformation_counts(data: &PhaseData) -> Result<DeformationCounts> {
    let deformations = enumerate_deformations(data);
    let raw = deformations.len();
    if check_equivalence_caps(data).is_err() {
        return Ok(DeformationCounts { raw, reduced: None });
    }
    let tables = match automorphism_tables(data.space(), EQUIVALENCE_AUTOMORPHISM_CAP) {
        Ok(t) => t,
        Err(_) => return Ok(DeformationCounts { raw, reduced: None }),
    };
    let applied: Vec<PhaseData> = deformations
        .iter()
        .map(|d| apply_deformation(data, d))
        .collect::<Result<Vec<_>>>()?;
    let mut reps: Vec<usize> = Vec::new();
    'outer: for i in 0..applied.len() {
        for &r in &reps {
            match find_equivalence_with_tables(&applied[r], &applied[i], &tables) {
                Ok(Some(_)) => continue 'outer,
                Ok(None) => {}
                Err(_) => return Ok(DeformationCounts { raw, reduced: None }),
            }
        }
        reps.push(i);
    }
    Ok(DeformationCounts {
        raw,
        reduced: Some(reps.len()),
    })
}

/// One object of the moduli groupoid: a family member keyed by its island
/// invariants and obstruction pattern.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModuliObject {
    pub source: usize,
    pub island: ClassificationTriple,
    /// Fired strata as (depth, axiom_type) pairs.
    pub pattern: Vec<(usize, u8)>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModuliMorphism {
    pub from: usize,
    pub to: usize,
    pub witness: EquivalenceWitness,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModuliGroupoid {
    pub objects: Vec<ModuliObject>,
    pub morphisms: Vec<ModuliMorphism>,
    pub class_count: usize,
}

/// Builds the finite moduli groupoid of a family: objects keyed by island
/// triple and activation pattern, morphisms found by relabeling search among
/// objects with equal keys, classes as connected components.
pub fn moduli_groupoid(family: &[PhaseData], signature_cap: usize) -> Result<ModuliGroupoid> {
    let mut objects = Vec::new();
    for (i, data) in family.iter().enumerate() {
        let island = crate::boundary::rigidity_island(data)?;
        let triple = classify_island(&island, signature_cap)?;
        let strata = compute_strata(data, &DEFAULT_AXIOM_TABLE);
        objects.push(ModuliObject {
            source: i,
            island: triple,
            pattern: strata.iter().map(|s| (s.depth, s.axiom_type)).collect(),
        });
    }
    let mut parent: Vec<usize> = (0..objects.len()).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let root = find(parent, parent[x]);
            parent[x] = root;
        }
        parent[x]
    }
    let mut morphisms = Vec::new();
    let mut table_cache: Vec<(ModuleSpace, Vec<Vec<u32>>)> = Vec::new();
    for i in 0..objects.len() {
        for j in i + 1..objects.len() {
            if objects[i].island != objects[j].island || objects[i].pattern != objects[j].pattern {
                continue;
            }
            if family[i].space() != family[j].space() {
                continue;
            }
            let search = check_equivalence_caps(&family[i]).and_then(|()| {
                let idx = match table_cache.iter().position(|(s, _)| s == family[i].space()) {
                    Some(idx) => idx,
                    None => {
                        let tables =
                            automorphism_tables(family[i].space(), EQUIVALENCE_AUTOMORPHISM_CAP)?;
                        table_cache.push((family[i].space().clone(), tables));
                        table_cache.len() - 1
                    }
                };
                find_equivalence_with_tables(&family[i], &family[j], &table_cache[idx].1)
            });
            match search {
                Ok(Some(witness)) => {
                    morphisms.push(ModuliMorphism {
                        from: i,
                        to: j,
                        witness,
                    });
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    if ri != rj {
                        parent[ri] = rj;
                    }
                }
                Ok(None) => {}
                // caps on the witness search leave the objects unmerged
                Err(Error::SizeCap { .. }) => {}
                Err(e) => return Err(e),
            }
        }
    }
    let mut roots: Vec<usize> = (0..objects.len()).map(|i| find(&mut parent, i)).collect();
    roots.sort_unstable();
    roots.dedup();
    Ok(ModuliGroupoid {
        class_count: roots.len(),
        objects,
        morphisms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::{analyze, rigidity_island, AnalysisOptions};
    use crate::module::{Automorphism, ModuleSpace};
    use crate::phase::QuadraticPhase;
    use crate::ring::{AdditiveCharacter, TruncatedRing};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Two-obstruction weak data small enough for equivalence searches:
    /// R = `F_2[u]/(u^3)`, A = R^2 (|A| = 64), chi reading the constant
    /// coefficient, phi = u x1 x2. Both invisible layers rad^1 and rad^2
    /// carry phase data, so the strata sit at depths 3 and 4 as in the
    /// golden example.
    fn small_weak() -> PhaseData {
        let ring = TruncatedRing::new(2, 3).unwrap();
        let space = ModuleSpace::free(ring, 2).unwrap();
        let chi = AdditiveCharacter::new(ring, &[1, 0, 0]).unwrap();
        let u = ring.monomial(1, 1);
        let z = ring.zero();
        let phi = QuadraticPhase::from_structured(
            &space,
            0,
            &[vec![z.clone(), u], vec![z.clone(), z.clone()]],
            &[z.clone(), z.clone()],
            &z,
        )
        .unwrap();
        let gens = vec![
            PhaseGenerator {
                translation: space.decode(1),
                phase: QuadraticPhase::zero(&space, 0),
            },
            PhaseGenerator {
                translation: space.zero(),
                phase: phi,
            },
        ];
        PhaseData::new(space, vec![chi], gens).unwrap()
    }

    fn strong_small() -> PhaseData {
        let data = small_weak();
        let ring = data.space().block(0).ring;
        let chi = AdditiveCharacter::new(ring, &[0, 0, 1]).unwrap();
        PhaseData::new(data.space().clone(), vec![chi], data.generators().to_vec()).unwrap()
    }

    #[test]
    fn weak_data_has_four_deformations() {
        let data = small_weak();
        let defs = enumerate_deformations(&data);
        assert_eq!(defs.len(), 4);
        let kinds: Vec<_> = defs.iter().map(Deformation::kind).collect();
        assert_eq!(
            kinds
                .iter()
                .filter(|&&k| k == DeformationKind::Trivial)
                .count(),
            1
        );
        assert_eq!(
            kinds
                .iter()
                .filter(|&&k| k == DeformationKind::SingleStratum)
                .count(),
            2
        );
        assert_eq!(
            kinds
                .iter()
                .filter(|&&k| k == DeformationKind::MultiStratum)
                .count(),
            1
        );
    }

    #[test]
    fn strong_data_has_only_the_trivial_deformation() {
        let defs = enumerate_deformations(&strong_small());
        assert_eq!(defs.len(), 1);
        assert_eq!(defs[0].kind(), DeformationKind::Trivial);
    }

    #[test]
    fn trivial_deformation_is_identity() {
        let data = small_weak();
        let trivial = deformation_from_pattern(&data, "00").unwrap();
        let applied = apply_deformation(&data, &trivial).unwrap();
        assert_eq!(applied, data);
    }

    #[test]
    fn deformations_fix_the_island() {
        let data = small_weak();
        let base_island = rigidity_island(&data).unwrap();
        for d in enumerate_deformations(&data) {
            let applied = apply_deformation(&data, &d).unwrap();
            let island = rigidity_island(&applied).unwrap();
            assert_eq!(island, base_island, "pattern {}", d.pattern_string());
            // island invariants are preserved through re-analysis
            let r = analyze(&applied, &AnalysisOptions::default()).unwrap();
            let r0 = analyze(&data, &AnalysisOptions::default()).unwrap();
            assert_eq!(r.island.defect_rank, r0.island.defect_rank);
            assert_eq!(r.island.termination_length, r0.island.termination_length);
            assert_eq!(r.island.signature, r0.island.signature);
        }
    }

    #[test]
    fn activating_one_stratum_changes_only_that_stratum() {
        let data = small_weak();
        let d = deformation_from_pattern(&data, "10").unwrap();
        let applied = apply_deformation(&data, &d).unwrap();
        let base = compute_strata(&data, &DEFAULT_AXIOM_TABLE);
        let new = compute_strata(&applied, &DEFAULT_AXIOM_TABLE);
        assert_eq!(base.len(), new.len());
        // depth 3 class content differs, depth 4 content is unchanged
        assert_ne!(
            base[0].classes[0].content_hash,
            new[0].classes[0].content_hash
        );
        assert_eq!(
            base[1].classes[0].content_hash,
            new[1].classes[0].content_hash
        );
    }

    #[test]
    fn lift_out_of_range_is_rejected() {
        let data = small_weak();
        let mut d = deformation_from_pattern(&data, "10").unwrap();
        d.lifts[0] = Some(7);
        assert!(matches!(
            apply_deformation(&data, &d),
            Err(Error::LiftOutOfRange { .. })
        ));
    }

    #[test]
    fn deformation_count_bound() {
        let data = small_weak();
        let strata = compute_strata(&data, &DEFAULT_AXIOM_TABLE);
        let bound: usize = strata.iter().map(|s| 1 + s.ambiguity_count).product();
        assert!(enumerate_deformations(&data).len() <= bound);
    }

    #[test]
    fn classify_island_values() {
        let data = small_weak();
        let island = rigidity_island(&data).unwrap();
        let triple = classify_island(&island, 65536).unwrap();
        // every phase value is invisible here, so the island keeps only the
        // translation structure
        assert_eq!(triple.defect_rank, 0);
        assert_eq!(triple.termination_length, 1);
        // the weak base itself is not an island
        assert!(matches!(
            classify_island(&data, 65536),
            Err(Error::NotAnIsland)
        ));
        // the strong variant is its own island and keeps the full defect rank
        let strong = strong_small();
        let strong_triple = classify_island(&strong, 65536).unwrap();
        assert_eq!(strong_triple.defect_rank, 2);
    }

    #[test]
    fn zero_phase_classifies_trivially() {
        let ring = TruncatedRing::new(2, 2).unwrap();
        let chi = AdditiveCharacter::trivial(ring);
        let data = PhaseData::single(ring, 1, chi, vec![]).unwrap();
        let triple = classify_island(&data, 64).unwrap();
        assert_eq!(triple.defect_rank, 0);
        assert_eq!(triple.termination_length, 0);
    }

    #[test]
    fn relabeled_islands_classify_equal() {
        let data = small_weak();
        let island = rigidity_island(&data).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let alpha = Automorphism::random(island.space(), &mut rng);
        let relabeled = island.relabel(&alpha).unwrap();
        let t1 = classify_island(&island, 65536).unwrap();
        let t2 = classify_island(&relabeled, 65536).unwrap();
        assert_eq!(t1, t2);
    }

    #[test]
    fn equivalence_finds_relabelings() {
        let data = small_weak();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let alpha = Automorphism::random(data.space(), &mut rng);
        let relabeled = data.relabel(&alpha).unwrap().permute_generators(&[1, 0]);
        let witness = find_equivalence(&data, &relabeled).unwrap();
        assert!(witness.is_some());
        // a genuinely different phase is not equivalent
        let other = strong_small();
        assert!(find_equivalence(&data, &other).unwrap().is_none());
    }

    #[test]
    fn moduli_of_deformation_family() {
        let data = small_weak();
        let family: Vec<PhaseData> = enumerate_deformations(&data)
            .iter()
            .map(|d| apply_deformation(&data, d).unwrap())
            .collect();
        let groupoid = moduli_groupoid(&family, 65536).unwrap();
        assert_eq!(groupoid.objects.len(), 4);
        assert!(groupoid.class_count <= 4);
        // all four share the island triple
        let first = &groupoid.objects[0].island;
        assert!(groupoid.objects.iter().all(|o| &o.island == first));
    }

    #[test]
    fn moduli_merges_relabeled_duplicates() {
        let data = small_weak();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let alpha = Automorphism::random(data.space(), &mut rng);
        let twin = data.relabel(&alpha).unwrap();
        let solo = moduli_groupoid(&[data.clone()], 65536).unwrap();
        let family = vec![data.clone(), twin];
        let groupoid = moduli_groupoid(&family, 65536).unwrap();
        assert_eq!(groupoid.objects.len(), 2);
        assert_eq!(groupoid.class_count, 1);
        assert_eq!(groupoid.morphisms.len(), 1);
        // class count is stable under adding relabeled duplicates
        assert_eq!(groupoid.class_count, solo.class_count);
    }

    #[test]
    fn singleton_strong_family() {
        let family = vec![strong_small()];
        let groupoid = moduli_groupoid(&family, 65536).unwrap();
        assert_eq!(groupoid.objects.len(), 1);
        assert_eq!(groupoid.class_count, 1);
        assert!(groupoid.objects[0].pattern.is_empty());
    }

    #[test]
    fn deformation_counts_are_finite() {
        let data = small_weak();
        let counts = deformation_counts(&data).unwrap();
        assert_eq!(counts.raw, 4);
        let reduced = counts.reduced.unwrap();
        assert!((1..=4).contains(&reduced));
    }
}
