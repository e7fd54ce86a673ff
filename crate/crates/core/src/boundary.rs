//! Canonical filtration, obstruction strata, boundary detectors, rigidity
//! islands, and the boundary quotient.
//!
//! The mechanism throughout is radical-layer visibility. For a block with
//! ring `F_p[u]/(u^m)`, character threshold s and block defect rank d_b, the
//! invisible layers are rad^l for s <= l < m; the stratum watching layer l
//! sits at depth d_b + (l - s) + 1. A stratum fires exactly when some
//! generator phase has a nonzero value coefficient at its layer: such data
//! admits p distinct lifts modulo the next layer, all with the same operator
//! realization, which is the extension ambiguity recorded by the stratum.

use crate::error::{Error, Result};
use crate::module::Automorphism;
use crate::operator::{generated_closure, interaction_signature};
use crate::phase::{Admissibility, PhaseData, PhaseGenerator, QuadraticPhase};
use crate::ring::RingElement;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Default axiom-type assignment for successive failing depths within one
/// block: first failure is type 3, second type 5, later ones cycle through
/// the remaining indices.
pub const DEFAULT_AXIOM_TABLE: [u8; 5] = [3, 5, 1, 2, 4];

/// Tunable limits and seeds for one analysis run.
#[derive(Clone, Debug)]
pub struct AnalysisOptions {
    pub seed: u64,
    /// Layer bound for the detector closure.
    pub closure_depth: usize,
    /// Element cap for the detector closure.
    pub closure_cap: usize,
    /// Element cap for signature computation.
    pub signature_cap: usize,
    /// Number of sampled module automorphisms for the stability detector.
    pub stability_samples: usize,
    pub axiom_table: Vec<u8>,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            closure_depth: 2,
            closure_cap: 192,
            signature_cap: 65536,
            stability_samples: 4,
            axiom_table: DEFAULT_AXIOM_TABLE.to_vec(),
        }
    }
}

/// One stratum of the canonical filtration. Every generator listed in
/// `members` still carries data at this depth, so memberships are descending
/// in depth and the final stratum is empty.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FiltrationStratum {
    pub depth: usize,
    /// Present for depths within defect generation (t <= d).
    pub derivative_order: Option<usize>,
    /// (block, radical layer) pairs governing this depth beyond the defect.
    pub value_layers: Vec<(usize, usize)>,
    pub members: Vec<usize>,
}

/// The canonical descending chain. `length` is the first depth with empty
/// membership, i.e. the index of the zero stratum.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Filtration {
    pub strata: Vec<FiltrationStratum>,
    pub length: usize,
}

/// A nonzero obstruction stratum: the typed locus of extension ambiguity at
/// one invisible radical layer of one block.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ObstructionStratum {
    pub depth: usize,
    pub block: usize,
    /// Radical layer index l: ambiguity lives in rad^l / rad^(l+1).
    pub layer: usize,
    pub axiom_type: u8,
    /// Number of chi-indistinguishable value classes in the layer.
    pub ambiguity_count: usize,
    pub witness: Witness,
    /// Distinct nonzero generator images in this stratum.
    pub classes: Vec<StratumClass>,
    /// Per generator: the class id of its image, None for zero image.
    pub generator_images: Vec<Option<usize>>,
}

/// A pair of phases with equal operator realization but distinct values in
/// the stratum layer: phi_g and phi_g + delta.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Witness {
    pub generator: usize,
    /// An invisible layer element; adding it to the phase changes no
    /// realized operator.
    pub delta: Vec<u8>,
    /// A point where the phase has a nonzero coefficient at the layer.
    pub point: u32,
}

/// One value class of the boundary quotient at a stratum.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StratumClass {
    pub id: usize,
    pub members: Vec<usize>,
    pub content_hash: String,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorKind {
    CommutatorGrowth,
    DefectProliferation,
    FiltrationStability,
    ExtensionAmbiguity,
}

impl DetectorKind {
    pub fn name(&self) -> &'static str {
        match self {
            DetectorKind::CommutatorGrowth => "commutator-growth",
            DetectorKind::DefectProliferation => "defect-proliferation",
            DetectorKind::FiltrationStability => "filtration-stability",
            DetectorKind::ExtensionAmbiguity => "extension-ambiguity",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DetectorResult {
    pub kind: DetectorKind,
    pub trigger_depth: Option<usize>,
}

/// Generator-level summary of the rigidity island together with its
/// classification invariants.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IslandSummary {
    /// Visibility threshold per block.
    pub thresholds: Vec<usize>,
    pub members: Vec<bool>,
    pub defect_rank: usize,
    pub termination_length: usize,
    pub signature: Option<String>,
    pub signature_size: Option<usize>,
    pub signature_note: Option<String>,
    pub is_strong: bool,
}

/// The full outcome of the boundary analysis of one phase datum.
#[derive(Clone, Debug)]
pub struct BoundaryReport {
    pub defect_rank: usize,
    pub boundary_depth: usize,
    pub weak_extension_depth: usize,
    pub admissibility: Admissibility,
    pub invisible_thresholds: Vec<usize>,
    pub filtration: Filtration,
    pub strata: Vec<ObstructionStratum>,
    pub island: IslandSummary,
    pub detectors: Vec<DetectorResult>,
}

impl BoundaryReport {
    pub fn stratum_depths(&self) -> Vec<usize> {
        self.strata.iter().map(|s| s.depth).collect()
    }

    pub fn axiom_types(&self) -> Vec<u8> {
        self.strata.iter().map(|s| s.axiom_type).collect()
    }
}

fn generator_has_data(g: &PhaseGenerator) -> bool {
    !g.translation.is_zero() || !g.phase.is_zero()
}

fn has_invisible_data(data: &PhaseData, g: &PhaseGenerator) -> bool {
    let b = g.phase.block();
    let s = data.character(b).invisible_threshold();
    let m = data.space().block(b).ring.m() as usize;
    (s..m).any(|l| g.phase.has_layer_data(l))
}

/// Fired obstruction strata, ordered by (depth, block). Typing is assigned
/// per block in depth order from the axiom table.
pub fn compute_strata(data: &PhaseData, axiom_table: &[u8]) -> Vec<ObstructionStratum> {
    let mut strata = Vec::new();
    for (b, block) in data.space().blocks().iter().enumerate() {
        let s = data.character(b).invisible_threshold();
        let m = block.ring.m() as usize;
        let d_b = data.block_defect_rank(b);
        let mut fired = Vec::new();
        for layer in s..m {
            let carriers: Vec<usize> = data
                .generators()
                .iter()
                .enumerate()
                .filter(|(_, g)| g.phase.block() == b && g.phase.has_layer_data(layer))
                .map(|(i, _)| i)
                .collect();
            if carriers.is_empty() {
                continue;
            }
            fired.push((layer, carriers));
        }
        for (idx, (layer, carriers)) in fired.into_iter().enumerate() {
            let depth = d_b + (layer - s) + 1;
            let axiom_type = axiom_table[idx % axiom_table.len()];
            let witness_gen = carriers[0];
            let phase = &data.generators()[witness_gen].phase;
            let point = data
                .space()
                .codes()
                .find(|&x| phase.value(x).coeff(layer) != 0)
                .expect("carrier has layer data");
            let delta = block.ring.monomial(layer, 1);
            let (classes, generator_images) = stratum_classes(data, b, layer);
            strata.push(ObstructionStratum {
                depth,
                block: b,
                layer,
                axiom_type,
                ambiguity_count: data.space().p() as usize,
                witness: Witness {
                    generator: witness_gen,
                    delta: delta.coeffs().to_vec(),
                    point,
                },
                classes,
                generator_images,
            });
        }
    }
    strata.sort_by_key(|s| (s.depth, s.block, s.layer));
    strata
}

/// The image of a generator in the stratum at (block, layer): the coefficient
/// function coeff_layer(phi(.)) restricted to the block coordinates the phase
/// depends on. Generators of other blocks map to zero.
fn generator_image(g: &PhaseGenerator, block: usize, layer: usize) -> Vec<u8> {
    if g.phase.block() != block {
        return Vec::new();
    }
    let image: Vec<u8> = g.phase.block_values().map(|v| v.coeff(layer)).collect();
    if image.iter().all(|&c| c == 0) {
        Vec::new()
    } else {
        image
    }
}

fn stratum_classes(
    data: &PhaseData,
    block: usize,
    layer: usize,
) -> (Vec<StratumClass>, Vec<Option<usize>>) {
    let mut classes: Vec<(Vec<u8>, StratumClass)> = Vec::new();
    let mut images = Vec::new();
    for (i, g) in data.generators().iter().enumerate() {
        let image = generator_image(g, block, layer);
        if image.is_empty() {
            images.push(None);
            continue;
        }
        let found = classes.iter().position(|(img, _)| img == &image);
        let id = match found {
            Some(idx) => {
                classes[idx].1.members.push(i);
                idx
            }
            None => {
                let id = classes.len();
                let hash = Sha256::digest(&image);
                classes.push((
                    image,
                    StratumClass {
                        id,
                        members: vec![i],
                        content_hash: hash[..16].iter().map(|b| format!("{b:02x}")).collect(),
                    },
                ));
                id
            }
        };
        images.push(Some(id));
    }
    (classes.into_iter().map(|(_, c)| c).collect(), images)
}

/// Strata fired at one depth (several blocks of a direct sum may share it).
pub fn detect_stratum(data: &PhaseData, depth: usize) -> Vec<ObstructionStratum> {
    compute_strata(data, &DEFAULT_AXIOM_TABLE)
        .into_iter()
        .filter(|s| s.depth == depth)
        .collect()
}

/// Boundary depth and weak extension depth: k is the deepest fired stratum
/// (never below the defect rank), and k = 0 for the zero phase.
pub fn boundary_depth(data: &PhaseData) -> (usize, usize) {
    let d = data.defect_rank();
    let strata = compute_strata(data, &DEFAULT_AXIOM_TABLE);
    let k = strata.iter().map(|s| s.depth).max().unwrap_or(d).max(d);
    (k, k - d)
}

/// The canonical descending chain of stratum descriptors.
///
/// Depths up to the defect rank hold derivative data: a generator stays in
/// depth t while its phase has additive degree >= t or carries invisible
/// values that persist past defect generation. Beyond the defect, a block
/// contributes one depth per invisible layer, and a generator stays at depth
/// t while it has data strictly deeper than the layer watched at t. The
/// chain therefore ends in the zero stratum after at most d + m steps.
pub fn build_filtration(data: &PhaseData) -> Filtration {
    let d = data.defect_rank();
    let m_max = data
        .space()
        .blocks()
        .iter()
        .map(|b| b.ring.m() as usize)
        .max()
        .unwrap_or(0);
    let bound = d + m_max + 1;

    let mut strata = Vec::new();
    let mut length = 0;
    for depth in 0..=bound {
        let mut members: Vec<usize> = Vec::new();
        let derivative_order = if depth <= d { Some(depth) } else { None };
        if depth == 0 {
            members = data
                .generators()
                .iter()
                .enumerate()
                .filter(|(_, g)| generator_has_data(g))
                .map(|(i, _)| i)
                .collect();
        } else if depth <= d {
            members = data
                .generators()
                .iter()
                .enumerate()
                .filter(|(_, g)| g.phase.additive_degree() >= depth || has_invisible_data(data, g))
                .map(|(i, _)| i)
                .collect();
        }
        let mut value_layers = Vec::new();
        for (b, block) in data.space().blocks().iter().enumerate() {
            let s = data.character(b).invisible_threshold();
            let m = block.ring.m() as usize;
            if s >= m {
                continue;
            }
            let block_has_values = data
                .generators()
                .iter()
                .any(|g| g.phase.block() == b && !g.phase.is_zero());
            if !block_has_values {
                continue;
            }
            let d_b = data.block_defect_rank(b);
            if depth <= d_b || depth > d_b + (m - s) {
                continue;
            }
            let layer = s + (depth - d_b) - 1;
            value_layers.push((b, layer));
            for (i, g) in data.generators().iter().enumerate() {
                if g.phase.block() != b || members.contains(&i) {
                    continue;
                }
                if (layer + 1..m).any(|l| g.phase.has_layer_data(l)) {
                    members.push(i);
                }
            }
        }
        members.sort_unstable();
        let empty = members.is_empty();
        strata.push(FiltrationStratum {
            depth,
            derivative_order,
            value_layers,
            members,
        });
        if empty {
            length = depth;
            break;
        }
    }
    Filtration { strata, length }
}

/// Generator-level island membership: the phase has no values at or above
/// the block's visibility threshold.
pub fn island_members(data: &PhaseData) -> Vec<bool> {
    data.generators()
        .iter()
        .map(|g| !has_invisible_data(data, g))
        .collect()
}

/// The unique maximal rigidity island: the same translations with every
/// phase truncated below its block threshold. Analyzed on its own it has no
/// obstruction strata.
pub fn rigidity_island(data: &PhaseData) -> Result<PhaseData> {
    let generators = data
        .generators()
        .iter()
        .map(|g| {
            let s = data.character(g.phase.block()).invisible_threshold();
            PhaseGenerator {
                translation: g.translation.clone(),
                phase: g.phase.truncate_below(s),
            }
        })
        .collect();
    PhaseData::new(data.space().clone(), data.characters().to_vec(), generators)
}

/// Island extraction plus its classification invariants.
pub fn island_summary(data: &PhaseData, options: &AnalysisOptions) -> Result<IslandSummary> {
    let island = rigidity_island(data)?;
    let island_strata = compute_strata(&island, &options.axiom_table);
    if !island_strata.is_empty() {
        return Err(Error::Internal(
            "rigidity island has nonempty obstruction strata".into(),
        ));
    }
    let filtration = build_filtration(&island);
    let (signature, signature_size, signature_note) =
        match interaction_signature(&island, options.signature_cap) {
            Ok(sig) => (Some(sig.fingerprint), Some(sig.size), None),
            Err(e) => (None, None, Some(e.to_string())),
        };
    Ok(IslandSummary {
        thresholds: data
            .characters()
            .iter()
            .map(|c| c.invisible_threshold())
            .collect(),
        members: island_members(data),
        defect_rank: island.defect_rank(),
        termination_length: filtration.length,
        signature,
        signature_size,
        signature_note,
        is_strong: true,
    })
}

/// Per-stratum quotient data (the strata already carry their value-class
/// enumerations). A generator maps to zero in every stratum exactly when it
/// is an island member.
pub fn boundary_quotient(data: &PhaseData) -> Vec<ObstructionStratum> {
    compute_strata(data, &DEFAULT_AXIOM_TABLE)
}

fn detector_depth(d_b: usize, s: usize, value_depth: usize) -> usize {
    d_b + (value_depth - s) + 1
}

/// True when the phase is nonzero with every value inside the invisible
/// ideal rad^s: exactly the data the operator model erases functorially.
fn entirely_invisible(phase: &QuadraticPhase, s: usize) -> Option<usize> {
    if phase.is_zero() {
        return None;
    }
    let j = phase.min_value_depth();
    (j >= s).then_some(j)
}

fn commutator_growth(data: &PhaseData, options: &AnalysisOptions) -> Option<usize> {
    let mut best: Option<usize> = None;
    for b in 0..data.space().blocks().len() {
        let restricted = match data.block_restriction(b) {
            Ok(r) => r,
            Err(_) => continue,
        };
        let s = restricted.character(0).invisible_threshold();
        let m = restricted.space().block(0).ring.m() as usize;
        if s >= m {
            continue;
        }
        let d_b = restricted.defect_rank();
        let depth_limit = options.closure_depth.min(m + d_b + 1);
        let closure = match generated_closure(&restricted, depth_limit, options.closure_cap) {
            Ok(c) => c,
            Err(_) => continue,
        };
        for (layer_idx, layer) in closure.layers.iter().enumerate() {
            if layer_idx == 0 {
                continue;
            }
            for word in layer {
                if let Some(j) = entirely_invisible(&word.parts[0], s) {
                    let depth = detector_depth(d_b, s, j);
                    best = Some(best.map_or(depth, |b: usize| b.min(depth)));
                }
            }
        }
    }
    best
}

fn defect_proliferation(data: &PhaseData) -> Option<usize> {
    // a phase depends only on its block coordinates, so derivative data is
    // scanned on the block restriction
    let mut best: Option<usize> = None;
    for b in 0..data.space().blocks().len() {
        let restricted = match data.block_restriction(b) {
            Ok(r) => r,
            Err(_) => continue,
        };
        let space = restricted.space();
        let s = restricted.character(0).invisible_threshold();
        let m = space.block(0).ring.m() as usize;
        if s >= m {
            continue;
        }
        let d_b = restricted.defect_rank();
        let pair_scan = (space.size() as u64) * (space.size() as u64) <= 1 << 20;
        for g in restricted.generators() {
            let mut consider = |j: usize| {
                let depth = detector_depth(d_b, s, j);
                best = Some(best.map_or(depth, |b: usize| b.min(depth)));
            };
            // order 0: the phase itself
            if let Some(j) = entirely_invisible(&g.phase, s) {
                consider(j);
            }
            // order 1: all first differences
            for h in space.codes().skip(1) {
                if let Some(j) = entirely_invisible(&g.phase.additive_derivative(h), s) {
                    consider(j);
                }
            }
            // order 2: second differences of a quadratic phase are the
            // constants phi(h+k) - phi(h) - phi(k) + phi(0), scanned
            // pairwise when |A|^2 stays small, over basis directions else
            let second = |h: u32, k: u32| -> RingElement {
                g.phase
                    .value(space.add_codes(h, k))
                    .sub(g.phase.value(h))
                    .unwrap()
                    .sub(g.phase.value(k))
                    .unwrap()
                    .add(g.phase.value(0))
                    .unwrap()
            };
            let basis: Vec<u32> = space.basis().iter().map(|e| space.encode(e)).collect();
            let ks: Vec<u32> = if pair_scan {
                space.codes().collect()
            } else {
                basis.clone()
            };
            for h in space.codes().skip(1) {
                for &k in &ks {
                    let c = second(h, k);
                    if !c.is_zero() && c.radical_depth() >= s {
                        consider(c.radical_depth());
                    }
                }
            }
        }
    }
    best
}

fn filtration_stability(data: &PhaseData, options: &AnalysisOptions) -> Option<usize> {
    let base = compute_strata(data, &options.axiom_table);
    let base_key: Vec<_> = base
        .iter()
        .map(|s| {
            (
                s.depth,
                s.block,
                s.layer,
                s.axiom_type,
                s.generator_images.clone(),
            )
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed.wrapping_add(0x5f11));
    let mut best: Option<usize> = None;
    for _ in 0..options.stability_samples {
        let alpha = Automorphism::random(data.space(), &mut rng);
        let relabeled = match data.relabel(&alpha) {
            Ok(r) => r,
            Err(_) => continue,
        };
        let other = compute_strata(&relabeled, &options.axiom_table);
        let other_key: Vec<_> = other
            .iter()
            .map(|s| {
                (
                    s.depth,
                    s.block,
                    s.layer,
                    s.axiom_type,
                    s.generator_images.clone(),
                )
            })
            .collect();
        if base_key != other_key {
            let depth = base
                .iter()
                .zip(other.iter())
                .find(|(a, b)| {
                    (a.depth, a.block, a.layer, a.axiom_type, &a.generator_images)
                        != (b.depth, b.block, b.layer, b.axiom_type, &b.generator_images)
                })
                .map(|(a, _)| a.depth)
                .or_else(|| base.iter().chain(other.iter()).map(|s| s.depth).min())
                .unwrap_or(0);
            best = Some(best.map_or(depth, |b: usize| b.min(depth)));
        }
    }
    best
}

/// Runs the four boundary detectors, each reporting its minimal trigger
/// depth. No detector can fire below the first failing depth: invisible
/// data has radical depth >= s, so every reported depth is at least d_b + 1.
pub fn run_detectors(data: &PhaseData, options: &AnalysisOptions) -> Vec<DetectorResult> {
    let strata = compute_strata(data, &options.axiom_table);
    let extension = strata.iter().map(|s| s.depth).min();
    vec![
        DetectorResult {
            kind: DetectorKind::CommutatorGrowth,
            trigger_depth: commutator_growth(data, options),
        },
        DetectorResult {
            kind: DetectorKind::DefectProliferation,
            trigger_depth: defect_proliferation(data),
        },
        DetectorResult {
            kind: DetectorKind::FiltrationStability,
            trigger_depth: filtration_stability(data, options),
        },
        DetectorResult {
            kind: DetectorKind::ExtensionAmbiguity,
            trigger_depth: extension,
        },
    ]
}

/// Full pipeline: defect rank, filtration, strata, boundary depth, island,
/// detectors. Internal invariants are re-checked and breaches surface as
/// `Error::Internal`.
pub fn analyze(data: &PhaseData, options: &AnalysisOptions) -> Result<BoundaryReport> {
    let d = data.defect_rank();
    let strata = compute_strata(data, &options.axiom_table);
    let k = strata.iter().map(|s| s.depth).max().unwrap_or(d).max(d);
    let filtration = build_filtration(data);
    let island = island_summary(data, options)?;
    let detectors = run_detectors(data, options);

    let admissibility = if strata.is_empty() {
        Admissibility::Strong
    } else {
        Admissibility::Weak
    };

    if k < d {
        return Err(Error::Internal(format!(
            "boundary depth {k} below defect rank {d}"
        )));
    }
    let m_max = data
        .space()
        .blocks()
        .iter()
        .map(|b| b.ring.m() as usize)
        .max()
        .unwrap_or(0);
    if filtration.length > d + m_max {
        return Err(Error::Internal(format!(
            "filtration length {} exceeds d + m = {}",
            filtration.length,
            d + m_max
        )));
    }
    // kernel identity: zero image in every stratum iff island member
    for (i, &member) in island.members.iter().enumerate() {
        let zero_image = strata.iter().all(|s| s.generator_images[i].is_none());
        if member != zero_image {
            return Err(Error::Internal(format!(
                "kernel identity breached at generator {i}"
            )));
        }
    }

    Ok(BoundaryReport {
        defect_rank: d,
        boundary_depth: k,
        weak_extension_depth: k - d,
        admissibility,
        invisible_thresholds: data
            .characters()
            .iter()
            .map(|c| c.invisible_threshold())
            .collect(),
        filtration,
        strata,
        island,
        detectors,
    })
}
