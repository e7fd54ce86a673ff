//! Bundled invariant suite: every module-level property runs here at fixed
//! seeds, named so a violation can be reported precisely.

use crate::boundary::{
    analyze, boundary_quotient, build_filtration, compute_strata, island_members, rigidity_island,
    run_detectors, AnalysisOptions, ObstructionStratum, DEFAULT_AXIOM_TABLE,
};
use crate::deform::{apply_deformation, enumerate_deformations, DeformationKind};
use crate::module::{Automorphism, ModuleSpace};
use crate::operator::realize;
use crate::phase::{PhaseData, PhaseGenerator, QuadraticPhase};
use crate::ring::{AdditiveCharacter, TruncatedRing};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub module: &'static str,
    pub passed: bool,
    pub message: Option<String>,
}

type CheckFn = fn(u64) -> Result<(), String>;

struct Check {
    name: &'static str,
    module: &'static str,
    run: CheckFn,
}

/// Draws a random single-block phase datum within the desk-scale caps
/// (|A| <= 256, at most 4 generators, structured quadratic phases).
pub fn random_phase_data<R: Rng>(rng: &mut R) -> PhaseData {
    let (p, m_max) = [(2u8, 4u8), (3, 3), (5, 2)][rng.gen_range(0..3)];
    let m = rng.gen_range(1..=m_max);
    let n_max = match (p, m) {
        (2, m) if m <= 2 => 2,
        (2, _) => 2,
        (3, m) if m <= 2 => 2,
        _ => 1,
    };
    let n = rng.gen_range(1..=n_max);
    let ring = TruncatedRing::new(p, m).unwrap();
    let space = ModuleSpace::free(ring, n).unwrap();
    let weights: Vec<u8> = (0..m).map(|_| rng.gen_range(0..p)).collect();
    let chi = AdditiveCharacter::new(ring, &weights).unwrap();

    let gen_count = rng.gen_range(1..=4usize);
    let mut generators = Vec::new();
    for _ in 0..gen_count {
        let translation = space.decode(rng.gen_range(0..space.size()));
        let phase = if rng.gen_bool(0.25) {
            QuadraticPhase::zero(&space, 0)
        } else {
            let rand_elem = |rng: &mut R| -> crate::ring::RingElement {
                ring.decode(rng.gen_range(0..ring.size()))
            };
            let gram: Vec<Vec<_>> = (0..n)
                .map(|_| (0..n).map(|_| rand_elem(rng)).collect())
                .collect();
            let linear: Vec<_> = (0..n).map(|_| rand_elem(rng)).collect();
            let constant = rand_elem(rng);
            QuadraticPhase::from_structured(&space, 0, &gram, &linear, &constant).unwrap()
        };
        generators.push(PhaseGenerator { translation, phase });
    }
    PhaseData::new(space, vec![chi], generators).unwrap()
}

/// Kernel identity between island membership and stratum images; factored
/// out so the mutation tests can feed it corrupted inputs.
pub fn verify_kernel_identity(
    members: &[bool],
    strata: &[ObstructionStratum],
) -> Result<(), String> {
    for (i, &member) in members.iter().enumerate() {
        let zero_image = strata.iter().all(|s| s.generator_images[i].is_none());
        if member != zero_image {
            return Err(format!(
                "island=kernel violated at generator {i}: member={member}, zero image={zero_image}"
            ));
        }
    }
    Ok(())
}

fn check_character_additivity(_seed: u64) -> Result<(), String> {
    for &(p, m) in &[(2u8, 4u8), (3, 3), (5, 2)] {
        let ring = TruncatedRing::new(p, m).unwrap();
        for wcode in 0..ring.size() {
            let chi = AdditiveCharacter::new(ring, ring.decode(wcode).coeffs()).unwrap();
            for x in ring.elements() {
                for y in ring.elements() {
                    let lhs = chi.eval(&x.add(&y).unwrap());
                    let rhs = (chi.eval(&x) + chi.eval(&y)) % p;
                    if lhs != rhs {
                        return Err(format!("chi not additive at p={p}, m={m}"));
                    }
                }
            }
        }
    }
    Ok(())
}

fn check_radical_depth_bound(_seed: u64) -> Result<(), String> {
    for &(p, m) in &[(2u8, 4u8), (3, 2), (5, 2)] {
        let ring = TruncatedRing::new(p, m).unwrap();
        for x in ring.elements() {
            for y in ring.elements() {
                let lhs = x.mul(&y).unwrap().radical_depth();
                let rhs = (x.radical_depth() + y.radical_depth()).min(m as usize);
                if lhs < rhs {
                    return Err(format!("depth bound violated: x={x}, y={y}"));
                }
            }
        }
    }
    Ok(())
}

fn check_invisible_threshold_oracle(_seed: u64) -> Result<(), String> {
    for &(p, m) in &[(2u8, 4u8), (3, 3)] {
        let ring = TruncatedRing::new(p, m).unwrap();
        for wcode in 0..ring.size() {
            let chi = AdditiveCharacter::new(ring, ring.decode(wcode).coeffs()).unwrap();
            let s = chi.invisible_threshold();
            let ok_inside = ring.ideal_elements(s).all(|x| chi.eval(&x) == 0);
            let ok_sharp = s == 0 || ring.ideal_elements(s - 1).any(|x| chi.eval(&x) != 0);
            if !ok_inside || !ok_sharp {
                return Err(format!("threshold mismatch for weights {wcode}"));
            }
        }
    }
    Ok(())
}

fn check_derivative_linearity(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..12 {
        let data = random_phase_data(&mut rng);
        let space = data.space();
        let phases: Vec<&QuadraticPhase> = data.generators().iter().map(|g| &g.phase).collect();
        let Some(phi) = phases.first() else { continue };
        for _ in 0..6 {
            let h = rng.gen_range(0..space.size());
            let k = rng.gen_range(0..space.size());
            // commutation
            let hk = phi.additive_derivative(h).additive_derivative(k);
            let kh = phi.additive_derivative(k).additive_derivative(h);
            if hk != kh {
                return Err("derivatives do not commute".into());
            }
            // additivity in the phase argument
            if phases.len() >= 2 && phases[1].block() == phi.block() {
                let sum = phi.add(phases[1]).map_err(|e| e.to_string())?;
                let lhs = sum.additive_derivative(h);
                let rhs = phi
                    .additive_derivative(h)
                    .add(&phases[1].additive_derivative(h))
                    .map_err(|e| e.to_string())?;
                if lhs != rhs {
                    return Err("derivative not additive in the phase".into());
                }
            }
        }
    }
    Ok(())
}

fn check_structured_phases_quadratic(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..20 {
        let data = random_phase_data(&mut rng);
        for g in data.generators() {
            if g.phase.additive_degree() > 2 {
                return Err("structured phase with degree > 2".into());
            }
        }
    }
    Ok(())
}

fn check_polarization_identity(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..8 {
        let data = random_phase_data(&mut rng);
        if data.space().size() > 64 {
            continue;
        }
        for g in data.generators() {
            let phi = &g.phase;
            let pol = phi.polarize().map_err(|e| e.to_string())?;
            // biadditivity holds exactly for phases without constant term:
            // a constant c shifts B(x+x', y) - B(x, y) - B(x', y) by c
            let constant_free = phi.value(0).is_zero();
            if (pol.additive_in_first && pol.additive_in_second) != constant_free {
                return Err(format!(
                    "biadditivity flags disagree with the constant term (phi(0) zero: {constant_free})"
                ));
            }
            let phi0 = phi.value(0).clone();
            for y in data.space().codes() {
                let dy = phi.additive_derivative(y);
                for x in data.space().codes() {
                    // B(x,y) + phi(0) = D_y phi(x) - D_y phi(0); the bare
                    // two-term identity is the constant-free case
                    let lhs = pol.value(x, y).add(&phi0).unwrap();
                    let rhs = dy.value(x).sub(dy.value(0)).unwrap();
                    if lhs != rhs {
                        return Err("polarization/derivative identity failed".into());
                    }
                }
            }
        }
    }
    Ok(())
}

fn check_visibility_equivalence(seed: u64) -> Result<(), String> {
    // M_phi = M_psi iff chi(phi - psi) = 0 pointwise
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..10 {
        let data = random_phase_data(&mut rng);
        if data.space().size() > 64 {
            continue;
        }
        let gens: Vec<_> = data.generators().to_vec();
        for a in &gens {
            for b in &gens {
                if a.phase.block() != b.phase.block() {
                    continue;
                }
                let ma = realize(&data, 0, &a.phase);
                let mb = realize(&data, 0, &b.phase);
                let chi = data.character(a.phase.block());
                let invisible_diff = data.space().codes().all(|x| {
                    let d = a.phase.value(x).sub(b.phase.value(x)).unwrap();
                    chi.eval(&d) == 0
                });
                if (ma == mb) != invisible_diff {
                    return Err("visibility equivalence violated".into());
                }
            }
        }
    }
    Ok(())
}

fn check_realize_homomorphism(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..8 {
        let data = random_phase_data(&mut rng);
        if data.space().size() > 128 || data.generators().len() < 2 {
            continue;
        }
        let w1 = crate::operator::PhaseWord::from_generator(&data, 0);
        let w2 = crate::operator::PhaseWord::from_generator(&data, 1);
        let lhs = w1.realize(&data).compose(&w2.realize(&data));
        let rhs = w1.compose(&w2, &data).realize(&data);
        if lhs != rhs {
            return Err("realize is not a twisted homomorphism".into());
        }
    }
    Ok(())
}

fn check_monotonicity_bounds(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..40 {
        let data = random_phase_data(&mut rng);
        let d = data.defect_rank();
        let strata = compute_strata(&data, &DEFAULT_AXIOM_TABLE);
        let k = strata.iter().map(|s| s.depth).max().unwrap_or(d).max(d);
        if k < d {
            return Err(format!("k = {k} < d = {d}"));
        }
        let mut types: Vec<u8> = strata.iter().map(|s| s.axiom_type).collect();
        types.sort_unstable();
        types.dedup();
        if types.len() > 5 {
            return Err("more than 5 axiom types".into());
        }
        let f = build_filtration(&data);
        let m = data.space().block(0).ring.m() as usize;
        if f.length > d + m {
            return Err(format!("filtration length {} > d + m", f.length));
        }
        for w in f.strata.windows(2) {
            if !w[1].members.iter().all(|g| w[0].members.contains(g)) {
                return Err("filtration memberships not descending".into());
            }
        }
        if !f.strata.last().unwrap().members.is_empty() {
            return Err("filtration does not end in the zero stratum".into());
        }
    }
    Ok(())
}

fn check_kernel_identity(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..40 {
        let data = random_phase_data(&mut rng);
        let members = island_members(&data);
        let strata = boundary_quotient(&data);
        verify_kernel_identity(&members, &strata)?;
        // the island itself is strong
        let island = rigidity_island(&data).map_err(|e| e.to_string())?;
        if !compute_strata(&island, &DEFAULT_AXIOM_TABLE).is_empty() {
            return Err("island=kernel violated: island has strata".into());
        }
    }
    Ok(())
}

fn check_equivalence_invariance(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..15 {
        let data = random_phase_data(&mut rng);
        let base = compute_strata(&data, &DEFAULT_AXIOM_TABLE);
        let base_key: Vec<_> = base
            .iter()
            .map(|s| (s.depth, s.layer, s.axiom_type))
            .collect();
        let d = data.defect_rank();
        for _ in 0..3 {
            let alpha = Automorphism::random(data.space(), &mut rng);
            let relabeled = data.relabel(&alpha).map_err(|e| e.to_string())?;
            if relabeled.defect_rank() != d {
                return Err("defect rank changed under automorphism".into());
            }
            let other = compute_strata(&relabeled, &DEFAULT_AXIOM_TABLE);
            let other_key: Vec<_> = other
                .iter()
                .map(|s| (s.depth, s.layer, s.axiom_type))
                .collect();
            if base_key != other_key {
                return Err("strata changed under automorphism".into());
            }
        }
        let n = data.generators().len();
        let perm: Vec<usize> = (0..n).rev().collect();
        let permuted = data.permute_generators(&perm);
        let other = compute_strata(&permuted, &DEFAULT_AXIOM_TABLE);
        let other_key: Vec<_> = other
            .iter()
            .map(|s| (s.depth, s.layer, s.axiom_type))
            .collect();
        if base_key != other_key {
            return Err("strata changed under generator permutation".into());
        }
    }
    Ok(())
}

fn check_direct_sum_laws(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..10 {
        let a = random_phase_data(&mut rng);
        let b = loop {
            let c = random_phase_data(&mut rng);
            if c.space().p() == a.space().p() {
                break c;
            }
        };
        if a.space().size() as u64 * b.space().size() as u64 > 4096 {
            continue;
        }
        let sum = match PhaseData::direct_sum(&[a.clone(), b.clone()]) {
            Ok(s) => s,
            Err(_) => continue,
        };
        let sa = compute_strata(&a, &DEFAULT_AXIOM_TABLE);
        let sb = compute_strata(&b, &DEFAULT_AXIOM_TABLE);
        let ss = compute_strata(&sum, &DEFAULT_AXIOM_TABLE);
        let mut expect: Vec<_> = sa
            .iter()
            .map(|s| (s.depth, 0usize, s.layer, s.axiom_type))
            .chain(sb.iter().map(|s| (s.depth, 1usize, s.layer, s.axiom_type)))
            .collect();
        expect.sort_unstable();
        let mut got: Vec<_> = ss
            .iter()
            .map(|s| (s.depth, s.block, s.layer, s.axiom_type))
            .collect();
        got.sort_unstable();
        if expect != got {
            return Err("direct sum strata are not the disjoint union".into());
        }
        let island_expect: Vec<bool> = island_members(&a)
            .into_iter()
            .chain(island_members(&b))
            .collect();
        if island_members(&sum) != island_expect {
            return Err("direct sum island is not blockwise".into());
        }
        let k = |d: &PhaseData| {
            let dd = d.defect_rank();
            compute_strata(d, &DEFAULT_AXIOM_TABLE)
                .iter()
                .map(|s| s.depth)
                .max()
                .unwrap_or(dd)
                .max(dd)
        };
        if k(&sum) != k(&a).max(k(&b)) {
            return Err("k of the direct sum is not the max".into());
        }
    }
    Ok(())
}

fn check_detector_sharpness(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let options = AnalysisOptions::default();
    for _ in 0..8 {
        let data = random_phase_data(&mut rng);
        let strata = compute_strata(&data, &DEFAULT_AXIOM_TABLE);
        let detectors = run_detectors(&data, &options);
        let min_trigger = detectors.iter().filter_map(|d| d.trigger_depth).min();
        match (strata.first(), min_trigger) {
            (Some(first), Some(t)) => {
                if t < first.depth {
                    return Err(format!(
                        "detector fired at {t} below first failure {}",
                        first.depth
                    ));
                }
            }
            (None, Some(t)) => {
                return Err(format!("detector fired at {t} on a strong phase"));
            }
            _ => {}
        }
    }
    Ok(())
}

fn check_deformations_fix_island(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..10 {
        let data = random_phase_data(&mut rng);
        let strata = compute_strata(&data, &DEFAULT_AXIOM_TABLE);
        if strata.len() > 3 {
            continue;
        }
        let island = rigidity_island(&data).map_err(|e| e.to_string())?;
        let defs = enumerate_deformations(&data);
        let bound: usize = strata.iter().map(|s| 1 + s.ambiguity_count).product();
        if defs.len() > bound {
            return Err("deformation count exceeds the ambiguity bound".into());
        }
        let mut kinds = [0usize; 3];
        for d in &defs {
            match d.kind() {
                DeformationKind::Trivial => kinds[0] += 1,
                DeformationKind::SingleStratum => kinds[1] += 1,
                DeformationKind::MultiStratum => kinds[2] += 1,
            }
            let applied = apply_deformation(&data, d).map_err(|e| e.to_string())?;
            if rigidity_island(&applied).map_err(|e| e.to_string())? != island {
                return Err("deformation moved the island".into());
            }
        }
        if kinds[0] != 1 {
            return Err("exactly one trivial deformation expected".into());
        }
    }
    Ok(())
}

fn check_report_determinism(seed: u64) -> Result<(), String> {
    let config = crate::config::weak_radical_config();
    let data = config.to_phase_data().map_err(|e| e.to_string())?;
    let mut options = config.analysis_options();
    options.seed = seed;
    let r1 = crate::report::build_report_with(&config, &data, &options)
        .and_then(|r| r.to_json())
        .map_err(|e| e.to_string())?;
    let r2 = crate::report::build_report_with(&config, &data, &options)
        .and_then(|r| r.to_json())
        .map_err(|e| e.to_string())?;
    if r1 != r2 {
        return Err("identical config + seed produced different reports".into());
    }
    Ok(())
}

fn check_analyze_pipeline(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let options = AnalysisOptions::default();
    for _ in 0..6 {
        let data = random_phase_data(&mut rng);
        // internal invariants (kernel identity, island strength, bounds) are
        // re-checked inside analyze
        analyze(&data, &options).map_err(|e| e.to_string())?;
    }
    Ok(())
}

const CHECKS: &[Check] = &[
    Check {
        name: "character-additivity",
        module: "ring",
        run: check_character_additivity,
    },
    Check {
        name: "radical-depth-bound",
        module: "ring",
        run: check_radical_depth_bound,
    },
    Check {
        name: "invisible-threshold-oracle",
        module: "ring",
        run: check_invisible_threshold_oracle,
    },
    Check {
        name: "derivative-linearity",
        module: "phase",
        run: check_derivative_linearity,
    },
    Check {
        name: "structured-quadratic",
        module: "phase",
        run: check_structured_phases_quadratic,
    },
    Check {
        name: "polarization-identity",
        module: "phase",
        run: check_polarization_identity,
    },
    Check {
        name: "visibility-equivalence",
        module: "operator",
        run: check_visibility_equivalence,
    },
    Check {
        name: "realize-homomorphism",
        module: "operator",
        run: check_realize_homomorphism,
    },
    Check {
        name: "monotonicity-bounds",
        module: "boundary",
        run: check_monotonicity_bounds,
    },
    Check {
        name: "island-kernel",
        module: "boundary",
        run: check_kernel_identity,
    },
    Check {
        name: "equivalence-invariance",
        module: "boundary",
        run: check_equivalence_invariance,
    },
    Check {
        name: "direct-sum-laws",
        module: "boundary",
        run: check_direct_sum_laws,
    },
    Check {
        name: "detector-sharpness",
        module: "boundary",
        run: check_detector_sharpness,
    },
    Check {
        name: "deformation-island",
        module: "deform",
        run: check_deformations_fix_island,
    },
    Check {
        name: "report-determinism",
        module: "report",
        run: check_report_determinism,
    },
    Check {
        name: "analyze-pipeline",
        module: "boundary",
        run: check_analyze_pipeline,
    },
];

/// Runs the bundled suite, optionally filtered by module name. Outcomes are
/// reported per check; any failure carries the violated invariant's name.
pub fn run_selftest(filter: Option<&str>, seed: u64) -> Vec<CheckOutcome> {
    CHECKS
        .iter()
        .filter(|c| filter.is_none_or(|f| c.module == f || c.name == f))
        .map(|c| match (c.run)(seed) {
            Ok(()) => CheckOutcome {
                name: c.name,
                module: c.module,
                passed: true,
                message: None,
            },
            Err(message) => CheckOutcome {
                name: c.name,
                module: c.module,
                passed: false,
                message: Some(message),
            },
        })
        .collect()
}

pub fn known_modules() -> Vec<&'static str> {
    let mut modules: Vec<&'static str> = CHECKS.iter().map(|c| c.module).collect();
    modules.dedup();
    modules
}
