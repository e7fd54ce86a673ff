//! Exact-arithmetic boundary calculus for finite algebraic phase data.
//!
//! The pipeline: truncated-ring arithmetic and additive characters
//! ([`ring`]), finite modules ([`module`]), quadratic phases and the
//! difference calculus ([`phase`]), monomial operator realization
//! ([`operator`]), the boundary analysis proper — filtration, obstruction
//! strata, detectors, rigidity islands ([`boundary`]) — discrete deformations
//! and moduli ([`deform`]), and the config/report surface used by the CLI
//! ([`config`], [`report`], [`selftest`]).
//!
//! ```
//! use phasebound_core::{analyze, weak_radical_config, AnalysisOptions, Admissibility};
//!
//! let config = weak_radical_config();
//! let data = config.to_phase_data().unwrap();
//! let report = analyze(&data, &AnalysisOptions::default()).unwrap();
//! assert_eq!(report.defect_rank, 2);
//! assert_eq!(report.boundary_depth, 4);
//! assert_eq!(report.admissibility, Admissibility::Weak);
//! assert_eq!(report.stratum_depths(), vec![3, 4]);
//! ```

pub mod boundary;
pub mod config;
pub mod deform;
pub mod error;
pub mod module;
pub mod operator;
pub mod phase;
pub mod report;
pub mod ring;
pub mod selftest;

pub use boundary::{
    analyze, boundary_depth, boundary_quotient, build_filtration, compute_strata, detect_stratum,
    island_members, rigidity_island, run_detectors, AnalysisOptions, BoundaryReport, DetectorKind,
    Filtration, IslandSummary, ObstructionStratum,
};
pub use config::{strong_variant_config, weak_radical_config, PhaseConfig, CONFIG_SCHEMA};
pub use deform::{
    apply_deformation, classify_island, deformation_from_pattern, enumerate_deformations,
    find_equivalence, moduli_groupoid, ClassificationTriple, Deformation, DeformationKind,
    ModuliGroupoid,
};
pub use error::{Error, Result};
pub use module::{Automorphism, Block, ModuleElement, ModuleSpace};
pub use operator::{
    generated_closure, interaction_signature, realize, InteractionSignature, MonomialOperator,
    PhaseWord,
};
pub use phase::{Admissibility, PhaseData, PhaseGenerator, QuadraticPhase};
pub use report::{build_report, build_report_with, ReportDocument, REPORT_SCHEMA};
pub use ring::{AdditiveCharacter, RingElement, TruncatedRing};
pub use selftest::{run_selftest, CheckOutcome};
