//! Report assembly: the `phasebound-report/1` document, its JSON form, and
//! the human-readable rendering with the structural-anatomy sections.

use crate::boundary::{analyze, AnalysisOptions, BoundaryReport};
use crate::config::PhaseConfig;
use crate::deform::{deformation_counts, enumerate_deformations, Deformation};
use crate::error::{Error, Result};
use crate::phase::{Admissibility, PhaseData};
use serde::{Deserialize, Serialize};

pub const REPORT_SCHEMA: &str = "phasebound-report/1";

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema: String,
    pub seed: u64,
    /// Echo of the parsed input config; re-parses to equivalent phase data.
    pub input: PhaseConfig,
    pub defect_rank: usize,
    pub boundary_depth: usize,
    pub weak_extension_depth: usize,
    pub admissibility: Admissibility,
    pub invisible_thresholds: Vec<usize>,
    pub filtration: crate::boundary::Filtration,
    pub strata: Vec<crate::boundary::ObstructionStratum>,
    pub island: crate::boundary::IslandSummary,
    pub detectors: Vec<crate::boundary::DetectorResult>,
    pub deformations: DeformationSection,
    pub anatomy: AnatomySection,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DeformationSection {
    pub count: usize,
    /// Count after merging relabeling-equivalent deformations, when the
    /// search caps allow the merge to run.
    pub reduced_count: Option<usize>,
    pub patterns: Vec<String>,
}

/// The four structural regimes of the canonical anatomy: defect generation,
/// post-defect rigid extension, the boundary itself, and the obstruction
/// data beyond it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnatomySection {
    pub defect_generation: Vec<usize>,
    pub rigid_extension: Vec<usize>,
    pub boundary: Vec<usize>,
    pub obstruction: ObstructionSummary,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ObstructionSummary {
    pub stratum_count: usize,
    pub component_labels: Vec<String>,
    pub quotient_class_counts: Vec<usize>,
}

fn anatomy(report: &BoundaryReport) -> AnatomySection {
    let d = report.defect_rank;
    let first_failure = report.strata.iter().map(|s| s.depth).min();
    let rigid_extension = match first_failure {
        Some(f) => (d + 1..f).collect(),
        None => Vec::new(),
    };
    AnatomySection {
        defect_generation: (0..=d).collect(),
        rigid_extension,
        boundary: report.strata.iter().map(|s| s.depth).collect(),
        obstruction: ObstructionSummary {
            stratum_count: report.strata.len(),
            component_labels: report
                .strata
                .iter()
                .map(|s| format!("B_{}", s.depth))
                .collect(),
            quotient_class_counts: report.strata.iter().map(|s| s.classes.len()).collect(),
        },
    }
}

/// Full pipeline for one config: analysis, deformation summary, anatomy.
pub fn build_report(config: &PhaseConfig, data: &PhaseData) -> Result<ReportDocument> {
    let options = config.analysis_options();
    build_report_with(config, data, &options)
}

pub fn build_report_with(
    config: &PhaseConfig,
    data: &PhaseData,
    options: &AnalysisOptions,
) -> Result<ReportDocument> {
    let report = analyze(data, options)?;
    let deformations = enumerate_deformations(data);
    let mut patterns: Vec<String> = deformations
        .iter()
        .map(Deformation::pattern_string)
        .collect();
    patterns.dedup();
    let counts = deformation_counts(data)?;
    let anatomy = anatomy(&report);
    Ok(ReportDocument {
        schema: REPORT_SCHEMA.into(),
        seed: options.seed,
        input: config.clone(),
        defect_rank: report.defect_rank,
        boundary_depth: report.boundary_depth,
        weak_extension_depth: report.weak_extension_depth,
        admissibility: report.admissibility,
        invisible_thresholds: report.invisible_thresholds,
        filtration: report.filtration,
        strata: report.strata,
        island: report.island,
        detectors: report.detectors,
        deformations: DeformationSection {
            count: counts.raw,
            reduced_count: counts.reduced,
            patterns,
        },
        anatomy,
    })
}

impl ReportDocument {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Internal(e.to_string()))
    }

    /// Labeled plain-text rendering mirroring the anatomy display.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let push = |out: &mut String, line: String| {
            out.push_str(&line);
            out.push('\n');
        };
        push(&mut out, format!("phasebound analysis ({})", self.schema));
        push(
            &mut out,
            format!(
                "ring F_{}[u]/(u^{}), rank {}, seed {}",
                self.input.ring.p, self.input.ring.m, self.input.rank, self.seed
            ),
        );
        push(
            &mut out,
            format!(
                "character weights {:?}, invisible threshold s = {:?}",
                self.input.character.weights, self.invisible_thresholds
            ),
        );
        push(&mut out, String::new());
        push(
            &mut out,
            format!("defect rank d         = {}", self.defect_rank),
        );
        push(
            &mut out,
            format!("boundary depth k      = {}", self.boundary_depth),
        );
        push(
            &mut out,
            format!("weak extension k_ext  = {}", self.weak_extension_depth),
        );
        push(
            &mut out,
            format!(
                "admissibility         = {}",
                match self.admissibility {
                    Admissibility::Strong => "strong",
                    Admissibility::Weak => "weak",
                }
            ),
        );
        push(&mut out, String::new());
        push(
            &mut out,
            format!(
                "[defect generation]  depths {:?}: axioms extend uniquely",
                self.anatomy.defect_generation
            ),
        );
        push(
            &mut out,
            format!(
                "[rigid extension]    depths {:?}",
                self.anatomy.rigid_extension
            ),
        );
        if self.strata.is_empty() {
            push(
                &mut out,
                "[boundary]           none: B(P) = 0, phase is fully rigid".into(),
            );
        } else {
            for s in &self.strata {
                push(
                    &mut out,
                    format!(
                        "[boundary]           depth {}: block {}, layer rad^{}, axiom type {}, ambiguity {}",
                        s.depth, s.block, s.layer, s.axiom_type, s.ambiguity_count
                    ),
                );
            }
            push(
                &mut out,
                format!(
                    "[obstruction regime] B(P) = {}, quotient classes {:?}",
                    self.anatomy.obstruction.component_labels.join(" ⊔ "),
                    self.anatomy.obstruction.quotient_class_counts
                ),
            );
        }
        push(
            &mut out,
            format!(
                "[rigidity island]    members {:?}, invariants (d = {}, L = {}, sigma = {})",
                self.island.members,
                self.island.defect_rank,
                self.island.termination_length,
                self.island.signature.as_deref().unwrap_or("<overflow>")
            ),
        );
        for det in &self.detectors {
            push(
                &mut out,
                format!(
                    "[detector]           {:<22} -> {}",
                    det.kind.name(),
                    det.trigger_depth
                        .map_or("none".to_string(), |t| t.to_string())
                ),
            );
        }
        push(
            &mut out,
            format!(
                "[deformations]       {} total ({} patterns){}",
                self.deformations.count,
                self.deformations.patterns.len(),
                self.deformations
                    .reduced_count
                    .map_or(String::new(), |r| format!(", {r} up to equivalence"))
            ),
        );
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{strong_variant_config, weak_radical_config};

    #[test]
    fn report_is_deterministic() {
        let config = weak_radical_config();
        let data = config.to_phase_data().unwrap();
        let r1 = build_report(&config, &data).unwrap().to_json().unwrap();
        let r2 = build_report(&config, &data).unwrap().to_json().unwrap();
        assert_eq!(r1, r2);
    }

    #[test]
    fn report_echo_roundtrips() {
        let config = weak_radical_config();
        let data = config.to_phase_data().unwrap();
        let report = build_report(&config, &data).unwrap();
        let json = report.to_json().unwrap();
        let parsed: ReportDocument = serde_json::from_str(&json).unwrap();
        let rebuilt = parsed.input.to_phase_data().unwrap();
        assert_eq!(rebuilt, data);
    }

    #[test]
    fn weak_radical_report_fields() {
        let config = weak_radical_config();
        let data = config.to_phase_data().unwrap();
        let report = build_report(&config, &data).unwrap();
        assert_eq!(report.defect_rank, 2);
        assert_eq!(report.boundary_depth, 4);
        assert_eq!(report.weak_extension_depth, 2);
        assert_eq!(report.admissibility, Admissibility::Weak);
        assert_eq!(report.deformations.count, 4);
        assert_eq!(report.deformations.patterns.len(), 4);
        assert_eq!(report.anatomy.boundary, vec![3, 4]);
        assert_eq!(
            report.anatomy.obstruction.component_labels,
            vec!["B_3", "B_4"]
        );
        let text = report.to_text();
        assert!(text.contains("[boundary]"));
        assert!(text.contains("axiom type 3"));
    }

    #[test]
    fn strong_report_is_rigid() {
        let config = strong_variant_config();
        let data = config.to_phase_data().unwrap();
        let report = build_report(&config, &data).unwrap();
        assert_eq!(report.admissibility, Admissibility::Strong);
        assert!(report.strata.is_empty());
        assert!(report.to_text().contains("fully rigid"));
    }
}
