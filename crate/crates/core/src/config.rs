//! Config ingestion: the `phasebound-config/1` JSON schema and its
//! translation into phase data plus analysis options.

use crate::boundary::AnalysisOptions;
use crate::error::{Error, Result};
use crate::module::{ModuleElement, ModuleSpace};
use crate::phase::{PhaseData, PhaseGenerator, QuadraticPhase};
use crate::ring::{AdditiveCharacter, RingElement, TruncatedRing};
use serde::{Deserialize, Serialize};

pub const CONFIG_SCHEMA: &str = "phasebound-config/1";

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseConfig {
    pub schema: String,
    pub ring: RingConfig,
    pub rank: usize,
    pub character: CharacterConfig,
    #[serde(default)]
    pub generators: Vec<GeneratorConfig>,
    #[serde(default)]
    pub options: OptionsConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RingConfig {
    pub p: u8,
    pub m: u8,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CharacterConfig {
    pub weights: Vec<u8>,
}

/// One generator: a translation (component coefficient vectors) and a phase
/// given structurally, as an explicit table, or both (cross-checked).
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub translation: Option<Vec<Vec<u8>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<PhaseSpec>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gram: Option<Vec<Vec<Vec<u8>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear: Option<Vec<Vec<u8>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant: Option<Vec<u8>>,
    /// Full value table in module code order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<Vec<u8>>>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closure_depth: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closure_cap: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signature_cap: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stability_samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axiom_table: Option<Vec<u8>>,
}

impl PhaseConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig {
            field: "<json>".into(),
            message: e.to_string(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != CONFIG_SCHEMA {
            return Err(Error::InvalidConfig {
                field: "schema".into(),
                message: format!("expected {CONFIG_SCHEMA:?}, got {:?}", self.schema),
            });
        }
        if self.rank == 0 {
            return Err(Error::InvalidConfig {
                field: "rank".into(),
                message: "rank must be >= 1".into(),
            });
        }
        if let Some(table) = &self.options.axiom_table {
            if table.is_empty() || table.iter().any(|&t| !(1..=5).contains(&t)) {
                return Err(Error::InvalidConfig {
                    field: "options.axiom_table".into(),
                    message: "axiom table entries must lie in 1..=5".into(),
                });
            }
        }
        Ok(())
    }

    /// Builds the analysis options, applying defaults for absent fields.
    pub fn analysis_options(&self) -> AnalysisOptions {
        let mut options = AnalysisOptions::default();
        if let Some(seed) = self.options.seed {
            options.seed = seed;
        }
        if let Some(v) = self.options.closure_depth {
            options.closure_depth = v;
        }
        if let Some(v) = self.options.closure_cap {
            options.closure_cap = v;
        }
        if let Some(v) = self.options.signature_cap {
            options.signature_cap = v;
        }
        if let Some(v) = self.options.stability_samples {
            options.stability_samples = v;
        }
        if let Some(v) = &self.options.axiom_table {
            options.axiom_table = v.clone();
        }
        options
    }

    fn element(&self, ring: TruncatedRing, coeffs: &[u8], field: &str) -> Result<RingElement> {
        if coeffs.len() != ring.m() as usize {
            return Err(Error::InvalidConfig {
                field: field.to_string(),
                message: format!("expected {} coefficients, got {}", ring.m(), coeffs.len()),
            });
        }
        if let Some(c) = coeffs.iter().find(|&&c| c >= ring.p()) {
            return Err(Error::InvalidConfig {
                field: field.to_string(),
                message: format!("coefficient {c} out of range for p = {}", ring.p()),
            });
        }
        Ok(ring.element(coeffs))
    }

    /// Materializes the phase data described by this config.
    pub fn to_phase_data(&self) -> Result<PhaseData> {
        self.validate()?;
        let ring = TruncatedRing::new(self.ring.p, self.ring.m)?;
        let space = ModuleSpace::free(ring, self.rank)?;
        let chi = AdditiveCharacter::new(ring, &self.character.weights)?;
        let mut generators = Vec::new();
        for (i, g) in self.generators.iter().enumerate() {
            let translation = match &g.translation {
                Some(rows) => {
                    if rows.len() != self.rank {
                        return Err(Error::InvalidConfig {
                            field: format!("generators[{i}].translation"),
                            message: format!(
                                "expected {} components, got {}",
                                self.rank,
                                rows.len()
                            ),
                        });
                    }
                    let comps = rows
                        .iter()
                        .enumerate()
                        .map(|(c, row)| {
                            self.element(ring, row, &format!("generators[{i}].translation[{c}]"))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    ModuleElement::from_components(&space, comps)?
                }
                None => space.zero(),
            };
            let phase = self.build_phase(&space, ring, g.phase.as_ref(), i)?;
            generators.push(PhaseGenerator { translation, phase });
        }
        PhaseData::new(space, vec![chi], generators)
    }

    fn build_phase(
        &self,
        space: &ModuleSpace,
        ring: TruncatedRing,
        spec: Option<&PhaseSpec>,
        gen_index: usize,
    ) -> Result<QuadraticPhase> {
        let Some(spec) = spec else {
            return Ok(QuadraticPhase::zero(space, 0));
        };
        let n = self.rank;
        let path = |suffix: &str| format!("generators[{gen_index}].phase.{suffix}");

        let structured = if spec.gram.is_some() || spec.linear.is_some() || spec.constant.is_some()
        {
            let gram = match &spec.gram {
                Some(rows) => {
                    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                        return Err(Error::InvalidConfig {
                            field: path("gram"),
                            message: format!("gram must be {n}x{n}"),
                        });
                    }
                    rows.iter()
                        .enumerate()
                        .map(|(r, row)| {
                            row.iter()
                                .enumerate()
                                .map(|(c, cell)| {
                                    self.element(ring, cell, &path(&format!("gram[{r}][{c}]")))
                                })
                                .collect::<Result<Vec<_>>>()
                        })
                        .collect::<Result<Vec<_>>>()?
                }
                None => vec![vec![ring.zero(); n]; n],
            };
            let linear = match &spec.linear {
                Some(rows) => {
                    if rows.len() != n {
                        return Err(Error::InvalidConfig {
                            field: path("linear"),
                            message: format!("linear part must have {n} entries"),
                        });
                    }
                    rows.iter()
                        .enumerate()
                        .map(|(c, row)| self.element(ring, row, &path(&format!("linear[{c}]"))))
                        .collect::<Result<Vec<_>>>()?
                }
                None => vec![ring.zero(); n],
            };
            let constant = match &spec.constant {
                Some(row) => self.element(ring, row, &path("constant"))?,
                None => ring.zero(),
            };
            Some(QuadraticPhase::from_structured(
                space, 0, &gram, &linear, &constant,
            )?)
        } else {
            None
        };

        let tabulated = match &spec.table {
            Some(rows) => {
                if rows.len() != space.size() as usize {
                    return Err(Error::InvalidConfig {
                        field: path("table"),
                        message: format!(
                            "expected {} table entries, got {}",
                            space.size(),
                            rows.len()
                        ),
                    });
                }
                let values = rows
                    .iter()
                    .enumerate()
                    .map(|(x, row)| self.element(ring, row, &path(&format!("table[{x}]"))))
                    .collect::<Result<Vec<_>>>()?;
                Some(QuadraticPhase::from_table(space, 0, values)?)
            }
            None => None,
        };

        match (structured, tabulated) {
            (Some(s), Some(t)) => {
                if s != t {
                    return Err(Error::InvalidConfig {
                        field: path("table"),
                        message: "explicit table disagrees with the structured phase".into(),
                    });
                }
                Ok(s)
            }
            (Some(s), None) => Ok(s),
            (None, Some(t)) => Ok(t),
            (None, None) => Ok(QuadraticPhase::zero(space, 0)),
        }
    }
}

/// The bundled weak radical example: p=2, m=4, n=2, weights (0,1,0,0),
/// phi = u x1 x2 with translations e1, e2, u e1.
pub fn weak_radical_config() -> PhaseConfig {
    PhaseConfig {
        schema: CONFIG_SCHEMA.into(),
        ring: RingConfig { p: 2, m: 4 },
        rank: 2,
        character: CharacterConfig {
            weights: vec![0, 1, 0, 0],
        },
        generators: vec![
            GeneratorConfig {
                translation: Some(vec![vec![1, 0, 0, 0], vec![0, 0, 0, 0]]),
                phase: None,
            },
            GeneratorConfig {
                translation: Some(vec![vec![0, 0, 0, 0], vec![1, 0, 0, 0]]),
                phase: None,
            },
            GeneratorConfig {
                translation: Some(vec![vec![0, 1, 0, 0], vec![0, 0, 0, 0]]),
                phase: None,
            },
            GeneratorConfig {
                translation: None,
                phase: Some(PhaseSpec {
                    gram: Some(vec![
                        vec![vec![0, 0, 0, 0], vec![0, 1, 0, 0]],
                        vec![vec![0, 0, 0, 0], vec![0, 0, 0, 0]],
                    ]),
                    linear: None,
                    constant: None,
                    table: None,
                }),
            },
        ],
        options: OptionsConfig::default(),
    }
}

/// Same data with the character reading the u^3 coefficient: the strong
/// variant whose analysis stops at the defect rank.
pub fn strong_variant_config() -> PhaseConfig {
    let mut config = weak_radical_config();
    config.character.weights = vec![0, 0, 0, 1];
    config
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_configs_build() {
        let data = weak_radical_config().to_phase_data().unwrap();
        assert_eq!(data.generators().len(), 4);
        assert_eq!(data.defect_rank(), 2);
        let strong = strong_variant_config().to_phase_data().unwrap();
        assert_eq!(strong.defect_rank(), 2);
    }

    #[test]
    fn nonprime_modulus_names_the_field() {
        let mut config = weak_radical_config();
        config.ring.p = 4;
        match config.to_phase_data() {
            Err(Error::InvalidConfig { field, .. }) => assert_eq!(field, "ring.p"),
            other => panic!("expected InvalidConfig, got {other:?}"),
        }
    }

    #[test]
    fn size_cap_is_a_distinct_error() {
        let mut config = weak_radical_config();
        config.ring = RingConfig { p: 2, m: 16 };
        config.character.weights = vec![0; 16];
        config.generators.clear();
        config.rank = 2;
        assert!(matches!(config.to_phase_data(), Err(Error::SizeCap { .. })));
    }

    #[test]
    fn schema_version_checked() {
        let mut config = weak_radical_config();
        config.schema = "phasebound-config/0".into();
        assert!(matches!(
            config.to_phase_data(),
            Err(Error::InvalidConfig { field, .. }) if field == "schema"
        ));
    }

    #[test]
    fn table_cross_checked_against_structured() {
        let mut config = weak_radical_config();
        let data = config.to_phase_data().unwrap();
        // correct table passes
        let table: Vec<Vec<u8>> = data.generators()[3]
            .phase
            .values()
            .iter()
            .map(|v| v.coeffs().to_vec())
            .collect();
        config.generators[3].phase.as_mut().unwrap().table = Some(table.clone());
        assert!(config.to_phase_data().is_ok());
        // a quadratic but different table is rejected with the field path
        let mut bad = table;
        for row in bad.iter_mut() {
            row[3] ^= 1;
        }
        config.generators[3].phase.as_mut().unwrap().table = Some(bad);
        match config.to_phase_data() {
            Err(Error::InvalidConfig { field, .. }) => {
                assert_eq!(field, "generators[3].phase.table")
            }
            other => panic!("expected InvalidConfig, got {other:?}"),
        }
    }

    #[test]
    fn config_json_roundtrip() {
        let config = weak_radical_config();
        let text = serde_json::to_string_pretty(&config).unwrap();
        let parsed = PhaseConfig::from_json(&text).unwrap();
        let a = parsed.to_phase_data().unwrap();
        let b = config.to_phase_data().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = r#"{"schema":"phasebound-config/1","ring":{"p":2,"m":4},"rank":1,
            "character":{"weights":[0,1,0,0]},"surprise":true}"#;
        assert!(PhaseConfig::from_json(text).is_err());
    }
}
