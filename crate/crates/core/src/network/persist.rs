//! On-disk network format: `{"units": [...], "provenance": {...}}`, sorted by
//! unit id so files are diff-stable.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{index_unit, Provenance, UnifiedNetwork};
use crate::model::{FunctionalUnit, UnitId};
use crate::report::ValidationReport;
use crate::transitions::{validate_unit, TransitionTable};

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("malformed network file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("stored id {stored} does not match content hash {computed}")]
    IdMismatch { stored: UnitId, computed: UnitId },
    #[error("duplicate unit {0}")]
    Duplicate(UnitId),
    #[error("provenance refers to unknown unit {0}")]
    DanglingProvenance(UnitId),
    #[error("stored unit {id} fails validation: {report}")]
    Invalid { id: UnitId, report: ValidationReport },
}

#[derive(Serialize, Deserialize)]
struct StoredUnit {
    id: UnitId,
    #[serde(flatten)]
    unit: FunctionalUnit,
}

#[derive(Serialize, Deserialize)]
struct NetworkFile {
    units: Vec<StoredUnit>,
    provenance: BTreeMap<UnitId, Provenance>,
}

impl UnifiedNetwork {
    pub fn to_json_pretty(&self) -> String {
        let file = NetworkFile {
            units: self
                .units
                .iter()
                .map(|(id, unit)| StoredUnit {
                    id: *id,
                    unit: unit.clone(),
                })
                .collect(),
            provenance: self.provenance.clone(),
        };
        serde_json::to_string_pretty(&file).expect("network serializes")
    }

    /// Load a persisted network, recomputing ids and indexes. When a table is
    /// given every unit is re-validated against it.
    pub fn from_json(text: &str, table: Option<&TransitionTable>) -> Result<Self, PersistError> {
        let file: NetworkFile = serde_json::from_str(text)?;
        let mut network = UnifiedNetwork::new();
        for stored in file.units {
            let computed = stored.unit.id();
            if computed != stored.id {
                return Err(PersistError::IdMismatch {
                    stored: stored.id,
                    computed,
                });
            }
            if let Some(table) = table {
                let report = validate_unit(&stored.unit, table);
                if !report.is_empty() {
                    return Err(PersistError::Invalid {
                        id: computed,
                        report,
                    });
                }
            }
            if network.units.contains_key(&computed) {
                return Err(PersistError::Duplicate(computed));
            }
            index_unit(&mut network.producers, &mut network.consumers, computed, &stored.unit);
            network.units.insert(computed, stored.unit);
        }
        for (id, record) in file.provenance {
            if !network.units.contains_key(&id) {
                return Err(PersistError::DanglingProvenance(id));
            }
            network.provenance.insert(id, record);
        }
        Ok(network)
    }
}
