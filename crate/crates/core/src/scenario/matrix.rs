use serde::{Deserialize, Serialize};

use super::conditions::{derive_conditions, ConditionTables, Conditions, TimeOfDay, Weather};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestMatrix {
    pub sut_variants: Vec<String>,
    pub times: Vec<TimeOfDay>,
    pub weathers: Vec<Weather>,
    pub batch_size: usize,
    pub base_seed: u64,
}

impl TestMatrix {
    /// Empty axes are allowed and expand to an empty campaign.
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::invalid("matrix.batch_size", "must be >= 1"));
        }
        Ok(())
    }

    pub fn case_count(&self) -> usize {
        self.sut_variants.len() * self.times.len() * self.weathers.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestCase {
    pub id: usize,
    pub sut: String,
    pub conditions: Conditions,
    pub seed: u64,
    pub scene: String,
    /// Simulated-time budget, s.
    pub timeout: f64,
}

/// Cross product ordered SUT-major, then time of day, then weather.
pub fn expand_matrix(
    matrix: &TestMatrix,
    tables: &ConditionTables,
    scene: &str,
    timeout: f64,
) -> Vec<TestCase> {
    let mut cases = Vec::with_capacity(matrix.case_count());
    for sut in &matrix.sut_variants {
        for &time in &matrix.times {
            for &weather in &matrix.weathers {
                let id = cases.len();
                cases.push(TestCase {
                    id,
                    sut: sut.clone(),
                    conditions: derive_conditions(time, weather, tables),
                    seed: matrix.base_seed.wrapping_add(id as u64),
                    scene: scene.to_string(),
                    timeout,
                });
            }
        }
    }
    cases
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchPlan {
    pub batches: Vec<Vec<usize>>,
}

impl BatchPlan {
    pub fn len(&self) -> usize {
        self.batches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.batches.is_empty()
    }
}

/// Contiguous id-ordered chunks of at most `batch_size` cases.
pub fn make_batches(cases: &[TestCase], batch_size: usize) -> Result<BatchPlan> {
    if batch_size == 0 {
        return Err(Error::invalid("batch_size", "must be >= 1"));
    }
    let mut ids: Vec<usize> = cases.iter().map(|c| c.id).collect();
    ids.sort_unstable();
    Ok(BatchPlan {
        batches: ids.chunks(batch_size).map(<[usize]>::to_vec).collect(),
    })
}
