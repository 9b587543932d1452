//! Executable checks of the counting identities that tie the occurrence
//! tensors back to path counts.
//!
//! * Cardinality: the multiset of nodes over all simple paths `i → j` has as
//!   many elements as the simple-path fiber `B[i, j, :]` sums to.
//! * Sum recovery: `(L + 1) · Σ_k T[i, j, k]` equals the path count for the
//!   pair: simple-path counts under simple semantics, `(A^L)[i, j]` under
//!   walk semantics.

use serde::Serialize;

use crate::error::Result;
use crate::graph::{adjacency, matrix_power, Graph};
use crate::matrix::IntMatrix;
use crate::paths::{multiset_cardinality, simple_path_counts, EnumerationLimits};
use crate::tensor::{build_simple_path_tensor, build_walk_tensor, normalize_tensor, NormalizedTensor, PathTensor, Semantics};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CardinalityReport {
    pub source: usize,
    pub target: usize,
    pub length: u32,
    pub cardinality: u64,
    pub fiber_sum: i64,
    pub holds: bool,
}

/// Compare the multiset cardinality with the simple-path fiber sum for one pair.
pub fn verify_cardinality(
    g: &Graph,
    source: usize,
    target: usize,
    length: u32,
    limits: EnumerationLimits,
) -> Result<CardinalityReport> {
    let tensor = build_simple_path_tensor(g, length, limits)?;
    cardinality_against(g, &tensor, source, target, limits)
}

fn cardinality_against(
    g: &Graph,
    tensor: &PathTensor,
    source: usize,
    target: usize,
    limits: EnumerationLimits,
) -> Result<CardinalityReport> {
    let cardinality = multiset_cardinality(g, source, target, tensor.length(), limits)?;
    let fiber_sum: i64 = tensor.fiber(source, target).iter().sum();
    Ok(CardinalityReport {
        source,
        target,
        length: tensor.length(),
        cardinality,
        fiber_sum,
        holds: i64::try_from(cardinality).is_ok_and(|c| c == fiber_sum),
    })
}

/// Per-identity pass/fail tallies over a sweep.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IdentityTally {
    pub checked: usize,
    pub passed: usize,
    pub failures: Vec<String>,
}

impl IdentityTally {
    fn record(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checked += 1;
        if ok {
            self.passed += 1;
        } else {
            self.failures.push(what());
        }
    }

    pub fn all_passed(&self) -> bool {
        self.checked == self.passed
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct VerificationSummary {
    pub cardinality: IdentityTally,
    pub simple_sum_recovery: IdentityTally,
    pub walk_sum_recovery: IdentityTally,
}

impl VerificationSummary {
    pub fn all_passed(&self) -> bool {
        self.cardinality.all_passed() && self.simple_sum_recovery.all_passed() && self.walk_sum_recovery.all_passed()
    }
}

/// `(L + 1) · Σ_k T[i, j, k]` as an exact integer matrix.
pub fn scaled_fiber_sums(t: &NormalizedTensor) -> Result<IntMatrix> {
    t.to_counts()?.fiber_sums()
}

/// Check every identity for every pair at every `L` in `0..=max_length`,
/// under both semantics.
pub fn verify_all(g: &Graph, max_length: u32, limits: EnumerationLimits) -> Result<VerificationSummary> {
    let n = g.node_count();
    let a = adjacency(g);
    let mut summary = VerificationSummary::default();
    for length in 0..=max_length {
        let simple = build_simple_path_tensor(g, length, limits)?;
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let report = cardinality_against(g, &simple, i, j, limits)?;
                summary.cardinality.record(report.holds, || {
                    format!(
                        "L={length} ({i},{j}): cardinality {} != fiber sum {}",
                        report.cardinality, report.fiber_sum
                    )
                });
            }
        }

        let recovered = scaled_fiber_sums(&normalize_tensor(&simple))?;
        let counts = simple_path_counts(g, length, limits)?;
        record_matrix(&mut summary.simple_sum_recovery, length, &recovered, &counts, Semantics::Simple);

        let walk = normalize_tensor(&build_walk_tensor(g, length)?);
        let recovered = scaled_fiber_sums(&walk)?;
        let power = matrix_power(&a, length)?;
        record_matrix(&mut summary.walk_sum_recovery, length, &recovered, &power, Semantics::Walk);
    }
    Ok(summary)
}

fn record_matrix(tally: &mut IdentityTally, length: u32, scaled_sums: &IntMatrix, counts: &IntMatrix, semantics: Semantics) {
    let scale = i64::from(length) + 1;
    for i in 0..counts.rows() {
        for j in 0..counts.cols() {
            let lhs = scaled_sums.get(i, j);
            let rhs = counts.get(i, j).checked_mul(scale);
            tally.record(rhs == Some(lhs), || {
                format!("{semantics} L={length} ({i},{j}): {lhs} != {scale} * {}", counts.get(i, j))
            });
        }
    }
}
