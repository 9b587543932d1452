//! Path-occurrence tensors.
//!
//! `B[i, j, k]` counts how often node `k` occurs on the length-`L` paths (or
//! walks) between `i` and `j`. The normalized tensor divides every entry by
//! the number of nodes on such a path, `L + 1`, so that summing a depth fiber
//! recovers the path count for the pair.
//!
//! Storage is row-major with `i` outermost and `k` innermost, so the fiber
//! for a pair `(i, j)` is a contiguous slice.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{adjacency, power_sequence, Graph};
use crate::matrix::{IntMatrix, RealMatrix};
use crate::paths::{for_each_simple_path_from, EnumerationLimits};

/// Which notion of "path" a tensor counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Semantics {
    /// Node-distinct paths; each node occurs at most once per path.
    Simple,
    /// Arbitrary walks; repeat visits are counted as separate occurrences.
    Walk,
}

impl Semantics {
    pub fn code(self) -> u8 {
        match self {
            Semantics::Simple => 0,
            Semantics::Walk => 1,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(Semantics::Simple),
            1 => Ok(Semantics::Walk),
            other => Err(Error::Format(format!("unknown semantics byte {other}"))),
        }
    }
}

impl fmt::Display for Semantics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Semantics::Simple => "simple",
            Semantics::Walk => "walk",
        })
    }
}

impl FromStr for Semantics {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simple" => Ok(Semantics::Simple),
            "walk" => Ok(Semantics::Walk),
            other => Err(Error::Invalid(format!("unknown semantics '{other}' (expected simple|walk)"))),
        }
    }
}

/// Integer occurrence tensor `B^L` of shape `n × n × n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathTensor {
    n: usize,
    length: u32,
    semantics: Semantics,
    data: Vec<i64>,
}

impl PathTensor {
    pub fn from_parts(n: usize, length: u32, semantics: Semantics, data: Vec<i64>) -> Result<Self> {
        if data.len() != n * n * n {
            return Err(Error::Shape(format!("{} entries for an {n}^3 tensor", data.len())));
        }
        if data.iter().any(|&v| v < 0) {
            return Err(Error::Invalid("negative occurrence count".into()));
        }
        Ok(Self { n, length, semantics, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> u32 {
        self.length
    }

    pub fn semantics(&self) -> Semantics {
        self.semantics
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> i64 {
        self.data[(i * self.n + j) * self.n + k]
    }

    pub fn fiber(&self, i: usize, j: usize) -> &[i64] {
        let start = (i * self.n + j) * self.n;
        &self.data[start..start + self.n]
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.data
    }

    pub fn nonzero_count(&self) -> usize {
        self.data.iter().filter(|&&v| v != 0).count()
    }

    /// `Σ_k B[i, j, k]` for every pair.
    pub fn fiber_sums(&self) -> Result<IntMatrix> {
        let mut out = IntMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                out[(i, j)] = self
                    .fiber(i, j)
                    .iter()
                    .try_fold(0i64, |acc, &v| acc.checked_add(v))
                    .ok_or(Error::Overflow("fiber sum"))?;
            }
        }
        Ok(out)
    }
}

/// Real tensor `T^L = B^L / (L + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedTensor {
    n: usize,
    length: u32,
    semantics: Semantics,
    data: Vec<f64>,
}

impl NormalizedTensor {
    pub fn from_parts(n: usize, length: u32, semantics: Semantics, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n * n {
            return Err(Error::Shape(format!("{} entries for an {n}^3 tensor", data.len())));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("non-finite tensor entry".into()));
        }
        Ok(Self { n, length, semantics, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> u32 {
        self.length
    }

    pub fn semantics(&self) -> Semantics {
        self.semantics
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.n + j) * self.n + k]
    }

    /// The depth fiber `T[i, j, :]`.
    pub fn fiber(&self, i: usize, j: usize) -> &[f64] {
        let start = (i * self.n + j) * self.n;
        &self.data[start..start + self.n]
    }

    /// All fibers in row-major pair order.
    pub fn fibers(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.n.max(1))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn nonzero_count(&self) -> usize {
        self.data.iter().filter(|&&v| v != 0.0).count()
    }

    /// `(L + 1) · T`, rounded back to integers. Fails if any entry is not
    /// within `1e-9` of an integer.
    pub fn to_counts(&self) -> Result<PathTensor> {
        let scale = f64::from(self.length) + 1.0;
        let data = self
            .data
            .iter()
            .map(|&v| {
                let scaled = v * scale;
                let rounded = scaled.round();
                if (scaled - rounded).abs() > 1e-9 {
                    Err(Error::Numeric(format!("entry {v} times {scale} is not an integer")))
                } else {
                    Ok(rounded as i64)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        PathTensor::from_parts(self.n, self.length, self.semantics, data)
    }
}

/// Divide every count by `L + 1`; the semantics tag carries over.
pub fn normalize_tensor(b: &PathTensor) -> NormalizedTensor {
    let scale = f64::from(b.length) + 1.0;
    NormalizedTensor {
        n: b.n,
        length: b.length,
        semantics: b.semantics,
        data: b.data.iter().map(|&v| v as f64 / scale).collect(),
    }
}

/// `Σ_k T[i, j, k]`, summed in ascending `k`.
pub fn sum_reduce_fiber(t: &NormalizedTensor, i: usize, j: usize) -> f64 {
    t.fiber(i, j).iter().sum()
}

/// [`sum_reduce_fiber`] for every pair.
pub fn sum_reduce(t: &NormalizedTensor) -> RealMatrix {
    RealMatrix::from_fn(t.n, t.n, |i, j| sum_reduce_fiber(t, i, j))
}

/// Build `B^L` under the requested semantics.
pub fn build_path_tensor(
    g: &Graph,
    length: u32,
    semantics: Semantics,
    limits: EnumerationLimits,
) -> Result<PathTensor> {
    match semantics {
        Semantics::Simple => build_simple_path_tensor(g, length, limits),
        Semantics::Walk => build_walk_tensor(g, length),
    }
}

/// Simple-path occurrence tensor. One depth-first search per source node
/// fills the whole `(i, ·, ·)` block; closed pairs stay zero for `L ≥ 1`.
pub fn build_simple_path_tensor(g: &Graph, length: u32, limits: EnumerationLimits) -> Result<PathTensor> {
    limits.check(g)?;
    let n = g.node_count();
    let block = |i: usize| -> Result<Vec<i64>> {
        let mut out = vec![0i64; n * n];
        for_each_simple_path_from(g, i, length, |path| {
            let j = *path.last().expect("non-empty path");
            let fiber = &mut out[j * n..(j + 1) * n];
            for &k in path {
                fiber[k] += 1;
            }
        });
        Ok(out)
    };
    let data = collect_blocks(n, block)?;
    PathTensor::from_parts(n, length, Semantics::Simple, data)
}

/// Walk occurrence tensor via the split
/// `B[i, j, k] = Σ_{t=0..L} (A^t)[i, k] · (A^{L-t})[k, j]`:
/// a walk visits `k` at step `t` exactly when it splits into a length-`t`
/// walk `i → k` and a length-`(L - t)` walk `k → j`.
pub fn build_walk_tensor(g: &Graph, length: u32) -> Result<PathTensor> {
    let n = g.node_count();
    let powers = power_sequence(&adjacency(g), length)?;
    let block = |i: usize| -> Result<Vec<i64>> {
        let mut out = vec![0i64; n * n];
        for j in 0..n {
            walk_fiber_into(&powers, i, j, &mut out[j * n..(j + 1) * n])?;
        }
        Ok(out)
    };
    let data = collect_blocks(n, block)?;
    PathTensor::from_parts(n, length, Semantics::Walk, data)
}

/// A single walk-tensor fiber computed from precomputed powers `A^0..A^L`.
pub fn walk_fiber(powers: &[IntMatrix], i: usize, j: usize) -> Result<Vec<i64>> {
    let n = powers.first().map_or(0, IntMatrix::rows);
    let mut out = vec![0i64; n];
    walk_fiber_into(powers, i, j, &mut out)?;
    Ok(out)
}

fn walk_fiber_into(powers: &[IntMatrix], i: usize, j: usize, out: &mut [i64]) -> Result<()> {
    let length = powers.len() - 1;
    for (k, cell) in out.iter_mut().enumerate() {
        let mut acc = 0i64;
        for t in 0..=length {
            let left = powers[t].get(i, k);
            if left == 0 {
                continue;
            }
            let right = powers[length - t].get(k, j);
            let term = left.checked_mul(right).ok_or(Error::Overflow("walk tensor"))?;
            acc = acc.checked_add(term).ok_or(Error::Overflow("walk tensor"))?;
        }
        *cell = acc;
    }
    Ok(())
}

/// Evaluate per-source blocks of `n * n` entries and concatenate them in
/// source order. With the `parallel` feature the blocks are computed on the
/// rayon pool; each block is independent, so the result is identical.
fn collect_blocks<F>(n: usize, block: F) -> Result<Vec<i64>>
where
    F: Fn(usize) -> Result<Vec<i64>> + Sync,
{
    #[cfg(feature = "parallel")]
    let blocks: Vec<Vec<i64>> = {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(&block).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let blocks: Vec<Vec<i64>> = (0..n).map(&block).collect::<Result<_>>()?;
    Ok(blocks.concat())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{matrix_power, parse_edge_list};

    fn five_node_fixture() -> Graph {
        parse_edge_list("0 1\n0 2\n1 3\n2 3\n3 4").unwrap()
    }

    #[test]
    fn simple_tensor_fixture_fiber() {
        let b = build_simple_path_tensor(&five_node_fixture(), 3, EnumerationLimits::default()).unwrap();
        assert_eq!(b.fiber(0, 4), &[2, 1, 1, 2, 2]);
        assert_eq!(b.fiber(4, 0), &[2, 1, 1, 2, 2]);
    }

    #[test]
    fn simple_tensor_small_cases() {
        let lim = EnumerationLimits::default();
        let b = build_simple_path_tensor(&Graph::path(3), 2, lim).unwrap();
        assert_eq!(b.fiber(0, 2), &[1, 1, 1]);
        let b = build_simple_path_tensor(&Graph::complete(3), 2, lim).unwrap();
        assert_eq!(b.fiber(0, 0), &[0, 0, 0]);
        let b = build_simple_path_tensor(&five_node_fixture(), 0, lim).unwrap();
        assert_eq!(b.nonzero_count(), 5);
        assert_eq!(b.get(3, 3, 3), 1);
    }

    #[test]
    fn simple_tensor_respects_cap() {
        let err = build_simple_path_tensor(&Graph::path(10), 2, EnumerationLimits { max_nodes: 9 });
        assert!(matches!(err, Err(Error::ResourceCap(_))));
    }

    #[test]
    fn walk_tensor_small_cases() {
        let b = build_walk_tensor(&Graph::complete(3), 2).unwrap();
        assert_eq!(b.fiber(0, 0), &[4, 1, 1]);
        let b = build_walk_tensor(&Graph::path(3), 2).unwrap();
        assert_eq!(b.fiber(0, 2), &[1, 1, 1]);
        let b = build_walk_tensor(&five_node_fixture(), 0).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                for k in 0..5 {
                    assert_eq!(b.get(i, j, k), i64::from(i == j && j == k));
                }
            }
        }
    }

    #[test]
    fn walk_tensor_overflow_is_reported() {
        assert!(matches!(build_walk_tensor(&Graph::complete(6), 30), Err(Error::Overflow(_))));
    }

    #[test]
    fn walk_fiber_matches_tensor() {
        let g = five_node_fixture();
        let b = build_walk_tensor(&g, 3).unwrap();
        let powers = power_sequence(&adjacency(&g), 3).unwrap();
        for (i, j) in [(0, 4), (2, 2), (3, 1)] {
            assert_eq!(walk_fiber(&powers, i, j).unwrap(), b.fiber(i, j));
        }
    }

    #[test]
    fn normalization_examples() {
        let t = normalize_tensor(&build_simple_path_tensor(&five_node_fixture(), 3, EnumerationLimits::default()).unwrap());
        assert_eq!(t.get(0, 4, 3), 0.5);
        assert_eq!(t.fiber(0, 4), &[0.5, 0.25, 0.25, 0.5, 0.5]);
        assert_eq!(t.semantics(), Semantics::Simple);

        let b0 = build_walk_tensor(&five_node_fixture(), 0).unwrap();
        let t0 = normalize_tensor(&b0);
        assert!(t0.as_slice().iter().zip(b0.as_slice()).all(|(&t, &b)| t == b as f64));

        let t = normalize_tensor(&build_walk_tensor(&Graph::path(3), 2).unwrap());
        assert!((t.get(0, 2, 1) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(t.to_counts().unwrap(), build_walk_tensor(&Graph::path(3), 2).unwrap());
    }

    #[test]
    fn sum_reduction_examples() {
        let g = five_node_fixture();
        let ts = normalize_tensor(&build_simple_path_tensor(&g, 3, EnumerationLimits::default()).unwrap());
        assert!((sum_reduce_fiber(&ts, 0, 4) - 2.0).abs() < 1e-12);

        let tw = normalize_tensor(&build_walk_tensor(&Graph::complete(3), 2).unwrap());
        assert!((sum_reduce_fiber(&tw, 0, 0) - 2.0).abs() < 1e-12);

        let t0 = normalize_tensor(&build_walk_tensor(&g, 0).unwrap());
        assert_eq!(sum_reduce_fiber(&t0, 2, 2), 1.0);

        let a3 = matrix_power(&adjacency(&g), 3).unwrap().to_real();
        assert!(sum_reduce(&normalize_tensor(&build_walk_tensor(&g, 3).unwrap())).max_abs_diff(&a3) < 1e-9);
    }

    #[test]
    fn semantics_parse_and_codes() {
        assert_eq!("walk".parse::<Semantics>().unwrap(), Semantics::Walk);
        assert!("paths".parse::<Semantics>().is_err());
        for s in [Semantics::Simple, Semantics::Walk] {
            assert_eq!(Semantics::from_code(s.code()).unwrap(), s);
        }
        assert!(Semantics::from_code(7).is_err());
    }
}
