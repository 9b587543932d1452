//! Depth reduction: maps `f: R^n → R^d` applied to every depth fiber of a
//! normalized tensor, producing an `n × n × d` tensor.
//!
//! Three maps are provided. `Sum` adds the fiber up (and so recovers the
//! path-count matrix). `Pca` projects centered fibers onto the top principal
//! directions of the fiber cloud. `RandomProjection` multiplies by a seeded
//! ±1/√d sign matrix.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::RealMatrix;
use crate::tensor::{NormalizedTensor, Semantics};

/// A fitted reduction map. Serialized as JSON tagged by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReductionMap {
    Sum {
        d: usize,
    },
    Pca {
        d: usize,
        /// Fiber mean, length `n`.
        mean: Vec<f64>,
        /// `n × d`, orthonormal columns, eigenvalues descending.
        components: RealMatrix,
        /// Covariance eigenvalues for the kept components.
        eigenvalues: Vec<f64>,
    },
    RandomProjection {
        d: usize,
        seed: u64,
        /// `n × d`, entries `±1/√d`.
        matrix: RealMatrix,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReductionKind {
    Sum,
    Pca,
    #[serde(alias = "randproj")]
    RandomProjection,
}

impl std::str::FromStr for ReductionKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum" => Ok(ReductionKind::Sum),
            "pca" => Ok(ReductionKind::Pca),
            "randproj" | "random_projection" => Ok(ReductionKind::RandomProjection),
            other => Err(Error::Invalid(format!("unknown reduction '{other}' (expected sum|pca|randproj)"))),
        }
    }
}

/// The `SUM` map; its output depth is always 1.
pub fn fit_sum() -> ReductionMap {
    ReductionMap::Sum { d: 1 }
}

/// Principal component analysis over the `n²` fibers of `t`.
///
/// Components are the top-`d` eigenvectors of the sample covariance
/// (normalized by `N - 1`, or `1` when there is a single fiber), ordered by
/// descending eigenvalue. Each component is sign-fixed so that its
/// largest-magnitude entry is positive, lowest index winning ties.
pub fn fit_pca(t: &NormalizedTensor, d: usize) -> Result<ReductionMap> {
    let n = t.n();
    if d == 0 || d > n {
        return Err(Error::Dimension(format!("PCA output dimension {d} must lie in 1..={n}")));
    }
    let samples = n * n;
    let mut mean = vec![0.0; n];
    for fiber in t.fibers() {
        for (m, &x) in mean.iter_mut().zip(fiber) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= samples as f64;
    }

    let mut cov = DMatrix::<f64>::zeros(n, n);
    let mut centered = vec![0.0; n];
    for fiber in t.fibers() {
        for ((c, &x), &m) in centered.iter_mut().zip(fiber).zip(&mean) {
            *c = x - m;
        }
        for a in 0..n {
            let ca = centered[a];
            if ca == 0.0 {
                continue;
            }
            for b in a..n {
                cov[(a, b)] += ca * centered[b];
            }
        }
    }
    let denom = if samples > 1 { (samples - 1) as f64 } else { 1.0 };
    for a in 0..n {
        for b in a..n {
            let v = cov[(a, b)] / denom;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }

    let eig = SymmetricEigen::try_new(cov, 1e-15, 10_000)
        .ok_or_else(|| Error::Numeric("covariance eigendecomposition did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]).then(x.cmp(&y)));

    let mut components = RealMatrix::zeros(n, d);
    let mut eigenvalues = Vec::with_capacity(d);
    for (col, &src) in order.iter().take(d).enumerate() {
        let v = eig.eigenvectors.column(src);
        let mut pivot = 0;
        for r in 1..n {
            if v[r].abs() > v[pivot].abs() {
                pivot = r;
            }
        }
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        for r in 0..n {
            components[(r, col)] = sign * v[r];
        }
        eigenvalues.push(eig.eigenvalues[src]);
    }
    if !components.is_finite() {
        return Err(Error::Numeric("non-finite principal component".into()));
    }
    Ok(ReductionMap::Pca { d, mean, components, eigenvalues })
}

/// Seeded `n × d` sign matrix with entries `±1/√d`.
///
/// The generator is ChaCha8 seeded through `SeedableRng::seed_from_u64`.
/// Entries are drawn row-major, one `next_u64` per entry; the entry is
/// positive when the lowest bit is set.
pub fn fit_random_projection(n: usize, d: usize, seed: u64) -> Result<ReductionMap> {
    if d == 0 || d > n {
        return Err(Error::Dimension(format!("projection dimension {d} must lie in 1..={n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let magnitude = 1.0 / (d as f64).sqrt();
    let matrix = RealMatrix::from_fn(n, d, |_, _| {
        if rng.next_u64() & 1 == 1 {
            magnitude
        } else {
            -magnitude
        }
    });
    Ok(ReductionMap::RandomProjection { d, seed, matrix })
}

/// Fit a map of the requested kind. `d` is ignored for `Sum` unless it is
/// something other than 1, which is a dimension error.
pub fn fit(kind: ReductionKind, t: &NormalizedTensor, d: usize, seed: u64) -> Result<ReductionMap> {
    match kind {
        ReductionKind::Sum => {
            if d != 1 {
                return Err(Error::Dimension(format!("sum reduction has output dimension 1, not {d}")));
            }
            Ok(fit_sum())
        }
        ReductionKind::Pca => fit_pca(t, d),
        ReductionKind::RandomProjection => fit_random_projection(t.n(), d, seed),
    }
}

impl ReductionMap {
    pub fn kind(&self) -> ReductionKind {
        match self {
            ReductionMap::Sum { .. } => ReductionKind::Sum,
            ReductionMap::Pca { .. } => ReductionKind::Pca,
            ReductionMap::RandomProjection { .. } => ReductionKind::RandomProjection,
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            ReductionMap::Sum { d } | ReductionMap::Pca { d, .. } | ReductionMap::RandomProjection { d, .. } => *d,
        }
    }

    /// Input dimension the map was fitted for; `None` for `Sum`, which
    /// accepts any length.
    pub fn input_dim(&self) -> Option<usize> {
        match self {
            ReductionMap::Sum { .. } => None,
            ReductionMap::Pca { components, .. } => Some(components.rows()),
            ReductionMap::RandomProjection { matrix, .. } => Some(matrix.rows()),
        }
    }

    /// Structural checks for maps loaded from JSON.
    pub fn validate(&self) -> Result<()> {
        match self {
            ReductionMap::Sum { d } => {
                if *d != 1 {
                    return Err(Error::Dimension(format!("sum map with d = {d}")));
                }
            }
            ReductionMap::Pca { d, mean, components, eigenvalues } => {
                if *d == 0 || components.cols() != *d || eigenvalues.len() != *d || mean.len() != components.rows() {
                    return Err(Error::Dimension("inconsistent PCA map dimensions".into()));
                }
                if *d > components.rows() {
                    return Err(Error::Dimension("PCA map with d > n".into()));
                }
            }
            ReductionMap::RandomProjection { d, matrix, .. } => {
                if *d == 0 || matrix.cols() != *d || *d > matrix.rows() {
                    return Err(Error::Dimension("inconsistent projection map dimensions".into()));
                }
            }
        }
        Ok(())
    }

    /// The linear part of the map: `Cᵀ x` for PCA, `Rᵀ x` for projections,
    /// the plain sum for `Sum`. No centering is applied.
    pub fn apply_linear(&self, x: &[f64], out: &mut [f64]) {
        match self {
            ReductionMap::Sum { .. } => out[0] = x.iter().sum(),
            ReductionMap::Pca { components: m, .. } | ReductionMap::RandomProjection { matrix: m, .. } => {
                transpose_times(m, x, out)
            }
        }
    }

    /// Map one fiber to `d` values.
    pub fn apply_fiber(&self, x: &[f64], out: &mut [f64]) {
        match self {
            ReductionMap::Pca { mean, components, .. } => {
                let centered: Vec<f64> = x.iter().zip(mean).map(|(a, m)| a - m).collect();
                transpose_times(components, &centered, out);
            }
            _ => self.apply_linear(x, out),
        }
    }

    /// Map a reduced fiber back to `R^n` (PCA only): `mean + C y`.
    pub fn reconstruct_fiber(&self, y: &[f64]) -> Result<Vec<f64>> {
        match self {
            ReductionMap::Pca { mean, components, .. } => Ok((0..components.rows())
                .map(|r| mean[r] + components.row(r).iter().zip(y).map(|(c, v)| c * v).sum::<f64>())
                .collect()),
            _ => Err(Error::Invalid("only PCA maps can reconstruct fibers".into())),
        }
    }

    /// Largest `|CᵀC − I|` entry; zero for maps without components.
    pub fn orthonormality_defect(&self) -> f64 {
        match self {
            ReductionMap::Pca { components, .. } => {
                let gram = components.t_matmul(components).expect("square gram");
                gram.max_abs_diff(&RealMatrix::identity(components.cols()))
            }
            _ => 0.0,
        }
    }
}

fn transpose_times(m: &RealMatrix, x: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    for (r, &xr) in x.iter().enumerate() {
        if xr == 0.0 {
            continue;
        }
        for (o, &c) in out.iter_mut().zip(m.row(r)) {
            *o += c * xr;
        }
    }
}

/// The `n × n × d` reduced tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedTensor {
    n: usize,
    length: u32,
    depth: usize,
    semantics: Semantics,
    data: Vec<f64>,
}

impl ReducedTensor {
    pub fn from_parts(n: usize, length: u32, depth: usize, semantics: Semantics, data: Vec<f64>) -> Result<Self> {
        if depth == 0 {
            return Err(Error::Dimension("reduced tensor with depth 0".into()));
        }
        if depth > n.max(1) {
            return Err(Error::Dimension(format!("reduced depth {depth} exceeds n = {n}")));
        }
        if data.len() != n * n * depth {
            return Err(Error::Shape(format!("{} entries for an {n}x{n}x{depth} tensor", data.len())));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite reduced entry".into()));
        }
        Ok(Self { n, length, depth, semantics, data })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> u32 {
        self.length
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn semantics(&self) -> Semantics {
        self.semantics
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.n + j) * self.depth + k]
    }

    pub fn fiber(&self, i: usize, j: usize) -> &[f64] {
        let start = (i * self.n + j) * self.depth;
        &self.data[start..start + self.depth]
    }

    /// The `n × n` matrix at depth `k` (0-based).
    pub fn slice(&self, k: usize) -> RealMatrix {
        RealMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j, k))
    }

    pub fn slices(&self) -> Vec<RealMatrix> {
        (0..self.depth).map(|k| self.slice(k)).collect()
    }
}

/// Apply `map` to every fiber of `t`.
pub fn apply_reduction(t: &NormalizedTensor, map: &ReductionMap) -> Result<ReducedTensor> {
    map.validate()?;
    let n = t.n();
    if let Some(expected) = map.input_dim() {
        if expected != n {
            return Err(Error::Dimension(format!("map fitted for depth {expected}, tensor depth is {n}")));
        }
    }
    let d = map.output_dim();
    let row = |i: usize| -> Vec<f64> {
        let mut out = vec![0.0; n * d];
        for j in 0..n {
            map.apply_fiber(t.fiber(i, j), &mut out[j * d..(j + 1) * d]);
        }
        out
    };
    #[cfg(feature = "parallel")]
    let rows: Vec<Vec<f64>> = {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(row).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<Vec<f64>> = (0..n).map(row).collect();
    ReducedTensor::from_parts(n, t.length(), d, t.semantics(), rows.concat())
}

/// Largest Euclidean residual `‖t_ij − reconstruct(f(t_ij))‖` over all
/// fibers. Nonincreasing in `d` because the PCA subspaces are nested.
pub fn reconstruction_error(t: &NormalizedTensor, map: &ReductionMap) -> Result<f64> {
    let reduced = apply_reduction(t, map)?;
    let mut worst: f64 = 0.0;
    for i in 0..t.n() {
        for j in 0..t.n() {
            let back = map.reconstruct_fiber(reduced.fiber(i, j))?;
            let err = t
                .fiber(i, j)
                .iter()
                .zip(&back)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            worst = worst.max(err);
        }
    }
    Ok(worst)
}
