//! Simple-path enumeration between node pairs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::IntMatrix;

/// Default bound on graph size for exhaustive simple-path work.
pub const DEFAULT_ENUMERATION_CAP: usize = 64;

/// Resource bounds for simple-path enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumerationLimits {
    pub max_nodes: usize,
}

impl Default for EnumerationLimits {
    fn default() -> Self {
        Self { max_nodes: DEFAULT_ENUMERATION_CAP }
    }
}

impl EnumerationLimits {
    pub fn check(&self, g: &Graph) -> Result<()> {
        if g.node_count() > self.max_nodes {
            return Err(Error::ResourceCap(format!(
                "graph has {} nodes, simple-path enumeration is capped at {}",
                g.node_count(),
                self.max_nodes
            )));
        }
        Ok(())
    }
}

/// Every simple path of a fixed length between two distinct nodes.
///
/// Each path is a node sequence of length `length + 1` starting at `source`
/// and ending at `target`, with no repeated node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimplePathSet {
    pub source: usize,
    pub target: usize,
    pub length: u32,
    pub paths: Vec<Vec<usize>>,
}

impl SimplePathSet {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// The multiset of nodes formed by concatenating all paths.
    pub fn node_multiset(&self) -> impl Iterator<Item = usize> + '_ {
        self.paths.iter().flatten().copied()
    }

    /// Number of paths that contain `node`.
    pub fn multiplicity(&self, node: usize) -> usize {
        self.node_multiset().filter(|&v| v == node).count()
    }
}

fn check_node(g: &Graph, v: usize) -> Result<()> {
    if v >= g.node_count() {
        return Err(Error::Invalid(format!("node {v} out of range for n = {}", g.node_count())));
    }
    Ok(())
}

/// Exhaustive depth-first enumeration of the simple paths `source → target`
/// with exactly `length` edges. Neighbors are explored in ascending id order,
/// so the output order is deterministic.
pub fn enumerate_simple_paths(
    g: &Graph,
    source: usize,
    target: usize,
    length: u32,
    limits: EnumerationLimits,
) -> Result<SimplePathSet> {
    check_node(g, source)?;
    check_node(g, target)?;
    if source == target {
        return Err(Error::ClosedPath(source));
    }
    limits.check(g)?;

    let mut set = SimplePathSet { source, target, length, paths: Vec::new() };
    if length == 0 {
        return Ok(set);
    }
    let mut visited = vec![false; g.node_count()];
    let mut stack = vec![source];
    visited[source] = true;
    extend_towards(g, target, length as usize + 1, &mut stack, &mut visited, &mut set.paths);
    Ok(set)
}

fn extend_towards(
    g: &Graph,
    target: usize,
    full_len: usize,
    stack: &mut Vec<usize>,
    visited: &mut [bool],
    out: &mut Vec<Vec<usize>>,
) {
    let last = *stack.last().expect("non-empty path");
    let final_step = stack.len() + 1 == full_len;
    for &next in g.neighbors(last) {
        if visited[next] {
            continue;
        }
        if final_step {
            if next == target {
                let mut path = stack.clone();
                path.push(next);
                out.push(path);
            }
            continue;
        }
        // the target may only appear as the final node
        if next == target {
            continue;
        }
        visited[next] = true;
        stack.push(next);
        extend_towards(g, target, full_len, stack, visited, out);
        stack.pop();
        visited[next] = false;
    }
}

/// Total node occurrences across all simple paths `source → target` of the
/// given length, counting multiplicities.
pub fn multiset_cardinality(
    g: &Graph,
    source: usize,
    target: usize,
    length: u32,
    limits: EnumerationLimits,
) -> Result<u64> {
    let set = enumerate_simple_paths(g, source, target, length, limits)?;
    Ok(set.paths.iter().map(|p| p.len() as u64).sum())
}

/// Matrix of simple-path counts of the given length, computed pair by pair
/// through [`enumerate_simple_paths`]. The diagonal holds the single
/// length-0 path at `length == 0` and zero otherwise.
pub fn simple_path_counts(g: &Graph, length: u32, limits: EnumerationLimits) -> Result<IntMatrix> {
    limits.check(g)?;
    let n = g.node_count();
    let mut counts = IntMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            counts[(i, j)] = if i == j {
                i64::from(length == 0)
            } else {
                enumerate_simple_paths(g, i, j, length, limits)?.len() as i64
            };
        }
    }
    Ok(counts)
}

/// Visit every simple path that starts at `source` and has exactly `length`
/// edges. Used by the tensor builder, which needs all endpoints at once.
pub(crate) fn for_each_simple_path_from(
    g: &Graph,
    source: usize,
    length: u32,
    mut visit: impl FnMut(&[usize]),
) {
    let mut visited = vec![false; g.node_count()];
    let mut stack = vec![source];
    visited[source] = true;
    walk_from(g, length as usize + 1, &mut stack, &mut visited, &mut visit);
}

fn walk_from(
    g: &Graph,
    full_len: usize,
    stack: &mut Vec<usize>,
    visited: &mut [bool],
    visit: &mut impl FnMut(&[usize]),
) {
    if stack.len() == full_len {
        visit(stack);
        return;
    }
    let last = *stack.last().expect("non-empty path");
    for &next in g.neighbors(last) {
        if visited[next] {
            continue;
        }
        visited[next] = true;
        stack.push(next);
        walk_from(g, full_len, stack, visited, visit);
        stack.pop();
        visited[next] = false;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::parse_edge_list;

    fn five_node_fixture() -> Graph {
        parse_edge_list("0 1\n0 2\n1 3\n2 3\n3 4").unwrap()
    }

    #[test]
    fn fixture_paths_between_ends() {
        let set = enumerate_simple_paths(&five_node_fixture(), 0, 4, 3, EnumerationLimits::default()).unwrap();
        assert_eq!(set.paths, vec![vec![0, 1, 3, 4], vec![0, 2, 3, 4]]);
        let mults: Vec<usize> = (0..5).map(|k| set.multiplicity(k)).collect();
        assert_eq!(mults, vec![2, 1, 1, 2, 2]);
    }

    #[test]
    fn path_graph_examples() {
        let g = Graph::path(3);
        let lim = EnumerationLimits::default();
        assert_eq!(enumerate_simple_paths(&g, 0, 2, 2, lim).unwrap().paths, vec![vec![0, 1, 2]]);
        assert!(enumerate_simple_paths(&g, 0, 2, 1, lim).unwrap().is_empty());
        assert!(enumerate_simple_paths(&g, 0, 2, 0, lim).unwrap().is_empty());
    }

    #[test]
    fn target_only_at_the_end() {
        // 0-1, 1-2, 2-0, 2-3: the walk 0,2,... must not pass through 3 early
        let g = parse_edge_list("0 1\n1 2\n0 2\n2 3").unwrap();
        let set = enumerate_simple_paths(&g, 0, 2, 2, EnumerationLimits::default()).unwrap();
        assert_eq!(set.paths, vec![vec![0, 1, 2]]);
        let set = enumerate_simple_paths(&g, 1, 3, 3, EnumerationLimits::default()).unwrap();
        assert_eq!(set.paths, vec![vec![1, 0, 2, 3]]);
    }

    #[test]
    fn closed_paths_and_cap() {
        let g = five_node_fixture();
        assert!(matches!(
            enumerate_simple_paths(&g, 2, 2, 3, EnumerationLimits::default()),
            Err(Error::ClosedPath(2))
        ));
        assert!(matches!(
            enumerate_simple_paths(&g, 0, 4, 3, EnumerationLimits { max_nodes: 4 }),
            Err(Error::ResourceCap(_))
        ));
        assert!(matches!(
            enumerate_simple_paths(&g, 0, 9, 3, EnumerationLimits::default()),
            Err(Error::Invalid(_))
        ));
    }

    #[test]
    fn cardinality_examples() {
        let lim = EnumerationLimits::default();
        assert_eq!(multiset_cardinality(&five_node_fixture(), 0, 4, 3, lim).unwrap(), 8);
        assert_eq!(multiset_cardinality(&Graph::path(3), 0, 2, 2, lim).unwrap(), 3);
        assert_eq!(multiset_cardinality(&Graph::path(3), 0, 2, 1, lim).unwrap(), 0);
    }

    #[test]
    fn counts_on_complete_graph() {
        // K4: simple paths of length 2 between distinct nodes go through one of the other 2
        let counts = simple_path_counts(&Graph::complete(4), 2, EnumerationLimits::default()).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(counts[(i, j)], if i == j { 0 } else { 2 });
            }
        }
        let zero = simple_path_counts(&Graph::complete(4), 0, EnumerationLimits::default()).unwrap();
        assert_eq!(zero, IntMatrix::identity(4));
    }
}
