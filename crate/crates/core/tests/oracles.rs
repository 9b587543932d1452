//! Independent brute-force oracles for the counting machinery.
//!
//! Walks and simple paths are generated here as explicit node sequences
//! (every sequence in `n^(L+1)` is tried), so nothing below shares code with
//! the matrix-power, DFS, or power-split paths under test.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thop_core::graph::{adjacency, matrix_power, Graph};
use thop_core::identities::{scaled_fiber_sums, verify_all, verify_cardinality};
use thop_core::paths::{enumerate_simple_paths, multiset_cardinality, simple_path_counts, EnumerationLimits};
use thop_core::tensor::{build_simple_path_tensor, build_walk_tensor, normalize_tensor, sum_reduce_fiber};

/// Every node sequence of length `len` over `0..n`, in lexicographic order.
fn all_sequences(n: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..n).map(move |v| {
                    let mut next = prefix.clone();
                    next.push(v);
                    next
                })
            })
            .collect();
    }
    out
}

fn is_walk(g: &Graph, seq: &[usize]) -> bool {
    seq.windows(2).all(|w| g.has_edge(w[0], w[1]))
}

fn is_simple(seq: &[usize]) -> bool {
    (0..seq.len()).all(|a| (a + 1..seq.len()).all(|b| seq[a] != seq[b]))
}

/// `(walk count, occurrence counts per k)` for every `(i, j)`.
fn walk_oracle(g: &Graph, length: usize) -> (Vec<Vec<i64>>, Vec<Vec<Vec<i64>>>) {
    let n = g.node_count();
    let mut counts = vec![vec![0i64; n]; n];
    let mut occ = vec![vec![vec![0i64; n]; n]; n];
    for seq in all_sequences(n, length + 1) {
        if !is_walk(g, &seq) {
            continue;
        }
        let (i, j) = (seq[0], seq[length]);
        counts[i][j] += 1;
        for &k in &seq {
            occ[i][j][k] += 1;
        }
    }
    (counts, occ)
}

/// Concatenated node multiset of all simple paths, per `(i, j)`.
fn simple_oracle(g: &Graph, length: usize) -> Vec<Vec<Vec<usize>>> {
    let n = g.node_count();
    let mut nodes = vec![vec![Vec::new(); n]; n];
    for seq in all_sequences(n, length + 1) {
        if is_walk(g, &seq) && is_simple(&seq) {
            nodes[seq[0]][seq[length]].extend_from_slice(&seq);
        }
    }
    nodes
}

fn sweep_graphs(count: u64, max_n: usize, p: f64) -> Vec<Graph> {
    (0..count)
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            let n = 2 + (seed as usize % (max_n - 1));
            Graph::random_gnp(n, p, &mut rng)
        })
        .collect()
}

fn five_node_fixture() -> Graph {
    thop_core::graph::parse_edge_list("0 1\n0 2\n1 3\n2 3\n3 4").unwrap()
}

#[test]
fn path_graph_square_matches_enumeration() {
    let (counts, _) = walk_oracle(&Graph::path(3), 2);
    assert_eq!(counts, vec![vec![1, 0, 1], vec![0, 2, 0], vec![1, 0, 1]]);
    let a2 = matrix_power(&adjacency(&Graph::path(3)), 2).unwrap();
    for i in 0..3 {
        assert_eq!(a2.row(i), counts[i].as_slice());
    }
}

#[test]
fn fixture_cube_entry_is_two_walks_and_two_paths() {
    let g = five_node_fixture();
    let (counts, _) = walk_oracle(&g, 3);
    assert_eq!(counts[0][4], 2);
    let simple = simple_oracle(&g, 3);
    assert_eq!(simple[0][4].len() / 4, 2);
}

#[test]
fn matrix_power_counts_walks() {
    for g in sweep_graphs(12, 6, 0.5) {
        let a = adjacency(&g);
        for length in 0..=4 {
            let (counts, _) = walk_oracle(&g, length);
            let power = matrix_power(&a, length as u32).unwrap();
            for i in 0..g.node_count() {
                assert_eq!(power.row(i), counts[i].as_slice(), "n={} L={length}", g.node_count());
            }
        }
    }
}

#[test]
fn walk_tensor_matches_enumeration() {
    for g in sweep_graphs(20, 6, 0.4) {
        for length in 0..=4 {
            let b = build_walk_tensor(&g, length as u32).unwrap();
            let (_, occ) = walk_oracle(&g, length);
            for i in 0..g.node_count() {
                for j in 0..g.node_count() {
                    assert_eq!(b.fiber(i, j), occ[i][j].as_slice(), "L={length} ({i},{j})");
                }
            }
        }
    }
}

#[test]
fn triangle_closed_walk_fiber() {
    let (_, occ) = walk_oracle(&Graph::complete(3), 2);
    assert_eq!(occ[0][0], vec![4, 1, 1]);
}

#[test]
fn simple_paths_match_enumeration() {
    let lim = EnumerationLimits::default();
    for g in sweep_graphs(20, 7, 0.4) {
        let n = g.node_count();
        for length in 0..=4usize {
            let oracle = simple_oracle(&g, length);
            let tensor = build_simple_path_tensor(&g, length as u32, lim).unwrap();
            for i in 0..n {
                for j in 0..n {
                    let nodes = &oracle[i][j];
                    if i != j {
                        let set = enumerate_simple_paths(&g, i, j, length as u32, lim).unwrap();
                        assert_eq!(set.node_multiset().collect::<Vec<_>>(), *nodes);
                    }
                    for k in 0..n {
                        let expected = if i == j && length > 0 {
                            0
                        } else {
                            nodes.iter().filter(|&&v| v == k).count() as i64
                        };
                        assert_eq!(tensor.get(i, j, k), expected, "L={length} ({i},{j},{k})");
                    }
                }
            }
        }
    }
}

#[test]
fn cardinality_identity_sweep() {
    let lim = EnumerationLimits::default();
    for g in sweep_graphs(20, 8, 0.4) {
        for length in 1..=4 {
            for i in 0..g.node_count() {
                for j in 0..g.node_count() {
                    if i == j {
                        continue;
                    }
                    let report = verify_cardinality(&g, i, j, length, lim).unwrap();
                    assert!(report.holds, "{report:?}");
                    let oracle = simple_oracle(&g, length as usize)[i][j].len() as u64;
                    assert_eq!(report.cardinality, oracle);
                    assert_eq!(multiset_cardinality(&g, i, j, length, lim).unwrap(), oracle);
                }
            }
        }
    }
}

#[test]
fn sum_recovery_sweep_both_semantics() {
    let lim = EnumerationLimits::default();
    for g in sweep_graphs(20, 8, 0.4) {
        let a = adjacency(&g);
        for length in 0..=4u32 {
            let walk = normalize_tensor(&build_walk_tensor(&g, length).unwrap());
            let scaled = scaled_fiber_sums(&walk).unwrap();
            let power = matrix_power(&a, length).unwrap();
            let simple = normalize_tensor(&build_simple_path_tensor(&g, length, lim).unwrap());
            let scaled_simple = scaled_fiber_sums(&simple).unwrap();
            let counts = simple_path_counts(&g, length, lim).unwrap();
            let scale = i64::from(length) + 1;
            for i in 0..g.node_count() {
                for j in 0..g.node_count() {
                    assert_eq!(scaled.get(i, j), scale * power.get(i, j));
                    assert_eq!(scaled_simple.get(i, j), scale * counts.get(i, j));
                    assert!((sum_reduce_fiber(&walk, i, j) - power.get(i, j) as f64).abs() < 1e-9);
                    assert!((sum_reduce_fiber(&simple, i, j) - counts.get(i, j) as f64).abs() < 1e-9);
                }
            }
        }
        assert!(verify_all(&g, 4, lim).unwrap().all_passed());
    }
}
