mod common;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sgpl::dgp::gen_points_uniform;
use sgpl::hexgrid::{assign_all, hex_distance, point_to_cell, CellAssignment, CellId, GridSpec};
use sgpl::pairsampler::{candidate_cells, run_sgpl_sampling, select_isolated_cells, SamplerConfig};
use sgpl::points::PointSet;

use common::{nearest_center_brute, rng};

fn uniform(n: usize, seed: u64) -> PointSet {
    PointSet::from_coords(gen_points_uniform(n, &mut rng(seed)))
}

#[test]
fn point_to_cell_is_nearest_center_at_default_resolution() {
    let grid = GridSpec::default();
    let e = grid.edge();
    let mut r = rng(21);
    for _ in 0..10_000 {
        // Small window around the origin keeps the exhaustive search cheap.
        let p = [r.random_range(-8.0 * e..8.0 * e), r.random_range(-8.0 * e..8.0 * e)];
        let (best, d1, d2) = nearest_center_brute(&grid, p, 12);
        let got = point_to_cell(&grid, p).unwrap();
        assert!(got == best || (d2 - d1).abs() < 1e-15, "{p:?}: {got} vs {best}");
    }
}

#[test]
fn assignment_matches_per_point_lookup() {
    let pts = uniform(1000, 2);
    let grid = GridSpec::default();
    let a = assign_all(&grid, &pts).unwrap();
    let mut expected: BTreeMap<CellId, Vec<usize>> = BTreeMap::new();
    for (i, p) in pts.coords.iter().enumerate() {
        expected.entry(point_to_cell(&grid, *p).unwrap()).or_default().push(i);
    }
    assert_eq!(a.cells, expected);
    assert_eq!(a.n_points(), 1000);
}

#[test]
fn candidates_match_direct_filter() {
    let pts = uniform(5000, 3);
    let a = assign_all(&GridSpec::default(), &pts).unwrap();
    for n_min in [2, 3] {
        let cfg = SamplerConfig { n_min_per_cell: n_min, ..Default::default() };
        let mut expected = Vec::new();
        for (cell, members) in &a.cells {
            if members.len() >= n_min {
                expected.push(*cell);
            }
        }
        assert_eq!(candidate_cells(&a, &cfg), expected);
    }
}

/// Shuffle the whole list first, then scan it keeping each cell that is
/// farther than `k` from every cell kept so far.
fn replay_selection(candidates: &[CellId], k: u32, q_target: usize, seed: u64) -> Vec<CellId> {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let mut order = candidates.to_vec();
    let n = order.len();
    for t in 0..n {
        let j = r.random_range(t..n);
        order.swap(t, j);
    }
    let mut kept: Vec<CellId> = Vec::new();
    for c in order {
        if kept.len() == q_target {
            break;
        }
        if kept.iter().all(|s| hex_distance(*s, c) > k as u64) {
            kept.push(c);
        }
    }
    kept
}

#[test]
fn selection_on_block_matches_step_by_step_replay() {
    let block: Vec<CellId> = (0..7).flat_map(|q| (0..7).map(move |r| CellId::new(q, r))).collect();
    for k in [1u32, 2] {
        for seed in 0..50 {
            let cfg = SamplerConfig { k_ring: k, q_target: 49, seed, ..Default::default() };
            let got = select_isolated_cells(&block, &cfg, &mut ChaCha8Rng::seed_from_u64(seed));
            assert_eq!(got, replay_selection(&block, k, 49, seed));
            // Maximal: every unselected block cell is blocked by some selected cell.
            for c in &block {
                assert!(got.iter().any(|s| hex_distance(*s, *c) <= k as u64));
            }
        }
    }
}

#[test]
fn default_grid_reaches_target_at_ten_thousand_points() {
    let pts = uniform(10_000, 4);
    for seed in 0..5 {
        let cfg = SamplerConfig { seed, ..Default::default() };
        let pairs = run_sgpl_sampling(&pts, &GridSpec::default(), &cfg).unwrap();
        assert_eq!(pairs.q(), 1000);
        assert!(pairs.achieved_target);
    }
}

#[test]
fn achieved_pairs_grow_with_target_until_exhaustion() {
    let pts = uniform(3000, 5);
    let grid = GridSpec::new(6, 4.0).unwrap();
    // Same seed: a larger target extends the same selection order.
    let mut last = 0;
    for q_target in [1, 10, 50, 100, 200, 400, 10_000] {
        let cfg = SamplerConfig { q_target, seed: 1, ..Default::default() };
        let q = run_sgpl_sampling(&pts, &grid, &cfg).unwrap().q();
        assert!(q >= last && q <= q_target);
        last = q;
    }
    assert!(last < 10_000);
}

#[test]
fn pairs_belong_to_their_cells() {
    let pts = uniform(4000, 6);
    let grid = GridSpec::new(6, 4.0).unwrap();
    let a: CellAssignment = assign_all(&grid, &pts).unwrap();
    for seed in 0..20 {
        let cfg = SamplerConfig { q_target: 300, seed, ..Default::default() };
        let pairs = run_sgpl_sampling(&pts, &grid, &cfg).unwrap();
        for p in &pairs.pairs {
            assert!(p.i < p.l);
            let m = a.members(&p.cell).unwrap();
            assert!(m.contains(&p.i) && m.contains(&p.l));
        }
    }
}
