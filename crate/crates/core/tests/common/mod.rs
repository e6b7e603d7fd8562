#![allow(dead_code)]

use longtail::InteractionMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random binary matrix with each cell present with probability `density`.
pub fn random_binary(
    m: usize,
    n: usize,
    density: f64,
    rng: &mut impl Rng,
) -> (InteractionMatrix, Vec<Vec<f64>>) {
    let mut dense = vec![vec![0.0; n]; m];
    let mut triples = Vec::new();
    for (p, row) in dense.iter_mut().enumerate() {
        for (t, cell) in row.iter_mut().enumerate() {
            if rng.random_bool(density) {
                *cell = 1.0;
                triples.push((p, t, 1.0));
            }
        }
    }
    (
        InteractionMatrix::from_triples(m, n, triples).unwrap(),
        dense,
    )
}

/// Dense copy of a sparse matrix.
pub fn to_dense(m: &InteractionMatrix) -> Vec<Vec<f64>> {
    let mut dense = vec![vec![0.0; m.num_tracks()]; m.num_playlists()];
    for (p, t, x) in m.triples() {
        dense[p][t] = x;
    }
    dense
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Dense weighted ridge solve: argmin Σ_j c_j (r_j − fᵀy_j)² + λ‖f‖².
pub fn weighted_ridge(ys: &[&[f64]], c: &[f64], r: &[f64], lambda: f64) -> Vec<f64> {
    let f = ys[0].len();
    let y = nalgebra::DMatrix::from_fn(ys.len(), f, |j, k| ys[j][k]);
    let cw = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(c));
    let rv = nalgebra::DVector::from_column_slice(r);
    let a = y.transpose() * &cw * &y + nalgebra::DMatrix::identity(f, f) * lambda;
    let b = y.transpose() * &cw * rv;
    a.lu()
        .solve(&b)
        .expect("singular oracle system")
        .as_slice()
        .to_vec()
}

/// Confidence-weighted squared loss plus the ridge penalty on both sides.
pub fn als_cost(
    model: &longtail::recommenders::FactorModel,
    dense: &[Vec<f64>],
    alpha: f64,
    lambda: f64,
) -> f64 {
    let mut cost = 0.0;
    for (p, row) in dense.iter().enumerate() {
        let fp = model.playlist_factors.row(p);
        for (t, &x) in row.iter().enumerate() {
            let r = if x > 0.0 { 1.0 } else { 0.0 };
            let c = 1.0 + alpha * x;
            cost += c * (r - dot(fp, model.track_factors.row(t))).powi(2);
        }
    }
    cost + lambda * (model.playlist_factors.squared_norm() + model.track_factors.squared_norm())
}

/// Model with N(0, 1) factors.
pub fn random_model(
    m: usize,
    n: usize,
    f: usize,
    rng: &mut impl Rng,
) -> longtail::recommenders::FactorModel {
    use longtail::recommenders::FactorMatrix;
    longtail::recommenders::FactorModel {
        playlist_factors: FactorMatrix::gaussian(m, f, 1.0, rng),
        track_factors: FactorMatrix::gaussian(n, f, 1.0, rng),
    }
}

/// Checks every row of `solved` against the dense oracle given the fixed
/// side; returns the largest absolute deviation.
pub fn max_solve_error(
    solved: &longtail::recommenders::FactorMatrix,
    fixed: &longtail::recommenders::FactorMatrix,
    lanes: &[Vec<f64>],
    alpha: f64,
    lambda: f64,
) -> f64 {
    let ys: Vec<&[f64]> = (0..fixed.rows()).map(|j| fixed.row(j)).collect();
    let mut worst: f64 = 0.0;
    for (i, lane) in lanes.iter().enumerate() {
        let c: Vec<f64> = lane.iter().map(|&x| 1.0 + alpha * x).collect();
        let r: Vec<f64> = lane
            .iter()
            .map(|&x| if x > 0.0 { 1.0 } else { 0.0 })
            .collect();
        let expected = weighted_ridge(&ys, &c, &r, lambda);
        for (a, b) in solved.row(i).iter().zip(&expected) {
            worst = worst.max((a - b).abs());
        }
    }
    worst
}

pub fn transpose(dense: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = dense.first().map_or(0, |r| r.len());
    (0..n)
        .map(|t| dense.iter().map(|row| row[t]).collect())
        .collect()
}

/// Every permutation of `items`.
pub fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

/// Every size-`k` subset of `0..n`.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n)
        .filter(|mask| mask.count_ones() as usize == k)
        .map(|mask| (0..n).filter(|i| mask & (1 << i) != 0).collect())
        .collect()
}

pub mod reference {
    //! Straight transcriptions of the metric definitions.

    pub fn ndcg(ranking: &[usize], relevant: &[usize]) -> f64 {
        let gain = |i: usize| std::f64::consts::LN_2 / ((i + 2) as f64).ln();
        let mut dcg = 0.0;
        for (i, t) in ranking.iter().enumerate() {
            if relevant.contains(t) {
                dcg += gain(i);
            }
        }
        let ideal: f64 = (0..relevant.len()).map(gain).sum();
        dcg / ideal
    }

    pub fn r_precision(ranking: &[usize], relevant: &[usize]) -> f64 {
        let r = relevant.len();
        let mut hits = 0;
        for t in ranking.iter().take(r) {
            if relevant.contains(t) {
                hits += 1;
            }
        }
        hits as f64 / r as f64
    }

    pub fn precision_at_1(ranking: &[usize], relevant: &[usize]) -> f64 {
        if relevant.contains(&ranking[0]) {
            1.0
        } else {
            0.0
        }
    }

    /// Keeps an artist at the position of its first track.
    pub fn artist_level(
        ranking: &[usize],
        relevant: &[usize],
        artist: &[usize],
    ) -> (Vec<usize>, Vec<usize>) {
        let mut order: Vec<usize> = Vec::new();
        for (i, &t) in ranking.iter().enumerate() {
            let a = artist[t];
            if !ranking[..i].iter().any(|&u| artist[u] == a) {
                order.push(a);
            }
        }
        let mut truth: Vec<usize> = relevant.iter().map(|&t| artist[t]).collect();
        truth.sort_unstable();
        truth.dedup();
        (order, truth)
    }
}

/// Largest deviation between the library metrics and [`reference`] over
/// every permutation of up to six candidates and relevant sets of size 1 to
/// 3, at track and artist level. Returns (max error, cases checked).
pub fn metric_oracle_sweep() -> (f64, usize) {
    use longtail::metrics::{artist_level, ndcg, precision_at_1, r_precision};
    use std::collections::BTreeSet;

    let artist_maps: [&[usize]; 3] = [
        &[0, 1, 2, 3, 4, 5],
        &[0, 0, 1, 1, 2, 2],
        &[2, 0, 2, 1, 0, 2],
    ];
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for n in 1..=6 {
        let items: Vec<usize> = (0..n).collect();
        let perms = permutations(&items);
        for r in 1..=3.min(n) {
            for relevant in subsets(n, r) {
                let rel_set: BTreeSet<usize> = relevant.iter().copied().collect();
                for ranking in &perms {
                    let got = [
                        ndcg(ranking, &rel_set).unwrap(),
                        r_precision(ranking, &rel_set).unwrap(),
                        precision_at_1(ranking, &rel_set).unwrap(),
                    ];
                    let want = [
                        reference::ndcg(ranking, &relevant),
                        reference::r_precision(ranking, &relevant),
                        reference::precision_at_1(ranking, &relevant),
                    ];
                    for (g, w) in got.iter().zip(&want) {
                        worst = worst.max((g - w).abs());
                    }
                    for map in artist_maps {
                        let (order, truth) = artist_level(ranking, &rel_set, map).unwrap();
                        let (ref_order, ref_truth) =
                            reference::artist_level(ranking, &relevant, map);
                        if order != ref_order
                            || truth.iter().copied().collect::<Vec<_>>() != ref_truth
                        {
                            return (f64::INFINITY, cases);
                        }
                        let got = [
                            ndcg(&order, &truth).unwrap(),
                            r_precision(&order, &truth).unwrap(),
                            precision_at_1(&order, &truth).unwrap(),
                        ];
                        let want = [
                            reference::ndcg(&ref_order, &ref_truth),
                            reference::r_precision(&ref_order, &ref_truth),
                            reference::precision_at_1(&ref_order, &ref_truth),
                        ];
                        for (g, w) in got.iter().zip(&want) {
                            worst = worst.max((g - w).abs());
                        }
                    }
                    cases += 1;
                }
            }
        }
    }
    (worst, cases)
}

/// Small random dataset with one city whose local tracks are `0..locals`.
/// Track `t` belongs to artist `t % 10`; every playlist has at least one
/// non-local track and the first `m / 2` also hold one or two local tracks.
pub fn toy_city(
    m: usize,
    n: usize,
    locals: usize,
    seed: u64,
) -> (
    InteractionMatrix,
    longtail::Catalog,
    longtail::geo::LocalityTable,
) {
    use longtail::geo::{CityLocality, LocalityTable};
    use std::collections::{BTreeMap, BTreeSet};

    let mut r = rng(seed);
    let mut triples = Vec::new();
    for p in 0..m {
        let mut row = BTreeSet::new();
        row.insert(r.random_range(locals..n));
        for t in locals..n {
            if r.random_bool(0.15) {
                row.insert(t);
            }
        }
        if p < m / 2 {
            // local taste follows the first non-local track
            let anchor = *row.iter().next().unwrap();
            row.insert(anchor % locals);
            if r.random_bool(0.4) {
                row.insert(r.random_range(0..locals));
            }
        }
        triples.extend(row.into_iter().map(|t| (p, t, 1.0)));
    }
    let matrix = InteractionMatrix::from_triples(m, n, triples).unwrap();
    let tracks: BTreeMap<String, String> = (0..n)
        .map(|t| (format!("t{t:04}"), format!("a{}", t % 10)))
        .collect();
    let catalog = longtail::Catalog::new((0..m).map(|p| format!("p{p:04}")), &tracks);
    let mut locality = LocalityTable::default();
    locality.insert(
        "town",
        CityLocality {
            artists: BTreeSet::new(),
            tracks: (0..locals).collect(),
        },
    );
    (matrix, catalog, locality)
}
