use proptest::prelude::*;
use splice_core::geometry::{dijkstra, geo_loss, geodesic_table, geodesics, knn_graph, NeighborGraph};
use splice_core::nncore::{euclidean, rng, Matrix};
use splice_core::splice::LatentGroup;

/// All-pairs shortest paths by Floyd–Warshall on a dense matrix.
fn floyd_warshall(n: usize, edges: &[(usize, usize, f64)]) -> Vec<Vec<f64>> {
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for &(a, b, w) in edges {
        d[a][b] = d[a][b].min(w);
        d[b][a] = d[b][a].min(w);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

fn points(n: usize, dim: usize, seed: u64) -> Matrix<f64> {
    let mut r = rng::seeded(seed);
    Matrix::from_fn(n, dim, |_, _| rng::normal(&mut r))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    // Dyadic weights with few bits make every path sum exact, so both
    // algorithms must agree bit for bit.
    #[test]
    fn dijkstra_equals_floyd_warshall(
        raw in prop::collection::vec((0usize..20, 0usize..20, 1u32..64), 10..60),
    ) {
        let edges: Vec<(usize, usize, f64)> = raw
            .into_iter()
            .filter(|(a, b, _)| a != b)
            .map(|(a, b, w)| (a, b, w as f64 / 8.0))
            .collect();
        let graph = NeighborGraph::from_edges(20, &edges).unwrap();
        let fw = floyd_warshall(20, &edges);
        for s in 0..20 {
            prop_assert_eq!(&dijkstra(&graph, s), &fw[s]);
        }
    }

    #[test]
    fn geodesic_never_shorter_than_euclidean(n in 12usize..60, k in 1usize..6, seed in any::<u64>()) {
        let p = points(n, 3, seed);
        let g = knn_graph(&p, k).unwrap();
        let d = geodesics(&g, &[0, n / 2, n - 1]).unwrap();
        for (r, &l) in [0, n / 2, n - 1].iter().enumerate() {
            for j in 0..n {
                prop_assert!(d[(r, j)] >= euclidean(p.row(l), p.row(j)) * (1.0 - 1e-12));
            }
        }
    }

    #[test]
    fn table_rows_follow_landmark_order(n in 10usize..40, seed in any::<u64>()) {
        let p = points(n, 2, seed);
        let g = knn_graph(&p, 4).unwrap();
        let forward: Vec<usize> = vec![0, 3, 7, n - 1];
        let backward: Vec<usize> = forward.iter().rev().copied().collect();
        let a = geodesics(&g, &forward).unwrap();
        let b = geodesics(&g, &backward).unwrap();
        for r in 0..forward.len() {
            prop_assert_eq!(a.row(r), b.row(forward.len() - 1 - r));
        }
    }

    #[test]
    fn complete_graph_geodesics_are_euclidean(n in 5usize..30, seed in any::<u64>()) {
        let p = points(n, 4, seed);
        let g = knn_graph(&p, n - 1).unwrap();
        let land: Vec<usize> = (0..n).collect();
        let d = geodesics(&g, &land).unwrap();
        for i in 0..n {
            for j in 0..n {
                prop_assert!((d[(i, j)] - euclidean(p.row(i), p.row(j))).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn geo_loss_is_rigid_invariant(n in 6usize..30, angle in 0.0f64..6.28, shift in -5.0f64..5.0, seed in any::<u64>()) {
        let p = points(n, 2, seed);
        let table = geodesic_table(&knn_graph(&p, 3).unwrap(), LatentGroup::PrivateB, vec![0, 1, 2]).unwrap();
        let latents = points(n, 2, seed ^ 7);
        let (s, c) = angle.sin_cos();
        let moved = Matrix::from_fn(n, 2, |r, k| {
            let (x, y) = (latents[(r, 0)], latents[(r, 1)]);
            shift + if k == 0 { c * x - s * y } else { s * x + c * y }
        });
        let before = geo_loss(&latents, &table).unwrap();
        let after = geo_loss(&moved, &table).unwrap();
        prop_assert!((before - after).abs() < 1e-9 * before.max(1.0));
    }
}

#[test]
fn circle_antipodal_geodesic_is_pi() {
    let n = 200;
    let p = Matrix::from_fn(n, 2, |i, c| {
        let t = i as f64 * std::f64::consts::TAU / n as f64;
        if c == 0 {
            t.cos()
        } else {
            t.sin()
        }
    });
    let g = knn_graph(&p, 5).unwrap();
    let d = dijkstra(&g, 0);
    let pi = std::f64::consts::PI;
    assert!((d[n / 2] - pi).abs() < 0.05 * pi, "{}", d[n / 2]);
}

#[test]
fn isometric_latents_have_zero_loss() {
    let p = points(25, 3, 5);
    let table = geodesic_table(&knn_graph(&p, 24).unwrap(), LatentGroup::SharedAtoB, vec![2, 9, 17]).unwrap();
    assert!(geo_loss(&p, &table).unwrap() < 1e-12);
}

#[test]
fn disconnected_clusters_are_bridged_once() {
    let mut p = points(40, 2, 8);
    for r in 20..40 {
        p[(r, 0)] += 100.0;
    }
    let g = knn_graph(&p, 3).unwrap();
    assert!(g.is_connected());
    assert_eq!(g.bridges().len(), 1);
    let d = dijkstra(&g, 0);
    assert!(d.iter().all(|v| v.is_finite()));
}
