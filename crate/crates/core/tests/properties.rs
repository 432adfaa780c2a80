use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tvcut::balanced_cut::threshold_to_partition;
use tvcut::energy::{
    balance_energy, energy_inequality_gap, median, median_free_gap, tv_norm, zero_mean_subgradient,
};
use tvcut::graph::{balanced_cut_value, build_knn_graph, cut_value, divergence, gradient, Graph, Partition};
use tvcut::rof::{self, RofProblem, SolverKind, StoppingPolicy, StoppingRule};
use tvcut::verify::random_connected_graph;

fn graph_from_seed(n: usize, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_connected_graph(n, 0.3, &mut rng).unwrap()
}

/// `(graph, f)` with a connected random graph and a matching vector.
fn graph_and_vector(max_n: usize) -> impl Strategy<Value = (Graph, Vec<f64>)> {
    (3..=max_n, any::<u64>()).prop_flat_map(|(n, seed)| {
        (Just(graph_from_seed(n, seed)), prop::collection::vec(-10.0..10.0f64, n))
    })
}

/// Centered so that the median is exactly zero.
fn zero_median(f: &[f64]) -> Vec<f64> {
    let m = median(f).unwrap();
    f.iter().map(|x| x - m).collect()
}

fn non_constant(f: &[f64]) -> bool {
    f.iter().any(|x| (x - f[0]).abs() > 1e-6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gradient_and_divergence_are_adjoint((g, f) in graph_and_vector(30), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p: Vec<f64> = (0..g.edge_count()).map(|_| rand::Rng::random_range(&mut rng, -3.0..3.0)).collect();
        let lhs: f64 = gradient(&g, &f).unwrap().iter().zip(&p).map(|(a, b)| a * b).sum();
        let rhs: f64 = -divergence(&g, &p).unwrap().iter().zip(&f).map(|(a, b)| a * b).sum::<f64>();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs()).max(1.0));
    }

    #[test]
    fn cut_is_symmetric_and_balanced_cut_matches(n in 3usize..=15, seed in any::<u64>(), mask in any::<u32>()) {
        let g = graph_from_seed(n, seed);
        let m: Vec<bool> = (0..n).map(|v| mask >> v & 1 == 1).collect();
        prop_assume!(m.iter().any(|&x| x) && !m.iter().all(|&x| x));
        let s = Partition::from_mask(m);
        let c = cut_value(&g, &s).unwrap();
        prop_assert_eq!(c, cut_value(&g, &s.complement()).unwrap());
        let b = balanced_cut_value(&g, &s).unwrap();
        prop_assert_eq!(b, c / s.size().min(n - s.size()) as f64);
    }

    #[test]
    fn disjoint_union_adds_total_variation((a, f) in graph_and_vector(12), (b, h) in graph_and_vector(12)) {
        let u = a.disjoint_union(&b);
        let joined: Vec<f64> = f.iter().chain(&h).copied().collect();
        let sum = tv_norm(&a, &f).unwrap() + tv_norm(&b, &h).unwrap();
        prop_assert!((tv_norm(&u, &joined).unwrap() - sum).abs() <= 1e-10 * sum.max(1.0));
    }

    #[test]
    fn energy_is_scale_and_shift_invariant((g, f) in graph_and_vector(25), s in 0.1..10.0f64, c in -5.0..5.0f64) {
        prop_assume!(non_constant(&f));
        let e = balance_energy(&g, &f).unwrap();
        let moved: Vec<f64> = f.iter().map(|x| s * x + c).collect();
        let e2 = balance_energy(&g, &moved).unwrap();
        prop_assert!((e - e2).abs() <= 1e-9 * e);
        prop_assert!(e >= 0.0);
    }

    #[test]
    fn zero_mean_subgradient_properties((_, f) in graph_and_vector(25)) {
        let f = zero_median(&f);
        // zero median alone does not pin the ratio when n is even and the
        // zero is unique; skip those cases
        if let Ok(v) = zero_mean_subgradient(&f) {
            let v = v.values();
            let sum: f64 = v.iter().sum();
            prop_assert!(sum.abs() <= 1e-12 * f.len() as f64);
            prop_assert!(v.iter().all(|x| x.abs() <= 1.0));
            let pairing: f64 = v.iter().zip(&f).map(|(a, b)| a * b).sum();
            let l1: f64 = f.iter().map(|x| x.abs()).sum();
            prop_assert!((pairing - l1).abs() <= 1e-12 * l1.max(1.0));
        }
    }

    #[test]
    fn median_free_gap_implies_energy_gap((g, f) in graph_and_vector(20), seed in any::<u64>(), theta in 0.5..1.0f64) {
        let f = zero_median(&f);
        prop_assume!(non_constant(&f));
        let norm = f.iter().map(|x| x * x).sum::<f64>().sqrt();
        let f: Vec<f64> = f.iter().map(|x| x / norm).collect();
        let Ok(v) = zero_mean_subgradient(&f) else { return Ok(()) };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h: Vec<f64> = f.iter().map(|x| x + rand::Rng::random_range(&mut rng, -0.2..0.2)).collect();
        prop_assume!(non_constant(&h));
        let free = median_free_gap(&g, &f, &v, &h, theta).unwrap();
        if free > 1e-12 {
            prop_assert!(energy_inequality_gap(&g, &f, &h, theta).unwrap() > 0.0);
        }
    }

    #[test]
    fn rof_minimizer_is_unique_across_solvers((g, gv) in graph_and_vector(15), lambda in 0.2..5.0f64) {
        let problem = RofProblem::new(&g, lambda, &gv, &gv).unwrap();
        let policy = StoppingPolicy::new(StoppingRule::FixedTolerance { eps: 1e-14 }, 200_000);
        let pd = rof::solve_rof(&problem, SolverKind::PrimalDual, &policy).unwrap().h;
        let fb = rof::solve_rof(&problem, SolverKind::ForwardBackwardDual, &policy).unwrap().h;
        let diff = pd.iter().zip(&fb).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(diff <= 1e-7, "solvers differ by {diff}");
        // the mean is preserved by the ROF step
        let mean_g: f64 = gv.iter().sum::<f64>() / gv.len() as f64;
        let mean_h: f64 = pd.iter().sum::<f64>() / pd.len() as f64;
        prop_assert!((mean_g - mean_h).abs() <= 1e-7);
    }

    #[test]
    fn forward_backward_dual_objective_never_increases((g, gv) in graph_and_vector(20), lambda in 0.2..5.0f64) {
        let problem = RofProblem::new(&g, lambda, &gv, &gv).unwrap();
        let step = rof::default_dual_step(&problem);
        let mut p = vec![0.0; g.edge_count()];
        let mut last = problem.dual_objective(&p);
        for _ in 0..200 {
            p = rof::forward_backward_dual_step(&problem, &p, step);
            let now = problem.dual_objective(&p);
            prop_assert!(now <= last * (1.0 + 1e-14) + 1e-14);
            last = now;
        }
    }

    #[test]
    fn sweep_beats_every_level_set((g, f) in graph_and_vector(14)) {
        prop_assume!(non_constant(&f));
        let (best, value) = threshold_to_partition(&g, &f).unwrap();
        prop_assert_eq!(value, balanced_cut_value(&g, &best).unwrap());
        for &t in &f {
            let s = Partition::from_mask(f.iter().map(|&x| x > t).collect());
            if s.is_proper() {
                prop_assert!(value <= balanced_cut_value(&g, &s).unwrap());
            }
        }
    }

    #[test]
    fn knn_graph_matches_brute_force(seed in any::<u64>(), n in 5usize..40, k in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..3).map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0)).collect())
            .collect();
        let knn = build_knn_graph(&pts, k).unwrap();
        let d2 = |a: usize, b: usize| -> f64 { pts[a].iter().zip(&pts[b]).map(|(x, y)| (x - y) * (x - y)).sum() };
        // neighbor sets by full sort, ties to the lower index
        let lists: Vec<Vec<usize>> = (0..n)
            .map(|i| {
                let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
                others.sort_by(|&a, &b| d2(i, a).partial_cmp(&d2(i, b)).unwrap().then(a.cmp(&b)));
                others.truncate(k);
                others
            })
            .collect();
        let mean_kth = (0..n).map(|i| d2(i, lists[i][k - 1]).sqrt()).sum::<f64>() / n as f64;
        prop_assert!((knn.mean_kth_distance - mean_kth).abs() <= 1e-12);
        let mut expected = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if lists[i].contains(&j) || lists[j].contains(&i) {
                    expected.push((i, j));
                }
            }
        }
        let got: Vec<(usize, usize)> = knn.graph.edges().iter().map(|e| (e.i, e.j)).collect();
        prop_assert_eq!(got, expected);
        for e in knn.graph.edges() {
            let w = (-d2(e.i, e.j) / knn.sigma2).exp();
            prop_assert!((e.w - w).abs() <= 1e-12);
        }
    }
}
