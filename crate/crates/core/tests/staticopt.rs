use mfmdp::instances::{grid_distance, grid_distance_exact, grid_optimum, grid_optimum_exact};
use mfmdp::staticopt::{
    complete_graph_policy, evaluate_spread, market_place_solution, maximize_quadratic, maximize_spread,
    maximize_spread_exact, maximize_static, optimize_common_noise, project_to_simplex, Certificate, CommonNoiseSpec,
    Method, RectangleMarket, SearchOptions,
};
use mfmdp::{AdmissibleActions, Error, Graph, Matrix, Rational, Scalar, SimplexVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn r(n: i64, d: i64) -> Rational {
    Rational::ratio(n, d)
}

/// Best value of `f` over the simplex grid `{k/steps}` in three coordinates.
fn brute_force_3(f: impl Fn(&[f64]) -> f64, steps: usize) -> (f64, Vec<f64>) {
    let mut best = (f64::NEG_INFINITY, vec![]);
    for i in 0..=steps {
        for j in 0..=steps - i {
            let mu = [i as f64 / steps as f64, j as f64 / steps as f64, (steps - i - j) as f64 / steps as f64];
            let v = f(&mu);
            if v > best.0 {
                best = (v, mu.to_vec());
            }
        }
    }
    best
}

fn spread(mu: &[f64], dist: &Matrix<f64>) -> f64 {
    let n = mu.len();
    (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| mu[i] * mu[j] * dist[(i, j)]).sum()
}

#[test]
fn two_points() {
    let dist = Matrix::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
    let sol = maximize_spread(&dist).unwrap();
    assert_eq!(sol.mu.as_slice(), &[0.5, 0.5]);
    assert!((sol.value - 0.5).abs() < 1e-15);
    assert_eq!(sol.method, Method::SupportEnumeration);
}

#[test]
fn line_of_three_matches_brute_force() {
    let dist = Matrix::from_rows(vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 1.0], vec![2.0, 1.0, 0.0]]).unwrap();
    let sol = maximize_spread(&dist).unwrap();
    assert_eq!(sol.mu.as_slice(), &[0.5, 0.0, 0.5]);
    assert!((sol.value - 1.0).abs() < 1e-15);
    let (best, at) = brute_force_3(|m| spread(m, &dist), 1000);
    assert!((best - sol.value).abs() < 1e-12);
    assert_eq!(at, vec![0.5, 0.0, 0.5]);
}

#[test]
fn grid_optimum_value_is_pinned() {
    let exact = evaluate_spread(&grid_optimum_exact(), &grid_distance_exact());
    assert_eq!(exact, r(8732, 6845));
    let direct = spread(&grid_optimum(), &grid_distance());
    assert!((direct - 8732.0 / 6845.0).abs() < 1e-12);
    let sol = maximize_spread_exact(&grid_distance_exact()).unwrap();
    assert_eq!(sol.value, exact);
    assert_eq!(sol.support, vec![0, 1, 2, 3, 4, 5, 6, 7, 8]);
}

#[test]
fn spread_edge_cases() {
    let dist = grid_distance();
    assert_eq!(evaluate_spread(SimplexVector::point_mass(9, 4).as_slice(), &dist), 0.0);
    let two = Matrix::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
    assert_eq!(evaluate_spread(&[0.5, 0.5], &two), 0.5);
}

#[test]
fn certificate_on_the_grid() {
    let sol = maximize_spread(&grid_distance()).unwrap();
    match sol.certificate {
        Certificate::Kkt { residual, faces_examined, .. } => {
            assert!(residual < 1e-10);
            assert_eq!(faces_examined, (1 << 9) - 1);
        }
        Certificate::Search { .. } => panic!("expected an exact certificate"),
    }
}

#[test]
fn heuristic_on_the_grid_agrees_with_enumeration() {
    let dist = grid_distance();
    let objective = |mu: &[f64]| spread(mu, &dist);
    let sol = maximize_static(&objective, 9, &SearchOptions::default()).unwrap();
    let exact = maximize_spread(&dist).unwrap();
    assert!((sol.value - exact.value).abs() < 1e-6);
    assert!(sol.mu.l1_distance(&exact.mu) < 1e-3);
    assert_eq!(sol.method, Method::ProjectedGradient);
}

#[test]
fn heuristic_linear_and_concave_objectives() {
    let c = [0.3, -1.0, 2.5, 0.7];
    let linear = |mu: &[f64]| mu.iter().zip(c).map(|(m, w)| m * w).sum::<f64>();
    let sol = maximize_static(&linear, 4, &SearchOptions::default()).unwrap();
    assert_eq!(sol.mu.as_slice(), &[0.0, 0.0, 1.0, 0.0]);

    let target = [0.1, 0.2, 0.3, 0.4];
    let concave = |mu: &[f64]| -mu.iter().zip(target).map(|(m, t)| (m - t).powi(2)).sum::<f64>();
    let sol = maximize_static(&concave, 4, &SearchOptions::default()).unwrap();
    for (m, t) in sol.mu.as_slice().iter().zip(target) {
        assert!((m - t).abs() < 1e-6);
    }
}

fn random_metric(points: &[(f64, f64)]) -> Matrix<f64> {
    Matrix::from_fn(points.len(), points.len(), |i, j| {
        ((points[i].0 - points[j].0).powi(2) + (points[i].1 - points[j].1).powi(2)).sqrt()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn enumeration_dominates_random_distributions(
        points in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 2..6),
        samples in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 6), 20),
    ) {
        let dist = random_metric(&points);
        let d = points.len();
        let sol = maximize_spread(&dist).unwrap();
        for w in samples {
            let mu = project_to_simplex(&w[..d]);
            prop_assert!(spread(&mu, &dist) <= sol.value + 1e-12);
        }
        prop_assert!((spread(sol.mu.as_slice(), &dist) - sol.value).abs() < 1e-12);
    }

    #[test]
    fn exact_and_float_paths_agree(entries in prop::collection::vec(1i64..20, 6)) {
        // Symmetric 4×4 distances with entries in [1, 2): always a metric.
        let mut k = entries.iter();
        let mut e = Matrix::filled(4, 4, r(0, 1));
        for i in 0..4 {
            for j in (i + 1)..4 {
                let v = r(20 + *k.next().unwrap(), 20);
                e[(i, j)] = v.clone();
                e[(j, i)] = v;
            }
        }
        let exact = maximize_spread_exact(&e).unwrap();
        let float = maximize_spread(&e.to_f64()).unwrap();
        prop_assert!((exact.value.to_f64() - float.value).abs() < 1e-12);
        for (a, b) in exact.mu.iter().zip(float.mu.as_slice()) {
            prop_assert!((a.to_f64() - b).abs() < 1e-9);
        }
    }

    #[test]
    fn projection_lands_on_the_simplex(v in prop::collection::vec(-3.0f64..3.0, 1..8)) {
        let p = project_to_simplex(&v);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|&x| x >= 0.0));
    }
}

#[test]
fn linear_quadratic_program_picks_a_vertex() {
    let h = Matrix::filled(3, 3, r(0, 1));
    let sol = maximize_quadratic(&h, &[r(1, 1), r(3, 1), r(2, 1)]).unwrap();
    assert_eq!(sol.mu, vec![r(0, 1), r(1, 1), r(0, 1)]);
}

#[test]
fn non_metric_input_rejected() {
    let bad = Matrix::from_rows(vec![vec![0.0, 1.0], vec![2.0, 0.0]]).unwrap();
    assert!(matches!(maximize_spread(&bad), Err(Error::Input(_))));
}

fn market(a: [f64; 2]) -> RectangleMarket {
    RectangleMarket { b: [0.0, 0.0], c: [4.0, 0.0], d: [0.0, 3.0], e: [4.0, 3.0], a }
}

/// `∫∫‖x−y‖² μμ − ∫‖x−A‖² μ` by direct double summation.
fn market_value(points: &[[f64; 2]], w: &[f64], a: [f64; 2]) -> f64 {
    let sq = |p: [f64; 2], q: [f64; 2]| (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
    let mut v = 0.0;
    for (i, p) in points.iter().enumerate() {
        for (j, q) in points.iter().enumerate() {
            v += w[i] * w[j] * sq(*p, *q);
        }
        v -= w[i] * sq(*p, a);
    }
    v
}

#[test]
fn market_closed_form_beats_random_grid_distributions() {
    let m = market([2.5, 2.0]);
    let sol = market_place_solution(&m).unwrap();
    let corners = m.corners();
    assert!((market_value(&corners, &sol.masses, m.a) - sol.value).abs() < 1e-12);
    let grid: Vec<[f64; 2]> = (0..9)
        .flat_map(|i| (0..9).map(move |j| [4.0 * i as f64 / 8.0, 3.0 * j as f64 / 8.0]))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..10_000 {
        // Alternate dense draws with sparse ones concentrated on a few points.
        let w: Vec<f64> = if trial % 2 == 0 {
            (0..81).map(|_| rng.gen::<f64>()).collect()
        } else {
            let mut w = vec![0.0; 81];
            for _ in 0..rng.gen_range(1..=5) {
                w[rng.gen_range(0..81)] += rng.gen::<f64>();
            }
            w
        };
        let s: f64 = w.iter().sum();
        let w: Vec<f64> = w.iter().map(|v| v / s).collect();
        assert!(market_value(&grid, &w, m.a) <= sol.value + 1e-12);
    }
}

#[test]
fn centered_vendor_spreads_mass_evenly() {
    let sol = market_place_solution(&market([2.0, 1.5])).unwrap();
    assert_eq!(sol.masses, [0.25; 4]);
    assert!(market_place_solution(&market([5.0, 1.0])).is_err());
}

#[test]
fn deterministic_noise_reduces_to_the_static_problem() {
    let spec = CommonNoiseSpec { alphas: vec![r(1, 1)], probs: vec![r(1, 1)], gamma: 9 };
    let m = spec.moments();
    assert_eq!(m.m2, r(0, 1));
    assert_eq!(m.m3, r(64, 1));
    let sol = optimize_common_noise(&grid_distance_exact(), &spec).unwrap();
    assert_eq!(sol.nu, grid_optimum_exact());
}

#[test]
fn uninformative_noise_leaves_a_constant_objective() {
    // With α ≡ 1/γ both m2 and m3 vanish, so every ν is optimal; the solver
    // returns the lexicographically smallest maximizer, a vertex.
    let dist = grid_distance_exact();
    let spec = CommonNoiseSpec { alphas: vec![r(1, 9)], probs: vec![r(1, 1)], gamma: 9 };
    let m = spec.moments();
    assert_eq!((m.m2.clone(), m.m3.clone()), (r(0, 1), r(0, 1)));
    let sol = optimize_common_noise(&dist, &spec).unwrap();
    let total = dist.as_slice().iter().fold(r(0, 1), |a, b| a + b.clone());
    assert_eq!(sol.objective, m.m1 * total);
    assert_eq!(sol.nu.iter().filter(|v| **v == r(1, 1)).count(), 1);
}

#[test]
fn two_point_noise_matches_brute_force() {
    // Three grid nodes 0, 1, 2 (a row of the grid) with every node reachable.
    let full = grid_distance();
    let dist = Matrix::from_fn(3, 3, |i, j| full[(i, j)]);
    let spec = CommonNoiseSpec { alphas: vec![0.6, 1.0], probs: vec![0.5, 0.5], gamma: 3 };
    let sol = optimize_common_noise(&dist, &spec).unwrap();
    let m = spec.moments();
    let col: Vec<f64> = (0..3).map(|j| (0..3).map(|i| dist[(i, j)]).sum()).collect();
    let total: f64 = col.iter().sum();
    let objective = |nu: &[f64]| {
        let lin: f64 = col.iter().zip(nu).map(|(c, v)| c * v).sum();
        m.m1 * total + 2.0 * m.m2 * lin + m.m3 * spread(nu, &dist)
    };
    let (best, _) = brute_force_3(objective, 400);
    assert!((sol.objective - best).abs() < 1e-4);
    assert!(sol.objective >= best - 1e-12);
}

#[test]
fn two_point_noise_on_the_full_grid_agrees_with_search() {
    let dist = grid_distance();
    let spec = CommonNoiseSpec { alphas: vec![0.6, 1.0], probs: vec![0.5, 0.5], gamma: 3 };
    let sol = optimize_common_noise(&dist, &spec).unwrap();
    let m = spec.moments();
    let col: Vec<f64> = (0..9).map(|j| (0..9).map(|i| dist[(i, j)]).sum()).collect();
    let total: f64 = col.iter().sum();
    let objective = |nu: &[f64]| {
        let lin: f64 = col.iter().zip(nu).map(|(c, v)| c * v).sum();
        m.m1 * total + 2.0 * m.m2 * lin + m.m3 * spread(nu, &dist)
    };
    let search = maximize_static(&objective, 9, &SearchOptions::default()).unwrap();
    assert!((search.value - sol.objective).abs() < 1e-6);
}

#[test]
fn identical_rows_policy() {
    let acts = AdmissibleActions::from_graph(&Graph::complete(3).unwrap()).unwrap();
    let nu = SimplexVector::new(vec![0.2, 0.5, 0.3]).unwrap();
    let p = complete_graph_policy(&nu, &acts).unwrap();
    for mu in [SimplexVector::point_mass(3, 1), SimplexVector::new(vec![0.6, 0.1, 0.3]).unwrap()] {
        let margin = p.matrix().left_mul(mu.as_slice());
        for (a, b) in margin.iter().zip(nu.as_slice()) {
            assert!((a - b).abs() < 1e-15);
        }
    }
    let vertex = complete_graph_policy(&SimplexVector::point_mass(3, 2), &acts).unwrap();
    assert!((0..3).all(|x| vertex.row(x) == [0.0, 0.0, 1.0]));

    let path = AdmissibleActions::from_graph(&Graph::lattice(1, 3).unwrap()).unwrap();
    assert!(matches!(complete_graph_policy(&nu, &path), Err(Error::Infeasible(_))));
}
