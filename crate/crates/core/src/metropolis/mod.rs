//! Detailed-balance kernels with a prescribed stationary law on a graph, and
//! their inversion into an action policy under the intended-move dynamics.

use crate::error::{input, Error, Result};
use crate::matrix::Matrix;
use crate::model::{kernel_from_policy, AdmissibleActions, ConditionalPolicy, Graph, SimplexVector, TransitionModel};
use crate::numeric::Scalar;

/// Row-stochastic kernel satisfying detailed balance with respect to `mu`.
#[derive(Debug, Clone, PartialEq)]
pub struct BalanceKernel<T> {
    pub p: Matrix<T>,
    pub kappa: T,
    /// `max |μ(x)P(x,y) − μ(y)P(y,x)|`.
    pub balance_residual: f64,
}

fn check_target<T: Scalar>(mu: &[T], graph: &Graph) -> Result<()> {
    if mu.len() != graph.d() {
        return input(format!("target has {} states, graph has {}", mu.len(), graph.d()));
    }
    if let Some(x) = mu.iter().position(|w| *w <= T::zero()) {
        return input(format!("target mass at state {x} must be positive"));
    }
    if !graph.is_connected() {
        return Err(Error::Infeasible(format!(
            "graph is not connected (isolated nodes: {:?})",
            graph.isolated_nodes()
        )));
    }
    Ok(())
}

/// Acceptance mass `Σ_{y~x} min(μ(y)/μ(x), 1)` of each state.
fn acceptance_mass<T: Scalar>(mu: &[T], graph: &Graph) -> Vec<T> {
    (0..mu.len())
        .map(|x| {
            let mut s = T::zero();
            for &y in graph.neighbors(x) {
                s = s + T::min_of(mu[y].clone() / mu[x].clone(), T::one());
            }
            s
        })
        .collect()
}

/// Largest proposal weight keeping every diagonal entry nonnegative.
pub fn max_kappa<T: Scalar>(mu: &[T], graph: &Graph) -> Result<T> {
    check_target(mu, graph)?;
    let mut best: Option<T> = None;
    for s in acceptance_mass(mu, graph) {
        if s > T::zero() {
            let k = T::one() / s;
            best = Some(match best {
                Some(b) => T::min_of(b, k),
                None => k,
            });
        }
    }
    best.ok_or_else(|| Error::Infeasible("graph has no edges".into()))
}

/// Half of [`max_kappa`].
pub fn default_kappa<T: Scalar>(mu: &[T], graph: &Graph) -> Result<T> {
    Ok(max_kappa(mu, graph)? / T::from_int(2))
}

/// `P(x,y) = κ min(μ(y)/μ(x), 1)` on edges, with the diagonal completing rows.
pub fn build_balance_kernel<T: Scalar>(mu: &[T], graph: &Graph, kappa: T) -> Result<BalanceKernel<T>> {
    check_target(mu, graph)?;
    if kappa <= T::zero() {
        return Err(Error::Parameter("proposal weight must be positive".into()));
    }
    let d = mu.len();
    let mut p = Matrix::zeros(d, d);
    for x in 0..d {
        let mut off = T::zero();
        for &y in graph.neighbors(x) {
            let v = kappa.clone() * T::min_of(mu[y].clone() / mu[x].clone(), T::one());
            off = off + v.clone();
            p[(x, y)] = v;
        }
        let diag = T::one() - off;
        if diag < T::zero() && !diag.is_negligible(1e-15) {
            return Err(Error::Parameter(format!(
                "proposal weight {:?} too large: row {x} would get diagonal {}",
                kappa.to_f64(),
                diag.to_f64()
            )));
        }
        p[(x, x)] = if diag < T::zero() { T::zero() } else { diag };
    }
    let mut residual = 0.0_f64;
    for x in 0..d {
        for y in 0..d {
            let flow = mu[x].clone() * p[(x, y)].clone() - mu[y].clone() * p[(y, x)].clone();
            residual = residual.max(flow.to_f64().abs());
        }
    }
    Ok(BalanceKernel {
        p,
        kappa,
        balance_residual: residual,
    })
}

/// Bounds on the success probability `α` of intended moves.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityBounds<T> {
    /// Smallest `α` for which every inverted row is a distribution: the
    /// maximum of 1/2, `P(x,a)` and `1 − (|D(x)|−1) P(x,a)` over `a ∈ D(x)`.
    pub minimal: T,
    /// The simpler sufficient bound `max(1/2, P(x,a), 1 − P(x,a))` over
    /// `a ∈ D(x)`.
    pub sufficient: T,
}

fn check_support<T: Scalar>(p: &Matrix<T>, actions: &AdmissibleActions) -> Result<()> {
    if p.rows() != actions.d() || p.cols() != actions.d() || actions.m() != actions.d() {
        return input("kernel, action sets and state space must share one size");
    }
    for x in 0..p.rows() {
        for y in 0..p.cols() {
            if p[(x, y)] != T::zero() && !actions.contains(x, y) {
                return Err(Error::Infeasible(format!(
                    "kernel moves from {x} to {y}, which is not an admissible target"
                )));
            }
        }
    }
    Ok(())
}

pub fn feasibility_bounds<T: Scalar>(p: &Matrix<T>, actions: &AdmissibleActions) -> Result<FeasibilityBounds<T>> {
    check_support(p, actions)?;
    let half = T::ratio(1, 2);
    let mut minimal = half.clone();
    let mut sufficient = half;
    for x in 0..p.rows() {
        let set = actions.of(x);
        if set.len() == 1 {
            continue;
        }
        let k1 = T::from_int(set.len() as i64 - 1);
        for &a in set {
            let v = p[(x, a)].clone();
            minimal = T::max_of(minimal, v.clone());
            minimal = T::max_of(minimal, T::one() - k1.clone() * v.clone());
            sufficient = T::max_of(sufficient, v.clone());
            sufficient = T::max_of(sufficient, T::one() - v);
        }
    }
    Ok(FeasibilityBounds { minimal, sufficient })
}

/// `Q̄(a|x) = ((|D(x)|−1) P(x,a) − (1−α)) / (α|D(x)| − 1)` on `D(x)`; states
/// with a single admissible action keep it.
pub fn invert_kernel<T: Scalar>(p: &Matrix<T>, alpha: T, actions: &AdmissibleActions) -> Result<Matrix<T>> {
    let bounds = feasibility_bounds(p, actions)?;
    if alpha > T::one() {
        return Err(Error::Parameter(format!("alpha = {} exceeds 1", alpha.to_f64())));
    }
    if alpha < bounds.minimal && !(alpha.clone() - bounds.minimal.clone()).is_negligible(1e-15) {
        return Err(Error::Infeasible(format!(
            "alpha = {} is below the feasibility bound {}",
            alpha.to_f64(),
            bounds.minimal.to_f64()
        )));
    }
    let d = p.rows();
    let mut q = Matrix::zeros(d, d);
    for x in 0..d {
        let set = actions.of(x);
        if set.len() == 1 {
            q[(x, set[0])] = T::one();
            continue;
        }
        let k = T::from_int(set.len() as i64);
        let k1 = T::from_int(set.len() as i64 - 1);
        let denom = alpha.clone() * k - T::one();
        if denom.is_negligible(1e-15) {
            return Err(Error::Numerical(format!(
                "state {x}: alpha * |D(x)| = 1 makes the inversion singular"
            )));
        }
        for &a in set {
            let v = (k1.clone() * p[(x, a)].clone() - (T::one() - alpha.clone())) / denom.clone();
            q[(x, a)] = if v < T::zero() { T::zero() } else { v };
        }
    }
    Ok(q)
}

/// Inverts in floating point and confirms the forward map reproduces `p`.
pub fn invert_to_policy(p: &Matrix<f64>, alpha: f64, actions: &AdmissibleActions) -> Result<ConditionalPolicy> {
    let q = invert_kernel(p, alpha, actions)?;
    let policy = ConditionalPolicy::new(q, actions)?;
    let transition = TransitionModel::alpha_intent(actions.clone(), alpha)?;
    let forward = kernel_from_policy(&policy, &transition, &SimplexVector::uniform(p.rows()), None)?;
    let err = forward.max_abs_diff(p);
    if err > 1e-12 {
        return Err(Error::Numerical(format!(
            "inverted policy reproduces the kernel only to {err:e}"
        )));
    }
    Ok(policy)
}

/// `‖μP − μ‖₁`.
pub fn verify_stationarity<T: Scalar>(p: &Matrix<T>, mu: &[T]) -> f64 {
    p.left_mul(mu)
        .iter()
        .zip(mu)
        .map(|(a, b)| (a.clone() - b.clone()).to_f64().abs())
        .sum()
}

fn reachable<T: Scalar>(p: &Matrix<T>, from: usize, transpose: bool) -> Vec<bool> {
    let d = p.rows();
    let mut seen = vec![false; d];
    let mut stack = vec![from];
    seen[from] = true;
    while let Some(x) = stack.pop() {
        for y in 0..d {
            let w = if transpose { &p[(y, x)] } else { &p[(x, y)] };
            if *w > T::zero() && !seen[y] {
                seen[y] = true;
                stack.push(y);
            }
        }
    }
    seen
}

/// Every state reaches every other with positive probability.
pub fn is_irreducible<T: Scalar>(p: &Matrix<T>) -> bool {
    p.rows() > 0
        && reachable(p, 0, false).into_iter().all(|s| s)
        && reachable(p, 0, true).into_iter().all(|s| s)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Period of an irreducible chain (gcd of cycle lengths), `None` otherwise.
pub fn period<T: Scalar>(p: &Matrix<T>) -> Option<usize> {
    if !is_irreducible(p) {
        return None;
    }
    let d = p.rows();
    let mut level = vec![usize::MAX; d];
    level[0] = 0;
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(x) = queue.pop_front() {
        for y in 0..d {
            if p[(x, y)] > T::zero() && level[y] == usize::MAX {
                level[y] = level[x] + 1;
                queue.push_back(y);
            }
        }
    }
    let mut g = 0;
    for x in 0..d {
        for y in 0..d {
            if p[(x, y)] > T::zero() {
                g = gcd(g, (level[x] + 1).abs_diff(level[y]));
            }
        }
    }
    Some(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Rational;

    fn r(n: i64, d: i64) -> Rational {
        Rational::ratio(n, d)
    }

    #[test]
    fn two_node_kernel() {
        let g = Graph::complete(2).unwrap();
        let k = build_balance_kernel(&[r(2, 3), r(1, 3)], &g, r(3, 10)).unwrap();
        assert_eq!(k.p[(0, 1)], r(3, 20));
        assert_eq!(k.p[(1, 0)], r(3, 10));
        assert_eq!(k.balance_residual, 0.0);
    }

    #[test]
    fn oversized_kappa_names_the_row() {
        let g = Graph::complete(3).unwrap();
        let err = build_balance_kernel(&[1.0 / 3.0; 3], &g, 0.6).unwrap_err();
        assert!(matches!(err, Error::Parameter(ref m) if m.contains("row 0")));
    }

    #[test]
    fn zero_target_mass_rejected() {
        let g = Graph::complete(2).unwrap();
        assert!(build_balance_kernel(&[1.0, 0.0], &g, 0.1).is_err());
    }

    #[test]
    fn inversion_of_a_three_action_row() {
        let acts = AdmissibleActions::uniform(3, 3).unwrap();
        let p = Matrix::from_rows(vec![
            vec![r(6, 10), r(3, 10), r(1, 10)],
            vec![r(1, 3), r(1, 3), r(1, 3)],
            vec![r(1, 3), r(1, 3), r(1, 3)],
        ])
        .unwrap();
        let q = invert_kernel(&p, r(8, 10), &acts).unwrap();
        assert_eq!(q.row(0), &[r(5, 7), r(2, 7), r(0, 1)]);
        assert_eq!(q.row(1), &[r(1, 3), r(1, 3), r(1, 3)]);
        assert!(invert_kernel(&p, r(79, 100), &acts).is_err());
    }

    #[test]
    fn singular_denominator_reported() {
        let acts = AdmissibleActions::uniform(2, 2).unwrap();
        let p = Matrix::filled(2, 2, r(1, 2));
        assert!(matches!(invert_kernel(&p, r(1, 2), &acts), Err(Error::Numerical(_))));
    }

    #[test]
    fn identity_is_reducible_and_cycle_is_periodic() {
        let id = Matrix::<f64>::identity(2);
        assert!(!is_irreducible(&id));
        let flip = Matrix::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(period(&flip), Some(2));
        let lazy = Matrix::from_rows(vec![vec![0.5, 0.5], vec![1.0, 0.0]]).unwrap();
        assert_eq!(period(&lazy), Some(1));
    }
}
