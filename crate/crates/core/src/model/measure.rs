use serde::{Deserialize, Serialize};

use super::space::AdmissibleActions;
use crate::error::{input, Error, Result};
use crate::matrix::Matrix;

/// Tolerance on freshly constructed distributions.
pub const SIMPLEX_TOL: f64 = 1e-12;
/// Tolerance on distributions produced by arithmetic (kernels, flows).
pub const COMPUTED_TOL: f64 = 1e-10;

/// A probability vector on `{0..d}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SimplexVector {
    weights: Vec<f64>,
}

impl SimplexVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(weights, SIMPLEX_TOL)
    }

    pub fn with_tolerance(weights: Vec<f64>, tol: f64) -> Result<Self> {
        if weights.is_empty() {
            return input("distribution over zero states");
        }
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !w.is_finite() || **w < -tol)
        {
            return input(format!("weight {i} = {w} is negative or not finite"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > tol {
            return input(format!("weights sum to {total}, not 1"));
        }
        Ok(Self {
            weights: weights.into_iter().map(|w| w.max(0.0)).collect(),
        })
    }

    /// Normalizes nonnegative weights with positive total.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return input("cannot normalize: weights must be nonnegative with positive sum");
        }
        Self::new(weights.into_iter().map(|w| w / total).collect())
    }

    pub(crate) fn derived(weights: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(weights, COMPUTED_TOL)
            .map_err(|e| Error::Numerical(format!("derived distribution left the simplex: {e}")))
    }

    pub fn point_mass(d: usize, x: usize) -> Self {
        let mut weights = vec![0.0; d];
        weights[x] = 1.0;
        Self { weights }
    }

    pub fn uniform(d: usize) -> Self {
        Self {
            weights: vec![1.0 / d as f64; d],
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, x: usize) -> f64 {
        self.weights[x]
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&x| self.weights[x] > 0.0).collect()
    }

    pub fn l1_distance(&self, other: &Self) -> f64 {
        self.weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }

    pub fn total_variation(&self, other: &Self) -> f64 {
        0.5 * self.l1_distance(other)
    }

    pub fn mix(&self, lambda: f64, other: &Self) -> Result<Self> {
        if self.len() != other.len() || !(0.0..=1.0).contains(&lambda) {
            return input("mixture needs equal lengths and lambda in [0,1]");
        }
        Self::derived(
            self.weights
                .iter()
                .zip(&other.weights)
                .map(|(a, b)| lambda * a + (1.0 - lambda) * b)
                .collect(),
        )
    }

    /// `mu * P` for a row-stochastic `P`.
    pub fn push_forward(&self, kernel: &Matrix<f64>) -> Result<Self> {
        if kernel.rows() != self.len() {
            return Err(Error::Consistency(format!(
                "kernel has {} rows, distribution has {} states",
                kernel.rows(),
                self.len()
            )));
        }
        Self::derived(kernel.left_mul(&self.weights))
    }
}

impl TryFrom<Vec<f64>> for SimplexVector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SimplexVector> for Vec<f64> {
    fn from(s: SimplexVector) -> Self {
        s.weights
    }
}

/// Occupation counts of `n` agents over `d` states.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    counts: Vec<usize>,
    n: usize,
}

impl EmpiricalMeasure {
    pub fn from_counts(counts: Vec<usize>) -> Result<Self> {
        let n: usize = counts.iter().sum();
        if counts.is_empty() || n == 0 {
            return input("empirical measure needs at least one agent and one state");
        }
        Ok(Self { counts, n })
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.counts.len()
    }

    pub fn to_simplex(&self) -> SimplexVector {
        SimplexVector {
            weights: self
                .counts
                .iter()
                .map(|&c| c as f64 / self.n as f64)
                .collect(),
        }
    }
}

/// States (and optionally chosen actions) of `N` labelled agents.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentConfiguration {
    states: Vec<usize>,
    actions: Option<Vec<usize>>,
}

impl AgentConfiguration {
    pub fn new(states: Vec<usize>) -> Result<Self> {
        if states.is_empty() {
            return input("configuration needs at least one agent");
        }
        Ok(Self {
            states,
            actions: None,
        })
    }

    pub fn with_actions(
        states: Vec<usize>,
        actions: Vec<usize>,
        admissible: &AdmissibleActions,
    ) -> Result<Self> {
        if states.len() != actions.len() {
            return input("states and actions differ in length");
        }
        for (i, (&x, &a)) in states.iter().zip(&actions).enumerate() {
            if x >= admissible.d() {
                return input(format!("agent {i}: state {x} outside 0..{}", admissible.d()));
            }
            if !admissible.contains(x, a) {
                return input(format!("agent {i}: action {a} not admissible in state {x}"));
            }
        }
        let mut cfg = Self::new(states)?;
        cfg.actions = Some(actions);
        Ok(cfg)
    }

    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn actions(&self) -> Option<&[usize]> {
        self.actions.as_deref()
    }

    pub fn n(&self) -> usize {
        self.states.len()
    }
}

/// Action kernel `Q̄(a|x)`: one distribution over actions per state, supported
/// on `D(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalPolicy {
    rows: Matrix<f64>,
}

impl ConditionalPolicy {
    pub fn new(rows: Matrix<f64>, actions: &AdmissibleActions) -> Result<Self> {
        Self::checked(rows, actions, SIMPLEX_TOL)
    }

    pub(crate) fn checked(rows: Matrix<f64>, actions: &AdmissibleActions, tol: f64) -> Result<Self> {
        if rows.rows() != actions.d() || rows.cols() != actions.m() {
            return input(format!(
                "policy is {}x{}, expected {}x{}",
                rows.rows(),
                rows.cols(),
                actions.d(),
                actions.m()
            ));
        }
        let mut rows = rows;
        for x in 0..actions.d() {
            SimplexVector::with_tolerance(rows.row(x).to_vec(), tol)
                .map_err(|e| Error::Input(format!("policy row {x}: {e}")))?;
            for a in 0..actions.m() {
                let w = rows[(x, a)];
                if !actions.contains(x, a) && w.abs() > tol {
                    return input(format!("policy puts mass {w} on inadmissible action {a} in state {x}"));
                }
                rows[(x, a)] = if actions.contains(x, a) { w.max(0.0) } else { 0.0 };
            }
        }
        Ok(Self { rows })
    }

    /// Point-mass policy choosing `choice[x]` in state `x`.
    pub fn deterministic(choice: &[usize], actions: &AdmissibleActions) -> Result<Self> {
        if choice.len() != actions.d() {
            return input("one action per state required");
        }
        let mut rows = Matrix::zeros(actions.d(), actions.m());
        for (x, &a) in choice.iter().enumerate() {
            if !actions.contains(x, a) {
                return input(format!("action {a} not admissible in state {x}"));
            }
            rows[(x, a)] = 1.0;
        }
        Ok(Self { rows })
    }

    /// Uniform over `D(x)` in every state.
    pub fn uniform(actions: &AdmissibleActions) -> Self {
        let mut rows = Matrix::zeros(actions.d(), actions.m());
        for x in 0..actions.d() {
            let set = actions.of(x);
            for &a in set {
                rows[(x, a)] = 1.0 / set.len() as f64;
            }
        }
        Self { rows }
    }

    pub fn d(&self) -> usize {
        self.rows.rows()
    }

    pub fn m(&self) -> usize {
        self.rows.cols()
    }

    pub fn row(&self, x: usize) -> &[f64] {
        self.rows.row(x)
    }

    pub fn prob(&self, x: usize, a: usize) -> f64 {
        self.rows[(x, a)]
    }

    pub fn matrix(&self) -> &Matrix<f64> {
        &self.rows
    }

    pub fn mix(&self, lambda: f64, other: &Self) -> Result<Self> {
        if self.d() != other.d() || self.m() != other.m() || !(0.0..=1.0).contains(&lambda) {
            return input("policy mixture needs equal shapes and lambda in [0,1]");
        }
        Ok(Self {
            rows: Matrix::from_fn(self.d(), self.m(), |x, a| {
                lambda * self.rows[(x, a)] + (1.0 - lambda) * other.rows[(x, a)]
            }),
        })
    }
}

/// Joint state-action distribution `Q` on `D = {(x,a): a ∈ D(x)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointMeasure {
    q: Matrix<f64>,
}

impl JointMeasure {
    pub fn new(q: Matrix<f64>, actions: &AdmissibleActions) -> Result<Self> {
        if q.rows() != actions.d() || q.cols() != actions.m() {
            return input("joint measure shape does not match the action sets");
        }
        let mut total = 0.0;
        for x in 0..q.rows() {
            for a in 0..q.cols() {
                let w = q[(x, a)];
                if !w.is_finite() || w < -SIMPLEX_TOL {
                    return input(format!("joint mass ({x},{a}) = {w} is negative"));
                }
                if !actions.contains(x, a) && w.abs() > SIMPLEX_TOL {
                    return input(format!("joint mass on inadmissible pair ({x},{a})"));
                }
                total += w;
            }
        }
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return input(format!("joint measure has total mass {total}"));
        }
        Ok(Self { q })
    }

    /// `Q = μ ⊗ Q̄`.
    pub fn from_policy(mu: &SimplexVector, policy: &ConditionalPolicy) -> Result<Self> {
        if mu.len() != policy.d() {
            return Err(Error::Consistency("distribution and policy sizes differ".into()));
        }
        Ok(Self {
            q: Matrix::from_fn(policy.d(), policy.m(), |x, a| mu.get(x) * policy.prob(x, a)),
        })
    }

    pub fn matrix(&self) -> &Matrix<f64> {
        &self.q
    }

    pub fn mass(&self, x: usize, a: usize) -> f64 {
        self.q[(x, a)]
    }

    pub fn margin(&self) -> Vec<f64> {
        (0..self.q.rows())
            .map(|x| self.q.row(x).iter().sum())
            .collect()
    }

    /// Conditional `Q̄(·|x) = Q(x,·)/μ(x)`; states without mass get the uniform
    /// row over `D(x)`.
    pub fn disintegrate(&self, actions: &AdmissibleActions) -> Result<ConditionalPolicy> {
        let uniform = ConditionalPolicy::uniform(actions);
        let rows = Matrix::from_fn(self.q.rows(), self.q.cols(), |x, a| {
            let m: f64 = self.q.row(x).iter().sum();
            if m > 0.0 {
                self.q[(x, a)] / m
            } else {
                uniform.prob(x, a)
            }
        });
        ConditionalPolicy::checked(rows, actions, COMPUTED_TOL)
    }
}
