use std::fmt;
use std::sync::Arc;

use super::measure::{SimplexVector, SIMPLEX_TOL};
use super::space::AdmissibleActions;
use crate::error::{input, Error, Result};

/// Next-state law `p^{x,a,μ}` as a callable: `(x, a, μ) -> distribution over S`.
pub type KernelFn = dyn Fn(usize, usize, &SimplexVector) -> Vec<f64> + Send + Sync;

/// One transition law over next states, for a fixed common-noise value.
#[derive(Clone)]
pub enum Kernel {
    /// `p[x][a]` over next states, independent of the population.
    Tabular(Vec<Vec<SimplexVector>>),
    /// Move to the intended neighbour `a` with probability `alpha`, otherwise
    /// uniformly to one of the other members of `D(x)`. Requires `A = S`.
    AlphaIntent { alpha: f64 },
    /// Arbitrary, possibly population-dependent law.
    Custom(Arc<KernelFn>),
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel::Tabular(p) => f.debug_tuple("Tabular").field(p).finish(),
            Kernel::AlphaIntent { alpha } => f.debug_struct("AlphaIntent").field("alpha", alpha).finish(),
            Kernel::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// A common-noise outcome: probability, a numeric label for reporting, and
/// the kernel it selects.
#[derive(Debug, Clone)]
pub struct NoiseOutcome {
    pub prob: f64,
    pub value: f64,
    pub kernel: Kernel,
}

/// Transition law of a single agent, optionally modulated by a finite common
/// noise `z⁰`.
#[derive(Debug, Clone)]
pub struct TransitionModel {
    d: usize,
    actions: AdmissibleActions,
    outcomes: Vec<NoiseOutcome>,
    common_noise: bool,
}

impl TransitionModel {
    pub fn new(d: usize, actions: AdmissibleActions, kernel: Kernel) -> Result<Self> {
        let model = Self {
            d,
            actions,
            outcomes: vec![NoiseOutcome {
                prob: 1.0,
                value: 0.0,
                kernel,
            }],
            common_noise: false,
        };
        model.validate()?;
        Ok(model)
    }

    /// Tabular model `p[x][a]`; rows for inadmissible actions are ignored but must
    /// still be distributions.
    pub fn tabular(actions: AdmissibleActions, p: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let d = actions.d();
        if p.len() != d {
            return input(format!("tabular transitions list {} states, expected {d}", p.len()));
        }
        let mut rows = Vec::with_capacity(d);
        for (x, px) in p.into_iter().enumerate() {
            if px.len() != actions.m() {
                return input(format!("state {x}: {} action rows, expected {}", px.len(), actions.m()));
            }
            let mut r = Vec::with_capacity(px.len());
            for (a, w) in px.into_iter().enumerate() {
                if w.len() != d {
                    return input(format!("p[{x}][{a}] has {} entries, expected {d}", w.len()));
                }
                r.push(SimplexVector::new(w).map_err(|e| Error::Input(format!("p[{x}][{a}]: {e}")))?);
            }
            rows.push(r);
        }
        Self::new(d, actions, Kernel::Tabular(rows))
    }

    pub fn alpha_intent(actions: AdmissibleActions, alpha: f64) -> Result<Self> {
        Self::new(actions.d(), actions, Kernel::AlphaIntent { alpha })
    }

    /// Common-noise model: `outcomes` lists `(probability, label, kernel)`.
    pub fn with_common_noise(
        d: usize,
        actions: AdmissibleActions,
        outcomes: Vec<NoiseOutcome>,
    ) -> Result<Self> {
        if outcomes.is_empty() {
            return input("common noise needs at least one outcome");
        }
        let model = Self {
            d,
            actions,
            outcomes,
            common_noise: true,
        };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        if self.actions.d() != self.d {
            return input("action sets and state space disagree on the number of states");
        }
        let total: f64 = self.outcomes.iter().map(|o| o.prob).sum();
        if self.outcomes.iter().any(|o| !(o.prob >= 0.0)) || (total - 1.0).abs() > SIMPLEX_TOL {
            return input("common-noise probabilities must be nonnegative and sum to 1");
        }
        for o in &self.outcomes {
            match &o.kernel {
                Kernel::AlphaIntent { alpha } => {
                    if !(0.0..=1.0).contains(alpha) {
                        return input(format!("alpha = {alpha} outside [0,1]"));
                    }
                    if self.actions.m() != self.d {
                        return input("alpha-intent model needs actions labelled by states");
                    }
                }
                Kernel::Tabular(p) => {
                    if p.len() != self.d || p.iter().any(|r| r.len() != self.actions.m()) {
                        return input("tabular kernel shape mismatch");
                    }
                    if p.iter().flatten().any(|w| w.len() != self.d) {
                        return input("tabular kernel rows must be distributions over S");
                    }
                }
                Kernel::Custom(_) => {}
            }
        }
        Ok(())
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn actions(&self) -> &AdmissibleActions {
        &self.actions
    }

    pub fn outcomes(&self) -> &[NoiseOutcome] {
        &self.outcomes
    }

    pub fn has_common_noise(&self) -> bool {
        self.common_noise
    }

    /// True when no kernel can depend on the population distribution.
    pub fn is_population_independent(&self) -> bool {
        self.outcomes
            .iter()
            .all(|o| !matches!(o.kernel, Kernel::Custom(_)))
    }

    /// Resolves the common-noise index: required iff the model has a noise layer.
    pub fn outcome_index(&self, z0: Option<usize>) -> Result<usize> {
        match (self.common_noise, z0) {
            (false, None) | (false, Some(0)) => Ok(0),
            (false, Some(z)) => input(format!("model has no common noise but z0 = {z} was given")),
            (true, None) => input("model has common noise; a z0 outcome is required"),
            (true, Some(z)) if z < self.outcomes.len() => Ok(z),
            (true, Some(z)) => input(format!("z0 index {z} out of range")),
        }
    }

    /// `p^{x,a,μ,z⁰}(·)` written into `out` (length d).
    pub fn next_law_into(&self, x: usize, a: usize, mu: &SimplexVector, z: usize, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        match &self.outcomes[z].kernel {
            Kernel::Tabular(p) => out.copy_from_slice(p[x][a].as_slice()),
            Kernel::AlphaIntent { alpha } => {
                let set = self.actions.of(x);
                if set.len() == 1 {
                    out[set[0]] = 1.0;
                } else {
                    let rest = (1.0 - alpha) / (set.len() - 1) as f64;
                    for &y in set {
                        out[y] = if y == a { *alpha } else { rest };
                    }
                }
            }
            Kernel::Custom(f) => {
                let v = f(x, a, mu);
                out.copy_from_slice(&v);
            }
        }
    }

    pub fn next_law(&self, x: usize, a: usize, mu: &SimplexVector, z: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.d];
        self.next_law_into(x, a, mu, z, &mut out);
        out
    }

    /// Checks every `(x, a ∈ D(x), z)` law at `mu` is a distribution; used for
    /// custom kernels.
    pub fn check_laws(&self, mu: &SimplexVector) -> Result<()> {
        for z in 0..self.outcomes.len() {
            for x in 0..self.d {
                for &a in self.actions.of(x) {
                    let law = self.next_law(x, a, mu, z);
                    if law.len() != self.d {
                        return input(format!("law at ({x},{a}) has wrong length"));
                    }
                    SimplexVector::with_tolerance(law, 1e-10)
                        .map_err(|e| Error::Input(format!("law at ({x},{a},z{z}): {e}")))?;
                }
            }
        }
        Ok(())
    }
}
