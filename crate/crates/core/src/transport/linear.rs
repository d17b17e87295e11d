use super::one_dim::{wasserstein_1d, AtomMeasure};
use crate::error::{input, Error, Result};
use crate::numeric::{Rational, Scalar};

/// Upper bound on atoms carried by a measure during propagation.
pub const MAX_ATOMS: usize = 1 << 16;
const MAX_STATIONARY_ITERATIONS: usize = 10_000;

/// State-feedback policy `Q̄(·|x)` on actions in `[0,1]`.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicyFamily {
    /// `δ_{a0 + slope·x}`.
    AffinePoint { a0: Rational, slope: Rational },
    /// `λ(x)·first + (1 − λ(x))·second` with `λ(x) = w0 + slope·x`.
    Mixture {
        first: AtomMeasure<Rational>,
        second: AtomMeasure<Rational>,
        w0: Rational,
        slope: Rational,
    },
}

impl PolicyFamily {
    /// Lipschitz constant of `x ↦ Q̄(·|x)` in W₁.
    pub fn lipschitz(&self) -> Rational {
        match self {
            PolicyFamily::AffinePoint { slope, .. } => slope.clone().abs(),
            PolicyFamily::Mixture { first, second, slope, .. } => slope.clone().abs() * wasserstein_1d(first, second),
        }
    }

    fn at(&self, x: &Rational) -> Vec<(Rational, Rational)> {
        match self {
            PolicyFamily::AffinePoint { a0, slope } => vec![(a0.clone() + slope.clone() * x.clone(), Rational::one())],
            PolicyFamily::Mixture { first, second, w0, slope } => {
                let lambda = w0.clone() + slope.clone() * x.clone();
                let rest = Rational::one() - lambda.clone();
                first
                    .atoms()
                    .iter()
                    .map(|(a, w)| (a.clone(), w.clone() * lambda.clone()))
                    .chain(second.atoms().iter().map(|(a, w)| (a.clone(), w.clone() * rest.clone())))
                    .collect()
            }
        }
    }

    /// Mean action at `x` as `c0 + c1·x`.
    fn mean_coefficients(&self) -> (Rational, Rational) {
        match self {
            PolicyFamily::AffinePoint { a0, slope } => (a0.clone(), slope.clone()),
            PolicyFamily::Mixture { first, second, w0, slope } => {
                let (m1, m2) = (first.mean(), second.mean());
                (
                    w0.clone() * m1.clone() + (Rational::one() - w0.clone()) * m2.clone(),
                    slope.clone() * (m1 - m2),
                )
            }
        }
    }

    /// Range of actions over `x ∈ [0,1]`, and validity of the family there.
    fn action_range(&self) -> Result<(Rational, Rational)> {
        let unit = |v: &Rational| *v >= Rational::zero() && *v <= Rational::one();
        match self {
            PolicyFamily::AffinePoint { a0, slope } => {
                let ends = [a0.clone(), a0.clone() + slope.clone()];
                if !ends.iter().all(unit) {
                    return input("affine policy leaves the action interval [0,1]");
                }
                let (lo, hi) = if ends[0] <= ends[1] { (0, 1) } else { (1, 0) };
                Ok((ends[lo].clone(), ends[hi].clone()))
            }
            PolicyFamily::Mixture { first, second, w0, slope } => {
                if !unit(w0) || !unit(&(w0.clone() + slope.clone())) {
                    return input("mixture weight leaves [0,1] on the state interval");
                }
                let lo = Rational::min_of(first.min_position(), second.min_position());
                let hi = Rational::max_of(first.max_position(), second.max_position());
                Ok((lo, hi))
            }
        }
    }
}

/// Mean-field model on `S = A = [0,1]` with
/// `T(x, a, μ, z) = γ_S x + γ_A a + γ_W ∫ y μ(dy) + z`
/// and finitely many noise atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMFModel {
    pub gamma_s: Rational,
    pub gamma_a: Rational,
    pub gamma_w: Rational,
    pub policy: PolicyFamily,
    /// `(value, probability)` pairs.
    pub noise: Vec<(Rational, Rational)>,
}

impl LinearMFModel {
    /// Checks nonnegative coefficients, a valid noise law, and that the
    /// transition maps `[0,1]` into itself without clamping.
    pub fn new(
        gamma_s: Rational,
        gamma_a: Rational,
        gamma_w: Rational,
        policy: PolicyFamily,
        noise: Vec<(Rational, Rational)>,
    ) -> Result<Self> {
        for (name, g) in [("gamma_s", &gamma_s), ("gamma_a", &gamma_a), ("gamma_w", &gamma_w)] {
            if *g < Rational::zero() {
                return input(format!("{name} must be nonnegative"));
            }
        }
        if noise.is_empty() {
            return input("noise needs at least one atom");
        }
        let mut total = Rational::zero();
        for (_, p) in &noise {
            if *p < Rational::zero() {
                return input("noise probabilities must be nonnegative");
            }
            total = total + p.clone();
        }
        if total != Rational::one() {
            return input("noise probabilities must sum to 1");
        }
        let (amin, amax) = policy.action_range()?;
        let zmin = noise.iter().map(|n| n.0.clone()).fold(noise[0].0.clone(), Rational::min_of);
        let zmax = noise.iter().map(|n| n.0.clone()).fold(noise[0].0.clone(), Rational::max_of);
        let lo = gamma_a.clone() * amin + zmin;
        let hi = gamma_s.clone() + gamma_a.clone() * amax + gamma_w.clone() + zmax;
        if lo < Rational::zero() || hi > Rational::one() {
            return input(format!(
                "transition image [{}, {}] is not inside [0,1]",
                lo.to_f64(),
                hi.to_f64()
            ));
        }
        Ok(Self { gamma_s, gamma_a, gamma_w, policy, noise })
    }

    /// `γ = γ_W + γ_Q γ_A + γ_S`.
    pub fn gamma(&self) -> Rational {
        self.gamma_w.clone() + self.policy.lipschitz() * self.gamma_a.clone() + self.gamma_s.clone()
    }

    /// Exact pushforward of `mu` with the population mean frozen at `mean`.
    fn step_with_mean(&self, mu: &AtomMeasure<Rational>, mean: &Rational) -> Result<AtomMeasure<Rational>> {
        let mut atoms = Vec::new();
        for (x, w) in mu.atoms() {
            let base = self.gamma_s.clone() * x.clone() + self.gamma_w.clone() * mean.clone();
            for (a, q) in self.policy.at(x) {
                let shifted = base.clone() + self.gamma_a.clone() * a;
                let wq = w.clone() * q;
                for (z, pz) in &self.noise {
                    atoms.push((shifted.clone() + z.clone(), wq.clone() * pz.clone()));
                }
            }
        }
        let out = AtomMeasure::from_unsorted(atoms);
        if out.len() > MAX_ATOMS {
            return Err(Error::Capacity {
                what: "atom list",
                required: out.len() as u128,
                limit: MAX_ATOMS as u128,
            });
        }
        if out.min_position() < Rational::zero() || out.max_position() > Rational::one() {
            return Err(Error::Consistency("trajectory left the state interval [0,1]".into()));
        }
        Ok(out)
    }

    /// One step of the mean-field flow under `Q̄`.
    pub fn step(&self, mu: &AtomMeasure<Rational>) -> Result<AtomMeasure<Rational>> {
        self.step_with_mean(mu, &mu.mean())
    }

    /// Fixed point of the mean recursion, which is affine in the mean.
    pub fn stationary_mean(&self) -> Result<Rational> {
        let (c0, c1) = self.policy.mean_coefficients();
        let ez = self
            .noise
            .iter()
            .fold(Rational::zero(), |acc, (z, p)| acc + z.clone() * p.clone());
        let k = self.gamma_s.clone() + self.gamma_a.clone() * c1 + self.gamma_w.clone();
        if k == Rational::one() {
            return Err(Error::Numerical("mean recursion has unit slope".into()));
        }
        Ok((self.gamma_a.clone() * c0 + ez) / (Rational::one() - k))
    }

    /// Stationary measure: iterate the kernel with the mean frozen at its
    /// fixed point, starting from a point mass there, until successive
    /// iterates are within `1e-12` in W₁.
    pub fn stationary(&self) -> Result<AtomMeasure<Rational>> {
        let m = self.stationary_mean()?;
        let tol = Rational::ratio(1, 1_000_000_000_000);
        let mut mu = AtomMeasure::point(m.clone())?;
        for _ in 0..MAX_STATIONARY_ITERATIONS {
            let next = self.step_with_mean(&mu, &m)?;
            let w = wasserstein_1d(&mu, &next);
            mu = next;
            if w <= tol {
                return Ok(mu);
            }
        }
        Err(Error::IterationLimit {
            iterations: MAX_STATIONARY_ITERATIONS,
            residual: f64::NAN,
        })
    }
}

/// Per-step distances to the stationary measure and their ratios.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractionReport {
    pub gamma: f64,
    pub stationary: AtomMeasure<Rational>,
    /// True when the stationary measure is an exact fixed point.
    pub stationary_exact: bool,
    /// `W(μ_k, μ*)` for `k = 0..=steps`.
    pub distances: Vec<f64>,
    /// `W(μ_{k+1}, μ*) / W(μ_k, μ*)`, `None` once `W(μ_k, μ*)` is at the floor.
    pub ratios: Vec<Option<f64>>,
    pub max_ratio: f64,
    pub passed: bool,
}

/// Propagates `mu0` for `steps` steps and compares each distance ratio with
/// `γ + 1e-9`.
pub fn contraction_check(model: &LinearMFModel, mu0: &AtomMeasure<Rational>, steps: usize) -> Result<ContractionReport> {
    let gamma = model.gamma();
    if gamma >= Rational::one() {
        return Err(Error::Parameter(format!("gamma = {} is not below 1", gamma.to_f64())));
    }
    let stationary = model.stationary()?;
    let stationary_exact = wasserstein_1d(&model.step(&stationary)?, &stationary) == Rational::zero();
    // With an approximate fixed point, distances below this are noise.
    let floor = if stationary_exact {
        Rational::zero()
    } else {
        Rational::ratio(1, 1_000_000_000)
    };
    let bound = gamma.to_f64() + 1e-9;
    let mut mu = mu0.clone();
    let mut w = wasserstein_1d(&mu, &stationary);
    let mut distances = vec![w.to_f64()];
    let mut ratios = Vec::with_capacity(steps);
    let mut passed = true;
    let mut max_ratio: f64 = 0.0;
    for _ in 0..steps {
        mu = model.step(&mu)?;
        let next = wasserstein_1d(&mu, &stationary);
        distances.push(next.to_f64());
        if w > floor {
            let ratio = (next.clone() / w).to_f64();
            max_ratio = max_ratio.max(ratio);
            passed &= ratio <= bound;
            ratios.push(Some(ratio));
        } else {
            if stationary_exact && next > Rational::zero() {
                passed = false;
            }
            ratios.push(None);
        }
        w = next;
    }
    Ok(ContractionReport {
        gamma: gamma.to_f64(),
        stationary,
        stationary_exact,
        distances,
        ratios,
        max_ratio,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::ratio(n, d)
    }

    fn reference() -> LinearMFModel {
        LinearMFModel::new(
            r(3, 10),
            r(2, 10),
            r(2, 10),
            PolicyFamily::AffinePoint { a0: r(0, 1), slope: r(1, 2) },
            vec![(r(1, 10), r(1, 1))],
        )
        .unwrap()
    }

    #[test]
    fn reference_gamma_and_fixed_point() {
        let m = reference();
        assert_eq!(m.gamma(), r(3, 5));
        assert_eq!(m.stationary().unwrap(), AtomMeasure::point(r(1, 4)).unwrap());
    }

    #[test]
    fn ratios_bounded() {
        let m = reference();
        let mu0 = AtomMeasure::new(vec![(r(0, 1), r(1, 2)), (r(1, 1), r(1, 2))]).unwrap();
        let rep = contraction_check(&m, &mu0, 30).unwrap();
        assert!(rep.passed, "{:?}", rep.ratios);
        assert!(rep.max_ratio <= 0.6 + 1e-9);
    }

    #[test]
    fn pure_noise_reaches_stationarity_in_one_step() {
        let m = LinearMFModel::new(
            r(0, 1),
            r(0, 1),
            r(0, 1),
            PolicyFamily::AffinePoint { a0: r(1, 2), slope: r(0, 1) },
            vec![(r(1, 10), r(1, 2)), (r(9, 10), r(1, 2))],
        )
        .unwrap();
        let rep = contraction_check(&m, &AtomMeasure::point(r(1, 3)).unwrap(), 5).unwrap();
        assert_eq!(rep.distances[1], 0.0);
        assert_eq!(rep.ratios[0], Some(0.0));
        assert!(rep.ratios[1..].iter().all(Option::is_none));
    }

    #[test]
    fn escaping_parameters_rejected() {
        let bad = LinearMFModel::new(
            r(1, 2),
            r(1, 2),
            r(1, 2),
            PolicyFamily::AffinePoint { a0: r(0, 1), slope: r(1, 1) },
            vec![(r(0, 1), r(1, 1))],
        );
        assert!(bad.is_err());
    }
}
