use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand::Rng;

use super::{Certificate, Method, StaticSolution};
use crate::error::{input, Result};
use crate::model::SimplexVector;

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOptions {
    /// Random starts in addition to the vertices and the barycenter.
    pub random_starts: usize,
    pub iterations: usize,
    pub seed: u64,
    /// Central-difference step for gradients.
    pub fd_step: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            random_starts: 32,
            iterations: 2000,
            seed: 0,
            fd_step: 1e-6,
        }
    }
}

/// Euclidean projection onto the probability simplex.
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &s) in sorted.iter().enumerate() {
        cumsum += s;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if s - t > 0.0 {
            theta = t;
        }
    }
    let mut out: Vec<f64> = v.iter().map(|x| (x - theta).max(0.0)).collect();
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|x| *x /= total);
    out
}

fn fd_gradient(f: &dyn Fn(&[f64]) -> f64, mu: &[f64], h: f64) -> Vec<f64> {
    let mut x = mu.to_vec();
    (0..mu.len())
        .map(|i| {
            let orig = x[i];
            x[i] = orig + h;
            let up = f(&x);
            x[i] = orig - h;
            let down = f(&x);
            x[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

fn ascend(f: &dyn Fn(&[f64]) -> f64, start: Vec<f64>, opts: &SearchOptions) -> (Vec<f64>, f64) {
    let mut mu = start;
    let mut value = f(&mu);
    let mut step = 1.0;
    for _ in 0..opts.iterations {
        let g = fd_gradient(f, &mu, opts.fd_step);
        let mut improved = false;
        while step > 1e-14 {
            let trial: Vec<f64> = mu.iter().zip(&g).map(|(m, gi)| m + step * gi).collect();
            let trial = project_to_simplex(&trial);
            let tv = f(&trial);
            if tv > value {
                mu = trial;
                value = tv;
                step *= 1.5;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    polish(f, &mut mu, &mut value);
    (mu, value)
}

/// Mass transfers between coordinate pairs with halving step sizes.
fn polish(f: &dyn Fn(&[f64]) -> f64, mu: &mut Vec<f64>, value: &mut f64) {
    let d = mu.len();
    let mut delta: f64 = 0.5;
    while delta > 1e-12 {
        let mut moved = true;
        let mut rounds = 0;
        while moved && rounds < 100 {
            moved = false;
            rounds += 1;
            for i in 0..d {
                for j in 0..d {
                    if i == j || mu[i] <= 0.0 {
                        continue;
                    }
                    let amount = delta.min(mu[i]);
                    let mut trial = mu.clone();
                    trial[i] -= amount;
                    trial[j] += amount;
                    let tv = f(&trial);
                    if tv > *value {
                        *mu = trial;
                        *value = tv;
                        moved = true;
                    }
                }
            }
        }
        delta *= 0.5;
    }
}

/// Multi-start projected gradient ascent of a black-box objective over the
/// simplex, followed by pairwise mass-transfer polishing. Starts: all vertices,
/// the barycenter, then seeded uniformly random points.
pub fn maximize_static(
    objective: &(dyn Fn(&[f64]) -> f64 + Sync),
    d: usize,
    opts: &SearchOptions,
) -> Result<StaticSolution> {
    if d == 0 {
        return input("objective over zero states");
    }
    let mut starts: Vec<Vec<f64>> = (0..d)
        .map(|x| {
            let mut v = vec![0.0; d];
            v[x] = 1.0;
            v
        })
        .collect();
    starts.push(vec![1.0 / d as f64; d]);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.random_starts {
        // Normalized exponentials are uniform on the simplex.
        let e: Vec<f64> = (0..d).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
        let s: f64 = e.iter().sum();
        starts.push(e.into_iter().map(|v| v / s).collect());
    }
    let f = |mu: &[f64]| objective(mu);
    let results: Vec<(Vec<f64>, f64)> = starts
        .into_iter()
        .map(|s| ascend(&f, s, opts))
        .collect();
    let log: Vec<(usize, f64)> = results.iter().enumerate().map(|(i, r)| (i, r.1)).collect();
    let (best_mu, best_value) = results
        .iter()
        .fold(None::<&(Vec<f64>, f64)>, |acc, r| match acc {
            Some(a) if a.1 >= r.1 => Some(a),
            _ => Some(r),
        })
        .cloned()
        .expect("at least one start");
    let mu = SimplexVector::normalized(best_mu)?;
    Ok(StaticSolution {
        alternatives: vec![mu.clone()],
        mu,
        value: best_value,
        certificate: Certificate::Search { log },
        method: Method::ProjectedGradient,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_examples() {
        assert_eq!(project_to_simplex(&[0.2, 0.8]), vec![0.2, 0.8]);
        assert_eq!(project_to_simplex(&[2.0, 0.0]), vec![1.0, 0.0]);
        let p = project_to_simplex(&[0.5, 0.5, 0.5]);
        assert!(p.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn linear_objective_lands_on_a_vertex() {
        let f = |mu: &[f64]| mu[0] + 3.0 * mu[1] + 2.0 * mu[2];
        let s = maximize_static(&f, 3, &SearchOptions::default()).unwrap();
        assert_eq!(s.mu.as_slice(), &[0.0, 1.0, 0.0]);
        assert_eq!(s.value, 3.0);
    }

    #[test]
    fn concave_objective_recovers_its_center() {
        let c = [0.2, 0.5, 0.3];
        let f = |mu: &[f64]| -mu.iter().zip(&c).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        let s = maximize_static(&f, 3, &SearchOptions::default()).unwrap();
        for (a, b) in s.mu.as_slice().iter().zip(&c) {
            assert!((a - b).abs() < 1e-6);
        }
    }
}
