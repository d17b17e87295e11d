use rayon::prelude::*;

use crate::error::{input, Result};
use crate::matrix::{solve_linear, Matrix};
use crate::numeric::Scalar;

/// Largest dimension for exhaustive support enumeration.
pub const MAX_EXACT_DIM: usize = 16;

/// Global maximum of `μHμᵀ + c·μ` over the simplex found by visiting every
/// face.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactMaximum<T> {
    pub mu: Vec<T>,
    pub value: T,
    pub support: Vec<usize>,
    /// Common value of the gradient `(H+Hᵀ)μ + c` on the support.
    pub multiplier: T,
    /// First-order residual: spread of the gradient on the support plus its
    /// excess off the support.
    pub kkt_residual: f64,
    /// Every candidate within `1e-9` of the best value, lexicographically sorted.
    pub maximizers: Vec<Vec<T>>,
    pub faces_examined: usize,
    pub singular_faces: usize,
}

pub fn quadratic_value<T: Scalar>(h: &Matrix<T>, c: &[T], mu: &[T]) -> T {
    let hm = h.right_mul(mu);
    let mut v = T::zero();
    for i in 0..mu.len() {
        v = v + mu[i].clone() * (hm[i].clone() + c[i].clone());
    }
    v
}

fn gradient<T: Scalar>(h: &Matrix<T>, c: &[T], mu: &[T]) -> Vec<T> {
    let a = h.right_mul(mu);
    let b = h.left_mul(mu);
    (0..mu.len())
        .map(|i| a[i].clone() + b[i].clone() + c[i].clone())
        .collect()
}

enum Face<T> {
    Candidate(Vec<T>),
    Infeasible,
    Singular,
}

fn solve_face<T: Scalar>(h: &Matrix<T>, c: &[T], support: &[usize]) -> Face<T> {
    let d = h.rows();
    let k = support.len();
    let mut mu = vec![T::zero(); d];
    if k == 1 {
        mu[support[0]] = T::one();
        return Face::Candidate(mu);
    }
    // Stationarity on the face: (H+Hᵀ)_FF μ_F − λ 1 = −c_F, Σ μ_F = 1.
    let mut a = Matrix::zeros(k + 1, k + 1);
    let mut rhs = vec![T::zero(); k + 1];
    for (r, &i) in support.iter().enumerate() {
        for (s, &j) in support.iter().enumerate() {
            a[(r, s)] = h[(i, j)].clone() + h[(j, i)].clone();
        }
        a[(r, k)] = -T::one();
        a[(k, r)] = T::one();
        rhs[r] = -c[i].clone();
    }
    rhs[k] = T::one();
    let Some(sol) = solve_linear(a, rhs) else {
        return Face::Singular;
    };
    for (r, &i) in support.iter().enumerate() {
        let v = sol[r].clone();
        if v < T::zero() {
            if v.is_negligible(1e-12) {
                mu[i] = T::zero();
                continue;
            }
            return Face::Infeasible;
        }
        mu[i] = v;
    }
    Face::Candidate(mu)
}

/// Exhaustive search over the `2^d − 1` faces of the simplex. Faces whose
/// stationarity system is singular are skipped and counted; a maximizer on
/// such a face is also attained on one of its sub-faces.
pub fn maximize_quadratic<T: Scalar>(h: &Matrix<T>, c: &[T]) -> Result<ExactMaximum<T>> {
    let d = h.rows();
    if !h.is_square() || c.len() != d || d == 0 {
        return input("quadratic objective needs a square matrix and matching linear term");
    }
    if d > MAX_EXACT_DIM {
        return input(format!("exact support enumeration limited to {MAX_EXACT_DIM} states"));
    }
    let faces: Vec<Face<T>> = (1u32..(1u32 << d))
        .into_par_iter()
        .map(|mask| {
            let support: Vec<usize> = (0..d).filter(|i| mask & (1 << i) != 0).collect();
            solve_face(h, c, &support)
        })
        .collect();
    let singular_faces = faces.iter().filter(|f| matches!(f, Face::Singular)).count();
    let mut candidates: Vec<(Vec<T>, T)> = faces
        .into_iter()
        .filter_map(|f| match f {
            Face::Candidate(mu) => {
                let v = quadratic_value(h, c, &mu);
                Some((mu, v))
            }
            _ => None,
        })
        .collect();
    let best_value = candidates
        .iter()
        .map(|(_, v)| v.clone())
        .reduce(T::max_of)
        .expect("vertices are always candidates");
    candidates.retain(|(_, v)| (best_value.clone() - v.clone()).to_f64() <= 1e-9);
    let mut maximizers: Vec<Vec<T>> = Vec::new();
    for (mu, _) in candidates {
        let dup = maximizers.iter().any(|m| {
            m.iter()
                .zip(&mu)
                .all(|(a, b)| (a.clone() - b.clone()).is_negligible(1e-9))
        });
        if !dup {
            maximizers.push(mu);
        }
    }
    maximizers.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let mu = maximizers[0].clone();
    let value = quadratic_value(h, c, &mu);
    let support: Vec<usize> = (0..d).filter(|&i| mu[i] > T::zero()).collect();
    let (multiplier, kkt_residual) = kkt(h, c, &mu, &support);
    Ok(ExactMaximum {
        mu,
        value,
        support,
        multiplier,
        kkt_residual,
        maximizers,
        faces_examined: (1usize << d) - 1,
        singular_faces,
    })
}

/// Multiplier and first-order residual of `mu` on `support`.
pub fn kkt<T: Scalar>(h: &Matrix<T>, c: &[T], mu: &[T], support: &[usize]) -> (T, f64) {
    let g = gradient(h, c, mu);
    let mut lambda = T::zero();
    for &i in support {
        lambda = lambda + g[i].clone();
    }
    lambda = lambda / T::from_int(support.len() as i64);
    let mut residual = 0.0_f64;
    for (i, gi) in g.iter().enumerate() {
        let diff = (gi.clone() - lambda.clone()).to_f64();
        if support.contains(&i) {
            residual = residual.max(diff.abs());
        } else {
            residual = residual.max(diff);
        }
    }
    (lambda, residual)
}
