use rayon::prelude::*;

use super::simplex::{transport_plan, FiniteMetric};
use crate::error::{input, Result};
use crate::matrix::Matrix;

/// Values below this are treated as exact contraction to zero when fitting.
const KAPPA_FLOOR: f64 = 1e-14;

/// Contraction coefficients of `Pⁿ` in W₁ and a fitted geometric envelope
/// `κ_n ≈ C ρⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErgodicityReport {
    /// `kappa[n-1] = max_{x≠y} W(Pⁿ(·|x), Pⁿ(·|y)) / d(x,y)`.
    pub kappa: Vec<f64>,
    pub c: f64,
    pub rho: f64,
    /// False when the table does not decay (fitted ρ ≥ 1 or no decrease).
    pub geometric: bool,
}

impl ErgodicityReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,kappa,fitted_c,fitted_rho\n");
        for (i, k) in self.kappa.iter().enumerate() {
            out.push_str(&format!("{},{:.12e},{:.12e},{:.12e}\n", i + 1, k, self.c, self.rho));
        }
        out
    }
}

/// Computes `κ_n` for `n = 1..=n_max` and fits `log κ_n` by least squares.
pub fn ergodicity_estimate(p: &Matrix<f64>, metric: &FiniteMetric, n_max: usize) -> Result<ErgodicityReport> {
    let d = p.rows();
    if !p.is_square() || d != metric.len() {
        return input("kernel and metric sizes differ");
    }
    if !p.is_row_stochastic(1e-10) {
        return input("kernel is not row-stochastic");
    }
    if n_max == 0 {
        return input("n_max must be positive");
    }
    let pairs: Vec<(usize, usize)> = (0..d)
        .flat_map(|x| ((x + 1)..d).map(move |y| (x, y)))
        .collect();
    let mut power = p.clone();
    let mut kappa = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        if n > 1 {
            power = power.matmul(p)?;
        }
        let k = pairs
            .par_iter()
            .map(|&(x, y)| {
                transport_plan(power.row(x), power.row(y), metric).map(|t| t.distance / metric.d(x, y))
            })
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        kappa.push(k);
    }

    let points: Vec<(f64, f64)> = kappa
        .iter()
        .enumerate()
        .filter(|(_, &k)| k > KAPPA_FLOOR)
        .map(|(i, &k)| ((i + 1) as f64, k.ln()))
        .collect();
    let (c, rho) = match points.len() {
        0 => (0.0, 0.0),
        1 => {
            // A single positive value followed by exact zeros.
            let (n, lk) = points[0];
            if (n as usize) < kappa.len() {
                (lk.exp(), 0.0)
            } else {
                (lk.exp(), 1.0)
            }
        }
        len => {
            let m = len as f64;
            let sx: f64 = points.iter().map(|p| p.0).sum();
            let sy: f64 = points.iter().map(|p| p.1).sum();
            let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
            let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
            let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
            let intercept = (sy - slope * sx) / m;
            (intercept.exp(), slope.exp())
        }
    };
    let last = *kappa.last().unwrap();
    let geometric = rho < 1.0 - 1e-9 && (last < kappa[0] || last <= KAPPA_FLOOR);
    Ok(ErgodicityReport { kappa, c, rho, geometric })
}
