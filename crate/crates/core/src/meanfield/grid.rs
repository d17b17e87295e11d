use std::collections::HashMap;

use crate::error::{input, Result};
use crate::finite::guard;
use crate::model::SimplexVector;
use crate::nagent::compositions;

/// Largest number of grid points built.
pub const MAX_GRID_POINTS: u128 = 10_000_000;

/// The points `k/M` with `Σk = M` of the probability simplex on `d` states.
#[derive(Debug, Clone)]
pub struct SimplexGrid {
    d: usize,
    resolution: usize,
    points: Vec<Vec<usize>>,
    index: HashMap<Vec<usize>, usize>,
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

impl SimplexGrid {
    pub fn new(d: usize, resolution: usize) -> Result<Self> {
        if d == 0 || resolution == 0 {
            return input("simplex grid needs d ≥ 1 and resolution ≥ 1");
        }
        guard("simplex grid points", binomial(resolution + d - 1, d - 1), MAX_GRID_POINTS)?;
        let points = compositions(resolution, d);
        let index = points.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
        Ok(Self {
            d,
            resolution,
            points,
            index,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn counts(&self, i: usize) -> &[usize] {
        &self.points[i]
    }

    pub fn point(&self, i: usize) -> SimplexVector {
        let m = self.resolution as f64;
        SimplexVector::new(self.points[i].iter().map(|&k| k as f64 / m).collect())
            .expect("grid points are distributions")
    }

    pub fn index_of(&self, counts: &[usize]) -> Option<usize> {
        self.index.get(counts).copied()
    }

    /// Nearest grid point in Euclidean distance: floor `M μ`, then hand the
    /// missing units to the largest fractional parts. Ties go to higher
    /// coordinates, which yields the lexicographically smallest nearest point.
    pub fn project_counts(&self, mu: &[f64]) -> Vec<usize> {
        let m = self.resolution as f64;
        let scaled: Vec<f64> = mu.iter().map(|w| (w * m).max(0.0)).collect();
        let mut counts: Vec<usize> = scaled.iter().map(|s| s.floor() as usize).collect();
        let assigned: usize = counts.iter().sum();
        if assigned > self.resolution {
            // Only reachable through rounding above the simplex; trim from the top.
            let mut excess = assigned - self.resolution;
            for c in counts.iter_mut().rev() {
                let take = excess.min(*c);
                *c -= take;
                excess -= take;
            }
            return counts;
        }
        let mut order: Vec<usize> = (0..self.d).collect();
        order.sort_by(|&i, &j| {
            let fi = scaled[i] - scaled[i].floor();
            let fj = scaled[j] - scaled[j].floor();
            fj.partial_cmp(&fi).unwrap().then(j.cmp(&i))
        });
        for &i in order.iter().take(self.resolution - assigned) {
            counts[i] += 1;
        }
        counts
    }

    pub fn project(&self, mu: &[f64]) -> usize {
        let counts = self.project_counts(mu);
        self.index[&counts]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_count() {
        assert_eq!(SimplexGrid::new(3, 4).unwrap().len(), 15);
        assert_eq!(SimplexGrid::new(2, 40).unwrap().len(), 41);
    }

    #[test]
    fn projection_hits_grid_points_exactly() {
        let g = SimplexGrid::new(3, 5).unwrap();
        for i in 0..g.len() {
            assert_eq!(g.project(g.point(i).as_slice()), i);
        }
    }

    #[test]
    fn ties_choose_lexicographically_smallest() {
        let g = SimplexGrid::new(2, 1).unwrap();
        assert_eq!(g.project_counts(&[0.5, 0.5]), vec![0, 1]);
    }
}
