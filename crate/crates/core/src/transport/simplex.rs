use crate::error::{input, Result};
use crate::matrix::Matrix;
use crate::model::SimplexVector;

/// Distance matrix of a finite metric space.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMetric {
    dist: Matrix<f64>,
}

impl FiniteMetric {
    /// Validates symmetry, zero diagonal, nonnegativity and the triangle
    /// inequality (within `1e-12`).
    pub fn new(dist: Matrix<f64>) -> Result<Self> {
        let n = dist.rows();
        if !dist.is_square() || n == 0 {
            return input("metric needs a nonempty square matrix");
        }
        for i in 0..n {
            if dist[(i, i)] != 0.0 {
                return input(format!("metric diagonal entry {i} is nonzero"));
            }
            for j in 0..n {
                let v = dist[(i, j)];
                if !v.is_finite() || v < 0.0 {
                    return input(format!("metric entry ({i},{j}) = {v} is negative or not finite"));
                }
                if (v - dist[(j, i)]).abs() > 1e-12 {
                    return input(format!("metric is not symmetric at ({i},{j})"));
                }
                for k in 0..n {
                    if v > dist[(i, k)] + dist[(k, j)] + 1e-12 {
                        return input(format!("triangle inequality fails for ({i},{k},{j})"));
                    }
                }
            }
        }
        Ok(Self { dist })
    }

    /// `|i − j|` on `n` points.
    pub fn line(n: usize) -> Self {
        Self {
            dist: Matrix::from_fn(n, n, |i, j| (i as f64 - j as f64).abs()),
        }
    }

    /// Hop-count-free discrete metric: 1 between distinct points.
    pub fn discrete(n: usize) -> Self {
        Self {
            dist: Matrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { 1.0 }),
        }
    }

    pub fn len(&self) -> usize {
        self.dist.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.dist.rows() == 0
    }

    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[(i, j)]
    }

    pub fn matrix(&self) -> &Matrix<f64> {
        &self.dist
    }
}

/// Optimal transport between two distributions with a dual certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportResult {
    pub distance: f64,
    /// Optimal coupling, indexed by points of the space.
    pub plan: Matrix<f64>,
    /// 1-Lipschitz potential `f` with `Σ f ν − Σ f μ` a lower bound on `W₁`.
    pub potential: Vec<f64>,
    pub dual_value: f64,
    /// `distance − dual_value`, nonnegative up to rounding.
    pub gap: f64,
}

const EPS: f64 = 1e-13;

/// Transportation simplex on a balanced problem with strictly positive
/// supplies and demands: northwest-corner start, MODI pricing, most negative
/// reduced cost enters (lowest index on ties), lowest-index blocking cell
/// leaves. Returns the flows and the row potentials.
fn solve_transportation(supply: &[f64], demand: &[f64], cost: &Matrix<f64>) -> (Matrix<f64>, Vec<f64>) {
    let (m, n) = (supply.len(), demand.len());
    let mut flow = Matrix::zeros(m, n);
    let mut basic = vec![vec![false; n]; m];
    // Northwest corner, keeping exactly m + n − 1 basic cells.
    let (mut s, mut t) = (supply.to_vec(), demand.to_vec());
    let (mut i, mut j) = (0, 0);
    while i < m && j < n {
        let q = s[i].min(t[j]);
        flow[(i, j)] = q;
        basic[i][j] = true;
        s[i] -= q;
        t[j] -= q;
        if i == m - 1 {
            j += 1;
        } else if j == n - 1 {
            i += 1;
        } else if s[i] <= t[j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    let mut u = vec![0.0; m];
    for _ in 0..10_000 {
        let (pu, v) = potentials(&basic, cost);
        u = pu;
        let mut entering = None;
        let mut best = -1e-12;
        for r in 0..m {
            for c in 0..n {
                if basic[r][c] {
                    continue;
                }
                let reduced = cost[(r, c)] - u[r] - v[c];
                if reduced < best {
                    best = reduced;
                    entering = Some((r, c));
                }
            }
        }
        let Some((er, ec)) = entering else { break };
        let cycle = find_cycle(&basic, er, ec);
        // Cells alternate +, −, +, − starting at the entering cell.
        let mut theta = f64::INFINITY;
        let mut leaving = None;
        for (k, &(r, c)) in cycle.iter().enumerate() {
            if k % 2 == 1 && flow[(r, c)] < theta - EPS {
                theta = flow[(r, c)];
                leaving = Some((r, c));
            }
        }
        let (lr, lc) = leaving.expect("cycle has a decreasing cell");
        for (k, &(r, c)) in cycle.iter().enumerate() {
            if k % 2 == 0 {
                flow[(r, c)] += theta;
            } else {
                flow[(r, c)] = (flow[(r, c)] - theta).max(0.0);
            }
        }
        flow[(lr, lc)] = 0.0;
        basic[lr][lc] = false;
        basic[er][ec] = true;
    }
    (flow, u)
}

/// Potentials with `u_i + v_j = c_ij` on the basic spanning tree, `u_0 = 0`.
fn potentials(basic: &[Vec<bool>], cost: &Matrix<f64>) -> (Vec<f64>, Vec<f64>) {
    let (m, n) = (basic.len(), basic[0].len());
    let mut u = vec![None; m];
    let mut v = vec![None; n];
    u[0] = Some(0.0);
    let mut changed = true;
    while changed {
        changed = false;
        for r in 0..m {
            for c in 0..n {
                if !basic[r][c] {
                    continue;
                }
                match (u[r], v[c]) {
                    (Some(ur), None) => {
                        v[c] = Some(cost[(r, c)] - ur);
                        changed = true;
                    }
                    (None, Some(vc)) => {
                        u[r] = Some(cost[(r, c)] - vc);
                        changed = true;
                    }
                    _ => {}
                }
            }
        }
    }
    (
        u.into_iter().map(|x| x.unwrap_or(0.0)).collect(),
        v.into_iter().map(|x| x.unwrap_or(0.0)).collect(),
    )
}

/// The unique cycle created by adding `(er, ec)` to the basic tree, as an
/// alternating row/column path starting at the entering cell.
fn find_cycle(basic: &[Vec<bool>], er: usize, ec: usize) -> Vec<(usize, usize)> {
    let (m, n) = (basic.len(), basic[0].len());
    // Nodes: rows 0..m, columns m..m+n. Search a tree path from column ec to row er.
    let mut parent = vec![usize::MAX; m + n];
    let start = m + ec;
    parent[start] = start;
    let mut stack = vec![start];
    while let Some(node) = stack.pop() {
        if node == er {
            break;
        }
        let neighbours: Vec<usize> = if node < m {
            (0..n).filter(|&c| basic[node][c]).map(|c| m + c).collect()
        } else {
            (0..m).filter(|&r| basic[r][node - m]).collect()
        };
        for nb in neighbours {
            if parent[nb] == usize::MAX {
                parent[nb] = node;
                stack.push(nb);
            }
        }
    }
    // Walk back from row er to column ec, emitting cells.
    let mut cells = vec![(er, ec)];
    let mut node = er;
    while node != start {
        let p = parent[node];
        let cell = if node < m { (node, p - m) } else { (p, node - m) };
        cells.push(cell);
        node = p;
    }
    cells
}

/// Optimal coupling of `mu` and `nu` on the metric space.
pub fn transport_plan(mu: &[f64], nu: &[f64], metric: &FiniteMetric) -> Result<TransportResult> {
    let n = metric.len();
    if mu.len() != n || nu.len() != n {
        return input("distributions and metric have different sizes");
    }
    let src: Vec<usize> = (0..n).filter(|&i| mu[i] > 0.0).collect();
    let dst: Vec<usize> = (0..n).filter(|&j| nu[j] > 0.0).collect();
    if src.is_empty() || dst.is_empty() {
        return input("distributions need positive mass");
    }
    let supply: Vec<f64> = src.iter().map(|&i| mu[i]).collect();
    let mut demand: Vec<f64> = dst.iter().map(|&j| nu[j]).collect();
    // Absorb the rounding difference of the totals into the largest demand.
    let diff = supply.iter().sum::<f64>() - demand.iter().sum::<f64>();
    if diff.abs() > 1e-9 {
        return input(format!("distributions have different total mass (difference {diff})"));
    }
    let jmax = (0..demand.len())
        .max_by(|&a, &b| demand[a].partial_cmp(&demand[b]).unwrap())
        .unwrap();
    demand[jmax] += diff;
    let cost = Matrix::from_fn(src.len(), dst.len(), |r, c| metric.d(src[r], dst[c]));
    let (flow, u) = solve_transportation(&supply, &demand, &cost);

    let mut plan = Matrix::zeros(n, n);
    let mut distance = 0.0;
    for (r, &i) in src.iter().enumerate() {
        for (c, &j) in dst.iter().enumerate() {
            plan[(i, j)] = flow[(r, c)];
            distance += flow[(r, c)] * cost[(r, c)];
        }
    }
    // c-transform of the row potentials over the whole space: 1-Lipschitz.
    let potential: Vec<f64> = (0..n)
        .map(|y| {
            src.iter()
                .zip(&u)
                .map(|(&i, ui)| metric.d(i, y) - ui)
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let dual_value: f64 = (0..n).map(|y| potential[y] * (nu[y] - mu[y])).sum();
    Ok(TransportResult {
        distance,
        plan,
        potential,
        dual_value,
        gap: distance - dual_value,
    })
}

/// `W₁(μ, ν)` on a finite metric space.
pub fn wasserstein_finite(mu: &SimplexVector, nu: &SimplexVector, metric: &FiniteMetric) -> Result<f64> {
    Ok(transport_plan(mu.as_slice(), nu.as_slice(), metric)?.distance)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(v: &[f64]) -> SimplexVector {
        SimplexVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn line_example() {
        let m = FiniteMetric::line(3);
        let r = transport_plan(&[0.5, 0.5, 0.0], &[0.0, 0.5, 0.5], &m).unwrap();
        assert!((r.distance - 1.0).abs() < 1e-12);
        assert!(r.gap.abs() < 1e-12);
    }

    #[test]
    fn point_masses() {
        let m = FiniteMetric::line(4);
        let w = wasserstein_finite(&SimplexVector::point_mass(4, 0), &SimplexVector::point_mass(4, 3), &m).unwrap();
        assert_eq!(w, 3.0);
        assert_eq!(wasserstein_finite(&sv(&[0.3, 0.7, 0.0, 0.0]), &sv(&[0.3, 0.7, 0.0, 0.0]), &m).unwrap(), 0.0);
    }

    #[test]
    fn triangle_violation_rejected() {
        let d = Matrix::from_rows(vec![
            vec![0.0, 1.0, 3.0],
            vec![1.0, 0.0, 1.0],
            vec![3.0, 1.0, 0.0],
        ])
        .unwrap();
        assert!(FiniteMetric::new(d).is_err());
    }

    #[test]
    fn potential_is_lipschitz() {
        let m = FiniteMetric::line(5);
        let r = transport_plan(&[0.1, 0.2, 0.3, 0.2, 0.2], &[0.4, 0.0, 0.1, 0.0, 0.5], &m).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                assert!(r.potential[i] - r.potential[j] <= m.d(i, j) + 1e-12);
            }
        }
        assert!(r.gap.abs() < 1e-12);
    }
}
