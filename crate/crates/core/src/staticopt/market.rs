use serde::{Deserialize, Serialize};

use crate::error::{input, Result};
use crate::numeric::Scalar;

/// Axis-aligned rectangle with corners `B` (low x, low y), `C` (high x, low y),
/// `D` (low x, high y), `E` (high x, high y) and a vendor at `A`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RectangleMarket<T = f64> {
    pub b: [T; 2],
    pub c: [T; 2],
    pub d: [T; 2],
    pub e: [T; 2],
    pub a: [T; 2],
}

impl<T: Scalar> RectangleMarket<T> {
    pub fn validate(&self) -> Result<()> {
        let [b, c, d, e, a] = [&self.b, &self.c, &self.d, &self.e, &self.a];
        if !(b[0] == d[0] && c[0] == e[0] && b[1] == c[1] && d[1] == e[1]) {
            return input("corners do not form an axis-aligned rectangle B C / D E");
        }
        if !(b[0] < c[0] && b[1] < d[1]) {
            return input("degenerate rectangle: need B1 < C1 and B2 < D2");
        }
        if a[0] < b[0] || a[0] > c[0] || a[1] < b[1] || a[1] > d[1] {
            return input("vendor A lies outside the market rectangle");
        }
        Ok(())
    }

    pub fn corners(&self) -> [[T; 2]; 4] {
        [self.b.clone(), self.c.clone(), self.d.clone(), self.e.clone()]
    }
}

/// Four-corner optimum of the market problem.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketSolution<T = f64> {
    /// Mass of the first marginal on the low x-coordinate.
    pub px: T,
    /// Mass of the second marginal on the low y-coordinate.
    pub py: T,
    /// Masses on `B, C, D, E`.
    pub masses: [T; 4],
    pub value: T,
}

/// `p = 1/4 + (hi − a)/(2(hi − lo))`, the optimal mass on the low endpoint of one
/// coordinate.
fn endpoint_mass<T: Scalar>(lo: &T, hi: &T, a: &T) -> T {
    T::ratio(1, 4) + (hi.clone() - a.clone()) / (T::from_int(2) * (hi.clone() - lo.clone()))
}

/// Closed-form optimum of `∫∫‖x−y‖² μ(dx)μ(dy) − ∫‖x−A‖² μ(dx)` over
/// distributions on the rectangle: the two coordinates separate, each puts
/// its mass on the interval endpoints, and independent margins give the corner
/// masses.
pub fn market_place_solution<T: Scalar>(m: &RectangleMarket<T>) -> Result<MarketSolution<T>> {
    m.validate()?;
    let px = endpoint_mass(&m.b[0], &m.c[0], &m.a[0]);
    let py = endpoint_mass(&m.b[1], &m.d[1], &m.a[1]);
    let qx = T::one() - px.clone();
    let qy = T::one() - py.clone();
    let masses = [
        px.clone() * py.clone(),
        qx.clone() * py.clone(),
        px.clone() * qy.clone(),
        qx * qy,
    ];
    let value = market_objective(&m.corners(), &masses, &m.a);
    Ok(MarketSolution { px, py, masses, value })
}

fn sq_dist<T: Scalar>(p: &[T; 2], q: &[T; 2]) -> T {
    let dx = p[0].clone() - q[0].clone();
    let dy = p[1].clone() - q[1].clone();
    dx.clone() * dx + dy.clone() * dy
}

/// `Σ_i Σ_j w_i w_j ‖p_i − p_j‖² − Σ_i w_i ‖p_i − A‖²` for an atomic distribution.
pub fn market_objective<T: Scalar>(points: &[[T; 2]], weights: &[T], vendor: &[T; 2]) -> T {
    let mut v = T::zero();
    for (p, w) in points.iter().zip(weights) {
        for (q, u) in points.iter().zip(weights) {
            v = v + w.clone() * u.clone() * sq_dist(p, q);
        }
        v = v - w.clone() * sq_dist(p, vendor);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centered_vendor_gives_uniform_corners() {
        let m = RectangleMarket {
            b: [0.0, 0.0],
            c: [2.0, 0.0],
            d: [0.0, 1.0],
            e: [2.0, 1.0],
            a: [1.0, 0.5],
        };
        let s = market_place_solution(&m).unwrap();
        assert_eq!(s.masses, [0.25; 4]);
    }

    #[test]
    fn outside_vendor_and_degenerate_rectangle_rejected() {
        let mut m = RectangleMarket {
            b: [0.0, 0.0],
            c: [2.0, 0.0],
            d: [0.0, 1.0],
            e: [2.0, 1.0],
            a: [3.0, 0.5],
        };
        assert!(market_place_solution(&m).is_err());
        m.a = [1.0, 0.5];
        m.c = [0.0, 0.0];
        m.e = [0.0, 1.0];
        assert!(market_place_solution(&m).is_err());
    }
}
