//! Ready-made model instances: the 3×3 grid congestion network, the
//! five-agent triangle, and the rectangular market.

use crate::error::Result;
use crate::matrix::{parse_rational_matrix, Matrix};
use crate::model::{
    AdmissibleActions, Graph, MeanFieldModel, RewardModel, TransitionModel,
};
use crate::numeric::Rational;
use crate::staticopt::RectangleMarket;

/// Pairwise distances on the 3×3 grid (nodes numbered row by row): 1 for one
/// edge apart, 1.4 for two, 1.7 for three, 2.2 for four.
pub const GRID_DISTANCE: &str = "\
0 1 1.4 1 1.4 1.7 1.4 1.7 2.2
1 0 1 1.4 1 1.4 1.7 1.4 1.7
1.4 1 0 1.7 1.4 1 2.2 1.7 1.4
1 1.4 1.7 0 1 1.4 1 1.4 1.7
1.4 1 1.4 1 0 1 1.4 1 1.4
1.7 1.4 1 1.4 1 0 1.7 1.4 1
1.4 1.7 2.2 1 1.4 1.7 0 1 1.4
1.7 1.4 1.7 1.4 1 1.4 1 0 1
2.2 1.7 1.4 1.7 1.4 1 1.4 1 0
";

/// Numerators of the spread-maximizing distribution on the grid, over 37.
pub const GRID_OPTIMUM_NUMERATORS: [i64; 9] = [7, 2, 7, 2, 1, 2, 7, 2, 7];

pub fn grid_distance_exact() -> Matrix<Rational> {
    parse_rational_matrix(GRID_DISTANCE).expect("grid distance literal")
}

pub fn grid_distance() -> Matrix<f64> {
    grid_distance_exact().to_f64()
}

pub fn grid_graph() -> Graph {
    Graph::lattice(3, 3).expect("3x3 lattice")
}

/// Neighbours plus staying put.
pub fn grid_actions() -> AdmissibleActions {
    AdmissibleActions::from_graph(&grid_graph()).expect("grid action sets")
}

pub fn grid_optimum_exact() -> Vec<Rational> {
    GRID_OPTIMUM_NUMERATORS
        .iter()
        .map(|&k| Rational::new(k.into(), 37.into()))
        .collect()
}

pub fn grid_optimum() -> Vec<f64> {
    GRID_OPTIMUM_NUMERATORS.iter().map(|&k| k as f64 / 37.0).collect()
}

/// Grid congestion model: spread reward, intended moves succeed with
/// probability `alpha`.
pub fn grid_model(alpha: f64) -> Result<MeanFieldModel> {
    MeanFieldModel::new(
        TransitionModel::alpha_intent(grid_actions(), alpha)?,
        RewardModel::spread(grid_distance())?,
    )
}

/// Triangle with nodes 0, 1, 2 (positions 1, 2, 3). Each agent picks one of the
/// two other nodes, moves there with probability 1/2 and otherwise stays.
/// Reward: 1 for sitting at node 0, minus 1 when the mean position is within
/// 1/2 of position 1.
pub fn triangle_model() -> Result<MeanFieldModel> {
    let actions = AdmissibleActions::new(3, vec![vec![1, 2], vec![0, 2], vec![0, 1]])?;
    let mut p = vec![vec![vec![0.0; 3]; 3]; 3];
    for (x, px) in p.iter_mut().enumerate() {
        for (a, law) in px.iter_mut().enumerate() {
            law[a] += 0.5;
            law[x] += 0.5;
        }
    }
    MeanFieldModel::new(
        TransitionModel::tabular(actions, p)?,
        RewardModel::indicator(0, vec![1.0, 2.0, 3.0], 1.0, 0.5)?,
    )
}

/// Market with corners B(0,0), C(4,0), D(0,3), E(4,3) and vendor A(2.5,2).
pub fn example_market() -> RectangleMarket {
    RectangleMarket {
        b: [0.0, 0.0],
        c: [4.0, 0.0],
        d: [0.0, 3.0],
        e: [4.0, 3.0],
        a: [2.5, 2.0],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_distance_is_a_valid_metric_matrix() {
        let dist = grid_distance();
        crate::model::validate_distance(&dist).unwrap();
        assert_eq!(dist[(0, 8)], 2.2);
    }

    #[test]
    fn grid_actions_include_self() {
        let acts = grid_actions();
        assert_eq!(acts.of(0), &[0, 1, 3]);
        assert_eq!(acts.of(4), &[1, 3, 4, 5, 7]);
    }
}
