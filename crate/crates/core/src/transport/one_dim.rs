use crate::error::{input, Result};
use crate::numeric::Scalar;

/// Probability measure on `[0,1]` with finitely many atoms, kept sorted by
/// position with duplicates merged and zero weights dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomMeasure<T> {
    atoms: Vec<(T, T)>,
}

impl<T: Scalar> AtomMeasure<T> {
    pub fn new(atoms: Vec<(T, T)>) -> Result<Self> {
        let mut total = T::zero();
        for (x, w) in &atoms {
            if *x < T::zero() || *x > T::one() {
                return input(format!("atom position {x:?} lies outside [0,1]"));
            }
            if *w < T::zero() {
                return input(format!("atom weight {w:?} is negative"));
            }
            total = total + w.clone();
        }
        if !(total.clone() - T::one()).is_negligible(1e-12) {
            return input(format!("atom weights sum to {:?}, not 1", total));
        }
        Ok(Self::from_unsorted(atoms))
    }

    /// Sorts and merges without validating; callers guarantee the invariants.
    pub(crate) fn from_unsorted(mut atoms: Vec<(T, T)>) -> Self {
        atoms.retain(|(_, w)| *w > T::zero());
        atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("atom positions are comparable"));
        let mut merged: Vec<(T, T)> = Vec::with_capacity(atoms.len());
        for (x, w) in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == x => last.1 = last.1.clone() + w,
                _ => merged.push((x, w)),
            }
        }
        Self { atoms: merged }
    }

    pub fn point(x: T) -> Result<Self> {
        Self::new(vec![(x, T::one())])
    }

    pub fn atoms(&self) -> &[(T, T)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn mean(&self) -> T {
        self.atoms
            .iter()
            .fold(T::zero(), |acc, (x, w)| acc + x.clone() * w.clone())
    }

    pub fn min_position(&self) -> T {
        self.atoms[0].0.clone()
    }

    pub fn max_position(&self) -> T {
        self.atoms[self.atoms.len() - 1].0.clone()
    }
}

/// `W₁(μ, ν) = ∫ |F_μ − F_ν|`, exact for exact scalars.
pub fn wasserstein_1d<T: Scalar>(mu: &AtomMeasure<T>, nu: &AtomMeasure<T>) -> T {
    let (a, b) = (mu.atoms(), nu.atoms());
    let (mut i, mut j) = (0, 0);
    let (mut fa, mut fb) = (T::zero(), T::zero());
    let mut prev: Option<T> = None;
    let mut total = T::zero();
    while i < a.len() || j < b.len() {
        let x = match (a.get(i), b.get(j)) {
            (Some(p), Some(q)) => {
                if p.0 <= q.0 {
                    p.0.clone()
                } else {
                    q.0.clone()
                }
            }
            (Some(p), None) => p.0.clone(),
            (None, Some(q)) => q.0.clone(),
            (None, None) => unreachable!(),
        };
        if let Some(p) = prev {
            total = total + (fa.clone() - fb.clone()).abs() * (x.clone() - p);
        }
        while i < a.len() && a[i].0 == x {
            fa = fa + a[i].1.clone();
            i += 1;
        }
        while j < b.len() && b[j].0 == x {
            fb = fb + b[j].1.clone();
            j += 1;
        }
        prev = Some(x);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Rational;

    fn r(n: i64, d: i64) -> Rational {
        Rational::ratio(n, d)
    }

    #[test]
    fn point_masses() {
        let a = AtomMeasure::point(0.2).unwrap();
        let b = AtomMeasure::point(0.7).unwrap();
        assert!((wasserstein_1d(&a, &b) - 0.5).abs() < 1e-15);
        assert_eq!(wasserstein_1d(&a, &a), 0.0);
    }

    #[test]
    fn three_atoms_against_midpoint() {
        let mu = AtomMeasure::new(vec![(r(0, 1), r(1, 3)), (r(1, 2), r(1, 3)), (r(1, 1), r(1, 3))]).unwrap();
        let nu = AtomMeasure::point(r(1, 2)).unwrap();
        assert_eq!(wasserstein_1d(&mu, &nu), r(1, 3));
    }

    #[test]
    fn rejects_outside_interval() {
        assert!(AtomMeasure::new(vec![(1.5, 1.0)]).is_err());
        assert!(AtomMeasure::new(vec![(0.5, 0.4)]).is_err());
    }

    #[test]
    fn merges_duplicates() {
        let m = AtomMeasure::new(vec![(0.5, 0.25), (0.1, 0.5), (0.5, 0.25)]).unwrap();
        assert_eq!(m.atoms(), &[(0.1, 0.5), (0.5, 0.5)]);
    }
}
