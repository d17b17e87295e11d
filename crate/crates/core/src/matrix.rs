//! Small dense row-major matrices and the plain-text matrix format.
//!
//! Text format: one row per line, entries separated by whitespace. Lines whose
//! first non-blank character is `#` are comments; blank lines are ignored.

use std::fmt::Write as _;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::numeric::{parse_rational, Rational, Scalar};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Clone> Matrix<T> {
    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return input("ragged matrix rows");
        }
        let n = rows.len();
        Ok(Self {
            rows: n,
            cols,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, T::zero())
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Consistency(format!(
                "matrix shapes {}x{} and {}x{} do not compose",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Self::from_fn(self.rows, other.cols, |i, j| {
            (0..self.cols).fold(T::zero(), |acc, k| {
                acc + self[(i, k)].clone() * other[(k, j)].clone()
            })
        }))
    }

    /// Row vector times matrix.
    pub fn left_mul(&self, v: &[T]) -> Vec<T> {
        (0..self.cols)
            .map(|j| {
                (0..self.rows).fold(T::zero(), |acc, i| {
                    acc + v[i].clone() * self[(i, j)].clone()
                })
            })
            .collect()
    }

    /// Matrix times column vector.
    pub fn right_mul(&self, v: &[T]) -> Vec<T> {
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(T::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
            })
            .collect()
    }

    pub fn scale(&self, c: &T) -> Self {
        self.map(|x| x.clone() * c.clone())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a.clone() - b.clone()).to_f64().abs())
            .fold(0.0, f64::max)
    }

    pub fn to_f64(&self) -> Matrix<f64> {
        self.map(Scalar::to_f64)
    }
}

impl Matrix<f64> {
    pub fn max_row_sum_error(&self) -> f64 {
        (0..self.rows)
            .map(|i| (self.row(i).iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Row-stochastic check: entries nonnegative, rows sum to one within `tol`.
    pub fn is_row_stochastic(&self, tol: f64) -> bool {
        self.data.iter().all(|&x| x >= -tol && x.is_finite()) && self.max_row_sum_error() <= tol
    }

    pub fn power(&self, n: usize) -> Result<Self> {
        if !self.is_square() {
            return input("matrix power needs a square matrix");
        }
        let mut out = Self::identity(self.rows);
        for _ in 0..n {
            out = out.matmul(self)?;
        }
        Ok(out)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
///
/// Returns `None` when a pivot is negligible relative to the matrix scale
/// (exactly zero for rationals).
pub fn solve_linear<T: Scalar>(mut a: Matrix<T>, mut b: Vec<T>) -> Option<Vec<T>> {
    let n = a.rows();
    assert!(a.is_square() && b.len() == n, "solve_linear: shape mismatch");
    let scale = a
        .as_slice()
        .iter()
        .map(|x| x.to_f64().abs())
        .fold(0.0, f64::max)
        .max(1.0);
    let pivot_tol = 1e-12 * scale;
    for col in 0..n {
        let mut best = col;
        for r in col + 1..n {
            if a[(r, col)].abs() > a[(best, col)].abs() {
                best = r;
            }
        }
        if a[(best, col)].is_negligible(pivot_tol) {
            return None;
        }
        if best != col {
            for j in 0..n {
                let tmp = a[(col, j)].clone();
                a[(col, j)] = a[(best, j)].clone();
                a[(best, j)] = tmp;
            }
            b.swap(col, best);
        }
        let pivot = a[(col, col)].clone();
        for r in col + 1..n {
            if a[(r, col)].is_negligible(0.0) {
                continue;
            }
            let factor = a[(r, col)].clone() / pivot.clone();
            for j in col..n {
                let v = a[(r, j)].clone() - factor.clone() * a[(col, j)].clone();
                a[(r, j)] = v;
            }
            let v = b[r].clone() - factor * b[col].clone();
            b[r] = v;
        }
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut acc = b[i].clone();
        for j in i + 1..n {
            acc = acc - a[(i, j)].clone() * x[j].clone();
        }
        x[i] = acc / a[(i, i)].clone();
    }
    Some(x)
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

pub fn parse_matrix(text: &str) -> Result<Matrix<f64>> {
    let mut rows = Vec::new();
    for (lineno, line) in data_lines(text) {
        let row = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| Error::Input(format!("line {lineno}: bad number {tok:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return input("matrix text contains no rows");
    }
    Matrix::from_rows(rows)
}

/// Same format as [`parse_matrix`], but entries are read as exact decimals or
/// fractions.
pub fn parse_rational_matrix(text: &str) -> Result<Matrix<Rational>> {
    let mut rows = Vec::new();
    for (lineno, line) in data_lines(text) {
        let row = line
            .split_whitespace()
            .map(|tok| {
                parse_rational(tok).map_err(|e| Error::Input(format!("line {lineno}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return input("matrix text contains no rows");
    }
    Matrix::from_rows(rows)
}

pub fn format_matrix(m: &Matrix<f64>, header: &[&str]) -> String {
    let mut out = String::new();
    for h in header {
        let _ = writeln!(out, "# {h}");
    }
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().map(|x| format!("{x}")).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_format_skips_comments() {
        let m = parse_matrix("# distances\n0 1\n\n  # more\n1 0\n").unwrap();
        assert_eq!(m.rows(), 2);
        assert_eq!(m[(0, 1)], 1.0);
        let back = parse_matrix(&format_matrix(&m, &["roundtrip"])).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn ragged_text_rejected() {
        assert!(parse_matrix("0 1\n1\n").is_err());
        assert!(parse_matrix("# only comments\n").is_err());
        assert!(parse_matrix("0 x\n").is_err());
    }

    #[test]
    fn solves_small_systems_in_both_fields() {
        let a = Matrix::from_rows(vec![vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let x = solve_linear(a, vec![3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-14 && (x[1] - 1.4).abs() < 1e-14);

        let a = Matrix::from_rows(vec![
            vec![Rational::from_int(2), Rational::from_int(1)],
            vec![Rational::from_int(1), Rational::from_int(3)],
        ])
        .unwrap();
        let x = solve_linear(a, vec![Rational::from_int(3), Rational::from_int(5)]).unwrap();
        assert_eq!(x, vec![Rational::ratio(4, 5), Rational::ratio(7, 5)]);
    }

    #[test]
    fn singular_system_detected() {
        let a = Matrix::from_rows(vec![vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(solve_linear(a, vec![1.0, 2.0]).is_none());
    }
}
