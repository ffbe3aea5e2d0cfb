//! Dense tableau simplex for `max c.x  s.t.  A x <= b, x >= 0` with `b >= 0`.
//!
//! Bland's rule is used for both entering and leaving choices so the method
//! terminates on degenerate instances; sizes here are a few dozen rows.

use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution<S = f64> {
    pub value: S,
    pub x: Vec<S>,
    pub pivots: usize,
}

const MAX_PIVOTS: usize = 100_000;

pub fn maximize<S: Scalar>(c: &[S], a: &[Vec<S>], b: &[S]) -> Result<LpSolution<S>> {
    let n = c.len();
    let m = a.len();
    if b.len() != m {
        return invalid(format!("lp: {} rows but {} right-hand sides", m, b.len()));
    }
    if let Some(r) = a.iter().position(|row| row.len() != n) {
        return invalid(format!("lp: row {} has wrong width", r));
    }
    if b.iter().any(|v| *v < S::zero() || !v.is_finite()) {
        return invalid("lp: right-hand side must be finite and nonnegative");
    }

    let width = n + m + 1;
    let mut tab = vec![S::zero(); (m + 1) * width];
    for i in 0..m {
        let row = &mut tab[i * width..(i + 1) * width];
        row[..n].copy_from_slice(&a[i]);
        row[n + i] = S::one();
        row[width - 1] = b[i];
    }
    {
        let z = &mut tab[m * width..];
        for j in 0..n {
            z[j] = -c[j];
        }
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    let eps = S::pivot_eps();
    let mut pivots = 0;

    loop {
        let z = &tab[m * width..];
        let entering = (0..n + m).find(|&j| z[j] < -eps);
        let Some(e) = entering else { break };

        let mut leave: Option<(usize, S)> = None;
        for i in 0..m {
            let coef = tab[i * width + e];
            if coef > eps {
                let ratio = tab[i * width + width - 1] / coef;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < lr - eps || (ratio <= lr + eps && basis[i] < basis[li]) {
                            Some((i, ratio))
                        } else {
                            Some((li, lr))
                        }
                    }
                };
            }
        }
        let Some((r, _)) = leave else {
            return invalid("lp: objective is unbounded");
        };

        pivot(&mut tab, width, m + 1, r, e);
        basis[r] = e;
        pivots += 1;
        if pivots > MAX_PIVOTS {
            return Err(Error::Consistency("lp: pivot limit reached".into()));
        }
    }

    let mut x = vec![S::zero(); n];
    for (i, &bv) in basis.iter().enumerate() {
        if bv < n {
            x[bv] = tab[i * width + width - 1];
        }
    }
    let value = tab[m * width + width - 1];
    Ok(LpSolution { value, x, pivots })
}

fn pivot<S: Scalar>(tab: &mut [S], width: usize, rows: usize, r: usize, e: usize) {
    let p = tab[r * width + e];
    for j in 0..width {
        tab[r * width + j] = tab[r * width + j] / p;
    }
    for i in 0..rows {
        if i == r {
            continue;
        }
        let f = tab[i * width + e];
        if f == S::zero() {
            continue;
        }
        for j in 0..width {
            let v = tab[r * width + j];
            tab[i * width + j] = tab[i * width + j] - f * v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_instance() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18  -> 36 at (2, 6)
        let c = [3.0f64, 5.0];
        let a = vec![vec![1.0, 0.0], vec![0.0, 2.0], vec![3.0, 2.0]];
        let b = [4.0, 12.0, 18.0];
        let s = maximize(&c, &a, &b).unwrap();
        assert!((s.value - 36.0).abs() < 1e-12);
        assert!((s.x[0] - 2.0).abs() < 1e-12 && (s.x[1] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_is_reported() {
        let s = maximize(&[1.0], &[vec![-1.0]], &[1.0]);
        assert!(matches!(s, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn degenerate_origin() {
        let c = [1.0f64, 1.0];
        let a = vec![vec![1.0, -1.0], vec![-1.0, 1.0], vec![1.0, 1.0]];
        let s = maximize(&c, &a, &[0.0, 0.0, 2.0]).unwrap();
        assert!((s.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn single_precision() {
        let s = maximize::<f32>(&[1.0, 2.0], &[vec![1.0, 1.0]], &[3.0]).unwrap();
        assert!((s.value - 6.0).abs() < 1e-5);
    }
}
