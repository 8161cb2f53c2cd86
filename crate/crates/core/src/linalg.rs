//! Inverse of the elbow Gram matrix `X̃_E X̃_Eᵀ` with rank-one updates.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{dot, Dataset};

/// Largest accepted condition number of an elbow Gram.
pub const MAX_CONDITION: f64 = 1e12;

/// Updates between forced refactorizations.
pub const REFRESH_EVERY: usize = 64;

/// Self-check threshold that triggers a refactorization.
pub const DRIFT_TOL: f64 = 1e-8;

/// `(X̃_E X̃_Eᵀ)⁻¹` together with the ordered elbow cases and their rows.
#[derive(Debug, Clone)]
pub struct ElbowGramInverse {
    inv: DMatrix<f64>,
    elbow: Vec<usize>,
    rows: Vec<Vec<f64>>,
    updates: usize,
}

fn singular(elbow: &[usize]) -> Error {
    Error::SingularElbow { indices: elbow.to_vec() }
}

impl ElbowGramInverse {
    /// Inverts the Gram of the given augmented rows.
    pub fn from_rows(rows: Vec<Vec<f64>>, elbow: Vec<usize>) -> Result<Self> {
        if rows.len() != elbow.len() {
            return Err(Error::DimensionMismatch { what: "elbow rows", expected: elbow.len(), found: rows.len() });
        }
        let inv = invert_gram(&rows).ok_or_else(|| singular(&elbow))?;
        Ok(ElbowGramInverse { inv, elbow, rows, updates: 0 })
    }

    /// Inverse Gram for the listed elbow cases of `data`.
    pub fn for_elbow(data: &Dataset, elbow: &[usize]) -> Result<Self> {
        let rows = elbow.iter().map(|&i| data.xtilde_row(i)).collect();
        Self::from_rows(rows, elbow.to_vec())
    }

    /// Empty elbow.
    pub fn empty() -> Self {
        ElbowGramInverse { inv: DMatrix::zeros(0, 0), elbow: Vec::new(), rows: Vec::new(), updates: 0 }
    }

    pub fn inv(&self) -> &DMatrix<f64> {
        &self.inv
    }

    pub fn elbow(&self) -> &[usize] {
        &self.elbow
    }

    pub fn len(&self) -> usize {
        self.elbow.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elbow.is_empty()
    }

    pub fn position(&self, case: usize) -> Option<usize> {
        self.elbow.iter().position(|&e| e == case)
    }

    /// Appends a case by the bordered-inverse identity.
    pub fn add_row(&mut self, row: Vec<f64>, case: usize) -> Result<()> {
        let k = self.elbow.len();
        if k == 0 {
            let d = dot(&row, &row);
            if d <= 0.0 {
                return Err(singular(&[case]));
            }
            self.inv = DMatrix::from_element(1, 1, 1.0 / d);
            self.elbow.push(case);
            self.rows.push(row);
            return Ok(());
        }
        let c = DVector::from_iterator(k, self.rows.iter().map(|r| dot(r, &row)));
        let d = dot(&row, &row);
        let u = &self.inv * &c;
        let s = d - c.dot(&u);
        if !(s > d / MAX_CONDITION) {
            let mut idx = self.elbow.clone();
            idx.push(case);
            return Err(singular(&idx));
        }
        let mut next = DMatrix::zeros(k + 1, k + 1);
        for j in 0..k {
            for i in 0..k {
                next[(i, j)] = self.inv[(i, j)] + u[i] * u[j] / s;
            }
            next[(k, j)] = -u[j] / s;
            next[(j, k)] = -u[j] / s;
        }
        next[(k, k)] = 1.0 / s;
        self.inv = next;
        self.elbow.push(case);
        self.rows.push(row);
        self.bump()
    }

    pub fn add(&mut self, data: &Dataset, case: usize) -> Result<()> {
        self.add_row(data.xtilde_row(case), case)
    }

    /// Removes the case at `position` by the downdate identity.
    pub fn remove(&mut self, position: usize) -> Result<()> {
        let k = self.elbow.len();
        if k < 2 {
            return Err(Error::Contract("cannot downdate an elbow of size below two"));
        }
        if position >= k {
            return Err(Error::Contract("elbow position out of range"));
        }
        let piv = self.inv[(position, position)];
        if !(piv > 0.0) {
            return Err(singular(&self.elbow));
        }
        let keep: Vec<usize> = (0..k).filter(|&i| i != position).collect();
        let next = DMatrix::from_fn(k - 1, k - 1, |a, b| {
            let (i, j) = (keep[a], keep[b]);
            self.inv[(i, j)] - self.inv[(i, position)] * self.inv[(j, position)] / piv
        });
        self.inv = next;
        self.elbow.remove(position);
        self.rows.remove(position);
        self.bump()
    }

    /// Drops the last remaining case.
    pub fn clear(&mut self) {
        *self = Self::empty();
    }

    fn bump(&mut self) -> Result<()> {
        self.updates += 1;
        if self.updates >= REFRESH_EVERY {
            self.refresh()?;
        }
        Ok(())
    }

    /// Recomputes the inverse from the stored rows.
    pub fn refresh(&mut self) -> Result<()> {
        self.inv = invert_gram(&self.rows).ok_or_else(|| singular(&self.elbow))?;
        self.updates = 0;
        Ok(())
    }

    /// The Gram matrix itself.
    pub fn gram(&self) -> DMatrix<f64> {
        gram_of(&self.rows)
    }

    /// `max |inv·G − I|`; refactorizes when above [`DRIFT_TOL`].
    pub fn self_check(&mut self) -> Result<f64> {
        let k = self.elbow.len();
        if k == 0 {
            return Ok(0.0);
        }
        let mut e = &self.inv * self.gram();
        for i in 0..k {
            e[(i, i)] -= 1.0;
        }
        let err = e.amax();
        if err > DRIFT_TOL {
            self.refresh()?;
        }
        Ok(err)
    }

    /// `inv · v`.
    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.inv * v
    }

    /// Row sums of the inverse, i.e. `G⁻¹1`.
    pub fn apply_ones(&self) -> DVector<f64> {
        let k = self.elbow.len();
        DVector::from_fn(k, |i, _| self.inv.row(i).sum())
    }
}

fn gram_of(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let k = rows.len();
    let mut g = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..=i {
            let v = dot(&rows[i], &rows[j]);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

fn invert_gram(rows: &[Vec<f64>]) -> Option<DMatrix<f64>> {
    if rows.is_empty() {
        return Some(DMatrix::zeros(0, 0));
    }
    let g = gram_of(rows);
    let inv = spd_inverse(&g)?;
    if condition_1norm(&g, &inv) > MAX_CONDITION {
        return None;
    }
    Some(inv)
}

/// Inverse of a symmetric positive-definite matrix, symmetrized.
pub fn spd_inverse(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let inv = a.clone().cholesky()?.inverse();
    Some((&inv + inv.transpose()) * 0.5)
}

/// `‖A‖₁‖A⁻¹‖₁`.
pub fn condition_1norm(a: &DMatrix<f64>, inv: &DMatrix<f64>) -> f64 {
    let norm1 = |m: &DMatrix<f64>| m.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    norm1(a) * norm1(inv)
}
