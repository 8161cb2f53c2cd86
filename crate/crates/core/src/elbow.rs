//! The affine elbow system that pins `(λβ₀, θ_E)` once the duals outside the elbow are fixed.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::ElbowGramInverse;
use crate::model::{dot, Dataset, Partition, QuantileSolution};

/// Solves for `(λβ₀, θ_E)` given `theta` outside the elbow; writes `θ_E` into `theta`
/// and returns `λβ₀`.
pub fn solve_elbow_duals(
    data: &Dataset,
    lambda: f64,
    gram: &ElbowGramInverse,
    theta: &mut DVector<f64>,
) -> Result<f64> {
    let elbow = gram.elbow();
    let k = elbow.len();
    if k == 0 {
        return Err(Error::Contract("elbow system needs a nonempty elbow"));
    }
    let p = data.p();
    let mut in_elbow = alloc::vec![false; data.n()];
    for &e in elbow {
        in_elbow[e] = true;
    }
    let mut s = 0.0;
    let mut u = DVector::zeros(p);
    for i in 0..data.n() {
        if in_elbow[i] {
            continue;
        }
        let t = theta[i];
        if t != 0.0 {
            s += t;
            for (uj, xj) in u.iter_mut().zip(data.row(i)) {
                *uj += t * xj;
            }
        }
    }
    let rhs =
        DVector::from_iterator(k, elbow.iter().map(|&e| lambda * data.y()[e] - s - dot(data.row(e), u.as_slice())));
    let g_rhs = gram.apply(&rhs);
    let g_one = gram.apply_ones();
    let denom = g_one.sum();
    if !(denom > 0.0) {
        return Err(Error::SingularElbow { indices: elbow.to_vec() });
    }
    let mut alpha0 = (g_rhs.sum() + s) / denom;
    for (j, &e) in elbow.iter().enumerate() {
        theta[e] = g_rhs[j] - alpha0 * g_one[j];
    }
    for _ in 0..REFINE_STEPS {
        // residuals of λy_E = λβ₀1 + X_E Xᵀθ and of Σθ = 0
        let xt_theta = data.xt_mul(theta);
        let e = DVector::from_iterator(
            k,
            elbow.iter().map(|&i| lambda * data.y()[i] - alpha0 - dot(data.row(i), xt_theta.as_slice())),
        );
        let bal = theta.sum();
        let g_e = gram.apply(&e);
        let shift = (g_e.sum() + bal) / denom;
        alpha0 += shift - bal;
        for (j, &i) in elbow.iter().enumerate() {
            theta[i] += g_e[j] - shift * g_one[j];
        }
    }
    Ok(alpha0)
}

/// Iterative refinement passes after the direct solve.
const REFINE_STEPS: usize = 2;

/// Recovers `β = Xᵀθ/λ`, `β₀ = λβ₀/λ` and residuals.
pub fn assemble(
    data: &Dataset,
    lambda: f64,
    alpha0: f64,
    theta: DVector<f64>,
    partition: Partition,
    omega: f64,
    starred: Option<usize>,
) -> QuantileSolution {
    let beta = data.xt_mul(&theta) / lambda;
    let beta0 = alpha0 / lambda;
    let residuals = data.residuals(beta0, &beta);
    QuantileSolution { beta0, beta, theta, residuals, partition, omega, starred }
}
