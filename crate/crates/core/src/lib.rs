//! Ridge-penalized quantile regression solution paths in λ and in a case weight ω.
//!
//! The ω path moves one case's weight from 1 to 0 and lands exactly on the
//! leave-one-out fit, which gives exact LOO cross-validation, case influence
//! graphs and case-weight degrees of freedom.
//!
//! ```
//! use casepath_core::{full_fit_at, build_omega_path, Dataset, FitConfig};
//!
//! let rows = vec![vec![0.1], vec![1.3], vec![2.2], vec![2.9], vec![4.4], vec![5.0]];
//! let y = [0.3, 1.1, 2.6, 2.7, 4.1, 5.6];
//! let data = Dataset::from_rows(&rows, &y).unwrap();
//! let cfg = FitConfig::new(0.3, 0.5).unwrap();
//! let full = full_fit_at(&data, cfg.tau, cfg.lambda).unwrap();
//! let path = build_omega_path(&data, &cfg, 2, &full).unwrap();
//! let loo = path.loo_prediction(&data);
//! assert!(loo.is_finite());
//! ```

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod cv;
pub mod diagnostics;
pub mod elbow;
pub mod error;
pub mod lambda_path;
pub mod linalg;
pub mod model;
pub mod omega_path;
pub mod oracle;

pub use cv::{exact_loo_cv, flip_analysis, CvCurve, CvPoint, FlipRecord, LooContext, Scenario};
pub use diagnostics::{
    df_estimate, influence_graph_qr, influence_graph_ridge, qr_df, ridge_df, ridge_weighted_fit, DfEstimate,
    InfluenceGraph, RidgeHat, RidgeInfluence, Scaling,
};
pub use error::{Error, Result};
pub use lambda_path::{build_lambda_path, full_fit_at, lambda_grid, log_grid, LambdaPath};
pub use linalg::ElbowGramInverse;
pub use model::{
    check_loss, kkt_residual, objective, partition_from_residuals, Dataset, FitConfig, Partition, QuantileSolution,
    Side,
};
pub use omega_path::{build_omega_path, next_breakpoint, omega_terminal, slopes, Event, OmegaPath, OmegaSegment};
pub use oracle::{brute_force_loo, oracle_solve, OracleConfig};
