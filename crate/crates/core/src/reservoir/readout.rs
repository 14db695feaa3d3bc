use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Options for fitting a linear readout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadoutOptions {
    /// Tikhonov penalty; `0` gives the minimum-norm least-squares solution.
    pub ridge: f64,
    /// Fit an unpenalised constant term.
    pub intercept: bool,
}

impl Default for ReadoutOptions {
    fn default() -> Self {
        Self { ridge: 0.0, intercept: true }
    }
}

/// Trained linear map from reservoir states to outputs.
///
/// `coefficients` has one row per output sequence. With `intercept` set the
/// last column holds the constant term.
#[derive(Debug, Clone, PartialEq)]
pub struct Readout {
    pub coefficients: DMatrix<f64>,
    pub intercept: bool,
}

impl Readout {
    pub fn n_outputs(&self) -> usize {
        self.coefficients.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.coefficients.ncols() - usize::from(self.intercept)
    }

    /// Outputs for each state row, shape `T x n_outputs`.
    pub fn predict(&self, states: &DMatrix<f64>) -> DMatrix<f64> {
        let p = self.n_features();
        assert_eq!(states.ncols(), p, "state width does not match readout");
        let weights = self.coefficients.columns(0, p);
        let mut out = states * weights.transpose();
        if self.intercept {
            let c = self.coefficients.column(p);
            for mut row in out.row_iter_mut() {
                row += c.transpose();
            }
        }
        out
    }
}

/// Least-squares readout without intercept.
pub fn train_readout(states: &DMatrix<f64>, targets: &DMatrix<f64>, ridge: f64) -> Readout {
    train_readout_with(states, targets, ReadoutOptions { ridge, intercept: false })
}

/// Least-squares readout via thin SVD.
///
/// Singular values below `eps * max(T, p) * s_max` are dropped when
/// `ridge == 0`, which yields the minimum-norm solution for rank-deficient
/// state matrices.
pub fn train_readout_with(states: &DMatrix<f64>, targets: &DMatrix<f64>, opts: ReadoutOptions) -> Readout {
    assert_eq!(states.nrows(), targets.nrows(), "states and targets need equal row counts");
    assert!(states.nrows() >= 1, "need at least one training row");
    assert!(opts.ridge >= 0.0);

    let (x, y, x_mean, y_mean) = if opts.intercept {
        let x_mean = column_means(states);
        let y_mean = column_means(targets);
        let mut x = states.clone();
        let mut y = targets.clone();
        for mut row in x.row_iter_mut() {
            row -= x_mean.transpose();
        }
        for mut row in y.row_iter_mut() {
            row -= y_mean.transpose();
        }
        (x, y, Some(x_mean), Some(y_mean))
    } else {
        (states.clone(), targets.clone(), None, None)
    };

    let beta = solve_least_squares(x, &y, opts.ridge); // p x m
    let p = states.ncols();
    let m = targets.ncols();
    let cols = p + usize::from(opts.intercept);
    let mut coefficients = DMatrix::zeros(m, cols);
    coefficients.columns_mut(0, p).copy_from(&beta.transpose());
    if let (Some(xm), Some(ym)) = (x_mean, y_mean) {
        let offset = ym - beta.transpose() * xm;
        coefficients.column_mut(p).copy_from(&offset);
    }
    Readout { coefficients, intercept: opts.intercept }
}

fn column_means(m: &DMatrix<f64>) -> DVector<f64> {
    let rows = m.nrows() as f64;
    DVector::from_iterator(m.ncols(), m.column_iter().map(|c| c.sum() / rows))
}

fn solve_least_squares(x: DMatrix<f64>, y: &DMatrix<f64>, ridge: f64) -> DMatrix<f64> {
    let (t, p) = x.shape();
    let svd = x.svd(true, true);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let s = svd.singular_values;
    let s_max = s.max();
    let cutoff = f64::EPSILON * t.max(p) as f64 * s_max;
    let scale = DVector::from_iterator(
        s.len(),
        s.iter().map(|&si| {
            if ridge > 0.0 {
                si / (si * si + ridge)
            } else if si > cutoff && si > 0.0 {
                1.0 / si
            } else {
                0.0
            }
        }),
    );
    let mut uty = u.transpose() * y;
    for (mut row, k) in uty.row_iter_mut().zip(scale.iter()) {
        row *= *k;
    }
    v_t.transpose() * uty
}
