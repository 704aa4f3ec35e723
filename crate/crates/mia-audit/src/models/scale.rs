//! Min-max feature scaling with fold-back into linear maps.

use ndarray::{Array2, ArrayView2};

/// Per-column min-max scaler onto [0, 1]; constant columns map to 0.
#[derive(Debug, Clone)]
pub(crate) struct MinMaxScaler {
    lo: Vec<f64>,
    range: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(x: ArrayView2<f64>) -> Self {
        let d = x.ncols();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for row in x.rows() {
            for (j, &v) in row.iter().enumerate() {
                lo[j] = lo[j].min(v);
                hi[j] = hi[j].max(v);
            }
        }
        let range = lo
            .iter()
            .zip(&hi)
            .map(|(&l, &h)| if h > l { h - l } else { 1.0 })
            .collect();
        MinMaxScaler { lo, range }
    }

    pub fn transform(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut out = x.to_owned();
        for mut row in out.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (*v - self.lo[j]) / self.range[j];
            }
        }
        out
    }

    /// Rewrites a linear map trained on scaled inputs so that it consumes
    /// raw inputs: `w·(x − lo)/range + b  =  (w/range)·x + (b − w·lo/range)`.
    pub fn fold_into_linear(&self, weights: &mut [f64], bias: &mut [f64], dim: usize) {
        let rows = bias.len();
        debug_assert_eq!(weights.len(), rows * dim);
        for r in 0..rows {
            let mut shift = 0.0;
            for j in 0..dim {
                let w = &mut weights[r * dim + j];
                shift += *w * self.lo[j] / self.range[j];
                *w /= self.range[j];
            }
            bias[r] -= shift;
        }
    }
}
