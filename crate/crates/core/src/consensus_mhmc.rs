//! Metropolis-Hastings Markov-chain weights and distributed averaging.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::info_filter::InfoIncrement;
use crate::network::GraphSnapshot;

/// Symmetric doubly stochastic averaging weights for one graph snapshot,
/// stored per row as `(column, weight)` with the diagonal first.
#[derive(Debug, Clone, PartialEq)]
pub struct MhWeights {
    rows: Vec<Vec<(usize, f64)>>,
}

impl MhWeights {
    pub fn n_agents(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i]
            .iter()
            .find(|(c, _)| *c == j)
            .map_or(0.0, |(_, w)| *w)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n_agents();
        let mut m = DMatrix::zeros(n, n);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, w) in row {
                m[(i, j)] = w;
            }
        }
        m
    }
}

/// `γ_ij = 1 / (1 + max{d_i, d_j})` on edges, `γ_ii = 1 − Σ_j γ_ij`, where the
/// degrees exclude the node itself.
pub fn mh_weights(graph: &GraphSnapshot) -> MhWeights {
    let rows = (0..graph.n_agents())
        .map(|i| {
            let di = graph.degree(i);
            let off: Vec<(usize, f64)> = graph
                .neighbors(i)
                .iter()
                .map(|&j| (j, 1.0 / (1.0 + di.max(graph.degree(j)) as f64)))
                .collect();
            let diag = 1.0 - off.iter().map(|(_, w)| w).sum::<f64>();
            std::iter::once((i, diag)).chain(off).collect()
        })
        .collect();
    MhWeights { rows }
}

/// Values that can be mixed linearly by an averaging round.
pub trait Mixable: Sized {
    fn shape(&self) -> (usize, usize);
    fn zeros_like(&self) -> Self;
    /// `self += a * x`
    fn add_scaled(&mut self, a: f64, x: &Self);
}

impl Mixable for f64 {
    fn shape(&self) -> (usize, usize) {
        (1, 1)
    }
    fn zeros_like(&self) -> Self {
        0.0
    }
    fn add_scaled(&mut self, a: f64, x: &Self) {
        *self += a * x;
    }
}

impl Mixable for DVector<f64> {
    fn shape(&self) -> (usize, usize) {
        (self.len(), 1)
    }
    fn zeros_like(&self) -> Self {
        DVector::zeros(self.len())
    }
    fn add_scaled(&mut self, a: f64, x: &Self) {
        self.axpy(a, x, 1.0);
    }
}

impl Mixable for DMatrix<f64> {
    fn shape(&self) -> (usize, usize) {
        DMatrix::shape(self)
    }
    fn zeros_like(&self) -> Self {
        DMatrix::zeros(self.nrows(), self.ncols())
    }
    fn add_scaled(&mut self, a: f64, x: &Self) {
        crate::linalg::add_scaled(self, a, x);
    }
}

impl Mixable for InfoIncrement {
    fn shape(&self) -> (usize, usize) {
        (self.di.len(), self.d_info.ncols())
    }
    fn zeros_like(&self) -> Self {
        InfoIncrement::zero(self.di.len())
    }
    fn add_scaled(&mut self, a: f64, x: &Self) {
        self.di.axpy(a, &x.di, 1.0);
        crate::linalg::add_scaled(&mut self.d_info, a, &x.d_info);
    }
}

/// One averaging round: `x_i ← Σ_j γ_ij x_j`.
pub fn mh_average_round<T: Mixable>(values: &[T], weights: &MhWeights) -> Result<Vec<T>> {
    if values.len() != weights.n_agents() {
        return Err(Error::dims(
            "mh_average_round agents",
            weights.n_agents(),
            values.len(),
        ));
    }
    let Some(first) = values.first() else {
        return Ok(Vec::new());
    };
    let shape = first.shape();
    if let Some(bad) = values.iter().find(|v| v.shape() != shape) {
        return Err(Error::dims(
            "mh_average_round value shape",
            shape.0,
            bad.shape().0,
        ));
    }
    Ok(weights
        .rows
        .iter()
        .map(|row| {
            let mut acc = first.zeros_like();
            for &(j, w) in row {
                if w != 0.0 {
                    acc.add_scaled(w, &values[j]);
                }
            }
            acc
        })
        .collect())
}
