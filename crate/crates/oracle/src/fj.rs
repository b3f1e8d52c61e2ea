use nalgebra::{DMatrix, DVector};

/// A network given as weighted directed slots.
#[derive(Clone, Debug)]
pub struct DenseNetwork {
    pub n: usize,
    /// `(tail, head, weight)`; repeated slots add up.
    pub slots: Vec<(usize, usize, f64)>,
}

impl DenseNetwork {
    pub fn weights(&self) -> DMatrix<f64> {
        let mut w = DMatrix::zeros(self.n, self.n);
        for &(i, j, x) in &self.slots {
            w[(i, j)] += x;
        }
        w
    }

    /// `A = I + diag(W 1) - W`.
    pub fn system_matrix(&self) -> DMatrix<f64> {
        let w = self.weights();
        let mut a = -w.clone();
        for i in 0..self.n {
            a[(i, i)] += 1.0 + w.row(i).sum();
        }
        a
    }

    pub fn equilibrium(&self, s: &[f64]) -> Vec<f64> {
        let a = self.system_matrix();
        let y = a
            .lu()
            .solve(&DVector::from_column_slice(s))
            .expect("A is diagonally dominant");
        y.iter().copied().collect()
    }
}

/// `J_1F` densely: column `k` is `sum over slots (i, j) of k` of
/// `(y_i - y_j) e_i`.
pub fn j1f(n: usize, variables: &[Vec<(usize, usize)>], y: &[f64]) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(n, variables.len());
    for (k, slots) in variables.iter().enumerate() {
        for &(a, b) in slots {
            j[(a, k)] += y[a] - y[b];
        }
    }
    j
}

/// Explicit sensitivity `dy*/dw = -A^{-1} J_1F`, an `n x m` matrix.
pub fn sensitivity(
    network: &DenseNetwork,
    variables: &[Vec<(usize, usize)>],
    s: &[f64],
) -> DMatrix<f64> {
    let y = network.equilibrium(s);
    let a = network.system_matrix();
    let j = j1f(network.n, variables, &y);
    -a.lu().solve(&j).expect("A is diagonally dominant")
}
