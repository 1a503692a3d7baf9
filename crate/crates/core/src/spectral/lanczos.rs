//! Thick-restart Lanczos for the lowest eigenpairs of an operator that is
//! symmetric in a weighted inner product `<x, y> = sum w_i x_i y_i`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{IbcError, Result};
use crate::fock::OperatorHandle;

/// A linear map known only through its action.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    /// Weights of the inner product in which the operator is symmetric.
    fn weights(&self) -> &[f64];
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl LinearOperator for OperatorHandle {
    fn dim(&self) -> usize {
        OperatorHandle::dim(self)
    }

    fn weights(&self) -> &[f64] {
        &self.space().measure
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.apply_into(x, y)
    }
}

/// Diagonal operator in the plain Euclidean inner product.
#[derive(Debug, Clone)]
pub struct DiagonalOperator {
    pub diagonal: Vec<f64>,
    weights: Vec<f64>,
}

impl DiagonalOperator {
    pub fn new(diagonal: Vec<f64>) -> Self {
        let weights = vec![1.0; diagonal.len()];
        Self { diagonal, weights }
    }
}

impl LinearOperator for DiagonalOperator {
    fn dim(&self) -> usize {
        self.diagonal.len()
    }

    fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for ((y, x), d) in y.iter_mut().zip(x).zip(&self.diagonal) {
            *y = d * x;
        }
    }
}

/// Dense symmetric matrix in the Euclidean inner product.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    pub matrix: DMatrix<f64>,
    weights: Vec<f64>,
}

impl DenseOperator {
    pub fn new(matrix: DMatrix<f64>) -> Self {
        let weights = vec![1.0; matrix.nrows()];
        Self { matrix, weights }
    }
}

impl LinearOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, y) in y.iter_mut().enumerate() {
            *y = (0..x.len()).map(|j| self.matrix[(i, j)] * x[j]).sum();
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenOptions {
    /// Number of lowest eigenpairs.
    pub k: usize,
    /// Residual target `||Ax - theta x|| <= tol * max(1, |theta|)`.
    pub tol: f64,
    pub max_basis: usize,
    pub keep: usize,
    pub max_matvecs: usize,
    pub check_every: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            k: 1,
            tol: 1e-9,
            max_basis: 160,
            keep: 40,
            max_matvecs: 50_000,
            check_every: 20,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralResult {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// True residual norms `||A x - theta x||` of the returned pairs.
    pub residual_norms: Vec<f64>,
    /// Operator applications used.
    pub iterations: usize,
    pub converged: bool,
    #[serde(skip)]
    pub eigenvectors: Vec<Vec<f64>>,
}

impl SpectralResult {
    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// Errors unless every pair met the residual contract.
    pub fn require_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(IbcError::NotConverged {
                iterations: self.iterations,
                residual: self.residual_norms.iter().cloned().fold(0.0, f64::max),
            })
        }
    }
}

/// Lowest `k` eigenvalues with default options.
pub fn lowest_eigenvalues<A: LinearOperator + ?Sized>(op: &A, k: usize, tol: f64) -> Result<SpectralResult> {
    lowest_eigenpairs(
        op,
        &EigenOptions {
            k,
            tol,
            ..Default::default()
        },
    )
}

fn wdot(w: &[f64], x: &[f64], y: &[f64]) -> f64 {
    w.iter().zip(x).zip(y).map(|((w, x), y)| w * x * y).sum()
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(y, x)| *y += a * x);
}

fn scale(a: f64, x: &mut [f64]) {
    x.iter_mut().for_each(|x| *x *= a);
}

/// Orthogonalises `w` against `basis` twice; returns the accumulated coefficients.
fn orthogonalize(weights: &[f64], basis: &[Vec<f64>], w: &mut [f64]) -> Vec<f64> {
    let mut coef = vec![0.0; basis.len()];
    for _ in 0..2 {
        for (c, v) in coef.iter_mut().zip(basis) {
            let h = wdot(weights, v, w);
            axpy(-h, v, w);
            *c += h;
        }
    }
    coef
}

fn random_unit(weights: &[f64], basis: &[Vec<f64>], rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
    for _ in 0..5 {
        let mut x: Vec<f64> = weights
            .iter()
            .map(|w| rng.sample::<f64, _>(StandardNormal) / w.sqrt())
            .collect();
        orthogonalize(weights, basis, &mut x);
        let n = wdot(weights, &x, &x).sqrt();
        if n > 1e-8 {
            scale(1.0 / n, &mut x);
            return Some(x);
        }
    }
    None
}

struct Ritz {
    values: Vec<f64>,
    vectors: DMatrix<f64>,
}

fn ritz(t: &DMatrix<f64>) -> Ritz {
    let eig = SymmetricEigen::new(t.clone());
    let mut order: Vec<usize> = (0..t.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(t.nrows(), t.nrows(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ritz { values, vectors }
}

fn combine(basis: &[Vec<f64>], y: &DMatrix<f64>, col: usize) -> Vec<f64> {
    let mut x = vec![0.0; basis[0].len()];
    for (i, v) in basis.iter().enumerate() {
        axpy(y[(i, col)], v, &mut x);
    }
    x
}

/// Thick-restart Lanczos with full reorthogonalisation.
pub fn lowest_eigenpairs<A: LinearOperator + ?Sized>(op: &A, opts: &EigenOptions) -> Result<SpectralResult> {
    let n = op.dim();
    if opts.k == 0 || opts.k > n {
        return Err(IbcError::invalid("k", format!("{} not in 1..={n}", opts.k)));
    }
    if !(opts.tol > 0.0) {
        return Err(IbcError::invalid("tol", "must be > 0"));
    }
    let weights = op.weights();
    let max_basis = opts.max_basis.clamp(opts.k + 2, n.max(opts.k + 2)).min(n);
    let keep = opts.keep.clamp(opts.k, max_basis.saturating_sub(1).max(opts.k));
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut basis: Vec<Vec<f64>> = vec![random_unit(weights, &[], &mut rng).expect("nonzero dimension")];
    let mut t = DMatrix::<f64>::zeros(max_basis, max_basis);
    let mut matvecs = 0;
    let mut since_check = 0;
    let mut w = vec![0.0; n];

    loop {
        let j = basis.len() - 1;
        op.apply(&basis[j], &mut w);
        matvecs += 1;
        since_check += 1;
        let coef = orthogonalize(weights, &basis, &mut w);
        for (i, c) in coef.iter().enumerate() {
            t[(i, j)] = *c;
            t[(j, i)] = *c;
        }
        let mut beta = wdot(weights, &w, &w).sqrt();
        let scale_ref = coef[j].abs().max(1.0);
        let breakdown = beta <= 1e-12 * scale_ref;
        let len = basis.len();
        let full = len == max_basis;
        let exhausted = len == n;

        if full || breakdown || exhausted || since_check >= opts.check_every || matvecs >= opts.max_matvecs {
            since_check = 0;
            let tm = t.view((0, 0), (len, len)).into_owned();
            let r = ritz(&tm);
            let k = opts.k.min(len);
            let coupling = if breakdown { 0.0 } else { beta };
            let estimates: Vec<f64> = (0..k).map(|c| coupling * r.vectors[(len - 1, c)].abs()).collect();
            let small_enough = k == opts.k
                && estimates
                    .iter()
                    .zip(&r.values)
                    .all(|(e, th)| *e <= opts.tol * th.abs().max(1.0));
            let out_of_budget = matvecs >= opts.max_matvecs;
            if small_enough || out_of_budget || (exhausted && (breakdown || len == n)) {
                let result = finish(op, &basis, &r, k, matvecs, opts.tol);
                if result.converged || out_of_budget || exhausted {
                    return Ok(result);
                }
            }
            if breakdown {
                match random_unit(weights, &basis, &mut rng) {
                    Some(x) => {
                        w.copy_from_slice(&x);
                        beta = 0.0;
                    }
                    None => return Ok(finish(op, &basis, &r, k, matvecs, opts.tol)),
                }
            }
            if full {
                let kept = keep.min(len - 1);
                let mut new_basis: Vec<Vec<f64>> = (0..kept).map(|c| combine(&basis, &r.vectors, c)).collect();
                let mut next = w.clone();
                if beta > 0.0 {
                    scale(1.0 / beta, &mut next);
                }
                // re-orthogonalise the residual against the compressed basis
                orthogonalize(weights, &new_basis, &mut next);
                let nn = wdot(weights, &next, &next).sqrt();
                scale(1.0 / nn, &mut next);
                new_basis.push(next);
                t.fill(0.0);
                for c in 0..kept {
                    t[(c, c)] = r.values[c];
                    let s = beta * r.vectors[(len - 1, c)];
                    t[(kept, c)] = s;
                    t[(c, kept)] = s;
                }
                basis = new_basis;
                continue;
            }
        }
        if beta > 0.0 {
            scale(1.0 / beta, &mut w);
        }
        t[(j + 1, j)] = beta;
        t[(j, j + 1)] = beta;
        basis.push(w.clone());
    }
}

fn finish<A: LinearOperator + ?Sized>(
    op: &A,
    basis: &[Vec<f64>],
    r: &Ritz,
    k: usize,
    matvecs: usize,
    tol: f64,
) -> SpectralResult {
    let weights = op.weights();
    let mut eigenvalues = Vec::with_capacity(k);
    let mut residual_norms = Vec::with_capacity(k);
    let mut eigenvectors = Vec::with_capacity(k);
    let mut ax = vec![0.0; op.dim()];
    for c in 0..k {
        let mut x = combine(basis, &r.vectors, c);
        let nx = wdot(weights, &x, &x).sqrt();
        scale(1.0 / nx, &mut x);
        op.apply(&x, &mut ax);
        let theta = wdot(weights, &x, &ax);
        axpy(-theta, &x, &mut ax);
        residual_norms.push(wdot(weights, &ax, &ax).sqrt());
        eigenvalues.push(theta);
        eigenvectors.push(x);
    }
    let converged = eigenvalues
        .iter()
        .zip(&residual_norms)
        .all(|(th, res)| *res <= tol * th.abs().max(1.0));
    SpectralResult {
        eigenvalues,
        residual_norms,
        iterations: matvecs + k,
        converged,
        eigenvectors,
    }
}
