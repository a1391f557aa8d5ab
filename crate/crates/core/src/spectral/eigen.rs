//! Smallest eigenpairs of a sparse symmetric matrix.
//!
//! Small problems go through a dense symmetric decomposition. Larger ones use
//! a thick-restart block Lanczos iteration with full reorthogonalization: the
//! basis is expanded with Krylov directions, Rayleigh–Ritz extracts the
//! smallest Ritz pairs, and the best Ritz vectors are kept across restarts.
//! The block start (one vector per requested pair) captures repeated
//! eigenvalues, e.g. the zero eigenvalue of a disconnected subgraph.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

use super::SparseSymMatrix;
use crate::seed;
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct EigenOptions {
    /// Residual bound relative to `max(1, ‖L‖∞)`.
    pub tol: f64,
    /// Budget of matrix–vector products for the iterative solver.
    pub max_iter: usize,
    /// Matrices of at most this dimension use the dense solver.
    pub dense_threshold: usize,
    /// Lanczos basis size; defaults to `max(3m, m + 20)`.
    pub max_basis: Option<usize>,
    /// Seed for the random start block.
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tol: 1e-8,
            max_iter: 5000,
            dense_threshold: 512,
            max_basis: None,
            seed: 0,
        }
    }
}

/// Eigenvalues in ascending order with matching unit eigenvectors.
#[derive(Clone, Debug)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

impl Eigenpairs {
    /// `‖L v_j − λ_j v_j‖₂`
    pub fn residual(&self, l: &SparseSymMatrix, j: usize) -> f64 {
        let v = &self.vectors[j];
        let mut lv = vec![0.0; v.len()];
        l.mul_vec(v, &mut lv);
        lv.iter()
            .zip(v)
            .map(|(a, b)| (a - self.values[j] * b).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

fn check_args(l: &SparseSymMatrix, m: usize, tol: f64) -> Result<()> {
    if m == 0 || m > l.dim() {
        return Err(Error::InvalidArgument(format!(
            "requested {m} eigenpairs of a {n}x{n} matrix",
            n = l.dim()
        )));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    Ok(())
}

pub fn smallest_eigenpairs(l: &SparseSymMatrix, m: usize, tol: f64) -> Result<Eigenpairs> {
    smallest_eigenpairs_with(
        l,
        m,
        &EigenOptions {
            tol,
            ..EigenOptions::default()
        },
    )
}

pub fn smallest_eigenpairs_with(
    l: &SparseSymMatrix,
    m: usize,
    opts: &EigenOptions,
) -> Result<Eigenpairs> {
    if l.dim() <= opts.dense_threshold {
        dense_smallest_eigenpairs(l, m, opts.tol)
    } else {
        lanczos_smallest_eigenpairs(l, m, opts)
    }
}

/// Fix the sign so the largest-magnitude component is positive.
fn canonical_sign(v: &mut [f64]) {
    let mut pivot = 0.0f64;
    for &x in v.iter() {
        if x.abs() > pivot.abs() + 1e-12 {
            pivot = x;
        }
    }
    if pivot < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn sorted_eigen(h: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = eig.eigenvectors.select_columns(&order);
    (values, vectors)
}

fn finish(l: &SparseSymMatrix, mut pairs: Eigenpairs, tol: f64, iterations: usize) -> Result<Eigenpairs> {
    let bound = tol * l.norm_inf().max(1.0);
    for v in &mut pairs.vectors {
        let norm = dot(v, v).sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        canonical_sign(v);
    }
    let worst = (0..pairs.values.len())
        .map(|j| pairs.residual(l, j))
        .fold(0.0, f64::max);
    if worst > bound {
        return Err(Error::Convergence {
            iterations,
            residual: worst,
        });
    }
    Ok(pairs)
}

/// Dense symmetric decomposition of the whole matrix.
pub fn dense_smallest_eigenpairs(l: &SparseSymMatrix, m: usize, tol: f64) -> Result<Eigenpairs> {
    check_args(l, m, tol)?;
    let (values, vecs) = sorted_eigen(l.to_dense());
    let pairs = Eigenpairs {
        values: values[..m].to_vec(),
        vectors: (0..m).map(|j| vecs.column(j).iter().copied().collect()).collect(),
    };
    finish(l, pairs, tol, 0)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

/// Orthonormal basis together with the images `L v` of its vectors.
struct Krylov<'a> {
    op: &'a SparseSymMatrix,
    basis: Vec<Vec<f64>>,
    images: Vec<Vec<f64>>,
    matvecs: usize,
}

impl Krylov<'_> {
    /// Orthogonalize `v` against the basis (two Gram–Schmidt passes) and
    /// append it. Returns false when nothing independent is left.
    fn push(&mut self, mut v: Vec<f64>) -> bool {
        let start = dot(&v, &v).sqrt();
        if start == 0.0 {
            return false;
        }
        for _ in 0..2 {
            for b in &self.basis {
                let c = dot(b, &v);
                axpy(-c, b, &mut v);
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm <= 1e-10 * start {
            return false;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        let mut lv = vec![0.0; v.len()];
        self.op.mul_vec(&v, &mut lv);
        self.matvecs += 1;
        self.basis.push(v);
        self.images.push(lv);
        true
    }

    fn push_or_random(&mut self, v: Vec<f64>, rng: &mut impl Rng) {
        if self.push(v) {
            return;
        }
        let n = self.op.dim();
        while self.basis.len() < n {
            let r: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            if self.push(r) {
                return;
            }
        }
    }
}

/// Thick-restart block Lanczos for the `m` smallest eigenpairs.
pub fn lanczos_smallest_eigenpairs(
    l: &SparseSymMatrix,
    m: usize,
    opts: &EigenOptions,
) -> Result<Eigenpairs> {
    check_args(l, m, opts.tol)?;
    let n = l.dim();
    let bound = opts.tol * l.norm_inf().max(1.0);
    let p = opts
        .max_basis
        .unwrap_or((3 * m).max(m + 20))
        .max(2 * m)
        .min(n);
    let mut rng = seed::rng(opts.seed);
    let mut kr = Krylov {
        op: l,
        basis: Vec::with_capacity(p),
        images: Vec::with_capacity(p),
        matvecs: 0,
    };

    let mut frontier: Vec<usize> = Vec::new();
    for _ in 0..m {
        kr.push_or_random(Vec::new(), &mut rng);
        frontier.push(kr.basis.len() - 1);
    }

    loop {
        // expand with the images of the newest block
        while kr.basis.len() < p {
            let mut seeds: Vec<Vec<f64>> =
                frontier.iter().map(|&i| kr.images[i].clone()).collect();
            if seeds.is_empty() {
                seeds.push(Vec::new());
            }
            frontier.clear();
            for s in seeds {
                if kr.basis.len() >= p {
                    break;
                }
                kr.push_or_random(s, &mut rng);
                frontier.push(kr.basis.len() - 1);
            }
        }

        // Rayleigh–Ritz on the current basis
        let k = kr.basis.len();
        let mut h = DMatrix::zeros(k, k);
        for i in 0..k {
            for j in i..k {
                let v = 0.5 * (dot(&kr.basis[i], &kr.images[j]) + dot(&kr.basis[j], &kr.images[i]));
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
        let (theta, s) = sorted_eigen(h);

        let keep = if k == n { m } else { ((p + m) / 2).max(m).min(k - 1) };
        let mut ritz = Vec::with_capacity(keep);
        let mut ritz_images = Vec::with_capacity(keep);
        for c in 0..keep {
            let mut x = vec![0.0; n];
            let mut y = vec![0.0; n];
            for j in 0..k {
                let w = s[(j, c)];
                axpy(w, &kr.basis[j], &mut x);
                axpy(w, &kr.images[j], &mut y);
            }
            ritz.push(x);
            ritz_images.push(y);
        }
        let residuals: Vec<Vec<f64>> = (0..m)
            .map(|c| {
                let mut r = ritz_images[c].clone();
                axpy(-theta[c], &ritz[c], &mut r);
                r
            })
            .collect();
        let worst = residuals
            .iter()
            .map(|r| dot(r, r).sqrt())
            .fold(0.0, f64::max);

        if worst <= bound || k == n {
            let pairs = Eigenpairs {
                values: theta[..m].to_vec(),
                vectors: ritz.into_iter().take(m).collect(),
            };
            return finish(l, pairs, opts.tol, kr.matvecs);
        }
        if kr.matvecs >= opts.max_iter {
            return Err(Error::Convergence {
                iterations: kr.matvecs,
                residual: worst,
            });
        }

        // restart from the kept Ritz vectors; re-orthonormalize them and
        // apply the same combination to their images
        kr.basis.clear();
        kr.images.clear();
        for (mut x, mut y) in ritz.into_iter().zip(ritz_images) {
            for (b, im) in kr.basis.iter().zip(&kr.images) {
                let c = dot(b, &x);
                axpy(-c, b, &mut x);
                axpy(-c, im, &mut y);
            }
            let norm = dot(&x, &x).sqrt();
            if norm < 1e-12 {
                continue;
            }
            x.iter_mut().for_each(|v| *v /= norm);
            y.iter_mut().for_each(|v| *v /= norm);
            kr.basis.push(x);
            kr.images.push(y);
        }
        frontier.clear();
        for r in residuals {
            if kr.basis.len() >= p {
                break;
            }
            kr.push_or_random(r, &mut rng);
            frontier.push(kr.basis.len() - 1);
        }
    }
}
