//! Hermitian eigensolvers: dense LAPACK for small matrices, block Davidson
//! with a diagonal preconditioner for large sparse ones.

use ndarray::{Array1, Array2, ShapeBuilder};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

type C = Complex64;

#[derive(Clone, Debug)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    /// One unit vector per eigenvalue.
    pub vectors: Vec<Vec<C>>,
    /// ‖H v − e v‖ per pair.
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

/// All eigenpairs of a dense Hermitian matrix, ascending; eigenvectors are
/// the columns of the returned matrix.
pub fn dense_eigh(h: &Array2<C>) -> Result<(Vec<f64>, Array2<C>)> {
    // row-major complex input comes back with conjugated eigenvectors
    let mut f = Array2::<C>::zeros(h.raw_dim().f());
    f.assign(h);
    let (vals, vecs) = f
        .eigh(UPLO::Lower)
        .map_err(|e| Error::InvalidParameter(format!("dense eigensolver failed: {e}")))?;
    Ok((vals.to_vec(), vecs))
}

fn dot(a: &[C], b: &[C]) -> C {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(y: &mut [C], a: C, x: &[C]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Orthogonalizes `v` against `basis` (two passes) and normalizes it.
/// Returns `false` if nothing independent is left.
fn orthonormalize(v: &mut [C], basis: &[Vec<C>]) -> bool {
    let n0 = norm(v);
    if n0 == 0.0 {
        return false;
    }
    for _ in 0..2 {
        for b in basis {
            let c = dot(b, v);
            axpy(v, -c, b);
        }
    }
    let n = norm(v);
    if n < 1e-10 * n0 || n < 1e-300 {
        return false;
    }
    v.iter_mut().for_each(|x| *x /= n);
    true
}

#[derive(Clone, Copy, Debug)]
pub struct DavidsonOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Extra block vectors beyond the requested count.
    pub extra: usize,
}

impl Default for DavidsonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 2000,
            seed: 0x5eed,
            extra: 4,
        }
    }
}

/// Lowest `k` eigenpairs of the Hermitian operator `apply` (y = H x) of
/// dimension `n`. `diag` is the diagonal of H, used as preconditioner;
/// `guess` seeds the first block vectors.
pub fn davidson<F>(
    n: usize,
    k: usize,
    apply: F,
    diag: Option<&[f64]>,
    guess: &[Vec<C>],
    opts: &DavidsonOptions,
) -> Result<Eigenpairs>
where
    F: Fn(&[C], &mut [C]),
{
    if k == 0 || k > n {
        return Err(Error::InsufficientLevels {
            needed: k,
            available: n,
        });
    }
    let block = (k + opts.extra).min(n);
    let max_sub = (4 * block).max(block + 20).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut basis: Vec<Vec<C>> = Vec::new();
    let mut images: Vec<Vec<C>> = Vec::new();
    let push = |v: Vec<C>, basis: &mut Vec<Vec<C>>, images: &mut Vec<Vec<C>>| {
        let mut w = vec![C::new(0.0, 0.0); n];
        apply(&v, &mut w);
        basis.push(v);
        images.push(w);
    };
    for g in guess.iter().take(block) {
        let mut v = g.clone();
        if orthonormalize(&mut v, &basis) {
            push(v, &mut basis, &mut images);
        }
    }
    let mut tries = 0;
    while basis.len() < block && tries < 10 * block {
        tries += 1;
        let mut v: Vec<C> = (0..n)
            .map(|_| C::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        if orthonormalize(&mut v, &basis) {
            push(v, &mut basis, &mut images);
        }
    }

    let mut last_res = f64::INFINITY;
    for iter in 1..=opts.max_iter {
        let m = basis.len();
        let mut hs = Array2::<C>::zeros((m, m));
        for a in 0..m {
            for b in a..m {
                let v = dot(&basis[a], &images[b]);
                hs[[a, b]] = v;
                hs[[b, a]] = v.conj();
            }
        }
        let (theta, y) = dense_eigh(&hs)?;
        let keep = block.min(m);
        let ritz = |j: usize, src: &[Vec<C>]| -> Vec<C> {
            let mut out = vec![C::new(0.0, 0.0); n];
            for a in 0..m {
                axpy(&mut out, y[[a, j]], &src[a]);
            }
            out
        };
        let mut xs = Vec::with_capacity(keep);
        let mut hxs = Vec::with_capacity(keep);
        let mut res = Vec::with_capacity(keep);
        let mut resid_vecs = Vec::with_capacity(keep);
        for j in 0..keep {
            let x = ritz(j, &basis);
            let hx = ritz(j, &images);
            let r: Vec<C> = hx.iter().zip(&x).map(|(h, v)| h - v * theta[j]).collect();
            res.push(norm(&r));
            resid_vecs.push(r);
            xs.push(x);
            hxs.push(hx);
        }
        last_res = res[..k].iter().cloned().fold(0.0, f64::max);
        if last_res < opts.tol || m == n {
            return Ok(Eigenpairs {
                values: theta[..k].to_vec(),
                vectors: xs.into_iter().take(k).collect(),
                residuals: res[..k].to_vec(),
                iterations: iter,
            });
        }
        let mut new_dirs = Vec::new();
        for j in 0..keep {
            if res[j] < opts.tol * 0.1 {
                continue;
            }
            let t: Vec<C> = match diag {
                Some(d) => resid_vecs[j]
                    .iter()
                    .zip(d)
                    .map(|(r, &dd)| {
                        let den = dd - theta[j];
                        let den = if den.abs() < 1e-2 {
                            1e-2f64.copysign(den)
                        } else {
                            den
                        };
                        r / den
                    })
                    .collect(),
                None => resid_vecs[j].clone(),
            };
            new_dirs.push(t);
        }
        if basis.len() + new_dirs.len() > max_sub {
            // thick restart on the current Ritz block
            basis = xs;
            images = hxs;
            let mut fixed_b = Vec::new();
            let mut fixed_i = Vec::new();
            for (b, i) in basis.into_iter().zip(images) {
                let mut v = b.clone();
                if orthonormalize(&mut v, &fixed_b) {
                    // re-apply only when orthonormalization changed the vector
                    let moved = v
                        .iter()
                        .zip(&b)
                        .map(|(a, c)| (a - c).norm())
                        .fold(0.0, f64::max);
                    if moved > 1e-12 {
                        let mut w = vec![C::new(0.0, 0.0); n];
                        apply(&v, &mut w);
                        fixed_i.push(w);
                    } else {
                        fixed_i.push(i);
                    }
                    fixed_b.push(v);
                }
            }
            basis = fixed_b;
            images = fixed_i;
        }
        let mut added = 0;
        for mut t in new_dirs {
            if basis.len() >= max_sub.max(block + 1) && added > 0 {
                break;
            }
            if orthonormalize(&mut t, &basis) {
                push(t, &mut basis, &mut images);
                added += 1;
            }
        }
        if added == 0 {
            // stagnation: inject a random direction
            let mut v: Vec<C> = (0..n)
                .map(|_| C::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect();
            if orthonormalize(&mut v, &basis) {
                push(v, &mut basis, &mut images);
            } else {
                break;
            }
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        residual: last_res,
    })
}

/// Residual norm ‖H v − e v‖.
pub fn residual<F: Fn(&[C], &mut [C])>(apply: F, v: &[C], e: f64) -> f64 {
    let mut w = vec![C::new(0.0, 0.0); v.len()];
    apply(v, &mut w);
    w.iter()
        .zip(v)
        .map(|(a, b)| (a - b * e).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

pub fn to_array(v: &[C]) -> Array1<C> {
    Array1::from_vec(v.to_vec())
}
