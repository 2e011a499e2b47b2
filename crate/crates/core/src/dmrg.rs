//! Two-site DMRG with explicit ℤ₃ charge blocking.
//!
//! Every bond index carries the charge `Σ_{k ≤ b} n_k mod 3` of the sites to
//! its left, so a site tensor splits into blocks `A[q][s]` mapping left
//! charge `q` to right charge `q + s`. The right boundary bond fixes the
//! sector. Excited states come from `H + w|g⟩⟨g|` within a sector.

use std::io::Write;

use ndarray::{s, Array2, ShapeBuilder};
use ndarray_linalg::{Eigh, JobSvd, SVDDC, UPLO};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebra::{check_charge, full_dim};
use crate::error::{Error, Result};
use crate::groundstate::csv_err;
use crate::model::{solvable_line, ChainTerms, ModelParams};

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

#[derive(Clone, Debug, Serialize)]
pub struct DmrgOptions {
    pub chi_max: usize,
    pub max_sweeps: usize,
    /// Stop once the energy changes by less than this over a sweep.
    pub energy_tol: f64,
    /// Discarded-weight threshold below which states are dropped.
    pub cutoff: f64,
    /// Penalty weight in units of `J`.
    pub penalty: f64,
    pub lanczos_tol: f64,
    pub lanczos_max: usize,
    pub seed: u64,
}

impl Default for DmrgOptions {
    fn default() -> Self {
        Self {
            chi_max: 60,
            max_sweeps: 40,
            energy_tol: 1e-10,
            cutoff: 1e-14,
            penalty: 10.0,
            lanczos_tol: 1e-9,
            lanczos_max: 30,
            seed: 7,
        }
    }
}

impl DmrgOptions {
    pub fn with_chi(chi_max: usize) -> Self {
        Self {
            chi_max,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.chi_max < 3 {
            return Err(Error::InvalidParameter(format!(
                "chi_max must be ≥ 3, got {}",
                self.chi_max
            )));
        }
        if self.max_sweeps == 0 || self.lanczos_max < 2 {
            return Err(Error::InvalidParameter(
                "need at least one sweep and two Lanczos steps".into(),
            ));
        }
        Ok(())
    }
}

/// Charge-sector dimensions of one bond.
pub type BondDims = [usize; 3];

/// Blocks `A[q][s]`, stored at `3q + s`.
#[derive(Clone, Debug)]
pub struct SiteTensor {
    pub blocks: Vec<Array2<C>>,
}

impl SiteTensor {
    fn zeros(left: &BondDims, right: &BondDims) -> Self {
        let blocks = (0..9)
            .map(|k| Array2::zeros((left[k / 3], right[(k / 3 + k % 3) % 3])))
            .collect();
        Self { blocks }
    }

    fn get(&self, q: usize, s: usize) -> &Array2<C> {
        &self.blocks[3 * q + s]
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRecord {
    pub sweep: usize,
    pub energy: f64,
    pub delta: f64,
    pub max_truncation: f64,
    pub max_bond: usize,
}

/// A charge-resolved MPS in mixed canonical form.
#[derive(Clone, Debug)]
pub struct VarMps {
    pub sites: usize,
    pub charge: u8,
    /// `bonds[b]` sits to the left of site `b` (0-based), `b = 0..=L`.
    pub bonds: Vec<BondDims>,
    pub tensors: Vec<SiteTensor>,
    /// Site holding the orthogonality center; sites left of it are
    /// left-canonical and those right of it right-canonical.
    pub center: usize,
    pub energy: f64,
    /// Discarded weight of the last update on each bond.
    pub truncation: Vec<f64>,
    pub sweeps: Vec<SweepRecord>,
}

impl VarMps {
    fn get_block(&self, site: usize, q: usize, s: usize) -> &Array2<C> {
        self.tensors[site].get(q, s)
    }

    pub fn max_bond(&self) -> usize {
        self.bonds
            .iter()
            .map(|d| d.iter().sum::<usize>())
            .max()
            .unwrap_or(0)
    }

    pub fn max_truncation(&self) -> f64 {
        self.truncation.iter().cloned().fold(0.0, f64::max)
    }

    /// Amplitudes in the occupation basis, site 1 most significant.
    pub fn to_vector(&self) -> Result<Vec<C>> {
        let dim = full_dim(self.sites)?;
        let mut partial: Vec<(usize, usize, ndarray::Array1<C>)> =
            vec![(0, 0, ndarray::arr1(&[ONE]))];
        for t in &self.tensors {
            let mut next = Vec::with_capacity(partial.len() * 3);
            for (idx, q, v) in &partial {
                for s in 0..3 {
                    let b = t.get(*q, s);
                    if b.ncols() > 0 {
                        next.push((idx * 3 + s, (q + s) % 3, v.dot(b)));
                    }
                }
            }
            partial = next;
        }
        let mut out = vec![ZERO; dim];
        for (idx, q, v) in partial {
            if q == self.charge as usize && v.len() == 1 {
                out[idx] = v[0];
            }
        }
        Ok(out)
    }
}

/// One nonzero MPO element: channel `win → wout`, physical `s_in → s_out`.
#[derive(Clone, Copy, Debug)]
struct Elem {
    win: usize,
    wout: usize,
    so: usize,
    si: usize,
    c: C,
}

/// Lower-triangular MPO with channel charges.
#[derive(Clone, Debug)]
struct Mpo {
    dim: usize,
    delta: Vec<usize>,
    sites: Vec<Vec<Elem>>,
}

fn push_op(out: &mut Vec<Elem>, win: usize, wout: usize, op: &Array2<C>) {
    for ((so, si), &c) in op.indexed_iter() {
        if c.norm() > 1e-14 {
            out.push(Elem {
                win,
                wout,
                so,
                si,
                c,
            });
        }
    }
}

impl Mpo {
    fn new(terms: &ChainTerms) -> Result<Self> {
        // split the bond block into Σ_k A_k ⊗ B_k, one charge shift at a time
        let mut left_ops = Vec::new();
        let mut right_ops = Vec::new();
        let mut deltas = Vec::new();
        for d in 0..3 {
            let mut m = Array2::<C>::zeros((9, 9));
            for a2 in 0..3 {
                for a in 0..3 {
                    if (a2 + 3 - a) % 3 != d {
                        continue;
                    }
                    for b2 in 0..3 {
                        for b in 0..3 {
                            m[[3 * a2 + a, 3 * b2 + b]] = terms.bond[[3 * a2 + b2, 3 * a + b]];
                        }
                    }
                }
            }
            let (u, sv, vt) = svd(&m)?;
            for k in 0..sv.len() {
                if sv[k] < 1e-13 {
                    continue;
                }
                let mut a_op = Array2::zeros((3, 3));
                let mut b_op = Array2::zeros((3, 3));
                for r in 0..9 {
                    if (r / 3 + 3 - r % 3) % 3 == d {
                        a_op[[r / 3, r % 3]] = u[[r, k]] * sv[k];
                    }
                    if (r / 3 + d) % 3 == r % 3 {
                        b_op[[r / 3, r % 3]] = vt[[k, r]];
                    }
                }
                left_ops.push(a_op);
                right_ops.push(b_op);
                deltas.push(d);
            }
        }
        let r = left_ops.len();
        let done = r + 1;
        let mut delta = vec![0; r + 2];
        delta[1..=r].copy_from_slice(&deltas);
        let id = Array2::<C>::eye(3);
        let sites = (0..terms.sites)
            .map(|j| {
                let mut e = Vec::new();
                push_op(&mut e, 0, 0, &id);
                push_op(&mut e, done, done, &id);
                push_op(&mut e, 0, done, &terms.onsite[j]);
                if j + 1 < terms.sites {
                    for (k, a) in left_ops.iter().enumerate() {
                        push_op(&mut e, 0, k + 1, a);
                    }
                }
                if j > 0 {
                    for (k, b) in right_ops.iter().enumerate() {
                        push_op(&mut e, k + 1, done, b);
                    }
                }
                e
            })
            .collect();
        Ok(Self {
            dim: r + 2,
            delta,
            sites,
        })
    }
}

/// `env[w][q]`: block from ket charge `q` to bra charge `q + δ_w`.
type Env = Vec<Vec<Array2<C>>>;

fn svd(m: &Array2<C>) -> Result<(Array2<C>, Vec<f64>, Array2<C>)> {
    let mut f = Array2::<C>::zeros(m.raw_dim().f());
    f.assign(m);
    let (u, s, vt) = f
        .svddc(JobSvd::Some)
        .map_err(|e| Error::InvalidParameter(format!("SVD failed: {e}")))?;
    Ok((
        u.expect("requested U"),
        s.to_vec(),
        vt.expect("requested Vᵀ"),
    ))
}

fn adj(m: &Array2<C>) -> Array2<C> {
    m.t().mapv(|v| v.conj())
}

fn mpo_env_zeros(mpo: &Mpo, bra: &BondDims, ket: &BondDims) -> Env {
    (0..mpo.dim)
        .map(|w| {
            (0..3)
                .map(|q| Array2::zeros((bra[(q + mpo.delta[w]) % 3], ket[q])))
                .collect()
        })
        .collect()
}

fn left_boundary(mpo: &Mpo) -> Env {
    let mut e = mpo_env_zeros(mpo, &[1, 0, 0], &[1, 0, 0]);
    e[0][0][[0, 0]] = ONE;
    e
}

fn right_boundary(mpo: &Mpo, charge: usize) -> Env {
    let mut d = [0; 3];
    d[charge] = 1;
    let mut e = mpo_env_zeros(mpo, &d, &d);
    e[mpo.dim - 1][charge][[0, 0]] = ONE;
    e
}

fn grow_left(le: &Env, a: &SiteTensor, elems: &[Elem], mpo: &Mpo, right: &BondDims) -> Env {
    let mut out = mpo_env_zeros(mpo, right, right);
    for e in elems {
        for q in 0..3 {
            let l = &le[e.win][q];
            let ket = a.get(q, e.si);
            let bra = a.get((q + mpo.delta[e.win]) % 3, e.so);
            if l.is_empty() || ket.is_empty() || bra.is_empty() {
                continue;
            }
            let t = adj(bra).dot(&l.dot(ket));
            out[e.wout][(q + e.si) % 3].scaled_add(e.c, &t);
        }
    }
    out
}

fn grow_right(re: &Env, b: &SiteTensor, elems: &[Elem], mpo: &Mpo, left: &BondDims) -> Env {
    let mut out = mpo_env_zeros(mpo, left, left);
    for e in elems {
        for q in 0..3 {
            let qb = (q + e.si) % 3;
            let r = &re[e.wout][qb];
            let ket = b.get(q, e.si);
            let bra = b.get((q + mpo.delta[e.win]) % 3, e.so);
            if r.is_empty() || ket.is_empty() || bra.is_empty() {
                continue;
            }
            let t = bra.mapv(|v| v.conj()).dot(&r.dot(&ket.t()));
            out[e.win][q].scaled_add(e.c, &t);
        }
    }
    out
}

/// Overlap environment `⟨ψ|g⟩`: block `ψ` charge `q` × `g` charge `q`.
type Overlap = Vec<Array2<C>>;

fn overlap_left(
    ol: &Overlap,
    psi: &SiteTensor,
    g: &SiteTensor,
    psi_r: &BondDims,
    g_r: &BondDims,
) -> Overlap {
    let mut out: Overlap = (0..3).map(|q| Array2::zeros((psi_r[q], g_r[q]))).collect();
    for q in 0..3 {
        for s in 0..3 {
            let (p, gg) = (psi.get(q, s), g.get(q, s));
            if p.is_empty() || gg.is_empty() || ol[q].is_empty() {
                continue;
            }
            out[(q + s) % 3] += &adj(p).dot(&ol[q].dot(gg));
        }
    }
    out
}

fn overlap_right(
    or: &Overlap,
    psi: &SiteTensor,
    g: &SiteTensor,
    psi_l: &BondDims,
    g_l: &BondDims,
) -> Overlap {
    let mut out: Overlap = (0..3).map(|q| Array2::zeros((psi_l[q], g_l[q]))).collect();
    for q in 0..3 {
        for s in 0..3 {
            let (p, gg) = (psi.get(q, s), g.get(q, s));
            let r = &or[(q + s) % 3];
            if p.is_empty() || gg.is_empty() || r.is_empty() {
                continue;
            }
            out[q] += &p.mapv(|v| v.conj()).dot(&r.dot(&gg.t()));
        }
    }
    out
}

/// Two-site wavefunction blocks at `9 q + 3 s1 + s2`.
#[derive(Clone, Debug)]
struct Theta {
    left: BondDims,
    right: BondDims,
    blocks: Vec<Array2<C>>,
}

impl Theta {
    fn zeros(left: BondDims, right: BondDims) -> Self {
        let blocks = (0..27)
            .map(|k| Array2::zeros((left[k / 9], right[(k / 9 + k / 3 % 3 + k % 3) % 3])))
            .collect();
        Self {
            left,
            right,
            blocks,
        }
    }

    fn from_pair(a: &SiteTensor, b: &SiteTensor, left: BondDims, right: BondDims) -> Self {
        let mut t = Self::zeros(left, right);
        for k in 0..27 {
            let (q, s1, s2) = (k / 9, k / 3 % 3, k % 3);
            let x = a.get(q, s1);
            if !t.blocks[k].is_empty() {
                t.blocks[k] = x.dot(b.get((q + s1) % 3, s2));
            }
        }
        t
    }

    fn len(&self) -> usize {
        self.blocks.iter().map(|b| b.len()).sum()
    }

    fn to_vec(&self) -> Vec<C> {
        self.blocks.iter().flat_map(|b| b.iter().cloned()).collect()
    }

    fn with_values(&self, v: &[C]) -> Self {
        let mut out = self.clone();
        let mut pos = 0;
        for b in &mut out.blocks {
            let n = b.len();
            for (x, y) in b.iter_mut().zip(&v[pos..pos + n]) {
                *x = *y;
            }
            pos += n;
        }
        out
    }
}

struct Heff<'a> {
    le: &'a Env,
    re: &'a Env,
    w1: &'a [Elem],
    w2: &'a [Elem],
    mpo: &'a Mpo,
    projector: Option<(f64, Vec<C>)>,
}

impl Heff<'_> {
    fn apply(&self, theta: &Theta) -> Theta {
        let d = self.mpo.dim;
        let delta = &self.mpo.delta;
        let key = |w: usize, q: usize, s1: usize, s2: usize| ((w * 3 + q) * 3 + s1) * 3 + s2;
        let mut x: Vec<Option<Array2<C>>> = vec![None; d * 27];
        for e in self.w1 {
            for q in 0..3 {
                for s2 in 0..3 {
                    let k = key(e.win, q, e.si, s2);
                    if x[k].is_none() {
                        let l = &self.le[e.win][q];
                        x[k] = Some(l.dot(&theta.blocks[9 * q + 3 * e.si + s2]));
                    }
                }
            }
        }
        // keys below use the bra charge on the left bond
        let mut y: Vec<Option<Array2<C>>> = vec![None; d * 27];
        for e in self.w1 {
            for q in 0..3 {
                let ql = (q + delta[e.win]) % 3;
                for s2 in 0..3 {
                    let src = x[key(e.win, q, e.si, s2)].as_ref().expect("filled above");
                    if src.is_empty() {
                        continue;
                    }
                    let slot = &mut y[key(e.wout, ql, e.so, s2)];
                    match slot {
                        Some(acc) => acc.scaled_add(e.c, src),
                        None => *slot = Some(src.mapv(|v| v * e.c)),
                    }
                }
            }
        }
        let mut z: Vec<Option<Array2<C>>> = vec![None; d * 27];
        for e in self.w2 {
            for ql in 0..3 {
                for s1 in 0..3 {
                    let Some(src) = &y[key(e.win, ql, s1, e.si)] else {
                        continue;
                    };
                    let slot = &mut z[key(e.wout, ql, s1, e.so)];
                    match slot {
                        Some(acc) => acc.scaled_add(e.c, src),
                        None => *slot = Some(src.mapv(|v| v * e.c)),
                    }
                }
            }
        }
        let mut out = Theta::zeros(theta.left, theta.right);
        for w in 0..d {
            for ql in 0..3 {
                for s1 in 0..3 {
                    for s2 in 0..3 {
                        let Some(src) = &z[key(w, ql, s1, s2)] else {
                            continue;
                        };
                        let qr = (ql + 6 - delta[w] + s1 + s2) % 3;
                        let r = &self.re[w][qr];
                        let target = &mut out.blocks[9 * ql + 3 * s1 + s2];
                        if target.is_empty() || src.is_empty() {
                            continue;
                        }
                        *target += &src.dot(&r.t());
                    }
                }
            }
        }
        out
    }

    fn apply_vec(&self, shape: &Theta, v: &[C]) -> Vec<C> {
        let mut out = self.apply(&shape.with_values(v)).to_vec();
        if let Some((w, g)) = &self.projector {
            let c: C = g.iter().zip(v).map(|(a, b)| a.conj() * b).sum::<C>() * *w;
            for (o, gi) in out.iter_mut().zip(g) {
                *o += c * gi;
            }
        }
        out
    }
}

fn vdot(a: &[C], b: &[C]) -> C {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn vnorm(a: &[C]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Lowest eigenpair of the tridiagonal matrix `(alpha, beta)`.
fn tridiagonal_lowest(alpha: &[f64], beta: &[f64]) -> Result<(f64, Vec<f64>)> {
    let m = alpha.len();
    let mut t = Array2::<f64>::zeros((m, m).f());
    for i in 0..m {
        t[[i, i]] = alpha[i];
        if i + 1 < m {
            t[[i, i + 1]] = beta[i];
            t[[i + 1, i]] = beta[i];
        }
    }
    let (vals, vecs) = t
        .eigh(UPLO::Lower)
        .map_err(|e| Error::InvalidParameter(format!("tridiagonal eigensolver failed: {e}")))?;
    Ok((vals[0], vecs.column(0).to_vec()))
}

/// Lowest eigenpair by Lanczos with full reorthogonalization and one
/// restart from the Ritz vector.
fn lanczos<F: Fn(&[C]) -> Vec<C>>(
    apply: F,
    start: &[C],
    tol: f64,
    max_iter: usize,
) -> Result<(f64, Vec<C>)> {
    let n = start.len();
    let mut v: Vec<C> = start.to_vec();
    if vnorm(&v) < 1e-300 {
        v = (0..n)
            .map(|i| C::new(1.0 + (i % 7) as f64, (i % 3) as f64))
            .collect();
    }
    let mut best = (f64::INFINITY, v.clone());
    for _restart in 0..2 {
        let nv = vnorm(&v);
        let mut basis: Vec<Vec<C>> = vec![v.iter().map(|x| x / nv).collect()];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let (mut e, mut y, mut resid);
        loop {
            let k = basis.len() - 1;
            let mut w = apply(&basis[k]);
            alpha.push(vdot(&basis[k], &w).re);
            for _ in 0..2 {
                for b in &basis {
                    let c = vdot(b, &w);
                    for (wi, bi) in w.iter_mut().zip(b) {
                        *wi -= c * bi;
                    }
                }
            }
            let bnorm = vnorm(&w);
            let m = alpha.len();
            let stop = bnorm < 1e-13 || m >= max_iter || m >= n;
            if m.is_multiple_of(4) || stop {
                (e, y) = tridiagonal_lowest(&alpha, &beta)?;
                resid = bnorm * y[m - 1].abs();
                if resid < tol || stop {
                    break;
                }
            }
            beta.push(bnorm);
            basis.push(w.iter().map(|x| x / bnorm).collect());
        }
        let mut ritz = vec![ZERO; n];
        for (yj, b) in y.iter().zip(&basis) {
            for (r, bi) in ritz.iter_mut().zip(b) {
                *r += bi * *yj;
            }
        }
        let nb = vnorm(&ritz);
        ritz.iter_mut().for_each(|x| *x /= nb);
        best = (e, ritz);
        if resid < tol || basis.len() >= n {
            return Ok(best);
        }
        v = best.1.clone();
    }
    Ok(best)
}

struct Split {
    a: SiteTensor,
    b: SiteTensor,
    middle: BondDims,
    discarded: f64,
}

/// SVD of `θ` across the middle bond; singular values go right when
/// `move_right` and left otherwise.
fn split(theta: &Theta, chi_max: usize, cutoff: f64, move_right: bool) -> Result<Split> {
    let (left, right) = (theta.left, theta.right);
    let mut parts = Vec::new();
    for qm in 0..3 {
        let rows: Vec<(usize, usize)> = (0..3).map(|s1| ((qm + 3 - s1) % 3, s1)).collect();
        let cols: Vec<usize> = (0..3).map(|s2| (qm + s2) % 3).collect();
        let nr: usize = rows.iter().map(|&(q, _)| left[q]).sum();
        let nc: usize = cols.iter().map(|&q| right[q]).sum();
        if nr == 0 || nc == 0 {
            parts.push(None);
            continue;
        }
        let mut m = Array2::<C>::zeros((nr, nc));
        let mut r0 = 0;
        for &(q, s1) in &rows {
            let mut c0 = 0;
            for s2 in 0..3 {
                let blk = &theta.blocks[9 * q + 3 * s1 + s2];
                m.slice_mut(s![r0..r0 + left[q], c0..c0 + right[cols[s2]]])
                    .assign(blk);
                c0 += right[cols[s2]];
            }
            r0 += left[q];
        }
        parts.push(Some(svd(&m)?));
    }
    let total: f64 = parts
        .iter()
        .flatten()
        .flat_map(|(_, s, _)| s.iter().map(|x| x * x))
        .sum();
    let mut all: Vec<(f64, usize, usize)> = parts
        .iter()
        .enumerate()
        .filter_map(|(qm, p)| p.as_ref().map(|(_, s, _)| (qm, s)))
        .flat_map(|(qm, s)| s.iter().enumerate().map(move |(k, &v)| (v, qm, k)))
        .collect();
    all.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut keep = 0;
    let mut kept_weight = 0.0;
    for &(v, _, _) in &all {
        if keep >= chi_max || (keep > 0 && v * v < cutoff * total) {
            break;
        }
        keep += 1;
        kept_weight += v * v;
    }
    let discarded = ((total - kept_weight) / total).max(0.0);
    let mut middle = [0; 3];
    for &(_, qm, _) in &all[..keep] {
        middle[qm] += 1;
    }
    let scale = 1.0 / kept_weight.sqrt();
    let mut a = SiteTensor::zeros(&left, &middle);
    let mut b = SiteTensor::zeros(&middle, &right);
    for qm in 0..3 {
        let Some((u, sv, vt)) = &parts[qm] else {
            continue;
        };
        let k = middle[qm];
        if k == 0 {
            continue;
        }
        let svals: Vec<f64> = sv[..k].iter().map(|x| x * scale).collect();
        let mut r0 = 0;
        for s1 in 0..3 {
            let q = (qm + 3 - s1) % 3;
            let mut blk = u.slice(s![r0..r0 + left[q], 0..k]).to_owned();
            if !move_right {
                for (j, mut col) in blk.columns_mut().into_iter().enumerate() {
                    col.mapv_inplace(|x| x * svals[j]);
                }
            }
            a.blocks[3 * q + s1] = blk;
            r0 += left[q];
        }
        let mut c0 = 0;
        for s2 in 0..3 {
            let qr = (qm + s2) % 3;
            let mut blk = vt.slice(s![0..k, c0..c0 + right[qr]]).to_owned();
            if move_right {
                for (j, mut row) in blk.rows_mut().into_iter().enumerate() {
                    row.mapv_inplace(|x| x * svals[j]);
                }
            }
            b.blocks[3 * qm + s2] = blk;
            c0 += right[qr];
        }
    }
    Ok(Split {
        a,
        b,
        middle,
        discarded,
    })
}

/// Random state in sector `charge`, right-canonical with center at site 0.
fn random_mps(sites: usize, charge: usize, rng: &mut ChaCha8Rng) -> Result<VarMps> {
    let mut bonds = vec![[1, 1, 1]; sites + 1];
    bonds[0] = [1, 0, 0];
    bonds[sites] = [0; 3];
    bonds[sites][charge] = 1;
    let tensors: Vec<SiteTensor> = (0..sites)
        .map(|j| {
            let mut t = SiteTensor::zeros(&bonds[j], &bonds[j + 1]);
            for b in &mut t.blocks {
                b.mapv_inplace(|_| C::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
            }
            t
        })
        .collect();
    right_canonical(sites, charge, bonds, tensors)
}

/// Brings an MPS into right-canonical form with unit norm, dropping null
/// directions on every bond.
fn right_canonical(
    sites: usize,
    charge: usize,
    mut bonds: Vec<BondDims>,
    mut tensors: Vec<SiteTensor>,
) -> Result<VarMps> {
    for j in (1..sites).rev() {
        let (l, r) = (bonds[j], bonds[j + 1]);
        let mut new_l = [0; 3];
        let mut new_t = SiteTensor::zeros(&[0; 3], &r);
        let mut carry: Vec<Array2<C>> = Vec::new();
        for q in 0..3 {
            let nc: usize = (0..3).map(|s| r[(q + s) % 3]).sum();
            if l[q] == 0 || nc == 0 {
                carry.push(Array2::zeros((l[q], 0)));
                continue;
            }
            let mut m = Array2::<C>::zeros((l[q], nc));
            let mut c0 = 0;
            for s in 0..3 {
                let w = r[(q + s) % 3];
                m.slice_mut(s![.., c0..c0 + w]).assign(tensors[j].get(q, s));
                c0 += w;
            }
            let (u, sv, vt) = svd(&m)?;
            let k = sv
                .iter()
                .filter(|&&x| x > 1e-12 * sv[0] && x > 1e-300)
                .count();
            new_l[q] = k;
            let mut c0 = 0;
            for s in 0..3 {
                let w = r[(q + s) % 3];
                new_t.blocks[3 * q + s] = vt.slice(s![0..k, c0..c0 + w]).to_owned();
                c0 += w;
            }
            let mut us = u.slice(s![.., 0..k]).to_owned();
            for (i, mut col) in us.columns_mut().into_iter().enumerate() {
                col.mapv_inplace(|x| x * sv[i]);
            }
            carry.push(us);
        }
        for q in 0..3 {
            if new_l[q] == 0 {
                new_t.blocks[3 * q] = Array2::zeros((0, r[q]));
                new_t.blocks[3 * q + 1] = Array2::zeros((0, r[(q + 1) % 3]));
                new_t.blocks[3 * q + 2] = Array2::zeros((0, r[(q + 2) % 3]));
            }
        }
        tensors[j] = new_t;
        bonds[j] = new_l;
        let prev = &mut tensors[j - 1];
        for qa in 0..3 {
            for s in 0..3 {
                let q = (qa + s) % 3;
                prev.blocks[3 * qa + s] = prev.blocks[3 * qa + s].dot(&carry[q]);
            }
        }
    }
    let norm: f64 = tensors[0]
        .blocks
        .iter()
        .map(|b| b.iter().map(|x| x.norm_sqr()).sum::<f64>())
        .sum::<f64>()
        .sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    tensors[0]
        .blocks
        .iter_mut()
        .for_each(|b| b.mapv_inplace(|x| x / norm));
    Ok(VarMps {
        sites,
        charge: charge as u8,
        bonds,
        tensors,
        center: 0,
        energy: f64::NAN,
        truncation: vec![0.0; sites - 1],
        sweeps: Vec::new(),
    })
}

/// `Σ_j sin(πj/(L+1)) N_j |g⟩`: a standing-wave start for the excited
/// state, built from the bond-dimension-2 MPO of the sum.
fn standing_wave(g: &VarMps) -> Result<VarMps> {
    let l = g.sites;
    let mut bonds = Vec::with_capacity(l + 1);
    for (b, d) in g.bonds.iter().enumerate() {
        bonds.push(if b == 0 || b == l {
            *d
        } else {
            [2 * d[0], 2 * d[1], 2 * d[2]]
        });
    }
    let tensors = (0..l)
        .map(|j| {
            let amp = (std::f64::consts::PI * (j + 1) as f64 / (l + 1) as f64).sin();
            let (dl, dr) = (g.bonds[j], g.bonds[j + 1]);
            let (first, last) = (j == 0, j + 1 == l);
            let mut t = SiteTensor::zeros(&bonds[j], &bonds[j + 1]);
            for q in 0..3 {
                for s in 0..3 {
                    let a = g.get_block(j, q, s);
                    let oa = a.mapv(|x| x * (amp * s as f64));
                    let blk = &mut t.blocks[3 * q + s];
                    let (rl, rr) = (dl[q], dr[(q + s) % 3]);
                    // channel 0 = operator not yet placed, channel 1 = placed
                    match (first, last) {
                        (true, true) => blk.assign(&oa),
                        (true, false) => {
                            blk.slice_mut(s![.., 0..rr]).assign(a);
                            blk.slice_mut(s![.., rr..]).assign(&oa);
                        }
                        (false, true) => {
                            blk.slice_mut(s![0..rl, ..]).assign(&oa);
                            blk.slice_mut(s![rl.., ..]).assign(a);
                        }
                        (false, false) => {
                            blk.slice_mut(s![0..rl, 0..rr]).assign(a);
                            blk.slice_mut(s![0..rl, rr..]).assign(&oa);
                            blk.slice_mut(s![rl.., rr..]).assign(a);
                        }
                    }
                }
            }
            t
        })
        .collect();
    right_canonical(l, g.charge as usize, bonds, tensors)
}

struct Penalty<'a> {
    weight: f64,
    target: &'a VarMps,
}

fn run(
    p: &ModelParams,
    charge: u8,
    opts: &DmrgOptions,
    penalty: Option<Penalty>,
) -> Result<VarMps> {
    opts.validate()?;
    check_charge(charge)?;
    if p.sites < 4 {
        return Err(Error::InvalidParameter(format!(
            "DMRG needs L ≥ 4, got {}",
            p.sites
        )));
    }
    let l = p.sites;
    let mpo = Mpo::new(&ChainTerms::new(p)?)?;
    let mut rng =
        ChaCha8Rng::seed_from_u64(opts.seed ^ (charge as u64) << 32 ^ penalty.is_some() as u64);
    let mut psi = match &penalty {
        Some(pen) => standing_wave(pen.target)?,
        None => random_mps(l, charge as usize, &mut rng)?,
    };

    // right environments for bonds 1..=L
    let mut re: Vec<Env> = vec![Vec::new(); l + 1];
    re[l] = right_boundary(&mpo, charge as usize);
    for j in (1..l).rev() {
        re[j] = grow_right(
            &re[j + 1],
            &psi.tensors[j],
            &mpo.sites[j],
            &mpo,
            &psi.bonds[j],
        );
    }
    let mut le: Vec<Env> = vec![Vec::new(); l + 1];
    le[0] = left_boundary(&mpo);

    let mut ore: Vec<Overlap> = vec![Vec::new(); l + 1];
    let mut ole: Vec<Overlap> = vec![Vec::new(); l + 1];
    if let Some(pen) = &penalty {
        let g = pen.target;
        let mut d = vec![Array2::zeros((0, 0)); 3];
        d[charge as usize] = Array2::from_elem((1, 1), ONE);
        ore[l] = d;
        for j in (1..l).rev() {
            ore[j] = overlap_right(
                &ore[j + 1],
                &psi.tensors[j],
                &g.tensors[j],
                &psi.bonds[j],
                &g.bonds[j],
            );
        }
        let mut d = vec![Array2::zeros((0, 0)); 3];
        d[0] = Array2::from_elem((1, 1), ONE);
        ole[0] = d;
    }

    let mut last = f64::INFINITY;
    for sweep in 1..=opts.max_sweeps {
        let mut energy = f64::INFINITY;
        let mut max_trunc: f64 = 0.0;
        let order: Vec<(usize, bool)> = (0..l - 1)
            .map(|j| (j, true))
            .chain((0..l - 1).rev().map(|j| (j, false)))
            .collect();
        for (j, move_right) in order {
            let theta = Theta::from_pair(
                &psi.tensors[j],
                &psi.tensors[j + 1],
                psi.bonds[j],
                psi.bonds[j + 2],
            );
            let projector = penalty.as_ref().map(|pen| {
                let g = pen.target;
                let gt =
                    Theta::from_pair(&g.tensors[j], &g.tensors[j + 1], g.bonds[j], g.bonds[j + 2]);
                let mut proj = Theta::zeros(theta.left, theta.right);
                for k in 0..27 {
                    let (q, s1, s2) = (k / 9, k / 3 % 3, k % 3);
                    let qr = (q + s1 + s2) % 3;
                    if proj.blocks[k].is_empty() || gt.blocks[k].is_empty() {
                        continue;
                    }
                    proj.blocks[k] = ole[j][q].dot(&gt.blocks[k]).dot(&ore[j + 2][qr].t());
                }
                (pen.weight * p.j, proj.to_vec())
            });
            let h = Heff {
                le: &le[j],
                re: &re[j + 2],
                w1: &mpo.sites[j],
                w2: &mpo.sites[j + 1],
                mpo: &mpo,
                projector,
            };
            if theta.len() == 0 {
                return Err(Error::ZeroVector);
            }
            let (e, v) = lanczos(
                |x| h.apply_vec(&theta, x),
                &theta.to_vec(),
                opts.lanczos_tol,
                opts.lanczos_max,
            )?;
            energy = e;
            let sp = split(
                &theta.with_values(&v),
                opts.chi_max,
                opts.cutoff,
                move_right,
            )?;
            max_trunc = max_trunc.max(sp.discarded);
            psi.truncation[j] = sp.discarded;
            psi.tensors[j] = sp.a;
            psi.tensors[j + 1] = sp.b;
            psi.bonds[j + 1] = sp.middle;
            if move_right {
                le[j + 1] = grow_left(
                    &le[j],
                    &psi.tensors[j],
                    &mpo.sites[j],
                    &mpo,
                    &psi.bonds[j + 1],
                );
                if let Some(pen) = &penalty {
                    let g = pen.target;
                    ole[j + 1] = overlap_left(
                        &ole[j],
                        &psi.tensors[j],
                        &g.tensors[j],
                        &psi.bonds[j + 1],
                        &g.bonds[j + 1],
                    );
                }
                psi.center = j + 1;
            } else {
                re[j + 1] = grow_right(
                    &re[j + 2],
                    &psi.tensors[j + 1],
                    &mpo.sites[j + 1],
                    &mpo,
                    &psi.bonds[j + 1],
                );
                if let Some(pen) = &penalty {
                    let g = pen.target;
                    ore[j + 1] = overlap_right(
                        &ore[j + 2],
                        &psi.tensors[j + 1],
                        &g.tensors[j + 1],
                        &psi.bonds[j + 1],
                        &g.bonds[j + 1],
                    );
                }
                psi.center = j;
            }
        }
        let delta = (last - energy).abs();
        psi.energy = energy;
        psi.sweeps.push(SweepRecord {
            sweep,
            energy,
            delta: if last.is_finite() {
                last - energy
            } else {
                f64::NAN
            },
            max_truncation: max_trunc,
            max_bond: psi.max_bond(),
        });
        if delta < opts.energy_tol {
            return Ok(psi);
        }
        last = energy;
    }
    let delta = psi.sweeps.last().map(|s| s.delta.abs()).unwrap_or(f64::NAN);
    Err(Error::NoConvergence {
        iterations: opts.max_sweeps,
        residual: delta,
    })
}

/// Lowest state of `H` in sector `charge`.
pub fn dmrg_ground(p: &ModelParams, charge: u8, opts: &DmrgOptions) -> Result<VarMps> {
    run(p, charge, opts, None)
}

/// Lowest state of `H + w|g⟩⟨g|` in the sector of `ground`.
pub fn dmrg_excited(p: &ModelParams, ground: &VarMps, opts: &DmrgOptions) -> Result<VarMps> {
    run(
        p,
        ground.charge,
        opts,
        Some(Penalty {
            weight: opts.penalty,
            target: ground,
        }),
    )
}

/// `|⟨a|b⟩|` for two states in the same sector.
pub fn overlap(a: &VarMps, b: &VarMps) -> Result<C> {
    if a.sites != b.sites || a.charge != b.charge {
        return Err(Error::BasisMismatch {
            left: format!("L={} q={}", a.sites, a.charge),
            right: format!("L={} q={}", b.sites, b.charge),
        });
    }
    let mut o: Overlap = vec![
        Array2::from_elem((1, 1), ONE),
        Array2::zeros((0, 0)),
        Array2::zeros((0, 0)),
    ];
    for j in 0..a.sites {
        o = overlap_left(
            &o,
            &a.tensors[j],
            &b.tensors[j],
            &a.bonds[j + 1],
            &b.bonds[j + 1],
        );
    }
    Ok(o[a.charge as usize][[0, 0]])
}

#[derive(Clone, Debug, Serialize)]
pub struct SectorResult {
    pub charge: u8,
    pub e0: f64,
    pub e1: f64,
    pub max_truncation: f64,
    pub sweeps: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct GapResult {
    pub phi: f64,
    pub sites: usize,
    pub chi_max: usize,
    pub sectors: Vec<SectorResult>,
    pub e0: f64,
    pub gap: f64,
}

impl GapResult {
    pub fn max_truncation(&self) -> f64 {
        self.sectors
            .iter()
            .map(|s| s.max_truncation)
            .fold(0.0, f64::max)
    }

    /// Spread of the three sector ground energies.
    pub fn triplet_splitting(&self) -> f64 {
        let e: Vec<f64> = self.sectors.iter().map(|s| s.e0).collect();
        e.iter().cloned().fold(f64::MIN, f64::max) - e.iter().cloned().fold(f64::MAX, f64::min)
    }
}

/// Gap above the ground triplet on the solvable line, with `H_B`, `J = 1`.
pub fn dmrg_gap(sites: usize, phi: f64, opts: &DmrgOptions) -> Result<GapResult> {
    let p = solvable_line(phi)?.params(sites, 1.0, true)?;
    dmrg_gap_params(&p, phi, opts)
}

pub fn dmrg_gap_params(p: &ModelParams, phi: f64, opts: &DmrgOptions) -> Result<GapResult> {
    let sectors = (0..3u8)
        .map(|q| {
            let g = dmrg_ground(p, q, opts)?;
            let x = dmrg_excited(p, &g, opts)?;
            Ok(SectorResult {
                charge: q,
                e0: g.energy,
                e1: x.energy,
                max_truncation: g.max_truncation().max(x.max_truncation()),
                sweeps: g.sweeps.len() + x.sweeps.len(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let e0 = sectors.iter().map(|s| s.e0).fold(f64::INFINITY, f64::min);
    let e1 = sectors.iter().map(|s| s.e1).fold(f64::INFINITY, f64::min);
    Ok(GapResult {
        phi,
        sites: p.sites,
        chi_max: opts.chi_max,
        sectors,
        e0,
        gap: e1 - e0,
    })
}

pub fn write_gap_csv<W: Write>(rows: &[GapResult], out: W) -> Result<()> {
    let mut out = out;
    writeln!(out, "# pflab-dmrg v1")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "phi",
        "L",
        "chi_max",
        "q",
        "E0",
        "E1",
        "gap",
        "max_truncation_error",
    ])
    .map_err(csv_err)?;
    for r in rows {
        for s in &r.sectors {
            w.write_record([
                r.phi.to_string(),
                r.sites.to_string(),
                r.chi_max.to_string(),
                s.charge.to_string(),
                format!("{:.15e}", s.e0),
                format!("{:.15e}", s.e1),
                format!("{:.15e}", r.gap),
                format!("{:.3e}", s.max_truncation),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groundstate::build_gs_vector;
    use crate::spectra::{spectrum_table, SolverOptions};

    #[test]
    fn svd_reconstructs_complex_input() {
        let m = Array2::from_shape_fn((4, 3), |(i, j)| {
            C::new(i as f64 - j as f64, (i * j) as f64 * 0.3)
        });
        let (u, s, vt) = svd(&m).unwrap();
        let mut us = u.clone();
        for (j, mut c) in us.columns_mut().into_iter().enumerate() {
            c.mapv_inplace(|x| x * s[j]);
        }
        let back = us.dot(&vt);
        assert!((&back - &m).iter().map(|x| x.norm()).fold(0.0, f64::max) < 1e-12);
    }

    #[test]
    fn mpo_reproduces_bond_block() {
        let p = solvable_line(0.6).unwrap().params(4, 1.0, true).unwrap();
        let terms = ChainTerms::new(&p).unwrap();
        let mpo = Mpo::new(&terms).unwrap();
        let done = mpo.dim - 1;
        let mut rebuilt = Array2::<C>::zeros((9, 9));
        for e in mpo.sites[1]
            .iter()
            .filter(|e| e.win == 0 && e.wout != 0 && e.wout != done)
        {
            for f in mpo.sites[2]
                .iter()
                .filter(|f| f.win == e.wout && f.wout == done)
            {
                rebuilt[[3 * e.so + f.so, 3 * e.si + f.si]] += e.c * f.c;
            }
        }
        let diff = (&rebuilt - &terms.bond)
            .iter()
            .map(|x| x.norm())
            .fold(0.0, f64::max);
        assert!(diff < 1e-12, "{diff}");
        for (w, d) in mpo.delta.iter().enumerate() {
            for e in mpo.sites[1].iter().filter(|e| e.wout == w) {
                assert_eq!((mpo.delta[e.win] + e.so + 3 - e.si) % 3, *d);
            }
        }
    }

    #[test]
    fn sector_ground_energies_match_exact_diagonalization() {
        let p = solvable_line(0.5).unwrap().params(8, 1.0, false).unwrap();
        let table = spectrum_table(&p, 1, &SolverOptions::default()).unwrap();
        for q in 0..3u8 {
            let g = dmrg_ground(&p, q, &DmrgOptions::with_chi(40)).unwrap();
            let want = table.levels[q as usize][0];
            assert!(
                (g.energy - want).abs() < 1e-8,
                "q={q}: {} vs {want}",
                g.energy
            );
        }
    }

    #[test]
    fn gap_matches_exact_diagonalization() {
        let phi = 0.5;
        let p = solvable_line(phi).unwrap().params(8, 1.0, true).unwrap();
        let table = spectrum_table(&p, 2, &SolverOptions::default()).unwrap();
        let r = dmrg_gap(8, phi, &DmrgOptions::with_chi(40)).unwrap();
        assert!(
            (r.gap - table.gap().unwrap()).abs() < 1e-6,
            "{} vs {}",
            r.gap,
            table.gap().unwrap()
        );
        assert!(r.triplet_splitting() < 1e-8);
        for s in &r.sectors {
            assert!((s.e1 - table.levels[s.charge as usize][1]).abs() < 1e-6);
        }
    }

    #[test]
    fn truncation_shrinks_with_bond_dimension() {
        let p = solvable_line(-1.0).unwrap().params(12, 1.0, false).unwrap();
        let trunc: Vec<f64> = [3, 5, 8]
            .iter()
            .map(|&chi| {
                let mut o = DmrgOptions::with_chi(chi);
                o.cutoff = 0.0;
                o.energy_tol = 1e-8;
                dmrg_ground(&p, 0, &o).unwrap().max_truncation()
            })
            .collect();
        assert!(trunc[0] > trunc[1] && trunc[1] > trunc[2], "{trunc:?}");
    }

    #[test]
    fn gap_is_three_at_the_fixed_point() {
        let r = dmrg_gap(12, 0.0, &DmrgOptions::with_chi(20)).unwrap();
        assert!((r.gap - 3.0).abs() < 1e-8, "{}", r.gap);
    }

    #[test]
    fn recovers_exact_ground_state() {
        let phi = 0.7;
        let p = solvable_line(phi).unwrap().params(8, 1.0, true).unwrap();
        for q in 0..3u8 {
            let g = dmrg_ground(&p, q, &DmrgOptions::with_chi(20)).unwrap();
            let v = g.to_vector().unwrap();
            let exact = build_gs_vector(8, phi, q).unwrap().to_full();
            let f = vdot(&exact, &v).norm();
            assert!(f > 1.0 - 1e-8, "q={q}: fidelity {f}");
            assert!(g.max_bond() <= 3 * 3);
        }
    }

    #[test]
    fn bond_dimension_three_suffices_for_exact_states() {
        let phi = 1.3;
        let p = solvable_line(phi).unwrap().params(10, 1.0, true).unwrap();
        let g = dmrg_ground(&p, 1, &DmrgOptions::with_chi(3)).unwrap();
        let exact = build_gs_vector(10, phi, 1).unwrap().to_full();
        assert!(vdot(&exact, &g.to_vector().unwrap()).norm() > 1.0 - 1e-10);
        assert!(g.max_truncation() < 1e-12);
    }

    #[test]
    fn mps_stays_normalized_and_energy_does_not_rise() {
        let p = solvable_line(-0.8).unwrap().params(10, 1.0, true).unwrap();
        let g = dmrg_ground(&p, 2, &DmrgOptions::with_chi(12)).unwrap();
        assert!((overlap(&g, &g).unwrap().norm() - 1.0).abs() < 1e-10);
        for w in g.sweeps.windows(2) {
            assert!(w[1].energy <= w[0].energy + 1e-12);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let p = solvable_line(0.1).unwrap().params(3, 1.0, true).unwrap();
        assert!(dmrg_ground(&p, 0, &DmrgOptions::default()).is_err());
        let p = solvable_line(0.1).unwrap().params(6, 1.0, true).unwrap();
        assert!(dmrg_ground(&p, 0, &DmrgOptions::with_chi(2)).is_err());
        assert!(dmrg_ground(&p, 3, &DmrgOptions::default()).is_err());
    }
}
