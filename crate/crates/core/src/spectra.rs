//! Sector-resolved spectra, the φ=0 excitation ladder, the gap and the
//! triplet splittings Δ_m.

use std::io::Write;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{enumerate_sector, omega_pow};
use crate::eigen::{davidson, dense_eigh, residual, DavidsonOptions};
use crate::error::{Error, Result};
use crate::groundstate::{build_gs_vector, csv_err, vec_norm};
use crate::model::{build_ell, build_h_sector, ModelParams};
use crate::operators::LinOp;

type C = Complex64;

/// Sector dimension up to which dense diagonalization is used.
pub const DENSE_MAX: usize = 800;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SolverOptions {
    pub dense_max: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            dense_max: DENSE_MAX,
            tol: 1e-9,
            max_iter: 4000,
            seed: 0x5eed,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SectorSpectrum {
    pub energies: Vec<f64>,
    pub vectors: Vec<Vec<C>>,
    pub residuals: Vec<f64>,
    pub dense: bool,
}

fn reference_overlap(v: &[C]) -> f64 {
    // fixed reference: uniform vector
    v.iter().sum::<C>().norm()
}

/// Sorts by energy; inside a cluster of levels closer than `tol`, by
/// decreasing overlap with the uniform reference vector.
fn sort_levels(mut s: SectorSpectrum, tol: f64) -> SectorSpectrum {
    let mut idx: Vec<usize> = (0..s.energies.len()).collect();
    idx.sort_by(|&a, &b| s.energies[a].total_cmp(&s.energies[b]));
    let mut out = Vec::with_capacity(idx.len());
    let mut k = 0;
    while k < idx.len() {
        let mut end = k + 1;
        while end < idx.len() && s.energies[idx[end]] - s.energies[idx[k]] < tol {
            end += 1;
        }
        let mut cluster = idx[k..end].to_vec();
        cluster.sort_by(|&a, &b| {
            reference_overlap(&s.vectors[b]).total_cmp(&reference_overlap(&s.vectors[a]))
        });
        out.extend(cluster);
        k = end;
    }
    let take = |v: &mut Vec<f64>| out.iter().map(|&i| v[i]).collect::<Vec<_>>();
    s.energies = take(&mut s.energies);
    s.residuals = take(&mut s.residuals);
    s.vectors = out
        .iter()
        .map(|&i| std::mem::take(&mut s.vectors[i]))
        .collect();
    s
}

/// Lowest `k` eigenpairs of a Hermitian, sector-tagged (or full) operator.
pub fn eigensolve(h: &LinOp, k: usize, opts: &SolverOptions) -> Result<SectorSpectrum> {
    let n = h.dim();
    if k == 0 || k > n {
        return Err(Error::InsufficientLevels {
            needed: k,
            available: n,
        });
    }
    let herm = h.hermiticity_residual();
    if herm > 1e-10 {
        return Err(Error::NotHermitian { residual: herm });
    }
    let m = h.matrix();
    let apply = |x: &[C], y: &mut [C]| m.matvec_into(x, y);
    let spec = if n <= opts.dense_max {
        let (vals, vecs) = dense_eigh(&m.to_dense())?;
        let vectors: Vec<Vec<C>> = (0..k).map(|j| vecs.column(j).to_vec()).collect();
        let residuals = vectors
            .iter()
            .zip(&vals)
            .map(|(v, &e)| residual(apply, v, e))
            .collect();
        SectorSpectrum {
            energies: vals[..k].to_vec(),
            vectors,
            residuals,
            dense: true,
        }
    } else {
        let diag: Vec<f64> = m.diagonal().iter().map(|d| d.re).collect();
        let dopts = DavidsonOptions {
            tol: opts.tol,
            max_iter: opts.max_iter,
            seed: opts.seed,
            extra: 4.max(k / 2),
        };
        let out = davidson(n, k, apply, Some(&diag), &[], &dopts)?;
        SectorSpectrum {
            energies: out.values,
            vectors: out.vectors,
            residuals: out.residuals,
            dense: false,
        }
    };
    Ok(sort_levels(spec, 1e-9))
}

/// Energies `e_{m,q}` of `H` for `q = 0, 1, 2`.
#[derive(Clone, Debug, Serialize)]
pub struct SpectrumTable {
    pub params: ModelParams,
    pub levels: [Vec<f64>; 3],
    pub residuals: [Vec<f64>; 3],
    pub solver: SolverOptions,
}

/// Diagonalizes the three sectors of `H(p)` (in parallel), keeping `k`
/// levels per sector.
pub fn spectrum_table(p: &ModelParams, k: usize, opts: &SolverOptions) -> Result<SpectrumTable> {
    p.validate()?;
    let sectors: Vec<Result<SectorSpectrum>> = (0..3u8)
        .into_par_iter()
        .map(|q| {
            let basis = enumerate_sector(p.sites, q)?;
            let h = build_h_sector(p, &basis)?;
            eigensolve(&h, k.min(basis.len()), opts)
        })
        .collect();
    let mut levels: [Vec<f64>; 3] = Default::default();
    let mut residuals: [Vec<f64>; 3] = Default::default();
    for (q, s) in sectors.into_iter().enumerate() {
        let s = s?;
        levels[q] = s.energies;
        residuals[q] = s.residuals;
    }
    Ok(SpectrumTable {
        params: *p,
        levels,
        residuals,
        solver: *opts,
    })
}

impl SpectrumTable {
    pub fn ground_energy(&self) -> f64 {
        self.levels
            .iter()
            .map(|l| l[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// `min_q e_{1,q} − min_q e_{0,q}`.
    pub fn gap(&self) -> Result<f64> {
        let e1 = self
            .levels
            .iter()
            .map(|l| {
                l.get(1).copied().ok_or(Error::InsufficientLevels {
                    needed: 2,
                    available: l.len(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(e1.into_iter().fold(f64::INFINITY, f64::min) - self.ground_energy())
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().flatten().cloned().fold(0.0, f64::max)
    }

    /// CSV rows `L,phi,q,m,energy,residual` after a schema comment line.
    pub fn write_csv<W: Write>(&self, phi: f64, out: W) -> Result<()> {
        let mut out = out;
        writeln!(out, "# pflab-spectrum v1")?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["L", "phi", "q", "m", "energy", "residual"])
            .map_err(csv_err)?;
        for q in 0..3 {
            for (m, (e, r)) in self.levels[q].iter().zip(&self.residuals[q]).enumerate() {
                w.serialize((self.params.sites, phi, q, m, e, r))
                    .map_err(csv_err)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// `Δ_m = √(Σ_{q≠q'} (e_{m,q} − e_{m,q'})²)` over the six ordered pairs.
pub fn delta_m(levels: &[Vec<f64>; 3], m: usize) -> Result<f64> {
    for l in levels {
        if l.len() <= m {
            return Err(Error::InsufficientLevels {
                needed: m + 1,
                available: l.len(),
            });
        }
    }
    let mut s = 0.0;
    for q in 0..3 {
        for r in 0..3 {
            if q != r {
                let d = levels[q][m] - levels[r][m];
                s += d * d;
            }
        }
    }
    Ok(s.sqrt())
}

/// Outcome of applying `Π_j (ℓ_j†)^{m_j}` to `|g_{i,0}⟩`.
#[derive(Clone, Debug, Serialize)]
pub struct LadderReport {
    pub exponents: Vec<u8>,
    pub charge: u8,
    pub predicted: f64,
    pub measured: f64,
    /// ‖(H + H_B) v − E v‖ for the normalized state.
    pub residual: f64,
}

/// `−2J(L−1) + Σ_j 2J[1 − Re ω^{m_j}]`.
pub fn ladder_energy(sites: usize, j: f64, exponents: &[u8]) -> f64 {
    -2.0 * j * (sites as f64 - 1.0)
        + exponents
            .iter()
            .map(|&m| 2.0 * j * (1.0 - omega_pow(m as i64).re))
            .sum::<f64>()
}

pub fn excitation_ladder_check(
    sites: usize,
    exponents: &[u8],
    i: u8,
    j: f64,
) -> Result<LadderReport> {
    if exponents.len() != sites - 1 || exponents.iter().any(|&m| m > 2) {
        return Err(Error::InvalidParameter(format!(
            "need {} bond exponents in {{0,1,2}}",
            sites - 1
        )));
    }
    let p = ModelParams::new(sites, 0.0, j, 0.0, true)?;
    let h = crate::model::build_h(&p)?;
    let mut v = build_gs_vector(sites, 0.0, i)?.to_full();
    for (k, &m) in exponents.iter().enumerate() {
        let ld = build_ell::<C>(sites, k + 1)?.adjoint();
        for _ in 0..m {
            v = ld.matvec(&v);
        }
    }
    let n = vec_norm(&v);
    if n < 1e-12 {
        return Err(Error::ZeroVector);
    }
    v.iter_mut().for_each(|x| *x /= n);
    let hv = h.matvec(&v);
    let measured: f64 = v.iter().zip(&hv).map(|(a, b)| (a.conj() * b).re).sum();
    let predicted = ladder_energy(sites, j, exponents);
    let residual = hv
        .iter()
        .zip(&v)
        .map(|(a, b)| (a - b * predicted).norm_sqr())
        .sum::<f64>()
        .sqrt();
    Ok(LadderReport {
        exponents: exponents.to_vec(),
        charge: i,
        predicted,
        measured,
        residual,
    })
}

/// Multiset of all ladder energies: each of the `L−1` bonds contributes
/// 0 (m=0) or 3J (m=1,2); every level is threefold (one per charge).
pub fn ladder_multiset(sites: usize, j: f64) -> Vec<(f64, usize)> {
    let bonds = sites - 1;
    (0..=bonds)
        .map(|w| {
            let count = binomial(bonds, w) * 2usize.pow(w as u32) * 3;
            (-2.0 * j * bonds as f64 + 3.0 * j * w as f64, count)
        })
        .collect()
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Full dense spectrum of a small operator (all sectors mixed).
pub fn full_spectrum(h: &LinOp) -> Result<Vec<f64>> {
    let d: Array2<C> = h.matrix().to_dense();
    Ok(dense_eigh(&d)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_h, solvable_line};

    fn opts() -> SolverOptions {
        SolverOptions::default()
    }

    #[test]
    fn phi_zero_triplet_and_gap() {
        let p = solvable_line(0.0).unwrap().params(5, 1.0, true).unwrap();
        let t = spectrum_table(&p, 4, &opts()).unwrap();
        for q in 0..3 {
            assert!((t.levels[q][0] + 8.0).abs() < 1e-10);
        }
        assert!((t.gap().unwrap() - 3.0).abs() < 1e-8);
    }

    #[test]
    fn trivial_phase_has_unique_ground_state() {
        let p = ModelParams::new(5, 10.0, 1.0, 0.0, false).unwrap();
        let t = spectrum_table(&p, 2, &opts()).unwrap();
        let mut e0: Vec<f64> = t.levels.iter().map(|l| l[0]).collect();
        e0.sort_by(f64::total_cmp);
        assert!(e0[1] - e0[0] > 1.0);
    }

    #[test]
    fn ladder_single_bond() {
        for m in [1u8, 2] {
            let mut ex = vec![0u8; 3];
            ex[1] = m;
            let r = excitation_ladder_check(4, &ex, 0, 1.0).unwrap();
            assert!((r.predicted - (-6.0 + 3.0)).abs() < 1e-12);
            assert!(r.residual < 1e-10, "{r:?}");
        }
        let r = excitation_ladder_check(4, &[0, 0, 0], 2, 1.0).unwrap();
        assert!((r.predicted + 6.0).abs() < 1e-12 && r.residual < 1e-10);
    }

    #[test]
    fn ladder_all_patterns_l4() {
        for code in 0..27u32 {
            let ex: Vec<u8> = (0..3).map(|k| ((code / 3u32.pow(k)) % 3) as u8).collect();
            for i in 0..3 {
                let r = excitation_ladder_check(4, &ex, i, 1.0).unwrap();
                assert!(r.residual < 1e-10, "{ex:?} i={i}: {r:?}");
            }
        }
    }

    #[test]
    fn spectrum_reconciles_with_ladder() {
        for l in [3usize, 4] {
            let p = ModelParams::new(l, 0.0, 1.0, 0.0, true).unwrap();
            let spec = full_spectrum(&build_h(&p).unwrap()).unwrap();
            let mut k = 0;
            for (e, count) in ladder_multiset(l, 1.0) {
                for _ in 0..count {
                    assert!((spec[k] - e).abs() < 1e-10, "L={l} level {k}");
                    k += 1;
                }
            }
            assert_eq!(k, spec.len());
        }
    }

    #[test]
    fn delta_m_convention() {
        let eps = 0.25;
        let levels = [vec![0.0], vec![eps], vec![eps]];
        assert!((delta_m(&levels, 0).unwrap() - 2.0 * eps).abs() < 1e-15);
        let flat = [vec![1.0], vec![1.0], vec![1.0]];
        assert_eq!(delta_m(&flat, 0).unwrap(), 0.0);
        assert!(matches!(
            delta_m(&flat, 1),
            Err(Error::InsufficientLevels { .. })
        ));
    }

    #[test]
    fn dense_and_iterative_agree() {
        let p = solvable_line(0.5).unwrap().params(7, 1.0, true).unwrap();
        let dense = spectrum_table(&p, 5, &opts()).unwrap();
        let it_opts = SolverOptions {
            dense_max: 0,
            ..opts()
        };
        let iter = spectrum_table(&p, 5, &it_opts).unwrap();
        for q in 0..3 {
            for m in 0..5 {
                assert!(
                    (dense.levels[q][m] - iter.levels[q][m]).abs() < 1e-8,
                    "q={q} m={m}"
                );
            }
        }
        assert!(iter.max_residual() < 1e-8);
    }

    #[test]
    fn solvable_line_triplet_is_exact() {
        for phi in [-1.0, 0.7] {
            let p = solvable_line(phi).unwrap().params(6, 1.0, true).unwrap();
            let t = spectrum_table(&p, 2, &opts()).unwrap();
            assert!(delta_m(&t.levels, 0).unwrap() < 1e-10, "phi={phi}");
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let g = crate::operators::build_parafermion::<C>(2, 1).unwrap();
        assert!(matches!(
            eigensolve(&g, 1, &opts()),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn csv_layout() {
        let p = ModelParams::new(3, 0.0, 1.0, 0.0, true).unwrap();
        let t = spectrum_table(&p, 2, &opts()).unwrap();
        let mut buf = Vec::new();
        t.write_csv(0.0, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), "L,phi,q,m,energy,residual");
        assert_eq!(text.lines().count(), 2 + 6);
    }
}
