//! Projection of `H` onto the zero- and single-domain-wall product states of
//! the φ=0 limit, for cheap Δ_m size scaling at small φ.
//!
//! Product states are built from the tilde states
//! `|t̃⟩ = (|0⟩ + ω^t |1⟩ + ω^{2t} |2⟩)/√3`. The global charge `ω^N` shifts
//! every `t` by one, so a wall configuration and its two shifts span one
//! orbit; the sector-`q` combination is `Σ_g ω^{−qg} |c + g⟩ / √3`.

use std::io::Write;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::omega_pow;
use crate::analytics::{linear_fit, LinearFit};
use crate::eigen::dense_eigh;
use crate::error::{Error, Result};
use crate::groundstate::csv_err;
use crate::model::{solvable_line, ChainTerms, ModelParams};
use crate::spectra::delta_m;

type C = Complex64;

/// A product state with at most one wall: sites `1..=bond` carry `left`,
/// the rest `right`. `bond == 0` is the uniform state `left`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct WallConfig {
    pub bond: usize,
    pub left: u8,
    pub right: u8,
}

impl WallConfig {
    pub fn uniform(t: u8) -> Self {
        Self {
            bond: 0,
            left: t,
            right: t,
        }
    }

    pub fn value(&self, site: usize) -> u8 {
        if self.bond == 0 || site <= self.bond {
            self.left
        } else {
            self.right
        }
    }

    /// Orbit representative (`left = 0`) and the shift that maps it back.
    pub fn representative(&self) -> (WallConfig, u8) {
        let g = self.left;
        let rep = WallConfig {
            bond: self.bond,
            left: 0,
            right: (self.right + 3 - g) % 3,
        };
        (rep, g)
    }
}

#[derive(Clone, Debug)]
pub struct DwBasis {
    pub sites: usize,
    /// All `3 + 6(L−1)` configurations.
    pub configs: Vec<WallConfig>,
    /// Orbit representatives, one per symmetrized state of each sector:
    /// the uniform state, then `(k, 0, d)` for `k = 1..L−1`, `d = 1, 2`.
    pub reps: Vec<WallConfig>,
}

pub fn build_dw_basis(sites: usize) -> Result<DwBasis> {
    if sites < 3 {
        return Err(Error::InvalidParameter(format!(
            "domain-wall basis needs L ≥ 3, got {sites}"
        )));
    }
    let mut configs: Vec<WallConfig> = (0..3).map(WallConfig::uniform).collect();
    let mut reps = vec![WallConfig::uniform(0)];
    for k in 1..sites {
        for a in 0..3u8 {
            for d in 1..3u8 {
                configs.push(WallConfig {
                    bond: k,
                    left: a,
                    right: (a + d) % 3,
                });
            }
        }
        for d in 1..3u8 {
            reps.push(WallConfig {
                bond: k,
                left: 0,
                right: d,
            });
        }
    }
    Ok(DwBasis {
        sites,
        configs,
        reps,
    })
}

fn tilde_unitary() -> Array2<C> {
    let s = 1.0 / 3f64.sqrt();
    Array2::from_shape_fn((3, 3), |(n, t)| omega_pow((t * n) as i64) * s)
}

impl DwBasis {
    pub fn sector_dim(&self) -> usize {
        self.reps.len()
    }

    /// Full-space vector of a configuration (small `L` only).
    pub fn product_vector(&self, cfg: &WallConfig) -> Vec<C> {
        let u = tilde_unitary();
        let mut v = vec![C::new(1.0, 0.0)];
        for s in 1..=self.sites {
            let t = cfg.value(s) as usize;
            v = v
                .iter()
                .flat_map(|&a| (0..3).map(move |n| (a, n)))
                .map(|(a, n)| a * u[[n, t]])
                .collect();
        }
        v
    }

    /// Full-space vector of representative `r` in sector `q`.
    pub fn sector_vector(&self, r: usize, q: u8) -> Vec<C> {
        let rep = self.reps[r];
        let mut out = vec![C::new(0.0, 0.0); 3usize.pow(self.sites as u32)];
        for g in 0..3u8 {
            let shifted = WallConfig {
                bond: rep.bond,
                left: (rep.left + g) % 3,
                right: (rep.right + g) % 3,
            };
            let w = omega_pow(-(q as i64) * g as i64) / 3f64.sqrt();
            for (o, a) in out.iter_mut().zip(self.product_vector(&shifted)) {
                *o += w * a;
            }
        }
        out
    }

    fn rep_index(&self, rep: &WallConfig) -> usize {
        if rep.bond == 0 {
            0
        } else {
            1 + 2 * (rep.bond - 1) + (rep.right as usize - 1)
        }
    }
}

/// The local terms of `H` rotated into the tilde basis, with the value
/// each takes on a uniform state.
struct TildeTerms {
    sites: usize,
    onsite: Vec<Array2<C>>,
    bond: Array2<C>,
    onsite_uniform: Vec<C>,
    bond_uniform: C,
}

impl TildeTerms {
    fn new(p: &ModelParams) -> Result<Self> {
        let terms = ChainTerms::new(p)?;
        let u = tilde_unitary();
        let ud = u.t().mapv(|v| v.conj());
        let onsite: Vec<Array2<C>> = terms.onsite.iter().map(|o| ud.dot(o).dot(&u)).collect();
        let uu = Array2::from_shape_fn((9, 9), |(r, c)| u[[r / 3, c / 3]] * u[[r % 3, c % 3]]);
        let uud = uu.t().mapv(|v| v.conj());
        let bond = uud.dot(&terms.bond).dot(&uu);
        Ok(Self {
            sites: p.sites,
            onsite_uniform: onsite.iter().map(|o| o[[0, 0]]).collect(),
            bond_uniform: bond[[0, 0]],
            onsite,
            bond,
        })
    }

    fn offset(&self) -> f64 {
        (self.onsite_uniform.iter().sum::<C>() + self.bond_uniform * (self.sites - 1) as f64).re
    }

    /// `(H − offset)|cfg⟩` restricted to configurations with ≤ 1 wall.
    fn apply(&self, cfg: &WallConfig) -> Vec<(WallConfig, C)> {
        let l = self.sites;
        let mut out = Vec::new();
        let touches_wall =
            |lo: usize, hi: usize| cfg.bond != 0 && lo <= cfg.bond + 1 && hi >= cfg.bond;
        let mut emit = |changed: &[(usize, u8)], amp: C| {
            if amp.norm() < 1e-15 {
                return;
            }
            let value = |j: usize| {
                changed
                    .iter()
                    .find(|(s, _)| *s == j)
                    .map_or(cfg.value(j), |&(_, v)| v)
            };
            let mut bonds: Vec<usize> = Vec::with_capacity(5);
            if cfg.bond != 0 {
                bonds.push(cfg.bond);
            }
            for &(s, _) in changed {
                bonds.extend([s.wrapping_sub(1), s]);
            }
            bonds.retain(|&k| k >= 1 && k < l);
            bonds.sort_unstable();
            bonds.dedup();
            let walls: Vec<usize> = bonds
                .into_iter()
                .filter(|&k| value(k) != value(k + 1))
                .collect();
            let next = match walls.as_slice() {
                [] => WallConfig::uniform(value(1)),
                [k] => WallConfig {
                    bond: *k,
                    left: value(1),
                    right: value(l),
                },
                _ => return,
            };
            out.push((next, amp));
        };
        for s in 1..=l {
            let t = cfg.value(s) as usize;
            let o = &self.onsite[s - 1];
            for t2 in 0..3 {
                let mut amp = o[[t2, t]];
                if t2 == t {
                    if !touches_wall(s, s) {
                        continue;
                    }
                    amp -= self.onsite_uniform[s - 1];
                }
                emit(&[(s, t2 as u8)], amp);
            }
        }
        for s in 1..l {
            let col = 3 * cfg.value(s) as usize + cfg.value(s + 1) as usize;
            for row in 0..9 {
                let mut amp = self.bond[[row, col]];
                if row == col {
                    if !touches_wall(s, s + 1) {
                        continue;
                    }
                    amp -= self.bond_uniform;
                }
                emit(&[(s, (row / 3) as u8), (s + 1, (row % 3) as u8)], amp);
            }
        }
        out
    }
}

/// Sector blocks of the projected Hamiltonian, stored relative to `offset`
/// (the energy of any uniform product state).
#[derive(Clone, Debug)]
pub struct ProjectedH {
    pub params: ModelParams,
    pub offset: f64,
    pub blocks: [Array2<C>; 3],
}

pub fn project_h(p: &ModelParams, basis: &DwBasis) -> Result<ProjectedH> {
    if p.sites != basis.sites {
        return Err(Error::BasisMismatch {
            left: format!("L={}", p.sites),
            right: format!("L={}", basis.sites),
        });
    }
    let tt = TildeTerms::new(p)?;
    let n = basis.sector_dim();
    let mut blocks: [Array2<C>; 3] = std::array::from_fn(|_| Array2::zeros((n, n)));
    for (c, rep) in basis.reps.iter().enumerate() {
        for (img, amp) in tt.apply(rep) {
            let (r, g) = img.representative();
            let row = basis.rep_index(&r);
            for (q, block) in blocks.iter_mut().enumerate() {
                block[[row, c]] += omega_pow((q as i64) * g as i64) * amp;
            }
        }
    }
    Ok(ProjectedH {
        params: *p,
        offset: tt.offset(),
        blocks,
    })
}

/// Projected matrix on the unsymmetrized configurations (for checks).
pub fn project_h_raw(p: &ModelParams, basis: &DwBasis) -> Result<Array2<C>> {
    let tt = TildeTerms::new(p)?;
    let index: std::collections::HashMap<WallConfig, usize> = basis
        .configs
        .iter()
        .enumerate()
        .map(|(i, c)| (*c, i))
        .collect();
    let n = basis.configs.len();
    let mut m = Array2::zeros((n, n));
    for (c, cfg) in basis.configs.iter().enumerate() {
        for (img, amp) in tt.apply(cfg) {
            m[[index[&img], c]] += amp;
        }
        m[[c, c]] += C::new(tt.offset(), 0.0);
    }
    Ok(m)
}

impl ProjectedH {
    pub fn hermiticity_residual(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| {
                b.iter()
                    .zip(b.t().iter())
                    .map(|(x, y)| (x - y.conj()).norm())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// Sorted eigenvalues per sector, relative to `offset`.
    pub fn relative_levels(&self) -> Result<[Vec<f64>; 3]> {
        let mut out: [Vec<f64>; 3] = Default::default();
        for (q, b) in self.blocks.iter().enumerate() {
            out[q] = dense_eigh(b)?.0;
        }
        Ok(out)
    }

    pub fn levels(&self) -> Result<[Vec<f64>; 3]> {
        let mut l = self.relative_levels()?;
        for v in l.iter_mut() {
            v.iter_mut().for_each(|e| *e += self.offset);
        }
        Ok(l)
    }
}

/// One row of the inset table.
#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct DeltaRow {
    pub phi: f64,
    #[serde(rename = "L")]
    pub sites: usize,
    pub m: usize,
    #[serde(rename = "Delta_m")]
    pub delta: f64,
}

/// `Δ_m(L)` for each `L` in `sizes` and each `m` in `levels`, along the
/// solvable line at `φ`, with `J = 1`.
pub fn dw_delta_scaling(
    phi: f64,
    sizes: &[usize],
    levels: &[usize],
    with_boundary: bool,
) -> Result<Vec<DeltaRow>> {
    let pt = solvable_line(phi)?;
    let per_l: Vec<Result<Vec<DeltaRow>>> = sizes
        .par_iter()
        .map(|&l| {
            let p = pt.params(l, 1.0, with_boundary)?;
            let proj = project_h(&p, &build_dw_basis(l)?)?;
            let e = proj.relative_levels()?;
            levels
                .iter()
                .map(|&m| {
                    Ok(DeltaRow {
                        phi,
                        sites: l,
                        m,
                        delta: delta_m(&e, m)?,
                    })
                })
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    for r in per_l {
        out.extend(r?);
    }
    Ok(out)
}

/// Splittings below this (in units of `J`) are not resolved by double
/// precision eigenvalues and are left out of the exponential fit.
pub const DELTA_RESOLUTION: f64 = 1e-12;

/// `L = 4, 6, …, 60` then steps of 20 up to `lmax`.
pub fn inset_sizes(lmax: usize) -> Vec<usize> {
    let mut s: Vec<usize> = (4..=lmax.min(60)).step_by(2).collect();
    s.extend((80..=lmax).step_by(20));
    s
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct InsetFit {
    pub phi: f64,
    /// `ln Δ_1` against `L`, resolved points only.
    pub delta1_exponential: LinearFit,
    /// `ln Δ_1` against `ln L` on the same points, for contrast.
    pub delta1_power: LinearFit,
    pub delta1_max_resolved_l: usize,
    /// `ln Δ_4` against `ln L`.
    pub delta4_power: LinearFit,
    /// `ln Δ_4` against `L`, for contrast.
    pub delta4_exponential: LinearFit,
}

/// Fits the rows of one `φ` produced with levels 1 and 4.
pub fn inset_fit(rows: &[DeltaRow]) -> Result<InsetFit> {
    let phi = rows
        .first()
        .map(|r| r.phi)
        .ok_or(Error::InsufficientLevels {
            needed: 2,
            available: 0,
        })?;
    let pick = |m: usize, floor: f64| -> (Vec<f64>, Vec<f64>) {
        rows.iter()
            .filter(|r| r.m == m && r.delta > floor)
            .map(|r| (r.sites as f64, r.delta.ln()))
            .unzip()
    };
    let (l1, d1) = pick(1, DELTA_RESOLUTION);
    let (l4, d4) = pick(4, 0.0);
    let ln = |v: &[f64]| v.iter().map(|x| x.ln()).collect::<Vec<_>>();
    Ok(InsetFit {
        phi,
        delta1_exponential: linear_fit(&l1, &d1)?,
        delta1_power: linear_fit(&ln(&l1), &d1)?,
        delta1_max_resolved_l: l1.iter().cloned().fold(0.0, f64::max) as usize,
        delta4_power: linear_fit(&ln(&l4), &d4)?,
        delta4_exponential: linear_fit(&l4, &d4)?,
    })
}

pub fn write_delta_csv<W: Write>(rows: &[DeltaRow], out: W) -> Result<()> {
    let mut out = out;
    writeln!(out, "# pflab-inset v1")?;
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_h;
    use crate::spectra::{spectrum_table, SolverOptions};

    fn dot(a: &[C], b: &[C]) -> C {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
    }

    #[test]
    fn basis_counts_and_orthonormality() {
        let b = build_dw_basis(3).unwrap();
        assert_eq!(b.configs.len(), 3 + 12);
        assert_eq!(b.sector_dim(), 1 + 2 * 2);
        let vs: Vec<Vec<C>> = b.configs.iter().map(|c| b.product_vector(c)).collect();
        for i in 0..vs.len() {
            for j in 0..vs.len() {
                let g = dot(&vs[i], &vs[j]);
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g - want).norm() < 1e-13);
            }
        }
        assert!(build_dw_basis(2).is_err());
    }

    #[test]
    fn sector_vectors_carry_charge() {
        let b = build_dw_basis(4).unwrap();
        for q in 0..3u8 {
            for r in 0..b.sector_dim() {
                let v = b.sector_vector(r, q);
                for (idx, a) in v.iter().enumerate() {
                    if a.norm() > 1e-12 {
                        assert_eq!(crate::algebra::total_number(idx) % 3, q as usize);
                    }
                }
                assert!((dot(&v, &v).re - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn phi_zero_is_diagonal() {
        for l in [3usize, 7, 60] {
            let p = solvable_line(0.0).unwrap().params(l, 1.0, true).unwrap();
            let proj = project_h(&p, &build_dw_basis(l).unwrap()).unwrap();
            assert!((proj.offset + 2.0 * (l as f64 - 1.0)).abs() < 1e-12);
            for b in &proj.blocks {
                for ((r, c), v) in b.indexed_iter() {
                    let want = if r == c && r != 0 { 3.0 } else { 0.0 };
                    assert!((v - want).norm() < 1e-12, "L={l} ({r},{c}) {v}");
                }
            }
        }
    }

    #[test]
    fn one_wall_states_are_eigenstates_at_phi_zero() {
        let l = 4;
        let p = solvable_line(0.0).unwrap().params(l, 1.0, true).unwrap();
        let h = build_h(&p).unwrap();
        let b = build_dw_basis(l).unwrap();
        for cfg in &b.configs {
            let v = b.product_vector(cfg);
            let e = if cfg.bond == 0 { -6.0 } else { -3.0 };
            let hv = h.matvec(&v);
            let r: f64 = hv
                .iter()
                .zip(&v)
                .map(|(a, x)| (a - x * e).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(r < 1e-12, "{cfg:?}");
        }
    }

    #[test]
    fn matches_explicit_projection() {
        let l = 4;
        let p = solvable_line(0.3).unwrap().params(l, 1.0, true).unwrap();
        let h = build_h(&p).unwrap();
        let b = build_dw_basis(l).unwrap();
        let proj = project_h(&p, &b).unwrap();
        for q in 0..3u8 {
            let vs: Vec<Vec<C>> = (0..b.sector_dim()).map(|r| b.sector_vector(r, q)).collect();
            for (r, vr) in vs.iter().enumerate() {
                for (c, vc) in vs.iter().enumerate() {
                    let mut want = dot(vr, &h.matvec(vc));
                    if r == c {
                        want -= proj.offset;
                    }
                    let got = proj.blocks[q as usize][[r, c]];
                    assert!(
                        (got - want).norm() < 1e-12,
                        "q={q} ({r},{c}): {got} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn projection_commutes_with_charge() {
        let l = 6;
        let p = solvable_line(0.2).unwrap().params(l, 1.0, true).unwrap();
        let b = build_dw_basis(l).unwrap();
        let raw = project_h_raw(&p, &b).unwrap();
        // sector vectors expressed in the raw configuration basis
        let index: std::collections::HashMap<WallConfig, usize> =
            b.configs.iter().enumerate().map(|(i, c)| (*c, i)).collect();
        let coeffs = |r: usize, q: u8| -> Vec<C> {
            let mut v = vec![C::new(0.0, 0.0); b.configs.len()];
            let rep = b.reps[r];
            for g in 0..3u8 {
                let c = WallConfig {
                    bond: rep.bond,
                    left: (rep.left + g) % 3,
                    right: (rep.right + g) % 3,
                };
                v[index[&c]] += omega_pow(-(q as i64) * g as i64) / 3f64.sqrt();
            }
            v
        };
        let mut worst = 0.0f64;
        for q in 0..3u8 {
            for q2 in 0..3u8 {
                if q == q2 {
                    continue;
                }
                for r in 0..b.sector_dim() {
                    for s in 0..b.sector_dim() {
                        let a = coeffs(r, q);
                        let c = coeffs(s, q2);
                        let rc: Vec<C> = (0..c.len())
                            .map(|i| (0..c.len()).map(|k| raw[[i, k]] * c[k]).sum())
                            .collect();
                        worst = worst.max(dot(&a, &rc).norm());
                    }
                }
            }
        }
        assert!(worst < 1e-12, "{worst}");
    }

    #[test]
    fn hermitian_at_large_l() {
        let p = solvable_line(1e-3).unwrap().params(50, 1.0, true).unwrap();
        let proj = project_h(&p, &build_dw_basis(50).unwrap()).unwrap();
        assert!(proj.hermiticity_residual() < 1e-12);
    }

    #[test]
    fn agrees_with_ed_to_second_order() {
        let l = 6;
        let dev = |phi: f64| {
            let p = solvable_line(phi).unwrap().params(l, 1.0, true).unwrap();
            let proj = project_h(&p, &build_dw_basis(l).unwrap())
                .unwrap()
                .levels()
                .unwrap();
            let k = proj[0].len();
            let ed = spectrum_table(&p, k, &SolverOptions::default()).unwrap();
            (0..3)
                .flat_map(|q| (0..k).map(move |m| (q, m)))
                .map(|(q, m)| (proj[q][m] - ed.levels[q][m]).abs())
                .fold(0.0, f64::max)
        };
        let (d1, d2) = (dev(1e-2), dev(5e-3));
        assert!(d1 < 1e-2, "{d1}");
        let order = (d1 / d2).log2();
        assert!((order - 2.0).abs() < 0.3, "order {order}");
    }

    #[test]
    fn inset_scaling_laws() {
        let rows = dw_delta_scaling(1e-3, &inset_sizes(120), &[1, 4], false).unwrap();
        let fit = inset_fit(&rows).unwrap();
        assert!(
            fit.delta1_exponential.slope < 0.0 && fit.delta1_exponential.r2 > 0.99,
            "{fit:?}"
        );
        assert!(
            fit.delta4_power.slope < 0.0 && fit.delta4_power.r2 > 0.99,
            "{fit:?}"
        );
        assert!(fit.delta1_power.r2 < fit.delta1_exponential.r2);
        assert!(fit.delta4_exponential.r2 < fit.delta4_power.r2);
    }

    #[test]
    fn phi_zero_splittings_vanish() {
        let rows = dw_delta_scaling(0.0, &[5, 9], &[0, 1, 4], true).unwrap();
        assert!(rows.iter().all(|r| r.delta == 0.0));
    }
}
