//! The exact ground states `|g_{i,φ}⟩` as dense vectors, as bond-dimension-3
//! MPS and as sums of three deformed product states, with their
//! normalization constants `N_{L,φ,i}`.
//!
//! Normalizations are carried in scaled form: with `x = e^{−2φ/3}`,
//! `z_k = 1 + ω^k x + ω^{2k} x²` and `ν(L, i) = N_{L,φ,i} / z_0^L`, every
//! ratio the observables need is a ratio of `ν`'s times powers of `z_0`.

use std::io::Write;

use ndarray::Array2;
use num_complex::Complex64;
use serde::Serialize;

use crate::algebra::{
    check_charge, enumerate_sector, full_dim, omega_pow, total_number, SectorBasis,
};
use crate::error::{Error, Result};

/// Largest full-space dimension for dense state vectors (3^14).
pub const VECTOR_DIM_CAP: usize = 4_782_969;

fn check_phi(phi: f64) -> Result<()> {
    if phi.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "phi must be finite, got {phi}"
        )))
    }
}

/// The per-site weights `x`, `z_k` and `ρ_k = z_k / z_0` of the solvable line.
#[derive(Clone, Copy, Debug)]
pub struct Weights {
    pub phi: f64,
    pub x: f64,
    pub z: [Complex64; 3],
    pub rho: [Complex64; 3],
}

impl Weights {
    pub fn new(phi: f64) -> Result<Self> {
        check_phi(phi)?;
        let x = (-2.0 * phi / 3.0).exp();
        let z: [Complex64; 3] = std::array::from_fn(|k| {
            let k = k as i64;
            Complex64::new(1.0, 0.0) + omega_pow(k) * x + omega_pow(2 * k) * (x * x)
        });
        let rho = z.map(|zk| zk / z[0]);
        Ok(Self { phi, x, z, rho })
    }

    pub fn z0(&self) -> f64 {
        self.z[0].re
    }

    /// `ρ_k^m` with `ρ^0 = 1` even when `ρ = 0`.
    pub fn rho_pow(&self, k: i64, m: usize) -> Complex64 {
        self.rho[k.rem_euclid(3) as usize].powu(m as u32)
    }

    /// `ν(m, p)` for `m = 0..=max_len` by the positive recursion
    /// `ν(m, p) = Σ_n (x^n / z_0) ν(m−1, p−n)`.
    pub fn nu_table(&self, max_len: usize) -> Vec<[f64; 3]> {
        let z0 = self.z0();
        let w = [1.0 / z0, self.x / z0, self.x * self.x / z0];
        let mut out = Vec::with_capacity(max_len + 1);
        out.push([1.0, 0.0, 0.0]);
        for m in 1..=max_len {
            let prev: [f64; 3] = out[m - 1];
            out.push(std::array::from_fn(|p| {
                (0..3).map(|n| w[n] * prev[(p + 3 - n) % 3]).sum()
            }));
        }
        out
    }

    /// `ν(m, p)` from the Fourier form `(1/3) Σ_k ω^{−pk} ρ_k^m`.
    pub fn nu_fourier(&self, m: usize, p: i64) -> f64 {
        let s: Complex64 = (0..3).map(|k| omega_pow(-p * k) * self.rho_pow(k, m)).sum();
        s.re / 3.0
    }
}

/// `A(L,φ,k)` and `N_{L,φ,i}` in scaled form.
#[derive(Clone, Debug, Serialize)]
pub struct NormTable {
    pub sites: usize,
    pub phi: f64,
    /// `L ln z_0`.
    pub log_scale: f64,
    /// `ν_i = N_{L,φ,i} / z_0^L`.
    pub nu: [f64; 3],
    /// `A(L,φ,k) / z_0^L = ρ_k^L`.
    #[serde(skip)]
    pub a_scaled: [Complex64; 3],
}

impl NormTable {
    pub fn norm(&self, i: u8) -> f64 {
        self.ln_norm(i).exp()
    }

    pub fn ln_norm(&self, i: u8) -> f64 {
        self.log_scale + self.nu[i as usize].ln()
    }

    /// `A(L,φ,k)`; overflows to infinity for very large `L·|φ|`.
    pub fn a(&self, k: usize) -> Complex64 {
        self.a_scaled[k] * self.log_scale.exp()
    }

    /// `N_{L,φ,i}` from `(1/3) Σ_k ω^{−ik} A(L,φ,k)`.
    pub fn norm_from_a(&self, i: u8) -> f64 {
        let s: Complex64 = (0..3)
            .map(|k| omega_pow(-(i as i64) * k as i64) * self.a(k))
            .sum();
        s.re / 3.0
    }
}

pub fn norm_constants(sites: usize, phi: f64) -> Result<NormTable> {
    let w = Weights::new(phi)?;
    let nu = w.nu_table(sites)[sites];
    Ok(NormTable {
        sites,
        phi,
        log_scale: sites as f64 * w.z0().ln(),
        nu,
        a_scaled: std::array::from_fn(|k| w.rho_pow(k as i64, sites)),
    })
}

/// `N_{L,φ,i}` from the multinomial sum over `(n_1, n_2)`, the numbers of
/// singly and doubly occupied sites.
pub fn norm_multinomial(sites: usize, phi: f64) -> Result<[f64; 3]> {
    check_phi(phi)?;
    let ln_fact: Vec<f64> = std::iter::once(0.0)
        .chain((1..=sites).scan(0.0, |acc, k| {
            *acc += (k as f64).ln();
            Some(*acc)
        }))
        .collect();
    let mut out = [0.0; 3];
    for n1 in 0..=sites {
        for n2 in 0..=sites - n1 {
            let n = n1 + 2 * n2;
            let ln_multi = ln_fact[sites] - ln_fact[n1] - ln_fact[n2] - ln_fact[sites - n1 - n2];
            out[n % 3] += (ln_multi - 2.0 * phi * n as f64 / 3.0).exp();
        }
    }
    Ok(out)
}

/// `|g_{i,φ}⟩` as a real amplitude vector over its charge sector.
#[derive(Clone, Debug)]
pub struct GroundState {
    pub sites: usize,
    pub phi: f64,
    pub charge: u8,
    pub basis: SectorBasis,
    pub amplitudes: Vec<f64>,
    pub norms: NormTable,
}

pub fn build_gs_vector(sites: usize, phi: f64, i: u8) -> Result<GroundState> {
    check_charge(i)?;
    check_phi(phi)?;
    if full_dim(sites)? > VECTOR_DIM_CAP {
        return Err(Error::DimensionCap {
            sites,
            cap: VECTOR_DIM_CAP,
        });
    }
    let basis = enumerate_sector(sites, i)?;
    let norms = norm_constants(sites, phi)?;
    let half_ln = 0.5 * norms.ln_norm(i);
    let amplitudes = basis
        .full_indices()
        .iter()
        .map(|&idx| (-phi * total_number(idx) as f64 / 3.0 - half_ln).exp())
        .collect();
    Ok(GroundState {
        sites,
        phi,
        charge: i,
        basis,
        amplitudes,
        norms,
    })
}

impl GroundState {
    pub fn sector_vector(&self) -> Vec<Complex64> {
        self.amplitudes
            .iter()
            .map(|&a| Complex64::new(a, 0.0))
            .collect()
    }

    /// Embedding into the full 3^L space.
    pub fn to_full(&self) -> Vec<Complex64> {
        let dim = 3usize.pow(self.sites as u32);
        let mut v = vec![Complex64::new(0.0, 0.0); dim];
        for (k, &idx) in self.basis.full_indices().iter().enumerate() {
            v[idx] = Complex64::new(self.amplitudes[k], 0.0);
        }
        v
    }

    /// Amplitude dump: a schema comment line, then `index,re,im` rows
    /// (full-space index) in basis order.
    pub fn write_amplitudes<W: Write>(&self, out: W) -> Result<()> {
        let mut out = out;
        writeln!(
            out,
            "# pflab-amplitudes v1 L={} phi={} i={}",
            self.sites, self.phi, self.charge
        )?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index", "re", "im"]).map_err(csv_err)?;
        for (k, &idx) in self.basis.full_indices().iter().enumerate() {
            w.serialize((idx, self.amplitudes[k], 0.0f64))
                .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Bond-dimension-3 MPS of `|g_{i,φ}⟩`.
///
/// All sites carry `A^{[n]} = (e^{−φ/3} σ)^n` with `σ = diag(1, ω, ω²)`. The
/// boundary vectors are `v_L = (1, ω^{−i}, ω^{−2i})`, `v_R = (1, 1, 1)`,
/// which makes the raw contraction equal to `3 e^{−φN/3}` on sector `i` and
/// zero elsewhere.
#[derive(Clone, Debug)]
pub struct GsMps {
    pub sites: usize,
    pub phi: f64,
    pub charge: u8,
    pub tensors: [Array2<Complex64>; 3],
    pub v_left: [Complex64; 3],
    pub v_right: [Complex64; 3],
    /// `ln` of the factor turning the raw contraction into a unit vector.
    pub log_norm: f64,
}

pub fn build_gs_mps(sites: usize, phi: f64, i: u8) -> Result<GsMps> {
    check_charge(i)?;
    check_phi(phi)?;
    if sites == 0 {
        return Err(Error::InvalidParameter(
            "chain needs at least one site".into(),
        ));
    }
    let d = (-phi / 3.0).exp();
    let tensors = std::array::from_fn(|n| {
        Array2::from_diag(&ndarray::arr1(
            &(0..3)
                .map(|k| omega_pow((k * n) as i64) * d.powi(n as i32))
                .collect::<Vec<_>>(),
        ))
    });
    let norms = norm_constants(sites, phi)?;
    Ok(GsMps {
        sites,
        phi,
        charge: i,
        tensors,
        v_left: std::array::from_fn(|k| omega_pow(-(i as i64) * k as i64)),
        v_right: [Complex64::new(1.0, 0.0); 3],
        log_norm: -(3.0f64).ln() - 0.5 * norms.ln_norm(i),
    })
}

impl GsMps {
    /// Raw contraction `v_L^T A^{[n_1]} ⋯ A^{[n_L]} v_R`.
    pub fn raw_amplitude(&self, occ: &[u8]) -> Complex64 {
        let mut row = self.v_left.to_vec();
        for &n in occ {
            let a = &self.tensors[n as usize];
            row = (0..3)
                .map(|c| (0..3).map(|r| row[r] * a[[r, c]]).sum())
                .collect();
        }
        row.iter().zip(&self.v_right).map(|(a, b)| a * b).sum()
    }

    pub fn amplitude(&self, occ: &[u8]) -> Complex64 {
        self.raw_amplitude(occ) * self.log_norm.exp()
    }

    /// Full-space vector by contracting every configuration.
    pub fn to_vector(&self) -> Result<Vec<Complex64>> {
        let dim = full_dim(self.sites)?;
        if dim > VECTOR_DIM_CAP {
            return Err(Error::DimensionCap {
                sites: self.sites,
                cap: VECTOR_DIM_CAP,
            });
        }
        Ok((0..dim)
            .map(|idx| {
                let occ = crate::algebra::FockState::from_index(self.sites, idx);
                self.amplitude(occ.occupations())
            })
            .collect())
    }

    /// `ln ⟨raw|raw⟩` from the 9×9 transfer matrix, with rescaling.
    pub fn ln_raw_norm_sqr(&self) -> f64 {
        let id = Array2::<Complex64>::eye(3);
        let ops = vec![id; self.sites];
        let (v, ln) = mixed_transfer(self, self, &ops);
        v.ln() + ln
    }

    /// `⟨bra| O_1 ⊗ ⋯ ⊗ O_L |ket⟩` for normalized states, `ops[j]` acting
    /// on site `j + 1` with rows indexed by the output occupation.
    pub fn expectation(bra: &GsMps, ket: &GsMps, ops: &[Array2<Complex64>]) -> Result<Complex64> {
        if bra.sites != ket.sites || ops.len() != ket.sites {
            return Err(Error::InvalidParameter(
                "site counts of bra, ket and operators differ".into(),
            ));
        }
        let (v, ln) = mixed_transfer_complex(bra, ket, ops);
        Ok(v * (ln + bra.log_norm + ket.log_norm).exp())
    }
}

fn mixed_transfer(bra: &GsMps, ket: &GsMps, ops: &[Array2<Complex64>]) -> (f64, f64) {
    let (v, ln) = mixed_transfer_complex(bra, ket, ops);
    (v.re, ln)
}

/// Contracts `Σ conj(bra) O ket` left to right keeping a 3×3 environment
/// `E[a, b]` (bra bond `a`, ket bond `b`) rescaled to unit max-norm.
fn mixed_transfer_complex(bra: &GsMps, ket: &GsMps, ops: &[Array2<Complex64>]) -> (Complex64, f64) {
    let mut env = Array2::<Complex64>::zeros((3, 3));
    for a in 0..3 {
        for b in 0..3 {
            env[[a, b]] = bra.v_left[a].conj() * ket.v_left[b];
        }
    }
    let mut ln_scale = 0.0;
    for op in ops {
        let mut next = Array2::<Complex64>::zeros((3, 3));
        for nout in 0..3 {
            for nin in 0..3 {
                let o = op[[nout, nin]];
                if o.norm() == 0.0 {
                    continue;
                }
                let ab = &bra.tensors[nout];
                let ak = &ket.tensors[nin];
                for a in 0..3 {
                    for b in 0..3 {
                        let e = env[[a, b]];
                        if e.norm() == 0.0 {
                            continue;
                        }
                        for a2 in 0..3 {
                            let ba = ab[[a, a2]].conj();
                            if ba.norm() == 0.0 {
                                continue;
                            }
                            for b2 in 0..3 {
                                next[[a2, b2]] += e * ba * o * ak[[b, b2]];
                            }
                        }
                    }
                }
            }
        }
        let m = next.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if m > 0.0 {
            next.mapv_inplace(|v| v / m);
            ln_scale += m.ln();
        }
        env = next;
    }
    let mut total = Complex64::new(0.0, 0.0);
    for a in 0..3 {
        for b in 0..3 {
            total += bra.v_right[a].conj() * env[[a, b]] * ket.v_right[b];
        }
    }
    (total, ln_scale)
}

/// `|g_{i,φ}⟩` as a weighted sum of three product states
/// `Z_{−φ} ⊗_j |t̃_j⟩`, `|t̃⟩ = (|0⟩ + ω^t |1⟩ + ω^{2t} |2⟩)/√3`.
#[derive(Clone, Debug)]
pub struct FactorizedGs {
    pub sites: usize,
    pub phi: f64,
    pub charge: u8,
    /// Single-site factor of product state `t`: `e^{−φn/3} ω^{tn}/√3`.
    pub site_states: [[Complex64; 3]; 3],
    /// `ω^{−it}/√3`.
    pub weights: [Complex64; 3],
    /// `ln √(3^{L−1} / N_{L,φ,i})`, the `Z`-deformation normalization.
    pub log_scale: f64,
}

pub fn factorized_form(sites: usize, phi: f64, i: u8) -> Result<FactorizedGs> {
    check_charge(i)?;
    check_phi(phi)?;
    let s3 = 3f64.sqrt();
    let norms = norm_constants(sites, phi)?;
    Ok(FactorizedGs {
        sites,
        phi,
        charge: i,
        site_states: std::array::from_fn(|t| {
            std::array::from_fn(|n| {
                omega_pow((t * n) as i64) * ((-phi * n as f64 / 3.0).exp() / s3)
            })
        }),
        weights: std::array::from_fn(|t| omega_pow(-(i as i64) * t as i64) / s3),
        log_scale: 0.5 * ((sites as f64 - 1.0) * 3f64.ln() - norms.ln_norm(i)),
    })
}

impl FactorizedGs {
    /// Full-space vector of product state `t` (no weight).
    pub fn product_state(&self, t: usize) -> Result<Vec<Complex64>> {
        let dim = full_dim(self.sites)?;
        if dim > VECTOR_DIM_CAP {
            return Err(Error::DimensionCap {
                sites: self.sites,
                cap: VECTOR_DIM_CAP,
            });
        }
        let f = &self.site_states[t];
        let mut v = vec![Complex64::new(1.0, 0.0)];
        for _ in 0..self.sites {
            v = v
                .iter()
                .flat_map(|&a| f.iter().map(move |&b| a * b))
                .collect();
        }
        Ok(v)
    }

    pub fn to_vector(&self) -> Result<Vec<Complex64>> {
        let scale = self.log_scale.exp();
        let mut out = vec![Complex64::new(0.0, 0.0); full_dim(self.sites)?];
        for t in 0..3 {
            let p = self.product_state(t)?;
            let w = self.weights[t] * scale;
            for (o, a) in out.iter_mut().zip(p) {
                *o += w * a;
            }
        }
        Ok(out)
    }
}

/// `|⟨a|b⟩|²` for unit vectors.
pub fn fidelity(a: &[Complex64], b: &[Complex64]) -> f64 {
    let s: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    s.norm_sqr()
}

pub fn vec_norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::occupation;
    use approx::assert_relative_eq;

    fn brute_norms(sites: usize, phi: f64) -> [f64; 3] {
        let mut out = [0.0; 3];
        for idx in 0..3usize.pow(sites as u32) {
            let n = total_number(idx);
            out[n % 3] += (-2.0 * phi * n as f64 / 3.0).exp();
        }
        out
    }

    #[test]
    fn norms_at_phi_zero() {
        for l in 1..=8 {
            let t = norm_constants(l, 0.0).unwrap();
            for i in 0..3 {
                assert_relative_eq!(t.norm(i), 3f64.powi(l as i32 - 1), max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn norms_single_site() {
        for phi in [-1.3, 0.0, 0.4, 2.0] {
            let t = norm_constants(1, phi).unwrap();
            assert_relative_eq!(t.norm(0), 1.0, max_relative = 1e-14);
            let s: Complex64 = (0..3).map(|k| t.a(k)).sum();
            assert!((s - Complex64::new(3.0, 0.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn norms_match_enumeration_and_multinomial() {
        let (l, phi) = (6, 0.7);
        let t = norm_constants(l, phi).unwrap();
        let brute = brute_norms(l, phi);
        let multi = norm_multinomial(l, phi).unwrap();
        for i in 0..3u8 {
            assert_relative_eq!(t.norm(i), brute[i as usize], max_relative = 1e-13);
            assert_relative_eq!(t.norm_from_a(i), brute[i as usize], max_relative = 1e-12);
            assert_relative_eq!(multi[i as usize], brute[i as usize], max_relative = 1e-13);
        }
    }

    #[test]
    fn norm_table_invariants() {
        let t = norm_constants(9, -0.3).unwrap();
        assert!(t.a(0).im.abs() < 1e-12);
        assert!((t.a(2) - t.a(1).conj()).norm() < 1e-10);
        assert!(t.nu.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn large_chain_norms_stay_finite() {
        let t = norm_constants(5000, -3.0).unwrap();
        assert!(t.ln_norm(1).is_finite());
        for i in 0..3 {
            assert!((t.nu[i] - 1.0 / 3.0).abs() < 1e-10);
        }
    }

    #[test]
    fn recursion_equals_fourier_form() {
        for phi in [-1.0, -0.3, 0.0, 0.5, 2.0] {
            let w = Weights::new(phi).unwrap();
            let tab = w.nu_table(12);
            for (m, row) in tab.iter().enumerate() {
                for p in 0..3 {
                    assert!(
                        (row[p] - w.nu_fourier(m, p as i64)).abs() < 1e-14,
                        "phi={phi} m={m} p={p}"
                    );
                }
            }
        }
    }

    #[test]
    fn convolution_identity() {
        let (l, phi) = (9, 0.5);
        let full = norm_constants(l, phi).unwrap();
        for cut in 1..l {
            let a = norm_constants(cut, phi).unwrap();
            let b = norm_constants(l - cut, phi).unwrap();
            for i in 0..3u8 {
                let s: f64 = (0..3u8).map(|p| a.norm(p) * b.norm((i + 3 - p) % 3)).sum();
                assert_relative_eq!(s, full.norm(i), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn two_site_neutral_state() {
        let g = build_gs_vector(2, 0.0, 0).unwrap();
        let s = 1.0 / 3f64.sqrt();
        assert_eq!(g.basis.full_indices(), &[0, 5, 7]);
        for &a in &g.amplitudes {
            assert!((a - s).abs() < 1e-15);
        }
    }

    #[test]
    fn vector_is_normalized_and_weighted() {
        let g = build_gs_vector(5, 0.9, 2).unwrap();
        assert!((vec_norm(&g.sector_vector()) - 1.0).abs() < 1e-13);
        let (a, b) = (g.basis.full_index(0), g.basis.full_index(1));
        let ratio = g.amplitudes[1] / g.amplitudes[0];
        let expect = (-0.9 * (total_number(b) as f64 - total_number(a) as f64) / 3.0).exp();
        assert!((ratio - expect).abs() < 1e-13);
    }

    #[test]
    fn mps_matches_vector() {
        for l in 1..=8 {
            for phi in [0.0, 1.0] {
                for i in 0..3u8 {
                    let v = build_gs_vector(l, phi, i).unwrap().to_full();
                    let m = build_gs_mps(l, phi, i).unwrap().to_vector().unwrap();
                    assert!(1.0 - fidelity(&v, &m) < 1e-12, "L={l} phi={phi} i={i}");
                    assert!((vec_norm(&m) - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn mps_single_site_projection() {
        let m = build_gs_mps(1, 0.0, 0).unwrap();
        assert!((m.amplitude(&[0]) - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        assert!(m.amplitude(&[1]).norm() < 1e-14);
        assert!(m.amplitude(&[2]).norm() < 1e-14);
    }

    #[test]
    fn mps_transfer_norm_matches_table() {
        for (l, phi) in [(7, 0.4), (60, -1.0), (300, 2.0)] {
            for i in 0..3u8 {
                let m = build_gs_mps(l, phi, i).unwrap();
                let t = norm_constants(l, phi).unwrap();
                // raw contraction is 3 e^{−φN/3} on the sector
                let expect = 9f64.ln() + t.ln_norm(i);
                assert!((m.ln_raw_norm_sqr() - expect).abs() < 1e-10, "L={l} i={i}");
            }
        }
    }

    #[test]
    fn printed_boundary_vector_selects_opposite_sector() {
        let mut m = build_gs_mps(4, 0.3, 1).unwrap();
        m.v_left = std::array::from_fn(|k| omega_pow(k as i64));
        // (1, ω, ω²) keeps N ≡ 2, not N ≡ 1
        assert!(m.raw_amplitude(&[1, 0, 0, 0]).norm() < 1e-14);
        assert!(m.raw_amplitude(&[2, 0, 0, 0]).norm() > 1.0);
    }

    #[test]
    fn factorized_matches_vector() {
        for (l, phi) in [(1, 0.0), (3, 0.0), (6, 0.0), (5, 2.0), (6, -1.0)] {
            for i in 0..3u8 {
                let v = build_gs_vector(l, phi, i).unwrap().to_full();
                let f = factorized_form(l, phi, i).unwrap().to_vector().unwrap();
                assert!(1.0 - fidelity(&v, &f) < 1e-12, "L={l} phi={phi} i={i}");
                assert!((vec_norm(&f) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn factorized_terms_are_products() {
        use ndarray_linalg::SVD;
        let f = factorized_form(5, 2.0, 1).unwrap();
        for t in 0..3 {
            let v = f.product_state(t).unwrap();
            for cut in 1..5 {
                let rows = 3usize.pow(cut);
                let m = Array2::from_shape_vec((rows, v.len() / rows), v.clone()).unwrap();
                let (_, s, _) = m.svd(false, false).unwrap();
                assert!(s[1] < 1e-14 * s[0], "t={t} cut={cut}");
            }
        }
    }

    #[test]
    fn sectors_are_orthogonal() {
        let a = build_gs_vector(4, 0.5, 0).unwrap().to_full();
        let b = build_gs_vector(4, 0.5, 1).unwrap().to_full();
        assert_eq!(fidelity(&a, &b), 0.0);
    }

    #[test]
    fn amplitude_dump_format() {
        let g = build_gs_vector(2, 0.0, 1).unwrap();
        let mut buf = Vec::new();
        g.write_amplitudes(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# pflab-amplitudes v1"));
        assert_eq!(lines.next().unwrap(), "index,re,im");
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        // |0 1⟩ is the first N ≡ 1 state
        assert_eq!(first[0], "1");
        assert_eq!(occupation(1, 2, 2), 1);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            build_gs_vector(3, 0.0, 3),
            Err(Error::InvalidCharge(3))
        ));
        assert!(build_gs_mps(3, f64::NAN, 0).is_err());
        assert!(matches!(
            build_gs_vector(20, 0.0, 0),
            Err(Error::DimensionCap { .. })
        ));
    }
}
