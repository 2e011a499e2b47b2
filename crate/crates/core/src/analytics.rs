//! Closed forms for the ground-state observables along the solvable line,
//! each paired with a brute-force evaluation on the dense vector and, for
//! long chains, an MPS contraction.
//!
//! Notation: `G_i(j, l) = ⟨g_i| C_j†² C_l² |g_i⟩`, `G_i(ℓ) = G_i(1, ℓ)`,
//! `F_i(ℓ) = ⟨g_i| C_ℓ† |g_{i−1}⟩`.

use std::io::Write;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{check_charge, occupation, omega_pow};
use crate::eigen::dense_eigh;
use crate::error::{Error, Result};
use crate::groundstate::{build_gs_mps, build_gs_vector, csv_err, GroundState, GsMps, Weights};
use crate::operators::{build_fock_annihilator, build_fock_creator, LinOp};

type C = Complex64;

/// `1/ξ`, infinite at `φ = 0`.
pub fn xi_inverse(phi: f64) -> f64 {
    let w = match Weights::new(phi) {
        Ok(w) => w,
        Err(_) => return f64::NAN,
    };
    let z1 = w.z[1].norm();
    if z1 == 0.0 {
        f64::INFINITY
    } else {
        (w.z0() / z1).ln()
    }
}

/// Correlation length, with `ξ(0) = 0`.
pub fn xi(phi: f64) -> f64 {
    let inv = xi_inverse(phi);
    if inv.is_infinite() {
        0.0
    } else {
        1.0 / inv
    }
}

/// Thermodynamic density `n(φ)`.
pub fn n_of_phi(phi: f64) -> f64 {
    let x = (-2.0 * phi / 3.0).exp();
    if x.is_infinite() {
        return 2.0;
    }
    (x + 2.0 * x * x) / (1.0 + x + x * x)
}

/// `A(L,φ,1) / A(L,φ,0) = ρ_1^L`.
pub fn a_ratio(sites: usize, phi: f64) -> Result<C> {
    Ok(Weights::new(phi)?.rho_pow(1, sites))
}

/// Phase `θ_{L,φ}` of `A(L,φ,1) / A(L,φ,0)`, in `(−π, π]`.
pub fn theta(sites: usize, phi: f64) -> Result<f64> {
    let w = Weights::new(phi)?;
    let t = w.rho[1].arg() * sites as f64;
    Ok(-(std::f64::consts::PI - t).rem_euclid(2.0 * std::f64::consts::PI) + std::f64::consts::PI)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct EntSpectrum {
    /// `λ_p`, indexed by the left-block charge `p`.
    pub lambda: [f64; 3],
    pub entropy: f64,
}

pub fn entropy(lambda: &[f64]) -> f64 {
    lambda
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| -l * l.ln())
        .sum()
}

/// Closed-form evaluator for one `(L, φ)`, caching `ν(m, p)` for `m ≤ L`.
#[derive(Clone, Debug)]
pub struct ClosedForms {
    pub sites: usize,
    pub phi: f64,
    pub weights: Weights,
    nu: Vec<[f64; 3]>,
}

impl ClosedForms {
    pub fn new(sites: usize, phi: f64) -> Result<Self> {
        if sites == 0 {
            return Err(Error::InvalidParameter(
                "chain needs at least one site".into(),
            ));
        }
        let weights = Weights::new(phi)?;
        let nu = weights.nu_table(sites);
        Ok(Self {
            sites,
            phi,
            weights,
            nu,
        })
    }

    fn nu(&self, m: usize, p: i64) -> f64 {
        self.nu[m][p.rem_euclid(3) as usize]
    }

    /// `3ν(m, p) − 1 = 2 Re(ω^{−p} ρ_1^m)`, accurate when small.
    fn eps(&self, m: usize, p: i64) -> f64 {
        2.0 * (omega_pow(-p) * self.weights.rho_pow(1, m)).re
    }

    fn check_l(&self, l: usize) -> Result<()> {
        crate::operators::check_site(self.sites, l)
    }

    /// `⟨N_j⟩_i`, the same for every site `j`.
    pub fn density(&self, i: u8) -> f64 {
        let (l, i) = (self.sites, i as i64);
        let x = self.weights.x;
        (x * self.nu(l - 1, i - 1) + 2.0 * x * x * self.nu(l - 1, i - 2))
            / (self.weights.z0() * self.nu(l, i))
    }

    /// `⟨N⟩_i − ⟨N⟩_{i'}`, evaluated without cancelling the `O(1)` parts.
    pub fn density_split(&self, i: u8, i2: u8) -> f64 {
        let (l, x) = (self.sites, self.weights.x);
        let a = x + 2.0 * x * x;
        let delta = |p: i64| x * self.eps(l - 1, p - 1) + 2.0 * x * x * self.eps(l - 1, p - 2);
        let (p, q) = (i as i64, i2 as i64);
        let (dp, dq, ep, eq) = (delta(p), delta(q), self.eps(l, p), self.eps(l, q));
        let num = dp - dq + a * (eq - ep) + dp * eq - dq * ep;
        num / (self.weights.z0() * 9.0 * self.nu(l, p) * self.nu(l, q))
    }

    /// `G_i(ℓ)`.
    pub fn g(&self, i: u8, l: usize) -> Result<C> {
        check_charge(i)?;
        self.check_l(l)?;
        let (n, x, z0) = (self.sites, self.weights.x, self.weights.z0());
        let i = i as i64;
        if l == 1 {
            return Ok(C::new(
                x * x * self.nu(n - 1, i - 2) / (z0 * self.nu(n, i)),
                0.0,
            ));
        }
        let s: C = (0..3i64)
            .map(|k| {
                omega_pow(k * (2 - i))
                    * self.weights.rho_pow(k - 1, l - 2)
                    * self.weights.rho_pow(k, n - l)
            })
            .sum();
        Ok(s * (x * x / (3.0 * z0 * z0 * self.nu(n, i))))
    }

    /// `F_i(ℓ)`.
    pub fn f(&self, i: u8, l: usize) -> Result<C> {
        check_charge(i)?;
        self.check_l(l)?;
        let (n, x, z0) = (self.sites, self.weights.x, self.weights.z0());
        let i = i as i64;
        let mut s = C::new(0.0, 0.0);
        for (m, xm) in [(0i64, 1.0), (1, x)] {
            for k in 0..3i64 {
                s += omega_pow(k * (m - i + 1))
                    * self.weights.rho_pow(k - 1, l - 1)
                    * self.weights.rho_pow(k, n - l)
                    * xm;
            }
        }
        let pre = (-self.phi / 3.0).exp() / (3.0 * z0 * (self.nu(n, i) * self.nu(n, i - 1)).sqrt());
        Ok(s * pre)
    }

    /// Entanglement spectrum for the cut after site `ℓ`.
    pub fn ent(&self, i: u8, l: usize) -> Result<EntSpectrum> {
        check_charge(i)?;
        if l == 0 || l >= self.sites {
            return Err(Error::BondOutOfRange {
                bond: l,
                max: self.sites - 1,
            });
        }
        let i = i as i64;
        let lambda: [f64; 3] = std::array::from_fn(|p| {
            let p = p as i64;
            self.nu(l, p) * self.nu(self.sites - l, i - p) / self.nu(self.sites, i)
        });
        Ok(EntSpectrum {
            lambda,
            entropy: entropy(&lambda),
        })
    }
}

pub fn density(sites: usize, phi: f64, i: u8) -> Result<f64> {
    check_charge(i)?;
    Ok(ClosedForms::new(sites, phi)?.density(i))
}

pub fn corr_g(sites: usize, phi: f64, i: u8, l: usize) -> Result<C> {
    ClosedForms::new(sites, phi)?.g(i, l)
}

pub fn f_func(sites: usize, phi: f64, i: u8, l: usize) -> Result<C> {
    ClosedForms::new(sites, phi)?.f(i, l)
}

pub fn ent_spectrum(sites: usize, phi: f64, i: u8, l: usize) -> Result<EntSpectrum> {
    ClosedForms::new(sites, phi)?.ent(i, l)
}

// ---- brute force on dense vectors ----

fn expect(bra: &[C], op: &LinOp, ket: &[C]) -> C {
    let v = op.matvec(ket);
    bra.iter().zip(&v).map(|(a, b)| a.conj() * b).sum()
}

/// `⟨N_j⟩` from the amplitudes.
pub fn density_numeric(gs: &GroundState, site: usize) -> Result<f64> {
    crate::operators::check_site(gs.sites, site)?;
    Ok(gs
        .basis
        .full_indices()
        .iter()
        .zip(&gs.amplitudes)
        .map(|(&idx, a)| a * a * occupation(idx, gs.sites, site) as f64)
        .sum())
}

/// `G_i(j, l)` from the vector and the Fock operators.
pub fn corr_g_numeric(gs: &GroundState, j: usize, l: usize) -> Result<C> {
    let c2j = build_fock_annihilator::<C>(gs.sites, j)?.pow(2);
    let c2l = build_fock_annihilator::<C>(gs.sites, l)?.pow(2);
    let v = gs.to_full();
    Ok(expect(&v, &c2j.adjoint().try_mul(&c2l)?, &v))
}

/// `F_i(ℓ)` from the vectors of sectors `i` and `i − 1`.
pub fn f_func_numeric(sites: usize, phi: f64, i: u8, l: usize) -> Result<C> {
    check_charge(i)?;
    let bra = build_gs_vector(sites, phi, i)?.to_full();
    let ket = build_gs_vector(sites, phi, (i + 2) % 3)?.to_full();
    Ok(expect(&bra, &build_fock_creator::<C>(sites, l)?, &ket))
}

/// Schmidt weights of the dense vector across the cut after site `ℓ`,
/// descending, including numerically zero ones.
pub fn schmidt_weights(gs: &GroundState, l: usize) -> Result<Vec<f64>> {
    if l == 0 || l >= gs.sites {
        return Err(Error::BondOutOfRange {
            bond: l,
            max: gs.sites - 1,
        });
    }
    let right = 3usize.pow((gs.sites - l) as u32);
    let left = 3usize.pow(l as u32);
    let small_left = left <= right;
    let dim = left.min(right);
    let mut gram = Array2::<C>::zeros((dim, dim));
    // group amplitudes by the index on the larger side
    let mut groups: std::collections::BTreeMap<usize, Vec<(usize, f64)>> = Default::default();
    for (&idx, &a) in gs.basis.full_indices().iter().zip(&gs.amplitudes) {
        let (lo, ro) = (idx / right, idx % right);
        let (small, big) = if small_left { (lo, ro) } else { (ro, lo) };
        groups.entry(big).or_default().push((small, a));
    }
    for col in groups.values() {
        for &(r, a) in col {
            for &(s, b) in col {
                gram[[r, s]] += a * b;
            }
        }
    }
    let (vals, _) = dense_eigh(&gram)?;
    let mut w: Vec<f64> = vals.into_iter().map(|v| v.max(0.0)).collect();
    w.sort_by(|a, b| b.total_cmp(a));
    Ok(w)
}

// ---- MPS contractions ----

fn local_c() -> Array2<C> {
    let mut c = Array2::zeros((3, 3));
    c[[0, 1]] = C::new(1.0, 0.0);
    c[[1, 2]] = C::new(1.0, 0.0);
    c
}

fn local_omega_n(power: i64) -> Array2<C> {
    Array2::from_diag(&ndarray::arr1(&[
        C::new(1.0, 0.0),
        omega_pow(power),
        omega_pow(2 * power),
    ]))
}

fn identities(sites: usize) -> Vec<Array2<C>> {
    vec![Array2::eye(3); sites]
}

/// `G_i(j, l)` by contracting the bond-dimension-3 MPS.
pub fn corr_g_mps(mps: &GsMps, j: usize, l: usize) -> Result<C> {
    let n = mps.sites;
    crate::operators::check_site(n, j)?;
    crate::operators::check_site(n, l)?;
    if j > l {
        return Ok(corr_g_mps(mps, l, j)?.conj());
    }
    let c = local_c();
    let c2 = c.dot(&c);
    let mut ops = identities(n);
    if j == l {
        ops[j - 1] = c2.t().dot(&c2);
    } else {
        ops[j - 1] = c2.t().dot(&local_omega_n(2));
        for op in ops.iter_mut().take(l - 1).skip(j) {
            *op = local_omega_n(2);
        }
        ops[l - 1] = c2;
    }
    GsMps::expectation(mps, mps, &ops)
}

/// `F_i(ℓ)` by MPS contraction.
pub fn f_func_mps(sites: usize, phi: f64, i: u8, l: usize) -> Result<C> {
    crate::operators::check_site(sites, l)?;
    let bra = build_gs_mps(sites, phi, i)?;
    let ket = build_gs_mps(sites, phi, (i + 2) % 3)?;
    let mut ops = identities(sites);
    for op in ops.iter_mut().take(l - 1) {
        *op = local_omega_n(-1);
    }
    ops[l - 1] = local_c().t().to_owned();
    GsMps::expectation(&bra, &ket, &ops)
}

/// `⟨N_j⟩` by MPS contraction.
pub fn density_mps(mps: &GsMps, site: usize) -> Result<f64> {
    crate::operators::check_site(mps.sites, site)?;
    let mut ops = identities(mps.sites);
    ops[site - 1] = Array2::from_diag(&ndarray::arr1(&[
        C::new(0.0, 0.0),
        C::new(1.0, 0.0),
        C::new(2.0, 0.0),
    ]));
    Ok(GsMps::expectation(mps, mps, &ops)?.re)
}

// ---- fits ----

#[derive(Clone, Copy, Debug, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
}

/// Ordinary least squares `y ≈ slope·x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return Err(Error::InvalidParameter(format!(
            "fit needs ≥ 2 paired points, got {n}"
        )));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter(
            "fit abscissae are all equal".into(),
        ));
    }
    let slope = sxy / sxx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - my - slope * (a - mx)).powi(2))
        .sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(LinearFit {
        slope,
        intercept: my - slope * mx,
        r2,
        points: n,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct XiFit {
    pub phi: f64,
    pub sites: usize,
    pub window: (usize, usize),
    pub fitted: f64,
    pub exact: f64,
    pub relative_error: f64,
    pub fit: LinearFit,
}

/// Fit window `ℓ ∈ [max(5, 3ξ), L/2 − 2]`.
pub fn fit_window(sites: usize, phi: f64) -> (usize, usize) {
    let lo = 5usize.max((3.0 * xi(phi)).ceil() as usize);
    (lo, (sites / 2).saturating_sub(2))
}

/// Fits `ln|G_0(ℓ)|` from MPS contractions against `ℓ` and reads off `ξ`.
pub fn fit_xi_from_g(sites: usize, phi: f64) -> Result<XiFit> {
    let (lo, hi) = fit_window(sites, phi);
    if hi < lo + 1 {
        return Err(Error::InvalidParameter(format!(
            "fit window [{lo}, {hi}] is empty for L={sites}, phi={phi}"
        )));
    }
    let mps = build_gs_mps(sites, phi, 0)?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for l in lo..=hi {
        let g = corr_g_mps(&mps, 1, l)?.norm();
        if g > 0.0 {
            xs.push(l as f64);
            ys.push(g.ln());
        }
    }
    let fit = linear_fit(&xs, &ys)?;
    let fitted = -1.0 / fit.slope;
    let exact = xi(phi);
    Ok(XiFit {
        phi,
        sites,
        window: (lo, hi),
        fitted,
        exact,
        relative_error: ((fitted - exact) / exact).abs(),
        fit,
    })
}

// ---- aggregated observables and figure data ----

/// Every closed-form observable for one `(L, φ, i)`.
#[derive(Clone, Debug, Serialize)]
pub struct Observables {
    pub sites: usize,
    pub phi: f64,
    pub charge: u8,
    pub xi: f64,
    pub n_of_phi: f64,
    pub density: f64,
    pub g: Vec<(f64, f64)>,
    pub f: Vec<(f64, f64)>,
    pub ent_spectrum: Vec<[f64; 3]>,
    pub entropy: Vec<f64>,
    pub theta: f64,
}

pub fn observables(sites: usize, phi: f64, i: u8) -> Result<Observables> {
    check_charge(i)?;
    let cf = ClosedForms::new(sites, phi)?;
    let g = (1..=sites)
        .map(|l| cf.g(i, l).map(|v| (v.re, v.im)))
        .collect::<Result<_>>()?;
    let f = (1..=sites)
        .map(|l| cf.f(i, l).map(|v| (v.re, v.im)))
        .collect::<Result<_>>()?;
    let ent = (1..sites)
        .map(|l| cf.ent(i, l))
        .collect::<Result<Vec<_>>>()?;
    Ok(Observables {
        sites,
        phi,
        charge: i,
        xi: xi(phi),
        n_of_phi: n_of_phi(phi),
        density: cf.density(i),
        g,
        f,
        ent_spectrum: ent.iter().map(|e| e.lambda).collect(),
        entropy: ent.iter().map(|e| e.entropy).collect(),
        theta: theta(sites, phi)?,
    })
}

/// One row of a figure CSV: `panel, phi, L, x, k, re, im`.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct FigureRow {
    pub panel: &'static str,
    pub phi: f64,
    #[serde(rename = "L")]
    pub sites: usize,
    pub x: f64,
    pub k: u8,
    pub re: f64,
    pub im: f64,
}

impl FigureRow {
    fn real(panel: &'static str, phi: f64, sites: usize, x: f64, k: u8, v: f64) -> Self {
        Self {
            panel,
            phi,
            sites,
            x,
            k,
            re: v,
            im: 0.0,
        }
    }

    fn complex(panel: &'static str, phi: f64, sites: usize, x: f64, k: u8, v: C) -> Self {
        Self {
            panel,
            phi,
            sites,
            x,
            k,
            re: v.re,
            im: v.im,
        }
    }
}

/// Panels: `G0` (`x = ℓ`), `density_split` (`|⟨n⟩_0 − ⟨n⟩_2|`, `x = L`),
/// `xi` (`x = φ`) and `F0` (`x = ℓ`).
pub fn figure2(phis: &[f64], sites: usize, xi_grid: &[f64]) -> Result<Vec<FigureRow>> {
    let per_phi: Vec<Result<Vec<FigureRow>>> = phis
        .par_iter()
        .map(|&phi| {
            let cf = ClosedForms::new(sites, phi)?;
            let mut rows = Vec::new();
            for l in 1..=sites {
                rows.push(FigureRow::complex(
                    "G0",
                    phi,
                    sites,
                    l as f64,
                    0,
                    cf.g(0, l)?,
                ));
            }
            for len in 2..=sites {
                let split = ClosedForms::new(len, phi)?.density_split(0, 2).abs();
                rows.push(FigureRow::real(
                    "density_split",
                    phi,
                    len,
                    len as f64,
                    0,
                    split,
                ));
            }
            for l in 1..=sites {
                rows.push(FigureRow::complex(
                    "F0",
                    phi,
                    sites,
                    l as f64,
                    0,
                    cf.f(0, l)?,
                ));
            }
            Ok(rows)
        })
        .collect();
    let mut out = Vec::new();
    for r in per_phi {
        out.extend(r?);
    }
    for &phi in xi_grid {
        out.push(FigureRow::real("xi", phi, 0, phi, 0, xi(phi)));
    }
    Ok(out)
}

/// Panels: `spectrum` (`λ_p(ℓ)`, `k = p`) and `entropy` (`S(ℓ)`), sector 0.
pub fn figure3_top(phis: &[f64], sites: usize) -> Result<Vec<FigureRow>> {
    let per_phi: Vec<Result<Vec<FigureRow>>> = phis
        .par_iter()
        .map(|&phi| {
            let cf = ClosedForms::new(sites, phi)?;
            let mut rows = Vec::new();
            for l in 1..sites {
                let e = cf.ent(0, l)?;
                for (p, &lam) in e.lambda.iter().enumerate() {
                    rows.push(FigureRow::real(
                        "spectrum", phi, sites, l as f64, p as u8, lam,
                    ));
                }
                rows.push(FigureRow::real(
                    "entropy", phi, sites, l as f64, 0, e.entropy,
                ));
            }
            Ok(rows)
        })
        .collect();
    let mut out = Vec::new();
    for r in per_phi {
        out.extend(r?);
    }
    Ok(out)
}

pub fn write_figure_csv<W: Write>(name: &str, rows: &[FigureRow], out: W) -> Result<()> {
    let mut out = out;
    writeln!(out, "# pflab-{name} v1")?;
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
    use crate::groundstate::build_gs_mps;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const PHIS: [f64; 5] = [-1.0, -0.3, 0.0, 0.5, 2.0];

    fn close(a: C, b: C, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn xi_limits() {
        assert_eq!(xi(0.0), 0.0);
        assert!(xi(30.0) > xi(3.0) && xi(3.0) > xi(1.0));
        assert!(xi(-30.0) > xi(-3.0) && xi(-3.0) > xi(-1.0));
        // symmetric under φ → −φ: z_k(−φ) = x^{−2} conj-ordered z_k(φ)
        assert_abs_diff_eq!(xi(1.3), xi(-1.3), epsilon = 1e-12);
    }

    #[test]
    fn n_of_phi_limits() {
        assert_abs_diff_eq!(n_of_phi(0.0), 1.0, epsilon = 1e-15);
        assert!(n_of_phi(200.0) < 1e-50);
        assert_abs_diff_eq!(n_of_phi(-200.0), 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(n_of_phi(-1e6), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn density_matches_vector() {
        for l in 2..=7 {
            for &phi in &PHIS {
                for i in 0..3 {
                    let gs = build_gs_vector(l, phi, i).unwrap();
                    let cf = density(l, phi, i).unwrap();
                    for j in 1..=l {
                        assert_abs_diff_eq!(density_numeric(&gs, j).unwrap(), cf, epsilon = 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn density_split_matches_difference() {
        for l in 2..=12 {
            for &phi in &PHIS {
                let cf = ClosedForms::new(l, phi).unwrap();
                let direct = cf.density(0) - cf.density(2);
                assert_abs_diff_eq!(cf.density_split(0, 2), direct, epsilon = 1e-13);
            }
        }
        // survives where the direct difference has cancelled to zero
        let cf = ClosedForms::new(200, 0.5).unwrap();
        let s = cf.density_split(0, 2).abs();
        assert!(s > 0.0 && s < 1e-100);
    }

    #[test]
    fn g_matches_vector() {
        for l in 2..=6 {
            for &phi in &PHIS {
                for i in 0..3 {
                    let gs = build_gs_vector(l, phi, i).unwrap();
                    for ell in 1..=l {
                        let a = corr_g(l, phi, i, ell).unwrap();
                        let b = corr_g_numeric(&gs, 1, ell).unwrap();
                        assert!(
                            close(a, b, 1e-12),
                            "L={l} phi={phi} i={i} l={ell}: {a} vs {b}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn g_anchors_at_phi_zero() {
        let cf = ClosedForms::new(40, 0.0).unwrap();
        assert_abs_diff_eq!(cf.g(0, 1).unwrap().re, 1.0 / 3.0, epsilon = 1e-14);
        assert!(close(cf.g(0, 2).unwrap(), C::new(1.0 / 9.0, 0.0), 1e-14));
        for l in 3..40 {
            assert!(cf.g(0, l).unwrap().norm() < 1e-14);
        }
        let w = omega_pow(1);
        let ratio = |i| cf.g(i, 40).unwrap() / cf.g(i, 2).unwrap();
        assert!(close(ratio(0), w * w, 1e-12));
        assert!(close(ratio(1), w, 1e-12));
        assert!(close(ratio(2), C::new(1.0, 0.0), 1e-12));
    }

    #[test]
    fn g_is_translation_invariant_in_bulk() {
        let (l, phi) = (8, 1.0);
        let gs = build_gs_vector(l, phi, 0).unwrap();
        let bound = 4.0 * (-(l as f64 - 4.0) / xi(phi)).exp();
        for d in 1..3 {
            let g0 = corr_g_numeric(&gs, 3, 3 + d).unwrap();
            for j in 2..=l - d - 1 {
                let g = corr_g_numeric(&gs, j, j + d).unwrap();
                assert!((g - g0).norm() < bound, "d={d} j={j}");
            }
        }
    }

    #[test]
    fn f_matches_vector() {
        for l in 2..=6 {
            for &phi in &PHIS {
                for i in 0..3 {
                    for ell in 1..=l {
                        let a = f_func(l, phi, i, ell).unwrap();
                        let b = f_func_numeric(l, phi, i, ell).unwrap();
                        assert!(
                            close(a, b, 1e-12),
                            "L={l} phi={phi} i={i} l={ell}: {a} vs {b}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn f_vanishes_in_bulk_at_phi_zero() {
        let cf = ClosedForms::new(10, 0.0).unwrap();
        assert!(cf.f(0, 1).unwrap().norm() > 0.1);
        assert!(cf.f(0, 10).unwrap().norm() > 0.1);
        for l in 2..10 {
            assert!(cf.f(0, l).unwrap().norm() < 1e-14);
        }
    }

    #[test]
    fn f_edge_decay_is_xi() {
        let phi = 1.0;
        let cf = ClosedForms::new(200, phi).unwrap();
        let xs: Vec<f64> = (10..60).map(|l| l as f64).collect();
        let ys: Vec<f64> = (10..60).map(|l| cf.f(0, l).unwrap().norm().ln()).collect();
        let fit = linear_fit(&xs, &ys).unwrap();
        assert!((-1.0 / fit.slope / xi(phi) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn mps_paths_agree_with_closed_forms() {
        for &phi in &PHIS {
            let mps = build_gs_mps(30, phi, 1).unwrap();
            let cf = ClosedForms::new(30, phi).unwrap();
            for l in [1, 2, 7, 29, 30] {
                let g = corr_g_mps(&mps, 1, l).unwrap();
                assert!(close(g, cf.g(1, l).unwrap(), 1e-12), "phi={phi} l={l}");
                let f = f_func_mps(30, phi, 1, l).unwrap();
                assert!(close(f, cf.f(1, l).unwrap(), 1e-12), "phi={phi} l={l}");
            }
            assert_abs_diff_eq!(
                density_mps(&mps, 13).unwrap(),
                cf.density(1),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn mps_g_pair_matches_vector() {
        let gs = build_gs_vector(6, 0.5, 2).unwrap();
        let mps = build_gs_mps(6, 0.5, 2).unwrap();
        for j in 1..=6 {
            for l in 1..=6 {
                let a = corr_g_mps(&mps, j, l).unwrap();
                let b = corr_g_numeric(&gs, j, l).unwrap();
                assert!(close(a, b, 1e-12), "j={j} l={l}");
            }
        }
    }

    #[test]
    fn entanglement_matches_schmidt() {
        for l in 2..=7 {
            for &phi in &PHIS {
                for i in 0..3 {
                    let gs = build_gs_vector(l, phi, i).unwrap();
                    for cut in 1..l {
                        let e = ent_spectrum(l, phi, i, cut).unwrap();
                        let mut cf = e.lambda.to_vec();
                        cf.sort_by(|a, b| b.total_cmp(a));
                        let num = schmidt_weights(&gs, cut).unwrap();
                        for k in 0..3 {
                            assert_abs_diff_eq!(cf[k], num[k], epsilon = 1e-12);
                        }
                        assert!(num[3..].iter().all(|&w| w < 1e-12));
                        assert_abs_diff_eq!(e.entropy, entropy(&num), epsilon = 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn entanglement_collapses_to_thirds() {
        let e = ent_spectrum(200, 2.0, 0, 100).unwrap();
        for l in e.lambda {
            assert_abs_diff_eq!(l, 1.0 / 3.0, epsilon = 1e-10);
        }
        assert_abs_diff_eq!(e.entropy, 3f64.ln(), epsilon = 1e-10);
        let e0 = ent_spectrum(9, 0.0, 1, 4).unwrap();
        for l in e0.lambda {
            assert_abs_diff_eq!(l, 1.0 / 3.0, epsilon = 1e-15);
        }
        let edge = ent_spectrum(40, 2.0, 0, 1).unwrap();
        assert!((edge.lambda[0] - edge.lambda[1]).abs() > 1e-2);
    }

    #[test]
    fn a_ratio_magnitude_is_xi() {
        for &phi in &[-1.0, 0.5, 2.0] {
            for l in [5, 20] {
                let r = a_ratio(l, phi).unwrap();
                assert_abs_diff_eq!(r.norm(), (-(l as f64) / xi(phi)).exp(), epsilon = 1e-14);
                assert_abs_diff_eq!(r.arg(), theta(l, phi).unwrap(), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn local_indistinguishability_envelope() {
        // |split|·e^{L/ξ} oscillates with θ but its envelope does not grow
        for &phi in &[0.5, 2.0, -1.0] {
            let inv = xi_inverse(phi);
            let scaled = |l: usize| {
                ClosedForms::new(l, phi).unwrap().density_split(0, 1).abs() * (l as f64 * inv).exp()
            };
            let c = (4..=10).map(scaled).fold(0.0, f64::max);
            let early = (4..=40).map(scaled).fold(0.0, f64::max);
            let late = (41..=120).map(scaled).fold(0.0, f64::max);
            assert!(early < 3.0 * c, "phi={phi}");
            assert!(
                (late / early - 1.0).abs() < 0.05,
                "phi={phi}: {early} vs {late}"
            );
        }
    }

    #[test]
    fn xi_fit_from_mps() {
        let fit = fit_xi_from_g(120, 1.0).unwrap();
        assert!(fit.relative_error < 1e-2, "{fit:?}");
    }

    #[test]
    fn linear_fit_exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = x.map(|v| 2.0 * v - 1.0);
        let f = linear_fit(&x, &y).unwrap();
        assert_abs_diff_eq!(f.slope, 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(f.intercept, -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(f.r2, 1.0, epsilon = 1e-14);
        assert!(linear_fit(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn figure_csvs_have_all_panels() {
        let rows = figure2(&[0.5], 10, &[-1.0, 0.0, 1.0]).unwrap();
        for p in ["G0", "density_split", "xi", "F0"] {
            assert!(rows.iter().any(|r| r.panel == p));
        }
        let mut buf = Vec::new();
        write_figure_csv("figure2", &rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), "panel,phi,L,x,k,re,im");
        let top = figure3_top(&[2.0], 12).unwrap();
        assert_eq!(top.len(), 11 * 4);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn ent_spectrum_is_a_distribution(l in 2usize..80, phi in -4.0f64..4.0, i in 0u8..3, frac in 0.0f64..1.0) {
            let cut = 1 + ((l - 1) as f64 * frac) as usize;
            let cut = cut.min(l - 1);
            let e = ent_spectrum(l, phi, i, cut).unwrap();
            prop_assert!(e.lambda.iter().all(|&v| v >= 0.0));
            prop_assert!((e.lambda.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(e.entropy >= 0.0 && e.entropy <= 3f64.ln() + 1e-12);
            prop_assert!(xi(phi) >= 0.0);
        }
    }
}
