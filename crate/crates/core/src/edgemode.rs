//! Leading-order weak edge modes and the commutator algebra behind them.
//!
//! `χ₁ = γ₁ + α(ωγ₃ − γ₂†γ₃†) + α*(ωγ₁†γ₃γ₂ − γ₁†γ₃†)` with `α = f/J − ωb`.
//! The right mode is the mirror image `χ₂ = ω² P χ₁ P† Q`, where `P` is the
//! inversion symmetry of `H` in the occupation basis and `Q = ω^N`; at
//! φ=0 this is `γ_{2L}`.

use std::collections::BTreeSet;

use ndarray::Array2;
use num_complex::Complex64;
use serde::Serialize;

use crate::algebra::{full_dim, occupation, omega_pow, total_number};
use crate::analytics::{linear_fit, ClosedForms};
use crate::eigen::dense_eigh;
use crate::error::{Error, Result};
use crate::groundstate::build_gs_vector;
use crate::model::{
    build_h, gauge_unitary, hamiltonian_parts, site_reversal, solvable_line, ModelParams,
};
use crate::operators::{build_parafermion, clock_to_fock, BasisTag, LinOp, Operator};
use crate::sparse::SparseMatrix;

type C = Complex64;

/// Couplings above this are outside the perturbative regime.
pub const PERTURBATIVE_LIMIT: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Debug)]
pub struct EdgeMode {
    pub sites: usize,
    pub alpha: C,
    pub side: Side,
    pub operator: LinOp,
    /// `false` when `|f/J|` or `|b|` exceeds [`PERTURBATIVE_LIMIT`].
    pub perturbative: bool,
}

pub fn alpha(f_over_j: f64, b: f64) -> C {
    C::new(f_over_j, 0.0) - omega_pow(1) * b
}

/// `χ₁` for a given `α`.
pub fn chi1_from_alpha(sites: usize, alpha: C) -> Result<LinOp> {
    if sites < 2 {
        return Err(Error::InvalidParameter(format!(
            "edge mode needs L ≥ 2, got {sites}"
        )));
    }
    let g = |k| build_parafermion::<C>(sites, k);
    let (g1, g2, g3) = (g(1)?, g(2)?, g(3)?);
    let w = omega_pow(1);
    let first = &g3.scale(&w) - &(&g2.adjoint() * &g3.adjoint());
    let second = &(&(&g1.adjoint() * &g3) * &g2).scale(&w) - &(&g1.adjoint() * &g3.adjoint());
    Ok(&(&g1 + &first.scale(&alpha)) + &second.scale(&alpha.conj()))
}

pub fn chi1_perturbative(sites: usize, f: f64, j: f64, b: f64) -> Result<EdgeMode> {
    if j <= 0.0 || !f.is_finite() || !b.is_finite() {
        return Err(Error::InvalidParameter("need finite f, b and J > 0".into()));
    }
    let a = alpha(f / j, b);
    Ok(EdgeMode {
        sites,
        alpha: a,
        side: Side::Left,
        operator: chi1_from_alpha(sites, a)?,
        perturbative: (f / j).abs() <= PERTURBATIVE_LIMIT && b.abs() <= PERTURBATIVE_LIMIT,
    })
}

/// Inversion symmetry of `H` in the occupation basis: the site reversal of
/// the gauged clock model carried back through the gauge and the
/// clock-to-occupation map.
pub fn inversion_unitary(sites: usize) -> Result<SparseMatrix<C>> {
    let u = gauge_unitary::<C>(sites)?;
    let v = clock_to_fock::<C>(sites)?;
    Ok(v.mul(&u.adjoint())
        .mul(&site_reversal::<C>(sites)?)
        .mul(&u)
        .mul(&v.adjoint()))
}

fn charge_operator(sites: usize) -> Result<SparseMatrix<C>> {
    let dim = full_dim(sites)?;
    Ok(SparseMatrix::from_diagonal(
        (0..dim)
            .map(|i| omega_pow(total_number(i) as i64))
            .collect(),
    ))
}

/// Mirror image `ω² P χ₁ P† Q` of a left mode.
pub fn mirror(left: &EdgeMode) -> Result<EdgeMode> {
    let p = inversion_unitary(left.sites)?;
    let q = charge_operator(left.sites)?;
    let m = p
        .mul(left.operator.matrix())
        .mul(&p.adjoint())
        .mul(&q)
        .scale(&omega_pow(2));
    let l = left.sites;
    Ok(EdgeMode {
        sites: l,
        alpha: left.alpha,
        side: Side::Right,
        operator: Operator::new(BasisTag::Full { sites: l }, BTreeSet::from([l - 1, l]), m),
        perturbative: left.perturbative,
    })
}

pub fn chi2_perturbative(sites: usize, f: f64, j: f64, b: f64) -> Result<EdgeMode> {
    mirror(&chi1_perturbative(sites, f, j, b)?)
}

impl EdgeMode {
    fn identity(&self) -> LinOp {
        LinOp::identity(self.operator.tag(), self.operator.dim())
    }

    /// `‖χ³ − 1‖_F`.
    pub fn cube_residual(&self) -> f64 {
        (&self.operator.pow(3) - &self.identity()).norm()
    }

    /// `‖χ² − χ†‖_F`.
    pub fn square_residual(&self) -> f64 {
        (&self.operator.pow(2) - &self.operator.adjoint()).norm()
    }

    /// Whether the operator acts as the identity on every site outside
    /// `keep` (a contiguous block of sites).
    pub fn acts_trivially_outside(&self, keep: std::ops::RangeInclusive<usize>) -> bool {
        let l = self.sites;
        let outside: Vec<usize> = (1..=l).filter(|s| !keep.contains(s)).collect();
        let key = |idx: usize| -> (Vec<u8>, Vec<u8>) {
            let inner = keep.clone().map(|s| occupation(idx, l, s)).collect();
            let outer = outside.iter().map(|&s| occupation(idx, l, s)).collect();
            (inner, outer)
        };
        let mut blocks: std::collections::HashMap<(Vec<u8>, Vec<u8>), C> = Default::default();
        let mut counts: std::collections::HashMap<(Vec<u8>, Vec<u8>), usize> = Default::default();
        for (r, c, v) in self.operator.matrix().triplets() {
            if v.norm() < 1e-14 {
                continue;
            }
            let (ri, ro) = key(r);
            let (ci, co) = key(c);
            if ro != co {
                return false;
            }
            let k = (ri, ci);
            match blocks.get(&k) {
                Some(prev) if (prev - v).norm() > 1e-12 => return false,
                Some(_) => {}
                None => {
                    blocks.insert(k.clone(), *v);
                }
            }
            *counts.entry(k).or_default() += 1;
        }
        let reps = 3usize.pow(outside.len() as u32);
        counts.values().all(|&n| n == reps)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AlgebraScaling {
    pub sites: usize,
    pub alphas: Vec<f64>,
    pub cube_residuals: Vec<f64>,
    pub square_residuals: Vec<f64>,
    pub cube_slope: f64,
    pub square_slope: f64,
}

/// Residuals of `χ₁³ = 1` and `χ₁² = χ₁†` for `α = |α| e^{i arg}`.
pub fn algebra_scaling(sites: usize, magnitudes: &[f64], arg: f64) -> Result<AlgebraScaling> {
    let mut cube = Vec::new();
    let mut square = Vec::new();
    for &m in magnitudes {
        let a = C::from_polar(m, arg);
        let mode = EdgeMode {
            sites,
            alpha: a,
            side: Side::Left,
            operator: chi1_from_alpha(sites, a)?,
            perturbative: m <= PERTURBATIVE_LIMIT,
        };
        cube.push(mode.cube_residual());
        square.push(mode.square_residual());
    }
    let lx: Vec<f64> = magnitudes.iter().map(|a| a.ln()).collect();
    let slope = |y: &[f64]| -> Result<f64> {
        Ok(linear_fit(&lx, &y.iter().map(|v| v.ln()).collect::<Vec<_>>())?.slope)
    };
    Ok(AlgebraScaling {
        sites,
        alphas: magnitudes.to_vec(),
        cube_slope: slope(&cube)?,
        square_slope: slope(&square)?,
        cube_residuals: cube,
        square_residuals: square,
    })
}

/// `[⟨g_i|χ|g_j⟩]` for `χ₁` and `χ₂` at one point of the solvable line.
#[derive(Clone, Debug, Serialize)]
pub struct GsTable {
    pub sites: usize,
    pub phi: f64,
    pub alpha: (f64, f64),
    pub chi1: [[(f64, f64); 3]; 3],
    pub chi2: [[(f64, f64); 3]; 3],
}

fn as_pair(z: C) -> (f64, f64) {
    (z.re, z.im)
}

fn table(op: &LinOp, states: &[Vec<C>]) -> [[C; 3]; 3] {
    let images: Vec<Vec<C>> = states.iter().map(|s| op.matvec(s)).collect();
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            states[i]
                .iter()
                .zip(&images[j])
                .map(|(a, b)| a.conj() * b)
                .sum()
        })
    })
}

/// A 3×3 block of matrix elements within the ground manifold.
pub type Block3 = [[C; 3]; 3];

/// Ground-manifold tables in the real-amplitude convention of the states.
pub fn gs_matrix_elements(sites: usize, phi: f64) -> Result<(GsTable, Block3, Block3)> {
    let pt = solvable_line(phi)?;
    let left = chi1_perturbative(sites, pt.f_over_j, 1.0, pt.b)?;
    let right = mirror(&left)?;
    let states: Vec<Vec<C>> = (0..3)
        .map(|i| build_gs_vector(sites, phi, i).map(|g| g.to_full()))
        .collect::<Result<_>>()?;
    let t1 = table(&left.operator, &states);
    let t2 = table(&right.operator, &states);
    let pairs =
        |t: &[[C; 3]; 3]| std::array::from_fn(|i| std::array::from_fn(|j| as_pair(t[i][j])));
    Ok((
        GsTable {
            sites,
            phi,
            alpha: as_pair(left.alpha),
            chi1: pairs(&t1),
            chi2: pairs(&t2),
        },
        t1,
        t2,
    ))
}

/// `max_i |⟨g_i|χ|g_{i+1}⟩(φ) − ⟨g_i|χ|g_{i+1}⟩(0)|` and the largest
/// element off the cyclic pattern.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CyclicDeviation {
    pub phi: f64,
    pub alpha_abs: f64,
    pub chi1: f64,
    pub chi2: f64,
    pub off_pattern: f64,
}

pub fn cyclic_deviation(sites: usize, phi: f64) -> Result<CyclicDeviation> {
    let (g, t1, t2) = gs_matrix_elements(sites, phi)?;
    let (_, r1, r2) = gs_matrix_elements(sites, 0.0)?;
    let mut d1 = 0.0f64;
    let mut d2 = 0.0f64;
    let mut off = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            if j == (i + 1) % 3 {
                d1 = d1.max((t1[i][j] - r1[i][j]).norm());
                d2 = d2.max((t2[i][j] - r2[i][j]).norm());
            } else {
                off = off.max(t1[i][j].norm()).max(t2[i][j].norm());
            }
        }
    }
    Ok(CyclicDeviation {
        phi,
        alpha_abs: C::new(g.alpha.0, g.alpha.1).norm(),
        chi1: d1,
        chi2: d2,
        off_pattern: off,
    })
}

/// `‖[H + H_B, χ₁]‖_F` along the solvable line.
pub fn commutator_norm(sites: usize, phi: f64) -> Result<f64> {
    let pt = solvable_line(phi)?;
    let h = build_h(&pt.params(sites, 1.0, true)?)?;
    let chi = chi1_perturbative(sites, pt.f_over_j, 1.0, pt.b)?;
    Ok(h.commutator(&chi.operator)?.norm())
}

/// The commutator-algebra matrix `M` as printed.
pub fn m_matrix() -> Array2<C> {
    let s = C::new(0.0, 3f64.sqrt()).inv();
    let r = |x: f64| C::new(x, 0.0) * s;
    ndarray::array![
        [r(0.0), r(-1.0), r(1.0)],
        [r(1.0), r(0.0), r(-1.0)],
        [r(-1.0), r(1.0), r(0.0)]
    ]
}

#[derive(Clone, Debug, Serialize)]
pub struct VjReport {
    pub sites: usize,
    /// `‖[H₀⁰, v_j] − 3ε_j v_j‖` for `v_j = (γ₂ + ω^j ωγ₃ + ω^{2j} γ₂†γ₃†)/√3`.
    pub residuals: [f64; 3],
    /// The same for the printed `v_j` without `ω^{2j}` on the last term.
    pub printed_residuals: [f64; 3],
    /// `max_k ‖[H₀⁰, b_k] − 3 Σ_r M_{rk} b_r‖` over `b = (γ₂, ωγ₃, γ₂†γ₃†)`.
    pub m_residual: f64,
    pub m_eigenvalues: Vec<f64>,
}

pub const EPSILON: [f64; 3] = [0.0, -1.0, 1.0];

pub fn vj_eigenoperator_check(sites: usize) -> Result<VjReport> {
    if sites < 2 {
        return Err(Error::InvalidParameter(format!("need L ≥ 2, got {sites}")));
    }
    let h00 = hamiltonian_parts::<C>(sites, &C::new(0.0, 0.0), &C::new(1.0, 0.0))?.h0;
    let g2 = build_parafermion::<C>(sites, 2)?;
    let g3 = build_parafermion::<C>(sites, 3)?;
    let w = omega_pow(1);
    let basis = [g2.clone(), g3.scale(&w), &g2.adjoint() * &g3.adjoint()];
    let s3 = C::new(1.0 / 3f64.sqrt(), 0.0);
    let resid = |v: &LinOp, eps: f64| -> Result<f64> {
        Ok((&h00.commutator(v)? - &v.scale(&C::new(3.0 * eps, 0.0))).norm())
    };
    let mut residuals = [0.0; 3];
    let mut printed = [0.0; 3];
    for j in 0..3i64 {
        let lin = |c: [C; 3]| -> LinOp {
            let mut v = basis[0].scale(&c[0]);
            v = &v + &basis[1].scale(&c[1]);
            &v + &basis[2].scale(&c[2])
        };
        let one = C::new(1.0, 0.0);
        let v = lin([one, omega_pow(j), omega_pow(2 * j)]).scale(&s3);
        let vp = lin([one, omega_pow(j), one]).scale(&s3);
        residuals[j as usize] = resid(&v, EPSILON[j as usize])?;
        printed[j as usize] = resid(&vp, EPSILON[j as usize])?;
    }
    let m = m_matrix();
    let mut m_residual = 0.0f64;
    for k in 0..3 {
        let mut rhs = LinOp::zero(basis[0].tag(), basis[0].dim());
        for r in 0..3 {
            rhs = &rhs + &basis[r].scale(&(m[[r, k]] * 3.0));
        }
        m_residual = m_residual.max((&h00.commutator(&basis[k])? - &rhs).norm());
    }
    Ok(VjReport {
        sites,
        residuals,
        printed_residuals: printed,
        m_residual,
        m_eigenvalues: dense_eigh(&m)?.0,
    })
}

/// Sites where `|F_0(ℓ)|` exceeds `tol` times its maximum.
pub fn f_support(sites: usize, phi: f64, tol: f64) -> Result<Vec<usize>> {
    let cf = ClosedForms::new(sites, phi)?;
    let vals: Vec<f64> = (1..=sites)
        .map(|l| cf.f(0, l).map(|v| v.norm()))
        .collect::<Result<_>>()?;
    let max = vals.iter().cloned().fold(0.0, f64::max);
    Ok((1..=sites).filter(|&l| vals[l - 1] > tol * max).collect())
}

/// Everything the `edge-mode` command reports.
#[derive(Clone, Debug, Serialize)]
pub struct EdgeReport {
    pub algebra: AlgebraScaling,
    pub vj: VjReport,
    pub deviations: Vec<CyclicDeviation>,
    pub deviation_slope_chi1: f64,
    pub deviation_slope_chi2: f64,
    pub commutator_norms: Vec<(f64, f64)>,
    pub phase_table_phi0: GsTable,
    pub locality_chi1: bool,
}

pub fn edge_mode_report(sites: usize, alphas: &[f64], phis: &[f64]) -> Result<EdgeReport> {
    let algebra = algebra_scaling(sites, alphas, 0.0)?;
    let vj = vj_eigenoperator_check(sites.max(3))?;
    let deviations: Vec<CyclicDeviation> = phis
        .iter()
        .map(|&p| cyclic_deviation(sites, p))
        .collect::<Result<_>>()?;
    let la: Vec<f64> = deviations.iter().map(|d| d.alpha_abs.ln()).collect();
    let slope = |f: fn(&CyclicDeviation) -> f64| -> Result<f64> {
        Ok(linear_fit(
            &la,
            &deviations.iter().map(|d| f(d).ln()).collect::<Vec<_>>(),
        )?
        .slope)
    };
    let commutator_norms = phis
        .iter()
        .map(|&p| Ok((p, commutator_norm(sites, p)?)))
        .collect::<Result<_>>()?;
    let pt = solvable_line(*phis.first().unwrap_or(&0.01))?;
    let left = chi1_perturbative(sites, pt.f_over_j, 1.0, pt.b)?;
    Ok(EdgeReport {
        deviation_slope_chi1: slope(|d| d.chi1)?,
        deviation_slope_chi2: slope(|d| d.chi2)?,
        algebra,
        vj,
        deviations,
        commutator_norms,
        phase_table_phi0: gs_matrix_elements(sites, 0.0)?.0,
        locality_chi1: left.acts_trivially_outside(1..=2),
    })
}

/// Validates the parameters of a perturbative edge-mode run.
pub fn check_params(p: &ModelParams) -> Result<()> {
    p.validate()?;
    if p.sites < 2 {
        return Err(Error::InvalidParameter("edge mode needs L ≥ 2".into()));
    }
    Ok(())
}
