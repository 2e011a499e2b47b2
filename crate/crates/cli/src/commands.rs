use num_complex::Complex64 as C;
use rayon::prelude::*;
use serde::Serialize;

use pflab::analytics::{self, ClosedForms, FigureRow};
use pflab::dmrg::{self, DmrgOptions, GapResult};
use pflab::domainwall::{self, DeltaRow, InsetFit};
use pflab::edgemode::{self, EdgeReport};
use pflab::groundstate::{self, build_gs_mps, build_gs_vector, factorized_form};
use pflab::model::{self, solvable_line};
use pflab::operators::algebra_suite;
use pflab::spectra::{self, SolverOptions};

use crate::config::{CommandKind, Experiment, Format};
use crate::output::{report, table, Artifact};
use crate::Failure;

pub struct Outcome {
    pub artifact: Artifact,
    /// Number of checks that did not hold; nonzero turns into exit code 1.
    pub failed: usize,
}

impl From<Artifact> for Outcome {
    fn from(artifact: Artifact) -> Self {
        Self {
            artifact,
            failed: 0,
        }
    }
}

/// Largest Hilbert-space dimension each exact command will build.
fn dimension_cap(kind: CommandKind) -> Option<usize> {
    match kind {
        CommandKind::Ed => Some(model::DEFAULT_DIM_CAP),
        CommandKind::GsCheck => Some(3usize.pow(10)),
        CommandKind::EdgeMode => Some(3usize.pow(8)),
        _ => None,
    }
}

pub fn run(exp: &Experiment) -> Result<Outcome, Failure> {
    if let Some(cap) = dimension_cap(exp.command) {
        if let Some(&sites) = exp
            .sites
            .iter()
            .find(|&&l| 3f64.powi(l as i32) > cap as f64)
        {
            return Err(pflab::Error::DimensionCap { sites, cap }.into());
        }
    }
    match exp.command {
        CommandKind::VerifyAlgebra => verify_algebra(exp),
        CommandKind::Figure2 => figure2(exp).map(Into::into),
        CommandKind::Figure3Top => figure3_top(exp).map(Into::into),
        CommandKind::Figure3Gap => figure3_gap(exp).map(Into::into),
        CommandKind::Inset => inset(exp).map(Into::into),
        CommandKind::Ed => ed(exp).map(Into::into),
        CommandKind::GsCheck => gs_check(exp),
        CommandKind::Correlators => correlators(exp).map(Into::into),
        CommandKind::Entanglement => entanglement(exp).map(Into::into),
        CommandKind::EdgeMode => edge_mode(exp).map(Into::into),
        CommandKind::Dmrg => dmrg_ground(exp).map(Into::into),
    }
}

/// Evaluates `f` on every grid point in parallel and returns the results in
/// grid order.
fn grid<T, R, F>(points: &[T], f: F) -> Result<Vec<R>, Failure>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R, Failure> + Sync + Send,
{
    points.par_iter().map(f).collect()
}

fn pairs(exp: &Experiment) -> Vec<(usize, f64)> {
    exp.sites
        .iter()
        .flat_map(|&l| exp.phi.iter().map(move |&p| (l, p)))
        .collect()
}

fn triples(exp: &Experiment) -> Vec<(usize, f64, u8)> {
    pairs(exp)
        .into_iter()
        .flat_map(|(l, p)| exp.charge.iter().map(move |&i| (l, p, i)))
        .collect()
}

fn dmrg_options(exp: &Experiment) -> DmrgOptions {
    DmrgOptions {
        chi_max: exp.chi_max,
        max_sweeps: exp.max_sweeps,
        energy_tol: exp.energy_tol,
        cutoff: exp.cutoff,
        seed: exp.seed,
        ..DmrgOptions::default()
    }
}

// ---- verify-algebra ----

#[derive(Serialize)]
struct CheckRow {
    group: &'static str,
    identity: String,
    cases: usize,
    failures: usize,
    max_residual: Option<f64>,
    status: &'static str,
    first_failure: String,
}

impl CheckRow {
    fn numeric(
        group: &'static str,
        identity: &str,
        residuals: Vec<(String, f64)>,
        tol: f64,
    ) -> Self {
        let bad: Vec<&(String, f64)> = residuals
            .iter()
            .filter(|(_, r)| r.is_nan() || *r >= tol)
            .collect();
        let max = residuals.iter().map(|r| r.1).fold(0.0, f64::max);
        Self {
            group,
            identity: identity.to_string(),
            cases: residuals.len(),
            failures: bad.len(),
            max_residual: Some(max),
            status: if bad.is_empty() { "PASS" } else { "FAIL" },
            first_failure: bad.first().map(|b| b.0.clone()).unwrap_or_default(),
        }
    }
}

fn verify_algebra(exp: &Experiment) -> Result<Outcome, Failure> {
    let lmax = exp.sites.iter().copied().max().unwrap_or(4);
    let mut rows: Vec<CheckRow> = algebra_suite(lmax)?
        .into_iter()
        .map(|c| CheckRow {
            group: "operators",
            identity: c.name.to_string(),
            cases: c.cases,
            failures: c.failures.len(),
            max_residual: None,
            status: if c.passed() { "PASS" } else { "FAIL" },
            first_failure: c.failures.first().cloned().unwrap_or_default(),
        })
        .collect();

    let sizes: Vec<usize> = (3..=lmax.max(3)).collect();
    let tol = exp.tol;
    let mut triplet = Vec::new();
    let mut gap = Vec::new();
    let mut ladder = Vec::new();
    for &l in &sizes {
        let p = solvable_line(0.0)?.params(l, 1.0, true)?;
        let t = spectra::spectrum_table(&p, 2, &SolverOptions::default())?;
        let e0 = -2.0 * (l as f64 - 1.0);
        for q in 0..3 {
            triplet.push((format!("L={l} q={q}"), (t.levels[q][0] - e0).abs()));
        }
        gap.push((format!("L={l}"), (t.gap()? - 3.0).abs()));
        for code in 0..3usize.pow(l as u32 - 1) {
            let m: Vec<u8> = (0..l - 1)
                .map(|k| (code / 3usize.pow(k as u32) % 3) as u8)
                .collect();
            for i in 0..3 {
                let r = spectra::excitation_ladder_check(l, &m, i, 1.0)?;
                let res = r.residual.max((r.measured - r.predicted).abs());
                ladder.push((format!("L={l} m={m:?} i={i}"), res));
            }
        }
    }
    rows.push(CheckRow::numeric(
        "phi=0",
        "ground triplet at -2J(L-1)",
        triplet,
        tol,
    ));
    rows.push(CheckRow::numeric("phi=0", "gap = 3J", gap, tol));
    rows.push(CheckRow::numeric(
        "phi=0",
        "ladder states have energy -2J(L-1) + sum 2J(1 - Re w^m)",
        ladder,
        tol,
    ));

    let mut annihilate = Vec::new();
    let mut relation = Vec::new();
    let mut symmetry = Vec::new();
    for &l in &sizes {
        for &phi in &exp.phi {
            let parent = model::build_parent(l, phi, 1.0)?;
            for i in 0..3 {
                let v = build_gs_vector(l, phi, i)?.to_full();
                annihilate.push((
                    format!("L={l} phi={phi} i={i}"),
                    groundstate::vec_norm(&parent.matvec(&v)),
                ));
            }
            let off = model::parent_offset(l, phi, 1.0)?;
            let rel = off.residual.max((off.scale - off.scale_predicted).abs())
                / off.scale.abs().max(1.0);
            relation.push((format!("L={l} phi={phi}"), rel));
            let s = model::check_time_reversal(&solvable_line(phi)?.params(l, 1.0, true)?)?;
            let worst = s.time_reversal.max(s.inversion);
            symmetry.push((format!("L={l} phi={phi}"), worst));
        }
    }
    rows.push(CheckRow::numeric(
        "parent",
        "H_phi |g_i> = 0",
        annihilate,
        tol,
    ));
    rows.push(CheckRow::numeric(
        "parent",
        "H_phi = lambda(phi) (H + H_B) + c 1",
        relation,
        tol,
    ));
    rows.push(CheckRow::numeric(
        "symmetry",
        "gauged H is real and inversion symmetric",
        symmetry,
        tol,
    ));

    let failed = rows.iter().filter(|r| r.status == "FAIL").count();
    Ok(Outcome {
        artifact: table("algebra", &rows, exp.format)?,
        failed,
    })
}

// ---- figures ----

fn xi_grid() -> Vec<f64> {
    (0..=80).map(|k| -4.0 + 0.1 * k as f64).collect()
}

fn figure2(exp: &Experiment) -> Result<Artifact, Failure> {
    let mut rows: Vec<FigureRow> = Vec::new();
    for (k, &l) in exp.sites.iter().enumerate() {
        let xs = if k == 0 { xi_grid() } else { Vec::new() };
        rows.extend(analytics::figure2(&exp.phi, l, &xs)?);
    }
    table("figure2", &rows, exp.format)
}

fn figure3_top(exp: &Experiment) -> Result<Artifact, Failure> {
    let mut rows: Vec<FigureRow> = Vec::new();
    for &l in &exp.sites {
        rows.extend(analytics::figure3_top(&exp.phi, l)?);
    }
    table("figure3-top", &rows, exp.format)
}

fn figure3_gap(exp: &Experiment) -> Result<Artifact, Failure> {
    let opts = dmrg_options(exp);
    let results: Vec<GapResult> =
        grid(&pairs(exp), |&(l, phi)| Ok(dmrg::dmrg_gap(l, phi, &opts)?))?;
    match exp.format {
        Format::Csv => {
            let mut body = Vec::new();
            dmrg::write_gap_csv(&results, &mut body)?;
            Ok(Artifact { body })
        }
        Format::Json => report("figure3-gap", &results),
    }
}

#[derive(Serialize)]
struct InsetReport {
    rows: Vec<DeltaRow>,
    fits: Vec<InsetFit>,
}

fn inset(exp: &Experiment) -> Result<Artifact, Failure> {
    let sizes = domainwall::inset_sizes(exp.lmax);
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    for &phi in &exp.phi {
        let r = domainwall::dw_delta_scaling(phi, &sizes, &[1, 4], exp.with_boundary)?;
        fits.push(domainwall::inset_fit(&r)?);
        rows.extend(r);
    }
    for f in &fits {
        eprintln!(
            "phi={}: ln D1 vs L slope {:.4} (R2 {:.5}); ln D4 vs ln L slope {:.4} (R2 {:.5})",
            f.phi,
            f.delta1_exponential.slope,
            f.delta1_exponential.r2,
            f.delta4_power.slope,
            f.delta4_power.r2
        );
    }
    match exp.format {
        Format::Csv => table("inset", &rows, Format::Csv),
        Format::Json => report("inset", &InsetReport { rows, fits }),
    }
}

// ---- primitives ----

#[derive(Serialize)]
struct LevelRow {
    #[serde(rename = "L")]
    sites: usize,
    phi: f64,
    q: usize,
    m: usize,
    energy: f64,
    residual: f64,
}

fn ed(exp: &Experiment) -> Result<Artifact, Failure> {
    let opts = SolverOptions {
        tol: exp.tol,
        max_iter: exp.max_iter,
        seed: exp.seed,
        ..SolverOptions::default()
    };
    let tables = grid(&pairs(exp), |&(l, phi)| {
        let p = solvable_line(phi)?.params(l, 1.0, exp.with_boundary)?;
        Ok((phi, spectra::spectrum_table(&p, exp.levels, &opts)?))
    })?;
    let mut rows = Vec::new();
    for (phi, t) in tables {
        for q in 0..3 {
            for (m, (&energy, &residual)) in t.levels[q].iter().zip(&t.residuals[q]).enumerate() {
                rows.push(LevelRow {
                    sites: t.params.sites,
                    phi,
                    q,
                    m,
                    energy,
                    residual,
                });
            }
        }
    }
    table("spectrum", &rows, exp.format)
}

#[derive(Serialize)]
struct GsRow {
    #[serde(rename = "L")]
    sites: usize,
    phi: f64,
    i: u8,
    infidelity_vector_mps: f64,
    infidelity_vector_factorized: f64,
    infidelity_mps_factorized: f64,
    parent_residual: f64,
    norm_relative_error: f64,
}

fn infidelity(a: &[C], b: &[C]) -> f64 {
    let s: C = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    let n = groundstate::vec_norm(a) * groundstate::vec_norm(b);
    1.0 - s.norm_sqr() / (n * n)
}

const GS_TOL: f64 = 1e-12;

fn gs_check(exp: &Experiment) -> Result<Outcome, Failure> {
    let rows = grid(&triples(exp), |&(l, phi, i)| {
        let v = build_gs_vector(l, phi, i)?.to_full();
        let m = build_gs_mps(l, phi, i)?.to_vector()?;
        let f = factorized_form(l, phi, i)?.to_vector()?;
        let parent = model::build_parent(l, phi, 1.0)?;
        let closed = groundstate::norm_constants(l, phi)?.norm(i);
        let brute = groundstate::norm_multinomial(l, phi)?[i as usize];
        Ok(GsRow {
            sites: l,
            phi,
            i,
            infidelity_vector_mps: infidelity(&v, &m),
            infidelity_vector_factorized: infidelity(&v, &f),
            infidelity_mps_factorized: infidelity(&m, &f),
            parent_residual: groundstate::vec_norm(&parent.matvec(&v)),
            norm_relative_error: (closed - brute).abs() / brute,
        })
    })?;
    let failed = rows
        .iter()
        .filter(|r| {
            let worst = r
                .infidelity_vector_mps
                .max(r.infidelity_vector_factorized)
                .max(r.infidelity_mps_factorized);
            !(worst < GS_TOL && r.parent_residual < 1e-10 && r.norm_relative_error < GS_TOL)
        })
        .count();
    Ok(Outcome {
        artifact: table("gs-check", &rows, exp.format)?,
        failed,
    })
}

fn ell_range(exp: &Experiment, sites: usize, max: usize) -> std::ops::RangeInclusive<usize> {
    match exp.ell {
        Some((a, b)) => a..=b.min(max),
        None => 1..=max.min(sites),
    }
}

#[derive(Serialize)]
struct CorrRow {
    #[serde(rename = "L")]
    sites: usize,
    phi: f64,
    i: u8,
    ell: usize,
    g_re: f64,
    g_im: f64,
    g_mps_re: f64,
    g_mps_im: f64,
    f_re: f64,
    f_im: f64,
    density: f64,
}

fn correlators(exp: &Experiment) -> Result<Artifact, Failure> {
    let blocks = grid(&triples(exp), |&(l, phi, i)| {
        let cf = ClosedForms::new(l, phi)?;
        let mps = build_gs_mps(l, phi, i)?;
        ell_range(exp, l, l)
            .map(|ell| {
                let g = cf.g(i, ell)?;
                let gm = analytics::corr_g_mps(&mps, 1, ell)?;
                let f = cf.f(i, ell)?;
                Ok(CorrRow {
                    sites: l,
                    phi,
                    i,
                    ell,
                    g_re: g.re,
                    g_im: g.im,
                    g_mps_re: gm.re,
                    g_mps_im: gm.im,
                    f_re: f.re,
                    f_im: f.im,
                    density: cf.density(i),
                })
            })
            .collect::<Result<Vec<_>, Failure>>()
    })?;
    table(
        "correlators",
        &blocks.into_iter().flatten().collect::<Vec<_>>(),
        exp.format,
    )
}

#[derive(Serialize)]
struct EntRow {
    #[serde(rename = "L")]
    sites: usize,
    phi: f64,
    i: u8,
    ell: usize,
    lambda0: f64,
    lambda1: f64,
    lambda2: f64,
    entropy: f64,
}

fn entanglement(exp: &Experiment) -> Result<Artifact, Failure> {
    let blocks = grid(&triples(exp), |&(l, phi, i)| {
        let cf = ClosedForms::new(l, phi)?;
        ell_range(exp, l, l - 1)
            .map(|ell| {
                let e = cf.ent(i, ell)?;
                Ok(EntRow {
                    sites: l,
                    phi,
                    i,
                    ell,
                    lambda0: e.lambda[0],
                    lambda1: e.lambda[1],
                    lambda2: e.lambda[2],
                    entropy: e.entropy,
                })
            })
            .collect::<Result<Vec<_>, Failure>>()
    })?;
    table(
        "entanglement",
        &blocks.into_iter().flatten().collect::<Vec<_>>(),
        exp.format,
    )
}

fn edge_mode(exp: &Experiment) -> Result<Artifact, Failure> {
    let reports: Vec<EdgeReport> = grid(&exp.sites, |&l| {
        Ok(edgemode::edge_mode_report(l, &exp.alpha, &exp.phi)?)
    })?;
    report("edge-mode", &reports)
}

#[derive(Serialize)]
struct DmrgRow {
    phi: f64,
    #[serde(rename = "L")]
    sites: usize,
    chi_max: usize,
    q: u8,
    energy: f64,
    max_truncation_error: f64,
    max_bond: usize,
    sweeps: usize,
}

fn dmrg_ground(exp: &Experiment) -> Result<Artifact, Failure> {
    let opts = dmrg_options(exp);
    let rows = grid(&triples(exp), |&(l, phi, q)| {
        let p = solvable_line(phi)?.params(l, 1.0, true)?;
        let mps = dmrg::dmrg_ground(&p, q, &opts)?;
        Ok(DmrgRow {
            phi,
            sites: l,
            chi_max: opts.chi_max,
            q,
            energy: mps.energy,
            max_truncation_error: mps.max_truncation(),
            max_bond: mps.max_bond(),
            sweeps: mps.sweeps.len(),
        })
    })?;
    table("dmrg-ground", &rows, exp.format)
}
