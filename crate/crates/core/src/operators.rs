//! Site-local and string operators of the ℤ₃ chain.
//!
//! Everything is built in the occupation (Fock) basis unless tagged
//! [`BasisTag::Clock`]. The builders are generic over [`Scalar`], so the
//! same code yields exact ℚ(ω) matrices for identity checks and `Complex64`
//! matrices for numerics.
//!
//! Conventions:
//! * `C_j` lowers `n_j` by one and carries the left string `ω^{Σ_{k<j} N_k}`,
//!   which gives `C_j C_k = ω C_k C_j` for `j < k`.
//! * `γ_{2j−1} = ω (C_j + C_j†²)`, `γ_{2j} = C_j ω^{N_j} + C_j†²`.
//! * Clock operators act on clock states `|s⟩`: `σ|s⟩ = |s−1⟩`,
//!   `τ|s⟩ = ω^s |s⟩`. The Fradkin–Kadanoff strings
//!   `γ_{2j−1} = (Π_{k<j} τ_k) σ_j` and `γ_{2j} = ω (Π_{k<j} τ_k) σ_j τ_j`
//!   coincide with the Fock construction after the basis change of
//!   [`clock_to_fock`].

use std::collections::BTreeSet;
use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::algebra::{
    enumerate_sector, full_dim, occupation, site_weight, total_number, Scalar, SectorBasis,
};
use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BasisTag {
    /// All 3^L occupation states.
    Full { sites: usize },
    /// One ℤ₃ sector of the occupation basis.
    Sector { sites: usize, charge: u8 },
    /// Product basis of τ eigenstates.
    Clock { sites: usize },
}

impl BasisTag {
    pub fn sites(&self) -> usize {
        match *self {
            BasisTag::Full { sites }
            | BasisTag::Sector { sites, .. }
            | BasisTag::Clock { sites } => sites,
        }
    }
}

impl fmt::Display for BasisTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisTag::Full { sites } => write!(f, "full(L={sites})"),
            BasisTag::Sector { sites, charge } => write!(f, "sector(L={sites}, q={charge})"),
            BasisTag::Clock { sites } => write!(f, "clock(L={sites})"),
        }
    }
}

/// A linear operator on the chain with its basis tag and site support.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator<S> {
    tag: BasisTag,
    support: BTreeSet<usize>,
    matrix: SparseMatrix<S>,
}

pub type LinOp = Operator<Complex64>;

impl<S: Scalar> Operator<S> {
    pub fn new(tag: BasisTag, support: BTreeSet<usize>, matrix: SparseMatrix<S>) -> Self {
        Self {
            tag,
            support,
            matrix,
        }
    }

    pub fn identity(tag: BasisTag, dim: usize) -> Self {
        Self::new(tag, BTreeSet::new(), SparseMatrix::identity(dim))
    }

    pub fn zero(tag: BasisTag, dim: usize) -> Self {
        Self::new(tag, BTreeSet::new(), SparseMatrix::zeros(dim, dim))
    }

    pub fn tag(&self) -> BasisTag {
        self.tag
    }

    pub fn sites(&self) -> usize {
        self.tag.sites()
    }

    pub fn support(&self) -> &BTreeSet<usize> {
        &self.support
    }

    pub fn matrix(&self) -> &SparseMatrix<S> {
        &self.matrix
    }

    pub fn into_matrix(self) -> SparseMatrix<S> {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn check_tag(&self, other: &Self) -> Result<()> {
        if self.tag == other.tag {
            Ok(())
        } else {
            Err(Error::BasisMismatch {
                left: self.tag.to_string(),
                right: other.tag.to_string(),
            })
        }
    }

    fn union(&self, other: &Self) -> BTreeSet<usize> {
        self.support.union(&other.support).copied().collect()
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_tag(other)?;
        Ok(Self::new(
            self.tag,
            self.union(other),
            self.matrix.mul(&other.matrix),
        ))
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_tag(other)?;
        Ok(Self::new(
            self.tag,
            self.union(other),
            self.matrix.add(&other.matrix),
        ))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_tag(other)?;
        Ok(Self::new(
            self.tag,
            self.union(other),
            self.matrix.sub(&other.matrix),
        ))
    }

    pub fn scale(&self, s: &S) -> Self {
        Self::new(self.tag, self.support.clone(), self.matrix.scale(s))
    }

    pub fn adjoint(&self) -> Self {
        Self::new(self.tag, self.support.clone(), self.matrix.adjoint())
    }

    pub fn pow(&self, e: u32) -> Self {
        Self::new(self.tag, self.support.clone(), self.matrix.pow(e))
    }

    /// `[A, B] = AB − BA`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.try_mul(other)?.try_sub(&other.try_mul(self)?)
    }

    pub fn is_zero(&self) -> bool {
        self.matrix.is_zero()
    }

    pub fn to_c64(&self) -> LinOp {
        Operator::new(self.tag, self.support.clone(), self.matrix.to_c64())
    }

    /// Restricts a full-space operator to one charge sector.
    ///
    /// Fails if the operator connects the sector to its complement.
    pub fn restrict(&self, basis: &SectorBasis) -> Result<Self> {
        let sites = basis.sites();
        if self.tag != (BasisTag::Full { sites }) {
            return Err(Error::BasisMismatch {
                left: self.tag.to_string(),
                right: format!("full(L={sites})"),
            });
        }
        let q = basis.charge() as usize;
        let leak = self
            .matrix
            .triplets()
            .any(|(r, c, _)| (total_number(r) % 3 == q) != (total_number(c) % 3 == q));
        if leak {
            return Err(Error::NotChargeConserving { residual: f64::NAN });
        }
        let idx = basis.full_indices();
        let matrix = self.matrix.submatrix(idx, idx, |c| basis.position_of(c));
        Ok(Self::new(
            BasisTag::Sector {
                sites,
                charge: basis.charge(),
            },
            self.support.clone(),
            matrix,
        ))
    }

    /// Inverse of [`Operator::restrict`]: zero outside the sector.
    pub fn embed(&self, basis: &SectorBasis) -> Result<Self> {
        let sites = basis.sites();
        let expect = BasisTag::Sector {
            sites,
            charge: basis.charge(),
        };
        if self.tag != expect {
            return Err(Error::BasisMismatch {
                left: self.tag.to_string(),
                right: expect.to_string(),
            });
        }
        let dim = full_dim(sites)?;
        let triplets = self
            .matrix
            .triplets()
            .map(|(r, c, v)| (basis.full_index(r), basis.full_index(c), v.clone()))
            .collect();
        Ok(Self::new(
            BasisTag::Full { sites },
            self.support.clone(),
            SparseMatrix::from_triplets(dim, dim, triplets),
        ))
    }
}

impl LinOp {
    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.matrix.matvec(x)
    }

    /// max |H − H†|.
    pub fn hermiticity_residual(&self) -> f64 {
        self.matrix.max_abs_diff(&self.matrix.adjoint())
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_tag(other)?;
        Ok(self.matrix.max_abs_diff(&other.matrix))
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.max_abs()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.matrix.frobenius()
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(&Complex64::new(s, 0.0))
    }
}

macro_rules! checked_binop {
    ($tr:ident, $method:ident, $checked:ident) => {
        impl<S: Scalar> $tr for &Operator<S> {
            type Output = Operator<S>;
            fn $method(self, rhs: &Operator<S>) -> Operator<S> {
                self.$checked(rhs).unwrap_or_else(|e| panic!("{e}"))
            }
        }
        impl<S: Scalar> $tr for Operator<S> {
            type Output = Operator<S>;
            fn $method(self, rhs: Operator<S>) -> Operator<S> {
                (&self).$checked(&rhs).unwrap_or_else(|e| panic!("{e}"))
            }
        }
    };
}

checked_binop!(Mul, mul, try_mul);
checked_binop!(Add, add, try_add);
checked_binop!(Sub, sub, try_sub);

pub(crate) fn check_site(sites: usize, site: usize) -> Result<()> {
    if site >= 1 && site <= sites {
        Ok(())
    } else {
        Err(Error::SiteOutOfRange { site, sites })
    }
}

fn full_tag(sites: usize) -> BasisTag {
    BasisTag::Full { sites }
}

/// Builds a monomial operator: `image(idx)` gives the single image of basis
/// state `idx`, or `None` if it is annihilated.
fn monomial<S: Scalar>(
    tag: BasisTag,
    support: BTreeSet<usize>,
    image: impl Fn(usize) -> Option<(usize, S)>,
) -> Result<Operator<S>> {
    let dim = full_dim(tag.sites())?;
    let matrix = SparseMatrix::from_columns(dim, |c| image(c).into_iter().collect());
    Ok(Operator::new(tag, support, matrix))
}

fn left_string_number(idx: usize, sites: usize, site: usize) -> i64 {
    (1..site).map(|k| occupation(idx, sites, k) as i64).sum()
}

/// Fock parafermion `C_j`.
pub fn build_fock_annihilator<S: Scalar>(sites: usize, site: usize) -> Result<Operator<S>> {
    check_site(sites, site)?;
    let w = site_weight(sites, site);
    monomial(full_tag(sites), (1..=site).collect(), |idx| {
        if occupation(idx, sites, site) == 0 {
            None
        } else {
            Some((idx - w, S::omega_pow(left_string_number(idx, sites, site))))
        }
    })
}

/// `C_j†`.
pub fn build_fock_creator<S: Scalar>(sites: usize, site: usize) -> Result<Operator<S>> {
    Ok(build_fock_annihilator::<S>(sites, site)?.adjoint())
}

/// Number operator `N_j`, diagonal with eigenvalue `n_j`.
pub fn build_number<S: Scalar>(sites: usize, site: usize) -> Result<Operator<S>> {
    check_site(sites, site)?;
    let dim = full_dim(sites)?;
    let diag = (0..dim)
        .map(|idx| S::from_frac(occupation(idx, sites, site) as i64, 1))
        .collect();
    Ok(Operator::new(
        full_tag(sites),
        BTreeSet::from([site]),
        SparseMatrix::from_diagonal(diag),
    ))
}

/// `ω^{p N_j}`.
pub fn build_omega_number<S: Scalar>(sites: usize, site: usize, power: i64) -> Result<Operator<S>> {
    check_site(sites, site)?;
    let dim = full_dim(sites)?;
    let diag = (0..dim)
        .map(|idx| S::omega_pow(power * occupation(idx, sites, site) as i64))
        .collect();
    Ok(Operator::new(
        full_tag(sites),
        BTreeSet::from([site]),
        SparseMatrix::from_diagonal(diag),
    ))
}

/// Total number operator `N = Σ_j N_j`.
pub fn build_total_number<S: Scalar>(sites: usize) -> Result<Operator<S>> {
    let dim = full_dim(sites)?;
    let diag = (0..dim)
        .map(|idx| S::from_frac(total_number(idx) as i64, 1))
        .collect();
    Ok(Operator::new(
        full_tag(sites),
        (1..=sites).collect(),
        SparseMatrix::from_diagonal(diag),
    ))
}

/// Parafermion `γ_a`, `1 ≤ a ≤ 2L`, assembled from Fock parafermions.
pub fn build_parafermion<S: Scalar>(sites: usize, index: usize) -> Result<Operator<S>> {
    if index == 0 || index > 2 * sites {
        return Err(Error::IndexOutOfRange {
            index,
            max: 2 * sites,
        });
    }
    let site = index.div_ceil(2);
    let c = build_fock_annihilator::<S>(sites, site)?;
    let cd2 = c.adjoint().pow(2);
    if index % 2 == 1 {
        Ok((&c + &cd2).scale(&S::omega_pow(1)))
    } else {
        let wn = build_omega_number::<S>(sites, site, 1)?;
        Ok(&(&c * &wn) + &cd2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Clock {
    Sigma,
    Tau,
}

/// σ_j or τ_j on the clock basis.
pub fn build_clock<S: Scalar>(sites: usize, site: usize, which: Clock) -> Result<Operator<S>> {
    check_site(sites, site)?;
    let w = site_weight(sites, site);
    let tag = BasisTag::Clock { sites };
    match which {
        Clock::Sigma => monomial(tag, BTreeSet::from([site]), |idx| {
            let s = occupation(idx, sites, site) as usize;
            // |s⟩ → |s − 1 mod 3⟩
            let t = (s + 2) % 3;
            Some((idx - s * w + t * w, S::one()))
        }),
        Clock::Tau => monomial(tag, BTreeSet::from([site]), |idx| {
            Some((idx, S::omega_pow(occupation(idx, sites, site) as i64)))
        }),
    }
}

/// Fradkin–Kadanoff image of `γ_a` in the clock basis.
pub fn fradkin_kadanoff<S: Scalar>(sites: usize, index: usize) -> Result<Operator<S>> {
    if index == 0 || index > 2 * sites {
        return Err(Error::IndexOutOfRange {
            index,
            max: 2 * sites,
        });
    }
    let site = index.div_ceil(2);
    let tag = BasisTag::Clock { sites };
    let dim = full_dim(sites)?;
    let mut op = Operator::<S>::identity(tag, dim);
    for k in 1..site {
        op = &op * &build_clock::<S>(sites, k, Clock::Tau)?;
    }
    op = &op * &build_clock::<S>(sites, site, Clock::Sigma)?;
    if index.is_multiple_of(2) {
        op = (&op * &build_clock::<S>(sites, site, Clock::Tau)?).scale(&S::omega_pow(1));
    }
    Ok(op)
}

/// Unitary `V` taking clock states to occupation states:
/// `V|s_1…s_L⟩ = Π_j ω^{−(2j−1) s_j} |n_j = s_j + 2 mod 3⟩`.
///
/// With this choice `V γ^{FK} V† = γ^{Fock}` for every parafermion.
pub fn clock_to_fock<S: Scalar>(sites: usize) -> Result<SparseMatrix<S>> {
    let dim = full_dim(sites)?;
    Ok(SparseMatrix::from_columns(dim, |idx| {
        let mut out = 0usize;
        let mut phase = 0i64;
        for j in 1..=sites {
            let s = occupation(idx, sites, j) as usize;
            out = out * 3 + (s + 2) % 3;
            phase -= (2 * j as i64 - 1) * s as i64;
        }
        vec![(out, S::omega_pow(phase))]
    }))
}

/// Maps a clock-basis operator into the occupation basis.
pub fn to_fock<S: Scalar>(op: &Operator<S>) -> Result<Operator<S>> {
    let sites = op.sites();
    if op.tag() != (BasisTag::Clock { sites }) {
        return Err(Error::BasisMismatch {
            left: op.tag().to_string(),
            right: format!("clock(L={sites})"),
        });
    }
    let v = clock_to_fock::<S>(sites)?;
    let m = v.mul(op.matrix()).mul(&v.adjoint());
    Ok(Operator::new(full_tag(sites), op.support().clone(), m))
}

/// Maps an occupation-basis operator into the clock basis.
pub fn to_clock<S: Scalar>(op: &Operator<S>) -> Result<Operator<S>> {
    let sites = op.sites();
    if op.tag() != full_tag(sites) {
        return Err(Error::BasisMismatch {
            left: op.tag().to_string(),
            right: format!("full(L={sites})"),
        });
    }
    let v = clock_to_fock::<S>(sites)?;
    let m = v.adjoint().mul(op.matrix()).mul(&v);
    Ok(Operator::new(
        BasisTag::Clock { sites },
        op.support().clone(),
        m,
    ))
}

/// ℤ₃ generator `Q = Π_j τ_j†`, returned in the clock basis.
pub fn build_charge_clock<S: Scalar>(sites: usize) -> Result<Operator<S>> {
    let dim = full_dim(sites)?;
    let mut q = Operator::<S>::identity(BasisTag::Clock { sites }, dim);
    for j in 1..=sites {
        q = &q * &build_clock::<S>(sites, j, Clock::Tau)?.adjoint();
    }
    Ok(q)
}

/// `Z_φ = e^{φ N / 3}` on the full occupation basis.
pub fn build_z(sites: usize, phi: f64) -> Result<LinOp> {
    if !phi.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "phi must be finite, got {phi}"
        )));
    }
    let dim = full_dim(sites)?;
    let diag = (0..dim)
        .map(|idx| Complex64::new((phi * total_number(idx) as f64 / 3.0).exp(), 0.0))
        .collect();
    Ok(Operator::new(
        full_tag(sites),
        (1..=sites).collect(),
        SparseMatrix::from_diagonal(diag),
    ))
}

/// Sector bases for all three charges.
pub fn all_sectors(sites: usize) -> Result<[SectorBasis; 3]> {
    Ok([
        enumerate_sector(sites, 0)?,
        enumerate_sector(sites, 1)?,
        enumerate_sector(sites, 2)?,
    ])
}

/// One family of operator identities checked in exact ℚ(ω) arithmetic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub cases: usize,
    pub failures: Vec<String>,
}

impl IdentityCheck {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            cases: 0,
            failures: Vec::new(),
        }
    }

    fn record(&mut self, holds: bool, label: impl FnOnce() -> String) {
        self.cases += 1;
        if !holds {
            self.failures.push(label());
        }
    }

    pub fn passed(&self) -> bool {
        self.cases > 0 && self.failures.is_empty()
    }
}

/// Checks the Fock, parafermion and clock identities exactly for every chain
/// length `1..=max_sites`.
pub fn algebra_suite(max_sites: usize) -> Result<Vec<IdentityCheck>> {
    use crate::algebra::Cyclotomic;
    type X = Operator<Cyclotomic>;
    if max_sites == 0 || max_sites > 5 {
        return Err(Error::InvalidParameter(format!(
            "max_sites must lie in 1..=5, got {max_sites}"
        )));
    }
    let w = Cyclotomic::omega_pow;
    let frac = Cyclotomic::from_frac;
    let same = |a: &X, b: &X| a.matrix() == b.matrix();

    let mut cube = IdentityCheck::new("C_j^3 = 0");
    let mut exchange = IdentityCheck::new("C_j C_k = w C_k C_j (j<k)");
    let mut number = IdentityCheck::new(
        "N_j = C^dag C + C^dag2 C^2 = 1 + [(w*-w) g^dag_{2j-1} g_{2j} + h.c.]/3",
    );
    let mut para = IdentityCheck::new("g^3 = 1, g^dag = g^2, g_a g_b = w g_b g_a (a<b)");
    let mut inversion =
        IdentityCheck::new("C, C^dag, C^2, C^dag2, C^dag C, C^dag2 C^2 in terms of g");
    let mut fk = IdentityCheck::new("Fradkin-Kadanoff strings equal the Fock parafermions");
    let mut clock = IdentityCheck::new("sigma tau = w tau sigma, sigma^3 = tau^3 = 1");
    let mut charge = IdentityCheck::new("[Q, N_j] = 0");

    for l in 1..=max_sites {
        let id = X::identity(BasisTag::Full { sites: l }, full_dim(l)?);
        let c: Vec<X> = (1..=l)
            .map(|j| build_fock_annihilator(l, j))
            .collect::<Result<_>>()?;
        let g: Vec<X> = (1..=2 * l)
            .map(|a| build_parafermion(l, a))
            .collect::<Result<_>>()?;
        for j in 1..=l {
            let cc = &c[j - 1];
            cube.record(cc.pow(3).is_zero(), || format!("L={l} j={j}"));
            for k in j + 1..=l {
                let lhs = cc.try_mul(&c[k - 1])?;
                let rhs = c[k - 1].try_mul(cc)?.scale(&w(1));
                exchange.record(same(&lhs, &rhs), || format!("L={l} j={j} k={k}"));
            }

            let cd = cc.adjoint();
            let n = build_number::<Cyclotomic>(l, j)?;
            let from_c = cd.try_mul(cc)?.try_add(&cd.pow(2).try_mul(&cc.pow(2))?)?;
            let g1 = &g[2 * j - 2];
            let g2 = &g[2 * j - 1];
            let (g1d, g2d) = (g1.adjoint(), g2.adjoint());
            let bil = g1d.try_mul(g2)?.scale(&(w(2) - w(1)));
            let from_g = id.try_add(&bil.try_add(&bil.adjoint())?.scale(&frac(1, 3)))?;
            number.record(same(&n, &from_c) && same(&n, &from_g), || {
                format!("L={l} j={j}")
            });

            let g1g2d = g1d.try_mul(&g2d)?;
            let g2g1 = g2.try_mul(g1)?;
            let c_from = g1
                .scale(&(frac(2, 3) * w(2)))
                .try_sub(&g2.scale(&frac(1, 3)))?
                .try_sub(&g1g2d.scale(&(frac(1, 3) * w(2))))?;
            let cd_from = g1d
                .scale(&(frac(2, 3) * w(1)))
                .try_sub(&g2d.scale(&frac(1, 3)))?
                .try_sub(&g2g1.scale(&(frac(1, 3) * w(1))))?;
            let c2_from = g1d
                .scale(&(frac(1, 3) * w(1)))
                .try_add(&g2d.scale(&frac(1, 3)))?
                .try_add(&g2g1.scale(&(frac(1, 3) * w(1))))?;
            let cd2_from = g1
                .scale(&(frac(1, 3) * w(2)))
                .try_add(&g2.scale(&frac(1, 3)))?
                .try_add(&g1g2d.scale(&(frac(1, 3) * w(2))))?;
            let g1d_g2 = g1d.try_mul(g2)?;
            let g2d_g1 = g2d.try_mul(g1)?;
            let cdc = id
                .scale(&frac(2, 3))
                .try_sub(&g1d_g2.scale(&(frac(1, 3) * w(1))))?
                .try_sub(&g2d_g1.scale(&(frac(1, 3) * w(2))))?;
            let cd2c2 = id
                .scale(&frac(1, 3))
                .try_add(&g1d_g2.scale(&(frac(1, 3) * w(2))))?
                .try_add(&g2d_g1.scale(&(frac(1, 3) * w(1))))?;
            let holds = same(&c_from, cc)
                && same(&cd_from, &cd)
                && same(&c2_from, &cc.pow(2))
                && same(&cd2_from, &cd.pow(2))
                && same(&cdc, &cd.try_mul(cc)?)
                && same(&cd2c2, &cd.pow(2).try_mul(&cc.pow(2))?);
            inversion.record(holds, || format!("L={l} j={j}"));

            let s = build_clock::<Cyclotomic>(l, j, Clock::Sigma)?;
            let t = build_clock::<Cyclotomic>(l, j, Clock::Tau)?;
            let holds = same(&s.try_mul(&t)?, &t.try_mul(&s)?.scale(&w(1)))
                && same(&s.pow(3), &id_clock(l)?)
                && same(&t.pow(3), &id_clock(l)?);
            clock.record(holds, || format!("L={l} j={j}"));
        }
        for a in 1..=2 * l {
            let ga = &g[a - 1];
            let mut holds = same(&ga.pow(3), &id) && ga.adjoint() == ga.pow(2);
            for b in a + 1..=2 * l {
                let gb = &g[b - 1];
                holds &= same(&ga.try_mul(gb)?, &gb.try_mul(ga)?.scale(&w(1)));
            }
            para.record(holds, || format!("L={l} a={a}"));
            let f = to_fock(&fradkin_kadanoff::<Cyclotomic>(l, a)?)?;
            fk.record(same(&f, ga), || format!("L={l} a={a}"));
        }
        let q = to_fock(&build_charge_clock::<Cyclotomic>(l)?)?;
        for j in 1..=l {
            let n = build_number::<Cyclotomic>(l, j)?;
            charge.record(q.commutator(&n)?.is_zero(), || format!("L={l} j={j}"));
        }
    }
    Ok(vec![
        cube, exchange, number, para, inversion, fk, clock, charge,
    ])
}

fn id_clock(sites: usize) -> Result<Operator<crate::algebra::Cyclotomic>> {
    Ok(Operator::identity(
        BasisTag::Clock { sites },
        full_dim(sites)?,
    ))
}
