//! Occupation-number basis of the chain.
//!
//! A Fock state is a string `n_1 … n_L` with `n_j ∈ {0, 1, 2}`. Full-space
//! indices read the string as a base-3 number with site 1 most significant,
//! so numeric order of indices is lexicographic order of occupation strings.

use crate::error::{Error, Result};

/// Local Hilbert-space dimension.
pub const LOCAL_DIM: usize = 3;

/// 3^L, or an error if it does not fit in `usize`.
pub fn full_dim(sites: usize) -> Result<usize> {
    LOCAL_DIM
        .checked_pow(sites as u32)
        .ok_or(Error::DimensionCap {
            sites,
            cap: usize::MAX,
        })
}

/// Weight 3^{L−j} of (1-based) site `j` inside a full-space index.
#[inline]
pub fn site_weight(sites: usize, site: usize) -> usize {
    LOCAL_DIM.pow((sites - site) as u32)
}

/// Occupation of (1-based) `site` in full-space index `idx`.
#[inline]
pub fn occupation(idx: usize, sites: usize, site: usize) -> u8 {
    ((idx / site_weight(sites, site)) % LOCAL_DIM) as u8
}

/// Total particle number of a full-space index.
pub fn total_number(mut idx: usize) -> usize {
    let mut n = 0;
    while idx > 0 {
        n += idx % LOCAL_DIM;
        idx /= LOCAL_DIM;
    }
    n
}

pub fn check_charge(q: u8) -> Result<()> {
    if q < 3 {
        Ok(())
    } else {
        Err(Error::InvalidCharge(q))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FockState {
    occupations: Vec<u8>,
}

impl FockState {
    pub fn new(occupations: Vec<u8>) -> Result<Self> {
        if occupations.is_empty() {
            return Err(Error::InvalidParameter(
                "a Fock state needs at least one site".into(),
            ));
        }
        if let Some(&bad) = occupations.iter().find(|&&n| n > 2) {
            return Err(Error::InvalidParameter(format!(
                "occupation {bad} outside {{0,1,2}}"
            )));
        }
        Ok(Self { occupations })
    }

    pub fn from_index(sites: usize, idx: usize) -> Self {
        let occupations = (1..=sites).map(|j| occupation(idx, sites, j)).collect();
        Self { occupations }
    }

    pub fn sites(&self) -> usize {
        self.occupations.len()
    }

    pub fn occupations(&self) -> &[u8] {
        &self.occupations
    }

    /// N = Σ_j n_j.
    pub fn total(&self) -> usize {
        self.occupations.iter().map(|&n| n as usize).sum()
    }

    pub fn charge(&self) -> u8 {
        (self.total() % 3) as u8
    }

    pub fn index(&self) -> usize {
        self.occupations
            .iter()
            .fold(0, |acc, &n| acc * LOCAL_DIM + n as usize)
    }
}

/// All Fock states of one ℤ₃ charge sector, in lexicographic order.
#[derive(Clone, Debug)]
pub struct SectorBasis {
    sites: usize,
    charge: u8,
    states: Vec<usize>,
    position: Vec<u32>,
}

const ABSENT: u32 = u32::MAX;

pub fn enumerate_sector(sites: usize, charge: u8) -> Result<SectorBasis> {
    check_charge(charge)?;
    if sites == 0 {
        return Err(Error::InvalidParameter(
            "chain needs at least one site".into(),
        ));
    }
    let dim = full_dim(sites)?;
    let mut states = Vec::with_capacity(dim / 3 + 1);
    let mut position = vec![ABSENT; dim];
    for idx in 0..dim {
        if total_number(idx) % 3 == charge as usize {
            position[idx] = states.len() as u32;
            states.push(idx);
        }
    }
    Ok(SectorBasis {
        sites,
        charge,
        states,
        position,
    })
}

impl SectorBasis {
    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn charge(&self) -> u8 {
        self.charge
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn full_indices(&self) -> &[usize] {
        &self.states
    }

    pub fn full_index(&self, k: usize) -> usize {
        self.states[k]
    }

    pub fn state(&self, k: usize) -> FockState {
        FockState::from_index(self.sites, self.states[k])
    }

    pub fn position_of(&self, full_idx: usize) -> Option<usize> {
        match self.position.get(full_idx) {
            Some(&p) if p != ABSENT => Some(p as usize),
            _ => None,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = FockState> + '_ {
        self.states
            .iter()
            .map(|&i| FockState::from_index(self.sites, i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use itertools::Itertools;

    #[test]
    fn single_site_neutral_sector() {
        let b = enumerate_sector(1, 0).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b.state(0).occupations(), &[0]);
    }

    #[test]
    fn two_site_neutral_sector() {
        // brute force: filter {0,1,2}^2 by N mod 3 = 0
        let expect: Vec<Vec<u8>> = (0..2)
            .map(|_| 0u8..3)
            .multi_cartesian_product()
            .filter(|v| v.iter().map(|&x| x as usize).sum::<usize>() % 3 == 0)
            .collect();
        let b = enumerate_sector(2, 0).unwrap();
        let got: Vec<Vec<u8>> = b.iter().map(|s| s.occupations().to_vec()).collect();
        assert_eq!(got, expect);
        assert_eq!(got, vec![vec![0, 0], vec![1, 2], vec![2, 1]]);
    }

    #[test]
    fn sector_sizes_brute_force() {
        for l in 1..=8 {
            let sizes: Vec<usize> = (0..3)
                .map(|q| enumerate_sector(l, q).unwrap().len())
                .collect();
            let mut brute = [0usize; 3];
            for occ in (0..l).map(|_| 0u8..3).multi_cartesian_product() {
                brute[occ.iter().map(|&x| x as usize).sum::<usize>() % 3] += 1;
            }
            assert_eq!(sizes, brute.to_vec(), "L={l}");
            assert_eq!(sizes.iter().sum::<usize>(), 3usize.pow(l as u32));
            let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
            assert!(hi - lo <= 1, "L={l}: {sizes:?}");
        }
    }

    #[test]
    fn l5_sizes_sum() {
        let total: usize = (0..3).map(|q| enumerate_sector(5, q).unwrap().len()).sum();
        assert_eq!(total, 243);
    }

    #[test]
    fn index_is_bijective() {
        let b = enumerate_sector(4, 2).unwrap();
        for (k, s) in b.iter().enumerate() {
            assert_eq!(s.charge(), 2);
            assert_eq!(b.position_of(s.index()), Some(k));
        }
        assert_eq!(b.position_of(0), None);
    }

    #[test]
    fn invalid_charge_rejected() {
        assert!(matches!(
            enumerate_sector(3, 3),
            Err(Error::InvalidCharge(3))
        ));
    }

    #[test]
    fn fock_state_roundtrip() {
        let s = FockState::new(vec![2, 0, 1, 1]).unwrap();
        assert_eq!(s.total(), 4);
        assert_eq!(s.charge(), 1);
        assert_eq!(FockState::from_index(4, s.index()), s);
        assert!(FockState::new(vec![3]).is_err());
    }
}
