//! Sparse states keyed by the nonzero site digits.
//!
//! Every history state of a compiled clock Hamiltonian has a single train in
//! a register that can hold hundreds of sites, so a configuration is stored as
//! the sorted list of `(site, digit)` pairs whose digit is nonzero.

use std::collections::BTreeMap;

use crate::linalg::{C64, ZERO};
use crate::model::Register;

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Config(Vec<(u32, u8)>);

impl Config {
    pub fn new() -> Self {
        Config(Vec::new())
    }

    /// Builds a configuration from arbitrary `(site, digit)` pairs; zero
    /// digits are dropped and later pairs win.
    pub fn from_pairs<I: IntoIterator<Item = (usize, u8)>>(pairs: I) -> Self {
        let mut c = Config::new();
        for (s, d) in pairs {
            c.set(s, d);
        }
        c
    }

    pub fn get(&self, site: usize) -> u8 {
        match self.0.binary_search_by_key(&(site as u32), |&(s, _)| s) {
            Ok(i) => self.0[i].1,
            Err(_) => 0,
        }
    }

    pub fn set(&mut self, site: usize, digit: u8) {
        let key = site as u32;
        match self.0.binary_search_by_key(&key, |&(s, _)| s) {
            Ok(i) => {
                if digit == 0 {
                    self.0.remove(i);
                } else {
                    self.0[i].1 = digit;
                }
            }
            Err(i) => {
                if digit != 0 {
                    self.0.insert(i, (key, digit));
                }
            }
        }
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, u8)> + '_ {
        self.0.iter().map(|&(s, d)| (s as usize, d))
    }

    /// Mixed-radix index, site 0 most significant.
    pub fn to_index(&self, register: &Register) -> usize {
        let strides = register.strides();
        self.pairs().map(|(s, d)| strides[s] * d as usize).sum()
    }

    pub fn from_index(mut index: usize, register: &Register) -> Self {
        let mut pairs = Vec::new();
        for site in register.sites().iter().rev() {
            let d = index % site.dim;
            index /= site.dim;
            if d != 0 {
                pairs.push((site.id as u32, d as u8));
            }
        }
        pairs.reverse();
        Config(pairs)
    }
}

/// A sparse vector over the full register.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseState {
    pub entries: BTreeMap<Config, C64>,
}

impl SparseState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, config: Config, amp: C64) {
        if amp == ZERO {
            return;
        }
        *self.entries.entry(config).or_insert(ZERO) += amp;
    }

    pub fn get(&self, config: &Config) -> C64 {
        self.entries.get(config).copied().unwrap_or(ZERO)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.entries
            .values()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// <self|other>
    pub fn inner(&self, other: &SparseState) -> C64 {
        let (small, large, conj_small) = if self.len() <= other.len() {
            (self, other, true)
        } else {
            (other, self, false)
        };
        let mut acc = ZERO;
        for (k, a) in &small.entries {
            if let Some(b) = large.entries.get(k) {
                acc += if conj_small { a.conj() * b } else { b.conj() * a };
            }
        }
        acc
    }

    pub fn add_scaled(&mut self, other: &SparseState, scale: C64) {
        for (k, a) in &other.entries {
            *self.entries.entry(k.clone()).or_insert(ZERO) += scale * a;
        }
    }

    pub fn scale(&mut self, s: C64) {
        for a in self.entries.values_mut() {
            *a *= s;
        }
    }

    pub fn to_dense(&self, register: &Register) -> Vec<C64> {
        let dim = register.total_dim().expect("register dimension overflow");
        let mut v = vec![ZERO; dim];
        for (k, a) in &self.entries {
            v[k.to_index(register)] += a;
        }
        v
    }

    pub fn from_dense(v: &[C64], register: &Register, tol: f64) -> Self {
        let mut s = SparseState::new();
        for (i, a) in v.iter().enumerate() {
            if a.norm() > tol {
                s.entries.insert(Config::from_index(i, register), *a);
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Register, SiteRole};

    #[test]
    fn config_set_get() {
        let mut c = Config::new();
        c.set(5, 1);
        c.set(2, 2);
        c.set(9, 0);
        assert_eq!(c.pairs().collect::<Vec<_>>(), vec![(2, 2), (5, 1)]);
        assert_eq!(c.get(5), 1);
        assert_eq!(c.get(3), 0);
        c.set(5, 0);
        assert_eq!(c.get(5), 0);
    }

    #[test]
    fn index_round_trip_mixed_radix() {
        let mut r = Register::new();
        r.push(2, SiteRole::Work, "q0");
        r.push(3, SiteRole::GadgetQutrit, "u1");
        r.push(2, SiteRole::Station, "c_0");
        for i in 0..12 {
            let c = Config::from_index(i, &r);
            assert_eq!(c.to_index(&r), i);
        }
        // site 0 most significant
        assert_eq!(Config::from_pairs([(0, 1)]).to_index(&r), 6);
        assert_eq!(Config::from_pairs([(1, 2)]).to_index(&r), 4);
    }
}
