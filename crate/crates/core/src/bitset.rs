//! Fixed-capacity bit sets over dense ids.

use serde::{Deserialize, Serialize};

#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BitSet {
    len: usize,
    words: Vec<u64>,
}

/// Subset of the point ids of a plane.
pub type PointSet = BitSet;
/// Subset of the line ids of a plane.
pub type LineSet = BitSet;

impl std::fmt::Debug for BitSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl BitSet {
    pub fn new(len: usize) -> Self {
        BitSet {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn full(len: usize) -> Self {
        let mut s = Self::new(len);
        for i in 0..len {
            s.insert(i);
        }
        s
    }

    pub fn from_ids<I: IntoIterator<Item = usize>>(len: usize, ids: I) -> Self {
        let mut s = Self::new(len);
        for i in ids {
            s.insert(i);
        }
        s
    }

    /// Builds a set from a 128-bit mask; bits at or above `len` are dropped.
    pub fn from_mask(len: usize, mask: u128) -> Self {
        let mut s = Self::new(len);
        for i in 0..len.min(128) {
            if mask >> i & 1 == 1 {
                s.insert(i);
            }
        }
        s
    }

    /// The set as a 128-bit mask, if the universe fits.
    pub fn to_mask(&self) -> Option<u128> {
        if self.len > 128 {
            return None;
        }
        let lo = self.words.first().copied().unwrap_or(0) as u128;
        let hi = self.words.get(1).copied().unwrap_or(0) as u128;
        Some(lo | hi << 64)
    }

    /// Size of the universe.
    pub fn capacity(&self) -> usize {
        self.len
    }

    pub fn insert(&mut self, i: usize) {
        assert!(i < self.len, "id {i} out of range 0..{}", self.len);
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn remove(&mut self, i: usize) {
        if i < self.len {
            self.words[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.len && self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + b)
            })
        })
    }

    pub fn union_with(&mut self, other: &BitSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn intersect_with(&mut self, other: &BitSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    pub fn difference_with(&mut self, other: &BitSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= !b;
        }
    }

    pub fn intersects(&self, other: &BitSet) -> bool {
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    pub fn intersection_count(&self, other: &BitSet) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    pub fn is_subset(&self, other: &BitSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn complement(&self) -> BitSet {
        let mut out = BitSet::full(self.len);
        out.difference_with(self);
        out
    }

    /// Lowercase hex, least significant id first within each byte pair, for
    /// stable text dumps. Byte `j` carries ids `8j..8j+8`.
    pub fn to_hex(&self) -> String {
        let nbytes = self.len.div_ceil(8);
        (0..nbytes)
            .map(|j| {
                let byte = (self.words[j / 8] >> ((j % 8) * 8)) as u8;
                format!("{byte:02x}")
            })
            .collect()
    }

    pub fn from_hex(len: usize, hex: &str) -> Option<BitSet> {
        let nbytes = len.div_ceil(8);
        if hex.len() != 2 * nbytes {
            return None;
        }
        let mut s = BitSet::new(len);
        for j in 0..nbytes {
            let byte = u8::from_str_radix(hex.get(2 * j..2 * j + 2)?, 16).ok()?;
            s.words[j / 8] |= (byte as u64) << ((j % 8) * 8);
        }
        if s.words.last().is_some_and(|&w| {
            let used = len % 64;
            used != 0 && w >> used != 0
        }) {
            return None;
        }
        Some(s)
    }
}
