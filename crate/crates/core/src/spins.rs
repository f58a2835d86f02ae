//! Packed ±1 configurations.

use std::fmt;

/// Spins on `len` sites, one bit per site (bit set means `+1`).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SpinConfiguration {
    words: Vec<u64>,
    len: usize,
}

impl SpinConfiguration {
    pub fn all_minus(len: usize) -> Self {
        SpinConfiguration {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn all_plus(len: usize) -> Self {
        let mut c = Self::all_minus(len);
        for x in 0..len {
            c.set(x, 1);
        }
        c
    }

    /// Configuration whose bit pattern is `state` (needs `len <= 64`).
    pub fn from_state(state: u64, len: usize) -> Self {
        assert!(len <= 64, "single-word state holds at most 64 sites");
        let mask = if len == 64 {
            u64::MAX
        } else {
            (1u64 << len) - 1
        };
        SpinConfiguration {
            words: if len == 0 { vec![] } else { vec![state & mask] },
            len,
        }
    }

    /// The bit pattern as one word (needs `len <= 64`).
    pub fn state(&self) -> u64 {
        assert!(self.len <= 64, "single-word state holds at most 64 sites");
        self.words.first().copied().unwrap_or(0)
    }

    pub fn from_spins(spins: &[i8]) -> Self {
        let mut c = Self::all_minus(spins.len());
        for (x, &s) in spins.iter().enumerate() {
            c.set(x, s);
        }
        c
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// `+1` or `-1`.
    pub fn get(&self, x: usize) -> i8 {
        debug_assert!(x < self.len);
        if (self.words[x / 64] >> (x % 64)) & 1 == 1 {
            1
        } else {
            -1
        }
    }

    pub fn set(&mut self, x: usize, spin: i8) {
        debug_assert!(x < self.len);
        let bit = 1u64 << (x % 64);
        if spin > 0 {
            self.words[x / 64] |= bit;
        } else {
            self.words[x / 64] &= !bit;
        }
    }

    pub fn flip(&mut self, x: usize) {
        debug_assert!(x < self.len);
        self.words[x / 64] ^= 1u64 << (x % 64);
    }

    pub fn magnetization(&self) -> i64 {
        let plus: u32 = self.words.iter().map(|w| w.count_ones()).sum();
        2 * plus as i64 - self.len as i64
    }

    /// Pointwise `self <= other`.
    pub fn le(&self, other: &SpinConfiguration) -> bool {
        self.len == other.len
            && self
                .words
                .iter()
                .zip(&other.words)
                .all(|(a, b)| a & !b == 0)
    }

    pub fn hamming(&self, other: &SpinConfiguration) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    pub fn to_spins(&self) -> Vec<i8> {
        (0..self.len).map(|x| self.get(x)).collect()
    }
}

impl fmt::Debug for SpinConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = (0..self.len)
            .map(|x| if self.get(x) > 0 { '+' } else { '-' })
            .collect();
        write!(f, "SpinConfiguration({s})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_get_flip() {
        let mut c = SpinConfiguration::all_minus(70);
        c.set(65, 1);
        assert_eq!(c.get(65), 1);
        assert_eq!(c.magnetization(), -68);
        c.flip(65);
        assert_eq!(c, SpinConfiguration::all_minus(70));
        assert!(c.le(&SpinConfiguration::all_plus(70)));
        assert_eq!(c.hamming(&SpinConfiguration::all_plus(70)), 70);
    }

    #[test]
    fn state_round_trip() {
        let c = SpinConfiguration::from_state(0b1011, 4);
        assert_eq!(c.to_spins(), vec![1, 1, -1, 1]);
        assert_eq!(c.state(), 0b1011);
        assert_eq!(SpinConfiguration::from_spins(&c.to_spins()), c);
    }
}
