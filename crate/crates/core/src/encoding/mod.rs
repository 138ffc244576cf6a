//! Binary chromosome for storage placements.
//!
//! A chromosome holds `units` site genes followed by `units` size genes,
//! each a big-endian unsigned integer. Site genes are reduced modulo the
//! number of candidate nodes and then passed through [`decode_sites`], which
//! turns any gene vector into pairwise-distinct sites.

mod combinatorics;
mod decode;

use std::fmt;
use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use combinatorics::{scientific, search_space_size};
pub use decode::{decode, decode_sites, decode_sites_with_stats, decode_sizes, DecodeStats};

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum EncodingError {
    #[error("cannot place {units} units on {candidates} candidate nodes")]
    TooManyUnits { units: usize, candidates: usize },
    #[error("gene {gene} is outside [0, {candidates})")]
    GeneOutOfRange { gene: usize, candidates: usize },
    #[error("invalid layout: {0}")]
    Layout(String),
    #[error("chromosome has {found} bits, layout needs {expected}")]
    Length { expected: usize, found: usize },
    #[error("malformed chromosome dump: {0}")]
    Hex(String),
    #[error("invalid size range: {0}")]
    SizeRange(String),
}

/// Bit layout: `units * (site_bits + size_bits)` bits, all site genes first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Layout {
    pub units: usize,
    pub site_bits: usize,
    pub size_bits: usize,
}

impl Default for Layout {
    /// Five units with 6-bit site genes and 10-bit size genes: 80 bits.
    fn default() -> Self {
        Layout {
            units: 5,
            site_bits: 6,
            size_bits: 10,
        }
    }
}

impl Layout {
    pub fn new(units: usize, site_bits: usize, size_bits: usize) -> Result<Self, EncodingError> {
        let layout = Layout {
            units,
            site_bits,
            size_bits,
        };
        layout.validate()?;
        Ok(layout)
    }

    pub fn validate(&self) -> Result<(), EncodingError> {
        if self.units == 0 {
            return Err(EncodingError::Layout("at least one unit is required".into()));
        }
        for (name, bits) in [("site_bits", self.site_bits), ("size_bits", self.size_bits)] {
            if !(1..=32).contains(&bits) {
                return Err(EncodingError::Layout(format!("{name} must be in 1..=32, got {bits}")));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.units * (self.site_bits + self.size_bits)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn site_segment(&self) -> Range<usize> {
        0..self.units * self.site_bits
    }

    pub fn size_segment(&self) -> Range<usize> {
        self.units * self.site_bits..self.len()
    }

    /// Checks that every one of `candidates` nodes is addressable.
    pub fn check_candidates(&self, candidates: usize) -> Result<(), EncodingError> {
        if self.units > candidates {
            return Err(EncodingError::TooManyUnits {
                units: self.units,
                candidates,
            });
        }
        if (candidates as u64) > (1u64 << self.site_bits) {
            return Err(EncodingError::Layout(format!(
                "{} site bits cannot address {} candidate nodes",
                self.site_bits, candidates
            )));
        }
        Ok(())
    }
}

/// Capacity bounds in kWh for decoded size genes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeRange {
    pub min_kwh: u32,
    pub max_kwh: u32,
}

impl Default for SizeRange {
    fn default() -> Self {
        SizeRange {
            min_kwh: 100,
            max_kwh: 1000,
        }
    }
}

impl SizeRange {
    pub fn new(min_kwh: u32, max_kwh: u32) -> Result<Self, EncodingError> {
        if min_kwh > max_kwh {
            return Err(EncodingError::SizeRange(format!("{min_kwh} > {max_kwh}")));
        }
        Ok(SizeRange { min_kwh, max_kwh })
    }
}

/// Decoded chromosome: distinct candidate indices with capacities.
///
/// Plans produced by [`decode`] list units in ascending site order, so two
/// chromosomes that place the same units compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PlacementPlan {
    pub sites: Vec<usize>,
    pub sizes_kwh: Vec<u32>,
}

impl PlacementPlan {
    pub fn units(&self) -> usize {
        self.sites.len()
    }

    /// Sorts units by site index.
    pub fn canonical(mut self) -> Self {
        let mut pairs: Vec<(usize, u32)> = self.sites.iter().copied().zip(self.sizes_kwh.iter().copied()).collect();
        pairs.sort_unstable();
        self.sites = pairs.iter().map(|p| p.0).collect();
        self.sizes_kwh = pairs.iter().map(|p| p.1).collect();
        self
    }

    pub fn has_distinct_sites(&self) -> bool {
        let mut s = self.sites.clone();
        s.sort_unstable();
        s.windows(2).all(|w| w[0] != w[1])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Chromosome {
    bits: Vec<bool>,
    layout: Layout,
}

impl Chromosome {
    pub fn new(layout: Layout, bits: Vec<bool>) -> Result<Self, EncodingError> {
        layout.validate()?;
        if bits.len() != layout.len() {
            return Err(EncodingError::Length {
                expected: layout.len(),
                found: bits.len(),
            });
        }
        Ok(Chromosome { bits, layout })
    }

    pub fn zeros(layout: Layout) -> Self {
        Chromosome {
            bits: vec![false; layout.len()],
            layout,
        }
    }

    pub fn random<R: Rng + ?Sized>(layout: Layout, rng: &mut R) -> Self {
        Chromosome {
            bits: (0..layout.len()).map(|_| rng.gen::<bool>()).collect(),
            layout,
        }
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn flip(&mut self, i: usize) {
        self.bits[i] = !self.bits[i];
    }

    pub fn hamming(&self, other: &Chromosome) -> usize {
        self.bits.iter().zip(&other.bits).filter(|(a, b)| a != b).count()
    }

    fn genes(&self, range: Range<usize>, width: usize) -> Vec<u64> {
        self.bits[range]
            .chunks_exact(width)
            .map(|chunk| chunk.iter().fold(0u64, |acc, &b| (acc << 1) | u64::from(b)))
            .collect()
    }

    pub fn site_genes(&self) -> Vec<u64> {
        self.genes(self.layout.site_segment(), self.layout.site_bits)
    }

    pub fn size_genes(&self) -> Vec<u64> {
        self.genes(self.layout.size_segment(), self.layout.size_bits)
    }

    /// Debug dump `<units>x<site_bits>+<size_bits>:<hex>`, bits packed
    /// most-significant first and the last byte zero-padded.
    pub fn to_hex(&self) -> String {
        let mut hex = String::with_capacity(self.bits.len() / 4 + 1);
        for chunk in self.bits.chunks(8) {
            let byte = chunk
                .iter()
                .enumerate()
                .fold(0u8, |acc, (i, &b)| acc | (u8::from(b) << (7 - i)));
            hex.push_str(&format!("{byte:02x}"));
        }
        format!(
            "{}x{}+{}:{}",
            self.layout.units, self.layout.site_bits, self.layout.size_bits, hex
        )
    }

    pub fn from_hex(dump: &str) -> Result<Self, EncodingError> {
        let bad = |m: &str| EncodingError::Hex(format!("{m}: `{dump}`"));
        let (head, hex) = dump.split_once(':').ok_or_else(|| bad("missing ':'"))?;
        let (units, bits) = head.split_once('x').ok_or_else(|| bad("missing 'x'"))?;
        let (site, size) = bits.split_once('+').ok_or_else(|| bad("missing '+'"))?;
        let parse = |s: &str| s.parse::<usize>().map_err(|_| bad("bad layout number"));
        let layout = Layout::new(parse(units)?, parse(site)?, parse(size)?)?;
        if hex.len() != layout.len().div_ceil(8) * 2 {
            return Err(bad("wrong hex length"));
        }
        let mut out = Vec::with_capacity(layout.len());
        for i in (0..hex.len()).step_by(2) {
            let byte = u8::from_str_radix(&hex[i..i + 2], 16).map_err(|_| bad("bad hex digit"))?;
            for k in 0..8 {
                out.push(byte & (1 << (7 - k)) != 0);
            }
        }
        if out[layout.len()..].iter().any(|&b| b) {
            return Err(bad("padding bits set"));
        }
        out.truncate(layout.len());
        Chromosome::new(layout, out)
    }
}

impl fmt::Display for Chromosome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn default_layout_is_eighty_bits() {
        let l = Layout::default();
        assert_eq!(l.len(), 80);
        assert_eq!(l.site_segment().len(), 30);
        assert_eq!(l.size_segment().len(), 50);
    }

    #[test]
    fn genes_are_big_endian() {
        let layout = Layout::new(1, 3, 4).unwrap();
        let bits = [true, false, true, false, false, true, true].to_vec();
        let c = Chromosome::new(layout, bits).unwrap();
        assert_eq!(c.site_genes(), vec![5]);
        assert_eq!(c.size_genes(), vec![3]);
    }

    #[test]
    fn hex_dump_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let c = Chromosome::random(Layout::default(), &mut rng);
            let dump = c.to_hex();
            assert!(dump.starts_with("5x6+10:"));
            assert_eq!(Chromosome::from_hex(&dump).unwrap(), c);
        }
        let odd = Chromosome::new(Layout::new(1, 3, 2).unwrap(), vec![true; 5]).unwrap();
        assert_eq!(odd.to_hex(), "1x3+2:f8");
        assert_eq!(Chromosome::from_hex("1x3+2:f8").unwrap(), odd);
        assert!(Chromosome::from_hex("1x3+2:f9").is_err());
        assert!(Chromosome::from_hex("1x3:f8").is_err());
    }

    #[test]
    fn candidate_addressing() {
        let l = Layout::default();
        assert!(l.check_candidates(56).is_ok());
        assert!(l.check_candidates(64).is_ok());
        assert!(l.check_candidates(65).is_err());
        assert!(l.check_candidates(4).is_err());
    }

    #[test]
    fn canonical_sorts_units_by_site() {
        let p = PlacementPlan {
            sites: vec![4, 1, 3],
            sizes_kwh: vec![100, 200, 300],
        }
        .canonical();
        assert_eq!(p.sites, vec![1, 3, 4]);
        assert_eq!(p.sizes_kwh, vec![200, 300, 100]);
    }
}
