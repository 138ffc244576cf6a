use rand::Rng;

use super::{Chromosome, EncodingError, PlacementPlan, SizeRange};

/// Work done by one [`decode_sites_with_stats`] call.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DecodeStats {
    /// Neighbour distances added after a collision, over all units.
    pub extension_steps: usize,
    /// Single-step probes once extension gave up, over all units.
    pub probe_steps: usize,
    /// Replacement drawn for the last gene when every gene was equal.
    pub replaced_gene: Option<usize>,
}

impl DecodeStats {
    /// Worst-case step count for `units` units over `candidates` nodes: each
    /// unit tries at most `candidates` extensions and then probes at most
    /// `candidates - 1` times before reaching a free slot.
    pub fn bound(units: usize, candidates: usize) -> usize {
        units.saturating_sub(1) * (2 * candidates)
    }

    pub fn steps(&self) -> usize {
        self.extension_steps + self.probe_steps
    }
}

/// Maps site genes in `[0, n)` to `genes.len()` pairwise-distinct sites.
///
/// The first site is the first gene. Each later site starts at the clockwise
/// ring distance from the previous gene. On a collision the distances to
/// successive neighbours (wrapping to the first gene) are added in turn, and
/// after `n` such attempts the value is advanced one slot at a time.
pub fn decode_sites<R: Rng + ?Sized>(genes: &[usize], n: usize, rng: &mut R) -> Result<Vec<usize>, EncodingError> {
    decode_sites_with_stats(genes, n, rng).map(|(sites, _)| sites)
}

pub fn decode_sites_with_stats<R: Rng + ?Sized>(
    genes: &[usize],
    n: usize,
    rng: &mut R,
) -> Result<(Vec<usize>, DecodeStats), EncodingError> {
    let k = genes.len();
    if k == 0 || k > n {
        return Err(EncodingError::TooManyUnits { units: k, candidates: n });
    }
    if let Some(&gene) = genes.iter().find(|&&g| g >= n) {
        return Err(EncodingError::GeneOutOfRange { gene, candidates: n });
    }
    let mut stats = DecodeStats::default();
    let mut g = genes.to_vec();
    if k >= 2 && g.iter().all(|&x| x == g[0]) {
        // every distance would be zero
        let replacement = loop {
            let r = rng.gen_range(0..n);
            if r != g[0] {
                break r;
            }
        };
        g[k - 1] = replacement;
        stats.replaced_gene = Some(replacement);
    }

    let ring = |a: usize, b: usize| (b + n - a) % n;
    let mut taken = vec![false; n];
    let mut out = Vec::with_capacity(k);
    out.push(g[0]);
    taken[g[0]] = true;
    for i in 1..k {
        let mut c = ring(g[i - 1], g[i]);
        let mut j = i;
        let mut attempts = 0;
        while taken[c] && attempts < n {
            let next = (j + 1) % k;
            c = (c + ring(g[j], g[next])) % n;
            j = next;
            attempts += 1;
        }
        stats.extension_steps += attempts;
        while taken[c] {
            c = (c + 1) % n;
            stats.probe_steps += 1;
        }
        taken[c] = true;
        out.push(c);
    }
    Ok((out, stats))
}

/// Linear map of raw size genes onto `range`, rounded to the nearest kWh.
pub fn decode_sizes(raw: &[u64], size_bits: usize, range: SizeRange) -> Vec<u32> {
    let top = if size_bits >= 64 { u64::MAX } else { (1u64 << size_bits) - 1 };
    let span = f64::from(range.max_kwh - range.min_kwh);
    raw.iter()
        .map(|&r| {
            let frac = if top == 0 { 0.0 } else { r.min(top) as f64 / top as f64 };
            range.min_kwh + (frac * span).round() as u32
        })
        .collect()
}

/// Decodes a chromosome against `n` candidate nodes. Units are returned in
/// ascending site order.
///
/// `rng` is drawn from only when every site gene is equal after the modulo
/// reduction.
pub fn decode<R: Rng + ?Sized>(
    c: &Chromosome,
    n: usize,
    range: SizeRange,
    rng: &mut R,
) -> Result<PlacementPlan, EncodingError> {
    let layout = c.layout();
    if n == 0 || layout.units > n {
        return Err(EncodingError::TooManyUnits {
            units: layout.units,
            candidates: n,
        });
    }
    let genes: Vec<usize> = c.site_genes().iter().map(|&g| (g % n as u64) as usize).collect();
    let sites = decode_sites(&genes, n, rng)?;
    let sizes_kwh = decode_sizes(&c.size_genes(), layout.size_bits, range);
    Ok(PlacementPlan { sites, sizes_kwh }.canonical())
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::super::Layout;
    use super::*;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(11)
    }

    #[test]
    fn collision_free_genes_decode_to_distances() {
        let (sites, stats) = decode_sites_with_stats(&[3, 10, 30, 31], 56, &mut rng()).unwrap();
        assert_eq!(sites, vec![3, 7, 20, 1]);
        assert_eq!(stats, DecodeStats::default());
    }

    #[test]
    fn single_unit_is_the_gene() {
        for g in 0..56 {
            assert_eq!(decode_sites(&[g], 56, &mut rng()).unwrap(), vec![g]);
        }
    }

    #[test]
    fn collision_adds_next_neighbour_distance() {
        // second distance is 3 == first site; next neighbour wraps to gene 0
        let sites = decode_sites(&[3, 6], 10, &mut rng()).unwrap();
        // 3 + (3 - 6) mod 10 = 3 + 7 = 10 -> 0
        assert_eq!(sites, vec![3, 0]);
    }

    #[test]
    fn all_equal_genes_use_the_rng() {
        let (sites, stats) = decode_sites_with_stats(&[4; 5], 56, &mut rng()).unwrap();
        let r = stats.replaced_gene.unwrap();
        assert_ne!(r, 4);
        let mut s = sites.clone();
        s.sort_unstable();
        s.dedup();
        assert_eq!(s.len(), 5);
        assert_eq!(sites, decode_sites(&[4; 5], 56, &mut rng()).unwrap());
    }

    #[test]
    fn full_occupancy_terminates() {
        let n = 6;
        let (sites, stats) = decode_sites_with_stats(&[0, 1, 2, 3, 4, 5], n, &mut rng()).unwrap();
        let mut s = sites.clone();
        s.sort_unstable();
        assert_eq!(s, vec![0, 1, 2, 3, 4, 5]);
        assert!(stats.steps() <= DecodeStats::bound(6, n));
    }

    #[test]
    fn bad_inputs() {
        assert!(decode_sites(&[], 5, &mut rng()).is_err());
        assert!(decode_sites(&[0, 1, 2], 2, &mut rng()).is_err());
        assert!(decode_sites(&[7], 5, &mut rng()).is_err());
    }

    #[test]
    fn size_bounds() {
        let r = SizeRange::default();
        assert_eq!(decode_sizes(&[0, 1023, 511], 10, r), vec![100, 1000, 550]);
        assert_eq!(decode_sizes(&[0, 1, 2, 3], 2, r), vec![100, 400, 700, 1000]);
    }

    #[test]
    fn zero_chromosome_decodes() {
        let c = Chromosome::zeros(Layout::default());
        let plan = decode(&c, 56, SizeRange::default(), &mut rng()).unwrap();
        assert!(plan.has_distinct_sites());
        assert_eq!(plan.sites.len(), 5);
        assert_eq!(plan.sizes_kwh, vec![100; 5]);
        assert!(plan.sites.windows(2).all(|w| w[0] < w[1]));
    }
}
