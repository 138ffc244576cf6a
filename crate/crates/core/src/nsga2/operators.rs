use rand::Rng;

use crate::encoding::Chromosome;

/// Swaps the bits in `cut.0..cut.1` between the parents.
pub fn crossover_at(p1: &Chromosome, p2: &Chromosome, cut: (usize, usize)) -> (Chromosome, Chromosome) {
    assert_eq!(p1.len(), p2.len(), "parents differ in length");
    let (a, b) = if cut.0 <= cut.1 { cut } else { (cut.1, cut.0) };
    let mut c1 = p1.clone();
    let mut c2 = p2.clone();
    for i in a..b.min(p1.len()) {
        if p1.bits()[i] != p2.bits()[i] {
            c1.flip(i);
            c2.flip(i);
        }
    }
    (c1, c2)
}

/// Two-point crossover with both cut points uniform in `0..=len`.
pub fn two_point_crossover<R: Rng + ?Sized>(p1: &Chromosome, p2: &Chromosome, rng: &mut R) -> (Chromosome, Chromosome) {
    let a = rng.gen_range(0..=p1.len());
    let b = rng.gen_range(0..=p1.len());
    crossover_at(p1, p2, (a.min(b), a.max(b)))
}

/// Flips one bit in the site segment and one in the size segment.
pub fn mutate<R: Rng + ?Sized>(c: &Chromosome, rng: &mut R) -> Chromosome {
    let layout = c.layout();
    let mut out = c.clone();
    out.flip(rng.gen_range(layout.site_segment()));
    out.flip(rng.gen_range(layout.size_segment()));
    out
}

/// Binary tournament on (rank, crowding): lower rank wins, then larger
/// crowding, then the first contestant.
pub fn tournament<R: Rng + ?Sized>(ranks: &[usize], crowding: &[f64], rng: &mut R) -> usize {
    let n = ranks.len();
    let i = rng.gen_range(0..n);
    let j = if n > 1 {
        let j = rng.gen_range(0..n - 1);
        if j >= i {
            j + 1
        } else {
            j
        }
    } else {
        i
    };
    if ranks[j] < ranks[i] || (ranks[j] == ranks[i] && crowding[j] > crowding[i]) {
        j
    } else {
        i
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::encoding::Layout;

    #[test]
    fn identical_parents_give_identical_children() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = Chromosome::random(Layout::default(), &mut rng);
        let (a, b) = two_point_crossover(&p, &p, &mut rng);
        assert_eq!(a, p);
        assert_eq!(b, p);
    }

    #[test]
    fn full_cut_swaps_parents() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p1 = Chromosome::random(Layout::default(), &mut rng);
        let p2 = Chromosome::random(Layout::default(), &mut rng);
        let (a, b) = crossover_at(&p1, &p2, (0, 80));
        assert_eq!((a, b), (p2.clone(), p1.clone()));
        let (a, b) = crossover_at(&p1, &p2, (5, 5));
        assert_eq!((a, b), (p1, p2));
    }

    #[test]
    fn mutation_flips_one_bit_per_segment() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let layout = Layout::default();
        let c = Chromosome::random(layout, &mut rng);
        let m = mutate(&c, &mut rng);
        assert_eq!(c.hamming(&m), 2);
        let diff: Vec<usize> = (0..80).filter(|&i| c.bits()[i] != m.bits()[i]).collect();
        assert!(layout.site_segment().contains(&diff[0]));
        assert!(layout.size_segment().contains(&diff[1]));
    }

    #[test]
    fn tournament_prefers_rank_then_crowding() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            assert_eq!(tournament(&[1, 0], &[9.0, 0.0], &mut rng), 1);
            assert_eq!(tournament(&[0, 0], &[1.0, f64::INFINITY], &mut rng), 1);
        }
    }
}
