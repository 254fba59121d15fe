use rand::seq::index::sample;
use rand::Rng;

/// Flip the given bit positions of the IEEE-754 binary64 encoding.
pub fn flip_bits(value: f64, positions: &[u32]) -> f64 {
    let mut bits = value.to_bits();
    for &p in positions {
        bits ^= 1u64 << p;
    }
    f64::from_bits(bits)
}

/// Flip `n_bits` distinct, uniformly chosen bits (clamped to 1..=2).
pub fn bitflip<R: Rng + ?Sized>(value: f64, n_bits: u8, rng: &mut R) -> f64 {
    let n = n_bits.clamp(1, 2) as usize;
    let pos: Vec<u32> = sample(rng, 64, n).into_iter().map(|i| i as u32).collect();
    flip_bits(value, &pos)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sign_and_mantissa() {
        assert_eq!(flip_bits(5.0, &[63]), -5.0);
        let x = flip_bits(1.0, &[0]);
        assert_eq!(x - 1.0, f64::EPSILON);
        assert_eq!(flip_bits(flip_bits(3.25, &[17]), &[17]), 3.25);
    }

    #[test]
    fn two_bits_are_distinct() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let y = bitflip(1.5, 2, &mut rng);
            assert_eq!((y.to_bits() ^ 1.5f64.to_bits()).count_ones(), 2);
        }
    }
}
