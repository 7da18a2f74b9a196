//! Small numeric helpers shared across modules: compensated summation,
//! a numerically stable sigmoid, and seed derivation for reproducible
//! random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = NeumaierSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().collect::<NeumaierSum>().total()
}

pub fn compensated_mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    compensated_sum(values.iter().copied()) / values.len() as f64
}

/// Sample standard deviation (n - 1 denominator), two-pass.
pub fn sample_sd(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = compensated_mean(values);
    let ss = compensated_sum(values.iter().map(|v| (v - mean) * (v - mean)));
    (ss / (n - 1) as f64).sqrt()
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a base seed with a sequence of integer keys into a new 64-bit seed.
pub fn mix_seed(seed: u64, keys: &[u64]) -> u64 {
    keys.iter()
        .fold(splitmix64(seed), |acc, &k| splitmix64(acc ^ splitmix64(k)))
}

/// Stage seed: FNV-1a 64 over the UTF-8 stage name, xor-ed with the master
/// seed, then passed through the splitmix64 finalizer.
pub fn stage_seed(master: u64, stage: &str) -> u64 {
    const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
    let h = stage
        .bytes()
        .fold(FNV_OFFSET, |h, b| (h ^ b as u64).wrapping_mul(FNV_PRIME));
    splitmix64(h ^ master)
}

/// Independent RNG stream keyed by `(seed, keys...)`.
pub fn stream_rng(seed: u64, keys: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix_seed(seed, keys))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn neumaier_recovers_cancelled_terms() {
        let values = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(compensated_sum(values), 2.0);
        let naive: f64 = values.iter().sum();
        assert_ne!(naive, 2.0);
    }

    #[test]
    fn sigmoid_is_stable_at_extremes() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(800.0) == 1.0);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(-800.0) < 1e-300);
        assert!((sigmoid(2.0) + sigmoid(-2.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn streams_are_keyed() {
        let a: u64 = stream_rng(7, &[1, 2]).random();
        let b: u64 = stream_rng(7, &[1, 2]).random();
        let c: u64 = stream_rng(7, &[2, 1]).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(stage_seed(1, "sample"), stage_seed(1, "importance"));
        assert_eq!(stage_seed(1, "sample"), stage_seed(1, "sample"));
    }

    #[test]
    fn sample_sd_matches_definition() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert!((sample_sd(&v) - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(sample_sd(&[3.0]), 0.0);
    }
}
