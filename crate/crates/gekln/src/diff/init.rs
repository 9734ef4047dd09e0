use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::tensor::Tensor;

/// Xavier (Glorot) uniform initialization: entries drawn from
/// `[-b, +b]` with `b = sqrt(6 / (fan_in + fan_out))`, where the fan sum
/// is `rows + cols`. Deterministic under `seed`.
pub fn xavier_init(rows: usize, cols: usize, seed: u64) -> Tensor {
    assert!(
        rows >= 1 && cols >= 1,
        "xavier_init needs a non-empty shape"
    );
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Tensor::zeros(rows, cols);
    for v in t.data_mut() {
        let u: f64 = rng.gen(); // [0, 1)
        *v = bound * (2.0 * u - 1.0);
    }
    t
}
