//! Shared fixtures for the benchmark targets.

use gekln::data::{split_dataset, Dataset, Split};
use gekln::synth::{generate, SynthConfig};

/// Mid-sized corpus: large enough that per-epoch costs dominate setup,
/// small enough for quick benchmark iterations.
pub fn bench_corpus() -> (Dataset, Split) {
    let ds = generate(&SynthConfig {
        students: 300,
        exercises: 1200,
        concepts: 20,
        logs_per_student: 50,
        seed: 99,
        ..SynthConfig::default()
    });
    let split = split_dataset(&ds, 0.2, 99).unwrap();
    (ds, split)
}
