//! Bundled datasets: a synthetic branching distribution generator and the
//! classical iris table.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::energy::DataSet;
use crate::error::Result;

/// Three noisy unit-length segments radiating from the origin at 90, 210
/// and 330 degrees. Points are spaced evenly along each arm and perturbed
/// by isotropic Gaussian noise of the given standard deviation. The layout
/// is this crate's own construction; it reproduces the shape of a branching
/// planar distribution, not any specific published sample.
pub fn branching2d(points_per_arm: usize, noise: f64, seed: u64) -> DataSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let angles = [90.0f64, 210.0, 330.0].map(f64::to_radians);
    let mut rows = Vec::with_capacity(3 * points_per_arm);
    for angle in angles {
        let (dx, dy) = (angle.cos(), angle.sin());
        for i in 0..points_per_arm {
            let t = (i as f64 + 0.5) / points_per_arm as f64;
            rows.push(vec![
                t * dx + noise * normal.sample(&mut rng),
                t * dy + noise * normal.sample(&mut rng),
            ]);
        }
    }
    DataSet::from_rows(&rows, None).expect("generator emits valid data")
}

/// The 150 x 4 iris measurements (sepal length/width, petal length/width).
pub fn iris() -> Result<DataSet> {
    crate::io::parse_csv(include_str!("../data/iris.csv").as_bytes(), None)
}
