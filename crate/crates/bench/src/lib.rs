//! Shared inputs for the benchmarks.

use medfilter::simgen::{mvn_sample, BlockSpec, CovarianceSpec};
use medfilter::{rng, Matrix};

/// A block-design replicate with `p` mediators, a tenth of them in each
/// signal block.
pub fn block_data(n: usize, p: usize, seed: u64) -> (Vec<f64>, Matrix, Vec<f64>) {
    let k = p / 10;
    let spec = BlockSpec::with_sizes(k, k, k, p - 3 * k);
    let data = mvn_sample(&CovarianceSpec::BlockHighDim(spec), n, &mut rng::stream(seed, 0))
        .expect("valid block design");
    let cols = data.ncols();
    let mids: Vec<usize> = (1..cols - 1).collect();
    (data.col(0).to_vec(), data.select_columns(&mids), data.col(cols - 1).to_vec())
}
