//! Per-query scoring time of the centroid scorer against an exhaustive
//! nearest-neighbour scan as the cache of training latents grows.

use clan::eval::{bench_inference, BenchConfig};

fn main() -> clan::Result<()> {
    let config = BenchConfig { train_sizes: vec![1_000, 10_000, 100_000], ..BenchConfig::default() };
    println!("{}", bench_inference(&config)?);
    Ok(())
}
