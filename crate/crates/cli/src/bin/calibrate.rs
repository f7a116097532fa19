//! Measures the error rates of the threshold test on vectors with
//! `(1 - eps) T` and `(1 + eps) T` nonzeros and prints the threshold offset
//! `kappa` that balances them.

use clap::Parser;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ssmm_core::generate::SampleValue;
use ssmm_core::sketch::{Decision, DistinguisherSketch, SketchParams};
use ssmm_core::{nat_scale, IntRing, Semiring};

#[derive(Parser)]
struct Args {
    /// Trials per threshold and side
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, default_value_t = 0.25)]
    eps: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// Vector length
    #[arg(long = "U", default_value_t = 1024)]
    dim: u32,
    #[arg(long, value_delimiter = ',', default_value = "4,16,64")]
    thresholds: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

/// Nonzero cells of the sketch of a sparse vector.
fn nonzero_cells(sketch: &DistinguisherSketch, support: &[(u32, IntRing)]) -> usize {
    (0..sketch.rows())
        .filter(|&t| {
            let cell = support.iter().fold(IntRing::zero(), |acc, &(k, v)| {
                if sketch.selects(t, k) {
                    acc.add(nat_scale(sketch.coefficient(t, k), v).expect("positive"))
                } else {
                    acc
                }
            });
            !cell.is_zero()
        })
        .count()
}

fn main() {
    let args = Args::parse();
    let params = SketchParams::new(args.eps, args.delta).expect("valid eps and delta");
    let d = params.rows(args.dim);
    let kappas: Vec<f64> = (-20..=20).map(|i| i as f64 * 0.05).collect();
    // errors[kappa][threshold] = (false Above at (1-eps)T, false Below at (1+eps)T)
    let mut errors = vec![vec![(0usize, 0usize); args.thresholds.len()]; kappas.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    println!("d = {d}, U = {}, eps = {}, trials = {}", args.dim, args.eps, args.trials);

    for (ti, &threshold) in args.thresholds.iter().enumerate() {
        let low = ((1.0 - args.eps) * threshold).floor().max(0.0) as usize;
        let high = ((1.0 + args.eps) * threshold).ceil() as usize;
        for (f0, is_low) in [(low, true), (high, false)] {
            for _ in 0..args.trials {
                let support: Vec<(u32, IntRing)> = sample(&mut rng, args.dim as usize, f0)
                    .into_iter()
                    .map(|k| (k as u32, IntRing::sample_nonzero(&mut rng)))
                    .collect();
                let sketch = DistinguisherSketch::new(threshold, args.eps, d, rng.gen());
                let cells = nonzero_cells(&sketch, &support);
                for (ki, &kappa) in kappas.iter().enumerate() {
                    let decision = sketch.clone().with_kappa(kappa).decide(cells);
                    let slot = &mut errors[ki][ti];
                    match (is_low, decision) {
                        (true, Decision::Above) => slot.0 += 1,
                        (false, Decision::Below) => slot.1 += 1,
                        _ => {}
                    }
                }
            }
        }
    }

    let trials = args.trials as f64;
    let worst = |row: &[(usize, usize)]| {
        row.iter()
            .map(|&(a, b)| (a as f64 / trials).max(b as f64 / trials))
            .fold(0.0, f64::max)
    };
    println!("kappa  worst  per-threshold (false Above / false Below)");
    for (kappa, row) in kappas.iter().zip(&errors) {
        let cells: Vec<String> = row
            .iter()
            .map(|&(a, b)| format!("{:.4}/{:.4}", a as f64 / trials, b as f64 / trials))
            .collect();
        println!("{kappa:+.2}  {:.4}  {}", worst(row), cells.join("  "));
    }
    // Many offsets may tie at the lowest error: take the middle one.
    let best = errors.iter().map(|row| worst(row)).fold(f64::INFINITY, f64::min);
    let tied: Vec<usize> = (0..kappas.len()).filter(|&i| worst(&errors[i]) == best).collect();
    let middle = tied[tied.len() / 2];
    println!(
        "balanced kappa = {:+.2} (worst error {best:.4}, tied from {:+.2} to {:+.2})",
        kappas[middle],
        kappas[tied[0]],
        kappas[tied[tied.len() - 1]]
    );
}
