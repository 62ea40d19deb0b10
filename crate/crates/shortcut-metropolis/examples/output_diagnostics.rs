//! Output analysis on a chain with known answers: autocorrelations,
//! integrated autocorrelation time, effective sample size, standard errors,
//! and block averaging.

use shortcut_metropolis::diagnostics::{
    act_estimate, autocorrelations, block_averages, ess_and_se,
};
use shortcut_metropolis::mh::run_standard_with;
use shortcut_metropolis::rng::RandomStream;
use shortcut_metropolis::targets::{DiagonalGaussian, Target};

fn main() {
    // A unit Gaussian sampled with a moderate stepsize mixes like an AR(1)
    // process, so the diagnostics have predictable values.
    let target = DiagonalGaussian::new(vec![1.0]).unwrap();
    let mut stream = RandomStream::new(11);
    let mut series = vec![0.0];
    run_standard_with(&target, &[0.0], 2.4, 500_000, &mut stream, |rec| {
        series.push(rec.state[0]);
    })
    .unwrap();

    let acf = autocorrelations(&series, 50).unwrap();
    println!("lag-k autocorrelations:");
    for k in [1usize, 2, 5, 10, 20] {
        println!("  rho_{k:<2} = {:+.3}", acf.rho[k - 1]);
    }

    let tau = act_estimate(&series, 200).unwrap();
    let variance = target.moments().unwrap().variance[0];
    let (ess, se) = ess_and_se(series.len() as u64, tau, variance);
    let mean = series.iter().sum::<f64>() / series.len() as f64;
    println!("autocorrelation time {tau:.2}");
    println!("effective sample size {ess:.0} of {}", series.len());
    println!("mean {mean:+.4} +- {se:.4}  (true mean 0)");

    // Block averages decorrelate: with blocks much longer than tau the
    // blocked series is nearly independent and its tau is near 1.
    let (blocks, dropped) = block_averages(&series, 500).unwrap();
    let block_tau = act_estimate(&blocks, 50).unwrap();
    println!(
        "after averaging blocks of 500 ({} blocks, {dropped} states dropped): tau {block_tau:.2}",
        blocks.len()
    );
}
