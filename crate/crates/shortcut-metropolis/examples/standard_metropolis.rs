//! Plain random-walk Metropolis on the two-component mixture, with output
//! analysis: rejection rate, autocorrelation time, and the standard error of
//! the estimated mean.

use shortcut_metropolis::diagnostics::{act_estimate, ess_and_se};
use shortcut_metropolis::mh::run_standard_with;
use shortcut_metropolis::rng::RandomStream;
use shortcut_metropolis::targets::{Mixture1d, Target};

fn main() {
    let target = Mixture1d;
    let n_updates = 200_000u64;

    for w in [2.0, 20.0] {
        let mut stream = RandomStream::new(7);
        let mut series = vec![0.0];
        let mut rejections = 0u64;
        let (_, _, evals) = run_standard_with(&target, &[0.0], w, n_updates, &mut stream, |rec| {
            series.push(rec.state[0]);
            rejections += u64::from(rec.rejected);
        })
        .unwrap();

        let mean = series.iter().sum::<f64>() / series.len() as f64;
        let tau = act_estimate(&series, 500).unwrap();
        let variance = target.moments().unwrap().variance[0];
        let (ess, se) = ess_and_se(series.len() as u64, tau, variance);

        println!("w = {w}");
        println!("  rejection rate      {:.3}", rejections as f64 / evals as f64);
        println!("  autocorrelation time {tau:.1}  (effective samples {ess:.0})");
        println!("  estimated mean      {mean:.3} +- {se:.3}  (true mean 5)");
    }
}
