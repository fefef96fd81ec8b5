//! Distributional checks of the samplers against the closed-form 1D
//! Gaussian flow: the one setting where the exact velocity field and the
//! exact data law are both known, so integrator output can be tested
//! end-to-end with no learned component in the loop.

use flowmaze::flowgen::analytic::{ks_critical, ks_statistic, Gauss1d};
use flowmaze::flowgen::{ode_sample_field, sde_sample_field, time_grid};
use flowmaze::rng::derive_seed;

const FIELD: Gauss1d = Gauss1d { mu: 1.5, s: 0.7 };
const STEPS: usize = 100;
const N: usize = 5000;

fn ode_terminals(base_seed: u64) -> Vec<f64> {
    (0..N)
        .map(|i| ode_sample_field(&FIELD, STEPS, derive_seed(base_seed, &[i as u64])).unwrap()[0])
        .collect()
}

fn sde_terminals(a: f64, base_seed: u64) -> Vec<f64> {
    (0..N)
        .map(|i| {
            sde_sample_field(&FIELD, STEPS, a, derive_seed(base_seed, &[i as u64]))
                .unwrap()
                .final_x[0]
        })
        .collect()
}

/// Mean and variance of the exact Gaussian law produced by the discretized
/// sampler: every update is affine in the state, so the terminal
/// distribution of the Euler chain can be propagated in closed form. This
/// isolates integrator bugs from discretization bias.
fn propagate_affine(a: f64) -> (f64, f64) {
    let grid = time_grid(STEPS);
    let (mut mean, mut var) = (0.0, 1.0); // init draw is standard normal
    for k in 0..STEPS {
        let t = grid[k];
        let dt = grid[k] - grid[k + 1];
        let u = 1.0 - t;
        let vt = FIELD.marginal_var(t);
        // v(x) = slope*x + off; score(x) = -(x - u*mu)/vt.
        let slope = (t - u * FIELD.s * FIELD.s) / vt;
        let off = -slope * u * FIELD.mu - FIELD.mu;
        let sigma = (a * (t / u).sqrt()).min(10.0 * a);
        let half = sigma * sigma / 2.0;
        let c = 1.0 - dt * (slope + half / vt);
        let d = -dt * (off - half * u * FIELD.mu / vt);
        mean = c * mean + d;
        var = c * c * var + sigma * sigma * dt;
    }
    (mean, var)
}

#[test]
fn ode_terminals_match_the_data_law() {
    let samples = ode_terminals(1000);
    let d = ks_statistic(&samples, |x| FIELD.data_cdf(x));
    assert!(d < ks_critical(N, 0.01), "KS statistic {d} exceeds critical value");
}

#[test]
fn sde_terminals_preserve_the_marginal() {
    for (a, seed) in [(0.25, 2000u64), (0.5, 3000)] {
        let samples = sde_terminals(a, seed);
        let d = ks_statistic(&samples, |x| FIELD.data_cdf(x));
        assert!(d < ks_critical(N, 0.01), "a={a}: KS statistic {d} exceeds critical value");
    }
}

#[test]
fn empirical_moments_match_the_propagated_affine_chain() {
    for (a, seed) in [(0.0, 4000u64), (0.5, 5000)] {
        let samples = if a == 0.0 { ode_terminals(seed) } else { sde_terminals(a, seed) };
        let (exact_mean, exact_var) = propagate_affine(a);
        let mean = samples.iter().sum::<f64>() / N as f64;
        let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / N as f64;
        // CLT tolerance at n=5000 with s ~ 0.7: ~5 standard errors.
        assert!((mean - exact_mean).abs() < 0.05, "a={a}: mean {mean} vs exact {exact_mean}");
        assert!((var - exact_var).abs() < 0.06, "a={a}: var {var} vs exact {exact_var}");
        // The discretized law must itself sit close to the data law.
        assert!((exact_mean - FIELD.mu).abs() < 0.03);
        assert!((exact_var - FIELD.s * FIELD.s).abs() < 0.03);
    }
}

#[test]
fn noise_widens_no_marginal_but_changes_the_sample_path() {
    let ode = ode_terminals(6000);
    let sde = sde_terminals(0.5, 6000);
    // Same seeds, different paths.
    assert_ne!(ode[0], sde[0]);
    // Two-sample KS between ODE and SDE terminals stays under the two-sample
    // critical value ~ c(alpha) * sqrt(2/n).
    let mut sorted = sde.clone();
    sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let ecdf = |x: f64| sorted.partition_point(|v| *v <= x) as f64 / sorted.len() as f64;
    let d = ks_statistic(&ode, ecdf);
    assert!(d < ks_critical(N, 0.01) * (2.0f64).sqrt(), "two-sample KS {d}");
}
