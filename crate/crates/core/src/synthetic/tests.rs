use super::special::std_normal_cdf;
use super::*;
use crate::rng::RngStream;
use crate::stats::{mean, summarize, variance};
use crate::types::Horizon;

fn flat_cir(rate: f64, sigma: f64) -> CirConfig {
    CirConfig {
        kappa: 0.2,
        sigma,
        alpha: 0.3,
        beta: 100.0,
        profile: RateProfile::constant(rate),
        delta: 0.001,
        horizon: Horizon { t: 11.0, p: 22 },
    }
}

#[test]
fn profile_eval_and_integral() {
    let r = RateProfile {
        knots: vec![(0.0, 50.0), (5.0, 150.0), (11.0, 60.0)],
    };
    assert_eq!(r.eval(0.0), 50.0);
    assert_eq!(r.eval(2.5), 100.0);
    assert_eq!(r.eval(5.0), 150.0);
    assert_eq!(r.eval(20.0), 60.0);
    // ∫_0^5 = 500, ∫_5^11 = 630
    assert!((r.integral(0.0, 11.0) - 1130.0).abs() < 1e-9);
    assert!((r.integral(4.0, 6.0) - (0.5 * (130.0 + 150.0) + 0.5 * (150.0 + 135.0))).abs() < 1e-9);
    let h = Horizon::new(11.0, 22).unwrap();
    let parts: f64 = r.interval_integrals(&h).iter().sum();
    assert!((parts - 1130.0).abs() < 1e-9);
    assert!(RateProfile { knots: vec![(1.0, 1.0), (0.5, 2.0)] }.validate().is_err());
}

#[test]
fn cir_without_noise_relaxes_exponentially() {
    // σ = 0: λ(t) = R + (λ(0) − R) e^{−κt}; Euler error is O(δ)
    let cfg = flat_cir(100.0, 0.0);
    let path = simulate_cir_path(&cfg, &mut RngStream::new(3, 0)).unwrap();
    let l0 = path.values[0];
    assert!((l0 / 100.0 - 1.0).abs() < 0.5);
    let worst = path
        .values
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let t = k as f64 * path.step;
            (v - (100.0 + (l0 - 100.0) * (-0.2 * t).exp())).abs()
        })
        .fold(0.0, f64::max);
    assert!(worst < 10.0 * cfg.delta * (l0 - 100.0).abs().max(1.0), "worst {worst}");
}

#[test]
fn cir_paths_are_deterministic_and_finite() {
    let cfg = CirConfig::default();
    let a = simulate_cir_path(&cfg, &mut RngStream::new(5, 1)).unwrap();
    let b = simulate_cir_path(&cfg, &mut RngStream::new(5, 1)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.values.len(), cfg.n_steps() + 1);
    for s in 0..200 {
        let p = simulate_cir_path(&cfg, &mut RngStream::new(s, 2)).unwrap();
        assert!(p.values.iter().all(|v| v.is_finite()));
    }
}

#[test]
fn cir_time_average_reverts_to_constant_profile() {
    let mut cfg = flat_cir(80.0, 0.4);
    cfg.horizon = Horizon { t: 40.0, p: 40 };
    cfg.delta = 0.01;
    let avg: f64 = (0..200)
        .map(|s| {
            let p = simulate_cir_path(&cfg, &mut RngStream::new(s, 3)).unwrap();
            p.values.iter().sum::<f64>() / p.values.len() as f64
        })
        .sum::<f64>()
        / 200.0;
    assert!((avg / 80.0 - 1.0).abs() < 0.05, "avg {avg}");
}

#[test]
fn thinning_epochs_bin_to_counts_and_zero_profile_is_empty() {
    let cfg = CirConfig::default();
    let (counts, epochs) = simulate_cir_day(&cfg, &mut RngStream::new(9, 0)).unwrap();
    assert_eq!(epochs.bin(&cfg.horizon), counts);
    assert!(epochs.times().windows(2).all(|w| w[0] <= w[1]));
    assert!(epochs.times().iter().all(|&t| (0.0..=11.0).contains(&t)));

    let empty = flat_cir(1e-12, 0.0);
    let (counts, epochs) = simulate_cir_day(&empty, &mut RngStream::new(9, 1)).unwrap();
    assert_eq!(counts.total(), 0);
    assert!(epochs.is_empty());
}

#[test]
fn thinning_matches_deterministic_intensity_per_interval() {
    // σ = 0, β large: λ(t) ≈ R(t) known; interval means ≈ ∫ R
    let mut cfg = CirConfig {
        sigma: 0.0,
        beta: 1e12,
        ..CirConfig::default()
    };
    cfg.delta = 0.005;
    let days = 5000;
    let (m, _) = simulate_cir_days(&cfg, days, &RngStream::new(4, 0)).unwrap();
    let path = simulate_cir_path(&cfg, &mut RngStream::new(0, 0)).unwrap();
    for j in 0..cfg.horizon.p {
        let (a, b) = (cfg.horizon.boundary(j), cfg.horizon.boundary(j + 1));
        // trapezoid over the Euler grid
        let k0 = (a / path.step).round() as usize;
        let k1 = (b / path.step).round() as usize;
        let expect: f64 = (k0..k1).map(|k| 0.5 * (path.values[k] + path.values[k + 1]) * path.step).sum();
        let got = mean(&m.column(j));
        // 22 comparisons: 4 standard errors
        assert!((got - expect).abs() < 4.0 * (expect / days as f64).sqrt() + 0.02, "j={j}: {got} vs {expect}");
    }
}

#[test]
fn cholesky_repairs_singular_psd() {
    let ones = vec![vec![1.0; 3]; 3];
    let l = cholesky_with_jitter(&ones).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let v: f64 = (0..3).map(|k| l[i][k] * l[j][k]).sum();
            assert!((v - 1.0).abs() < 1e-6);
        }
    }
    let bad = vec![vec![1.0, 0.9, -0.9], vec![0.9, 1.0, 0.9], vec![-0.9, 0.9, 1.0]];
    assert!(matches!(cholesky_with_jitter(&bad), Err(crate::Error::NotPsd { .. })));
    let cfg = PgnortaConfig {
        base_rates: vec![1.0; 3],
        dispersion: vec![1.0; 3],
        correlation: bad,
    };
    assert!(Pgnorta::new(cfg).is_err());
}

#[test]
fn pgnorta_validation() {
    let mut cfg = PgnortaConfig::ar1(vec![10.0, 20.0], vec![2.0, 2.0], 0.5);
    assert!(cfg.validate().is_ok());
    cfg.correlation[0][1] = 0.4;
    assert!(cfg.validate().is_err());
    let cfg = PgnortaConfig::ar1(vec![10.0, -1.0], vec![2.0, 2.0], 0.5);
    assert!(cfg.validate().is_err());
}

#[test]
fn pgnorta_large_dispersion_is_nearly_poisson() {
    let model = Pgnorta::new(PgnortaConfig::ar1(vec![30.0, 50.0], vec![1e8, 1e8], 0.0)).unwrap();
    let m = model.simulate_days(Horizon::new(1.0, 2).unwrap(), 50_000, &RngStream::new(1, 0)).unwrap();
    for j in 0..2 {
        let c = m.column(j);
        let ratio = variance(&c) / mean(&c);
        assert!((ratio - 1.0).abs() < 0.03, "dispersion ratio {ratio}");
    }
}

#[test]
fn pgnorta_negative_binomial_variance() {
    // Var = λ + λ²/α = 50 + 1250
    let model = Pgnorta::new(PgnortaConfig::ar1(vec![50.0], vec![2.0], 0.0)).unwrap();
    let n = 100_000;
    let m = model.simulate_days(Horizon::new(1.0, 1).unwrap(), n, &RngStream::new(2, 0)).unwrap();
    let c = m.column(0);
    let v = variance(&c);
    // fourth central moment of NB(r = α, mean 50) for the standard error
    let (mu, r) = (50.0f64, 2.0f64);
    let var = mu + mu * mu / r;
    let p = r / (r + mu);
    let kurt_excess = 6.0 / r + p * p / (r * (1.0 - p));
    let se = (var * var * (2.0 + kurt_excess) / n as f64).sqrt();
    assert!((v - 1300.0).abs() < 3.0 * se, "variance {v}, se {se}");
    assert!((mean(&c) - 50.0).abs() < 3.0 * (1300.0f64 / n as f64).sqrt());
}

#[test]
fn pgnorta_positive_copula_gives_positive_past_future_correlation() {
    let mut cfg = PgnortaConfig::ar1(vec![40.0; 4], vec![3.0; 4], 0.0);
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                cfg.correlation[i][j] = 0.9;
            }
        }
    }
    let model = Pgnorta::new(cfg).unwrap();
    let m = model.simulate_days(Horizon::new(2.0, 4).unwrap(), 20_000, &RngStream::new(3, 0)).unwrap();
    let s = summarize(&m).unwrap();
    assert!(s.past_future_corr.iter().all(|&c| c > 0.4), "{:?}", s.past_future_corr);
}

/// Kolmogorov–Smirnov distance of a sample from Uniform(0, 1).
fn ks_uniform(mut u: Vec<f64>) -> f64 {
    u.sort_by(f64::total_cmp);
    let n = u.len() as f64;
    u.iter()
        .enumerate()
        .map(|(i, &x)| (x - i as f64 / n).abs().max(((i + 1) as f64 / n - x).abs()))
        .fold(0.0, f64::max)
}

#[test]
fn pgnorta_marginal_transforms_are_uniform() {
    let model = Pgnorta::new(PgnortaConfig::ar1(vec![10.0, 10.0, 10.0], vec![0.7, 3.0, 20.0], 0.6)).unwrap();
    let mut s = RngStream::new(8, 0);
    let n = 20_000;
    let crit = 1.628 / (n as f64).sqrt();
    let mut phi = vec![Vec::new(); 3];
    let mut g = vec![Vec::new(); 3];
    for _ in 0..n {
        let z = model.draw_normals(&mut s);
        for j in 0..3 {
            phi[j].push(std_normal_cdf(z[j]));
            let a = model.config().dispersion[j];
            let b = special::gamma_quantile_from_normal(a, a, z[j]);
            g[j].push(special::regularized_gamma(a, a * b).0);
        }
    }
    for j in 0..3 {
        assert!(ks_uniform(phi[j].clone()) < crit);
        assert!(ks_uniform(g[j].clone()) < crit);
    }
}
