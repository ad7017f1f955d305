use proptest::prelude::*;

use super::*;
use crate::synthetic::{Pgnorta, PgnortaConfig};
use crate::types::{CountVector, Horizon};

fn matrix(rows: Vec<Vec<u64>>) -> CountMatrix {
    let p = rows[0].len();
    CountMatrix::new(Horizon::new(p as f64, p).unwrap(), rows.into_iter().map(CountVector).collect()).unwrap()
}

fn random_matrix(n: usize, p: usize, stream: &mut RngStream) -> CountMatrix {
    matrix(
        (0..n)
            .map(|_| {
                (0..p)
                    .map(|_| {
                        let r = 5.0 + 40.0 * stream.uniform();
                        stream.poisson(r).unwrap()
                    })
                    .collect()
            })
            .collect(),
    )
}

/// Past–future correlation by explicit sums, no running accumulation.
fn brute_corr(data: &CountMatrix, j: usize) -> f64 {
    let past: Vec<f64> = data.rows().iter().map(|r| r.0[..j].iter().sum::<u64>() as f64).collect();
    let future: Vec<f64> = data.rows().iter().map(|r| r.0[j..].iter().sum::<u64>() as f64).collect();
    let n = past.len() as f64;
    let (mp, mf) = (past.iter().sum::<f64>() / n, future.iter().sum::<f64>() / n);
    let cov: f64 = past.iter().zip(&future).map(|(a, b)| (a - mp) * (b - mf)).sum();
    let sp: f64 = past.iter().map(|a| (a - mp).powi(2)).sum::<f64>().sqrt();
    let sf: f64 = future.iter().map(|b| (b - mf).powi(2)).sum::<f64>().sqrt();
    cov / (sp * sf)
}

/// Type-7 quantile by its textbook definition on a sorted copy.
fn brute_quantile(xs: &[f64], q: f64) -> f64 {
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    let h = (s.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    s[lo] + (h - lo as f64) * (s[hi] - s[lo])
}

#[test]
fn basic_moments_and_quantiles() {
    let xs = [1.0, 2.0, 3.0, 4.0];
    assert_eq!(mean(&xs), 2.5);
    assert!((variance(&xs) - 5.0 / 3.0).abs() < 1e-15);
    assert_eq!(quantile_type7(&xs, 0.0), 1.0);
    assert_eq!(quantile_type7(&xs, 1.0), 4.0);
    assert!((quantile_type7(&xs, 0.8) - 3.4).abs() < 1e-12);
    assert_eq!(quantile_type7(&[4.0, 1.0, 3.0, 2.0], 0.5), 2.5);
}

#[test]
fn constant_columns_are_degenerate() {
    let m = matrix(vec![vec![5, 5, 5]; 4]);
    let s = summarize(&m).unwrap();
    assert_eq!(s.past_future_corr, vec![0.0, 0.0]);
    assert_eq!(s.corr_degenerate, vec![true, true]);
    assert_eq!(s.marginal_variance, vec![0.0; 3]);
    assert!(summarize(&matrix(vec![vec![1, 2]])).is_err());
}

#[test]
fn correlation_matches_brute_force() {
    let m = random_matrix(300, 9, &mut RngStream::new(1, 0));
    let s = summarize(&m).unwrap();
    assert_eq!(s.past_future_corr.len(), 8);
    for j in 1..9 {
        assert!((s.past_future_corr[j - 1] - brute_corr(&m, j)).abs() < 1e-12);
    }
}

#[test]
fn independent_intervals_have_small_correlation() {
    let m = random_matrix(20_000, 6, &mut RngStream::new(2, 0));
    let s = summarize(&m).unwrap();
    assert!(s.past_future_corr.iter().all(|c| c.abs() < 4.0 / (20_000f64).sqrt()));
}

#[test]
fn dispersed_copula_counts_correlate_positively() {
    let model = Pgnorta::new(PgnortaConfig::ar1(vec![50.0; 5], vec![4.0; 5], 0.8)).unwrap();
    let m = model.simulate_days(Horizon::new(5.0, 5).unwrap(), 5000, &RngStream::new(3, 0)).unwrap();
    let s = summarize(&m).unwrap();
    assert!(s.past_future_corr.iter().all(|&c| c > 0.2), "{:?}", s.past_future_corr);
}

#[test]
fn cleaning_drops_a_single_extreme_day() {
    let mut rows: Vec<Vec<u64>> = (0..200).map(|i| vec![10 + i % 7, 20 + i % 5]).collect();
    rows[17] = vec![10_000, 20];
    let (kept, removed) = clean_outliers(&matrix(rows), 0.0, 0.999).unwrap();
    assert_eq!(removed, vec![17]);
    assert_eq!(kept.n_days(), 199);
}

#[test]
fn cleaning_equals_reference_filter() {
    let mut s = RngStream::new(4, 0);
    for _ in 0..100 {
        let n = 10 + s.index(60);
        let p = 1 + s.index(8);
        let m = random_matrix(n, p, &mut s);
        let (lo, hi) = (0.05 * s.uniform(), 1.0 - 0.05 * s.uniform());
        let bands: Vec<(f64, f64)> = (0..p)
            .map(|j| (brute_quantile(&m.column(j), lo), brute_quantile(&m.column(j), hi)))
            .collect();
        let expect: Vec<usize> = (0..n)
            .filter(|&i| m.row(i).0.iter().zip(&bands).any(|(&x, &(a, b))| (x as f64) < a || (x as f64) > b))
            .collect();
        match clean_outliers(&m, lo, hi) {
            Ok((kept, removed)) => {
                assert_eq!(removed, expect);
                assert_eq!(kept.n_days() + removed.len(), n);
            }
            Err(_) => assert_eq!(expect.len(), n),
        }
    }
}

#[test]
fn cleaning_is_idempotent_without_trimming() {
    let m = random_matrix(50, 4, &mut RngStream::new(5, 0));
    let (kept, removed) = clean_outliers(&m, 0.0, 1.0).unwrap();
    assert!(removed.is_empty());
    assert_eq!(kept, m);
    assert!(clean_outliers(&random_matrix(5, 2, &mut RngStream::new(0, 0)), 0.0, 1.0).is_err());
}

#[test]
fn split_sizes() {
    let m = random_matrix(912, 3, &mut RngStream::new(6, 0));
    let (a, b) = split(&m, (2, 1), &mut RngStream::new(7, 0)).unwrap();
    assert_eq!((a.n_days(), b.n_days()), (608, 304));
    let small = random_matrix(3, 2, &mut RngStream::new(6, 1));
    let (a, b) = split(&small, (2, 1), &mut RngStream::new(7, 0)).unwrap();
    assert_eq!((a.n_days(), b.n_days()), (2, 1));
    assert!(split(&small, (0, 1), &mut RngStream::new(7, 0)).is_err());
}

#[test]
fn split_is_a_partition() {
    // rows tagged by their index in the first column
    let rows: Vec<Vec<u64>> = (0..100).map(|i| vec![i, 1]).collect();
    let m = matrix(rows);
    let (a, b) = split(&m, (3, 2), &mut RngStream::new(8, 0)).unwrap();
    let mut tags: Vec<u64> = a.rows().iter().chain(b.rows()).map(|r| r.0[0]).collect();
    assert!(a.rows().windows(2).all(|w| w[0].0[0] < w[1].0[0]));
    tags.sort_unstable();
    assert_eq!(tags, (0..100).collect::<Vec<_>>());
    let (c, _) = split(&m, (3, 2), &mut RngStream::new(8, 0)).unwrap();
    assert_eq!(a, c);
}

#[test]
fn identical_replications_give_zero_width_bands() {
    let m = random_matrix(30, 4, &mut RngStream::new(9, 0));
    let bands = ci_bands(|_, _| Ok(m.clone()), 30, 5).unwrap();
    let band = &bands.marginal_mean;
    for j in 0..4 {
        assert!((band.ci_hi[j] - band.ci_lo[j]).abs() < 1e-9);
        assert_eq!(band.pct_lo[j], band.pct_hi[j]);
    }
    assert!(ci_bands(|_, _| Ok(m.clone()), 30, 1).is_err());
}

#[test]
fn band_width_shrinks_like_inverse_root_reps() {
    let gen = |r: usize, n: usize| Ok(random_matrix(n, 3, &mut RngStream::new(10, r as u64)));
    let narrow = ci_bands(gen, 50, 400).unwrap();
    let wide = ci_bands(gen, 50, 100).unwrap();
    for j in 0..3 {
        let w1 = narrow.marginal_mean.ci_hi[j] - narrow.marginal_mean.ci_lo[j];
        let w0 = wide.marginal_mean.ci_hi[j] - wide.marginal_mean.ci_lo[j];
        assert!((w0 / w1 - 2.0).abs() < 0.4, "{}", w0 / w1);
    }
}

#[test]
fn bands_cover_the_true_mean() {
    // Poisson(30) columns: the 95% band on the mean should cover 30 about 95% of the time
    let h = Horizon::new(1.0, 1).unwrap();
    let covered = (0..200)
        .filter(|&k| {
            let gen = |r: usize, n: usize| {
                let mut s = RngStream::new(11 + k, r as u64);
                CountMatrix::new(h, (0..n).map(|_| CountVector(vec![s.poisson(30.0).unwrap()])).collect())
            };
            let b = ci_bands(gen, 20, 30).unwrap().marginal_mean;
            b.ci_lo[0] <= 30.0 && 30.0 <= b.ci_hi[0]
        })
        .count();
    // binomial(200, 0.95): ±4 sd is about ±12
    assert!((178..=200).contains(&covered), "{covered}");
}

proptest! {
    #[test]
    fn summaries_ignore_day_order(seed in 0u64..500, n in 3usize..40, p in 2usize..7) {
        let mut s = RngStream::new(seed, 1);
        let m = random_matrix(n, p, &mut s);
        let mut idx: Vec<usize> = (0..n).collect();
        idx.reverse();
        idx.rotate_left(seed as usize % n);
        let a = summarize(&m).unwrap();
        let b = summarize(&m.select(&idx).unwrap()).unwrap();
        for (x, y) in a.marginal_mean.iter().zip(&b.marginal_mean) {
            prop_assert!((x - y).abs() < 1e-9);
        }
        for (x, y) in a.past_future_corr.iter().zip(&b.past_future_corr) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }
}

#[test]
fn removed_rows_obey_the_per_column_bound() {
    // type-7 quantiles: at most floor(q(n-1))+1 values fall strictly below the
    // lower band and n-1-floor(q(n-1)) strictly above the upper one
    for seed in 0..20 {
        let m = random_matrix(200, 5, &mut RngStream::new(12, seed));
        let n = m.n_days();
        let (kept, removed) = clean_outliers(&m, 0.025, 0.975).unwrap();
        let below = (0.025 * (n - 1) as f64).floor() as usize + 1;
        let above = n - 1 - (0.975 * (n - 1) as f64).floor() as usize;
        assert!(removed.len() <= m.p() * (below + above), "{} removed", removed.len());
        assert_eq!(kept.n_days() + removed.len(), n);
    }
}
