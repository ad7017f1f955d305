//! Normal CDF and Gamma quantiles for the copula transform.

use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

const QUANTILE_TOL: f64 = 1e-10;

pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Regularized incomplete gamma functions `(P(a, x), Q(a, x))`: power
/// series below `x = a + 1`, Lentz continued fraction above.
pub fn regularized_gamma(a: f64, x: f64) -> (f64, f64) {
    if x <= 0.0 {
        return (0.0, 1.0);
    }
    let log_prefactor = a * x.ln() - x - ln_gamma(a);
    if x < a + 1.0 {
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        for _ in 0..10_000 {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * 1e-17 {
                break;
            }
        }
        let p = (log_prefactor.exp() * sum).min(1.0);
        (p, 1.0 - p)
    } else {
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        let q = (log_prefactor.exp() * h).min(1.0);
        (1.0 - q, q)
    }
}

/// Quantile of Gamma(shape, rate) at probability `Φ(z)`.
///
/// Works from whichever tail is smaller, so large `|z|` keeps full
/// relative accuracy. Safeguarded Newton iteration on the regularized
/// incomplete gamma function, stopping at `1e-10` absolute error in the
/// unit-rate quantile (relative error for quantiles below one).
pub fn gamma_quantile_from_normal(shape: f64, rate: f64, z: f64) -> f64 {
    unit_gamma_quantile(shape, z) / rate
}

fn unit_gamma_quantile(a: f64, z: f64) -> f64 {
    let upper = z > 0.0;
    let target = std_normal_cdf(-z.abs());
    if target <= 0.0 {
        return if upper { f64::INFINITY } else { 0.0 };
    }
    // F is increasing in x for both tails.
    let f = |x: f64| {
        if x <= 0.0 {
            return -target;
        }
        let (p, q) = regularized_gamma(a, x);
        if upper {
            target - q
        } else {
            p - target
        }
    };
    let pdf = |x: f64| ((a - 1.0) * x.ln() - x - ln_gamma(a)).exp();

    // Wilson–Hilferty starting point.
    let c = 1.0 / (9.0 * a);
    let mut x = (a * (1.0 - c + z * c.sqrt()).powi(3)).max(1e-300);
    let mut lo = 0.0;
    let mut hi = a.max(1.0);
    while f(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    if !(x > lo && x < hi) {
        x = 0.5 * (lo + hi);
    }
    for _ in 0..500 {
        let fx = f(x);
        if fx == 0.0 {
            return x;
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let d = pdf(x);
        let newton = x - fx / d;
        let next = if d > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let tol = QUANTILE_TOL * next.min(1.0);
        if (next - x).abs() <= tol || hi - lo <= tol {
            return next;
        }
        x = next;
    }
    x
}
