// SPDX-License-Identifier: MIT OR Apache-2.0

//! Poisson variates: sequential inversion for small means, PTRS transformed
//! rejection (Hörmann 1993) otherwise.

use rand::Rng;

const INVERSION_LIMIT: f64 = 30.0;

/// Draws from `Poisson(mean)`. A non-positive mean yields 0.
pub fn sample_poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if !(mean > 0.0) {
        return 0;
    }
    if mean < INVERSION_LIMIT {
        inversion(mean, rng)
    } else {
        ptrs(mean, rng)
    }
}

fn inversion<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    let u: f64 = rng.random();
    let mut k = 0u64;
    let mut p = (-mean).exp();
    let mut cdf = p;
    while u > cdf {
        k += 1;
        p *= mean / k as f64;
        let next = cdf + p;
        if next == cdf {
            // Round-off left a sliver of mass above the last representable cdf.
            break;
        }
        cdf = next;
    }
    k
}

fn ptrs<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    let smu = mean.sqrt();
    let b = 0.931 + 2.53 * smu;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let v_r = 0.9277 - 3.6224 / (b - 2.0);
    let log_mean = mean.ln();
    loop {
        let u = rng.random::<f64>() - 0.5;
        let v: f64 = rng.random();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + mean + 0.43).floor();
        if us >= 0.07 && v <= v_r {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
        let rhs = -mean + k * log_mean - libm::lgamma(k + 1.0);
        if lhs <= rhs {
            return k as u64;
        }
    }
}
