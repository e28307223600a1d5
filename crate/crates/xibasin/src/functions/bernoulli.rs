//! Exact Bernoulli numbers, cached as rationals and rounded into a
//! precision context on demand.

use std::sync::Mutex;

use once_cell::sync::Lazy;
use rug::{Integer, Rational};

use crate::numerics::{PrecisionContext, Real};

static CACHE: Lazy<Mutex<Vec<Rational>>> = Lazy::new(|| Mutex::new(vec![Rational::from(1)]));

/// B_n with the B_1 = -1/2 convention.
pub fn bernoulli(n: usize) -> Rational {
    let mut cache = CACHE.lock().unwrap();
    while cache.len() <= n {
        let m = cache.len();
        // B_m = -1/(m+1) * sum_{k<m} C(m+1, k) B_k
        let mut acc = Rational::new();
        for (k, b) in cache.iter().enumerate() {
            let c = Integer::from(m as u32 + 1).binomial(k as u32);
            acc += b.clone() * c;
        }
        acc /= -Rational::from(m as u32 + 1);
        cache.push(acc);
    }
    cache[n].clone()
}

pub fn bernoulli_real(n: usize, ctx: &PrecisionContext) -> Real {
    ctx.real(bernoulli(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_values() {
        assert_eq!(bernoulli(0), Rational::from(1));
        assert_eq!(bernoulli(1), Rational::from((-1, 2)));
        assert_eq!(bernoulli(2), Rational::from((1, 6)));
        assert_eq!(bernoulli(3), Rational::from(0));
        assert_eq!(bernoulli(4), Rational::from((-1, 30)));
        assert_eq!(bernoulli(12), Rational::from((-691, 2730)));
    }
}
