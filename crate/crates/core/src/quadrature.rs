//! Quadrature rules: periodic trapezoid, Gauss-Hermite and Gauss-Legendre.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Uniform trapezoid rule for a function with period `period`, `n` nodes
/// starting at `start`. Spectrally accurate for smooth periodic integrands.
pub fn periodic_trapezoid<T: Real>(start: T, period: T, n: usize, mut f: impl FnMut(T) -> T) -> T {
    let h = period / T::count(n);
    (0..n).map(|k| f(start + h * T::count(k))).sum::<T>() * h
}

/// Nodes of the `n`-point periodic trapezoid rule on `[start, start + period)`.
pub fn periodic_nodes<T: Real>(start: T, period: T, n: usize) -> Vec<T> {
    let h = period / T::count(n);
    (0..n).map(|k| start + h * T::count(k)).collect()
}

/// Gauss rule as parallel node and weight vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> GaussRule<T> {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, mut f: impl FnMut(T) -> T) -> T {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Gauss-Hermite rule for the weight `exp(-x^2)` on the real line.
///
/// Roots of the Hermite function `psi_n(x) = H_n(x) exp(-x^2 / 2)` (normalized)
/// are bracketed on a fine grid and polished by safeguarded Newton steps. The
/// Hermite function stays bounded, so the rule is usable up to about 700 nodes.
pub fn gauss_hermite<T: Real>(n: usize) -> Result<GaussRule<T>> {
    if n == 0 {
        return Err(crate::error::invalid("n", "rule needs at least one node"));
    }
    if n > 700 {
        return Err(Error::Unsupported {
            reason: format!("Gauss-Hermite rule with {n} nodes"),
        });
    }
    let half = n / 2;
    let mut positive = Vec::with_capacity(half);
    let upper = (2.0 * n as f64 + 1.0).sqrt() + 1.0;
    // Nodes are spaced at least about pi / sqrt(2n + 1); sample ten times finer.
    let steps = (10.0 * upper * upper / std::f64::consts::PI).ceil() as usize + 10;
    let h = upper / steps as f64;
    // Skip the root at zero for odd n.
    let mut lo = if n % 2 == 1 { 0.5 * h } else { 0.0 };
    let mut f_lo = hermite_function(n, lo).0;
    while positive.len() < half && lo < upper {
        let hi = lo + h;
        let f_hi = hermite_function(n, hi).0;
        if f_lo == 0.0 || f_lo.signum() != f_hi.signum() {
            positive.push(polish_root(n, lo, hi));
        }
        lo = hi;
        f_lo = f_hi;
    }
    if positive.len() != half {
        return Err(Error::QuadratureNotConverged { change: f64::NAN });
    }
    let weight = |z: f64| {
        let (_, d) = hermite_function(n, z);
        2.0 * (-z * z).exp() / (d * d)
    };
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for &z in positive.iter().rev() {
        nodes.push(-z);
        weights.push(weight(z));
    }
    if n % 2 == 1 {
        nodes.push(0.0);
        weights.push(weight(0.0));
    }
    for &z in &positive {
        nodes.push(z);
        weights.push(weight(z));
    }
    Ok(GaussRule {
        nodes: nodes.into_iter().map(T::lit).collect(),
        weights: weights.into_iter().map(T::lit).collect(),
    })
}

/// Newton iteration kept inside the bracket `[lo, hi]`, bisecting otherwise.
fn polish_root(n: usize, mut lo: f64, mut hi: f64) -> f64 {
    let sign_lo = hermite_function(n, lo).0.signum();
    let mut z = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (f, d) = hermite_function(n, z);
        if f == 0.0 {
            return z;
        }
        if f.signum() == sign_lo {
            lo = z;
        } else {
            hi = z;
        }
        let step = z - f / d;
        let next = if step > lo && step < hi { step } else { 0.5 * (lo + hi) };
        if (next - z).abs() <= 1e-16 * z.abs().max(1.0) || hi - lo <= 1e-15 * z.abs().max(1.0) {
            return next;
        }
        z = next;
    }
    z
}

/// Orthonormal Hermite polynomial of degree `n` times `exp(-z^2 / 2)`, and
/// `sqrt(2n)` times the degree `n - 1` one, which is the derivative of the
/// polynomial part.
fn hermite_function(n: usize, z: f64) -> (f64, f64) {
    let mut p1 = std::f64::consts::PI.powf(-0.25) * (-0.5 * z * z).exp();
    let mut p2 = 0.0;
    for j in 0..n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
    }
    (p1, (2.0 * n as f64).sqrt() * p2)
}

/// Gauss-Hermite rule in `f64`, generated once per size and shared.
pub fn gauss_hermite_cached(n: usize) -> Result<Arc<GaussRule<f64>>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussRule<f64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(rule) = cache.lock().expect("rule cache poisoned").get(&n) {
        return Ok(Arc::clone(rule));
    }
    let rule = Arc::new(gauss_hermite::<f64>(n)?);
    cache
        .lock()
        .expect("rule cache poisoned")
        .insert(n, Arc::clone(&rule));
    Ok(rule)
}

/// Rule for `E[f(Z)]` with `Z ~ N(0, variance)`.
pub fn normal_expectation_rule<T: Real>(n: usize, variance: T) -> Result<GaussRule<T>> {
    let gh = gauss_hermite_cached(n)?;
    let scale = (T::lit(2.0) * variance).sqrt();
    let norm = T::PI().sqrt().recip();
    Ok(GaussRule {
        nodes: gh.nodes.iter().map(|&x| T::lit(x) * scale).collect(),
        weights: gh.weights.iter().map(|&w| T::lit(w) * norm).collect(),
    })
}

/// Gauss-Legendre rule on `[a, b]`.
pub fn gauss_legendre<T: Real>(n: usize, a: T, b: T) -> Result<GaussRule<T>> {
    if n == 0 {
        return Err(crate::error::invalid("n", "rule needs at least one node"));
    }
    let (af, bf) = (a.as_f64(), b.as_f64());
    let (mid, half) = (0.5 * (af + bf), 0.5 * (bf - af));
    let mut nodes = vec![0.0f64; n];
    let mut weights = vec![0.0f64; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
            }
            dp = nf * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / dp;
            if (z - z1).abs() <= 1e-15 {
                break;
            }
        }
        nodes[i] = mid - half * z;
        nodes[n - 1 - i] = mid + half * z;
        weights[i] = 2.0 * half / ((1.0 - z * z) * dp * dp);
        weights[n - 1 - i] = weights[i];
    }
    Ok(GaussRule {
        nodes: nodes.into_iter().map(T::lit).collect(),
        weights: weights.into_iter().map(T::lit).collect(),
    })
}
