//! Spatio-temporal correlation kernel
//! `K(s, x; t, y) = sum_k p(s, x | u_k) M_k(t, y) - 1(s > t) p(s - t, x | y)`
//! with the wrapped kernel of parity `p(N)`, and quantities built from it.

use rayon::prelude::*;

use super::config::{PointConfiguration, SpaceTimePoint};
use super::martingale::mart_vector;
use crate::error::{invalid, Error, Result};
use crate::heat_kernels::p_wrapped;
use crate::linalg::{determinant, symmetric_eigenvalues};
use crate::quadrature::periodic_nodes;
use crate::scalar::Real;

/// `p(s, x | u_k)` for every `k`.
fn source_row<T: Real>(xi: &PointConfiguration<T>, s: T, x: T) -> Result<Vec<T>> {
    if !(s > T::zero()) {
        return Err(invalid("s", "the kernel needs a positive first time"));
    }
    xi.check_time(s)?;
    xi.points()
        .iter()
        .map(|&u| p_wrapped(xi.parity(), s, x, u, xi.circle(), &xi.policy))
        .collect()
}

fn assemble<T: Real>(
    xi: &PointConfiguration<T>,
    p1: SpaceTimePoint<T>,
    sources: &[T],
    p2: SpaceTimePoint<T>,
    martingales: &[T],
) -> Result<T> {
    let mut value: T = sources.iter().zip(martingales).map(|(a, b)| *a * *b).sum();
    if p1.t > p2.t {
        value = value - p_wrapped(xi.parity(), p1.t - p2.t, p1.x, p2.x, xi.circle(), &xi.policy)?;
    }
    Ok(value)
}

/// `K(s, x; t, y)` for `p1 = (s, x)` with `s > 0` and `p2 = (t, y)`.
pub fn correlation_kernel<T: Real>(
    xi: &PointConfiguration<T>,
    p1: SpaceTimePoint<T>,
    p2: SpaceTimePoint<T>,
) -> Result<T> {
    let sources = source_row(xi, p1.t, p1.x)?;
    let martingales = mart_vector(xi, p2.t, p2.x)?;
    assemble(xi, p1, &sources, p2, &martingales)
}

/// Determinant of `K` over the concatenated groups of space-time points.
pub fn correlation_fn<T: Real>(xi: &PointConfiguration<T>, groups: &[&[SpaceTimePoint<T>]]) -> Result<T> {
    let points: Vec<SpaceTimePoint<T>> = groups.iter().flat_map(|g| g.iter().copied()).collect();
    if points.is_empty() {
        return Err(invalid("points", "at least one space-time point is required"));
    }
    let n = points.len();
    let sources = points
        .iter()
        .map(|p| source_row(xi, p.t, p.x))
        .collect::<Result<Vec<_>>>()?;
    let martingales = points
        .par_iter()
        .map(|p| mart_vector(xi, p.t, p.x))
        .collect::<Result<Vec<_>>>()?;
    let mut entries = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            entries.push(assemble(xi, points[i], &sources[i], points[j], &martingales[j])?);
        }
    }
    Ok(determinant(n, entries))
}

/// One-point density `K(t, x; t, x)` at each `x`.
pub fn one_point_density<T: Real>(xi: &PointConfiguration<T>, t: T, xs: &[T]) -> Result<Vec<T>> {
    xs.par_iter()
        .map(|&x| {
            let p = SpaceTimePoint::new(t, x);
            correlation_kernel(xi, p, p)
        })
        .collect()
}

/// `int_0^{2 pi r} K(t, x; t, x) dx` by the periodic trapezoid rule, doubled
/// from 64 nodes until successive values agree to `quadrature.rel_tol`.
pub fn kernel_trace<T: Real>(xi: &PointConfiguration<T>, t: T) -> Result<T> {
    let period = xi.circle().period();
    let mut nodes = 64;
    let mut previous: Option<T> = None;
    loop {
        let xs = periodic_nodes(T::zero(), period, nodes);
        let density = one_point_density(xi, t, &xs)?;
        let value = density.iter().copied().sum::<T>() * period / T::count(nodes);
        if let Some(prev) = previous {
            let change = (value - prev).abs() / value.abs().max(T::one());
            if change <= xi.quadrature.rel_tol {
                return Ok(value);
            }
            if nodes >= 1 << 14 {
                return Err(Error::QuadratureNotConverged { change: change.as_f64() });
            }
        }
        previous = Some(value);
        nodes *= 2;
    }
}

/// `K` tabulated on every pair of (time slice, trapezoid node).
#[derive(Debug, Clone, PartialEq)]
pub struct KernelGrid<T> {
    pub times: Vec<T>,
    pub nodes: Vec<T>,
    /// Row-major over `(i, a)` and `(j, b)`: entry
    /// `((i * n + a) * (m * n)) + j * n + b` holds `K(times[i], nodes[a]; times[j], nodes[b])`.
    pub values: Vec<T>,
    pub points: Vec<T>,
    pub r: T,
    pub t_star: T,
}

impl<T: Real> KernelGrid<T> {
    pub fn get(&self, i: usize, a: usize, j: usize, b: usize) -> T {
        let n = self.nodes.len();
        let width = self.times.len() * n;
        self.values[(i * n + a) * width + j * n + b]
    }
}

/// Tabulates `K` on `times` (all positive) and `n_nodes` equispaced points.
pub fn kernel_grid<T: Real>(xi: &PointConfiguration<T>, times: &[T], n_nodes: usize) -> Result<KernelGrid<T>> {
    if times.is_empty() || n_nodes == 0 {
        return Err(invalid("times", "need at least one time and one node"));
    }
    let nodes = periodic_nodes(T::zero(), xi.circle().period(), n_nodes);
    let slots: Vec<SpaceTimePoint<T>> = times
        .iter()
        .flat_map(|&t| nodes.iter().map(move |&x| SpaceTimePoint::new(t, x)))
        .collect();
    let sources = slots
        .par_iter()
        .map(|p| source_row(xi, p.t, p.x))
        .collect::<Result<Vec<_>>>()?;
    let martingales = slots
        .par_iter()
        .map(|p| mart_vector(xi, p.t, p.x))
        .collect::<Result<Vec<_>>>()?;
    let rows = (0..slots.len())
        .into_par_iter()
        .map(|i| {
            (0..slots.len())
                .map(|j| assemble(xi, slots[i], &sources[i], slots[j], &martingales[j]))
                .collect::<Result<Vec<T>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<T> = rows.into_iter().flatten().collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { context: "kernel grid" });
    }
    Ok(KernelGrid {
        times: times.to_vec(),
        nodes,
        values,
        points: xi.points().to_vec(),
        r: xi.circle().r(),
        t_star: xi.t_star(),
    })
}

/// Ratio of the smallest to the largest singular value of the matrix
/// `[M_k(t, x_i)]` sampled on `n_nodes` equispaced points.
pub fn gram_singular_ratio<T: Real>(xi: &PointConfiguration<T>, t: T, n_nodes: usize) -> Result<T> {
    let xs = periodic_nodes(T::zero(), xi.circle().period(), n_nodes);
    let samples = xs
        .par_iter()
        .map(|&x| mart_vector(xi, t, x))
        .collect::<Result<Vec<_>>>()?;
    let n = xi.n();
    let mut gram = vec![T::zero(); n * n];
    for row in &samples {
        for j in 0..n {
            for k in 0..n {
                gram[j * n + k] = gram[j * n + k] + row[j] * row[k];
            }
        }
    }
    let eig = symmetric_eigenvalues(n, gram);
    let largest = eig[n - 1];
    if !(largest > T::zero()) {
        return Err(Error::Singular);
    }
    Ok((eig[0].max(T::zero()) / largest).sqrt())
}

/// `|int p(t - s, y | x) M_k(t, y) dy - M_k(s, x)|` over one period with the
/// wrapped kernel of parity `p(N)`, trapezoid rule with doubling.
pub fn martingale_transport_residual<T: Real>(xi: &PointConfiguration<T>, k: usize, s: T, t: T, x: T) -> Result<T> {
    if !(t > s) {
        return Err(invalid("t", "must exceed s"));
    }
    if k >= xi.n() {
        return Err(invalid("k", "index out of range"));
    }
    let period = xi.circle().period();
    let target = mart_vector(xi, s, x)?[k];
    let mut nodes = 64;
    let mut previous: Option<T> = None;
    loop {
        let ys = periodic_nodes(T::zero(), period, nodes);
        let values = ys
            .par_iter()
            .map(|&y| {
                let m = mart_vector(xi, t, y)?[k];
                Ok(p_wrapped(xi.parity(), t - s, y, x, xi.circle(), &xi.policy)? * m)
            })
            .collect::<Result<Vec<T>>>()?;
        let value = values.iter().copied().sum::<T>() * period / T::count(nodes);
        if let Some(prev) = previous {
            let change = (value - prev).abs() / value.abs().max(T::one());
            if change <= xi.quadrature.rel_tol {
                return Ok((value - target).abs());
            }
            if nodes >= 1 << 13 {
                return Err(Error::QuadratureNotConverged { change: change.as_f64() });
            }
        }
        previous = Some(value);
        nodes *= 2;
    }
}
