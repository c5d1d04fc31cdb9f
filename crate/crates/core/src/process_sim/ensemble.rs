//! Storage and summary statistics of simulated path ensembles.

use crate::scalar::Real;

/// Why a path was dropped from the statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exclusion {
    /// The drift CFL condition still failed after the maximal number of halvings.
    SubstepExhausted,
    /// Every redraw of the Gaussian increment crossed the boundary.
    ResampleExhausted,
    /// The log-weight exceeded the configured bound.
    WeightOverflow,
    /// A drift, potential or weight evaluation failed.
    NumericalFailure,
}

/// One simulated path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord<T> {
    /// Recorded positions modulo `2 pi r`, row-major by record time. Rows
    /// stop at absorption or exclusion.
    pub states: Vec<T>,
    /// Girsanov weight at every record time, frozen at zero after the exit.
    pub weights: Option<Vec<T>>,
    /// Hitting time of the boundary, if any.
    pub absorbed: Option<T>,
    pub excluded: Option<Exclusion>,
    /// Gaussian increments redrawn because they crossed the boundary.
    pub rejections: u64,
    /// Proposed steps that crossed the boundary (rejected or absorbing).
    pub crossing_proposals: u64,
    pub substeps: u64,
}

impl<T: Real> PathRecord<T> {
    pub(crate) fn new(capacity: usize) -> Self {
        Self {
            states: Vec::with_capacity(capacity),
            weights: None,
            absorbed: None,
            excluded: None,
            rejections: 0,
            crossing_proposals: 0,
            substeps: 0,
        }
    }

    pub fn is_included(&self) -> bool {
        self.excluded.is_none()
    }
}

/// Mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    pub mean: T,
    pub se: T,
    pub count: usize,
}

impl<T: Real> Estimate<T> {
    /// Sample mean and standard error of `values`.
    pub fn from_samples(values: impl IntoIterator<Item = T>) -> Self {
        let (mut count, mut mean, mut m2) = (0usize, T::zero(), T::zero());
        for v in values {
            count += 1;
            let delta = v - mean;
            mean = mean + delta / T::count(count);
            m2 = m2 + delta * (v - mean);
        }
        let se = if count > 1 {
            (m2 / T::count(count - 1) / T::count(count)).sqrt()
        } else {
            T::infinity()
        };
        Self { mean, se, count }
    }

    /// Binomial proportion `hits / count`.
    pub fn proportion(hits: usize, count: usize) -> Self {
        let n = T::count(count.max(1));
        let p = T::count(hits) / n;
        Self {
            mean: p,
            se: (p * (T::one() - p) / n).sqrt(),
            count,
        }
    }

    /// `|self - other|` in units of the combined standard error.
    pub fn z_distance(&self, other: &Self) -> T {
        (self.mean - other.mean).abs() / (self.se * self.se + other.se * other.se).sqrt()
    }
}

/// Ensemble of paths sharing the record times `times`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble<T> {
    pub times: Vec<T>,
    pub n_particles: usize,
    pub paths: Vec<PathRecord<T>>,
}

impl<T: Real> PathEnsemble<T> {
    /// Recorded state of `path` at record index `k`, if it was still alive.
    pub fn state(&self, path: usize, k: usize) -> Option<&[T]> {
        let rec = &self.paths[path];
        let n = self.n_particles;
        rec.states.get(k * n..(k + 1) * n)
    }

    fn included(&self) -> impl Iterator<Item = &PathRecord<T>> {
        self.paths.iter().filter(|p| p.is_included())
    }

    pub fn included_count(&self) -> usize {
        self.included().count()
    }

    pub fn excluded_count(&self, reason: Exclusion) -> usize {
        self.paths.iter().filter(|p| p.excluded == Some(reason)).count()
    }

    /// `E[f(X(t_k))]` over included paths still alive at `t_k`.
    pub fn estimate(&self, k: usize, f: impl FnMut(&[T]) -> T) -> Estimate<T> {
        let n = self.n_particles;
        Estimate::from_samples(
            self.included()
                .filter_map(|p| p.states.get(k * n..(k + 1) * n))
                .map(f)
                .collect::<Vec<_>>(),
        )
    }

    /// `E[f(b(t_k)) M(t_k)]` over included weighted paths; exited paths
    /// contribute zero.
    pub fn weighted_estimate(&self, k: usize, mut f: impl FnMut(&[T]) -> T) -> Estimate<T> {
        let n = self.n_particles;
        let samples: Vec<T> = self
            .included()
            .map(|p| {
                let w = p.weights.as_ref().map_or(T::one(), |w| w[k]);
                match p.states.get(k * n..(k + 1) * n) {
                    Some(s) if w != T::zero() => w * f(s),
                    _ => T::zero(),
                }
            })
            .collect();
        Estimate::from_samples(samples)
    }

    pub fn mean_weight(&self, k: usize) -> Estimate<T> {
        self.weighted_estimate(k, |_| T::one())
    }

    /// Fraction of included paths absorbed before the horizon.
    pub fn absorbed_fraction(&self) -> Estimate<T> {
        let hits = self.included().filter(|p| p.absorbed.is_some()).count();
        Estimate::proportion(hits, self.included_count())
    }

    /// Fraction of included paths that proposed at least one boundary crossing.
    pub fn boundary_hit_fraction(&self) -> Estimate<T> {
        let hits = self
            .included()
            .filter(|p| p.absorbed.is_some() || p.crossing_proposals > 0)
            .count();
        Estimate::proportion(hits, self.included_count())
    }

    /// Crossing proposals per executed substep, pooled over included paths.
    pub fn crossing_rate(&self) -> T {
        let (c, s) = self
            .included()
            .fold((0u64, 0u64), |(c, s), p| (c + p.crossing_proposals, s + p.substeps));
        T::lit(c as f64) / T::lit(s.max(1) as f64)
    }

    pub fn total_rejections(&self) -> u64 {
        self.paths.iter().map(|p| p.rejections).sum()
    }

    /// Values of `f` at record index `k` over alive included paths.
    pub fn samples(&self, k: usize, f: impl FnMut(&[T]) -> T) -> Vec<T> {
        let n = self.n_particles;
        self.included()
            .filter_map(|p| p.states.get(k * n..(k + 1) * n))
            .map(f)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimate_mean_and_se() {
        let e = Estimate::<f64>::from_samples([1.0, 2.0, 3.0, 4.0]);
        assert!((e.mean - 2.5).abs() < 1e-15);
        let var = (1.5f64.powi(2) * 2.0 + 0.5f64.powi(2) * 2.0) / 3.0;
        assert!((e.se - (var / 4.0).sqrt()).abs() < 1e-15);
        let p = Estimate::<f64>::proportion(25, 100);
        assert!((p.se - (0.25f64 * 0.75 / 100.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn weighted_estimate_counts_exited_paths_as_zero() {
        let mut alive = PathRecord::new(2);
        alive.states = vec![1.0, 2.0];
        alive.weights = Some(vec![1.0, 2.0]);
        let mut exited = PathRecord::new(2);
        exited.states = vec![1.0];
        exited.weights = Some(vec![1.0, 0.0]);
        let ens = PathEnsemble {
            times: vec![0.0, 1.0],
            n_particles: 1,
            paths: vec![alive, exited],
        };
        assert_eq!(ens.mean_weight(1).mean, 1.0);
        assert_eq!(ens.weighted_estimate(1, |s| s[0]).mean, 2.0);
        assert_eq!(ens.estimate(1, |s| s[0]).count, 1);
    }
}
