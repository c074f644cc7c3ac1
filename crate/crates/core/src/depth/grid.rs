use crate::error::{Error, Result};

/// Evaluation times with trapezoid quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationGrid {
    times: Vec<f64>,
    weights: Vec<f64>,
}

/// Grid size used when none is configured.
pub const DEFAULT_GRID_SIZE: usize = 512;

impl EvaluationGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::Config(format!(
                "an evaluation grid needs at least 2 points, got {}",
                times.len()
            )));
        }
        if times.iter().any(|t| !t.is_finite()) || times[0] < 0.0 {
            return Err(Error::Config("grid times must be finite and nonnegative".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("grid times must be strictly increasing".into()));
        }
        let g = times.len();
        let weights = (0..g)
            .map(|i| {
                let left = if i > 0 { times[i] - times[i - 1] } else { 0.0 };
                let right = if i + 1 < g { times[i + 1] - times[i] } else { 0.0 };
                0.5 * (left + right)
            })
            .collect();
        Ok(Self { times, weights })
    }

    /// `size` equispaced points covering `[0, domain_end]`.
    pub fn uniform(domain_end: f64, size: usize) -> Result<Self> {
        if !(domain_end.is_finite() && domain_end > 0.0) {
            return Err(Error::Config(format!("invalid domain end {domain_end}")));
        }
        if size < 2 {
            return Err(Error::Config(format!(
                "an evaluation grid needs at least 2 points, got {size}"
            )));
        }
        let step = domain_end / (size - 1) as f64;
        let mut times: Vec<f64> = (0..size).map(|g| g as f64 * step).collect();
        times[size - 1] = domain_end;
        Self::new(times)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Length of the covered interval; equals `T` for a grid spanning `[0, T]`.
    pub fn span(&self) -> f64 {
        self.times[self.times.len() - 1] - self.times[0]
    }

    /// Largest gap between consecutive grid points.
    pub fn max_step(&self) -> f64 {
        self.times.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// `(1/span) Σ_g w_g f(g)`.
    pub fn time_average(&self, mut f: impl FnMut(usize) -> f64) -> f64 {
        let mut acc = 0.0;
        for (g, w) in self.weights.iter().enumerate() {
            acc += w * f(g);
        }
        acc / self.span()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_span() {
        let g = EvaluationGrid::uniform(24.0, 512).unwrap();
        assert!((g.weights().iter().sum::<f64>() - 24.0).abs() < 1e-12);
        assert_eq!(*g.times().last().unwrap(), 24.0);
        let irregular = EvaluationGrid::new(vec![0.0, 0.1, 0.5, 2.0]).unwrap();
        assert!((irregular.weights().iter().sum::<f64>() - 2.0).abs() < 1e-15);
        assert!(irregular.weights().iter().all(|w| *w > 0.0));
        assert!((irregular.time_average(|_| 3.0) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(EvaluationGrid::new(vec![0.0]).is_err());
        assert!(EvaluationGrid::new(vec![0.0, 0.0, 1.0]).is_err());
        assert!(EvaluationGrid::uniform(1.0, 1).is_err());
        assert!(EvaluationGrid::uniform(-1.0, 10).is_err());
    }
}
