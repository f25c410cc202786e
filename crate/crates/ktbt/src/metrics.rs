//! Group knowledge metrics: complexity (Shannon entropy of the knows-level
//! distribution), disparity (Rao quadratic entropy over inter-level
//! distance), heterogeneity (their product), and the mean knowledge score.
//!
//! Robots are binned into five species by how many target colors their
//! knowledge base covers, `knows-0` through `knows-4`. Entropy uses the
//! natural logarithm.

use thiserror::Error;

/// Number of knows-levels: 0 through 4 colors covered.
pub const LEVELS: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("metric undefined for an empty population")]
    EmptyPopulation,
    #[error("invalid distance matrix: {0}")]
    InvalidDistance(&'static str),
}

/// Robot counts per knows-level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpeciesCensus {
    counts: [u64; LEVELS],
}

impl SpeciesCensus {
    pub fn new(counts: [u64; LEVELS]) -> SpeciesCensus {
        SpeciesCensus { counts }
    }

    /// Bins robots by the number of target colors each can handle.
    pub fn from_levels(levels: impl IntoIterator<Item = usize>) -> SpeciesCensus {
        let mut counts = [0u64; LEVELS];
        for level in levels {
            assert!(level < LEVELS, "knows-level out of range: {level}");
            counts[level] += 1;
        }
        SpeciesCensus { counts }
    }

    pub fn counts(&self) -> &[u64; LEVELS] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Inter-species knowledge distance `d(i, j)`, symmetric with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    d: [[f64; LEVELS]; LEVELS],
}

impl DistanceMatrix {
    pub fn new(d: [[f64; LEVELS]; LEVELS]) -> Result<DistanceMatrix, MetricsError> {
        for i in 0..LEVELS {
            if d[i][i] != 0.0 {
                return Err(MetricsError::InvalidDistance("nonzero diagonal"));
            }
            for j in 0..LEVELS {
                if d[i][j] != d[j][i] {
                    return Err(MetricsError::InvalidDistance("not symmetric"));
                }
            }
        }
        Ok(DistanceMatrix { d })
    }

    /// The standard distance for knows-levels: `d(i, j) = |i - j|`, so the
    /// gap between knows-0 and knows-4 is 4.
    pub fn by_level_gap() -> DistanceMatrix {
        let mut d = [[0.0; LEVELS]; LEVELS];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (i as f64 - j as f64).abs();
            }
        }
        DistanceMatrix { d }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i][j]
    }
}

/// Shannon entropy of the species distribution, natural log:
/// `E(p) = -sum p_i ln p_i` over occupied species.
pub fn complexity(census: &SpeciesCensus) -> Result<f64, MetricsError> {
    let total = census.total();
    if total == 0 {
        return Err(MetricsError::EmptyPopulation);
    }
    let total = total as f64;
    let mut e = 0.0;
    for &count in census.counts() {
        if count > 0 {
            let p = count as f64 / total;
            e -= p * p.ln();
        }
    }
    Ok(e)
}

/// Rao quadratic entropy: `Q(p) = sum_i sum_j p_i p_j d(i, j)^2`.
pub fn disparity(census: &SpeciesCensus, dm: &DistanceMatrix) -> Result<f64, MetricsError> {
    let total = census.total();
    if total == 0 {
        return Err(MetricsError::EmptyPopulation);
    }
    let total = total as f64;
    let mut q = 0.0;
    for i in 0..LEVELS {
        for j in 0..LEVELS {
            let pi = census.counts()[i] as f64 / total;
            let pj = census.counts()[j] as f64 / total;
            let d = dm.get(i, j);
            q += pi * pj * d * d;
        }
    }
    Ok(q)
}

/// Product of complexity and disparity; zero exactly when the group is
/// knowledge-homogeneous.
pub fn heterogeneity(census: &SpeciesCensus, dm: &DistanceMatrix) -> Result<f64, MetricsError> {
    Ok(complexity(census)? * disparity(census, dm)?)
}

/// Mean per-robot knowledge score, each color worth 0.25 so a robot covering
/// all four scores 1.0.
pub fn mean_knowledge_score(colors_handled: &[usize]) -> Result<f64, MetricsError> {
    if colors_handled.is_empty() {
        return Err(MetricsError::EmptyPopulation);
    }
    let sum: f64 = colors_handled.iter().map(|&c| 0.25 * c as f64).sum();
    Ok(sum / colors_handled.len() as f64)
}
