//! Coordinate boxes, points and quasi-random sampling.
//!
//! Every space in the toolkit is a single open coordinate box; instances
//! supply one global chart each. Pointwise verification draws deterministic
//! Halton samples from the box interior.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Optional tagging of a chart as adapted Darboux coordinates
/// `{t^alpha, q^i, p_i^alpha}`. `momentum[i][alpha]` is the index of
/// `p_i^alpha`.
#[derive(Clone, Debug)]
pub struct DarbouxTags {
    pub base: Vec<usize>,
    pub fields: Vec<usize>,
    pub momenta: Vec<Vec<usize>>,
}

/// A closed coordinate box with named axes.
#[derive(Clone, Debug)]
pub struct ChartBox {
    pub dim: usize,
    pub bounds: Vec<(f64, f64)>,
    pub names: Vec<String>,
    pub darboux: Option<DarbouxTags>,
}

pub type ChartRef = Arc<ChartBox>;

impl ChartBox {
    pub fn new(names: &[&str], bounds: &[(f64, f64)]) -> Result<ChartRef> {
        let dim = names.len();
        if dim == 0 {
            return Err(Error::InvalidConfig("chart dimension must be >= 1".into()));
        }
        if bounds.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "{} names vs {} bounds",
                dim,
                bounds.len()
            )));
        }
        for (lo, hi) in bounds {
            if !(lo < hi) {
                return Err(Error::InvalidConfig(format!("empty interval [{lo}, {hi}]")));
            }
        }
        for (i, a) in names.iter().enumerate() {
            for b in &names[i + 1..] {
                if a == b {
                    return Err(Error::InvalidConfig(format!("duplicate coordinate label '{a}'")));
                }
            }
        }
        Ok(Arc::new(ChartBox {
            dim,
            bounds: bounds.to_vec(),
            names: names.iter().map(|s| s.to_string()).collect(),
            darboux: None,
        }))
    }

    pub fn with_darboux(self: &ChartRef, tags: DarbouxTags) -> ChartRef {
        let mut chart = (**self).clone();
        chart.darboux = Some(tags);
        Arc::new(chart)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn contains(&self, coords: &[f64]) -> bool {
        coords.len() == self.dim
            && coords
                .iter()
                .zip(&self.bounds)
                .all(|(c, (lo, hi))| *c >= *lo && *c <= *hi)
    }

    pub fn center(&self) -> Vec<f64> {
        self.bounds.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect()
    }
}

/// A point of a chart. Boundary membership is allowed.
#[derive(Clone, Debug)]
pub struct Point {
    pub coords: Vec<f64>,
    pub chart: ChartRef,
}

impl Point {
    pub fn new(chart: &ChartRef, coords: Vec<f64>) -> Result<Point> {
        if coords.len() != chart.dim {
            return Err(Error::DimensionMismatch(format!(
                "point has {} coordinates on a {}-dimensional chart",
                coords.len(),
                chart.dim
            )));
        }
        Ok(Point { coords, chart: Arc::clone(chart) })
    }
}

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Van der Corput radical inverse in the given base.
fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let b = base as f64;
    while i > 0 {
        f /= b;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Deterministic Halton sample of the box interior. `seed` offsets the start
/// of the sequence so distinct suites draw distinct but reproducible points.
pub fn halton_points(chart: &ChartBox, count: usize, seed: u64) -> Vec<Vec<f64>> {
    assert!(chart.dim <= PRIMES.len(), "chart dimension beyond Halton base table");
    (0..count)
        .map(|i| {
            let idx = seed + i as u64 + 1;
            chart
                .bounds
                .iter()
                .enumerate()
                .map(|(d, (lo, hi))| {
                    // shrink slightly into the interior to keep reciprocal
                    // coefficients away from box corners
                    let u = radical_inverse(idx, PRIMES[d]);
                    let u = 0.02 + 0.96 * u;
                    lo + u * (hi - lo)
                })
                .collect()
        })
        .collect()
}

/// Halton sample of an abstract parameter box (used for group elements).
pub fn halton_cube(dim: usize, half_width: f64, count: usize, seed: u64) -> Vec<Vec<f64>> {
    assert!(dim <= PRIMES.len());
    (0..count)
        .map(|i| {
            let idx = seed + i as u64 + 1;
            (0..dim)
                .map(|d| (2.0 * radical_inverse(idx, PRIMES[d]) - 1.0) * half_width)
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_charts() {
        assert!(ChartBox::new(&["x", "x"], &[(0.0, 1.0), (0.0, 1.0)]).is_err());
        assert!(ChartBox::new(&["x"], &[(1.0, 1.0)]).is_err());
        assert!(ChartBox::new(&[], &[]).is_err());
    }

    #[test]
    fn halton_is_deterministic_and_inside() {
        let chart = ChartBox::new(&["t", "q"], &[(0.0, 2.0), (-5.0, 5.0)]).unwrap();
        let a = halton_points(&chart, 50, 7);
        let b = halton_points(&chart, 50, 7);
        assert_eq!(a, b);
        assert!(a.iter().all(|p| chart.contains(p)));
        let c = halton_points(&chart, 50, 8);
        assert_ne!(a, c);
    }
}
