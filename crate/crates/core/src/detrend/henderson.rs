use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// How the filter weights are derived from the kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HendersonVariant {
    /// Equivalent kernel of a weighted least squares local cubic fit.
    #[default]
    Wls,
    /// Kernel values normalized to unit sum. Does not reproduce cubics.
    NormalizedKernel,
}

/// Symmetric `2h + 1` term moving average.
#[derive(Debug, Clone, PartialEq)]
pub struct HendersonFilter {
    pub h: usize,
    /// `weights[h + j]` multiplies `x_{t+j}`.
    pub weights: Vec<f64>,
}

impl HendersonFilter {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weight(&self, j: i64) -> f64 {
        self.weights[(self.h as i64 + j) as usize]
    }
}

fn kernel(h: usize, j: i64) -> f64 {
    let h = h as f64;
    let j2 = (j * j) as f64;
    ((h + 1.0).powi(2) - j2) * ((h + 2.0).powi(2) - j2) * ((h + 3.0).powi(2) - j2)
}

/// Weights of the local-cubic filter of half-width `h`.
pub fn henderson_weights(h: usize) -> Result<HendersonFilter> {
    henderson_weights_with(h, HendersonVariant::Wls)
}

pub fn henderson_weights_with(h: usize, variant: HendersonVariant) -> Result<HendersonFilter> {
    if h < 2 {
        return Err(Error::invalid(format!("half-width must be at least 2, got {h}")));
    }
    let m = 2 * h + 1;
    let offsets: Vec<i64> = (-(h as i64)..=h as i64).collect();
    let k: Vec<f64> = offsets.iter().map(|&j| kernel(h, j)).collect();
    let weights = match variant {
        HendersonVariant::NormalizedKernel => {
            let total: f64 = k.iter().sum();
            k.iter().map(|x| x / total).collect()
        }
        HendersonVariant::Wls => {
            // beta_0 row of (X' K X)^{-1} X' K with X = [1, j, j^2, j^3]
            let x = DMatrix::from_fn(m, 4, |r, c| (offsets[r] as f64).powi(c as i32));
            let kx = DMatrix::from_fn(m, 4, |r, c| k[r] * x[(r, c)]);
            let gram = x.transpose() * &kx;
            let chol = gram
                .cholesky()
                .ok_or_else(|| Error::RankDeficient("local cubic design".into()))?;
            let e0 = chol.solve(&DVector::from_column_slice(&[1.0, 0.0, 0.0, 0.0]));
            (kx * e0).iter().copied().collect()
        }
    };
    Ok(HendersonFilter { h, weights })
}

/// Filtered trend and residuals on the interior points `h..T-h`.
pub fn apply_filter(x: &[f64], f: &HendersonFilter) -> Result<(Vec<f64>, Vec<f64>)> {
    let h = f.h;
    if x.len() <= 2 * h {
        return Err(Error::invalid(format!(
            "series of length {} is too short for a {}-term filter",
            x.len(),
            f.len()
        )));
    }
    let n = x.len() - 2 * h;
    let mut mu = Vec::with_capacity(n);
    let mut res = Vec::with_capacity(n);
    for t in h..x.len() - h {
        let m: f64 = f
            .weights
            .iter()
            .zip(&x[t - h..=t + h])
            .map(|(w, v)| w * v)
            .sum();
        mu.push(m);
        res.push(x[t] - m);
    }
    Ok((mu, res))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn thirteen_term_central_weight() {
        let f = henderson_weights(6).unwrap();
        assert_eq!(f.len(), 13);
        assert!((f.weight(0) - 0.2401).abs() < 5e-4, "{}", f.weight(0));
        // classical 13-term values
        assert!((f.weight(6) + 0.01935).abs() < 1e-4);
        assert!((f.weight(3) - 0.06549).abs() < 1e-4, "{:?}", f.weights);
    }

    #[test]
    fn normalized_kernel_fails_cubics() {
        let f = henderson_weights_with(6, HendersonVariant::NormalizedKernel).unwrap();
        assert!((f.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let second: f64 = (-6i64..=6).map(|j| f.weight(j) * (j * j) as f64).sum();
        assert!(second.abs() > 1.0);
    }

    #[test]
    fn rejects_narrow_filters() {
        assert!(henderson_weights(1).is_err());
        let f = henderson_weights(6).unwrap();
        assert!(apply_filter(&[1.0; 12], &f).is_err());
    }

    #[test]
    fn lengths_and_constants() {
        let f = henderson_weights(6).unwrap();
        let (mu, res) = apply_filter(&vec![3.5; 404], &f).unwrap();
        assert_eq!(mu.len(), 392);
        assert!(res.iter().all(|r| r.abs() < 1e-12));
    }

    #[test]
    fn cubic_reproduction_on_long_grid() {
        let f = henderson_weights(6).unwrap();
        let x: Vec<f64> = (0..200).map(|t| ((t as f64) / 10.0).powi(3)).collect();
        let (mu, _) = apply_filter(&x, &f).unwrap();
        for (k, m) in mu.iter().enumerate() {
            let target = x[k + 6];
            assert!((m - target).abs() <= 1e-10 * target.abs().max(1.0));
        }
    }

    proptest! {
        #[test]
        fn weights_are_symmetric_and_reproduce_cubics(h in 2usize..25) {
            let f = henderson_weights(h).unwrap();
            let hi = h as i64;
            let sum: f64 = f.weights.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-10);
            for j in 1..=hi {
                prop_assert!((f.weight(j) - f.weight(-j)).abs() < 1e-10);
            }
            for power in 1..=3 {
                let moment: f64 = (-hi..=hi).map(|j| f.weight(j) * (j as f64).powi(power)).sum();
                prop_assert!(moment.abs() < 1e-10 * (h as f64).powi(power).max(1.0));
            }
        }
    }
}
