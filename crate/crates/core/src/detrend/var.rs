use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Least squares VAR(1) fit on centered columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Var1Fit {
    pub phi: DMatrix<f64>,
    /// `(T - 1) x p`, row `t - 1` holds `y_t`.
    pub residuals: DMatrix<f64>,
    pub means: Vec<f64>,
    pub spectral_radius: f64,
    pub stable: bool,
}

/// Fits `x_t = Phi x_{t-1} + y_t` to the `T x p` matrix `x`.
pub fn fit_var1(x: &DMatrix<f64>) -> Result<Var1Fit> {
    let (t, p) = x.shape();
    if p == 0 || t < p + 2 {
        return Err(Error::invalid(format!(
            "VAR(1) needs at least p + 2 = {} rows, got {t}",
            p + 2
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite observation"));
    }
    let means: Vec<f64> = x.column_iter().map(|c| c.mean()).collect();
    let mut xc = x.clone();
    for (j, mut col) in xc.column_iter_mut().enumerate() {
        col.add_scalar_mut(-means[j]);
    }
    let lead = xc.rows(1, t - 1);
    let lag = xc.rows(0, t - 1);
    let cross = lead.transpose() * lag;
    let gram = lag.transpose() * lag;
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::RankDeficient("lagged Gram matrix is singular".into()))?;
    let ld = chol.l_dirty().diagonal();
    let (lo, hi) = ld.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &d| (a.min(d), b.max(d)));
    if lo <= 1e-7 * hi {
        return Err(Error::RankDeficient("lagged Gram matrix is numerically singular".into()));
    }
    // Phi = cross * gram^{-1}  <=>  gram * Phi' = cross'
    let phi = chol.solve(&cross.transpose()).transpose();
    let residuals = lead - lag * phi.transpose();
    let spectral_radius = phi
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    Ok(Var1Fit {
        phi,
        residuals,
        means,
        spectral_radius,
        stable: spectral_radius < 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn simulate(phi: &DMatrix<f64>, t: usize, seed: u64) -> DMatrix<f64> {
        let p = phi.nrows();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = DMatrix::zeros(t, p);
        let mut prev = nalgebra::DVector::zeros(p);
        for r in 0..t + 100 {
            let e = nalgebra::DVector::from_fn(p, |_, _| StandardNormal.sample(&mut rng));
            let cur = phi * &prev + e;
            if r >= 100 {
                x.set_row(r - 100, &cur.transpose());
            }
            prev = cur;
        }
        x
    }

    fn known_phi() -> DMatrix<f64> {
        let mut phi = DMatrix::from_diagonal_element(5, 5, 0.98);
        phi[(0, 1)] = 0.05;
        phi[(2, 3)] = -0.04;
        phi[(4, 0)] = 0.03;
        phi
    }

    #[test]
    fn white_noise_gives_small_phi() {
        let x = simulate(&DMatrix::zeros(4, 4), 20_000, 1);
        let fit = fit_var1(&x).unwrap();
        assert!(fit.phi.norm() < 0.05);
        assert!(fit.stable);
    }

    #[test]
    fn recovers_known_phi() {
        let phi = known_phi();
        let mut errs: Vec<f64> = (0..40)
            .map(|seed| {
                let fit = fit_var1(&simulate(&phi, 404, seed)).unwrap();
                assert_eq!(fit.residuals.nrows(), 403);
                (&fit.phi - &phi).norm()
            })
            .collect();
        errs.sort_by(f64::total_cmp);
        assert!(errs[19] < 0.1, "median error {}", errs[19]);
        assert!(errs[39] < 0.2, "worst error {}", errs[39]);
    }

    #[test]
    fn residuals_orthogonal_to_lags() {
        let x = simulate(&known_phi(), 404, 3);
        let fit = fit_var1(&x).unwrap();
        let mut xc = x.clone();
        for (j, mut c) in xc.column_iter_mut().enumerate() {
            c.add_scalar_mut(-fit.means[j]);
        }
        let lag = xc.rows(0, 403);
        assert!((fit.residuals.transpose() * lag).norm() < 1e-8);
    }

    #[test]
    fn rank_deficiency_and_short_input() {
        let mut x = simulate(&known_phi(), 50, 9);
        let c0 = x.column(0).clone_owned();
        x.set_column(1, &(c0 * 2.0));
        assert!(matches!(fit_var1(&x), Err(Error::RankDeficient(_))));
        assert!(fit_var1(&DMatrix::zeros(6, 5)).is_err());
    }

    #[test]
    fn stable_flag_tracks_radius() {
        let x = simulate(&known_phi(), 404, 11);
        let fit = fit_var1(&x).unwrap();
        let r = fit.phi.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert_eq!(fit.stable, r < 1.0);
    }
}
