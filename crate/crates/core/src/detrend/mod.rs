//! Removal of the temporal signal from multivariate series.
//!
//! Three front-ends are provided: a joint VAR(1) fit, a per-column
//! score-driven Student-t location filter and a per-column Henderson moving
//! average. Each returns residuals on a time index shared by all columns.

mod dcs;
mod henderson;
mod var;

pub use dcs::{
    dcs_filter, dcs_loglik, dcs_score, dcs_score_bound, fit_dcs, DcsDiagnostics, DcsFit, DcsStatus,
    MIN_DCS_LEN,
};
pub use henderson::{apply_filter, henderson_weights, henderson_weights_with, HendersonFilter, HendersonVariant};
pub use var::{fit_var1, Var1Fit};

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// `T x p` observations with one label per column.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesMatrix {
    data: DMatrix<f64>,
    names: Vec<String>,
}

impl TimeSeriesMatrix {
    pub fn new(data: DMatrix<f64>, names: Vec<String>) -> Result<Self> {
        if names.len() != data.ncols() {
            return Err(Error::invalid(format!(
                "{} column names for {} columns",
                names.len(),
                data.ncols()
            )));
        }
        if let Some(k) = data.iter().position(|v| !v.is_finite()) {
            let (r, c) = (k % data.nrows(), k / data.nrows());
            return Err(Error::invalid(format!(
                "non-finite value at row {r}, column '{}'",
                names[c]
            )));
        }
        Ok(TimeSeriesMatrix { data, names })
    }

    /// Columns named `x1..xp`.
    pub fn unnamed(data: DMatrix<f64>) -> Result<Self> {
        let names = (1..=data.ncols()).map(|j| format!("x{j}")).collect();
        Self::new(data, names)
    }

    pub fn t(&self) -> usize {
        self.data.nrows()
    }

    pub fn p(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.data.column(j).iter().copied().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DetrendMethod {
    Var1,
    Dcs,
    Henderson { h: usize, variant: HendersonVariant },
}

impl DetrendMethod {
    pub fn henderson(h: usize) -> Self {
        DetrendMethod::Henderson {
            h,
            variant: HendersonVariant::Wls,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DetrendMethod::Var1 => "var1",
            DetrendMethod::Dcs => "dcs",
            DetrendMethod::Henderson { .. } => "henderson",
        }
    }
}

/// Per-method fit records kept next to the residuals.
#[derive(Debug, Clone, PartialEq)]
pub enum DetrendDiagnostics {
    Var1(Box<Var1Fit>),
    Dcs(Vec<DcsFit>),
    Henderson(HendersonFilter),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detrended {
    /// `n x p` residual matrix.
    pub residuals: DMatrix<f64>,
    pub names: Vec<String>,
    /// Row of the input that residual row 0 corresponds to.
    pub first_row: usize,
    pub diagnostics: DetrendDiagnostics,
}

/// Residual matrix of `x` under `method`.
pub fn detrend(x: &TimeSeriesMatrix, method: DetrendMethod) -> Result<Detrended> {
    let (t, p) = (x.t(), x.p());
    let with_label = |j: usize, e: Error| -> Error {
        let msg = format!("column '{}': {e}", x.names[j]);
        match e {
            Error::InvalidInput(_) => Error::InvalidInput(msg),
            Error::Domain(_) => Error::Domain(msg),
            Error::RankDeficient(_) => Error::RankDeficient(msg),
            Error::NonConvergence(_) => Error::NonConvergence(msg),
        }
    };
    match method {
        DetrendMethod::Var1 => {
            let fit = fit_var1(&x.data)?;
            Ok(Detrended {
                residuals: fit.residuals.clone(),
                names: x.names.clone(),
                first_row: 1,
                diagnostics: DetrendDiagnostics::Var1(Box::new(fit)),
            })
        }
        DetrendMethod::Dcs => {
            let fits: Vec<DcsFit> = (0..p)
                .into_par_iter()
                .map(|j| fit_dcs(&x.column(j)).map_err(|e| with_label(j, e)))
                .collect::<Result<_>>()?;
            let residuals = DMatrix::from_fn(t, p, |r, c| fits[c].residuals[r]);
            Ok(Detrended {
                residuals,
                names: x.names.clone(),
                first_row: 0,
                diagnostics: DetrendDiagnostics::Dcs(fits),
            })
        }
        DetrendMethod::Henderson { h, variant } => {
            let filter = henderson_weights_with(h, variant)?;
            let cols: Vec<Vec<f64>> = (0..p)
                .into_par_iter()
                .map(|j| {
                    apply_filter(&x.column(j), &filter)
                        .map(|(_, r)| r)
                        .map_err(|e| with_label(j, e))
                })
                .collect::<Result<_>>()?;
            let n = t - 2 * h;
            Ok(Detrended {
                residuals: DMatrix::from_fn(n, p, |r, c| cols[c][r]),
                names: x.names.clone(),
                first_row: h,
                diagnostics: DetrendDiagnostics::Henderson(filter),
            })
        }
    }
}
