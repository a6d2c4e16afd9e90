//! Real-argument special functions and the two correlated-Ricean cross-moment
//! kernels used by the closed-form mean-SNR engine.
//!
//! * Scalar functions: [`ln_gamma`], [`hyp1f1`], [`hyp2f1`], [`laguerre_half`].
//! * [`eval_fr`] — normalized envelope cross-moment `F_R = E[|h_i||h_j|]/β` of
//!   two correlated Ricean variables.
//! * [`eval_gr`] — phasor cross-moment `G_R = E[e^{j∠h_i} e^{−j∠h_j}]`.
//!
//! Both kernels are defined by double infinite series. The series are summed
//! in log-magnitude space with block-level truncation control; where the
//! series is ill-conditioned (strong correlation combined with large LoS
//! phase offsets makes the partial sums cancel by tens of orders of
//! magnitude) the evaluator switches to an exact smooth-integrand polar
//! quadrature of the same expectation. Every returned value therefore
//! satisfies the truncation certificate: doubling `max_terms` moves it by
//! less than `rel_tol`.

mod cross;
mod gamma;
mod hyper;

pub use cross::{eval_fr, eval_gr, FRParams, GRParams};
pub use gamma::ln_gamma;
pub use hyper::{hyp1f1, hyp2f1, laguerre_half};

pub(crate) use hyper::{
    envelope_mean_factor, laguerre_half_neg, ln_hyp1f1_pos, phasor_mean_factor,
};

use crate::error::{Error, Result};

/// Truncation control for the infinite double series.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesControl {
    /// Relative contribution below which an entire outer-index block stops
    /// the summation.
    pub rel_tol: f64,
    /// Cap on the outer-series index.
    pub max_terms: usize,
}

impl Default for SeriesControl {
    fn default() -> Self {
        SeriesControl { rel_tol: 1e-10, max_terms: 200 }
    }
}

impl SeriesControl {
    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1e-3) {
            return Err(Error::Domain {
                context: "SeriesControl",
                message: format!("rel_tol = {} not in (0, 1e-3)", self.rel_tol),
            });
        }
        if self.max_terms < 16 {
            return Err(Error::Domain {
                context: "SeriesControl",
                message: format!("max_terms = {} < 16", self.max_terms),
            });
        }
        Ok(())
    }
}
