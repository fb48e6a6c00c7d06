//! Convex tonic/phasic decomposition of a conductance series.
//!
//! The series is modeled as `y = phasic + tonic + residual` with
//! `phasic = M q` (a discretized bi-exponential response driven by the
//! nonnegative sudomotor signal `driver = A q`), `tonic = B l + C d`
//! (a slow spline plus affine drift), a sparsity weight `alpha` on the
//! driver and a ridge `gamma` on the spline coefficients. Long
//! recordings are decomposed in overlapping chunks that are
//! taper-blended, which bounds the program size for multi-day traces.

mod banded;
pub mod basis;
mod solver;

pub mod cache;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal::Series;

/// Minimum series length for a decomposition (10 s at 4 Hz).
pub const MIN_SAMPLES: usize = 40;

/// Chunk geometry for long recordings.
pub const CHUNK_SAMPLES: usize = 2400; // 10 min
pub const OVERLAP_SAMPLES: usize = 120; // 30 s

#[derive(Debug, Error)]
pub enum DecomposeError {
    #[error("series too short: {0} samples, need at least {MIN_SAMPLES}")]
    SeriesTooShort(usize),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(
        "solver did not converge after {iterations} iterations \
         (primal {primal_residual:.3e}, dual {dual_residual:.3e})"
    )]
    SolverDidNotConverge {
        iterations: usize,
        primal_residual: f64,
        dual_residual: f64,
    },
    #[error("normal-equations factorization failed")]
    Factorization,
    #[error("cache I/O error: {0}")]
    CacheIo(#[from] std::io::Error),
    #[error("cache file corrupt: {0}")]
    CacheCorrupt(String),
}

/// Parameters of the decomposition program.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CvxedaParams {
    /// Slow bi-exponential time constant in seconds.
    pub tau0_s: f64,
    /// Fast bi-exponential time constant in seconds.
    pub tau1_s: f64,
    /// Tonic spline knot spacing in seconds.
    pub knot_spacing_s: f64,
    /// Sparsity weight on the driver.
    pub alpha: f64,
    /// Ridge weight on the spline coefficients.
    pub gamma: f64,
    /// Relative KKT residual tolerance.
    pub solver_tol: f64,
    /// Iteration cap.
    pub max_iter: usize,
}

impl Default for CvxedaParams {
    fn default() -> Self {
        Self {
            tau0_s: 2.0,
            tau1_s: 0.7,
            knot_spacing_s: 10.0,
            alpha: 8e-4,
            gamma: 1e-2,
            solver_tol: 1e-6,
            max_iter: 20_000,
        }
    }
}

impl CvxedaParams {
    pub fn validate(&self) -> Result<(), DecomposeError> {
        if !(self.tau0_s > self.tau1_s && self.tau1_s > 0.0) {
            return Err(DecomposeError::InvalidParams(format!(
                "need tau0 > tau1 > 0, got tau0={}, tau1={}",
                self.tau0_s, self.tau1_s
            )));
        }
        if self.knot_spacing_s < 2.0 {
            return Err(DecomposeError::InvalidParams(format!(
                "knot spacing must be >= 2 s, got {}",
                self.knot_spacing_s
            )));
        }
        if self.alpha <= 0.0 || self.gamma <= 0.0 || self.solver_tol <= 0.0 {
            return Err(DecomposeError::InvalidParams(
                "alpha, gamma and solver_tol must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Additive split of a series; `tonic + phasic + residual == input`
/// holds sample-wise by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub tonic: Vec<f64>,
    pub phasic: Vec<f64>,
    pub driver: Vec<f64>,
    pub residual: Vec<f64>,
}

impl Decomposition {
    pub fn len(&self) -> usize {
        self.tonic.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tonic.is_empty()
    }

    /// Reconstruct the input series.
    pub fn reconstruct(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| self.tonic[i] + self.phasic[i] + self.residual[i])
            .collect()
    }
}

/// Solver diagnostics for a single program.
#[derive(Debug, Clone)]
pub struct SolveInfo {
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub objective: f64,
    /// Inequality multipliers for `driver >= 0` (nonnegative).
    pub multipliers: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct CvxedaSolution {
    pub decomposition: Decomposition,
    pub info: SolveInfo,
}

/// Solve the decomposition program for one series (no chunking).
///
/// Identical inputs and parameters yield bit-identical outputs: the
/// iteration order is fixed and nothing draws random numbers.
pub fn cvxeda(series: &Series, params: &CvxedaParams) -> Result<CvxedaSolution, DecomposeError> {
    params.validate()?;
    let y = series.values();
    let n = y.len();
    if n < MIN_SAMPLES {
        return Err(DecomposeError::SeriesTooShort(n));
    }

    let y_scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if y_scale < 1e-12 {
        // The zero solution is exactly optimal for (numerically) zero
        // input: every objective term is nonnegative and zero there.
        return Ok(CvxedaSolution {
            decomposition: Decomposition {
                tonic: vec![0.0; n],
                phasic: vec![0.0; n],
                driver: vec![0.0; n],
                residual: y.to_vec(),
            },
            info: SolveInfo {
                iterations: 0,
                primal_residual: 0.0,
                dual_residual: 0.0,
                objective: 0.5 * y.iter().map(|v| v * v).sum::<f64>(),
                multipliers: vec![0.0; n],
            },
        });
    }

    let y_norm: Vec<f64> = y.iter().map(|v| v / y_scale).collect();
    let mut params_norm = params.clone();
    params_norm.alpha = params.alpha / y_scale;

    let ws = solver::Workspace::new(y_norm, &params_norm);
    let sol = ws.solve(&params_norm)?;

    let mut x = sol.q.clone();
    x.extend_from_slice(&sol.spline);
    x.extend_from_slice(&sol.drift);
    let objective = y_scale * y_scale * ws.objective(&x);

    let phasic: Vec<f64> = ws.phasic(&x).iter().map(|v| v * y_scale).collect();
    // The driver is the cone-projected splitting variable: exactly
    // nonnegative and within the primal residual of A q.
    let driver: Vec<f64> = sol.z.iter().map(|v| v * y_scale).collect();
    // tonic = model - phasic (spline + drift part only).
    let model = ws.model(&x);
    let tonic: Vec<f64> = (0..n)
        .map(|i| (model[i] * y_scale) - phasic[i])
        .collect();
    let residual: Vec<f64> = (0..n).map(|i| y[i] - phasic[i] - tonic[i]).collect();
    let multipliers: Vec<f64> = sol.multipliers.iter().map(|v| v * y_scale).collect();

    Ok(CvxedaSolution {
        decomposition: Decomposition {
            tonic,
            phasic,
            driver,
            residual,
        },
        info: SolveInfo {
            iterations: sol.iterations,
            primal_residual: sol.primal_residual,
            dual_residual: sol.dual_residual,
            objective,
            multipliers,
        },
    })
}

/// Decompose a recording of any length, chunking long series into
/// 10 min programs with 30 s taper-blended overlap. Chunks solve in
/// parallel; the blend order is fixed, so results are deterministic.
pub fn decompose_recording(
    series: &Series,
    params: &CvxedaParams,
) -> Result<Decomposition, DecomposeError> {
    let n = series.len();
    if n <= CHUNK_SAMPLES {
        return Ok(cvxeda(series, params)?.decomposition);
    }

    let step = CHUNK_SAMPLES - OVERLAP_SAMPLES;
    let mut starts = vec![0usize];
    loop {
        let next = starts.last().unwrap() + step;
        if next + CHUNK_SAMPLES >= n {
            let last = n - CHUNK_SAMPLES;
            if last > *starts.last().unwrap() {
                starts.push(last);
            }
            break;
        }
        starts.push(next);
    }

    let y = series.values();
    let chunks: Result<Vec<(usize, Decomposition)>, DecomposeError> = starts
        .par_iter()
        .map(|&s| {
            let sub = Series::new(y[s..s + CHUNK_SAMPLES].to_vec()).expect("finite slice");
            Ok((s, cvxeda(&sub, params)?.decomposition))
        })
        .collect();
    let chunks = chunks?;

    let mut tonic = vec![0.0; n];
    let mut phasic = vec![0.0; n];
    let mut driver = vec![0.0; n];
    let mut filled = 0usize; // exclusive end of the blended prefix
    for (start, dec) in chunks {
        let end = start + CHUNK_SAMPLES;
        let overlap = filled.saturating_sub(start);
        for i in 0..CHUNK_SAMPLES {
            let gi = start + i;
            if gi < filled {
                // Linear taper strictly inside the overlap.
                let w = (i + 1) as f64 / (overlap + 1) as f64;
                tonic[gi] = (1.0 - w) * tonic[gi] + w * dec.tonic[i];
                phasic[gi] = (1.0 - w) * phasic[gi] + w * dec.phasic[i];
                driver[gi] = (1.0 - w) * driver[gi] + w * dec.driver[i];
            } else {
                tonic[gi] = dec.tonic[i];
                phasic[gi] = dec.phasic[i];
                driver[gi] = dec.driver[i];
            }
        }
        filled = end;
    }

    let residual: Vec<f64> = (0..n).map(|i| y[i] - phasic[i] - tonic[i]).collect();
    Ok(Decomposition {
        tonic,
        phasic,
        driver,
        residual,
    })
}
