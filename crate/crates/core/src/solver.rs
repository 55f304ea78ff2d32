//! Douglas–Rachford iteration for
//!
//! ```text
//! argmin_c ‖w ⊙ c‖₁ + ι_Γ(c),
//! Γ = { c : (Dc)_R = y_R, (Dc)_H ≥ θc, (Dc)_L ≤ −θc }
//! ```
//!
//! Each step alternates the projection onto Γ (closed form for a Parseval
//! frame) with weighted complex soft thresholding.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::gabor::{CoefGrid, GaborFrame};
use crate::signal::{ClipMask, SampleClass};
use crate::weights::{assemble_weight_grid, WeightGrid, WeightKind, WeightRecipe};
use crate::{Error, Result, Signal};

/// Slack on the H/L inequalities when checking a reconstruction.
pub const CONSISTENCY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Soft-threshold step `γ > 0`.
    pub gamma: f64,
    /// Relaxation `λ ∈ (0, 2)`.
    pub lambda: f64,
    pub max_iter: usize,
    pub record_objective: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { gamma: 1.0, lambda: 1.0, max_iter: 1000, record_objective: false }
    }
}

impl SolverConfig {
    pub fn with_iterations(max_iter: usize) -> Self {
        Self { max_iter, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::InvalidConfig("gamma must be positive"));
        }
        if !(self.lambda > 0.0 && self.lambda < 2.0) {
            return Err(Error::InvalidConfig("lambda must lie in (0, 2)"));
        }
        Ok(())
    }
}

/// Observed signal, its clip mask, the frame and the weights.
#[derive(Debug, Clone)]
pub struct DeclipProblem {
    observed: Signal,
    mask: ClipMask,
    frame: GaborFrame,
    weights: WeightGrid,
}

impl DeclipProblem {
    pub fn new(observed: Signal, mask: ClipMask, frame: GaborFrame, weights: WeightGrid) -> Result<Self> {
        if mask.len() != observed.len() {
            return Err(Error::LengthMismatch { expected: observed.len(), found: mask.len() });
        }
        if frame.signal_len() != observed.len() {
            return Err(Error::LengthMismatch { expected: observed.len(), found: frame.signal_len() });
        }
        if weights.shape() != frame.grid_shape() {
            return Err(Error::ShapeMismatch { expected: frame.grid_shape(), found: weights.shape() });
        }
        Ok(Self { observed, mask, frame, weights })
    }

    pub fn observed(&self) -> &Signal {
        &self.observed
    }

    pub fn mask(&self) -> &ClipMask {
        &self.mask
    }

    pub fn frame(&self) -> &GaborFrame {
        &self.frame
    }

    pub fn weights(&self) -> &WeightGrid {
        &self.weights
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    /// `D proj_Γ(c_final)`, consistent with the observation.
    pub restored: Signal,
    /// `proj_Γ(c_final)`.
    pub coefficients: CoefGrid,
    /// `‖w ⊙ c̃⁽ⁱ⁾‖₁` per iteration, if requested.
    pub objective_trace: Option<Vec<f64>>,
    pub iterations_run: usize,
}

/// Time-domain projection onto the consistency set, in place.
pub fn project_time_in_place(z: &mut [f64], mask: &ClipMask, y: &[f64]) {
    let theta = mask.threshold();
    for ((v, class), &obs) in z.iter_mut().zip(mask.classes()).zip(y) {
        *v = match class {
            SampleClass::Reliable => obs,
            SampleClass::High => v.max(theta),
            SampleClass::Low => v.min(-theta),
        };
    }
}

pub fn project_time(z: &Signal, mask: &ClipMask, y: &Signal) -> Result<Signal> {
    if z.len() != y.len() || mask.len() != y.len() {
        return Err(Error::LengthMismatch { expected: y.len(), found: z.len() });
    }
    let mut out = z.samples().to_vec();
    project_time_in_place(&mut out, mask, y.samples());
    Signal::new(out, z.sample_rate())
}

/// Scratch space for repeated projections.
struct Projector<'a> {
    problem: &'a DeclipProblem,
    time: Vec<f64>,
}

impl<'a> Projector<'a> {
    fn new(problem: &'a DeclipProblem) -> Self {
        Self { problem, time: vec![0.0; problem.observed.len()] }
    }

    /// `out = c − D*(Dc − proj(Dc))`. Returns false if `Dc` is not finite.
    fn project(&mut self, c: &CoefGrid, out: &mut CoefGrid) -> Result<bool> {
        let frame = &self.problem.frame;
        frame.synthesize_into(c, &mut self.time)?;
        if !self.time.iter().all(|v| v.is_finite()) {
            return Ok(false);
        }
        let y = self.problem.observed.samples();
        let theta = self.problem.mask.threshold();
        for ((v, class), &obs) in self.time.iter_mut().zip(self.problem.mask.classes()).zip(y) {
            // residual Dc − proj(Dc)
            *v = match class {
                SampleClass::Reliable => *v - obs,
                SampleClass::High => (*v - theta).min(0.0),
                SampleClass::Low => (*v + theta).max(0.0),
            };
        }
        frame.analyze_into(&self.time, out)?;
        for (o, a) in out.as_mut_slice().iter_mut().zip(c.as_slice()) {
            *o = a - *o;
        }
        Ok(true)
    }
}

/// Projection onto Γ.
pub fn project_gamma(c: &CoefGrid, problem: &DeclipProblem) -> Result<CoefGrid> {
    let (m, t) = problem.frame.grid_shape();
    let mut out = CoefGrid::zeros(m, t);
    if !Projector::new(problem).project(c, &mut out)? {
        return Err(Error::Diverged { iteration: 0 });
    }
    Ok(out)
}

/// `sgn(z) · max(|z| − threshold, 0)` with `sgn(z) = z/|z|`.
#[inline]
pub fn soft_threshold_scalar(z: Complex64, threshold: f64) -> Complex64 {
    let magnitude = z.norm();
    if magnitude <= threshold {
        Complex64::new(0.0, 0.0)
    } else {
        z * ((magnitude - threshold) / magnitude)
    }
}

/// Elementwise soft thresholding with per-coefficient thresholds.
pub fn soft_threshold(c: &CoefGrid, thresholds: &[f64]) -> Result<CoefGrid> {
    if thresholds.len() != c.as_slice().len() {
        return Err(Error::LengthMismatch { expected: c.as_slice().len(), found: thresholds.len() });
    }
    let data = c
        .as_slice()
        .iter()
        .zip(thresholds)
        .map(|(&z, &thr)| soft_threshold_scalar(z, thr))
        .collect();
    CoefGrid::from_vec(c.channels(), c.frames(), data)
}

/// `‖w ⊙ c‖₁`.
pub fn weighted_l1(c: &CoefGrid, w: &WeightGrid) -> f64 {
    c.as_slice().iter().zip(w.as_slice()).map(|(z, w)| w * z.norm()).sum()
}

/// Run the Douglas–Rachford iteration from `c⁽⁰⁾ = D*y`.
pub fn solve(problem: &DeclipProblem, config: &SolverConfig) -> Result<SolveResult> {
    config.validate()?;
    let frame = &problem.frame;
    let (m, t) = frame.grid_shape();
    let thresholds: Vec<f64> = problem.weights.as_slice().iter().map(|w| config.gamma * w).collect();

    let mut c = frame.analyze(&problem.observed)?;
    let mut projected = CoefGrid::zeros(m, t);
    let mut projector = Projector::new(problem);
    let mut trace = config.record_objective.then(|| Vec::with_capacity(config.max_iter));
    let lambda = config.lambda;

    for iteration in 0..config.max_iter {
        if !projector.project(&c, &mut projected)? {
            return Err(Error::Diverged { iteration });
        }
        if let Some(trace) = trace.as_mut() {
            trace.push(weighted_l1(&projected, &problem.weights));
        }
        for ((ci, &pi), &thr) in c.as_mut_slice().iter_mut().zip(projected.as_slice()).zip(&thresholds) {
            let shrunk = soft_threshold_scalar(pi * 2.0 - *ci, thr);
            *ci += (shrunk - pi) * lambda;
        }
        if iteration % 100 == 99 {
            log::trace!("iteration {}", iteration + 1);
        }
    }

    if !projector.project(&c, &mut projected)? {
        return Err(Error::Diverged { iteration: config.max_iter });
    }
    let mut restored = vec![0.0; problem.observed.len()];
    frame.synthesize_into(&projected, &mut restored)?;
    // D proj_Γ(c) is already feasible up to rounding; snap it exactly.
    project_time_in_place(&mut restored, &problem.mask, problem.observed.samples());
    let restored = Signal::new(restored, problem.observed.sample_rate())
        .map_err(|_| Error::Diverged { iteration: config.max_iter })?;

    Ok(SolveResult {
        restored,
        coefficients: projected,
        objective_trace: trace,
        iterations_run: config.max_iter,
    })
}

/// Declip with any recipe: masking recipes go through [`declip_two_pass`],
/// the rest are solved once.
pub fn declip(
    observed: &Signal,
    mask: &ClipMask,
    frame: &GaborFrame,
    recipe: &WeightRecipe,
    config: &SolverConfig,
) -> Result<SolveResult> {
    if recipe.kind.is_masking() {
        return declip_two_pass(observed, mask, frame, recipe, config);
    }
    let weights = assemble_weight_grid(recipe, frame, observed.sample_rate(), None)?;
    let problem = DeclipProblem::new(observed.clone(), mask.clone(), frame.clone(), weights)?;
    log::info!("solving with {} weights, {} iterations", recipe.kind, config.max_iter);
    solve(&problem, config)
}

/// Unweighted first pass, then masking-threshold weights computed from the
/// first-pass reconstruction for the second pass.
pub fn declip_two_pass(
    observed: &Signal,
    mask: &ClipMask,
    frame: &GaborFrame,
    recipe: &WeightRecipe,
    config: &SolverConfig,
) -> Result<SolveResult> {
    if !recipe.kind.is_masking() {
        return Err(Error::NotMaskingRecipe);
    }
    let fs = observed.sample_rate();
    let unweighted = assemble_weight_grid(&WeightRecipe::new(WeightKind::None), frame, fs, None)?;
    let problem = DeclipProblem::new(observed.clone(), mask.clone(), frame.clone(), unweighted)?;
    log::info!("pass 1/2: unweighted, {} iterations", config.max_iter);
    let first = solve(&problem, config)?;

    let weights = assemble_weight_grid(recipe, frame, fs, Some(&first.restored))?;
    let problem = DeclipProblem::new(observed.clone(), mask.clone(), frame.clone(), weights)?;
    log::info!("pass 2/2: {} weights, {} iterations", recipe.kind, config.max_iter);
    solve(&problem, config)
}

/// How far a reconstruction strays from the consistency set.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Consistency {
    /// `max |x̂_n − y_n|` over reliable samples.
    pub reliable_max_dev: f64,
    /// `max (θc − x̂_n)⁺` over H.
    pub high_violation: f64,
    /// `max (x̂_n + θc)⁺` over L.
    pub low_violation: f64,
    pub reliable: usize,
    pub high: usize,
    pub low: usize,
}

impl Consistency {
    pub fn holds(&self, tol: f64) -> bool {
        self.reliable_max_dev <= tol && self.high_violation <= tol && self.low_violation <= tol
    }
}

pub fn consistency(restored: &[f64], observed: &[f64], mask: &ClipMask) -> Consistency {
    let theta = mask.threshold();
    let mut report = Consistency::default();
    for ((&x, &y), class) in restored.iter().zip(observed).zip(mask.classes()) {
        match class {
            SampleClass::Reliable => {
                report.reliable += 1;
                report.reliable_max_dev = report.reliable_max_dev.max((x - y).abs());
            }
            SampleClass::High => {
                report.high += 1;
                report.high_violation = report.high_violation.max(theta - x);
            }
            SampleClass::Low => {
                report.low += 1;
                report.low_violation = report.low_violation.max(x + theta);
            }
        }
    }
    report
}
