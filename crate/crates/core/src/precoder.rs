//! 1-bit precoder design for a fixed phase matrix by projected conjugate
//! gradient ascent.
//!
//! The solver keeps a continuous surrogate `v_cont`. Gradients are central
//! differences of the SE of the power-scaled surrogate; candidates along the
//! search direction are projected onto the 1-bit alphabet and accepted only
//! when they improve the best quantized SE seen so far. A short single-entry
//! polish over the alphabet runs after the CG loop stops.

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::{settled, PrecoderObjective};
use crate::quantizer::{xi_set, ScaledCodeword};
use crate::scalar::{norm_sqr_vec, Cplx, Real};

/// Below this norm the previous gradient is treated as zero and CG restarts.
const GRAD_RESET_NORM: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Central-difference offset.
    pub delta: f64,
    /// Stop when successive SE values differ by at most this (bits/s/Hz),
    /// scaled by the SE when it is below one.
    pub eps: f64,
    pub max_iter: usize,
    /// Relative step sizes tried by the line search, largest first. Each is
    /// multiplied by `‖v‖ / ‖p‖`.
    pub step_candidates: Vec<f64>,
    /// Restart with steepest ascent every this many iterations; `0` means the
    /// antenna count.
    pub restart_every: usize,
    /// Single-entry sweeps over the alphabet once CG stops; `0` disables.
    pub polish_sweeps: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            delta: 1e-4,
            eps: 1e-4,
            max_iter: 200,
            step_candidates: (0..=10).map(|k| 0.5f64.powi(k)).collect(),
            restart_every: 0,
            polish_sweeps: 20,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::Domain(format!(
                "precoder.delta must be positive, got {}",
                self.delta
            )));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::Domain(format!(
                "precoder.eps must be positive, got {}",
                self.eps
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::Domain("precoder.max_iter must be at least 1".into()));
        }
        if self.step_candidates.is_empty() || self.step_candidates.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::Domain(
                "precoder.step_candidates must be non-empty and positive".into(),
            ));
        }
        Ok(())
    }
}

/// Internals of one projected-CG solve.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderState<T> {
    pub v_cont: Array1<Cplx<T>>,
    pub v_quant: ScaledCodeword<T>,
    pub grad: Array1<Cplx<T>>,
    pub direction: Array1<Cplx<T>>,
    /// Last accepted line-search step.
    pub step: T,
    pub iter: usize,
    pub best_se: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct P1Outcome<T> {
    pub precoder: ScaledCodeword<T>,
    /// Best SE after each iteration, starting with the initial point.
    pub trace: Vec<T>,
    pub converged: bool,
    pub state: PrecoderState<T>,
}

/// Central-difference gradient in the real and imaginary part of each entry.
///
/// Entry `i` is `∂f/∂Re vᵢ + j·∂f/∂Im vᵢ`.
pub fn numerical_gradient<T, F>(v: &[Cplx<T>], f: F, delta: T) -> Result<Array1<Cplx<T>>>
where
    T: Real,
    F: Fn(&[Cplx<T>]) -> T,
{
    if !(delta > T::zero()) {
        return Err(Error::Domain(format!(
            "finite-difference offset must be positive, got {delta}"
        )));
    }
    let mut probe = v.to_vec();
    let two_delta = T::two() * delta;
    let mut grad = Array1::from_elem(v.len(), Cplx::new(T::zero(), T::zero()));
    for i in 0..v.len() {
        let base = probe[i];
        let mut part = |shift: Cplx<T>| -> Result<T> {
            probe[i] = base + shift;
            let up = f(&probe);
            probe[i] = base - shift;
            let down = f(&probe);
            probe[i] = base;
            let d = (up - down) / two_delta;
            if d.is_finite() {
                Ok(d)
            } else {
                Err(Error::NonFinite {
                    stage: "numerical_gradient",
                })
            }
        };
        let re = part(Cplx::new(delta, T::zero()))?;
        let im = part(Cplx::new(T::zero(), delta))?;
        grad[i] = Cplx::new(re, im);
    }
    Ok(grad)
}

/// Fletcher–Reeves direction `g_new + (‖g_new‖²/‖g_old‖²)·p_old`; steepest
/// ascent when the previous gradient vanishes.
pub fn cg_direction<T: Real>(grad_new: &[Cplx<T>], grad_old: &[Cplx<T>], dir_old: &[Cplx<T>]) -> Array1<Cplx<T>> {
    let old = norm_sqr_vec(grad_old);
    if old.sqrt() < T::lit(GRAD_RESET_NORM) {
        return grad_new.iter().copied().collect();
    }
    let beta = norm_sqr_vec(grad_new) / old;
    grad_new.iter().zip(dir_old).map(|(g, p)| g + p * beta).collect()
}

/// Tries `v + ξ·dir` for each candidate `ξ` and returns the one whose quantized
/// SE is largest, or `(0, f(v))` when none beats `baseline_se`.
pub fn line_search<T: Real>(
    v: &[Cplx<T>],
    dir: &[Cplx<T>],
    objective: &PrecoderObjective<T>,
    candidates: &[T],
    baseline_se: T,
) -> Result<(T, T)> {
    let mut best = (T::zero(), baseline_se);
    if norm_sqr_vec(dir) == T::zero() {
        return Ok(best);
    }
    let mut trial = vec![Cplx::new(T::zero(), T::zero()); v.len()];
    for &step in candidates {
        for ((t, a), d) in trial.iter_mut().zip(v).zip(dir) {
            *t = a + d * step;
        }
        let (_, se) = objective.se_quantized(&trial)?;
        if !se.is_finite() {
            return Err(Error::NonFinite { stage: "line_search" });
        }
        if se > best.1 {
            best = (step, se);
        }
    }
    Ok(best)
}

/// Maximizes SE over the 1-bit precoder with the phase matrix held fixed.
pub fn solve_p1<T: Real>(
    objective: &PrecoderObjective<T>,
    init: &ScaledCodeword<T>,
    cfg: &SolverConfig,
) -> Result<P1Outcome<T>> {
    cfg.validate()?;
    let n = objective.h_eff.len();
    if init.len() != n {
        return Err(Error::Shape(format!(
            "initial precoder has {} entries, expected {n}",
            init.len()
        )));
    }
    if !init.is_feasible(objective.p_tot_w) {
        return Err(Error::Infeasible(
            "initial precoder violates the alphabet or power budget".into(),
        ));
    }
    let delta = T::lit(cfg.delta);
    let eps = T::lit(cfg.eps);
    let restart = if cfg.restart_every == 0 {
        n.max(1)
    } else {
        cfg.restart_every
    };
    let rel_steps: Vec<T> = cfg.step_candidates.iter().map(|&s| T::lit(s)).collect();

    // Rescale in case the caller's budget differs from the objective's.
    let start = ScaledCodeword::new(init.codeword.clone(), objective.p_tot_w)?;
    let start_se = objective.se(&start);
    if !start_se.is_finite() {
        return Err(Error::NonFinite { stage: "solve_p1" });
    }
    let zeros = Array1::from_elem(n, Cplx::new(T::zero(), T::zero()));
    let mut state = PrecoderState {
        v_cont: start.codeword.clone(),
        v_quant: start,
        grad: zeros.clone(),
        direction: zeros,
        step: T::zero(),
        iter: 0,
        best_se: start_se,
    };
    let mut trace = vec![start_se];
    let mut converged = false;
    let f = |v: &[Cplx<T>]| objective.se_continuous(v);

    while state.iter < cfg.max_iter {
        let grad = numerical_gradient(state.v_cont.as_slice().unwrap(), f, delta)?;
        let steepest = state.iter % restart == 0;
        let mut dir = if steepest {
            grad.clone()
        } else {
            cg_direction(
                grad.as_slice().unwrap(),
                state.grad.as_slice().unwrap(),
                state.direction.as_slice().unwrap(),
            )
        };
        let mut found = search(&state, &dir, objective, &rel_steps)?;
        if found.0 == T::zero() && !steepest {
            dir = grad.clone();
            found = search(&state, &dir, objective, &rel_steps)?;
        }
        state.iter += 1;
        state.grad = grad;
        let (step, se) = found;
        let prev = state.best_se;
        if step > T::zero() {
            state.v_cont = &state.v_cont + &dir.mapv(|d| d * step);
            let (cw, se_q) = objective.se_quantized(state.v_cont.as_slice().unwrap())?;
            debug_assert!(se_q == se);
            state.v_quant = cw;
            state.best_se = se_q;
            state.step = step;
        } else {
            state.step = T::zero();
        }
        state.direction = dir;
        trace.push(state.best_se);
        if settled(prev, state.best_se, eps) {
            converged = true;
            break;
        }
    }

    for _ in 0..cfg.polish_sweeps {
        let cw = polish_sweep(&objective.h_eff, &state.v_quant.codeword);
        if cw == state.v_quant.codeword {
            break;
        }
        let cand = ScaledCodeword::new(cw, objective.p_tot_w)?;
        let se = objective.se(&cand);
        if !(se > state.best_se) {
            break;
        }
        state.v_cont = cand.codeword.clone();
        state.v_quant = cand;
        state.best_se = se;
        trace.push(se);
    }

    Ok(P1Outcome {
        precoder: state.v_quant.clone(),
        trace,
        converged,
        state,
    })
}

/// One pass of coordinate ascent on `|h_effᴴ c|` over the 1-bit alphabet.
fn polish_sweep<T: Real>(h_eff: &Array1<Cplx<T>>, codeword: &Array1<Cplx<T>>) -> Array1<Cplx<T>> {
    let mut cw = codeword.clone();
    let mut amp = h_eff
        .iter()
        .zip(cw.iter())
        .fold(Cplx::new(T::zero(), T::zero()), |acc, (h, c)| acc + h.conj() * c);
    for i in 0..cw.len() {
        let base = amp - h_eff[i].conj() * cw[i];
        let mut best = (amp.norm_sqr(), cw[i]);
        for x in xi_set::<T>() {
            let val = (base + h_eff[i].conj() * x).norm_sqr();
            if val > best.0 {
                best = (val, x);
            }
        }
        cw[i] = best.1;
        amp = base + h_eff[i].conj() * best.1;
    }
    cw
}

fn search<T: Real>(
    state: &PrecoderState<T>,
    dir: &Array1<Cplx<T>>,
    objective: &PrecoderObjective<T>,
    rel_steps: &[T],
) -> Result<(T, T)> {
    let dnorm = norm_sqr_vec(dir.as_slice().unwrap()).sqrt();
    if dnorm == T::zero() {
        return Ok((T::zero(), state.best_se));
    }
    let vnorm = norm_sqr_vec(state.v_cont.as_slice().unwrap()).sqrt();
    let scale = vnorm / dnorm;
    let steps: Vec<T> = rel_steps.iter().map(|&s| s * scale).collect();
    line_search(
        state.v_cont.as_slice().unwrap(),
        dir.as_slice().unwrap(),
        objective,
        &steps,
        state.best_se,
    )
}
