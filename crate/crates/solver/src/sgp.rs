use std::collections::VecDeque;

use rising_tomo::{back_project, forward_project, GridSpec, Image, ScanGeometry, Sinogram};

use crate::tv::{tv_grad, tv_split_positive, tv_value};
use crate::{SolverConfig, SolverError};

/// Decay constant of the scaling-bound schedule: at iteration `k` the
/// diagonal scaling is clamped to `[1/L_k, L_k]` with
/// `L_k = √(1 + SCALING_DECAY/k²)`, intersected with the static bounds.
/// The scaling tends to the identity, which the convergence theory needs.
const SCALING_DECAY: f64 = 1e7;

const MAX_BACKTRACKS: usize = 60;

/// Stopping policy of one solve.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveMode {
    /// Stop after `K` total iterations (or earlier at the tolerance).
    FixedK(usize),
    /// Run until the relative objective decrease drops below `stop_tol`,
    /// capped at `max_iters`.
    ToConvergence,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    Tolerance,
    MaxIters,
}

/// Optional per-iteration bookkeeping.
#[derive(Default)]
pub struct SolveOptions<'a> {
    /// Track RMSE against this reference each iteration.
    pub track_rmse_against: Option<&'a Image>,
    /// Keep every iterate in the report.
    pub keep_iterates: bool,
}

/// Complete snapshot of the iteration; resuming from it reproduces the
/// uninterrupted run bit for bit.
#[derive(Clone, Debug)]
pub struct SgpState {
    /// Completed iteration count.
    pub iteration: usize,
    x: Vec<f64>,
    /// Cached `A·x`, updated incrementally along accepted steps.
    ax: Vec<f64>,
    x_prev: Option<Vec<f64>>,
    g_prev: Option<Vec<f64>>,
    /// Last `memory` accepted objective values, oldest first.
    f_memory: VecDeque<f64>,
    f_current: f64,
}

/// Everything a solve reports besides the final image.
#[derive(Clone, Debug)]
pub struct SolveReport {
    /// Objective after each performed iteration.
    pub objective_history: Vec<f64>,
    /// Barzilai–Borwein step length used at each iteration.
    pub steplength_history: Vec<f64>,
    /// Accepted line-search fraction at each iteration.
    pub linesearch_history: Vec<f64>,
    /// RMSE against the tracked reference, when requested.
    pub rmse_history: Option<Vec<f64>>,
    pub iterates_kept: Option<Vec<(usize, Image)>>,
    pub initial_objective: f64,
    pub stop_reason: StopReason,
    /// Iteration at which the tolerance first fired, if it did.
    pub k_star: Option<usize>,
    pub iterations: usize,
    /// Resumable snapshot at the stopping point.
    pub final_state: SgpState,
}

impl SolveReport {
    /// CSV rows `iteration,objective,steplength,linesearch[,rmse]`.
    pub fn to_csv(&self) -> String {
        let with_rmse = self.rmse_history.is_some();
        let mut out = String::from(if with_rmse {
            "iteration,objective,steplength,linesearch,rmse\n"
        } else {
            "iteration,objective,steplength,linesearch\n"
        });
        for i in 0..self.objective_history.len() {
            if with_rmse {
                out.push_str(&format!(
                    "{},{:.12e},{:.6e},{:.4},{:.8e}\n",
                    i + 1,
                    self.objective_history[i],
                    self.steplength_history[i],
                    self.linesearch_history[i],
                    self.rmse_history.as_ref().unwrap()[i],
                ));
            } else {
                out.push_str(&format!(
                    "{},{:.12e},{:.6e},{:.4}\n",
                    i + 1,
                    self.objective_history[i],
                    self.steplength_history[i],
                    self.linesearch_history[i],
                ));
            }
        }
        out
    }
}

struct Engine<'a> {
    grid: GridSpec,
    geom: &'a ScanGeometry,
    b: &'a [f64],
    cfg: &'a SolverConfig,
    /// `Aᵀ max(b, 0)`, the constant part of the positive gradient split.
    atb_pos: Vec<f64>,
    npix: usize,
}

impl<'a> Engine<'a> {
    fn new(b: &'a Sinogram, grid: &GridSpec, cfg: &'a SolverConfig) -> Self {
        let geom = b.geometry();
        let b_pos: Vec<f64> = b.values().iter().map(|v| v.max(0.0)).collect();
        let atb_pos = back_project(
            &Sinogram::new(geom.clone(), b_pos).expect("clipped data keeps sinogram shape"),
            grid,
        )
        .into_values();
        Engine {
            grid: *grid,
            geom,
            b: b.values(),
            cfg,
            atb_pos,
            npix: grid.num_pixels(),
        }
    }

    fn apply_forward(&self, x: &[f64]) -> Vec<f64> {
        let img = Image::new(self.grid, x.to_vec()).expect("iterate has grid shape");
        forward_project(&img, self.geom).into_values()
    }

    fn apply_back(&self, s: &[f64]) -> Vec<f64> {
        let sino =
            Sinogram::new(self.geom.clone(), s.to_vec()).expect("residual has sinogram shape");
        back_project(&sino, &self.grid).into_values()
    }

    fn fit_term(&self, ax: &[f64]) -> f64 {
        ax.iter().zip(self.b).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    fn objective_from(&self, ax: &[f64], x: &[f64]) -> f64 {
        self.fit_term(ax) + self.cfg.lambda * tv_value(x, self.grid.n, self.cfg.beta)
    }

    fn initial_state(&self) -> SgpState {
        let x = vec![0.0f64; self.npix];
        let ax = vec![0.0f64; self.b.len()];
        let f0 = self.objective_from(&ax, &x);
        let mut f_memory = VecDeque::with_capacity(self.cfg.linesearch.memory);
        f_memory.push_back(f0);
        SgpState {
            iteration: 0,
            x,
            ax,
            x_prev: None,
            g_prev: None,
            f_memory,
            f_current: f0,
        }
    }

    /// Diagonal scaling from the split-gradient rule, clamped to the
    /// iteration-dependent bounds.
    fn scaling(&self, x: &[f64], at_r: &[f64], k: usize) -> Vec<f64> {
        let lk = (1.0 + SCALING_DECAY / (k as f64 * k as f64)).sqrt();
        let hi = self.cfg.scaling_bounds.1.min(lk);
        let lo = self.cfg.scaling_bounds.0.max(1.0 / lk);
        let n = self.grid.n;
        let mut v_tv = vec![0.0f64; self.npix];
        if self.cfg.lambda > 0.0 {
            tv_split_positive(x, n, self.cfg.beta, &mut v_tv);
        }
        let mut d = vec![0.0f64; self.npix];
        for j in 0..self.npix {
            // V = 2AᵀAx + 2Aᵀb₋ + λV_TV, assembled as 2(Aᵀr + Aᵀb₊) + λV_TV.
            let v = 2.0 * (at_r[j] + self.atb_pos[j]) + self.cfg.lambda * v_tv[j];
            let ratio = x[j] / v;
            d[j] = if ratio.is_nan() { 1.0 } else { ratio.clamp(lo, hi) };
        }
        d
    }

    /// Barzilai–Borwein step length in the metric induced by `d_scale`,
    /// alternating BB1/BB2 blocks of `bb_alternation` iterations.
    fn bb_steplength(&self, s: &[f64], y: &[f64], d_scale: &[f64], k: usize) -> f64 {
        let (a_min, a_max) = self.cfg.alpha_bounds;
        let use_bb1 = ((k - 1) / self.cfg.bb_alternation) % 2 == 0;
        let alpha = if use_bb1 {
            let mut num = 0.0;
            let mut den = 0.0;
            for j in 0..s.len() {
                let sd = s[j] / d_scale[j];
                num += sd * sd;
                den += sd * y[j];
            }
            if den <= 0.0 {
                a_max
            } else {
                num / den
            }
        } else {
            let mut num = 0.0;
            let mut den = 0.0;
            for j in 0..s.len() {
                let dy = d_scale[j] * y[j];
                num += s[j] * dy;
                den += dy * dy;
            }
            if num <= 0.0 || den == 0.0 {
                a_max
            } else {
                num / den
            }
        };
        alpha.clamp(a_min, a_max)
    }

    /// One SGP iteration (global index `k`, 1-based). Returns
    /// `(alpha, nu, f_prev)`.
    fn step(&self, state: &mut SgpState, k: usize) -> Result<(f64, f64, f64), SolverError> {
        let cfg = self.cfg;
        let n = self.grid.n;
        let f_prev = state.f_current;

        // Gradient: 2Aᵀ(Ax − b) + λ∇TV.
        let residual: Vec<f64> = state.ax.iter().zip(self.b).map(|(a, b)| a - b).collect();
        let at_r = self.apply_back(&residual);
        let mut g = vec![0.0f64; self.npix];
        if cfg.lambda > 0.0 {
            tv_grad(&state.x, n, cfg.beta, &mut g);
        }
        for j in 0..self.npix {
            g[j] = 2.0 * at_r[j] + cfg.lambda * g[j];
        }

        let d_scale = self.scaling(&state.x, &at_r, k);

        let alpha = match (&state.x_prev, &state.g_prev) {
            (Some(xp), Some(gp)) => {
                let s: Vec<f64> = state.x.iter().zip(xp).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = g.iter().zip(gp).map(|(a, b)| a - b).collect();
                self.bb_steplength(&s, &y, &d_scale, k)
            }
            _ => {
                let g_inf = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let seed = if g_inf > 0.0 { 1.0 / g_inf } else { 1.0 };
                seed.clamp(cfg.alpha_bounds.0, cfg.alpha_bounds.1)
            }
        };

        // Feasible direction through the projected scaled step.
        let mut dir = vec![0.0f64; self.npix];
        let mut dir_nonzero = false;
        for j in 0..self.npix {
            let z = (state.x[j] - alpha * d_scale[j] * g[j]).max(0.0);
            dir[j] = z - state.x[j];
            dir_nonzero |= dir[j] != 0.0;
        }

        if !dir_nonzero {
            // Stationary: the objective cannot move; the caller's tolerance
            // check will fire on a zero decrease.
            return Ok((alpha, 0.0, f_prev));
        }

        let gd: f64 = g.iter().zip(&dir).map(|(a, b)| a * b).sum();
        let f_ref = state.f_memory.iter().cloned().fold(f64::MIN, f64::max);
        let a_dir = self.apply_forward(&dir);

        let mut nu = 1.0f64;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial_x: Vec<f64> = state.x.iter().zip(&dir).map(|(x, d)| x + nu * d).collect();
            let trial_ax: Vec<f64> =
                state.ax.iter().zip(&a_dir).map(|(a, d)| a + nu * d).collect();
            let f_trial = self.objective_from(&trial_ax, &trial_x);
            if !f_trial.is_finite() {
                return Err(SolverError::NonFiniteObjective { iteration: k });
            }
            if f_trial <= f_ref + cfg.linesearch.sigma * nu * gd {
                accepted = Some((trial_x, trial_ax, f_trial));
                break;
            }
            nu *= cfg.linesearch.rho;
        }
        let (new_x, new_ax, f_new) =
            accepted.ok_or(SolverError::LineSearchFailed { iteration: k })?;

        state.x_prev = Some(std::mem::replace(&mut state.x, new_x));
        state.g_prev = Some(g);
        state.ax = new_ax;
        state.f_current = f_new;
        state.f_memory.push_back(f_new);
        while state.f_memory.len() > cfg.linesearch.memory {
            state.f_memory.pop_front();
        }
        Ok((alpha, nu, f_prev))
    }

    fn run(
        &self,
        mut state: SgpState,
        mode: SolveMode,
        opts: &SolveOptions,
    ) -> Result<(Image, SolveReport), SolverError> {
        let cap = match mode {
            SolveMode::FixedK(k) => k,
            SolveMode::ToConvergence => self.cfg.max_iters,
        };
        let initial_objective = state.f_current;
        let mut objective_history = Vec::new();
        let mut steplength_history = Vec::new();
        let mut linesearch_history = Vec::new();
        let mut rmse_history = opts.track_rmse_against.map(|_| Vec::new());
        let mut iterates_kept = opts.keep_iterates.then(Vec::new);
        let mut stop_reason = StopReason::MaxIters;
        let mut k_star = None;

        while state.iteration < cap {
            let k = state.iteration + 1;
            let (alpha, nu, f_prev) = self.step(&mut state, k)?;
            state.iteration = k;

            objective_history.push(state.f_current);
            steplength_history.push(alpha);
            linesearch_history.push(nu);
            if let (Some(hist), Some(gt)) = (rmse_history.as_mut(), opts.track_rmse_against) {
                let sum: f64 = state
                    .x
                    .iter()
                    .zip(gt.values())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                hist.push((sum / self.npix as f64).sqrt());
            }
            if let Some(kept) = iterates_kept.as_mut() {
                kept.push((k, Image::new(self.grid, state.x.clone())?));
            }

            if (state.f_current - f_prev).abs() <= self.cfg.stop_tol * f_prev.abs() {
                k_star = Some(k);
                stop_reason = StopReason::Tolerance;
                break;
            }
        }

        let image = Image::new(self.grid, state.x.clone())?;
        let iterations = state.iteration;
        Ok((
            image,
            SolveReport {
                objective_history,
                steplength_history,
                linesearch_history,
                rmse_history,
                iterates_kept,
                initial_objective,
                stop_reason,
                k_star,
                iterations,
                final_state: state,
            },
        ))
    }
}

/// Runs SGP from `x⁽⁰⁾ = 0` on `min_{x ≥ 0} ‖Ax − b‖² + λ·TV_β(x)`.
pub fn sgp_solve(
    b: &Sinogram,
    grid: &GridSpec,
    cfg: &SolverConfig,
    mode: SolveMode,
    opts: &SolveOptions,
) -> Result<(Image, SolveReport), SolverError> {
    cfg.validate()?;
    let engine = Engine::new(b, grid, cfg);
    let state = engine.initial_state();
    engine.run(state, mode, opts)
}

/// Continues a solve from a captured state. The iteration count, step
/// memory and cached products are preserved, so the resumed trajectory is
/// bit-identical to the uninterrupted one.
pub fn sgp_resume(
    b: &Sinogram,
    grid: &GridSpec,
    cfg: &SolverConfig,
    state: SgpState,
    mode: SolveMode,
    opts: &SolveOptions,
) -> Result<(Image, SolveReport), SolverError> {
    cfg.validate()?;
    let engine = Engine::new(b, grid, cfg);
    engine.run(state, mode, opts)
}

/// Verifies the decomposition of the full solve into the first `k`
/// iterations followed by the remaining ones: running to `k`, capturing
/// state, and resuming to convergence must equal the straight
/// run-to-convergence bit for bit (and the early objective history must be
/// a prefix of the full one).
pub fn compose_iterations_check(
    b: &Sinogram,
    grid: &GridSpec,
    cfg: &SolverConfig,
    k: usize,
) -> Result<bool, SolverError> {
    let opts = SolveOptions::default();
    let (x_full, full) = sgp_solve(b, grid, cfg, SolveMode::ToConvergence, &opts)?;
    let (_, early) = sgp_solve(b, grid, cfg, SolveMode::FixedK(k), &opts)?;
    let (x_resumed, rest) = sgp_resume(
        b,
        grid,
        cfg,
        early.final_state.clone(),
        SolveMode::ToConvergence,
        &opts,
    )?;

    let images_equal = x_resumed.values() == x_full.values();
    let concat: Vec<f64> = early
        .objective_history
        .iter()
        .chain(rest.objective_history.iter())
        .cloned()
        .collect();
    let histories_equal = concat == full.objective_history;
    Ok(images_equal && histories_equal)
}
