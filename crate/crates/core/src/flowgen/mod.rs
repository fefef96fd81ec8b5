//! Conditional flow-matching policy over trajectory latents.
//!
//! A single velocity network supports three consumers that must agree
//! bit-for-bit: the deterministic ODE sampler, the stochastic SDE sampler
//! whose per-step transitions are Gaussian (and therefore differentiable in
//! log-density), and the training losses. The drift arithmetic is factored
//! so the sampler and the log-density recomputation share one code path;
//! policy-gradient ratios at unchanged parameters are then exactly 1.

pub mod analytic;
mod cond;
mod mlp;

pub use cond::{
    encode_maze, encode_nav, MAX_GRID, MAZE_COND_DIM, NAV_COND_DIM, NAV_OBSTACLE_SLOTS,
};
pub use mlp::{Adam, Mlp, MlpCache};

use std::io::{Read as _, Write as _};
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::latent::TrajectoryLatent;
use crate::rng::rng_from;

/// Integration endpoint: time runs over [T_MIN, 1 - T_MIN]. Keeps the
/// score transform away from its singularity at t = 0.
pub const T_MIN: f64 = 1e-3;

pub const TIME_EMBED_DIM: usize = 8;

pub const DEFAULT_HIDDEN: usize = 128;

/// Fixed sinusoidal-plus-linear featurization of scalar time.
pub fn time_embed(t: f64) -> [f64; TIME_EMBED_DIM] {
    use std::f64::consts::PI;
    [
        t,
        1.0 - t,
        (PI * t).sin(),
        (PI * t).cos(),
        (2.0 * PI * t).sin(),
        (2.0 * PI * t).cos(),
        (4.0 * PI * t).sin(),
        (4.0 * PI * t).cos(),
    ]
}

/// Noise level a * sqrt(t / (1 - t)), clipped above at 10a so the schedule
/// stays bounded at the noise end. Vanishes at the data end.
pub fn sigma_schedule(t: f64, a: f64) -> Result<f64> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::InvalidArgument(format!("sigma schedule needs t in (0,1), got {t}")));
    }
    if a < 0.0 {
        return Err(Error::InvalidArgument(format!("noise scale must be >= 0, got {a}")));
    }
    Ok((a * (t / (1.0 - t)).sqrt()).min(10.0 * a))
}

/// Marginal score implied by the linear interpolation x_t = (1-t)x0 + t*x1
/// with velocity v = x1 - x0: returns -(x_t + (1-t)v) / t.
pub fn score_from_velocity(x: &[f64], v: &[f64], t: f64) -> Result<Vec<f64>> {
    if t < T_MIN {
        return Err(Error::InvalidArgument(format!(
            "score transform is singular near t=0; got t={t} < {T_MIN}"
        )));
    }
    Ok(x.iter().zip(v).map(|(xi, vi)| -(xi + (1.0 - t) * vi) / t).collect())
}

/// Strictly decreasing uniform grid of `steps + 1` points from 1 - T_MIN
/// down to exactly T_MIN.
pub fn time_grid(steps: usize) -> Vec<f64> {
    let span = 1.0 - 2.0 * T_MIN;
    (0..=steps)
        .map(|k| T_MIN + span * ((steps - k) as f64 / steps as f64))
        .collect()
}

/// Anything that can serve as the drift of the samplers. Implemented by the
/// conditioned policy network and by closed-form diagnostic fields.
pub trait VelocityField: Sync {
    fn dim(&self) -> usize;
    fn velocity_at(&self, x: &[f64], t: f64) -> Vec<f64>;
}

/// Velocity network v(x, t, cond): input is the flattened latent, the time
/// embedding, and the condition encoding, concatenated in that order.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowModel {
    pub frames: usize,
    pub cond_dim: usize,
    pub mlp: Mlp,
}

impl FlowModel {
    pub fn new(frames: usize, cond_dim: usize, hidden: usize, seed: u64) -> FlowModel {
        let dim = TrajectoryLatent::dim_for(frames);
        let mlp = Mlp::new(dim + TIME_EMBED_DIM + cond_dim, hidden, dim, seed);
        FlowModel { frames, cond_dim, mlp }
    }

    pub fn latent_dim(&self) -> usize {
        TrajectoryLatent::dim_for(self.frames)
    }

    pub fn hidden(&self) -> usize {
        self.mlp.hidden
    }

    pub fn params(&self) -> &[f64] {
        &self.mlp.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.mlp.params
    }

    fn assemble_input(&self, x: &[f64], t: f64, cond: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.latent_dim());
        debug_assert_eq!(cond.len(), self.cond_dim);
        let mut input = Vec::with_capacity(self.mlp.input);
        input.extend_from_slice(x);
        input.extend_from_slice(&time_embed(t));
        input.extend_from_slice(cond);
        input
    }

    pub fn velocity(&self, x: &[f64], t: f64, cond: &[f64]) -> Vec<f64> {
        self.mlp.forward(&self.assemble_input(x, t, cond))
    }

    /// Bind a condition so the model can drive the generic samplers.
    pub fn conditioned<'a>(&'a self, cond: &'a [f64]) -> Conditioned<'a> {
        assert_eq!(cond.len(), self.cond_dim, "condition width mismatch");
        Conditioned { model: self, cond }
    }
}

pub struct Conditioned<'a> {
    model: &'a FlowModel,
    cond: &'a [f64],
}

impl VelocityField for Conditioned<'_> {
    fn dim(&self) -> usize {
        self.model.latent_dim()
    }

    fn velocity_at(&self, x: &[f64], t: f64) -> Vec<f64> {
        self.model.velocity(x, t, self.cond)
    }
}

/// One recorded SDE transition from state `x` at time `t` toward time
/// `t - dt`. The realized next state is `mean + sigma * sqrt(dt) * noise`,
/// exactly as stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SdeStep {
    pub x: Vec<f64>,
    pub mean: Vec<f64>,
    pub noise: Vec<f64>,
    pub sigma: f64,
    pub dt: f64,
    pub t: f64,
}

impl SdeStep {
    /// Reconstructs the realized next state from the record.
    pub fn next_state(&self) -> Vec<f64> {
        if self.sigma == 0.0 {
            return self.mean.clone();
        }
        let scale = self.sigma * self.dt.sqrt();
        self.mean.iter().zip(&self.noise).map(|(m, e)| m + scale * e).collect()
    }
}

/// Full stochastic sampling trace: every transition plus the terminal state.
#[derive(Debug, Clone, PartialEq)]
pub struct SdeRollout {
    pub steps: Vec<SdeStep>,
    pub final_x: Vec<f64>,
    pub grid: Vec<f64>,
}

impl SdeRollout {
    pub fn final_latent(&self, frames: usize) -> Result<TrajectoryLatent> {
        TrajectoryLatent::from_flat(frames, &self.final_x)
    }
}

fn check_finite(x: &[f64], step: usize) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numeric(format!("non-finite state at integration step {step}")))
    }
}

fn draw_standard_normal(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Noise-corrected drift for the marginal-preserving SDE;
/// v - (sigma^2 / 2) * score. With sigma = 0 this is `v` itself and the
/// branch performs no arithmetic, so zero-noise sampling degenerates to the
/// ODE bitwise.
fn corrected_drift(x: &[f64], v: &[f64], t: f64, sigma: f64) -> Result<Vec<f64>> {
    if sigma == 0.0 {
        return Ok(v.to_vec());
    }
    let score = score_from_velocity(x, v, t)?;
    let half_var = sigma * sigma / 2.0;
    Ok(v.iter().zip(&score).map(|(vi, si)| vi - half_var * si).collect())
}

/// Transition mean when stepping from `x` at `t` down to `t - dt`.
fn drift_mean(x: &[f64], v: &[f64], t: f64, sigma: f64, dt: f64) -> Result<Vec<f64>> {
    let vt = corrected_drift(x, v, t, sigma)?;
    Ok(x.iter().zip(&vt).map(|(xi, vi)| xi - vi * dt).collect())
}

/// Euler integration of dx = v dt from noise (t = 1 - T_MIN) to data
/// (t = T_MIN). The initial state is the only randomness consumed.
pub fn ode_sample_field(field: &dyn VelocityField, steps: usize, seed: u64) -> Result<Vec<f64>> {
    if steps < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 steps, got {steps}")));
    }
    let grid = time_grid(steps);
    let mut rng = rng_from(seed);
    let mut x = draw_standard_normal(&mut rng, field.dim());
    for k in 0..steps {
        let t = grid[k];
        let dt = grid[k] - grid[k + 1];
        let v = field.velocity_at(&x, t);
        for (xi, vi) in x.iter_mut().zip(&v) {
            *xi -= vi * dt;
        }
        check_finite(&x, k)?;
    }
    Ok(x)
}

/// Euler-Maruyama integration of the noise-corrected SDE on the same grid
/// and with the same initial draw as `ode_sample_field`. Every transition is
/// recorded. With a = 0 no extra randomness is consumed and the trajectory
/// equals the ODE's exactly.
pub fn sde_sample_field(
    field: &dyn VelocityField,
    steps: usize,
    a: f64,
    seed: u64,
) -> Result<SdeRollout> {
    if steps < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 steps, got {steps}")));
    }
    let dim = field.dim();
    let grid = time_grid(steps);
    let mut rng = rng_from(seed);
    let mut x = draw_standard_normal(&mut rng, dim);
    let mut records = Vec::with_capacity(steps);
    for k in 0..steps {
        let t = grid[k];
        let dt = grid[k] - grid[k + 1];
        let v = field.velocity_at(&x, t);
        let sigma = sigma_schedule(t, a)?;
        let mean = drift_mean(&x, &v, t, sigma, dt)?;
        let (noise, next) = if sigma > 0.0 {
            let eps = draw_standard_normal(&mut rng, dim);
            let scale = sigma * dt.sqrt();
            let next: Vec<f64> =
                mean.iter().zip(&eps).map(|(m, e)| m + scale * e).collect();
            (eps, next)
        } else {
            (vec![0.0; dim], mean.clone())
        };
        check_finite(&next, k)?;
        records.push(SdeStep { x, mean, noise, sigma, dt, t });
        x = next;
    }
    Ok(SdeRollout { steps: records, final_x: x, grid })
}

pub fn ode_sample(
    model: &FlowModel,
    cond: &[f64],
    steps: usize,
    seed: u64,
) -> Result<TrajectoryLatent> {
    let x = ode_sample_field(&model.conditioned(cond), steps, seed)?;
    TrajectoryLatent::from_flat(model.frames, &x)
}

pub fn sde_sample(
    model: &FlowModel,
    cond: &[f64],
    steps: usize,
    a: f64,
    seed: u64,
) -> Result<SdeRollout> {
    sde_sample_field(&model.conditioned(cond), steps, a, seed)
}

/// Transition mean of a recorded step under the current parameters, with
/// what the backward pass needs. `dmean_dv` is the scalar Jacobian factor of
/// the mean in the raw network output (the mean is elementwise affine in v).
pub struct DriftEval {
    pub mean: Vec<f64>,
    cache: MlpCache,
    dmean_dv: f64,
}

impl FlowModel {
    pub fn eval_drift(&self, cond: &[f64], step: &SdeStep) -> Result<DriftEval> {
        let (v, cache) = self.mlp.forward_cached(&self.assemble_input(&step.x, step.t, cond));
        let mean = drift_mean(&step.x, &v, step.t, step.sigma, step.dt)?;
        // m = x - dt * (v - (sigma^2/2) * score(x, v, t)) and the score is
        // itself affine in v, so dm_i/dv_i collapses to one scalar.
        let c1 = 1.0 + step.sigma * step.sigma * (1.0 - step.t) / (2.0 * step.t);
        Ok(DriftEval { mean, cache, dmean_dv: -step.dt * c1 })
    }

    /// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(mean).
    pub fn drift_grad(&self, eval: &DriftEval, dl_dmean: &[f64], grad: &mut [f64]) {
        let gv: Vec<f64> = dl_dmean.iter().map(|g| g * eval.dmean_dv).collect();
        self.mlp.backward(&eval.cache, &gv, grad);
    }
}

/// Log-density of the recorded next state under the Gaussian transition
/// implied by the current parameters, and its gradient in the parameters.
pub fn step_logprob(
    model: &FlowModel,
    cond: &[f64],
    step: &SdeStep,
) -> Result<(f64, Vec<f64>)> {
    let (logp, eval, resid) = logprob_parts(model, cond, step)?;
    let var = step.sigma * step.sigma * step.dt;
    let mut grad = vec![0.0; model.mlp.param_count()];
    // d logp / d mean = (y - mean) / var.
    let dl_dmean: Vec<f64> = resid.iter().map(|r| r / var).collect();
    model.drift_grad(&eval, &dl_dmean, &mut grad);
    Ok((logp, grad))
}

/// Gradient-free variant used to cache behavior-policy log-probs at
/// collection time; shares every arithmetic step with `step_logprob`.
pub fn step_logprob_value(model: &FlowModel, cond: &[f64], step: &SdeStep) -> Result<f64> {
    Ok(logprob_parts(model, cond, step)?.0)
}

fn logprob_parts(
    model: &FlowModel,
    cond: &[f64],
    step: &SdeStep,
) -> Result<(f64, DriftEval, Vec<f64>)> {
    let var = step.sigma * step.sigma * step.dt;
    if !(var > 0.0) {
        return Err(Error::InvalidArgument(
            "transition log-density undefined at zero noise; sample with a > 0".into(),
        ));
    }
    let eval = model.eval_drift(cond, step)?;
    let y = step.next_state();
    let resid: Vec<f64> = y.iter().zip(&eval.mean).map(|(yi, mi)| yi - mi).collect();
    let d = resid.len() as f64;
    let sq: f64 = resid.iter().map(|r| r * r).sum();
    let logp = -0.5 * d * (2.0 * std::f64::consts::PI * var).ln() - sq / (2.0 * var);
    if !logp.is_finite() {
        return Err(Error::Numeric(format!("non-finite transition log-density at t={}", step.t)));
    }
    Ok((logp, eval, resid))
}

/// Flow-matching regression loss: mean squared error, over batch items and
/// latent coordinates, between the network output at an interpolated state
/// and the straight-path velocity x1 - x0. Returns the exact gradient.
///
/// Randomness: one t ~ U(T_MIN, 1 - T_MIN) and one standard-normal x1 per
/// item, drawn in batch order from the given seed.
pub fn fm_loss(
    model: &FlowModel,
    batch: &[(Vec<f64>, Vec<f64>)],
    seed: u64,
) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("flow-matching loss over an empty batch".into()));
    }
    let dim = model.latent_dim();
    let mut rng = rng_from(seed);
    let mut grad = vec![0.0; model.mlp.param_count()];
    let mut loss = 0.0;
    let norm = 1.0 / (batch.len() as f64 * dim as f64);
    for (idx, (x0, cond)) in batch.iter().enumerate() {
        if x0.len() != dim || cond.len() != model.cond_dim {
            return Err(Error::InvalidArgument(format!(
                "batch item {idx} has latent/condition width {}/{}, expected {dim}/{}",
                x0.len(),
                cond.len(),
                model.cond_dim
            )));
        }
        let t = rng.gen_range(T_MIN..1.0 - T_MIN);
        let x1 = draw_standard_normal(&mut rng, dim);
        let xt: Vec<f64> =
            x0.iter().zip(&x1).map(|(a, b)| (1.0 - t) * a + t * b).collect();
        let (pred, cache) = model.mlp.forward_cached(&model.assemble_input(&xt, t, cond));
        let mut gy = vec![0.0; dim];
        let mut item = 0.0;
        for i in 0..dim {
            let r = pred[i] - (x1[i] - x0[i]);
            item += r * r;
            gy[i] = 2.0 * r * norm;
        }
        if !item.is_finite() {
            return Err(Error::Numeric(format!("non-finite flow-matching loss at item {idx}")));
        }
        loss += item * norm;
        model.mlp.backward(&cache, &gy, &mut grad);
    }
    Ok((loss, grad))
}

const CHECKPOINT_MAGIC: &[u8; 8] = b"FLOWCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Writes the model as a versioned binary checkpoint: magic, version,
/// dimensions, then the parameter vector as little-endian f64.
pub fn save_checkpoint(model: &FlowModel, path: &Path) -> Result<()> {
    let mut buf = Vec::with_capacity(32 + model.params().len() * 8);
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(model.frames as u32).to_le_bytes());
    buf.extend_from_slice(&(model.cond_dim as u32).to_le_bytes());
    buf.extend_from_slice(&(model.hidden() as u32).to_le_bytes());
    buf.extend_from_slice(&(model.params().len() as u64).to_le_bytes());
    for p in model.params() {
        buf.extend_from_slice(&p.to_le_bytes());
    }
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&buf).map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<FlowModel> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    let fail = |msg: &str| Error::Format(format!("checkpoint {}: {msg}", path.display()));

    if bytes.len() < 28 {
        return Err(fail("truncated header"));
    }
    if &bytes[0..8] != CHECKPOINT_MAGIC {
        return Err(fail("bad magic"));
    }
    let u32_at = |off: usize| u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
    let version = u32_at(8);
    if version != CHECKPOINT_VERSION {
        return Err(fail(&format!("version {version}, expected {CHECKPOINT_VERSION}")));
    }
    let frames = u32_at(12) as usize;
    let cond_dim = u32_at(16) as usize;
    let hidden = u32_at(20) as usize;
    let count = u64::from_le_bytes(bytes[24..32].try_into().map_err(|_| fail("truncated header"))?)
        as usize;
    let dim = TrajectoryLatent::dim_for(frames);
    if count != Mlp::param_count_for(dim + TIME_EMBED_DIM + cond_dim, hidden, dim) {
        return Err(fail("parameter count disagrees with dimensions"));
    }
    if bytes.len() != 32 + count * 8 {
        return Err(fail("payload length disagrees with header"));
    }
    let mut params = Vec::with_capacity(count);
    for i in 0..count {
        let off = 32 + i * 8;
        let p = f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
        if !p.is_finite() {
            return Err(fail(&format!("non-finite parameter at index {i}")));
        }
        params.push(p);
    }
    let mlp = Mlp::from_params(dim + TIME_EMBED_DIM + cond_dim, hidden, dim, params)
        .ok_or_else(|| fail("parameter vector rejected"))?;
    Ok(FlowModel { frames, cond_dim, mlp })
}
