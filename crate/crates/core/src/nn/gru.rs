//! Gated recurrent unit with backpropagation through time.
//!
//! Gate convention:
//!
//! ```text
//! z  = σ(x·Wz + h·Uz + bz)
//! r  = σ(x·Wr + h·Ur + br)
//! h̃  = tanh(x·Wh + (r ⊙ h)·Uh + bh)
//! h' = (1 − z) ⊙ h + z ⊙ h̃
//! ```

use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{kernels, Tensor};

use super::{init, Parameter};

#[derive(Clone, Debug)]
pub struct Gru {
    input: usize,
    units: usize,
    /// `[input, 3·units]`, column blocks `z | r | h̃`.
    pub w_input: Parameter,
    /// `[units, 2·units]`, column blocks `z | r`.
    pub w_recur_gates: Parameter,
    /// `[units, units]`, applied to `r ⊙ h`.
    pub w_recur_cand: Parameter,
    /// `[3·units]`
    pub bias: Parameter,
}

/// Activations of one step, each `[batch, units]`.
#[derive(Clone, Debug)]
struct Step {
    h_prev: Vec<f64>,
    z: Vec<f64>,
    r: Vec<f64>,
    cand: Vec<f64>,
    reset_h: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct GruCellCache {
    x: Tensor,
    step: Step,
}

#[derive(Clone, Debug)]
pub struct GruSequenceCache {
    x: Tensor,
    steps: Vec<Step>,
}

/// Output of [`Gru::sequence`].
#[derive(Clone, Debug)]
pub struct GruSequence {
    /// `[batch, time, units]`
    pub all_h: Tensor,
    /// `[batch, units]`
    pub last_h: Tensor,
}

impl Gru {
    /// Input weights Xavier-uniform, recurrent weights uniform `±sqrt(1/units)`,
    /// zero biases.
    pub fn init<R: Rng + ?Sized>(name: &str, input: usize, units: usize, rng: &mut R) -> Self {
        let w_input = init::xavier_uniform(rng, &[input, 3 * units], input, units);
        let bound = (1.0 / units as f64).sqrt();
        let w_recur_gates = init::uniform(rng, &[units, 2 * units], bound);
        let w_recur_cand = init::uniform(rng, &[units, units], bound);
        Gru {
            input,
            units,
            w_input: Parameter::new(format!("{name}.w_input"), w_input),
            w_recur_gates: Parameter::new(format!("{name}.w_recur_gates"), w_recur_gates),
            w_recur_cand: Parameter::new(format!("{name}.w_recur_cand"), w_recur_cand),
            bias: Parameter::new(format!("{name}.bias"), Tensor::zeros(&[3 * units])),
        }
    }

    pub fn input_size(&self) -> usize {
        self.input
    }

    pub fn units(&self) -> usize {
        self.units
    }

    pub fn params(&self) -> [&Parameter; 4] {
        [&self.w_input, &self.w_recur_gates, &self.w_recur_cand, &self.bias]
    }

    pub fn params_mut(&mut self) -> [&mut Parameter; 4] {
        [
            &mut self.w_input,
            &mut self.w_recur_gates,
            &mut self.w_recur_cand,
            &mut self.bias,
        ]
    }

    /// `x·W + b` for every row of `x[rows, input]`.
    fn project_input(&self, x: &[f64], rows: usize) -> Vec<f64> {
        let g = 3 * self.units;
        let mut out = vec![0.0; rows * g];
        kernels::gemm(x, self.w_input.value.data(), &mut out, rows, self.input, g, false);
        kernels::add_row_bias(&mut out, self.bias.value.data());
        out
    }

    /// One recurrence step from the projected input `xp[batch, 3U]`.
    fn step(&self, xp: &[f64], h_prev: &[f64], batch: usize) -> (Vec<f64>, Step) {
        let u = self.units;
        let mut gates = vec![0.0; batch * 2 * u];
        kernels::gemm(h_prev, self.w_recur_gates.value.data(), &mut gates, batch, u, 2 * u, false);
        let mut z = vec![0.0; batch * u];
        let mut r = vec![0.0; batch * u];
        let mut reset_h = vec![0.0; batch * u];
        for b in 0..batch {
            for j in 0..u {
                let i = b * u + j;
                z[i] = kernels::sigmoid(xp[b * 3 * u + j] + gates[b * 2 * u + j]);
                r[i] = kernels::sigmoid(xp[b * 3 * u + u + j] + gates[b * 2 * u + u + j]);
                reset_h[i] = r[i] * h_prev[i];
            }
        }
        let mut cand = vec![0.0; batch * u];
        kernels::gemm(&reset_h, self.w_recur_cand.value.data(), &mut cand, batch, u, u, false);
        let mut h = vec![0.0; batch * u];
        for b in 0..batch {
            for j in 0..u {
                let i = b * u + j;
                cand[i] = kernels::tanh(cand[i] + xp[b * 3 * u + 2 * u + j]);
                h[i] = (1.0 - z[i]) * h_prev[i] + z[i] * cand[i];
            }
        }
        (
            h,
            Step {
                h_prev: h_prev.to_vec(),
                z,
                r,
                cand,
                reset_h,
            },
        )
    }

    /// Back through one step. Accumulates recurrent-weight gradients and
    /// returns `(d_projected_input[batch, 3U], d_h_prev[batch, U])`.
    fn step_backward(&mut self, dh: &[f64], s: &Step, batch: usize) -> (Vec<f64>, Vec<f64>) {
        let u = self.units;
        let mut dxp = vec![0.0; batch * 3 * u];
        let mut dh_prev = vec![0.0; batch * u];
        let mut d_gates = vec![0.0; batch * 2 * u];
        let mut d_cand_pre = vec![0.0; batch * u];
        for b in 0..batch {
            for j in 0..u {
                let i = b * u + j;
                let dz = dh[i] * (s.cand[i] - s.h_prev[i]);
                let dc = dh[i] * s.z[i];
                dh_prev[i] = dh[i] * (1.0 - s.z[i]);
                let dpre_c = dc * (1.0 - s.cand[i] * s.cand[i]);
                let dpre_z = dz * s.z[i] * (1.0 - s.z[i]);
                d_cand_pre[i] = dpre_c;
                d_gates[b * 2 * u + j] = dpre_z;
                dxp[b * 3 * u + j] = dpre_z;
                dxp[b * 3 * u + 2 * u + j] = dpre_c;
            }
        }
        kernels::gemm_at_b(&s.reset_h, &d_cand_pre, self.w_recur_cand.grad.data_mut(), batch, u, u, true);
        let mut d_reset_h = vec![0.0; batch * u];
        kernels::gemm_a_bt(&d_cand_pre, self.w_recur_cand.value.data(), &mut d_reset_h, batch, u, u, false);
        for b in 0..batch {
            for j in 0..u {
                let i = b * u + j;
                let dr = d_reset_h[i] * s.h_prev[i];
                dh_prev[i] += d_reset_h[i] * s.r[i];
                let dpre_r = dr * s.r[i] * (1.0 - s.r[i]);
                d_gates[b * 2 * u + u + j] = dpre_r;
                dxp[b * 3 * u + u + j] = dpre_r;
            }
        }
        kernels::gemm_at_b(&s.h_prev, &d_gates, self.w_recur_gates.grad.data_mut(), batch, u, 2 * u, true);
        kernels::gemm_a_bt(&d_gates, self.w_recur_gates.value.data(), &mut dh_prev, batch, 2 * u, u, true);
        (dxp, dh_prev)
    }

    /// Folds projected-input gradients `dxp[rows, 3U]` into `W` and `b` and
    /// returns `dx[rows, input]`.
    fn input_backward(&mut self, x: &[f64], dxp: &[f64], rows: usize) -> Vec<f64> {
        let g = 3 * self.units;
        kernels::gemm_at_b(x, dxp, self.w_input.grad.data_mut(), rows, self.input, g, true);
        kernels::accumulate_column_sums(dxp, self.bias.grad.data_mut());
        let mut dx = vec![0.0; rows * self.input];
        kernels::gemm_a_bt(dxp, self.w_input.value.data(), &mut dx, rows, g, self.input, false);
        dx
    }

    fn check_hidden(&self, h: &Tensor, batch: usize, op: &'static str) -> Result<()> {
        if h.shape() != [batch, self.units] {
            return Err(Error::shape(
                op,
                format!("hidden {:?}, expected [{batch}, {}]", h.shape(), self.units),
            ));
        }
        Ok(())
    }

    /// Single step for `x_t[batch, input]` and `h_prev[batch, units]`.
    pub fn cell(&self, x_t: &Tensor, h_prev: &Tensor) -> Result<(Tensor, GruCellCache)> {
        if x_t.ndim() != 2 || x_t.shape()[1] != self.input {
            return Err(Error::shape(
                "gru_cell",
                format!("input {:?}, expected [B, {}]", x_t.shape(), self.input),
            ));
        }
        let batch = x_t.shape()[0];
        self.check_hidden(h_prev, batch, "gru_cell")?;
        let xp = self.project_input(x_t.data(), batch);
        let (h, step) = self.step(&xp, h_prev.data(), batch);
        let h = Tensor::from_parts(vec![batch, self.units], h);
        h.ensure_finite("gru_cell")?;
        Ok((
            h,
            GruCellCache {
                x: x_t.clone(),
                step,
            },
        ))
    }

    /// Returns `(dx_t, dh_prev)`.
    pub fn cell_backward(&mut self, dh: &Tensor, cache: &GruCellCache) -> Result<(Tensor, Tensor)> {
        let batch = cache.x.shape()[0];
        self.check_hidden(dh, batch, "gru_cell_backward")?;
        let (dxp, dh_prev) = self.step_backward(dh.data(), &cache.step, batch);
        let dx = self.input_backward(cache.x.data(), &dxp, batch);
        Ok((
            Tensor::from_parts(vec![batch, self.input], dx),
            Tensor::from_parts(vec![batch, self.units], dh_prev),
        ))
    }

    fn check_sequence(&self, x: &Tensor, op: &'static str) -> Result<(usize, usize)> {
        let s = x.shape();
        if s.len() != 3 || s[2] != self.input {
            return Err(Error::shape(
                op,
                format!("input {s:?}, expected [B, T, {}]", self.input),
            ));
        }
        Ok((s[0], s[1]))
    }

    fn run(&self, x: &Tensor, h0: Option<&Tensor>, keep: bool) -> Result<(GruSequence, Vec<Step>)> {
        let (batch, t) = self.check_sequence(x, "gru_sequence")?;
        let u = self.units;
        let mut h = match h0 {
            Some(h0) => {
                self.check_hidden(h0, batch, "gru_sequence")?;
                h0.data().to_vec()
            }
            None => vec![0.0; batch * u],
        };
        let xp = self.project_input(x.data(), batch * t);
        let g = 3 * u;
        let mut all_h = vec![0.0; batch * t * u];
        let mut steps = Vec::with_capacity(if keep { t } else { 0 });
        let mut xp_t = vec![0.0; batch * g];
        for s in 0..t {
            for b in 0..batch {
                let src = (b * t + s) * g;
                xp_t[b * g..(b + 1) * g].copy_from_slice(&xp[src..src + g]);
            }
            let (h_next, step) = self.step(&xp_t, &h, batch);
            for b in 0..batch {
                all_h[(b * t + s) * u..(b * t + s + 1) * u].copy_from_slice(&h_next[b * u..(b + 1) * u]);
            }
            if keep {
                steps.push(step);
            }
            h = h_next;
        }
        let out = GruSequence {
            all_h: Tensor::from_parts(vec![batch, t, u], all_h),
            last_h: Tensor::from_parts(vec![batch, u], h),
        };
        out.all_h.ensure_finite("gru_sequence")?;
        Ok((out, steps))
    }

    pub fn sequence_infer(&self, x: &Tensor, h0: Option<&Tensor>) -> Result<GruSequence> {
        Ok(self.run(x, h0, false)?.0)
    }

    /// Unrolls the cell over `x[batch, time, input]`, starting from `h0`
    /// (zeros when `None`).
    pub fn sequence(&self, x: &Tensor, h0: Option<&Tensor>) -> Result<(GruSequence, GruSequenceCache)> {
        let (out, steps) = self.run(x, h0, true)?;
        Ok((
            out,
            GruSequenceCache {
                x: x.clone(),
                steps,
            },
        ))
    }

    /// Backpropagation through time. Either upstream gradient may be absent.
    /// Returns `(dx[batch, time, input], dh0[batch, units])`.
    pub fn sequence_backward(
        &mut self,
        d_all_h: Option<&Tensor>,
        d_last_h: Option<&Tensor>,
        cache: &GruSequenceCache,
    ) -> Result<(Tensor, Tensor)> {
        let (batch, t) = self.check_sequence(&cache.x, "gru_backward")?;
        let u = self.units;
        if cache.steps.len() != t {
            return Err(Error::shape("gru_backward", "cache does not match its input"));
        }
        if let Some(d) = d_all_h {
            if d.shape() != [batch, t, u] {
                return Err(Error::shape(
                    "gru_backward",
                    format!("d_all_h {:?}, expected [{batch}, {t}, {u}]", d.shape()),
                ));
            }
        }
        let mut dh = match d_last_h {
            Some(d) => {
                self.check_hidden(d, batch, "gru_backward")?;
                d.data().to_vec()
            }
            None => vec![0.0; batch * u],
        };
        let g = 3 * u;
        let mut dxp = vec![0.0; batch * t * g];
        for s in (0..t).rev() {
            if let Some(d) = d_all_h {
                for b in 0..batch {
                    let src = &d.data()[(b * t + s) * u..(b * t + s + 1) * u];
                    for (acc, v) in dh[b * u..(b + 1) * u].iter_mut().zip(src) {
                        *acc += v;
                    }
                }
            }
            let (dxp_t, dh_prev) = self.step_backward(&dh, &cache.steps[s], batch);
            for b in 0..batch {
                let dst = (b * t + s) * g;
                dxp[dst..dst + g].copy_from_slice(&dxp_t[b * g..(b + 1) * g]);
            }
            dh = dh_prev;
        }
        let dx = self.input_backward(cache.x.data(), &dxp, batch * t);
        Ok((
            Tensor::from_parts(vec![batch, t, self.input], dx),
            Tensor::from_parts(vec![batch, u], dh),
        ))
    }
}
