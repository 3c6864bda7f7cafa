use crate::error::{Error, Result};
use crate::tensor::DenseMatrix;

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

/// Adam with bias correction and global-norm gradient clipping. Moment
/// state is indexed by parameter position, so callers must present
/// parameters in a fixed order.
pub struct Adam {
    lr: f64,
    clip_norm: Option<f64>,
    step: u64,
    m: Vec<DenseMatrix>,
    v: Vec<DenseMatrix>,
}

impl Adam {
    pub fn new(lr: f64, shapes: &[(usize, usize)], clip_norm: Option<f64>) -> Self {
        Adam {
            lr,
            clip_norm,
            step: 0,
            m: shapes.iter().map(|&(r, c)| DenseMatrix::zeros(r, c)).collect(),
            v: shapes.iter().map(|&(r, c)| DenseMatrix::zeros(r, c)).collect(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update over all parameters. `grads[i]` must match `params[i]`
    /// in shape. A NaN gradient aborts with a numeric fault naming the
    /// parameter index and step.
    pub fn step(&mut self, params: &mut [&mut DenseMatrix], grads: &[DenseMatrix]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::Contract(format!(
                "adam built for {} parameters, got {} params / {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        for (i, g) in grads.iter().enumerate() {
            if !g.is_finite() {
                return Err(Error::NumericFault(format!(
                    "non-finite gradient for parameter {} at optimizer step {}",
                    i,
                    self.step + 1
                )));
            }
        }

        let mut scale = 1.0;
        if let Some(max_norm) = self.clip_norm {
            let total: f64 = grads.iter().map(|g| g.sq_sum()).sum();
            let norm = total.sqrt();
            if norm > max_norm {
                scale = max_norm / norm;
            }
        }

        self.step += 1;
        let t = self.step as i32;
        let bias1 = 1.0 - BETA1.powi(t);
        let bias2 = 1.0 - BETA2.powi(t);

        for ((param, grad), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            if param.shape() != grad.shape() {
                return Err(Error::shape("adam_step", param.dims(), grad.dims()));
            }
            let pv = param.values_mut();
            let gv = grad.values();
            let mv = m.values_mut();
            let vv = v.values_mut();
            for k in 0..pv.len() {
                let g = gv[k] * scale;
                mv[k] = BETA1 * mv[k] + (1.0 - BETA1) * g;
                vv[k] = BETA2 * vv[k] + (1.0 - BETA2) * g * g;
                let m_hat = mv[k] / bias1;
                let v_hat = vv[k] / bias2;
                pv[k] -= self.lr * m_hat / (v_hat.sqrt() + EPS);
            }
        }
        Ok(())
    }
}
