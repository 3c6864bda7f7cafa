//! Model-level gradient verification: tape gradients of the regularized
//! loss against central finite differences, parameter matrix by parameter
//! matrix. Two passes: lambda = 0 (no |w| kink anywhere), then the paper's
//! lambda with every parameter nudged away from zero so the kink is never
//! crossed by the probe step.

use crate::error::Result;
use crate::nn::ForecastModel;
use crate::tensor::{finite_difference_gradient, max_relative_error, DenseMatrix, Tape};
use crate::train::loss::regularized_loss;

pub const FD_STEP: f64 = 1e-5;
pub const DEFAULT_TOLERANCE: f64 = 1e-4;

#[derive(Clone, Debug)]
pub struct ParamCheck {
    pub name: String,
    pub lambda: f64,
    pub max_rel_err: f64,
}

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub checks: Vec<ParamCheck>,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.max_rel_err < self.tolerance)
    }

    pub fn worst(&self) -> f64 {
        self.checks.iter().map(|c| c.max_rel_err).fold(0.0, f64::max)
    }
}

fn loss_value<M: ForecastModel>(model: &M, x: &DenseMatrix, y: &DenseMatrix, lambda: f64) -> Result<f64> {
    let mut tape = Tape::new();
    let bound = model.bind(&mut tape);
    let pred = model.forward_sample(&mut tape, &bound, x)?;
    let target = tape.constant(y.clone());
    let weights: Vec<_> = model
        .param_names()
        .iter()
        .filter(|n| !model.is_bias(n))
        .map(|n| M::bound_param(&bound, n))
        .collect();
    let loss = regularized_loss(&mut tape, pred, target, &weights, lambda)?;
    Ok(tape.value(loss).get(0, 0))
}

fn analytic_grads<M: ForecastModel>(
    model: &M,
    x: &DenseMatrix,
    y: &DenseMatrix,
    lambda: f64,
) -> Result<Vec<(String, DenseMatrix)>> {
    let mut tape = Tape::new();
    let bound = model.bind(&mut tape);
    let pred = model.forward_sample(&mut tape, &bound, x)?;
    let target = tape.constant(y.clone());
    let weights: Vec<_> = model
        .param_names()
        .iter()
        .filter(|n| !model.is_bias(n))
        .map(|n| M::bound_param(&bound, n))
        .collect();
    let loss = regularized_loss(&mut tape, pred, target, &weights, lambda)?;
    tape.backward(loss)?;
    Ok(model
        .param_names()
        .iter()
        .map(|n| (n.to_string(), tape.grad(M::bound_param(&bound, n)).clone()))
        .collect())
}

fn check_pass<M: ForecastModel>(
    model: &M,
    x: &DenseMatrix,
    y: &DenseMatrix,
    lambda: f64,
    grad_tweak: &dyn Fn(&str, &mut DenseMatrix),
) -> Result<Vec<ParamCheck>> {
    let mut grads = analytic_grads(model, x, y, lambda)?;
    for (name, grad) in &mut grads {
        grad_tweak(name, grad);
    }
    let mut checks = Vec::with_capacity(grads.len());
    for (name, analytic) in grads {
        let numeric = finite_difference_gradient(
            |probe| {
                let mut perturbed = model.clone();
                *perturbed.param_mut(&name) = probe.clone();
                loss_value(&perturbed, x, y, lambda).expect("loss evaluation during gradient check")
            },
            model.param(&name),
            FD_STEP,
        );
        checks.push(ParamCheck {
            name,
            lambda,
            max_rel_err: max_relative_error(&analytic, &numeric),
        });
    }
    Ok(checks)
}

/// Nudge every parameter entry 0.1 away from zero (keeping its sign) so the
/// L1 term is smooth in the probed neighborhood.
fn away_from_zero<M: ForecastModel>(model: &M) -> M {
    let mut shifted = model.clone();
    for name in model.param_names() {
        for v in shifted.param_mut(name).values_mut() {
            *v += if *v >= 0.0 { 0.1 } else { -0.1 };
        }
    }
    shifted
}

/// Checks every parameter matrix of the model against finite differences
/// on one (input window, target window) sample.
pub fn gradient_check_model<M: ForecastModel>(
    model: &M,
    x: &DenseMatrix,
    y: &DenseMatrix,
    tolerance: f64,
) -> Result<GradCheckReport> {
    let mut checks = check_pass(model, x, y, 0.0, &|_, _| {})?;
    let shifted = away_from_zero(model);
    checks.extend(check_pass(&shifted, x, y, 0.0015, &|_, _| {})?);
    Ok(GradCheckReport { checks, tolerance })
}
