use std::f64::consts::FRAC_PI_2;

use crate::engine::Shift;
use crate::error::{Error, Result};

use super::model::{Class, LabeledSample, SampleInput, VariationalModel};

/// How gradients of the cost are obtained.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum GradientMode {
    ParameterShift,
    FiniteDifference { epsilon: f64 },
}

impl GradientMode {
    pub fn validate(&self) -> Result<()> {
        match *self {
            GradientMode::ParameterShift => Ok(()),
            GradientMode::FiniteDifference { epsilon } if epsilon > 0.0 && epsilon.is_finite() => Ok(()),
            GradientMode::FiniteDifference { epsilon } => Err(Error::Validation(format!(
                "finite-difference step must be positive, got {epsilon}"
            ))),
        }
    }

    /// Half-width of the symmetric shift pair.
    pub fn delta(&self) -> f64 {
        match *self {
            GradientMode::ParameterShift => FRAC_PI_2,
            GradientMode::FiniteDifference { epsilon } => epsilon,
        }
    }

    /// `∂E/∂θ` from the values at `θ + δ` and `θ − δ`.
    pub fn combine(&self, plus: f64, minus: f64) -> f64 {
        match *self {
            GradientMode::ParameterShift => (plus - minus) / 2.0,
            GradientMode::FiniteDifference { epsilon } => (plus - minus) / (2.0 * epsilon),
        }
    }

    /// The unshifted evaluation followed by the `±δ` pair for every slot.
    pub fn shifts(&self, num_params: usize) -> Vec<Option<Shift>> {
        let d = self.delta();
        std::iter::once(None)
            .chain((0..num_params).flat_map(|slot| {
                [
                    Some(Shift { slot, delta: d }),
                    Some(Shift { slot, delta: -d }),
                ]
            }))
            .collect()
    }
}

/// Plaintext `⟨Z_k⟩` of the model circuit on `input`, with an optional shift.
pub fn expectation(model: &VariationalModel, input: &SampleInput, shift: Option<Shift>) -> Result<f64> {
    if input.num_qubits() != model.num_qubits() {
        return Err(Error::domain(format!(
            "{}-qubit sample for a {}-qubit model",
            input.num_qubits(),
            model.num_qubits()
        )));
    }
    let mut state = input.to_state()?;
    state.apply_all(&model.circuit().bind_shifted(model.theta(), shift)?)?;
    state.expectation_z(model.observable())
}

pub fn predict(model: &VariationalModel, input: &SampleInput) -> Result<f64> {
    expectation(model, input, None)
}

pub fn classify(model: &VariationalModel, input: &SampleInput) -> Result<Class> {
    Ok(Class::from_expectation(predict(model, input)?))
}

/// `(1/N) Σ (E_i − y_i)²` from precomputed expectations.
pub fn mse_from(expectations: &[f64], labels: &[f64]) -> Result<f64> {
    if expectations.is_empty() {
        return Err(Error::domain("cost of an empty dataset"));
    }
    if expectations.len() != labels.len() {
        return Err(Error::domain("expectation and label counts differ"));
    }
    let n = expectations.len() as f64;
    Ok(expectations
        .iter()
        .zip(labels)
        .map(|(e, y)| (e - y).powi(2))
        .sum::<f64>()
        / n)
}

pub fn mse_cost(model: &VariationalModel, dataset: &[LabeledSample]) -> Result<f64> {
    let e = dataset
        .iter()
        .map(|s| predict(model, &s.input))
        .collect::<Result<Vec<_>>>()?;
    let y: Vec<f64> = dataset.iter().map(LabeledSample::label).collect();
    mse_from(&e, &y)
}

fn check_slot(model: &VariationalModel, j: usize) -> Result<()> {
    if j < model.num_params() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "parameter {j} out of range for {} parameters",
            model.num_params()
        )))
    }
}

fn cost_derivative(model: &VariationalModel, dataset: &[LabeledSample], j: usize, mode: GradientMode) -> Result<f64> {
    check_slot(model, j)?;
    mode.validate()?;
    if dataset.is_empty() {
        return Err(Error::domain("gradient of an empty dataset"));
    }
    let d = mode.delta();
    let mut total = 0.0;
    for s in dataset {
        let e = predict(model, &s.input)?;
        let plus = expectation(model, &s.input, Some(Shift { slot: j, delta: d }))?;
        let minus = expectation(model, &s.input, Some(Shift { slot: j, delta: -d }))?;
        total += (e - s.label()) * mode.combine(plus, minus);
    }
    Ok(total * (2.0 / dataset.len() as f64))
}

/// `∂C/∂θ_j` by the ±π/2 shift rule.
pub fn parameter_shift_gradient(model: &VariationalModel, dataset: &[LabeledSample], j: usize) -> Result<f64> {
    cost_derivative(model, dataset, j, GradientMode::ParameterShift)
}

/// `∂C/∂θ_j` by a central difference of step `epsilon`.
pub fn finite_difference_gradient(model: &VariationalModel, dataset: &[LabeledSample], j: usize, epsilon: f64) -> Result<f64> {
    cost_derivative(model, dataset, j, GradientMode::FiniteDifference { epsilon })
}

/// Cost and full gradient, computed locally on plaintext.
pub fn local_cost_and_gradient(model: &VariationalModel, dataset: &[LabeledSample], mode: GradientMode) -> Result<(f64, Vec<f64>)> {
    mode.validate()?;
    let evaluations = dataset
        .iter()
        .map(|s| local_sample_gradient(model, &s.input, mode))
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<f64> = dataset.iter().map(LabeledSample::label).collect();
    assemble_gradient(&evaluations, &labels)
}

/// `(E, ∂E/∂θ)` for one input, computed locally on plaintext.
pub fn local_sample_gradient(model: &VariationalModel, input: &SampleInput, mode: GradientMode) -> Result<(f64, Vec<f64>)> {
    let values = mode
        .shifts(model.num_params())
        .into_iter()
        .map(|s| expectation(model, input, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(split_shift_values(&values, mode))
}

/// Splits values laid out as by [`GradientMode::shifts`] into `(E, ∂E/∂θ)`.
pub fn split_shift_values(values: &[f64], mode: GradientMode) -> (f64, Vec<f64>) {
    let grad = values[1..]
        .chunks_exact(2)
        .map(|pair| mode.combine(pair[0], pair[1]))
        .collect();
    (values[0], grad)
}

/// Cost and gradient from per-sample `(E, ∂E/∂θ)` pairs.
pub fn assemble_gradient(evaluations: &[(f64, Vec<f64>)], labels: &[f64]) -> Result<(f64, Vec<f64>)> {
    let e: Vec<f64> = evaluations.iter().map(|(e, _)| *e).collect();
    let cost = mse_from(&e, labels)?;
    let p = evaluations[0].1.len();
    if evaluations.iter().any(|(_, d)| d.len() != p) {
        return Err(Error::domain("per-sample gradients of different lengths"));
    }
    let mut grad = vec![0.0; p];
    for ((e, de), y) in evaluations.iter().zip(labels) {
        for (g, d) in grad.iter_mut().zip(de) {
            *g += (e - y) * d;
        }
    }
    let scale = 2.0 / evaluations.len() as f64;
    grad.iter_mut().for_each(|g| *g *= scale);
    Ok((cost, grad))
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
