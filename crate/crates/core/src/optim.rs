//! Adam with a per-stage step-halving learning-rate schedule.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LrSchedule {
    pub base_lr: f64,
    pub stage_batches: usize,
    /// Batch indices (within a stage) at which the rate halves, strictly increasing.
    pub halve_points: Vec<usize>,
}

impl LrSchedule {
    pub fn new(base_lr: f64, stage_batches: usize, halve_points: Vec<usize>) -> Result<Self> {
        if !(base_lr.is_finite() && base_lr > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "learning rate {base_lr} must be positive"
            )));
        }
        if stage_batches == 0 {
            return Err(Error::InvalidConfig(
                "stage needs at least one batch".into(),
            ));
        }
        if halve_points.windows(2).any(|w| w[0] >= w[1])
            || halve_points.last().is_some_and(|&p| p >= stage_batches)
        {
            return Err(Error::InvalidConfig(format!(
                "halve points {halve_points:?} must be strictly increasing and below {stage_batches}"
            )));
        }
        Ok(Self {
            base_lr,
            stage_batches,
            halve_points,
        })
    }

    /// Halves at the given fractions of the stage length (e.g. 0.6 and 0.8).
    ///
    /// Fractions that collapse onto the same batch for very short stages are merged.
    pub fn from_fractions(base_lr: f64, stage_batches: usize, fractions: &[f64]) -> Result<Self> {
        let mut points: Vec<usize> = fractions
            .iter()
            .map(|f| (f * stage_batches as f64).floor() as usize)
            .filter(|&p| p < stage_batches)
            .collect();
        points.dedup();
        Self::new(base_lr, stage_batches, points)
    }

    pub fn lr_at(&self, batch_in_stage: usize) -> Result<f64> {
        if batch_in_stage >= self.stage_batches {
            return Err(Error::OutOfStage {
                batch: batch_in_stage,
                stage_batches: self.stage_batches,
            });
        }
        let halvings = self
            .halve_points
            .iter()
            .take_while(|&&p| p <= batch_in_stage)
            .count();
        Ok(self.base_lr * 0.5f64.powi(halvings as i32))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    /// Zeroed moments with β1 = 0.9, β2 = 0.999, ε = 1e-8.
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.m
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.v
    }

    /// One bias-corrected Adam update of `params` in place.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != params.len() {
            return Err(Error::Dimension {
                expected: self.m.len(),
                got: if params.len() != self.m.len() {
                    params.len()
                } else {
                    grads.len()
                },
            });
        }
        if let Some(g) = grads.iter().find(|g| !g.is_finite()) {
            return Err(Error::Numeric(format!("gradient entry {g}")));
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powf(self.t as f64);
        let bc2 = 1.0 - self.beta2.powf(self.t as f64);
        for ((p, &g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}
