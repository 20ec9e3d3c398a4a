//! Virtual queues and the drift-plus-penalty slot cost.
//!
//! Long-term latency and accuracy constraints are enforced without a model
//! of future channel states by turning each constraint into a virtual queue:
//! the latency queue absorbs `latency - target` each slot and the per-user
//! accuracy queues absorb `target - accuracy`, both clamped at zero. Keeping
//! the queues mean-rate stable is equivalent to meeting the constraints on
//! average. The per-slot controller then minimizes a queue-weighted cost
//!
//! `Gamma = sum_k [Z L_k + V p_k] - sum_k Q_k G_k + Z L_server + V p_server`
//!
//! whose minimization bounds the Lyapunov drift plus `V` times power; larger
//! `V` trades slacker queues for lower power. [`verify_drift_bound`] checks
//! the realized per-slot inequality that this argument rests on.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Long-run targets: one latency bound for the slot, one accuracy floor per
/// user.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QueueTargets {
    /// End-to-end slot latency target (seconds).
    pub latency_s: f64,
    /// Per-user downstream accuracy floors in `[0, 1]`.
    pub accuracy: Vec<f64>,
}

impl QueueTargets {
    pub fn validate(&self) -> Result<()> {
        if !(self.latency_s > 0.0) {
            return Err(Error::Config("latency target must be positive".into()));
        }
        if self.accuracy.is_empty()
            || self.accuracy.iter().any(|g| !(0.0..=1.0).contains(g))
        {
            return Err(Error::Config("accuracy targets must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Queue step sizes; they scale how fast a violated constraint accumulates
/// pressure.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QueueParams {
    pub latency_step: f64,
    pub accuracy_step: f64,
}

impl QueueParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.latency_step > 0.0) || !(self.accuracy_step > 0.0) {
            return Err(Error::Config("queue step sizes must be positive".into()));
        }
        Ok(())
    }
}

/// Virtual queue backlog: latency queue `Z` and accuracy queues `Q_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct QueueState {
    pub latency: f64,
    pub accuracy: Vec<f64>,
}

impl QueueState {
    /// All-zero backlog for `n_users`.
    pub fn new(n_users: usize) -> Self {
        QueueState { latency: 0.0, accuracy: vec![0.0; n_users] }
    }

    pub fn n_users(&self) -> usize {
        self.accuracy.len()
    }

    /// One queue step with the metrics realized in the previous slot:
    /// `Z <- max(0, Z + eps_z (L - L_target))`,
    /// `Q_k <- max(0, Q_k + eps_q (G_target_k - G_k))`.
    pub fn update(
        &mut self,
        params: &QueueParams,
        targets: &QueueTargets,
        realized_latency: f64,
        realized_accuracy: &[f64],
    ) -> Result<()> {
        if realized_accuracy.len() != self.accuracy.len()
            || targets.accuracy.len() != self.accuracy.len()
        {
            return Err(Error::dim("queue update", self.accuracy.len(), realized_accuracy.len()));
        }
        if !(realized_latency >= 0.0) || !realized_latency.is_finite() {
            return Err(Error::InvalidInput(format!(
                "realized latency must be finite and non-negative, got {realized_latency}"
            )));
        }
        for (k, g) in realized_accuracy.iter().enumerate() {
            if !(0.0..=1.0).contains(g) {
                return Err(Error::InvalidInput(format!(
                    "realized accuracy for user {k} must be in [0, 1], got {g}"
                )));
            }
        }
        self.latency =
            (self.latency + params.latency_step * (realized_latency - targets.latency_s)).max(0.0);
        for k in 0..self.accuracy.len() {
            self.accuracy[k] = (self.accuracy[k]
                + params.accuracy_step * (targets.accuracy[k] - realized_accuracy[k]))
                .max(0.0);
        }
        Ok(())
    }

    /// Quadratic Lyapunov function `(Z^2 + sum_k Q_k^2) / 2`.
    pub fn lyapunov_value(&self) -> f64 {
        0.5 * (self.latency * self.latency
            + self.accuracy.iter().map(|q| q * q).sum::<f64>())
    }
}

/// Everything the controller needs to cost one slot: realized (or candidate)
/// latencies, accuracies and powers.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotMetrics {
    /// Per-user device branch latency: encode plus uplink (seconds).
    pub device_latency: Vec<f64>,
    /// Shared server stage latency (seconds).
    pub server_latency: f64,
    /// Per-user downstream accuracy in `[0, 1]`.
    pub accuracy: Vec<f64>,
    /// Per-user radio transmit power (W).
    pub tx_power: Vec<f64>,
    /// Per-user device CPU power (W).
    pub device_cpu_power: Vec<f64>,
    /// Server CPU power (W).
    pub server_power: f64,
}

impl SlotMetrics {
    pub fn n_users(&self) -> usize {
        self.device_latency.len()
    }

    /// Slot latency: slowest device branch plus the server stage.
    pub fn slot_latency(&self) -> f64 {
        self.device_latency.iter().fold(0.0_f64, |a, &l| a.max(l)) + self.server_latency
    }

    /// The looser sum-over-branches form the per-slot cost uses.
    pub fn summed_latency(&self) -> f64 {
        self.device_latency.iter().sum::<f64>() + self.server_latency
    }

    pub fn user_power(&self, k: usize) -> f64 {
        self.tx_power[k] + self.device_cpu_power[k]
    }

    pub fn total_power(&self) -> f64 {
        self.server_power
            + self
                .tx_power
                .iter()
                .zip(&self.device_cpu_power)
                .map(|(a, b)| a + b)
                .sum::<f64>()
    }
}

/// Drift-plus-penalty cost of one slot given the current backlog.
pub fn drift_penalty_cost(queues: &QueueState, metrics: &SlotMetrics, penalty_weight: f64) -> f64 {
    let mut cost = queues.latency * metrics.server_latency + penalty_weight * metrics.server_power;
    for k in 0..metrics.n_users() {
        cost += queues.latency * metrics.device_latency[k] - queues.accuracy[k] * metrics.accuracy[k]
            + penalty_weight * metrics.user_power(k);
    }
    cost
}

/// The constant absorbing the quadratic part of the one-slot drift:
/// `eps_z^2 (L_max - L_target)^2 / 2 + sum_k eps_q^2 (G_target_k - G_max_k)^2 / 2`.
pub fn drift_bound_constant(
    params: &QueueParams,
    targets: &QueueTargets,
    latency_max: f64,
    accuracy_max: &[f64],
) -> Result<f64> {
    if accuracy_max.len() != targets.accuracy.len() {
        return Err(Error::dim("drift_bound_constant", targets.accuracy.len(), accuracy_max.len()));
    }
    let dl = latency_max - targets.latency_s;
    let mut xi = 0.5 * params.latency_step * params.latency_step * dl * dl;
    for (g_bar, g_max) in targets.accuracy.iter().zip(accuracy_max) {
        let dg = g_bar - g_max;
        xi += 0.5 * params.accuracy_step * params.accuracy_step * dg * dg;
    }
    Ok(xi)
}

/// Checks the realized one-slot drift inequality
///
/// `Delta_Lyapunov + V p <= xi + Z (L_server + sum_k L_k - L_target)
///                            + sum_k Q_k (G_target_k - G_k) + V p`
///
/// with queue values taken before the update and a `1e-9` slack. This is the
/// step that turns per-slot cost minimization into a long-run guarantee; it
/// holds whenever the step sizes are at most one, realized latency stays in
/// `[0, latency_max]` with `latency_max >= 2 L_target`, and realized accuracy
/// stays above `2 G_target_k - G_max_k`.
pub fn verify_drift_bound(
    before: &QueueState,
    params: &QueueParams,
    targets: &QueueTargets,
    metrics: &SlotMetrics,
    penalty_weight: f64,
    xi: f64,
) -> Result<bool> {
    if metrics.n_users() != before.n_users() {
        return Err(Error::dim("verify_drift_bound", before.n_users(), metrics.n_users()));
    }
    let mut after = before.clone();
    after.update(params, targets, metrics.slot_latency(), &metrics.accuracy)?;
    let drift = after.lyapunov_value() - before.lyapunov_value();
    let v_power = penalty_weight * metrics.total_power();

    let mut rhs = xi + before.latency * (metrics.summed_latency() - targets.latency_s) + v_power;
    for k in 0..metrics.n_users() {
        rhs += before.accuracy[k] * (targets.accuracy[k] - metrics.accuracy[k]);
    }
    Ok(drift + v_power <= rhs + 1e-9)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn metrics_1user(device: f64, server: f64, acc: f64) -> SlotMetrics {
        SlotMetrics {
            device_latency: vec![device],
            server_latency: server,
            accuracy: vec![acc],
            tx_power: vec![0.01],
            device_cpu_power: vec![0.5],
            server_power: 1.0,
        }
    }

    #[test]
    fn queue_step_and_clamp() {
        let params = QueueParams { latency_step: 0.1, accuracy_step: 1.0 };
        let targets = QueueTargets { latency_s: 1.0, accuracy: vec![0.7] };
        let mut q = QueueState::new(1);
        q.latency = 1.0;
        q.update(&params, &targets, 3.0, &[0.9]).unwrap();
        assert!((q.latency - 1.2).abs() < 1e-12);
        // accuracy over target drains the (empty) queue to the clamp
        assert_eq!(q.accuracy[0], 0.0);

        q.update(&params, &targets, 0.0, &[0.5]).unwrap();
        assert!((q.latency - 1.1).abs() < 1e-12);
        assert!((q.accuracy[0] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn lyapunov_value_is_half_sum_of_squares() {
        let q = QueueState { latency: 3.0, accuracy: vec![4.0, 0.0] };
        assert!((q.lyapunov_value() - 12.5).abs() < 1e-12);
        assert_eq!(QueueState::new(2).lyapunov_value(), 0.0);
    }

    #[test]
    fn cost_reduces_to_power_or_latency() {
        let m = metrics_1user(0.02, 0.01, 0.8);
        // empty queues: pure penalty V * p(t)
        let zero = QueueState::new(1);
        let v = 2.0;
        assert!((drift_penalty_cost(&zero, &m, v) - v * m.total_power()).abs() < 1e-12);
        // V = 0, unit latency queue: summed latency form
        let mut q = QueueState::new(1);
        q.latency = 1.0;
        assert!((drift_penalty_cost(&q, &m, 0.0) - m.summed_latency()).abs() < 1e-12);
        // accuracy queue contributes negatively
        q.accuracy[0] = 2.0;
        assert!(
            (drift_penalty_cost(&q, &m, 0.0) - (m.summed_latency() - 2.0 * 0.8)).abs() < 1e-12
        );
    }

    #[test]
    fn drift_constant_examples() {
        let params = QueueParams { latency_step: 1.0, accuracy_step: 1.0 };
        // no users: latency term only, (3-1)^2 / 2 = 2
        let t_empty = QueueTargets { latency_s: 1.0, accuracy: vec![] };
        assert!((drift_bound_constant(&params, &t_empty, 3.0, &[]).unwrap() - 2.0).abs() < 1e-12);
        // one user with target 0.7 and ceiling 1 adds 0.045
        let t1 = QueueTargets { latency_s: 1.0, accuracy: vec![0.7] };
        let xi = drift_bound_constant(&params, &t1, 3.0, &[1.0]).unwrap();
        assert!((xi - 2.045).abs() < 1e-12);
    }

    #[test]
    fn drift_bound_holds_under_unit_steps() {
        // unit step sizes, realized accuracy above 2 * target - 1, latency
        // below the ceiling: the inequality must hold on every slot
        let params = QueueParams { latency_step: 1.0, accuracy_step: 1.0 };
        let targets = QueueTargets { latency_s: 0.04, accuracy: vec![0.66, 0.7] };
        let latency_max = 1.0;
        let xi = drift_bound_constant(&params, &targets, latency_max, &[1.0, 1.0]).unwrap();

        let mut state = QueueState::new(2);
        let mut mix = 0x1234_5678_u64;
        let mut rand01 = move || {
            mix = mix.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (mix >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..5000 {
            let m = SlotMetrics {
                device_latency: vec![rand01() * 0.4, rand01() * 0.4],
                server_latency: rand01() * 0.2,
                accuracy: vec![0.45 + 0.55 * rand01(), 0.45 + 0.55 * rand01()],
                tx_power: vec![rand01() * 0.1, rand01() * 0.1],
                device_cpu_power: vec![rand01(), rand01()],
                server_power: rand01() * 3.0,
            };
            assert!(verify_drift_bound(&state, &params, &targets, &m, 1e-3, xi).unwrap());
            let l = m.slot_latency();
            let g = m.accuracy.clone();
            state.update(&params, &targets, l, &g).unwrap();
        }

        // a forced worst-latency slot keeps the inequality tight but valid
        let worst = SlotMetrics {
            device_latency: vec![latency_max - 0.2, 0.1],
            server_latency: 0.2,
            accuracy: vec![0.9, 0.9],
            tx_power: vec![0.15, 0.15],
            device_cpu_power: vec![40.0, 40.0],
            server_power: 60.0,
        };
        assert!((worst.slot_latency() - latency_max).abs() < 1e-12);
        assert!(verify_drift_bound(&state, &params, &targets, &worst, 1e-3, xi).unwrap());
    }

    #[test]
    fn drift_bound_detects_violation() {
        // step size below one, backlog positive, accuracy above target:
        // the stated inequality genuinely fails, and the checker says so
        let params = QueueParams { latency_step: 1.0, accuracy_step: 0.5 };
        let targets = QueueTargets { latency_s: 1.0, accuracy: vec![0.7] };
        let xi = drift_bound_constant(&params, &targets, 2.0, &[1.0]).unwrap();
        let mut state = QueueState::new(1);
        state.accuracy[0] = 10.0;
        let m = metrics_1user(0.5, 0.4, 1.0);
        assert!(!verify_drift_bound(&state, &params, &targets, &m, 1e-3, xi).unwrap());
    }

    #[test]
    fn update_rejects_bad_metrics() {
        let params = QueueParams { latency_step: 1.0, accuracy_step: 1.0 };
        let targets = QueueTargets { latency_s: 1.0, accuracy: vec![0.7] };
        let mut q = QueueState::new(1);
        assert!(q.update(&params, &targets, -1.0, &[0.5]).is_err());
        assert!(q.update(&params, &targets, 1.0, &[1.5]).is_err());
        assert!(q.update(&params, &targets, 1.0, &[0.5, 0.5]).is_err());
        assert!(q.update(&params, &targets, f64::NAN, &[0.5]).is_err());
    }
}
