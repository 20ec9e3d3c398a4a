//! Slot-by-slot simulation of the multi-user uplink under the queue-driven
//! controller, plus trace recording, per-slot drift audits, and target
//! sweeps.
//!
//! Each slot: draw fading, pick a decision by drift-plus-penalty greedy
//! search from the current backlog, realize it, then absorb the realized
//! latency and accuracy into the queues. Records keep the queue state both
//! before and after the update so every slot can be re-audited offline.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand_chacha::ChaCha8Rng;

use crate::allocator::{
    evaluate_assignment_clamped, greedy_select, realize_decision, AllocatorContext, SlotDecision,
};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::lyapunov::{
    drift_bound_constant, drift_penalty_cost, verify_drift_bound, QueueParams, QueueState,
    QueueTargets, SlotMetrics,
};
use crate::phy::{sample_channel, ChannelState, LatencyBreakdown};
use crate::seeds::{derive_seed, Component};
use crate::world::{build_accuracy_table, AccuracyTable, CentroidDecoder, LatentWorld, Side};

/// Everything expensive a simulation needs that does not depend on the
/// controller targets: worlds, decoders and the accuracy table. Build once,
/// share across sweep cells.
pub struct SimulationAssets {
    pub worlds: Vec<LatentWorld>,
    pub decoders: Vec<CentroidDecoder>,
    pub table: AccuracyTable,
}

impl SimulationAssets {
    pub fn build(config: &ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let worlds = config.build_worlds()?;
        let decoders = worlds
            .iter()
            .map(|w| CentroidDecoder::train(w, Side::Rx))
            .collect::<Result<Vec<_>>>()?;
        let table = build_accuracy_table(
            &worlds,
            &decoders,
            &config.table_plan(),
            &config.coeff_set,
            &config.quant_set,
        )?;
        Ok(SimulationAssets { worlds, decoders, table })
    }
}

/// One simulated slot, complete enough to re-derive everything in it.
#[derive(Debug, Clone)]
pub struct SlotRecord {
    pub slot: usize,
    pub channel: ChannelState,
    pub decision: SlotDecision,
    pub latency: LatencyBreakdown,
    pub metrics: SlotMetrics,
    /// Drift-plus-penalty value of the decision under `queues_before`.
    pub cost: f64,
    /// Backlog the decision was taken under.
    pub queues_before: QueueState,
    /// Backlog after absorbing this slot's latency and accuracy.
    pub queues_after: QueueState,
    /// True when no discrete choice was feasible and the slot was realized
    /// at full power with a capped rate.
    pub fallback: bool,
}

/// Live simulation state. Borrows the scenario and prebuilt assets so sweep
/// cells can share them.
pub struct Simulation<'a> {
    config: &'a ScenarioConfig,
    ctx: AllocatorContext<'a>,
    targets: QueueTargets,
    params: QueueParams,
    queues: QueueState,
    assignment: Vec<(usize, u32)>,
    channel_rng: ChaCha8Rng,
    slot: usize,
    fallback_slots: usize,
}

impl<'a> Simulation<'a> {
    /// `channel_seed` selects the fading stream; runs with equal seeds see
    /// identical channels regardless of targets.
    pub fn new(
        config: &'a ScenarioConfig,
        assets: &'a SimulationAssets,
        channel_seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        let ctx = AllocatorContext {
            radio: &config.radio,
            devices: &config.devices,
            server: &config.server,
            table: &assets.table,
            n_set: &config.coeff_set,
            q_set: &config.quant_set,
            bandwidth_alpha: config.bandwidth_alpha,
            bandwidth_beta: config.bandwidth_beta,
            penalty_weight: config.penalty_weight,
        };
        ctx.validate()?;
        let k = config.n_users();
        Ok(Simulation {
            config,
            ctx,
            targets: config.queue_targets(),
            params: config.queue_params(),
            queues: QueueState::new(k),
            assignment: vec![(config.coeff_set[0], config.quant_set[0]); k],
            channel_rng: crate::seeds::seeded_rng(channel_seed),
            slot: 0,
            fallback_slots: 0,
        })
    }

    pub fn queues(&self) -> &QueueState {
        &self.queues
    }

    pub fn slot(&self) -> usize {
        self.slot
    }

    pub fn fallback_slots(&self) -> usize {
        self.fallback_slots
    }

    pub fn context(&self) -> &AllocatorContext<'a> {
        &self.ctx
    }

    /// Drift bound constant for this scenario, with accuracy ceilings at 1.
    pub fn drift_constant(&self) -> f64 {
        let ones = vec![1.0; self.config.n_users()];
        // validated targets cannot fail the length check
        drift_bound_constant(&self.params, &self.targets, self.ctx.worst_case_latency(), &ones)
            .expect("targets and ceilings have equal length")
    }

    /// Advances one slot with a freshly drawn channel.
    pub fn step(&mut self) -> Result<SlotRecord> {
        let channel = sample_channel(&self.config.radio, self.config.n_users(), &mut self.channel_rng);
        self.step_with_channel(channel)
    }

    /// Advances one slot on the given channel draw.
    pub fn step_with_channel(&mut self, channel: ChannelState) -> Result<SlotRecord> {
        let (eval, assignment, fallback) =
            match greedy_select(&self.ctx, &self.queues, &channel, &self.assignment) {
                Ok((eval, assignment)) => (eval, assignment, false),
                Err(Error::Infeasible(_)) => {
                    // deep fade: realize the previous choice at full power
                    let eval = evaluate_assignment_clamped(
                        &self.ctx,
                        &self.queues,
                        &channel,
                        &self.assignment,
                    )?;
                    (eval, self.assignment.clone(), true)
                }
                Err(e) => return Err(e),
            };
        if fallback {
            self.fallback_slots += 1;
        }
        self.assignment = assignment;
        self.finish_slot(channel, eval.decision, eval.latency, eval.metrics, eval.cost, fallback)
    }

    /// Advances one slot executing `decision` verbatim instead of optimizing.
    /// The queue dynamics and records work exactly as in [`Self::step`].
    pub fn step_forced(
        &mut self,
        channel: ChannelState,
        decision: SlotDecision,
    ) -> Result<SlotRecord> {
        let (latency, metrics) = realize_decision(&self.ctx, &channel, &decision)?;
        let cost = drift_penalty_cost(&self.queues, &metrics, self.ctx.penalty_weight);
        self.assignment = decision
            .n_coeffs
            .iter()
            .zip(&decision.bits)
            .map(|(&n, &q)| (n, q))
            .collect();
        self.finish_slot(channel, decision, latency, metrics, cost, false)
    }

    fn finish_slot(
        &mut self,
        channel: ChannelState,
        decision: SlotDecision,
        latency: LatencyBreakdown,
        metrics: SlotMetrics,
        cost: f64,
        fallback: bool,
    ) -> Result<SlotRecord> {
        let before = self.queues.clone();
        self.queues.update(&self.params, &self.targets, metrics.slot_latency(), &metrics.accuracy)?;
        let record = SlotRecord {
            slot: self.slot,
            channel,
            decision,
            latency,
            metrics,
            cost,
            queues_before: before,
            queues_after: self.queues.clone(),
            fallback,
        };
        self.slot += 1;
        Ok(record)
    }
}

/// Audits one record: recomputes the physics of its decision, checks the
/// stored latency, powers, cost and queue update against the recomputation
/// (within `1e-9` relative), then checks the per-slot drift inequality.
/// An inconsistent record is an error; a consistent record that breaks the
/// inequality returns `Ok(false)`.
pub fn verify_slot_record(
    ctx: &AllocatorContext,
    params: &QueueParams,
    targets: &QueueTargets,
    xi: f64,
    record: &SlotRecord,
) -> Result<bool> {
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0);
    let (latency, metrics) = realize_decision(ctx, &record.channel, &record.decision)?;
    let mut consistent = close(latency.total, record.latency.total)
        && close(metrics.server_latency, record.metrics.server_latency)
        && close(metrics.server_power, record.metrics.server_power)
        && close(
            record.cost,
            drift_penalty_cost(&record.queues_before, &metrics, ctx.penalty_weight),
        );
    for k in 0..metrics.n_users() {
        consistent = consistent
            && close(metrics.device_latency[k], record.metrics.device_latency[k])
            && metrics.accuracy[k] == record.metrics.accuracy[k]
            && close(metrics.tx_power[k], record.metrics.tx_power[k])
            && close(metrics.device_cpu_power[k], record.metrics.device_cpu_power[k]);
    }
    let mut replayed = record.queues_before.clone();
    replayed.update(params, targets, metrics.slot_latency(), &metrics.accuracy)?;
    consistent = consistent
        && close(replayed.latency, record.queues_after.latency)
        && replayed
            .accuracy
            .iter()
            .zip(&record.queues_after.accuracy)
            .all(|(&a, &b)| close(a, b));
    if !consistent {
        return Err(Error::InvalidInput(format!(
            "slot {} record disagrees with its own decision when recomputed",
            record.slot
        )));
    }
    verify_drift_bound(&record.queues_before, params, targets, &metrics, ctx.penalty_weight, xi)
}

/// Aggregates of one finished run.
#[derive(Debug, Clone)]
pub struct SimSummary {
    pub slots: usize,
    pub mean_latency_s: f64,
    pub mean_accuracy: Vec<f64>,
    pub mean_power_w: f64,
    /// Mean power over the trailing window (steady state).
    pub tail_power_w: f64,
    pub final_latency_queue: f64,
    pub final_accuracy_queues: Vec<f64>,
    pub fallback_slots: usize,
}

impl SimSummary {
    /// Tail window: the last `min(1000, slots)` records.
    pub fn from_records(records: &[SlotRecord]) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::InvalidInput("cannot summarize an empty run".into()));
        }
        let n = records.len();
        let k = records[0].metrics.n_users();
        let mut mean_latency = 0.0;
        let mut mean_acc = vec![0.0; k];
        let mut mean_power = 0.0;
        let mut fallback = 0;
        for r in records {
            mean_latency += r.metrics.slot_latency();
            mean_power += r.metrics.total_power();
            for u in 0..k {
                mean_acc[u] += r.metrics.accuracy[u];
            }
            fallback += usize::from(r.fallback);
        }
        mean_latency /= n as f64;
        mean_power /= n as f64;
        for a in &mut mean_acc {
            *a /= n as f64;
        }
        let tail = &records[n.saturating_sub(1000)..];
        let tail_power =
            tail.iter().map(|r| r.metrics.total_power()).sum::<f64>() / tail.len() as f64;
        let last = records.last().unwrap();
        Ok(SimSummary {
            slots: n,
            mean_latency_s: mean_latency,
            mean_accuracy: mean_acc,
            mean_power_w: mean_power,
            tail_power_w: tail_power,
            final_latency_queue: last.queues_after.latency,
            final_accuracy_queues: last.queues_after.accuracy.clone(),
            fallback_slots: fallback,
        })
    }

    /// Whether the run met its constraints, with `tolerance` relative slack
    /// (a run whose mean latency is within `(1 + tolerance) * target` and
    /// whose mean accuracies reach `(1 - tolerance) * target` counts as
    /// meeting them).
    pub fn meets(&self, targets: &QueueTargets, tolerance: f64) -> bool {
        self.mean_latency_s <= targets.latency_s * (1.0 + tolerance)
            && self
                .mean_accuracy
                .iter()
                .zip(&targets.accuracy)
                .all(|(&g, &t)| g >= t * (1.0 - tolerance))
    }
}

/// Rejects targets no control policy could meet: an accuracy floor above the
/// best value in a user's table.
pub fn feasible_targets(config: &ScenarioConfig, table: &AccuracyTable) -> Result<()> {
    for (user, &target) in config.accuracy_targets.iter().enumerate() {
        let best = table
            .max_accuracy(user)
            .ok_or_else(|| Error::InvalidInput(format!("table has no user {user}")))?;
        if target > best {
            return Err(Error::Infeasible(format!(
                "user {user}: accuracy target {target} exceeds the best achievable {best:.4}"
            )));
        }
    }
    Ok(())
}

/// A finished run: assets, the per-slot records and their summary.
pub struct SimulationOutcome {
    pub assets: SimulationAssets,
    pub records: Vec<SlotRecord>,
    pub summary: SimSummary,
}

/// Builds assets and runs `config.slots` slots on the scenario's own channel
/// stream. Fails with [`Error::Infeasible`] when the targets are impossible.
pub fn run_simulation(config: &ScenarioConfig) -> Result<SimulationOutcome> {
    let assets = SimulationAssets::build(config)?;
    feasible_targets(config, &assets.table)?;
    let channel_seed = derive_seed(config.seed, Component::Channel, 0);
    let mut sim = Simulation::new(config, &assets, channel_seed)?;
    let mut records = Vec::with_capacity(config.slots);
    for _ in 0..config.slots {
        records.push(sim.step()?);
    }
    let summary = SimSummary::from_records(&records)?;
    drop(sim);
    Ok(SimulationOutcome { assets, records, summary })
}

/// One cell of a target sweep.
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub latency_target_s: f64,
    pub accuracy_target: f64,
    /// `None` when the accuracy target exceeds what the table can reach.
    pub summary: Option<SimSummary>,
}

/// Reruns the scenario over a grid of latency and accuracy targets, reusing
/// the prebuilt assets. The accuracy target applies to every user. Each cell
/// runs on its own derived channel stream.
pub fn sweep(
    config: &ScenarioConfig,
    assets: &SimulationAssets,
    latency_targets: &[f64],
    accuracy_targets: &[f64],
) -> Result<Vec<SweepCell>> {
    if latency_targets.is_empty() || accuracy_targets.is_empty() {
        return Err(Error::InvalidInput("sweep grids cannot be empty".into()));
    }
    let mut cells = Vec::with_capacity(latency_targets.len() * accuracy_targets.len());
    for (i, &lt) in latency_targets.iter().enumerate() {
        for (j, &gt) in accuracy_targets.iter().enumerate() {
            let mut cell_config = config.clone();
            cell_config.latency_target_s = lt;
            cell_config.accuracy_targets = vec![gt; config.n_users()];
            let summary = if feasible_targets(&cell_config, &assets.table).is_ok() {
                let cell_index = (i * accuracy_targets.len() + j) as u64;
                let seed = derive_seed(config.seed, Component::SweepCell, cell_index);
                let mut sim = Simulation::new(&cell_config, assets, seed)?;
                let mut records = Vec::with_capacity(cell_config.slots);
                for _ in 0..cell_config.slots {
                    records.push(sim.step()?);
                }
                Some(SimSummary::from_records(&records)?)
            } else {
                log::warn!("sweep cell (latency {lt}, accuracy {gt}) is infeasible, skipped");
                None
            };
            cells.push(SweepCell { latency_target_s: lt, accuracy_target: gt, summary });
        }
    }
    Ok(cells)
}

/// Per-user counts of how often each `(N, q)` pair was chosen.
pub fn decision_histogram(records: &[SlotRecord]) -> Vec<BTreeMap<(usize, u32), usize>> {
    if records.is_empty() {
        return Vec::new();
    }
    let k = records[0].decision.n_users();
    let mut hist = vec![BTreeMap::new(); k];
    for r in records {
        for u in 0..k {
            *hist[u].entry((r.decision.n_coeffs[u], r.decision.bits[u])).or_insert(0) += 1;
        }
    }
    hist
}

/// Writes one CSV row per slot. Floats print in Rust's shortest round-trip
/// form, so a parsed trace reproduces the run bit for bit.
pub fn write_trace_csv(records: &[SlotRecord], mut out: impl Write) -> Result<()> {
    if records.is_empty() {
        return Err(Error::InvalidInput("refusing to write an empty trace".into()));
    }
    let k = records[0].metrics.n_users();
    let mut header = vec![
        "t".to_string(),
        "latency".into(),
        "server_latency".into(),
        "z".into(),
        "total_power".into(),
        "server_power".into(),
        "server_clock".into(),
        "cost".into(),
        "fallback".into(),
    ];
    for u in 0..k {
        for name in [
            "q", "gain", "n", "bits", "device_clock", "bandwidth", "rate", "tx_power",
            "cpu_power", "device_latency", "accuracy",
        ] {
            header.push(format!("{name}{u}"));
        }
    }
    writeln!(out, "{}", header.join(","))?;
    for r in records {
        let mut row = vec![
            r.slot.to_string(),
            r.metrics.slot_latency().to_string(),
            r.metrics.server_latency.to_string(),
            r.queues_after.latency.to_string(),
            r.metrics.total_power().to_string(),
            r.metrics.server_power.to_string(),
            r.decision.server_clock_hz.to_string(),
            r.cost.to_string(),
            u8::from(r.fallback).to_string(),
        ];
        for u in 0..k {
            row.push(r.queues_after.accuracy[u].to_string());
            row.push(r.channel.gains[u].to_string());
            row.push(r.decision.n_coeffs[u].to_string());
            row.push(r.decision.bits[u].to_string());
            row.push(r.decision.device_clock_hz[u].to_string());
            row.push(r.decision.bandwidth_hz[u].to_string());
            row.push(r.decision.rate_bps[u].to_string());
            row.push(r.metrics.tx_power[u].to_string());
            row.push(r.metrics.device_cpu_power[u].to_string());
            row.push(r.metrics.device_latency[u].to_string());
            row.push(r.metrics.accuracy[u].to_string());
        }
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Reads a trace written by [`write_trace_csv`]: header names plus one f64
/// row per slot.
pub fn read_trace_csv(input: impl BufRead) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidInput("trace is empty".into()))?
        .map_err(Error::from)?;
    let names: Vec<String> = header.split(',').map(str::to_string).collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|field| {
                field.parse::<f64>().map_err(|e| Error::InvalidInput(format!(
                    "trace line {}: bad field {field:?}: {e}",
                    i + 2
                )))
            })
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != names.len() {
            return Err(Error::InvalidInput(format!(
                "trace line {}: {} fields, header has {}",
                i + 2,
                row.len(),
                names.len()
            )));
        }
        rows.push(row);
    }
    Ok((names, rows))
}

/// Writes sweep results: one row per cell, blank metrics when infeasible.
pub fn write_sweep_csv(cells: &[SweepCell], mut out: impl Write) -> Result<()> {
    writeln!(
        out,
        "latency_target,accuracy_target,feasible,mean_latency,min_mean_accuracy,mean_power,tail_power,final_z"
    )?;
    for c in cells {
        match &c.summary {
            Some(s) => {
                let min_acc = s.mean_accuracy.iter().fold(f64::INFINITY, |a, &b| a.min(b));
                writeln!(
                    out,
                    "{},{},1,{},{},{},{},{}",
                    c.latency_target_s,
                    c.accuracy_target,
                    s.mean_latency_s,
                    min_acc,
                    s.mean_power_w,
                    s.tail_power_w,
                    s.final_latency_queue
                )?;
            }
            None => {
                writeln!(out, "{},{},0,,,,,", c.latency_target_s, c.accuracy_target)?;
            }
        }
    }
    Ok(())
}
