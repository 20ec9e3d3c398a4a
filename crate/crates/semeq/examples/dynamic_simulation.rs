//! A full closed-loop run on a small two-user scenario.
//!
//! Virtual queues absorb each slot's latency overshoot and accuracy
//! shortfall; the allocator spends power only when those queues demand it.
//! The run is audited afterwards: every record is recomputed from its inputs
//! and checked against the per-slot drift inequality.

use semeq::config::{ScenarioConfig, WorldSource};
use semeq::seeds::{derive_seed, Component};
use semeq::sim::{verify_slot_record, write_trace_csv, SimSummary, Simulation, SimulationAssets};
use semeq::world::WorldSpec;

fn main() -> semeq::Result<()> {
    let mut config = ScenarioConfig::default_three_users();
    config.seed = 11;
    config.slots = 400;
    config.coeff_set = vec![4, 8, 16, 32];
    config.quant_set = vec![4, 8, 16];
    config.accuracy_targets = vec![0.62, 0.62];
    config.latency_target_s = 0.05;
    config.devices.truncate(2);
    config.worlds = (0..2)
        .map(|_| {
            WorldSource::Synthetic(WorldSpec {
                dim_tx: 16,
                dim_rx: 16,
                n_classes: 8,
                n_samples: 640,
                cluster_spread: 0.3,
                noise_sigma: 0.1,
                scale: 1.0,
                seed: 0,
            })
        })
        .collect();
    config.validate()?;

    let assets = SimulationAssets::build(&config)?;
    for user in 0..config.n_users() {
        println!(
            "user {user}: table accuracy spans {:.3} .. {:.3}",
            assets.table.min_accuracy(user).unwrap(),
            assets.table.max_accuracy(user).unwrap()
        );
    }

    let mut sim = Simulation::new(&config, &assets, derive_seed(config.seed, Component::Channel, 0))?;
    let mut records = Vec::with_capacity(config.slots);
    println!("\n{:>5} {:>10} {:>8} {:>12} {:>10}", "slot", "latency", "Z", "Q (max)", "power");
    for t in 0..config.slots {
        let record = sim.step()?;
        if t < 3 || (t + 1) % 100 == 0 {
            let q_max = record.queues_after.accuracy.iter().cloned().fold(0.0, f64::max);
            println!(
                "{t:>5} {:>9.4}s {:>8.4} {:>12.4} {:>9.4}W",
                record.latency.total,
                record.queues_after.latency,
                q_max,
                record.metrics.total_power()
            );
        }
        records.push(record);
    }

    let summary = SimSummary::from_records(&records)?;
    println!(
        "\nsummary: mean latency {:.4} s (target {}), mean accuracy {:?} (targets {:?}), mean power {:.4} W",
        summary.mean_latency_s,
        config.latency_target_s,
        summary
            .mean_accuracy
            .iter()
            .map(|a| (a * 1e3).round() / 1e3)
            .collect::<Vec<_>>(),
        config.accuracy_targets,
        summary.mean_power_w
    );

    // audit: recompute every record and check the drift inequality
    let xi = sim.drift_constant();
    let params = config.queue_params();
    let targets = config.queue_targets();
    let mut violations = 0usize;
    for record in &records {
        if !verify_slot_record(sim.context(), &params, &targets, xi, record)? {
            violations += 1;
        }
    }
    println!("audit: {} records recomputed, drift bound violations: {violations}", records.len());

    let trace = std::env::temp_dir().join("semeq_dynamic_example.csv");
    write_trace_csv(&records, std::fs::File::create(&trace)?)?;
    println!("trace written to {}", trace.display());
    Ok(())
}
