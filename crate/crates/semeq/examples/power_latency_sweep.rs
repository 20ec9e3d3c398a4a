//! The cost surface behind the controller.
//!
//! Reruns one scenario over a grid of latency and accuracy targets. Tight
//! latency budgets are bought with power; unreachable accuracy targets are
//! flagged infeasible up front instead of producing a misleading run.

use semeq::config::{ScenarioConfig, WorldSource};
use semeq::sim::{sweep, SimulationAssets};
use semeq::world::WorldSpec;

fn main() -> semeq::Result<()> {
    let mut config = ScenarioConfig::default_three_users();
    config.seed = 11;
    config.slots = 1500;
    config.coeff_set = vec![4, 8, 16, 32];
    config.quant_set = vec![4, 8, 16];
    config.accuracy_targets = vec![0.6, 0.6];
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

    // worlds and the accuracy table are built once and shared by every cell
    let assets = SimulationAssets::build(&config)?;
    let ceiling = (0..config.n_users())
        .map(|u| assets.table.max_accuracy(u).unwrap())
        .fold(f64::INFINITY, f64::min);
    println!("lowest per-user accuracy ceiling: {ceiling:.3}\n");

    let latency_targets = [0.03, 0.06, 0.12];
    let accuracy_targets = [0.6, 0.7, (ceiling + 1.0) / 2.0];
    let cells = sweep(&config, &assets, &latency_targets, &accuracy_targets)?;

    println!(
        "{:>8} {:>9} | {:>12} {:>13} {:>12} {:>10}",
        "latency", "accuracy", "mean latency", "min accuracy", "tail power", "final Z"
    );
    for cell in &cells {
        match &cell.summary {
            Some(s) => {
                let min_acc = s.mean_accuracy.iter().cloned().fold(f64::INFINITY, f64::min);
                println!(
                    "{:>8} {:>9.3} | {:>11.4}s {:>13.4} {:>11.4}W {:>10.4}",
                    cell.latency_target_s, cell.accuracy_target, s.mean_latency_s, min_acc,
                    s.tail_power_w, s.final_latency_queue
                );
            }
            None => println!(
                "{:>8} {:>9.3} | {:>12} (accuracy target above the table ceiling)",
                cell.latency_target_s, cell.accuracy_target, "infeasible"
            ),
        }
    }
    println!("\ntighter latency budgets cost power; the infeasible column never ran");
    Ok(())
}
