//! Writes the built-in three-user scenario to JSON so it can be edited and
//! fed back through `--config`. Pass a path to choose where it lands.

use semeq::config::ScenarioConfig;

fn main() -> semeq::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "scenario.json".into());
    let config = ScenarioConfig::default_three_users();
    config.validate()?;
    config.save(&path)?;
    println!(
        "wrote {path}: {} users, {} slots, latency target {} s, penalty weight {}",
        config.n_users(),
        config.slots,
        config.latency_target_s,
        config.penalty_weight
    );
    println!(
        "coefficient menu {:?}, bit menu {:?}",
        config.coeff_set, config.quant_set
    );
    Ok(())
}
