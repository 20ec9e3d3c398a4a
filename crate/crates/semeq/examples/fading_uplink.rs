//! The radio between the agents and the server.
//!
//! Walks the physical-layer pieces end to end: free-space path loss, the
//! exponential fading model, Shannon-capacity rate caps, the transmit power
//! needed for a requested rate, and how the closed-form rate choice responds
//! to latency pressure.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use semeq::allocator::optimal_rate;
use semeq::config::ScenarioConfig;
use semeq::phy::{max_rate, path_loss_db, sample_channel, tx_power};

fn main() -> semeq::Result<()> {
    let config = ScenarioConfig::default_three_users();
    let radio = &config.radio;
    let n0 = radio.noise_psd();

    let pl_db = path_loss_db(radio.distance_km, radio.carrier_ghz);
    let attenuation = 10f64.powf(-pl_db / 10.0);
    println!(
        "link at {} km, {} GHz: path loss {pl_db:.2} dB, noise psd {n0:.3e} W/Hz, bandwidth {} Hz",
        radio.distance_km, radio.carrier_ghz, radio.bandwidth_hz
    );

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    println!("\nfaded capacity at full power ({} W):", radio.max_tx_power_w);
    for _ in 0..5 {
        let channel = sample_channel(radio, 1, &mut rng);
        let h2 = channel.gains[0];
        let cap = max_rate(radio.bandwidth_hz, radio.max_tx_power_w, h2, n0);
        println!(
            "  gain {:.3e} ({:+.1} dB vs mean): capacity {:.3} Mbit/s",
            h2,
            10.0 * (h2 / attenuation).log10(),
            cap / 1e6
        );
    }

    // power for a requested rate inverts the capacity expression
    let channel = sample_channel(radio, 1, &mut rng);
    let h2 = channel.gains[0];
    println!("\ntransmit power for target rates (gain {:.3e}):", h2);
    for rate in [1e4, 1e5, 1e6, 4e6] {
        let p = tx_power(radio.bandwidth_hz, n0, h2, rate)?;
        let recovered = max_rate(radio.bandwidth_hz, p, h2, n0);
        println!(
            "  {:>7.3} Mbit/s needs {:.3e} W (capacity at that power: {:>7.3} Mbit/s)",
            rate / 1e6,
            p,
            recovered / 1e6
        );
    }

    // the per-slot rate choice balances queue-weighted latency against
    // V-weighted power; pressure pushes it from the floor toward the cap
    println!("\nclosed-form rate vs latency queue (512-bit payload, V = {}):", config.penalty_weight);
    for z in [0.0, 1e-3, 1e-2, 0.1, 1.0, 10.0] {
        let rate = optimal_rate(z, 512.0, h2, radio.bandwidth_hz, radio, config.penalty_weight)?;
        println!("  Z = {z:>6}: rate {:>9.3} Mbit/s, uplink {:>8.3} ms", rate / 1e6, 512.0 / rate * 1e3);
    }
    Ok(())
}
