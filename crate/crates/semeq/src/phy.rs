//! Uplink radio and compute models for one cell: K user devices encoding
//! latent vectors and a single edge server decoding and classifying them.
//!
//! Propagation follows free-space path loss with i.i.d. unit-mean Rayleigh
//! fading per user and slot. Transmit power for a target rate inverts the
//! Shannon capacity of the allocated band; CPU power follows the cubic
//! dynamic-scaling law `kappa * f^3`. Per-slot latency decomposes into
//! device-side encoding, uplink transfer, and server-side reconstruction
//! plus classification, with the slot total taking the slowest device branch
//! followed by the shared server stage.

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boltzmann constant (J/K).
pub const BOLTZMANN: f64 = 1.380649e-23;

/// Cell-wide radio parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadioConfig {
    /// Total uplink bandwidth shared by all users (Hz).
    pub bandwidth_hz: f64,
    /// Receiver noise temperature (K); noise PSD is `k_B * T`.
    pub temperature_k: f64,
    pub carrier_ghz: f64,
    pub distance_km: f64,
    /// Per-user transmit power ceiling (W).
    pub max_tx_power_w: f64,
    /// Lowest admissible uplink rate (bit/s).
    pub rate_min_bps: f64,
    /// Per-user bandwidth floor (Hz); `None` defaults to `B / (10 K)`.
    pub min_bandwidth_hz: Option<f64>,
}

impl RadioConfig {
    /// Thermal noise power spectral density `k_B * T` (W/Hz).
    pub fn noise_psd(&self) -> f64 {
        BOLTZMANN * self.temperature_k
    }

    /// Effective per-user bandwidth floor for `k` users.
    pub fn bandwidth_floor(&self, n_users: usize) -> f64 {
        self.min_bandwidth_hz
            .unwrap_or(self.bandwidth_hz / (10.0 * n_users as f64))
    }

    pub fn validate(&self, n_users: usize) -> Result<()> {
        if !(self.bandwidth_hz > 0.0)
            || !(self.temperature_k > 0.0)
            || !(self.carrier_ghz > 0.0)
            || !(self.distance_km > 0.0)
            || !(self.max_tx_power_w > 0.0)
            || !(self.rate_min_bps > 0.0)
        {
            return Err(Error::Config("radio parameters must be positive".into()));
        }
        let floor = self.bandwidth_floor(n_users);
        if !(floor > 0.0) || floor * n_users as f64 > self.bandwidth_hz {
            return Err(Error::Config(format!(
                "bandwidth floor {floor} Hz infeasible for {n_users} users within {} Hz",
                self.bandwidth_hz
            )));
        }
        Ok(())
    }
}

/// Device-side compute model: affine cycle count in the coefficient count,
/// cubic power in the clock.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeviceComputeConfig {
    /// Effective switched capacitance (W/Hz^3).
    pub kappa: f64,
    pub freq_min_hz: f64,
    pub freq_max_hz: f64,
    /// Encoder cycles independent of the payload.
    pub cycles_base: f64,
    /// Extra cycles per transmitted coefficient.
    pub cycles_per_coeff: f64,
}

impl DeviceComputeConfig {
    /// Cycles to encode and prepare an `n`-coefficient payload.
    pub fn encode_cycles(&self, n_coeffs: usize) -> f64 {
        self.cycles_base + self.cycles_per_coeff * n_coeffs as f64
    }

    pub fn validate(&self) -> Result<()> {
        validate_compute(self.kappa, self.freq_min_hz, self.freq_max_hz, self.cycles_base)
    }
}

/// Server-side compute model shared by all users' payloads.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ServerComputeConfig {
    pub kappa: f64,
    pub freq_min_hz: f64,
    pub freq_max_hz: f64,
    /// Reconstruction cycles independent of the payload.
    pub recon_base: f64,
    /// Reconstruction cycles per received coefficient.
    pub recon_per_coeff: f64,
    /// Classifier cycles per payload, independent of its size.
    pub predict_cycles: f64,
}

impl ServerComputeConfig {
    /// Cycles to reconstruct and classify one `n`-coefficient payload.
    pub fn decode_cycles(&self, n_coeffs: usize) -> f64 {
        self.recon_base + self.recon_per_coeff * n_coeffs as f64 + self.predict_cycles
    }

    pub fn validate(&self) -> Result<()> {
        validate_compute(self.kappa, self.freq_min_hz, self.freq_max_hz, self.recon_base)
    }
}

fn validate_compute(kappa: f64, f_min: f64, f_max: f64, cycles: f64) -> Result<()> {
    if !(kappa > 0.0) || !(f_min > 0.0) || !(f_max >= f_min) || !(cycles >= 0.0) {
        return Err(Error::Config(
            "compute model needs kappa > 0, 0 < f_min <= f_max, cycles >= 0".into(),
        ));
    }
    Ok(())
}

/// Per-user squared channel magnitudes for one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelState {
    pub gains: Vec<f64>,
}

/// Free-space path loss in dB at `d_km` kilometers and `f_ghz` gigahertz.
///
/// ```
/// let pl = semeq::phy::path_loss_db(0.1, 3.5);
/// assert!((pl - 83.33136) < 1e-4 && (pl - 83.33136) > -1e-4);
/// ```
pub fn path_loss_db(d_km: f64, f_ghz: f64) -> f64 {
    20.0 * d_km.log10() + 20.0 * f_ghz.log10() + 92.45
}

/// Draws `|h|^2` for each user: unit-mean exponential fading scaled by the
/// path-loss attenuation.
pub fn sample_channel(radio: &RadioConfig, n_users: usize, rng: &mut impl Rng) -> ChannelState {
    let attenuation = 10.0_f64.powf(-path_loss_db(radio.distance_km, radio.carrier_ghz) / 10.0);
    let gains = (0..n_users)
        .map(|_| attenuation * rng.sample::<f64, _>(Exp1))
        .collect();
    ChannelState { gains }
}

/// Dynamic CPU power `kappa * f^3` (W).
pub fn cpu_power(kappa: f64, freq_hz: f64) -> f64 {
    kappa * freq_hz * freq_hz * freq_hz
}

/// Transmit power sustaining `rate` over `bandwidth` against noise PSD `n0`
/// and squared channel gain `h2`, from inverting Shannon capacity.
pub fn tx_power(bandwidth_hz: f64, n0: f64, h2: f64, rate_bps: f64) -> Result<f64> {
    if !(bandwidth_hz > 0.0) || !(h2 > 0.0) || !(n0 > 0.0) || !(rate_bps >= 0.0) {
        return Err(Error::InvalidInput(
            "tx_power needs positive bandwidth, gain, noise and non-negative rate".into(),
        ));
    }
    let exponent = rate_bps / bandwidth_hz;
    if exponent > 1020.0 {
        return Err(Error::Overflow(format!(
            "tx_power: rate/bandwidth ratio {exponent} exceeds the representable range"
        )));
    }
    // exp_m1 keeps precision when rate << bandwidth, where 2^x - 1 underflows
    Ok(bandwidth_hz * n0 / h2 * (exponent * std::f64::consts::LN_2).exp_m1())
}

/// Largest rate the power ceiling supports on this band and channel.
pub fn max_rate(bandwidth_hz: f64, power_cap_w: f64, h2: f64, n0: f64) -> f64 {
    // ln_1p keeps the rate positive in fades where SNR drops below f64 eps
    bandwidth_hz * (power_cap_w * h2 / (bandwidth_hz * n0)).ln_1p() / std::f64::consts::LN_2
}

/// One user's slot latency contributions (seconds).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserLatency {
    /// Device-side encoding time.
    pub compute: f64,
    /// Uplink transfer time for the payload.
    pub uplink: f64,
}

impl UserLatency {
    /// Encoding plus uplink: the device branch this user contributes.
    pub fn device_total(&self) -> f64 {
        self.compute + self.uplink
    }
}

/// Slot latency: device branches run in parallel, the server stage follows
/// the slowest branch.
#[derive(Debug, Clone, PartialEq)]
pub struct LatencyBreakdown {
    pub per_user: Vec<UserLatency>,
    /// Shared server stage over all payloads.
    pub server: f64,
    /// `max_k (compute_k + uplink_k) + server`.
    pub total: f64,
}

/// Assembles the slot latency from per-user payloads and clocks.
///
/// `payload_bits[k]` is `N_k * q_k`, `rates[k]` the uplink rate, `clocks[k]`
/// the device clock; `decode_cycles[k]` the server cycles for user k's
/// payload, all served at `server_clock`.
pub fn slot_latency(
    encode_cycles: &[f64],
    clocks: &[f64],
    payload_bits: &[f64],
    rates: &[f64],
    decode_cycles: &[f64],
    server_clock: f64,
) -> Result<LatencyBreakdown> {
    let k = encode_cycles.len();
    if [clocks.len(), payload_bits.len(), rates.len(), decode_cycles.len()]
        .iter()
        .any(|&l| l != k)
    {
        return Err(Error::dim("slot_latency", k, "mismatched per-user slices"));
    }
    if !(server_clock > 0.0) {
        return Err(Error::InvalidInput("server clock must be positive".into()));
    }
    let mut per_user = Vec::with_capacity(k);
    for i in 0..k {
        if !(clocks[i] > 0.0) || !(rates[i] > 0.0) {
            return Err(Error::InvalidInput(format!(
                "user {i}: clock and rate must be positive"
            )));
        }
        per_user.push(UserLatency {
            compute: encode_cycles[i] / clocks[i],
            uplink: payload_bits[i] / rates[i],
        });
    }
    let server = decode_cycles.iter().sum::<f64>() / server_clock;
    let slowest = per_user
        .iter()
        .map(UserLatency::device_total)
        .fold(0.0_f64, f64::max);
    Ok(LatencyBreakdown { per_user, server, total: slowest + server })
}
