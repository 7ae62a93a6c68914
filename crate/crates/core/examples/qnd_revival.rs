//! Stroboscopic measurements every π/ω leave an eigenstate undisturbed, but
//! at that spacing the three-time combination sits at its minimum.
//!
//! ```sh
//! cargo run -p tbell --example qnd_revival
//! ```

use tbell::{
    delta_k_stationary, measured_trajectory, DynamicsParams, InitialPhase, Outcome, Preset,
    SelectionPolicy,
};

fn main() -> tbell::Result<()> {
    let params = DynamicsParams::new(3.0)?;
    let revival = params.revival_time();
    let phase = InitialPhase::new(0.0);

    let times: Vec<f64> = (0..6).map(|k| k as f64 * revival).collect();
    let (records, fin) = measured_trajectory(phase, &times, &[Outcome::Plus; 6], &params)?;
    for r in &records {
        println!("t = {:.6}  q = {}  Δ = {:.2e}", r.time, r.outcome, r.disturbance);
    }
    println!("survival probability = {:.15}", fin.norm_sqr());

    // a spacing off the revival disturbs the system
    let times: Vec<f64> = (0..6).map(|k| k as f64 * 0.37 * revival).collect();
    let (records, _) = measured_trajectory(phase, &times, &[Outcome::Plus; 6], &params)?;
    let worst = records.iter().map(|r| r.disturbance).fold(0.0, f64::max);
    println!("off-revival spacing: largest Δ = {worst:.4}");

    let spec = Preset::SantosMinus.spec();
    let at_revival = delta_k_stationary(&spec, revival, &params, &SelectionPolicy::unselective())?;
    let at_peak = delta_k_stationary(&spec, revival / 3.0, &params, &SelectionPolicy::unselective())?;
    println!("ΔK₋ at spacing π/ω = {at_revival:+.6} (bound {})", spec.bound());
    println!("ΔK₋ at spacing π/3ω = {at_peak:+.6}");
    Ok(())
}
