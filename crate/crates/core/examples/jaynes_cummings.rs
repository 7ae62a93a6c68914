//! Atom–cavity setting: the effective oscillation frequency is Ω_R √(n+1),
//! so the optimal measurement spacing shrinks as n grows while ΔK_max and
//! ε* stay put.
//!
//! ```sh
//! cargo run -p tbell --example jaynes_cummings
//! ```

use tbell::{
    epsilon_threshold, jaynes_cummings_frequency, maximize_violation, DynamicsParams, Preset,
    SearchConfig, SelectionPolicy, SolveConfig,
};

fn main() -> tbell::Result<()> {
    let rabi = 0.25;
    let spec = Preset::SantosMinus.spec();
    for n in [0u32, 1, 3, 8, 24, 48] {
        let omega = jaynes_cummings_frequency(rabi, n)?;
        let params = DynamicsParams::new(omega)?;
        let r = maximize_violation(
            &spec,
            &params,
            &SelectionPolicy::unselective(),
            &SearchConfig::default(),
        );
        let star = epsilon_threshold(&spec, &params, &SolveConfig::default())?;
        println!(
            "n = {n:>2}  ω = {omega:.4}  best spacing t = {:.6}  ΔK_max = {:.9}  ε* = {star:.6}",
            r.argmax_spacing, r.delta_k_max
        );
    }
    Ok(())
}
