//! Maximal violations, their degradation with ε, and the threshold ε*
//! for the three built-in inequalities.
//!
//! ```sh
//! cargo run -p tbell --example violation_thresholds
//! ```

use tbell::{
    epsilon_threshold, maximize_violation, DynamicsParams, Preset, SearchConfig, SelectionPolicy,
    SolveConfig,
};

fn main() -> tbell::Result<()> {
    let params = DynamicsParams::new(1.0)?;
    let search = SearchConfig::default();

    for preset in Preset::ALL {
        let spec = preset.spec();
        let best = maximize_violation(&spec, &params, &SelectionPolicy::unselective(), &search);
        let star = epsilon_threshold(&spec, &params, &SolveConfig::default())?;
        println!(
            "{preset:<13} B = {}  ΔK_max = {:.9}  at ωt = {:.9}  ε* = {:.6}",
            spec.bound(),
            best.delta_k_max,
            best.argmax_spacing * params.omega(),
            star
        );
        for e in [0.0, 0.3, 0.6, star, 0.8] {
            let r = maximize_violation(&spec, &params, &SelectionPolicy::new(e)?, &search);
            println!(
                "    ε = {e:.4}  A_ε = {:.6}  ΔB_max = {:+.6}  violated = {}",
                r.a_epsilon, r.delta_b_max, r.violated
            );
        }
    }
    Ok(())
}
