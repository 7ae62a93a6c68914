//! Search the four-time inequality over three independent gaps instead of
//! assuming equal spacing. The optimum has equal gaps: π/8ω gives +2√2 and
//! its mirror 5π/8ω gives −2√2, which the absolute-value form treats alike.
//!
//! ```sh
//! cargo run --release -p tbell --example paz_full_search
//! ```

use std::f64::consts::{PI, SQRT_2};

use tbell::inequalities::maximize_violation_full;
use tbell::{DynamicsParams, Preset};

fn main() -> tbell::Result<()> {
    let params = DynamicsParams::new(1.0)?;
    let report = maximize_violation_full(&Preset::Paz4.spec(), &params, 128, 1e-10);
    println!("ΔK_max = {:.12} (2√2 = {:.12})", report.delta_k_max, 2.0 * SQRT_2);
    for (k, gap) in report.gaps.iter().enumerate() {
        let g = gap * params.omega();
        println!("gap {}: ωΔt = {:.9}  (= {:.6}·π/8)", k + 1, g, g / (PI / 8.0));
    }
    Ok(())
}
