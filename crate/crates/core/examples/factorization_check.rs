//! Phase-averaged trajectory oracle against the closed form `A_ε cos 2ωτ`.
//!
//! ```sh
//! cargo run --release -p tbell --example factorization_check
//! ```

use std::f64::consts::PI;

use tbell::correlators::factorization_scan;
use tbell::{selection_factor, DynamicsParams, QuadratureConfig, SelectedEnsemble, SelectionPolicy};

fn main() -> tbell::Result<()> {
    let params = DynamicsParams::new(1.0)?;
    let quad = QuadratureConfig::default();

    println!("retained probability vs A_ε:");
    for e in [0.0, 0.25, 0.5, 0.75, 0.9, 1.0] {
        let policy = SelectionPolicy::new(e)?;
        let ensemble = SelectedEnsemble::build(0.0, &params, &policy, &quad);
        println!(
            "  ε = {e:.2}  oracle = {:.10}  A_ε = {:.10}",
            ensemble.retained_probability(),
            selection_factor(&policy)
        );
    }

    let epsilons: Vec<f64> = (0..=20).map(|k| k as f64 / 20.0).collect();
    let lags: Vec<f64> = (0..64).map(|k| k as f64 * PI / 63.0).collect();
    let cells = factorization_scan(&epsilons, &lags, 0.0, &params, &quad, false)?;
    let worst = cells
        .iter()
        .max_by(|a, b| a.deviation.total_cmp(&b.deviation))
        .expect("non-empty grid");
    println!(
        "\n{} cells, max |oracle − A_ε K| = {:.3e} at ε = {}, ωτ = {:.4}",
        cells.len(),
        worst.deviation,
        worst.epsilon,
        worst.lag
    );
    println!(
        "all within tolerance: {}",
        cells.iter().all(|c| c.passes())
    );
    Ok(())
}
