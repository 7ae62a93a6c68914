//! Walk one measured trajectory through the measure/evolve recursion and
//! show where the joint probability and the correlator product come from.
//!
//! ```sh
//! cargo run -p tbell --example rabi_trajectory
//! ```

use std::f64::consts::PI;

use tbell::{
    expectation_q, initial_state, measured_trajectory, trajectory_product, DynamicsParams,
    InitialPhase, Outcome,
};

fn main() -> tbell::Result<()> {
    let params = DynamicsParams::new(1.0)?;
    let phase = InitialPhase::new(0.0);

    println!("free evolution, Q(t) = cos 2ωt:");
    for k in 0..=8 {
        let t = k as f64 * PI / 8.0;
        let q = expectation_q(&initial_state(phase, t, &params))?;
        println!("  ωt = {:>6.4}  Q = {:+.6}", t, q);
    }

    let times = [0.3, 0.9, 1.4, 2.6];
    println!("\nall outcome sequences for measurements at {times:?}:");
    let mut total = 0.0;
    for mask in 0..16u32 {
        let outcomes: Vec<Outcome> = (0..4)
            .map(|k| if mask >> k & 1 == 1 { Outcome::Minus } else { Outcome::Plus })
            .collect();
        let (records, fin) = measured_trajectory(phase, &times, &outcomes, &params)?;
        let labels: Vec<String> = outcomes.iter().map(Outcome::to_string).collect();
        let disturbances: Vec<String> =
            records.iter().map(|r| format!("{:.3}", r.disturbance)).collect();
        println!(
            "  q = [{}]  p = {:.6}  q1q2q3q4·p = {:+.6}  Δ = [{}]",
            labels.join(", "),
            fin.norm_sqr(),
            trajectory_product(&records, &fin),
            disturbances.join(", ")
        );
        total += fin.norm_sqr();
    }
    println!("sum of joint probabilities = {total:.15}");
    Ok(())
}
