//! |S21| map of the three-ring device and a frequency cut at the 5.56 GHz
//! crossing field, where the absorption centre sits.
//!
//! ```bash
//! cargo run --release --example transmission_map
//! ```

use hybrid_magnonics::centers::crossing_field;
use hybrid_magnonics::coupling::HybridSystem;
use hybrid_magnonics::transmission::{sweep_spectrum, SweepGrid, Variant};

fn main() -> hybrid_magnonics::Result<()> {
    let sys = HybridSystem::measured_device();
    let grid = SweepGrid::linspace((0.05, 0.25), 200, (4.0, 7.5), 400)?;
    let map = sweep_spectrum(&sys, &grid, Variant::Multimode, 0)?;
    println!(
        "{}×{} map, {} clamped cells",
        grid.shape().0,
        grid.shape().1,
        map.saturated.len()
    );

    let hc = crossing_field(&sys, 1)?.tesla();
    let i = grid
        .field_axis()
        .iter()
        .enumerate()
        .min_by(|a, b| {
            (a.1.tesla() - hc)
                .abs()
                .total_cmp(&(b.1.tesla() - hc).abs())
        })
        .map(|(i, _)| i)
        .unwrap_or(0);
    println!("cut at {:.4} T:", grid.field_axis()[i].tesla());
    for (j, f) in grid.freq_axis().iter().enumerate().step_by(20) {
        println!("  {f:.3} GHz  {:7.2} dB", map.db(i, j));
    }
    Ok(())
}
