//! Classifies each coupling centre of the default device.
//!
//! ```bash
//! cargo run --example regimes
//! ```

use hybrid_magnonics::centers::analyze_all;
use hybrid_magnonics::coupling::HybridSystem;

fn main() -> hybrid_magnonics::Result<()> {
    let sys = HybridSystem::measured_device();
    for r in analyze_all(&sys)? {
        println!(
            "centre {} ({:.2} GHz, H_c = {:.4} T): {:<12} real {:?}, imag {:?}, absorption ratio {:.3}",
            r.mode,
            r.f_n_ghz,
            r.crossing_field_t,
            r.regime.as_str(),
            r.real,
            r.imag,
            r.absorption_ratio
        );
    }
    Ok(())
}
