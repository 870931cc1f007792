//! Kittel FMR curve of the YIG film and the crossing field of each ring.
//!
//! ```bash
//! cargo run --example kittel_curve
//! ```

use hybrid_magnonics::magnon::{kittel_field, kittel_frequency, FieldPoint, MagnonParams};
use hybrid_magnonics::photon::default_modes;

fn main() -> hybrid_magnonics::Result<()> {
    let yig = MagnonParams::default();
    println!("mu0_H_T  f_GHz");
    for i in 0..=6 {
        let h = FieldPoint::new(0.05 * i as f64)?;
        println!("{:7.3}  {:.4}", h.tesla(), kittel_frequency(h, &yig));
    }
    for mode in default_modes() {
        let hc = kittel_field(mode.f_ghz, &yig)?;
        println!(
            "ring {} at {:.2} GHz crosses the magnon at {:.5} T",
            mode.label,
            mode.f_ghz,
            hc.tesla()
        );
    }
    Ok(())
}
