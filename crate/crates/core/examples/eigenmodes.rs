//! Hybrid eigenfrequencies near the 7.02 GHz centre: the closed-form
//! pairwise branches against the full four-mode determinant.
//!
//! ```bash
//! cargo run --example eigenmodes
//! ```

use hybrid_magnonics::centers::center_window;
use hybrid_magnonics::coupling::{multimode_eigenvalues, sweep_pairwise, HybridSystem};
use hybrid_magnonics::units::GHZ_TO_RAD_PER_S;

fn main() -> hybrid_magnonics::Result<()> {
    let sys = HybridSystem::measured_device();
    let n = 2;
    let fields = center_window(&sys, n, 0.01, 9)?;
    let pair = sweep_pairwise(&sys, n, &fields);
    println!("mu0_H_T   E+ (GHz)          E- (GHz)          multimode roots near f3 (GHz)");
    for (i, &h) in fields.iter().enumerate() {
        let ghz = |z: hybrid_magnonics::Complex64| z / GHZ_TO_RAD_PER_S;
        let (p, m) = (ghz(pair.eigenvalues[i][0]), ghz(pair.eigenvalues[i][1]));
        let near: Vec<String> = multimode_eigenvalues(&sys, h)?
            .into_iter()
            .map(ghz)
            .filter(|z| (z.re - 7.02).abs() < 0.3)
            .map(|z| format!("{:.5}{:+.5}i", z.re, z.im))
            .collect();
        println!(
            "{:.5}  {:.5}{:+.5}i  {:.5}{:+.5}i  {}",
            h.tesla(),
            p.re,
            p.im,
            m.re,
            m.im,
            near.join("  ")
        );
    }
    Ok(())
}
