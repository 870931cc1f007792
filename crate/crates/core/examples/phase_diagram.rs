//! CIT/CIA phase diagram for k = 0.02 and a σ sweep of the boundary.
//!
//! ```bash
//! cargo run --example phase_diagram
//! ```

use hybrid_magnonics::phasemap::{
    cia_boundary, cia_existence_limit, phase_diagram, PhaseDiagramSpec, Regime,
};

fn main() -> hybrid_magnonics::Result<()> {
    let pd = phase_diagram(&PhaseDiagramSpec::new(2.0, 0.02), 0)?;
    let count = |r: Regime| pd.cells.iter().flatten().filter(|c| c.regime == r).count();
    println!(
        "σ = 2, k = 0.02: {} normal, {} opposite, {} CIA cells",
        count(Regime::CitNormal),
        count(Regime::CitOpposite),
        count(Regime::Cia)
    );
    if let Some(d_max) = cia_existence_limit(2.0, 0.02) {
        println!("boundary ends at d = {d_max:.4}");
    }

    println!("sigma  psi*(d=0)  psi*(d=0.01)");
    for sigma in [1.5, 2.0, 3.0, 4.0] {
        let at = |d| cia_boundary(sigma, 0.02, d).map_or("-".to_string(), |p| format!("{p:.2}"));
        println!("{sigma:5.1}  {:>9}  {:>12}", at(0.0), at(0.01));
    }
    Ok(())
}
