//! Minimal end-to-end run: build the four-segment travel scenario on the
//! second resonance of modes (1, 2) and print the resulting entanglement.

use relcav::geometry::{CavityGeometry, ModeIndex, ModePair};
use relcav::trajectory::{analyze, build_segment_symplectic, OracleSource, SampleScenarioParams};
use relcav::QuadSpec64;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let geometry = CavityGeometry::from_length_acceleration(1.0, 1e-4, 0.0)?;
    let pair = ModePair::new(ModeIndex::new(1)?, ModeIndex::new(2)?)?;
    // burn tau, coast t, burn (ratio y, same direction), coast t; 5 passes
    let scenario = SampleScenarioParams::new(pair, 1.0 / 3.0, 1.0 / 3.0, 1e-4, 1.0, 1, 5, 2)?;
    let source = OracleSource::new(QuadSpec64::default());
    let built = build_segment_symplectic(&scenario.trajectory(), &geometry, pair, &source, 24)?;
    let report = analyze(&built, 5)?;
    println!(
        "log-negativity after 5 passes: {:.6e}",
        report.log_negativity
    );
    println!("fitted squeezing r: {:.6e}", report.squeezing_r);
    Ok(())
}
