//! Sweep-table serialization.
//!
//! The CSV layout is one row per grid point in row-major (tau-outer) order,
//! preceded by comment lines that embed the tool version and the
//! configuration digest. Values are written with 17 significant digits so
//! downstream regression checks are tolerance-controlled rather than
//! format-limited, and nothing in the file depends on wall-clock time:
//! identical configuration and cache produce bit-identical bytes.

use std::io::{self, Write};

use relcav::SweepResult64;

/// Column header of the sweep table.
pub const CSV_HEADER: &str = "tau,t,nu_tilde_1st_order,log_negativity,commutator_defect";

/// Writes the sweep table. Failed grid points appear as NaN rows; the
/// caller is responsible for reporting them through the exit status.
pub fn write_sweep_csv(
    w: &mut impl Write,
    result: &SweepResult64,
    version: &str,
    config_hash: &str,
) -> io::Result<()> {
    writeln!(w, "# tool_version: {version}")?;
    writeln!(w, "# config_hash: {config_hash}")?;
    writeln!(w, "{CSV_HEADER}")?;
    for (i, tau) in result.tau_values.iter().enumerate() {
        for (j, t) in result.t_values.iter().enumerate() {
            writeln!(
                w,
                "{tau:.16e},{t:.16e},{:.16e},{:.16e},{:.16e}",
                result.nu_tilde_first_order[(i, j)],
                result.log_negativity[(i, j)],
                result.commutator_defect[(i, j)],
            )?;
        }
    }
    Ok(())
}
