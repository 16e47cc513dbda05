//! Fixtures shared by the solver benchmarks.

use rydmirror::{Lattice, Mirror, Polarization, ProbeMode, Result};

/// Disc array at the reflectivity-optimal lattice constant.
pub fn disc_mirror(diameter: usize, w0: f64) -> Result<Mirror> {
    Mirror::new(
        Lattice::disc(diameter, 0.75, Polarization::circular())?,
        ProbeMode::new(1.0, w0)?,
    )?
    .with_peak_drive(1e-3)
}
