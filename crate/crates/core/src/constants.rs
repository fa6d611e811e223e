//! Physical constants (SI).

/// Electron rest mass in kg.
pub const ELECTRON_MASS: f64 = 9.1093837e-31;

/// Reduced Planck constant in J·s.
pub const HBAR: f64 = 1.054571817e-34;

/// One electron-volt in J (SI 2019 exact value).
pub const EV: f64 = 1.602176634e-19;
