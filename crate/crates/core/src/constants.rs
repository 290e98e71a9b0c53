//! Physical constants (CODATA 2018 exact/recommended values).

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant, J/K (exact).
pub const K_B: f64 = 1.380_649e-23;
/// Speed of light in vacuum, m/s (exact).
pub const C: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub k_b: f64,
    pub c: f64,
}

impl PhysicalConstants {
    pub const CODATA: PhysicalConstants = PhysicalConstants {
        hbar: HBAR,
        k_b: K_B,
        c: C,
    };
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::CODATA
    }
}
