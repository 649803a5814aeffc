use serde::{Deserialize, Serialize};

use super::ModelError;

/// First-order radio model constants.
///
/// The crossover distance `d0` is always `sqrt(eps_fs / eps_mp)`, which makes
/// the free-space and multipath amplifier branches meet at `d0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioParams {
    /// Electronics energy, J/bit.
    pub e_elec: f64,
    /// Free-space amplifier coefficient, J/bit/m^2.
    pub eps_fs: f64,
    /// Multipath amplifier coefficient, J/bit/m^4.
    pub eps_mp: f64,
    /// Crossover distance between the two amplifier branches, m.
    pub d0: f64,
    /// Report message size `k`, bits.
    pub msg_bits: u64,
}

impl Default for RadioParams {
    fn default() -> Self {
        Self::new(50e-9, 10e-12, 0.0013e-12, 1000).expect("default radio constants are valid")
    }
}

impl RadioParams {
    pub fn new(e_elec: f64, eps_fs: f64, eps_mp: f64, msg_bits: u64) -> Result<Self, ModelError> {
        for (name, value) in [("e_elec", e_elec), ("eps_fs", eps_fs), ("eps_mp", eps_mp)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ModelError::RadioParam { name, value });
            }
        }
        if msg_bits == 0 {
            return Err(ModelError::RadioParam { name: "msg_bits", value: 0.0 });
        }
        Ok(Self {
            e_elec,
            eps_fs,
            eps_mp,
            d0: (eps_fs / eps_mp).sqrt(),
            msg_bits,
        })
    }

    /// Checks that a stored `d0` agrees with the amplifier coefficients.
    pub fn validate(&self) -> Result<(), ModelError> {
        let fresh = Self::new(self.e_elec, self.eps_fs, self.eps_mp, self.msg_bits)?;
        if ((self.d0 - fresh.d0) / fresh.d0).abs() > 1e-9 {
            return Err(ModelError::ThresholdMismatch {
                given: self.d0,
                derived: fresh.d0,
            });
        }
        Ok(())
    }

    pub fn tx(&self, bits: u64, distance: f64) -> f64 {
        tx_energy(bits, distance, self)
    }

    pub fn rx(&self, bits: u64) -> f64 {
        rx_energy(bits, self)
    }
}

/// Energy to transmit `bits` over `distance` meters.
///
/// Free-space (`d^2`) amplifier below `d0`, multipath (`d^4`) at or above it.
pub fn tx_energy(bits: u64, distance: f64, rp: &RadioParams) -> f64 {
    let k = bits as f64;
    let amp = if distance < rp.d0 {
        rp.eps_fs * distance * distance
    } else {
        rp.eps_mp * distance.powi(4)
    };
    k * rp.e_elec + k * amp
}

/// Energy to receive `bits`.
pub fn rx_energy(bits: u64, rp: &RadioParams) -> f64 {
    bits as f64 * rp.e_elec
}
