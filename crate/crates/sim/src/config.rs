//! Machine description.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Frequencies {
    pub nttu: f64,
    pub mmau: f64,
    pub bconv_modmult: f64,
    pub modmult: f64,
    pub modadd: f64,
    pub exchange: f64,
    pub noc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScratchpadConfig {
    pub capacity_bytes: u64,
    pub bandwidth: f64,
    /// Fraction of capacity that HBM loads must leave free for compute temporaries.
    pub load_reserve: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegisterFileConfig {
    pub capacity_bytes: u64,
    pub bandwidth: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HbmConfig {
    pub stacks: u32,
    pub bandwidth: f64,
    pub pseudo_channels: u32,
    pub efficiency: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NocConfig {
    pub port_bits: u32,
    pub bisection: f64,
}

/// Peak power of one PE's components, in mW.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PePower {
    pub scratchpad: f64,
    pub register_file: f64,
    pub nttu: f64,
    pub bconv_modmult: f64,
    pub mmau: f64,
    pub exchange: f64,
    pub modmult: f64,
    pub modadd: f64,
}

/// Peak power of chip-level components, in W.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChipPower {
    pub inter_pe_noc: f64,
    pub global_bru: f64,
    pub local_bru: f64,
    pub hbm_noc: f64,
    pub hbm: f64,
    pub pcie: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerTable {
    pub pe_mw: PePower,
    pub chip_w: ChipPower,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardwareConfig {
    /// Reference clock all simulated cycles are counted in.
    pub clock_hz: f64,
    pub l_sub: usize,
    pub grid: Grid,
    pub freq: Frequencies,
    pub scratchpad: ScratchpadConfig,
    pub register_file: RegisterFileConfig,
    pub hbm: HbmConfig,
    pub noc: NocConfig,
    pub power: PowerTable,
}

const DEFAULT_CONFIG: &str = include_str!("../data/bts.toml");

impl Default for HardwareConfig {
    fn default() -> Self {
        Self::from_toml(DEFAULT_CONFIG).expect("shipped config is valid")
    }
}

impl HardwareConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn n_pe(&self) -> usize {
        self.grid.rows * self.grid.cols
    }

    pub fn scratchpad_per_pe(&self) -> u64 {
        self.scratchpad.capacity_bytes / self.n_pe() as u64
    }

    /// Effective HBM bandwidth in bytes/s.
    pub fn hbm_bandwidth(&self) -> f64 {
        self.hbm.bandwidth * self.hbm.efficiency
    }

    /// Converts `cycles` of a unit clocked at `hz` to reference cycles, rounding up.
    pub fn to_ref_cycles(&self, cycles: f64, hz: f64) -> u64 {
        (cycles * self.clock_hz / hz - 1e-9).ceil().max(0.0) as u64
    }

    pub fn cycles_to_seconds(&self, cycles: u64) -> f64 {
        cycles as f64 / self.clock_hz
    }

    /// Chip peak power in W with every component fully busy, PCIe included.
    pub fn peak_power(&self) -> f64 {
        let p = &self.power.pe_mw;
        let pe = p.scratchpad + p.register_file + p.nttu + p.bconv_modmult + p.mmau + p.exchange + p.modmult + p.modadd;
        let c = &self.power.chip_w;
        pe * self.n_pe() as f64 / 1000.0 + c.inter_pe_noc + c.global_bru + c.local_bru + c.hbm_noc + c.hbm + c.pcie
    }

    /// Highest power the simulator can attribute: everything but PCIe busy.
    pub fn max_modeled_power(&self) -> f64 {
        self.peak_power() - self.power.chip_w.pcie
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        if self.grid.rows == 0 || self.grid.cols == 0 {
            return bad("grid dimensions must be positive");
        }
        if !self.grid.rows.is_power_of_two() || !self.grid.cols.is_power_of_two() {
            return bad("grid dimensions must be powers of two");
        }
        let f = &self.freq;
        let positive = [
            self.clock_hz,
            f.nttu,
            f.mmau,
            f.bconv_modmult,
            f.modmult,
            f.modadd,
            f.exchange,
            f.noc,
            self.scratchpad.bandwidth,
            self.register_file.bandwidth,
            self.hbm.bandwidth,
            self.hbm.efficiency,
            self.noc.bisection,
        ];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return bad("frequencies, bandwidths and efficiency must be positive");
        }
        if self.hbm.efficiency > 1.0 {
            return bad("hbm efficiency must not exceed 1");
        }
        if self.scratchpad.capacity_bytes == 0 || self.register_file.capacity_bytes == 0 {
            return bad("capacities must be positive");
        }
        if !(0.0..1.0).contains(&self.scratchpad.load_reserve) {
            return bad("load_reserve must be in [0, 1)");
        }
        if self.hbm.stacks == 0 || self.hbm.pseudo_channels == 0 || self.noc.port_bits == 0 {
            return bad("hbm stacks, pseudo-channels and port width must be positive");
        }
        if self.l_sub == 0 || self.l_sub > 64 {
            return bad("l_sub must be in 1..=64");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_config() {
        let hw = HardwareConfig::default();
        assert_eq!(hw.n_pe(), 2048);
        assert_eq!(hw.scratchpad_per_pe(), 256 * 1024);
        assert!((hw.peak_power() - 163.2).abs() < 0.05, "{}", hw.peak_power());
        assert_eq!(HardwareConfig::from_toml(&hw.to_toml()).unwrap(), hw);
    }

    #[test]
    fn rejects_bad_values() {
        let mut hw = HardwareConfig::default();
        hw.hbm.bandwidth = 0.0;
        assert!(hw.validate().is_err());
        let mut hw = HardwareConfig::default();
        hw.grid.rows = 3;
        assert!(hw.validate().is_err());
        assert!(matches!(HardwareConfig::from_toml("clock_hz = 1"), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn clock_conversion() {
        let hw = HardwareConfig::default();
        assert_eq!(hw.to_ref_cycles(64.0, 0.3e9), 256);
        assert_eq!(hw.to_ref_cycles(64.0, 0.6e9), 128);
        assert_eq!(hw.to_ref_cycles(544.0, 1.2e9), 544);
    }
}
