use serde::{Deserialize, Serialize};

use super::{ParamsError, SecurityTable};

/// A CKKS parameter tuple. Data primes are q_0 (log_q0_bits) and q_1..q_L
/// (log_q_bits); the k = (L+1)/dnum special primes have log_p_bits each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CkksInstance {
    pub name: String,
    pub log_n: u32,
    pub max_level: usize,
    pub dnum: usize,
    pub log_q0_bits: u32,
    pub log_q_bits: u32,
    pub log_p_bits: u32,
    #[serde(default = "default_l_boot")]
    pub l_boot: usize,
    /// Tabulated security level, if known; otherwise interpolated.
    #[serde(default)]
    pub lambda: Option<f64>,
}

fn default_l_boot() -> usize {
    19
}

impl CkksInstance {
    /// Desk-scale functional instance: q_0 and p of 60 bits, q_i of 40 bits, Δ = 2^40.
    pub fn toy(log_n: u32, max_level: usize, dnum: usize) -> Self {
        Self {
            name: format!("toy-{log_n}-{max_level}-{dnum}"),
            log_n,
            max_level,
            dnum,
            log_q0_bits: 60,
            log_q_bits: 40,
            log_p_bits: 60,
            l_boot: 0,
            lambda: None,
        }
    }

    /// Flagship-style instance with the 60/50/60 prime allocation.
    pub fn flagship(name: &str, log_n: u32, max_level: usize, dnum: usize) -> Self {
        Self {
            name: name.to_string(),
            log_n,
            max_level,
            dnum,
            log_q0_bits: 60,
            log_q_bits: 50,
            log_p_bits: 60,
            l_boot: 19,
            lambda: None,
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        let key = name.to_ascii_lowercase().replace('-', "");
        builtin_instances()
            .into_iter()
            .find(|i| i.name.to_ascii_lowercase().replace('-', "") == key)
    }

    pub fn from_toml(text: &str) -> Result<Self, ParamsError> {
        let ins: Self = toml::from_str(text).map_err(|e| ParamsError::Parse(e.to_string()))?;
        ins.validate().map_err(ParamsError::InvalidInstance)?;
        Ok(ins)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("instance serializes")
    }

    pub fn n(&self) -> usize {
        1 << self.log_n
    }

    pub fn k(&self) -> usize {
        (self.max_level + 1) / self.dnum
    }

    pub fn alpha(&self) -> usize {
        self.k()
    }

    pub fn log_pq(&self) -> u32 {
        self.log_q0_bits
            + self.max_level as u32 * self.log_q_bits
            + self.k() as u32 * self.log_p_bits
    }

    /// Scale Δ used when encoding fresh messages.
    pub fn scale(&self) -> f64 {
        2f64.powi(self.log_q_bits as i32)
    }

    pub fn lambda_or_interpolated(&self) -> f64 {
        self.lambda
            .unwrap_or_else(|| SecurityTable::default().lambda(self.n(), self.log_pq()))
    }

    /// Structural checks needed to build a basis.
    pub fn validate(&self) -> Result<(), String> {
        if !(1..=20).contains(&self.log_n) {
            return Err(format!("log_n = {} out of range", self.log_n));
        }
        if self.dnum == 0 || (self.max_level + 1) % self.dnum != 0 {
            return Err(format!(
                "L + 1 = {} is not divisible by dnum = {}",
                self.max_level + 1,
                self.dnum
            ));
        }
        for (what, b) in [
            ("log_q0_bits", self.log_q0_bits),
            ("log_q_bits", self.log_q_bits),
            ("log_p_bits", self.log_p_bits),
        ] {
            if !(2..=61).contains(&b) {
                return Err(format!("{what} = {b} out of range"));
            }
        }
        Ok(())
    }

    /// Constraints a bootstrappable, secure instance must meet.
    pub fn check_bootstrappable(&self) -> Result<(), String> {
        self.validate()?;
        if self.max_level <= self.l_boot {
            return Err(format!(
                "L = {} must exceed L_boot = {}",
                self.max_level, self.l_boot
            ));
        }
        if self.log_pq() > 500 && self.log_n < 14 {
            return Err(format!("log PQ = {} needs N ≥ 2^14", self.log_pq()));
        }
        Ok(())
    }
}

/// INS-1, INS-2 and INS-3.
pub fn builtin_instances() -> Vec<CkksInstance> {
    [("INS-1", 27, 1, 133.4), ("INS-2", 39, 2, 128.7), ("INS-3", 44, 3, 130.8)]
        .into_iter()
        .map(|(name, l, dnum, lambda)| CkksInstance {
            lambda: Some(lambda),
            ..CkksInstance::flagship(name, 17, l, dnum)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_rows() {
        let ins = builtin_instances();
        let rows: Vec<_> = ins
            .iter()
            .map(|i| (i.n(), i.max_level, i.dnum, i.log_pq(), i.lambda.unwrap()))
            .collect();
        assert_eq!(
            rows,
            vec![
                (1 << 17, 27, 1, 3090, 133.4),
                (1 << 17, 39, 2, 3210, 128.7),
                (1 << 17, 44, 3, 3160, 130.8)
            ]
        );
        assert_eq!(ins[0].k(), 28);
        assert_eq!(ins[1].k(), 20);
        assert_eq!(ins[2].k(), 15);
        assert!(ins.iter().all(|i| i.lambda.unwrap() >= 128.0));
        assert!(ins.iter().all(|i| i.check_bootstrappable().is_ok()));
    }

    #[test]
    fn lookup_and_toml() {
        assert_eq!(CkksInstance::by_name("ins2").unwrap().max_level, 39);
        assert!(CkksInstance::by_name("ins9").is_none());
        let ins = &builtin_instances()[2];
        assert_eq!(&CkksInstance::from_toml(&ins.to_toml()).unwrap(), ins);
        assert!(CkksInstance::from_toml("log_n = 3").is_err());
    }

    #[test]
    fn constraint_checks() {
        let mut ins = CkksInstance::flagship("x", 17, 19, 1);
        assert!(ins.check_bootstrappable().is_err());
        ins.max_level = 20;
        assert!(ins.validate().is_err() || ins.check_bootstrappable().is_ok());
        let small = CkksInstance::flagship("y", 13, 23, 1);
        assert!(small.check_bootstrappable().is_err());
        assert!(CkksInstance::flagship("z", 17, 27, 5).validate().is_err());
    }
}
