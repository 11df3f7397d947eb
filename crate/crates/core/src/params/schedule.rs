use serde::{Deserialize, Serialize};

use super::{amortized_mult_per_slot, CkksInstance, ParamsError};

/// Op census of one bootstrapping level segment.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootSegment {
    /// Levels consumed by this segment.
    pub levels: usize,
    #[serde(default)]
    pub hmult: u32,
    #[serde(default)]
    pub hrot: u32,
    #[serde(default)]
    pub pmult: u32,
    #[serde(default)]
    pub hadd: u32,
    #[serde(default)]
    pub cmult: u32,
    #[serde(default)]
    pub cadd: u32,
    #[serde(default)]
    pub rescale: u32,
}

impl BootSegment {
    pub fn key_switch_ops(&self) -> u32 {
        self.hmult + self.hrot
    }

    pub fn other_ops(&self) -> u32 {
        self.pmult + self.hadd + self.cmult + self.cadd + self.rescale
    }
}

/// Op census of one bootstrapping invocation, ordered from the first level consumed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootSchedule {
    pub l_boot: usize,
    #[serde(rename = "segment", default)]
    pub segments: Vec<BootSegment>,
}

const DEFAULT_SCHEDULE: &str = include_str!("../../data/boot_schedule.toml");

impl Default for BootSchedule {
    fn default() -> Self {
        Self::from_toml(DEFAULT_SCHEDULE).expect("shipped schedule is valid")
    }
}

impl BootSchedule {
    /// One segment per level with no ops at all.
    pub fn empty(l_boot: usize) -> Self {
        Self {
            l_boot,
            segments: (0..l_boot)
                .map(|_| BootSegment {
                    levels: 1,
                    ..Default::default()
                })
                .collect(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ParamsError> {
        let s: Self = toml::from_str(text).map_err(|e| ParamsError::Parse(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("schedule serializes")
    }

    pub fn validate(&self) -> Result<(), ParamsError> {
        if self.segments.is_empty() {
            return Err(ParamsError::EmptySchedule);
        }
        let consumed: usize = self.segments.iter().map(|s| s.levels).sum();
        if consumed != self.l_boot {
            return Err(ParamsError::InvalidSchedule(format!(
                "segments consume {consumed} levels, expected {}",
                self.l_boot
            )));
        }
        Ok(())
    }

    /// (level at which the segment runs, segment) for a ct starting at level L.
    pub fn segment_levels(&self, max_level: usize) -> impl Iterator<Item = (usize, &BootSegment)> {
        let mut consumed = 0;
        self.segments.iter().map(move |s| {
            let level = max_level - consumed;
            consumed += s.levels;
            (level, s)
        })
    }

    /// (level, HMult + HRot count) per segment.
    pub fn key_switch_ops(&self, max_level: usize) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.segment_levels(max_level)
            .map(|(l, s)| (l, s.key_switch_ops()))
    }

    pub fn total_key_switch_ops(&self) -> u32 {
        self.segments.iter().map(BootSegment::key_switch_ops).sum()
    }

    pub fn total_other_ops(&self) -> u32 {
        self.segments.iter().map(BootSegment::other_ops).sum()
    }

    /// Synthetic census: rotation-heavy linear transforms at both ends, a
    /// multiplication-heavy polynomial evaluation in between. Key-switching
    /// counts are `base · scale` rounded; every rotation pairs with a PMult
    /// and an HAdd, every multiplication with a CMult and an HAdd.
    pub fn synthetic(l_boot: usize, scale: f64) -> Self {
        let cts = (l_boot * 4).div_ceil(19);
        let stc = (l_boot * 3).div_ceil(19);
        let segments = (0..l_boot)
            .map(|d| {
                let (hrot, hmult) = if d < cts {
                    (24.0, 0.0)
                } else if d >= l_boot - stc {
                    (16.0, 0.0)
                } else {
                    (0.0, 3.0)
                };
                segment_with((hrot * scale).round() as u32, (hmult * scale).round() as u32)
            })
            .collect();
        Self { l_boot, segments }
    }

    /// Scales the synthetic census until `ins` hits `target` seconds per slot,
    /// then nudges individual segments by one op to close the rounding gap.
    pub fn calibrate(ins: &CkksInstance, l_boot: usize, target: f64, mem_bw: f64) -> Self {
        let eval = |s: &Self| amortized_mult_per_slot(ins, s, mem_bw).unwrap();
        let (mut lo, mut hi) = (0.0, 16.0);
        for _ in 0..60 {
            let mid = (lo + hi) / 2.0;
            if eval(&Self::synthetic(l_boot, mid)) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut best = Self::synthetic(l_boot, lo);
        let mut err = (eval(&best) - target).abs();
        loop {
            let mut improved = false;
            for i in 0..best.segments.len() {
                for delta in [-1i64, 1] {
                    let mut cand = best.clone();
                    let seg = &cand.segments[i];
                    let (hrot, hmult) = if seg.hrot > 0 {
                        ((seg.hrot as i64 + delta).max(1) as u32, seg.hmult)
                    } else {
                        (seg.hrot, (seg.hmult as i64 + delta).max(1) as u32)
                    };
                    cand.segments[i] = segment_with(hrot, hmult);
                    let e = (eval(&cand) - target).abs();
                    if e < err - 1e-15 {
                        best = cand;
                        err = e;
                        improved = true;
                    }
                }
            }
            if !improved {
                return best;
            }
        }
    }
}

fn segment_with(hrot: u32, hmult: u32) -> BootSegment {
    BootSegment {
        levels: 1,
        hmult,
        hrot,
        pmult: hrot,
        hadd: hrot + hmult,
        cmult: hmult,
        cadd: 0,
        rescale: 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_schedule_is_valid() {
        let s = BootSchedule::default();
        assert_eq!(s.l_boot, 19);
        assert_eq!(s.segments.iter().map(|s| s.levels).sum::<usize>(), 19);
        assert_eq!(BootSchedule::from_toml(&s.to_toml()).unwrap(), s);
    }

    #[test]
    fn rejects_wrong_consumption() {
        let mut s = BootSchedule::empty(19);
        s.segments.pop();
        assert!(s.validate().is_err());
        assert!(BootSchedule::from_toml("l_boot = 3\n[[segment]]\nlevels = 3\nfoo = 1\n").is_err());
    }

    #[test]
    fn segment_levels_descend_from_l() {
        let s = BootSchedule::synthetic(19, 1.0);
        let levels: Vec<usize> = s.segment_levels(27).map(|(l, _)| l).collect();
        assert_eq!(levels.first(), Some(&27));
        assert_eq!(levels.last(), Some(&9));
    }
}
