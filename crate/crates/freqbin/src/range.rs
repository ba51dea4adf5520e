//! Parsing of the list and range syntax accepted on the command line.

use std::str::FromStr;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

/// Inclusive `start:stop:step` grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl StepRange {
    pub fn values(&self) -> Vec<f64> {
        freqbin_core::bell::linspace_step(self.start, self.stop, self.step)
    }

    pub fn validate(&self, name: &str) -> anyhow::Result<()> {
        if !(self.step > 0.0 && self.start.is_finite() && self.stop >= self.start) {
            bail!("{name}: need finite start <= stop and step > 0");
        }
        Ok(())
    }
}

impl FromStr for StepRange {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let [start, stop, step] = parts.as_slice() else {
            bail!("expected start:stop:step, got {s:?}");
        };
        let num = |x: &str| {
            x.trim()
                .parse::<f64>()
                .with_context(|| format!("bad number {x:?} in {s:?}"))
        };
        let range = Self {
            start: num(start)?,
            stop: num(stop)?,
            step: num(step)?,
        };
        range.validate("range")?;
        Ok(range)
    }
}

/// Bin offsets written as `0..5` (inclusive), `-2..2` or `0,1,3`.
pub fn parse_d_list(s: &str) -> anyhow::Result<Vec<i32>> {
    let int = |x: &str| {
        x.trim()
            .parse::<i32>()
            .with_context(|| format!("bad bin offset {x:?}"))
    };
    if let Some((lo, hi)) = s.split_once("..") {
        let (lo, hi) = (int(lo)?, int(hi.trim_start_matches('='))?);
        if hi < lo {
            bail!("empty bin range {s:?}");
        }
        return Ok((lo..=hi).collect());
    }
    s.split(',').map(int).collect()
}

/// Command-line form of a bin-offset list.
#[derive(Debug, Clone, PartialEq)]
pub struct BinList(pub Vec<i32>);

impl FromStr for BinList {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        parse_d_list(s).map(Self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn d_lists() {
        assert_eq!(parse_d_list("0..5").unwrap(), vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(parse_d_list("-1..=1").unwrap(), vec![-1, 0, 1]);
        assert_eq!(parse_d_list("0, 3").unwrap(), vec![0, 3]);
        assert!(parse_d_list("5..0").is_err());
        assert!(parse_d_list("x").is_err());
    }

    #[test]
    fn step_ranges() {
        let r: StepRange = "0.3:2.0:0.05".parse().unwrap();
        let v = r.values();
        assert_eq!(v.len(), 35);
        assert!((v[34] - 2.0).abs() < 1e-12);
        assert!("1:0:0.1".parse::<StepRange>().is_err());
        assert!("0:1".parse::<StepRange>().is_err());
        assert!("0:1:0".parse::<StepRange>().is_err());
    }
}
