// Copyright 2026 The Offload Authors
// SPDX-License-Identifier: Apache-2.0

use std::fmt;
use std::str::FromStr;

use crate::minivm::VTime;

/// Link parameters in virtual-time units (1 unit = 1 ms).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NetworkModel {
    pub name: String,
    /// One-way message latency.
    pub latency: u64,
    /// Bytes per time unit; always positive.
    pub bandwidth: u64,
    pub suspend_resume: u64,
}

pub const DEFAULT_SUSPEND_RESUME: u64 = 10;

impl NetworkModel {
    pub fn new(name: impl Into<String>, latency: u64, bandwidth: u64, suspend_resume: u64) -> NetworkModel {
        assert!(bandwidth > 0, "bandwidth must be positive");
        NetworkModel { name: name.into(), latency, bandwidth, suspend_resume }
    }

    /// 66 ms latency, 7.29 Mbit/s.
    pub fn wifi() -> NetworkModel {
        NetworkModel::new("wifi", 66, 911, DEFAULT_SUSPEND_RESUME)
    }

    /// 415 ms latency, 0.91 Mbit/s.
    pub fn three_g() -> NetworkModel {
        NetworkModel::new("3g", 415, 114, DEFAULT_SUSPEND_RESUME)
    }

    pub fn by_name(name: &str) -> Option<NetworkModel> {
        match name {
            "wifi" => Some(NetworkModel::wifi()),
            "3g" => Some(NetworkModel::three_g()),
            _ => None,
        }
    }

    /// Time to send one message of `bytes`.
    pub fn transfer_time(&self, bytes: u64) -> VTime {
        VTime::from_units(self.latency + bytes.div_ceil(self.bandwidth))
    }

    /// Fixed part of a migration: suspend/resume plus two one-way latencies.
    pub fn fixed_cost(&self) -> VTime {
        VTime::from_units(self.suspend_resume + 2 * self.latency)
    }

    pub fn per_byte_cost(&self) -> f64 {
        1.0 / self.bandwidth as f64
    }

    /// Cost of one round trip with the given capture sizes.
    pub fn migration_cost(&self, bytes_out: u64, bytes_in: u64) -> VTime {
        VTime::from_units(self.suspend_resume) + self.transfer_time(bytes_out) + self.transfer_time(bytes_in)
    }

    /// `key value` lines.
    pub fn to_text(&self) -> String {
        format!(
            "name {}\nlatency {}\nbandwidth {}\nsuspend_resume {}\n",
            self.name, self.latency, self.bandwidth, self.suspend_resume
        )
    }
}

impl fmt::Display for NetworkModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (latency {}, bandwidth {} B/unit)", self.name, self.latency, self.bandwidth)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("network model: {0}")]
pub struct ParseNetworkError(pub String);

impl FromStr for NetworkModel {
    type Err = ParseNetworkError;

    /// Accepts a preset name or the `key value` text form.
    fn from_str(s: &str) -> Result<NetworkModel, ParseNetworkError> {
        if let Some(n) = NetworkModel::by_name(s.trim()) {
            return Ok(n);
        }
        let (mut name, mut latency, mut bandwidth, mut sr) = (None, None, None, DEFAULT_SUSPEND_RESUME);
        for line in s.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let (k, v) = line.split_once(' ').ok_or_else(|| ParseNetworkError(format!("bad line `{line}`")))?;
            let num = || v.trim().parse::<u64>().map_err(|_| ParseNetworkError(format!("bad number `{v}`")));
            match k {
                "name" => name = Some(v.trim().to_string()),
                "latency" => latency = Some(num()?),
                "bandwidth" => bandwidth = Some(num()?),
                "suspend_resume" => sr = num()?,
                _ => return Err(ParseNetworkError(format!("unknown key `{k}`"))),
            }
        }
        let latency = latency.ok_or_else(|| ParseNetworkError("missing latency".into()))?;
        let bandwidth = bandwidth.ok_or_else(|| ParseNetworkError("missing bandwidth".into()))?;
        if bandwidth == 0 {
            return Err(ParseNetworkError("bandwidth must be positive".into()));
        }
        Ok(NetworkModel::new(name.unwrap_or_else(|| "custom".into()), latency, bandwidth, sr))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_and_text_round_trip() {
        for n in [NetworkModel::wifi(), NetworkModel::three_g()] {
            assert_eq!(n.to_text().parse::<NetworkModel>().unwrap(), n);
            assert_eq!(n.name.parse::<NetworkModel>().unwrap(), n);
        }
        assert!("latency 1\nbandwidth 0\n".parse::<NetworkModel>().is_err());
        assert!("5g".parse::<NetworkModel>().is_err());
    }

    #[test]
    fn migration_cost_rounds_each_direction_up() {
        let n = NetworkModel::new("t", 20, 100, 10);
        assert_eq!(n.fixed_cost(), VTime::from_units(50));
        assert_eq!(n.migration_cost(1000, 500), VTime::from_units(65));
        assert_eq!(n.migration_cost(1001, 1), VTime::from_units(50 + 11 + 1));
        assert_eq!(n.transfer_time(0), VTime::from_units(20));
    }
}
