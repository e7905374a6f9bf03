// Copyright 2026 The Offload Authors
// SPDX-License-Identifier: Apache-2.0

//! Deterministic virtual time.
//!
//! Every instruction consumes an integer number of work units. A node turns
//! work into time through its speed factor, so a clone that is 20x faster
//! spends `w / 20` time units on `w` units of work. Time is kept as an exact
//! rational so that sums of device and clone costs compare without rounding.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Sub};
use std::str::FromStr;

use num_rational::Ratio;
use num_integer::Integer;
use thiserror::Error;

/// An exact, non-negative amount of virtual time.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct VTime(Ratio<i128>);

impl VTime {
    pub const ZERO: VTime = VTime(Ratio::new_raw(0, 1));

    pub fn from_units(units: u64) -> VTime {
        VTime(Ratio::from_integer(units as i128))
    }

    pub fn from_ratio(numer: i128, denom: i128) -> VTime {
        VTime(Ratio::new(numer, denom))
    }

    pub fn numer(&self) -> i128 {
        *self.0.numer()
    }

    pub fn denom(&self) -> i128 {
        *self.0.denom()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn as_f64(&self) -> f64 {
        self.numer() as f64 / self.denom() as f64
    }

    /// `a / b` as a plain float, used for speedup ratios in reports.
    pub fn ratio_to(&self, other: VTime) -> f64 {
        if other.numer() == 0 {
            return f64::INFINITY;
        }
        let r = self.0 / other.0;
        *r.numer() as f64 / *r.denom() as f64
    }

    pub fn min(self, other: VTime) -> VTime {
        if self <= other {
            self
        } else {
            other
        }
    }
}

impl Add for VTime {
    type Output = VTime;
    fn add(self, rhs: VTime) -> VTime {
        VTime(self.0 + rhs.0)
    }
}

impl AddAssign for VTime {
    fn add_assign(&mut self, rhs: VTime) {
        self.0 += rhs.0;
    }
}

impl Sub for VTime {
    type Output = VTime;
    fn sub(self, rhs: VTime) -> VTime {
        VTime(self.0 - rhs.0)
    }
}

impl Mul<u64> for VTime {
    type Output = VTime;
    fn mul(self, rhs: u64) -> VTime {
        VTime(self.0 * Ratio::from_integer(rhs as i128))
    }
}

impl Sum for VTime {
    fn sum<I: Iterator<Item = VTime>>(iter: I) -> VTime {
        iter.fold(VTime::ZERO, |a, b| a + b)
    }
}

impl<'a> Sum<&'a VTime> for VTime {
    fn sum<I: Iterator<Item = &'a VTime>>(iter: I) -> VTime {
        iter.fold(VTime::ZERO, |a, b| a + *b)
    }
}

/// Exact textual form: `n` for integers, `n/d` otherwise.
impl fmt::Display for VTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

impl fmt::Debug for VTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "VTime({self})")
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid virtual time {0:?}")]
pub struct ParseTimeError(pub String);

impl FromStr for VTime {
    type Err = ParseTimeError;

    fn from_str(s: &str) -> Result<VTime, ParseTimeError> {
        let err = || ParseTimeError(s.to_string());
        match s.split_once('/') {
            Some((n, d)) => {
                let n: i128 = n.trim().parse().map_err(|_| err())?;
                let d: i128 = d.trim().parse().map_err(|_| err())?;
                if d <= 0 || n < 0 {
                    return Err(err());
                }
                Ok(VTime(Ratio::new(n, d)))
            }
            None => {
                let n: i128 = s.trim().parse().map_err(|_| err())?;
                if n < 0 {
                    return Err(err());
                }
                Ok(VTime(Ratio::from_integer(n)))
            }
        }
    }
}

/// Work units per time unit for a node. Kept as an exact rational.
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct Speed(Ratio<i128>);

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid speed factor {0:?}: expected a positive decimal")]
pub struct ParseSpeedError(pub String);

impl Speed {
    pub const DEVICE: Speed = Speed(Ratio::new_raw(1, 1));

    pub fn from_integer(n: u32) -> Speed {
        assert!(n > 0, "speed factor must be positive");
        Speed(Ratio::from_integer(n as i128))
    }

    /// Rounds to a multiple of 1/1000. Used where the factor arrives as a float.
    pub fn from_f64(value: f64) -> Result<Speed, ParseSpeedError> {
        if !value.is_finite() || value <= 0.0 {
            return Err(ParseSpeedError(value.to_string()));
        }
        let milli = (value * 1000.0).round() as i128;
        if milli <= 0 {
            return Err(ParseSpeedError(value.to_string()));
        }
        Ok(Speed(Ratio::new(milli, 1000)))
    }

    pub fn as_f64(&self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }

    /// Time taken by `work` units at this speed.
    pub fn time_for(&self, work: u64) -> VTime {
        VTime(Ratio::from_integer(work as i128) / self.0)
    }
}

impl Default for Speed {
    fn default() -> Speed {
        Speed::DEVICE
    }
}

impl FromStr for Speed {
    type Err = ParseSpeedError;

    fn from_str(s: &str) -> Result<Speed, ParseSpeedError> {
        let err = || ParseSpeedError(s.to_string());
        let t = s.trim();
        let (int_part, frac_part) = t.split_once('.').unwrap_or((t, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(err());
        }
        if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit()) {
            return Err(err());
        }
        let digits = format!("{int_part}{frac_part}");
        let numer: i128 = digits.parse().map_err(|_| err())?;
        let denom = 10i128.checked_pow(frac_part.len() as u32).ok_or_else(err)?;
        if numer == 0 {
            return Err(err());
        }
        Ok(Speed(Ratio::new(numer, denom)))
    }
}

impl fmt::Display for Speed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (n, d) = (*self.0.numer(), *self.0.denom());
        if d == 1 {
            return write!(f, "{n}.0");
        }
        // denominators built from decimals are 2^a 5^b; print exactly when possible
        let mut scale = 1i128;
        let mut places = 0;
        while scale % d != 0 && places < 12 {
            scale *= 10;
            places += 1;
        }
        if scale % d == 0 {
            let scaled = n * (scale / d);
            let (int, frac) = scaled.div_rem(&scale);
            write!(f, "{int}.{frac:0width$}", width = places)
        } else {
            write!(f, "{}", self.as_f64())
        }
    }
}

impl fmt::Debug for Speed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Speed({self})")
    }
}

/// Per-node clock. Only ever advances.
#[derive(Debug, Clone)]
pub struct VmClock {
    elapsed: VTime,
    work: u64,
    speed: Speed,
}

impl VmClock {
    pub fn new(speed: Speed) -> VmClock {
        VmClock { elapsed: VTime::ZERO, work: 0, speed }
    }

    pub fn device() -> VmClock {
        VmClock::new(Speed::DEVICE)
    }

    /// Default clone clock (20x the device).
    pub fn clone_node() -> VmClock {
        VmClock::new(Speed::from_integer(20))
    }

    pub fn speed(&self) -> Speed {
        self.speed
    }

    pub fn elapsed(&self) -> VTime {
        self.elapsed
    }

    /// Work units executed on this clock so far.
    pub fn work(&self) -> u64 {
        self.work
    }

    /// Execute `units` of work at this node's speed.
    pub fn advance(&mut self, units: u64) {
        if units == 0 {
            return;
        }
        self.work += units;
        self.elapsed += self.speed.time_for(units);
    }

    /// Charge time that does not come from local execution (transfers, remote work).
    pub fn charge(&mut self, time: VTime) {
        assert!(time >= VTime::ZERO, "clock charges must be non-negative");
        self.elapsed += time;
    }

    pub fn reset(&mut self) {
        self.elapsed = VTime::ZERO;
        self.work = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn speed_parses_decimals_exactly() {
        let s: Speed = "20.0".parse().unwrap();
        assert_eq!(s, Speed::from_integer(20));
        let s: Speed = "18.5".parse().unwrap();
        assert_eq!(s.time_for(37), VTime::from_units(2));
        assert_eq!(s.to_string(), "18.5");
        assert!("0".parse::<Speed>().is_err());
        assert!("-1".parse::<Speed>().is_err());
        assert!("abc".parse::<Speed>().is_err());
    }

    #[test]
    fn clock_is_linear_in_speed() {
        let mut dev = VmClock::device();
        let mut cln = VmClock::clone_node();
        for k in [1, 7, 100, 3] {
            dev.advance(k);
            cln.advance(k);
        }
        assert_eq!(dev.elapsed(), VTime::from_units(111));
        assert_eq!(cln.elapsed() * 20, dev.elapsed());
        assert_eq!(dev.elapsed().ratio_to(cln.elapsed()), 20.0);
    }

    #[test]
    fn vtime_text_round_trip() {
        for t in [VTime::ZERO, VTime::from_units(42), VTime::from_ratio(7, 20)] {
            assert_eq!(t.to_string().parse::<VTime>().unwrap(), t);
        }
        assert_eq!(VTime::from_ratio(7, 20).to_string(), "7/20");
        assert!("-3".parse::<VTime>().is_err());
    }
}
