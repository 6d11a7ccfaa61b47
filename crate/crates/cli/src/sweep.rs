use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

const MAX_POINTS: usize = 100_000;

/// Inclusive arithmetic sweep written as `start:step:stop` (or one value).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sweep {
    pub start: f64,
    pub step: f64,
    pub stop: f64,
}

impl Sweep {
    pub fn single(v: f64) -> Self {
        Self {
            start: v,
            step: 1.0,
            stop: v,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..n).map(|i| self.start + i as f64 * self.step).collect()
    }
}

impl fmt::Display for Sweep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.start == self.stop {
            write!(f, "{}", self.start)
        } else {
            write!(f, "{}:{}:{}", self.start, self.step, self.stop)
        }
    }
}

impl FromStr for Sweep {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let num = |p: &str| -> Result<f64, String> {
            let v: f64 = p.parse().map_err(|_| format!("{p:?} is not a number"))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(format!("{p:?} is not finite"))
            }
        };
        let sweep = match parts.as_slice() {
            [v] => Sweep::single(num(v)?),
            [a, b, c] => Sweep {
                start: num(a)?,
                step: num(b)?,
                stop: num(c)?,
            },
            _ => return Err(format!("expected start:step:stop, got {s:?}")),
        };
        if sweep.start != sweep.stop {
            if !(sweep.step > 0.0) {
                return Err(format!("step must be > 0 in {s:?}"));
            }
            if sweep.stop < sweep.start {
                return Err(format!("stop is below start in {s:?}"));
            }
            if (sweep.stop - sweep.start) / sweep.step > MAX_POINTS as f64 {
                return Err(format!("{s:?} has more than {MAX_POINTS} points"));
            }
        }
        Ok(sweep)
    }
}

impl Serialize for Sweep {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Sweep {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Sweep::single(v)),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_ranges() {
        let s: Sweep = "-30:2:10".parse().unwrap();
        let v = s.values();
        assert_eq!(v.len(), 21);
        assert_eq!(v[0], -30.0);
        assert_eq!(*v.last().unwrap(), 10.0);
        assert_eq!("5".parse::<Sweep>().unwrap().values(), vec![5.0]);
        assert_eq!("0:0.1:0.3".parse::<Sweep>().unwrap().values().len(), 4);
    }

    #[test]
    fn rejects_bad_ranges() {
        for bad in ["1:0:2", "3:1:1", "a:1:2", "1:2", "0:1e-9:1e9", "nan"] {
            assert!(bad.parse::<Sweep>().is_err(), "{bad}");
        }
    }

    #[test]
    fn round_trips_through_json() {
        let s: Sweep = "-30:2:10".parse().unwrap();
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, "\"-30:2:10\"");
        assert_eq!(serde_json::from_str::<Sweep>(&json).unwrap(), s);
        assert_eq!(serde_json::from_str::<Sweep>("7").unwrap(), Sweep::single(7.0));
    }
}
