//! `start:step:stop` grids in dB.

use std::fmt;
use std::str::FromStr;

/// Inclusive arithmetic grid. A bare number is a one-point grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub step: f64,
    pub stop: f64,
}

/// Slack when deciding whether `stop` is on the grid.
const ENDPOINT_SLACK: f64 = 1e-9;

impl Grid {
    pub fn single(v: f64) -> Self {
        Self {
            start: v,
            step: 1.0,
            stop: v,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        let span = (self.stop - self.start) / self.step;
        let count = (span + ENDPOINT_SLACK).floor() as usize + 1;
        (0..count)
            .map(|i| tidy(self.start + i as f64 * self.step))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.values().len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Round away accumulated binary noise such as `0.30000000000000004`.
fn tidy(v: f64) -> f64 {
    (v * 1e9).round() / 1e9
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let num = |p: &str| {
            p.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("`{p}` is not a finite number"))
        };
        let grid = match parts.as_slice() {
            [v] => Grid::single(num(v)?),
            [a, st, b] => Grid {
                start: num(a)?,
                step: num(st)?,
                stop: num(b)?,
            },
            _ => return Err(format!("`{s}` is not of the form start:step:stop")),
        };
        if !(grid.step > 0.0) {
            return Err(format!("step must be positive in `{s}`"));
        }
        if grid.stop < grid.start {
            return Err(format!("stop is below start in `{s}`"));
        }
        Ok(grid)
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.step, self.stop)
    }
}
