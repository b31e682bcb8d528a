use serde::{Deserialize, Serialize};

use crate::error::{DmsError, Result};

/// Compact bias interval `[a, b]`, V. A single point (`a == b`) is allowed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct DomainBounds {
    a: f64,
    b: f64,
}

impl DomainBounds {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) {
            return Err(DmsError::NonFinite("domain bounds"));
        }
        if a > b {
            return Err(DmsError::InvalidParameter {
                name: "domain",
                reason: format!("[{a}, {b}] is empty"),
            });
        }
        Ok(DomainBounds { a, b })
    }

    pub fn point(v: f64) -> Result<Self> {
        Self::new(v, v)
    }

    pub fn lo(&self) -> f64 {
        self.a
    }

    pub fn hi(&self) -> f64 {
        self.b
    }

    pub fn width(&self) -> f64 {
        self.b - self.a
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.a && v <= self.b
    }

    pub fn contains_interval(&self, other: &DomainBounds) -> bool {
        self.contains(other.a) && self.contains(other.b)
    }

    pub fn check(&self, v: f64) -> Result<f64> {
        if self.contains(v) {
            Ok(v)
        } else {
            Err(DmsError::OutOfRange { v, lo: self.a, hi: self.b })
        }
    }

    /// `n` equally spaced points including both ends; a single point when `n == 1`.
    pub fn grid(&self, n: usize) -> Vec<f64> {
        match n {
            0 => Vec::new(),
            1 => vec![self.a],
            _ => (0..n)
                .map(|i| {
                    if i == n - 1 {
                        self.b
                    } else {
                        self.a + self.width() * i as f64 / (n - 1) as f64
                    }
                })
                .collect(),
        }
    }
}

impl TryFrom<[f64; 2]> for DomainBounds {
    type Error = DmsError;
    fn try_from(v: [f64; 2]) -> Result<Self> {
        DomainBounds::new(v[0], v[1])
    }
}

impl From<DomainBounds> for [f64; 2] {
    fn from(d: DomainBounds) -> Self {
        [d.a, d.b]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_and_grid() {
        let d = DomainBounds::new(-2.0, 2.0).unwrap();
        let g = d.grid(5);
        assert_eq!(g, vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
        assert!(d.contains(2.0) && !d.contains(2.0 + 1e-12));
        assert!(DomainBounds::new(1.0, 0.0).is_err());
        assert!(DomainBounds::new(f64::NAN, 0.0).is_err());
        assert_eq!(DomainBounds::point(0.3).unwrap().grid(3), vec![0.3, 0.3, 0.3]);
        let j: DomainBounds = serde_json::from_str("[0.5, 1.5]").unwrap();
        assert_eq!(j.lo(), 0.5);
        assert!(serde_json::from_str::<DomainBounds>("[2, 1]").is_err());
    }
}
