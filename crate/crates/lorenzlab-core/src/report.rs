use serde::{Deserialize, Serialize};

/// One named inequality with its signed margin. `margin > 0` iff the check
/// passes with room to spare; callers report the raw value alongside.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Check {
    pub id: String,
    pub pass: bool,
    /// Signed distance to the constraint boundary in the inequality's units.
    pub margin: f64,
}

impl Check {
    /// A check passing iff `margin > 0`.
    pub fn from_margin(id: &str, margin: f64) -> Self {
        Check { id: id.to_string(), pass: margin > 0.0, margin }
    }
}

/// Result of a parameter validation pass: every inequality with its margin.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn push_margin(&mut self, id: &str, margin: f64) {
        self.checks.push(Check::from_margin(id, margin));
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn min_margin(&self) -> f64 {
        self.checks.iter().map(|c| c.margin).fold(f64::INFINITY, f64::min)
    }

    pub fn failed_ids(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.pass).map(|c| c.id.as_str()).collect()
    }
}
