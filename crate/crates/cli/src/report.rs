use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub scenario: String,
    pub description: Option<String>,
    pub signature: Vec<i8>,
    pub geometry: String,
    pub gauge: String,
    pub seed: u64,
    pub points: usize,
    pub rejected_points: usize,
    pub tolerance_scale: f64,
    pub certification: CertificationReport,
    pub checks: Vec<CheckReport>,
    pub sw: Vec<SwCheckReport>,
    pub passed: bool,
}

#[derive(Debug, Serialize)]
pub struct CertificationReport {
    pub passed: bool,
    pub points: usize,
    pub rejected_points: usize,
    pub checks: Vec<CertificationLine>,
}

#[derive(Debug, Serialize)]
pub struct CertificationLine {
    pub name: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
}

#[derive(Clone, Copy, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    /// NaN never passes.
    pub fn of(value: f64, tolerance: f64) -> Self {
        if value <= tolerance {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

#[derive(Debug, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub equation: String,
    /// Operator names in application order; empty for plain equation checks.
    pub stages: Vec<String>,
    pub per_point: Vec<f64>,
    pub max_norm: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Serialize)]
pub struct SwCheckReport {
    pub name: String,
    pub orientation: String,
    pub stages: Vec<String>,
    pub current_per_point: Vec<f64>,
    pub current_max: f64,
    pub dirac_max: f64,
    pub curvature_max: f64,
    pub self_dual_max: f64,
    pub tolerance: f64,
    /// Largest 2-form current within tolerance.
    pub current_vanishes: bool,
    /// Both equations hold within tolerance.
    pub solution: bool,
}

/// Pretty JSON with struct field order; non-finite numbers become `null`.
pub fn to_json<T: Serialize>(report: &T) -> String {
    serde_json::to_string_pretty(report).expect("report serializes") + "\n"
}
