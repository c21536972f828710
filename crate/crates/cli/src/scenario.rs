//! Scenario files. Every object rejects unknown keys.

use std::collections::BTreeMap;

use serde::Deserialize;

pub const SCHEMA_VERSION: u32 = 1;

/// Polynomial as `[[coefficient, [power per coordinate]], ...]`.
pub type PolySpec = Vec<(f64, Vec<u8>)>;

/// Complex number as `[re, im]`.
pub type ComplexSpec = [f64; 2];

#[derive(Debug, Deserialize)]
#[cfg_attr(test, derive(schemars::JsonSchema))]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub name: String,
    #[serde(default)]
    pub description: Option<String>,
    /// Diagonal metric entries, each +1 or -1.
    pub signature: Vec<i8>,
    pub geometry: GeometrySpec,
    #[serde(default)]
    pub gauge: GaugeSpec,
    pub points: PointsSpec,
    #[serde(default)]
    pub fields: BTreeMap<String, FieldSpec>,
    #[serde(default)]
    pub checks: Vec<CheckSpec>,
    #[serde(default)]
    pub sw: Vec<SwSpec>,
}

/// Backend description accepted by `certify`.
#[derive(Debug, Deserialize)]
#[cfg_attr(test, derive(schemars::JsonSchema))]
#[serde(deny_unknown_fields)]
pub struct BackendFile {
    pub schema_version: u32,
    pub signature: Vec<i8>,
    pub geometry: GeometrySpec,
    pub points: PointsSpec,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq)]
#[cfg_attr(test, derive(schemars::JsonSchema))]
#[serde(rename_all = "kebab-case")]
pub enum GeometrySpec {
    Flat,
    ConstantCurvature(f64),
}

#[derive(Debug, Deserialize, Default)]
#[cfg_attr(test, derive(schemars::JsonSchema))]
#[serde(untagged)]
pub enum GaugeSpec {
    #[default]
    #[serde(skip)]
    Absent,
    Keyword(GaugeKeyword),
    Potential(PotentialSpec),
}

#[derive(Debug, Deserialize)]
#[cfg_attr(test, derive(schemars::JsonSchema))]
#[serde(rename_all = "lowercase")]
pub enum GaugeKeyword {
    None,
}

#[derive(Debug, Deserialize)]
#[cfg_attr(test, derive(schemars::JsonSchema))]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum PotentialSpec {
    /// `A = dχ`.
    #[serde(rename = "exact")]
    Exact {
        chi: PolySpec,
        #[serde(default)]
        imaginary: bool,
    },
    #[serde(rename = "polynomial-1form")]
    Polynomial1Form {
        components: Vec<ComponentSpec>,
        #[serde(default)]
        imaginary: bool,
    },
}

#[derive(Debug, Deserialize)]
#[cfg_attr(test, derive(schemars::JsonSchema))]
#[serde(deny_unknown_fields)]
pub struct PointsSpec {
    pub count: usize,
    pub seed: u64,
}

/// One blade of a form; indices are 1-based, so `[1, 2]` is `e^1∧e^2`.
#[derive(Debug, Deserialize)]
#[cfg_attr(test, derive(schemars::JsonSchema))]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    pub blade: Vec<usize>,
    pub poly: PolySpec,
}

/// Field constructors. `conformal_power` multiplies by `h^r` of the chart,
/// `gauged` by `e^{-χ}` of an exact gauge, and `charge` overrides the
/// resulting charge.
#[derive(Debug, Deserialize)]
#[cfg_attr(test, derive(schemars::JsonSchema))]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum FieldSpec {
    #[serde(rename = "polynomial-form")]
    PolynomialForm {
        components: Vec<ComponentSpec>,
        #[serde(default)]
        conformal_power: Option<f64>,
        #[serde(default)]
        gauged: bool,
        #[serde(default)]
        charge: Option<i32>,
    },
    /// `φ0 + x·φ1`.
    #[serde(rename = "coordinate-spinor")]
    CoordinateSpinor {
        phi0: Vec<ComplexSpec>,
        phi1: Vec<ComplexSpec>,
        #[serde(default)]
        conformal_power: Option<f64>,
        #[serde(default)]
        gauged: bool,
        #[serde(default)]
        charge: Option<i32>,
    },
    #[serde(rename = "constant-spinor")]
    ConstantSpinor {
        phi: Vec<ComplexSpec>,
        #[serde(default)]
        conformal_power: Option<f64>,
        #[serde(default)]
        gauged: bool,
        #[serde(default)]
        charge: Option<i32>,
    },
    /// One real polynomial per spinor component.
    #[serde(rename = "polynomial-spinor")]
    PolynomialSpinor {
        components: Vec<PolySpec>,
        #[serde(default)]
        conformal_power: Option<f64>,
        #[serde(default)]
        gauged: bool,
        #[serde(default)]
        charge: Option<i32>,
    },
}

/// Either an equation applied to `field`, or a pipeline applied to `input`
/// followed by an equation (by default the pipeline's output equation).
#[derive(Debug, Deserialize)]
#[cfg_attr(test, derive(schemars::JsonSchema))]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    pub name: String,
    #[serde(default)]
    pub equation: Option<String>,
    #[serde(default)]
    pub field: Option<String>,
    #[serde(default)]
    pub input: Option<String>,
    #[serde(default)]
    pub pipeline: Option<Vec<StageSpec>>,
    pub tolerance: f64,
    #[serde(default)]
    pub mass: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
    /// CKY form for the obstruction equation.
    #[serde(default)]
    pub omega: Option<String>,
}

#[derive(Debug, Deserialize)]
#[cfg_attr(test, derive(schemars::JsonSchema))]
#[serde(deny_unknown_fields)]
pub struct StageSpec {
    pub op: String,
    pub ingredient: String,
    #[serde(default)]
    pub gamma: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[cfg_attr(test, derive(schemars::JsonSchema))]
#[serde(deny_unknown_fields)]
pub struct SwSpec {
    pub name: String,
    pub input: String,
    pub candidate: Vec<StageSpec>,
    pub tolerance: f64,
    /// Overrides the scenario point count.
    #[serde(default)]
    pub points: Option<usize>,
}
