use serde::{Deserialize, Serialize};

use crate::airy::Traction;
use crate::assembly::{PlateMaterial, QuadSettings, Stiffener};
use crate::error::{Error, Result};
use crate::geometry::{rectangle, BoundaryCondition, Circle, DomainSpec, Hole, Outer, Point, SimplePolygon};
use crate::solvers::EigenMethod;
use crate::spline::MAX_DEGREE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Analysis {
    Bend,
    Buckle,
    Stress,
}

impl std::fmt::Display for Analysis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Analysis::Bend => "bend",
            Analysis::Buckle => "buckle",
            Analysis::Stress => "stress",
        })
    }
}

/// One benchmark run: geometry, material, loading and discretization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseConfig {
    pub case: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub analysis: Analysis,
    pub domain: DomainConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub material: Option<PlateMaterial>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stiffeners: Vec<Stiffener>,
    pub load: LoadConfig,
    pub discretization: DiscretizationConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub report: ReportConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub outer: OuterConfig,
    pub outer_bc: BoundaryCondition,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub holes: Vec<HoleConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OuterConfig {
    Circle {
        #[serde(default)]
        center: Point,
        radius: f64,
    },
    /// `a` along the rotated x axis, `b` across; rotation about `center`.
    Rectangle {
        #[serde(default)]
        center: Point,
        a: f64,
        b: f64,
        #[serde(default)]
        angle_deg: f64,
    },
    Polygon {
        vertices: Vec<Point>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoleConfig {
    #[serde(default)]
    pub center: Point,
    pub radius: f64,
    pub bc: BoundaryCondition,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum TractionConfig {
    Free,
    /// Traction `S n` of the constant stress `(sigma_xx, sigma_yy, sigma_xy)`.
    Stress([f64; 3]),
}

impl TractionConfig {
    pub fn traction(&self) -> Traction {
        match *self {
            TractionConfig::Free => Traction::Free,
            TractionConfig::Stress(s) => Traction::Stress(s),
        }
    }

    fn stress(&self) -> [f64; 3] {
        match *self {
            TractionConfig::Free => [0.0; 3],
            TractionConfig::Stress(s) => s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StressSolver {
    #[default]
    Airy,
    /// Closed form for a disk or concentric annulus under isotropic boundary stress.
    Lame,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LoadConfig {
    /// Constant lateral pressure.
    Lateral { p0: f64 },
    /// Prescribed constant in-plane stress, e.g. uniaxial compression.
    Uniform { stress: [f64; 3] },
    /// Boundary tractions; in-plane stress from the selected solver.
    Tractions {
        outer: TractionConfig,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        holes: Vec<TractionConfig>,
        #[serde(default)]
        solver: StressSolver,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscretizationConfig {
    pub p: usize,
    pub h: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quad_order: Option<usize>,
    #[serde(default = "default_depth")]
    pub quad_depth: usize,
    /// Degree for the stress function; `p + 2` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_airy: Option<usize>,
    /// Grid spacing for the stress function; `h` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_airy: Option<f64>,
}

fn default_depth() -> usize {
    QuadSettings::default().depth
}

impl DiscretizationConfig {
    pub fn quad(&self) -> QuadSettings {
        QuadSettings { order: self.quad_order, depth: self.quad_depth }
    }

    pub fn airy_degree(&self) -> usize {
        self.p_airy.unwrap_or(self.p + 2)
    }

    pub fn airy_h(&self) -> f64 {
        self.h_airy.unwrap_or(self.h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default)]
    pub eigen: EigenMethod,
}

/// Normalisation of the critical load.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KNorm {
    #[default]
    None,
    /// `lambda / D`.
    PerD,
    /// `lambda length^2 / D`.
    Annulus { length: f64 },
    /// `lambda length^2 / (pi^2 D)`.
    Plate { length: f64 },
}

impl KNorm {
    pub fn apply(&self, lambda: f64, d: f64) -> Option<f64> {
        match *self {
            KNorm::None => None,
            KNorm::PerD => Some(lambda / d),
            KNorm::Annulus { length } => Some(lambda * length * length / d),
            KNorm::Plate { length } => Some(lambda * length * length / (std::f64::consts::PI.powi(2) * d)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportConfig {
    #[serde(default)]
    pub k: KNorm,
    /// Size of the fixed Halton sample set used for norms.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Fine-grid reference spacing is the finest requested `h` divided by this.
    #[serde(default = "default_ref_factor")]
    pub reference_factor: f64,
}

fn default_samples() -> usize {
    2000
}

fn default_ref_factor() -> f64 {
    4.0
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig { k: KNorm::None, samples: default_samples(), reference_factor: default_ref_factor() }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<std::path::PathBuf>,
    /// Spacing of the field dump grid; no dump when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field_stride: Option<f64>,
}

impl CaseConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: CaseConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.case.trim().is_empty() {
            return bad("empty case id".into());
        }
        let d = &self.discretization;
        if !(2..=MAX_DEGREE).contains(&d.p) || !(2..=MAX_DEGREE).contains(&d.airy_degree()) {
            return bad(format!("degrees must lie in 2..={MAX_DEGREE}"));
        }
        if !(d.h > 0.0 && d.h.is_finite()) || !(d.airy_h() > 0.0 && d.airy_h().is_finite()) {
            return bad("grid spacing must be positive".into());
        }
        if d.quad_order == Some(0) || d.quad_depth > 12 {
            return bad("quadrature order must be positive and depth at most 12".into());
        }
        if self.report.samples == 0 || !(self.report.reference_factor >= 1.0) {
            return bad("report needs samples > 0 and reference_factor >= 1".into());
        }
        if let Some(s) = self.output.field_stride {
            if !(s > 0.0 && s.is_finite()) {
                return bad("field_stride must be positive".into());
            }
        }
        let domain = self.domain()?;
        if let LoadConfig::Tractions { holes, .. } = &self.load {
            if holes.len() != domain.holes.len() {
                return bad(format!("{} hole tractions for {} holes", holes.len(), domain.holes.len()));
            }
        }
        match (self.analysis, &self.load) {
            (Analysis::Bend, LoadConfig::Lateral { p0 }) if p0.is_finite() => {}
            (Analysis::Bend, _) => return bad("bending needs a finite lateral load".into()),
            (Analysis::Buckle | Analysis::Stress, LoadConfig::Lateral { .. }) => {
                return bad(format!("{} needs in-plane loading", self.analysis))
            }
            _ => {}
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        let stresses_ok = match &self.load {
            LoadConfig::Lateral { .. } => true,
            LoadConfig::Uniform { stress } => finite(stress),
            LoadConfig::Tractions { outer, holes, .. } => std::iter::once(outer).chain(holes).all(|t| finite(&t.stress())),
        };
        if !stresses_ok {
            return bad("load stresses must be finite".into());
        }
        if let KNorm::Annulus { length } | KNorm::Plate { length } = self.report.k {
            if !(length > 0.0 && length.is_finite()) {
                return bad("normalisation length must be positive".into());
            }
        }
        match self.material {
            Some(m) => m.validate()?,
            None if self.analysis != Analysis::Stress => return bad("material is required".into()),
            None => {}
        }
        for s in &self.stiffeners {
            s.validate(&domain)?;
        }
        if let LoadConfig::Tractions { solver: StressSolver::Lame, .. } = &self.load {
            self.lame_data()?;
        }
        Ok(())
    }

    pub fn domain(&self) -> Result<DomainSpec> {
        let dc = &self.domain;
        let outer = match &dc.outer {
            OuterConfig::Circle { center, radius } => Outer::Circle(Circle::new(*center, *radius)?),
            OuterConfig::Rectangle { center, a, b, angle_deg } => {
                if !(*a > 0.0 && *b > 0.0) || !angle_deg.is_finite() {
                    return Err(Error::Config("rectangle needs positive sides and a finite angle".into()));
                }
                Outer::Polygon(rectangle(*center, *a, *b, angle_deg.to_radians())?)
            }
            OuterConfig::Polygon { vertices } => Outer::Polygon(SimplePolygon::new(vertices.clone())?),
        };
        let holes = dc
            .holes
            .iter()
            .map(|h| Ok(Hole { circle: Circle::new(h.center, h.radius)?, bc: h.bc }))
            .collect::<Result<Vec<_>>>()?;
        DomainSpec::new(outer, dc.outer_bc, holes)
    }

    pub fn material(&self) -> Result<PlateMaterial> {
        self.material.ok_or_else(|| Error::Config("material is required".into()))
    }

    /// Boundary tractions, outer first.
    pub fn tractions(&self) -> Option<Vec<Traction>> {
        match &self.load {
            LoadConfig::Tractions { outer, holes, .. } => {
                Some(std::iter::once(outer).chain(holes).map(TractionConfig::traction).collect())
            }
            _ => None,
        }
    }

    /// `(center, inner radius, outer radius, inner stress, outer stress)` for the closed-form annulus.
    pub(crate) fn lame_data(&self) -> Result<(Point, f64, f64, f64, f64)> {
        let err = || Error::Config("closed-form stress needs a disk or concentric annulus with isotropic tractions".into());
        let LoadConfig::Tractions { outer, holes, .. } = &self.load else { return Err(err()) };
        let OuterConfig::Circle { center, radius } = self.domain.outer else { return Err(err()) };
        let iso = |t: &TractionConfig| {
            let s = t.stress();
            (s[0] == s[1] && s[2] == 0.0).then_some(s[0])
        };
        let so = iso(outer).ok_or_else(err)?;
        match (self.domain.holes.as_slice(), holes.as_slice()) {
            ([], []) => Ok((center, 0.0, radius, so, so)),
            ([h], [t]) if h.center == center => Ok((center, h.radius, radius, iso(t).ok_or_else(err)?, so)),
            _ => Err(err()),
        }
    }
}
