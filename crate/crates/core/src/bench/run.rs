use std::path::{Path, PathBuf};

use serde::Serialize;

use super::analytic::{halton_points, AnnulusBending, LameStress};
use super::config::*;
use super::csvio::write_csv;
use crate::airy::{solve_airy, AiryOptions, AirySolution};
use crate::assembly::{
    assemble_bending, assemble_geometric, assemble_load, solve_bending, solve_buckling, ConstantStress, Discretization,
    StressField,
};
use crate::error::{Error, Result};
use crate::geometry::{BoundaryCondition, DomainSpec, Point};
use crate::solvers::{residual, EigenPair};

/// In-plane stress used by a buckling or stress run.
pub enum StressSource {
    Constant(ConstantStress),
    Lame(LameStress),
    Airy(Box<AirySolution>),
}

impl StressSource {
    pub fn field(&self) -> &dyn StressField {
        match self {
            StressSource::Constant(s) => s,
            StressSource::Lame(s) => s,
            StressSource::Airy(s) => s.as_ref(),
        }
    }

    pub fn airy(&self) -> Option<&AirySolution> {
        match self {
            StressSource::Airy(s) => Some(s),
            _ => None,
        }
    }
}

/// Headline numbers of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub case: String,
    pub analysis: Analysis,
    pub dofs: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_deflection: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(rename = "K", skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eigen_residual: Option<f64>,
    /// Largest `|sigma_xx|, |sigma_yy|, |sigma_xy|` over the sample set.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stress_max: Option<[f64; 3]>,
    /// Largest deviation from the closed-form stress, when one exists.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stress_error: Option<f64>,
    /// Residuals of the zero-mean constraints of the stress function.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gauge_residual: Option<f64>,
}

pub struct CaseRun {
    pub config: CaseConfig,
    pub summary: Summary,
    pub disc: Option<Discretization>,
    /// Deflection or mode coefficients.
    pub coeffs: Vec<f64>,
    pub stress: Option<StressSource>,
    /// `A` and `-B` with the eigenpair, for residual checks.
    pub eigen: Option<(crate::solvers::SparseSym, crate::solvers::SparseSym, EigenPair)>,
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    summary: &'a T,
    config: &'a CaseConfig,
}

fn report_text<T: Serialize>(summary: &T, config: &CaseConfig) -> String {
    toml::to_string(&Report { summary, config }).expect("report serializes")
}

/// Stress solution for the configured in-plane load.
pub fn solve_stress(config: &CaseConfig, domain: &DomainSpec) -> Result<StressSource> {
    match &config.load {
        LoadConfig::Uniform { stress } => Ok(StressSource::Constant(ConstantStress(*stress))),
        LoadConfig::Tractions { solver: StressSolver::Lame, .. } => {
            let (c, a, b, si, so) = config.lame_data()?;
            Ok(StressSource::Lame(LameStress::new(c, a, b, si, so)))
        }
        LoadConfig::Tractions { solver: StressSolver::Airy, .. } => {
            let d = &config.discretization;
            let opts = AiryOptions { h: d.airy_h(), degree: d.airy_degree(), quad: d.quad() };
            let tr = config.tractions().expect("traction load");
            Ok(StressSource::Airy(Box::new(solve_airy(domain, &tr, &opts)?)))
        }
        LoadConfig::Lateral { .. } => Err(Error::Config("lateral load has no in-plane stress".into())),
    }
}

/// Closed-form stress when the configuration has one.
pub fn exact_stress(config: &CaseConfig) -> Option<Box<dyn StressField>> {
    let LoadConfig::Tractions { outer, holes, .. } = &config.load else {
        return match &config.load {
            LoadConfig::Uniform { stress } => Some(Box::new(ConstantStress(*stress))),
            _ => None,
        };
    };
    if let Ok((c, a, b, si, so)) = config.lame_data() {
        return Some(Box::new(LameStress::new(c, a, b, si, so)));
    }
    match *outer {
        TractionConfig::Stress(s) if holes.iter().all(|h| *h == TractionConfig::Stress(s)) => {
            Some(Box::new(ConstantStress(s)))
        }
        _ => None,
    }
}

/// Closed-form deflection for the clamped/free annulus under pressure.
pub fn exact_deflection(config: &CaseConfig) -> Option<AnnulusBending> {
    let (LoadConfig::Lateral { p0 }, OuterConfig::Circle { center, radius }) = (&config.load, &config.domain.outer) else {
        return None;
    };
    let [h] = config.domain.holes.as_slice() else { return None };
    let m = config.material?;
    (config.stiffeners.is_empty()
        && config.domain.outer_bc == BoundaryCondition::Clamped
        && h.bc == BoundaryCondition::Free
        && h.center == *center)
        .then(|| AnnulusBending::new(*center, h.radius, *radius, *p0, m.d, m.nu).ok())
        .flatten()
}

fn max_abs_stress(field: &dyn StressField, pts: &[Point]) -> Result<[f64; 3]> {
    let mut m = [0.0f64; 3];
    for &x in pts {
        let s = field.stress(x)?;
        for k in 0..3 {
            m[k] = m[k].max(s[k].abs());
        }
    }
    Ok(m)
}

fn stress_deviation(a: &dyn StressField, b: &dyn StressField, pts: &[Point]) -> Result<f64> {
    let mut e = 0.0f64;
    for &x in pts {
        let (p, q) = (a.stress(x)?, b.stress(x)?);
        e = (0..3).fold(e, |e, k| e.max((p[k] - q[k]).abs()));
    }
    Ok(e)
}

/// Runs the pipeline selected by `config.analysis`.
pub fn run_case(config: &CaseConfig) -> Result<CaseRun> {
    config.validate()?;
    let domain = config.domain()?;
    let d = &config.discretization;
    let samples = halton_points(&domain, config.report.samples);
    let mut summary = Summary {
        case: config.case.clone(),
        analysis: config.analysis,
        dofs: 0,
        max_deflection: None,
        lambda: None,
        k: None,
        eigen_residual: None,
        stress_max: None,
        stress_error: None,
        gauge_residual: None,
    };
    let mut run =
        CaseRun { config: config.clone(), summary: summary.clone(), disc: None, coeffs: Vec::new(), stress: None, eigen: None };
    match config.analysis {
        Analysis::Bend => {
            let m = config.material()?;
            let LoadConfig::Lateral { p0 } = config.load else { unreachable!("validated") };
            let disc = Discretization::new(&domain, domain.plate_weight()?, d.h, d.p, d.quad())?;
            let a = assemble_bending(&disc, &m, &config.stiffeners)?;
            let b = assemble_load(&disc, &|_| p0)?;
            let w = solve_bending(&a, &b)?;
            let field = disc.field(&w);
            let mut big = 0.0f64;
            for &x in &samples {
                big = big.max(field.value(x)?.abs());
            }
            summary.dofs = disc.len();
            summary.max_deflection = Some(big);
            run.coeffs = w;
            run.disc = Some(disc);
        }
        Analysis::Buckle => {
            let m = config.material()?;
            let stress = solve_stress(config, &domain)?;
            let disc = Discretization::new(&domain, domain.plate_weight()?, d.h, d.p, d.quad())?;
            let a = assemble_bending(&disc, &m, &config.stiffeners)?;
            let b = assemble_geometric(&disc, stress.field(), &config.stiffeners)?;
            let res = solve_buckling(&a, &b, config.solver.eigen)?;
            let mb = b.scaled(-1.0);
            let pair = EigenPair { value: res.lambda, vector: res.mode.clone() };
            summary.dofs = disc.len();
            summary.lambda = Some(res.lambda);
            summary.k = config.report.k.apply(res.lambda, m.d);
            summary.eigen_residual = Some(residual(&a, &mb, &pair));
            run.eigen = Some((a, mb, pair));
            run.coeffs = res.mode;
            run.disc = Some(disc);
            run.stress = Some(stress);
        }
        Analysis::Stress => {
            let stress = solve_stress(config, &domain)?;
            summary.dofs = stress.airy().map_or(0, |s| s.discretization().len());
            summary.stress_max = Some(max_abs_stress(stress.field(), &samples)?);
            if let Some(exact) = exact_stress(config) {
                summary.stress_error = Some(stress_deviation(stress.field(), exact.as_ref(), &samples)?);
            }
            summary.gauge_residual = stress.airy().map(|s| s.constraint_residuals().iter().fold(0.0, |m: f64, v| m.max(v.abs())));
            run.stress = Some(stress);
        }
    }
    run.summary = summary;
    Ok(run)
}

impl CaseRun {
    pub fn report(&self) -> String {
        report_text(&self.summary, &self.config)
    }

    /// Grid samples `(x, y, value)` of the deflection or mode; `(x, y, sxx, syy, sxy)` for stress runs.
    pub fn field_rows(&self, stride: f64) -> Result<(Vec<&'static str>, Vec<Vec<f64>>)> {
        let domain = self.config.domain()?;
        if let Some(disc) = &self.disc {
            let f = disc.field(&self.coeffs);
            let rows = emit_field(&domain, stride, |x| f.value(x))?;
            return Ok((vec!["x", "y", "value"], rows));
        }
        let stress = self.stress.as_ref().expect("stress run carries a stress field");
        let mut rows = Vec::new();
        for x in grid_points(&domain, stride) {
            let s = stress.field().stress(x)?;
            rows.push(vec![x[0], x[1], s[0], s[1], s[2]]);
        }
        Ok((vec!["x", "y", "sxx", "syy", "sxy"], rows))
    }

    /// Writes the summary report and, if configured, the field dump; returns the paths written.
    pub fn write_outputs(&self) -> Result<Vec<PathBuf>> {
        let Some(dir) = &self.config.output.dir else { return Ok(Vec::new()) };
        std::fs::create_dir_all(dir)?;
        let stem = format!("{}-{}", self.config.case, self.config.analysis);
        let mut out = vec![dir.join(format!("{stem}.summary.toml"))];
        std::fs::write(&out[0], self.report())?;
        if let Some(stride) = self.config.output.field_stride {
            let (header, rows) = self.field_rows(stride)?;
            let path = dir.join(format!("{stem}.field.csv"));
            write_csv(std::fs::File::create(&path)?, &header, &rows)?;
            out.push(path);
        }
        Ok(out)
    }
}

/// Points of the grid with spacing `stride` anchored at the lower bounding-box corner, row by row, inside the domain.
pub fn grid_points(domain: &DomainSpec, stride: f64) -> Vec<Point> {
    let [lo, hi] = domain.bbox();
    let nx = ((hi[0] - lo[0]) / stride).floor() as usize;
    let ny = ((hi[1] - lo[1]) / stride).floor() as usize;
    let mut out = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            let x = [lo[0] + i as f64 * stride, lo[1] + j as f64 * stride];
            if domain.contains(x) {
                out.push(x);
            }
        }
    }
    out
}

/// Rows `(x, y, value)` on the stride grid restricted to the domain.
pub fn emit_field(domain: &DomainSpec, stride: f64, value: impl Fn(Point) -> Result<f64>) -> Result<Vec<Vec<f64>>> {
    grid_points(domain, stride).into_iter().map(|x| Ok(vec![x[0], x[1], value(x)?])).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reference {
    Analytic,
    FineGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub h: f64,
    pub error: f64,
    /// Observed order against the previous row.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub case: String,
    pub reference: String,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceReport {
    fn new(case: &str, reference: String, hs: &[f64], errors: &[f64]) -> Self {
        let rows = hs
            .iter()
            .zip(errors)
            .enumerate()
            .map(|(i, (&h, &error))| ConvergenceRow {
                h,
                error,
                order: (i > 0).then(|| (errors[i - 1] / error).log2() / (hs[i - 1] / h).log2()),
            })
            .collect();
        ConvergenceReport { case: case.into(), reference, rows }
    }

    pub fn last_order(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.order)
    }

    /// Order between the first and last rows.
    pub fn mean_order(&self) -> Option<f64> {
        let (a, b) = (self.rows.first()?, self.rows.last()?);
        (self.rows.len() > 1).then(|| (a.error / b.error).ln() / (a.h / b.h).ln())
    }

    pub fn report(&self, config: &CaseConfig) -> String {
        report_text(self, config)
    }

    pub fn csv_rows(&self) -> Vec<Vec<f64>> {
        self.rows.iter().map(|r| vec![r.h, r.error, r.order.unwrap_or(f64::NAN)]).collect()
    }

    pub fn write(&self, config: &CaseConfig, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let stem = format!("{}-{}-convergence", config.case, config.analysis);
        let txt = dir.join(format!("{stem}.toml"));
        std::fs::write(&txt, self.report(config))?;
        let csv = dir.join(format!("{stem}.csv"));
        write_csv(std::fs::File::create(&csv)?, &["h", "error", "order"], &self.csv_rows())?;
        Ok(vec![txt, csv])
    }
}

/// Quantity compared across resolutions: sampled values, or the critical load.
enum Probe {
    Values(Vec<f64>),
    Scalar(f64),
}

fn probe(config: &CaseConfig, samples: &[Point]) -> Result<Probe> {
    let run = run_case(config)?;
    match config.analysis {
        Analysis::Bend => {
            let disc = run.disc.as_ref().expect("bending run");
            let f = disc.field(&run.coeffs);
            Ok(Probe::Values(samples.iter().map(|&x| f.value(x)).collect::<Result<_>>()?))
        }
        Analysis::Buckle => Ok(Probe::Scalar(run.summary.lambda.expect("buckling run"))),
        Analysis::Stress => {
            let s = run.stress.as_ref().expect("stress run").field();
            let mut v = Vec::with_capacity(3 * samples.len());
            for &x in samples {
                v.extend(s.stress(x)?);
            }
            Ok(Probe::Values(v))
        }
    }
}

fn deviation(a: &Probe, b: &Probe) -> f64 {
    match (a, b) {
        (Probe::Values(a), Probe::Values(b)) => a.iter().zip(b).fold(0.0f64, |m, (p, q)| m.max((p - q).abs())),
        (Probe::Scalar(a), Probe::Scalar(b)) => (a - b).abs(),
        _ => unreachable!("probes of one analysis"),
    }
}

fn with_h(config: &CaseConfig, h: f64) -> CaseConfig {
    let mut c = config.clone();
    c.discretization.h = h;
    if let Some(ha) = config.discretization.h_airy {
        c.discretization.h_airy = Some(ha * h / config.discretization.h);
    }
    c
}

/// Max-norm errors over the fixed sample set for each `h` (descending), with observed orders.
pub fn run_convergence(config: &CaseConfig, hs: &[f64], reference: Reference) -> Result<ConvergenceReport> {
    config.validate()?;
    if hs.is_empty() || hs.iter().any(|h| !(*h > 0.0)) || hs.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Config("h list must be positive and strictly descending".into()));
    }
    let domain = config.domain()?;
    let samples = halton_points(&domain, config.report.samples);
    let (description, exact) = match reference {
        Reference::Analytic => {
            let exact = match config.analysis {
                Analysis::Bend => exact_deflection(config).map(|s| Probe::Values(samples.iter().map(|&x| s.at(x)).collect())),
                Analysis::Stress => exact_stress(config)
                    .map(|s| {
                        let mut v = Vec::with_capacity(3 * samples.len());
                        for &x in &samples {
                            v.extend(s.stress(x)?);
                        }
                        Ok::<_, Error>(Probe::Values(v))
                    })
                    .transpose()?,
                Analysis::Buckle => None,
            };
            let exact = exact.ok_or_else(|| Error::Reference(format!("no closed form for case {}", config.case)))?;
            ("analytic".to_string(), exact)
        }
        Reference::FineGrid => {
            let h_ref = hs[hs.len() - 1] / config.report.reference_factor;
            let p = probe(&with_h(config, h_ref), &samples).map_err(|e| Error::Reference(format!("h = {h_ref}: {e}")))?;
            (format!("fine-grid h = {h_ref}"), p)
        }
    };
    let mut errors = Vec::with_capacity(hs.len());
    for &h in hs {
        errors.push(deviation(&probe(&with_h(config, h), &samples)?, &exact));
    }
    Ok(ConvergenceReport::new(&config.case, description, hs, &errors))
}
