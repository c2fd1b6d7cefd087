use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::analytic::halton_points;
use super::config::{CaseConfig, StressSolver};
use crate::airy::{solve_airy, AiryOptions, Traction};
use crate::assembly::{
    assemble_bending, assemble_geometric, local_asymmetry, plate_integrand, solve_buckling, stress_integrand, ConstantStress,
    Discretization, PlateMaterial, StressField,
};
use crate::error::Result;
use crate::extension::{build_biharmonic_extension, EdgeData, ExtensionMode, ExtensionOptions};
use crate::geometry::{DomainSpec, Outer, Point, Weight};
use crate::jet::Jet2;
use crate::solvers::{residual, EigenMethod, EigenPair};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyCheck {
    pub name: &'static str,
    pub value: f64,
    pub limit: f64,
    /// `true` when the value must reach the limit from above.
    pub at_least: bool,
}

impl PropertyCheck {
    pub fn pass(&self) -> bool {
        if self.at_least {
            self.value >= self.limit
        } else {
            self.value < self.limit
        }
    }
}

/// Grid spacing giving a few hundred cells while resolving every hole.
pub fn check_spacing(domain: &DomainSpec) -> f64 {
    let h = (domain.area() / 250.0).sqrt();
    domain.holes.iter().map(|h| 0.5 * h.circle.radius).fold(h, f64::min)
}

fn partition_of_unity(disc: &Discretization, pts: &[Point]) -> f64 {
    let b = &disc.basis;
    let mut local = vec![Jet2::ZERO; b.local_count()];
    let mut e = 0.0f64;
    for &x in pts {
        let Some((cx, cy)) = b.grid().cell_of(x) else { continue };
        b.local_splines(cx, cy, x, &mut local);
        e = e.max((local.iter().map(|j| j.v).sum::<f64>() - 1.0).abs());
    }
    e
}

/// Least-squares residual of the highest tensor monomials in the unweighted extended basis.
fn polynomial_reproduction(domain: &DomainSpec, h: f64, p: usize) -> Result<f64> {
    let disc = Discretization::new(domain, Weight::Constant(1.0), h, p, Default::default())?;
    let b = &disc.basis;
    let pts = halton_points(domain, 3 * b.len());
    let [lo, hi] = domain.bbox();
    let c = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
    let s = 0.5 * (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let mut a = DMatrix::zeros(pts.len(), b.len());
    for (r, &x) in pts.iter().enumerate() {
        for col in 0..b.len() {
            a[(r, col)] = b.eval(col, x)?.v;
        }
    }
    let svd = a.clone().svd(true, true);
    let mut worst = 0.0f64;
    for (ex, ey) in [(p, p), (1, p), (p, 0), (0, 0)] {
        let q = DVector::from_iterator(
            pts.len(),
            pts.iter().map(|x| ((x[0] - c[0]) / s).powi(ex as i32) * ((x[1] - c[1]) / s).powi(ey as i32)),
        );
        let w = svd.solve(&q, 1e-13).expect("svd with vectors");
        worst = worst.max((&a * w - &q).amax());
    }
    Ok(worst)
}

/// Observed order of the biharmonic boundary extension of a smooth function when the knots per
/// edge double from 8 to 16 per vertex radius.
fn extension_order(domain: &DomainSpec, p: usize) -> Result<Option<f64>> {
    let Outer::Polygon(poly) = &domain.outer else { return Ok(None) };
    let [lo, hi] = poly.bbox();
    let k = 2.0 / (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let data = EdgeData::restrict(poly, ExtensionMode::Biharmonic, move |x| {
        let (sx, cx) = (k * x[0]).sin_cos();
        let (sy, cy) = (k * x[1]).sin_cos();
        Jet2 { v: sx * cy, dx: k * cx * cy, dy: -k * sx * sy, dxx: -k * k * sx * cy, dxy: -k * k * cx * sy, dyy: -k * k * sx * cy }
    })?;
    let frames = poly.frames()?;
    let n = frames.len();
    let len = |i: usize| frames[i % n].length;
    let cells: Vec<usize> = (0..n)
        .map(|j| {
            let r = 0.25 * len(j + n - 1).min(len(j)).min(len(j + 1));
            (len(j) / r).ceil() as usize
        })
        .collect();
    let err = |m: usize| -> Result<f64> {
        let opts = ExtensionOptions { degree: p, knots: cells.iter().map(|c| m * c).collect(), radii: None };
        Ok(build_biharmonic_extension(poly, &data, &opts)?.boundary_error(&data, 200).0)
    };
    let (e1, e2) = (err(8)?, err(16)?);
    Ok(Some((e1 / e2).log2()))
}

/// Largest stress change when the affine gauge of every boundary is shifted by one affine function.
fn gauge_invariance(config: &CaseConfig, domain: &DomainSpec, h: f64, pts: &[Point]) -> Result<f64> {
    let tractions: Vec<Traction> = match config.tractions() {
        Some(t) if !matches!(config.load, super::config::LoadConfig::Tractions { solver: StressSolver::Lame, .. }) => t,
        _ => std::iter::once(Traction::Stress([-1.0, -0.5, 0.2])).chain(domain.holes.iter().map(|_| Traction::Free)).collect(),
    };
    let opts = AiryOptions { h, degree: config.discretization.airy_degree(), quad: config.discretization.quad() };
    let sol = solve_airy(domain, &tractions, &opts)?;
    let mut shifted = sol.clone();
    for k in 0..domain.boundary_count() {
        shifted = shifted.with_gauge_shift(k, [1.3, -0.7, 2.1]);
    }
    let mut e = 0.0f64;
    let mut scale = 0.0f64;
    for &x in pts {
        let (a, b) = (sol.stress(x)?, shifted.stress(x)?);
        for i in 0..3 {
            e = e.max((a[i] - b[i]).abs());
            scale = scale.max(a[i].abs());
        }
    }
    Ok(e / scale.max(1.0))
}

/// Coarse-grid property suite on the geometry of `config`.
pub fn property_checks(config: &CaseConfig) -> Result<Vec<PropertyCheck>> {
    let domain = config.domain()?;
    let h = check_spacing(&domain);
    let p = config.discretization.p;
    let pts = halton_points(&domain, 300);
    let material = config.material.unwrap_or(PlateMaterial { d: 1.0, nu: 0.3, e: 1.0, thickness: 1.0 });
    let disc = Discretization::new(&domain, domain.clamped_weight()?, h, p, config.discretization.quad())?;
    let nloc = disc.basis.local_count();
    let stress = ConstantStress([-1.0, -0.6, 0.25]);

    let mut out = vec![
        PropertyCheck { name: "partition of unity", value: partition_of_unity(&disc, &pts), limit: 1e-13, at_least: false },
        PropertyCheck {
            name: "polynomial reproduction",
            value: polynomial_reproduction(&domain, h, p)?,
            limit: 1e-10,
            at_least: false,
        },
        PropertyCheck {
            name: "A symmetry",
            value: local_asymmetry(&disc, plate_integrand(material.d, material.nu, nloc))?,
            limit: 1e-13,
            at_least: false,
        },
        PropertyCheck {
            name: "B symmetry",
            value: local_asymmetry(&disc, stress_integrand(&stress as &dyn StressField, nloc))?,
            limit: 1e-13,
            at_least: false,
        },
        PropertyCheck {
            name: "affine gauge invariance",
            value: gauge_invariance(config, &domain, h, &pts)?,
            limit: 1e-10,
            at_least: false,
        },
    ];
    if let Some(order) = extension_order(&domain, 2)? {
        out.push(PropertyCheck { name: "extension order (p = 2)", value: order, limit: 3.0, at_least: true });
    }
    let a = assemble_bending(&disc, &material, &config.stiffeners)?;
    let b = assemble_geometric(&disc, &ConstantStress([-1.0, -1.0, 0.0]), &[])?;
    for method in [EigenMethod::Dense, EigenMethod::Lanczos] {
        let res = solve_buckling(&a, &b, method)?;
        let r = residual(&a, &b.scaled(-1.0), &EigenPair { value: res.lambda, vector: res.mode });
        out.push(PropertyCheck {
            name: if method == EigenMethod::Dense { "eigen residual (dense)" } else { "eigen residual (lanczos)" },
            value: r,
            limit: 1e-8,
            at_least: false,
        });
    }
    Ok(out)
}
