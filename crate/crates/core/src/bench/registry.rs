use super::config::*;
use crate::assembly::{PlateMaterial, Stiffener};
use crate::geometry::{BoundaryCondition, Point};

const ANNULUS_RATIOS: [(&str, f64); 5] = [("a", 0.2), ("b", 0.525), ("c", 0.58), ("d", 0.62), ("e", 0.68)];

/// Vertices of the convex pentagon; the non-convex variant moves the first vertex inward.
pub const CONVEX_POLYGON: [Point; 5] = [[2.0, -4.0], [5.0, 3.0], [3.0, 8.0], [-3.5, 6.0], [-5.0, -8.0]];
pub const NONCONVEX_FIRST_VERTEX: Point = [0.5, 0.0];
pub const POLYGON_HOLES: [(Point, f64); 2] = [([-1.7, 0.7], 0.91), ([1.3, 4.05], 1.1)];

fn material(d: f64, nu: f64) -> Option<PlateMaterial> {
    Some(PlateMaterial { d, nu, e: 1.0, thickness: 1.0 })
}

fn disc(p: usize, h: f64) -> DiscretizationConfig {
    DiscretizationConfig { p, h, quad_order: None, quad_depth: 6, p_airy: None, h_airy: None }
}

fn base(case: &str, description: &str, analysis: Analysis, domain: DomainConfig, load: LoadConfig) -> CaseConfig {
    CaseConfig {
        case: case.into(),
        description: description.into(),
        analysis,
        domain,
        material: None,
        stiffeners: Vec::new(),
        load,
        discretization: disc(3, 0.1),
        solver: SolverConfig::default(),
        report: ReportConfig::default(),
        output: OutputConfig::default(),
    }
}

fn annulus(a: f64, b: f64) -> DomainConfig {
    DomainConfig {
        outer: OuterConfig::Circle { center: [0.0, 0.0], radius: b },
        outer_bc: BoundaryCondition::Clamped,
        holes: vec![HoleConfig { center: [0.0, 0.0], radius: a, bc: BoundaryCondition::Free }],
    }
}

fn rect(a: f64, b: f64, angle_deg: f64, bc: BoundaryCondition) -> DomainConfig {
    DomainConfig { outer: OuterConfig::Rectangle { center: [0.0, 0.0], a, b, angle_deg }, outer_bc: bc, holes: Vec::new() }
}

fn rotate(p: Point, deg: f64) -> Point {
    let (s, c) = deg.to_radians().sin_cos();
    [c * p[0] - s * p[1], s * p[0] + c * p[1]]
}

pub fn annular_bend() -> CaseConfig {
    let mut c = base(
        "annular-bend",
        "annulus clamped outside, free inside, constant pressure",
        Analysis::Bend,
        annulus(0.5345, 1.5432),
        LoadConfig::Lateral { p0: 1.74586 },
    );
    c.material = material(1.234, 0.3);
    c
}

pub fn annular_buckle(ratio: f64, tag: &str) -> CaseConfig {
    let b = 2.28;
    let mut c = base(
        &format!("annular-buckle-{tag}"),
        &format!("annulus a/b = {ratio}, radial compression on the clamped outer edge, free inner edge"),
        Analysis::Buckle,
        annulus(ratio * b, b),
        LoadConfig::Tractions {
            outer: TractionConfig::Stress([-1.0, -1.0, 0.0]),
            holes: vec![TractionConfig::Free],
            solver: StressSolver::Lame,
        },
    );
    c.material = material(1.0, 0.3);
    c.report.k = KNorm::Annulus { length: b };
    c
}

pub fn rect_stiffener_bend(angle_deg: f64) -> CaseConfig {
    let (a, b) = (5.0, 1.0);
    let mut c = base(
        &format!("rect-stiffener-bend-{angle_deg}"),
        "simply supported 5 x 1 rectangle, midline stiffener, constant pressure, rotated about the centre",
        Analysis::Bend,
        rect(a, b, angle_deg, BoundaryCondition::SimplySupported),
        LoadConfig::Lateral { p0: 1.543 },
    );
    c.material = material(1.234, 0.3);
    c.stiffeners = vec![Stiffener {
        start: rotate([-a / 2.0, 0.0], angle_deg),
        end: rotate([a / 2.0, 0.0], angle_deg),
        ei: 150.0,
        r0: 0.0,
        zeta0: 0.0,
        ts: 0.0,
    }];
    c
}

/// Ratio `a/b = 5/2`, stiffener area ratio `1/2`, bending stiffness ratio `EI/(bD) = gamma`.
pub fn rect_stiffener_buckle(gamma: f64) -> CaseConfig {
    let (a, b, d, delta) = (2.5, 1.0, 1.0, 0.5);
    let mut c = base(
        "rect-stiffener-buckle",
        "simply supported rectangle a/b = 5/2 with longitudinal midline stiffener under uniaxial compression",
        Analysis::Buckle,
        rect(a, b, 0.0, BoundaryCondition::SimplySupported),
        LoadConfig::Uniform { stress: [-1.0, 0.0, 0.0] },
    );
    c.material = material(d, 0.3);
    c.stiffeners =
        vec![Stiffener { start: [-a / 2.0, 0.0], end: [a / 2.0, 0.0], ei: gamma * b * d, r0: 0.0, zeta0: 0.0, ts: b * delta }];
    c.report.k = KNorm::Plate { length: b };
    c
}

fn diagonal_stiffener(a: f64, ei: f64) -> Stiffener {
    Stiffener { start: [-0.17 * a, -a / 2.0], end: [a / 2.0, 0.28 * a], ei, r0: 0.0, zeta0: 0.0, ts: 0.0 }
}

pub fn square_diagonal_bend() -> CaseConfig {
    let a = 2.0;
    let mut c = base(
        "square-diagonal-stiffener-bend",
        "simply supported square with an oblique stiffener, constant pressure",
        Analysis::Bend,
        rect(a, a, 0.0, BoundaryCondition::SimplySupported),
        LoadConfig::Lateral { p0: 1.543 },
    );
    c.material = material(1.234, 0.3);
    c.stiffeners = vec![diagonal_stiffener(a, 150.0)];
    c
}

pub fn square_diagonal_buckle(ei: f64, bc: BoundaryCondition) -> CaseConfig {
    let a = 2.0;
    let mut c = base(
        "square-diagonal-stiffener-buckle",
        "square with an oblique stiffener, no axial stiffener force, uniaxial compression",
        Analysis::Buckle,
        rect(a, a, 0.0, bc),
        LoadConfig::Uniform { stress: [-1.0, 0.0, 0.0] },
    );
    c.material = material(1.234, 0.3);
    c.stiffeners = vec![diagonal_stiffener(a, ei)];
    c.report.k = KNorm::Plate { length: a };
    c
}

fn rect_hole(a: f64, b: f64, d: f64, hole_bc: BoundaryCondition, outer_bc: BoundaryCondition) -> DomainConfig {
    DomainConfig {
        outer: OuterConfig::Rectangle { center: [0.0, 0.0], a, b, angle_deg: 0.0 },
        outer_bc,
        holes: vec![HoleConfig { center: [0.0, 0.0], radius: d / 2.0, bc: hole_bc }],
    }
}

pub fn rect_hole_stress_compression() -> CaseConfig {
    let mut c = base(
        "rect-hole-stress-compression",
        "4 x 2 rectangle with central hole d = 1, uniform normal compression on every boundary",
        Analysis::Stress,
        rect_hole(4.0, 2.0, 1.0, BoundaryCondition::Free, BoundaryCondition::Free),
        LoadConfig::Tractions {
            outer: TractionConfig::Stress([-1.0, -1.0, 0.0]),
            holes: vec![TractionConfig::Stress([-1.0, -1.0, 0.0])],
            solver: StressSolver::Airy,
        },
    );
    c.discretization = disc(3, 0.1);
    c.discretization.p_airy = Some(5);
    c
}

pub fn rect_hole_stress_tension() -> CaseConfig {
    let mut c = base(
        "rect-hole-stress-tension",
        "4 x 2 rectangle with free central hole d = 1, uniform tension on the left and right edges",
        Analysis::Stress,
        rect_hole(4.0, 2.0, 1.0, BoundaryCondition::Free, BoundaryCondition::Free),
        LoadConfig::Tractions {
            outer: TractionConfig::Stress([1.0, 0.0, 0.0]),
            holes: vec![TractionConfig::Free],
            solver: StressSolver::Airy,
        },
    );
    c.discretization = disc(3, 0.1);
    c.discretization.p_airy = Some(5);
    c
}

/// Simply supported square `a = 2` with a free central hole of diameter `ratio * a`.
pub fn square_hole_buckle(ratio: f64) -> CaseConfig {
    let a = 2.0;
    let mut c = base(
        "square-hole-buckle",
        &format!("simply supported square with free central hole d/a = {ratio}, uniaxial compression"),
        Analysis::Buckle,
        rect_hole(a, a, ratio * a, BoundaryCondition::Free, BoundaryCondition::SimplySupported),
        LoadConfig::Tractions {
            outer: TractionConfig::Stress([-1.0, 0.0, 0.0]),
            holes: vec![TractionConfig::Free],
            solver: StressSolver::Airy,
        },
    );
    c.material = material(1.0, 0.3);
    c.report.k = KNorm::Plate { length: a };
    c
}

fn polygon(convex: bool) -> DomainConfig {
    let mut vertices = CONVEX_POLYGON.to_vec();
    if !convex {
        vertices[0] = NONCONVEX_FIRST_VERTEX;
    }
    DomainConfig {
        outer: OuterConfig::Polygon { vertices },
        outer_bc: BoundaryCondition::Clamped,
        holes: POLYGON_HOLES.iter().map(|&(center, radius)| HoleConfig { center, radius, bc: BoundaryCondition::Free }).collect(),
    }
}

fn polygon_name(convex: bool) -> &'static str {
    if convex {
        "convex-polygon"
    } else {
        "nonconvex-polygon"
    }
}

pub fn polygon_bend(convex: bool) -> CaseConfig {
    let name = polygon_name(convex);
    let mut c = base(
        &format!("{name}-bend"),
        "clamped pentagon with two free holes, constant pressure",
        Analysis::Bend,
        polygon(convex),
        LoadConfig::Lateral { p0: 1.234 },
    );
    c.material = material(1.0, 0.3);
    c.discretization = disc(3, 0.3);
    c
}

pub fn polygon_buckle(convex: bool) -> CaseConfig {
    let name = polygon_name(convex);
    let mut c = base(
        &format!("{name}-buckle"),
        "clamped pentagon with two free holes, normal compression on the outer edges",
        Analysis::Buckle,
        polygon(convex),
        LoadConfig::Tractions {
            outer: TractionConfig::Stress([-1.0, -1.0, 0.0]),
            holes: vec![TractionConfig::Free; 2],
            solver: StressSolver::Airy,
        },
    );
    c.material = material(1.0, 0.3);
    c.discretization = disc(3, 0.15);
    c.report.k = KNorm::PerD;
    c
}

/// Every registered case with its default parameters.
pub fn registry() -> Vec<CaseConfig> {
    let mut out = vec![annular_bend()];
    out.extend(ANNULUS_RATIOS.iter().map(|&(tag, r)| annular_buckle(r, tag)));
    out.push(rect_stiffener_bend(0.0));
    out.push(rect_stiffener_bend(10.0));
    out.push(rect_stiffener_buckle(5.0));
    out.push(square_diagonal_bend());
    out.push(square_diagonal_buckle(0.0, BoundaryCondition::SimplySupported));
    out.push(rect_hole_stress_compression());
    out.push(rect_hole_stress_tension());
    out.push(square_hole_buckle(0.3));
    for convex in [true, false] {
        out.push(polygon_bend(convex));
        out.push(polygon_buckle(convex));
    }
    out
}

pub fn find_case(id: &str) -> Option<CaseConfig> {
    registry().into_iter().find(|c| c.case == id)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_ids_are_unique_and_valid() {
        let cases = registry();
        let mut ids: Vec<_> = cases.iter().map(|c| c.case.clone()).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), cases.len());
        assert_eq!(cases.len(), 18);
        for c in &cases {
            c.validate().unwrap_or_else(|e| panic!("{}: {e}", c.case));
            assert_eq!(&CaseConfig::from_toml(&c.to_toml()).unwrap(), c, "{}", c.case);
        }
    }

    #[test]
    fn nonconvex_polygon_has_one_reflex_vertex() {
        let c = polygon_bend(false);
        let crate::geometry::Outer::Polygon(p) = c.domain().unwrap().outer else { panic!() };
        assert_eq!((0..p.len()).filter(|&i| p.is_reflex(i)).count(), 1);
        assert!(p.is_reflex(0));
    }
}
