use proptest::prelude::*;
use webplate::assembly::StressField;
use webplate::bench::{halton_points, AnnulusBending, KNorm, LameStress};
use webplate::geometry::{BoundaryCondition, Circle, DomainSpec, Hole, Outer};

fn annulus(a: f64, b: f64) -> DomainSpec {
    DomainSpec::new(
        Outer::Circle(Circle::new([0.0, 0.0], b).unwrap()),
        BoundaryCondition::Clamped,
        vec![Hole { circle: Circle::new([0.0, 0.0], a).unwrap(), bc: BoundaryCondition::Free }],
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn annulus_closed_form_meets_boundary_conditions(a in 0.1f64..1.0, gap in 0.2f64..2.0, p0 in -3.0f64..3.0, d in 0.1f64..5.0, nu in 0.0f64..0.45) {
        let b = a + gap;
        let s = AnnulusBending::new([0.0, 0.0], a, b, p0, d, nu).unwrap();
        let scale = (p0 * b.powi(4) / d).abs().max(1e-12);
        prop_assert!(s.w(b).abs() < 1e-10 * scale);
        prop_assert!(s.dw(b).abs() < 1e-10 * scale / b);
        prop_assert!((s.d2w(a) + nu * s.dw(a) / a).abs() < 1e-9 * scale / (a * a));
        prop_assert!(s.dlap(a).abs() < 1e-9 * scale / a.powi(3));
    }

    #[test]
    fn lame_stress_matches_boundary_tractions(a in 0.1f64..1.0, gap in 0.1f64..2.0, s_in in -2.0f64..2.0, s_out in -2.0f64..2.0, t in 0.0f64..6.3) {
        let b = a + gap;
        let l = LameStress::new([0.0, 0.0], a, b, s_in, s_out);
        prop_assert!((l.polar(a).0 - s_in).abs() < 1e-12);
        prop_assert!((l.polar(b).0 - s_out).abs() < 1e-12);
        let r = 0.5 * (a + b);
        let s = l.stress([r * t.cos(), r * t.sin()]).unwrap();
        let (srr, stt) = l.polar(r);
        prop_assert!((s[0] + s[1] - srr - stt).abs() < 1e-12);
    }

    #[test]
    fn halton_samples_lie_inside(a in 0.1f64..0.9, gap in 0.1f64..1.5) {
        let dom = annulus(a, a + gap);
        let pts = halton_points(&dom, 200);
        prop_assert_eq!(pts.len(), 200);
        prop_assert!(pts.iter().all(|&x| dom.contains(x)));
        prop_assert_eq!(halton_points(&dom, 200), pts);
    }

    #[test]
    fn k_normalisations_are_linear(lambda in -10.0f64..10.0, d in 0.1f64..5.0, len in 0.1f64..5.0) {
        for k in [KNorm::PerD, KNorm::Annulus { length: len }, KNorm::Plate { length: len }] {
            let one = k.apply(1.0, d).unwrap();
            prop_assert!((k.apply(lambda, d).unwrap() - lambda * one).abs() <= 1e-12 * one.abs() * (1.0 + lambda.abs()));
        }
        prop_assert_eq!(KNorm::None.apply(lambda, d), None);
    }
}
