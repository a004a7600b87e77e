use proptest::prelude::*;

use surfcalc::field::ScalarField;
use surfcalc::geometry::{metric_at, Chart, ChartAtlas};
use surfcalc::laws::PressureLaw;
use surfcalc::linalg::{dot, norm};
use surfcalc::surface_ops::{surface_gradient, SurfacePoint};

fn interior(chart: &Chart, u: [f64; 2]) -> [f64; 2] {
    std::array::from_fn(|a| chart.domain.lo[a] + (0.02 + 0.96 * u[a]) * chart.domain.extent(a))
}

fn atlases() -> impl Strategy<Value = ChartAtlas> {
    prop_oneof![
        (0.3f64..3.0).prop_map(ChartAtlas::sphere),
        (1.5f64..3.0, 0.2f64..0.9).prop_map(|(big, small)| ChartAtlas::torus(big, small)),
    ]
}

fn unit() -> impl Strategy<Value = [f64; 2]> {
    (0.0f64..1.0, 0.0f64..1.0).prop_map(|(a, b)| [a, b])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metric_invariants_hold(atlas in atlases(), chart in 0usize..2, u in unit()) {
        let chart = &atlas.charts[chart % atlas.charts.len()];
        let m = metric_at(chart, interior(chart, u), 0.0).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                let s: f64 = (0..2).map(|c| m.inverse_gram[a][c] * m.gram[c][b]).sum();
                let delta = f64::from(u8::from(a == b));
                prop_assert!((s - delta).abs() < 1e-12);
            }
            prop_assert!(dot(&m.normal, &m.tangents[a]).abs() < 1e-12 * norm(&m.tangents[a]));
        }
        prop_assert!((norm(&m.normal) - 1.0).abs() < 1e-12);
        prop_assert!(m.jacobian > 0.0);
    }

    #[test]
    fn projection_is_idempotent_and_kills_the_normal(atlas in atlases(), chart in 0usize..2, u in unit()) {
        let chart = &atlas.charts[chart % atlas.charts.len()];
        let m = metric_at(chart, interior(chart, u), 0.0).unwrap();
        let p = &m.projection;
        let mut trace = 0.0;
        for i in 0..3 {
            trace += p[i][i];
            let pn: f64 = (0..3).map(|k| p[i][k] * m.normal[k]).sum();
            prop_assert!(pn.abs() < 1e-12);
            for j in 0..3 {
                let pp: f64 = (0..3).map(|k| p[i][k] * p[k][j]).sum();
                prop_assert!((pp - p[i][j]).abs() < 1e-12);
                prop_assert!((p[i][j] - p[j][i]).abs() < 1e-14);
            }
        }
        prop_assert!((trace - 2.0).abs() < 1e-12);
    }

    #[test]
    fn surface_gradient_is_tangent(
        atlas in atlases(),
        chart in 0usize..2,
        u in unit(),
        c in prop::array::uniform4(-2.0f64..2.0),
    ) {
        let chart = &atlas.charts[chart % atlas.charts.len()];
        let expr = format!("{} * x1 * x2 + {} * x3^2 + {} * sin(x1 + t) + {} * exp(x2)", c[0], c[1], c[2], c[3]);
        let f = ScalarField::parse(&expr).unwrap();
        let p = SurfacePoint::new(chart, interior(chart, u), 0.4).unwrap();
        let g = surface_gradient(&f, &p);
        prop_assert!(dot(&g, &p.n()).abs() <= 1e-12 * (1.0 + norm(&g)));
    }

    #[test]
    fn partition_of_unity_sums_to_one(atlas in atlases(), chart in 0usize..2, u in unit()) {
        let chart = &atlas.charts[chart % atlas.charts.len()];
        let x = chart.position(interior(chart, u));
        prop_assert!((atlas.pou_sum(&x) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn effective_pressure_matches_its_definition(
        rho in 0.05f64..5.0,
        k in 0.1f64..3.0,
        gamma in 1.05f64..3.0,
    ) {
        for law in [PressureLaw::Linear { k }, PressureLaw::Quadratic, PressureLaw::Polytropic { k, gamma }] {
            let h = 1e-5 * rho;
            let dp = (law.p(rho + h) - law.p(rho - h)) / (2.0 * h);
            let expected = rho * dp - law.p(rho);
            prop_assert!((law.effective(rho) - expected).abs() <= 1e-8 * (1.0 + expected.abs()));
            let slope = (law.effective(rho + h) - law.effective(rho - h)) / (2.0 * h);
            prop_assert!((law.effective_slope(rho) - slope).abs() <= 1e-7 * (1.0 + slope.abs()));
        }
    }
}
