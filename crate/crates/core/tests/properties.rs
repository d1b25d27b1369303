use fisurf_core::boxdim::{remark1_bounds, system_extrema, Remark1};
use fisurf_core::expr::sample_meta;
use fisurf_core::ifs::AxisMaps;
use fisurf_core::*;
use proptest::prelude::*;

fn grid_strategy(sizes: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = DataGrid> {
    (sizes, -2.0..2.0f64, -2.0..2.0f64, 0.5..3.0f64, 0.5..3.0f64).prop_flat_map(|(n, x0, y0, w, h)| {
        prop::collection::vec(-1.0..1.0f64, (n + 1) * (n + 1)).prop_map(move |z| {
            let xs = KnotVector::uniform(x0, x0 + w, n).unwrap();
            let ys = KnotVector::uniform(y0, y0 + h, n).unwrap();
            DataGrid::from_fn(xs, ys, |i, j| z[i * (n + 1) + j]).unwrap()
        })
    })
}

/// `c + a sin(k x + l y)` with values in `[0.05, 0.95]`.
fn s_strategy() -> impl Strategy<Value = String> {
    (0.2..0.8f64, -1.0..1.0f64, -4.0..4.0f64, -4.0..4.0f64).prop_map(|(c, t, k, l)| {
        let a = t * (c - 0.05).min(0.95 - c);
        format!("{c:?} + {a:?}*sin({k:?}*x + {l:?}*y)")
    })
}

fn system(grid: DataGrid, s: &str) -> SurfaceSystem {
    SurfaceSystem::new(grid, VerticalField::Global(Field::from_expr(s.parse().unwrap()))).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn h_reproduces_every_knot(grid in grid_strategy(1..=5)) {
        let h = default_h(&grid);
        for (i, &x) in grid.xs().values().iter().enumerate() {
            for (j, &y) in grid.ys().values().iter().enumerate() {
                prop_assert_eq!(h.eval(x, y).unwrap(), grid.z(i, j));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn default_borders_agree(grid in grid_strategy(2..=4), s in s_strategy()) {
        let sys = system(grid, &s);
        prop_assert!(check_border_consistency(&sys, 6).unwrap() <= 1e-12);
    }

    #[test]
    fn alternating_maps_share_end_points(mut cuts in prop::collection::vec(0.01..1.0f64, 1..8), lo in -5.0..5.0f64) {
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
        let mut knots = vec![lo];
        let mut acc = lo;
        for c in &cuts {
            acc += c;
            knots.push(acc);
        }
        let k = KnotVector::new(knots).unwrap();
        let maps = AxisMaps::alternating(&k);
        prop_assert_eq!(maps.matching_defect(), None);
        for (idx, map) in maps.maps().iter().enumerate() {
            let image = [map.apply(k.first()), map.apply(k.last())];
            let (a, b) = (image[0].min(image[1]), image[0].max(image[1]));
            prop_assert_eq!((a, b), (k.values()[idx], k.values()[idx + 1]));
            let t = lo + 0.37 * k.span();
            prop_assert!((map.invert(map.apply(t)) - t).abs() <= 1e-12 * (1.0 + t.abs()));
        }
    }

    #[test]
    fn verdict_survives_scaling_the_data(grid in grid_strategy(2..=3), s in s_strategy(), lambda in 0.01..100.0f64) {
        let scaled = grid.map_z(|_, _, z| lambda * z).unwrap();
        let a = system(grid, &s);
        let b = system(scaled, &s);
        let va = theorem_verdict(&system_extrema(&a), &height_report(a.grid()), a.n()).unwrap();
        let vb = theorem_verdict(&system_extrema(&b), &height_report(b.grid()), b.n()).unwrap();
        prop_assert_eq!(va.case, vb.case);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn lemma_inequality_holds(grid in grid_strategy(2..=3), s in s_strategy(), cell in (1usize..=3, 1usize..=3)) {
        let sys = system(grid, &s);
        let lat = evaluate_lattice(&sys, 4).unwrap();
        let (i, j) = (cell.0.min(sys.n()), cell.1.min(sys.m()));
        let gap = lemma_gap(&sys, i, j, &lat).unwrap();
        prop_assert!(gap.lhs <= gap.rhs, "{:?}", gap);
    }

    #[test]
    fn theorem_bounds_within_remark1(n in 2usize..=4, s in s_strategy()) {
        let k = KnotVector::uniform(0.0, 1.0, n).unwrap();
        // a bump at the first interior knot keeps a non-collinear section
        let grid = DataGrid::from_fn(k.clone(), k, |i, j| if i == 1 && j == 1 { 1.0 } else { 0.0 }).unwrap();
        let sys = system(grid, &s);
        let extrema = system_extrema(&sys);
        let v = theorem_verdict(&extrema, &height_report(sys.grid()), n).unwrap();
        let r = remark1_bounds(extrema.global_min(), extrema.global_max(), n).unwrap();
        match (v.case, r) {
            (VerdictCase::Bounds { lower, upper }, Remark1::Bounds { lower: rl, upper: ru, .. }) => {
                prop_assert!(rl <= lower + 1e-12 && upper <= ru + 1e-12);
            }
            (VerdictCase::Bounds { .. }, Remark1::DimensionTwo) => prop_assert!(false, "remark gives 2 but theorem bounds"),
            (_, Remark1::DimensionTwo) => prop_assert_eq!(v.case, VerdictCase::ExactTwo),
            _ => {}
        }
    }

    #[test]
    fn refining_samples_never_narrows_range(s in s_strategy(), res in 2usize..12, factor in 2usize..4) {
        let e: Expr = s.parse().unwrap();
        let rect = Rect::new(0.1, 0.7, -0.3, 0.4);
        let coarse = sample_meta(rect, res, |x, y| e.eval(x, y)).unwrap();
        let fine = sample_meta(rect, res * factor, |x, y| e.eval(x, y)).unwrap();
        prop_assert!(fine.max_abs >= coarse.max_abs && fine.min_abs <= coarse.min_abs);
        prop_assert!(fine.max_value >= coarse.max_value && fine.min_value <= coarse.min_value);
    }

    #[test]
    fn literals_round_trip(v in prop::num::f64::NORMAL | prop::num::f64::ZERO) {
        let v = v.abs();
        let e: Expr = format!("{v:?}").parse().unwrap();
        prop_assert_eq!(e.eval(0.0, 0.0).unwrap().to_bits(), v.to_bits());
        let again: Expr = e.to_string().parse().unwrap();
        prop_assert_eq!(again.eval(0.0, 0.0).unwrap().to_bits(), v.to_bits());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn box_counts_grow_with_scale(grid in grid_strategy(2..=3), s in s_strategy()) {
        let sys = system(grid, &s);
        let lat = evaluate_lattice(&sys, 4).unwrap();
        let counts: Vec<u64> = (1..=4).map(|r| count_boxes(&lat, r).unwrap()).collect();
        prop_assert!(counts.windows(2).all(|w| w[0] <= w[1]), "{:?}", counts);
        prop_assert!(counts.iter().enumerate().all(|(k, &c)| c >= (sys.n() as u64).pow(2 * (k as u32 + 1))));
    }

    #[test]
    fn columnwise_constant_lattice_counts_one_box_per_column(n in 2usize..=4, r in 1usize..=2, seed in 0u64..1000) {
        let columns = n.pow(r as u32);
        // value depends only on the column, and stays inside one ε-slab
        let lat = LatticeValues::from_fn(n, 2, Rect::unit(), |x, y| {
            let c = |t: f64| ((t * columns as f64) as usize).min(columns - 1);
            let k = (c(x) * columns + c(y)) as u64 ^ seed;
            (k % 7) as f64 / columns as f64 + 0.5 / columns as f64
        });
        prop_assert_eq!(count_boxes(&lat, r).unwrap(), (columns * columns) as u64);
    }

    #[test]
    fn lattice_and_chaos_game_are_reproducible(grid in grid_strategy(2..=3), s in s_strategy(), seed in any::<u64>()) {
        let sys = system(grid, &s);
        prop_assert_eq!(evaluate_lattice(&sys, 3).unwrap(), evaluate_lattice(&sys, 3).unwrap());
        prop_assert_eq!(chaos_game(&sys, 200, seed, 10).unwrap(), chaos_game(&sys, 200, seed, 10).unwrap());
    }
}
