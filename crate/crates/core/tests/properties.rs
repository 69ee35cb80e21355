use gradabs::barriers::subsolution_bound;
use gradabs::operators::rhs_original;
use gradabs::profile::{cone_value, distance_transform};
use gradabs::stepper::{monotone_dt_bound, step_original};
use gradabs::{
    build_vinf, Field, Grid, InitialData, Integrator, Mode, Params, PositivitySet, RegimeLabel, RunConfig, StepControl,
};
use proptest::prelude::*;

fn cap_sum(grid: Grid<f64>, caps: &[(f64, f64, f64)]) -> Field<f64> {
    Field::from_fn(grid, |[x, y]| {
        caps.iter()
            .map(|&(a, c, r)| a * (r * r - (x - c) * (x - c) - y * y).max(0.0).powi(2))
            .sum()
    })
}

fn caps() -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    proptest::collection::vec((0.0f64..0.1, -0.5f64..0.5, 0.2f64..0.8), 1..4)
}

fn mask_strategy() -> impl Strategy<Value = (usize, usize, Vec<bool>)> {
    (1usize..=2, 8usize..=24).prop_flat_map(|(dim, n)| {
        let len = if dim == 1 { n } else { n * n };
        (Just(dim), Just(n), proptest::collection::vec(proptest::bool::weighted(0.8), len))
    })
}

fn set(dim: usize, n: usize, mut mask: Vec<bool>) -> PositivitySet<f64> {
    if mask.iter().all(|&m| m) {
        mask[0] = false;
    }
    PositivitySet::from_mask(Grid::new(dim, 1.0, n).unwrap(), mask, 0.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn classify_agrees_with_thresholds(p in 2.05f64..6.0, q in 1.01f64..8.0, dim in 1usize..=3) {
        let params = Params::new(p, q, dim).unwrap();
        let c = params.derive();
        let label = params.classify().label;
        let expect = if q < c.q1 {
            RegimeLabel::SubcriticalLocalized
        } else if q == c.q1 {
            RegimeLabel::CriticalQ1
        } else if q < c.q_star {
            RegimeLabel::Intermediate
        } else {
            RegimeLabel::Supercritical
        };
        prop_assert_eq!(label, expect);
        prop_assert_eq!(params.classify().below_q2, q < c.q2);
    }

    #[test]
    fn subsolution_bound_increases_in_amplitude(
        p in 2.1f64..5.0, frac in 0.05f64..0.95, dim in 1usize..=2, r in 0.2f64..3.0, a in 0.0f64..1.0, da in 1e-6f64..1.0,
    ) {
        let params = Params::new(p, 1.0 + frac * (p - 2.0), dim).unwrap();
        prop_assert!(subsolution_bound(a + da, r, &params) > subsolution_bound(a, r, &params));
    }

    #[test]
    fn update_is_monotone_in_each_neighbor(
        values in proptest::collection::vec(0.0f64..1.0, 24), cell in 1usize..23, left in any::<bool>(), bump in 1e-6f64..0.5,
    ) {
        let params = Params::new(3.0, 1.5, 1).unwrap();
        let grid = Grid::new(1, 1.0, 24).unwrap();
        let f = Field::new(grid, values.clone()).unwrap();
        let nb = if left { cell - 1 } else { cell + 1 };
        let mut raised = values;
        raised[nb] += bump;
        let g = Field::new(grid, raised).unwrap();
        let dx = grid.dx();
        let dt = 0.9 * monotone_dt_bound(&rhs_original(&f, &params), dx, 1).min(monotone_dt_bound(&rhs_original(&g, &params), dx, 1));
        let (a, _) = step_original(&f, dt, &params).unwrap();
        let (b, _) = step_original(&g, dt, &params).unwrap();
        prop_assert!(b.get(cell) >= a.get(cell) - 1e-15, "{} < {}", b.get(cell), a.get(cell));
    }

    #[test]
    fn even_data_stays_even(c in caps()) {
        let params = Params::new(3.0, 1.5, 1).unwrap();
        let grid = Grid::new(1, 2.0, 64).unwrap();
        let sym: Vec<(f64, f64, f64)> = c.iter().flat_map(|&(a, x, r)| [(a, x, r), (a, -x, r)]).collect();
        let f = cap_sum(grid, &sym);
        let rhs = rhs_original(&f, &params).values;
        for i in 0..32 {
            prop_assert!((rhs[i] - rhs[63 - i]).abs() <= 1e-12 * (1.0 + rhs[i].abs()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn ordered_data_stay_ordered(u in caps(), w in caps()) {
        let grid = Grid::new(1, 2.0, 32).unwrap();
        let u0 = cap_sum(grid, &u);
        let v0 = Field::new(grid, u0.values().iter().zip(cap_sum(grid, &w).values()).map(|(a, b)| a + b).collect()).unwrap();
        let it = Integrator::new(Params::new(3.0, 1.5, 1).unwrap(), Mode::Original, StepControl::until(1.0));
        let (trs, abort) = it.run_lockstep(&[u0, v0]);
        prop_assert!(abort.is_none());
        for k in 0..trs[0].len() {
            for (a, b) in trs[0].snapshots[k].values().iter().zip(trs[1].snapshots[k].values()) {
                prop_assert!(a <= &(b + 1e-12));
            }
        }
    }

    #[test]
    fn l1_and_linf_never_grow(c in caps(), two_d in any::<bool>()) {
        let dim = if two_d { 2 } else { 1 };
        let grid = Grid::new(dim, 2.0, if two_d { 24 } else { 64 }).unwrap();
        let u0 = cap_sum(grid, &c);
        let tr = Integrator::new(Params::new(3.0, 1.5, dim).unwrap(), Mode::Original, StepControl::until(1.0)).run(u0).trajectory;
        for w in tr.norms.windows(2) {
            prop_assert!(w[1].l1 <= w[0].l1 * (1.0 + 1e-12));
            prop_assert!(w[1].linf <= w[0].linf * (1.0 + 1e-12));
        }
    }

    #[test]
    fn hj_only_keeps_the_positivity_set(c in caps()) {
        let grid = Grid::new(1, 2.0, 64).unwrap();
        let u0 = cap_sum(grid, &c);
        let tr = Integrator::new(Params::new(3.0, 1.5, 1).unwrap(), Mode::HjOnly, StepControl::until(1.0)).run(u0).trajectory;
        let first = tr.positivity_set(0);
        let last = tr.positivity_set(tr.len() - 1);
        prop_assert!(last.missing_from(&first).is_empty());
        prop_assert!(first.missing_from(&last).len() <= 2);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distance_is_one_lipschitz((dim, n, mask) in mask_strategy()) {
        let s = set(dim, n, mask);
        let d = distance_transform(&s).unwrap();
        let g = *s.grid();
        for k in 0..g.len() {
            for nb in g.neighbors(k) {
                prop_assert!((d[k] - d[nb]).abs() <= g.dx() * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn enlarging_the_mask_never_lowers_vinf((dim, n, mask) in mask_strategy(), extra in proptest::collection::vec(any::<bool>(), 576), q in 1.1f64..6.0) {
        let small = set(dim, n, mask);
        let mut bigger: Vec<bool> = small.mask().iter().zip(&extra).map(|(&a, &b)| a || b).collect();
        if bigger.iter().all(|&m| m) {
            let hole = small.mask().iter().position(|&m| !m).unwrap();
            bigger[hole] = false;
        }
        let big = PositivitySet::from_mask(*small.grid(), bigger, 0.0).unwrap();
        let (a, b) = (build_vinf(&small, q).unwrap(), build_vinf(&big, q).unwrap());
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!(x <= y);
        }
    }

    #[test]
    fn vinf_is_the_closed_form_of_dist((dim, n, mask) in mask_strategy(), q in 1.1f64..10.0) {
        let prof = build_vinf(&set(dim, n, mask), q).unwrap();
        let c = (q - 1.0) / q.powf(q / (q - 1.0));
        for (&v, &d) in prof.values().iter().zip(prof.dist()) {
            let expect = c * d.powf(q / (q - 1.0));
            prop_assert!((v - expect).abs() <= 1e-12 * expect.max(1e-300));
            prop_assert!((v - cone_value(d, q)).abs() <= 1e-12 * expect.max(1e-300));
        }
    }

    #[test]
    fn exact_support_is_sampled(r in 0.1f64..1.5, n in 16usize..200) {
        let grid = Grid::<f64>::new(1, 2.0, n).unwrap();
        let data = InitialData::Cap { amplitude: 1.0, radius: r, exponent: 2.0 };
        let s = data.sample(grid).unwrap().positivity_set(0.0);
        for k in 0..n {
            let inside = grid.axis_coord(k).abs() < r;
            prop_assert_eq!(s.contains(k), inside);
        }
    }

    #[test]
    fn config_round_trip(
        p in 2.1f64..5.0, frac in 0.05f64..0.95, two_d in any::<bool>(), cells in 8usize..512,
        amplitude in 0.0f64..10.0, t_end in 0.1f64..1e4, spd in 1u32..16, mode in 0usize..4,
    ) {
        let dim = if two_d { 2 } else { 1 };
        let q = 1.0 + frac * (p - 2.0);
        let mode = [Mode::Original, Mode::Rescaled, Mode::HjOnly, Mode::PlapOnly][mode];
        let cfg = RunConfig::new(
            Params::new(p, q, dim).unwrap(),
            Grid::new(dim, 4.0, cells).unwrap(),
            InitialData::Cap { amplitude, radius: 1.0, exponent: 2.0 },
            mode,
            StepControl { snapshots_per_decade: spd, ..StepControl::until(t_end) },
        );
        let back = RunConfig::from_json(&cfg.to_json()).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.hash(), cfg.hash());
    }
}
