use mapcap::bounds::{delay_tail_bound, transient_capacity_bounds};
use mapcap::channel::{rayleigh_log_mgf, IncrementLaw};
use mapcap::control::{plan_transitions, Orientation};
use mapcap::copula::{check_copula_axioms, CopulaSpec, GridCopula};
use mapcap::markov::{MarginalDistribution, OrderedStateSpace, TransitionMatrix};
use mapcap::model::MarkovAdditiveModel;
use mapcap::numeric::normal;
use mapcap::order::{cx_compare, CxVerdict, EnumerationConfig, PathEnumeration};
use mapcap::sim::simulate_ensemble;
use mapcap::spectral::spectral_at;
use proptest::prelude::*;

fn simplex(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..1.0, n).prop_map(|w| {
        let s: f64 = w.iter().sum();
        w.into_iter().map(|x| x / s).collect()
    })
}

fn frechet() -> impl Strategy<Value = CopulaSpec<f64>> {
    simplex(3).prop_map(|w| CopulaSpec::frechet(w[0], w[1], w[2]).unwrap())
}

fn stochastic(n: usize) -> impl Strategy<Value = TransitionMatrix<f64>> {
    prop::collection::vec(simplex(n), n).prop_map(|rows| TransitionMatrix::from_rows(&rows).unwrap())
}

/// Small ergodic chains with two-point increment laws.
fn discrete_model() -> impl Strategy<Value = MarkovAdditiveModel<f64>> {
    (2usize..4).prop_flat_map(|n| {
        (
            stochastic(n),
            prop::collection::vec((0.0f64..5.0, 0.1f64..5.0, 0.1f64..0.9), n * n),
        )
            .prop_map(move |(p, atoms)| {
                let laws = (0..n)
                    .map(|i| {
                        (0..n)
                            .map(|j| {
                                let (lo, gap, q) = atoms[i * n + j];
                                IncrementLaw::discrete(vec![lo, lo + gap], vec![q, 1.0 - q]).unwrap()
                            })
                            .collect()
                    })
                    .collect();
                MarkovAdditiveModel::homogeneous(p, laws).unwrap()
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn frechet_mixtures_are_copulas(c in frechet()) {
        let r = check_copula_axioms(&c, 32);
        prop_assert!(r.boundary < 1e-12 && r.rectangle > -1e-12 && r.envelope < 1e-12, "{r:?}");
        let g = GridCopula::sample(&c, 32);
        prop_assert!(g.max_abs_diff_to(&c) < 1e-12);
    }

    #[test]
    fn gaussian_copula_respects_frechet_bounds(rho in -0.95f64..0.95) {
        let c = CopulaSpec::gaussian_bivariate(rho).unwrap();
        let r = check_copula_axioms(&c, 16);
        prop_assert!(r.boundary < 1e-10 && r.rectangle > -1e-10 && r.envelope < 1e-10, "{r:?}");
    }

    #[test]
    fn planned_chains_are_stochastic_and_keep_the_marginal(
        c in frechet(),
        pi in (2usize..5).prop_flat_map(simplex),
    ) {
        let pi = MarginalDistribution::new(pi).unwrap();
        let states = OrderedStateSpace::indexed(pi.len());
        let plan = plan_transitions(&[c.clone(), c], &pi, &states, None, Orientation::Capacity).unwrap();
        for p in &plan.transitions {
            for row in p.rows() {
                prop_assert!(row.iter().all(|x| *x >= -1e-12));
                prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
            prop_assert!(p.propagate(&pi).max_abs_diff(&pi) < 1e-12);
        }
    }

    #[test]
    fn cumulant_is_convex_and_vanishes_at_zero(model in discrete_model(), a in -1.5f64..1.5, b in -1.5f64..1.5) {
        let k = |t: f64| spectral_at(&model, t, 0.0).unwrap().kappa;
        prop_assert!(k(0.0).abs() < 1e-12);
        let mid = k(0.5 * (a + b));
        prop_assert!(mid <= 0.5 * (k(a) + k(b)) + 1e-9 * (1.0 + mid.abs()));
    }

    #[test]
    fn cumulant_slope_at_zero_is_the_mean(model in discrete_model()) {
        let h = 1e-5;
        let slope = (spectral_at(&model, h, 0.0).unwrap().kappa - spectral_at(&model, -h, 0.0).unwrap().kappa) / (2.0 * h);
        let mean = model.mean_increment().unwrap();
        prop_assert!((slope - mean).abs() < 1e-6 * (1.0 + mean), "slope {slope} mean {mean}");
    }

    #[test]
    fn delay_band_is_ordered_and_decreasing(model in discrete_model(), frac in 0.3f64..0.9) {
        let lambda = frac * model.mean_increment().unwrap();
        let grid: Vec<f64> = (0..20).map(|k| 0.5 * k as f64).collect();
        let varpi = model.stationary().unwrap();
        match delay_tail_bound(&model, lambda, &varpi, &grid) {
            Ok(c) => {
                for k in 0..grid.len() {
                    prop_assert!(0.0 <= c.lower[k] && c.lower[k] <= c.upper[k] && c.upper[k] <= 1.0);
                    if k > 0 {
                        prop_assert!(c.lower[k] <= c.lower[k - 1] && c.upper[k] <= c.upper[k - 1]);
                    }
                }
            }
            Err(mapcap::Error::NoRoot) => {}
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn transient_envelope_brackets_the_mean(model in discrete_model(), t in 1usize..200, eps in 1e-4f64..0.5) {
        let mean = model.mean_increment().unwrap();
        for j0 in 0..model.dim() {
            let e = transient_capacity_bounds(&model, j0, t, eps).unwrap();
            prop_assert!(e.c_lower <= e.c_upper);
            if t >= 100 {
                prop_assert!(e.c_lower <= mean + 1e-9 && mean <= e.c_upper + 1e-9);
            }
        }
    }

    #[test]
    fn stop_loss_is_convex_and_decreasing(model in discrete_model(), horizon in 1usize..4) {
        let varpi = model.stationary().unwrap();
        let e = PathEnumeration::new(&model, &varpi, horizon, &EnumerationConfig::default()).unwrap();
        prop_assert!((e.total_mass() - 1.0).abs() < 1e-12);
        let (lo, hi) = (e.min_value(), e.max_value());
        let pts: Vec<f64> = (0..=20).map(|k| lo + (hi - lo) * k as f64 / 20.0).collect();
        let sl: Vec<f64> = pts.iter().map(|a| e.stop_loss(*a)).collect();
        for w in sl.windows(3) {
            prop_assert!(w[1] <= w[0] + 1e-9);
            prop_assert!(w[1] <= 0.5 * (w[0] + w[2]) + 1e-9);
        }
        let self_cmp = cx_compare(&model, &model, &varpi, horizon, None, &EnumerationConfig::default()).unwrap();
        prop_assert_eq!(self_cmp.verdict, CxVerdict::Equal);
    }

    #[test]
    fn rayleigh_mgf_is_log_convex(snr in 0.01f64..100.0, a in -5.0f64..5.0, b in -5.0f64..5.0) {
        prop_assert!(rayleigh_log_mgf(0.0, snr).abs() < 1e-13);
        let mid = rayleigh_log_mgf(0.5 * (a + b), snr);
        prop_assert!(mid <= 0.5 * (rayleigh_log_mgf(a, snr) + rayleigh_log_mgf(b, snr)) + 1e-10);
    }

    #[test]
    fn normal_quantile_inverts_cdf(p in 1e-12f64..(1.0 - 1e-12)) {
        let x = normal::quantile(p);
        prop_assert!((normal::cdf(x) - p).abs() <= 1e-12 * p.min(1.0 - p).max(1e-3));
    }

    #[test]
    fn ensembles_are_reproducible(model in discrete_model(), seed in any::<u64>()) {
        let varpi = model.stationary().unwrap();
        let a = simulate_ensemble(&model, &varpi, 20, 8, seed).unwrap();
        let b = simulate_ensemble(&model, &varpi, 20, 8, seed).unwrap();
        prop_assert_eq!(a, b);
    }
}
