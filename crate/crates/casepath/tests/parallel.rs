use casepath::parallel::{par_map, parallel_loo_cv, pool, resolve_threads};
use casepath::sim::{simulate, SimSpec};
use casepath_core::{build_lambda_path, exact_loo_cv, lambda_grid};

#[test]
fn thread_count_does_not_change_results() {
    let data = simulate(SimSpec { n: 25, p: 5, seed: 8 }).unwrap().data;
    let lambdas = [5.0, 1.0, 0.2, 0.04];
    let (one, e1) = parallel_loo_cv(&pool(1).unwrap(), &data, 0.3, &lambdas).unwrap();
    let (four, e4) = parallel_loo_cv(&pool(4).unwrap(), &data, 0.3, &lambdas).unwrap();
    assert_eq!(one.rcv, four.rcv);
    assert_eq!(one.gacv, four.gacv);
    assert_eq!(e1, e4);
    for (a, b) in one.points.iter().zip(&four.points) {
        assert_eq!(a.predictions, b.predictions);
    }
}

#[test]
fn matches_the_sequential_curve() {
    let data = simulate(SimSpec { n: 18, p: 3, seed: 9 }).unwrap().data;
    let lambdas = [3.0, 0.7, 0.1];
    let (par, _) = parallel_loo_cv(&pool(3).unwrap(), &data, 0.7, &lambdas).unwrap();
    let seq = exact_loo_cv(&data, 0.7, &lambdas).unwrap();
    for k in 0..3 {
        assert!((par.rcv[k] - seq.rcv[k]).abs() <= 1e-12);
        assert_eq!(par.elbow_sizes[k], seq.elbow_sizes[k]);
    }
    assert!(parallel_loo_cv(&pool(1).unwrap(), &data, 0.7, &[]).is_err());
}

#[test]
fn par_map_keeps_index_order() {
    let v = par_map(&pool(4).unwrap(), 100, |i| Ok(i * i)).unwrap();
    assert_eq!(v, (0..100).map(|i| i * i).collect::<Vec<_>>());
}

#[test]
fn explicit_thread_flag_wins() {
    assert_eq!(resolve_threads(Some(3)).unwrap(), 3);
    assert!(resolve_threads(Some(0)).is_err());
    assert!(resolve_threads(None).unwrap() >= 1);
}

#[test]
fn gacv_gap_is_wider_at_extreme_quantiles() {
    let workers = pool(resolve_threads(None).unwrap()).unwrap();
    let gap = |data: &casepath_core::Dataset, tau: f64| {
        let grid = lambda_grid(&build_lambda_path(data, tau, 1e-4).unwrap(), 100).unwrap();
        let (c, _) = parallel_loo_cv(&workers, data, tau, &grid).unwrap();
        let d: Vec<f64> = c.rcv.iter().zip(&c.gacv).filter_map(|(r, g)| g.map(|g| (r - g).abs())).collect();
        d.iter().sum::<f64>() / d.len() as f64
    };
    let mut wins = 0;
    for seed in 0..20 {
        let data = simulate(SimSpec { n: 50, p: 30, seed }).unwrap().data;
        if gap(&data, 0.01) > gap(&data, 0.5) {
            wins += 1;
        }
    }
    assert!(wins >= 18, "{wins} of 20");
}
