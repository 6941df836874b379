use thymodyn_core::abs::{run_abs, AbsConfig};
use thymodyn_core::model::{ModelParams, ProliferationBasis, StateVector};
use thymodyn_core::sd::{run_sd, SdConfig};
use thymodyn_core::trajectory::{Sample, Trajectory};
use thymodyn_core::validation::{sse, TrecDataset};
use thymodyn_core::{ActivesTable, Scenario};

fn zeros() -> ActivesTable {
    ActivesTable::zeros()
}

fn sd_with(dt: f64, p: &ModelParams) -> Trajectory {
    run_sd(
        &SdConfig {
            dt,
            ..SdConfig::default()
        },
        p,
        &zeros(),
    )
    .unwrap()
}

/// Max over samples of |a - b|, scaled by the largest reference value.
fn max_rel_err(a: &Trajectory, reference: &Trajectory, f: fn(&Sample) -> f64) -> f64 {
    let scale = reference.samples.iter().map(f).fold(0.0, f64::max);
    a.samples
        .iter()
        .zip(&reference.samples)
        .map(|(x, y)| (f(x) - f(y)).abs() / scale)
        .fold(0.0, f64::max)
}

#[test]
fn rk4_converges_at_fourth_order_on_every_scenario() {
    for s in Scenario::ALL {
        let p = s.params();
        let reference = sd_with(1.0 / 4096.0, &p);
        let coarse = sd_with(1.0 / 64.0, &p);
        let fine = sd_with(1.0 / 128.0, &p);
        for (name, f) in [
            ("n", (|s: &Sample| s.n) as fn(&Sample) -> f64),
            ("np", |s: &Sample| s.np),
        ] {
            let ratio = max_rel_err(&coarse, &reference, f) / max_rel_err(&fine, &reference, f);
            assert!(ratio >= 8.0, "scenario {s} {name}: error ratio {ratio}");
        }
    }
}

/// N(t) for dN/dt = s0 e^(-a t) - k N, by integrating factor.
fn closed_form_naive(p: &ModelParams, n0: f64, t: f64) -> f64 {
    let k = p.lambda_n + p.mu_n;
    let a = p.lambda_t;
    n0 * (-k * t).exp() + p.s0 / (k - a) * ((-a * t).exp() - (-k * t).exp())
}

#[test]
fn closed_form_oracle_agrees_with_fine_euler() {
    let p = Scenario::Two.params();
    let h = 1e-6;
    let mut n = 3673.0;
    for i in 0..1_000_000 {
        let t = i as f64 * h;
        n += h * (p.s0 * (-p.lambda_t * t).exp() - (p.lambda_n + p.mu_n) * n);
    }
    let exact = closed_form_naive(&p, 3673.0, 1.0);
    assert!(
        ((n - exact) / exact).abs() < 1e-5,
        "euler {n} closed form {exact}"
    );
}

#[test]
fn linear_naive_equation_matches_closed_form() {
    let p = ModelParams {
        c: 0.0,
        lambda_mn: 0.0,
        ..Scenario::Two.params()
    };
    assert_eq!((p.s_bar, p.b), (0.0, 0.0));
    let tr = run_sd(&SdConfig::default(), &p, &zeros()).unwrap();
    for s in &tr.samples {
        let exact = closed_form_naive(&p, 3673.0, s.t);
        let rel = ((s.n - exact) / exact).abs();
        assert!(rel < 1e-6, "t = {}: rel err {rel}", s.t);
    }
}

#[test]
fn proliferation_set_point_is_stationary_and_attracting() {
    let base = ModelParams {
        s0: 0.0,
        lambda_mn: 0.0,
        ..Scenario::Three.params()
    };
    let p = ModelParams {
        c: ProliferationBasis::MuNp.rate(&base),
        ..base
    };
    let from = |np: f64| {
        let cfg = SdConfig {
            initial: StateVector::new(0.0, 0.0, np, 0.0),
            ..SdConfig::default()
        };
        run_sd(&cfg, &p, &zeros()).unwrap()
    };
    let still = from(300.0);
    for s in &still.samples {
        assert!((s.np - 300.0).abs() < 1e-9, "t = {}: {}", s.t, s.np);
    }
    for start in [150.0, 600.0] {
        let tr = from(start);
        let gaps: Vec<f64> = tr.samples.iter().map(|s| (s.np - 300.0).abs()).collect();
        assert!(
            gaps.windows(2).all(|w| w[1] <= w[0]),
            "not monotone from {start}"
        );
        assert!(
            gaps.last().unwrap() < &1.0,
            "from {start}: ends {}",
            gaps.last().unwrap()
        );
    }
}

#[test]
fn sse_is_stable_under_supersampling() {
    let ds = TrecDataset::embedded();
    for s in Scenario::ALL {
        let p = s.params();
        let at = |record_every: f64| {
            let cfg = SdConfig {
                record_every,
                ..SdConfig::default()
            };
            sse(&run_sd(&cfg, &p, &zeros()).unwrap(), &ds).unwrap()
        };
        let base = at(0.25);
        for every in [0.125, 1.0 / 32.0] {
            let rel = ((at(every) - base) / base).abs();
            assert!(rel < 1e-3, "scenario {s} record_every {every}: {rel}");
        }
    }
}

#[test]
fn abs_seed_determinism_and_noise() {
    let cfg = AbsConfig {
        horizon: 20.0,
        record_every: 1.0,
        replicates: 6,
        seed: 31,
        ..AbsConfig::default()
    };
    let p = Scenario::Three.params();
    let a = run_abs(&cfg, &p, &zeros()).unwrap();
    let b = run_abs(&cfg, &p, &zeros()).unwrap();
    assert_eq!(a, b);
    assert!(a
        .stats
        .points
        .iter()
        .filter(|p| p.t >= 1.0)
        .all(|p| p.sd_np > 0.0));
}

#[test]
fn coarser_agents_keep_the_mean_and_add_noise() {
    let p = Scenario::Two.params();
    let run = |scale: f64| {
        let cfg = AbsConfig {
            horizon: 40.0,
            record_every: 1.0,
            seed: 8,
            ..AbsConfig::with_scale(scale)
        };
        run_abs(&cfg, &p, &zeros()).unwrap().stats
    };
    let fine = run(1.0);
    let coarse = run(10.0);
    let mut var_ratio = Vec::new();
    for (f, c) in fine
        .points
        .iter()
        .zip(&coarse.points)
        .filter(|(f, _)| f.t >= 5.0)
    {
        assert!(
            ((c.mean_np - f.mean_np) / f.mean_np).abs() < 0.1,
            "t = {}",
            f.t
        );
        assert!(
            ((c.mean_n - f.mean_n) / f.mean_n).abs() < 0.1,
            "t = {}",
            f.t
        );
        var_ratio.push((c.sd_n / f.sd_n).powi(2));
    }
    // cell-unit variance grows roughly with cells per agent
    let mean_ratio = var_ratio.iter().sum::<f64>() / var_ratio.len() as f64;
    assert!(mean_ratio > 3.0, "variance ratio {mean_ratio}");
}

#[test]
fn abs_fit_varies_across_seeds_while_sd_does_not() {
    let ds = TrecDataset::embedded();
    let p = Scenario::Three.params();
    let sd_sse: Vec<f64> = (0..3)
        .map(|_| sse(&run_sd(&SdConfig::default(), &p, &zeros()).unwrap(), &ds).unwrap())
        .collect();
    assert!(sd_sse.windows(2).all(|w| w[0] == w[1]));
    let abs_sse: Vec<f64> = (0..10)
        .map(|seed| {
            let cfg = AbsConfig {
                horizon: 60.0,
                replicates: 1,
                seed,
                ..AbsConfig::default()
            };
            sse(
                &run_abs(&cfg, &p, &zeros()).unwrap().stats.mean_trajectory(),
                &ds,
            )
            .unwrap()
        })
        .collect();
    let mean = abs_sse.iter().sum::<f64>() / 10.0;
    let var = abs_sse.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 9.0;
    assert!(var > 0.0);
}
