//! Scratch calibration sweeps used while sizing the acceptance scenarios.

use doa::harness::{run_experiment, ExperimentConfig, RunOptions};

fn run(name: &str, toml: &str) {
    let config = ExperimentConfig::from_toml_str(toml).unwrap();
    let started = std::time::Instant::now();
    let table = run_experiment(&config, &RunOptions::default()).unwrap();
    println!("== {name} ({:.1?}s, faults {})", started.elapsed().as_secs_f64(), table.faults);
    for p in &table.points {
        println!(
            "   axis {:>6}: {:<14} prob {:.3} rmse {:>8.2} dB crb {:>8.2} dB rank {:.1}",
            p.axis_value, p.method, p.prob_resolution, p.rmse_db, p.crb_db, p.mean_rank
        );
    }
}

fn main() {
    let which = std::env::args().nth(1).unwrap_or_default();

    if which.is_empty() || which == "corr" {
        // Criterion-8 shape: correlated pair, M=10, N=10.
        for sep in [8.0, 10.0, 12.0] {
            let lo = 90.0 - sep / 2.0;
            let hi = 90.0 + sep / 2.0;
            run(
                &format!("correlated sep={sep}"),
                &format!(
                    r#"
                    [geometry]
                    sensors = 10
                    [scenario]
                    doas_deg = [{lo}, {hi}]
                    correlation = 0.9
                    modulation = "gaussian"
                    snapshots = 10
                    [sweep]
                    axis = "snr_db"
                    values = [-5.0, 0.0, 5.0, 10.0, 15.0]
                    [run]
                    trials = 200
                    base_seed = 42
                    grid_step_deg = 0.5
                    [[methods]]
                    variant = "jio"
                    rank = 4
                    alpha = 1.0
                    [[methods]]
                    variant = "jio-fba"
                    rank = 4
                    alpha = 1.0
                    [[methods]]
                    variant = "capon"
                    alpha = 1.0
                    "#
                ),
            );
        }
    }

    if which.is_empty() || which == "qw" {
        // Criterion-9 shape: M=20, N=20, q=4, SNR 0 dB, q_w sweep.
        for sep in [4.0, 5.0, 6.0] {
            let d0 = 90.0 - 1.5 * sep;
            let doas: Vec<String> = (0..4).map(|k| format!("{}", d0 + k as f64 * sep)).collect();
            run(
                &format!("qw sep={sep}"),
                &format!(
                    r#"
                    [geometry]
                    sensors = 20
                    [scenario]
                    doas_deg = [{}]
                    snapshots = 20
                    noise_power = 1.0
                    [sweep]
                    axis = "q_w"
                    values = [4.0, 3.0]
                    [run]
                    trials = 200
                    base_seed = 7
                    grid_step_deg = 0.5
                    [[methods]]
                    variant = "music"
                    [[methods]]
                    variant = "jio"
                    rank = 4
                    alpha = 1.0
                    [[methods]]
                    variant = "capon"
                    alpha = 1.0
                    "#,
                    doas.join(", ")
                ),
            );
        }
    }

    if which.is_empty() || which == "rank" {
        // Criterion-7 shape: adaptive rank versus fixed ranks, M=10, SNR 5 dB.
        run(
            "adaptive rank",
            r#"
            [geometry]
            sensors = 10
            [scenario]
            doas_deg = [85.0, 95.0]
            snapshots = 20
            [sweep]
            axis = "snr_db"
            values = [5.0]
            [run]
            trials = 200
            base_seed = 11
            grid_step_deg = 0.5
            [[methods]]
            variant = "jio"
            rank_range = [3, 7]
            alpha = 1.0
            [[methods]]
            variant = "jio"
            rank = 3
            alpha = 1.0
            [[methods]]
            variant = "jio"
            rank = 4
            alpha = 1.0
            [[methods]]
            variant = "jio"
            rank = 5
            alpha = 1.0
            [[methods]]
            variant = "jio"
            rank = 6
            alpha = 1.0
            [[methods]]
            variant = "jio"
            rank = 7
            alpha = 1.0
            "#,
        );
    }

    if which.is_empty() || which == "crb" {
        // Criterion-10 shape: q=2, M=20, N=20 RMSE against the bound.
        for (label, extra) in [
            ("grid", ""),
            ("rooted", "search = \"rooted\"\ncoarse_step_deg = 0.5"),
        ] {
            run(
                &format!("crb {label}"),
                &format!(
                    r#"
                    [geometry]
                    sensors = 20
                    [scenario]
                    doas_deg = [88.5, 91.5]
                    snapshots = 20
                    [sweep]
                    axis = "snr_db"
                    values = [-5.0, 0.0, 5.0, 10.0, 15.0]
                    [run]
                    trials = 200
                    base_seed = 23
                    grid_step_deg = 0.5
                    [[methods]]
                    variant = "jio"
                    rank = 4
                    alpha = 1.0
                    {extra}
                    "#
                ),
            );
        }
    }

    if which.is_empty() || which == "coh" {
        // Coherent pair: FBA resolves, plain does not. M=10, N=20, 10 dB.
        run(
            "coherent tau=1",
            r#"
            [geometry]
            sensors = 10
            [scenario]
            doas_deg = [84.0, 96.0]
            correlation = 1.0
            modulation = "gaussian"
            snapshots = 20
            [sweep]
            axis = "snr_db"
            values = [10.0]
            [run]
            trials = 200
            base_seed = 31
            grid_step_deg = 0.5
            [[methods]]
            variant = "jio-fba"
            rank = 4
            alpha = 1.0
            [[methods]]
            variant = "jio"
            rank = 4
            alpha = 1.0
            [[methods]]
            variant = "jio-rls-fba"
            rank = 4
            alpha = 1.0
            "#,
        );
    }
}
