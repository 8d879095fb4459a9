use doa::harness::{run_experiment, ExperimentConfig, RunOptions};

fn run(name: &str, toml: &str) {
    let config = ExperimentConfig::from_toml_str(toml).unwrap();
    let table = run_experiment(&config, &RunOptions::default()).unwrap();
    for p in &table.points {
        println!(
            "   {name}: prob {:.3} rmse {:>8.2} crb {:>8.2} gap {:>6.2} dB",
            p.prob_resolution, p.rmse_db, p.crb_db, p.rmse_db - p.crb_db
        );
    }
}

fn main() {
    for sep in [2.5f64, 2.8, 3.0] {
        for loading in ["3.0e-2", "1.0e-1", "3.0e-1"] {
            for seed in [23u64, 99, 7] {
                let lo = 90.0 - sep / 2.0 + 0.23;
                let hi = lo + sep;
                run(
                    &format!("sep={sep} load={loading} seed={seed}"),
                    &format!(
                        r#"
                        [geometry]
                        sensors = 20
                        [scenario]
                        doas_deg = [{lo}, {hi}]
                        snapshots = 20
                        [sweep]
                        axis = "snr_db"
                        values = [15.0]
                        [run]
                        trials = 200
                        base_seed = {seed}
                        grid_step_deg = 0.5
                        [[methods]]
                        variant = "jio"
                        rank = 4
                        alpha = 1.0
                        search = "rooted"
                        loading = {loading}
                        "#
                    ),
                );
            }
        }
    }
}
