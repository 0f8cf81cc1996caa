//! Small-budget runner examples: degenerate inputs with known outcomes.

use serde_json::{json, Value};
use spectral_core::spectra::SpectrumTrace;
use spectral_lab::{execute, ExperimentConfig, LabError, Report, RunOutput};

fn config(v: Value) -> ExperimentConfig {
    serde_json::from_value(v).expect("config parses")
}

fn artifact<'a>(out: &'a RunOutput, path: &str) -> &'a str {
    out.artifacts
        .iter()
        .find(|a| a.path == path)
        .unwrap_or_else(|| panic!("missing artifact {path}"))
        .text()
}

#[test]
fn robustness_zero_delta_row_is_exactly_one() {
    let cfg = config(json!({
        "kind": "robustness",
        "seeds": [0],
        "network": {"hidden": [16, 16]},
        "optimizer": {"lr": 1e-3},
        "steps": 300,
        "eval_every": 100,
        "target": {"frequencies": [1, 2, 3], "samples": 64},
        "robustness": {"deltas": [0.0, 0.5], "directions": 5, "scale": "rms"}
    }));
    let out = execute(&cfg).unwrap();
    let Report::Robustness(r) = &out.report else { panic!("wrong report") };
    assert_eq!(r.profile[0], vec![1.0; 3]);
    assert!(r.profile[1].iter().all(|v| v.is_finite() && *v >= 0.0));
    assert!(artifact(&out, "profile_mean.csv").starts_with("delta,"));
}

#[test]
fn noise_free_validation_has_no_early_dip() {
    let cfg = config(json!({
        "kind": "noise-injection",
        "seeds": [0],
        "network": {"hidden": [32, 32]},
        "optimizer": {"lr": 1e-3},
        "steps": 400,
        "eval_every": 10,
        "noise": {
            "frequencies": [50.0], "betas": [0.0], "dim": 2, "per_class": 60,
            "separation": 4.0, "data_seed": 1, "train_fraction": 0.8, "split_seed": 2
        }
    }));
    let out = execute(&cfg).unwrap();
    let Report::NoiseInjection(r) = &out.report else { panic!("wrong report") };
    assert_eq!((r.train_size, r.val_size), (96, 24));
    let c = &r.cells[0];
    assert!(c.best_fraction >= 0.9, "best at {:.2} of the run", c.best_fraction);
    assert!(c.final_val_loss <= 1.05 * c.best_val_loss + 1e-12);
}

#[test]
fn noise_free_kernel_run_converges_to_clean_spectrum() {
    let cfg = config(json!({
        "kind": "kernel-noise",
        "seeds": [0],
        "network": {"hidden": [64, 64, 64]},
        "optimizer": {"lr": 1e-3},
        "steps": 10000,
        "eval_every": 200,
        "target": {"frequencies": [1, 2], "samples": 20},
        "kernel": {"points": 20, "sigma": 0.2, "gamma": 2.0, "beta": 0.0}
    }));
    let out = execute(&cfg).unwrap();
    let Report::KernelNoise(r) = &out.report else { panic!("wrong report") };
    let trace = SpectrumTrace::<f64>::from_csv(artifact(&out, "seed_0/spectrum.csv")).unwrap();
    let last = trace.rows().last().unwrap();
    let clean: Vec<f64> = artifact(&out, "target_spectrum.csv")
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    let err: f64 = last.iter().zip(&clean).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let norm: f64 = clean.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(err <= 0.05 * norm, "spectrum error {err} vs norm {norm}");
    assert!(r.final_val_loss < 1e-2);
}

#[test]
fn volume_is_zero_at_and_above_nyquist() {
    let cfg = config(json!({
        "kind": "volume-mc",
        "seeds": [0],
        "network": {"hidden": [8, 8]},
        "volume": {"samples": 200, "epsilon": 0.05, "bound": 1.0, "cutoffs": [2, 32, 40], "grid": 64}
    }));
    let out = execute(&cfg).unwrap();
    let Report::VolumeMc(r) = &out.report else { panic!("wrong report") };
    assert_eq!(&r.estimates[1..], &[0.0, 0.0]);
    assert!(r.estimates[0] > 0.0);
    assert!(r.nonincreasing);
}

#[test]
fn kind_mismatch_is_invalid_input() {
    let cfg = config(json!({
        "kind": "robustness",
        "seeds": [0],
        "network": {"hidden": [8]},
        "steps": 10,
        "eval_every": 5,
        "target": {"frequencies": [1], "samples": 16}
    }));
    let err = execute(&cfg).unwrap_err();
    assert!(matches!(err, LabError::Config(_)), "{err}");
    assert_eq!(err.exit_code(), 2);
    let cfg = config(json!({"kind": "spectral-bias", "seeds": [0], "network": {"hidden": [8]}, "steps": 10, "eval_every": 5,
        "target": {"frequencies": [1], "samples": 16}}));
    let err = spectral_lab::runners::robustness::run(&cfg).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}
