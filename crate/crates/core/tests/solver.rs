//! Scenario → run → series → fit/envelope workflow through the public API.

use eas_core::diagnostics::{fit_decay, lower_bound_envelope, EnergyWeights, COLUMNS};
use eas_core::fit::EnvelopeOptions;
use eas_core::grid::make_grid;
use eas_core::scenario::{make_initial, ScenarioKind, ScenarioSpec};
use eas_core::timestepper::{run, RunLabel, StepperConfig};
use eas_core::{Error, PhysParams, SimState};

fn setup(kind: ScenarioKind) -> (SimState, PhysParams) {
    let g = make_grid(2, 32, 30.0).unwrap();
    let p = PhysParams::new(0.5, 1.0, 1.0, 2).unwrap();
    let spec = ScenarioSpec {
        kind,
        amplitude: 0.05,
        width: 2.0,
        seed: 3,
        ..Default::default()
    };
    (make_initial(&spec, &g, &p).unwrap(), p)
}

fn cfg() -> StepperConfig {
    StepperConfig {
        dt: 0.1,
        output_stride: 5,
        ..Default::default()
    }
}

#[test]
fn run_records_on_stride_and_at_the_end() {
    let (s, p) = setup(ScenarioKind::LowerBound);
    let w = EnergyWeights::for_params(&p, 2.0);
    // 33 steps of 3.3/33 = 0.1; records at 0, 5, ..., 30 and at 33.
    let series = run(&s, &cfg(), &p, &w, 3.3, &RunLabel::default()).unwrap();
    let t = series.times();
    assert_eq!(t.len(), 8);
    assert_eq!(t[0], 0.0);
    assert!((t[7] - 3.3).abs() < 1e-12);
    assert_eq!(series.meta().steps, 33);

    let mass = series.column("mass").unwrap();
    assert!(mass.iter().all(|m| *m == mass[0]));
    assert!(series.records().iter().all(|r| r.is_finite()));
}

#[test]
fn csv_round_trips_every_value() {
    let (s, p) = setup(ScenarioKind::RandomPhase);
    let w = EnergyWeights::for_params(&p, 2.0);
    let series = run(&s, &cfg(), &p, &w, 2.0, &RunLabel::default()).unwrap();
    let csv = series.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), COLUMNS.join(","));
    for (line, rec) in lines.zip(series.records()) {
        let parsed: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(parsed, rec.values().to_vec());
    }
}

#[test]
fn fit_needs_points_in_the_window() {
    let (s, p) = setup(ScenarioKind::LowerBound);
    let w = EnergyWeights::for_params(&p, 2.0);
    let series = run(&s, &cfg(), &p, &w, 5.0, &RunLabel::default()).unwrap();
    let fit = fit_decay(&series, "L2_a", [1.0, 5.0]).unwrap();
    assert!(fit.exponent.is_finite() && fit.exponent < 0.0);
    assert_eq!(fit.points, 9);
    assert!(fit_decay(&series, "L2_a", [100.0, 200.0]).is_err());
    assert!(fit_decay(&series, "no_such_column", [1.0, 5.0]).is_err());
}

#[test]
fn envelope_refuses_zero_mean_data() {
    let (s, p) = setup(ScenarioKind::ZeroMean);
    let w = EnergyWeights::for_params(&p, 2.0);
    let series = run(&s, &cfg(), &p, &w, 2.0, &RunLabel::default()).unwrap();
    let r = lower_bound_envelope(&series, "L2_a", 0.5, [0.5, 2.0], EnvelopeOptions::default());
    assert!(matches!(r, Err(Error::Precondition(_))), "{r:?}");
}

#[test]
fn rejected_runs_report_no_partial_series() {
    let (s, p) = setup(ScenarioKind::LowerBound);
    let w = EnergyWeights::for_params(&p, 2.0);
    let f = run(&s, &cfg(), &p, &w, f64::NAN, &RunLabel::default()).unwrap_err();
    assert!(matches!(f.error, Error::InvalidParameter { name: "t_end", .. }));
    assert!(f.partial.is_none());

    let capped = StepperConfig { max_steps: 10, ..cfg() };
    let f = run(&s, &capped, &p, &w, 2.0, &RunLabel::default()).unwrap_err();
    assert!(matches!(f.error, Error::Precondition(_)));
    assert_eq!(f.last_good.t, s.t);
}
