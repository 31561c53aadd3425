use safepath::estimation::{em_fit_default, mse_fit, test_log_likelihood, EmConfig};
use safepath::io;
use safepath::planner::{plan, ArousalModel, PlannerConfig, PlanningScenario};
use safepath::synth::{default_theta, generate, split_dataset, ScenarioConfig};

#[test]
fn generate_store_fit_and_plan() {
    let config = ScenarioConfig { seed: 21, ..Default::default() };
    let (data, truth) = generate(&config, 10, Some(800), &default_theta()).unwrap();
    let (train, test) = split_dataset(&data, 0.7, 21).unwrap();
    assert_eq!((train.sequences.len(), test.sequences.len()), (7, 3));

    let dir = tempfile::tempdir().unwrap();
    io::write_dataset(&dir.path().join("train"), &train).unwrap();
    io::write_ground_truth(&dir.path().join("truth"), &truth).unwrap();
    let train_back = io::read_dataset(&dir.path().join("train")).unwrap();
    assert_eq!(train_back, train);
    assert_eq!(io::read_ground_truth(&dir.path().join("truth")).unwrap(), truth);

    let fit = em_fit_default(&train_back, &EmConfig { seed: 2, ..Default::default() }).unwrap();
    assert!(fit.converged);
    let report_path = dir.path().join("fit.json");
    io::write_json(&report_path, &fit).unwrap();
    let fit: safepath::estimation::FitReport = io::read_json(&report_path).unwrap();

    let baseline = mse_fit(&train).unwrap();
    let ll_p = test_log_likelihood(&fit.theta_star, &test, &fit.standardization).unwrap();
    let ll_b = test_log_likelihood(&baseline.as_params(), &test, &train.standardization).unwrap();
    assert!(ll_p > ll_b);

    let scenario: PlanningScenario =
        serde_json::from_str(r#"{"human_position":[0,0,1.2],"start":[-30,4],"goal":[30,4],"v_max":5,"a_max":3}"#)
            .unwrap();
    let model = ArousalModel::from_report(&fit).unwrap();
    let result = plan(&scenario, &model, &PlannerConfig { starts: 3, ..Default::default() }).unwrap();
    assert_eq!(result.curve.start(), scenario.start);
    assert_eq!(result.curve.end(), scenario.goal);
    assert!(result.constraints.is_feasible(1e-9));
    assert!(result.min_human_distance > 4.0);
}
