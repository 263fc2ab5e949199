use firstorder::harness::{read_records, run_experiment, ExperimentConfig};
use firstorder::loss::{curvature_matrix, CurvatureMatrix, CurvatureProvenance, LossKind};
use firstorder::model::{generate_design, generate_linear, generate_logistic, CovarianceModel, Dataset, DesignKind, GroundTruth};
use nalgebra::DVector;

#[test]
fn linear_dataset_round_trips_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let cov = CovarianceModel::ar1(12, 0.4).unwrap();
    let truth = GroundTruth::sparse(12, 3, 0.7).unwrap();
    let data = generate_linear(generate_design(&cov, 30, DesignKind::Rademacher, 8).unwrap(), &truth.beta_star, 0.5, 8)
        .unwrap();
    data.save(dir.path()).unwrap();
    let back = Dataset::load(dir.path()).unwrap();
    assert_eq!(back.x, data.x);
    assert_eq!(back.y, data.y);
    assert_eq!(back.noise, data.noise);
    assert_eq!(back.beta_star, data.beta_star);
    assert_eq!((back.design_kind, back.model_kind, back.seed), (data.design_kind, data.model_kind, data.seed));
}

#[test]
fn logistic_dataset_round_trips_without_noise_file() {
    let dir = tempfile::tempdir().unwrap();
    let cov = CovarianceModel::identity(6);
    let beta = DVector::from_element(6, 0.2);
    let data = generate_logistic(generate_design(&cov, 25, DesignKind::Gaussian, 2).unwrap(), &beta, 2).unwrap();
    data.save(dir.path()).unwrap();
    assert!(!dir.path().join("eps.bin").exists());
    let back = Dataset::load(dir.path()).unwrap();
    assert_eq!(back.y, data.y);
    assert!(back.noise.is_none());
}

#[test]
fn truncated_files_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cov = CovarianceModel::identity(4);
    let beta = DVector::from_element(4, 1.0);
    let data = generate_linear(generate_design(&cov, 10, DesignKind::Gaussian, 1).unwrap(), &beta, 1.0, 1).unwrap();
    data.save(dir.path()).unwrap();
    let x = std::fs::read(dir.path().join("X.bin")).unwrap();
    std::fs::write(dir.path().join("X.bin"), &x[..x.len() - 8]).unwrap();
    assert!(Dataset::load(dir.path()).is_err());
}

#[test]
fn curvature_matrix_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cov = CovarianceModel::ar1(5, 0.3).unwrap();
    let beta = DVector::from_vec(vec![0.5, 0.0, -0.3, 0.0, 0.2]);
    let k = curvature_matrix(LossKind::Logistic, &cov, &beta, DesignKind::Gaussian).unwrap();
    let path = dir.path().join("K.bin");
    k.save(&path).unwrap();
    let back = CurvatureMatrix::load(&path, 5, CurvatureProvenance::SteinQuadrature).unwrap();
    assert_eq!(back.matrix.to_dense(), k.matrix.to_dense());
}

#[test]
fn experiment_outputs_are_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::parse(&format!(
        "experiment = coverage\ngrid = 80,60,2; 160,120,2; 320,240,2\nreplications = 5\nthreads = 1\noutput_dir = {}\n",
        dir.path().display()
    ))
    .unwrap();
    let out = run_experiment(&cfg).unwrap();
    let records = read_records(&dir.path().join("records.csv")).unwrap();
    assert_eq!(records, out.records);
    for name in ["summary.json", "rates.csv", "timings.csv", "plots/diff_sigma_q50.csv"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    let covered = records.iter().filter(|r| r.beta_converged && r.eta_converged && r.covered == Some(true)).count();
    assert_eq!(summary["coverage"]["count"], covered);
    let rate = summary["coverage"]["rate"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&rate));
    assert!(summary["coverage"]["se"].as_f64().unwrap() >= 0.0);
    let rates = std::fs::read_to_string(dir.path().join("rates.csv")).unwrap();
    assert!(rates.starts_with("metric,slope,intercept,stderr,points"));
    assert!(rates.contains("diff_sigma,"));
}
