use std::path::Path;
use std::process::Command;

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_firstorder"))
}

fn run(cmd: &mut Command) -> (i32, String) {
    let out = cmd.output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout).to_string() + &String::from_utf8_lossy(&out.stderr);
    (out.status.code().unwrap_or(-1), text)
}

fn generate(dir: &Path) {
    let (code, text) = run(cli().args(["generate", "--n", "80", "--p", "40", "--s", "3", "--seed", "5", "--out"]).arg(dir));
    assert_eq!(code, 0, "{text}");
}

#[test]
fn generate_fit_expand_and_diagnostics() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    generate(&data);
    for (sub, file) in [("fit", "beta_hat.bin"), ("expand", "eta.bin")] {
        let out = tmp.path().join(sub);
        let (code, text) = run(cli().args([sub, "--data"]).arg(&data).arg("--out").arg(&out));
        assert_eq!(code, 0, "{text}");
        assert_eq!(std::fs::metadata(out.join(file)).unwrap().len(), 40 * 8);
        assert!(text.contains("\"converged\": true"), "{text}");
    }
    let (code, text) = run(cli().args(["fit", "--penalty", "group_lasso", "--group-size", "4", "--data"]).arg(&data));
    assert_eq!(code, 0, "{text}");
    let (code, text) = run(cli().args(["risk-identity", "--mc", "500", "--data"]).arg(&data));
    assert_eq!(code, 0, "{text}");
    assert!(text.contains("bound_holds"));
    let (code, text) = run(cli().args(["coverage", "--coordinate", "1", "--data"]).arg(&data));
    assert_eq!(code, 0, "{text}");
    assert!(text.contains("theta_hat"));
}

#[test]
fn experiment_is_reproducible_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("exp.txt");
    std::fs::write(&cfg, "experiment = rates\ngrid = 60,80,2; 120,160,2; 240,320,2\nreplications = 4\nmaster_seed = 3\n").unwrap();
    let mut files = Vec::new();
    for threads in ["1", "3"] {
        let out = tmp.path().join(format!("out{threads}"));
        let (code, text) = run(cli().arg("experiment").arg(&cfg).args(["--threads", threads, "--out"]).arg(&out));
        assert_eq!(code, 0, "{text}");
        files.push(std::fs::read(out.join("records.csv")).unwrap());
    }
    assert_eq!(files[0], files[1]);
    let (code, text) = run(cli().arg("rate-fit").arg(tmp.path().join("out1/records.csv")));
    assert_eq!(code, 0, "{text}");
    assert!(text.contains("slope"));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.txt");
    std::fs::write(&bad, "experiment = rates\ngrid = 10,20,30\n").unwrap();
    assert_eq!(run(cli().arg("experiment").arg(&bad)).0, 2);
    std::fs::write(&bad, "experiment = rates\ngrid = 10,20,2\nunknown = 1\n").unwrap();
    assert_eq!(run(cli().arg("experiment").arg(&bad)).0, 2);

    // an unreachable tolerance makes every fit non-converged
    let cfg = tmp.path().join("strict.txt");
    std::fs::write(&cfg, "experiment = fit\ngrid = 30,60,2\nreplications = 2\ntol = 1e-300\ncovariance = ar1:0.5\n").unwrap();
    let (code, text) = run(cli().arg("experiment").arg(&cfg).arg("--out").arg(tmp.path().join("strict")));
    assert_eq!(code, 3, "{text}");

    let short = tmp.path().join("short");
    std::fs::write(&cfg, "experiment = fit\ngrid = 40,30,2\nreplications = 2\n").unwrap();
    assert_eq!(run(cli().arg("experiment").arg(&cfg).arg("--out").arg(&short)).0, 0);
    let (code, text) = run(cli().arg("rate-fit").arg(short.join("records.csv")));
    assert_eq!(code, 1, "{text}");
    assert!(text.contains("at least 3 points"));
}
