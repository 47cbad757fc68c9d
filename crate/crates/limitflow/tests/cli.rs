use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn limitflow(args: &[&str]) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_limitflow"));
    cmd.args(args).env_remove(limitflow::OUT_ENV);
    cmd
}

fn run(args: &[&str], out: &Path) -> Output {
    limitflow(args).arg("--out").arg(out).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &str = "[scenario]\nname = small\norder = 1\ninitial = 1\nanalyses = spectrum\n\n[sampling]\nperiod = 0.5\nsteps = 40\n\n[coefficient]\nindex = 1\nkind = constant\nvalue = 0.5\n";

#[test]
fn exit_codes_follow_the_outcome() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [("flagship.ini", 0), ("unstable.ini", 0), ("targets.ini", 0), ("forced_fail.ini", 2), ("invalid.ini", 3)];
    for (name, code) in cases {
        let o = run(&["run", fixture(name).to_str().unwrap()], &tmp.path().join(name));
        assert_eq!(o.status.code(), Some(code), "{name}: {}", stderr(&o));
    }
    let missing = run(&["run", "/nonexistent/scenario.ini"], tmp.path());
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn verify_reports_validity_without_running() {
    let ok = limitflow(&["verify", fixture("flagship.ini").to_str().unwrap()]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("valid"));
    let bad = limitflow(&["verify", fixture("invalid.ini").to_str().unwrap()]).output().unwrap();
    assert_eq!(bad.status.code(), Some(3));
    assert!(stderr(&bad).contains("missing coefficient for index 2"), "{}", stderr(&bad));
}

#[test]
fn parse_errors_name_line_and_field() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("bad.ini");
    std::fs::write(&path, SMALL.replace("order = 1", "order = two")).unwrap();
    let o = limitflow(&["verify", path.to_str().unwrap()]).output().unwrap();
    assert_eq!(o.status.code(), Some(3));
    let msg = stderr(&o);
    assert!(msg.contains("line 3") && msg.contains("order"), "{msg}");
}

#[test]
fn outputs_are_complete_and_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let o = run(&["run", fixture("unstable.ini").to_str().unwrap()], dir);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    for file in ["report.json", "trajectories.csv", "spectrum.csv", "decay.svg", "roots.svg"] {
        assert_eq!(std::fs::read(a.join(file)).unwrap(), std::fs::read(b.join(file)).unwrap(), "{file}");
    }
    let svg = std::fs::read_to_string(a.join("decay.svg")).unwrap();
    assert_eq!(svg.matches(r#"class="series""#).count(), 2);
    let traj = std::fs::read_to_string(a.join("trajectories.csv")).unwrap();
    assert!(traj.starts_with("k,t,x_re,x_im,x_star_re,x_star_im,abs_error\n"));
    let spectrum = std::fs::read_to_string(a.join("spectrum.csv")).unwrap();
    assert!(spectrum.starts_with("re,im,modulus,multiplicity\n"));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(a.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["outcome"], "PASS");
    assert!(report["analyses"].as_array().unwrap().iter().all(|x| x.get("wall_clock_ms").is_none()));
}

#[test]
fn timings_are_opt_in() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("small.ini");
    std::fs::write(&path, SMALL).unwrap();
    let o = limitflow(&["run", path.to_str().unwrap(), "--timings"]).arg("--out").arg(tmp.path().join("out")).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(tmp.path().join("out/report.json")).unwrap()).unwrap();
    assert!(report["analyses"].as_array().unwrap().iter().all(|x| x["wall_clock_ms"].is_number()));
}

#[test]
fn output_directory_falls_back_to_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("small.ini");
    std::fs::write(&path, SMALL).unwrap();
    let env_dir = tmp.path().join("from_env");
    let o = limitflow(&["run", path.to_str().unwrap()]).env(limitflow::OUT_ENV, &env_dir).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(env_dir.join("report.json").is_file());
    // --out wins over the environment
    let flag_dir = tmp.path().join("from_flag");
    let o = limitflow(&["run", path.to_str().unwrap()]).env(limitflow::OUT_ENV, &env_dir).arg("--out").arg(&flag_dir).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(flag_dir.join("report.json").is_file());
}

#[test]
fn batch_runs_every_scenario_into_its_own_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let scenarios = tmp.path().join("scenarios");
    std::fs::create_dir(&scenarios).unwrap();
    std::fs::write(scenarios.join("small.ini"), SMALL).unwrap();
    std::fs::write(scenarios.join("other.ini"), SMALL.replace("value = 0.5", "value = 0.25")).unwrap();
    std::fs::copy(fixture("invalid.ini"), scenarios.join("invalid.ini")).unwrap();
    std::fs::write(scenarios.join("notes.txt"), "ignored").unwrap();
    let out = tmp.path().join("out");
    let o = run(&["batch", scenarios.to_str().unwrap()], &out);
    // the worst outcome decides the exit status
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(out.join("small/report.json").is_file());
    assert!(out.join("other/report.json").is_file());
    assert!(!out.join("invalid").exists());
    assert!(!out.join("notes").exists());
}
