use std::path::PathBuf;
use std::process::Command;

fn webplate(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_webplate")).args(args).output().expect("binary runs")
}

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("webplate-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

#[test]
fn lists_and_shows_cases() {
    let out = webplate(&["list-cases"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 18);
    assert!(text.lines().any(|l| l.starts_with("annular-buckle-b")));
    let out = webplate(&["show", "annular-bend"]);
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains("case = \"annular-bend\""));
}

#[test]
fn unknown_case_fails_with_message() {
    let out = webplate(&["bend", "no-such-case"]);
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().starts_with("error:"));
    assert!(!webplate(&["show", "no-such-case"]).status.success());
}

#[test]
fn bend_writes_summary_and_field() {
    let dir = scratch("bend");
    let out = webplate(&["bend", "annular-bend", "--spacing", "0.3", "--stride", "0.5", "--out", dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = String::from_utf8(out.stdout).unwrap();
    assert!(report.contains("max_deflection") && report.contains("[config"));
    let field = std::fs::read_to_string(dir.join("annular-bend-bend.field.csv")).unwrap();
    assert!(field.starts_with("x,y,value"));
    assert!(dir.join("annular-bend-bend.summary.toml").exists());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn buckle_from_file_reports_k() {
    let dir = scratch("buckle");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("case.toml");
    std::fs::write(&path, String::from_utf8(webplate(&["show", "annular-buckle-b"]).stdout).unwrap()).unwrap();
    let out = webplate(&["buckle", path.to_str().unwrap(), "--spacing", "0.2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let k: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("K = "))
        .expect("K line")
        .parse()
        .unwrap();
    assert!((k - 27.9015).abs() < 0.01 * 27.9015, "{k}");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn converge_rejects_ascending_spacings() {
    let out = webplate(&["converge", "annular-bend", "--h", "0.1,0.2", "--reference", "analytic"]);
    assert!(!out.status.success());
}
