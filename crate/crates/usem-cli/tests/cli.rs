//! Exit-code and output contract of the `usem` binary.

use std::process::Command;

fn usem() -> Command {
    Command::new(env!("CARGO_BIN_EXE_usem"))
}

fn write_cfg(name: &str, body: &str) -> std::path::PathBuf {
    let path = std::env::temp_dir().join(name);
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn list_problems_names_all_four() {
    let out = usem().arg("list-problems").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["circle_source", "flower_source", "circle_eigen", "plain_poisson"] {
        assert!(text.contains(name), "missing {name} in:\n{text}");
    }
}

#[test]
fn run_emits_table_slopes_and_csv() {
    let csv = std::env::temp_dir().join("usem_cli_test.csv");
    let cfg = write_cfg(
        "usem_cli_run.cfg",
        &format!(
            "problem = plain_poisson\nsweep = h\nn_list = 4, 8\np = 2\noutput = {}\n",
            csv.display()
        ),
    );
    let out = usem().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("slopes (last 3"));
    assert!(text.contains("plain_poisson"));
    let written = std::fs::read_to_string(&csv).unwrap();
    assert!(written.starts_with("problem,N,h,p,dofs,stabilized,l2,h1,eig1,eig2,eig3,condA,condM,runtime"));
    assert_eq!(written.lines().count(), 3);
}

#[test]
fn geometry_violation_exits_2_and_override_runs() {
    // The flower's lobes are unresolved on a 4x4 mesh.
    let cfg = write_cfg(
        "usem_cli_viol.cfg",
        "problem = flower_source\nsweep = h\nn_list = 4\np = 2\n",
    );
    let out = usem().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));

    let out = usem()
        .args(["run", "--override-assumption", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));

    let out = usem().args(["check-geometry", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stdout).contains("VIOLATED"));
}

#[test]
fn bad_config_exits_1() {
    let cfg = write_cfg("usem_cli_bad.cfg", "problem = nonesuch\nn_list = 4\np = 2\n");
    let out = usem().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}
