use std::process::Command;

fn mrok(args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_mrok")).args(args).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn value<'a>(report: &'a str, key: &str) -> &'a str {
    report.lines().find_map(|l| l.strip_prefix(&format!("{key}="))).unwrap()
}

#[test]
fn cotangent_operator_applies_from_files() {
    let dir = std::env::temp_dir().join(format!("mrok-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let (dat, tree, out) = (dir.join("cot.dat"), dir.join("f.tree"), dir.join("g.tree"));
    let rep = mrok(&["cotangent", "--p", "6", "--eps", "1e-4", "--out", dat.to_str().unwrap()]);
    assert!(value(&rep, "e2").parse::<f64>().unwrap() <= 1e-4);
    assert_eq!(std::fs::read_to_string(&dat).unwrap().lines().count(), 1000);

    let rep = mrok(&["decompose", "periodic-gaussian", "--p", "6", "--eps", "1e-4", "--jmax", "4", "--out", tree.to_str().unwrap()]);
    assert!(value(&rep, "fresh_max_error").parse::<f64>().unwrap() < 1e-3);

    let op = format!("{}.op", dat.display());
    let rep = mrok(&["apply", &op, tree.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(value(&rep, "norm").parse::<f64>().unwrap() > 0.0);
    assert!(std::fs::read_to_string(&out).unwrap().starts_with("MROK-TREE v1"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn expand_writes_table_and_curve() {
    let dir = std::env::temp_dir().join(format!("mrok-exp-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let tab = dir.join("t.txt");
    let rep = mrok(&["expand", "--eps", "1e-8", "--delta", "1e-6", "--out", tab.to_str().unwrap()]);
    let m: usize = value(&rep, "terms").parse().unwrap();
    assert_eq!(std::fs::read_to_string(&tab).unwrap().lines().count(), m);
    assert!(value(&rep, "einf").parse::<f64>().unwrap() <= 1e-8);
    assert!(dir.join("t.txt.curve").exists());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn bad_arguments_fail() {
    let out = Command::new(env!("CARGO_BIN_EXE_mrok")).args(["hydrogen", "--mu", "-1"]).output().unwrap();
    assert!(!out.status.success());
}
