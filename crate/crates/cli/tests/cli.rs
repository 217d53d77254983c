use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn cca(args: &[&str]) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cca"));
    cmd.args(args);
    for (key, _) in std::env::vars() {
        if key.starts_with("CCA_") {
            cmd.env_remove(key);
        }
    }
    cmd
}

fn corpus_args(out: &Path) -> Vec<String> {
    let f = fixtures();
    vec![
        "--input".into(),
        f.join("corpus").display().to_string(),
        "--journals".into(),
        f.join("journals.csv").display().to_string(),
        "--abbrevs".into(),
        f.join("abbreviations.csv").display().to_string(),
        "--output".into(),
        out.display().to_string(),
    ]
}

fn run_ok(mut cmd: Command) -> Output {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "status {:?}\nstdout {}\nstderr {}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn manifest(out: &Path) -> String {
    fs::read_to_string(out.join("reports/manifest.json")).unwrap()
}

fn reports(out: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![out.join("reports")];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(out).unwrap().display().to_string();
                files.push((rel, fs::read(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}

#[test]
fn version_flag() {
    let out = run_ok(cca(&["--version"]));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("cca "));
}

#[test]
fn run_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let mut cmd = cca(&["run"]);
    cmd.args(corpus_args(dir.path()));
    let out = run_ok(cmd);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("10 files, 9 parsed, 7 kept"), "{stdout}");
    for name in ["manifest.json", "proportions.csv", "aci.csv", "acl.csv", "anova_report.json", "metrics.json"] {
        assert!(dir.path().join("reports").join(name).is_file(), "{name}");
    }
}

#[test]
fn stage_subcommands_match_run() {
    let whole = tempfile::tempdir().unwrap();
    let mut cmd = cca(&["run"]);
    cmd.args(corpus_args(whole.path()));
    run_ok(cmd);

    let staged = tempfile::tempdir().unwrap();
    for stage in ["ingest", "match", "classify", "metrics", "stats", "report"] {
        let mut cmd = cca(&[stage]);
        cmd.args(corpus_args(staged.path()));
        run_ok(cmd);
    }
    assert_eq!(reports(whole.path()), reports(staged.path()));
}

#[test]
fn later_stages_need_only_output() {
    let dir = tempfile::tempdir().unwrap();
    let mut cmd = cca(&["ingest"]);
    cmd.args(corpus_args(dir.path()));
    run_ok(cmd);
    let mut cmd = cca(&["match"]);
    cmd.args(corpus_args(dir.path()));
    run_ok(cmd);
    let out = dir.path().display().to_string();
    run_ok(cca(&["classify", "--output", &out]));
    run_ok(cca(&["metrics", "--output", &out]));
}

#[test]
fn empty_input_fails() {
    let empty = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let res = cca(&[
        "run",
        "--input",
        &empty.path().display().to_string(),
        "--journals",
        &fixtures().join("journals.csv").display().to_string(),
        "--output",
        &out.path().display().to_string(),
    ])
    .output()
    .unwrap();
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("input missing"));
}

#[test]
fn missing_required_setting_fails() {
    let res = cca(&["run", "--output", "/tmp/never-used"]).output().unwrap();
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("--input"));
}

#[test]
fn bad_flag_values_fail() {
    let dir = tempfile::tempdir().unwrap();
    for extra in [["--match-stages", "4"], ["--journal-ratio", "1.5"], ["--workers", "0"]] {
        let mut cmd = cca(&["run"]);
        cmd.args(corpus_args(dir.path())).args(extra);
        let res = cmd.output().unwrap();
        assert!(!res.status.success(), "{extra:?} accepted");
    }
}

#[test]
fn precedence_flag_env_file_default() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("cca.conf");
    fs::write(&config, "# fixture settings\nmatch_stages = 1\nfuzzy-threshold = 0.1\n").unwrap();
    let conf = config.display().to_string();
    let stages_of = |out: &Path| {
        let m = manifest(out);
        let line = m.lines().find(|l| l.contains("\"match_stages\"")).unwrap().trim().to_string();
        let fuzzy = m.lines().find(|l| l.contains("\"fuzzy_threshold\"")).unwrap().trim().to_string();
        (line, fuzzy)
    };

    let from_file = dir.path().join("a");
    let mut cmd = cca(&["run", "--config", &conf]);
    cmd.args(corpus_args(&from_file));
    run_ok(cmd);
    assert_eq!(
        stages_of(&from_file),
        ("\"match_stages\": \"1\",".into(), "\"fuzzy_threshold\": 0.1,".into())
    );

    let from_env = dir.path().join("b");
    let mut cmd = cca(&["run", "--config", &conf]);
    cmd.args(corpus_args(&from_env)).env("CCA_MATCH_STAGES", "1,2");
    run_ok(cmd);
    assert_eq!(stages_of(&from_env).0, "\"match_stages\": \"1,2\",");

    let from_flag = dir.path().join("c");
    let mut cmd = cca(&["run", "--config", &conf, "--match-stages", "1,2,3"]);
    cmd.args(corpus_args(&from_flag)).env("CCA_MATCH_STAGES", "1,2");
    run_ok(cmd);
    assert_eq!(stages_of(&from_flag).0, "\"match_stages\": \"1,2,3\",");

    let defaults = dir.path().join("d");
    let mut cmd = cca(&["run"]);
    cmd.args(corpus_args(&defaults));
    run_ok(cmd);
    assert_eq!(
        stages_of(&defaults),
        ("\"match_stages\": \"1,2,3\",".into(), "\"fuzzy_threshold\": 0.2,".into())
    );
}

#[test]
fn config_file_paths_are_relative_to_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("cca.conf");
    let f = fixtures();
    fs::write(
        &conf,
        format!(
            "input = {}\njournals = {}\nabbrevs = {}\noutput = out\n",
            f.join("corpus").display(),
            f.join("journals.csv").display(),
            f.join("abbreviations.csv").display()
        ),
    )
    .unwrap();
    run_ok(cca(&["run", "--config", &conf.display().to_string()]));
    assert!(dir.path().join("out/reports/manifest.json").is_file());
}

#[test]
fn unknown_config_key_fails() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("cca.conf");
    fs::write(&conf, "threads = 4\n").unwrap();
    let mut cmd = cca(&["run", "--config", &conf.display().to_string()]);
    cmd.args(corpus_args(dir.path()));
    let res = cmd.output().unwrap();
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("unknown key `threads`"));
}

#[test]
fn direct_matching_keeps_fewer_articles() {
    let kept = |stages: &str| {
        let dir = tempfile::tempdir().unwrap();
        let mut cmd = cca(&["run", "--match-stages", stages]);
        cmd.args(corpus_args(dir.path()));
        let out = run_ok(cmd);
        let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
        let n: u64 = stdout
            .split(", ")
            .find(|p| p.ends_with("kept after filters"))
            .and_then(|p| p.split_whitespace().next())
            .and_then(|n| n.parse().ok())
            .unwrap();
        n
    };
    assert!(kept("1") < kept("1,2,3"));
}

#[test]
fn stats_on_grid_and_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().display().to_string();
    let res = run_ok(cca(&[
        "stats",
        "--grid",
        &fixtures().join("appendix_c.tsv").display().to_string(),
        "--output",
        &out,
    ]));
    assert!(String::from_utf8_lossy(&res.stdout).contains("ANOVA F(26, 131) = 1.375"));
    assert!(dir.path().join("anova_report.json").is_file());

    let res = run_ok(cca(&[
        "stats",
        "--grid",
        &fixtures().join("appendix_b.tsv").display().to_string(),
        "--group-by",
        "columns",
        "--output",
        &out,
    ]));
    assert!(String::from_utf8_lossy(&res.stdout).contains("in 6 groups"));

    let res = run_ok(cca(&[
        "stats",
        "--summaries",
        &fixtures().join("table2_summaries.csv").display().to_string(),
        "--reported",
        &fixtures().join("table2_reported.json").display().to_string(),
        "--output",
        &out,
    ]));
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert!(stdout.contains("ANOVA F(3, 104)"));
    assert!(stdout.contains("printed ss_between = 2.8857"));
}

#[test]
fn malformed_grid_fails() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("bad.csv");
    fs::write(&grid, "Discipline,I,M\nx,1,2\n").unwrap();
    let res = cca(&["stats", "--grid", &grid.display().to_string(), "--output", &dir.path().display().to_string()])
        .output()
        .unwrap();
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("grid malformed"));
}
