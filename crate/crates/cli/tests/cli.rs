use std::path::Path;
use std::process::{Command, Output};

fn expgreedy(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_expgreedy"))
        .args(args)
        .env_remove("EXPGREEDY_OUT")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn greedy_on_appendix_b() {
    let o = expgreedy(&["greedy", "--function", "appendixB:0.25", "--k", "2"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "selected: [0, 1]\nvalue: 2\n");
}

#[test]
fn seeded_run_is_reproducible() {
    let args = [
        "run", "--function", "appendixB:0.25", "--mode", "greedy-compete", "--noise",
        "uniform:0.1", "--k", "2", "--epsilon", "0.1", "--delta", "0.05", "--seed", "7",
    ];
    let a = expgreedy(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let text = stdout(&a);
    assert!(text.contains("selected: [0, 1]\n"), "{text}");
    assert!(text.contains("value: 2\n"));
    assert_eq!(a.stdout, expgreedy(&args).stdout);
}

#[test]
fn run_writes_a_trace_and_respects_the_budget() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = expgreedy(&[
        "run", "--function", "venice-toy", "--k", "2", "--beta", "2", "--tau", "3", "--budget",
        "4", "--seed", "3", "--out", out,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let queries: u64 = text
        .lines()
        .find_map(|l| l.strip_prefix("queries: "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(queries <= 5 * 2 * 4, "{text}");
    let trace = std::fs::read_to_string(dir.path().join("run-trace.jsonl")).unwrap();
    assert_eq!(trace.lines().count(), 2);
}

#[test]
fn validate_reports_violations() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"type":"tabular","n":2,"values":[{"set":[],"value":0},{"set":[0],"value":1},{"set":[1],"value":1},{"set":[0,1],"value":3}]}"#,
    )
    .unwrap();
    let o = expgreedy(&["validate", "--function", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.contains("Submodularity"), "{text}");

    let good = expgreedy(&["validate", "--function", "appendixB:0.1"]);
    assert_eq!(good.status.code(), Some(0));
    assert!(stdout(&good).contains(" 0 violations"));
}

#[test]
fn exit_codes() {
    assert_eq!(expgreedy(&["greedy", "--k", "2"]).status.code(), Some(2));
    assert_eq!(expgreedy(&["nonsense"]).status.code(), Some(2));
    let missing = expgreedy(&["greedy", "--function", "/no/such/file.json", "--k", "2"]);
    assert_eq!(missing.status.code(), Some(1));
    let too_big = expgreedy(&["greedy", "--function", "fig2", "--k", "9"]);
    assert_eq!(too_big.status.code(), Some(1));
}

fn header(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn budget_experiment_writes_identical_csv() {
    let run = |dir: &Path, jobs: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_expgreedy"))
            .args([
                "experiment", "budget", "--function", "venice-toy", "--k", "2", "--budgets",
                "1,5", "--beta", "0,2", "--sigma2", "1", "--replicates", "4", "--jobs", jobs,
                "--seed", "5",
            ])
            .env("EXPGREEDY_OUT", dir)
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(dir.join("budget.csv")).unwrap()
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = run(a.path(), "1");
    assert_eq!(first, run(b.path(), "2"));
    assert_eq!(
        header(&a.path().join("budget.csv")),
        "algorithm,param,budget,replicate,utility,queries,capped"
    );
    let text = String::from_utf8(first).unwrap();
    assert!(text.contains("Random,"));
    assert!(text.contains("Greedy,"));
    assert!(a.path().join("budget-summary.csv").exists());
}

#[test]
fn distribution_and_topl_experiments() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let common = ["--function", "venice-toy", "--k", "2", "--sigma2", "0.5", "--replicates", "3"];
    let mut args = vec!["experiment", "distribution"];
    args.extend(common);
    args.extend(["--out", out]);
    let o = expgreedy(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("max/mean"));
    assert_eq!(header(&dir.path().join("distribution.csv")), "algorithm,param,item,queries");
    assert!(dir.path().join("traces/ExpGreedy/sigma2=0.5/replicate-2.jsonl").exists());

    let mut args = vec!["experiment", "topl"];
    args.extend(common);
    args.extend(["--out", out]);
    let o = expgreedy(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = std::fs::read_to_string(dir.path().join("topl.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 3 * 2);
}

#[test]
fn gaps_table() {
    let o = expgreedy(&["gaps", "--function", "fig2", "--epsilon-prime", "0.01", "--k-prime", "4"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("rank\titem\tmarginal"));
    assert!(text.contains("easiest l: 2\n"), "{text}");
}
