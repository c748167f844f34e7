//! End-to-end checks of the command-line interface. Commands run
//! in-process with captured output (the binary's entry point is a thin
//! wrapper around the same function), plus one spawn of the real binary.

use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use admitlens_cli::model_file::ModelFile;
use admitlens_cli::run_with_args;
use admitlens_core::tabular::{read_csv, write_csv, TabularDataset};

fn run(args: &[&str]) -> (i32, String, String) {
    let mut stdout = Vec::new();
    let mut stderr = Vec::new();
    let mut full = vec!["admitlens"];
    full.extend_from_slice(args);
    let code = run_with_args(full, &mut stdout, &mut stderr);
    (
        code,
        String::from_utf8(stdout).unwrap(),
        String::from_utf8(stderr).unwrap(),
    )
}

fn ok(args: &[&str]) -> String {
    let (code, stdout, stderr) = run(args);
    assert_eq!(code, 0, "command {args:?} failed: {stderr}");
    stdout
}

const CONFIG: &str = r#"
target_column = "read_score"
top_score = 5.0
categorical_columns = ["major", "school_type"]

[filter]
drop_columns = ["gender"]

[hyperparameters]
epochs = 6
hidden_sizes = [16, 8]
"#;

/// Shared workspace: one small synthetic dataset, its featurized form,
/// and one trained model, built once for every test in this file.
struct Fixture {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

impl Fixture {
    fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn data(&self) -> PathBuf {
        self.path("data.csv")
    }

    fn feat(&self) -> PathBuf {
        self.path("feat.csv")
    }

    fn config(&self) -> PathBuf {
        self.path("config.toml")
    }

    fn model(&self) -> PathBuf {
        self.path("model.json")
    }
}

static FIXTURE: OnceLock<Fixture> = OnceLock::new();

fn fixture() -> &'static Fixture {
    FIXTURE.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        let fx = Fixture { _dir: dir, root };
        ok(&[
            "gensynth",
            "--out",
            fx.data().to_str().unwrap(),
            "--rows",
            "400",
            "--seed",
            "11",
        ]);
        ok(&[
            "extract",
            fx.data().to_str().unwrap(),
            "--out",
            fx.feat().to_str().unwrap(),
            "--text-columns",
            "piq1,piq2,piq3,piq4",
        ]);
        std::fs::write(fx.config(), CONFIG).unwrap();
        ok(&[
            "train",
            fx.feat().to_str().unwrap(),
            "--config",
            fx.config().to_str().unwrap(),
            "--model",
            "ff",
            "--out",
            fx.model().to_str().unwrap(),
            "--seed",
            "3",
        ]);
        fx
    })
}

fn bytes(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap()
}

#[test]
fn gensynth_is_deterministic_with_ground_truth_sidecar() {
    let fx = fixture();
    let again = fx.path("data_again.csv");
    ok(&[
        "gensynth",
        "--out",
        again.to_str().unwrap(),
        "--rows",
        "400",
        "--seed",
        "11",
    ]);
    assert_eq!(bytes(&fx.data()), bytes(&again));

    let other = fx.path("data_other.csv");
    ok(&[
        "gensynth",
        "--out",
        other.to_str().unwrap(),
        "--rows",
        "400",
        "--seed",
        "12",
    ]);
    assert_ne!(bytes(&fx.data()), bytes(&other));

    let truth = std::fs::read_to_string(fx.path("data.csv.truth.tsv")).unwrap();
    assert!(truth.contains("feature\tcoefficient"));
    assert!(truth.contains("num_02\t2"));

    let data = read_csv(&fx.data()).unwrap();
    let labels = data.numeric("read_score").unwrap();
    let positive = labels.iter().filter(|&&v| v == 5.0).count() as f64;
    let fraction = positive / labels.len() as f64;
    assert!((0.45..=0.55).contains(&fraction), "balance {fraction}");
}

#[test]
fn extract_column_count_follows_the_contract() {
    let fx = fixture();
    let raw = read_csv(&fx.data()).unwrap();
    let feat = read_csv(&fx.feat()).unwrap();
    // cols - t + 8t with t = 4 text columns.
    assert_eq!(feat.n_cols(), raw.n_cols() - 4 + 8 * 4);
    assert_eq!(feat.n_rows(), raw.n_rows());
    assert!(feat
        .column_names()
        .contains(&"piq3_flesch_reading_ease".to_string()));
    assert!(!feat.column_names().contains(&"piq3".to_string()));

    let again = fx.path("feat_again.csv");
    ok(&[
        "extract",
        fx.data().to_str().unwrap(),
        "--out",
        again.to_str().unwrap(),
        "--text-columns",
        "piq1,piq2,piq3,piq4",
    ]);
    assert_eq!(bytes(&fx.feat()), bytes(&again));
}

#[test]
fn extract_rejects_unknown_and_numeric_text_columns() {
    let fx = fixture();
    let out = fx.path("never_written.csv");
    let (code, _, stderr) = run(&[
        "extract",
        fx.data().to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--text-columns",
        "no_such_column",
    ]);
    assert_eq!(code, 2);
    assert!(stderr.contains("no_such_column"));

    let (code, _, stderr) = run(&[
        "extract",
        fx.data().to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--text-columns",
        "num_00",
    ]);
    assert_eq!(code, 2);
    assert!(stderr.contains("numeric"));
}

#[test]
fn train_is_byte_deterministic_and_the_model_round_trips() {
    let fx = fixture();
    let again = fx.path("model_again.json");
    ok(&[
        "train",
        fx.feat().to_str().unwrap(),
        "--config",
        fx.config().to_str().unwrap(),
        "--model",
        "ff",
        "--out",
        again.to_str().unwrap(),
        "--seed",
        "3",
    ]);
    assert_eq!(bytes(&fx.model()), bytes(&again));

    let model = ModelFile::load(&fx.model()).unwrap();
    assert_eq!(model.architecture.hidden_sizes, vec![16, 8]);
    assert_eq!(model.created_seed, 3);
    assert!(model.pca_model.is_none());
    assert_eq!(model.feature_names.len(), model.architecture.input_dim);

    let copy = fx.path("model_copy.json");
    model.save(&copy).unwrap();
    assert_eq!(bytes(&fx.model()), bytes(&copy));
}

#[test]
fn train_with_pca_embeds_the_projection() {
    let fx = fixture();
    let out = fx.path("model_pca.json");
    ok(&[
        "train",
        fx.feat().to_str().unwrap(),
        "--config",
        fx.config().to_str().unwrap(),
        "--model",
        "icnn",
        "--pca-components",
        "8",
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "3",
    ]);
    let model = ModelFile::load(&out).unwrap();
    let pca = model.pca_model.as_ref().expect("PCA model embedded");
    assert_eq!(pca.output_dim(), 8);
    assert_eq!(model.architecture.input_dim, 8);
    assert!(pca.input_dim() > 8);

    let stdout = ok(&[
        "evaluate",
        out.to_str().unwrap(),
        fx.feat().to_str().unwrap(),
    ]);
    assert!(stdout.contains("auroc"));
}

#[test]
fn evaluate_reports_metrics_and_writes_the_chart() {
    let fx = fixture();
    let svg = fx.path("confusion.svg");
    let stdout = ok(&[
        "evaluate",
        fx.model().to_str().unwrap(),
        fx.feat().to_str().unwrap(),
        "--svg",
        svg.to_str().unwrap(),
    ]);
    for needle in ["accuracy", "precision", "recall", "f1", "auroc", "actual 0"] {
        assert!(stdout.contains(needle), "missing {needle:?} in:\n{stdout}");
    }
    let chart = std::fs::read_to_string(&svg).unwrap();
    assert!(chart.starts_with("<svg "));
    assert!(chart.contains("predicted"));
}

#[test]
fn evaluate_rejects_reordered_columns() {
    let fx = fixture();
    let data = read_csv(&fx.feat()).unwrap();
    let names = data.column_names();
    // Swap the first two columns; the fitted schema is order-sensitive.
    let mut order: Vec<usize> = (0..data.n_cols()).collect();
    order.swap(0, 1);
    let swapped = TabularDataset::new(
        order.iter().map(|&j| names[j].clone()).collect(),
        order.iter().map(|&j| data.columns()[j].clone()).collect(),
        None,
    )
    .unwrap();
    let path = fx.path("reordered.csv");
    write_csv(&swapped, &path).unwrap();

    let (code, _, stderr) = run(&[
        "evaluate",
        fx.model().to_str().unwrap(),
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
    assert!(stderr.contains("error: "));
}

#[test]
fn evaluate_requires_the_target_column() {
    let fx = fixture();
    let mut data = read_csv(&fx.feat()).unwrap();
    data.remove_column("read_score").unwrap();
    let path = fx.path("unlabeled.csv");
    write_csv(&data, &path).unwrap();

    let (code, _, stderr) = run(&[
        "evaluate",
        fx.model().to_str().unwrap(),
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
    assert!(stderr.contains("read_score"));
}

#[test]
fn explain_is_deterministic_and_charts_signed_bars() {
    let fx = fixture();
    let svg_a = fx.path("weights_a.svg");
    let svg_b = fx.path("weights_b.svg");
    let explain = |svg: &Path| {
        ok(&[
            "explain",
            fx.model().to_str().unwrap(),
            fx.feat().to_str().unwrap(),
            "--limit",
            "4",
            "--n-samples",
            "300",
            "--seed",
            "5",
            "--out-svg",
            svg.to_str().unwrap(),
        ])
    };
    let stdout_a = explain(&svg_a);
    let stdout_b = explain(&svg_b);

    assert_eq!(
        stdout_a.replace("weights_a.svg", "chart.svg"),
        stdout_b.replace("weights_b.svg", "chart.svg")
    );
    assert_eq!(bytes(&svg_a), bytes(&svg_b));

    assert!(stdout_a.contains("rank"));
    assert!(stdout_a.contains("mean surrogate fit R^2"));
    let chart = std::fs::read_to_string(&svg_a).unwrap();
    assert!(chart.contains("width=\"900\""));
    assert!(
        chart.contains("#2e7d32") || chart.contains("#c62828"),
        "no signed bar colors in chart"
    );
}

#[test]
fn explain_validates_selection_flags() {
    let fx = fixture();
    let (code, _, stderr) = run(&[
        "explain",
        fx.model().to_str().unwrap(),
        fx.feat().to_str().unwrap(),
        "--top-k",
        "999",
    ]);
    assert_eq!(code, 2);
    assert!(stderr.contains("--top-k 999"));

    // clap-level conflict
    let (code, _, _) = run(&[
        "explain",
        fx.model().to_str().unwrap(),
        fx.feat().to_str().unwrap(),
        "--top-k",
        "5",
        "--skip-saliency",
    ]);
    assert_eq!(code, 2);

    let (code, _, _) = run(&[
        "explain",
        fx.model().to_str().unwrap(),
        fx.feat().to_str().unwrap(),
        "--limit",
        "0",
    ]);
    assert_eq!(code, 2);
}

#[test]
fn spawned_binary_matches_in_process_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_admitlens");
    let help = std::process::Command::new(exe)
        .arg("--help")
        .output()
        .unwrap();
    assert!(help.status.success());
    assert!(String::from_utf8_lossy(&help.stdout).contains("gensynth"));

    let none = std::process::Command::new(exe).output().unwrap();
    assert_eq!(none.status.code(), Some(2));

    let missing = std::process::Command::new(exe)
        .args([
            "extract",
            "/nonexistent/input.csv",
            "--out",
            "/nonexistent/out.csv",
            "--text-columns",
            "piq1",
        ])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(1));
}
