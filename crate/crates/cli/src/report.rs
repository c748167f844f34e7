//! Plain-text rendering of evaluation and explanation results.

use admitlens_core::metrics::{ConfusionMatrix, MetricsReport};

/// Five-row metric table, four decimals per value.
pub fn metrics_table(report: &MetricsReport) -> String {
    let rows = [
        ("accuracy", report.accuracy),
        ("precision", report.precision),
        ("recall", report.recall),
        ("f1", report.f1),
        ("auroc", report.auroc),
    ];
    let mut out = String::from("metric      value\n");
    for (name, value) in rows {
        out.push_str(&format!("{name:<10} {value:>6.4}\n"));
    }
    out
}

/// Two-by-two count table, rows actual, columns predicted.
pub fn confusion_table(cm: &ConfusionMatrix) -> String {
    let mut out = String::from("confusion matrix\n");
    out.push_str("            predicted 0  predicted 1\n");
    out.push_str(&format!(
        "actual 0    {:>11}  {:>11}\n",
        cm.true_negatives, cm.false_positives
    ));
    out.push_str(&format!(
        "actual 1    {:>11}  {:>11}\n",
        cm.false_negatives, cm.true_positives
    ));
    out
}

/// Ranked feature table: (name, mean signed weight, importance) per row.
pub fn explanation_table(rows: &[(String, f64, f64)]) -> String {
    let name_width = rows
        .iter()
        .map(|(n, _, _)| n.len())
        .max()
        .unwrap_or(7)
        .max(7);
    let mut out = format!(
        "rank  {:<name_width$}  mean_weight  importance\n",
        "feature"
    );
    for (rank, (name, signed, importance)) in rows.iter().enumerate() {
        out.push_str(&format!(
            "{:>4}  {name:<name_width$}  {signed:>+11.4}  {importance:>10.4}\n",
            rank + 1
        ));
    }
    out
}
