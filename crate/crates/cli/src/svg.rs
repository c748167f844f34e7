//! Dependency-free SVG charts: the signed horizontal bar chart used for
//! feature attributions and a confusion-matrix grid. All coordinates are
//! formatted with fixed precision so output bytes are deterministic.

use admitlens_core::metrics::ConfusionMatrix;

const WIDTH: f64 = 900.0;
const LABEL_AREA: f64 = 280.0;
const ROW_HEIGHT: f64 = 24.0;
const BAR_HEIGHT: f64 = 16.0;
const TOP: f64 = 42.0;

const GREEN: &str = "#2e7d32";
const RED: &str = "#c62828";

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Horizontal bar chart, one signed bar per entry, drawn in the given
/// order. Positive values extend right in green, negative left in red;
/// labels are left-aligned in their own column.
pub fn bar_chart(title: &str, entries: &[(String, f64)]) -> String {
    let height = TOP + entries.len() as f64 * ROW_HEIGHT + 18.0;
    let plot_width = WIDTH - LABEL_AREA - 20.0;
    let zero_x = LABEL_AREA + plot_width / 2.0;
    let max_abs = entries
        .iter()
        .map(|(_, v)| v.abs())
        .fold(0.0f64, f64::max)
        .max(1e-12);
    let scale = (plot_width / 2.0 - 60.0) / max_abs;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH:.0}\" height=\"{height:.0}\" \
         viewBox=\"0 0 {WIDTH:.0} {height:.0}\" font-family=\"monospace\" font-size=\"12\">\n"
    ));
    svg.push_str(&format!(
        "  <rect width=\"{WIDTH:.0}\" height=\"{height:.0}\" fill=\"#ffffff\"/>\n"
    ));
    svg.push_str(&format!(
        "  <text x=\"12\" y=\"24\" font-size=\"15\">{}</text>\n",
        escape(title)
    ));
    svg.push_str(&format!(
        "  <line x1=\"{zero_x:.2}\" y1=\"{:.2}\" x2=\"{zero_x:.2}\" y2=\"{:.2}\" \
         stroke=\"#888888\" stroke-width=\"1\"/>\n",
        TOP - 6.0,
        height - 12.0
    ));
    for (i, (name, value)) in entries.iter().enumerate() {
        let y = TOP + i as f64 * ROW_HEIGHT;
        let bar_w = value.abs() * scale;
        let (bar_x, fill) = if *value >= 0.0 {
            (zero_x, GREEN)
        } else {
            (zero_x - bar_w, RED)
        };
        svg.push_str(&format!(
            "  <text x=\"12\" y=\"{:.2}\" text-anchor=\"start\">{}</text>\n",
            y + BAR_HEIGHT - 3.0,
            escape(name)
        ));
        svg.push_str(&format!(
            "  <rect x=\"{bar_x:.2}\" y=\"{y:.2}\" width=\"{bar_w:.2}\" \
             height=\"{BAR_HEIGHT:.0}\" fill=\"{fill}\"/>\n"
        ));
        let (value_x, anchor) = if *value >= 0.0 {
            (zero_x + bar_w + 6.0, "start")
        } else {
            (zero_x - bar_w - 6.0, "end")
        };
        svg.push_str(&format!(
            "  <text x=\"{value_x:.2}\" y=\"{:.2}\" text-anchor=\"{anchor}\">{value:+.4}</text>\n",
            y + BAR_HEIGHT - 3.0
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Two-by-two confusion grid, correct cells green, error cells red, with
/// opacity scaled by the share of all outcomes in the cell.
pub fn confusion_chart(cm: &ConfusionMatrix) -> String {
    let total = cm.total().max(1) as f64;
    let cell = 150.0;
    let left = 110.0;
    let top = 70.0;
    let width = left + 2.0 * cell + 20.0;
    let height = top + 2.0 * cell + 20.0;
    // (row, col, count, is_correct): rows actual, columns predicted.
    let cells = [
        (0, 0, cm.true_negatives, true),
        (0, 1, cm.false_positives, false),
        (1, 0, cm.false_negatives, false),
        (1, 1, cm.true_positives, true),
    ];

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" \
         viewBox=\"0 0 {width:.0} {height:.0}\" font-family=\"monospace\" font-size=\"13\">\n"
    ));
    svg.push_str(&format!(
        "  <rect width=\"{width:.0}\" height=\"{height:.0}\" fill=\"#ffffff\"/>\n"
    ));
    svg.push_str("  <text x=\"12\" y=\"24\" font-size=\"15\">confusion matrix</text>\n");
    for (i, label) in ["predicted 0", "predicted 1"].iter().enumerate() {
        svg.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{label}</text>\n",
            left + (i as f64 + 0.5) * cell,
            top - 10.0
        ));
    }
    for (i, label) in ["actual 0", "actual 1"].iter().enumerate() {
        svg.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{label}</text>\n",
            left - 10.0,
            top + (i as f64 + 0.5) * cell + 4.0
        ));
    }
    for (row, col, count, correct) in cells {
        let x = left + col as f64 * cell;
        let y = top + row as f64 * cell;
        let fill = if correct { GREEN } else { RED };
        let opacity = 0.12 + 0.78 * count as f64 / total;
        svg.push_str(&format!(
            "  <rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{cell:.0}\" height=\"{cell:.0}\" \
             fill=\"{fill}\" fill-opacity=\"{opacity:.4}\" stroke=\"#444444\"/>\n"
        ));
        svg.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"18\">{count}</text>\n",
            x + cell / 2.0,
            y + cell / 2.0 + 6.0
        ));
    }
    svg.push_str("</svg>\n");
    svg
}
