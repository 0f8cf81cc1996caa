//! Byte-for-byte comparison against a committed heatmap.
//! Regenerate with `UPDATE_GOLDEN=1 cargo test -p spectral-lab --test render_golden`.

use std::path::PathBuf;

use spectral_lab::render::{render_heatmap_svg, Axes};

fn fixture() -> (Vec<Vec<f64>>, Axes) {
    let values: Vec<Vec<f64>> = (0..4)
        .map(|r| (0..4).map(|c| (r * 4 + c) as f64 / 15.0).collect())
        .collect();
    let axes = Axes {
        title: "golden 4x4".into(),
        x_label: "column".into(),
        y_label: "row".into(),
        col_labels: vec!["a".into(), "b".into(), "c".into(), "d".into()],
        row_labels: vec!["1".into(), "2".into(), "3".into(), "4".into()],
    };
    (values, axes)
}

#[test]
fn four_by_four_matches_golden_file() {
    let (values, axes) = fixture();
    let svg = render_heatmap_svg(&values, &axes, (0.0, 1.0)).unwrap();
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/heatmap_4x4.svg");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &svg).unwrap();
    }
    let golden = std::fs::read_to_string(&path).expect("golden file present");
    assert_eq!(svg, golden, "rendered SVG differs from {}", path.display());
}
