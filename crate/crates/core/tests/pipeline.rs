use heislab::constructions::{cantor_cloud, example_cloud, segment_cloud, Axis, ExampleParams};
use heislab::density::{ex1_probe_on, family_panel, thm1_scan, thm2_scan};
use heislab::dimension::{check_dimension_inequalities, estimate_cloud};
use heislab::hgeom::{MetricKind, Point};
use heislab::io;

#[test]
fn saved_cloud_gives_the_same_estimates() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cantor.csv");
    let cloud = cantor_cloud(0.5, 8).unwrap();
    io::save_cloud(&cloud, &path).unwrap();
    let back = io::load_cloud(&path).unwrap();
    for m in [MetricKind::Euclidean, MetricKind::Heisenberg] {
        let a = estimate_cloud(&cloud, m, 0.25, 0.002, 12).unwrap();
        let b = estimate_cloud(&back, m, 0.25, 0.002, 12).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn cantor_pair_sits_inside_the_beta_bounds() {
    let cloud = cantor_cloud(0.5, 9).unwrap();
    let e = estimate_cloud(&cloud, MetricKind::Euclidean, 0.1, 1e-4, 25).unwrap();
    let h = estimate_cloud(&cloud, MetricKind::Heisenberg, 0.3, 0.01, 13).unwrap();
    assert!((e.slope - 0.5).abs() < 0.1, "{}", e.slope);
    assert!((h.slope - 1.0).abs() < 0.15, "{}", h.slope);
    assert!(check_dimension_inequalities(e.slope, h.slope, 0.1).unwrap().ok);
}

#[test]
fn example1_two_sided_behaviour_at_level3() {
    let (fam, cloud) = example_cloud(ExampleParams::Example1, 3, 32).unwrap();
    let panel: Vec<Point> = family_panel(&fam, 16).into_iter().filter(|p| p.x < 0.75).collect();
    let upper = ex1_probe_on(&fam, &cloud, &panel).unwrap();
    for ps in &upper.points {
        assert!(ps.max_ratio() >= 0.125 - 0.02, "{:?}", ps.p);
    }
    let p = ExampleParams::Example1;
    let radii: Vec<f64> = (0..12).map(|i| p.h(2) * (p.h(3) / p.h(2)).powf(i as f64 / 11.0)).collect();
    let lower = thm1_scan(&cloud, &panel, 0.5, &radii, 1.0).unwrap();
    assert!(lower.points.iter().all(|ps| ps.min_ratio() <= 0.05));
}

#[test]
fn horizontal_and_vertical_segments_split_cleanly() {
    let x = segment_cloud(Axis::X, -1.0, 1.0, 20_000).unwrap();
    let t = segment_cloud(Axis::T, -1.0, 1.0, 20_000).unwrap();
    let radii = [0.5, 0.2, 0.1];
    let flat = thm2_scan(&x, &[Point::ORIGIN], 0.25, &radii, 1.0).unwrap();
    assert!(flat.ratios().all(|r| r == 0.0));
    let steep = thm2_scan(&t, &[Point::ORIGIN], 0.25, &radii, 1.0).unwrap();
    assert!(steep.ratios().all(|r| (r - 0.75).abs() < 1e-3));
}

#[test]
fn probe_json_has_the_documented_keys() {
    let t = segment_cloud(Axis::T, -1.0, 1.0, 2_000).unwrap();
    let res = thm2_scan(&t, &[Point::ORIGIN], 0.25, &[0.2], 1.0).unwrap();
    let v: serde_json::Value = serde_json::to_value(&res).unwrap();
    for key in ["probe", "convention", "rho_rule", "s", "points", "summary", "error_bound", "seed"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert!(v["points"][0]["series"][0].get("inside").is_some());
}
