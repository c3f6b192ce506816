use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use extopo::grf::{write_field, FieldGrid};
use extopo::Dim;

fn extopo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_extopo"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn rows(csv_text: &str) -> Vec<Vec<String>> {
    csv::Reader::from_reader(csv_text.as_bytes())
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect()
}

fn gen_args(out: &str) -> Vec<&str> {
    vec![
        "gen",
        "--alpha",
        "0",
        "--n",
        "64",
        "--boxsize",
        "64",
        "--rs",
        "2",
        "--seed",
        "7",
        "--dim",
        "2",
        "--out",
        out,
    ]
}

#[test]
fn gen_writes_header_plus_samples() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.bin");
    let o = extopo(&gen_args(a.to_str().unwrap()));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::metadata(&a).unwrap().len(), 64 * 64 * 8 + 32);
    let m: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert!(m["sigma0"].as_f64().unwrap() > 0.0);
    assert!(m["r_c"].as_f64().unwrap() > 0.0);
}

#[test]
fn gen_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.bin"), dir.path().join("b.bin"));
    assert!(extopo(&gen_args(a.to_str().unwrap())).status.success());
    assert!(extopo(&gen_args(b.to_str().unwrap())).status.success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn gen_without_out_is_a_usage_error() {
    let o = extopo(&["gen", "--n", "64"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--out"));
}

#[test]
fn gen_bad_side_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.bin");
    let o = extopo(&["gen", "--n", "48", "--out", a.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

fn write_constant(path: &Path, value: f64) {
    let f = FieldGrid::from_values(Dim::Two, 32, 32.0, vec![value; 32 * 32]).unwrap();
    write_field(path, &f).unwrap();
}

#[test]
fn sweep_of_constant_field() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("c.bin");
    write_constant(&f, 0.5);
    let o = extopo(&[
        "sweep",
        "--field",
        f.to_str().unwrap(),
        "--sigma",
        "1",
        "--nu-min",
        "-1",
        "--nu-max",
        "1",
        "--nu-step",
        "0.5",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("nu,b0,b1,b2,chi,bsum,jmax,m_spectrum\n"));
    let rows = rows(&text);
    assert_eq!(rows.len(), 5);
    for r in &rows {
        let nu: f64 = r[0].parse().unwrap();
        let got: Vec<i64> = r[1..6].iter().map(|v| v.parse().unwrap()).collect();
        if nu <= 0.5 {
            assert_eq!(got, vec![1, 0, 0, 1, 1], "nu = {nu}");
        } else {
            assert_eq!(got, vec![0, 0, 0, 0, 0], "nu = {nu}");
        }
        assert_eq!(got[3], got[0] - got[1]);
    }
}

#[test]
fn sweep_of_generated_field_keeps_chi_identity() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("g.bin");
    let out = dir.path().join("sweep.csv");
    assert!(extopo(&gen_args(f.to_str().unwrap())).status.success());
    let o = extopo(&[
        "sweep",
        "--field",
        f.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = fs::read_to_string(&out).unwrap();
    let rows = rows(&text);
    assert_eq!(rows.len(), 13);
    for r in rows {
        let v: Vec<i64> = r[1..6].iter().map(|v| v.parse().unwrap()).collect();
        assert_eq!(v[3], v[0] - v[1]);
        assert_eq!(v[4], v[0] + v[1]);
    }
}

#[test]
fn sweep_of_annulus_mask() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("annulus.txt");
    fs::write(
        &m,
        ".......\n.#####.\n.#...#.\n.#...#.\n.#...#.\n.#####.\n.......\n",
    )
    .unwrap();
    let o = extopo(&["sweep", "--mask", m.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        rows(&stdout(&o)),
        vec![vec!["", "1", "1", "0", "0", "2", "1", "{\"1\":1}"]]
    );
}

#[test]
fn sweep_rejects_inverted_range_and_bad_files() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("c.bin");
    write_constant(&f, 0.0);
    let p = f.to_str().unwrap();
    let o = extopo(&[
        "sweep", "--field", p, "--sigma", "1", "--nu-min", "1", "--nu-max", "-1",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = extopo(&["sweep", "--field", p, "--sigma", "1", "--nu-step", "0"]);
    assert_eq!(o.status.code(), Some(2));

    let bad = dir.path().join("bad.bin");
    fs::write(&bad, b"NOPE and some more bytes to pass the length check").unwrap();
    assert_eq!(
        extopo(&["sweep", "--field", bad.to_str().unwrap()])
            .status
            .code(),
        Some(3)
    );
}

#[test]
fn states_prints_counts() {
    let o = extopo(&["states", "--b0", "2", "--b1", "2"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(
        (
            v["formula"].as_u64(),
            v["vector"].as_u64(),
            v["composition"].as_u64()
        ),
        (Some(2), Some(2), Some(2))
    );

    let o = extopo(&["states", "--b0", "4", "--b1", "4", "--list"]);
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["vector"], 5);
    assert_eq!(v["formula"], 4);
    assert_eq!(v["discrepancy"], true);
    assert_eq!(v["states"].as_array().unwrap().len(), 5);
}

#[test]
fn states_rejects_negative_input() {
    assert_eq!(
        extopo(&["states", "--b0", "-1", "--b1", "2"]).status.code(),
        Some(2)
    );
}

#[test]
fn spectrum_reports_type_two_stability() {
    let o = extopo(&[
        "spectrum",
        "--alpha",
        "0",
        "--klow",
        "0.1",
        "--khigh",
        "1",
        "--rs",
        "0.0001",
        "--boxsize",
        "512",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert!((v["rc_ratio_double_box"].as_f64().unwrap() - 1.0).abs() < 1e-6);
}

const SMOKE: &str = "
side = 64
rs = 2
n_realizations = 2
thresholds = -1:1:1
master_seed = 3
verbosity = 0
";

#[test]
fn ensemble_smoke_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, SMOKE).unwrap();
    let out = dir.path().join("out");
    let o = extopo(&[
        "ensemble",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--workers",
        "2",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for name in [
        "manifest.json",
        "summary.csv",
        "realizations.csv",
        "fits.csv",
        "duality.csv",
        "hist_chi_-1.00.csv",
    ] {
        assert!(out.join(name).exists(), "{name}");
    }
    assert!(!out.join("INCOMPLETE").exists());
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let hash = manifest["hash"].as_str().unwrap();
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 4);
    assert!(summary.lines().skip(1).all(|l| l.ends_with(hash)));
}

#[test]
fn ensemble_chi_fit_at_zero_is_invalid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        SMOKE
            .replace("thresholds = -1:1:1", "thresholds = 0")
            .replace("n_realizations = 2", "n_realizations = 8"),
    )
    .unwrap();
    let out = dir.path().join("out");
    assert!(extopo(&[
        "ensemble",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap()
    ])
    .status
    .success());
    let mut rdr = csv::Reader::from_path(out.join("fits.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let chi = rdr
        .records()
        .map(Result::unwrap)
        .find(|r| &r[col("statistic")] == "chi" && &r[col("fitted_from")] == "chi")
        .expect("chi fit row");
    assert_eq!(&chi[col("valid")], "false");
}

#[test]
fn ensemble_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, format!("{SMOKE}\nbogus = 1\n")).unwrap();
    let out = dir.path().join("out");
    assert_eq!(
        extopo(&[
            "ensemble",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap()
        ])
        .status
        .code(),
        Some(2)
    );
    fs::write(&cfg, SMOKE).unwrap();
    // no output directory anywhere
    assert_eq!(
        extopo(&["ensemble", cfg.to_str().unwrap()]).status.code(),
        Some(2)
    );
}

#[test]
fn failed_ensemble_leaves_marker() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    // amplitude 0 yields constant fields, which cannot be thresholded in units of sigma
    fs::write(&cfg, format!("{SMOKE}\namplitude = 0\n")).unwrap();
    let out = dir.path().join("out");
    let o = extopo(&[
        "ensemble",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(4));
    let marker = fs::read_to_string(out.join("INCOMPLETE")).unwrap();
    assert!(marker.contains("failed"));
}
