use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fmds(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fmds")).current_dir(dir).args(args).output().expect("binary runs")
}

fn fmds_env(dir: &Path, args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fmds"))
        .current_dir(dir)
        .env(key, value)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn ok(o: &Output) {
    assert!(o.status.success(), "exit {:?}: {}", o.status.code(), stderr(o));
}

fn simulated(dir: &Path) {
    ok(&fmds(dir, &["simulate", "--kind", "binary", "--seed", "7", "--replicate", "2", "--out", "sim"]));
    ok(&fmds(dir, &["distance", "--table", "sim/abundance.csv", "--metric", "euclidean", "--out", "d.csv"]));
}

#[test]
fn simulate_writes_file_contract() {
    let dir = tempfile::tempdir().unwrap();
    ok(&fmds(dir.path(), &["simulate", "--kind", "binary", "--seed", "7", "--out", "sim"]));
    let table = fs::read_to_string(dir.path().join("sim/abundance.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 101);
    assert_eq!(lines[0], "sample_id,F1,F2,F3,F4");
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 5));
    assert!(!table.contains('\r'));
    let labels = fs::read_to_string(dir.path().join("sim/labels.csv")).unwrap();
    assert_eq!(labels.lines().next(), Some("sample_id,label"));
    assert_eq!(labels.lines().count(), 101);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("sim/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["seeds"]["seed"], 7);
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 2);
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        ok(&fmds(dir.path(), &["simulate", "--kind", "ternary", "--seed", "11", "--out", out]));
    }
    for f in ["abundance.csv", "labels.csv"] {
        assert_eq!(fs::read(dir.path().join("a").join(f)).unwrap(), fs::read(dir.path().join("b").join(f)).unwrap());
    }
}

#[test]
fn unwritable_output_fails() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("file"), "x").unwrap();
    let o = fmds(dir.path(), &["simulate", "--kind", "binary", "--out", "file/sub"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn wunifrac_needs_a_tree() {
    let dir = tempfile::tempdir().unwrap();
    ok(&fmds(dir.path(), &["simulate", "--kind", "binary", "--out", "sim"]));
    let o = fmds(dir.path(), &["distance", "--table", "sim/abundance.csv", "--metric", "wunifrac", "--out", "w.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--tree"));
}

#[test]
fn tree_missing_a_feature_names_it() {
    let dir = tempfile::tempdir().unwrap();
    ok(&fmds(dir.path(), &["simulate", "--kind", "binary", "--out", "sim"]));
    fs::write(dir.path().join("t.nwk"), "((F1:1,F2:1):1,F3:2);").unwrap();
    let o = fmds(
        dir.path(),
        &["distance", "--table", "sim/abundance.csv", "--metric", "wunifrac", "--tree", "t.nwk", "--out", "w.csv"],
    );
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("F4"), "{}", stderr(&o));

    fs::write(dir.path().join("t.nwk"), "((F1:1,F2:1):1,(F3:1,F4:0.5):2);").unwrap();
    ok(&fmds(
        dir.path(),
        &["distance", "--table", "sim/abundance.csv", "--metric", "wunifrac", "--tree", "t.nwk", "--out", "w.csv"],
    ));
}

#[test]
fn distance_file_reproduces_matrix_exactly() {
    let dir = tempfile::tempdir().unwrap();
    simulated(dir.path());
    let text = fs::read_to_string(dir.path().join("sim/abundance.csv")).unwrap();
    let rows: Vec<Vec<f64>> =
        text.lines().skip(1).map(|l| l.split(',').skip(1).map(|v| v.parse().unwrap()).collect()).collect();
    let ids: Vec<String> = text.lines().skip(1).map(|l| l.split(',').next().unwrap().to_string()).collect();
    let features: Vec<String> = (1..=4).map(|i| format!("F{i}")).collect();
    let table = fmds_core::AbundanceTable::new(ids, features, rows).unwrap();
    let expected = fmds_core::dist::euclidean(&table);

    let d = fs::read_to_string(dir.path().join("d.csv")).unwrap();
    for (i, line) in d.lines().skip(1).enumerate() {
        for (j, v) in line.split(',').skip(1).enumerate() {
            assert_eq!(v.parse::<f64>().unwrap().to_bits(), expected.get(i, j).to_bits());
        }
    }
}

#[test]
fn bray_curtis_on_empty_samples_is_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("t.csv"), "sample_id,a,b\nS1,0,0\nS2,0,0\nS3,1,2\n").unwrap();
    let o = fmds(dir.path(), &["distance", "--table", "t.csv", "--metric", "braycurtis", "--out", "b.csv"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn lambda_outside_unit_interval_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    simulated(dir.path());
    let o = fmds(
        dir.path(),
        &["embed", "--distance", "d.csv", "--labels", "sim/labels.csv", "--method", "fmds", "--lambda", "1.5", "--out", "e.csv"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("[0,1]"));
}

#[test]
fn mds_ignores_labels_with_warning() {
    let dir = tempfile::tempdir().unwrap();
    simulated(dir.path());
    let o = fmds(dir.path(), &["embed", "--distance", "d.csv", "--labels", "sim/labels.csv", "--method", "mds", "--out", "m.csv"]);
    ok(&o);
    assert!(stderr(&o).contains("warning"));
    let text = fs::read_to_string(dir.path().join("m.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("sample_id,x,y"));
    assert!(dir.path().join("m.trace.csv").exists());
}

#[test]
fn fmds_trace_reaches_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    simulated(dir.path());
    ok(&fmds(
        dir.path(),
        &["embed", "--distance", "d.csv", "--labels", "sim/labels.csv", "--method", "fmds", "--lambda", "1.0", "--seed", "3", "--out", "e.csv"],
    ));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("e.csv.manifest.json")).unwrap()).unwrap();
    let p_x = manifest["results"]["p_x"].as_f64().unwrap();
    let trace = fs::read_to_string(dir.path().join("e.trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next(), Some("iteration,raw_stress,confirmatory,confirmatory_ratio,objective,p_z,f_z,delta,fz_fx"));
    let p_z: Vec<f64> = lines.map(|l| l.split(',').nth(5).unwrap().parse().unwrap()).collect();
    assert!(!p_z.is_empty());
    assert!((p_z.last().unwrap() - p_x).abs() < 0.01);
    let embedding = fs::read_to_string(dir.path().join("e.csv")).unwrap();
    assert_eq!(embedding.lines().next(), Some("sample_id,x,y,label"));
}

#[test]
fn fmds_error_exit_codes_are_distinct() {
    let dir = tempfile::tempdir().unwrap();
    simulated(dir.path());
    let labels = fs::read_to_string(dir.path().join("sim/labels.csv")).unwrap();
    let unbalanced: String = labels
        .lines()
        .enumerate()
        .map(|(i, l)| if i == 1 { l.replace(",0", ",1") } else { l.to_string() } + "\n")
        .collect();
    fs::write(dir.path().join("unb.csv"), unbalanced).unwrap();
    let o = fmds(dir.path(), &["embed", "--distance", "d.csv", "--labels", "unb.csv", "--method", "fmds", "--out", "u.csv"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("unbalanced"));

    let o = fmds(
        dir.path(),
        &["embed", "--distance", "d.csv", "--labels", "sim/labels.csv", "--method", "fmds", "--lambda", "0.05", "--max-iter", "1", "--out", "n.csv"],
    );
    assert_eq!(o.status.code(), Some(5), "{}", stderr(&o));
    assert!(dir.path().join("n.csv").exists());
    assert!(dir.path().join("n.trace.csv").exists());
}

#[test]
fn permanova_reports_json() {
    let dir = tempfile::tempdir().unwrap();
    simulated(dir.path());
    let o = fmds(dir.path(), &["permanova", "--input", "d.csv", "--labels", "sim/labels.csv", "--seed", "99"]);
    ok(&o);
    let text = String::from_utf8(o.stdout).unwrap();
    let keys: Vec<&str> = text.lines().filter_map(|l| l.trim().split('"').nth(1)).collect();
    assert_eq!(&keys[..4], &["F", "p", "K", "seed"]);
    let report: serde_json::Value = serde_json::from_str(&text).unwrap();
    let p = report["p"].as_f64().unwrap();
    assert!((0.0..=0.02).contains(&p), "p = {p}");
    assert_eq!(report["K"], 999);

    let o = fmds(dir.path(), &["permanova", "--input", "d.csv", "--labels", "sim/labels.csv", "-k", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn evaluate_reports_and_checks_ids() {
    let dir = tempfile::tempdir().unwrap();
    simulated(dir.path());
    ok(&fmds(dir.path(), &["embed", "--distance", "d.csv", "--method", "mds", "--out", "m.csv"]));
    ok(&fmds(
        dir.path(),
        &["evaluate", "--distance", "d.csv", "--embedding", "m.csv", "--labels", "sim/labels.csv", "--k-local", "7", "--k-global", "49", "--out", "q.json"],
    ));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("q.json")).unwrap()).unwrap();
    for key in ["trustworthiness_local", "continuity_global", "stress1", "shepard_r", "f_correlation", "f_rank_ratio"] {
        assert!(report[key].is_number(), "{key}");
    }
    let shepard = fs::read_to_string(dir.path().join("q.shepard.csv")).unwrap();
    assert_eq!(shepard.lines().count(), 1 + 100 * 99 / 2);

    let o = fmds(
        dir.path(),
        &["evaluate", "--distance", "d.csv", "--embedding", "m.csv", "--labels", "sim/labels.csv", "--k-global", "75", "--out", "q.json"],
    );
    assert_eq!(o.status.code(), Some(3));
    ok(&fmds(
        dir.path(),
        &["evaluate", "--distance", "d.csv", "--embedding", "m.csv", "--labels", "sim/labels.csv", "--k-global", "75", "--force-k", "--out", "q.json"],
    ));

    let m = fs::read_to_string(dir.path().join("m.csv")).unwrap();
    let short: String = m.lines().filter(|l| !l.starts_with("S037,")).map(|l| format!("{l}\n")).collect();
    fs::write(dir.path().join("short.csv"), short).unwrap();
    let o = fmds(
        dir.path(),
        &["evaluate", "--distance", "d.csv", "--embedding", "short.csv", "--labels", "sim/labels.csv", "--out", "q.json"],
    );
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("S037"));
}

#[test]
fn isometric_embedding_scores_perfectly() {
    let dir = tempfile::tempdir().unwrap();
    let n = 30;
    let pts: Vec<[f64; 2]> = (0..n).map(|i| {
        let t = i as f64;
        [(t * 0.7).sin() * 3.0 + if i < n / 2 { 0.0 } else { 5.0 }, (t * 1.3).cos() * 2.0 + 0.1 * t]
    }).collect();
    let ids: Vec<String> = (0..n).map(|i| format!("p{i}")).collect();
    let mut d = String::from("");
    for id in &ids {
        d.push(',');
        d.push_str(id);
    }
    d.push('\n');
    for (i, a) in pts.iter().enumerate() {
        d.push_str(&ids[i]);
        for b in &pts {
            d.push_str(&format!(",{}", ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()));
        }
        d.push('\n');
    }
    fs::write(dir.path().join("d.csv"), d).unwrap();
    let mut e = String::from("sample_id,x,y,label\n");
    for (i, p) in pts.iter().enumerate() {
        // rotated by 90 degrees and shifted
        e.push_str(&format!("{},{},{},{}\n", ids[i], -p[1] + 10.0, p[0] - 4.0, usize::from(i >= n / 2)));
    }
    fs::write(dir.path().join("e.csv"), e).unwrap();
    ok(&fmds(dir.path(), &["evaluate", "--distance", "d.csv", "--embedding", "e.csv", "--out", "q.json"]));
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("q.json")).unwrap()).unwrap();
    for key in ["trustworthiness_local", "trustworthiness_global", "continuity_local", "continuity_global"] {
        assert_eq!(r[key].as_f64().unwrap(), 1.0, "{key}");
    }
    assert!(r["stress1"].as_f64().unwrap() < 1e-20);
    assert!((r["shepard_r"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

struct SvgEllipse {
    cx: f64,
    cy: f64,
    rx: f64,
    ry: f64,
}

fn attr(tag: &str, name: &str) -> f64 {
    let key = format!(" {name}=\"");
    let start = tag.find(&key).unwrap() + key.len();
    tag[start..].split('"').next().unwrap().parse().unwrap()
}

fn ellipses(svg: &str) -> Vec<SvgEllipse> {
    svg.lines()
        .filter(|l| l.starts_with("<ellipse"))
        .map(|l| SvgEllipse { cx: attr(l, "cx"), cy: attr(l, "cy"), rx: attr(l, "rx"), ry: attr(l, "ry") })
        .collect()
}

#[test]
fn separated_groups_give_disjoint_ellipses() {
    let dir = tempfile::tempdir().unwrap();
    let mut e = String::from("sample_id,x,y,label\n");
    for i in 0..40 {
        let t = i as f64 * 0.9;
        let (x, y) = (t.sin(), (1.7 * t).cos() * 0.6);
        let label = i % 2;
        let shift = if label == 0 { -8.0 } else { 8.0 };
        e.push_str(&format!("s{i},{},{},{label}\n", x + shift, y));
    }
    fs::write(dir.path().join("e.csv"), e).unwrap();
    ok(&fmds(dir.path(), &["plot", "--embedding", "e.csv", "--out", "p.svg"]));
    let svg = fs::read_to_string(dir.path().join("p.svg")).unwrap();
    let es = ellipses(&svg);
    assert_eq!(es.len(), 2);
    // Each ellipse lies inside the circle of its major semi-axis.
    let gap = ((es[0].cx - es[1].cx).powi(2) + (es[0].cy - es[1].cy).powi(2)).sqrt();
    assert!(gap > es[0].rx.max(es[0].ry) + es[1].rx.max(es[1].ry), "gap {gap}");
    assert!(svg.contains("data-level=\"0.68\""));
}

#[test]
fn single_point_group_skips_ellipse() {
    let dir = tempfile::tempdir().unwrap();
    let e = "sample_id,x,y,label\na,0,0,0\nb,1,0,0\nc,0,1,0\nd,1,1,0\ne,5,5,1\n";
    fs::write(dir.path().join("e.csv"), e).unwrap();
    let o = fmds(dir.path(), &["plot", "--embedding", "e.csv", "--out", "p.svg"]);
    ok(&o);
    assert!(stderr(&o).contains("warning"));
    let svg = fs::read_to_string(dir.path().join("p.svg")).unwrap();
    assert_eq!(ellipses(&svg).len(), 1);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    simulated(dir.path());
    let args = |out: &'static str| {
        vec!["embed", "--distance", "d.csv", "--labels", "sim/labels.csv", "--method", "fmds", "--lambda", "0.6", "--seed", "5", "--out", out]
    };
    ok(&fmds_env(dir.path(), &args("one.csv"), "FMDS_THREADS", "1"));
    ok(&fmds_env(dir.path(), &args("four.csv"), "FMDS_THREADS", "4"));
    assert_eq!(fs::read(dir.path().join("one.csv")).unwrap(), fs::read(dir.path().join("four.csv")).unwrap());
    assert_eq!(
        fs::read(dir.path().join("one.trace.csv")).unwrap(),
        fs::read(dir.path().join("four.trace.csv")).unwrap()
    );
    let o = fmds_env(dir.path(), &args("bad.csv"), "FMDS_THREADS", "zero");
    assert_eq!(o.status.code(), Some(2));
}
