mod common;

use common::random_dag;
use fredom::io::{
    dag_to_csv, dag_to_dot, dag_to_json, emit_dag, ingest, parse_dag_csv, parse_dag_json, read_dag, read_series,
    series_to_csv, DagFormat, DagMeta, SeriesKind,
};
use fredom::rng::{complex_normal, normal, rng_from_seed};
use fredom::{CMatrix, RMatrix, SummaryDag, TimeSeriesMatrix, C64};
use proptest::prelude::*;

fn read(text: &str, kind: SeriesKind) -> fredom::Result<TimeSeriesMatrix> {
    read_series(text.as_bytes(), kind)
}

#[test]
fn real_csv_with_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.csv");
    std::fs::write(&path, "a,b,c\n1,2,3\n4.5,-6,7e-3\n").unwrap();
    let x = ingest(&path, SeriesKind::Real).unwrap();
    assert_eq!((x.len(), x.dim()), (2, 3));
    assert!(x.is_real());
    assert_eq!(x.labels(), ["a", "b", "c"]);
    assert_eq!(x.data()[(1, 2)], C64::new(7e-3, 0.0));
}

#[test]
fn complex_csv_pairs_columns() {
    let x = read("a_re,a_im,b_re,b_im\n1,2,3,4\n5,6,7,8\n", SeriesKind::Complex).unwrap();
    assert_eq!((x.len(), x.dim()), (2, 2));
    assert_eq!(x.labels(), ["a", "b"]);
    assert_eq!(x.data()[(1, 1)], C64::new(7.0, 8.0));
    assert!(read("a_re,a_im,b_re\n1,2,3\n", SeriesKind::Complex).is_err());
    assert!(read("a_re,b_im\n1,2\n", SeriesKind::Complex).is_err());
}

#[test]
fn bad_cells_are_reported_with_position() {
    for (text, needle) in [
        ("a,b\n1,2\n3,NaN\n", "row 2, column 'b'"),
        ("a,b\ninf,2\n", "row 1, column 'a'"),
        ("a,b\n1,x\n", "row 1, column 'b'"),
    ] {
        let err = read(text, SeriesKind::Real).unwrap_err().to_string();
        assert!(err.contains(needle), "{err}");
    }
    assert!(read("a,b\n1,2,3\n", SeriesKind::Real).is_err());
    assert!(read("a,b\n", SeriesKind::Real).is_err());
    assert!(ingest("/nonexistent/file.csv", SeriesKind::Real).is_err());
}

#[test]
fn series_csv_round_trips_exactly() {
    let mut rng = rng_from_seed(1);
    let real = TimeSeriesMatrix::from_real(&RMatrix::from_fn(30, 3, |_, _| normal(&mut rng) * 1e3)).unwrap();
    let back = read(&series_to_csv(&real), SeriesKind::Real).unwrap();
    assert_eq!(back.data(), real.data());
    assert_eq!(back.labels(), real.labels());
    let complex = TimeSeriesMatrix::from_complex(CMatrix::from_fn(20, 2, |_, _| complex_normal(&mut rng, 1.0))).unwrap();
    let text = series_to_csv(&complex);
    assert!(text.starts_with("X1_re,X1_im,X2_re,X2_im\n"));
    assert_eq!(read(&text, SeriesKind::Complex).unwrap().data(), complex.data());
}

#[test]
fn empty_graph_csv_is_all_zeros() {
    let dag = SummaryDag::empty(3).with_labels(vec!["u".into(), "v".into(), "w".into()]).unwrap();
    assert_eq!(dag_to_csv(&dag), "u,v,w\n0,0,0\n0,0,0\n0,0,0\n");
}

#[test]
fn chain_dot_has_one_line_per_edge() {
    let dag = SummaryDag::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
    let dot = dag_to_dot(&dag);
    let edges: Vec<&str> = dot.lines().filter(|l| l.contains("->")).collect();
    assert_eq!(edges, ["  \"X1\" -> \"X2\";", "  \"X2\" -> \"X3\";"]);
    assert!(dot.starts_with("digraph"));

    let mut w = CMatrix::zeros(3, 3);
    w[(1, 0)] = C64::new(0.12345, -2.0);
    w[(2, 1)] = C64::new(-1.0, 0.0);
    let weighted = dag.with_weights(w).unwrap();
    let dot = dag_to_dot(&weighted);
    assert!(dot.contains("\"X1\" -> \"X2\" [label=\"0.123-2.000i\"];"), "{dot}");
    assert!(dot.contains("\"X2\" -> \"X3\" [label=\"-1.000\"];"), "{dot}");
}

#[test]
fn json_round_trip_is_byte_identical() {
    let mut w = CMatrix::zeros(3, 3);
    w[(2, 0)] = C64::new(0.1 + 0.2, -1.0 / 3.0);
    let dag = SummaryDag::from_edges(3, &[(0, 2)]).unwrap().with_weights(w).unwrap();
    let meta = DagMeta { order: Some(vec![1, 0, 2]), lambda: Some(0.0123456789012345), support: Some(0.875) };
    let text = dag_to_json(&dag, &meta).unwrap();
    let (parsed, parsed_meta) = parse_dag_json(&text).unwrap();
    assert_eq!(parsed_meta, meta);
    assert_eq!(dag_to_json(&parsed, &parsed_meta).unwrap(), text);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["edges"][0]["from"], "X1");
    assert_eq!(v["edges"][0]["to"], "X3");
    assert_eq!(v["order"], serde_json::json!(["X2", "X1", "X3"]));
}

#[test]
fn files_written_and_read_back() {
    let dir = tempfile::tempdir().unwrap();
    let dag = SummaryDag::from_edges(4, &[(3, 0), (0, 1), (3, 2)]).unwrap();
    for (format, name) in [(DagFormat::Csv, "g.csv"), (DagFormat::Json, "g.json")] {
        let path = dir.path().join(name);
        emit_dag(&dag, format, &DagMeta::default(), &path).unwrap();
        assert_eq!(read_dag(&path).unwrap().edges(), dag.edges());
    }
    let dot = dir.path().join("g.dot");
    emit_dag(&dag, DagFormat::Dot, &DagMeta::default(), &dot).unwrap();
    assert!(read_dag(&dot).is_err());
    assert!(emit_dag(&dag, DagFormat::Csv, &DagMeta::default(), dir.path().join("missing/g.csv")).is_err());
    assert!(parse_dag_csv("a,b\n0,1\n1,0\n").is_err());
    assert!(parse_dag_csv("a,b\n0,2\n0,0\n").is_err());
    assert!(parse_dag_json("{\"labels\":[\"a\"],\"edges\":[{\"from\":\"a\",\"to\":\"z\",\"weight_re\":1,\"weight_im\":0}]}").is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dag_exports_round_trip(seed in any::<u64>(), p in 1usize..7) {
        let mut rng = rng_from_seed(seed);
        let dag = random_dag(p, 0.4, &mut rng);
        let w = CMatrix::from_fn(p, p, |i, j| if dag.has_edge(j, i) { complex_normal(&mut rng, 1.0) } else { C64::new(0.0, 0.0) });
        let dag = dag.with_weights(w).unwrap();
        let csv = dag_to_csv(&dag);
        prop_assert_eq!(parse_dag_csv(&csv).unwrap().edges(), dag.edges());
        let meta = DagMeta { order: dag.topological_order(), lambda: Some(normal(&mut rng).abs()), support: None };
        let json = dag_to_json(&dag, &meta).unwrap();
        let (back, back_meta) = parse_dag_json(&json).unwrap();
        prop_assert_eq!(back.weights(), dag.weights());
        prop_assert_eq!(dag_to_json(&back, &back_meta).unwrap(), json);
        prop_assert_eq!(dag_to_dot(&back), dag_to_dot(&dag));
    }
}
