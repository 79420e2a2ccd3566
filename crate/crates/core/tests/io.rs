use nalgebra::Matrix2;
use polab::channels::diattenuation_channel;
use polab::experiments::{run_experiment, Params};
use polab::fock::constructors::{noon_state, tetrahedron_state};
use polab::fock::FockBasis;
use polab::geometry::e3;
use polab::io::{emit_csv, load, parse, save, to_string, Document};
use polab::linalg::C64;
use polab::mueller::{mueller_diattenuation, JonesMatrix};
use polab::stokes::StokesVector;
use polab::Error;
use proptest::prelude::*;

fn round_trip(doc: &Document) -> Document {
    let text = to_string(doc).unwrap();
    let back = parse(&text).unwrap();
    assert_eq!(to_string(&back).unwrap(), text, "output is not byte-stable");
    back
}

#[test]
fn documents_round_trip() {
    let docs = vec![
        Document::Stokes(StokesVector::new(1.0, 0.1, -0.2, 1.0 / 3.0)),
        Document::Jones(JonesMatrix(Matrix2::new(
            C64::new(0.5, 0.1),
            C64::new(0.0, -0.3),
            C64::new(1e-300, 0.0),
            C64::new(-0.7, 0.2),
        ))),
        Document::Mueller(mueller_diattenuation(0.9, 0.4, &e3()).unwrap()),
        Document::State(tetrahedron_state(FockBasis::new(4)).unwrap()),
        Document::State(noon_state(2, FockBasis::new(3)).unwrap().to_density()),
        Document::Channel(diattenuation_channel(0.8, 0.3, &e3(), FockBasis::new(2)).unwrap()),
    ];
    for doc in &docs {
        let back = round_trip(doc);
        if !matches!(doc, Document::Channel(_)) {
            assert_eq!(&back, doc);
        }
    }
}

#[test]
fn reports_round_trip_including_missing_cells() {
    for name in ["decompositions", "higher-order"] {
        let report = run_experiment(name, &Params::new()).unwrap();
        round_trip(&Document::Report(report));
    }
}

#[test]
fn keys_are_sorted() {
    let text = to_string(&Document::Stokes(StokesVector::new(1.0, 0.0, 0.0, 0.0))).unwrap();
    assert!(text.find("\"s\"").unwrap() < text.find("\"type\"").unwrap());
}

#[test]
fn schema_errors_name_the_field() {
    let bad = r#"{"type": "mueller_matrix", "m": [[1,0,0,0],[0,1,0,0],[0,0,1],[0,0,0,1]]}"#;
    match parse(bad) {
        Err(Error::Schema { path, msg: message }) => {
            assert_eq!(path, "$.m[2]");
            assert!(message.contains("3 entries"), "{message}");
        }
        other => panic!("unexpected {other:?}"),
    }
    assert!(matches!(parse(r#"{"type": "teapot"}"#), Err(Error::Schema { .. })));
    assert!(matches!(parse("{not json"), Err(Error::Schema { .. })));
}

#[test]
fn files_and_csv() {
    let dir = std::env::temp_dir().join(format!("polab-io-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("s.json");
    let doc = Document::Stokes(StokesVector::new(2.0, 1.0, 0.0, 0.5));
    save(&path, &doc).unwrap();
    assert_eq!(load(&path).unwrap(), doc);

    let report = run_experiment("subset-trace", &Params::new()).unwrap();
    let files = emit_csv(&report, dir.join("subset.csv")).unwrap();
    assert_eq!(files.len(), report.tables.len());
    for (file, table) in files.iter().zip(&report.tables) {
        let text = std::fs::read_to_string(file).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), table.columns.join(","));
        assert_eq!(lines.count(), table.rows.len());
    }
    std::fs::remove_dir_all(&dir).unwrap();
}

proptest! {
    #[test]
    fn floats_survive_exactly(s in prop::array::uniform4(any::<f64>().prop_filter("finite", |x| x.is_finite()))) {
        let doc = Document::Stokes(StokesVector::from_array(s));
        let back = parse(&to_string(&doc).unwrap()).unwrap();
        match back {
            Document::Stokes(v) => {
                for k in 0..4 {
                    prop_assert_eq!(v.get(k).to_bits(), s[k].to_bits());
                }
            }
            other => prop_assert!(false, "wrong type {:?}", other),
        }
    }
}
