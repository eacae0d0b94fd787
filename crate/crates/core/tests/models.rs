use std::fs;
use std::path::PathBuf;

use datacheck_core::syntax::{parse_linked_property, parse_model, print_model};

fn models_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

#[test]
fn every_model_parses_and_round_trips() {
    let mut seen = 0;
    for entry in fs::read_dir(models_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("dds") {
            continue;
        }
        let src = fs::read_to_string(&path).unwrap();
        let d = parse_model(&src).unwrap_or_else(|e| panic!("{}: {}", path.display(), e));
        assert!(d.validate().is_empty(), "{}: {:?}", path.display(), d.validate());
        assert_eq!(parse_model(&print_model(&d)).unwrap(), d, "{}", path.display());
        seen += 1;
    }
    assert!(seen >= 6);
}

#[test]
fn auction_properties_parse() {
    let d = parse_model(&fs::read_to_string(models_dir().join("auction.dds")).unwrap()).unwrap();
    let props = fs::read_to_string(models_dir().join("auction.props")).unwrap();
    let lines: Vec<&str> = props.lines().filter(|l| !l.trim().is_empty()).collect();
    for l in &lines {
        parse_linked_property(l, &d).unwrap_or_else(|e| panic!("{}: {}", l, e));
    }
    assert_eq!(lines.len(), 5);
}
