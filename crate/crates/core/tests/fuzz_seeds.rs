use std::fs;
use std::path::{Path, PathBuf};

use wigner_lab::dsl::{compile, parse_scenario};
use wigner_lab::measurement::JointDistribution;

fn seeds(target: &str) -> Vec<(PathBuf, String)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            let text = fs::read_to_string(&p).unwrap();
            (p, text)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds in {}", dir.display());
    out
}

#[test]
fn scenario_seeds_parse_and_compile() {
    for target in ["parse_scenario", "roundtrip", "compile"] {
        for (path, text) in seeds(target) {
            let doc = parse_scenario(&text).unwrap_or_else(|d| panic!("{}: {d:?}", path.display()));
            let printed = doc.print();
            assert_eq!(parse_scenario(&printed).unwrap().document, doc.document);
            compile(&text).unwrap_or_else(|d| panic!("{}: {d:?}", path.display()));
        }
    }
}

#[test]
fn joint_seeds_decode_and_round_trip() {
    for (path, text) in seeds("joint_json") {
        let j = JointDistribution::from_json(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(JointDistribution::from_json(&j.to_json()).unwrap(), j);
    }
}
