use std::fs;
use std::path::{Path, PathBuf};

use wigner_lab::cli::{run_cli, EXIT_OK};

const UPDATE_VAR: &str = "WIGNER_LAB_UPDATE_GOLDEN";

#[test]
fn run_json_matches_golden_files() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let mut files: Vec<PathBuf> = fs::read_dir(root.join("examples"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "scn"))
        .collect();
    files.sort();
    assert!(!files.is_empty());
    let update = std::env::var_os(UPDATE_VAR).is_some();
    for file in files {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let args = ["wigner-lab", "--exact", "run", "--json", file.to_str().unwrap()];
        assert_eq!(run_cli(args, &mut out, &mut err), EXIT_OK, "{}", String::from_utf8_lossy(&err));
        let out = String::from_utf8(out).unwrap();
        let golden = root
            .join("tests/golden")
            .join(file.file_stem().unwrap())
            .with_extension("json");
        if update {
            fs::write(&golden, &out).unwrap();
        } else {
            let expected = fs::read_to_string(&golden)
                .unwrap_or_else(|_| panic!("missing {}; rerun with {UPDATE_VAR}=1", golden.display()));
            assert_eq!(out, expected, "{}", file.display());
        }
    }
}
