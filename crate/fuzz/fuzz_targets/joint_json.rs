#![no_main]

use libfuzzer_sys::fuzz_target;
use wigner_lab::measurement::JointDistribution;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(j) = JointDistribution::from_json(text) {
        let back = JointDistribution::from_json(&j.to_json()).expect("encoded joint decodes");
        assert_eq!(back, j);
    }
});
