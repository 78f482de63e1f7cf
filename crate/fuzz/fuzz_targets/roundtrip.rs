#![no_main]

use libfuzzer_sys::fuzz_target;
use wigner_lab::dsl::parse_scenario;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(doc) = parse_scenario(text) else { return };
    let printed = doc.print();
    let again = parse_scenario(&printed).expect("printed text parses");
    assert_eq!(again.document, doc.document);
    assert_eq!(again.print(), printed);
});
