#![no_main]

use fredholm_disk::io::RhsSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(spec) = s.parse::<RhsSpec>() {
        // display output parses back to the same spec
        let shown = spec.to_string();
        assert_eq!(shown.parse::<RhsSpec>().expect("display reparses"), spec);
    }
});
