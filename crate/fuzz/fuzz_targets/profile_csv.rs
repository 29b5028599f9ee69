#![no_main]

use std::sync::Arc;

use fredholm_disk::io::{parse_profiles, profiles_to_field, write_profiles};
use fredholm_disk::RadialGrid;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(rows) = parse_profiles(data) else { return };
    for row in &rows {
        assert!(row.r > 0.0 && row.r.is_finite() && row.re.is_finite() && row.im.is_finite());
    }
    let grid = Arc::new(RadialGrid::new(0.5, 4.0, 16).expect("fixed grid"));
    if let Ok(field) = profiles_to_field(&rows, grid.clone(), 8) {
        // written profiles read back to the same field
        let mut buf = Vec::new();
        write_profiles(&mut buf, &field).expect("write to memory");
        let again = parse_profiles(buf.as_slice()).expect("own output parses");
        assert_eq!(profiles_to_field(&again, grid, 8).expect("own output fits"), field);
    }
});
