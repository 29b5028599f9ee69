#![no_main]

use fredholm_disk::io::GridConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = GridConfig::from_json(s) {
        // accepted configs always yield a grid
        let grid = cfg.grid().expect("validated config builds a grid");
        assert_eq!(grid.len(), cfg.n_r);
        assert!(cfg.n_theta.is_power_of_two() && cfg.n_theta >= 4);
    }
});
