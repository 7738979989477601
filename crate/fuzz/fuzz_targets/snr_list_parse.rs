#![no_main]

use libfuzzer_sys::fuzz_target;
use planarpose::scenario::parse_snr_list;

fuzz_target!(|data: &str| {
    // Accept or reject, never panic; accepted lists obey the contract.
    if let Ok(list) = parse_snr_list(data) {
        assert!(!list.is_empty());
        assert!(list.iter().all(|v| v.is_finite()));
        assert!(list.windows(2).all(|w| w[1] > w[0]));
    }
});
