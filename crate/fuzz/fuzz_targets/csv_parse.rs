#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    // Parsing must never panic; whatever parses satisfies the dataset
    // invariants.
    for weight_col in [None, Some("w")] {
        if let Ok(parsed) = elgraph::io::parse_csv(data, weight_col) {
            assert!(!parsed.is_empty());
            assert!(parsed.dim() >= 1);
            assert!(parsed
                .weights()
                .iter()
                .all(|w| w.is_finite() && *w >= 0.0));
            assert!(parsed.weights().iter().any(|w| *w > 0.0));
        }
    }
});
