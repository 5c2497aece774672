#![no_main]

use libfuzzer_sys::fuzz_target;
use proxlab::zoo::{parse_libsvm_str, to_libsvm_string, DataSource, Dataset};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok((features, labels)) = parse_libsvm_str(text, None) else {
        return;
    };
    assert_eq!(features.nrows(), labels.len());
    // Whatever parses must survive a write/read cycle.
    let ds = Dataset {
        features,
        labels,
        source: DataSource::Synthetic { seed: 0 },
    };
    let (again, y) = parse_libsvm_str(&to_libsvm_string(&ds), Some(ds.features.ncols())).unwrap();
    assert_eq!(again, ds.features);
    assert_eq!(y, ds.labels);
});
