#![no_main]

use libfuzzer_sys::fuzz_target;
use lmgec::m2::{parse_m2, write_m2_string};

fuzz_target!(|data: &[u8]| {
    let Ok(entries) = parse_m2(data) else {
        return;
    };
    let text = write_m2_string(&entries);
    let again = parse_m2(text.as_bytes()).expect("written M2 parses");
    assert_eq!(again, entries);
});
