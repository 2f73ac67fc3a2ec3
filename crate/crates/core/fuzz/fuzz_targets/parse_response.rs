#![no_main]

use libfuzzer_sys::fuzz_target;
use lmgec::scorer::protocol::parse_response;

fuzz_target!(|data: &[u8]| {
    let Ok(line) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(resp) = parse_response(line) {
        assert_eq!(parse_response(resp.to_line().trim_end()).unwrap(), resp);
    }
});
