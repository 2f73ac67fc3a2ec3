#![no_main]

use libfuzzer_sys::fuzz_target;
use lmgec::scorer::protocol::parse_request;

fuzz_target!(|data: &[u8]| {
    let Ok(line) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(req) = parse_request(line) {
        assert_eq!(parse_request(req.to_line().trim_end()).unwrap(), req);
    }
});
