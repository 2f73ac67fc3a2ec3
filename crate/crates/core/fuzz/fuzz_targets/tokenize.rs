#![no_main]

use libfuzzer_sys::fuzz_target;
use lmgec::{tokenize, Sentence};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let s = tokenize(text);
    for w in s.words() {
        assert!(!w.is_empty() && !w.contains(char::is_whitespace));
    }
    assert_eq!(Sentence::from_tokenized(&s.detokenize()), s);
    assert_eq!(tokenize(&s.detokenize()).len(), s.len());
});
