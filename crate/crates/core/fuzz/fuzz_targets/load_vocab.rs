#![no_main]

use libfuzzer_sys::fuzz_target;
use lmgec::lexicon::Vocabulary;

fuzz_target!(|data: &[u8]| {
    let Ok(vocab) = Vocabulary::read(data) else {
        return;
    };
    let mut out = Vec::new();
    vocab.write(&mut out).unwrap();
    let again = Vocabulary::read(&out[..]).expect("written vocabulary parses");
    assert_eq!(again, vocab);
});
