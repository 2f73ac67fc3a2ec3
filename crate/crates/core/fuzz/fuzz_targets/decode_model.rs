#![no_main]

use libfuzzer_sys::fuzz_target;
use lmgec::scorer::NGramModel;

fuzz_target!(|data: &[u8]| {
    let Ok(model) = NGramModel::from_bytes(data) else {
        return;
    };
    let words: Vec<String> = model.vocabulary().iter().take(8).cloned().collect();
    let _ = model.log_prob_words(&words, true);
    let again = NGramModel::from_bytes(&model.to_bytes()).expect("re-encoded model decodes");
    assert_eq!(again.to_bytes(), model.to_bytes());
});
