#![no_main]

use libfuzzer_sys::fuzz_target;
use lmgec::lexicon::FunctionWords;

fuzz_target!(|data: &[u8]| {
    let mid = data.first().map_or(0, |&b| b as usize).min(data.len());
    let (preps, dets) = data.split_at(mid);
    if let Ok(fw) = FunctionWords::read(preps, dets) {
        for w in fw.prepositions().iter().chain(fw.determiners()) {
            assert!(!w.is_empty());
            assert_eq!(*w, w.to_lowercase());
        }
    }
});
