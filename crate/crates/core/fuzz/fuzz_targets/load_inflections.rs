#![no_main]

use libfuzzer_sys::fuzz_target;
use lmgec::lexicon::{InflectionDb, OovPolicy, Vocabulary};

fuzz_target!(|data: &[u8]| {
    let Ok(db) = InflectionDb::read(data) else {
        return;
    };
    let vocab = Vocabulary::from_counts(db.entries().iter().map(|e| (e.lemma.clone(), 1)));
    for entry in db.entries() {
        for form in db.forms_of(&entry.lemma, &vocab, OovPolicy::Drop) {
            assert!(vocab.contains(&form));
        }
    }
});
