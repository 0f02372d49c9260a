// Clean German transcripts for TTS training: abbreviations from a lexicon,
// numbers spelled out, punctuation limited to the training charset.
//
// Run with `cargo run --example normalize_transcripts`.

use std::error::Error;

use voxforensics::corpus::TextNormalizer;

const LEXICON: &str = "from,to\nDr.,Doktor\nz.B.,zum Beispiel\nusw.,und so weiter\n";

const SENTENCES: [&str; 4] = [
    "Dr. Schmidt kam um 10 Uhr.",
    "Wir brauchen z.B. 2.500 Euro – oder mehr?",
    "Am 3. Oktober feiern wir.",
    "Äpfel, Birnen usw. (alles frisch)",
];

pub fn run_example() -> Result<Vec<(String, String)>, Box<dyn Error>> {
    let normalizer = TextNormalizer::from_lexicon_csv(LEXICON.as_bytes())?;
    SENTENCES
        .iter()
        .map(|s| Ok((s.to_string(), normalizer.normalize(s)?)))
        .collect()
}

fn main() -> Result<(), Box<dyn Error>> {
    for (raw, clean) in run_example()? {
        println!("{raw}\n  -> {clean}");
    }
    Ok(())
}
