//! German cardinal number words.

pub const MAX_CARDINAL: u64 = 999_999;

const UNITS: [&str; 10] = [
    "null", "eins", "zwei", "drei", "vier", "fünf", "sechs", "sieben", "acht", "neun",
];
const TEENS: [&str; 10] = [
    "zehn", "elf", "zwölf", "dreizehn", "vierzehn", "fünfzehn", "sechzehn", "siebzehn",
    "achtzehn", "neunzehn",
];
const TENS: [&str; 10] = [
    "", "", "zwanzig", "dreißig", "vierzig", "fünfzig", "sechzig", "siebzig", "achtzig",
    "neunzig",
];

/// Spells out `n` as a single lowercase German word, or `None` above
/// [`MAX_CARDINAL`].
///
/// A trailing one is "eins" (`101` → "einhunderteins"); a one inside a
/// compound is "ein" (`21` → "einundzwanzig", `1000` → "eintausend").
pub fn cardinal_de(n: u64) -> Option<String> {
    if n > MAX_CARDINAL {
        return None;
    }
    if n == 0 {
        return Some(UNITS[0].to_string());
    }
    let mut out = String::new();
    let thousands = (n / 1000) as usize;
    let rest = (n % 1000) as usize;
    if thousands > 0 {
        push_below_thousand(&mut out, thousands, false);
        out.push_str("tausend");
    }
    if rest > 0 {
        push_below_thousand(&mut out, rest, true);
    }
    Some(out)
}

fn push_below_thousand(out: &mut String, n: usize, terminal: bool) {
    let hundreds = n / 100;
    let rest = n % 100;
    if hundreds > 0 {
        push_unit(out, hundreds, false);
        out.push_str("hundert");
    }
    if rest > 0 {
        push_below_hundred(out, rest, terminal);
    }
}

fn push_below_hundred(out: &mut String, n: usize, terminal: bool) {
    match n {
        0 => {}
        1..=9 => push_unit(out, n, terminal),
        10..=19 => out.push_str(TEENS[n - 10]),
        _ => {
            let unit = n % 10;
            if unit > 0 {
                push_unit(out, unit, false);
                out.push_str("und");
            }
            out.push_str(TENS[n / 10]);
        }
    }
}

fn push_unit(out: &mut String, n: usize, terminal: bool) {
    if n == 1 && !terminal {
        out.push_str("ein");
    } else {
        out.push_str(UNITS[n]);
    }
}
