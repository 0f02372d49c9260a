//! Fixed-precision float rendering for CSV/JSON outputs.
//!
//! All numeric output goes through [`fmt_sig`] so reruns produce
//! byte-identical files.

/// Significant digits used for every serialized float.
pub const SIG_DIGITS: usize = 9;

/// Formats `x` with [`SIG_DIGITS`] significant digits in the style of C's
/// `%.9g` (trailing zeros stripped).
pub fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..SIG_DIGITS as i32).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        strip_zeros(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", strip_zeros(mantissa.to_string()), exp)
    }
}

/// Rounds `x` to the value that [`fmt_sig`] would print.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    fmt_sig(x).parse().expect("fmt_sig output parses")
}

fn strip_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats_like_percent_g() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(-0.0), "0");
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(2.5), "2.5");
        assert_eq!(fmt_sig(-1.36), "-1.36");
        assert_eq!(fmt_sig(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_sig(123456789.4), "123456789");
        assert_eq!(fmt_sig(1234567890.0), "1.23456789e9");
        assert_eq!(fmt_sig(9.9999999999), "10");
        assert_eq!(fmt_sig(1.5e-7), "1.5e-7");
        assert_eq!(fmt_sig(0.000123), "0.000123");
        assert_eq!(fmt_sig(0.0000123), "1.23e-5");
    }

    #[test]
    fn round_sig_is_stable() {
        for x in [1.0 / 7.0, -2.0e12 / 3.0, 6.02214076e23, 1e-300] {
            let r = round_sig(x);
            assert_eq!(fmt_sig(r), fmt_sig(x));
            assert_eq!(round_sig(r), r);
        }
    }
}
