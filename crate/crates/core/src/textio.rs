//! Helpers shared by the deterministic text formats of the persistence
//! layers. All stores are line-oriented, tab-separated and written in a
//! canonical order so that serialization is diff-able and hash-stable.

use std::fmt::Write as _;

/// Escape a field so it survives tab-separated storage.
///
/// Escapes `\`, tab, newline and carriage return; everything else is
/// written verbatim.
pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

/// Inverse of [`escape`]. Unknown escape sequences are an error.
pub fn unescape(s: &str) -> Result<String, String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            other => return Err(format!("bad escape sequence \\{:?}", other)),
        }
    }
    Ok(out)
}

/// Shortest round-trip decimal representation of an `f64`.
///
/// Rust's `Display` for floats is exact under `str::parse::<f64>()`, so
/// tables written with this survive a save/load cycle bit-identically.
pub fn fmt_f64(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e15 {
        // keep integral values unambiguous ("1" would parse fine, but
        // "1.0" reads better in a numeric column)
        format!("{:.1}", x)
    } else {
        format!("{}", x)
    }
}

/// Parse an `f64` written by [`fmt_f64`].
pub fn parse_f64(s: &str) -> Result<f64, String> {
    s.parse::<f64>().map_err(|e| format!("bad float {:?}: {}", s, e))
}

/// Join fields with tabs, escaping each.
pub fn join_fields(fields: &[&str]) -> String {
    let mut line = String::new();
    for (i, f) in fields.iter().enumerate() {
        if i > 0 {
            line.push('\t');
        }
        let _ = write!(line, "{}", escape(f));
    }
    line
}

/// Split a tab-separated line and unescape each field.
pub fn split_fields(line: &str) -> Result<Vec<String>, String> {
    line.split('\t').map(unescape).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn float_roundtrip_exact() {
        for &x in &[0.0, -0.0, 1.0, -1.5, std::f64::consts::PI, 1e-300, 2.2250738585072014e-308] {
            let s = fmt_f64(x);
            let y = parse_f64(&s).unwrap();
            assert_eq!(x.to_bits(), y.to_bits(), "{} -> {} -> {}", x, s, y);
        }
    }

    proptest! {
        #[test]
        fn escape_roundtrip(s in "\\PC*") {
            prop_assert_eq!(unescape(&escape(&s)).unwrap(), s);
        }

        #[test]
        fn fields_roundtrip(fields in proptest::collection::vec("[a-zA-Z0-9 \\t\\n\\\\=:,.]*", 1..6)) {
            let refs: Vec<&str> = fields.iter().map(|s| s.as_str()).collect();
            let line = join_fields(&refs);
            prop_assert_eq!(split_fields(&line).unwrap(), fields);
        }

        #[test]
        fn float_roundtrip_random(x in proptest::num::f64::NORMAL | proptest::num::f64::ZERO) {
            let y = parse_f64(&fmt_f64(x)).unwrap();
            prop_assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}
