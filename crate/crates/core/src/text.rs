//! Character-offset helpers. All spans in this crate count Unicode scalar
//! values, not bytes.

/// Number of chars in `s`.
pub fn char_len(s: &str) -> usize {
    s.chars().count()
}

/// Slice `s` by char offsets `[start, end)`. Returns `None` when out of range.
pub fn char_slice(s: &str, start: usize, end: usize) -> Option<&str> {
    if start > end {
        return None;
    }
    let mut begin = None;
    let mut count = 0;
    for (byte, _) in s.char_indices() {
        if count == start {
            begin = Some(byte);
        }
        if count == end {
            return begin.map(|b| &s[b..byte]);
        }
        count += 1;
    }
    if count == start {
        begin = Some(s.len());
    }
    if count == end {
        return begin.map(|b| &s[b..]);
    }
    None
}

/// Simple one-to-one lowercase fold. Chars whose full lowercase mapping
/// expands to several chars keep only the first, so folding never shifts
/// offsets.
pub fn fold_char(c: char) -> char {
    if c.is_ascii() {
        return c.to_ascii_lowercase();
    }
    c.to_lowercase().next().unwrap_or(c)
}

pub fn fold(s: &str) -> String {
    s.chars().map(fold_char).collect()
}

pub fn fold_chars(s: &str) -> Vec<char> {
    s.chars().map(fold_char).collect()
}

/// Case-insensitive equality under [`fold_char`].
pub fn eq_folded(a: &str, b: &str) -> bool {
    a.chars().map(fold_char).eq(b.chars().map(fold_char))
}
