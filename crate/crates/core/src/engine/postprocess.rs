/// Normalizes spacing and capitalization of concatenated fragments.
///
/// Whitespace runs become one space; spaces before `.`, `,` and `)` and
/// after `(` are removed; a period between a word and a letter gets one
/// space; the result is trimmed and each sentence starts upper case.
pub fn postprocess(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for c in raw.chars() {
        if c.is_whitespace() {
            if !out.is_empty() && !out.ends_with(' ') && !out.ends_with('(') {
                out.push(' ');
            }
            continue;
        }
        if matches!(c, '.' | ',' | ')') && out.ends_with(' ') {
            out.pop();
        }
        if c.is_alphabetic() && out.ends_with('.') && ends_sentence(&out) {
            out.push(' ');
        }
        out.push(c);
    }
    let trimmed = out.trim_end();
    capitalize_sentences(trimmed)
}

/// True when the period at the end of `s` follows a word rather than a digit.
fn ends_sentence(s: &str) -> bool {
    let mut rev = s.chars().rev();
    rev.next();
    matches!(rev.next(), Some(c) if c.is_alphabetic() || matches!(c, ')' | '\'' | '"'))
}

fn capitalize_sentences(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut at_start = true;
    let mut prev: Option<char> = None;
    for c in s.chars() {
        if at_start && c.is_alphabetic() {
            out.extend(c.to_uppercase());
            at_start = false;
        } else {
            if at_start && c.is_numeric() {
                at_start = false;
            }
            out.push(c);
        }
        if c == ' ' && matches!(prev, Some('.' | '!' | '?')) {
            at_start = true;
        }
        prev = Some(c);
    }
    out
}
