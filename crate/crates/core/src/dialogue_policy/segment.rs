//! Clause-level chunking for incremental delivery.
//!
//! A chunk ends after clause punctuation. ASCII punctuation only ends a chunk
//! when exactly one space follows it; that space is the separator. Full-width
//! punctuation ends a chunk when text follows immediately, with no separator.
//! [`join_chunks`] therefore inverts [`segment_into_chunks`] on every input.

const ASCII_CLAUSE: [char; 6] = [',', '.', '!', '?', ';', ':'];
const WIDE_CLAUSE: [char; 6] = ['、', '。', '！', '？', '，', '；'];

pub fn segment_into_chunks(response: &str) -> Vec<String> {
    let chars: Vec<(usize, char)> = response.char_indices().collect();
    let mut chunks = Vec::new();
    let mut start = 0;
    for (i, &(pos, c)) in chars.iter().enumerate() {
        let next = chars.get(i + 1).map(|&(_, n)| n);
        let after = chars.get(i + 2).map(|&(_, n)| n);
        let end = pos + c.len_utf8();
        if ASCII_CLAUSE.contains(&c) && next == Some(' ') && after.is_some_and(|a| !a.is_whitespace()) {
            chunks.push(response[start..end].to_string());
            start = end + 1;
        } else if WIDE_CLAUSE.contains(&c) && next.is_some_and(|n| !n.is_whitespace()) {
            chunks.push(response[start..end].to_string());
            start = end;
        }
    }
    if start < response.len() || chunks.is_empty() {
        chunks.push(response[start..].to_string());
    }
    chunks
}

/// Inverse of [`segment_into_chunks`].
pub fn join_chunks<S: AsRef<str>>(chunks: &[S]) -> String {
    let mut out = String::new();
    for (i, chunk) in chunks.iter().enumerate() {
        if i > 0 {
            let prev_wide = out.chars().last().is_some_and(|c| WIDE_CLAUSE.contains(&c));
            if !prev_wide {
                out.push(' ');
            }
        }
        out.push_str(chunk.as_ref());
    }
    out
}
