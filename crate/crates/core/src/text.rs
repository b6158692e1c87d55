//! Small text helpers shared by the matching, templating and turn-taking code.

use std::collections::BTreeMap;

/// Trim and collapse internal whitespace runs to single spaces.
pub fn normalize(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Whitespace token count, as used by the turn-taking thresholds.
pub fn token_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Lowercased word tokens. Anything that is not alphanumeric (apostrophes
/// and hyphens excepted) separates words.
pub fn words(text: &str) -> Vec<String> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '\'' || c == '-'))
        .map(|w| w.trim_matches(|c| c == '\'' || c == '-'))
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// True when `needle` occurs in `haystack` as a whole-word phrase,
/// case-insensitively.
pub fn contains_phrase(haystack: &str, needle: &str) -> bool {
    let needle = words(needle);
    if needle.is_empty() {
        return false;
    }
    let hay = words(haystack);
    hay.windows(needle.len()).any(|w| w == needle.as_slice())
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PlaceholderError {
    #[error("placeholder `{0}` is not bound")]
    Unbound(String),
    #[error("unterminated placeholder starting at byte {0}")]
    Unterminated(usize),
}

/// Names of `{name}` placeholders in order of first appearance.
pub fn placeholders(template: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        let after = &rest[open + 1..];
        match after.find('}') {
            Some(close) => {
                let name = &after[..close];
                if is_placeholder_name(name) && !out.iter().any(|n| n == name) {
                    out.push(name.to_string());
                }
                rest = &after[close + 1..];
            }
            None => break,
        }
    }
    out
}

fn is_placeholder_name(name: &str) -> bool {
    !name.is_empty() && name.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

/// Substitute every `{name}` placeholder from `bindings`. Braces that do not
/// enclose a valid placeholder name are copied through untouched.
pub fn fill(template: &str, bindings: &BTreeMap<String, String>) -> Result<String, PlaceholderError> {
    let mut out = String::with_capacity(template.len());
    let mut idx = 0;
    while let Some(rel) = template[idx..].find('{') {
        let open = idx + rel;
        out.push_str(&template[idx..open]);
        let after = &template[open + 1..];
        let Some(close) = after.find('}') else {
            if after.chars().next().is_some_and(|c| c.is_ascii_lowercase()) {
                return Err(PlaceholderError::Unterminated(open));
            }
            out.push('{');
            idx = open + 1;
            continue;
        };
        let name = &after[..close];
        if is_placeholder_name(name) {
            let value = bindings
                .get(name)
                .ok_or_else(|| PlaceholderError::Unbound(name.to_string()))?;
            out.push_str(value);
            idx = open + 1 + close + 1;
        } else {
            out.push('{');
            idx = open + 1;
        }
    }
    out.push_str(&template[idx..]);
    Ok(out)
}
