//! The shared tokenization contract.
//!
//! Every metric in this crate counts words the same way: lowercase, split on
//! non-alphanumeric characters, drop tokens shorter than two characters.
//! Pinning one contract keeps word counts, BM25 statistics, overlap metrics,
//! and coverage fractions mutually consistent.

use regex::Regex;

/// Tokenize text: lowercase, split on non-alphanumeric, drop tokens with
/// fewer than two characters.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            for lower in ch.to_lowercase() {
                current.push(lower);
            }
        } else {
            flush_token(&mut current, &mut tokens);
        }
    }
    flush_token(&mut current, &mut tokens);
    tokens
}

fn flush_token(current: &mut String, tokens: &mut Vec<String>) {
    if !current.is_empty() {
        if current.chars().count() >= 2 {
            tokens.push(std::mem::take(current));
        } else {
            current.clear();
        }
    }
}

/// Number of tokens under the shared contract.
pub fn count_tokens(text: &str) -> usize {
    tokenize(text).len()
}

/// Cut raw text just past the end of the `max_tokens`-th token, preserving
/// the original bytes up to that point. Texts with fewer tokens are returned
/// unchanged.
pub fn truncate_at_tokens(text: &str, max_tokens: usize) -> &str {
    if max_tokens == 0 {
        return "";
    }
    let mut seen = 0usize;
    let mut run_chars = 0usize;
    let mut run_end = 0usize;
    for (pos, ch) in text.char_indices() {
        if ch.is_alphanumeric() {
            run_chars += 1;
            run_end = pos + ch.len_utf8();
        } else {
            if run_chars >= 2 {
                seen += 1;
                if seen == max_tokens {
                    return &text[..run_end];
                }
            }
            run_chars = 0;
        }
    }
    if run_chars >= 2 {
        seen += 1;
        if seen == max_tokens {
            return &text[..run_end];
        }
    }
    text
}

/// Case-insensitive whole-word phrase matcher for transition/anchor cues.
///
/// Each phrase matches at word boundaries; internal whitespace in a phrase
/// matches any whitespace run.
pub struct MarkerLexicon {
    phrases: Vec<String>,
    patterns: Vec<Regex>,
}

impl MarkerLexicon {
    pub fn new<S: AsRef<str>>(phrases: &[S]) -> Self {
        let phrases: Vec<String> = phrases.iter().map(|p| p.as_ref().to_string()).collect();
        let patterns = phrases
            .iter()
            .map(|p| {
                let words: Vec<String> = p.split_whitespace().map(regex::escape).collect();
                let body = words.join(r"\s+");
                // Phrases are validated non-empty by callers; an empty body
                // would match everywhere.
                Regex::new(&format!(r"(?i)\b{body}\b")).expect("marker pattern")
            })
            .collect();
        MarkerLexicon { phrases, patterns }
    }

    pub fn phrases(&self) -> &[String] {
        &self.phrases
    }

    /// Total number of phrase occurrences in `text`.
    pub fn count(&self, text: &str) -> usize {
        self.patterns.iter().map(|p| p.find_iter(text).count()).sum()
    }

    pub fn contains_any(&self, text: &str) -> bool {
        self.patterns.iter().any(|p| p.is_match(text))
    }
}

/// Commands whose brace argument is dropped along with the command: the
/// argument is a key or path, not prose.
const DROP_ARG_COMMANDS: &[&str] = &[
    "cite",
    "citep",
    "citet",
    "ref",
    "eqref",
    "autoref",
    "label",
    "input",
    "include",
    "includegraphics",
    "usepackage",
    "documentclass",
    "bibliography",
    "bibliographystyle",
    "url",
    "vspace",
    "hspace",
];

/// Strip LaTeX markup for indexing: drop commands, keep prose arguments of
/// formatting commands, drop key-like arguments (`\cite`, `\ref`, paths).
/// Text without backslashes passes through almost unchanged.
pub fn strip_latex_markup(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    while i < chars.len() {
        let ch = chars[i];
        match ch {
            '\\' => {
                i += 1;
                let start = i;
                while i < chars.len() && chars[i].is_ascii_alphabetic() {
                    i += 1;
                }
                if i == start {
                    // Escaped symbol (\%, \&, \\): keep the symbol unless it
                    // is a line break.
                    if i < chars.len() {
                        if chars[i] != '\\' {
                            out.push(chars[i]);
                        } else {
                            out.push(' ');
                        }
                        i += 1;
                    }
                    continue;
                }
                let name: String = chars[start..i].iter().collect();
                // Optional [...] argument.
                if i < chars.len() && chars[i] == '[' {
                    while i < chars.len() && chars[i] != ']' {
                        i += 1;
                    }
                    i += 1;
                }
                let drops = name == "begin" || name == "end" || DROP_ARG_COMMANDS.contains(&name.as_str());
                if i < chars.len() && chars[i] == '{' && drops {
                    let mut depth = 0;
                    while i < chars.len() {
                        if chars[i] == '{' {
                            depth += 1;
                        } else if chars[i] == '}' {
                            depth -= 1;
                            if depth == 0 {
                                i += 1;
                                break;
                            }
                        }
                        i += 1;
                    }
                }
                out.push(' ');
            }
            '{' | '}' | '$' | '~' | '&' => {
                out.push(' ');
                i += 1;
            }
            _ => {
                out.push(ch);
                i += 1;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenize_lowercases_and_splits() {
        assert_eq!(tokenize("BM25 ranks documents."), vec!["bm25", "ranks", "documents"]);
    }

    #[test]
    fn tokenize_drops_short_tokens() {
        assert_eq!(tokenize("a BM25 x it"), vec!["bm25", "it"]);
    }

    #[test]
    fn tokenize_empty() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("  - ! .").is_empty());
    }

    #[test]
    fn truncate_preserves_raw_text() {
        let text = "alpha beta, gamma delta";
        assert_eq!(truncate_at_tokens(text, 2), "alpha beta");
        assert_eq!(truncate_at_tokens(text, 3), "alpha beta, gamma");
        assert_eq!(truncate_at_tokens(text, 10), text);
        assert_eq!(truncate_at_tokens(text, 0), "");
    }

    #[test]
    fn truncate_skips_sub_token_runs() {
        // "a" is not a token, so it does not count toward the cap.
        assert_eq!(truncate_at_tokens("a alpha beta", 1), "a alpha");
    }

    #[test]
    fn markers_match_whole_words_only() {
        let lex = MarkerLexicon::new(&["now", "moving on"]);
        assert_eq!(lex.count("Now we know the answer."), 1); // "know" must not match
        assert_eq!(lex.count("moving  on; MOVING ON"), 2);
        assert!(!lex.contains_any("snowstorm"));
    }

    #[test]
    fn markers_with_apostrophe() {
        let lex = MarkerLexicon::new(&["let's"]);
        assert_eq!(lex.count("Let's begin. lets go"), 1);
    }

    #[test]
    fn strip_keeps_formatting_args_drops_keys() {
        let s = strip_latex_markup(r"\textbf{bold words} and \cite{key2024} done");
        let tokens = tokenize(&s);
        assert_eq!(tokens, vec!["bold", "words", "and", "done"]);
    }

    #[test]
    fn strip_drops_environment_wrappers() {
        let s = strip_latex_markup("\\begin{figure}[t]\ncontent here\n\\end{figure}");
        assert_eq!(tokenize(&s), vec!["content", "here"]);
    }

    #[test]
    fn strip_passes_plain_text_through() {
        let s = strip_latex_markup("plain markdown text");
        assert_eq!(s, "plain markdown text");
    }
}
