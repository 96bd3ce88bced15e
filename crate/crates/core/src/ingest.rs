//! Source normalization and lossless segmentation.
//!
//! A source document (LaTeX or markdown) is flattened into a single stream
//! (`\input`/`\include` resolved recursively, comments stripped), then
//! partitioned into an ordered list of typed slices. Headings carry their
//! own level; equation/figure/table/theorem/algorithm bodies become atomic
//! slices that are never merged into surrounding prose; everything else
//! becomes text slices. Concatenating slice bodies in order reproduces the
//! stream's content text modulo the structural markers themselves.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceFormat {
    Latex,
    Markdown,
}

/// A normalized source: one contiguous stream with all includes resolved.
#[derive(Debug, Clone)]
pub struct SourceDocument {
    pub root_path: PathBuf,
    pub format: SourceFormat,
    pub raw_stream: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SliceType {
    Heading,
    Text,
    Equation,
    Figure,
    Table,
    Theorem,
    Algorithm,
}

impl SliceType {
    pub fn is_artifact(self) -> bool {
        !matches!(self, SliceType::Heading | SliceType::Text)
    }
}

impl fmt::Display for SliceType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SliceType::Heading => "heading",
            SliceType::Text => "text",
            SliceType::Equation => "equation",
            SliceType::Figure => "figure",
            SliceType::Table => "table",
            SliceType::Theorem => "theorem",
            SliceType::Algorithm => "algorithm",
        };
        f.write_str(s)
    }
}

/// One typed document slice.
///
/// `level` is the marker depth for headings (`\section` / `#` = 1). Other
/// slices carry their enclosing heading's level + 1 so that tree
/// construction nests them under the innermost open heading; content before
/// any heading gets level 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContentSlice {
    pub index: usize,
    pub slice_type: SliceType,
    pub level: u32,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub body: String,
}

/// Detect the format from the file extension and flatten the document into
/// one stream. LaTeX sources have comments stripped and every
/// `\input`/`\include` resolved recursively relative to the root file's
/// directory; include cycles and missing targets are errors.
pub fn normalize_source(path: &Path) -> Result<SourceDocument> {
    let format = match path.extension().and_then(|e| e.to_str()) {
        Some("tex") => SourceFormat::Latex,
        Some("md") => SourceFormat::Markdown,
        _ => return Err(Error::UnsupportedFormat(path.to_path_buf())),
    };
    let raw_stream = match format {
        SourceFormat::Markdown => read_file(path)?,
        SourceFormat::Latex => {
            let base = path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();
            let mut stack = Vec::new();
            flatten_latex(path, &base, &mut stack)?
        }
    };
    Ok(SourceDocument {
        root_path: path.to_path_buf(),
        format,
        raw_stream,
    })
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })
}

fn flatten_latex(path: &Path, base: &Path, stack: &mut Vec<PathBuf>) -> Result<String> {
    let canonical = path.canonicalize().unwrap_or_else(|_| path.to_path_buf());
    if let Some(pos) = stack.iter().position(|p| p == &canonical) {
        let mut names: Vec<String> = stack[pos..].iter().map(|p| display_name(p)).collect();
        names.push(display_name(&canonical));
        return Err(Error::IncludeCycle(names.join(" -> ")));
    }
    stack.push(canonical);

    let contents = read_file(path)?;
    let mut out = String::with_capacity(contents.len());
    for line in contents.lines() {
        let line = strip_latex_comment(line);
        let mut rest = line.as_str();
        while let Some((before, target, after)) = find_include(rest) {
            out.push_str(before);
            let resolved = resolve_include(&target, base).ok_or_else(|| Error::MissingInclude {
                path: target.clone(),
                from: path.to_path_buf(),
            })?;
            out.push_str(&flatten_latex(&resolved, base, stack)?);
            rest = after;
        }
        out.push_str(rest);
        out.push('\n');
    }

    stack.pop();
    Ok(out)
}

fn display_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Truncate at the first unescaped `%`.
fn strip_latex_comment(line: &str) -> String {
    let mut out = String::with_capacity(line.len());
    let mut prev_backslash = false;
    for ch in line.chars() {
        if ch == '%' && !prev_backslash {
            break;
        }
        prev_backslash = ch == '\\' && !prev_backslash;
        out.push(ch);
    }
    out
}

fn find_include(line: &str) -> Option<(&str, String, &str)> {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| Regex::new(r"\\(?:input|include)\{([^}]*)\}").expect("include regex"));
    let caps = re.captures(line)?;
    let whole = caps.get(0)?;
    let target = caps.get(1)?.as_str().trim().to_string();
    Some((&line[..whole.start()], target, &line[whole.end()..]))
}

fn resolve_include(target: &str, base: &Path) -> Option<PathBuf> {
    let direct = base.join(target);
    if direct.is_file() {
        return Some(direct);
    }
    let with_ext = base.join(format!("{target}.tex"));
    if with_ext.is_file() {
        return Some(with_ext);
    }
    None
}

/// Fence tags that open an atomic artifact slice in markdown.
fn fence_slice_type(lang: &str) -> Option<SliceType> {
    match lang {
        "math" => Some(SliceType::Equation),
        "table" => Some(SliceType::Table),
        "figure" => Some(SliceType::Figure),
        "theorem" => Some(SliceType::Theorem),
        "algorithm" => Some(SliceType::Algorithm),
        _ => None,
    }
}

fn env_slice_type(env: &str) -> Option<SliceType> {
    match env.trim_end_matches('*') {
        "equation" => Some(SliceType::Equation),
        "figure" => Some(SliceType::Figure),
        "table" => Some(SliceType::Table),
        "theorem" => Some(SliceType::Theorem),
        "algorithm" => Some(SliceType::Algorithm),
        _ => None,
    }
}

struct SliceBuilder {
    slices: Vec<ContentSlice>,
    prose: String,
    enclosing_level: u32,
}

impl SliceBuilder {
    fn new() -> Self {
        SliceBuilder {
            slices: Vec::new(),
            prose: String::new(),
            enclosing_level: 0,
        }
    }

    fn prose_line(&mut self, line: &str) {
        self.prose.push_str(line);
        self.prose.push('\n');
    }

    fn prose_fragment(&mut self, fragment: &str) {
        if !fragment.trim().is_empty() {
            self.prose.push_str(fragment);
            self.prose.push('\n');
        }
    }

    fn flush_prose(&mut self) {
        let body = self.prose.trim();
        if !body.is_empty() {
            let body = body.to_string();
            self.push(SliceType::Text, self.enclosing_level + 1, String::new(), body);
        }
        self.prose.clear();
    }

    fn heading(&mut self, level: u32, title: String) {
        self.flush_prose();
        self.enclosing_level = level;
        self.push(SliceType::Heading, level, title.clone(), title);
    }

    fn artifact(&mut self, slice_type: SliceType, body: String) {
        self.flush_prose();
        let body = body.trim().to_string();
        self.push(slice_type, self.enclosing_level + 1, String::new(), body);
    }

    fn push(&mut self, slice_type: SliceType, level: u32, title: String, body: String) {
        self.slices.push(ContentSlice {
            index: self.slices.len(),
            slice_type,
            level,
            title,
            abstract_text: String::new(),
            body,
        });
    }

    fn finish(mut self) -> Vec<ContentSlice> {
        self.flush_prose();
        self.slices
    }
}

/// Segment a normalized stream into typed slices, preserving document order.
/// Pure: identical streams give identical slice lists.
pub fn segment(doc: &SourceDocument) -> Result<Vec<ContentSlice>> {
    match doc.format {
        SourceFormat::Latex => segment_latex(&doc.raw_stream),
        SourceFormat::Markdown => segment_markdown(&doc.raw_stream),
    }
}

fn heading_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"\\(section|subsection|subsubsection)\*?\s*\{").expect("heading regex")
    })
}

fn begin_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"\\begin\{(equation\*?|figure\*?|table\*?|theorem|algorithm)\}(\[[^\]]*\])?")
            .expect("begin regex")
    })
}

/// Read a balanced `{...}` group starting at `start` (which must point at
/// `{`). Returns (content, index just past the closing brace).
fn balanced_group(text: &str, start: usize) -> Option<(String, usize)> {
    let bytes = text.as_bytes();
    if bytes.get(start) != Some(&b'{') {
        return None;
    }
    let mut depth = 0usize;
    let mut i = start;
    while i < bytes.len() {
        match bytes[i] {
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some((text[start + 1..i].to_string(), i + 1));
                }
            }
            _ => {}
        }
        i += 1;
    }
    None
}

fn segment_latex(stream: &str) -> Result<Vec<ContentSlice>> {
    let mut builder = SliceBuilder::new();
    // Open environment: (env name as written, slice type, opening line, body).
    let mut open_env: Option<(String, SliceType, usize, String)> = None;

    for (idx, line) in stream.lines().enumerate() {
        let lineno = idx + 1;
        let mut rest = line;
        loop {
            if let Some((env, _, _, body)) = open_env.as_mut() {
                let end_marker = format!("\\end{{{env}}}");
                if let Some(pos) = rest.find(&end_marker) {
                    body.push_str(&rest[..pos]);
                    let (_, slice_type, _, body) = open_env.take().expect("open env");
                    builder.artifact(slice_type, body);
                    rest = &rest[pos + end_marker.len()..];
                    continue;
                }
                body.push_str(rest);
                body.push('\n');
                break;
            }

            let heading = heading_regex().find(rest);
            let begin = begin_regex().captures(rest);
            let begin_start = begin.as_ref().map(|c| c.get(0).expect("match").start());
            let heading_first = match (heading.as_ref().map(|h| h.start()), begin_start) {
                (Some(h), Some(b)) => h < b,
                (Some(_), None) => true,
                (None, _) => false,
            };

            match (heading, heading_first) {
                (Some(h), true) => {
                    builder.prose_fragment(&rest[..h.start()]);
                    let brace = h.end() - 1;
                    let base = h.start();
                    let offset_brace = brace - base;
                    let segment_text = &rest[base..];
                    let (title, past) = match balanced_group(segment_text, offset_brace) {
                        Some(v) => v,
                        None => {
                            // Unterminated title brace: keep the line as prose.
                            builder.prose_fragment(rest);
                            break;
                        }
                    };
                    let command = &rest[h.start()..h.end()];
                    let level = if command.contains("subsubsection") {
                        3
                    } else if command.contains("subsection") {
                        2
                    } else {
                        1
                    };
                    builder.heading(level, title.trim().to_string());
                    rest = &segment_text[past..];
                }
                _ => match begin {
                    Some(caps) => {
                        let whole = caps.get(0).expect("match");
                        let env = caps.get(1).expect("env name").as_str().to_string();
                        let slice_type = env_slice_type(&env).expect("artifact env");
                        builder.prose_fragment(&rest[..whole.start()]);
                        open_env = Some((env, slice_type, lineno, String::new()));
                        rest = &rest[whole.end()..];
                    }
                    None => {
                        builder.prose_line(rest);
                        break;
                    }
                },
            }
        }
    }

    if let Some((env, _, line, _)) = open_env {
        return Err(Error::UnbalancedEnvironment { env, line });
    }
    Ok(builder.finish())
}

fn segment_markdown(stream: &str) -> Result<Vec<ContentSlice>> {
    let mut builder = SliceBuilder::new();
    // (tag, opening line, body) for ```math / ```table / ... fences.
    let mut open_fence: Option<(String, SliceType, usize, String)> = None;
    let mut in_plain_fence = false;
    // (opening line, body) for $$ display-math blocks.
    let mut open_math: Option<(usize, String)> = None;

    for (idx, line) in stream.lines().enumerate() {
        let lineno = idx + 1;
        let trimmed = line.trim();

        if let Some((_, _, _, body)) = open_fence.as_mut() {
            if trimmed.starts_with("```") {
                let (_, slice_type, _, body) = open_fence.take().expect("open fence");
                builder.artifact(slice_type, body);
            } else {
                body.push_str(line);
                body.push('\n');
            }
            continue;
        }

        if let Some((_, body)) = open_math.as_mut() {
            if let Some(pos) = line.find("$$") {
                body.push_str(&line[..pos]);
                let (_, body) = open_math.take().expect("open math");
                builder.artifact(SliceType::Equation, body);
            } else {
                body.push_str(line);
                body.push('\n');
            }
            continue;
        }

        if in_plain_fence {
            builder.prose_line(line);
            if trimmed.starts_with("```") {
                in_plain_fence = false;
            }
            continue;
        }

        if let Some(tag) = trimmed.strip_prefix("```") {
            let tag = tag.trim().to_string();
            if let Some(slice_type) = fence_slice_type(&tag) {
                open_fence = Some((tag, slice_type, lineno, String::new()));
            } else {
                // A plain code fence stays inside the surrounding text slice.
                builder.prose_line(line);
                in_plain_fence = true;
            }
            continue;
        }

        if let Some(rest) = trimmed.strip_prefix("$$") {
            if let Some(pos) = rest.find("$$") {
                builder.artifact(SliceType::Equation, rest[..pos].to_string());
            } else {
                let mut body = rest.to_string();
                if !body.is_empty() {
                    body.push('\n');
                }
                open_math = Some((lineno, body));
            }
            continue;
        }

        if trimmed.starts_with('#') {
            let hashes = trimmed.chars().take_while(|&c| c == '#').count();
            let after = &trimmed[hashes..];
            if after.starts_with(' ') || after.is_empty() {
                builder.heading(hashes as u32, after.trim().to_string());
                continue;
            }
        }

        builder.prose_line(line);
    }

    if let Some((tag, _, line, _)) = open_fence {
        return Err(Error::UnbalancedEnvironment { env: tag, line });
    }
    if let Some((line, _)) = open_math {
        return Err(Error::UnbalancedEnvironment {
            env: "$$".to_string(),
            line,
        });
    }
    Ok(builder.finish())
}

/// Produces the short `abstract` stored on each slice. The default is
/// deterministic; an external model can be plugged in behind this trait.
pub trait Summarizer: Send + Sync {
    fn summarize(&self, body: &str) -> String;
}

/// First sentence, truncated to a character cap without splitting words.
#[derive(Debug, Clone)]
pub struct FirstSentenceSummarizer {
    pub max_chars: usize,
}

impl Default for FirstSentenceSummarizer {
    fn default() -> Self {
        FirstSentenceSummarizer { max_chars: 160 }
    }
}

impl Summarizer for FirstSentenceSummarizer {
    fn summarize(&self, body: &str) -> String {
        let body = body.trim();
        if body.is_empty() {
            return String::new();
        }
        let sentence = first_sentence(body);
        truncate_no_word_split(sentence, self.max_chars)
    }
}

fn first_sentence(text: &str) -> &str {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    for (i, &(pos, ch)) in chars.iter().enumerate() {
        if matches!(ch, '.' | '!' | '?') {
            let next = chars.get(i + 1).map(|&(_, c)| c);
            if next.is_none() || next.expect("next char").is_whitespace() {
                return &text[..pos + ch.len_utf8()];
            }
        }
    }
    text
}

fn truncate_no_word_split(text: &str, cap: usize) -> String {
    let chars: Vec<char> = text.chars().collect();
    if chars.len() <= cap {
        return text.trim_end().to_string();
    }
    let mut cut = cap;
    if !chars[cap].is_whitespace() && !chars[cap - 1].is_whitespace() {
        if let Some(pos) = chars[..cap].iter().rposition(|c| c.is_whitespace()) {
            cut = pos;
        }
    }
    chars[..cut].iter().collect::<String>().trim_end().to_string()
}

/// Fill the abstract of one slice.
pub fn summarize_slice(slice: &ContentSlice, summarizer: &dyn Summarizer) -> String {
    summarizer.summarize(&slice.body)
}

/// Fill abstracts for a whole slice list in place.
pub fn summarize_slices(slices: &mut [ContentSlice], summarizer: &dyn Summarizer) {
    for slice in slices.iter_mut() {
        slice.abstract_text = summarizer.summarize(&slice.body);
    }
}

/// Serialize slices as line-delimited JSON records.
pub fn slices_to_jsonl(slices: &[ContentSlice]) -> String {
    let mut out = String::new();
    for slice in slices {
        out.push_str(&serde_json::to_string(slice).expect("slice serialization"));
        out.push('\n');
    }
    out
}

/// Strip structural markers (heading hashes, fence lines, `$$`) and collapse
/// whitespace. Used to check that segmentation loses no content text.
pub fn strip_markdown_markers(text: &str) -> String {
    let mut kept = String::new();
    for line in text.lines() {
        let trimmed = line.trim();
        if trimmed.starts_with("```") {
            continue;
        }
        let line = if trimmed.starts_with('#') {
            trimmed.trim_start_matches('#')
        } else {
            line
        };
        kept.push_str(&line.replace("$$", " "));
        kept.push('\n');
    }
    kept.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// The slice types that must stay atomic.
pub fn artifact_types() -> BTreeSet<SliceType> {
    [
        SliceType::Equation,
        SliceType::Figure,
        SliceType::Table,
        SliceType::Theorem,
        SliceType::Algorithm,
    ]
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write(dir: &Path, name: &str, contents: &str) -> PathBuf {
        let path = dir.join(name);
        fs::write(&path, contents).expect("write fixture");
        path
    }

    fn tempdir(tag: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("deckeval-ingest-{tag}-{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        fs::create_dir_all(&dir).expect("create tempdir");
        dir
    }

    fn md_doc(stream: &str) -> SourceDocument {
        SourceDocument {
            root_path: PathBuf::from("doc.md"),
            format: SourceFormat::Markdown,
            raw_stream: stream.to_string(),
        }
    }

    fn tex_doc(stream: &str) -> SourceDocument {
        SourceDocument {
            root_path: PathBuf::from("doc.tex"),
            format: SourceFormat::Latex,
            raw_stream: stream.to_string(),
        }
    }

    #[test]
    fn single_input_is_substituted_inline() {
        let dir = tempdir("single");
        write(&dir, "intro.tex", "Hello");
        let main = write(&dir, "main.tex", "before\n\\input{intro.tex}\nafter\n");
        let doc = normalize_source(&main).expect("normalize");
        assert!(doc.raw_stream.contains("Hello"));
        let pos_before = doc.raw_stream.find("before").expect("before");
        let pos_hello = doc.raw_stream.find("Hello").expect("hello");
        let pos_after = doc.raw_stream.find("after").expect("after");
        assert!(pos_before < pos_hello && pos_hello < pos_after);
    }

    #[test]
    fn include_cycle_names_the_cycle() {
        let dir = tempdir("cycle");
        write(&dir, "a.tex", "\\input{b.tex}");
        let a = dir.join("a.tex");
        write(&dir, "b.tex", "\\input{a.tex}");
        let err = normalize_source(&a).expect_err("cycle");
        match err {
            Error::IncludeCycle(cycle) => {
                assert_eq!(cycle, "a.tex -> b.tex -> a.tex");
            }
            other => panic!("expected cycle error, got {other:?}"),
        }
    }

    #[test]
    fn three_file_project_matches_manual_expansion() {
        let dir = tempdir("three");
        write(&dir, "intro.tex", "intro text\n");
        write(&dir, "method.tex", "method text\n");
        let main = write(
            &dir,
            "main.tex",
            "start\n\\input{intro}\nmiddle\n\\input{method.tex}\nend\n",
        );
        let doc = normalize_source(&main).expect("normalize");
        // Oracle: manual textual expansion of the include graph.
        let expected = "start\nintro text\n\nmiddle\nmethod text\n\nend\n";
        assert_eq!(doc.raw_stream, expected);
    }

    #[test]
    fn missing_include_names_the_path() {
        let dir = tempdir("missing");
        let main = write(&dir, "main.tex", "\\input{nowhere}\n");
        let err = normalize_source(&main).expect_err("missing include");
        match err {
            Error::MissingInclude { path, .. } => assert_eq!(path, "nowhere"),
            other => panic!("expected missing include, got {other:?}"),
        }
    }

    #[test]
    fn unsupported_extension_is_an_error() {
        let err = normalize_source(Path::new("deck.docx")).expect_err("unsupported");
        assert!(matches!(err, Error::UnsupportedFormat(_)));
    }

    #[test]
    fn comments_are_stripped_but_escaped_percent_kept() {
        let dir = tempdir("comments");
        let main = write(&dir, "main.tex", "keep 50\\% of it % drop this\nnext\n");
        let doc = normalize_source(&main).expect("normalize");
        assert!(doc.raw_stream.contains("50\\%"));
        assert!(!doc.raw_stream.contains("drop this"));
    }

    #[test]
    fn commented_include_is_not_resolved() {
        let dir = tempdir("commented-include");
        let main = write(&dir, "main.tex", "text\n% \\input{nowhere}\n");
        let doc = normalize_source(&main).expect("normalize");
        assert!(!doc.raw_stream.contains("input"));
    }

    #[test]
    fn minimal_latex_partition() {
        let slices = segment(&tex_doc("\\section{A}\nSome paragraph.\n")).expect("segment");
        assert_eq!(slices.len(), 2);
        assert_eq!(slices[0].slice_type, SliceType::Heading);
        assert_eq!(slices[0].level, 1);
        assert_eq!(slices[0].title, "A");
        assert_eq!(slices[1].slice_type, SliceType::Text);
        assert_eq!(slices[1].body, "Some paragraph.");
    }

    #[test]
    fn figure_environment_stays_atomic() {
        let stream = "\\section{A}\npara one\n\\begin{figure}\nfig body\n\\end{figure}\npara two\n";
        let slices = segment(&tex_doc(stream)).expect("segment");
        let types: Vec<SliceType> = slices.iter().map(|s| s.slice_type).collect();
        assert_eq!(
            types,
            vec![SliceType::Heading, SliceType::Text, SliceType::Figure, SliceType::Text]
        );
        assert_eq!(slices[2].body, "fig body");
        assert_eq!(slices[1].body, "para one");
        assert_eq!(slices[3].body, "para two");
    }

    #[test]
    fn markdown_heading_levels_in_order() {
        let stream = "# One\n## Two\n## Three\n# Four\n";
        let slices = segment(&md_doc(stream)).expect("segment");
        // Oracle: line-by-line heading-prefix count.
        let expected: Vec<u32> = stream
            .lines()
            .map(|l| l.chars().take_while(|&c| c == '#').count() as u32)
            .collect();
        let got: Vec<u32> = slices.iter().map(|s| s.level).collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn unbalanced_environment_reports_line() {
        let stream = "text\n\\begin{equation}\nx = y\n";
        let err = segment(&tex_doc(stream)).expect_err("unbalanced");
        match err {
            Error::UnbalancedEnvironment { env, line } => {
                assert_eq!(env, "equation");
                assert_eq!(line, 2);
            }
            other => panic!("expected unbalanced env, got {other:?}"),
        }
    }

    #[test]
    fn unbalanced_markdown_fence_reports_line() {
        let err = segment(&md_doc("intro\n```table\na | b\n")).expect_err("unclosed fence");
        assert!(matches!(err, Error::UnbalancedEnvironment { line: 2, .. }));
    }

    #[test]
    fn markdown_artifact_fences_and_math() {
        let stream = "# H\nwords here\n```table\n1 | 2\n```\n$$\ne = m\n$$\ntail\n";
        let slices = segment(&md_doc(stream)).expect("segment");
        let types: Vec<SliceType> = slices.iter().map(|s| s.slice_type).collect();
        assert_eq!(
            types,
            vec![
                SliceType::Heading,
                SliceType::Text,
                SliceType::Table,
                SliceType::Equation,
                SliceType::Text
            ]
        );
        assert_eq!(slices[2].body, "1 | 2");
        assert_eq!(slices[3].body, "e = m");
    }

    #[test]
    fn plain_code_fence_stays_in_text() {
        let stream = "intro\n```rust\n# not a heading\n```\noutro\n";
        let slices = segment(&md_doc(stream)).expect("segment");
        assert_eq!(slices.len(), 1);
        assert_eq!(slices[0].slice_type, SliceType::Text);
        assert!(slices[0].body.contains("# not a heading"));
    }

    #[test]
    fn non_heading_slices_get_enclosing_level_plus_one() {
        let stream = "lead\n# H1\n## H2\ninner\n";
        let slices = segment(&md_doc(stream)).expect("segment");
        assert_eq!(slices[0].level, 1); // before any heading
        assert_eq!(slices[3].level, 3); // inside the level-2 heading
    }

    #[test]
    fn losslessness_on_markdown() {
        let stream = "# A\nalpha beta\n## B\n```math\nx = 1\n```\ngamma delta\n$$\ny = 2\n$$\n";
        let slices = segment(&md_doc(stream)).expect("segment");
        let joined: String = slices.iter().map(|s| s.body.clone()).collect::<Vec<_>>().join("\n");
        assert_eq!(strip_markdown_markers(stream), strip_markdown_markers(&joined));
    }

    #[test]
    fn atomicity_of_artifact_slices() {
        let stream = "# A\nprose before\n```math\nx = 1\n```\n## B\nmore prose\n```table\nr | s\n```\nafter\n";
        let slices = segment(&md_doc(stream)).expect("segment");
        for slice in &slices {
            if slice.slice_type.is_artifact() {
                assert!(!slice.body.contains('#'), "artifact body holds a heading marker");
                assert!(!slice.body.contains("```"), "artifact body holds a fence marker");
            }
            if slice.slice_type == SliceType::Text {
                for tag in ["```math", "```table", "```figure", "```theorem", "```algorithm"] {
                    assert!(!slice.body.contains(tag), "text slice swallowed {tag}");
                }
            }
        }
        assert_eq!(slices.iter().filter(|s| s.slice_type.is_artifact()).count(), 2);
    }

    #[test]
    fn segmentation_is_deterministic() {
        let stream = "# A\ntext\n```figure\nf\n```\nmore text\n";
        let a = segment(&md_doc(stream)).expect("segment");
        let b = segment(&md_doc(stream)).expect("segment");
        assert_eq!(a, b);
    }

    #[test]
    fn first_sentence_summary() {
        let s = FirstSentenceSummarizer::default();
        assert_eq!(s.summarize("BM25 ranks documents. It uses idf."), "BM25 ranks documents.");
    }

    #[test]
    fn empty_body_empty_abstract() {
        let s = FirstSentenceSummarizer::default();
        assert_eq!(s.summarize(""), "");
        assert_eq!(s.summarize("   \n"), "");
    }

    #[test]
    fn long_sentence_cut_at_last_whitespace() {
        let word = "abcdefg ";
        let body: String = word.repeat(40); // 320 chars, one long "sentence"
        let s = FirstSentenceSummarizer { max_chars: 120 };
        let out = s.summarize(&body);
        // Oracle: direct string slicing — longest whitespace-terminated
        // prefix of the first 120 characters.
        let prefix: String = body.chars().take(120).collect();
        let expected = prefix[..prefix.rfind(' ').expect("space")].to_string();
        assert_eq!(out, expected);
        assert!(out.chars().count() <= 120);
        assert!(!out.ends_with(' '));
    }

    #[test]
    fn summary_without_whitespace_hard_cuts() {
        let body = "x".repeat(300);
        let s = FirstSentenceSummarizer { max_chars: 120 };
        assert_eq!(s.summarize(&body).chars().count(), 120);
    }

    #[test]
    fn decimal_number_does_not_end_sentence() {
        let s = FirstSentenceSummarizer::default();
        assert_eq!(s.summarize("Pi is 3.14 roughly. More."), "Pi is 3.14 roughly.");
    }

    #[test]
    fn slices_jsonl_has_one_record_per_slice() {
        let slices = segment(&md_doc("# A\nbody text\n")).expect("segment");
        let jsonl = slices_to_jsonl(&slices);
        assert_eq!(jsonl.lines().count(), slices.len());
        assert!(jsonl.lines().next().expect("line").contains("\"heading\""));
    }
}
