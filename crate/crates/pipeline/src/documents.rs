//! Streaming readers for document collections.
//!
//! Two layouts are accepted, optionally gzip-compressed (`.gz`):
//! JSONL with one `{"id": .., "text": ..}` object per line, and TREC SGML
//! with `<DOC>` blocks carrying a `<DOCNO>` and one or more `<TEXT>` sections.
//! A directory is read recursively in sorted path order.

use std::collections::VecDeque;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DocumentFormat {
    Jsonl,
    Trec,
}

fn open(path: &Path) -> Result<Box<dyn BufRead>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader: Box<dyn Read> = if path.extension().is_some_and(|e| e == "gz") {
        Box::new(flate2::read::MultiGzDecoder::new(file))
    } else {
        Box::new(file)
    };
    Ok(Box::new(BufReader::new(reader)))
}

fn collect_files(path: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    if path.is_dir() {
        let mut entries: Vec<PathBuf> = std::fs::read_dir(path)
            .map_err(|e| Error::io(path, e))?
            .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(path, err)))
            .collect::<Result<_>>()?;
        entries.sort();
        for e in entries {
            if e.file_name().is_some_and(|n| n.to_string_lossy().starts_with('.')) {
                continue;
            }
            collect_files(&e, out)?;
        }
    } else {
        out.push(path.to_path_buf());
    }
    Ok(())
}

/// Iterator over the documents of a file or directory tree.
pub struct DocumentStream {
    files: VecDeque<PathBuf>,
    current: Option<FileReader>,
}

impl DocumentStream {
    pub fn open(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::io(path, std::io::ErrorKind::NotFound.into()));
        }
        let mut files = Vec::new();
        collect_files(path, &mut files)?;
        Ok(Self { files: files.into(), current: None })
    }
}

impl Iterator for DocumentStream {
    type Item = Result<Document>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if let Some(reader) = &mut self.current {
                match reader.next() {
                    Some(item) => return Some(item),
                    None => self.current = None,
                }
            }
            let path = self.files.pop_front()?;
            match FileReader::open(path) {
                Ok(r) => self.current = Some(r),
                Err(e) => return Some(Err(e)),
            }
        }
    }
}

struct FileReader {
    path: PathBuf,
    lines: std::io::Lines<Box<dyn BufRead>>,
    line_no: usize,
    format: Option<DocumentFormat>,
}

impl FileReader {
    fn open(path: PathBuf) -> Result<Self> {
        let lines = open(&path)?.lines();
        Ok(Self { path, lines, line_no: 0, format: None })
    }

    fn next_line(&mut self) -> Option<Result<String>> {
        self.lines.next().map(|l| {
            self.line_no += 1;
            l.map_err(|e| Error::io(&self.path, e))
        })
    }

    fn next_jsonl(&mut self, first: String) -> Result<Document> {
        serde_json::from_str(&first).map_err(|e| Error::parse(&self.path, self.line_no, e.to_string()))
    }

    fn next_trec(&mut self, first: String) -> Result<Document> {
        let start = self.line_no;
        let mut block = first;
        while !block.contains("</DOC>") {
            match self.next_line() {
                Some(line) => {
                    block.push('\n');
                    block.push_str(&line?);
                }
                None => return Err(Error::parse(&self.path, start, "unterminated <DOC>")),
            }
        }
        parse_trec_doc(&block).ok_or_else(|| Error::parse(&self.path, start, "<DOC> without <DOCNO>"))
    }
}

impl Iterator for FileReader {
    type Item = Result<Document>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.next_line()? {
                Ok(l) => l,
                Err(e) => return Some(Err(e)),
            };
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let format = *self.format.get_or_insert(if trimmed.starts_with('{') {
                DocumentFormat::Jsonl
            } else {
                DocumentFormat::Trec
            });
            return Some(match format {
                DocumentFormat::Jsonl => self.next_jsonl(line),
                DocumentFormat::Trec if trimmed.starts_with("<DOC>") => self.next_trec(line),
                DocumentFormat::Trec => continue,
            });
        }
    }
}

fn between<'a>(s: &'a str, open: &str, close: &str) -> Vec<&'a str> {
    let mut out = Vec::new();
    let mut rest = s;
    while let Some(i) = rest.find(open) {
        let after = &rest[i + open.len()..];
        let Some(j) = after.find(close) else { break };
        out.push(&after[..j]);
        rest = &after[j + close.len()..];
    }
    out
}

fn strip_tags(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut in_tag = false;
    for c in s.chars() {
        match c {
            '<' => in_tag = true,
            '>' if in_tag => {
                in_tag = false;
                out.push('\n');
            }
            _ if !in_tag => out.push(c),
            _ => {}
        }
    }
    out.replace("&amp;", "&")
        .replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&quot;", "\"")
        .replace("&apos;", "'")
}

/// Parse one `<DOC>..</DOC>` block. Inner tags become line breaks so that
/// paragraph markup separates sentences.
pub fn parse_trec_doc(block: &str) -> Option<Document> {
    let id = between(block, "<DOCNO>", "</DOCNO>").first()?.trim().to_string();
    if id.is_empty() {
        return None;
    }
    let sections = between(block, "<TEXT>", "</TEXT>");
    let text = if sections.is_empty() {
        let start = block.find("<DOCNO>")?;
        let end = block.find("</DOCNO>")? + "</DOCNO>".len();
        strip_tags(&format!("{}{}", &block[..start], &block[end..]))
    } else {
        sections.iter().map(|s| strip_tags(s)).collect::<Vec<_>>().join("\n\n")
    };
    Some(Document { id, text: text.trim().to_string() })
}

/// Read a whole collection into memory.
pub fn read_documents(path: &Path) -> Result<Vec<Document>> {
    DocumentStream::open(path)?.collect()
}

pub fn write_jsonl(docs: &[Document], path: &Path) -> Result<()> {
    let mut out = String::new();
    for d in docs {
        out.push_str(&serde_json::to_string(d).expect("Document serializes"));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trec_block() {
        let d = parse_trec_doc(
            "<DOC>\n<DOCNO> APW19990512.0001 </DOCNO>\n<HEADLINE>Ignored</HEADLINE>\n<TEXT>\n<P>\nFirst &amp; one.\n</P>\n<P>Second</P>\n</TEXT>\n</DOC>",
        )
        .unwrap();
        assert_eq!(d.id, "APW19990512.0001");
        assert!(d.text.starts_with("First & one."));
        assert!(d.text.contains("\n\nSecond") || d.text.contains("\nSecond"));
        assert!(!d.text.contains("Ignored"));
        assert!(parse_trec_doc("<DOC><TEXT>x</TEXT></DOC>").is_none());
    }

    #[test]
    fn trec_without_text_section_keeps_body() {
        let d = parse_trec_doc("<DOC><DOCNO>d1</DOCNO>plain body</DOC>").unwrap();
        assert_eq!((d.id.as_str(), d.text.as_str()), ("d1", "plain body"));
    }
}
