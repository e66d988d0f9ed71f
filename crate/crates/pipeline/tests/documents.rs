use std::io::Write;

use qa_pipeline::documents::{read_documents, Document, DocumentStream};
use qa_pipeline::Error;

const TREC: &str = "<DOC>\n<DOCNO> NYT19980601.0001 </DOCNO>\n<TEXT>\n<P>\nThe first sentence. A second one.\n</P>\n</TEXT>\n</DOC>\n<DOC>\n<DOCNO>NYT19980601.0002</DOCNO>\n<HEADLINE>Skip</HEADLINE>\n<TEXT>Short.</TEXT>\n</DOC>\n";

fn ids(docs: &[Document]) -> Vec<&str> {
    docs.iter().map(|d| d.id.as_str()).collect()
}

#[test]
fn reads_jsonl_trec_and_gzip_in_path_order() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("b.jsonl"), "{\"id\":\"j1\",\"text\":\"hello world\"}\n\n{\"id\":\"j2\",\"text\":\"x\"}\n").unwrap();
    std::fs::write(dir.path().join("a.sgml"), TREC).unwrap();
    let sub = dir.path().join("c");
    std::fs::create_dir(&sub).unwrap();
    let mut gz = flate2::write::GzEncoder::new(Vec::new(), flate2::Compression::default());
    gz.write_all(TREC.replace("NYT", "APW").as_bytes()).unwrap();
    std::fs::write(sub.join("d.gz"), gz.finish().unwrap()).unwrap();
    std::fs::write(dir.path().join(".hidden"), "junk").unwrap();

    let docs = read_documents(dir.path()).unwrap();
    assert_eq!(
        ids(&docs),
        ["NYT19980601.0001", "NYT19980601.0002", "j1", "j2", "APW19980601.0001", "APW19980601.0002"]
    );
    assert_eq!(docs[0].text, "The first sentence. A second one.");
    assert_eq!(docs[1].text, "Short.");
    assert_eq!(docs[2].text, "hello world");
}

#[test]
fn malformed_input_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.sgml");
    std::fs::write(&p, "<DOC>\n<DOCNO>x</DOCNO>\n<TEXT>never closed\n").unwrap();
    assert!(matches!(read_documents(&p), Err(Error::Parse { line: 1, .. })));
    let p = dir.path().join("bad.jsonl");
    std::fs::write(&p, "{\"id\":\"a\",\"text\":\"ok\"}\n{\"id\":3}\n").unwrap();
    let mut stream = DocumentStream::open(&p).unwrap();
    assert!(stream.next().unwrap().is_ok());
    assert!(matches!(stream.next().unwrap(), Err(Error::Parse { line: 2, .. })));
    assert!(DocumentStream::open(&dir.path().join("missing")).is_err());
}
