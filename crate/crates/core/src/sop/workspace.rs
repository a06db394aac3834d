use std::fs;
use std::io;
use std::path::Path;

use crate::document::render_document;
use crate::pool::log::write_log;

use super::ProjectResult;

/// Writes `docs/`, `src/`, `tests/`, `logs/messages.jsonl` and `ledger.json`
/// under `dir`. Existing files with other names are left alone.
pub fn write_workspace(result: &ProjectResult, dir: &Path) -> io::Result<()> {
    let docs = dir.join("docs");
    fs::create_dir_all(&docs)?;
    for doc in &result.documents {
        let Some(name) = doc.kind.file_name() else {
            continue;
        };
        let text = render_document(doc).map_err(io::Error::other)?;
        fs::write(docs.join(name), text)?;
    }
    for (sub, files) in [("src", &result.code_files), ("tests", &result.test_files)] {
        let root = dir.join(sub);
        fs::create_dir_all(&root)?;
        for file in files {
            let path = root.join(&file.file_name);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::write(path, &file.code)?;
        }
    }
    write_log(
        &dir.join("logs").join("messages.jsonl"),
        result.messages.iter().map(|m| &**m),
    )
    .map_err(io::Error::other)?;
    result.ledger.save(&dir.join("ledger.json"))
}
