//! File plumbing shared by the subcommands.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::annotate::PageAnnotation;
use crate::config::PipelineConfig;

/// One JSON value per line; blank lines are skipped.
pub fn read_ndjson<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.with_context(|| format!("cannot read {}", path.display()))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).with_context(|| format!("{}:{}: bad record", path.display(), i + 1))?);
    }
    Ok(out)
}

pub fn write_ndjson<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut w = create(path)?;
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    w.flush().with_context(|| format!("cannot write {}", path.display()))
}

pub fn write_string(path: &Path, s: &str) -> Result<()> {
    ensure_parent(path)?;
    fs::write(path, s).with_context(|| format!("cannot write {}", path.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_string(path, &s)
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    ensure_parent(path)?;
    let f = fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

/// Files given directly, plus files in given directories whose extension is
/// in `exts`, sorted by path.
pub fn expand_inputs(inputs: &[PathBuf], exts: &[&str]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)
                .with_context(|| format!("cannot list {}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| {
                    f.is_file()
                        && f.extension()
                            .and_then(|e| e.to_str())
                            .is_some_and(|e| exts.iter().any(|x| x.eq_ignore_ascii_case(e)))
                })
                .collect();
            found.sort();
            out.extend(found);
        } else if p.is_file() {
            out.push(p.clone());
        } else {
            anyhow::bail!("{}: no such file or directory", p.display());
        }
    }
    Ok(out)
}

pub fn file_stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Page key for pairing: final path component without extension or a
/// leading `#` (TEI `facs` references).
pub fn page_key(id: &str) -> &str {
    let base = id.rsplit(['/', '\\']).next().unwrap_or(id).trim_start_matches('#');
    match base.rfind('.') {
        Some(i) if i > 0 => &base[..i],
        _ => base,
    }
}

/// Annotation pages with the file each came from. Accepts a directory of
/// per-page JSON files (run summaries skipped), an ndjson file, or a single
/// JSON file.
pub fn load_annotations(path: &Path) -> Result<Vec<(String, PageAnnotation)>> {
    let parse = |f: &Path| -> Result<PageAnnotation> {
        let s = fs::read_to_string(f).with_context(|| format!("cannot read {}", f.display()))?;
        PageAnnotation::from_json(&s).with_context(|| format!("{}: not an annotation", f.display()))
    };
    if path.is_dir() {
        let files = expand_inputs(&[path.to_path_buf()], &["json"])?;
        files
            .into_iter()
            .filter(|f| !f.to_string_lossy().ends_with(".summary.json"))
            .map(|f| Ok((f.display().to_string(), parse(&f)?)))
            .collect()
    } else if matches!(path.extension().and_then(|e| e.to_str()), Some("ndjson" | "jsonl")) {
        let label = path.display().to_string();
        Ok(read_ndjson::<PageAnnotation>(path)?
            .into_iter()
            .map(|p| (format!("{label}#{}", p.image), p))
            .collect())
    } else {
        Ok(vec![(path.display().to_string(), parse(path)?)])
    }
}

/// Where a run's summary and resolved config go: next to a file output, or
/// inside a directory output.
pub struct RunArtifacts {
    pub dir: PathBuf,
    pub name: String,
}

impl RunArtifacts {
    pub fn for_file(output: &Path, name: &str) -> Self {
        RunArtifacts {
            dir: output.parent().map(Path::to_path_buf).unwrap_or_default(),
            name: format!("{}.{name}", file_stem(output)),
        }
    }

    pub fn for_dir(output: &Path, name: &str) -> Self {
        RunArtifacts {
            dir: output.to_path_buf(),
            name: name.to_string(),
        }
    }

    pub fn summary_path(&self) -> PathBuf {
        self.dir.join(format!("{}.summary.json", self.name))
    }

    pub fn write(&self, summary: &serde_json::Value, cfg: &PipelineConfig) -> Result<()> {
        write_json(&self.summary_path(), summary)?;
        write_string(&self.dir.join(format!("{}.config.toml", self.name)), &cfg.to_toml())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn page_keys() {
        assert_eq!(page_key("scans/p0007.png"), "p0007");
        assert_eq!(page_key("p0007"), "p0007");
        assert_eq!(page_key("#f0007"), "f0007");
        assert_eq!(page_key(".hidden"), ".hidden");
    }

    #[test]
    fn ndjson_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/x.ndjson");
        write_ndjson(&p, &[1, 2, 3]).unwrap();
        assert_eq!(read_ndjson::<i32>(&p).unwrap(), [1, 2, 3]);
        assert!(read_ndjson::<i32>(&dir.path().join("missing")).is_err());
    }
}
