use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

/// Non-comment, non-blank lines of a text file.
fn lines(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text
        .lines()
        .map(|l| l.trim_end_matches('\r'))
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(str::to_owned)
        .collect())
}

/// One path per line.
pub fn read_list(path: &Path) -> Result<Vec<PathBuf>> {
    Ok(lines(path)?.into_iter().map(|l| PathBuf::from(l.trim())).collect())
}

/// `reference \t estimate` rows; a `reference\testimate` header is skipped.
pub fn read_pairs(path: &Path) -> Result<Vec<(PathBuf, PathBuf)>> {
    let mut out = Vec::new();
    for (i, l) in lines(path)?.iter().enumerate() {
        let cols: Vec<&str> = l.split('\t').collect();
        anyhow::ensure!(
            cols.len() == 2,
            "{}: row {}: expected 2 tab-separated columns, found {}",
            path.display(),
            i + 1,
            cols.len()
        );
        if i == 0 && cols[0] == "reference" && cols[1] == "estimate" {
            continue;
        }
        out.push((PathBuf::from(cols[0]), PathBuf::from(cols[1])));
    }
    Ok(out)
}

pub fn resolve(root: Option<&Path>, p: &Path) -> PathBuf {
    match root {
        Some(r) => r.join(p),
        None => p.to_path_buf(),
    }
}

pub fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Directory that holds `path`, or `.` for a bare file name.
pub fn parent_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

pub fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let n = workers.unwrap_or(0);
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .context("building worker pool")
}
