use std::path::Path;

use vidadapt_core::ClassCatalog;

use crate::error::{Error, PathContext, Result};

/// One class name per line, `background` first. Blank lines and `#` comments
/// are skipped.
pub fn read_catalog(path: &Path) -> Result<ClassCatalog> {
    let text = std::fs::read_to_string(path).at(path)?;
    let names: Vec<&str> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect();
    if names.first() != Some(&"background") {
        return Err(Error::Format {
            path: path.to_path_buf(),
            message: "first class must be `background`".into(),
        });
    }
    ClassCatalog::new(names.iter().map(|s| s.to_string())).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn write_catalog(path: &Path, catalog: &ClassCatalog) -> Result<()> {
    let mut text = catalog.names().join("\n");
    text.push('\n');
    std::fs::write(path, text).at(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("catalog.txt");
        let catalog = ClassCatalog::new(["background", "cat", "dog"]).unwrap();
        write_catalog(&path, &catalog).unwrap();
        assert_eq!(read_catalog(&path).unwrap(), catalog);

        std::fs::write(&path, "# classes\nbackground\n\ncat\n").unwrap();
        assert_eq!(read_catalog(&path).unwrap().len(), 2);

        std::fs::write(&path, "cat\nbackground\n").unwrap();
        assert!(matches!(read_catalog(&path), Err(Error::Format { .. })));
        std::fs::write(&path, "background\ncat\ncat\n").unwrap();
        assert!(read_catalog(&path).is_err());
    }
}
