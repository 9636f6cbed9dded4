use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;

/// An output directory whose files were checked for clobbering up front, so
/// a refused run writes nothing.
pub struct OutDir {
    dir: PathBuf,
}

impl OutDir {
    pub fn prepare(dir: &Path, force: bool, files: &[&str]) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        if !force {
            let taken: Vec<&str> = files.iter().copied().filter(|f| dir.join(f).exists()).collect();
            if !taken.is_empty() {
                bail!("{} already holds {}; pass --force to overwrite", dir.display(), taken.join(", "));
            }
        }
        Ok(OutDir { dir: dir.to_path_buf() })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn create(&self, name: &str) -> Result<BufWriter<File>> {
        let p = self.dir.join(name);
        Ok(BufWriter::new(File::create(&p).with_context(|| format!("creating {}", p.display()))?))
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        serde_json::to_writer_pretty(self.create(name)?, value)?;
        Ok(())
    }
}
