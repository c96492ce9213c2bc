//! Output directory handling: every artifact carries the resolved configuration.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;

use anyhow::Context;
use clap::ValueEnum;
use serde::Serialize;
use serde_json::Value;

use bubble_core::geometry::Shape;
use bubble_core::io::{json_record, save_shape, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

pub struct Output {
    dir: PathBuf,
    format: Format,
    config: Value,
}

impl Output {
    pub fn new(dir: PathBuf, format: Format, config: Value) -> anyhow::Result<Self> {
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { dir, format, config })
    }

    /// Writes `stem.csv`, or `stem.json` with the rows under `rows`.
    pub fn table(&self, stem: &str, table: &Table) -> anyhow::Result<PathBuf> {
        let path = match self.format {
            Format::Csv => {
                let path = self.dir.join(format!("{stem}.csv"));
                let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                table.write_csv(BufWriter::new(file), &self.config)?;
                path
            }
            Format::Json => {
                let path = self.dir.join(format!("{stem}.json"));
                fs::write(&path, json_record(&self.config, "rows", &table.to_json())?)
                    .with_context(|| format!("writing {}", path.display()))?;
                path
            }
        };
        Ok(path)
    }

    /// Writes `name.json` as `{"config": ..., key: value}`.
    pub fn record<T: Serialize>(&self, name: &str, key: &str, value: &T) -> anyhow::Result<PathBuf> {
        let path = self.dir.join(format!("{name}.json"));
        fs::write(&path, json_record(&self.config, key, value)?)
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    pub fn shape(&self, name: &str, shape: &Shape) -> anyhow::Result<PathBuf> {
        let path = self.dir.join(format!("{name}.json"));
        save_shape(&path, shape, &self.config).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}
