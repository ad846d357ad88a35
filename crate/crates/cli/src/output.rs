//! Run directory: CSV/JSON/binary payloads plus a manifest.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::json;

use crate::CliError;

/// Environment variable naming the root output directory.
pub const OUT_ENV: &str = "STABLEFP_OUT";

/// `--out` wins, then `$STABLEFP_OUT/<name>`, then the config's directory, then `out/<name>`.
pub fn resolve_dir(flag: Option<&Path>, configured: Option<&Path>, name: &str) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(root) = std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()) {
        return PathBuf::from(root).join(name);
    }
    configured.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("out").join(name))
}

/// Real number with 17 significant digits.
pub fn real(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub struct RunDir {
    dir: PathBuf,
    files: Vec<String>,
    started: Instant,
    started_unix: f64,
}

impl RunDir {
    pub fn create(dir: PathBuf) -> Result<Self, CliError> {
        std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
        Ok(Self { dir, files: Vec::new(), started: Instant::now(), started_unix })
    }

    fn open(&mut self, name: &str) -> Result<(PathBuf, BufWriter<File>), CliError> {
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        self.files.push(name.to_string());
        Ok((path, BufWriter::new(file)))
    }

    pub fn csv(&mut self, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<(), CliError> {
        let (path, w) = self.open(name)?;
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(w);
        let io = |e: csv::Error| CliError::io(&path, e.into());
        w.write_record(header).map_err(io)?;
        for r in rows {
            w.write_record(r).map_err(io)?;
        }
        w.flush().map_err(|e| CliError::io(&path, e))
    }

    pub fn json(&mut self, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        let (path, mut w) = self.open(name)?;
        let io = |e: std::io::Error| CliError::io(&path, e);
        serde_json::to_writer_pretty(&mut w, value).map_err(|e| io(e.into()))?;
        w.write_all(b"\n").map_err(io)?;
        w.flush().map_err(io)
    }

    pub fn binary(
        &mut self,
        name: &str,
        write: impl FnOnce(&mut BufWriter<File>) -> stablefp::Result<()>,
    ) -> Result<(), CliError> {
        let (path, mut w) = self.open(name)?;
        write(&mut w)?;
        w.flush().map_err(|e| CliError::io(&path, e))
    }

    /// Write `manifest.json`; the only artifact carrying timestamps and host details.
    pub fn finish(
        mut self,
        command: &str,
        config: Option<&crate::config::ExperimentConfig>,
        extra: serde_json::Value,
    ) -> Result<(), CliError> {
        let wall = self.started.elapsed().as_secs_f64();
        let hostname = std::fs::read_to_string("/proc/sys/kernel/hostname")
            .map(|s| s.trim().to_string())
            .unwrap_or_default();
        let manifest = json!({
            "command": command,
            "name": config.map(|c| c.name.clone()),
            "config_hash": config.map(|c| c.hash()),
            "config": config.map(|c| c.canonical()),
            "version": env!("CARGO_PKG_VERSION"),
            "started_unix": self.started_unix,
            "wall_seconds": wall,
            "threads": rayon::current_num_threads(),
            "host": {
                "hostname": hostname,
                "os": std::env::consts::OS,
                "arch": std::env::consts::ARCH,
                "cpus": std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
            },
            "outputs": self.files,
            "extra": extra,
        });
        let files = std::mem::take(&mut self.files);
        self.json("manifest.json", &manifest)?;
        self.files = files;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_keep_seventeen_digits() {
        let x = 0.1 + 0.2;
        let s = real(x);
        assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
        assert_eq!(s.split('e').next().unwrap().replace(['.', '-'], "").len(), 17);
        assert_eq!(real(f64::INFINITY), "inf");
    }

    #[test]
    fn flag_beats_environment_and_config() {
        let d = resolve_dir(Some(Path::new("x")), Some(Path::new("y")), "n");
        assert_eq!(d, PathBuf::from("x"));
    }
}
