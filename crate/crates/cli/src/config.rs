//! Run configuration: a flat TOML file whose keys mirror the long flags
//! (dashes become underscores). Flags win over the file, the file over the
//! built-in defaults.

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,

    // resources
    pub abbreviations: Option<PathBuf>,
    pub dictionary: Option<PathBuf>,
    pub seeds: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub syntactic_events: Option<PathBuf>,

    // patterns
    pub n: Option<usize>,
    pub patterns: Option<Vec<String>>,

    // bootstrapping
    pub mode: Option<String>,
    pub iterations: Option<usize>,
    pub combination: Option<usize>,
    pub min_w: Option<u64>,
    pub max_w: Option<u64>,
    pub min_p: Option<u64>,
    pub max_p: Option<usize>,
    pub cap: Option<usize>,

    // classification
    pub scheme: Option<String>,
    pub features: Option<Vec<String>>,
    pub theta: Option<f64>,
    pub percent: Option<u32>,
    pub b: Option<usize>,
    pub p: Option<usize>,
    pub t: Option<f64>,
    pub m: Option<usize>,
    pub sample_fraction: Option<f64>,
    pub c: Option<f64>,
    pub epochs: Option<usize>,
    pub select_c: Option<usize>,
    pub c_grid: Option<Vec<f64>>,
    pub folds: Option<usize>,

    // tuning grids
    pub thetas: Option<Vec<f64>>,
    pub percents: Option<Vec<u32>>,
    pub bs: Option<Vec<usize>>,
    pub ps: Option<Vec<usize>>,
    pub ts: Option<Vec<f64>>,

    // significance
    pub test: Option<String>,
    pub shuffles: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }
}

/// The settings an invocation actually ran with. Their hash goes into the
/// header of every output file.
pub struct Settings {
    command: &'static str,
    values: BTreeMap<&'static str, String>,
}

impl Settings {
    pub fn new(command: &'static str) -> Self {
        Settings {
            command,
            values: BTreeMap::new(),
        }
    }

    pub fn take<T: Debug>(
        &mut self,
        key: &'static str,
        flag: Option<T>,
        file: Option<T>,
        default: T,
    ) -> T {
        let v = flag.or(file).unwrap_or(default);
        self.values.insert(key, format!("{v:?}"));
        v
    }

    pub fn take_opt<T: Debug>(
        &mut self,
        key: &'static str,
        flag: Option<T>,
        file: Option<T>,
    ) -> Option<T> {
        let v = flag.or(file);
        self.values.insert(key, format!("{v:?}"));
        v
    }

    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.command.as_bytes());
        h.update(b"\n");
        for (k, v) in &self.values {
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.as_bytes());
            h.update(b"\n");
        }
        h.finalize()[..8]
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn header(&self) -> String {
        shaper::io::header_line(shaper::VERSION, &self.hash())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flag_beats_file_beats_default() {
        let mut s = Settings::new("x");
        assert_eq!(s.take("a", Some(1), Some(2), 3), 1);
        assert_eq!(s.take("b", None, Some(2), 3), 2);
        assert_eq!(s.take("c", None::<i32>, None, 3), 3);
    }

    #[test]
    fn hash_tracks_values_and_command() {
        let mut a = Settings::new("x");
        a.take("k", Some(1), None, 0);
        let mut b = Settings::new("x");
        b.take("k", Some(1), None, 0);
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);
        let mut c = Settings::new("x");
        c.take("k", Some(2), None, 0);
        assert_ne!(a.hash(), c.hash());
        let mut d = Settings::new("y");
        d.take("k", Some(1), None, 0);
        assert_ne!(a.hash(), d.hash());
    }

    #[test]
    fn unknown_key_is_rejected() {
        let err = toml::from_str::<FileConfig>("min_w = 10\nbogus = 1\n").unwrap_err();
        assert!(err.to_string().contains("bogus"));
        let ok: FileConfig = toml::from_str("min_w = 10\npatterns = [\"word\"]\n").unwrap();
        assert_eq!(ok.min_w, Some(10));
    }
}
