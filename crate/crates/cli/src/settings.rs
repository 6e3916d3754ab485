//! Flat `key=value` run configuration. Command-line flags win over the file.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use survmine::Error;

#[derive(Debug, Default)]
pub struct ConfigFile {
    entries: Vec<(String, String)>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>, known: &[&str]) -> Result<Self, Error> {
        let Some(path) = path else {
            return Ok(ConfigFile::default());
        };
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config `{}`: {e}", path.display())))?;
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("{}:{}: expected key=value", path.display(), i + 1))
            })?;
            let k = k.trim();
            if !known.contains(&k) {
                return Err(Error::Config(format!(
                    "{}:{}: unknown key `{k}`",
                    path.display(),
                    i + 1
                )));
            }
            entries.push((k.to_string(), v.trim().to_string()));
        }
        Ok(ConfigFile { entries })
    }

    /// Every value for a repeatable key, in file order.
    pub fn all(&self, key: &str) -> Vec<&str> {
        self.entries
            .iter()
            .filter(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .collect()
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.all(key).pop()
    }

    /// `flag` if given, else the parsed config value.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, Error> {
        if flag.is_some() {
            return Ok(flag);
        }
        self.get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| Error::Config(format!("bad value `{v}` for `{key}`")))
            })
            .transpose()
    }

    /// Paths from the flag, else from comma-separated or repeated config entries.
    pub fn paths(&self, flag: &[PathBuf], key: &str) -> Vec<PathBuf> {
        if !flag.is_empty() {
            return flag.to_vec();
        }
        self.all(key)
            .iter()
            .flat_map(|v| v.split(','))
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(PathBuf::from)
            .collect()
    }
}

/// `on` or `off`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Switch(pub bool);

impl FromStr for Switch {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "on" | "true" | "yes" => Ok(Switch(true)),
            "off" | "false" | "no" => Ok(Switch(false)),
            other => Err(format!("expected on or off, got `{other}`")),
        }
    }
}

pub fn require_files(paths: &[PathBuf]) -> Result<(), Error> {
    for p in paths {
        if !p.is_file() {
            return Err(Error::Config(format!("input `{}` not found", p.display())));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn flags_override_file() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(
            f,
            "# run\nalpha = 0.5\nspec=A:1990-1991:1992\nspec=B:1990-1992:1993\nin=a.dat, b.dat"
        )
        .unwrap();
        let cfg = ConfigFile::load(Some(f.path()), &["alpha", "spec", "in"]).unwrap();
        assert_eq!(cfg.pick::<f64>(None, "alpha").unwrap(), Some(0.5));
        assert_eq!(cfg.pick(Some(2.0), "alpha").unwrap(), Some(2.0));
        assert_eq!(cfg.all("spec").len(), 2);
        assert_eq!(
            cfg.paths(&[], "in"),
            vec![PathBuf::from("a.dat"), PathBuf::from("b.dat")]
        );
        assert_eq!(
            cfg.paths(&[PathBuf::from("c")], "in"),
            vec![PathBuf::from("c")]
        );
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "alpha=x").unwrap();
        let cfg = ConfigFile::load(Some(f.path()), &["alpha"]).unwrap();
        assert!(cfg.pick::<f64>(None, "alpha").is_err());
        assert!(ConfigFile::load(Some(f.path()), &["beta"]).is_err());
    }
}
