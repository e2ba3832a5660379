//! Flat `key = value` configuration files merged under command-line flags,
//! and the mapping from failures to exit codes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::warn;

/// Exit status 1, 2 or 3 with a one-line diagnostic.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(String),
    Numeric(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Numeric(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Numeric(m) => m,
        }
    }
}

impl From<evcomp::Error> for Failure {
    fn from(e: evcomp::Error) -> Failure {
        match e {
            evcomp::Error::Numeric(_) => Failure::Numeric(e.to_string()),
            evcomp::Error::Config(_) => Failure::Usage(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

pub type Outcome<T> = std::result::Result<T, Failure>;

pub struct Settings {
    file: BTreeMap<String, String>,
    used: BTreeSet<String>,
    effective: BTreeMap<String, String>,
}

impl Settings {
    pub fn empty() -> Settings {
        Settings {
            file: BTreeMap::new(),
            used: BTreeSet::new(),
            effective: BTreeMap::new(),
        }
    }

    /// Reads `key = value` lines; `#` starts a comment. Keys use the long
    /// flag names, with `-` or `_` interchangeable.
    pub fn load(path: &Path) -> Outcome<Settings> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut file = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Failure::Usage(format!("{}:{}: expected key = value", path.display(), i + 1)))?;
            file.insert(k.trim().replace('_', "-"), v.trim().to_string());
        }
        Ok(Settings { file, ..Settings::empty() })
    }

    fn raw(&mut self, key: &str) -> Option<String> {
        self.used.insert(key.to_string());
        self.file.get(key).cloned()
    }

    fn parse<T: FromStr>(key: &str, text: &str) -> Outcome<T>
    where
        T::Err: Display,
    {
        text.parse()
            .map_err(|e| Failure::Usage(format!("invalid value {text:?} for {key}: {e}")))
    }

    /// Flag if given, else the config file, else `default`.
    pub fn get<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Outcome<T>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        Ok(self.opt(key, flag)?.unwrap_or_else(|| {
            self.effective.insert(key.into(), default.to_string());
            default
        }))
    }

    pub fn opt<T>(&mut self, key: &str, flag: Option<T>) -> Outcome<Option<T>>
    where
        T: FromStr + Display,
        T::Err: Display,
    {
        let from_file = self.raw(key);
        let v = match flag {
            Some(v) => Some(v),
            None => from_file.map(|t| Self::parse(key, &t)).transpose()?,
        };
        if let Some(v) = &v {
            self.effective.insert(key.into(), v.to_string());
        }
        Ok(v)
    }

    /// Boolean switches: on if the flag is given or the file says so.
    pub fn switch(&mut self, key: &str, flag: bool) -> Outcome<bool> {
        let v = flag || self.raw(key).map(|t| Self::parse::<bool>(key, &t)).transpose()?.unwrap_or(false);
        self.effective.insert(key.into(), v.to_string());
        Ok(v)
    }

    pub fn opt_path(&mut self, key: &str, flag: Option<PathBuf>) -> Option<PathBuf> {
        let v = flag.or_else(|| self.raw(key).map(PathBuf::from));
        if let Some(p) = &v {
            self.effective.insert(key.into(), p.display().to_string());
        }
        v
    }

    /// A required output path.
    pub fn output(&mut self, key: &str, flag: Option<PathBuf>) -> Outcome<PathBuf> {
        self.opt_path(key, flag)
            .ok_or_else(|| Failure::Usage(format!("missing required --{key}")))
    }

    /// A required input path, which must exist.
    pub fn input(&mut self, key: &str, flag: Option<PathBuf>) -> Outcome<PathBuf> {
        let p = self.output(key, flag)?;
        check_exists(&p)?;
        Ok(p)
    }

    pub fn opt_input(&mut self, key: &str, flag: Option<PathBuf>) -> Outcome<Option<PathBuf>> {
        let p = self.opt_path(key, flag);
        if let Some(p) = &p {
            check_exists(p)?;
        }
        Ok(p)
    }

    pub fn record(&mut self, key: &str, value: impl Display) {
        self.effective.insert(key.into(), value.to_string());
    }

    pub fn effective(&self) -> &BTreeMap<String, String> {
        &self.effective
    }

    /// Warns about config keys this command never looked at.
    pub fn warn_unused(&self) {
        for k in self.file.keys().filter(|k| !self.used.contains(*k)) {
            warn!("config key {k:?} is not used by this command");
        }
    }
}

fn check_exists(p: &Path) -> Outcome<()> {
    if p.exists() {
        Ok(())
    } else {
        Err(Failure::Data(format!("input {} does not exist", p.display())))
    }
}
