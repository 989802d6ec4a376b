//! Run configuration: TOML with `[section]` tables of scalar or list
//! values. Keys are addressed as `section.key` and have at most one dot.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use bria::numeric::{parse_real, Sequence};

use crate::error::CliError;

#[derive(Clone, Debug)]
struct Entry {
    value: String,
    /// 0 for values set on the command line.
    line: usize,
}

#[derive(Debug)]
pub struct Config {
    path: PathBuf,
    entries: BTreeMap<String, Entry>,
    used: RefCell<BTreeSet<String>>,
}

impl Clone for Config {
    fn clone(&self) -> Self {
        Self {
            path: self.path.clone(),
            entries: self.entries.clone(),
            used: RefCell::new(BTreeSet::new()),
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path)
    }

    /// Parses TOML restricted to one level of `[section]` (or `section.key`).
    /// Scalars keep their text; arrays become comma lists, and arrays of
    /// arrays `;`-separated rows.
    pub fn parse(text: &str, path: &Path) -> Result<Self, CliError> {
        let line_of = |offset: usize| text[..offset.min(text.len())].matches('\n').count() + 1;
        let at = |span: Option<std::ops::Range<usize>>, msg: String| {
            let line = span.map_or(1, |s| line_of(s.start));
            CliError::Validation(format!("{}:{line}: {msg}", path.display()))
        };
        let doc = toml_edit::Document::parse(text)
            .map_err(|e| at(e.span(), e.message().trim().to_string()))?;
        let mut entries = BTreeMap::new();
        // `None` stands for a table or array of tables where a value belongs.
        let mut add = |full: String,
                       key: &toml_edit::Key,
                       value: Option<&toml_edit::Value>|
         -> Result<(), CliError> {
            let value = match value {
                Some(v) => flatten(v, 0).map_err(|m| at(key.span(), format!("{full}: {m}")))?,
                None => {
                    return Err(at(
                        key.span(),
                        format!("key `{full}` nests more than one level"),
                    ))
                }
            };
            let line = key.span().map_or(1, |s| line_of(s.start));
            entries.insert(full, Entry { value, line });
            Ok(())
        };
        for (name, _) in doc.as_table().iter() {
            let (key, item) = doc
                .as_table()
                .get_key_value(name)
                .unwrap_or_else(|| unreachable!("{name} listed"));
            match item {
                toml_edit::Item::Table(section) => {
                    for (inner, _) in section.iter() {
                        let (k, v) = section
                            .get_key_value(inner)
                            .unwrap_or_else(|| unreachable!("{inner} listed"));
                        add(format!("{name}.{inner}"), k, v.as_value())?;
                    }
                }
                toml_edit::Item::Value(toml_edit::Value::InlineTable(t)) => {
                    for (inner, _) in t.iter() {
                        let (k, v) = t
                            .get_key_value(inner)
                            .unwrap_or_else(|| unreachable!("{inner} listed"));
                        add(format!("{name}.{inner}"), k, v.as_value())?;
                    }
                }
                _ => add(name.to_string(), key, item.as_value())?,
            }
        }
        Ok(Self {
            path: path.to_path_buf(),
            entries,
            used: RefCell::new(BTreeSet::new()),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Directory that relative paths in the file are resolved against.
    pub fn base_dir(&self) -> &Path {
        self.path.parent().unwrap_or(Path::new("."))
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.entries.insert(
            key.to_string(),
            Entry {
                value: value.into(),
                line: 0,
            },
        );
    }

    pub fn unset(&mut self, key: &str) {
        self.entries.remove(key);
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    /// An error anchored at the line that set `key`.
    pub fn error(&self, key: &str, msg: impl std::fmt::Display) -> CliError {
        match self.entries.get(key) {
            Some(Entry { line: 0, .. }) => {
                CliError::Validation(format!("command line: {key}: {msg}"))
            }
            Some(e) => {
                CliError::Validation(format!("{}:{}: {key}: {msg}", self.path.display(), e.line))
            }
            None => CliError::Validation(format!("{}: {key}: {msg}", self.path.display())),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.used.borrow_mut().insert(key.to_string());
        self.entries.get(key).map(|e| e.value.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str, CliError> {
        self.get(key)
            .ok_or_else(|| self.error(key, "missing required key"))
    }

    fn typed<T>(
        &self,
        key: &str,
        parse: impl FnOnce(&str) -> Result<T, String>,
    ) -> Result<Option<T>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => parse(v).map(Some).map_err(|m| self.error(key, m)),
        }
    }

    pub fn real(&self, key: &str) -> Result<Option<f64>, CliError> {
        self.typed(key, |v| parse_real(v).map_err(|e| e.to_string()))
    }

    pub fn real_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        Ok(self.real(key)?.unwrap_or(default))
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize, CliError> {
        Ok(self
            .typed(key, |v| {
                v.parse()
                    .map_err(|_| format!("`{v}` is not a non-negative integer"))
            })?
            .unwrap_or(default))
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64, CliError> {
        Ok(self
            .typed(key, |v| {
                v.parse()
                    .map_err(|_| format!("`{v}` is not a 64-bit unsigned integer"))
            })?
            .unwrap_or(default))
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool, CliError> {
        Ok(self
            .typed(key, |v| match v {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                _ => Err(format!("`{v}` is not a boolean")),
            })?
            .unwrap_or(default))
    }

    pub fn sequence(&self, key: &str) -> Result<Option<Sequence>, CliError> {
        self.typed(key, |v| Sequence::parse(v).map_err(|e| e.to_string()))
    }

    pub fn reals(&self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        self.typed(key, |v| {
            v.split(',')
                .map(|x| parse_real(x.trim()).map_err(|e| e.to_string()))
                .collect()
        })
    }

    /// `prefix.name = value` pairs as registry parameters `$name`, except
    /// the keys listed in `skip`.
    pub fn params(&self, prefix: &str, skip: &[&str]) -> HashMap<String, String> {
        let mut out = HashMap::new();
        for (key, e) in &self.entries {
            if let Some(name) = key.strip_prefix(prefix).and_then(|r| r.strip_prefix('.')) {
                if !skip.contains(&name) {
                    self.used.borrow_mut().insert(key.clone());
                    out.insert(name.to_string(), e.value.clone());
                }
            }
        }
        out
    }

    pub fn resolve(&self, key: &str) -> Result<PathBuf, CliError> {
        let p = PathBuf::from(self.require(key)?);
        let p = if p.is_absolute() {
            p
        } else {
            self.base_dir().join(p)
        };
        if !p.exists() {
            return Err(self.error(key, format!("file {} does not exist", p.display())));
        }
        Ok(p)
    }

    /// Fails on the first key no command looked at.
    pub fn reject_unused(&self) -> Result<(), CliError> {
        let used = self.used.borrow();
        match self.entries.keys().find(|k| !used.contains(*k)) {
            Some(k) => Err(self.error(k, "unknown key")),
            None => Ok(()),
        }
    }

    /// Every entry as `key = value`, sorted.
    pub fn render(&self) -> String {
        self.entries
            .iter()
            .map(|(k, e)| format!("{k} = {}\n", e.value))
            .collect()
    }
}

fn flatten(v: &toml_edit::Value, depth: usize) -> Result<String, String> {
    use toml_edit::Value;
    Ok(match v {
        Value::String(s) => s.value().clone(),
        Value::Integer(i) => i.value().to_string(),
        Value::Float(f) => f.value().to_string(),
        Value::Boolean(b) => b.value().to_string(),
        Value::Array(items) if depth < 2 => {
            let parts = items
                .iter()
                .map(|x| flatten(x, depth + 1))
                .collect::<Result<Vec<_>, _>>()?;
            parts.join(if depth == 0 && items.iter().any(Value::is_array) {
                ";"
            } else {
                ","
            })
        }
        Value::Array(_) => return Err("arrays nest at most two deep".into()),
        Value::Datetime(_) => return Err("dates are not supported".into()),
        Value::InlineTable(_) => return Err("nests more than one level".into()),
    })
}
