use std::collections::BTreeMap;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("unknown template `{0}`")]
    UnknownTemplate(String),
    #[error("template variable `{0}` has no binding")]
    MissingVariable(String),
    #[error("failed to load templates: {0}")]
    Io(String),
}

const BUILTIN: &[(&str, &str)] = &[
    ("manufacturer_system", include_str!("../../templates/manufacturer_system.txt")),
    ("manufacturer_analyze", include_str!("../../templates/manufacturer_analyze.txt")),
    ("manufacturer_decide", include_str!("../../templates/manufacturer_decide.txt")),
    ("buyer_system", include_str!("../../templates/buyer_system.txt")),
    ("buyer_analyze", include_str!("../../templates/buyer_analyze.txt")),
    ("buyer_decide", include_str!("../../templates/buyer_decide.txt")),
    ("fda_system", include_str!("../../templates/fda_system.txt")),
    ("fda_analyze", include_str!("../../templates/fda_analyze.txt")),
    ("fda_decide", include_str!("../../templates/fda_decide.txt")),
    ("zero_shot_system", include_str!("../../templates/zero_shot_system.txt")),
    ("zero_shot", include_str!("../../templates/zero_shot.txt")),
];

fn placeholder() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\{\{\s*([A-Za-z0-9_]+)\s*\}\}").unwrap())
}

/// Prompt templates keyed by `<role>_<stage>`, with `{{variable}}` placeholders.
#[derive(Debug, Clone)]
pub struct TemplateStore {
    templates: BTreeMap<String, String>,
}

impl Default for TemplateStore {
    fn default() -> Self {
        Self::builtin()
    }
}

impl TemplateStore {
    pub fn builtin() -> Self {
        let templates = BUILTIN.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        Self { templates }
    }

    pub fn empty() -> Self {
        Self { templates: BTreeMap::new() }
    }

    pub fn insert(&mut self, id: impl Into<String>, body: impl Into<String>) {
        self.templates.insert(id.into(), body.into());
    }

    /// Overrides builtin templates with every `*.txt` file in `dir` (file stem is the id).
    pub fn load_overrides(&mut self, dir: &Path) -> Result<usize, TemplateError> {
        let entries = std::fs::read_dir(dir).map_err(|e| TemplateError::Io(e.to_string()))?;
        let mut loaded = 0;
        for entry in entries {
            let path = entry.map_err(|e| TemplateError::Io(e.to_string()))?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("txt") {
                continue;
            }
            let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else { continue };
            let body = std::fs::read_to_string(&path).map_err(|e| TemplateError::Io(e.to_string()))?;
            self.templates.insert(stem.to_owned(), body);
            loaded += 1;
        }
        Ok(loaded)
    }

    pub fn get(&self, id: &str) -> Option<&str> {
        self.templates.get(id).map(String::as_str)
    }

    pub fn render(&self, id: &str, vars: &BTreeMap<String, String>) -> Result<String, TemplateError> {
        let body = self.get(id).ok_or_else(|| TemplateError::UnknownTemplate(id.to_owned()))?;
        render_str(body, vars)
    }
}

pub fn render_str(body: &str, vars: &BTreeMap<String, String>) -> Result<String, TemplateError> {
    let re = placeholder();
    if let Some(missing) = re
        .captures_iter(body)
        .map(|c| c[1].to_owned())
        .find(|name| !vars.contains_key(name))
    {
        return Err(TemplateError::MissingVariable(missing));
    }
    Ok(re.replace_all(body, |c: &regex::Captures| vars[&c[1]].clone()).into_owned())
}
