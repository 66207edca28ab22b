//! Prompt templates: UTF-8 text with `{{slot}}` markers.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::GatewayError;

const BUNDLED: [(&str, &str); 9] = [
    ("filter_chains", include_str!("../templates/filter_chains.txt")),
    ("select_node", include_str!("../templates/select_node.txt")),
    ("retrieve_rules", include_str!("../templates/retrieve_rules.txt")),
    ("expand_node", include_str!("../templates/expand_node.txt")),
    ("decide_outline", include_str!("../templates/decide_outline.txt")),
    ("refine_node", include_str!("../templates/refine_node.txt")),
    ("solve_subtask", include_str!("../templates/solve_subtask.txt")),
    ("generate_plan", include_str!("../templates/generate_plan.txt")),
    ("score_confidence", include_str!("../templates/score_confidence.txt")),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub id: String,
    pub text: String,
}

impl Template {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Template {
            id: id.into(),
            text: text.into(),
        }
    }

    /// Slot names in order of first appearance.
    pub fn slots(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        let mut rest = self.text.as_str();
        while let Some(start) = rest.find("{{") {
            let after = &rest[start + 2..];
            match after.find("}}") {
                Some(end) => {
                    let name = after[..end].trim().to_string();
                    if !out.contains(&name) {
                        out.push(name);
                    }
                    rest = &after[end + 2..];
                }
                None => break,
            }
        }
        out
    }

    /// Single pass substitution: slot values are never rescanned, so values
    /// may themselves contain `{{...}}`.
    pub fn render(&self, slots: &BTreeMap<String, String>) -> Result<String, GatewayError> {
        let mut out = String::with_capacity(self.text.len());
        let mut rest = self.text.as_str();
        while let Some(start) = rest.find("{{") {
            let after = &rest[start + 2..];
            let Some(end) = after.find("}}") else {
                break;
            };
            out.push_str(&rest[..start]);
            let name = after[..end].trim();
            let value = slots.get(name).ok_or_else(|| GatewayError::MissingSlot {
                template: self.id.clone(),
                slot: name.to_string(),
            })?;
            out.push_str(value);
            rest = &after[end + 2..];
        }
        out.push_str(rest);
        Ok(out)
    }
}

/// Templates by id. Starts from the bundled set; a directory of `<id>.txt`
/// files overrides or extends it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    templates: BTreeMap<String, Template>,
}

impl Default for TemplateSet {
    fn default() -> Self {
        TemplateSet {
            templates: BUNDLED
                .iter()
                .map(|(id, text)| (id.to_string(), Template::new(*id, *text)))
                .collect(),
        }
    }
}

impl TemplateSet {
    pub fn get(&self, id: &str) -> Result<&Template, GatewayError> {
        self.templates
            .get(id)
            .ok_or_else(|| GatewayError::UnknownTemplate(id.to_string()))
    }

    pub fn insert(&mut self, template: Template) {
        self.templates.insert(template.id.clone(), template);
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.templates.keys().map(String::as_str)
    }

    pub fn load_dir(&mut self, dir: &Path) -> Result<usize, GatewayError> {
        let entries = std::fs::read_dir(dir).map_err(|e| GatewayError::Io(format!("{}: {e}", dir.display())))?;
        let mut count = 0;
        for entry in entries {
            let path = entry.map_err(|e| GatewayError::Io(e.to_string()))?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("txt") {
                continue;
            }
            let Some(id) = path.file_stem().and_then(|s| s.to_str()) else {
                continue;
            };
            let text =
                std::fs::read_to_string(&path).map_err(|e| GatewayError::Io(format!("{}: {e}", path.display())))?;
            self.insert(Template::new(id, text));
            count += 1;
        }
        Ok(count)
    }
}
