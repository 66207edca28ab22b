use std::collections::BTreeMap;

use super::pattern::{NodePattern, PatternError};
use super::{Rule, RuleLibrary};
use crate::text::collapse_whitespace;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LibraryError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("missing `{0}` section")]
    MissingSection(&'static str),
}

fn syntax(line: usize, reason: impl Into<String>) -> LibraryError {
    LibraryError::Syntax {
        line,
        reason: reason.into(),
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Preamble,
    Rules,
    Divisible,
    Leaf,
}

fn section_header(line: &str) -> Option<Section> {
    let l = line.trim().to_lowercase();
    if !l.ends_with(':') {
        return None;
    }
    if l == "rules:" {
        Some(Section::Rules)
    } else if (l.starts_with("divisible") || l.starts_with("devisible")) && l.contains("nodes") {
        Some(Section::Divisible)
    } else if l.starts_with("leaf nodes") {
        Some(Section::Leaf)
    } else {
        None
    }
}

/// Splits `code # comment` at the first `#` outside brackets and braces.
fn split_comment(line: &str) -> (&str, &str) {
    let mut depth = 0i32;
    for (i, c) in line.char_indices() {
        match c {
            '[' | '{' => depth += 1,
            ']' | '}' => depth -= 1,
            '#' if depth <= 0 => return (&line[..i], line[i + 1..].trim()),
            _ => {}
        }
    }
    (line, "")
}

fn check_balanced(text: &str, line: usize) -> Result<(), LibraryError> {
    let mut stack = Vec::new();
    for c in text.chars() {
        match c {
            '[' | '{' => stack.push(c),
            ']' => {
                if stack.pop() != Some('[') {
                    return Err(syntax(line, format!("unbalanced brackets in `{}`", text.trim())));
                }
            }
            '}' if stack.pop() != Some('{') => {
                return Err(syntax(line, format!("unbalanced braces in `{}`", text.trim())));
            }
            _ => {}
        }
    }
    if let Some(open) = stack.last() {
        let what = if *open == '[' { "brackets" } else { "braces" };
        return Err(syntax(line, format!("unbalanced {what} in `{}`", text.trim())));
    }
    Ok(())
}

/// Splits `[a][b] [c]` into atoms. Anything outside brackets other than
/// whitespace is an error.
fn bracket_atoms(text: &str, line: usize) -> Result<Vec<String>, LibraryError> {
    let mut atoms = Vec::new();
    let mut depth = 0usize;
    let mut current = String::new();
    for c in text.chars() {
        match c {
            '[' => {
                if depth == 0 {
                    current.clear();
                }
                depth += 1;
                current.push(c);
            }
            ']' => {
                if depth == 0 {
                    return Err(syntax(line, "unbalanced brackets"));
                }
                depth -= 1;
                current.push(c);
                if depth == 0 {
                    atoms.push(collapse_whitespace(&current));
                }
            }
            _ if depth > 0 => current.push(c),
            _ if c.is_whitespace() => {}
            _ => return Err(syntax(line, format!("unexpected `{c}` outside a bracket atom"))),
        }
    }
    if depth != 0 {
        return Err(syntax(line, "unbalanced brackets"));
    }
    Ok(atoms)
}

fn pattern(source: &str, line: usize) -> Result<NodePattern, LibraryError> {
    NodePattern::parse(source).map_err(|e| pattern_error(e, line))
}

fn pattern_error(e: PatternError, line: usize) -> LibraryError {
    syntax(line, e.to_string())
}

/// Lookup key for placeholder declarations: `Specific segments of
/// transportation` and `Specific segment of transportation` meet, as do
/// `... for each city` and `... for one city`.
fn alias_key(name: &str) -> String {
    name.split_whitespace()
        .map(|w| {
            let w = w.to_lowercase();
            if w == "each" {
                "one".to_string()
            } else if w.len() > 3 && w.ends_with('s') {
                w[..w.len() - 1].to_string()
            } else {
                w
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn bare_placeholder(item: &str) -> Option<&str> {
    let inner = item.strip_prefix("{{")?.strip_suffix("}}")?;
    if inner.contains(['{', '}', '[', ']']) || inner.trim().is_empty() {
        None
    } else {
        Some(inner.trim())
    }
}

/// The first `[...]` after `such as` in a comment.
fn example_atom(comment: &str) -> Option<&str> {
    let lower = comment.to_lowercase();
    let at = lower.find("such as")?;
    let rest = &comment[at..];
    let open = rest.find('[')?;
    let close = rest[open..].find(']')?;
    Some(&rest[open..open + close + 1])
}

struct PendingRule {
    id: String,
    head: String,
    body: String,
    comment: String,
    line: usize,
}

pub fn parse_library(text: &str) -> Result<RuleLibrary, LibraryError> {
    let mut section = Section::Preamble;
    let mut saw_rules = false;
    let mut pending: Vec<PendingRule> = Vec::new();
    let mut divisible = Vec::new();
    let mut leaf = Vec::new();
    let mut aliases: BTreeMap<String, NodePattern> = BTreeMap::new();
    let mut group = 0usize;
    let mut alternative = 1usize;

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if raw_line.trim().is_empty() {
            continue;
        }
        if let Some(s) = section_header(raw_line) {
            section = s;
            saw_rules |= s == Section::Rules;
            continue;
        }
        let (code, comment) = split_comment(raw_line);
        match section {
            Section::Preamble => {
                if code.trim().is_empty() {
                    continue;
                }
                return Err(syntax(line_no, "content before the `Rules:` section"));
            }
            Section::Rules => {
                if code.trim().is_empty() {
                    continue;
                }
                let indented = raw_line.starts_with(char::is_whitespace);
                let mut body_text = code.trim();
                let numbered = body_text
                    .split_once('.')
                    .filter(|(n, _)| !n.is_empty() && n.chars().all(|c| c.is_ascii_digit()));
                if let Some((n, rest)) = numbered {
                    group = n.parse().map_err(|_| syntax(line_no, "bad rule number"))?;
                    alternative = 1;
                    body_text = rest.trim();
                } else if indented && !pending.is_empty() {
                    alternative += 1;
                } else {
                    group += 1;
                    alternative = 1;
                }
                let (head, body) = body_text
                    .split_once("->")
                    .ok_or_else(|| syntax(line_no, "missing `->`"))?;
                let head = head.trim();
                if head.is_empty() {
                    return Err(syntax(line_no, "empty rule head"));
                }
                check_balanced(head, line_no)?;
                check_balanced(body, line_no)?;
                let id = if alternative == 1 {
                    format!("R{group}")
                } else {
                    format!("R{group}.{alternative}")
                };
                pending.push(PendingRule {
                    id,
                    head: collapse_whitespace(head),
                    body: collapse_whitespace(body),
                    comment: collapse_whitespace(comment),
                    line: line_no,
                });
            }
            Section::Divisible | Section::Leaf => {
                check_balanced(code, line_no)?;
                let items: Vec<&str> = code.split(';').map(str::trim).filter(|s| !s.is_empty()).collect();
                for item in items {
                    let p = if let Some(name) = bare_placeholder(item) {
                        let example = example_atom(comment).ok_or_else(|| {
                            syntax(
                                line_no,
                                format!("placeholder `{item}` needs an example (`such as [...]`)"),
                            )
                        })?;
                        let p =
                            NodePattern::with_matching_form(item, example).map_err(|e| pattern_error(e, line_no))?;
                        aliases.insert(alias_key(name), p.clone());
                        p
                    } else {
                        let atoms = bracket_atoms(item, line_no)?;
                        if atoms.len() != 1 {
                            return Err(syntax(line_no, format!("expected one node per item, got `{item}`")));
                        }
                        pattern(&atoms[0], line_no)?
                    };
                    if section == Section::Divisible {
                        divisible.push(p);
                    } else {
                        leaf.push(p);
                    }
                }
            }
        }
    }

    if !saw_rules {
        return Err(LibraryError::MissingSection("Rules:"));
    }

    let mut rules = Vec::with_capacity(pending.len());
    for pr in pending {
        let head_atoms = bracket_atoms(&pr.head, pr.line)?;
        if head_atoms.len() != 1 {
            return Err(syntax(pr.line, "rule head must be a single bracket atom"));
        }
        let head = pattern(&head_atoms[0], pr.line)?;
        let marked_indefinite = pr.comment.to_lowercase().contains("indefinite");
        let (body, indefinite) = if pr.body.is_empty() {
            if !marked_indefinite {
                return Err(syntax(pr.line, "empty rule body"));
            }
            (Vec::new(), true)
        } else if let Some(name) = bare_placeholder(&pr.body) {
            let p = aliases.get(&alias_key(name)).ok_or_else(|| {
                syntax(
                    pr.line,
                    format!("body placeholder `{name}` is not declared in a node section"),
                )
            })?;
            (vec![p.clone()], true)
        } else if let Some(inner) = pr
            .body
            .strip_prefix("{{")
            .and_then(|b| b.strip_suffix("}}"))
            .filter(|b| b.trim_start().starts_with('['))
        {
            let atoms = bracket_atoms(inner, pr.line)?;
            (
                atoms.iter().map(|a| pattern(a, pr.line)).collect::<Result<_, _>>()?,
                true,
            )
        } else {
            let atoms = bracket_atoms(&pr.body, pr.line)?;
            if atoms.is_empty() {
                return Err(syntax(pr.line, "empty rule body"));
            }
            (
                atoms.iter().map(|a| pattern(a, pr.line)).collect::<Result<_, _>>()?,
                marked_indefinite,
            )
        };
        rules.push(Rule {
            id: pr.id,
            head,
            body,
            indefinite,
            comment: pr.comment,
            body_source: pr.body,
        });
        let rule = rules.last().expect("just pushed");
        if !divisible
            .iter()
            .any(|d: &NodePattern| d.matches(&rule.head.instantiate_with_names()).is_some())
        {
            return Err(syntax(
                pr.line,
                format!("rule head `{}` matches no divisible node pattern", rule.head.raw),
            ));
        }
    }

    for d in &divisible {
        if leaf
            .iter()
            .any(|l| crate::text::fold(&l.raw) == crate::text::fold(&d.raw))
        {
            return Err(LibraryError::Syntax {
                line: 0,
                reason: format!("`{}` is declared both divisible and leaf", d.raw),
            });
        }
    }

    Ok(RuleLibrary {
        rules,
        divisible_patterns: divisible,
        leaf_patterns: leaf,
    })
}
