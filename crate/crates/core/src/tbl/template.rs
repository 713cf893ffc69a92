use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const MAX_OFFSET: i8 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Field {
    Word,
    Tag,
}

/// One context position a template looks at, relative to the focus token.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Slot {
    pub field: Field,
    pub offset: i8,
}

impl Slot {
    pub fn word(offset: i8) -> Slot {
        Slot { field: Field::Word, offset }
    }

    pub fn tag(offset: i8) -> Slot {
        Slot { field: Field::Tag, offset }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.field {
            Field::Word => "word",
            Field::Tag => "tag",
        };
        if self.offset > 0 {
            write!(f, "{name}[+{}]", self.offset)
        } else {
            write!(f, "{name}[{}]", self.offset)
        }
    }
}

impl FromStr for Slot {
    type Err = Error;

    fn from_str(s: &str) -> Result<Slot> {
        let bad = || Error::format(0, format!("invalid slot {s:?} (expected e.g. tag[-1] or word[0])"));
        let (name, rest) = s.split_once('[').ok_or_else(bad)?;
        let inner = rest.strip_suffix(']').ok_or_else(bad)?;
        let field = match name {
            "word" => Field::Word,
            "tag" => Field::Tag,
            _ => return Err(bad()),
        };
        let offset: i8 = inner.strip_prefix('+').unwrap_or(inner).parse().map_err(|_| bad())?;
        if !(-MAX_OFFSET..=MAX_OFFSET).contains(&offset) {
            return Err(Error::format(0, format!("slot {s:?}: offset outside -3..+3")));
        }
        Ok(Slot { field, offset })
    }
}

/// A named conjunction of context slots.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Template {
    pub id: String,
    pub slots: Vec<Slot>,
}

impl Template {
    pub fn new(id: impl Into<String>, slots: Vec<Slot>) -> Result<Template> {
        let id = id.into();
        if id.is_empty() || id.chars().any(char::is_whitespace) {
            return Err(Error::Parameter(format!("invalid template id {id:?}")));
        }
        if slots.is_empty() {
            return Err(Error::Parameter(format!("template {id} has no slots")));
        }
        if let Some(s) = slots.iter().find(|s| s.offset.abs() > MAX_OFFSET) {
            return Err(Error::Parameter(format!("template {id}: slot {s} outside window")));
        }
        Ok(Template { id, slots })
    }

    fn parse_spec(id: &str, spec: &str) -> Result<Template> {
        let slots = spec
            .split(',')
            .map(|s| s.trim().parse())
            .collect::<Result<Vec<Slot>>>()?;
        Template::new(id, slots)
    }

    pub fn spec(&self) -> String {
        self.slots.iter().map(Slot::to_string).collect::<Vec<_>>().join(",")
    }
}

/// Parses a template file: `id<TAB>slot,slot,...` per line.
pub fn parse_templates(content: &str) -> Result<Vec<Template>> {
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    for (idx, line) in content.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (id, spec) = line
            .split_once('\t')
            .ok_or_else(|| Error::format(line_no, "expected id<TAB>slots"))?;
        let tpl = Template::parse_spec(id, spec).map_err(|e| Error::format(line_no, e.to_string()))?;
        if !ids.insert(tpl.id.clone()) {
            return Err(Error::format(line_no, format!("duplicate template id {id:?}")));
        }
        out.push(tpl);
    }
    if out.is_empty() {
        return Err(Error::format(0, "template file defines no templates"));
    }
    Ok(out)
}

pub fn templates_to_text(templates: &[Template]) -> String {
    templates.iter().map(|t| format!("{}\t{}\n", t.id, t.spec())).collect()
}

/// The classic contextual template set.
pub fn default_templates() -> Vec<Template> {
    const DEFAULTS: &[(&str, &str)] = &[
        ("tag-1", "tag[-1]"),
        ("tag+1", "tag[+1]"),
        ("tag-2", "tag[-2]"),
        ("tag+2", "tag[+2]"),
        ("tag-1_tag-2", "tag[-1],tag[-2]"),
        ("tag+1_tag+2", "tag[+1],tag[+2]"),
        ("tag-1_tag+1", "tag[-1],tag[+1]"),
        ("word0", "word[0]"),
        ("word-1", "word[-1]"),
        ("word+1", "word[+1]"),
        ("word0_tag-1", "word[0],tag[-1]"),
        ("word0_tag+1", "word[0],tag[+1]"),
    ];
    DEFAULTS
        .iter()
        .map(|(id, spec)| Template::parse_spec(id, spec).expect("default template is valid"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slot_syntax() {
        assert_eq!("tag[-1]".parse::<Slot>().unwrap(), Slot::tag(-1));
        assert_eq!("word[+2]".parse::<Slot>().unwrap(), Slot::word(2));
        assert_eq!("word[2]".parse::<Slot>().unwrap(), Slot::word(2));
        assert_eq!(Slot::word(1).to_string(), "word[+1]");
        assert_eq!(Slot::tag(0).to_string(), "tag[0]");
        for bad in ["tag[-4]", "lemma[0]", "tag-1", "tag[x]"] {
            assert!(bad.parse::<Slot>().is_err(), "{bad}");
        }
    }

    #[test]
    fn template_file_round_trip() {
        let text = templates_to_text(&default_templates());
        let parsed = parse_templates(&text).unwrap();
        assert_eq!(parsed, default_templates());
        assert_eq!(parsed.len(), 12);
    }

    #[test]
    fn template_file_errors() {
        assert!(parse_templates("a\ttag[-1]\na\tword[0]\n").is_err());
        assert!(parse_templates("a tag[-1]\n").is_err());
        assert!(parse_templates("a\t\n").is_err());
        assert!(parse_templates("# only comments\n").is_err());
    }
}
