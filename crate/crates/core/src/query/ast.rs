use std::fmt;

use serde::Serialize;

/// Largest allowed upper bound of a variable-length edge.
pub const MAX_HOPS: u8 = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Query {
    pub patterns: Vec<PathPattern>,
    pub filters: Vec<Filter>,
    pub returns: Vec<ReturnItem>,
}

/// `node (edge node)*`
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PathPattern {
    pub start: NodeTerm,
    pub steps: Vec<(EdgeTerm, NodeTerm)>,
}

impl PathPattern {
    pub fn nodes(&self) -> impl Iterator<Item = &NodeTerm> {
        std::iter::once(&self.start).chain(self.steps.iter().map(|(_, n)| n))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct NodeTerm {
    pub var: Option<String>,
    pub label: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeDirection {
    /// `-[..]->`
    Forward,
    /// `<-[..]-`
    Backward,
    /// `-[..]-`
    Undirected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HopRange {
    pub min: u8,
    pub max: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EdgeTerm {
    pub var: Option<String>,
    /// Alternatives; empty means any relation type.
    pub types: Vec<String>,
    pub direction: EdgeDirection,
    /// `None` is a single edge; `Some` matches a path and binds it.
    pub hops: Option<HopRange>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Lemma,
    EntityType,
    RelationType,
    Detail,
}

impl Field {
    pub fn name(self) -> &'static str {
        match self {
            Field::Lemma => "lemma",
            Field::EntityType => "entity_type",
            Field::RelationType => "relation_type",
            Field::Detail => "detail",
        }
    }

    pub fn parse(s: &str) -> Option<Field> {
        [Field::Lemma, Field::EntityType, Field::RelationType, Field::Detail]
            .into_iter()
            .find(|f| f.name() == s)
    }

    pub fn on_node(self) -> bool {
        matches!(self, Field::Lemma | Field::EntityType)
    }
}

/// `var.field = "value"`
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Filter {
    pub var: String,
    pub field: Field,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReturnItem {
    pub var: String,
    pub field: Option<Field>,
}

impl ReturnItem {
    pub fn column_name(&self) -> String {
        match self.field {
            Some(f) => format!("{}.{}", self.var, f.name()),
            None => self.var.clone(),
        }
    }
}

/// Quotes a string literal, escaping `"` and `\`.
pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if matches!(c, '"' | '\\') {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

impl fmt::Display for NodeTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        if let Some(v) = &self.var {
            f.write_str(v)?;
        }
        if let Some(l) = &self.label {
            write!(f, ":{l}")?;
        }
        f.write_str(")")
    }
}

impl fmt::Display for EdgeTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (open, close) = match self.direction {
            EdgeDirection::Forward => ("-[", "]->"),
            EdgeDirection::Backward => ("<-[", "]-"),
            EdgeDirection::Undirected => ("-[", "]-"),
        };
        f.write_str(open)?;
        if let Some(v) = &self.var {
            f.write_str(v)?;
        }
        if !self.types.is_empty() {
            write!(f, ":{}", self.types.join("|"))?;
        }
        if let Some(h) = self.hops {
            write!(f, "*{}..{}", h.min, h.max)?;
        }
        f.write_str(close)
    }
}

impl fmt::Display for PathPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.start)?;
        for (e, n) in &self.steps {
            write!(f, "{e}{n}")?;
        }
        Ok(())
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("MATCH ")?;
        for (i, p) in self.patterns.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{p}")?;
        }
        for (i, c) in self.filters.iter().enumerate() {
            f.write_str(if i == 0 { " WHERE " } else { " AND " })?;
            write!(f, "{}.{} = {}", c.var, c.field.name(), quote(&c.value))?;
        }
        f.write_str(" RETURN ")?;
        let items: Vec<String> = self.returns.iter().map(ReturnItem::column_name).collect();
        f.write_str(&items.join(", "))
    }
}
