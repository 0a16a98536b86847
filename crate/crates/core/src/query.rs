//! Query data model and parser.
//!
//! A query file is line oriented:
//!
//! ```text
//! qv <id> <predicate>          # query node
//! qe <src> <dst> <u|d> <pred>  # query edge
//! or                           # starts the next disjunct
//! limit <k>                    # stop after k answers
//! ```
//!
//! Predicate tokens: a (possibly quoted) label for an exact match, `?` for a
//! wildcard, `<op>:<value>` with op in `< <= > >= != =` for a comparison, and
//! `anyof:a|b|c` for label membership. Within one pattern all constraints are
//! conjunctive; `or` unions the answer sets of whole patterns.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::graph::{self, Direction};

pub type QnodeId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Ne,
    Eq,
}

impl CmpOp {
    fn token(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Ne => "!=",
            CmpOp::Eq => "=",
        }
    }

    fn from_token(tok: &str) -> Option<CmpOp> {
        Some(match tok {
            "<" => CmpOp::Lt,
            "<=" => CmpOp::Le,
            ">" => CmpOp::Gt,
            ">=" => CmpOp::Ge,
            "!=" => CmpOp::Ne,
            "=" => CmpOp::Eq,
            _ => return None,
        })
    }

    fn holds(self, ord: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        matches!(
            (self, ord),
            (CmpOp::Lt, Less)
                | (CmpOp::Le, Less | Equal)
                | (CmpOp::Gt, Greater)
                | (CmpOp::Ge, Greater | Equal)
                | (CmpOp::Ne, Less | Greater)
                | (CmpOp::Eq, Equal)
        )
    }
}

/// Comparison constant: numeric when the token parses as a number, otherwise
/// a string compared lexicographically.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum Constant {
    Num(f64),
    Text(String),
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum Predicate {
    Exact(String),
    Compare(CmpOp, Constant),
    Wildcard,
    AnyOf(Vec<String>),
}

impl Predicate {
    /// Evaluates the predicate on a label. A numeric comparison on a label
    /// that does not parse as a number is false, except `!=` which is true.
    pub fn matches(&self, label: &str) -> bool {
        match self {
            Predicate::Exact(want) => label == want,
            Predicate::Wildcard => true,
            Predicate::AnyOf(labels) => labels.iter().any(|l| l == label),
            Predicate::Compare(op, Constant::Num(c)) => match label.trim().parse::<f64>() {
                Ok(v) => op.holds(v.partial_cmp(c).unwrap_or(std::cmp::Ordering::Less)),
                Err(_) => *op == CmpOp::Ne,
            },
            Predicate::Compare(op, Constant::Text(c)) => op.holds(label.cmp(c.as_str())),
        }
    }

    fn parse_token(tok: &str, was_quoted: bool, lineno: usize) -> Result<Predicate> {
        if was_quoted {
            return Ok(Predicate::Exact(tok.to_string()));
        }
        if tok == "?" {
            return Ok(Predicate::Wildcard);
        }
        if let Some(rest) = tok.strip_prefix("anyof:") {
            let labels: Vec<String> = rest.split('|').map(str::to_string).collect();
            if labels.iter().any(String::is_empty) {
                return Err(Error::parse(lineno, "empty label in anyof"));
            }
            return Ok(Predicate::AnyOf(labels));
        }
        if let Some(colon) = tok.find(':') {
            let (op_tok, value) = (&tok[..colon], &tok[colon + 1..]);
            if let Some(op) = CmpOp::from_token(op_tok) {
                if value.is_empty() {
                    return Err(Error::parse(lineno, "comparison needs a value"));
                }
                let constant = match value.parse::<f64>() {
                    Ok(n) => Constant::Num(n),
                    Err(_) => Constant::Text(value.to_string()),
                };
                return Ok(Predicate::Compare(op, constant));
            }
            if !op_tok.is_empty() && op_tok.chars().all(|c| "<>=!".contains(c)) {
                return Err(Error::parse(lineno, format!("unknown operator `{op_tok}`")));
            }
        }
        Ok(Predicate::Exact(tok.to_string()))
    }
}

impl fmt::Display for Predicate {
    /// Renders the predicate back in file-token syntax.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predicate::Exact(l) => write!(f, "{}", quote_predicate_label(l)),
            Predicate::Wildcard => write!(f, "?"),
            Predicate::AnyOf(ls) => write!(f, "anyof:{}", ls.join("|")),
            Predicate::Compare(op, Constant::Num(n)) => write!(f, "{}:{}", op.token(), n),
            Predicate::Compare(op, Constant::Text(t)) => write!(f, "{}:{}", op.token(), t),
        }
    }
}

/// Exact labels that could be mistaken for another predicate form are quoted.
fn quote_predicate_label(label: &str) -> String {
    let ambiguous = label == "?"
        || label.starts_with("anyof:")
        || label
            .find(':')
            .is_some_and(|i| CmpOp::from_token(&label[..i]).is_some());
    if ambiguous {
        format!("\"{}\"", label.replace('\\', "\\\\").replace('"', "\\\""))
    } else {
        graph::quote_label(label)
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QueryEdge {
    pub qsrc: QnodeId,
    pub qdst: QnodeId,
    pub dir: Direction,
    pub pred: Predicate,
}

/// One conjunctive pattern: a connected labeled graph over predicate nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryGraph {
    pub qnodes: BTreeMap<QnodeId, Predicate>,
    pub qedges: Vec<QueryEdge>,
}

impl QueryGraph {
    pub fn node(&self, id: QnodeId) -> &Predicate {
        &self.qnodes[&id]
    }

    fn validate(&self, lineno: usize) -> Result<()> {
        if self.qnodes.is_empty() {
            return Err(Error::parse(lineno, "pattern has no query nodes"));
        }
        for e in &self.qedges {
            for id in [e.qsrc, e.qdst] {
                if !self.qnodes.contains_key(&id) {
                    return Err(Error::parse(
                        lineno,
                        format!("query edge references unknown node {id}"),
                    ));
                }
            }
        }
        // Connectivity over the undirected view.
        let ids: Vec<QnodeId> = self.qnodes.keys().copied().collect();
        let index: BTreeMap<QnodeId, usize> =
            ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut uf = crate::components::UnionFind::new(ids.len());
        for e in &self.qedges {
            uf.union(index[&e.qsrc], index[&e.qdst]);
        }
        if uf.component_count() != 1 {
            return Err(Error::Invalid(
                "query pattern must be connected".to_string(),
            ));
        }
        Ok(())
    }
}

/// A full query: a union of conjunctive patterns with an optional answer
/// limit.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub disjuncts: Vec<QueryGraph>,
    pub limit: Option<usize>,
}

impl Query {
    pub fn parse(text: &str) -> Result<Query> {
        parse_query(text)
    }

    pub fn to_text(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        for (i, d) in self.disjuncts.iter().enumerate() {
            if i > 0 {
                let _ = writeln!(out, "or");
            }
            for (id, pred) in &d.qnodes {
                let _ = writeln!(out, "qv {id} {pred}");
            }
            for e in &d.qedges {
                let tag = match e.dir {
                    Direction::Undirected => "u",
                    Direction::Directed => "d",
                };
                let _ = writeln!(out, "qe {} {} {} {}", e.qsrc, e.qdst, tag, e.pred);
            }
        }
        if let Some(k) = self.limit {
            let _ = writeln!(out, "limit {k}");
        }
        out
    }
}

pub fn parse_query(text: &str) -> Result<Query> {
    let mut disjuncts = Vec::new();
    let mut current = QueryGraph {
        qnodes: BTreeMap::new(),
        qedges: Vec::new(),
    };
    let mut limit = None;
    let mut last_line = 0;

    // Raw token boundaries are needed to tell a quoted "?" (exact label) from
    // a bare wildcard, so re-tokenize while tracking quoting.
    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        last_line = lineno;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens = graph::tokenize(line, lineno)?;
        match tokens[0].as_str() {
            "qv" => {
                if tokens.len() != 3 {
                    return Err(Error::parse(lineno, "expected `qv <id> <predicate>`"));
                }
                let id: QnodeId = tokens[1]
                    .parse()
                    .map_err(|_| Error::parse(lineno, format!("invalid node id `{}`", tokens[1])))?;
                let quoted = predicate_was_quoted(line);
                let pred = Predicate::parse_token(&tokens[2], quoted, lineno)?;
                if current.qnodes.insert(id, pred).is_some() {
                    return Err(Error::parse(lineno, format!("duplicate query node {id}")));
                }
            }
            "qe" => {
                if tokens.len() != 5 {
                    return Err(Error::parse(
                        lineno,
                        "expected `qe <src> <dst> <u|d> <predicate>`",
                    ));
                }
                let qsrc: QnodeId = tokens[1]
                    .parse()
                    .map_err(|_| Error::parse(lineno, format!("invalid node id `{}`", tokens[1])))?;
                let qdst: QnodeId = tokens[2]
                    .parse()
                    .map_err(|_| Error::parse(lineno, format!("invalid node id `{}`", tokens[2])))?;
                let dir = match tokens[3].as_str() {
                    "u" => Direction::Undirected,
                    "d" => Direction::Directed,
                    other => {
                        return Err(Error::parse(lineno, format!("unknown direction `{other}`")))
                    }
                };
                let quoted = predicate_was_quoted(line);
                let pred = Predicate::parse_token(&tokens[4], quoted, lineno)?;
                current.qedges.push(QueryEdge {
                    qsrc,
                    qdst,
                    dir,
                    pred,
                });
            }
            "or" => {
                current.validate(lineno)?;
                disjuncts.push(std::mem::replace(
                    &mut current,
                    QueryGraph {
                        qnodes: BTreeMap::new(),
                        qedges: Vec::new(),
                    },
                ));
            }
            "limit" => {
                if tokens.len() != 2 {
                    return Err(Error::parse(lineno, "expected `limit <k>`"));
                }
                let k: usize = tokens[1]
                    .parse()
                    .map_err(|_| Error::parse(lineno, format!("invalid limit `{}`", tokens[1])))?;
                if k == 0 {
                    return Err(Error::parse(lineno, "limit must be positive"));
                }
                limit = Some(k);
            }
            other => return Err(Error::parse(lineno, format!("unknown record `{other}`"))),
        }
    }
    current.validate(last_line)?;
    disjuncts.push(current);
    Ok(Query { disjuncts, limit })
}

/// True when the last token on the line was written in quotes.
fn predicate_was_quoted(line: &str) -> bool {
    line.trim_end().ends_with('"') && line.matches('"').count() >= 2
}
