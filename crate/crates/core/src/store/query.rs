//! The textual query commands `keyWords[w1, ..., wn]` and
//! `relation[source, target, Kind]` with `*` for the open end.
//! Words may be double-quoted to include commas or brackets.

use std::collections::BTreeSet;

use thiserror::Error;

use super::{ObjectId, RelationKind, Store, StoreError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Query {
    Keywords(Vec<String>),
    Relation { source: Option<ObjectId>, target: Option<ObjectId>, kind: RelationKind },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("malformed query: {0}")]
    Syntax(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}

fn split_args(body: &str) -> Result<Vec<String>, QueryError> {
    let mut args = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut was_quoted = false;
    for c in body.chars() {
        match c {
            '"' => {
                if !quoted && cur.trim().is_empty() {
                    cur.clear();
                }
                quoted = !quoted;
                was_quoted = true;
            }
            ',' if !quoted => {
                args.push((std::mem::take(&mut cur), was_quoted));
                was_quoted = false;
            }
            c => cur.push(c),
        }
    }
    if quoted {
        return Err(QueryError::Syntax("unterminated quote".into()));
    }
    args.push((cur, was_quoted));
    let args: Vec<String> = args.into_iter().map(|(a, q)| if q { a } else { a.trim().to_string() }).collect();
    if args.len() == 1 && args[0].is_empty() {
        return Ok(vec![]);
    }
    if args.iter().any(|a| a.is_empty()) {
        return Err(QueryError::Syntax("empty argument".into()));
    }
    Ok(args)
}

pub fn parse_query(src: &str) -> Result<Query, QueryError> {
    let src = src.trim();
    let open = src.find('[').ok_or_else(|| QueryError::Syntax("expected `[`".into()))?;
    let body = src[open + 1..].strip_suffix(']').ok_or_else(|| QueryError::Syntax("expected `]` at the end".into()))?;
    let args = split_args(body)?;
    match src[..open].trim() {
        "keyWords" | "keywords" => {
            if args.is_empty() {
                return Err(StoreError::EmptyQuery.into());
            }
            Ok(Query::Keywords(args))
        }
        "relation" => {
            let [s, t, k] = args.as_slice() else {
                return Err(QueryError::Syntax(format!("relation takes 3 arguments, got {}", args.len())));
            };
            let end = |a: &str| if a == "*" { Ok(None) } else { ObjectId::new(a).map(Some) };
            let (source, target) = (end(s)?, end(t)?);
            match (&source, &target) {
                (None, None) => return Err(StoreError::BothWildcards.into()),
                (Some(_), Some(_)) => return Err(StoreError::NoWildcard.into()),
                _ => {}
            }
            Ok(Query::Relation { source, target, kind: k.parse()? })
        }
        other => Err(QueryError::Syntax(format!("unknown command `{other}`"))),
    }
}

impl Query {
    pub fn execute(&self, store: &Store) -> Result<BTreeSet<ObjectId>, StoreError> {
        match self {
            Query::Keywords(words) => store.query_keywords(words),
            Query::Relation { source, target, kind } => store.query_relation(source.as_ref(), target.as_ref(), *kind),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_both_forms() {
        assert_eq!(parse_query("keyWords[Simson, \"pedal line\"]").unwrap(), Query::Keywords(vec!["Simson".into(), "pedal line".into()]));
        assert_eq!(
            parse_query(" relation[*, simson, Context] ").unwrap(),
            Query::Relation { source: None, target: Some(ObjectId::new("simson").unwrap()), kind: RelationKind::Context }
        );
    }

    #[test]
    fn rejects_bad_queries() {
        assert_eq!(parse_query("keyWords[]"), Err(QueryError::Store(StoreError::EmptyQuery)));
        assert_eq!(parse_query("relation[*, *, Context]"), Err(QueryError::Store(StoreError::BothWildcards)));
        assert_eq!(parse_query("relation[a, b, Context]"), Err(QueryError::Store(StoreError::NoWildcard)));
        assert!(matches!(parse_query("relation[*, a, Friend]"), Err(QueryError::Store(StoreError::InvalidKind(_)))));
        assert!(matches!(parse_query("relation[*, a]"), Err(QueryError::Syntax(_))));
        assert!(matches!(parse_query("select[a]"), Err(QueryError::Syntax(_))));
        assert!(matches!(parse_query("keyWords[a"), Err(QueryError::Syntax(_))));
        assert!(matches!(parse_query("keyWords[\"a]"), Err(QueryError::Syntax(_))));
    }
}
