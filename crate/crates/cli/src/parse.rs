//! The structure and instance file formats.
//!
//! Both are line oriented; `#` starts a comment and blank lines are ignored.

use std::fmt;
use std::str::FromStr;

use ccsp_core::frames::{Constraint, Instance};
use ccsp_core::relations::{ElementMap, Relation, RelationalStructure, StructureError, Tuple};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

fn err<T>(line: usize, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        line,
        message: message.into(),
    })
}

/// Non-empty lines as `(line number, tokens)`.
fn token_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(k, raw)| {
        let content = raw.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = content.split_whitespace().collect();
        (!tokens.is_empty()).then_some((k + 1, tokens))
    })
}

fn number<T: FromStr>(line: usize, token: &str, what: &str) -> Result<T, ParseError> {
    token
        .parse()
        .or_else(|_| err(line, format!("expected {what}, found `{token}`")))
}

fn expect_len(line: usize, tokens: &[&str], len: usize, usage: &str) -> Result<(), ParseError> {
    if tokens.len() == len {
        Ok(())
    } else {
        err(line, format!("expected `{usage}`"))
    }
}

/// A parsed structure file.
///
/// `full` keeps the declared domain and is what instances are counted
/// over. `normalized` has unused domain elements removed; its element map
/// records the original labels.
#[derive(Debug, Clone)]
pub struct StructureFile {
    pub full: RelationalStructure,
    pub normalized: RelationalStructure,
}

impl StructureFile {
    pub fn element_map(&self) -> &ElementMap {
        self.normalized.element_map()
    }
}

pub fn parse_structure(text: &str) -> Result<StructureFile, ParseError> {
    let mut lines = token_lines(text);
    let Some((line, head)) = lines.next() else {
        return err(1, "missing `domain <q>` line");
    };
    if head[0] != "domain" {
        return err(line, format!("expected `domain <q>`, found `{}`", head[0]));
    }
    expect_len(line, &head, 2, "domain <q>")?;
    let q: u32 = number(line, head[1], "a domain size")?;
    let mut s = RelationalStructure::new(q).or_else(|e| err(line, e.to_string()))?;

    while let Some((line, header)) = lines.next() {
        if header[0] != "relation" {
            return err(
                line,
                format!(
                    "expected `relation <NAME> <arity> <count>`, found `{}`",
                    header[0]
                ),
            );
        }
        expect_len(line, &header, 4, "relation <NAME> <arity> <count>")?;
        let name = header[1];
        let arity: usize = number(line, header[2], "an arity")?;
        let count: usize = number(line, header[3], "a tuple count")?;
        if arity == 0 {
            return err(line, format!("relation {name} must have positive arity"));
        }
        let mut tuples: Vec<Tuple> = Vec::with_capacity(count);
        for k in 0..count {
            let Some((tline, tokens)) = lines.next() else {
                return err(
                    line,
                    format!("relation {name} declares {count} tuples but the file ends after {k}"),
                );
            };
            if tokens.len() != arity {
                return err(
                    tline,
                    format!(
                        "relation {name} has arity {arity}, but this tuple has {} values",
                        tokens.len()
                    ),
                );
            }
            let mut t = Vec::with_capacity(arity);
            for tok in tokens {
                let v: u32 = number(tline, tok, "a domain element")?;
                if v >= q {
                    return err(
                        tline,
                        format!("element {v} is outside the domain 0..{}", q - 1),
                    );
                }
                t.push(v);
            }
            tuples.push(t);
        }
        let rel = Relation::new(arity, tuples).or_else(|e| err(line, e.to_string()))?;
        s.add_relation(name, rel)
            .or_else(|e| err(line, e.to_string()))?;
    }

    // A language using a single element is left as declared.
    let normalized = match s.clone().normalized() {
        Ok(n) => n,
        Err(StructureError::DegenerateAfterNormalization(_)) => s.clone(),
        Err(e) => return err(1, e.to_string()),
    };
    Ok(StructureFile {
        full: s,
        normalized,
    })
}

/// Parses an instance and checks it against `s`.
pub fn parse_instance(text: &str, s: &RelationalStructure) -> Result<Instance, ParseError> {
    let mut lines = token_lines(text);
    let Some((line, head)) = lines.next() else {
        return err(1, "missing `vars <n>` line");
    };
    if head[0] != "vars" {
        return err(line, format!("expected `vars <n>`, found `{}`", head[0]));
    }
    expect_len(line, &head, 2, "vars <n>")?;
    let n: usize = number(line, head[1], "a variable count")?;
    if n == 0 {
        return err(line, "an instance needs at least one variable");
    }
    let mut instance = Instance::new(n);
    for (line, tokens) in lines {
        if tokens[0] != "constraint" {
            return err(
                line,
                format!(
                    "expected `constraint <NAME> <v1> ... <vr>`, found `{}`",
                    tokens[0]
                ),
            );
        }
        if tokens.len() < 3 {
            return err(line, "expected `constraint <NAME> <v1> ... <vr>`");
        }
        let name = tokens[1];
        let Some(rel) = s.relation(name) else {
            return err(line, format!("unknown relation {name}"));
        };
        let vars = &tokens[2..];
        if vars.len() != rel.arity() {
            return err(
                line,
                format!(
                    "relation {name} has arity {}, but {} variables are given",
                    rel.arity(),
                    vars.len()
                ),
            );
        }
        let mut scope = Vec::with_capacity(vars.len());
        for tok in vars {
            let v: usize = number(line, tok, "a variable")?;
            if v == 0 || v > n {
                return err(line, format!("variable {v} is outside 1..{n}"));
            }
            scope.push(v - 1);
        }
        instance.constraints.push(Constraint::new(name, scope));
    }
    Ok(instance)
}

/// Writes `s` in the structure file format.
pub struct StructureText<'a>(pub &'a RelationalStructure);

impl fmt::Display for StructureText<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "domain {}", self.0.q())?;
        for (name, rel) in self.0.declared() {
            writeln!(f, "relation {name} {} {}", rel.arity(), rel.len())?;
            for t in rel.iter() {
                let vals: Vec<String> = t.iter().map(ToString::to_string).collect();
                writeln!(f, "{}", vals.join(" "))?;
            }
        }
        Ok(())
    }
}

/// Writes an instance in the instance file format.
pub struct InstanceText<'a>(pub &'a Instance);

impl fmt::Display for InstanceText<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "vars {}", self.0.n)?;
        for c in &self.0.constraints {
            let vars: Vec<String> = c.scope.iter().map(|v| (v + 1).to_string()).collect();
            writeln!(f, "constraint {} {}", c.relation, vars.join(" "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const XOR3: &str = "# parity\ndomain 2\nrelation XOR3 3 4\n0 0 0\n0 1 1\n1 0 1\n1 1 0\n";

    #[test]
    fn structure_round_trip() {
        let f = parse_structure(XOR3).unwrap();
        assert_eq!(f.full.q(), 2);
        assert!(f.element_map().is_identity());
        let again = parse_structure(&StructureText(&f.full).to_string()).unwrap();
        assert_eq!(again.full, f.full);
    }

    #[test]
    fn unused_elements_are_removed() {
        let f = parse_structure("domain 4\nrelation R 2 2\n1 3\n3 1\n").unwrap();
        assert_eq!(f.full.q(), 4);
        assert_eq!(f.normalized.q(), 2);
        assert_eq!(f.element_map().removed(), vec![0, 2]);
        assert_eq!(f.element_map().original(1), 3);
    }

    #[test]
    fn single_used_element_keeps_the_domain() {
        let f = parse_structure("domain 3\nrelation R 1 1\n2\n").unwrap();
        assert_eq!(f.normalized.q(), 3);
    }

    #[test]
    fn structure_errors_carry_lines() {
        let cases = [
            ("", 1, "missing"),
            ("domain 1\n", 1, "at least 2"),
            ("domain x\n", 1, "domain size"),
            ("domain 2\nrelation R 2 1\n0 2\n", 3, "outside the domain"),
            ("domain 2\nrelation R 2 1\n0\n", 3, "arity 2"),
            ("domain 2\nrelation R 2 2\n0 1\n", 2, "ends after 1"),
            ("domain 2\nrelation EQ 2 1\n0 0\n", 2, "reserved"),
            ("domain 2\nrelation CONST_0 1 1\n0\n", 2, "reserved"),
            (
                "domain 2\nrelation R 1 1\n0\nrelation R 1 1\n1\n",
                4,
                "twice",
            ),
            ("domain 2\nrelation R 1 0\n", 2, "empty"),
            ("domain 2\nrelation R 0 1\n\n", 2, "positive arity"),
            ("domain 2\ntuple 0 1\n", 2, "expected `relation"),
        ];
        for (text, line, needle) in cases {
            let e = parse_structure(text).unwrap_err();
            assert_eq!(e.line, line, "{text:?}: {e}");
            assert!(e.message.contains(needle), "{text:?}: {e}");
        }
    }

    #[test]
    fn instances() {
        let f = parse_structure(XOR3).unwrap();
        let i = parse_instance(
            "vars 3 # three\nconstraint XOR3 1 2 3\nconstraint CONST_1 3\n",
            &f.full,
        )
        .unwrap();
        assert_eq!(
            i,
            Instance::new(3)
                .with("XOR3", &[0, 1, 2])
                .with("CONST_1", &[2])
        );
        assert_eq!(
            parse_instance(&InstanceText(&i).to_string(), &f.full).unwrap(),
            i
        );
    }

    #[test]
    fn instance_errors_carry_lines() {
        let f = parse_structure(XOR3).unwrap();
        let cases = [
            ("constraint XOR3 1 2 3\n", 1, "vars"),
            ("vars 0\n", 1, "at least one"),
            ("vars 2\nconstraint XOR3 1 2 3\n", 2, "outside 1..2"),
            ("vars 3\n\nconstraint XOR3 1 2\n", 3, "arity 3"),
            ("vars 3\nconstraint OR 1 2\n", 2, "unknown relation"),
            ("vars 3\nconstraint CONST_2 1\n", 2, "unknown relation"),
            ("vars 3\nconstraint EQ 0 1\n", 2, "outside"),
        ];
        for (text, line, needle) in cases {
            let e = parse_instance(text, &f.full).unwrap_err();
            assert_eq!(e.line, line, "{text:?}: {e}");
            assert!(e.message.contains(needle), "{text:?}: {e}");
        }
    }
}
