//! Native network format: a schema-versioned TOML document.
//!
//! ```toml
//! schema = 1
//! provenance = "textbook example"
//!
//! [[variable]]
//! name = "Rain"
//! states = ["no", "yes"]
//! cpt = [[0.8, 0.2]]
//!
//! [[variable]]
//! name = "WetGrass"
//! states = ["no", "yes"]
//! parents = ["Rain"]
//! cpt = [[0.9, 0.1], [0.2, 0.8]]
//! ```
//!
//! CPT rows follow lexicographic order of parent states, first parent most
//! significant. Parents may be declared before or after their children.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::Deserialize;
use toml::Spanned;

use super::toml_error;
use crate::error::{ParseError, Result};
use crate::network::{BeliefNetwork, Variable};

pub const NATIVE_SCHEMA: i64 = 1;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    schema: Spanned<i64>,
    #[serde(default)]
    provenance: Option<String>,
    #[serde(default, rename = "variable")]
    variables: Vec<VariableDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct VariableDoc {
    name: Spanned<String>,
    states: Spanned<Vec<String>>,
    #[serde(default)]
    parents: Vec<Spanned<String>>,
    cpt: Spanned<Vec<Vec<f64>>>,
}

/// Parses and validates a native-format network.
pub fn parse_network_text(text: &str) -> Result<BeliefNetwork<f64>> {
    parse_network_unchecked(text)?.into_checked()
}

/// Parses syntax and resolves names without checking probabilities or acyclicity.
pub fn parse_network_unchecked(text: &str) -> Result<BeliefNetwork<f64>> {
    let doc: Document = toml::from_str(text).map_err(|e| toml_error(text, e))?;
    let at = |span: std::ops::Range<usize>, msg: String| ParseError::at_offset(text, span.start, msg);
    if *doc.schema.get_ref() != NATIVE_SCHEMA {
        return Err(at(
            doc.schema.span(),
            format!("unsupported schema version {}, expected {NATIVE_SCHEMA}", doc.schema.get_ref()),
        )
        .into());
    }

    let mut index = HashMap::new();
    for (i, v) in doc.variables.iter().enumerate() {
        if index.insert(v.name.get_ref().as_str(), i).is_some() {
            return Err(at(v.name.span(), format!("duplicate variable {:?}", v.name.get_ref())).into());
        }
    }
    let cards: Vec<usize> = doc.variables.iter().map(|v| v.states.get_ref().len()).collect();

    let mut variables = Vec::with_capacity(doc.variables.len());
    for v in &doc.variables {
        let mut parents = Vec::with_capacity(v.parents.len());
        for p in &v.parents {
            let idx = *index.get(p.get_ref().as_str()).ok_or_else(|| {
                at(p.span(), format!("undeclared parent {:?}", p.get_ref()))
            })?;
            parents.push(idx);
        }
        let width = cards[index[v.name.get_ref().as_str()]];
        let rows: usize = parents.iter().map(|&p| cards[p]).product();
        let table = v.cpt.get_ref();
        if table.len() != rows {
            return Err(at(
                v.cpt.span(),
                format!("cpt of {:?} has {} rows, expected {rows}", v.name.get_ref(), table.len()),
            )
            .into());
        }
        if let Some((r, row)) = table.iter().enumerate().find(|(_, row)| row.len() != width) {
            return Err(at(
                v.cpt.span(),
                format!(
                    "cpt row {r} of {:?} has {} entries, expected {width}",
                    v.name.get_ref(),
                    row.len()
                ),
            )
            .into());
        }
        variables.push(Variable {
            name: v.name.get_ref().clone(),
            states: v.states.get_ref().clone(),
            parents,
            cpt: table.iter().flatten().copied().collect(),
        });
    }
    let mut net = BeliefNetwork::from_variables(variables);
    net.provenance = doc.provenance;
    Ok(net)
}

/// Writes a network in the native format.
///
/// Floats use the shortest representation that round-trips exactly, so
/// parsing the output reproduces the network bit for bit.
pub fn serialize_network(net: &BeliefNetwork<f64>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "schema = {NATIVE_SCHEMA}");
    if let Some(p) = &net.provenance {
        let _ = writeln!(out, "provenance = {}", quote(p));
    }
    for v in net.variables() {
        out.push_str("\n[[variable]]\n");
        let _ = writeln!(out, "name = {}", quote(&v.name));
        let _ = writeln!(out, "states = [{}]", join(v.states.iter().map(|s| quote(s))));
        if !v.parents.is_empty() {
            let names = v.parents.iter().map(|&p| quote(&net.variable(p).name));
            let _ = writeln!(out, "parents = [{}]", join(names));
        }
        out.push_str("cpt = [\n");
        for row in v.cpt.chunks(v.cardinality().max(1)) {
            let _ = writeln!(out, "  [{}],", join(row.iter().map(|x| format!("{x:?}"))));
        }
        out.push_str("]\n");
    }
    out
}

fn join(items: impl Iterator<Item = String>) -> String {
    items.collect::<Vec<_>>().join(", ")
}

fn quote(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::fixtures::diamond;

    const MINIMAL: &str = "schema = 1\n[[variable]]\nname = \"X\"\nstates = [\"a\", \"b\"]\ncpt = [[0.25, 0.75]]\n";

    #[test]
    fn minimal_document() {
        let net = parse_network_text(MINIMAL).unwrap();
        assert_eq!(net.len(), 1);
        assert_eq!(net.variable(0).cpt, vec![0.25, 0.75]);
    }

    #[test]
    fn integers_accepted_as_probabilities() {
        let text = MINIMAL.replace("[[0.25, 0.75]]", "[[0, 1]]");
        assert_eq!(parse_network_text(&text).unwrap().variable(0).cpt, vec![0.0, 1.0]);
    }

    #[test]
    fn round_trip_is_exact() {
        let mut net = diamond();
        net.provenance = Some("four \"nodes\"".into());
        let text = serialize_network(&net);
        let back = parse_network_text(&text).unwrap();
        assert_eq!(back, net);
        assert_eq!(serialize_network(&back), text);
    }

    #[test]
    fn forward_references_resolve() {
        let text = "schema = 1\n\
            [[variable]]\nname = \"B\"\nstates = [\"0\", \"1\"]\nparents = [\"A\"]\ncpt = [[1, 0], [0, 1]]\n\
            [[variable]]\nname = \"A\"\nstates = [\"0\", \"1\"]\ncpt = [[0.5, 0.5]]\n";
        let net = parse_network_text(text).unwrap();
        assert_eq!(net.variable(0).parents, vec![1]);
    }

    #[test]
    fn undeclared_parent_is_positioned() {
        let text = "schema = 1\n[[variable]]\nname = \"B\"\nstates = [\"0\", \"1\"]\nparents = [\"Ghost\"]\ncpt = [[1, 0], [0, 1]]\n";
        match parse_network_text(text) {
            Err(crate::Error::Parse(e)) => {
                assert_eq!((e.line, e.column), (5, 12));
                assert!(e.message.contains("Ghost"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_error_is_positioned() {
        let text = "schema = 1\n[[variable]]\nname = \"X\"\nstates = [\"a\", \"b\"\ncpt = [[1, 0]]\n";
        match parse_network_text(text) {
            Err(crate::Error::Parse(e)) => assert!(e.line >= 4, "{e}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn wrong_schema_and_shape() {
        assert!(parse_network_text(&MINIMAL.replace("schema = 1", "schema = 2")).is_err());
        assert!(parse_network_text(&MINIMAL.replace("[[0.25, 0.75]]", "[[0.25, 0.75, 0.0]]")).is_err());
        assert!(parse_network_text(&MINIMAL.replace("[[0.25, 0.75]]", "[[0.25, 0.5]]")).is_err());
    }

    #[test]
    fn cycle_is_rejected_but_parses_unchecked() {
        let text = "schema = 1\n\
            [[variable]]\nname = \"A\"\nstates = [\"0\", \"1\"]\nparents = [\"B\"]\ncpt = [[1, 0], [0, 1]]\n\
            [[variable]]\nname = \"B\"\nstates = [\"0\", \"1\"]\nparents = [\"A\"]\ncpt = [[1, 0], [0, 1]]\n";
        assert!(matches!(parse_network_text(text), Err(crate::Error::NotADag(_))));
        assert!(!parse_network_unchecked(text).unwrap().validate().ok);
    }
}
