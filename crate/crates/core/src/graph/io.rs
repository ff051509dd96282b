//! Edge-list ingestion.
//!
//! One edge per line, two labels separated by whitespace or a comma. Lines
//! starting with `#` or `%` are comments. Extra columns (weights, timestamps)
//! are ignored. Labels are mapped to ids in first-appearance order.

use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;

use super::{Dropped, Graph};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct EdgeListImport {
    pub graph: Graph,
    /// `labels[id]` is the original label of node `id`.
    pub labels: Vec<String>,
    pub dropped: Dropped,
}

impl EdgeListImport {
    pub fn id_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

pub fn load_edge_list<R: BufRead>(reader: R) -> Result<EdgeListImport> {
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut labels = Vec::new();
    let mut pairs = Vec::new();

    let mut intern = |label: &str, labels: &mut Vec<String>| -> usize {
        if let Some(&id) = ids.get(label) {
            return id;
        }
        let id = labels.len();
        ids.insert(label.to_owned(), id);
        labels.push(label.to_owned());
        id
    };

    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with('%') {
            continue;
        }
        let mut fields = trimmed
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty());
        let (a, b) = match (fields.next(), fields.next()) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("expected two node labels, found {trimmed:?}"),
                })
            }
        };
        let a = intern(a, &mut labels);
        let b = intern(b, &mut labels);
        pairs.push((a, b));
    }

    if pairs.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (graph, dropped) = Graph::from_edges_counted(labels.len(), pairs)?;
    Ok(EdgeListImport {
        graph,
        labels,
        dropped,
    })
}

pub fn load_edge_list_file(path: impl AsRef<Path>) -> Result<EdgeListImport> {
    let file = std::fs::File::open(path.as_ref())?;
    load_edge_list(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str) -> Result<EdgeListImport> {
        load_edge_list(text.as_bytes())
    }

    #[test]
    fn path_from_two_lines() {
        let imp = load("0 1\n1 2").unwrap();
        assert_eq!(imp.graph.node_count(), 3);
        assert_eq!(imp.graph.edge_count(), 2);
    }

    #[test]
    fn duplicate_reported() {
        let imp = load("0 1\n0 1\n").unwrap();
        assert_eq!(imp.graph.edge_count(), 1);
        assert_eq!(imp.dropped.duplicates, 1);
    }

    #[test]
    fn reversed_duplicate_and_self_loop() {
        let imp = load("a b\nb a\nc c\nb c\n").unwrap();
        assert_eq!(imp.graph.edge_count(), 2);
        assert_eq!(imp.dropped.duplicates, 1);
        assert_eq!(imp.dropped.self_loops, 1);
    }

    #[test]
    fn string_labels_first_appearance_order() {
        let imp = load("# comment\n% other\nzeta,alpha\nalpha  mid 0.5\n").unwrap();
        assert_eq!(imp.labels, vec!["zeta", "alpha", "mid"]);
        assert_eq!(imp.id_of("mid"), Some(2));
        assert!(imp.graph.has_edge(0, 1));
        assert!(imp.graph.has_edge(1, 2));
    }

    #[test]
    fn malformed_line_reports_number() {
        match load("0 1\n\n7\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_input_is_error() {
        assert!(matches!(load(""), Err(Error::EmptyInput)));
        assert!(matches!(load("# only a comment\n"), Err(Error::EmptyInput)));
    }
}
