//! Linked-concept graph (page/category links): loading, community-page
//! classification, and 1-hop expansion for taxonomy seeding.
//!
//! The graph is stored undirected. Link dumps are usually directed, but
//! expansion is defined as neighbor lookup over the edges as provided, which
//! keeps the loader agnostic to the dump format.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::text::slugify;

/// Namespace tokens that mark a page as a community page rather than an
/// article. Matching is singular/plural-insensitive so that e.g. a
/// "WikiProject …" title is caught by the "wikiprojects" entry.
const COMMUNITY_NAMESPACES: [&str; 10] = [
    "wikipedia",
    "wikiprojects",
    "lists",
    "mediawiki",
    "template",
    "user",
    "portal",
    "categories",
    "articles",
    "images",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Article,
    Community,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConceptNode {
    pub id: String,
    pub title: String,
    pub kind: NodeKind,
}

#[derive(Debug, thiserror::Error)]
pub enum ConceptGraphError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("graph integrity violation: {message}")]
    Integrity { message: String },
    #[error("unknown node id {id:?}")]
    UnknownNode { id: String },
}

/// An undirected, deduplicated concept graph. Immutable after construction;
/// all queries are read-only and safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct ConceptGraph {
    nodes: BTreeMap<String, ConceptNode>,
    adjacency: BTreeMap<String, BTreeSet<String>>,
    /// Exact title -> lowest node id carrying it.
    title_index: BTreeMap<String, String>,
    edge_count: usize,
}

/// Classifies a page title as article or community page.
///
/// A title is a community page when its namespace-ish leading token (the text
/// before the first colon, or the first word when there is no colon) matches
/// one of the excluded namespaces, or when the title is a "List of …" /
/// "Lists of …" page.
pub fn classify_community(title: &str) -> NodeKind {
    let trimmed = title.trim();
    if trimmed.starts_with("List of ") || trimmed.starts_with("Lists of ") {
        return NodeKind::Community;
    }
    let token = match trimmed.split_once(':') {
        Some((ns, _)) => ns.trim(),
        None => trimmed.split_whitespace().next().unwrap_or(""),
    };
    let token = token.to_lowercase();
    if token.is_empty() {
        return NodeKind::Article;
    }
    for ns in COMMUNITY_NAMESPACES {
        let singular_s = ns.strip_suffix('s');
        let singular_ies = ns.strip_suffix("ies");
        if token == ns
            || singular_s == Some(token.as_str())
            || singular_ies.is_some_and(|stem| token == format!("{stem}y"))
        {
            return NodeKind::Community;
        }
    }
    NodeKind::Article
}

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>, ConceptGraphError> {
    let content = fs::read_to_string(path).map_err(|source| ConceptGraphError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(content
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.to_string()))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .collect())
}

/// Loads a concept graph from a two-column TSV edge file and a slug→title
/// TSV file. `#` comment lines and blank lines are ignored in both.
pub fn load_concept_graph(
    edges_path: &Path,
    titles_path: &Path,
) -> Result<ConceptGraph, ConceptGraphError> {
    let mut nodes = BTreeMap::new();
    for (line, row) in read_lines(titles_path)? {
        let fields: Vec<&str> = row.split('\t').collect();
        if fields.len() != 2 {
            return Err(ConceptGraphError::Parse {
                path: titles_path.to_path_buf(),
                line,
                message: format!("expected 2 tab-separated fields, found {}", fields.len()),
            });
        }
        let (id, title) = (fields[0].trim(), fields[1].trim());
        if id.is_empty() {
            return Err(ConceptGraphError::Parse {
                path: titles_path.to_path_buf(),
                line,
                message: "empty node id".into(),
            });
        }
        let node = ConceptNode {
            id: id.to_string(),
            title: title.to_string(),
            kind: classify_community(title),
        };
        if nodes.insert(id.to_string(), node).is_some() {
            return Err(ConceptGraphError::Integrity {
                message: format!("duplicate node id {id:?} in titles file"),
            });
        }
    }

    let mut adjacency: BTreeMap<String, BTreeSet<String>> = nodes
        .keys()
        .map(|id| (id.clone(), BTreeSet::new()))
        .collect();
    let mut edges: BTreeSet<(String, String)> = BTreeSet::new();
    for (line, row) in read_lines(edges_path)? {
        let fields: Vec<&str> = row.split('\t').collect();
        if fields.len() != 2 {
            return Err(ConceptGraphError::Parse {
                path: edges_path.to_path_buf(),
                line,
                message: format!("expected 2 tab-separated fields, found {}", fields.len()),
            });
        }
        let (a, b) = (fields[0].trim(), fields[1].trim());
        for endpoint in [a, b] {
            if !nodes.contains_key(endpoint) {
                return Err(ConceptGraphError::Integrity {
                    message: format!(
                        "edge endpoint {endpoint:?} at {}:{line} is missing from the titles file",
                        edges_path.display()
                    ),
                });
            }
        }
        if a == b {
            return Err(ConceptGraphError::Integrity {
                message: format!("self-loop on {a:?} at {}:{line}", edges_path.display()),
            });
        }
        let key = if a < b {
            (a.to_string(), b.to_string())
        } else {
            (b.to_string(), a.to_string())
        };
        if edges.insert(key) {
            adjacency
                .get_mut(a)
                .expect("endpoint checked")
                .insert(b.to_string());
            adjacency
                .get_mut(b)
                .expect("endpoint checked")
                .insert(a.to_string());
        }
    }

    let mut title_index = BTreeMap::new();
    for node in nodes.values() {
        // BTreeMap iteration is id-sorted, so first insert wins = lowest id.
        title_index
            .entry(node.title.clone())
            .or_insert_with(|| node.id.clone());
    }

    Ok(ConceptGraph {
        edge_count: edges.len(),
        nodes,
        adjacency,
        title_index,
    })
}

impl ConceptGraph {
    pub fn node(&self, id: &str) -> Option<&ConceptNode> {
        self.nodes.get(id)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn nodes(&self) -> impl Iterator<Item = &ConceptNode> {
        self.nodes.values()
    }

    /// Resolves a human label to a node id: exact title match first (lowest
    /// id wins when titles repeat), then the slugified label as an id.
    pub fn resolve_label(&self, label: &str) -> Option<&str> {
        if let Some(id) = self.title_index.get(label) {
            return Some(id.as_str());
        }
        let slug = slugify(label);
        self.nodes.get(&slug).map(|n| n.id.as_str())
    }

    /// Union of the direct neighbors of `seeds`, minus the seeds themselves
    /// and minus community pages. Sorted by node id.
    pub fn neighbors_1hop(
        &self,
        seeds: &BTreeSet<String>,
    ) -> Result<BTreeSet<String>, ConceptGraphError> {
        for seed in seeds {
            if !self.nodes.contains_key(seed) {
                return Err(ConceptGraphError::UnknownNode { id: seed.clone() });
            }
        }
        let mut out = BTreeSet::new();
        for seed in seeds {
            for neighbor in &self.adjacency[seed] {
                if seeds.contains(neighbor) {
                    continue;
                }
                if self.nodes[neighbor].kind == NodeKind::Community {
                    continue;
                }
                out.insert(neighbor.clone());
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_file(dir: &Path, name: &str, content: &str) -> PathBuf {
        let path = dir.join(name);
        let mut f = fs::File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        path
    }

    fn load(titles: &str, edges: &str) -> Result<ConceptGraph, ConceptGraphError> {
        let dir = tempfile::tempdir().unwrap();
        let titles_path = write_file(dir.path(), "titles.tsv", titles);
        let edges_path = write_file(dir.path(), "edges.tsv", edges);
        load_concept_graph(&edges_path, &titles_path)
    }

    #[test]
    fn duplicate_edges_are_deduplicated() {
        let g = load("a\tA\nb\tB\nc\tC\n", "a\tb\nb\tc\na\tb\n").unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn one_column_edge_row_is_a_parse_error() {
        let err = load("a\tA\n", "a\n").unwrap_err();
        match err {
            ConceptGraphError::Parse { line, .. } => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn dangling_endpoint_is_an_integrity_error_naming_the_slug() {
        let err = load("a\tA\n", "a\tz\n").unwrap_err();
        match err {
            ConceptGraphError::Integrity { message } => assert!(message.contains("\"z\"")),
            other => panic!("expected integrity error, got {other:?}"),
        }
    }

    #[test]
    fn self_loop_is_rejected() {
        let err = load("a\tA\n", "a\ta\n").unwrap_err();
        assert!(matches!(err, ConceptGraphError::Integrity { .. }));
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let g = load("# titles\na\tA\n\nb\tB\n", "# edges\n\na\tb\n").unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn classify_namespace_prefixes() {
        assert_eq!(classify_community("Template:Infobox"), NodeKind::Community);
        assert_eq!(classify_community("Architecture"), NodeKind::Article);
        assert_eq!(classify_community("WikiProject Music"), NodeKind::Community);
        assert_eq!(classify_community("Category:Museums"), NodeKind::Community);
        assert_eq!(classify_community("User:Example"), NodeKind::Community);
        assert_eq!(classify_community("Portal:Arts"), NodeKind::Community);
        assert_eq!(classify_community("MediaWiki:Sidebar"), NodeKind::Community);
        assert_eq!(classify_community("Image:Foo.jpg"), NodeKind::Community);
        assert_eq!(classify_community("Wikipedia:About"), NodeKind::Community);
    }

    #[test]
    fn classify_list_titles() {
        assert_eq!(classify_community("List of museums"), NodeKind::Community);
        assert_eq!(
            classify_community("Lists of paintings"),
            NodeKind::Community
        );
        // "Listed building" is a normal article.
        assert_eq!(classify_community("Listed building"), NodeKind::Article);
    }

    #[test]
    fn neighbors_excludes_seeds_and_community_pages() {
        let g = load("s\tSeed\nx\tX\ny\tY\nc\tTemplate:C\n", "s\tx\ns\ty\ns\tc\n").unwrap();
        let seeds: BTreeSet<String> = [String::from("s")].into();
        let n = g.neighbors_1hop(&seeds).unwrap();
        assert_eq!(
            n.into_iter().collect::<Vec<_>>(),
            vec!["x".to_string(), "y".to_string()]
        );
    }

    #[test]
    fn shared_neighbor_appears_once() {
        let g = load("s\tS\nt\tT\nx\tX\n", "s\tx\nt\tx\n").unwrap();
        let seeds: BTreeSet<String> = [String::from("s"), String::from("t")].into();
        let n = g.neighbors_1hop(&seeds).unwrap();
        assert_eq!(n.len(), 1);
        assert!(n.contains("x"));
    }

    #[test]
    fn unknown_seed_is_a_lookup_error() {
        let g = load("a\tA\n", "").unwrap();
        let seeds: BTreeSet<String> = [String::from("nope")].into();
        assert!(matches!(
            g.neighbors_1hop(&seeds),
            Err(ConceptGraphError::UnknownNode { .. })
        ));
    }

    #[test]
    fn resolve_label_by_title_then_slug() {
        let g = load("performance_art\tPerformance art\nmusic\tMusic\n", "").unwrap();
        assert_eq!(g.resolve_label("Performance art"), Some("performance_art"));
        assert_eq!(g.resolve_label("Music"), Some("music"));
        // Falls back to the slugified label as an id.
        assert_eq!(g.resolve_label("performance art"), Some("performance_art"));
        assert_eq!(g.resolve_label("Nope"), None);
    }

    #[test]
    fn load_is_deterministic() {
        let titles = "a\tA\nb\tB\nc\tTemplate:C\nd\tD\n";
        let edges = "a\tb\nb\tc\nc\td\na\td\n";
        let g1 = load(titles, edges).unwrap();
        let g2 = load(titles, edges).unwrap();
        assert_eq!(g1, g2);
        let seeds: BTreeSet<String> = [String::from("a")].into();
        let n1 = serde_json::to_string(&g1.neighbors_1hop(&seeds).unwrap()).unwrap();
        let n2 = serde_json::to_string(&g2.neighbors_1hop(&seeds).unwrap()).unwrap();
        assert_eq!(n1, n2);
    }
}
