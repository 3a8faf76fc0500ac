//! Lexical similarity over a WordNet-like concept graph: shortest-path
//! lengths, graph depth, and the path-similarity score
//! `sim = 2 * depth - len`.
//!
//! Terms are matched through a lexeme table (normalized surface → concept
//! senses). Multi-sense terms score with the minimum path length over all
//! sense pairs, i.e. the maximum similarity. Unreachable pairs score 0, the
//! minimum similarity, rather than being dropped, so sweep denominators stay
//! stable.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::text::normalize_term;

#[derive(Debug, thiserror::Error)]
pub enum LexError {
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
    #[error("lexical graph integrity violation: {message}")]
    Integrity { message: String },
    #[error("term {term:?} is not in the lexicon")]
    UnknownTerm { term: String },
    #[error("invalid depth: {message}")]
    InvalidDepth { message: String },
    #[error("depth {depth} is too small for a path of length {len} (2*depth must cover it)")]
    DepthTooSmall { len: u32, depth: u32 },
    #[error("no scorable pairs: every pair had a term outside the lexicon")]
    EmptySample,
}

/// How the depth constant of the similarity score is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DepthMode {
    /// Diameter of the largest connected component (all-pairs BFS).
    Exact,
    /// A configured constant, the operational default at WordNet scale.
    Configured(u32),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimilarityScore {
    pub value: u32,
    /// The normalized term pair that was scored.
    pub pair: (String, String),
}

/// Summary of scoring a batch of term pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSimilaritySummary {
    pub mean: f64,
    /// Population standard deviation over the scored pairs.
    pub std_dev: f64,
    pub scored: usize,
    /// Pairs skipped because at least one term is missing from the lexicon.
    pub skipped: usize,
}

/// Immutable lexical graph. Queries are read-only and safe to run
/// concurrently.
#[derive(Debug, Clone, PartialEq)]
pub struct LexGraph {
    concepts: Vec<String>,
    index: BTreeMap<String, usize>,
    adjacency: Vec<Vec<usize>>,
    lexemes: BTreeMap<String, BTreeSet<usize>>,
}

impl LexGraph {
    /// Builds a graph from parts, validating every invariant: no self-loops,
    /// edges and lexemes reference existing concepts, lexeme surfaces are
    /// normalized on entry.
    pub fn build<C, E, L>(concepts: C, edges: E, lexemes: L) -> Result<Self, LexError>
    where
        C: IntoIterator<Item = String>,
        E: IntoIterator<Item = (String, String)>,
        L: IntoIterator<Item = (String, String)>,
    {
        let concept_set: BTreeSet<String> = concepts.into_iter().collect();
        let concepts: Vec<String> = concept_set.into_iter().collect();
        let index: BTreeMap<String, usize> = concepts
            .iter()
            .enumerate()
            .map(|(i, c)| (c.clone(), i))
            .collect();
        let mut adjacency = vec![BTreeSet::new(); concepts.len()];
        for (a, b) in edges {
            let ia = *index.get(&a).ok_or_else(|| LexError::Integrity {
                message: format!("edge references unknown concept {a:?}"),
            })?;
            let ib = *index.get(&b).ok_or_else(|| LexError::Integrity {
                message: format!("edge references unknown concept {b:?}"),
            })?;
            if ia == ib {
                return Err(LexError::Integrity {
                    message: format!("self-loop on concept {a:?}"),
                });
            }
            adjacency[ia].insert(ib);
            adjacency[ib].insert(ia);
        }
        let mut lexeme_map: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
        for (surface, concept) in lexemes {
            let normalized = normalize_term(&surface);
            if normalized.is_empty() {
                return Err(LexError::Integrity {
                    message: format!("lexeme {surface:?} normalizes to the empty string"),
                });
            }
            let ic = *index.get(&concept).ok_or_else(|| LexError::Integrity {
                message: format!("lexeme {surface:?} references unknown concept {concept:?}"),
            })?;
            lexeme_map.entry(normalized).or_default().insert(ic);
        }
        Ok(LexGraph {
            concepts,
            index,
            adjacency: adjacency
                .into_iter()
                .map(|s| s.into_iter().collect())
                .collect(),
            lexemes: lexeme_map,
        })
    }

    pub fn concept_count(&self) -> usize {
        self.concepts.len()
    }

    pub fn lexeme_count(&self) -> usize {
        self.lexemes.len()
    }

    pub fn contains_term(&self, term: &str) -> bool {
        self.lexemes.contains_key(&normalize_term(term))
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.lexemes.keys().map(String::as_str)
    }

    fn senses(&self, term: &str) -> Result<(String, &BTreeSet<usize>), LexError> {
        let normalized = normalize_term(term);
        match self.lexemes.get(&normalized) {
            Some(set) => Ok((normalized, set)),
            None => Err(LexError::UnknownTerm {
                term: term.to_string(),
            }),
        }
    }

    /// Multi-source BFS: distance from the nearest of `sources` to every
    /// concept, `None` for unreachable.
    fn bfs(&self, sources: &BTreeSet<usize>) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.concepts.len()];
        let mut queue = VecDeque::new();
        for &s in sources {
            dist[s] = Some(0);
            queue.push_back(s);
        }
        while let Some(node) = queue.pop_front() {
            let d = dist[node].expect("queued nodes have distances");
            for &next in &self.adjacency[node] {
                if dist[next].is_none() {
                    dist[next] = Some(d + 1);
                    queue.push_back(next);
                }
            }
        }
        dist
    }

    /// Minimum unweighted shortest-path length over all sense pairs of the
    /// two terms; `None` when no sense pair is connected.
    pub fn shortest_len(&self, t1: &str, t2: &str) -> Result<Option<u32>, LexError> {
        let (_, s1) = self.senses(t1)?;
        let (_, s2) = self.senses(t2)?;
        if s1.intersection(s2).next().is_some() {
            return Ok(Some(0));
        }
        let dist = self.bfs(s1);
        Ok(s2.iter().filter_map(|&c| dist[c]).min())
    }

    /// Graph depth: in exact mode, the diameter of the largest connected
    /// component (ties broken toward the component with the smallest concept
    /// id); in configured mode, the given constant.
    pub fn graph_depth(&self, mode: DepthMode) -> Result<u32, LexError> {
        match mode {
            DepthMode::Configured(d) => {
                if d == 0 {
                    Err(LexError::InvalidDepth {
                        message: "configured depth must be positive".into(),
                    })
                } else {
                    Ok(d)
                }
            }
            DepthMode::Exact => {
                if self.concepts.is_empty() {
                    return Err(LexError::Integrity {
                        message: "depth of an empty graph is undefined".into(),
                    });
                }
                // Find the largest component, then its diameter by BFS from
                // each member.
                let mut component = vec![usize::MAX; self.concepts.len()];
                let mut members: Vec<Vec<usize>> = Vec::new();
                for start in 0..self.concepts.len() {
                    if component[start] != usize::MAX {
                        continue;
                    }
                    let id = members.len();
                    let mut queue = VecDeque::from([start]);
                    component[start] = id;
                    let mut found = vec![start];
                    while let Some(node) = queue.pop_front() {
                        for &next in &self.adjacency[node] {
                            if component[next] == usize::MAX {
                                component[next] = id;
                                found.push(next);
                                queue.push_back(next);
                            }
                        }
                    }
                    members.push(found);
                }
                let largest = members
                    .iter()
                    .enumerate()
                    .max_by(|(ia, a), (ib, b)| a.len().cmp(&b.len()).then(ib.cmp(ia)))
                    .map(|(_, m)| m)
                    .expect("non-empty graph has a component");
                let mut diameter = 0;
                for &node in largest {
                    let single: BTreeSet<usize> = [node].into();
                    for d in self.bfs(&single).into_iter().flatten() {
                        diameter = diameter.max(d);
                    }
                }
                Ok(diameter)
            }
        }
    }

    /// Path similarity `2 * depth - len`; unreachable pairs score 0.
    pub fn path_similarity(
        &self,
        t1: &str,
        t2: &str,
        depth: u32,
    ) -> Result<SimilarityScore, LexError> {
        let (n1, _) = self.senses(t1)?;
        let (n2, _) = self.senses(t2)?;
        let value = match self.shortest_len(t1, t2)? {
            None => 0,
            Some(len) => {
                if len > 2 * depth {
                    return Err(LexError::DepthTooSmall { len, depth });
                }
                2 * depth - len
            }
        };
        Ok(SimilarityScore {
            value,
            pair: (n1, n2),
        })
    }

    /// Mean and population standard deviation of the path similarity over a
    /// batch of term pairs. Pairs with a term missing from the lexicon are
    /// skipped and counted; an all-skipped batch is an error.
    pub fn avg_pair_similarity(
        &self,
        pairs: &[(String, String)],
        depth: u32,
    ) -> Result<PairSimilaritySummary, LexError> {
        let mut cache = DistanceCache::new(self);
        let mut scores = Vec::new();
        let mut skipped = 0usize;
        for (t1, t2) in pairs {
            if !self.contains_term(t1) || !self.contains_term(t2) {
                skipped += 1;
                continue;
            }
            match cache.shortest_len(t1, t2)? {
                None => scores.push(0.0),
                Some(len) => {
                    if len > 2 * depth {
                        return Err(LexError::DepthTooSmall { len, depth });
                    }
                    scores.push((2 * depth - len) as f64);
                }
            }
        }
        if scores.is_empty() {
            return Err(LexError::EmptySample);
        }
        let mean = scores.iter().sum::<f64>() / scores.len() as f64;
        let var = scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / scores.len() as f64;
        Ok(PairSimilaritySummary {
            mean,
            std_dev: var.sqrt(),
            scored: scores.len(),
            skipped,
        })
    }
}

/// Caches one multi-source BFS per distinct left-hand term, so scoring many
/// pairs that share a seed costs one traversal per seed.
pub(crate) struct DistanceCache<'g> {
    graph: &'g LexGraph,
    by_term: HashMap<String, Vec<Option<u32>>>,
}

impl<'g> DistanceCache<'g> {
    pub(crate) fn new(graph: &'g LexGraph) -> Self {
        DistanceCache {
            graph,
            by_term: HashMap::new(),
        }
    }

    pub(crate) fn shortest_len(&mut self, t1: &str, t2: &str) -> Result<Option<u32>, LexError> {
        let graph = self.graph;
        let (n1, s1) = graph.senses(t1)?;
        let (_, s2) = graph.senses(t2)?;
        let dist = self.by_term.entry(n1).or_insert_with(|| graph.bfs(s1));
        Ok(s2.iter().filter_map(|&c| dist[c]).min())
    }

    pub(crate) fn similarity(&mut self, t1: &str, t2: &str, depth: u32) -> Result<u32, LexError> {
        match self.shortest_len(t1, t2)? {
            None => Ok(0),
            Some(len) => {
                if len > 2 * depth {
                    Err(LexError::DepthTooSmall { len, depth })
                } else {
                    Ok(2 * depth - len)
                }
            }
        }
    }
}

/// Loads a lexical graph from a section-tagged TSV file:
/// `C <tab> concept_id`, `E <tab> id1 <tab> id2`, `L <tab> lexeme <tab>
/// concept_id`. Rows may appear in any order; `#` comments and blank lines
/// are ignored.
pub fn load_lexgraph(path: &Path) -> Result<LexGraph, LexError> {
    let content = fs::read_to_string(path).map_err(|source| LexError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut concepts = Vec::new();
    let mut edges = Vec::new();
    let mut lexemes = Vec::new();
    for (i, raw) in content.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = raw.split('\t').map(str::trim).collect();
        let parse_err = |message: String| LexError::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        match fields[0] {
            "C" => {
                if fields.len() != 2 || fields[1].is_empty() {
                    return Err(parse_err("C row needs exactly one concept id".into()));
                }
                concepts.push(fields[1].to_string());
            }
            "E" => {
                if fields.len() != 3 {
                    return Err(parse_err("E row needs exactly two concept ids".into()));
                }
                edges.push((fields[1].to_string(), fields[2].to_string()));
            }
            "L" => {
                if fields.len() != 3 {
                    return Err(parse_err("L row needs a lexeme and a concept id".into()));
                }
                lexemes.push((fields[1].to_string(), fields[2].to_string()));
            }
            tag => return Err(parse_err(format!("unknown row tag {tag:?}"))),
        }
    }
    LexGraph::build(concepts, edges, lexemes)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Chain a–b–c plus an isolated island node, each concept carrying a
    /// lexeme of the same name.
    fn chain_graph() -> LexGraph {
        let concepts = ["a", "b", "c", "island"].map(String::from);
        let edges = [("a", "b"), ("b", "c")].map(|(x, y)| (x.to_string(), y.to_string()));
        let lexemes = ["a", "b", "c", "island"].map(|t| (t.to_string(), t.to_string()));
        LexGraph::build(concepts, edges, lexemes).unwrap()
    }

    #[test]
    fn identical_terms_have_zero_length() {
        let g = chain_graph();
        assert_eq!(g.shortest_len("a", "a").unwrap(), Some(0));
    }

    #[test]
    fn chain_distance_is_two() {
        let g = chain_graph();
        assert_eq!(g.shortest_len("a", "c").unwrap(), Some(2));
        assert_eq!(g.shortest_len("c", "a").unwrap(), Some(2));
    }

    #[test]
    fn disconnected_terms_are_unreachable() {
        let g = chain_graph();
        assert_eq!(g.shortest_len("a", "island").unwrap(), None);
    }

    #[test]
    fn unknown_term_is_a_lookup_error() {
        let g = chain_graph();
        assert!(matches!(
            g.shortest_len("a", "nope"),
            Err(LexError::UnknownTerm { .. })
        ));
    }

    #[test]
    fn multi_sense_terms_take_the_minimum_length() {
        // "pop" maps to both ends of the chain; distance to "b" is 1.
        let concepts = ["a", "b", "c"].map(String::from);
        let edges = [("a", "b"), ("b", "c")].map(|(x, y)| (x.to_string(), y.to_string()));
        let lexemes = vec![
            ("pop".to_string(), "a".to_string()),
            ("pop".to_string(), "c".to_string()),
            ("b".to_string(), "b".to_string()),
        ];
        let g = LexGraph::build(concepts, edges, lexemes).unwrap();
        assert_eq!(g.shortest_len("pop", "b").unwrap(), Some(1));
    }

    #[test]
    fn exact_depth_of_single_edge_is_one() {
        let concepts = ["a", "b"].map(String::from);
        let edges = [("a".to_string(), "b".to_string())];
        let lexemes = ["a", "b"].map(|t| (t.to_string(), t.to_string()));
        let g = LexGraph::build(concepts, edges, lexemes).unwrap();
        assert_eq!(g.graph_depth(DepthMode::Exact).unwrap(), 1);
    }

    #[test]
    fn exact_depth_of_four_node_chain_is_three() {
        // Frozen from the all-pairs BFS oracle: a chain of 4 nodes has
        // diameter 3.
        let concepts = ["a", "b", "c", "d"].map(String::from);
        let edges =
            [("a", "b"), ("b", "c"), ("c", "d")].map(|(x, y)| (x.to_string(), y.to_string()));
        let lexemes = ["a", "b", "c", "d"].map(|t| (t.to_string(), t.to_string()));
        let g = LexGraph::build(concepts, edges, lexemes).unwrap();
        assert_eq!(g.graph_depth(DepthMode::Exact).unwrap(), 3);
    }

    #[test]
    fn configured_depth_passes_through() {
        let g = chain_graph();
        assert_eq!(g.graph_depth(DepthMode::Configured(20)).unwrap(), 20);
        assert!(matches!(
            g.graph_depth(DepthMode::Configured(0)),
            Err(LexError::InvalidDepth { .. })
        ));
    }

    #[test]
    fn self_similarity_is_twice_depth() {
        let g = chain_graph();
        let s = g.path_similarity("a", "a", 20).unwrap();
        assert_eq!(s.value, 40);
    }

    #[test]
    fn similarity_at_len_equal_twice_depth_is_zero() {
        // Chain a-b-c: len(a,c)=2, depth=1 puts the pair exactly at the
        // 2*depth boundary.
        let g = chain_graph();
        let s = g.path_similarity("a", "c", 1).unwrap();
        assert_eq!(s.value, 0);
    }

    #[test]
    fn chain_similarity_matches_bfs_oracle() {
        let g = chain_graph();
        let s = g.path_similarity("a", "c", 3).unwrap();
        assert_eq!(s.value, 4); // 2*3 - 2
    }

    #[test]
    fn unreachable_pair_scores_zero() {
        let g = chain_graph();
        let s = g.path_similarity("a", "island", 5).unwrap();
        assert_eq!(s.value, 0);
    }

    #[test]
    fn depth_smaller_than_half_len_is_an_error() {
        let concepts = ["a", "b", "c", "d", "e", "f"].map(String::from);
        let edges = [("a", "b"), ("b", "c"), ("c", "d"), ("d", "e"), ("e", "f")]
            .map(|(x, y)| (x.to_string(), y.to_string()));
        let lexemes = ["a", "f"].map(|t| (t.to_string(), t.to_string()));
        let g = LexGraph::build(concepts, edges, lexemes).unwrap();
        // len(a,f) = 5 > 2*2
        assert!(matches!(
            g.path_similarity("a", "f", 2),
            Err(LexError::DepthTooSmall { len: 5, depth: 2 })
        ));
    }

    #[test]
    fn avg_of_single_pair_has_zero_std() {
        let g = chain_graph();
        // (a,c) at depth 3 scores 4.
        let s = g
            .avg_pair_similarity(&[("a".into(), "c".into())], 3)
            .unwrap();
        assert_eq!(s.mean, 4.0);
        assert_eq!(s.std_dev, 0.0);
        assert_eq!(s.scored, 1);
        assert_eq!(s.skipped, 0);
    }

    #[test]
    fn avg_uses_population_std() {
        // Scores {2, 4}: (a,c) at depth 2 scores 2, (a,b) scores... 2*2-1=3.
        // Use depth 2: (a,c) -> 2; (a,a) -> 4. Mean 3, population std 1.
        let g = chain_graph();
        let s = g
            .avg_pair_similarity(&[("a".into(), "c".into()), ("a".into(), "a".into())], 2)
            .unwrap();
        assert_eq!(s.mean, 3.0);
        assert_eq!(s.std_dev, 1.0);
    }

    #[test]
    fn all_unknown_pairs_is_an_empty_sample_error() {
        let g = chain_graph();
        let res = g.avg_pair_similarity(&[("x".into(), "y".into())], 3);
        assert!(matches!(res, Err(LexError::EmptySample)));
    }

    #[test]
    fn skipped_pairs_are_counted() {
        let g = chain_graph();
        let s = g
            .avg_pair_similarity(&[("a".into(), "b".into()), ("a".into(), "nope".into())], 3)
            .unwrap();
        assert_eq!(s.scored, 1);
        assert_eq!(s.skipped, 1);
    }

    #[test]
    fn loader_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lex.tsv");
        std::fs::write(
            &path,
            "# lexical graph\nC\ta\nC\tb\nE\ta\tb\nL\tApple Pie\ta\nL\tbanana\tb\n",
        )
        .unwrap();
        let g = load_lexgraph(&path).unwrap();
        assert_eq!(g.concept_count(), 2);
        assert!(g.contains_term("applepie"));
        assert_eq!(g.shortest_len("Apple Pie", "banana").unwrap(), Some(1));
    }

    #[test]
    fn loader_rejects_unknown_tag_and_dangling_reference() {
        let dir = tempfile::tempdir().unwrap();
        let bad_tag = dir.path().join("bad_tag.tsv");
        std::fs::write(&bad_tag, "Z\tx\n").unwrap();
        assert!(matches!(
            load_lexgraph(&bad_tag),
            Err(LexError::Parse { line: 1, .. })
        ));

        let dangling = dir.path().join("dangling.tsv");
        std::fs::write(&dangling, "C\ta\nE\ta\tmissing\n").unwrap();
        assert!(matches!(
            load_lexgraph(&dangling),
            Err(LexError::Integrity { .. })
        ));
    }
}
