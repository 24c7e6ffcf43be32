use std::collections::{BTreeMap, HashMap};

use crate::corpus::records::SegmentRecord;

/// Undirected overlap graph over segments of the same video.
///
/// Each unordered pair with positive IoU is stored once in `edges` as
/// `(lower node index, higher node index, iou)`; `neighbors` exposes both
/// directions.
#[derive(Debug, Clone, Default)]
pub struct OverlapGraph {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    edges: Vec<(usize, usize, f64)>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl OverlapGraph {
    pub fn build(segments: &[SegmentRecord]) -> Self {
        let ids: Vec<String> = segments.iter().map(|s| s.segment_id.clone()).collect();
        let index = ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();

        let mut by_video: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, s) in segments.iter().enumerate() {
            by_video.entry(s.video_id.as_str()).or_default().push(i);
        }
        let mut edges = Vec::new();
        for members in by_video.values_mut() {
            members.sort_by_key(|&i| (segments[i].span.start_ms, segments[i].span.end_ms, i));
            for (pos, &i) in members.iter().enumerate() {
                let si = segments[i].span;
                for &j in &members[pos + 1..] {
                    let sj = segments[j].span;
                    if sj.start_ms >= si.end_ms {
                        break;
                    }
                    let iou = si.iou(&sj);
                    if iou > 0.0 {
                        edges.push((i.min(j), i.max(j), iou));
                    }
                }
            }
        }
        edges.sort_by_key(|a| (a.0, a.1));
        Self::from_parts(ids, index, edges)
    }

    fn from_parts(ids: Vec<String>, index: HashMap<String, usize>, edges: Vec<(usize, usize, f64)>) -> Self {
        let mut adjacency = vec![Vec::new(); ids.len()];
        for &(a, b, w) in &edges {
            adjacency[a].push((b, w));
            adjacency[b].push((a, w));
        }
        for adj in &mut adjacency {
            adj.sort_by_key(|&(j, _)| j);
        }
        OverlapGraph { ids, index, edges, adjacency }
    }

    /// Graph from explicit edges, for callers that already know the overlaps.
    pub fn from_edges(ids: Vec<String>, edges: &[(String, String, f64)]) -> crate::Result<Self> {
        let index: HashMap<String, usize> = ids.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
        let mut out = Vec::with_capacity(edges.len());
        let mut missing = Vec::new();
        for (a, b, w) in edges {
            match (index.get(a), index.get(b)) {
                (Some(&i), Some(&j)) if i != j => out.push((i.min(j), i.max(j), *w)),
                (Some(_), Some(_)) => {
                    return Err(crate::Error::InvalidInput(format!("self-edge on `{a}`")))
                }
                _ => missing.extend([a, b].into_iter().filter(|x| !index.contains_key(*x)).cloned()),
            }
        }
        if !missing.is_empty() {
            return Err(crate::Error::Integrity { kind: "graph node", ids: missing });
        }
        out.sort_by_key(|a| (a.0, a.1));
        Ok(Self::from_parts(ids, index, out))
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn node(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Index-level edges `(i, j, iou)` with `i < j`.
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn neighbors(&self, node: usize) -> &[(usize, f64)] {
        &self.adjacency[node]
    }

    /// Edges as `(segment_id, segment_id, iou)` triples.
    pub fn edge_list(&self) -> Vec<(String, String, f64)> {
        self.edges
            .iter()
            .map(|&(a, b, w)| (self.ids[a].clone(), self.ids[b].clone(), w))
            .collect()
    }
}
