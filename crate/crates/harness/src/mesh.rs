//! Triangle meshes (ASCII OFF), geodesic distances along mesh edges and
//! vertex sampling.

use ghrelax::{FiniteMetricSpace, MetricError};
use petgraph::algo::dijkstra;
use petgraph::graph::{NodeIndex, UnGraph};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("OFF parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("face {face} references vertex {index}, but the mesh has {count} vertices")]
    BadIndex { face: usize, index: usize, count: usize },
    #[error("vertex {0} is out of range")]
    BadVertex(usize),
    #[error("edge ({0}, {1}) has zero length")]
    DegenerateEdge(usize, usize),
    #[error("vertices {0} and {1} are not connected by mesh edges")]
    DisconnectedMesh(usize, usize),
    #[error("cannot sample {requested} of {available} vertices")]
    TooMany { requested: usize, available: usize },
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleMode {
    Random,
    FarthestPoint,
}

/// Vertices, triangles and the edge graph weighted by Euclidean length.
#[derive(Debug, Clone)]
pub struct MeshGraph {
    vertices: Vec<[f64; 3]>,
    faces: Vec<[usize; 3]>,
    graph: UnGraph<(), f64>,
}

impl MeshGraph {
    pub fn new(vertices: Vec<[f64; 3]>, faces: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        let count = vertices.len();
        let mut graph = UnGraph::<(), f64>::with_capacity(count, 3 * faces.len());
        for _ in 0..count {
            graph.add_node(());
        }
        for (f, face) in faces.iter().enumerate() {
            for &index in face {
                if index >= count {
                    return Err(MeshError::BadIndex { face: f, index, count });
                }
            }
            for k in 0..3 {
                let (a, b) = (face[k], face[(k + 1) % 3]);
                let (na, nb) = (NodeIndex::new(a), NodeIndex::new(b));
                if graph.find_edge(na, nb).is_some() {
                    continue;
                }
                let len = distance(&vertices[a], &vertices[b]);
                if !(len > 0.0) {
                    return Err(MeshError::DegenerateEdge(a.min(b), a.max(b)));
                }
                graph.add_edge(na, nb, len);
            }
        }
        Ok(Self { vertices, faces, graph })
    }

    /// Reads an ASCII OFF file. Polygons with more than three corners are
    /// split into triangle fans.
    pub fn parse_off(text: &str) -> Result<Self, MeshError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let err = |line: usize, message: &str| MeshError::Parse { line, message: message.into() };
        let (line, first) = lines.next().ok_or_else(|| err(1, "empty file"))?;
        let counts = match first.strip_prefix("OFF") {
            Some(rest) if !rest.trim().is_empty() => (line, rest.trim().to_string()),
            Some(_) => {
                let (l, c) = lines.next().ok_or_else(|| err(line, "missing counts line"))?;
                (l, c.to_string())
            }
            None => return Err(err(line, "missing OFF header")),
        };
        let nums = parse_numbers::<usize>(&counts.1, counts.0)?;
        if nums.len() < 2 {
            return Err(err(counts.0, "expected vertex and face counts"));
        }
        let (nv, nf) = (nums[0], nums[1]);
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (l, text) = lines.next().ok_or_else(|| err(counts.0, "file ends inside the vertex list"))?;
            let c = parse_numbers::<f64>(text, l)?;
            if c.len() < 3 {
                return Err(err(l, "vertex needs three coordinates"));
            }
            vertices.push([c[0], c[1], c[2]]);
        }
        let mut faces = Vec::with_capacity(nf);
        for _ in 0..nf {
            let (l, text) = lines.next().ok_or_else(|| err(counts.0, "file ends inside the face list"))?;
            // trailing color values are ignored
            let tokens: Vec<&str> = text.split_whitespace().collect();
            let k: usize = tokens[0].parse().map_err(|e| err(l, &format!("`{}`: {e}", tokens[0])))?;
            if k < 3 || tokens.len() < k + 1 {
                return Err(err(l, "face needs at least three vertex indices"));
            }
            let idx = parse_numbers::<usize>(&tokens[..=k].join(" "), l)?;
            for t in 1..k - 1 {
                faces.push([idx[1], idx[1 + t], idx[2 + t]]);
            }
        }
        Self::new(vertices, faces)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[[f64; 3]] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    /// `(a, b, length)` for every mesh edge.
    pub fn edge_lengths(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.graph.raw_edges().iter().map(|e| (e.source().index(), e.target().index(), e.weight))
    }

    /// Shortest-path lengths from `source` along mesh edges; unreachable
    /// vertices get `+∞`.
    pub fn geodesics_from(&self, source: usize) -> Result<Vec<f64>, MeshError> {
        if source >= self.vertex_count() {
            return Err(MeshError::BadVertex(source));
        }
        let reached = dijkstra(&self.graph, NodeIndex::new(source), None, |e| *e.weight());
        let mut out = vec![f64::INFINITY; self.vertex_count()];
        for (node, d) in reached {
            out[node.index()] = d;
        }
        Ok(out)
    }
}

fn distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn parse_numbers<T: std::str::FromStr>(text: &str, line: usize) -> Result<Vec<T>, MeshError>
where
    T::Err: std::fmt::Display,
{
    text.split_whitespace()
        .map(|t| t.parse::<T>().map_err(|e| MeshError::Parse { line, message: format!("`{t}`: {e}") }))
        .collect()
}

/// Geodesic distances between the sampled vertices.
pub fn mesh_geodesic_metric(mesh: &MeshGraph, sample: &[usize]) -> Result<FiniteMetricSpace, MeshError> {
    let n = sample.len();
    let mut rows = vec![vec![0.0; n]; n];
    for (a, &s) in sample.iter().enumerate() {
        let dist = mesh.geodesics_from(s)?;
        for (b, &t) in sample.iter().enumerate() {
            if t >= dist.len() {
                return Err(MeshError::BadVertex(t));
            }
            if !dist[t].is_finite() {
                return Err(MeshError::DisconnectedMesh(s, t));
            }
            rows[a][b] = dist[t];
        }
    }
    // Dijkstra from both ends may disagree in the last bits
    for a in 0..n {
        for b in 0..a {
            let v = 0.5 * (rows[a][b] + rows[b][a]);
            rows[a][b] = v;
            rows[b][a] = v;
        }
    }
    Ok(FiniteMetricSpace::new(rows)?)
}

/// `count` distinct vertices. Farthest-point sampling starts from the vertex
/// farthest from a seeded random vertex, then repeatedly adds the vertex
/// farthest from the current sample (lowest index on ties).
pub fn sample_vertices(mesh: &MeshGraph, count: usize, mode: SampleMode, seed: u64) -> Result<Vec<usize>, MeshError> {
    let nv = mesh.vertex_count();
    if count > nv {
        return Err(MeshError::TooMany { requested: count, available: nv });
    }
    if count == 0 {
        return Ok(Vec::new());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match mode {
        SampleMode::Random => Ok(sample(&mut rng, nv, count).into_vec()),
        SampleMode::FarthestPoint => {
            let start = rng.gen_range(0..nv);
            let first = argmax(&mesh.geodesics_from(start)?);
            let mut chosen = vec![first];
            let mut nearest = mesh.geodesics_from(first)?;
            while chosen.len() < count {
                // chosen vertices sit at 0 and every other vertex is strictly farther
                let last = argmax(&nearest);
                chosen.push(last);
                for (d, e) in nearest.iter_mut().zip(mesh.geodesics_from(last)?) {
                    *d = d.min(e);
                }
            }
            Ok(chosen)
        }
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}
