//! Typed student–exercise bipartite adjacency.
//!
//! Edges are partitioned by link type: type 1 connects a student to an
//! exercise answered correctly, type 0 to one answered incorrectly. Both
//! directions are stored CSR-style for cache-friendly aggregation. Built
//! from train logs only; edges are sets (no multiplicity), and a pair
//! answered both ways across attempts keeps one edge of each type.

use std::io::Write;

use thiserror::Error;

use crate::data::InteractionLog;

/// The relation class of a student–exercise edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LinkType {
    Incorrect,
    Correct,
}

impl LinkType {
    pub const ALL: [LinkType; 2] = [LinkType::Incorrect, LinkType::Correct];

    pub fn from_score(score: u8) -> LinkType {
        if score == 0 {
            LinkType::Incorrect
        } else {
            LinkType::Correct
        }
    }

    pub fn index(self) -> usize {
        match self {
            LinkType::Incorrect => 0,
            LinkType::Correct => 1,
        }
    }
}

/// Either side of the bipartite graph, for degree queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphNode {
    Student(usize),
    Exercise(usize),
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("log index out of range: student {student} or exercise {exercise} (M={m}, N={n})")]
    IndexOutOfRange {
        student: usize,
        exercise: usize,
        m: usize,
        n: usize,
    },
}

#[derive(Debug, Clone, Default, PartialEq)]
struct Csr {
    offsets: Vec<usize>,
    targets: Vec<usize>,
}

impl Csr {
    fn neighbors(&self, node: usize) -> &[usize] {
        &self.targets[self.offsets[node]..self.offsets[node + 1]]
    }

    /// Build from (source, target) pairs sorted by (source, target).
    fn from_sorted_pairs(num_sources: usize, pairs: &[(usize, usize)]) -> Csr {
        let mut offsets = vec![0usize; num_sources + 1];
        for &(s, _) in pairs {
            offsets[s + 1] += 1;
        }
        for i in 1..offsets.len() {
            offsets[i] += offsets[i - 1];
        }
        Csr {
            offsets,
            targets: pairs.iter().map(|&(_, t)| t).collect(),
        }
    }
}

/// Student/exercise adjacency partitioned by link type.
#[derive(Debug, Clone, PartialEq)]
pub struct TypedBipartiteGraph {
    num_students: usize,
    num_exercises: usize,
    student_adj: [Csr; 2],
    exercise_adj: [Csr; 2],
}

/// Build the typed adjacency from train logs. Each distinct
/// (student, exercise, score) triple yields one edge of type `score`,
/// stored in both directions with neighbor lists sorted ascending.
/// Order-independent: permuting the input yields an identical graph.
pub fn build_graph(
    train_logs: &[InteractionLog],
    num_students: usize,
    num_exercises: usize,
) -> Result<TypedBipartiteGraph, GraphError> {
    for log in train_logs {
        if log.student >= num_students || log.exercise >= num_exercises {
            return Err(GraphError::IndexOutOfRange {
                student: log.student,
                exercise: log.exercise,
                m: num_students,
                n: num_exercises,
            });
        }
    }
    let mut triples: Vec<(usize, usize, usize)> = train_logs
        .iter()
        .map(|l| (l.student, l.exercise, LinkType::from_score(l.score).index()))
        .collect();
    triples.sort_unstable();
    triples.dedup();

    let mut graph = TypedBipartiteGraph {
        num_students,
        num_exercises,
        student_adj: [Csr::default(), Csr::default()],
        exercise_adj: [Csr::default(), Csr::default()],
    };
    for link in 0..2 {
        let mut fwd: Vec<(usize, usize)> = triples
            .iter()
            .filter(|&&(_, _, n)| n == link)
            .map(|&(s, p, _)| (s, p))
            .collect();
        // triples are sorted by (s, p) already
        graph.student_adj[link] = Csr::from_sorted_pairs(num_students, &fwd);
        fwd.iter_mut().for_each(|e| *e = (e.1, e.0));
        fwd.sort_unstable();
        graph.exercise_adj[link] = Csr::from_sorted_pairs(num_exercises, &fwd);
    }
    Ok(graph)
}

impl TypedBipartiteGraph {
    pub fn num_students(&self) -> usize {
        self.num_students
    }

    pub fn num_exercises(&self) -> usize {
        self.num_exercises
    }

    /// Exercises linked to student `s` by `link`, sorted ascending.
    pub fn student_neighbors(&self, link: LinkType, s: usize) -> &[usize] {
        self.student_adj[link.index()].neighbors(s)
    }

    /// Students linked to exercise `p` by `link`, sorted ascending.
    pub fn exercise_neighbors(&self, link: LinkType, p: usize) -> &[usize] {
        self.exercise_adj[link.index()].neighbors(p)
    }

    pub fn degree(&self, node: GraphNode, link: LinkType) -> usize {
        match node {
            GraphNode::Student(s) => self.student_neighbors(link, s).len(),
            GraphNode::Exercise(p) => self.exercise_neighbors(link, p).len(),
        }
    }

    /// Total number of typed edges.
    pub fn num_edges(&self) -> usize {
        self.student_adj[0].targets.len() + self.student_adj[1].targets.len()
    }

    /// CSR view (offsets, targets) for one side and link type.
    pub fn csr(&self, side: GraphSide, link: LinkType) -> (&[usize], &[usize]) {
        let csr = match side {
            GraphSide::Student => &self.student_adj[link.index()],
            GraphSide::Exercise => &self.exercise_adj[link.index()],
        };
        (&csr.offsets, &csr.targets)
    }

    /// Debug dump: one `s,p,type` line per edge, sorted by (s, p, type).
    pub fn write_edge_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "student,exercise,link_type")?;
        for s in 0..self.num_students {
            let mut rows: Vec<(usize, usize)> = Vec::new();
            for link in LinkType::ALL {
                for &p in self.student_neighbors(link, s) {
                    rows.push((p, link.index()));
                }
            }
            rows.sort_unstable();
            for (p, t) in rows {
                writeln!(w, "{s},{p},{t}")?;
            }
        }
        Ok(())
    }
}

/// Which partition a CSR view aggregates into.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphSide {
    Student,
    Exercise,
}
