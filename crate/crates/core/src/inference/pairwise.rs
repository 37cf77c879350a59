//! Dense pairwise view of a model: summed unaries and merged edge tables.

use std::collections::BTreeMap;

use crate::graph::FactorGraph;
use crate::scalar::Energy;

#[derive(Debug, Clone)]
pub(crate) struct Edge<T> {
    pub i: usize,
    pub j: usize,
    /// `cards[i] x cards[j]`, row-major.
    pub table: Vec<T>,
}

impl<T: Energy> Edge<T> {
    #[inline]
    pub fn at(&self, lj: usize, a: usize, b: usize) -> T {
        self.table[a * lj + b]
    }
}

#[derive(Debug, Clone)]
pub(crate) struct PairwiseModel<T> {
    pub cards: Vec<usize>,
    pub unary: Vec<Vec<T>>,
    pub edges: Vec<Edge<T>>,
    /// `(edge, neighbour)` per variable, edges in ascending index order.
    pub adj: Vec<Vec<(usize, usize)>>,
}

impl<T: Energy> PairwiseModel<T> {
    /// Builds the view from factors of order <= 2; higher orders are ignored.
    pub fn new(gm: &FactorGraph<T>) -> Self {
        let cards = gm.cards().to_vec();
        let mut unary: Vec<Vec<T>> = cards.iter().map(|&c| vec![T::zero(); c]).collect();
        let mut merged: BTreeMap<(usize, usize), Vec<T>> = BTreeMap::new();
        for f in gm.factors() {
            match f.order() {
                1 => {
                    for (u, &e) in unary[f.clique[0]].iter_mut().zip(&f.table) {
                        *u += e;
                    }
                }
                2 => {
                    let key = (f.clique[0], f.clique[1]);
                    let t = merged.entry(key).or_insert_with(|| vec![T::zero(); f.table.len()]);
                    for (x, &e) in t.iter_mut().zip(&f.table) {
                        *x += e;
                    }
                }
                _ => {}
            }
        }
        let edges: Vec<Edge<T>> =
            merged.into_iter().map(|((i, j), table)| Edge { i, j, table }).collect();
        let mut adj = vec![Vec::new(); cards.len()];
        for (e, edge) in edges.iter().enumerate() {
            adj[edge.i].push((e, edge.j));
            adj[edge.j].push((e, edge.i));
        }
        PairwiseModel { cards, unary, edges, adj }
    }

    pub fn num_vars(&self) -> usize {
        self.cards.len()
    }

    pub fn energy(&self, labels: &[usize]) -> T {
        let mut e = T::zero();
        for (v, u) in self.unary.iter().enumerate() {
            e += u[labels[v]];
        }
        for edge in &self.edges {
            e += edge.at(self.cards[edge.j], labels[edge.i], labels[edge.j]);
        }
        e
    }

    pub fn table_size(&self) -> usize {
        self.unary.iter().map(Vec::len).sum::<usize>() + self.edges.iter().map(|e| e.table.len()).sum::<usize>()
    }
}

pub(crate) fn argmin<T: Energy>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x < v[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn normalise<T: Energy>(v: &mut [T]) -> T {
    let m = v.iter().copied().fold(T::infinity(), T::min);
    if m.is_finite() {
        for x in v.iter_mut() {
            *x -= m;
        }
    }
    m
}
