//! Factor graphs, labellings and energy evaluation.
//!
//! Factor tables are dense and stored row-major with the last clique
//! variable varying fastest.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::scalar::{Energy, TABLE_TOL};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GraphError {
    #[error("labelling has {got} entries but the model has {expected} variables")]
    LabellingLength { expected: usize, got: usize },
    #[error("label {label} of variable {var} is out of range (cardinality {card})")]
    LabelOutOfRange { var: usize, label: usize, card: usize },
    #[error("labellings differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("invalid model: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

/// One broken structural invariant of a [`FactorGraph`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NoVariables,
    ZeroCardinality { var: usize },
    EmptyClique { factor: usize },
    VariableOutOfRange { factor: usize, var: usize },
    CliqueNotIncreasing { factor: usize },
    TableLength { factor: usize, expected: usize, got: usize },
    NonFiniteEntry { factor: usize, entry: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoVariables => write!(f, "model has no variables"),
            Violation::ZeroCardinality { var } => write!(f, "variable {var} has cardinality 0"),
            Violation::EmptyClique { factor } => write!(f, "factor {factor}: empty clique"),
            Violation::VariableOutOfRange { factor, var } => {
                write!(f, "factor {factor}: variable {var} out of range")
            }
            Violation::CliqueNotIncreasing { factor } => {
                write!(f, "factor {factor}: clique not strictly increasing")
            }
            Violation::TableLength { factor, expected, got } => {
                write!(f, "factor {factor}: table length {got} \u{2260} {expected}")
            }
            Violation::NonFiniteEntry { factor, entry } => {
                write!(f, "factor {factor}: entry {entry} is not finite")
            }
        }
    }
}

/// A real-valued function over a clique of variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor<T> {
    pub clique: Vec<usize>,
    pub table: Vec<T>,
}

impl<T: Energy> Factor<T> {
    pub fn new(clique: Vec<usize>, table: Vec<T>) -> Self {
        Factor { clique, table }
    }

    pub fn order(&self) -> usize {
        self.clique.len()
    }

    /// Row-major strides for this clique, last variable fastest.
    pub fn strides(&self, cards: &[usize]) -> Vec<usize> {
        let mut strides = vec![1; self.clique.len()];
        for k in (0..self.clique.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * cards[self.clique[k + 1]];
        }
        strides
    }

    /// Table index selected by a full labelling.
    pub fn index_of(&self, cards: &[usize], labels: &[usize]) -> usize {
        let mut idx = 0;
        for &v in &self.clique {
            idx = idx * cards[v] + labels[v];
        }
        idx
    }

    pub fn value(&self, cards: &[usize], labels: &[usize]) -> T {
        self.table[self.index_of(cards, labels)]
    }

    /// Entry `(a, b)` of a pairwise table.
    pub fn pair(&self, cards: &[usize], a: usize, b: usize) -> T {
        self.table[a * cards[self.clique[1]] + b]
    }
}

/// One label index per variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Labelling(pub Vec<usize>);

impl Labelling {
    pub fn zeros(n: usize) -> Self {
        Labelling(vec![0; n])
    }

    pub fn labels(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<usize>> for Labelling {
    fn from(v: Vec<usize>) -> Self {
        Labelling(v)
    }
}

/// Discrete energy-minimisation instance.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorGraph<T> {
    cards: Vec<usize>,
    factors: Vec<Factor<T>>,
    class_tag: Option<String>,
}

impl<T: Energy> FactorGraph<T> {
    /// Builds a model, rejecting it if any invariant fails.
    pub fn new(cards: Vec<usize>, factors: Vec<Factor<T>>) -> Result<Self, GraphError> {
        let gm = Self::new_unchecked(cards, factors);
        let violations = gm.validate();
        if violations.is_empty() {
            Ok(gm)
        } else {
            Err(GraphError::Invalid(violations))
        }
    }

    pub fn new_unchecked(cards: Vec<usize>, factors: Vec<Factor<T>>) -> Self {
        FactorGraph { cards, factors, class_tag: None }
    }

    pub fn with_class_tag(mut self, tag: impl Into<String>) -> Self {
        self.class_tag = Some(tag.into());
        self
    }

    pub fn set_class_tag(&mut self, tag: Option<String>) {
        self.class_tag = tag;
    }

    pub fn class_tag(&self) -> Option<&str> {
        self.class_tag.as_deref()
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn card(&self, v: usize) -> usize {
        self.cards[v]
    }

    pub fn num_vars(&self) -> usize {
        self.cards.len()
    }

    pub fn factors(&self) -> &[Factor<T>] {
        &self.factors
    }

    pub fn num_factors(&self) -> usize {
        self.factors.len()
    }

    /// Product of cardinalities as `f64` (may be huge).
    pub fn state_space(&self) -> f64 {
        self.cards.iter().map(|&c| c as f64).product()
    }

    /// Returns every violated invariant; empty means the model is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.cards.is_empty() {
            out.push(Violation::NoVariables);
        }
        for (var, &c) in self.cards.iter().enumerate() {
            if c == 0 {
                out.push(Violation::ZeroCardinality { var });
            }
        }
        for (fi, f) in self.factors.iter().enumerate() {
            if f.clique.is_empty() {
                out.push(Violation::EmptyClique { factor: fi });
                continue;
            }
            let mut in_range = true;
            for &v in &f.clique {
                if v >= self.cards.len() {
                    out.push(Violation::VariableOutOfRange { factor: fi, var: v });
                    in_range = false;
                }
            }
            if f.clique.windows(2).any(|w| w[0] >= w[1]) {
                out.push(Violation::CliqueNotIncreasing { factor: fi });
            }
            if in_range {
                let expected: usize = f.clique.iter().map(|&v| self.cards[v]).product();
                if expected != f.table.len() {
                    out.push(Violation::TableLength { factor: fi, expected, got: f.table.len() });
                }
            }
            if let Some(entry) = f.table.iter().position(|x| !x.is_finite()) {
                out.push(Violation::NonFiniteEntry { factor: fi, entry });
            }
        }
        out
    }

    pub fn check_labelling(&self, x: &Labelling) -> Result<(), GraphError> {
        if x.len() != self.cards.len() {
            return Err(GraphError::LabellingLength { expected: self.cards.len(), got: x.len() });
        }
        for (var, (&label, &card)) in x.0.iter().zip(&self.cards).enumerate() {
            if label >= card {
                return Err(GraphError::LabelOutOfRange { var, label, card });
            }
        }
        Ok(())
    }

    /// Total energy of a labelling.
    pub fn evaluate_energy(&self, x: &Labelling) -> Result<T, GraphError> {
        self.check_labelling(x)?;
        Ok(self.energy_unchecked(x.labels()))
    }

    pub(crate) fn energy_unchecked(&self, labels: &[usize]) -> T {
        self.factors.iter().map(|f| f.value(&self.cards, labels)).sum()
    }

    /// Largest clique size, 0 without factors.
    pub fn max_factor_order(&self) -> usize {
        self.factors.iter().map(Factor::order).max().unwrap_or(0)
    }

    /// Copy without factors of order above two.
    pub fn strip_higher_order(&self) -> Self {
        FactorGraph {
            cards: self.cards.clone(),
            factors: self.factors.iter().filter(|f| f.order() <= 2).cloned().collect(),
            class_tag: self.class_tag.clone(),
        }
    }

    pub fn incidence(&self) -> Incidence {
        Incidence::new(self)
    }
}

/// Per-variable list of incident factors with precomputed strides.
#[derive(Debug, Clone)]
pub struct Incidence {
    /// `(factor, position in clique)` for every variable.
    pub by_var: Vec<Vec<(usize, usize)>>,
    pub strides: Vec<Vec<usize>>,
}

impl Incidence {
    fn new<T: Energy>(gm: &FactorGraph<T>) -> Self {
        let mut by_var = vec![Vec::new(); gm.num_vars()];
        let mut strides = Vec::with_capacity(gm.num_factors());
        for (fi, f) in gm.factors().iter().enumerate() {
            for (pos, &v) in f.clique.iter().enumerate() {
                by_var[v].push((fi, pos));
            }
            strides.push(f.strides(gm.cards()));
        }
        Incidence { by_var, strides }
    }

    /// Energy of the factors touching `v`, with `v` set to `label`.
    pub fn local_energy<T: Energy>(
        &self,
        gm: &FactorGraph<T>,
        labels: &[usize],
        v: usize,
        label: usize,
    ) -> T {
        let mut e = T::zero();
        for &(fi, pos) in &self.by_var[v] {
            let f = &gm.factors()[fi];
            let st = &self.strides[fi];
            let mut idx = 0;
            for (k, &u) in f.clique.iter().enumerate() {
                let l = if k == pos { label } else { labels[u] };
                idx += l * st[k];
            }
            e += f.table[idx];
        }
        e
    }
}

/// Fraction of variables with identical labels.
pub fn match_fraction(a: &Labelling, b: &Labelling) -> Result<f64, GraphError> {
    if a.len() != b.len() {
        return Err(GraphError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Ok(1.0);
    }
    let same = a.0.iter().zip(&b.0).filter(|(x, y)| x == y).count();
    Ok(same as f64 / a.len() as f64)
}

/// Structural properties of a single factor table.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FactorClass {
    pub unary: bool,
    pub pairwise: bool,
    pub potts: bool,
    /// Condition (i): `f(a,b) = 0` iff `a = b`.
    pub zero_diagonal_iff_equal: bool,
    /// Condition (ii): `f(a,b) >= 0`.
    pub non_negative: bool,
    /// Condition (iii): `f(a,b) = f(b,a)`.
    pub symmetric: bool,
    /// Condition (iv): `f(a,b) + f(b,c) >= f(a,c)`.
    pub triangle: bool,
    pub submodular: bool,
    /// `(e_same, e_diff)` when the factor is Potts.
    pub potts_values: Option<(f64, f64)>,
}

impl FactorClass {
    pub fn semi_metric(&self) -> bool {
        self.zero_diagonal_iff_equal && self.non_negative && self.symmetric
    }

    pub fn metric(&self) -> bool {
        self.semi_metric() && self.triangle
    }
}

/// Evaluates the metric, Potts and submodularity conditions of `f`.
pub fn classify_factor<T: Energy>(f: &Factor<T>, gm: &FactorGraph<T>) -> FactorClass {
    let cards = gm.cards();
    let mut class = FactorClass { unary: f.order() == 1, ..FactorClass::default() };
    if f.order() != 2 {
        return class;
    }
    class.pairwise = true;
    let (la, lb) = (cards[f.clique[0]], cards[f.clique[1]]);
    let at = |a: usize, b: usize| f.table[a * lb + b].as_f64();
    let tol = TABLE_TOL;

    class.non_negative = f.table.iter().all(|x| x.as_f64() >= -tol);
    class.submodular = (0..la.saturating_sub(1)).all(|a| {
        (0..lb.saturating_sub(1))
            .all(|b| at(a, b) + at(a + 1, b + 1) <= at(a, b + 1) + at(a + 1, b) + tol)
    });

    if la != lb {
        return class;
    }
    let l = la;
    class.zero_diagonal_iff_equal =
        (0..l).all(|a| (0..l).all(|b| (at(a, b).abs() <= tol) == (a == b)));
    class.symmetric = (0..l).all(|a| (a + 1..l).all(|b| (at(a, b) - at(b, a)).abs() <= tol));
    class.triangle = (0..l).all(|a| {
        (0..l).all(|b| (0..l).all(|c| at(a, b) + at(b, c) >= at(a, c) - tol))
    });

    let e_same = at(0, 0);
    let e_diff = if l > 1 { at(0, 1) } else { e_same };
    let potts = (0..l).all(|a| {
        (0..l).all(|b| {
            let target = if a == b { e_same } else { e_diff };
            (at(a, b) - target).abs() <= tol
        })
    });
    if potts {
        class.potts = true;
        class.potts_values = Some((e_same, e_diff));
    }
    class
}
