//! The native FGE text format.
//!
//! ```text
//! FGE 1
//! # class: grid-potts
//! <|V|> <card_0> ... <card_{|V|-1}>
//! <|F|>
//! <M> <v_1> ... <v_M> <T> <e_1> ... <e_T>     (once per factor)
//! ```
//!
//! Tokens are whitespace separated; only the first line is line-sensitive.
//! Lines starting with `#` are comments.

use std::fmt::Write as _;

use crate::graph::{Factor, FactorGraph, Violation};
use crate::scalar::Energy;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("factor {factor}: {violation}")]
    Factor { factor: usize, violation: String },
    #[error("invalid model: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

impl ParseError {
    pub(crate) fn syntax(line: usize, message: impl Into<String>) -> Self {
        ParseError::Syntax { line, message: message.into() }
    }

    /// Maps validation failures onto a per-factor error when one factor is at fault.
    pub(crate) fn from_violations(violations: Vec<Violation>) -> Self {
        let factor_of = |v: &Violation| match v {
            Violation::EmptyClique { factor }
            | Violation::VariableOutOfRange { factor, .. }
            | Violation::CliqueNotIncreasing { factor }
            | Violation::TableLength { factor, .. }
            | Violation::NonFiniteEntry { factor, .. } => Some(*factor),
            _ => None,
        };
        match violations.first().and_then(factor_of) {
            Some(factor) if violations.len() == 1 => {
                ParseError::Factor { factor, violation: violations[0].to_string() }
            }
            _ => ParseError::Invalid(violations),
        }
    }
}

/// Whitespace token stream that remembers line numbers and skips comments.
pub(crate) struct Tokens<'a> {
    items: Vec<(usize, &'a str)>,
    pos: usize,
    last_line: usize,
}

impl<'a> Tokens<'a> {
    pub(crate) fn new(lines: impl Iterator<Item = (usize, &'a str)>) -> Self {
        let mut items = Vec::new();
        let mut last_line = 0;
        for (no, line) in lines {
            last_line = no;
            if line.trim_start().starts_with('#') {
                continue;
            }
            items.extend(line.split_whitespace().map(|t| (no, t)));
        }
        Tokens { items, pos: 0, last_line }
    }

    pub(crate) fn next_raw(&mut self, what: &str) -> Result<(usize, &'a str), ParseError> {
        let tok = self.items.get(self.pos).copied().ok_or_else(|| {
            ParseError::syntax(self.last_line, format!("unexpected end of input, expected {what}"))
        })?;
        self.pos += 1;
        Ok(tok)
    }

    pub(crate) fn peek_line(&self) -> usize {
        self.items.get(self.pos).map_or(self.last_line, |t| t.0)
    }

    pub(crate) fn usize(&mut self, what: &str) -> Result<usize, ParseError> {
        let (line, tok) = self.next_raw(what)?;
        tok.parse()
            .map_err(|_| ParseError::syntax(line, format!("expected {what}, found `{tok}`")))
    }

    pub(crate) fn real<T: Energy>(&mut self, what: &str) -> Result<T, ParseError> {
        let (line, tok) = self.next_raw(what)?;
        tok.parse::<T>()
            .map_err(|_| ParseError::syntax(line, format!("expected {what}, found `{tok}`")))
    }

    pub(crate) fn finish(&self) -> Result<(), ParseError> {
        match self.items.get(self.pos) {
            Some(&(line, tok)) => Err(ParseError::syntax(line, format!("trailing token `{tok}`"))),
            None => Ok(()),
        }
    }
}

/// Parses FGE text into a validated model.
pub fn parse_fge<T: Energy>(text: &str) -> Result<FactorGraph<T>, ParseError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let header = lines.next().map(|(_, l)| l.trim()).unwrap_or("");
    if header != "FGE 1" {
        return Err(ParseError::syntax(1, format!("expected header `FGE 1`, found `{header}`")));
    }
    let body: Vec<(usize, &str)> = lines.collect();
    let class_tag = body.iter().find_map(|(_, l)| {
        l.trim_start()
            .strip_prefix('#')
            .and_then(|c| c.trim_start().strip_prefix("class:"))
            .map(|t| t.trim().to_string())
    });

    let mut toks = Tokens::new(body.into_iter());
    let n = toks.usize("variable count")?;
    let mut cards = Vec::with_capacity(n);
    for _ in 0..n {
        cards.push(toks.usize("cardinality")?);
    }
    let nf = toks.usize("factor count")?;
    let mut factors = Vec::with_capacity(nf);
    for fi in 0..nf {
        let m = toks.usize(&format!("order of factor {fi}"))?;
        let mut clique = Vec::with_capacity(m);
        for _ in 0..m {
            clique.push(toks.usize(&format!("variable index of factor {fi}"))?);
        }
        let t = toks.usize(&format!("table length of factor {fi}"))?;
        let mut table = Vec::with_capacity(t);
        for _ in 0..t {
            table.push(toks.real::<T>(&format!("table entry of factor {fi}"))?);
        }
        factors.push(Factor::new(clique, table));
    }
    toks.finish()?;

    let mut gm = FactorGraph::new_unchecked(cards, factors);
    let violations = gm.validate();
    if !violations.is_empty() {
        return Err(ParseError::from_violations(violations));
    }
    gm.set_class_tag(class_tag);
    Ok(gm)
}

/// Shortest decimal rendering that parses back to the identical value.
pub(crate) fn render_real<T: Energy>(x: T) -> String {
    let a = x.abs().as_f64();
    if a == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Renders a model as FGE text.
pub fn write_fge<T: Energy>(gm: &FactorGraph<T>) -> String {
    let mut out = String::from("FGE 1\n");
    if let Some(tag) = gm.class_tag() {
        let _ = writeln!(out, "# class: {tag}");
    }
    let _ = write!(out, "{}", gm.num_vars());
    for c in gm.cards() {
        let _ = write!(out, " {c}");
    }
    let _ = writeln!(out, "\n{}", gm.num_factors());
    for f in gm.factors() {
        let _ = write!(out, "{}", f.order());
        for v in &f.clique {
            let _ = write!(out, " {v}");
        }
        let _ = write!(out, " {}", f.table.len());
        for &e in &f.table {
            out.push(' ');
            out.push_str(&render_real(e));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn minimal_file() {
        let text = "FGE 1\n1\n2\n1\n1 0 2 0.5 1.5\n";
        let gm: FactorGraph<f64> = parse_fge(text).unwrap();
        assert_eq!(gm.num_vars(), 1);
        assert_eq!(gm.num_factors(), 1);
        assert_eq!(gm.factors()[0].table, vec![0.5, 1.5]);
        assert_eq!(gm.class_tag(), None);
    }

    #[test]
    fn mixed_order_structure() {
        let mut text = String::from("FGE 1\n# class: example\n3\n2 3 4\n6\n");
        text += "1 0 2 0 0\n1 1 3 0 0 0\n1 2 4 0 0 0 0\n";
        text += &format!("2 0 1 6 {}\n", ["0"; 6].join(" "));
        text += &format!("2 0 2 8 {}\n", ["0"; 8].join(" "));
        text += &format!("3 0 1 2 24 {}\n", vec!["0"; 24].join(" "));
        let gm: FactorGraph<f64> = parse_fge(&text).unwrap();
        assert_eq!(gm.num_vars(), 3);
        assert_eq!(gm.num_factors(), 6);
        assert_eq!(gm.class_tag(), Some("example"));
    }

    #[test]
    fn table_length_mismatch_names_factor() {
        let text = "FGE 1\n2\n2 3\n2\n1 0 2 0 1\n2 0 1 5 0 0 0 0 0\n";
        let err = parse_fge::<f64>(text).unwrap_err();
        match err {
            ParseError::Factor { factor, ref violation } => {
                assert_eq!(factor, 1);
                assert!(violation.contains("6"), "{violation}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn truncated_input_reports_line() {
        let text = "FGE 1\n2\n2 2\n1\n2 0 1 4 0.0 1.0\n";
        let err = parse_fge::<f64>(text).unwrap_err();
        assert!(matches!(err, ParseError::Syntax { line: 5, .. }), "{err}");
        let err = parse_fge::<f64>("FGE 2\n").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { line: 1, .. }));
        let err = parse_fge::<f64>("FGE 1\n1\nx\n").unwrap_err();
        assert!(err.to_string().starts_with("line 3"), "{err}");
    }

    #[test]
    fn writer_header_and_empty() {
        let gm = FactorGraph::<f64>::new(vec![2, 2], vec![]).unwrap().with_class_tag("grid-potts");
        let text = write_fge(&gm);
        assert!(text.starts_with("FGE 1\n# class: grid-potts\n"));
        assert!(text.ends_with("\n0\n"));
        assert_eq!(parse_fge::<f64>(&text).unwrap(), gm);
    }

    #[test]
    fn extreme_values_round_trip() {
        let vals: Vec<f64> = vec![1e-300, -0.0, 5e-324, 1.7976931348623157e308, 0.1 + 0.2, -3.25];
        let cards = vec![vals.len()];
        let gm = FactorGraph::new(cards, vec![Factor::new(vec![0], vals.clone())]).unwrap();
        let back: FactorGraph<f64> = parse_fge(&write_fge(&gm)).unwrap();
        for (a, b) in vals.iter().zip(&back.factors()[0].table) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    fn arb_graph() -> impl Strategy<Value = FactorGraph<f64>> {
        (1usize..6).prop_flat_map(|n| {
            let cards = proptest::collection::vec(1usize..4, n);
            cards.prop_flat_map(move |cards| {
                let cards2 = cards.clone();
                let factor = proptest::sample::subsequence((0..n).collect::<Vec<_>>(), 1..=n.min(3))
                    .prop_flat_map(move |clique| {
                        let len: usize = clique.iter().map(|&v| cards2[v]).product();
                        proptest::collection::vec(-1e6f64..1e6, len)
                            .prop_map(move |t| Factor::new(clique.clone(), t))
                    });
                let cards = cards.clone();
                proptest::collection::vec(factor, 0..6)
                    .prop_map(move |fs| FactorGraph::new(cards.clone(), fs).unwrap())
            })
        })
    }

    proptest! {
        #[test]
        fn parse_write_identity(gm in arb_graph()) {
            let back: FactorGraph<f64> = parse_fge(&write_fge(&gm)).unwrap();
            prop_assert_eq!(back, gm);
        }

        #[test]
        fn parse_write_identity_f32(gm in arb_graph()) {
            let cards = gm.cards().to_vec();
            let fs = gm.factors().iter()
                .map(|f| Factor::new(f.clique.clone(), f.table.iter().map(|&x| x as f32).collect()))
                .collect();
            let gm32 = FactorGraph::new(cards, fs).unwrap();
            let back: FactorGraph<f32> = parse_fge(&write_fge(&gm32)).unwrap();
            prop_assert_eq!(back, gm32);
        }
    }
}
