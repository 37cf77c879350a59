//! Import of UAI `MARKOV` networks.
//!
//! Potentials are converted to energies by `e = -ln(max(p, floor))` and
//! every scope is reordered to strictly increasing variable indices.

use crate::graph::{Factor, FactorGraph};
use crate::model_io::fge::{ParseError, Tokens};
use crate::scalar::Energy;

/// Default potential floor keeping energies finite.
pub const POTENTIAL_FLOOR: f64 = 1e-300;

pub fn import_uai<T: Energy>(text: &str) -> Result<FactorGraph<T>, ParseError> {
    import_uai_with_floor(text, POTENTIAL_FLOOR)
}

pub fn import_uai_with_floor<T: Energy>(text: &str, floor: f64) -> Result<FactorGraph<T>, ParseError> {
    let mut toks = Tokens::new(text.lines().enumerate().map(|(i, l)| (i + 1, l)));
    let (line, kind) = toks.next_raw("network type")?;
    if !kind.eq_ignore_ascii_case("MARKOV") {
        return Err(ParseError::syntax(line, format!("unsupported network type `{kind}`, expected MARKOV")));
    }
    let n = toks.usize("variable count")?;
    let mut cards = Vec::with_capacity(n);
    for _ in 0..n {
        cards.push(toks.usize("domain size")?);
    }
    let nf = toks.usize("function count")?;
    let mut scopes = Vec::with_capacity(nf);
    for fi in 0..nf {
        let line = toks.peek_line();
        let k = toks.usize(&format!("scope size of function {fi}"))?;
        let mut scope = Vec::with_capacity(k);
        for _ in 0..k {
            let v = toks.usize(&format!("variable of function {fi}"))?;
            if v >= n {
                return Err(ParseError::syntax(line, format!("function {fi}: variable {v} out of range")));
            }
            if scope.contains(&v) {
                return Err(ParseError::syntax(line, format!("function {fi}: variable {v} repeated")));
            }
            scope.push(v);
        }
        scopes.push((line, scope));
    }

    let mut factors = Vec::with_capacity(nf);
    for (fi, (line, scope)) in scopes.into_iter().enumerate() {
        let t = toks.usize(&format!("table size of function {fi}"))?;
        let expected: usize = scope.iter().map(|&v| cards[v]).product();
        if t != expected {
            return Err(ParseError::Factor {
                factor: fi,
                violation: format!("table length {t} \u{2260} {expected} (scope on line {line})"),
            });
        }
        let mut potentials = Vec::with_capacity(t);
        for _ in 0..t {
            potentials.push(toks.real::<f64>(&format!("potential of function {fi}"))?);
        }
        let energies: Vec<f64> = potentials.iter().map(|&p| -(p.max(floor)).ln()).collect();
        factors.push(normalise_scope(&cards, scope, energies));
    }
    toks.finish()?;

    let factors = factors
        .into_iter()
        .map(|(clique, table)| Factor::new(clique, table.into_iter().map(T::lit).collect()))
        .collect();
    FactorGraph::new(cards, factors)
        .map_err(|e| match e {
            crate::graph::GraphError::Invalid(v) => ParseError::from_violations(v),
            other => ParseError::syntax(0, other.to_string()),
        })
}

/// Sorts a scope and permutes its table axes to match.
fn normalise_scope(cards: &[usize], scope: Vec<usize>, table: Vec<f64>) -> (Vec<usize>, Vec<f64>) {
    let mut order: Vec<usize> = (0..scope.len()).collect();
    order.sort_by_key(|&k| scope[k]);
    if order.iter().enumerate().all(|(i, &k)| i == k) {
        return (scope, table);
    }
    let dims: Vec<usize> = scope.iter().map(|&v| cards[v]).collect();
    let mut old_strides = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        old_strides[k] = old_strides[k + 1] * dims[k + 1];
    }
    let new_scope: Vec<usize> = order.iter().map(|&k| scope[k]).collect();
    let new_dims: Vec<usize> = order.iter().map(|&k| dims[k]).collect();
    let mut out = Vec::with_capacity(table.len());
    let mut assign = vec![0usize; dims.len()];
    for _ in 0..table.len() {
        let old_idx: usize = order.iter().zip(&assign).map(|(&k, &a)| a * old_strides[k]).sum();
        out.push(table[old_idx]);
        for pos in (0..assign.len()).rev() {
            assign[pos] += 1;
            if assign[pos] < new_dims[pos] {
                break;
            }
            assign[pos] = 0;
        }
    }
    (new_scope, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unary_potential_to_energy() {
        let text = format!("MARKOV\n1\n2\n1\n1 0\n2\n1.0 {}\n", (-1.0f64).exp());
        let gm: FactorGraph<f64> = import_uai(&text).unwrap();
        let t = &gm.factors()[0].table;
        assert_eq!(t[0], 0.0);
        assert!((t[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn uniform_pairwise_is_zero() {
        let text = "MARKOV\n2\n2 3\n1\n2 0 1\n6\n1 1 1 1 1 1\n";
        let gm: FactorGraph<f64> = import_uai(text).unwrap();
        assert!(gm.factors()[0].table.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn zero_potential_clamps_to_floor() {
        let text = "MARKOV\n1\n2\n1\n1 0\n2\n0.0 1.0\n";
        let gm: FactorGraph<f64> = import_uai(text).unwrap();
        let expected = -(1e-300f64).ln();
        assert!((gm.factors()[0].table[0] - expected).abs() < 1e-9);
        assert!((expected - 690.775_527_898_213_7).abs() < 1e-9);
        let neg = "MARKOV\n1\n2\n1\n1 0\n2\n-3 1.0\n";
        let gm: FactorGraph<f64> = import_uai(neg).unwrap();
        assert!((gm.factors()[0].table[0] - expected).abs() < 1e-9);
    }

    #[test]
    fn rejects_bayes() {
        let err = import_uai::<f64>("BAYES\n1\n2\n0\n").unwrap_err();
        assert!(err.to_string().contains("MARKOV"));
    }

    #[test]
    fn reorders_scope_and_table() {
        // scope (1, 0) with cards 2 and 3: entry order is (x1, x0) with x0 fastest
        let text = "MARKOV\n2\n2 3\n1\n2 1 0\n6\n1 2 3 4 5 6\n";
        let gm: FactorGraph<f64> = import_uai(text).unwrap();
        let f = &gm.factors()[0];
        assert_eq!(f.clique, vec![0, 1]);
        let pot = |x0: usize, x1: usize| (x1 * 2 + x0 + 1) as f64;
        for x0 in 0..2 {
            for x1 in 0..3 {
                let e = f.value(gm.cards(), &[x0, x1]);
                assert!((e + pot(x0, x1).ln()).abs() < 1e-12);
            }
        }
    }
}
