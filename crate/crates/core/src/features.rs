//! Fixed-length instance descriptors.
//!
//! Layout ([`FEATURE_NAMES`] gives one name per slot):
//!
//! | slots  | block |
//! |--------|-------|
//! | 0..5   | size: `log10(1+|V|)`, `log10(1+|F|)`, min/max/mean label count |
//! | 5..16  | variable-order histogram (8 bins) and min/max/mean |
//! | 16..24 | factor-order histogram (5 bins) and min/max/mean |
//! | 24..28 | densities for orders 2, 3, 4 and an order >= 5 indicator |
//! | 28..38 | energy ratios for orders 2, 3, >= 4 and a unary-present flag |
//! | 38..45 | pairwise condition fractions |
//!
//! Extraction never reads the class tag, and every sum is taken over
//! sorted terms so the result does not depend on factor order.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::graph::{classify_factor, FactorClass, FactorGraph};
use crate::scalar::Energy;

pub const D: usize = 45;

pub const FEATURE_NAMES: [&str; D] = [
    "log_num_vars",
    "log_num_factors",
    "labels_min",
    "labels_max",
    "labels_mean",
    "var_order_1",
    "var_order_2",
    "var_order_3",
    "var_order_4",
    "var_order_5",
    "var_order_6_10",
    "var_order_11_100",
    "var_order_gt_100",
    "var_order_min",
    "var_order_max",
    "var_order_mean",
    "factor_order_1",
    "factor_order_2",
    "factor_order_3",
    "factor_order_4",
    "factor_order_ge_5",
    "factor_order_min",
    "factor_order_max",
    "factor_order_mean",
    "density_2",
    "density_3",
    "density_4",
    "has_order_ge_5",
    "order2_sum_mean_ratio",
    "order2_mean_mean_ratio",
    "order2_mean_std_ratio",
    "order3_sum_mean_ratio",
    "order3_mean_mean_ratio",
    "order3_mean_std_ratio",
    "order4p_sum_mean_ratio",
    "order4p_mean_mean_ratio",
    "order4p_mean_std_ratio",
    "unary_present",
    "pairwise_cond_i",
    "pairwise_cond_ii",
    "pairwise_cond_iii",
    "pairwise_cond_iv",
    "pairwise_metric",
    "pairwise_semi_metric",
    "pairwise_submodular",
];

/// Denominators below this make an energy ratio undefined, emitted as 0.
pub const RATIO_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn names() -> &'static [&'static str; D] {
        &FEATURE_NAMES
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        FEATURE_NAMES.iter().position(|&n| n == name).map(|i| self.values[i])
    }
}

fn sorted_sum(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs.into_iter().sum()
}

fn stats(xs: &[usize]) -> [f64; 3] {
    if xs.is_empty() {
        return [0.0; 3];
    }
    let min = *xs.iter().min().unwrap() as f64;
    let max = *xs.iter().max().unwrap() as f64;
    let mean = xs.iter().sum::<usize>() as f64 / xs.len() as f64;
    [min, max, mean]
}

/// `C(n, k)` in floating point; `None` on overflow.
fn binomial(n: usize, k: usize) -> Option<f64> {
    if k > n {
        return Some(0.0);
    }
    let mut c = 1.0f64;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c.is_finite().then_some(c)
}

pub fn size_features<T: Energy>(gm: &FactorGraph<T>) -> Vec<f64> {
    let cards = gm.cards();
    let [lmin, lmax, lmean] = stats(cards);
    vec![
        (1.0 + gm.num_vars() as f64).log10(),
        (1.0 + gm.num_factors() as f64).log10(),
        lmin,
        lmax,
        lmean,
    ]
}

fn var_bin(order: usize) -> usize {
    match order {
        0..=5 => order.saturating_sub(1),
        6..=10 => 5,
        11..=100 => 6,
        _ => 7,
    }
}

fn histogram(orders: &[usize], bins: usize, bin: impl Fn(usize) -> usize) -> Vec<f64> {
    let mut h = vec![0.0; bins];
    for &o in orders {
        h[bin(o)] += 1.0;
    }
    if !orders.is_empty() {
        let n = orders.len() as f64;
        h.iter_mut().for_each(|x| *x /= n);
    }
    h
}

pub fn structural_features<T: Energy>(gm: &FactorGraph<T>) -> Vec<f64> {
    let mut var_orders = vec![0usize; gm.num_vars()];
    for f in gm.factors() {
        for &v in &f.clique {
            var_orders[v] += 1;
        }
    }
    let factor_orders: Vec<usize> = gm.factors().iter().map(|f| f.order()).collect();
    let mut out = histogram(&var_orders, 8, var_bin);
    out.extend(stats(&var_orders));
    out.extend(histogram(&factor_orders, 5, |m| m.clamp(1, 5) - 1));
    out.extend(stats(&factor_orders));
    for m in 2..=4 {
        let count = factor_orders.iter().filter(|&&o| o == m).count() as f64;
        let density = match binomial(gm.num_vars(), m) {
            Some(c) if c > 0.0 => count / c,
            _ => 0.0,
        };
        out.push(density);
    }
    out.push(if factor_orders.iter().any(|&o| o >= 5) { 1.0 } else { 0.0 });
    out
}

/// Mean and population standard deviation of the distinct table entries.
fn unique_stats<T: Energy>(table: &[T]) -> (f64, f64) {
    let mut vals: Vec<f64> = table.iter().map(|x| x.as_f64()).collect();
    vals.sort_by(f64::total_cmp);
    vals.dedup();
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// `(sum of means, mean of means, mean of std devs)` of one order bucket.
fn bucket_quantities(members: &[(f64, f64)]) -> [f64; 3] {
    if members.is_empty() {
        return [0.0; 3];
    }
    let n = members.len() as f64;
    let sum_mu = sorted_sum(members.iter().map(|m| m.0).collect());
    let sum_sigma = sorted_sum(members.iter().map(|m| m.1).collect());
    [sum_mu, sum_mu / n, sum_sigma / n]
}

pub fn energy_features<T: Energy>(gm: &FactorGraph<T>) -> Vec<f64> {
    let mut buckets: [Vec<(f64, f64)>; 4] = Default::default();
    for f in gm.factors() {
        let b = f.order().clamp(1, 4) - 1;
        buckets[b].push(unique_stats(&f.table));
    }
    let base = bucket_quantities(&buckets[0]);
    let unary_ok = !buckets[0].is_empty() && base[0].abs() >= RATIO_EPS;
    let mut out = Vec::with_capacity(17);
    for bucket in &buckets[1..] {
        let q = bucket_quantities(bucket);
        for k in 0..3 {
            let ratio = if unary_ok && base[k].abs() >= RATIO_EPS { q[k] / base[k] } else { 0.0 };
            out.push(ratio);
        }
    }
    out.push(if unary_ok { 1.0 } else { 0.0 });

    let classes: Vec<_> = gm.factors().iter().filter(|f| f.order() == 2).map(|f| classify_factor(f, gm)).collect();
    let frac = |pred: &dyn Fn(&FactorClass) -> bool| {
        if classes.is_empty() {
            0.0
        } else {
            classes.iter().filter(|c| pred(c)).count() as f64 / classes.len() as f64
        }
    };
    out.push(frac(&|c| c.zero_diagonal_iff_equal));
    out.push(frac(&|c| c.non_negative));
    out.push(frac(&|c| c.symmetric));
    out.push(frac(&|c| c.triangle));
    out.push(frac(&|c| c.metric()));
    out.push(frac(&|c| c.semi_metric()));
    out.push(frac(&|c| c.submodular));
    out
}

pub fn extract<T: Energy>(gm: &FactorGraph<T>) -> FeatureVector {
    let mut values = size_features(gm);
    values.extend(structural_features(gm));
    values.extend(energy_features(gm));
    debug_assert_eq!(values.len(), D);
    FeatureVector { values }
}

/// CSV with header `instance,<feature names>`.
pub fn to_csv<'a>(rows: impl IntoIterator<Item = (&'a str, &'a FeatureVector)>) -> String {
    let mut out = String::from("instance");
    for n in FEATURE_NAMES {
        out.push(',');
        out.push_str(n);
    }
    out.push('\n');
    for (id, fv) in rows {
        out.push_str(id);
        for v in &fv.values {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct JsonRow<'a> {
    instance: &'a str,
    names: &'a [&'a str],
    values: &'a [f64],
}

/// One JSON object per line with `instance`, `names` and `values`.
pub fn to_json_line(id: &str, fv: &FeatureVector) -> String {
    serde_json::to_string(&JsonRow { instance: id, names: &FEATURE_NAMES, values: &fv.values })
        .expect("finite features serialise")
}
