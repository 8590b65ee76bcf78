//! Metrics and data splitting.
//!
//! Winner sets keep every algorithm tied for the best objective value, and
//! the splitters stratify over distinct winner sets so each label
//! combination keeps its share in train and test.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::ValueType;
use crate::instances::{ObjectiveSense, PerformanceTable};
use crate::util::rng_for;

/// Default relative tolerance under which objective values count as tied.
pub const DEFAULT_TIE_TOLERANCE: f64 = 1e-9;
/// Relative tolerance for "equals" on real-valued features, and the absolute
/// fallback when the truth is zero.
pub const EQUALS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("no pairs left to score")]
    Empty,
    #[error("non-finite objective value for `{0}`")]
    NonFinite(String),
    #[error("empty winner set at position {0}")]
    EmptyWinnerSet(usize),
    #[error("k = {k} exceeds the {n} available instances")]
    TooManyFolds { k: usize, n: usize },
    #[error("invalid split parameter: {0}")]
    BadParameter(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WinnerSet {
    pub instance_name: String,
    pub set: BTreeSet<String>,
}

impl WinnerSet {
    pub fn key(&self) -> Vec<String> {
        self.set.iter().cloned().collect()
    }
}

/// Algorithms whose value is within `tie_tolerance` (relative) of the best.
/// A tolerance of 0 means exact ties only.
pub fn winning_set(
    instance_name: &str,
    algorithms: &[String],
    values: &[f64],
    sense: ObjectiveSense,
    tie_tolerance: f64,
) -> Result<WinnerSet, EvalError> {
    if algorithms.len() != values.len() {
        return Err(EvalError::LengthMismatch(algorithms.len(), values.len()));
    }
    if values.is_empty() {
        return Err(EvalError::Empty);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(EvalError::NonFinite(instance_name.to_owned()));
    }
    let best = match sense {
        ObjectiveSense::Minimize => values.iter().copied().fold(f64::INFINITY, f64::min),
        ObjectiveSense::Maximize => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    };
    let set = algorithms
        .iter()
        .zip(values)
        .filter(|(_, &v)| (v - best).abs() <= tie_tolerance * best.abs().max(v.abs()))
        .map(|(a, _)| a.clone())
        .collect();
    Ok(WinnerSet {
        instance_name: instance_name.to_owned(),
        set,
    })
}

/// Winner sets for every row of the table, in instance-name order.
pub fn winner_sets(
    table: &PerformanceTable,
    tie_tolerance: f64,
) -> Result<Vec<WinnerSet>, EvalError> {
    table
        .rows()
        .iter()
        .map(|(name, values)| {
            winning_set(
                name,
                table.algorithms(),
                values,
                table.sense(),
                tie_tolerance,
            )
        })
        .collect()
}

/// Mean absolute error over pairs where both sides are present.
pub fn mae(pred: &[Option<f64>], truth: &[Option<f64>]) -> Result<f64, EvalError> {
    if pred.len() != truth.len() {
        return Err(EvalError::LengthMismatch(pred.len(), truth.len()));
    }
    let (sum, n) = pred
        .iter()
        .zip(truth)
        .filter_map(|(p, t)| Some((p.as_ref()?, t.as_ref()?)))
        .fold((0.0, 0usize), |(s, n), (p, t)| (s + (p - t).abs(), n + 1));
    if n == 0 {
        return Err(EvalError::Empty);
    }
    Ok(sum / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchRates {
    pub equals: f64,
    pub within_1pct: f64,
    pub within_5pct: f64,
    pub null_rate: f64,
    /// Pairs scored (those with a defined truth).
    pub count: usize,
}

/// `|pred - truth| <= rel * |truth|`, or `<= 1e-9` absolute when the truth is 0.
pub fn is_within(pred: f64, truth: f64, rel: f64) -> bool {
    let delta = (pred - truth).abs();
    if truth == 0.0 {
        delta <= EQUALS_TOLERANCE
    } else {
        delta <= rel * truth.abs()
    }
}

/// Whether a single prediction counts as an exact match.
pub fn is_equal(pred: f64, truth: f64, value_type: ValueType) -> bool {
    match value_type {
        ValueType::Integer => pred == truth,
        ValueType::Real => is_within(pred, truth, EQUALS_TOLERANCE),
    }
}

/// Exact-match and within-tolerance rates. Pairs with an undefined truth
/// are dropped; null predictions stay in every denominator and never match.
pub fn match_rates(
    pred: &[Option<f64>],
    truth: &[Option<f64>],
    value_type: ValueType,
) -> Result<MatchRates, EvalError> {
    if pred.len() != truth.len() {
        return Err(EvalError::LengthMismatch(pred.len(), truth.len()));
    }
    let mut counts = [0usize; 4];
    let mut n = 0usize;
    for (p, t) in pred.iter().zip(truth) {
        let Some(t) = *t else { continue };
        n += 1;
        let Some(p) = *p else {
            counts[3] += 1;
            continue;
        };
        counts[0] += usize::from(is_equal(p, t, value_type));
        counts[1] += usize::from(is_within(p, t, 0.01));
        counts[2] += usize::from(is_within(p, t, 0.05));
    }
    if n == 0 {
        return Err(EvalError::Empty);
    }
    let rate = |c: usize| c as f64 / n as f64;
    Ok(MatchRates {
        equals: rate(counts[0]),
        within_1pct: rate(counts[1]),
        within_5pct: rate(counts[2]),
        null_rate: rate(counts[3]),
        count: n,
    })
}

/// Fraction of predictions that land inside the instance's winner set.
pub fn set_aware_accuracy<S: AsRef<str>>(
    preds: &[S],
    sets: &[BTreeSet<String>],
) -> Result<f64, EvalError> {
    if preds.len() != sets.len() {
        return Err(EvalError::LengthMismatch(preds.len(), sets.len()));
    }
    if preds.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut hits = 0usize;
    for (i, (p, s)) in preds.iter().zip(sets).enumerate() {
        if s.is_empty() {
            return Err(EvalError::EmptyWinnerSet(i));
        }
        hits += usize::from(s.contains(p.as_ref()));
    }
    Ok(hits as f64 / preds.len() as f64)
}

/// One train/test partition over a list of instances.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub seed: u64,
    /// Fold index for k-fold partitions; `None` for a holdout split.
    pub fold: Option<usize>,
    pub instances: Vec<String>,
    /// Stratum id per instance, indexing `stratum_sets`.
    pub strata: Vec<usize>,
    pub stratum_sets: Vec<Vec<String>>,
    pub test: Vec<bool>,
    /// Single training label per instance, drawn uniformly from its winner set.
    pub labels: Vec<String>,
}

impl SplitAssignment {
    pub fn train_indices(&self) -> Vec<usize> {
        (0..self.test.len()).filter(|&i| !self.test[i]).collect()
    }

    pub fn test_indices(&self) -> Vec<usize> {
        (0..self.test.len()).filter(|&i| self.test[i]).collect()
    }
}

struct Strata {
    ids: Vec<usize>,
    sets: Vec<Vec<String>>,
    members: Vec<Vec<usize>>,
}

fn stratify(sets: &[WinnerSet]) -> Strata {
    let mut by_key: BTreeMap<Vec<String>, Vec<usize>> = BTreeMap::new();
    for (i, ws) in sets.iter().enumerate() {
        by_key.entry(ws.key()).or_default().push(i);
    }
    let mut ids = vec![0; sets.len()];
    let mut keys = Vec::with_capacity(by_key.len());
    let mut members = Vec::with_capacity(by_key.len());
    for (id, (key, idx)) in by_key.into_iter().enumerate() {
        for &i in &idx {
            ids[i] = id;
        }
        keys.push(key);
        members.push(idx);
    }
    Strata {
        ids,
        sets: keys,
        members,
    }
}

fn draw_labels(sets: &[WinnerSet], seed: u64) -> Vec<String> {
    sets.iter()
        .map(|ws| {
            let choices: Vec<&String> = ws.set.iter().collect();
            if choices.is_empty() {
                return String::new();
            }
            let mut rng = rng_for(seed, &[b"label", ws.instance_name.as_bytes()]);
            choices[rng.random_range(0..choices.len())].clone()
        })
        .collect()
}

fn shuffled(members: &[usize], seed: u64, key: &[String], tag: &[u8]) -> Vec<usize> {
    let joined = key.join("\u{1f}");
    let mut rng = rng_for(seed, &[tag, joined.as_bytes()]);
    let mut v = members.to_vec();
    v.shuffle(&mut rng);
    v
}

/// Holdout split: within each stratum `round(ratio * n)` instances train.
/// Strata of a single instance go wholly to training.
pub fn stratified_split(
    sets: &[WinnerSet],
    ratio: f64,
    seed: u64,
) -> Result<SplitAssignment, EvalError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(EvalError::BadParameter(format!(
            "ratio {ratio} outside (0, 1)"
        )));
    }
    if let Some(i) = sets.iter().position(|s| s.set.is_empty()) {
        return Err(EvalError::EmptyWinnerSet(i));
    }
    let strata = stratify(sets);
    let mut test = vec![false; sets.len()];
    for (key, members) in strata.sets.iter().zip(&strata.members) {
        if members.len() < 2 {
            continue;
        }
        let order = shuffled(members, seed, key, b"holdout");
        let n_train = (ratio * members.len() as f64).round() as usize;
        for &i in &order[n_train.min(order.len())..] {
            test[i] = true;
        }
    }
    Ok(SplitAssignment {
        seed,
        fold: None,
        instances: sets.iter().map(|s| s.instance_name.clone()).collect(),
        strata: strata.ids,
        stratum_sets: strata.sets,
        test,
        labels: draw_labels(sets, seed),
    })
}

/// Stratified k-fold. Members of each stratum are dealt round-robin over the
/// folds, continuing the rotation across strata so fold sizes stay even.
/// Strata with fewer than `k` members never enter a test fold.
pub fn stratified_kfold(
    sets: &[WinnerSet],
    k: usize,
    seed: u64,
) -> Result<Vec<SplitAssignment>, EvalError> {
    if k < 2 {
        return Err(EvalError::BadParameter(format!(
            "k = {k} must be at least 2"
        )));
    }
    if k > sets.len() {
        return Err(EvalError::TooManyFolds { k, n: sets.len() });
    }
    if let Some(i) = sets.iter().position(|s| s.set.is_empty()) {
        return Err(EvalError::EmptyWinnerSet(i));
    }
    let strata = stratify(sets);
    let mut fold_of: Vec<Option<usize>> = vec![None; sets.len()];
    let mut offset = 0;
    for (key, members) in strata.sets.iter().zip(&strata.members) {
        if members.len() < k {
            continue;
        }
        for (pos, &i) in shuffled(members, seed, key, b"kfold").iter().enumerate() {
            fold_of[i] = Some((offset + pos) % k);
        }
        offset = (offset + members.len()) % k;
    }
    let instances: Vec<String> = sets.iter().map(|s| s.instance_name.clone()).collect();
    let labels = draw_labels(sets, seed);
    Ok((0..k)
        .map(|f| SplitAssignment {
            seed,
            fold: Some(f),
            instances: instances.clone(),
            strata: strata.ids.clone(),
            stratum_sets: strata.sets.clone(),
            test: fold_of.iter().map(|&x| x == Some(f)).collect(),
            labels: labels.clone(),
        })
        .collect())
}

/// Plain seeded shuffle split into `(train, test)` index lists.
pub fn shuffle_split(n: usize, ratio: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng_for(seed, &[b"shuffle_split"]));
    let n_train = ((ratio * n as f64).round() as usize).clamp(usize::from(n > 0), n);
    let test = idx.split_off(n_train);
    (idx, test)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn algs(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn set(names: &[&str]) -> BTreeSet<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn ws(name: &str, names: &[&str]) -> WinnerSet {
        WinnerSet {
            instance_name: name.into(),
            set: set(names),
        }
    }

    #[test]
    fn winner_set_cases() {
        let min = ObjectiveSense::Minimize;
        let w = winning_set(
            "g",
            &algs(&["DSATUR", "MAXIS"]),
            &[12.0, 14.0],
            min,
            DEFAULT_TIE_TOLERANCE,
        )
        .unwrap();
        assert_eq!(w.set, set(&["DSATUR"]));
        let w = winning_set("g", &algs(&["A", "B"]), &[7.0, 7.0], min, 0.0).unwrap();
        assert_eq!(w.set, set(&["A", "B"]));
        let w = winning_set("g", &algs(&["A", "B"]), &[7.0, 7.0 + 1e-12], min, 1e-9).unwrap();
        assert_eq!(w.set, set(&["A", "B"]));
        let w = winning_set("g", &algs(&["A", "B"]), &[7.0, 7.0 + 1e-12], min, 0.0).unwrap();
        assert_eq!(w.set, set(&["A"]));
        let w = winning_set(
            "k",
            &algs(&["A", "B", "C"]),
            &[5.0, 9.0, 9.0],
            ObjectiveSense::Maximize,
            0.0,
        )
        .unwrap();
        assert_eq!(w.set, set(&["B", "C"]));
        assert!(matches!(
            winning_set("x", &algs(&["A", "B"]), &[1.0, f64::NAN], min, 0.0),
            Err(EvalError::NonFinite(_))
        ));
    }

    #[test]
    fn mae_cases() {
        assert_eq!(
            mae(&[Some(10.0), Some(20.0)], &[Some(12.0), Some(26.0)]),
            Ok(4.0)
        );
        assert_eq!(mae(&[Some(3.0)], &[Some(3.0)]), Ok(0.0));
        assert_eq!(mae(&[Some(5.0)], &[None]), Err(EvalError::Empty));
        assert_eq!(mae(&[None, Some(1.0)], &[Some(9.0), Some(2.0)]), Ok(1.0));
        assert_eq!(mae(&[Some(1.0)], &[]), Err(EvalError::LengthMismatch(1, 0)));
    }

    #[test]
    fn match_rate_cases() {
        let r = match_rates(&[Some(100.5)], &[Some(100.0)], ValueType::Real).unwrap();
        assert_eq!((r.equals, r.within_1pct, r.within_5pct), (0.0, 1.0, 1.0));
        let r = match_rates(&[Some(0.0)], &[Some(0.0)], ValueType::Real).unwrap();
        assert_eq!(r.equals, 1.0);
        let r = match_rates(
            &[None, Some(3.0), None, Some(4.0)],
            &[Some(1.0), Some(3.0), Some(2.0), Some(4.0)],
            ValueType::Integer,
        )
        .unwrap();
        assert_eq!((r.equals, r.null_rate, r.count), (0.5, 0.5, 4));
        let r = match_rates(
            &[Some(1.0), Some(9.0)],
            &[None, Some(9.0)],
            ValueType::Integer,
        )
        .unwrap();
        assert_eq!((r.equals, r.count), (1.0, 1));
        assert!(match_rates(&[Some(1.0)], &[Some(1.0), Some(2.0)], ValueType::Integer).is_err());
    }

    #[test]
    fn set_aware_accuracy_cases() {
        let sets = vec![set(&["A"]), set(&["A", "B"]), set(&["B"])];
        assert_eq!(set_aware_accuracy(&["A", "B", "A"], &sets), Ok(2.0 / 3.0));
        let full = vec![set(&["A", "B"]); 3];
        assert_eq!(set_aware_accuracy(&["A", "B", "A"], &full), Ok(1.0));
        assert_eq!(set_aware_accuracy(&["C", "C", "C"], &sets), Ok(0.0));
        assert_eq!(
            set_aware_accuracy(&["A"], &[BTreeSet::new()]),
            Err(EvalError::EmptyWinnerSet(0))
        );
    }

    #[test]
    fn holdout_per_stratum() {
        let mut sets: Vec<WinnerSet> = (0..10).map(|i| ws(&format!("a{i}"), &["A"])).collect();
        sets.extend((0..10).map(|i| ws(&format!("ab{i}"), &["A", "B"])));
        sets.push(ws("lonely", &["B"]));
        let s = stratified_split(&sets, 0.7, 11).unwrap();
        for stratum in 0..2 {
            let members: Vec<usize> = (0..sets.len())
                .filter(|&i| s.strata[i] == stratum)
                .collect();
            assert_eq!(members.iter().filter(|&&i| !s.test[i]).count(), 7);
        }
        assert!(!s.test[20]);
        assert_eq!(s, stratified_split(&sets, 0.7, 11).unwrap());
        for (i, l) in s.labels.iter().enumerate() {
            assert!(sets[i].set.contains(l));
        }
    }

    #[test]
    fn kfold_cases() {
        let one: Vec<WinnerSet> = (0..10).map(|i| ws(&format!("x{i}"), &["A"])).collect();
        let folds = stratified_kfold(&one, 5, 1).unwrap();
        assert!(folds.iter().all(|f| f.test_indices().len() == 2));

        let mut two: Vec<WinnerSet> = (0..5).map(|i| ws(&format!("a{i}"), &["A"])).collect();
        two.extend((0..5).map(|i| ws(&format!("b{i}"), &["B"])));
        for f in stratified_kfold(&two, 5, 9).unwrap() {
            let t = f.test_indices();
            assert_eq!(t.len(), 2);
            assert_eq!(t.iter().filter(|&&i| i < 5).count(), 1);
        }

        let mut seen = vec![0; two.len()];
        for f in stratified_kfold(&two, 5, 2).unwrap() {
            for i in f.test_indices() {
                seen[i] += 1;
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
        assert_eq!(
            stratified_kfold(&two, 11, 0).unwrap_err(),
            EvalError::TooManyFolds { k: 11, n: 10 }
        );
    }

    #[test]
    fn small_strata_stay_in_training() {
        let mut sets: Vec<WinnerSet> = (0..10).map(|i| ws(&format!("a{i}"), &["A"])).collect();
        sets.extend((0..3).map(|i| ws(&format!("b{i}"), &["B"])));
        for f in stratified_kfold(&sets, 5, 4).unwrap() {
            assert!(f.test_indices().iter().all(|&i| i < 10));
        }
    }

    #[test]
    fn shuffle_split_partitions() {
        let (tr, te) = shuffle_split(10, 0.7, 5);
        assert_eq!((tr.len(), te.len()), (7, 3));
        let mut all: Vec<usize> = tr.iter().chain(&te).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
    }
}
