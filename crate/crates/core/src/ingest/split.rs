use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ClassLabel;
use crate::seed::{self, Purpose};

use super::segment::LabeledSegment;

pub const TEST_FRACTION: f64 = 0.3;
pub const VAL_FRACTION: f64 = 0.1;

/// Subject-disjoint train/validation/test assignment for one fold.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub fold: usize,
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

impl SplitPlan {
    /// Splits `segments` into (train, val, test) by subject membership.
    /// Segments of subjects absent from the plan are dropped.
    pub fn partition<'a>(
        &self,
        segments: &'a [LabeledSegment],
    ) -> (Vec<LabeledSegment>, Vec<LabeledSegment>, Vec<LabeledSegment>) {
        let train: BTreeSet<&str> = self.train.iter().map(String::as_str).collect();
        let val: BTreeSet<&str> = self.val.iter().map(String::as_str).collect();
        let test: BTreeSet<&str> = self.test.iter().map(String::as_str).collect();
        let (mut a, mut b, mut c) = (Vec::new(), Vec::new(), Vec::new());
        for s in segments {
            let id = s.subject_id.as_str();
            if train.contains(id) {
                a.push(s.clone());
            } else if val.contains(id) {
                b.push(s.clone());
            } else if test.contains(id) {
                c.push(s.clone());
            }
        }
        (a, b, c)
    }
}

/// Distinct subjects with the label of their first segment, sorted by id.
pub fn subjects_of(segments: &[LabeledSegment]) -> Vec<(String, ClassLabel)> {
    let mut map: BTreeMap<&str, ClassLabel> = BTreeMap::new();
    for s in segments {
        map.entry(s.subject_id.as_str()).or_insert(s.label);
    }
    map.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

/// Classes with fewer than `3 · fold_count` subjects.
pub fn stratification_warnings(subjects: &[(String, ClassLabel)], fold_count: usize) -> Vec<String> {
    let mut counts = [0usize; ClassLabel::COUNT];
    for (_, c) in subjects {
        counts[c.index()] += 1;
    }
    ClassLabel::ALL
        .iter()
        .zip(counts)
        .filter(|&(_, n)| n > 0 && n < 3 * fold_count)
        .map(|(c, n)| format!("class {c} has only {n} subjects for {fold_count} folds"))
        .collect()
}

/// Largest-remainder apportionment of `target` slots over classes in
/// proportion to `sizes`, capped by `cap[c]`.
fn apportion(sizes: &[usize], fraction: f64, target: usize, cap: &[usize]) -> Vec<usize> {
    let ideal: Vec<f64> = sizes.iter().map(|&n| n as f64 * fraction).collect();
    let mut quota: Vec<usize> = ideal
        .iter()
        .zip(cap)
        .map(|(q, &c)| (q.floor() as usize).min(c))
        .collect();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = ideal[a] - quota[a] as f64;
        let fb = ideal[b] - quota[b] as f64;
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let mut assigned: usize = quota.iter().sum();
    while assigned < target {
        let before = assigned;
        for &c in &order {
            if assigned == target {
                break;
            }
            if quota[c] < cap[c] {
                quota[c] += 1;
                assigned += 1;
            }
        }
        if assigned == before {
            break;
        }
    }
    quota
}

/// Gives one slot to every class with at least three subjects that has
/// none, taking it from the class holding the most slots, or from that
/// class's training share when no class can spare one.
fn ensure_presence(quota: &mut [usize], sizes: &[usize], taken: &[usize]) {
    for c in 0..quota.len() {
        if quota[c] > 0 || sizes[c] < 3 || taken[c] + 2 > sizes[c] {
            continue;
        }
        if let Some(donor) = (0..quota.len())
            .filter(|&d| quota[d] >= 2)
            .max_by_key(|&d| (quota[d], std::cmp::Reverse(d)))
        {
            quota[donor] -= 1;
        }
        quota[c] += 1;
    }
}

/// Builds `fold_count` independent, class-stratified 60/10/30 subject splits.
///
/// Totals are `round(0.3·N)` test and `round(0.1·N)` validation subjects
/// with the rest in training; the shares are apportioned across classes by
/// largest remainder, and every class with at least three subjects is
/// represented in all three sets. Fold `k` shuffles with
/// `seed::derive(seed, Fold, k)`. The result does not depend on the order of
/// `subjects`.
pub fn make_splits(subjects: &[(String, ClassLabel)], fold_count: usize, seed: u64) -> Result<Vec<SplitPlan>> {
    if fold_count == 0 {
        return Err(Error::Config("fold count must be >= 1".into()));
    }
    let mut ids: BTreeMap<&str, ClassLabel> = BTreeMap::new();
    for (id, c) in subjects {
        if ids.insert(id.as_str(), *c).is_some_and(|prev| prev != *c) {
            return Err(Error::Contract(format!("subject {id} carries two labels")));
        }
    }
    if ids.is_empty() {
        return Err(Error::EmptyData("no subjects to split".into()));
    }
    for w in stratification_warnings(subjects, fold_count) {
        log::warn!("{w}");
    }

    let mut by_class: Vec<Vec<&str>> = vec![Vec::new(); ClassLabel::COUNT];
    for (id, c) in &ids {
        by_class[c.index()].push(id);
    }
    let sizes: Vec<usize> = by_class.iter().map(Vec::len).collect();
    let total = ids.len();
    let n_test = (total as f64 * TEST_FRACTION).round() as usize;
    let n_val = (total as f64 * VAL_FRACTION).round() as usize;

    let none = vec![0; sizes.len()];
    let mut test_q = apportion(&sizes, TEST_FRACTION, n_test, &sizes);
    ensure_presence(&mut test_q, &sizes, &none);
    let room: Vec<usize> = sizes.iter().zip(&test_q).map(|(n, t)| n - t).collect();
    let mut val_q = apportion(&sizes, VAL_FRACTION, n_val, &room);
    ensure_presence(&mut val_q, &sizes, &test_q);
    // Keep at least one training subject in classes that can spare one.
    for c in 0..sizes.len() {
        if sizes[c] >= 3 && test_q[c] + val_q[c] >= sizes[c] {
            test_q[c] -= 1;
        }
    }

    let plans = (0..fold_count)
        .map(|fold| {
            let mut rng = seed::rng(seed::derive(seed, Purpose::Fold, fold as u64));
            let mut plan = SplitPlan {
                fold,
                train: Vec::new(),
                val: Vec::new(),
                test: Vec::new(),
            };
            for (c, members) in by_class.iter().enumerate() {
                let mut shuffled = members.clone();
                shuffled.shuffle(&mut rng);
                let (t, rest) = shuffled.split_at(test_q[c]);
                let (v, tr) = rest.split_at(val_q[c].min(rest.len()));
                plan.test.extend(t.iter().map(|s| s.to_string()));
                plan.val.extend(v.iter().map(|s| s.to_string()));
                plan.train.extend(tr.iter().map(|s| s.to_string()));
            }
            plan
        })
        .collect();
    Ok(plans)
}
