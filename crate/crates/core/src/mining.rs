//! Four-learner pseudo-label mining.
//!
//! Four fusion branches with different feature groups are trained on the
//! labeled pool. Each iteration they predict the remaining unlabeled pool;
//! samples on which at least three learners agree receive that label and move
//! to the pseudo-labeled pool. The new pseudo-labels are dealt evenly to the
//! four learners, and each learner is retrained on the labeled pool plus the
//! pseudo-labels it has accumulated so far.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::{Dataset, Split};
use crate::ensemble::labeled_split;
use crate::error::{Error, Result};
use crate::fusion::train::{examples_at, spec_dims};
use crate::fusion::{train_examples, FusionModel, GroupSpec, TrainConfig};
use crate::metrics;
use crate::rng::Rng;

pub const LEARNERS: usize = 4;
pub const MIN_AGREEMENT: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Agreement {
    pub label: usize,
    pub count: usize,
}

/// Accepts a label when at least three of the four learners predict it.
pub fn pseudo_label(predictions: &[usize]) -> Result<Option<Agreement>> {
    if predictions.len() != LEARNERS {
        return Err(Error::Arity {
            expected: LEARNERS,
            found: predictions.len(),
        });
    }
    Ok(predictions.iter().find_map(|&label| {
        let count = predictions.iter().filter(|&&p| p == label).count();
        (count >= MIN_AGREEMENT).then_some(Agreement { label, count })
    }))
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PseudoLabel {
    pub sample_id: String,
    pub label: usize,
    pub agreement: usize,
    /// Iteration (1-based) at which the sample was admitted.
    pub iteration: usize,
    /// Learner whose training set received the sample.
    pub learner: usize,
}

/// Seeded even split of `items` into `k` subsets (sizes differ by at most one).
pub fn partition<T: Clone>(items: &[T], k: usize, seed: u64) -> Result<Vec<Vec<T>>> {
    let mut rng = Rng::seed(seed);
    partition_from(items, k, &mut rng, 0)
}

/// Shuffles `items` and deals them round-robin starting at subset `offset`.
pub fn partition_from<T: Clone>(items: &[T], k: usize, rng: &mut Rng, offset: usize) -> Result<Vec<Vec<T>>> {
    if k == 0 {
        return Err(Error::Config("partition needs k >= 1".into()));
    }
    let order = rng.permutation(items.len());
    let mut out = vec![Vec::new(); k];
    for (j, &i) in order.iter().enumerate() {
        out[(offset + j) % k].push(items[i].clone());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct MiningConfig {
    pub iterations: usize,
    /// Deal new pseudo-labels class by class so every learner sees each class.
    pub stratify: bool,
}

impl Default for MiningConfig {
    fn default() -> Self {
        Self {
            iterations: 3,
            stratify: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HistoryEntry {
    pub iteration: usize,
    pub labeled: usize,
    pub unlabeled: usize,
    pub pseudo_labeled: usize,
    pub admitted: usize,
    /// Validation WAF of each learner; empty when there is no labeled val split.
    pub val_waf: Vec<f64>,
}

impl HistoryEntry {
    pub fn best_val_waf(&self) -> Option<f64> {
        self.val_waf.iter().copied().reduce(f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MiningState {
    pub labeled: BTreeSet<String>,
    pub unlabeled: BTreeSet<String>,
    pub pseudo: BTreeMap<String, PseudoLabel>,
    /// Pseudo-labeled ids accumulated by each learner, in admission order.
    pub assignments: Vec<Vec<String>>,
    next_subset: usize,
    pub iteration: usize,
    pub history: Vec<HistoryEntry>,
}

impl MiningState {
    pub fn new(dataset: &Dataset) -> Self {
        let ids = |split| {
            dataset
                .split_indices(split)
                .into_iter()
                .map(|i| dataset.entries()[i].sample_id.clone())
                .collect::<BTreeSet<_>>()
        };
        Self {
            labeled: ids(Split::Train),
            unlabeled: ids(Split::Unlabeled),
            pseudo: BTreeMap::new(),
            assignments: vec![Vec::new(); LEARNERS],
            next_subset: 0,
            iteration: 0,
            history: Vec::new(),
        }
    }

    pub fn pool_total(&self) -> usize {
        self.labeled.len() + self.unlabeled.len() + self.pseudo.len()
    }

    /// Pseudo-labels sorted by admission iteration, then sample id.
    pub fn pseudo_labels(&self) -> Vec<&PseudoLabel> {
        let mut out: Vec<_> = self.pseudo.values().collect();
        out.sort_by(|a, b| a.iteration.cmp(&b.iteration).then_with(|| a.sample_id.cmp(&b.sample_id)));
        out
    }
}

/// Runs independent jobs; implementations may use threads.
pub trait Executor {
    fn map<T: Send, R: Send, F: Fn(T) -> R + Sync>(&self, items: Vec<T>, f: F) -> Vec<R>;
}

/// Runs jobs one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T: Send, R: Send, F: Fn(T) -> R + Sync>(&self, items: Vec<T>, f: F) -> Vec<R> {
        items.into_iter().map(f).collect()
    }
}

#[derive(Debug, Clone)]
pub struct MiningRun {
    pub state: MiningState,
    pub learners: Vec<FusionModel>,
}

pub struct Miner<'d> {
    dataset: &'d Dataset,
    specs: Vec<GroupSpec>,
    train: TrainConfig,
    config: MiningConfig,
}

impl<'d> Miner<'d> {
    pub fn new(dataset: &'d Dataset, specs: Vec<GroupSpec>, train: TrainConfig, config: MiningConfig) -> Result<Self> {
        if specs.len() != LEARNERS {
            return Err(Error::Arity {
                expected: LEARNERS,
                found: specs.len(),
            });
        }
        for s in &specs {
            spec_dims(dataset, s)?;
        }
        train.validate()?;
        Ok(Self {
            dataset,
            specs,
            train,
            config,
        })
    }

    pub fn config(&self) -> &MiningConfig {
        &self.config
    }

    fn labels(&self, state: &MiningState) -> Result<Vec<Vec<(usize, usize)>>> {
        let base: Vec<(usize, usize)> = state
            .labeled
            .iter()
            .map(|id| {
                let i = self.dataset.index_of(id).expect("labeled id from dataset");
                let label = self.dataset.entries()[i].label.expect("train split is labeled");
                (i, label)
            })
            .collect();
        if base.is_empty() {
            return Err(Error::EmptyTrain);
        }
        Ok(state
            .assignments
            .iter()
            .map(|ids| {
                let mut set = base.clone();
                set.extend(ids.iter().map(|id| {
                    let i = self.dataset.index_of(id).expect("pseudo id from dataset");
                    (i, state.pseudo[id].label)
                }));
                set
            })
            .collect())
    }

    fn train_all<E: Executor>(&self, state: &MiningState, exec: &E) -> Result<Vec<FusionModel>> {
        let sets = self.labels(state)?;
        let mut config = self.train.clone();
        config.seed = self.train.seed.wrapping_add(state.iteration as u64);
        let jobs: Vec<(usize, Vec<(usize, usize)>)> = sets.into_iter().enumerate().collect();
        exec.map(jobs, |(learner, set)| {
            let spec = &self.specs[learner];
            let dims = spec_dims(self.dataset, spec)?;
            let examples = examples_at(self.dataset, spec, set)?;
            train_examples(&examples, spec, &dims, self.dataset.label_vocab(), &config)
        })
        .into_iter()
        .collect()
    }

    fn record(&self, state: &mut MiningState, learners: &[FusionModel], admitted: usize) -> Result<()> {
        let val_waf = match labeled_split(self.dataset, Split::Val) {
            Ok((indices, truth)) => learners
                .iter()
                .map(|m| {
                    let pred = m.predict_labels(self.dataset, &indices)?;
                    metrics::waf_of(&truth, &pred, self.dataset.num_classes())
                })
                .collect::<Result<Vec<_>>>()?,
            Err(_) => Vec::new(),
        };
        state.history.push(HistoryEntry {
            iteration: state.iteration,
            labeled: state.labeled.len(),
            unlabeled: state.unlabeled.len(),
            pseudo_labeled: state.pseudo.len(),
            admitted,
            val_waf,
        });
        Ok(())
    }

    /// Trains the initial weak learners on the labeled pool.
    pub fn initial<E: Executor>(&self, exec: &E) -> Result<MiningRun> {
        let mut state = MiningState::new(self.dataset);
        let learners = self.train_all(&state, exec)?;
        self.record(&mut state, &learners, 0)?;
        Ok(MiningRun { state, learners })
    }

    /// One predict / admit / partition / retrain round. The input is untouched
    /// on failure.
    pub fn iterate<E: Executor>(&self, run: &MiningRun, exec: &E) -> Result<MiningRun> {
        let mut state = run.state.clone();
        let next_iteration = state.iteration + 1;

        let mut admitted: Vec<(String, usize, usize)> = Vec::new();
        for id in &state.unlabeled {
            let index = self.dataset.index_of(id).expect("unlabeled id from dataset");
            let votes = run
                .learners
                .iter()
                .map(|m| m.predict_index(self.dataset, index).map(|p| p.label))
                .collect::<Result<Vec<_>>>()?;
            if let Some(a) = pseudo_label(&votes)? {
                admitted.push((id.clone(), a.label, a.count));
            }
        }

        let mut rng = Rng::derive(self.train.seed, 0x6d69_6e65_0000_0000 | next_iteration as u64);
        let ids: Vec<String> = admitted.iter().map(|(id, _, _)| id.clone()).collect();
        let subsets = if self.config.stratify {
            let mut by_class: BTreeMap<usize, Vec<String>> = BTreeMap::new();
            for (id, label, _) in &admitted {
                by_class.entry(*label).or_default().push(id.clone());
            }
            let mut subsets = vec![Vec::new(); LEARNERS];
            let mut offset = state.next_subset;
            for members in by_class.values() {
                for (k, part) in partition_from(members, LEARNERS, &mut rng, offset)?.into_iter().enumerate() {
                    subsets[k].extend(part);
                }
                offset += members.len();
            }
            subsets
        } else {
            partition_from(&ids, LEARNERS, &mut rng, state.next_subset)?
        };
        state.next_subset = (state.next_subset + ids.len()) % LEARNERS;

        let by_id: BTreeMap<&str, (usize, usize)> =
            admitted.iter().map(|(id, l, c)| (id.as_str(), (*l, *c))).collect();
        for (learner, subset) in subsets.into_iter().enumerate() {
            for id in subset {
                let (label, agreement) = by_id[id.as_str()];
                state.unlabeled.remove(&id);
                state.pseudo.insert(
                    id.clone(),
                    PseudoLabel {
                        sample_id: id.clone(),
                        label,
                        agreement,
                        iteration: next_iteration,
                        learner,
                    },
                );
                state.assignments[learner].push(id);
            }
        }

        state.iteration = next_iteration;
        let learners = self.train_all(&state, exec)?;
        self.record(&mut state, &learners, ids.len())?;
        Ok(MiningRun { state, learners })
    }

    /// Initial learners followed by `iterations` mining rounds.
    pub fn run<E: Executor>(&self, iterations: usize, exec: &E) -> Result<MiningRun> {
        let mut run = self.initial(exec).map_err(|e| Error::Iteration {
            iteration: 0,
            source: alloc::boxed::Box::new(e),
        })?;
        for it in 1..=iterations {
            run = self.iterate(&run, exec).map_err(|e| Error::Iteration {
                iteration: it,
                source: alloc::boxed::Box::new(e),
            })?;
        }
        Ok(run)
    }
}

/// Sequential mining run: `iterations` rounds after the initial learners.
pub fn run_mining(
    dataset: &Dataset,
    specs: Vec<GroupSpec>,
    iterations: usize,
    train: &TrainConfig,
    config: &MiningConfig,
) -> Result<MiningRun> {
    Miner::new(dataset, specs, train.clone(), config.clone())?.run(iterations, &Sequential)
}

/// The four default feature groups.
pub fn default_group_specs() -> Vec<GroupSpec> {
    ["audio,text,vision", "audio,vision,joint_at", "text,vision,joint_at", "audio,text,vision,joint_at"]
        .iter()
        .map(|s| GroupSpec::parse(s).expect("valid default spec"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pseudo_label_examples() {
        assert_eq!(pseudo_label(&[0, 0, 0, 1]).unwrap(), Some(Agreement { label: 0, count: 3 }));
        assert_eq!(pseudo_label(&[0, 0, 1, 1]).unwrap(), None);
        assert_eq!(pseudo_label(&[2, 2, 2, 2]).unwrap(), Some(Agreement { label: 2, count: 4 }));
        assert_eq!(pseudo_label(&[1, 0, 0, 0]).unwrap(), Some(Agreement { label: 0, count: 3 }));
        assert!(matches!(pseudo_label(&[0, 0, 0]), Err(Error::Arity { .. })));
    }

    #[test]
    fn partition_sizes_and_determinism() {
        let items: Vec<u32> = (0..10).collect();
        let parts = partition(&items, 4, 9).unwrap();
        let sizes: Vec<usize> = parts.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![3, 3, 2, 2]);
        assert_eq!(parts, partition(&items, 4, 9).unwrap());
        let mut all: Vec<u32> = parts.concat();
        all.sort();
        assert_eq!(all, items);

        let empty: Vec<Vec<u32>> = partition(&[], 4, 1).unwrap();
        assert_eq!(empty, vec![Vec::<u32>::new(); 4]);
        assert!(partition(&items, 0, 1).is_err());
    }

    #[test]
    fn default_specs_are_distinct() {
        let specs = default_group_specs();
        assert_eq!(specs.len(), 4);
        for i in 0..4 {
            for j in i + 1..4 {
                assert_ne!(specs[i], specs[j]);
            }
        }
    }
}
