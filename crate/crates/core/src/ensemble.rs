//! Ranked mode voting.
//!
//! Models are ranked best first. For each sample the most common predicted
//! label wins; while several labels tie for most common, the prediction of
//! the lowest-ranked model still voting is discarded and the count repeats.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::dataset::{Dataset, Split};
use crate::error::{Error, Result};
use crate::fusion::FusionModel;
use crate::metrics;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RankedModel {
    pub id: String,
    pub score: f64,
}

/// Model ids ordered by score descending, then id ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedModels(Vec<RankedModel>);

impl RankedModels {
    pub fn from_scores(scores: impl IntoIterator<Item = (String, f64)>) -> Result<Self> {
        let mut ranked: Vec<RankedModel> = scores
            .into_iter()
            .map(|(id, score)| RankedModel { id, score })
            .collect();
        if ranked.is_empty() {
            return Err(Error::EmptyInput("no models to rank".into()));
        }
        if let Some(bad) = ranked.iter().find(|m| m.score.is_nan()) {
            return Err(Error::NonFinite(alloc::format!("score of model {}", bad.id)));
        }
        ranked.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.id.cmp(&b.id)));
        for w in ranked.windows(2) {
            if w[0].id == w[1].id {
                return Err(Error::DuplicateId(w[0].id.clone()));
            }
        }
        Ok(Self(ranked))
    }

    pub fn models(&self) -> &[RankedModel] {
        &self.0
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(|m| m.id.as_str())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Scores each `(id, model)` by WAF on `split` and ranks them.
pub fn rank_models(models: &[(String, FusionModel)], dataset: &Dataset, split: Split) -> Result<RankedModels> {
    if models.is_empty() {
        return Err(Error::EmptyInput("no models to rank".into()));
    }
    let (indices, truth) = labeled_split(dataset, split)?;
    let scores = models
        .iter()
        .map(|(id, m)| {
            let pred = m.predict_labels(dataset, &indices)?;
            Ok((id.clone(), metrics::waf_of(&truth, &pred, dataset.num_classes())?))
        })
        .collect::<Result<Vec<_>>>()?;
    RankedModels::from_scores(scores)
}

/// Entry indices of a split together with their labels; every entry must be labeled.
pub fn labeled_split(dataset: &Dataset, split: Split) -> Result<(Vec<usize>, Vec<usize>)> {
    let indices = dataset.split_indices(split);
    let truth = indices
        .iter()
        .map(|&i| {
            dataset.entries()[i].label.ok_or_else(|| {
                Error::Validation(alloc::format!(
                    "{split} sample {:?} has no label",
                    dataset.entries()[i].sample_id
                ))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if indices.is_empty() {
        return Err(Error::UndefinedMetric(alloc::format!("split {split} is empty")));
    }
    Ok((indices, truth))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoteRound {
    /// Predictions still voting, best-ranked first.
    pub active: Vec<usize>,
    /// Labels sharing the highest count, ascending.
    pub modes: Vec<usize>,
    /// Rank position of the prediction discarded after this round.
    pub eliminated: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoteTrace {
    pub rounds: Vec<VoteRound>,
    pub label: usize,
}

fn modes_of(active: &[usize]) -> Vec<usize> {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &l in active {
        *counts.entry(l).or_default() += 1;
    }
    let best = counts.values().copied().max().unwrap_or(0);
    counts.into_iter().filter(|&(_, c)| c == best).map(|(l, _)| l).collect()
}

/// Votes over predictions ordered best-ranked model first.
pub fn vote(ranked_predictions: &[usize]) -> Result<(usize, VoteTrace)> {
    if ranked_predictions.is_empty() {
        return Err(Error::EmptyInput("vote needs at least one prediction".into()));
    }
    let mut active = ranked_predictions.len();
    let mut rounds = Vec::new();
    loop {
        let voting = &ranked_predictions[..active];
        let modes = modes_of(voting);
        if modes.len() == 1 || active == 1 {
            let label = modes[0];
            rounds.push(VoteRound {
                active: voting.to_vec(),
                modes,
                eliminated: None,
            });
            return Ok((label, VoteTrace { rounds, label }));
        }
        active -= 1;
        rounds.push(VoteRound {
            active: voting.to_vec(),
            modes,
            eliminated: Some(active),
        });
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleOutput {
    pub sample_ids: Vec<String>,
    pub labels: Vec<usize>,
    pub traces: Vec<VoteTrace>,
}

/// Applies [`vote`] to every sample of `split`, with predictions collected
/// in ranking order. `models` must contain every ranked id.
pub fn ensemble_predict(
    ranked: &RankedModels,
    models: &[(String, FusionModel)],
    dataset: &Dataset,
    split: Split,
) -> Result<EnsembleOutput> {
    let ordered = ranked
        .ids()
        .map(|id| {
            models
                .iter()
                .find(|(m, _)| m == id)
                .map(|(_, m)| m)
                .ok_or_else(|| Error::Config(alloc::format!("ranked model {id} not supplied")))
        })
        .collect::<Result<Vec<_>>>()?;
    let vocab = &ordered[0].label_vocab;
    if ordered.iter().any(|m| &m.label_vocab != vocab) {
        return Err(Error::Config("models disagree on the label vocabulary".into()));
    }
    let indices = dataset.split_indices(split);
    let per_model = ordered
        .iter()
        .map(|m| m.predict_labels(dataset, &indices))
        .collect::<Result<Vec<_>>>()?;
    let columns: Vec<Vec<usize>> = (0..indices.len())
        .map(|s| per_model.iter().map(|p| p[s]).collect())
        .collect();
    let out = vote_columns(&columns)?;
    Ok(EnsembleOutput {
        sample_ids: indices.iter().map(|&i| dataset.entries()[i].sample_id.clone()).collect(),
        labels: out.iter().map(|(l, _)| *l).collect(),
        traces: out.into_iter().map(|(_, t)| t).collect(),
    })
}

/// Votes each row of ranked predictions.
pub fn vote_columns(rows: &[Vec<usize>]) -> Result<Vec<(usize, VoteTrace)>> {
    rows.iter().map(|r| vote(r)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    const A: usize = 0;
    const B: usize = 1;
    const C: usize = 2;
    const D: usize = 3;

    #[test]
    fn hand_traced_votes() {
        let (l, t) = vote(&[A, B, A, B]).unwrap();
        assert_eq!(l, A);
        assert_eq!(t.rounds.len(), 2);
        assert_eq!(t.rounds[0].modes, vec![A, B]);
        assert_eq!(t.rounds[0].eliminated, Some(3));
        assert_eq!(t.rounds[1].active, vec![A, B, A]);

        let (l, t) = vote(&[A, A, A, B]).unwrap();
        assert_eq!((l, t.rounds.len()), (A, 1));

        let (l, t) = vote(&[A, B, C, D]).unwrap();
        assert_eq!((l, t.rounds.len()), (A, 4));
    }

    #[test]
    fn empty_vote_is_an_error() {
        assert!(vote(&[]).is_err());
    }

    #[test]
    fn ranking_ties_by_id() {
        let r = RankedModels::from_scores(vec![("B".into(), 0.8), ("A".into(), 0.8)]).unwrap();
        assert_eq!(r.ids().collect::<Vec<_>>(), vec!["A", "B"]);
        let r = RankedModels::from_scores(vec![("B".into(), 0.8), ("A".into(), 0.9)]).unwrap();
        assert_eq!(r.ids().collect::<Vec<_>>(), vec!["A", "B"]);
        let r = RankedModels::from_scores(vec![("solo".into(), 0.1)]).unwrap();
        assert_eq!(r.len(), 1);
        assert!(RankedModels::from_scores(vec![]).is_err());
    }
}
