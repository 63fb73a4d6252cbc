use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use crate::checkpoint::{validate_compatibility, Checkpoint, Tensor};
use crate::error::{Error, Result};

/// Fine-tuned candidates, usually with the pre-trained checkpoint they share.
#[derive(Debug, Clone)]
pub struct CandidatePool {
    pre: Option<Checkpoint>,
    candidates: Vec<(String, Checkpoint)>,
    ranking: Option<BTreeMap<String, f64>>,
}

impl CandidatePool {
    /// Fails on duplicate ids or on any candidate incompatible with `pre`.
    pub fn new(pre: Checkpoint, candidates: Vec<(String, Checkpoint)>) -> Result<Self> {
        Self::build(Some(pre), candidates)
    }

    /// A pool without a pre-trained checkpoint; enough for soups, not for
    /// anything built on task vectors.
    pub fn from_candidates(candidates: Vec<(String, Checkpoint)>) -> Result<Self> {
        Self::build(None, candidates)
    }

    fn build(pre: Option<Checkpoint>, candidates: Vec<(String, Checkpoint)>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for (id, _) in &candidates {
            if !seen.insert(id.as_str()) {
                return Err(Error::InvalidPool(format!("duplicate candidate id {id:?}")));
            }
        }
        let all: Vec<&Checkpoint> = pre
            .iter()
            .chain(candidates.iter().map(|(_, c)| c))
            .collect();
        if !all.is_empty() {
            validate_compatibility(&all)?;
        }
        Ok(Self {
            pre,
            candidates,
            ranking: None,
        })
    }

    /// Attaches scores used to order candidates (higher first).
    pub fn with_ranking(mut self, ranking: BTreeMap<String, f64>) -> Result<Self> {
        for (id, _) in &self.candidates {
            match ranking.get(id) {
                Some(s) if s.is_finite() => {}
                Some(s) => return Err(Error::InvalidPool(format!("score of {id:?} is {s}"))),
                None => return Err(Error::InvalidPool(format!("no score for {id:?}"))),
            }
        }
        self.ranking = Some(ranking);
        Ok(self)
    }

    pub fn pre(&self) -> Result<&Checkpoint> {
        self.pre
            .as_ref()
            .ok_or_else(|| Error::InvalidPool("pool has no pre-trained checkpoint".into()))
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.candidates.iter().map(|(id, _)| id.as_str())
    }

    pub fn candidates(&self) -> &[(String, Checkpoint)] {
        &self.candidates
    }

    pub fn get(&self, id: &str) -> Option<&Checkpoint> {
        self.candidates
            .iter()
            .find(|(i, _)| i == id)
            .map(|(_, c)| c)
    }

    pub fn ranking(&self) -> Option<&BTreeMap<String, f64>> {
        self.ranking.as_ref()
    }

    /// Ids by descending score, ties broken by id.
    pub fn ranked_ids(&self) -> Result<Vec<String>> {
        let ranking = self
            .ranking
            .as_ref()
            .ok_or_else(|| Error::InvalidPool("pool has no ranking".into()))?;
        let mut ids: Vec<String> = self.ids().map(str::to_string).collect();
        ids.sort_by(|a, b| ranking[b].total_cmp(&ranking[a]).then_with(|| a.cmp(b)));
        Ok(ids)
    }

    /// Uniform average of the candidates with the given ids.
    pub fn soup_of(&self, ids: &[String]) -> Result<Checkpoint> {
        let members = ids
            .iter()
            .map(|id| {
                self.get(id)
                    .ok_or_else(|| Error::InvalidPool(format!("unknown candidate {id:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut keyed: Vec<(&str, &Checkpoint)> =
            ids.iter().map(String::as_str).zip(members).collect();
        keyed.sort_by(|a, b| a.0.cmp(b.0));
        average(&keyed.into_iter().map(|(_, c)| c).collect::<Vec<_>>())
    }
}

/// Elementwise mean of all candidates.
pub fn uniform_soup(pool: &CandidatePool) -> Result<Checkpoint> {
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    let ids: Vec<String> = pool.ids().map(str::to_string).collect();
    let mut soup = pool.soup_of(&ids)?;
    let first = &pool.candidates[0].1;
    *soup.metadata_mut() = first.metadata().clone();
    Ok(soup)
}

/// Mean of compatible checkpoints, accumulated in the given order as
/// `x_0 + sum_t (x_t - x_0) / T` so identical inputs average to themselves
/// exactly.
pub(crate) fn average(members: &[&Checkpoint]) -> Result<Checkpoint> {
    let first = *members.first().ok_or(Error::EmptyPool)?;
    let schema = validate_compatibility(members)?;
    let count = members.len() as f64;
    let tensors = schema
        .entries
        .par_iter()
        .map(|entry| {
            let base_tensor = &first.tensors()[&entry.name];
            let base = base_tensor.to_f64();
            let mut acc = vec![0.0; base.len()];
            for member in &members[1..] {
                let values = member.tensors()[&entry.name].to_f64();
                for ((a, v), b) in acc.iter_mut().zip(&values).zip(&base) {
                    *a += v - b;
                }
            }
            let mean: Vec<f64> = base.iter().zip(&acc).map(|(b, a)| b + a / count).collect();
            Ok((entry.name.clone(), base_tensor.with_values(&mean)?))
        })
        .collect::<Result<Vec<(String, Tensor)>>>()?;
    Ok(tensors
        .into_iter()
        .collect::<Checkpoint>()
        .with_metadata(first.metadata().clone()))
}
