use std::collections::BTreeMap;
use std::process::Command;

use serde::{Deserialize, Serialize};

use super::pool::CandidatePool;
use super::task_vector::{layer_cosine, task_vector, TaskVector};
use crate::checkpoint::{write_archive, Checkpoint};
use crate::error::{Error, Result};

/// Canonical key of a set of candidate ids: sorted and comma-joined.
pub fn set_key(ids: &[String]) -> String {
    let mut sorted: Vec<&str> = ids.iter().map(String::as_str).collect();
    sorted.sort_unstable();
    sorted.join(",")
}

/// Something that scores a tentative soup.
pub trait SoupScorer {
    fn score(&mut self, ids: &[String], soup: &Checkpoint) -> Result<f64>;
}

impl<F> SoupScorer for F
where
    F: FnMut(&[String], &Checkpoint) -> Result<f64>,
{
    fn score(&mut self, ids: &[String], soup: &Checkpoint) -> Result<f64> {
        self(ids, soup)
    }
}

/// Source of validation scores for greedy soup.
#[derive(Debug, Clone)]
pub enum Evaluator {
    /// Scores looked up by [`set_key`].
    ScoresFile(BTreeMap<String, f64>),
    /// A shell command; `{path}` is replaced by the path of the tentative soup
    /// and the command must print a single number.
    ExternalCommand(String),
}

impl SoupScorer for Evaluator {
    fn score(&mut self, ids: &[String], soup: &Checkpoint) -> Result<f64> {
        let key = set_key(ids);
        let fail = |detail: String| Error::EvaluatorFailure {
            ids: key.clone(),
            detail,
        };
        match self {
            Evaluator::ScoresFile(scores) => match scores.get(&key) {
                Some(s) if s.is_finite() => Ok(*s),
                Some(s) => Err(fail(format!("score {s} is not finite"))),
                None => Err(fail("no score for this set".into())),
            },
            Evaluator::ExternalCommand(template) => {
                let dir = tempfile::tempdir().map_err(|e| fail(e.to_string()))?;
                let path = dir.path().join("soup.safetensors");
                write_archive(soup, &path)?;
                let quoted = format!("'{}'", path.display().to_string().replace('\'', r"'\''"));
                let command = template.replace("{path}", &quoted);
                log::info!("evaluating [{key}]: {command}");
                let output = Command::new("sh")
                    .arg("-c")
                    .arg(&command)
                    .output()
                    .map_err(|e| fail(format!("cannot run {command:?}: {e}")))?;
                if !output.status.success() {
                    return Err(fail(format!(
                        "{command:?} exited with {}: {}",
                        output.status,
                        String::from_utf8_lossy(&output.stderr).trim()
                    )));
                }
                let stdout = String::from_utf8_lossy(&output.stdout);
                match stdout.trim().parse::<f64>() {
                    Ok(s) if s.is_finite() => Ok(s),
                    _ => Err(fail(format!(
                        "expected one number, got {:?}",
                        stdout.trim()
                    ))),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionStep {
    pub id: String,
    /// Evaluator score (greedy) or mean similarity to the members (SFGS);
    /// absent for the SFGS seed.
    pub score: Option<f64>,
    pub accepted: bool,
}

#[derive(Debug, Clone)]
pub struct Selection {
    pub soup: Checkpoint,
    /// Ids in inclusion order.
    pub selected: Vec<String>,
    pub steps: Vec<SelectionStep>,
}

/// Visits candidates by descending ranking and keeps each one whose addition
/// scores at least as well as the best soup so far.
pub fn greedy_soup(pool: &CandidatePool, evaluator: &mut impl SoupScorer) -> Result<Selection> {
    let order = pool.ranked_ids()?;
    let (seed, rest) = order.split_first().ok_or(Error::EmptyPool)?;
    let mut selected = vec![seed.clone()];
    let mut soup = pool.soup_of(&selected)?;
    let mut best = evaluator.score(&selected, &soup)?;
    let mut steps = vec![SelectionStep {
        id: seed.clone(),
        score: Some(best),
        accepted: true,
    }];
    for id in rest {
        let mut trial = selected.clone();
        trial.push(id.clone());
        let tentative = pool.soup_of(&trial)?;
        let score = evaluator.score(&trial, &tentative)?;
        let accepted = score >= best;
        log::info!(
            "greedy: {id} scores {score} (best {best}): {}",
            if accepted { "kept" } else { "dropped" }
        );
        if accepted {
            best = score;
            selected = trial;
            soup = tentative;
        }
        steps.push(SelectionStep {
            id: id.clone(),
            score: Some(score),
            accepted,
        });
    }
    Ok(Selection {
        soup,
        selected,
        steps,
    })
}

/// Similarity-filtered greedy soup.
///
/// Starting from the top-ranked candidate, each next candidate joins iff the
/// mean over current members of its mean per-layer task-vector cosine is at
/// least `delta`. Returns the uniform soup of the members.
pub fn sfgs(pool: &CandidatePool, delta: f64) -> Result<Selection> {
    if !(-1.0..=1.0).contains(&delta) {
        return Err(Error::OutOfRange {
            what: "SFGS threshold delta",
            value: delta,
        });
    }
    let order = pool.ranked_ids()?;
    let (seed, rest) = order.split_first().ok_or(Error::EmptyPool)?;
    let vector = |id: &str| -> Result<TaskVector> {
        let ft = pool
            .get(id)
            .ok_or_else(|| Error::InvalidPool(format!("unknown candidate {id:?}")))?;
        task_vector(pool.pre()?, ft)
    };
    let mut members = vec![(seed.clone(), vector(seed)?)];
    let mut steps = vec![SelectionStep {
        id: seed.clone(),
        score: None,
        accepted: true,
    }];
    for id in rest {
        let tau = vector(id)?;
        let mut total = 0.0;
        for (_, member) in &members {
            total += layer_cosine(&tau, member)?.mean;
        }
        let similarity = total / members.len() as f64;
        let accepted = similarity >= delta;
        log::info!(
            "sfgs: {id} mean cosine {similarity:.6}: {}",
            if accepted { "kept" } else { "dropped" }
        );
        steps.push(SelectionStep {
            id: id.clone(),
            score: Some(similarity),
            accepted,
        });
        if accepted {
            members.push((id.clone(), tau));
        }
    }
    let selected: Vec<String> = members.into_iter().map(|(id, _)| id).collect();
    Ok(Selection {
        soup: pool.soup_of(&selected)?,
        selected,
        steps,
    })
}
