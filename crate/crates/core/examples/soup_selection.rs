//! Choosing which candidates enter a soup.
//!
//! Greedy soup keeps a candidate when the validation score does not drop;
//! the similarity-filtered variant keeps it when its task vector points the
//! same way as the current members. Here "validation" is the negative
//! distance to a hidden target model.
//!
//! ```text
//! cargo run --example soup_selection
//! ```

mod common;

use std::collections::BTreeMap;

use monosoup::merge::{greedy_soup, set_key, sfgs, CandidatePool, Evaluator};
use monosoup::Checkpoint;

fn main() -> monosoup::Result<()> {
    let layout = common::layout(2, 8);
    let pre = common::random_model(1, &layout);
    let target = common::fine_tune(&pre, 100, 0, 0.0);

    // Four candidates share the target's drift, two drift elsewhere.
    let mut candidates = Vec::new();
    for (i, direction) in [100, 100, 200, 100, 300, 100].into_iter().enumerate() {
        candidates.push((format!("m{i}"), common::fine_tune(&pre, direction, i as u64 + 1, 0.002)));
    }
    let score = |ckpt: &Checkpoint| -> f64 {
        -ckpt
            .iter()
            .map(|(name, t)| {
                let u = target.get(name).unwrap().to_f64();
                t.to_f64().iter().zip(&u).map(|(x, y)| (x - y) * (x - y)).sum::<f64>()
            })
            .sum::<f64>()
            .sqrt()
    };
    let ranking: BTreeMap<String, f64> = candidates.iter().map(|(id, c)| (id.clone(), score(c))).collect();
    let pool = CandidatePool::new(pre, candidates)?.with_ranking(ranking)?;
    println!("visiting order: {:?}", pool.ranked_ids()?);

    // Any closure over (ids, soup) is a scorer.
    let mut evaluate = |_: &[String], soup: &Checkpoint| -> monosoup::Result<f64> { Ok(score(soup)) };
    let greedy = greedy_soup(&pool, &mut evaluate)?;
    for step in &greedy.steps {
        println!("greedy  {}  score {:+.5}  {}", step.id, step.score.unwrap(), if step.accepted { "kept" } else { "dropped" });
    }

    // The same selection from a precomputed scores table keyed by id set.
    let mut table = BTreeMap::new();
    let mut selected: Vec<String> = Vec::new();
    for id in pool.ranked_ids()? {
        let mut trial = selected.clone();
        trial.push(id.clone());
        table.insert(set_key(&trial), score(&pool.soup_of(&trial)?));
        if greedy.selected.contains(&id) {
            selected = trial;
        }
    }
    let replay = greedy_soup(&pool, &mut Evaluator::ScoresFile(table))?;
    assert_eq!(replay.selected, greedy.selected);

    for delta in [0.0, 0.5, 0.9] {
        let s = sfgs(&pool, delta)?;
        println!("sfgs delta {delta}: {:?}", s.selected);
    }
    Ok(())
}
