//! Two-stage level-wise node selection over a divisive tree.

use rand::Rng;

use super::tree::DivisiveTree;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selection {
    /// Selected node ids in selection order; unique.
    pub ids: Vec<usize>,
    /// How many ids short of the requested budget the tree ran out.
    pub shortfall: usize,
}

/// Stage 1 sweeps levels `s_start` down to 0, taking one uniformly drawn
/// unused node from each nonempty level, then widens the sweep by one level
/// per round until the budget is met or the sweep passes the tree's max
/// depth. Stage 2 fills what is left uniformly from all unused nodes.
pub fn select_levelwise<R: Rng + ?Sized>(
    tree: &DivisiveTree,
    budget: usize,
    s_start: usize,
    rng: &mut R,
) -> Result<Selection> {
    if budget == 0 {
        return Err(Error::invalid("IPC budget must be at least 1"));
    }
    if s_start > tree.max_depth {
        return Err(Error::invalid(format!("start level {s_start} exceeds max depth {}", tree.max_depth)));
    }
    let mut levels = tree.levels();
    let mut ids = Vec::with_capacity(budget.min(tree.len()));
    let mut start = s_start;

    'rounds: while ids.len() < budget {
        for d in (0..=start).rev() {
            if ids.len() >= budget {
                break 'rounds;
            }
            let Some(level) = levels.get_mut(d) else {
                continue;
            };
            if level.is_empty() {
                continue;
            }
            let pick = rng.random_range(0..level.len());
            ids.push(level.remove(pick));
        }
        start += 1;
        if start > tree.max_depth {
            break;
        }
    }

    if ids.len() < budget {
        let mut rest: Vec<usize> = levels.into_iter().flatten().collect();
        rest.sort_unstable();
        let take = (budget - ids.len()).min(rest.len());
        for pos in rand::seq::index::sample(rng, rest.len(), take) {
            ids.push(rest[pos]);
        }
    }

    Ok(Selection { shortfall: budget - ids.len(), ids })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coreset::tree::build_divisive_tree;
    use crate::rng::rng_from_seed;
    use ndarray::array;

    fn perfect_tree() -> DivisiveTree {
        let z = array![
            [0.0, 0.0],
            [1.0, 0.0],
            [10.0, 0.0],
            [11.0, 0.0],
            [0.0, 50.0],
            [1.0, 50.0],
            [10.0, 50.0],
            [11.0, 50.0]
        ];
        build_divisive_tree(z.view(), 2).unwrap()
    }

    #[test]
    fn budget_one_from_level_zero_is_root() {
        let t = perfect_tree();
        let s = select_levelwise(&t, 1, 0, &mut rng_from_seed(0)).unwrap();
        assert_eq!(s.ids, vec![0]);
    }

    #[test]
    fn shortfall_reported() {
        let t = perfect_tree();
        let s = select_levelwise(&t, 20, 1, &mut rng_from_seed(3)).unwrap();
        assert_eq!(s.ids.len(), t.len());
        assert_eq!(s.shortfall, 20 - t.len());
    }

    #[test]
    fn invalid_arguments() {
        let t = perfect_tree();
        assert!(select_levelwise(&t, 0, 0, &mut rng_from_seed(0)).is_err());
        assert!(select_levelwise(&t, 1, 3, &mut rng_from_seed(0)).is_err());
    }
}
