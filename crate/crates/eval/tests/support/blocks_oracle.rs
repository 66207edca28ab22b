//! Brute-force Blocksworld model used as a test oracle. States are sets of
//! towers (bottom first) plus the held block; nothing here touches the
//! executor under test.

use std::collections::{BTreeSet, HashMap, VecDeque};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct World {
    pub towers: Vec<Vec<char>>,
    pub holding: Option<char>,
}

impl World {
    fn canon(mut self) -> World {
        self.towers.retain(|t| !t.is_empty());
        self.towers.sort();
        self
    }

    /// `on`, `ontable` and `holding` atoms.
    pub fn atoms(&self) -> Vec<String> {
        let mut out = Vec::new();
        for t in &self.towers {
            out.push(format!("ontable({})", t[0]));
            for w in t.windows(2) {
                out.push(format!("on({},{})", w[1], w[0]));
            }
        }
        if let Some(h) = self.holding {
            out.push(format!("holding({h})"));
        }
        out
    }

    /// Every legal action with its successor.
    pub fn successors(&self) -> Vec<(String, World)> {
        let mut out = Vec::new();
        match self.holding {
            None => {
                for (i, t) in self.towers.iter().enumerate() {
                    let top = *t.last().unwrap();
                    let mut next = self.clone();
                    next.towers[i].pop();
                    next.holding = Some(top);
                    let text = if t.len() == 1 {
                        format!("pick up the {top} block")
                    } else {
                        format!("unstack the {top} block from on top of the {} block", t[t.len() - 2])
                    };
                    out.push((text, next.canon()));
                }
            }
            Some(h) => {
                let mut down = self.clone();
                down.holding = None;
                down.towers.push(vec![h]);
                out.push((format!("put down the {h} block"), down.canon()));
                for (i, t) in self.towers.iter().enumerate() {
                    let mut next = self.clone();
                    next.holding = None;
                    next.towers[i].push(h);
                    out.push((
                        format!("stack the {h} block on top of the {} block", t.last().unwrap()),
                        next.canon(),
                    ));
                }
            }
        }
        out
    }
}

/// Every ground action text over `blocks`, legal or not.
pub fn all_actions(blocks: &[char]) -> Vec<String> {
    let mut out = Vec::new();
    for &x in blocks {
        out.push(format!("pick up the {x} block"));
        out.push(format!("put down the {x} block"));
        for &y in blocks.iter().filter(|&&y| y != x) {
            out.push(format!("stack the {x} block on top of the {y} block"));
            out.push(format!("unstack the {x} block from on top of the {y} block"));
        }
    }
    out
}

fn arrangements(blocks: &[char]) -> Vec<Vec<Vec<char>>> {
    // set partitions into ordered towers
    let Some((&first, rest)) = blocks.split_first() else {
        return vec![Vec::new()];
    };
    let mut out = Vec::new();
    for smaller in arrangements(rest) {
        let mut alone = smaller.clone();
        alone.push(vec![first]);
        out.push(alone);
        for i in 0..smaller.len() {
            for pos in 0..=smaller[i].len() {
                let mut v = smaller.clone();
                v[i].insert(pos, first);
                out.push(v);
            }
        }
    }
    out
}

/// Every state over the first `n` letters.
pub fn all_worlds(n: usize) -> Vec<World> {
    let blocks: Vec<char> = ('a'..='z').take(n).collect();
    let mut out: BTreeSet<World> = BTreeSet::new();
    for towers in arrangements(&blocks) {
        out.insert(World { towers, holding: None }.canon());
    }
    for (i, &h) in blocks.iter().enumerate() {
        let mut rest = blocks.clone();
        rest.remove(i);
        for towers in arrangements(&rest) {
            out.insert(
                World {
                    towers,
                    holding: Some(h),
                }
                .canon(),
            );
        }
    }
    out.into_iter().collect()
}

/// Shortest action sequence to every reachable state.
pub fn bfs(start: &World) -> HashMap<World, Vec<String>> {
    let mut seen = HashMap::from([(start.clone(), Vec::new())]);
    let mut queue = VecDeque::from([start.clone()]);
    while let Some(w) = queue.pop_front() {
        let path = seen[&w].clone();
        for (action, next) in w.successors() {
            if !seen.contains_key(&next) {
                let mut p = path.clone();
                p.push(action);
                seen.insert(next.clone(), p);
                queue.push_back(next);
            }
        }
    }
    seen
}
