use super::module::Region;

/// Block dominator sets for one region, computed from terminator successors.
#[derive(Debug, Clone)]
pub struct Dominators {
    /// `dom[b][a]` is true when block `a` dominates block `b`.
    dom: Vec<Vec<bool>>,
    reachable: Vec<bool>,
}

impl Dominators {
    pub fn compute(region: &Region) -> Self {
        let n = region.blocks.len();
        let succs: Vec<Vec<usize>> = region
            .blocks
            .iter()
            .map(|b| {
                b.terminator()
                    .map(|t| t.successors.iter().filter_map(|l| region.block_index(l)).collect())
                    .unwrap_or_default()
            })
            .collect();
        let mut preds = vec![Vec::new(); n];
        for (b, ss) in succs.iter().enumerate() {
            for &s in ss {
                preds[s].push(b);
            }
        }

        let mut reachable = vec![false; n];
        let mut stack = if n > 0 { vec![0] } else { vec![] };
        while let Some(b) = stack.pop() {
            if std::mem::replace(&mut reachable[b], true) {
                continue;
            }
            stack.extend(succs[b].iter().copied());
        }

        let mut dom = vec![vec![true; n]; n];
        if n > 0 {
            dom[0] = vec![false; n];
            dom[0][0] = true;
        }
        let mut changed = true;
        while changed {
            changed = false;
            for b in 1..n {
                if !reachable[b] {
                    continue;
                }
                let mut new: Vec<bool> = vec![true; n];
                let mut any = false;
                for &p in preds[b].iter().filter(|&&p| reachable[p]) {
                    any = true;
                    for (x, d) in new.iter_mut().enumerate() {
                        *d &= dom[p][x];
                    }
                }
                if !any {
                    new = vec![false; n];
                }
                new[b] = true;
                if new != dom[b] {
                    dom[b] = new;
                    changed = true;
                }
            }
        }
        for b in 0..n {
            if !reachable[b] {
                dom[b] = vec![false; n];
                dom[b][b] = true;
            }
        }
        Dominators { dom, reachable }
    }

    pub fn dominates(&self, a: usize, b: usize) -> bool {
        self.dom[b][a]
    }

    pub fn is_reachable(&self, b: usize) -> bool {
        self.reachable[b]
    }

    /// Blocks strictly dominating `b`.
    pub fn dominators_of(&self, b: usize) -> impl Iterator<Item = usize> + '_ {
        self.dom[b].iter().enumerate().filter(move |&(a, &d)| d && a != b).map(|(a, _)| a)
    }
}
