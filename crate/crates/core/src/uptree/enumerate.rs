use std::collections::BTreeMap;

use crate::decomposition::{mirror_skel, NodeId, SkelRotation, SkelTag};
use crate::digraph::DiGraph;
use crate::embedding::Embedding;

use super::{Freedom, UpTree};

enum Dial {
    Flip(NodeId, bool),
    /// Current permutation of the base child order.
    Perm(NodeId, Vec<usize>),
}

/// Iterator over every embedding represented by an [`UpTree`], odometer style.
pub struct Embeddings<'a> {
    up: &'a UpTree,
    g: &'a DiGraph,
    dials: Vec<Dial>,
    done: bool,
}

impl<'a> Embeddings<'a> {
    pub(super) fn new(up: &'a UpTree, g: &'a DiGraph) -> Self {
        let dials = up
            .freedom
            .iter()
            .filter_map(|(&n, &f)| match f {
                Freedom::Fixed => None,
                Freedom::Reversible => Some(Dial::Flip(n, false)),
                Freedom::Permutable => Some(Dial::Perm(n, (0..up.permuted_slots(n).len()).collect())),
            })
            .collect();
        Embeddings {
            up,
            g,
            dials,
            done: false,
        }
    }

    fn current(&self) -> BTreeMap<NodeId, SkelRotation> {
        let mut out = BTreeMap::new();
        for dial in &self.dials {
            match dial {
                Dial::Flip(n, true) => {
                    out.insert(*n, mirror_skel(self.up.stored_rotation(*n)));
                }
                Dial::Flip(_, false) => {}
                Dial::Perm(n, perm) => {
                    let base = self.up.permuted_slots(*n);
                    let order: Vec<SkelTag> = perm.iter().map(|&i| base[i]).collect();
                    out.insert(*n, self.up.bundle_order_rotation(*n, &order));
                }
            }
        }
        out
    }

    fn advance(&mut self) {
        for dial in self.dials.iter_mut() {
            let carried = match dial {
                Dial::Flip(_, b) => {
                    *b = !*b;
                    !*b
                }
                Dial::Perm(_, perm) => !next_permutation(perm),
            };
            if !carried {
                return;
            }
        }
        self.done = true;
    }
}

impl Iterator for Embeddings<'_> {
    type Item = Embedding;

    fn next(&mut self) -> Option<Embedding> {
        if self.done {
            return None;
        }
        let emb = self
            .up
            .compose_with(self.g, &self.current())
            .expect("every configuration composes");
        self.advance();
        Some(emb)
    }
}

/// Lexicographic successor; on the last permutation resets to sorted and returns false.
fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        p.reverse();
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::next_permutation;

    #[test]
    fn permutations_cycle_through_all() {
        let mut p = vec![0, 1, 2];
        let mut count = 1;
        while next_permutation(&mut p) {
            count += 1;
        }
        assert_eq!(count, 6);
        assert_eq!(p, vec![0, 1, 2]);
    }
}
