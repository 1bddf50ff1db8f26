//! Agglomerative clustering with a distance cut.
//!
//! Both variants return a partition of `0..n` as groups of sorted indices,
//! groups ordered by their smallest member.

use std::collections::BTreeMap;

/// Disjoint sets over `0..n` with path halving and union by size.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false when `a` and `b` were already together.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }

    pub fn groups(&mut self) -> Vec<Vec<usize>> {
        let mut by_root: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..self.parent.len() {
            let r = self.find(i);
            by_root.entry(r).or_default().push(i);
        }
        canonical(by_root.into_values().collect())
    }
}

/// Sorts members inside each group and groups by first member.
pub fn canonical(mut groups: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    for g in &mut groups {
        g.sort_unstable();
    }
    groups.retain(|g| !g.is_empty());
    groups.sort_unstable_by_key(|g| g[0]);
    groups
}

/// Single-linkage clustering cut at `threshold` over a sparse distance
/// list. Pairs not listed are at distance 1.0. Two items end up together
/// iff a chain of pairs at distance `<= threshold` connects them, which is
/// exactly the flat cut of the single-linkage dendrogram.
pub fn single_linkage(n: usize, edges: &[(usize, usize, f64)], threshold: f64) -> Vec<Vec<usize>> {
    let mut uf = UnionFind::new(n);
    if threshold >= 1.0 {
        // every absent pair is already close enough
        for i in 1..n {
            uf.union(0, i);
        }
        return uf.groups();
    }
    for &(a, b, d) in edges {
        if d <= threshold {
            uf.union(a, b);
        }
    }
    uf.groups()
}

/// Complete-linkage clustering: repeatedly merges the two clusters with
/// the smallest maximum pairwise distance while it is `<= threshold`.
/// Pairs for which `cannot_link` holds are never placed in one cluster.
/// Ties go to the pair of clusters with the smallest first members.
pub fn complete_linkage<D, C>(n: usize, distance: D, threshold: f64, cannot_link: C) -> Vec<Vec<usize>>
where
    D: Fn(usize, usize) -> f64,
    C: Fn(usize, usize) -> bool,
{
    let mut dist = vec![vec![0.0f64; n]; n];
    let mut blocked = vec![vec![false; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = distance(i, j);
            dist[i][j] = d;
            dist[j][i] = d;
            let c = cannot_link(i, j);
            blocked[i][j] = c;
            blocked[j][i] = c;
        }
    }
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let mut worst = 0.0f64;
                let mut forbidden = false;
                'pairs: for &i in &clusters[a] {
                    for &j in &clusters[b] {
                        if blocked[i][j] {
                            forbidden = true;
                            break 'pairs;
                        }
                        worst = worst.max(dist[i][j]);
                    }
                }
                if forbidden || worst > threshold {
                    continue;
                }
                if best.is_none_or(|(d, _, _)| worst < d) {
                    best = Some((worst, a, b));
                }
            }
        }
        let Some((_, a, b)) = best else { break };
        let merged = clusters.remove(b);
        clusters[a].extend(merged);
    }
    canonical(clusters)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_links_through_single_linkage() {
        let edges = [(0, 1, 0.2), (1, 2, 0.2), (3, 4, 0.6)];
        assert_eq!(single_linkage(5, &edges, 0.3), vec![vec![0, 1, 2], vec![3], vec![4]]);
        assert_eq!(single_linkage(3, &[], 0.99), vec![vec![0], vec![1], vec![2]]);
        assert_eq!(single_linkage(3, &[], 1.0), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn complete_linkage_refuses_long_chains() {
        let d = |i: usize, j: usize| (i as f64 - j as f64).abs() * 0.1;
        let groups = complete_linkage(4, d, 0.15, |_, _| false);
        assert_eq!(groups, vec![vec![0, 1], vec![2, 3]]);
    }

    #[test]
    fn cannot_link_keeps_pairs_apart() {
        let groups = complete_linkage(3, |_, _| 0.0, 0.5, |i, j| (i, j) == (0, 2));
        assert_eq!(groups, vec![vec![0, 1], vec![2]]);
    }
}
