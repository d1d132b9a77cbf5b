//! Canonical index enumeration.
//!
//! Symmetric objects are stored over sorted index tuples in colex order. For a
//! nondecreasing tuple `i_0 <= ... <= i_{m-1}` the rank is `sum_r C(i_r + r, r + 1)`;
//! for a strictly increasing tuple it is `sum_r C(i_r, r + 1)`. Unordered pairs
//! `(i <= j)` therefore sit at `i + j (j + 1) / 2`.

/// Binomial coefficient, zero when `k > n`.
pub fn binom(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for t in 0..k {
        acc = acc * (n - t) as u128 / (t + 1) as u128;
    }
    acc as usize
}

/// Number of nondecreasing tuples of length `order` over `[dim]`.
pub fn multiset_count(dim: usize, order: usize) -> usize {
    if order == 0 {
        return 1;
    }
    binom(dim + order - 1, order)
}

/// Number of unordered pairs over `[n]`, `n(n+1)/2`.
pub fn n2(n: usize) -> usize {
    n * (n + 1) / 2
}

pub fn pair_index(i: usize, j: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    a + b * (b + 1) / 2
}

pub fn pair_from_index(p: usize) -> (usize, usize) {
    // largest j with j(j+1)/2 <= p
    let mut j = (((8 * p + 1) as f64).sqrt() as usize).saturating_sub(1) / 2;
    while (j + 1) * (j + 2) / 2 <= p {
        j += 1;
    }
    while j * (j + 1) / 2 > p {
        j -= 1;
    }
    (p - j * (j + 1) / 2, j)
}

/// Rank of a nondecreasing tuple.
pub fn multiset_rank(sorted: &[usize]) -> usize {
    sorted
        .iter()
        .enumerate()
        .map(|(r, &i)| binom(i + r, r + 1))
        .sum()
}

/// Rank of a strictly increasing tuple.
pub fn strict_rank(sorted: &[usize]) -> usize {
    sorted.iter().enumerate().map(|(r, &i)| binom(i, r + 1)).sum()
}

/// Sorts a small index tuple into a fixed buffer.
pub fn sorted_tuple<const N: usize>(idx: [usize; N]) -> [usize; N] {
    let mut t = idx;
    t.sort_unstable();
    t
}

/// Colex enumeration of nondecreasing tuples.
#[derive(Debug, Clone)]
pub struct Multisets {
    dim: usize,
    cur: Vec<usize>,
    done: bool,
}

pub fn multisets(dim: usize, order: usize) -> Multisets {
    Multisets { dim, cur: vec![0; order], done: dim == 0 && order > 0 }
}

impl Iterator for Multisets {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.cur.clone();
        let m = self.cur.len();
        let mut r = 0;
        loop {
            if r == m {
                self.done = true;
                break;
            }
            let cap = if r + 1 < m { self.cur[r + 1] } else { self.dim - 1 };
            if self.cur[r] < cap {
                self.cur[r] += 1;
                for q in 0..r {
                    self.cur[q] = 0;
                }
                break;
            }
            r += 1;
        }
        Some(out)
    }
}

/// Colex enumeration of strictly increasing tuples.
#[derive(Debug, Clone)]
pub struct StrictTuples {
    dim: usize,
    cur: Vec<usize>,
    done: bool,
}

pub fn strict_tuples(dim: usize, order: usize) -> StrictTuples {
    StrictTuples { dim, cur: (0..order).collect(), done: order > dim }
}

impl Iterator for StrictTuples {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.cur.clone();
        let m = self.cur.len();
        let mut r = 0;
        loop {
            if r == m {
                self.done = true;
                break;
            }
            let cap = if r + 1 < m { self.cur[r + 1] } else { self.dim };
            if self.cur[r] + 1 < cap {
                self.cur[r] += 1;
                for q in 0..r {
                    self.cur[q] = q;
                }
                break;
            }
            r += 1;
        }
        Some(out)
    }
}

/// All perfect matchings of `{0, .., 2m-1}` as lists of position pairs.
pub fn perfect_matchings(len: usize) -> Vec<Vec<(usize, usize)>> {
    fn rec(rest: &[usize], acc: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
        if rest.is_empty() {
            out.push(acc.clone());
            return;
        }
        let a = rest[0];
        for t in 1..rest.len() {
            let b = rest[t];
            let remaining: Vec<usize> = rest[1..]
                .iter()
                .copied()
                .filter(|&x| x != b)
                .collect();
            acc.push((a, b));
            rec(&remaining, acc, out);
            acc.pop();
        }
    }
    let mut out = Vec::new();
    if len % 2 == 1 {
        return out;
    }
    let positions: Vec<usize> = (0..len).collect();
    rec(&positions, &mut Vec::new(), &mut out);
    out
}

/// Number of distinct orderings of a sorted tuple (multinomial of its multiplicities).
pub fn multiplicity(sorted: &[usize]) -> usize {
    let mut fact = 1usize;
    for t in 2..=sorted.len() {
        fact *= t;
    }
    let mut run = 1usize;
    let mut denom = 1usize;
    for w in 1..=sorted.len() {
        if w < sorted.len() && sorted[w] == sorted[w - 1] {
            run += 1;
        } else {
            for t in 2..=run {
                denom *= t;
            }
            run = 1;
        }
    }
    fact / denom
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks_follow_enumeration_order() {
        for (dim, order) in [(5, 2), (4, 3), (6, 4), (3, 6)] {
            for (pos, t) in multisets(dim, order).enumerate() {
                assert_eq!(multiset_rank(&t), pos);
            }
            assert_eq!(multisets(dim, order).count(), multiset_count(dim, order));
        }
        for (dim, order) in [(6, 4), (8, 6), (6, 6), (5, 1)] {
            for (pos, t) in strict_tuples(dim, order).enumerate() {
                assert_eq!(strict_rank(&t), pos);
            }
            assert_eq!(strict_tuples(dim, order).count(), binom(dim, order));
        }
    }

    #[test]
    fn pair_round_trip() {
        for p in 0..n2(30) {
            let (i, j) = pair_from_index(p);
            assert!(i <= j);
            assert_eq!(pair_index(i, j), p);
            assert_eq!(pair_index(j, i), p);
        }
        assert_eq!(multiset_rank(&[2, 5]), pair_index(2, 5));
    }

    #[test]
    fn binomial_counts() {
        assert_eq!(binom(16, 4), 1820);
        assert_eq!(binom(16, 6), 8008);
        assert_eq!(binom(6, 6), 1);
        assert_eq!(binom(3, 5), 0);
    }

    #[test]
    fn matching_counts() {
        assert_eq!(perfect_matchings(2).len(), 1);
        assert_eq!(perfect_matchings(4).len(), 3);
        assert_eq!(perfect_matchings(6).len(), 15);
        assert!(perfect_matchings(3).is_empty());
    }

    #[test]
    fn multiplicities() {
        assert_eq!(multiplicity(&[0, 0, 0]), 1);
        assert_eq!(multiplicity(&[0, 0, 2]), 3);
        assert_eq!(multiplicity(&[0, 1, 2]), 6);
        assert_eq!(multiplicity(&[1, 1]), 1);
        assert_eq!(multiplicity(&[1, 3]), 2);
    }
}
