//! Odd generators and the two rewriting rules every super-sign is derived from.
//!
//! * anticommutation: `ξ^i ξ^j = -ξ^j ξ^i`, `∂ξi ∂ξj = -∂ξj ∂ξi` (squares vanish);
//! * odd Leibniz: `∂ξi ∘ ξ^j = δ_ij - ξ^j ∘ ∂ξi`.
//!
//! Words in these letters are normal ordered (all `ξ` left of all `∂ξ`,
//! each block ascending) by [`normal_order`]; products of monomials are
//! memoized on top of it.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use once_cell::sync::Lazy;

/// A strictly ascending product `ξ^{a1} ξ^{a2} ... ` stored as a bit set of 0-based indices.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct XiMonomial(u32);

impl XiMonomial {
    pub const ONE: XiMonomial = XiMonomial(0);
    pub const MAX_INDEX: usize = 31;

    pub fn from_bits(bits: u32) -> Self {
        XiMonomial(bits)
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn single(i: usize) -> Self {
        assert!(i < Self::MAX_INDEX, "odd generator index {i} too large");
        XiMonomial(1 << i)
    }

    /// From a strictly ascending index list.
    pub fn from_sorted(indices: &[usize]) -> Option<Self> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return None;
        }
        Some(XiMonomial(indices.iter().fold(0, |acc, &i| acc | (1 << i))))
    }

    /// Sort an arbitrary index sequence: the sign of the sorting permutation
    /// and the monomial, or `None` when an index repeats.
    pub fn from_unsorted(indices: &[usize]) -> Option<(i64, Self)> {
        let mut v = indices.to_vec();
        let mut swaps = 0usize;
        for i in (0..v.len()).rev() {
            for j in 0..i {
                match v[j].cmp(&v[j + 1]) {
                    Ordering::Greater => {
                        v.swap(j, j + 1);
                        swaps += 1;
                    }
                    Ordering::Equal => return None,
                    Ordering::Less => {}
                }
            }
        }
        if v.windows(2).any(|w| w[0] == w[1]) {
            return None;
        }
        let sign = if swaps.is_multiple_of(2) { 1 } else { -1 };
        Some((sign, XiMonomial::from_sorted(&v).expect("sorted")))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn parity(self) -> usize {
        self.len() % 2
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 & (1 << i) != 0
    }

    pub fn is_subset(self, other: XiMonomial) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn max_index(self) -> Option<usize> {
        if self.0 == 0 {
            None
        } else {
            Some(31 - self.0.leading_zeros() as usize)
        }
    }

    pub fn indices(self) -> Vec<usize> {
        (0..32).filter(|&i| self.contains(i)).collect()
    }

    /// `ξ^self ξ^other = sign ξ^{self ∪ other}`, or `None` if they share an index.
    pub fn mul(self, other: XiMonomial) -> Option<(i64, XiMonomial)> {
        if self.0 & other.0 != 0 {
            return None;
        }
        // Each generator of `other` moves left past the generators of `self` with larger index.
        let mut swaps = 0u32;
        let mut rest = other.0;
        while rest != 0 {
            let j = rest.trailing_zeros();
            swaps += (self.0 >> j).count_ones();
            rest &= rest - 1;
        }
        let sign = if swaps.is_multiple_of(2) { 1 } else { -1 };
        Some((sign, XiMonomial(self.0 | other.0)))
    }

    /// All monomials of length `k` in `n` generators, in canonical order.
    pub fn all_of_degree(n: usize, k: usize) -> Vec<XiMonomial> {
        let mut out: Vec<XiMonomial> = (0u32..(1 << n))
            .filter(|b| b.count_ones() as usize == k)
            .map(XiMonomial)
            .collect();
        out.sort();
        out
    }
}

impl Ord for XiMonomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.indices().cmp(&other.indices()))
    }
}

impl PartialOrd for XiMonomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for XiMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// 1-based index list, e.g. `[1,3]`.
impl fmt::Display for XiMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let idx: Vec<String> = self.indices().iter().map(|i| (i + 1).to_string()).collect();
        write!(f, "[{}]", idx.join(","))
    }
}

/// A letter of an odd word: multiplication by `ξ^i` or the odd derivative `∂ξi`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OddLetter {
    Xi(usize),
    D(usize),
}

/// Rewrite a word in `ξ`'s and `∂ξ`'s into a signed sum of normal-ordered
/// `ξ^A ∂ξ^B` (both ascending), using only the two rules of this module.
pub fn normal_order(word: &[OddLetter]) -> Vec<(i64, XiMonomial, XiMonomial)> {
    let mut acc: HashMap<(u32, u32), i64> = HashMap::new();
    let mut work: Vec<(i64, Vec<OddLetter>)> = vec![(1, word.to_vec())];
    while let Some((c, w)) = work.pop() {
        let misplaced = w
            .windows(2)
            .position(|p| matches!(p, [OddLetter::D(_), OddLetter::Xi(_)]));
        if let Some(pos) = misplaced {
            let (a, b) = match (w[pos], w[pos + 1]) {
                (OddLetter::D(a), OddLetter::Xi(b)) => (a, b),
                _ => unreachable!(),
            };
            let mut swapped = w.clone();
            swapped.swap(pos, pos + 1);
            work.push((-c, swapped));
            if a == b {
                let mut contracted = w;
                contracted.drain(pos..pos + 2);
                work.push((c, contracted));
            }
            continue;
        }
        let xs: Vec<usize> = w
            .iter()
            .filter_map(|l| match l {
                OddLetter::Xi(i) => Some(*i),
                _ => None,
            })
            .collect();
        let ds: Vec<usize> = w
            .iter()
            .filter_map(|l| match l {
                OddLetter::D(i) => Some(*i),
                _ => None,
            })
            .collect();
        let (Some((sx, a)), Some((sd, b))) = (
            XiMonomial::from_unsorted(&xs),
            XiMonomial::from_unsorted(&ds),
        ) else {
            continue;
        };
        *acc.entry((a.0, b.0)).or_insert(0) += c * sx * sd;
    }
    let mut out: Vec<(i64, XiMonomial, XiMonomial)> = acc
        .into_iter()
        .filter(|&(_, c)| c != 0)
        .map(|((a, b), c)| (c, XiMonomial(a), XiMonomial(b)))
        .collect();
    out.sort_by_key(|x| (x.1, x.2));
    out
}

type OddTable = Arc<Vec<(i64, XiMonomial, XiMonomial)>>;

static ODD_PRODUCTS: Lazy<Mutex<HashMap<(u32, u32), OddTable>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

/// Normal order of `∂ξ^B ∘ ξ^C` (memoized).
pub fn derivative_times_xi(b: XiMonomial, c: XiMonomial) -> OddTable {
    if let Some(t) = ODD_PRODUCTS.lock().unwrap().get(&(b.0, c.0)) {
        return t.clone();
    }
    let word: Vec<OddLetter> = b
        .indices()
        .into_iter()
        .map(OddLetter::D)
        .chain(c.indices().into_iter().map(OddLetter::Xi))
        .collect();
    let table = Arc::new(normal_order(&word));
    ODD_PRODUCTS
        .lock()
        .unwrap()
        .insert((b.0, c.0), table.clone());
    table
}

/// `∂ξ^B (ξ^E)`: the signed contraction, or `None` when it vanishes.
pub fn contract(b: XiMonomial, e: XiMonomial) -> Option<(i64, XiMonomial)> {
    if !b.is_subset(e) {
        return None;
    }
    derivative_times_xi(b, e)
        .iter()
        .find(|(_, _, rest)| rest.is_empty())
        .map(|&(s, a, _)| (s, a))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(idx: &[usize]) -> XiMonomial {
        XiMonomial::from_sorted(idx).unwrap()
    }

    #[test]
    fn sorting_sign() {
        assert_eq!(XiMonomial::from_unsorted(&[1, 0]), Some((-1, m(&[0, 1]))));
        assert_eq!(
            XiMonomial::from_unsorted(&[2, 0, 1]),
            Some((1, m(&[0, 1, 2])))
        );
        assert_eq!(XiMonomial::from_unsorted(&[0, 2, 0]), None);
        assert!(XiMonomial::from_sorted(&[1, 0]).is_none());
    }

    #[test]
    fn product_matches_sorting() {
        for a in 0u32..32 {
            for b in 0u32..32 {
                let (ma, mb) = (XiMonomial(a), XiMonomial(b));
                let mut seq = ma.indices();
                seq.extend(mb.indices());
                assert_eq!(ma.mul(mb), XiMonomial::from_unsorted(&seq), "{ma} * {mb}");
            }
        }
    }

    #[test]
    fn odd_leibniz() {
        // ∂ξ1 ξ1 = 1 - ξ1 ∂ξ1
        let t = derivative_times_xi(m(&[0]), m(&[0]));
        assert_eq!(
            *t,
            vec![
                (1, XiMonomial::ONE, XiMonomial::ONE),
                (-1, m(&[0]), m(&[0]))
            ]
        );
        // ∂ξ1 ξ2 = -ξ2 ∂ξ1
        let t = derivative_times_xi(m(&[0]), m(&[1]));
        assert_eq!(*t, vec![(-1, m(&[1]), m(&[0]))]);
    }

    #[test]
    fn contraction_sign_is_position_parity() {
        // ∂ξi on ξ^A with i at 1-based position pos gives (-1)^(pos-1) ξ^{A \ i}.
        for bits in 0u32..32 {
            let a = XiMonomial(bits);
            for i in 0..5 {
                let got = contract(XiMonomial::single(i), a);
                if let Some(pos) = a.indices().iter().position(|&j| j == i) {
                    let sign = if pos % 2 == 0 { 1 } else { -1 };
                    assert_eq!(got, Some((sign, XiMonomial(bits & !(1 << i)))));
                } else {
                    assert_eq!(got, None);
                }
            }
        }
    }

    #[test]
    fn odd_derivatives_anticommute() {
        let w = [OddLetter::D(1), OddLetter::D(0)];
        assert_eq!(normal_order(&w), vec![(-1, XiMonomial::ONE, m(&[0, 1]))]);
        assert!(normal_order(&[OddLetter::D(2), OddLetter::D(2)]).is_empty());
    }
}
