//! Universal enveloping algebra of a Lie superalgebra in its PBW basis:
//! normal ordering by confluent rewriting, the associative star product, and
//! the symmetrization map from the symmetric algebra.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};

use num::{One, Zero};

use crate::exactla::{rat, Rational};
use crate::liealg::LieSuperAlgebraSpec;
use crate::superpoly::SuperPolynomial;

/// Element of U(g) expanded in the PBW basis: words are nondecreasing index
/// sequences, strictly increasing at odd generators.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PBWElement {
    terms: BTreeMap<Vec<usize>, Rational>,
}

impl PBWElement {
    pub fn zero() -> Self {
        PBWElement::default()
    }

    pub fn one() -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(vec![], Rational::one());
        PBWElement { terms }
    }

    pub fn generator(i: usize) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(vec![i], Rational::one());
        PBWElement { terms }
    }

    pub fn word(w: Vec<usize>, c: Rational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(w, c);
        }
        PBWElement { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<usize>, &Rational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, w: &[usize]) -> Rational {
        self.terms.get(w).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        for (w, c) in &other.terms {
            let e = terms.entry(w.clone()).or_insert_with(Rational::zero);
            *e += c;
            if e.is_zero() {
                terms.remove(w);
            }
        }
        PBWElement { terms }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-Rational::one()))
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return PBWElement::zero();
        }
        PBWElement {
            terms: self.terms.iter().map(|(w, v)| (w.clone(), v * c)).collect(),
        }
    }

    /// Maximal word length appearing (filtration degree).
    pub fn max_length(&self) -> usize {
        self.terms.keys().map(|w| w.len()).max().unwrap_or(0)
    }

    /// Render with generator names, e.g. "4*e*f + h*h - 2*h + 1".
    pub fn render(&self, spec: &LieSuperAlgebraSpec) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        // sort by (length, word) descending length for readability
        let mut items: Vec<(&Vec<usize>, &Rational)> = self.terms.iter().collect();
        items.sort_by(|a, b| (b.0.len(), a.0).cmp(&(a.0.len(), b.0)));
        let mut out = String::new();
        for (idx, (w, c)) in items.into_iter().enumerate() {
            let neg = c < &Rational::zero();
            let mag = if neg { -c.clone() } else { c.clone() };
            if idx == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let mut factors = Vec::new();
            if !mag.is_one() || w.is_empty() {
                factors.push(mag.to_string());
            }
            for &i in w.iter() {
                factors.push(spec.basis().name(i).to_string());
            }
            out.push_str(&factors.join("*"));
        }
        out
    }
}

/// Rewriting strategy for normal ordering; both must agree (confluence).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    FirstDescent,
    LastDescent,
}

/// Working environment for U(g): holds the spec and a normal-ordering cache.
pub struct Uea<'a> {
    spec: &'a LieSuperAlgebraSpec,
    cache: RefCell<HashMap<Vec<usize>, PBWElement>>,
}

impl<'a> Uea<'a> {
    pub fn new(spec: &'a LieSuperAlgebraSpec) -> Self {
        Uea {
            spec,
            cache: RefCell::new(HashMap::new()),
        }
    }

    pub fn spec(&self) -> &LieSuperAlgebraSpec {
        self.spec
    }

    fn word_parity(&self, w: &[usize]) -> u8 {
        (w.iter().map(|&i| self.spec.parity(i) as u64).sum::<u64>() % 2) as u8
    }

    /// First position i where (w[i], w[i+1]) violates the PBW order, if any.
    fn violation(&self, w: &[usize], strategy: Strategy) -> Option<usize> {
        let positions: Vec<usize> = (0..w.len().saturating_sub(1))
            .filter(|&i| w[i] > w[i + 1] || (w[i] == w[i + 1] && self.spec.parity(w[i]) == 1))
            .collect();
        match strategy {
            Strategy::FirstDescent => positions.first().copied(),
            Strategy::LastDescent => positions.last().copied(),
        }
    }

    pub fn normal_order(&self, word: &[usize]) -> PBWElement {
        self.normal_order_with(word, Strategy::FirstDescent)
    }

    pub fn normal_order_with(&self, word: &[usize], strategy: Strategy) -> PBWElement {
        if strategy == Strategy::FirstDescent {
            if let Some(hit) = self.cache.borrow().get(word) {
                return hit.clone();
            }
        }
        let result = match self.violation(word, strategy) {
            None => PBWElement::word(word.to_vec(), Rational::one()),
            Some(i) => {
                let (a, b) = (word[i], word[i + 1]);
                let mut acc = PBWElement::zero();
                if a == b {
                    // odd square: g g = 1/2 [g, g]
                    for (k, c) in self.spec.bracket_basis(a, a).into_iter().enumerate() {
                        if c.is_zero() {
                            continue;
                        }
                        let mut w = word[..i].to_vec();
                        w.push(k);
                        w.extend_from_slice(&word[i + 2..]);
                        acc = acc.add(&self.normal_order_with(&w, strategy).scale(&(c * rat(1, 2))));
                    }
                } else {
                    // g_a g_b = (-1)^{|a||b|} g_b g_a + [g_a, g_b]
                    let mut swapped = word.to_vec();
                    swapped.swap(i, i + 1);
                    let sign = if self.spec.parity(a) == 1 && self.spec.parity(b) == 1 {
                        -Rational::one()
                    } else {
                        Rational::one()
                    };
                    acc = acc.add(&self.normal_order_with(&swapped, strategy).scale(&sign));
                    for (k, c) in self.spec.bracket_basis(a, b).into_iter().enumerate() {
                        if c.is_zero() {
                            continue;
                        }
                        let mut w = word[..i].to_vec();
                        w.push(k);
                        w.extend_from_slice(&word[i + 2..]);
                        acc = acc.add(&self.normal_order_with(&w, strategy).scale(&c));
                    }
                }
                acc
            }
        };
        if strategy == Strategy::FirstDescent {
            self.cache
                .borrow_mut()
                .insert(word.to_vec(), result.clone());
        }
        result
    }

    /// Associative product in U(g).
    pub fn star(&self, x: &PBWElement, y: &PBWElement) -> PBWElement {
        let mut acc = PBWElement::zero();
        for (wx, cx) in x.terms() {
            for (wy, cy) in y.terms() {
                let mut w = wx.clone();
                w.extend_from_slice(wy);
                acc = acc.add(&self.normal_order(&w).scale(&(cx * cy)));
            }
        }
        acc
    }

    /// Supercommutator [g_i, u] = g_i u - (-1)^{|i||u|} u g_i, termwise in u.
    pub fn generator_commutator(&self, i: usize, u: &PBWElement) -> PBWElement {
        let gi = PBWElement::generator(i);
        let mut acc = PBWElement::zero();
        for (w, c) in u.terms() {
            let term = PBWElement::word(w.clone(), c.clone());
            let left = self.star(&gi, &term);
            let mut right = self.star(&term, &gi);
            if self.spec.parity(i) == 1 && self.word_parity(w) == 1 {
                right = right.scale(&-Rational::one());
            }
            acc = acc.add(&left.sub(&right));
        }
        acc
    }

    /// Whether u commutes (in the super sense) with every generator.
    pub fn is_central(&self, u: &PBWElement) -> bool {
        (0..self.spec.dim()).all(|i| self.generator_commutator(i, u).is_zero())
    }

    /// Symmetrization S(g) -> U(g): a monomial goes to the average over all
    /// distinct orderings of its letters, with Koszul signs for odd swaps.
    /// The polynomial lives on the primal coordinates of the spec.
    pub fn phi_pbw(&self, p: &SuperPolynomial) -> PBWElement {
        assert_eq!(
            p.system().len(),
            self.spec.dim(),
            "polynomial must live on the algebra's coordinates"
        );
        let mut acc = PBWElement::zero();
        for (mono, coef) in p.terms() {
            let mut letters = Vec::new();
            for (i, &e) in mono.iter().enumerate() {
                for _ in 0..e {
                    letters.push(i);
                }
            }
            if letters.is_empty() {
                acc = acc.add(&PBWElement::word(vec![], coef.clone()));
                continue;
            }
            let k = letters.len();
            // multiplicity of each distinct word = prod a_i!; total k!
            let mut norm = Rational::one();
            for &e in mono.iter() {
                for t in 2..=e {
                    norm *= rat(i64::from(t), 1);
                }
            }
            for t in 2..=(k as i64) {
                norm /= rat(t, 1);
            }
            for (word, sign) in multiset_permutations_with_signs(self.spec, &letters) {
                let c = coef * &norm * rat(i64::from(sign), 1);
                acc = acc.add(&self.normal_order(&word).scale(&c));
            }
        }
        acc
    }

    /// Equivariance of the symmetrization map: for every generator x,
    /// phi(x . f) = [x, phi(f)] where x acts on S(g) as the adjoint
    /// derivation. Returns the first failing generator index.
    pub fn equivariance_check(&self, f: &SuperPolynomial) -> Option<usize> {
        for i in 0..self.spec.dim() {
            let field = self.spec.coadjoint_field_on_symmetric(i);
            let lhs = self.phi_pbw(&field.apply(f).expect("same system"));
            let rhs = self.generator_commutator(i, &self.phi_pbw(f));
            if lhs != rhs {
                return Some(i);
            }
        }
        None
    }
}

/// All distinct orderings of a multiset of generator indices, paired with the
/// Koszul sign relative to the sorted order: (-1) per inversion of two odd
/// letters.
fn multiset_permutations_with_signs(
    spec: &LieSuperAlgebraSpec,
    sorted_letters: &[usize],
) -> Vec<(Vec<usize>, i32)> {
    let mut counts: BTreeMap<usize, u32> = BTreeMap::new();
    for &l in sorted_letters {
        *counts.entry(l).or_insert(0) += 1;
    }
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(sorted_letters.len());
    fn rec(
        spec: &LieSuperAlgebraSpec,
        counts: &mut BTreeMap<usize, u32>,
        cur: &mut Vec<usize>,
        sign: i32,
        total_left: usize,
        out: &mut Vec<(Vec<usize>, i32)>,
    ) {
        if total_left == 0 {
            out.push((cur.clone(), sign));
            return;
        }
        let available: Vec<usize> = counts
            .iter()
            .filter(|(_, &c)| c > 0)
            .map(|(&l, _)| l)
            .collect();
        for l in available {
            // picking l now moves it past every remaining letter smaller
            // than l; each odd-odd crossing flips the sign
            let mut s = sign;
            if spec.parity(l) == 1 {
                let crossings: u32 = counts
                    .iter()
                    .filter(|(&m, _)| m < l && spec.parity(m) == 1)
                    .map(|(_, &c)| c)
                    .sum();
                if crossings % 2 == 1 {
                    s = -s;
                }
            }
            *counts.get_mut(&l).unwrap() -= 1;
            cur.push(l);
            rec(spec, counts, cur, s, total_left - 1, out);
            cur.pop();
            *counts.get_mut(&l).unwrap() += 1;
        }
    }
    let n = sorted_letters.len();
    rec(spec, &mut counts, &mut cur, 1, n, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactla::rat_int;
    use crate::liealg::catalog::*;
    use crate::superpoly::SuperPolynomial;

    fn casimir_poly(spec: &LieSuperAlgebraSpec) -> SuperPolynomial {
        let sys = spec.primal_coordinates();
        SuperPolynomial::var(&sys, 0)
            .multiply(&SuperPolynomial::var(&sys, 1))
            .unwrap()
            .scale(&rat_int(4))
            .add(&SuperPolynomial::var(&sys, 2).pow(2).unwrap())
            .unwrap()
    }

    #[test]
    fn sorted_words_are_fixed() {
        let spec = sl2();
        let u = Uea::new(&spec);
        let w = vec![0, 1, 2];
        assert_eq!(u.normal_order(&w), PBWElement::word(w, rat_int(1)));
    }

    #[test]
    fn sl2_basic_reordering() {
        let spec = sl2();
        let u = Uea::new(&spec);
        // f e = e f - h
        let r = u.normal_order(&[1, 0]);
        assert_eq!(r.coefficient(&[0, 1]), rat_int(1));
        assert_eq!(r.coefficient(&[2]), rat_int(-1));
        assert_eq!(r.num_terms(), 2);
        // h e = e h + 2 e
        let r = u.normal_order(&[2, 0]);
        assert_eq!(r.coefficient(&[0, 2]), rat_int(1));
        assert_eq!(r.coefficient(&[0]), rat_int(2));
    }

    #[test]
    fn odd_square_rewrites() {
        let spec = super11();
        let u = Uea::new(&spec);
        // q q = 1/2 [q,q] = 1/2 x
        let r = u.normal_order(&[0, 0]);
        assert_eq!(r.coefficient(&[1]), rat(1, 2));
        assert_eq!(r.num_terms(), 1);
    }

    #[test]
    fn confluence_on_random_words() {
        let mut rng = crate::superpoly::sampling::Rng::new(0x5eed_0001);
        for spec in [sl2(), solvable2(), heisenberg(), super11(), gl2()] {
            let u = Uea::new(&spec);
            for _ in 0..80 {
                let len = 2 + (rng.below(1_000_000) as usize) % 5;
                let word: Vec<usize> = (0..len)
                    .map(|_| (rng.below(1_000_000) as usize) % spec.dim())
                    .collect();
                let a = u.normal_order_with(&word, Strategy::FirstDescent);
                let b = u.normal_order_with(&word, Strategy::LastDescent);
                assert_eq!(a, b, "rewriting not confluent on {word:?}");
            }
        }
    }

    #[test]
    fn star_is_associative() {
        let mut rng = crate::superpoly::sampling::Rng::new(0x5eed_0002);
        for spec in [sl2(), super11(), solvable2()] {
            let u = Uea::new(&spec);
            for _ in 0..30 {
                let mut rand_elem = || {
                    let mut e = PBWElement::zero();
                    for _ in 0..2 {
                        let len = (rng.below(1_000_000) as usize) % 3;
                        let w: Vec<usize> = (0..len)
                            .map(|_| (rng.below(1_000_000) as usize) % spec.dim())
                            .collect();
                        let c = rat_int((rng.below(7)) as i64 - 3);
                        e = e.add(&u.normal_order(&w).scale(&c));
                    }
                    e
                };
                let (x, y, z) = (rand_elem(), rand_elem(), rand_elem());
                assert_eq!(u.star(&u.star(&x, &y), &z), u.star(&x, &u.star(&y, &z)));
            }
        }
    }

    #[test]
    fn symmetrization_of_ef() {
        let spec = sl2();
        let u = Uea::new(&spec);
        let sys = spec.primal_coordinates();
        let ef = SuperPolynomial::var(&sys, 0)
            .multiply(&SuperPolynomial::var(&sys, 1))
            .unwrap();
        let r = u.phi_pbw(&ef);
        // e f - 1/2 h
        assert_eq!(r.coefficient(&[0, 1]), rat_int(1));
        assert_eq!(r.coefficient(&[2]), rat(-1, 2));
        assert_eq!(r.num_terms(), 2);
    }

    #[test]
    fn symmetrization_of_casimir() {
        let spec = sl2();
        let u = Uea::new(&spec);
        let r = u.phi_pbw(&casimir_poly(&spec));
        // 4 e f + h h - 2 h
        assert_eq!(r.coefficient(&[0, 1]), rat_int(4));
        assert_eq!(r.coefficient(&[2, 2]), rat_int(1));
        assert_eq!(r.coefficient(&[2]), rat_int(-2));
        assert_eq!(r.num_terms(), 3);
        assert!(u.is_central(&r));
    }

    #[test]
    fn centrality_witnesses() {
        let spec = sl2();
        let u = Uea::new(&spec);
        assert!(!u.is_central(&PBWElement::generator(0)));
        assert!(u.is_central(&PBWElement::one()));
        let g = gl2();
        let ug = Uea::new(&g);
        assert!(ug.is_central(&PBWElement::generator(3)));
    }

    #[test]
    fn symmetrization_is_equivariant() {
        let mut rng = crate::superpoly::sampling::Rng::new(0x5eed_0003);
        for spec in [sl2(), solvable2(), heisenberg(), super11()] {
            let u = Uea::new(&spec);
            let sys = spec.primal_coordinates();
            for _ in 0..12 {
                let f = crate::superpoly::sampling::random_poly(&sys, 3, 3, &mut rng);
                assert_eq!(u.equivariance_check(&f), None, "failed for {spec:?}");
            }
        }
    }

    #[test]
    fn super_symmetrization_sign() {
        // phi(q x) where q odd, x even: words qx and xq, no odd-odd
        // inversions, so phi(qx) = 1/2 (q*x + x*q) = q*x (x central)
        let spec = super11();
        let u = Uea::new(&spec);
        let sys = spec.primal_coordinates();
        let qx = SuperPolynomial::var(&sys, 0)
            .multiply(&SuperPolynomial::var(&sys, 1))
            .unwrap();
        let r = u.phi_pbw(&qx);
        assert_eq!(r.coefficient(&[0, 1]), rat_int(1));
        assert_eq!(r.num_terms(), 1);
    }

    #[test]
    fn rendering() {
        let spec = sl2();
        let u = Uea::new(&spec);
        let r = u.phi_pbw(&casimir_poly(&spec));
        assert_eq!(r.render(&spec), "4*e*f + h*h - 2*h");
        assert_eq!(PBWElement::zero().render(&spec), "0");
        assert_eq!(PBWElement::one().render(&spec), "1");
    }
}
