//! Hochschild cochain complexes of finite-dimensional graded DG algebras:
//! bar-plus-internal differential, cup product, Gerstenhaber bracket,
//! Maurer-Cartan twisting and arity-capped cohomology.

use std::collections::BTreeMap;
use std::sync::Arc;

use num::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exactla::{dim_cap, rat, Rational, SparseMatrix};
use crate::superpoly::{CoordinateSystem, Monomial, SuperPolynomial, VectorField};

/// Sparse element of the algebra: sorted (basis index, coefficient) pairs.
pub type AlgElem = Vec<(usize, Rational)>;

fn elem_add(a: &mut BTreeMap<usize, Rational>, i: usize, c: Rational) {
    if c.is_zero() {
        return;
    }
    let e = a.entry(i).or_insert_with(Rational::zero);
    *e += c;
    if e.is_zero() {
        a.remove(&i);
    }
}

/// Finite-dimensional graded (super)commutative DG algebra, realized as the
/// functions on a coordinate system truncated at a total polynomial degree.
#[derive(Debug, PartialEq, Eq)]
pub struct FiniteDGAlgebra {
    sys: Arc<CoordinateSystem>,
    cap: u32,
    monos: Vec<Monomial>,
    index: BTreeMap<Monomial, usize>,
    degrees: Vec<i64>,
    unit: usize,
    /// product[i][j] expanded in the basis (with the degree-cap quotient).
    product: Vec<Vec<AlgElem>>,
    /// differential of each basis element.
    q: Vec<AlgElem>,
}

impl FiniteDGAlgebra {
    /// Functions on `sys` modulo the ideal of total polynomial degree > cap,
    /// with differential induced by the odd vector field `q_field` (which
    /// must preserve the ideal; any polynomial field does).
    pub fn from_functions(
        sys: &Arc<CoordinateSystem>,
        q_field: Option<&VectorField>,
        cap: u32,
    ) -> Result<Arc<Self>> {
        let mut monos = Vec::new();
        for d in 0..=cap {
            monos.extend(crate::liealg::monomials_of_poly_degree(sys, d));
        }
        if monos.len() > dim_cap() {
            return Err(Error::DimensionCap {
                size: monos.len(),
                cap: dim_cap(),
            });
        }
        let index: BTreeMap<Monomial, usize> = monos
            .iter()
            .cloned()
            .enumerate()
            .map(|(a, m)| (m, a))
            .collect();
        let degrees: Vec<i64> = monos
            .iter()
            .map(|m| {
                m.iter()
                    .enumerate()
                    .map(|(i, &e)| i64::from(e) * sys.degree(i))
                    .sum()
            })
            .collect();
        let unit = index[&vec![0u32; sys.len()]];
        let expand = |p: &SuperPolynomial| -> AlgElem {
            p.terms()
                .filter_map(|(m, c)| index.get(m).map(|&i| (i, c.clone())))
                .collect()
        };
        let mut product = Vec::with_capacity(monos.len());
        for mi in &monos {
            let pi = SuperPolynomial::monomial(sys, mi.clone(), Rational::one());
            let mut row = Vec::with_capacity(monos.len());
            for mj in &monos {
                let pj = SuperPolynomial::monomial(sys, mj.clone(), Rational::one());
                row.push(expand(&pi.multiply(&pj)?));
            }
            product.push(row);
        }
        let mut q = Vec::with_capacity(monos.len());
        for mi in &monos {
            let pi = SuperPolynomial::monomial(sys, mi.clone(), Rational::one());
            match q_field {
                Some(f) => q.push(expand(&f.apply(&pi)?)),
                None => q.push(Vec::new()),
            }
        }
        Ok(Arc::new(FiniteDGAlgebra {
            sys: Arc::clone(sys),
            cap,
            monos,
            index,
            degrees,
            unit,
            product,
            q,
        }))
    }

    pub fn system(&self) -> &Arc<CoordinateSystem> {
        &self.sys
    }

    pub fn cap(&self) -> u32 {
        self.cap
    }

    pub fn dim(&self) -> usize {
        self.monos.len()
    }

    pub fn unit(&self) -> usize {
        self.unit
    }

    pub fn degree(&self, i: usize) -> i64 {
        self.degrees[i]
    }

    pub fn parity(&self, i: usize) -> u8 {
        (self.degrees[i].rem_euclid(2)) as u8
    }

    pub fn monomial(&self, i: usize) -> &Monomial {
        &self.monos[i]
    }

    pub fn index_of(&self, m: &Monomial) -> Option<usize> {
        self.index.get(m).copied()
    }

    pub fn name(&self, i: usize) -> String {
        SuperPolynomial::monomial(&self.sys, self.monos[i].clone(), Rational::one()).to_string()
    }

    pub fn mul_basis(&self, i: usize, j: usize) -> &AlgElem {
        &self.product[i][j]
    }

    pub fn q_basis(&self, i: usize) -> &AlgElem {
        &self.q[i]
    }

    pub fn has_differential(&self) -> bool {
        self.q.iter().any(|v| !v.is_empty())
    }

    pub fn mul_elem(&self, a: &AlgElem, b: &AlgElem) -> AlgElem {
        let mut acc = BTreeMap::new();
        for (i, ci) in a {
            for (j, cj) in b {
                for (k, ck) in &self.product[*i][*j] {
                    elem_add(&mut acc, *k, ci * cj * ck);
                }
            }
        }
        acc.into_iter().collect()
    }

    /// Structural sanity: associativity, unit laws, graded commutativity,
    /// q^2 = 0 and the graded Leibniz rule.
    pub fn validate(&self) -> Vec<String> {
        let n = self.dim();
        let mut failures = Vec::new();
        for i in 0..n {
            if self.product[self.unit][i] != vec![(i, Rational::one())]
                || self.product[i][self.unit] != vec![(i, Rational::one())]
            {
                failures.push(format!("unit law fails on {}", self.name(i)));
            }
        }
        for i in 0..n {
            for j in 0..n {
                // graded commutativity: ab = (-1)^{|a||b|} ba
                let mut ba = self.product[j][i].clone();
                if self.parity(i) == 1 && self.parity(j) == 1 {
                    for (_, c) in ba.iter_mut() {
                        *c = -std::mem::take(c);
                    }
                }
                if self.product[i][j] != ba {
                    failures.push(format!(
                        "commutativity fails on ({}, {})",
                        self.name(i),
                        self.name(j)
                    ));
                }
                for k in 0..n {
                    let ab_c = self.mul_elem(&self.product[i][j], &vec![(k, Rational::one())]);
                    let a_bc = self.mul_elem(&vec![(i, Rational::one())], &self.product[j][k]);
                    if ab_c != a_bc {
                        failures.push(format!(
                            "associativity fails on ({}, {}, {})",
                            self.name(i),
                            self.name(j),
                            self.name(k)
                        ));
                    }
                }
            }
        }
        for i in 0..n {
            let mut qq = BTreeMap::new();
            for (j, c) in &self.q[i] {
                for (k, ck) in &self.q[*j] {
                    elem_add(&mut qq, *k, c * ck);
                }
            }
            if !qq.is_empty() {
                failures.push(format!("q^2 != 0 on {}", self.name(i)));
            }
            // Leibniz: q(ab) = q(a) b + (-1)^{|a|} a q(b)
            for j in 0..n {
                let mut lhs = BTreeMap::new();
                for (k, c) in &self.product[i][j] {
                    for (l, cl) in &self.q[*k] {
                        elem_add(&mut lhs, *l, c * cl);
                    }
                }
                let mut rhs = BTreeMap::new();
                for (k, c) in &self.q[i] {
                    for (l, cl) in &self.product[*k][j] {
                        elem_add(&mut rhs, *l, c * cl);
                    }
                }
                let sgn = if self.parity(i) == 1 {
                    -Rational::one()
                } else {
                    Rational::one()
                };
                for (k, c) in &self.q[j] {
                    for (l, cl) in &self.product[i][*k] {
                        elem_add(&mut rhs, *l, c * cl * &sgn);
                    }
                }
                if lhs != rhs {
                    failures.push(format!(
                        "Leibniz fails on ({}, {})",
                        self.name(i),
                        self.name(j)
                    ));
                }
            }
        }
        failures
    }
}

/// Multilinear cochain A^{x k} -> A stored on basis tuples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HochschildCochain {
    alg: Arc<FiniteDGAlgebra>,
    arity: usize,
    /// ((input tuple, output basis index), coefficient)
    terms: BTreeMap<(Vec<usize>, usize), Rational>,
}

impl HochschildCochain {
    pub fn zero(alg: &Arc<FiniteDGAlgebra>, arity: usize) -> Self {
        HochschildCochain {
            alg: Arc::clone(alg),
            arity,
            terms: BTreeMap::new(),
        }
    }

    /// The 0-cochain with the given value.
    pub fn scalar(alg: &Arc<FiniteDGAlgebra>, value: &AlgElem) -> Self {
        let mut c = HochschildCochain::zero(alg, 0);
        for (i, v) in value {
            c.add_term(vec![], *i, v.clone());
        }
        c
    }

    /// The identity 1-cochain.
    pub fn identity(alg: &Arc<FiniteDGAlgebra>) -> Self {
        let mut c = HochschildCochain::zero(alg, 1);
        for i in 0..alg.dim() {
            c.add_term(vec![i], i, Rational::one());
        }
        c
    }

    /// The product as a 2-cochain, `(a, b) -> (-1)^{|a|} a b`.
    ///
    /// The suspension sign `(-1)^{|a|}` is what makes this a square-zero
    /// element for the insertion operation (whose Koszul signs weight each
    /// argument by its degree plus one); with it, `[m, m] = 0` encodes
    /// associativity and `[m, -]` is the bar differential. For an algebra
    /// concentrated in degree zero the sign disappears and this is the plain
    /// multiplication table.
    pub fn product_cochain(alg: &Arc<FiniteDGAlgebra>) -> Self {
        let mut c = HochschildCochain::zero(alg, 2);
        for i in 0..alg.dim() {
            let sign = if alg.degree(i).rem_euclid(2) == 1 {
                -Rational::one()
            } else {
                Rational::one()
            };
            for j in 0..alg.dim() {
                for (k, v) in alg.mul_basis(i, j) {
                    c.add_term(vec![i, j], *k, v * &sign);
                }
            }
        }
        c
    }

    /// The internal differential as a 1-cochain.
    pub fn q_cochain(alg: &Arc<FiniteDGAlgebra>) -> Self {
        let mut c = HochschildCochain::zero(alg, 1);
        for i in 0..alg.dim() {
            for (k, v) in alg.q_basis(i) {
                c.add_term(vec![i], *k, v.clone());
            }
        }
        c
    }

    pub fn algebra(&self) -> &Arc<FiniteDGAlgebra> {
        &self.alg
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(Vec<usize>, usize), &Rational)> {
        self.terms.iter()
    }

    pub fn add_term(&mut self, tuple: Vec<usize>, out: usize, c: Rational) {
        assert_eq!(tuple.len(), self.arity);
        if c.is_zero() {
            return;
        }
        let key = (tuple, out);
        let e = self.terms.entry(key.clone()).or_insert_with(Rational::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.arity, other.arity);
        let mut out = self.clone();
        for ((t, o), c) in &other.terms {
            out.add_term(t.clone(), *o, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-Rational::one()))
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return HochschildCochain::zero(&self.alg, self.arity);
        }
        HochschildCochain {
            alg: Arc::clone(&self.alg),
            arity: self.arity,
            terms: self
                .terms
                .iter()
                .map(|(k, v)| (k.clone(), v * c))
                .collect(),
        }
    }

    pub fn evaluate(&self, tuple: &[usize]) -> AlgElem {
        assert_eq!(tuple.len(), self.arity);
        let mut acc = BTreeMap::new();
        for ((t, o), c) in &self.terms {
            if t == tuple {
                elem_add(&mut acc, *o, c.clone());
            }
        }
        acc.into_iter().collect()
    }

    /// Internal degree of one term.
    fn term_internal_degree(&self, tuple: &[usize], out: usize) -> i64 {
        self.alg.degree(out) - tuple.iter().map(|&i| self.alg.degree(i)).sum::<i64>()
    }

    /// Split into internal-degree-homogeneous pieces.
    pub fn internal_components(&self) -> BTreeMap<i64, HochschildCochain> {
        let mut out: BTreeMap<i64, HochschildCochain> = BTreeMap::new();
        for ((t, o), c) in &self.terms {
            let d = self.term_internal_degree(t, *o);
            out.entry(d)
                .or_insert_with(|| HochschildCochain::zero(&self.alg, self.arity))
                .add_term(t.clone(), *o, c.clone());
        }
        out
    }

    /// Internal degree, when homogeneous.
    pub fn internal_degree(&self) -> Option<i64> {
        let mut d = None;
        for ((t, o), _) in &self.terms {
            let td = self.term_internal_degree(t, *o);
            match d {
                None => d = Some(td),
                Some(prev) if prev != td => return None,
                _ => {}
            }
        }
        d
    }

    /// Total degree = arity + internal (when homogeneous).
    pub fn total_degree(&self) -> Option<i64> {
        self.internal_degree().map(|d| d + self.arity as i64)
    }

    /// Insertion composition phi o-bar psi: sum over slots of phi with psi
    /// inserted, with the Koszul sign of moving psi (in its shifted degree)
    /// past the preceding slots and arguments.
    pub fn insertion(&self, psi: &Self) -> Self {
        assert!(Arc::ptr_eq(&self.alg, &psi.alg));
        let p = self.arity;
        let q = psi.arity;
        let out_arity = (p + q).saturating_sub(1);
        if p == 0 {
            return HochschildCochain::zero(&self.alg, out_arity);
        }
        let mut out = HochschildCochain::zero(&self.alg, out_arity);
        for (gpsi, psi_part) in psi.internal_components() {
            let g_psi = gpsi + q as i64 - 1;
            for ((t_phi, o_phi), c_phi) in &self.terms {
                for slot in 0..p {
                    // sign: psi moves past slots 0..slot, each contributing
                    // its shifted argument degree (1 + |a_j|)
                    let mut pre: i64 = 0;
                    for &a in t_phi.iter().take(slot) {
                        pre += 1 + self.alg.degree(a);
                    }
                    let sign = if (g_psi * pre).rem_euclid(2) == 1 {
                        -Rational::one()
                    } else {
                        Rational::one()
                    };
                    for ((t_psi, o_psi), c_psi) in &psi_part.terms {
                        if *o_psi != t_phi[slot] {
                            continue;
                        }
                        let mut tuple = t_phi[..slot].to_vec();
                        tuple.extend_from_slice(t_psi);
                        tuple.extend_from_slice(&t_phi[slot + 1..]);
                        out.add_term(tuple, *o_phi, c_phi * c_psi * &sign);
                    }
                }
            }
        }
        out
    }

    /// Gerstenhaber bracket [phi, psi] = phi o-bar psi
    /// - (-1)^{g(phi) g(psi)} psi o-bar phi.
    pub fn gerstenhaber_bracket(&self, psi: &Self) -> Self {
        let mut out =
            HochschildCochain::zero(&self.alg, (self.arity + psi.arity).saturating_sub(1));
        for (d_phi, phi_part) in self.internal_components() {
            let g_phi = d_phi + self.arity as i64 - 1;
            for (d_psi, psi_part) in psi.internal_components() {
                let g_psi = d_psi + psi.arity as i64 - 1;
                let fwd = phi_part.insertion(&psi_part);
                let mut bwd = psi_part.insertion(&phi_part);
                if (g_phi * g_psi).rem_euclid(2) == 1 {
                    bwd = bwd.scale(&-Rational::one());
                }
                out = out.add(&fwd.sub(&bwd));
            }
        }
        out
    }

    /// The bar differential [m, phi] alone; only meaningful when the algebra
    /// carries no internal differential (use `differential_sum` otherwise,
    /// since the q-commutator lands in a different arity).
    pub fn differential(&self) -> Self {
        assert!(!self.alg.has_differential());
        let m = HochschildCochain::product_cochain(&self.alg);
        m.gerstenhaber_bracket(self)
    }

    /// Cup product: concatenate argument tuples and multiply values,
    /// `(phi cup psi)(a_1..a_{p+q}) = ± phi(a_1..a_p) psi(a_{p+1}..)`.
    ///
    /// The sign exponent is `(p + A) * (q + |psi|)` with `A = |a_1|+...+|a_p|`
    /// the internal degree of phi's arguments and `q + |psi|` the total degree
    /// of psi: the classical Koszul sign `|psi| A`, conjugated by the
    /// suspension signs that tie the differential to the insertion bracket.
    /// The product is associative and unital, and the differential is a
    /// graded derivation of it for the total degree (arity + internal):
    /// `delta(phi cup psi) = delta(phi) cup psi
    ///   + (-1)^{p+|phi|} phi cup delta(psi)`.
    pub fn cup_product(&self, psi: &Self) -> Self {
        assert!(Arc::ptr_eq(&self.alg, &psi.alg));
        let p = self.arity as i64;
        let q = psi.arity as i64;
        let mut out = HochschildCochain::zero(&self.alg, self.arity + psi.arity);
        for (d_psi, psi_part) in psi.internal_components() {
            for ((t_phi, o_phi), c_phi) in &self.terms {
                let pre: i64 = t_phi.iter().map(|&a| self.alg.degree(a)).sum();
                let expo = (p + pre) * (q + d_psi);
                let sign = if expo.rem_euclid(2) == 1 {
                    -Rational::one()
                } else {
                    Rational::one()
                };
                for ((t_psi, o_psi), c_psi) in &psi_part.terms {
                    let mut tuple = t_phi.clone();
                    tuple.extend_from_slice(t_psi);
                    for (k, v) in self.alg.mul_basis(*o_phi, *o_psi) {
                        out.add_term(tuple.clone(), *k, c_phi * c_psi * v * &sign);
                    }
                }
            }
        }
        out
    }

    pub fn render(&self) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut parts = Vec::new();
        for ((t, o), c) in &self.terms {
            let ins: Vec<String> = t.iter().map(|&i| self.alg.name(i)).collect();
            parts.push(format!("({}) -> {}*{}", ins.join(", "), c, self.alg.name(*o)));
        }
        parts.join("; ")
    }
}

/// A formal sum of cochains of different arities (needed because the DG
/// Hochschild differential has both an arity-raising and an arity-preserving
/// part).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CochainSum {
    alg: Arc<FiniteDGAlgebra>,
    pub parts: BTreeMap<usize, HochschildCochain>,
}

impl CochainSum {
    pub fn new(alg: &Arc<FiniteDGAlgebra>) -> Self {
        CochainSum {
            alg: Arc::clone(alg),
            parts: BTreeMap::new(),
        }
    }

    pub fn from_cochain(c: HochschildCochain) -> Self {
        let mut s = CochainSum::new(&c.alg.clone());
        if !c.is_zero() {
            s.parts.insert(c.arity, c);
        }
        s
    }

    pub fn add_cochain(&mut self, c: &HochschildCochain) {
        if c.is_zero() {
            return;
        }
        match self.parts.get_mut(&c.arity) {
            Some(existing) => {
                let sum = existing.add(c);
                if sum.is_zero() {
                    self.parts.remove(&c.arity);
                } else {
                    *existing = sum;
                }
            }
            None => {
                self.parts.insert(c.arity, c.clone());
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn differential(&self) -> CochainSum {
        let mut out = CochainSum::new(&self.alg);
        for c in self.parts.values() {
            let d = c.differential_sum();
            for part in d.parts.values() {
                out.add_cochain(part);
            }
        }
        out
    }
}

impl HochschildCochain {
    /// The full DG Hochschild differential as a formal sum
    /// (arity+1 bar part, same-arity internal part).
    pub fn differential_sum(&self) -> CochainSum {
        let m = HochschildCochain::product_cochain(&self.alg);
        let mut out = CochainSum::new(&self.alg);
        out.add_cochain(&m.gerstenhaber_bracket(self));
        if self.alg.has_differential() {
            let qc = HochschildCochain::q_cochain(&self.alg);
            out.add_cochain(&qc.gerstenhaber_bracket(self));
        }
        out
    }

    /// Maurer-Cartan residue delta(gamma) + 1/2 [gamma, gamma] as a formal
    /// sum; mc_check passes when it vanishes.
    pub fn mc_residue(&self) -> CochainSum {
        let mut out = self.differential_sum();
        let half = rat(1, 2);
        out.add_cochain(&self.gerstenhaber_bracket(self).scale(&half));
        out
    }

    pub fn mc_check(&self) -> bool {
        self.mc_residue().is_zero()
    }

    /// Twisted differential delta + [gamma, -] (for an MC element gamma).
    pub fn twisted_differential(&self, gamma: &Self) -> Result<CochainSum> {
        if !gamma.mc_check() {
            return Err(Error::MCViolation);
        }
        let mut out = self.differential_sum();
        out.add_cochain(&gamma.gerstenhaber_bracket(self));
        Ok(out)
    }
}

/// Basis description of the arity-capped total-degree slice of the
/// (normalized) Hochschild complex: items are (arity, input tuple, output).
#[derive(Debug, Clone)]
pub struct TotalSlice {
    pub total_degree: i64,
    pub arity_cap: usize,
    pub items: Vec<(usize, Vec<usize>, usize)>,
    index: BTreeMap<(usize, Vec<usize>, usize), usize>,
}

/// Enumerate normalized cochain basis elements of the given arity and
/// internal degree: tuples avoid the unit, outputs range over the basis.
fn enumerate_arity_slice(
    alg: &FiniteDGAlgebra,
    arity: usize,
    internal: i64,
    normalized: bool,
) -> Vec<(Vec<usize>, usize)> {
    let inputs: Vec<usize> = (0..alg.dim())
        .filter(|&i| !normalized || i != alg.unit())
        .collect();
    let mut out = Vec::new();
    let mut tuple = Vec::with_capacity(arity);
    fn rec(
        alg: &FiniteDGAlgebra,
        inputs: &[usize],
        arity: usize,
        internal: i64,
        tuple: &mut Vec<usize>,
        acc_deg: i64,
        out: &mut Vec<(Vec<usize>, usize)>,
    ) {
        if tuple.len() == arity {
            for o in 0..alg.dim() {
                if alg.degree(o) - acc_deg == internal {
                    out.push((tuple.clone(), o));
                }
            }
            return;
        }
        for &i in inputs {
            tuple.push(i);
            rec(alg, inputs, arity, internal, tuple, acc_deg + alg.degree(i), out);
            tuple.pop();
        }
    }
    rec(alg, &inputs, arity, internal, &mut tuple, 0, &mut out);
    out
}

pub fn total_slice(
    alg: &Arc<FiniteDGAlgebra>,
    total_degree: i64,
    arity_cap: usize,
    normalized: bool,
) -> Result<TotalSlice> {
    let mut items = Vec::new();
    for arity in 0..=arity_cap {
        let internal = total_degree - arity as i64;
        for (t, o) in enumerate_arity_slice(alg, arity, internal, normalized) {
            items.push((arity, t, o));
        }
        if items.len() > dim_cap() {
            return Err(Error::DimensionCap {
                size: items.len(),
                cap: dim_cap(),
            });
        }
    }
    let index = items
        .iter()
        .cloned()
        .enumerate()
        .map(|(a, it)| (it, a))
        .collect();
    Ok(TotalSlice {
        total_degree,
        arity_cap,
        items,
        index,
    })
}

impl TotalSlice {
    pub fn dim(&self) -> usize {
        self.items.len()
    }

    pub fn index_of(&self, arity: usize, tuple: &[usize], out: usize) -> Option<usize> {
        self.index
            .get(&(arity, tuple.to_vec(), out))
            .copied()
    }

    /// Coordinates of a cochain sum in this slice; entries outside the slice
    /// (higher arity) are dropped — the slice is a quotient complex.
    pub fn coordinates(&self, s: &CochainSum) -> Vec<Rational> {
        let mut v = vec![Rational::zero(); self.items.len()];
        for c in s.parts.values() {
            for ((t, o), coef) in c.terms() {
                if let Some(i) = self.index_of(c.arity(), t, *o) {
                    v[i] += coef;
                }
            }
        }
        v
    }

    pub fn cochain_from_coordinates(
        &self,
        alg: &Arc<FiniteDGAlgebra>,
        v: &[Rational],
    ) -> CochainSum {
        let mut by_arity: BTreeMap<usize, HochschildCochain> = BTreeMap::new();
        for (i, c) in v.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let (arity, t, o) = &self.items[i];
            by_arity
                .entry(*arity)
                .or_insert_with(|| HochschildCochain::zero(alg, *arity))
                .add_term(t.clone(), *o, c.clone());
        }
        let mut s = CochainSum::new(alg);
        for c in by_arity.into_values() {
            s.add_cochain(&c);
        }
        s
    }

    /// Matrix of the (optionally twisted) differential from this slice to
    /// `target` (total degree + 1, same arity cap).
    pub fn differential_matrix(
        &self,
        alg: &Arc<FiniteDGAlgebra>,
        target: &TotalSlice,
        gamma: Option<&HochschildCochain>,
    ) -> Result<SparseMatrix> {
        let mut m = SparseMatrix::zero(target.dim(), self.dim());
        for (col, (arity, t, o)) in self.items.iter().enumerate() {
            let mut c = HochschildCochain::zero(alg, *arity);
            c.add_term(t.clone(), *o, Rational::one());
            let mut d = c.differential_sum();
            if let Some(g) = gamma {
                d.add_cochain(&g.gerstenhaber_bracket(&c));
            }
            for part in d.parts.values() {
                for ((tt, oo), coef) in part.terms() {
                    if let Some(row) = target.index_of(part.arity(), tt, *oo) {
                        m.add_to(row, col, coef.clone());
                    }
                }
            }
        }
        Ok(m)
    }
}

/// Arity-capped Hochschild cohomology dimension at one total degree, with a
/// stabilization comparison against cap-1.
#[derive(Debug, Clone, Serialize)]
pub struct HhReport {
    pub total_degree: i64,
    pub arity_cap: usize,
    pub dimension: usize,
    pub dimension_at_previous_cap: usize,
    pub stabilized: bool,
}

fn hh_dimension_at_cap(
    alg: &Arc<FiniteDGAlgebra>,
    n: i64,
    cap: usize,
    gamma: Option<&HochschildCochain>,
) -> Result<usize> {
    hh_dimension_at_cap_slices(alg, n, cap, gamma, true)
}

/// Cohomology at total degree n of the subcomplex of cochains of arity <= K
/// whose differential again has arity <= K (the largest subcomplex supported
/// in the arity window; the differential can raise arity by one, so the
/// boundary condition is the vanishing of the arity K+1 component).
///
/// Numerator: cocycles of arity <= K for the full differential, tracked into
/// arity K+1 so nothing is projected away. Denominator: images of arity <= K
/// cochains at degree n-1 whose differential stays in the window; its rank is
/// rank(full incoming matrix) - rank(its arity K+1 rows). Both truncation
/// artifacts of a plain quotient complex (spurious top-arity cocycles and
/// missing top-arity boundaries) are avoided.
fn hh_dimension_at_cap_slices(
    alg: &Arc<FiniteDGAlgebra>,
    n: i64,
    cap: usize,
    gamma: Option<&HochschildCochain>,
    normalized: bool,
) -> Result<usize> {
    let here = total_slice(alg, n, cap, normalized)?;
    let above = total_slice(alg, n + 1, cap + 1, normalized)?;
    let d_out = here.differential_matrix(alg, &above, gamma)?;
    let cocycles = here.dim() - d_out.rank();

    let below = total_slice(alg, n - 1, cap, normalized)?;
    let here_ext = total_slice(alg, n, cap + 1, normalized)?;
    let d_in_full = below.differential_matrix(alg, &here_ext, gamma)?;
    // split off the arity K+1 rows
    let mut overflow = SparseMatrix::zero(here_ext.dim(), below.dim());
    for (&(r, c), v) in d_in_full.entries() {
        let (arity, _, _) = &here_ext.items[r];
        if *arity > cap {
            overflow.set(r, c, v.clone());
        }
    }
    let boundaries = d_in_full.rank() - overflow.rank();
    Ok(cocycles - boundaries)
}

pub fn hh_dimensions(
    alg: &Arc<FiniteDGAlgebra>,
    n: i64,
    arity_cap: usize,
) -> Result<HhReport> {
    hh_dimensions_twisted(alg, n, arity_cap, None)
}

pub fn hh_dimensions_twisted(
    alg: &Arc<FiniteDGAlgebra>,
    n: i64,
    arity_cap: usize,
    gamma: Option<&HochschildCochain>,
) -> Result<HhReport> {
    assert!(arity_cap >= 1);
    let dimension = hh_dimension_at_cap(alg, n, arity_cap, gamma)?;
    let dimension_at_previous_cap = hh_dimension_at_cap(alg, n, arity_cap - 1, gamma)?;
    Ok(HhReport {
        total_degree: n,
        arity_cap,
        dimension,
        dimension_at_previous_cap,
        stabilized: dimension == dimension_at_previous_cap,
    })
}
